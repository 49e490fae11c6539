//! Bundled desk-scale models: Euclidean spaces, the unit interval and circle,
//! a singular variety with a flat tangency, an open-disk-plus-axis union that
//! is not locally closed at the origin, and the quadratic cone image of the
//! plane under the sign-flip action. Also the random cube generators used by
//! the verification batteries.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::chains::{CubeBox, SingularCube};

use crate::forms::GeneratorForm;
use crate::smooth::{self, coord, cst, SmoothMap};
use crate::space::{
    make_space, Clause, Constraint, Membership, NearPatch, Sampler, SamplerNode, SpaceModel,
    SpaceRef,
};

pub fn plane() -> SpaceRef {
    SpaceModel::euclidean(2)
}

pub fn line() -> SpaceRef {
    SpaceModel::euclidean(1)
}

/// The unit interval [0, 1] inside R.
pub fn interval_space() -> SpaceRef {
    let x = SmoothMap::scalar(1, coord(0)).unwrap();
    let one_minus = SmoothMap::scalar(1, smooth::sub(cst(1.0), coord(0))).unwrap();
    let sampler = Sampler::from_branches(vec![(
        1.0,
        SamplerNode::Param {
            map: SmoothMap::identity(1),
            ranges: vec![(0.0, 1.0)],
        },
    )]);
    make_space(
        "interval",
        1,
        Membership::new(
            vec![Clause {
                constraints: vec![Constraint::NonNeg(x.clone()), Constraint::NonNeg(one_minus)],
            }],
            1e-8,
        ),
        sampler,
        vec![x],
    )
    .unwrap()
}

/// The unit circle in R².
pub fn circle_space() -> SpaceRef {
    let defining = SmoothMap::scalar(
        2,
        smooth::sub(
            smooth::add(smooth::pow(coord(0), 2), smooth::pow(coord(1), 2)),
            cst(1.0),
        ),
    )
    .unwrap();
    let param = SmoothMap::new(1, vec![smooth::cos(coord(0)), smooth::sin(coord(0))]).unwrap();
    let sampler = Sampler::from_branches(vec![(
        1.0,
        SamplerNode::Param {
            map: param,
            ranges: vec![(0.0, std::f64::consts::TAU)],
        },
    )]);
    make_space(
        "circle",
        2,
        Membership::new(
            vec![Clause {
                constraints: vec![Constraint::Zero(defining)],
            }],
            1e-8,
        ),
        sampler,
        vec![
            SmoothMap::scalar(2, coord(0)).unwrap(),
            SmoothMap::scalar(2, coord(1)).unwrap(),
        ],
    )
    .unwrap()
}

/// Defining equation of the flat-tangency variety: y² - h(x) y with
/// h(x) = e^(-1/x²) extended by zero.
pub fn variety_defining_map() -> SmoothMap {
    SmoothMap::scalar(
        2,
        smooth::sub(
            smooth::pow(coord(1), 2),
            smooth::mul(smooth::bump(coord(0)), coord(1)),
        ),
    )
    .unwrap()
}

/// The variety {y (y - h(x)) = 0}: the x-axis together with the graph of the
/// flat bump, meeting only at the origin, which is an isolated singular point.
/// The sampler stratifies over both branches and pins the origin.
pub fn variety_space() -> SpaceRef {
    let branch = SmoothMap::new(1, vec![coord(0), smooth::bump(coord(0))]).unwrap();
    let axis = SmoothMap::new(1, vec![coord(0), cst(0.0)]).unwrap();
    let mut sampler = Sampler::from_branches(vec![
        (
            1.0,
            SamplerNode::Param {
                map: branch,
                ranges: vec![(0.05, 2.0)],
            },
        ),
        (
            1.0,
            SamplerNode::Param {
                map: axis,
                ranges: vec![(-2.0, 2.0)],
            },
        ),
        (0.1, SamplerNode::Points(vec![vec![0.0, 0.0]])),
    ]);
    // radius-aware patches: branch and axis points near the origin
    sampler.near = vec![
        NearPatch {
            // (u r, h(u r)) for u in (0, 1]
            map: SmoothMap::new(
                2,
                vec![
                    smooth::mul(coord(0), coord(1)),
                    smooth::bump(smooth::mul(coord(0), coord(1))),
                ],
            )
            .unwrap(),
            ranges: vec![(0.05, 1.0)],
        },
        NearPatch {
            map: SmoothMap::new(2, vec![smooth::mul(coord(0), coord(1)), cst(0.0)]).unwrap(),
            ranges: vec![(-1.0, 1.0)],
        },
    ];
    make_space(
        "flat-variety",
        2,
        Membership::new(
            vec![Clause {
                constraints: vec![Constraint::Zero(variety_defining_map())],
            }],
            1e-8,
        ),
        sampler,
        vec![
            SmoothMap::scalar(2, coord(0)).unwrap(),
            SmoothMap::scalar(2, coord(1)).unwrap(),
        ],
    )
    .unwrap()
}

/// Tangent flow field on the variety: (x³, 2y). Along the bump branch
/// 2y = h'(x)·x³, so the field is exactly tangent to both branches, and its
/// derivative of the defining equation is 4·(defining equation).
pub fn variety_flow_field() -> SmoothMap {
    SmoothMap::new(
        2,
        vec![smooth::pow(coord(0), 3), smooth::mul(cst(2.0), coord(1))],
    )
    .unwrap()
}

/// The one-sided derivation on the variety: ∂/∂x plus v(x) ∂/∂y with v the
/// derivative of the one-sided flat bump (zero for x ≤ 0).
pub fn variety_derivation_field() -> SmoothMap {
    SmoothMap::new(
        2,
        vec![
            cst(1.0),
            smooth::mul(
                std::sync::Arc::new(smooth::Expr::BumpPlus(coord(0), 1)),
                cst(1.0),
            ),
        ],
    )
    .unwrap()
}

/// Open disk x₁² + (1 - x₂)² < 1 together with the x₁-axis: a subcartesian
/// model that is not locally closed at the origin. Near-patches supply disk
/// points arbitrarily close to the tangency with chords shrinking linearly in
/// the probe radius.
pub fn disk_axis_space() -> SpaceRef {
    let disk = SmoothMap::scalar(
        2,
        smooth::sub(
            smooth::add(
                smooth::pow(coord(0), 2),
                smooth::pow(smooth::sub(cst(1.0), coord(1)), 2),
            ),
            cst(1.0),
        ),
    )
    .unwrap();
    let axis = SmoothMap::scalar(2, coord(1)).unwrap();
    let disk_param = SmoothMap::new(
        2,
        vec![
            smooth::mul(coord(0), smooth::cos(coord(1))),
            smooth::add(cst(1.0), smooth::mul(coord(0), smooth::sin(coord(1)))),
        ],
    )
    .unwrap();
    let axis_param = SmoothMap::new(1, vec![coord(0), cst(0.0)]).unwrap();
    let mut sampler = Sampler::from_branches(vec![
        (
            1.0,
            SamplerNode::Param {
                map: disk_param,
                ranges: vec![(0.0, 0.995), (0.0, std::f64::consts::TAU)],
            },
        ),
        (
            1.0,
            SamplerNode::Param {
                map: axis_param,
                ranges: vec![(-2.0, 2.0)],
            },
        ),
    ]);
    // inputs of a near patch: (r, u, w). Disk points sit at height
    // x₂ = (u r)²/2, giving a chord of length about 2 u r.
    let x2 = smooth::mul(cst(0.5), smooth::pow(smooth::mul(coord(1), coord(0)), 2));
    let half_chord = smooth::sqrt(smooth::sub(
        smooth::mul(cst(2.0), x2.clone()),
        smooth::pow(x2.clone(), 2),
    ));
    sampler.near = vec![
        NearPatch {
            map: SmoothMap::new(
                3,
                vec![smooth::mul(smooth::mul(cst(0.9), coord(2)), half_chord), x2],
            )
            .unwrap(),
            ranges: vec![(0.02, 1.0), (-1.0, 1.0)],
        },
        NearPatch {
            map: SmoothMap::new(2, vec![smooth::mul(coord(0), coord(1)), cst(0.0)]).unwrap(),
            ranges: vec![(-1.0, 1.0)],
        },
    ];
    make_space(
        "disk-plus-axis",
        2,
        Membership::new(
            vec![
                Clause {
                    constraints: vec![Constraint::Neg(disk)],
                },
                Clause {
                    constraints: vec![Constraint::Zero(axis)],
                },
            ],
            1e-12,
        ),
        sampler,
        vec![
            SmoothMap::scalar(2, coord(0)).unwrap(),
            SmoothMap::scalar(2, coord(1)).unwrap(),
        ],
    )
    .unwrap()
}

/// The invariant-quadric map of the sign-flip action: (x², xy, y²).
pub fn quadratic_invariants() -> SmoothMap {
    SmoothMap::new(
        2,
        vec![
            smooth::pow(coord(0), 2),
            smooth::mul(coord(0), coord(1)),
            smooth::pow(coord(1), 2),
        ],
    )
    .unwrap()
}

/// Image of the plane under the quadratic invariants: the cone
/// {v² = u w, u ≥ 0, w ≥ 0} in R³, sampled by pushing plane samples through
/// the invariant map.
pub fn cone_space() -> SpaceRef {
    let relation = SmoothMap::scalar(
        3,
        smooth::sub(smooth::pow(coord(1), 2), smooth::mul(coord(0), coord(2))),
    )
    .unwrap();
    let u = SmoothMap::scalar(3, coord(0)).unwrap();
    let w = SmoothMap::scalar(3, coord(2)).unwrap();
    let upstairs = Sampler::from_branches(vec![
        (
            1.0,
            SamplerNode::Param {
                map: SmoothMap::identity(2),
                ranges: vec![(-1.5, 1.5), (-1.5, 1.5)],
            },
        ),
        // include axis points so orbit-separation checks see them
        (
            0.3,
            SamplerNode::Param {
                map: SmoothMap::new(1, vec![cst(0.0), coord(0)]).unwrap(),
                ranges: vec![(-1.5, 1.5)],
            },
        ),
        (0.05, SamplerNode::Points(vec![vec![0.0, 0.0]])),
    ]);
    let sampler = Sampler::from_branches(vec![(
        1.0,
        SamplerNode::Mapped {
            inner: std::sync::Arc::new(upstairs),
            map: quadratic_invariants(),
        },
    )]);
    make_space(
        "quadratic-cone",
        3,
        Membership::new(
            vec![Clause {
                constraints: vec![
                    Constraint::Zero(relation),
                    Constraint::NonNeg(u.clone()),
                    Constraint::NonNeg(w.clone()),
                ],
            }],
            1e-8,
        ),
        sampler,
        vec![u, SmoothMap::scalar(3, coord(1)).unwrap(), w],
    )
    .unwrap()
}

/// The circle of radius `r`, parametrized over [0, 2π], as a 1-cube in the
/// plane.
pub fn circle_cube(r: f64, space: &SpaceRef) -> SingularCube {
    SingularCube::new(
        CubeBox::new(vec![(0.0, std::f64::consts::TAU)]).unwrap(),
        SmoothMap::new(
            1,
            vec![
                smooth::mul(cst(r), smooth::cos(coord(0))),
                smooth::mul(cst(r), smooth::sin(coord(0))),
            ],
        )
        .unwrap(),
        space.clone(),
    )
    .unwrap()
}

/// The affine chord between two sampled points, over the unit interval box.
/// Intended for convex models.
pub fn random_segment(space: &SpaceRef, rng: &mut ChaCha8Rng) -> SingularCube {
    let a = space.sampler.sample(rng).unwrap();
    let b = space.sampler.sample(rng).unwrap();
    let outputs = a
        .iter()
        .zip(&b)
        .map(|(&p, &q)| smooth::add(cst(p), smooth::mul(cst(q - p), coord(0))))
        .collect();
    SingularCube::new(
        CubeBox::unit(1),
        SmoothMap::new(1, outputs).unwrap(),
        space.clone(),
    )
    .unwrap()
}

fn random_poly(p: usize, rng: &mut ChaCha8Rng, amplitude: f64) -> smooth::ExprRef {
    let mut acc = cst(amplitude * (2.0 * rng.gen::<f64>() - 1.0));
    for i in 0..p {
        acc = smooth::add(
            acc,
            smooth::mul(cst(amplitude * (2.0 * rng.gen::<f64>() - 1.0)), coord(i)),
        );
        for j in i..p {
            acc = smooth::add(
                acc,
                smooth::mul(
                    cst(amplitude * (2.0 * rng.gen::<f64>() - 1.0)),
                    smooth::mul(coord(i), coord(j)),
                ),
            );
        }
    }
    acc
}

/// A random quadratic p-cube into a whole-space model, with a random box.
pub fn random_cube(space: &SpaceRef, p: usize, rng: &mut ChaCha8Rng) -> SingularCube {
    let outputs = (0..space.ambient_dim)
        .map(|_| random_poly(p, rng, 0.8))
        .collect();
    let bounds = (0..p)
        .map(|_| {
            let a = 1.4 * (2.0 * rng.gen::<f64>() - 1.0);
            let b = a + 0.2 + rng.gen::<f64>();
            (a, b)
        })
        .collect();
    SingularCube::new(
        CubeBox::new(bounds).unwrap(),
        SmoothMap::new(p, outputs).unwrap(),
        space.clone(),
    )
    .unwrap()
}

/// A random p-cube into I x S (S Euclidean): the interval coordinate is an
/// affine function of the first box axis staying inside [0.1, 0.9], the rest
/// are random quadratics.
pub fn random_product_cube(product: &SpaceRef, p: usize, rng: &mut ChaCha8Rng) -> SingularCube {
    let lo = 0.1 + 0.3 * rng.gen::<f64>();
    let hi = lo + 0.1 + 0.4 * rng.gen::<f64>();
    let mut outputs = vec![smooth::add(cst(lo), smooth::mul(cst(hi - lo), coord(0)))];
    for _ in 1..product.ambient_dim {
        outputs.push(random_poly(p, rng, 0.8));
    }
    SingularCube::new(
        CubeBox::unit(p),
        SmoothMap::new(p, outputs).unwrap(),
        product.clone(),
    )
    .unwrap()
}

/// The chord between two upstairs points pushed through the quadratic
/// invariants: a 1-cube on the cone.
pub fn pushed_segment(cone: &SpaceRef, rng: &mut ChaCha8Rng) -> SingularCube {
    let a = [3.0 * rng.gen::<f64>() - 1.5, 3.0 * rng.gen::<f64>() - 1.5];
    let b = [3.0 * rng.gen::<f64>() - 1.5, 3.0 * rng.gen::<f64>() - 1.5];
    let chord = SmoothMap::new(
        1,
        (0..2)
            .map(|i| smooth::add(cst(a[i]), smooth::mul(cst(b[i] - a[i]), coord(0))))
            .collect(),
    )
    .unwrap();
    SingularCube::new(
        CubeBox::unit(1),
        SmoothMap::compose(&quadratic_invariants(), &chord).unwrap(),
        cone.clone(),
    )
    .unwrap()
}

/// A random upstairs 2-cube pushed through the quadratic invariants.
pub fn pushed_square(cone: &SpaceRef, rng: &mut ChaCha8Rng) -> SingularCube {
    let upstairs =
        SmoothMap::new(2, vec![random_poly(2, rng, 0.7), random_poly(2, rng, 0.7)]).unwrap();
    SingularCube::new(
        CubeBox::unit(2),
        SmoothMap::compose(&quadratic_invariants(), &upstairs).unwrap(),
        cone.clone(),
    )
    .unwrap()
}

/// The 1-form x dy - y dx over a Euclidean plane model.
pub fn angular_momentum_form(space: &SpaceRef) -> GeneratorForm {
    GeneratorForm::new(
        1,
        vec![
            (1.0, vec![space.coord_element(0), space.coord_element(1)]),
            (-1.0, vec![space.coord_element(1), space.coord_element(0)]),
        ],
    )
    .unwrap()
}
