//! Consistency checks between nerve cohomology and the calculus of forms on
//! the bundled fixtures: closed forms that the rank computation predicts
//! exact must admit numerical antiderivatives, and the circle's angular form
//! must show a nonzero period against the fundamental cycle exactly when the
//! first cohomology is one-dimensional.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use crate::cech::{build_complex, cohomology_dims, Cover, IntersectionFlag, Region};
use crate::chains::SingularCube;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::forms::{lambda_eval, GeneratorForm};
use crate::homotopy::poincare_antiderivative;
use crate::orbit::{build_contraction, ContractionScaling};
use crate::quad::QuadratureRule;
use crate::smooth::{self, coord, cst, SmoothMap};
use crate::space::{Clause, Constraint, Membership};

fn region(name: &str, clauses: Vec<Clause>) -> Region {
    Region {
        name: name.to_string(),
        membership: Membership::new(clauses, 1e-9),
    }
}

fn open_band(dim: usize, axis: usize, lo: f64, hi: f64) -> Vec<Clause> {
    vec![Clause {
        constraints: vec![
            Constraint::Neg(SmoothMap::scalar(dim, smooth::sub(cst(lo), coord(axis))).unwrap()),
            Constraint::Neg(SmoothMap::scalar(dim, smooth::sub(coord(axis), cst(hi))).unwrap()),
        ],
    }]
}

fn arc_region(mid: f64, half_width: f64) -> Vec<Clause> {
    // points of the circle with angular distance to `mid` below `half_width`
    vec![Clause {
        constraints: vec![Constraint::Neg(
            SmoothMap::scalar(
                2,
                smooth::sub(
                    cst(half_width.cos()),
                    smooth::add(
                        smooth::mul(cst(mid.cos()), coord(0)),
                        smooth::mul(cst(mid.sin()), coord(1)),
                    ),
                ),
            )
            .unwrap(),
        )],
    }]
}

/// Two covers of the unit interval: two and three overlapping bands.
pub fn interval_covers() -> Vec<Cover> {
    let space = fixtures::interval_space();
    let mut flags = BTreeMap::new();
    flags.insert(vec![0, 1], IntersectionFlag::Contractible);
    let two = Cover {
        space: space.clone(),
        regions: vec![
            region("lower", open_band(1, 0, -0.1, 0.6)),
            region("upper", open_band(1, 0, 0.4, 1.1)),
        ],
        flags,
    };
    let mut flags = BTreeMap::new();
    flags.insert(vec![0, 1], IntersectionFlag::Contractible);
    flags.insert(vec![1, 2], IntersectionFlag::Contractible);
    flags.insert(vec![0, 2], IntersectionFlag::Empty);
    flags.insert(vec![0, 1, 2], IntersectionFlag::Empty);
    let three = Cover {
        space,
        regions: vec![
            region("low", open_band(1, 0, -0.1, 0.40)),
            region("mid", open_band(1, 0, 0.30, 0.70)),
            region("high", open_band(1, 0, 0.60, 1.1)),
        ],
        flags,
    };
    vec![two, three]
}

/// Two good covers of the circle: three and four arcs with empty multiple
/// overlaps.
pub fn circle_covers() -> Vec<Cover> {
    use std::f64::consts::TAU;
    let space = fixtures::circle_space();
    let mut flags = BTreeMap::new();
    flags.insert(vec![0, 1], IntersectionFlag::Contractible);
    flags.insert(vec![1, 2], IntersectionFlag::Contractible);
    flags.insert(vec![0, 2], IntersectionFlag::Contractible);
    flags.insert(vec![0, 1, 2], IntersectionFlag::Empty);
    let three = Cover {
        space: space.clone(),
        regions: vec![
            region("arc0", arc_region(0.175 * TAU, 0.28 * TAU)),
            region("arc1", arc_region(0.54 * TAU, 0.26 * TAU)),
            region("arc2", arc_region(0.87 * TAU, 0.25 * TAU)),
        ],
        flags,
    };
    let mut flags = BTreeMap::new();
    for pair in [vec![0usize, 1], vec![1, 2], vec![2, 3], vec![0, 3]] {
        flags.insert(pair, IntersectionFlag::Contractible);
    }
    flags.insert(vec![0, 2], IntersectionFlag::Empty);
    flags.insert(vec![1, 3], IntersectionFlag::Empty);
    for triple in [
        vec![0usize, 1, 2],
        vec![0, 1, 3],
        vec![0, 2, 3],
        vec![1, 2, 3],
    ] {
        flags.insert(triple, IntersectionFlag::Empty);
    }
    flags.insert(vec![0, 1, 2, 3], IntersectionFlag::Empty);
    let four = Cover {
        space,
        regions: (0..4)
            .map(|k| {
                region(
                    &format!("quad{k}"),
                    arc_region((0.25 * k as f64) * TAU, 0.155 * TAU),
                )
            })
            .collect(),
        flags,
    };
    vec![three, four]
}

/// Two covers of the plane by overlapping vertical strips.
pub fn plane_covers() -> Vec<Cover> {
    let space = fixtures::plane();
    let mut flags = BTreeMap::new();
    flags.insert(vec![0, 1], IntersectionFlag::Contractible);
    flags.insert(vec![1, 2], IntersectionFlag::Contractible);
    flags.insert(vec![0, 2], IntersectionFlag::Empty);
    flags.insert(vec![0, 1, 2], IntersectionFlag::Empty);
    let three = Cover {
        space: space.clone(),
        regions: vec![
            region("left", open_band(2, 0, -3.0, -0.4)),
            region("middle", open_band(2, 0, -0.8, 0.8)),
            region("right", open_band(2, 0, 0.4, 3.0)),
        ],
        flags,
    };
    let mut flags = BTreeMap::new();
    flags.insert(vec![0, 1], IntersectionFlag::Contractible);
    flags.insert(vec![1, 2], IntersectionFlag::Contractible);
    flags.insert(vec![2, 3], IntersectionFlag::Contractible);
    for t in [
        vec![0usize, 2],
        vec![0, 3],
        vec![1, 3],
        vec![0, 1, 2],
        vec![0, 1, 3],
        vec![0, 2, 3],
        vec![1, 2, 3],
        vec![0, 1, 2, 3],
    ] {
        flags.insert(t, IntersectionFlag::Empty);
    }
    let four = Cover {
        space,
        regions: vec![
            region("s0", open_band(2, 0, -3.0, -0.8)),
            region("s1", open_band(2, 0, -1.2, 0.25)),
            region("s2", open_band(2, 0, -0.25, 1.2)),
            region("s3", open_band(2, 0, 0.8, 3.0)),
        ],
        flags,
    };
    vec![three, four]
}

/// Covers of the quadratic cone: the single global chart (contractible via
/// the induced even-scaling contraction) and a two-set refinement.
pub fn cone_covers() -> Vec<Cover> {
    let space = fixtures::cone_space();
    let single = Cover {
        space: space.clone(),
        regions: vec![region("all", vec![Clause::default()])],
        flags: BTreeMap::new(),
    };
    let cap = vec![Clause {
        constraints: vec![Constraint::Neg(
            SmoothMap::scalar(3, smooth::sub(smooth::add(coord(0), coord(2)), cst(2.5))).unwrap(),
        )],
    }];
    let mut flags = BTreeMap::new();
    flags.insert(vec![0, 1], IntersectionFlag::Contractible);
    let two = Cover {
        space,
        regions: vec![region("cap", cap), region("all", vec![Clause::default()])],
        flags,
    };
    vec![single, two]
}

/// One verified battery form in a spot-check report.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BatteryRow {
    pub form: String,
    /// Antiderivative defect for forms predicted exact; circle period for the
    /// angular form.
    pub value: f64,
    pub kind: BatteryKind,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub enum BatteryKind {
    AntiderivativeDefect,
    CyclePeriod,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SpotcheckReport {
    pub fixture: String,
    /// Cohomology dimensions per cover (refinement invariance shows here).
    pub dims_per_cover: Vec<Vec<usize>>,
    pub coboundary_squared_zero: bool,
    pub battery: Vec<BatteryRow>,
    pub consistent: bool,
}

fn dims_for(
    covers: &[Cover],
    max_degree: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Vec<usize>>, bool)> {
    let mut dims = Vec::new();
    let mut dd_zero = true;
    for cover in covers {
        let eps = match cover.space.name.as_str() {
            "circle" => 0.45,
            "interval" => 0.25,
            _ => 1.2,
        };
        cover.validate(rng, 800, eps)?;
        let cx = build_complex(cover, max_degree)?;
        dd_zero &= crate::cech::coboundary_squared_is_zero(&cx);
        dims.push(cohomology_dims(&cx));
    }
    Ok((dims, dd_zero))
}

/// Run the comparison on one bundled fixture: `interval`, `circle`, `plane`,
/// or `cone`.
pub fn de_rham_spotcheck(fixture: &str, seed: u64) -> Result<SpotcheckReport> {
    let mut rng = crate::seeded_rng(seed);
    let rule = QuadratureRule::new(crate::forms::DEFAULT_QUAD_ORDER);
    match fixture {
        "interval" => {
            let space = fixtures::interval_space();
            let (dims, dd) = dims_for(&interval_covers(), 1, &mut rng)?;
            // every 1-form on the line model is closed; all must be exact
            let h = build_contraction(&space, &[0.5], ContractionScaling::Linear, &mut rng)?;
            let mut battery = Vec::new();
            for (name, expr) in [
                ("x_dx", smooth::coord(0)),
                (
                    "poly_dx",
                    smooth::add(smooth::mul(cst(3.0), smooth::pow(coord(0), 2)), cst(1.0)),
                ),
            ] {
                let alpha = GeneratorForm::from_reps(
                    space.clone(),
                    1,
                    vec![(
                        1.0,
                        vec![
                            SmoothMap::scalar(1, expr).unwrap(),
                            SmoothMap::scalar(1, coord(0)).unwrap(),
                        ],
                    )],
                )?;
                // 2-cubes into the 1-dimensional model are rank-deficient, so
                // the closedness pairing is exercised (and vanishes) on them
                let closed_battery: Vec<SingularCube> = (0..4)
                    .map(|_| {
                        let seg = fixtures::random_segment(&space, &mut rng);
                        SingularCube::new(
                            crate::chains::CubeBox::unit(2),
                            SmoothMap::compose(
                                &seg.rep,
                                &SmoothMap::new(2, vec![coord(0)]).unwrap(),
                            )
                            .unwrap(),
                            space.clone(),
                        )
                        .unwrap()
                    })
                    .collect();
                let checks: Vec<SingularCube> = (0..8)
                    .map(|_| fixtures::random_segment(&space, &mut rng))
                    .collect();
                let (_, rep) = poincare_antiderivative(
                    &alpha,
                    &h,
                    &space,
                    &closed_battery,
                    &checks,
                    &rule,
                    1e-7,
                )?;
                battery.push(BatteryRow {
                    form: name.to_string(),
                    value: rep.max_defect,
                    kind: BatteryKind::AntiderivativeDefect,
                    pass: rep.max_defect < 1e-7,
                });
            }
            let consistent =
                dims.iter().all(|d| d == &vec![1, 0]) && battery.iter().all(|b| b.pass) && dd;
            Ok(SpotcheckReport {
                fixture: fixture.into(),
                dims_per_cover: dims,
                coboundary_squared_zero: dd,
                battery,
                consistent,
            })
        }
        "circle" => {
            let space = fixtures::circle_space();
            let (dims, dd) = dims_for(&circle_covers(), 2, &mut rng)?;
            // the angular form has period 2π on the fundamental cycle
            let omega = GeneratorForm::new(
                1,
                vec![
                    (1.0, vec![space.coord_element(0), space.coord_element(1)]),
                    (-1.0, vec![space.coord_element(1), space.coord_element(0)]),
                ],
            )?;
            let cycle = fixtures::circle_cube(1.0, &space);
            let period = lambda_eval(&omega, &cycle, &rule)?;
            let mut battery = vec![BatteryRow {
                form: "x_dy_minus_y_dx".into(),
                value: period,
                kind: BatteryKind::CyclePeriod,
                pass: (period - std::f64::consts::TAU).abs() < 1e-9,
            }];
            // an exact form has period zero on the cycle
            let exact = GeneratorForm::from_reps(
                space.clone(),
                0,
                vec![(
                    1.0,
                    vec![SmoothMap::scalar(2, smooth::mul(coord(0), coord(1))).unwrap()],
                )],
            )?
            .exterior_derivative();
            let zero_period = lambda_eval(&exact, &cycle, &rule)?;
            battery.push(BatteryRow {
                form: "d(xy)".into(),
                value: zero_period,
                kind: BatteryKind::CyclePeriod,
                pass: zero_period.abs() < 1e-9,
            });
            let h1_one = dims.iter().all(|d| d.len() >= 2 && d[0] == 1 && d[1] == 1);
            let consistent = h1_one && battery[0].pass && battery[1].pass && dd;
            Ok(SpotcheckReport {
                fixture: fixture.into(),
                dims_per_cover: dims,
                coboundary_squared_zero: dd,
                battery,
                consistent,
            })
        }
        "plane" => {
            let space = fixtures::plane();
            let (dims, dd) = dims_for(&plane_covers(), 2, &mut rng)?;
            // d(xy) is exact: its pairing telescopes through xy on boundaries
            let f = SmoothMap::scalar(2, smooth::mul(coord(0), coord(1))).unwrap();
            let alpha = GeneratorForm::from_reps(space.clone(), 0, vec![(1.0, vec![f.clone()])])?
                .exterior_derivative();
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let seg = fixtures::random_segment(&space, &mut rng);
                let ends = crate::chains::boundary_of_cube(&seg)?;
                let direct = crate::forms::pair_chain(
                    &GeneratorForm::from_reps(space.clone(), 0, vec![(1.0, vec![f.clone()])])?,
                    &ends,
                    &rule,
                )?;
                let via = lambda_eval(&alpha, &seg, &rule)?;
                worst = worst.max((direct - via).abs());
            }
            let battery = vec![BatteryRow {
                form: "d(xy)".into(),
                value: worst,
                kind: BatteryKind::AntiderivativeDefect,
                pass: worst < 1e-8,
            }];
            let consistent = dims.iter().all(|d| d == &vec![1, 0, 0]) && worst < 1e-8 && dd;
            Ok(SpotcheckReport {
                fixture: fixture.into(),
                dims_per_cover: dims,
                coboundary_squared_zero: dd,
                battery,
                consistent,
            })
        }
        "cone" => {
            let space = fixtures::cone_space();
            let (dims, dd) = dims_for(&cone_covers(), 1, &mut rng)?;
            let h = build_contraction(
                &space,
                &[0.0, 0.0, 0.0],
                ContractionScaling::EvenSquare,
                &mut rng,
            )?;
            let mut battery = Vec::new();
            for (name, g) in [
                ("d(u+w)", smooth::add(coord(0), coord(2))),
                (
                    "d(uw - v^2 + v)",
                    smooth::add(
                        smooth::sub(smooth::mul(coord(0), coord(2)), smooth::pow(coord(1), 2)),
                        coord(1),
                    ),
                ),
            ] {
                let alpha = GeneratorForm::from_reps(
                    space.clone(),
                    0,
                    vec![(1.0, vec![SmoothMap::scalar(3, g).unwrap()])],
                )?
                .exterior_derivative();
                let closed_battery: Vec<SingularCube> = (0..4)
                    .map(|_| fixtures::pushed_square(&space, &mut rng))
                    .collect();
                let checks: Vec<SingularCube> = (0..8)
                    .map(|_| fixtures::pushed_segment(&space, &mut rng))
                    .collect();
                let (_, rep) = poincare_antiderivative(
                    &alpha,
                    &h,
                    &space,
                    &closed_battery,
                    &checks,
                    &rule,
                    1e-7,
                )?;
                battery.push(BatteryRow {
                    form: name.to_string(),
                    value: rep.max_defect,
                    kind: BatteryKind::AntiderivativeDefect,
                    pass: rep.max_defect < 1e-7,
                });
            }
            let consistent =
                dims.iter().all(|d| d == &vec![1, 0]) && battery.iter().all(|b| b.pass) && dd;
            Ok(SpotcheckReport {
                fixture: fixture.into(),
                dims_per_cover: dims,
                coboundary_squared_zero: dd,
                battery,
                consistent,
            })
        }
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_forms_are_exact_and_h1_vanishes() {
        let rep = de_rham_spotcheck("interval", 11).unwrap();
        assert!(rep.consistent, "{rep:?}");
        assert_eq!(rep.dims_per_cover[0], vec![1, 0]);
        assert_eq!(rep.dims_per_cover[1], vec![1, 0]);
    }

    #[test]
    fn circle_period_witnesses_h1() {
        let rep = de_rham_spotcheck("circle", 12).unwrap();
        assert!(rep.consistent, "{rep:?}");
        for dims in &rep.dims_per_cover {
            assert_eq!(&dims[..2], &[1, 1]);
        }
    }

    #[test]
    fn plane_and_cone_are_contractible() {
        let rep = de_rham_spotcheck("plane", 13).unwrap();
        assert!(rep.consistent, "{rep:?}");
        let rep = de_rham_spotcheck("cone", 14).unwrap();
        assert!(rep.consistent, "{rep:?}");
        assert_eq!(rep.dims_per_cover[0], vec![1, 0]);
    }

    #[test]
    fn unknown_fixture_errors() {
        assert!(matches!(
            de_rham_spotcheck("torus", 1),
            Err(Error::UnknownFixture(_))
        ));
    }
}
