//! Named verification suites: each runs one structural identity over a
//! seeded battery and reports the worst residual against its tolerance.
//! These back the command-line `verify` run and the acceptance harness.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::chains::{boundary, boundary_of_cube, prism_identity_defect, CubeBox, SingularCube};
use crate::error::Result;
use crate::fixtures;
use crate::forms::{chain_rule_residual, stokes_residual, GeneratorForm};
use crate::homotopy::{
    homotopy_identity_residual, homotopy_identity_residual_deg0, poincare_antiderivative,
};
use crate::orbit::{build_contraction, ContractionScaling};
use crate::quad::QuadratureRule;
use crate::smooth::{self, coord, cst, SmoothMap};
use crate::space::{product_with_interval, SpaceRef};

/// Outcome of one suite.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SuiteResult {
    pub id: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl SuiteResult {
    fn new(id: &str, max_residual: f64, tolerance: f64, detail: String) -> Self {
        SuiteResult {
            id: id.to_string(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
            detail,
        }
    }
}

/// Tolerances of the verification suites, overridable from configuration.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SuiteTolerances {
    pub d_squared: f64,
    pub boundary_squared: f64,
    pub stokes: f64,
    pub chain_rule: f64,
    pub homotopy_chain: f64,
    pub homotopy_cochain: f64,
    pub poincare: f64,
}

impl Default for SuiteTolerances {
    fn default() -> Self {
        SuiteTolerances {
            d_squared: 1e-12,
            boundary_squared: 0.0,
            stokes: 1e-8,
            chain_rule: 1e-9,
            homotopy_chain: 0.0,
            homotopy_cochain: 1e-7,
            poincare: 1e-7,
        }
    }
}

fn random_poly_element(space: &SpaceRef, max_degree: u32, rng: &mut ChaCha8Rng) -> SmoothMap {
    // random polynomial of total degree <= max_degree in the ambient coords
    let n = space.ambient_dim;
    let mut acc = cst(rng.gen::<f64>() - 0.5);
    let mut monomials: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for m in &monomials {
            for v in 0..n {
                let mut m2 = m.clone();
                m2.push(v);
                next.push(m2);
            }
        }
        for m in &next {
            if rng.gen::<f64>() < 0.5 {
                let mut term = cst(rng.gen::<f64>() - 0.5);
                for &v in m {
                    term = smooth::mul(term, coord(v));
                }
                acc = smooth::add(acc, term);
            }
        }
        monomials = next;
    }
    SmoothMap::scalar(n, acc).unwrap()
}

/// Pairings of twice-differentiated forms vanish identically: the duplicated
/// constant rows force a zero Jacobian before any quadrature happens.
pub fn suite_d_squared(seed: u64, order: usize, tol: f64) -> Result<SuiteResult> {
    let mut rng = crate::seeded_rng(seed);
    let plane = fixtures::plane();
    let rule = QuadratureRule::new(order);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for degree in 0..=1 {
        for _ in 0..10 {
            let terms = (0..2)
                .map(|_| {
                    (
                        rng.gen::<f64>() - 0.5,
                        (0..degree + 1)
                            .map(|_| random_poly_element(&plane, 2, &mut rng))
                            .collect::<Vec<_>>(),
                    )
                })
                .collect();
            let alpha = GeneratorForm::from_reps(plane.clone(), degree, terms)?;
            let dd = alpha.exterior_derivative().exterior_derivative();
            let sigma = fixtures::random_cube(&plane, degree + 2, &mut rng);
            worst = worst.max(crate::forms::lambda_eval(&dd, &sigma, &rule)?.abs());
            count += 1;
        }
    }
    Ok(SuiteResult::new(
        "d-squared",
        worst,
        tol,
        format!("{count} random forms, degrees 0..=1, paired against (p+2)-cubes"),
    ))
}

/// Boundary of a boundary cancels to the empty chain, exactly, for identity
/// cubes up to dimension 4 and random reparametrized cubes.
pub fn suite_boundary_squared(seed: u64, tol: f64) -> Result<SuiteResult> {
    let mut rng = crate::seeded_rng(seed);
    let mut surviving = 0usize;
    let mut count = 0usize;
    for p in 2..=4 {
        let space = crate::space::SpaceModel::euclidean(p);
        let sigma = SingularCube::identity_on(CubeBox::unit(p), space)?;
        surviving += boundary(&boundary_of_cube(&sigma)?)?.len();
        count += 1;
    }
    let plane = fixtures::plane();
    for p in 2..=3 {
        for _ in 0..3 {
            let sigma = fixtures::random_cube(&plane, p, &mut rng);
            surviving += boundary(&boundary_of_cube(&sigma)?)?.len();
            count += 1;
        }
    }
    Ok(SuiteResult::new(
        "boundary-squared",
        surviving as f64,
        tol,
        format!("{count} cubes (identity p<=4 plus reparametrized); surviving terms counted"),
    ))
}

/// Boundary/coboundary duality: |⟨dα, σ⟩ - ⟨α, ∂σ⟩| over a battery of
/// polynomial forms of degree up to 4 against boxes of dimension up to 3.
pub fn suite_stokes(seed: u64, order: usize, count: usize, tol: f64) -> Result<SuiteResult> {
    let mut rng = crate::seeded_rng(seed);
    let plane = fixtures::plane();
    let rule = QuadratureRule::new(order);
    let mut worst = 0.0f64;
    for i in 0..count {
        let p = i % 3; // form degree; cube dimension p+1 <= 3
        let terms = (0..2)
            .map(|_| {
                (
                    2.0 * rng.gen::<f64>() - 1.0,
                    (0..p + 1)
                        .map(|_| random_poly_element(&plane, 4, &mut rng))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let alpha = GeneratorForm::from_reps(plane.clone(), p, terms)?;
        let sigma = if p == 0 {
            fixtures::random_segment(&plane, &mut rng)
        } else {
            // affine cubes keep the integrand inside the exact-degree range
            let outputs = (0..2)
                .map(|_| {
                    let mut acc = cst(rng.gen::<f64>() - 0.5);
                    for v in 0..p + 1 {
                        acc = smooth::add(
                            acc,
                            smooth::mul(cst(2.0 * rng.gen::<f64>() - 1.0), coord(v)),
                        );
                    }
                    acc
                })
                .collect();
            SingularCube::new(
                CubeBox::unit(p + 1),
                SmoothMap::new(p + 1, outputs)?,
                plane.clone(),
            )?
        };
        worst = worst.max(stokes_residual(&alpha, &sigma, &rule)?);
    }
    Ok(SuiteResult::new(
        "stokes",
        worst,
        tol,
        format!(
            "{count} polynomial forms (degree <= 4) against boxes of dimension <= 3, order {order}"
        ),
    ))
}

/// The derivative of a composite agrees with the generator expansion:
/// dφ = Σ ∂F/∂u_i dg_i paired on random segments.
pub fn suite_chain_rule(seed: u64, order: usize, draws: usize, tol: f64) -> Result<SuiteResult> {
    let mut rng = crate::seeded_rng(seed);
    let plane = fixtures::plane();
    let rule = QuadratureRule::new(order);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        // F a random bivariate polynomial over two polynomial elements
        let outer = {
            let mut acc = cst(rng.gen::<f64>() - 0.5);
            for (i, j) in [(0, 0), (0, 1), (1, 1), (0, 0)] {
                if rng.gen::<f64>() < 0.7 {
                    acc = smooth::add(
                        acc,
                        smooth::mul(cst(rng.gen::<f64>() - 0.5), smooth::mul(coord(i), coord(j))),
                    );
                }
            }
            acc = smooth::add(acc, smooth::mul(cst(rng.gen::<f64>() - 0.5), coord(0)));
            SmoothMap::scalar(2, acc)?
        };
        let g1 = plane.element(random_poly_element(&plane, 2, &mut rng))?;
        let g2 = plane.element(random_poly_element(&plane, 2, &mut rng))?;
        let seg = fixtures::random_segment(&plane, &mut rng);
        worst = worst.max(chain_rule_residual(&outer, &[g1, g2], &[seg], &rule)?);
    }
    Ok(SuiteResult::new(
        "chain-rule",
        worst,
        tol,
        format!("{draws} random (outer, segment) draws"),
    ))
}

/// Chain-level prism identity, extensionally, for cubes of dimension <= 2.
pub fn suite_homotopy_chain(seed: u64, tol: f64) -> Result<SuiteResult> {
    let mut rng = crate::seeded_rng(seed);
    let plane = fixtures::plane();
    let mut surviving = 0usize;
    let mut count = 0usize;
    // a point, segments, and curved squares
    let pt = SingularCube::new(
        CubeBox::point(),
        SmoothMap::constant(0, &[0.4, -0.9]),
        plane.clone(),
    )?;
    surviving += prism_identity_defect(&pt)?.len();
    count += 1;
    for _ in 0..3 {
        let seg = fixtures::random_segment(&plane, &mut rng);
        surviving += prism_identity_defect(&seg)?.len();
        let sq = fixtures::random_cube(&plane, 2, &mut rng);
        surviving += prism_identity_defect(&sq)?.len();
        count += 2;
    }
    Ok(SuiteResult::new(
        "homotopy-chain",
        surviving as f64,
        tol,
        format!("{count} cubes of dimension <= 2, extensional cancellation"),
    ))
}

/// Cochain-level homotopy identity over the interval product of the plane,
/// on a split-form battery, including the degree-0 case.
pub fn suite_homotopy_cochain(seed: u64, order: usize, tol: f64) -> Result<SuiteResult> {
    let mut rng = crate::seeded_rng(seed);
    let plane = fixtures::plane();
    let product = product_with_interval(&plane)?;
    let rule = QuadratureRule::new(order);
    let t = || SmoothMap::scalar(3, coord(0)).unwrap();
    let x = || SmoothMap::scalar(3, coord(1)).unwrap();
    let y = || SmoothMap::scalar(3, coord(2)).unwrap();
    let poly3 = |rng: &mut ChaCha8Rng| {
        let mut acc = cst(rng.gen::<f64>() - 0.5);
        for i in 0..3 {
            acc = smooth::add(acc, smooth::mul(cst(rng.gen::<f64>() - 0.5), coord(i)));
            for j in i..3 {
                if rng.gen::<f64>() < 0.4 {
                    acc = smooth::add(
                        acc,
                        smooth::mul(cst(rng.gen::<f64>() - 0.5), smooth::mul(coord(i), coord(j))),
                    );
                }
            }
        }
        SmoothMap::scalar(3, acc).unwrap()
    };
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for _ in 0..4 {
        // degree 1: a dt + b dx + c dy
        let omega = GeneratorForm::from_reps(
            product.clone(),
            1,
            vec![
                (1.0, vec![poly3(&mut rng), t()]),
                (1.0, vec![poly3(&mut rng), x()]),
                (1.0, vec![poly3(&mut rng), y()]),
            ],
        )?;
        let battery: Vec<SingularCube> = (0..4)
            .map(|_| fixtures::random_segment(&plane, &mut rng))
            .collect();
        worst = worst.max(homotopy_identity_residual(&omega, &plane, &battery, &rule)?);
        count += 1;

        // degree 2: a dt∧dx + b dt∧dy + c dx∧dy
        let omega = GeneratorForm::from_reps(
            product.clone(),
            2,
            vec![
                (1.0, vec![poly3(&mut rng), t(), x()]),
                (1.0, vec![poly3(&mut rng), t(), y()]),
                (1.0, vec![poly3(&mut rng), x(), y()]),
            ],
        )?;
        let battery: Vec<SingularCube> = (0..4)
            .map(|_| fixtures::random_cube(&plane, 2, &mut rng))
            .collect();
        worst = worst.max(homotopy_identity_residual(&omega, &plane, &battery, &rule)?);
        count += 1;

        // degree 0, checked separately: K* d F = F(1,·) - F(0,·)
        let f = poly3(&mut rng);
        worst = worst.max(homotopy_identity_residual_deg0(&f, &plane, &mut rng, 20)?);
        count += 1;
    }
    Ok(SuiteResult::new(
        "homotopy-cochain",
        worst,
        tol,
        format!("{count} split-form batteries over the interval product of the plane"),
    ))
}

/// Antiderivatives of certified-closed forms on the plane and on the
/// quadratic cone, each checked on random cubes.
pub fn suite_poincare(
    seed: u64,
    order: usize,
    forms_per_space: usize,
    cubes_per_form: usize,
    tol: f64,
) -> Result<SuiteResult> {
    let mut rng = crate::seeded_rng(seed);
    let rule = QuadratureRule::new(order);
    let mut worst = 0.0f64;
    let mut count = 0usize;

    // plane with the linear radial contraction
    let plane = fixtures::plane();
    let h_plane = build_contraction(&plane, &[0.0, 0.0], ContractionScaling::Linear, &mut rng)?;
    for i in 0..forms_per_space {
        let (alpha, closed_dim, check_dim) = if i % 2 == 0 {
            // exact 1-form d(g)
            let g = random_poly_element(&plane, 3, &mut rng);
            (
                GeneratorForm::from_reps(plane.clone(), 0, vec![(1.0, vec![g])])?
                    .exterior_derivative(),
                2,
                1,
            )
        } else {
            // any 2-form on the plane is closed
            let terms = vec![(
                1.0,
                vec![
                    random_poly_element(&plane, 2, &mut rng),
                    random_poly_element(&plane, 2, &mut rng),
                    random_poly_element(&plane, 2, &mut rng),
                ],
            )];
            (GeneratorForm::from_reps(plane.clone(), 2, terms)?, 3, 2)
        };
        let closed_battery: Vec<SingularCube> = (0..4)
            .map(|_| fixtures::random_cube(&plane, closed_dim, &mut rng))
            .collect();
        let checks: Vec<SingularCube> = (0..cubes_per_form)
            .map(|_| {
                if check_dim == 1 {
                    fixtures::random_segment(&plane, &mut rng)
                } else {
                    fixtures::random_cube(&plane, check_dim, &mut rng)
                }
            })
            .collect();
        let (_, rep) = poincare_antiderivative(
            &alpha,
            &h_plane,
            &plane,
            &closed_battery,
            &checks,
            &rule,
            tol,
        )?;
        worst = worst.max(rep.max_defect);
        count += 1;
    }

    // the cone with its induced even-scaling contraction
    let cone = fixtures::cone_space();
    let h_cone = build_contraction(
        &cone,
        &[0.0, 0.0, 0.0],
        ContractionScaling::EvenSquare,
        &mut rng,
    )?;
    for i in 0..forms_per_space {
        let g = {
            // random polynomial in the image coordinates
            let mut acc = cst(rng.gen::<f64>() - 0.5);
            for v in 0..3 {
                acc = smooth::add(acc, smooth::mul(cst(rng.gen::<f64>() - 0.5), coord(v)));
                for w in v..3 {
                    if rng.gen::<f64>() < 0.4 {
                        acc = smooth::add(
                            acc,
                            smooth::mul(
                                cst(rng.gen::<f64>() - 0.5),
                                smooth::mul(coord(v), coord(w)),
                            ),
                        );
                    }
                }
            }
            SmoothMap::scalar(3, acc)?
        };
        let alpha = if i % 2 == 0 {
            GeneratorForm::from_reps(cone.clone(), 0, vec![(1.0, vec![g])])?.exterior_derivative()
        } else {
            // 2-forms on the two-dimensional cone are closed: pairings of the
            // differential against pushed 3-cubes vanish identically
            GeneratorForm::from_reps(
                cone.clone(),
                2,
                vec![(
                    1.0,
                    vec![
                        g,
                        SmoothMap::scalar(3, coord(0))?,
                        SmoothMap::scalar(3, coord(1))?,
                    ],
                )],
            )?
        };
        let closed_battery: Vec<SingularCube> = (0..3)
            .map(|_| fixtures::pushed_square(&cone, &mut rng))
            .collect();
        let closed_battery = if alpha.degree() == 1 {
            closed_battery
        } else {
            // pair d(2-form) against pushed 3-cubes
            (0..3)
                .map(|_| {
                    let upstairs = SmoothMap::new(
                        3,
                        vec![
                            smooth::add(coord(0), smooth::mul(coord(1), coord(2))),
                            smooth::sub(coord(1), coord(2)),
                        ],
                    )
                    .unwrap();
                    SingularCube::new(
                        CubeBox::unit(3),
                        SmoothMap::compose(&fixtures::quadratic_invariants(), &upstairs).unwrap(),
                        cone.clone(),
                    )
                    .unwrap()
                })
                .collect()
        };
        let checks: Vec<SingularCube> = (0..cubes_per_form)
            .map(|_| {
                if alpha.degree() == 1 {
                    fixtures::pushed_segment(&cone, &mut rng)
                } else {
                    fixtures::pushed_square(&cone, &mut rng)
                }
            })
            .collect();
        let (_, rep) =
            poincare_antiderivative(&alpha, &h_cone, &cone, &closed_battery, &checks, &rule, tol)?;
        worst = worst.max(rep.max_defect);
        count += 1;
    }
    Ok(SuiteResult::new(
        "poincare",
        worst,
        tol,
        format!("{count} certified-closed forms, {cubes_per_form} check cubes each"),
    ))
}

/// Run every verification suite with the given tolerances, in a deterministic
/// order, optionally spreading the suites over worker threads. Results come
/// back in suite order regardless of scheduling.
pub fn run_verification(
    seed: u64,
    order: usize,
    tols: &SuiteTolerances,
    workers: usize,
) -> Result<Vec<SuiteResult>> {
    type Job = Box<dyn FnOnce() -> Result<SuiteResult> + Send>;
    let t = tols.clone();
    let jobs: Vec<Job> = vec![
        Box::new(move || suite_d_squared(seed, order, t.d_squared)),
        {
            let t = tols.clone();
            Box::new(move || suite_boundary_squared(seed.wrapping_add(1), t.boundary_squared))
        },
        {
            let t = tols.clone();
            Box::new(move || suite_stokes(seed.wrapping_add(2), order, 60, t.stokes))
        },
        {
            let t = tols.clone();
            Box::new(move || suite_chain_rule(seed.wrapping_add(3), order, 100, t.chain_rule))
        },
        {
            let t = tols.clone();
            Box::new(move || suite_homotopy_chain(seed.wrapping_add(4), t.homotopy_chain))
        },
        {
            let t = tols.clone();
            Box::new(move || {
                suite_homotopy_cochain(seed.wrapping_add(5), order, t.homotopy_cochain)
            })
        },
        {
            let t = tols.clone();
            Box::new(move || suite_poincare(seed.wrapping_add(6), order, 20, 20, t.poincare))
        },
    ];
    run_jobs(jobs, workers)
}

fn run_jobs(
    jobs: Vec<Box<dyn FnOnce() -> Result<SuiteResult> + Send>>,
    workers: usize,
) -> Result<Vec<SuiteResult>> {
    let workers = workers.max(1);
    if workers == 1 {
        return jobs.into_iter().map(|j| j()).collect();
    }
    let mut slots: Vec<Option<Result<SuiteResult>>> = Vec::new();
    for _ in 0..jobs.len() {
        slots.push(None);
    }
    let queue: std::sync::Mutex<Vec<(usize, Box<dyn FnOnce() -> Result<SuiteResult> + Send>)>> =
        std::sync::Mutex::new(jobs.into_iter().enumerate().collect());
    let slots = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = queue.lock().unwrap().pop();
                match job {
                    Some((i, j)) => {
                        let r = j();
                        slots.lock().unwrap()[i] = Some(r);
                    }
                    None => break,
                }
            });
        }
    });
    let slots = slots.into_inner().unwrap();
    slots
        .iter_mut()
        .map(|s| s.take().expect("every suite slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_at_default_tolerances() {
        let results = run_verification(42, 12, &SuiteTolerances::default(), 2).unwrap();
        assert_eq!(results.len(), 7);
        for r in &results {
            assert!(
                r.pass,
                "suite {} failed: residual {} vs tolerance {}",
                r.id, r.max_residual, r.tolerance
            );
        }
        // deterministic across reruns
        let again = run_verification(42, 12, &SuiteTolerances::default(), 1).unwrap();
        for (a, b) in results.iter().zip(&again) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.max_residual, b.max_residual);
        }
    }

    #[test]
    fn zero_tolerance_fails_quadrature_suites() {
        let r = suite_stokes(7, 12, 10, 0.0).unwrap();
        assert!(!r.pass, "quadrature noise should defeat a zero tolerance");
    }
}
