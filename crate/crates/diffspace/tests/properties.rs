//! Property tests for the structural invariants: forward derivatives against
//! finite differences, composition exactness, the Leibniz rule, boundary
//! cancellation, duality, and pullback functoriality on randomized inputs.

#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;

use diffspace::chains::{boundary, boundary_of_cube, CubeBox, SingularCube};
use diffspace::flow::{derivation_apply, TangentVector};
use diffspace::forms::{lambda_eval, stokes_residual, GeneratorForm};
use diffspace::quad::QuadratureRule;
use diffspace::smooth::{self, coord, cst, SmoothMap};
use diffspace::space::SpaceModel;

/// Classical-route evaluator used as the representation-consistency oracle:
/// the form g0 dg1 ∧ ... ∧ dgp is integrated over a cube by assembling the
/// integrand from symbolic ambient partials of the g_i and the Jacobian of
/// the cube representative (the product rule det(A·J) realizes the minor
/// expansion), instead of differentiating the composed trees.
fn classical_eval(terms: &[(f64, Vec<SmoothMap>)], sigma: &SingularCube, order: usize) -> f64 {
    let p = sigma.dim();
    let n = sigma.rep.output_dim();
    let rule = QuadratureRule::new(order);
    let mut total = 0.0;
    for (c, tuple) in terms {
        // ambient partials of each differential entry
        let partials: Vec<Vec<SmoothMap>> = tuple[1..]
            .iter()
            .map(|g| (0..n).map(|k| g.partial(k).unwrap()).collect())
            .collect();
        let mut acc = 0.0;
        rule.for_each_node(&sigma.cube_box, |t, w| {
            let jet = sigma.rep.jet(t).unwrap();
            let x = &jet.value;
            let g0 = tuple[0].evaluate_scalar(x).unwrap();
            // B[i][l] = Σ_k ∂g_i/∂x_k (x) · ∂σ_k/∂t_l
            let mut b = vec![vec![0.0; p]; p];
            for i in 0..p {
                for l in 0..p {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += partials[i][k].evaluate_scalar(x).unwrap() * jet.jacobian[k][l];
                    }
                    b[i][l] = s;
                }
            }
            acc += w * g0 * det_small(&b);
        });
        total += c * acc;
    }
    total
}

fn det_small(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!(),
    }
}

#[test]
fn representation_consistency_with_classical_route() {
    // generator-tuple pairings agree with the classical-forms evaluator on
    // polynomial fixtures within rounding
    let plane = SpaceModel::euclidean(2);
    let mut rng = diffspace::seeded_rng(55);
    use rand::Rng;
    for _ in 0..6 {
        for degree in 1..=2usize {
            let mut terms = Vec::new();
            for _ in 0..2 {
                let mut tuple = Vec::new();
                for _ in 0..degree + 1 {
                    let coeffs: [f64; 7] = std::array::from_fn(|_| rng.gen::<f64>() - 0.5);
                    tuple.push(SmoothMap::scalar(2, poly2(&coeffs)).unwrap());
                }
                terms.push((rng.gen::<f64>() - 0.5, tuple));
            }
            let alpha = GeneratorForm::from_reps(plane.clone(), degree, terms.clone()).unwrap();
            let rep = SmoothMap::new(
                degree,
                (0..2)
                    .map(|_| {
                        let coeffs: [f64; 7] = std::array::from_fn(|_| rng.gen::<f64>() - 0.5);
                        // reuse the bivariate helper when the box is 2-dimensional
                        if degree == 2 {
                            poly2(&coeffs)
                        } else {
                            smooth::add(cst(coeffs[0]), smooth::mul(cst(coeffs[1]), coord(0)))
                        }
                    })
                    .collect(),
            )
            .unwrap();
            let sigma = SingularCube::new(CubeBox::unit(degree), rep, plane.clone()).unwrap();
            let fast = lambda_eval(&alpha, &sigma, &QuadratureRule::new(12)).unwrap();
            let classical = classical_eval(&terms, &sigma, 20);
            assert!(
                (fast - classical).abs() <= 1e-10 * (1.0 + fast.abs()),
                "degree {degree}: {fast} vs {classical}"
            );
        }
    }
}

#[test]
fn quadrature_domain_violations_surface_as_errors() {
    // a logarithmic generator paired against a cube that crosses zero
    let plane = SpaceModel::euclidean(2);
    let alpha = GeneratorForm::from_reps(
        plane.clone(),
        1,
        vec![(
            1.0,
            vec![
                SmoothMap::scalar(2, smooth::log(coord(0))).unwrap(),
                SmoothMap::scalar(2, coord(1)).unwrap(),
            ],
        )],
    )
    .unwrap();
    let rep = SmoothMap::new(
        1,
        vec![
            smooth::sub(coord(0), cst(0.5)), // sweeps through 0
            coord(0),
        ],
    )
    .unwrap();
    let sigma = SingularCube::new(CubeBox::unit(1), rep, plane).unwrap();
    let err = lambda_eval(&alpha, &sigma, &QuadratureRule::new(8));
    assert!(err.is_err());
    assert!(err.unwrap_err().to_string().contains("log"));
}

#[test]
fn checked_pullback_validates_membership() {
    // a map that leaves the circle is rejected by the sampling check
    let circle = diffspace::fixtures::circle_space();
    let plane = SpaceModel::euclidean(2);
    let omega = GeneratorForm::from_reps(
        circle.clone(),
        1,
        vec![(
            1.0,
            vec![
                SmoothMap::scalar(2, coord(0)).unwrap(),
                SmoothMap::scalar(2, coord(1)).unwrap(),
            ],
        )],
    )
    .unwrap();
    let mut rng = diffspace::seeded_rng(8);
    let scaling = SmoothMap::new(2, vec![smooth::mul(cst(2.0), coord(0)), coord(1)]).unwrap();
    assert!(omega
        .pullback_checked(&scaling, &plane, &mut rng, 20)
        .is_err());
    // the circle parametrization passes
    let line = SpaceModel::euclidean(1);
    let param = SmoothMap::new(1, vec![smooth::cos(coord(0)), smooth::sin(coord(0))]).unwrap();
    assert!(omega.pullback_checked(&param, &line, &mut rng, 20).is_ok());
}

/// A random bivariate polynomial of total degree <= 3 with bounded
/// coefficients, as (constant, linear, quadratic, cubic) coefficient tuples.
fn poly2(coeffs: &[f64; 7]) -> smooth::ExprRef {
    let [c, cx, cy, cxx, cxy, cyy, cxxy] = *coeffs;
    let x = coord(0);
    let y = coord(1);
    let mut acc = cst(c);
    acc = smooth::add(acc, smooth::mul(cst(cx), x.clone()));
    acc = smooth::add(acc, smooth::mul(cst(cy), y.clone()));
    acc = smooth::add(
        acc,
        smooth::mul(cst(cxx), smooth::mul(x.clone(), x.clone())),
    );
    acc = smooth::add(
        acc,
        smooth::mul(cst(cxy), smooth::mul(x.clone(), y.clone())),
    );
    acc = smooth::add(
        acc,
        smooth::mul(cst(cyy), smooth::mul(y.clone(), y.clone())),
    );
    acc = smooth::add(
        acc,
        smooth::mul(cst(cxxy), smooth::mul(smooth::mul(x.clone(), x), y)),
    );
    acc
}

fn arb_coeffs() -> impl Strategy<Value = [f64; 7]> {
    prop::array::uniform7(-1.5f64..1.5)
}

fn arb_point() -> impl Strategy<Value = (f64, f64)> {
    (-1.5f64..1.5, -1.5f64..1.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Forward-mode gradients agree with central finite differences on
    /// polynomials to within finite-difference truncation error.
    #[test]
    fn jet_matches_central_differences(coeffs in arb_coeffs(), (x, y) in arb_point()) {
        let f = SmoothMap::scalar(2, poly2(&coeffs)).unwrap();
        let jet = f.jet(&[x, y]).unwrap();
        let h = 1e-5;
        for axis in 0..2 {
            let mut hi = [x, y];
            let mut lo = [x, y];
            hi[axis] += h;
            lo[axis] -= h;
            let fd = (f.evaluate(&hi).unwrap()[0] - f.evaluate(&lo).unwrap()[0]) / (2.0 * h);
            let exact = jet.jacobian[0][axis];
            let scale = exact.abs().max(1.0);
            prop_assert!(
                (fd - exact).abs() <= 1e-6 * scale,
                "axis {axis}: fd {fd} vs exact {exact}"
            );
        }
    }

    /// Composition evaluates to the pointwise composite exactly.
    #[test]
    fn composition_is_pointwise_exact(
        a in arb_coeffs(),
        b in arb_coeffs(),
        c in arb_coeffs(),
        (x, y) in arb_point(),
    ) {
        let outer = SmoothMap::scalar(2, poly2(&a)).unwrap();
        let inner = SmoothMap::new(2, vec![poly2(&b), poly2(&c)]).unwrap();
        let composite = SmoothMap::compose(&outer, &inner).unwrap();
        let mid = inner.evaluate(&[x, y]).unwrap();
        let direct = outer.evaluate(&mid).unwrap()[0];
        let through = composite.evaluate(&[x, y]).unwrap()[0];
        prop_assert_eq!(direct, through);
    }

    /// Derivations satisfy the Leibniz rule exactly on tree products.
    #[test]
    fn leibniz_rule_is_exact(
        a in arb_coeffs(),
        b in arb_coeffs(),
        (x, y) in arb_point(),
        (vx, vy) in arb_point(),
    ) {
        let plane = SpaceModel::euclidean(2);
        let e1 = plane.element(SmoothMap::scalar(2, poly2(&a)).unwrap()).unwrap();
        let e2 = plane.element(SmoothMap::scalar(2, poly2(&b)).unwrap()).unwrap();
        let product = plane
            .element(SmoothMap::scalar(
                2,
                smooth::mul(e1.rep.output(0).clone(), e2.rep.output(0).clone()),
            ).unwrap())
            .unwrap();
        let v = TangentVector { base: vec![x, y], components: vec![vx, vy] };
        let lhs = derivation_apply(&v, &product).unwrap();
        let rhs = derivation_apply(&v, &e1).unwrap() * e2.evaluate(&[x, y]).unwrap()
            + e1.evaluate(&[x, y]).unwrap() * derivation_apply(&v, &e2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    /// The boundary of a boundary cancels exactly for random quadratic cubes.
    #[test]
    fn boundary_squared_cancels(b in arb_coeffs(), c in arb_coeffs()) {
        let plane = SpaceModel::euclidean(2);
        let rep = SmoothMap::new(3, vec![
            {
                let t0 = coord(0); let t1 = coord(1); let t2 = coord(2);
                smooth::add(
                    smooth::add(smooth::mul(cst(b[0]), t0), smooth::mul(cst(b[1]), t1)),
                    smooth::add(smooth::mul(cst(b[2]), t2), smooth::mul(cst(b[3]), smooth::mul(coord(0), coord(1)))),
                )
            },
            {
                let t0 = coord(0); let t2 = coord(2);
                smooth::add(
                    smooth::mul(cst(c[0]), smooth::mul(t0, t2)),
                    smooth::add(smooth::mul(cst(c[1]), coord(1)), cst(c[2])),
                )
            },
        ]).unwrap();
        let sigma = SingularCube::new(
            CubeBox::new(vec![(0.0, 1.0), (-0.5, 0.75), (0.25, 1.25)]).unwrap(),
            rep,
            plane,
        ).unwrap();
        let dd = boundary(&boundary_of_cube(&sigma).unwrap()).unwrap();
        prop_assert!(dd.is_empty(), "{} surviving terms", dd.len());
    }

    /// Duality between the exterior derivative and the boundary operator on
    /// polynomial data.
    #[test]
    fn duality_holds_on_random_data(
        a in arb_coeffs(),
        b in arb_coeffs(),
        m in prop::array::uniform6(-1.0f64..1.0),
    ) {
        let plane = SpaceModel::euclidean(2);
        let alpha = GeneratorForm::from_reps(
            plane.clone(),
            1,
            vec![(1.0, vec![
                SmoothMap::scalar(2, poly2(&a)).unwrap(),
                SmoothMap::scalar(2, poly2(&b)).unwrap(),
            ])],
        ).unwrap();
        let rep = SmoothMap::new(2, vec![
            smooth::add(cst(m[0]), smooth::add(
                smooth::mul(cst(m[1]), coord(0)),
                smooth::mul(cst(m[2]), coord(1)),
            )),
            smooth::add(cst(m[3]), smooth::add(
                smooth::mul(cst(m[4]), coord(0)),
                smooth::mul(cst(m[5]), coord(1)),
            )),
        ]).unwrap();
        let sigma = SingularCube::new(CubeBox::unit(2), rep, plane).unwrap();
        let rule = QuadratureRule::new(12);
        let r = stokes_residual(&alpha, &sigma, &rule).unwrap();
        prop_assert!(r < 1e-8, "stokes residual {r}");
    }

    /// Pullback functoriality: pairing the pulled-back form on a cube equals
    /// pairing the form on the composed cube.
    #[test]
    fn pullback_functoriality(
        a in arb_coeffs(),
        f1 in arb_coeffs(),
        f2 in arb_coeffs(),
        seg in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let plane = SpaceModel::euclidean(2);
        let omega = GeneratorForm::from_reps(
            plane.clone(),
            1,
            vec![(1.0, vec![
                SmoothMap::scalar(2, poly2(&a)).unwrap(),
                SmoothMap::scalar(2, coord(0)).unwrap(),
            ])],
        ).unwrap();
        let map = SmoothMap::new(2, vec![poly2(&f1), poly2(&f2)]).unwrap();
        let pulled = omega.pullback(&map, &plane).unwrap();
        let rep = SmoothMap::new(1, vec![
            smooth::add(cst(seg[0]), smooth::mul(cst(seg[1]), coord(0))),
            smooth::add(cst(seg[2]), smooth::mul(cst(seg[3]), coord(0))),
        ]).unwrap();
        let sigma = SingularCube::new(CubeBox::unit(1), rep.clone(), plane.clone()).unwrap();
        let composed = SingularCube::new(
            CubeBox::unit(1),
            SmoothMap::compose(&map, &rep).unwrap(),
            plane,
        ).unwrap();
        let rule = QuadratureRule::new(16);
        let lhs = lambda_eval(&pulled, &sigma, &rule).unwrap();
        let rhs = lambda_eval(&omega, &composed, &rule).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    /// The closure property of generated structures: evaluating an outer
    /// composition over elements agrees with composing values.
    #[test]
    fn generated_structure_closure(
        a in arb_coeffs(),
        b in arb_coeffs(),
        (x, y) in arb_point(),
    ) {
        let plane = SpaceModel::euclidean(2);
        let e1 = plane.element(SmoothMap::scalar(2, poly2(&a)).unwrap()).unwrap();
        let e2 = plane.element(SmoothMap::scalar(2, poly2(&b)).unwrap()).unwrap();
        let outer = SmoothMap::scalar(
            2,
            smooth::add(smooth::mul(coord(0), coord(1)), coord(0)),
        ).unwrap();
        let inner = SmoothMap::stack(2, &[e1.rep.clone(), e2.rep.clone()]).unwrap();
        let composite = SmoothMap::compose(&outer, &inner).unwrap();
        let lhs = composite.evaluate(&[x, y]).unwrap()[0];
        let v1 = e1.evaluate(&[x, y]).unwrap();
        let v2 = e2.evaluate(&[x, y]).unwrap();
        prop_assert_eq!(lhs, v1 * v2 + v1);
    }
}
