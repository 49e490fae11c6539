//! Integration along the interval fiber: the dual prism operator K*, forms on
//! I x S in dt-split shape, the cochain homotopy identity, and antiderivatives
//! of closed forms on contractible models.
//!
//! A form on I x S is *split* when every term is either
//! `a dt ∧ df_1 ∧ ... ∧ df_p` with the interval coordinate occupying the first
//! differential slot and every f_j independent of it (type 1), or has no dt
//! factor at all (type 2). K* integrates the coefficient of a type-1 term over
//! the fiber and kills type-2 terms; the fiber integral is materialized as a
//! fixed-node quadrature sum baked into a new expression tree, so the result
//! is again a bona fide generator form.

use crate::error::{Error, Result};
use crate::forms::{lambda_eval, GeneratorForm};
use crate::quad::{GaussLegendre, QuadratureRule};
use crate::smooth::{self, SmoothMap};
use crate::space::{product_with_interval, SpaceRef};

/// Fixed order of the fiber-integral quadrature baked into K* coefficients.
pub const FIBER_QUAD_ORDER: usize = 16;

enum TermShape {
    /// a dt ∧ df_1 ∧ ... ∧ df_p
    WithDt,
    /// no dt factor
    NoDt,
}

/// Classify one tuple of a form on a product space I x S (interval coordinate
/// first). Errors when the tuple mixes the interval coordinate into
/// non-canonical positions.
fn classify(tuple: &[SmoothMap]) -> Result<TermShape> {
    let diffs = &tuple[1..];
    let is_t = |m: &SmoothMap| m.output_is_coord(0, 0);
    if let Some(first) = diffs.first() {
        if is_t(first) {
            for f in &diffs[1..] {
                if f.mentions_input(0) {
                    return Err(Error::NonCanonicalForm(format!(
                        "differential entry {f} depends on the interval coordinate"
                    )));
                }
            }
            return Ok(TermShape::WithDt);
        }
    }
    for f in diffs {
        if f.mentions_input(0) {
            return Err(Error::NonCanonicalForm(format!(
                "dt factor in non-leading position or t-dependent entry {f}"
            )));
        }
    }
    Ok(TermShape::NoDt)
}

/// Restrict a t-independent scalar map on R^{1+n} to R^n.
fn drop_interval_coord(f: &SmoothMap, n: usize) -> SmoothMap {
    let mut outputs = vec![smooth::cst(0.0)];
    outputs.extend((0..n).map(smooth::coord));
    let embed = SmoothMap::new(n, outputs).unwrap();
    SmoothMap::compose(f, &embed).unwrap()
}

/// ∫₀¹ a(t, ·) dt as an expression tree: a Gauss-Legendre sum of the
/// coefficient with the interval coordinate pinned at each node.
fn fiber_integral(a: &SmoothMap, n: usize) -> SmoothMap {
    let line = GaussLegendre::new(FIBER_QUAD_ORDER);
    let mut acc = smooth::cst(0.0);
    for (node, weight) in line.nodes.iter().zip(&line.weights) {
        let t = 0.5 + 0.5 * node;
        let w = 0.5 * weight;
        let mut outputs = vec![smooth::cst(t)];
        outputs.extend((0..n).map(smooth::coord));
        let pin = SmoothMap::new(n, outputs).unwrap();
        let pinned = SmoothMap::compose(a, &pin).unwrap();
        acc = smooth::add(acc, smooth::mul(smooth::cst(w), pinned.output(0).clone()));
    }
    SmoothMap::scalar(n, acc).unwrap()
}

/// The dual prism operator K* on a split-shaped form over I x S: type-2 terms
/// map to zero, a type-1 term `a dt ∧ df_1 ∧ ... ∧ df_p` maps to
/// `(∫₀¹ a dt) df_1 ∧ ... ∧ df_p` on S.
pub fn prism_pullback(omega: &GeneratorForm, base: &SpaceRef) -> Result<GeneratorForm> {
    let degree = omega.degree();
    if degree == 0 {
        return Err(Error::dim(
            "prism pullback lowers degree; it is undefined on 0-forms",
        ));
    }
    if omega.space.ambient_dim != base.ambient_dim + 1 {
        return Err(Error::dim(
            "form must live on the interval product of the base space",
        ));
    }
    let n = base.ambient_dim;
    let mut terms = Vec::new();
    for (c, tuple) in omega.terms() {
        match classify(tuple)? {
            TermShape::NoDt => {}
            TermShape::WithDt => {
                let mut out = Vec::with_capacity(degree);
                out.push(fiber_integral(&tuple[0], n));
                for f in &tuple[2..] {
                    out.push(drop_interval_coord(f, n));
                }
                terms.push((*c, out));
            }
        }
    }
    if terms.is_empty() {
        return Ok(GeneratorForm::zero(base.clone(), degree - 1));
    }
    GeneratorForm::from_reps(base.clone(), degree - 1, terms)
}

/// Exterior derivative of a split-shaped form, expressed again in split shape
/// (coefficients differentiate along the fiber and along ambient coordinates).
/// Agrees with the tuple-prepending derivative in every pairing; this version
/// exists so the result can be fed to K*.
pub fn split_exterior_derivative(omega: &GeneratorForm) -> Result<GeneratorForm> {
    let dim = omega.space.ambient_dim; // 1 + n
    if dim == 0 {
        return Err(Error::dim("split derivative needs a product space"));
    }
    let n = dim - 1;
    let t_map = SmoothMap::scalar(dim, smooth::coord(0)).unwrap();
    let coord_map = |k: usize| SmoothMap::scalar(dim, smooth::coord(k)).unwrap();

    let mut terms = Vec::new();
    for (c, tuple) in omega.terms() {
        let a = &tuple[0];
        match classify(tuple)? {
            TermShape::WithDt => {
                // d(a dt ∧ df…) = -Σ_k ∂a/∂x_k dt ∧ dx_k ∧ df…
                for k in 1..=n {
                    let da = a.partial(k)?;
                    if is_zero_map(&da) {
                        continue;
                    }
                    let mut out = vec![da, t_map.clone(), coord_map(k)];
                    out.extend(tuple[2..].iter().cloned());
                    terms.push((-c, out));
                }
            }
            TermShape::NoDt => {
                // d(a df…) = ∂a/∂t dt ∧ df… + Σ_k ∂a/∂x_k dx_k ∧ df…
                let dt_part = a.partial(0)?;
                if !is_zero_map(&dt_part) {
                    let mut out = vec![dt_part, t_map.clone()];
                    out.extend(tuple[1..].iter().cloned());
                    terms.push((*c, out));
                }
                for k in 1..=n {
                    let da = a.partial(k)?;
                    if is_zero_map(&da) {
                        continue;
                    }
                    let mut out = vec![da, coord_map(k)];
                    out.extend(tuple[1..].iter().cloned());
                    terms.push((*c, out));
                }
            }
        }
    }
    if terms.is_empty() {
        return Ok(GeneratorForm::zero(omega.space.clone(), omega.degree() + 1));
    }
    GeneratorForm::from_reps(omega.space.clone(), omega.degree() + 1, terms)
}

fn is_zero_map(m: &SmoothMap) -> bool {
    matches!(&**m.output(0), smooth::Expr::Const(v) if *v == 0.0)
}

/// Pullback along the endpoint inclusion u_i: S -> I x S.
pub fn endpoint_pullback(omega: &GeneratorForm, base: &SpaceRef, end: u8) -> Result<GeneratorForm> {
    let n = base.ambient_dim;
    let mut outputs = vec![smooth::cst(end as f64)];
    outputs.extend((0..n).map(smooth::coord));
    let inclusion = SmoothMap::new(n, outputs)?;
    omega.pullback(&inclusion, base)
}

/// Pullback of a form on S along a contraction-style map
/// h: I x S -> S, expanded into dt-split shape over the product coordinates:
/// each pulled-back differential d(f_i ∘ h) is resolved into its dt component
/// and ambient-coordinate components, with the t-dependence pushed into the
/// coefficients.
pub fn contraction_pullback_split(
    h: &SmoothMap,
    alpha: &GeneratorForm,
    base: &SpaceRef,
) -> Result<GeneratorForm> {
    let n = base.ambient_dim;
    if h.input_dim() != n + 1 || h.output_dim() != n {
        return Err(Error::dim(format!(
            "contraction must map R^{} to R^{}",
            n + 1,
            n
        )));
    }
    let product = product_with_interval(base)?;
    let q = alpha.degree();
    let t_map = SmoothMap::scalar(n + 1, smooth::coord(0)).unwrap();
    let coord_map = |k: usize| SmoothMap::scalar(n + 1, smooth::coord(k)).unwrap();

    let mut terms: Vec<(f64, Vec<SmoothMap>)> = Vec::new();
    for (c, tuple) in alpha.terms() {
        let pulled: Vec<SmoothMap> = tuple
            .iter()
            .map(|f| SmoothMap::compose(f, h))
            .collect::<Result<Vec<_>>>()?;
        let g0 = &pulled[0];
        // partials of each differential entry: index 0 is the fiber direction,
        // 1..=n the ambient directions
        let mut partials: Vec<Vec<SmoothMap>> = Vec::with_capacity(q);
        for g in &pulled[1..] {
            let mut row = Vec::with_capacity(n + 1);
            for k in 0..=n {
                row.push(g.partial(k)?);
            }
            partials.push(row);
        }
        // multilinear expansion: each slot picks dt (index 0) or dx_k
        let mut choice = vec![0usize; q];
        expand(
            &mut choice,
            0,
            q,
            n,
            &partials,
            g0,
            *c,
            &t_map,
            &coord_map,
            &mut terms,
        );
    }
    if terms.is_empty() {
        return Ok(GeneratorForm::zero(product, q));
    }
    GeneratorForm::from_reps(product, q, terms)
}

#[allow(clippy::too_many_arguments)]
fn expand(
    choice: &mut Vec<usize>,
    slot: usize,
    q: usize,
    n: usize,
    partials: &[Vec<SmoothMap>],
    g0: &SmoothMap,
    coeff: f64,
    t_map: &SmoothMap,
    coord_map: &dyn Fn(usize) -> SmoothMap,
    out: &mut Vec<(f64, Vec<SmoothMap>)>,
) {
    if slot == q {
        let dt_slots: Vec<usize> = (0..q).filter(|&i| choice[i] == 0).collect();
        if dt_slots.len() >= 2 {
            return; // dt ∧ dt = 0
        }
        // coefficient tree: g0 times the chosen partial of each slot
        let mut acc = g0.output(0).clone();
        for (i, &k) in choice.iter().enumerate() {
            let factor = partials[i][k].output(0).clone();
            if matches!(&*factor, smooth::Expr::Const(v) if *v == 0.0) {
                return;
            }
            acc = smooth::mul(acc, factor);
        }
        let dim = g0.input_dim();
        let coeff_map = SmoothMap::scalar(dim, acc).unwrap();
        if let Some(&i) = dt_slots.first() {
            // move dt to the front: sign (-1)^i
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let mut tuple = vec![coeff_map, t_map.clone()];
            for (j, &k) in choice.iter().enumerate() {
                if j != i {
                    tuple.push(coord_map(k));
                }
            }
            out.push((coeff * sign, tuple));
        } else {
            let mut tuple = vec![coeff_map];
            for &k in choice.iter() {
                tuple.push(coord_map(k));
            }
            out.push((coeff, tuple));
        }
        return;
    }
    for k in 0..=n {
        choice[slot] = k;
        expand(
            choice,
            slot + 1,
            q,
            n,
            partials,
            g0,
            coeff,
            t_map,
            coord_map,
            out,
        );
    }
}

/// Verify contraction endpoint identities h(1, x) = x and h(0, x) = x0 by
/// sampling, returning the base point.
pub fn check_contraction_endpoints(
    h: &SmoothMap,
    base: &SpaceRef,
    rng: &mut rand_chacha::ChaCha8Rng,
    samples: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let mut base_point: Option<Vec<f64>> = None;
    for _ in 0..samples {
        let x = base.sampler.sample(rng)?;
        let mut arg = vec![1.0];
        arg.extend(&x);
        let at_one = h.evaluate(&arg)?;
        for (a, b) in at_one.iter().zip(&x) {
            if (a - b).abs() > tol {
                return Err(Error::Precondition(format!(
                    "h(1, x) = {at_one:?} differs from x = {x:?}"
                )));
            }
        }
        arg[0] = 0.0;
        let at_zero = h.evaluate(&arg)?;
        match &base_point {
            None => base_point = Some(at_zero),
            Some(p) => {
                for (a, b) in at_zero.iter().zip(p) {
                    if (a - b).abs() > tol {
                        return Err(Error::Precondition(
                            "h(0, ·) is not constant on samples".into(),
                        ));
                    }
                }
            }
        }
    }
    base_point.ok_or_else(|| Error::Precondition("no samples drawn".into()))
}

/// Diagnostics produced alongside a Poincare antiderivative.
#[derive(Clone, Debug)]
pub struct AntiderivativeReport {
    pub closedness_residual: f64,
    pub max_defect: f64,
}

/// Antiderivative of a certified-closed form on a contractible model:
/// β = K*(h*α) with the pullback produced in split shape. The closedness
/// certificate pairs dα against `closedness_battery`; the contract
/// ⟨dβ - α, σ⟩ is checked on `check_cubes`.
pub fn poincare_antiderivative(
    alpha: &GeneratorForm,
    h: &SmoothMap,
    base: &SpaceRef,
    closedness_battery: &[crate::chains::SingularCube],
    check_cubes: &[crate::chains::SingularCube],
    rule: &QuadratureRule,
    tol: f64,
) -> Result<(GeneratorForm, AntiderivativeReport)> {
    if alpha.degree() == 0 {
        return Err(Error::dim(
            "degree-0 antiderivatives are the locally-constant check; see locally_constant_residual",
        ));
    }
    let d_alpha = alpha.exterior_derivative();
    let mut closedness = 0.0f64;
    for sigma in closedness_battery {
        closedness = closedness.max(lambda_eval(&d_alpha, sigma, rule)?.abs());
    }
    if closedness > tol {
        return Err(Error::NotClosed(format!(
            "max |⟨dα, σ⟩| = {closedness:.3e} exceeds {tol:.1e}"
        )));
    }

    let omega = contraction_pullback_split(h, alpha, base)?;
    let beta = prism_pullback(&omega, base)?;

    let defect_form = beta.exterior_derivative().sub(alpha.clone())?;
    let mut max_defect = 0.0f64;
    for sigma in check_cubes {
        max_defect = max_defect.max(lambda_eval(&defect_form, sigma, rule)?.abs());
    }
    Ok((
        beta,
        AntiderivativeReport {
            closedness_residual: closedness,
            max_defect,
        },
    ))
}

/// Degree-0 counterpart: a function with vanishing differential on a
/// contractible model is constant; returns max |f(x) - f(x0)| over samples.
pub fn locally_constant_residual(
    f: &crate::space::StructureElement,
    base_point: &[f64],
    rng: &mut rand_chacha::ChaCha8Rng,
    samples: usize,
) -> Result<f64> {
    let f0 = f.evaluate(base_point)?;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = f.space.sampler.sample(rng)?;
        worst = worst.max((f.evaluate(&x)? - f0).abs());
    }
    Ok(worst)
}

/// Residual of the cochain homotopy identity on a split form ω over I x S:
/// max over `battery` of |⟨dK*ω + K*dω - (u1*ω - u0*ω), σ⟩|.
pub fn homotopy_identity_residual(
    omega: &GeneratorForm,
    base: &SpaceRef,
    battery: &[crate::chains::SingularCube],
    rule: &QuadratureRule,
) -> Result<f64> {
    let k_omega = prism_pullback(omega, base)?;
    let d_k = k_omega.exterior_derivative();
    let k_d = prism_pullback(&split_exterior_derivative(omega)?, base)?;
    let u1 = endpoint_pullback(omega, base, 1)?;
    let u0 = endpoint_pullback(omega, base, 0)?;
    let lhs = d_k.add(k_d)?;
    let rhs = u1.sub(u0)?;
    let mut worst = 0.0f64;
    for sigma in battery {
        let a = lambda_eval(&lhs, sigma, rule)?;
        let b = lambda_eval(&rhs, sigma, rule)?;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Degree-0 homotopy identity K*(dF) = u1*F - u0*F for a function F on I x S,
/// evaluated at sampled points of the base.
pub fn homotopy_identity_residual_deg0(
    f: &SmoothMap,
    base: &SpaceRef,
    rng: &mut rand_chacha::ChaCha8Rng,
    samples: usize,
) -> Result<f64> {
    let product = product_with_interval(base)?;
    let zero_form = GeneratorForm::from_reps(product, 0, vec![(1.0, vec![f.clone()])])?;
    let df = split_exterior_derivative(&zero_form)?;
    let k_df = prism_pullback(&df, base)?;
    let n = base.ambient_dim;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = base.sampler.sample(rng)?;
        let lhs = k_df.terms().iter().try_fold(0.0, |acc, (c, tuple)| {
            tuple[0].evaluate_scalar(&x).map(|v| acc + c * v)
        })?;
        let mut arg1 = vec![1.0];
        arg1.extend(&x);
        let mut arg0 = vec![0.0];
        arg0.extend(&x);
        let rhs = f.evaluate_scalar(&arg1)? - f.evaluate_scalar(&arg0)?;
        let _ = n;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{CubeBox, SingularCube};
    use crate::forms::DEFAULT_QUAD_ORDER;
    use crate::smooth::{add, coord, cst, mul, pow, sub};
    use crate::space::SpaceModel;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn rule() -> QuadratureRule {
        QuadratureRule::new(DEFAULT_QUAD_ORDER)
    }

    #[test]
    fn fiber_integral_of_dt_is_one() {
        // ω = dt = λ₁(1, t) on I x R⁰-like line; use base R¹ and ignore x
        let line = SpaceModel::euclidean(1);
        let product = product_with_interval(&line).unwrap();
        let omega = GeneratorForm::from_reps(
            product,
            1,
            vec![(
                1.0,
                vec![
                    SmoothMap::constant(2, &[1.0]),
                    SmoothMap::scalar(2, coord(0)).unwrap(),
                ],
            )],
        )
        .unwrap();
        let k = prism_pullback(&omega, &line).unwrap();
        assert_eq!(k.degree(), 0);
        // the 0-form has constant value 1
        let v = k.terms()[0].1[0].evaluate(&[0.37]).unwrap()[0];
        assert_relative_eq!(v, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn t_dt_wedge_dx_halves() {
        // ω = t dt ∧ dx on I x R pulls back to (1/2) dx
        let line = SpaceModel::euclidean(1);
        let product = product_with_interval(&line).unwrap();
        let omega = GeneratorForm::from_reps(
            product,
            2,
            vec![(
                1.0,
                vec![
                    SmoothMap::scalar(2, coord(0)).unwrap(),
                    SmoothMap::scalar(2, coord(0)).unwrap(),
                    SmoothMap::scalar(2, coord(1)).unwrap(),
                ],
            )],
        )
        .unwrap();
        let k = prism_pullback(&omega, &line).unwrap();
        let seg = SingularCube::identity_on(CubeBox::new(vec![(0.0, 3.0)]).unwrap(), line).unwrap();
        assert_relative_eq!(
            lambda_eval(&k, &seg, &rule()).unwrap(),
            1.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn no_dt_terms_die() {
        // ω = dx ∧ dy on I x R² has no dt factor
        let plane = SpaceModel::euclidean(2);
        let product = product_with_interval(&plane).unwrap();
        let omega = GeneratorForm::from_reps(
            product,
            2,
            vec![(
                1.0,
                vec![
                    SmoothMap::constant(3, &[1.0]),
                    SmoothMap::scalar(3, coord(1)).unwrap(),
                    SmoothMap::scalar(3, coord(2)).unwrap(),
                ],
            )],
        )
        .unwrap();
        let k = prism_pullback(&omega, &plane).unwrap();
        assert_eq!(k.degree(), 1);
        assert!(k.terms().is_empty());
    }

    #[test]
    fn non_canonical_terms_are_rejected() {
        // dx ∧ dt has the interval factor in the wrong slot
        let plane = SpaceModel::euclidean(2);
        let product = product_with_interval(&plane).unwrap();
        let omega = GeneratorForm::from_reps(
            product,
            2,
            vec![(
                1.0,
                vec![
                    SmoothMap::constant(3, &[1.0]),
                    SmoothMap::scalar(3, coord(1)).unwrap(),
                    SmoothMap::scalar(3, coord(0)).unwrap(),
                ],
            )],
        )
        .unwrap();
        assert!(matches!(
            prism_pullback(&omega, &plane),
            Err(Error::NonCanonicalForm(_))
        ));
    }

    #[test]
    fn split_derivative_matches_tuple_derivative_in_pairings() {
        let plane = SpaceModel::euclidean(2);
        let product = product_with_interval(&plane).unwrap();
        // ω = (t² x) dt ∧ dy + (x y) dx ∧ dy, split-shaped by construction
        let omega = GeneratorForm::from_reps(
            product.clone(),
            2,
            vec![
                (
                    1.0,
                    vec![
                        SmoothMap::scalar(3, mul(pow(coord(0), 2), coord(1))).unwrap(),
                        SmoothMap::scalar(3, coord(0)).unwrap(),
                        SmoothMap::scalar(3, coord(2)).unwrap(),
                    ],
                ),
                (
                    0.5,
                    vec![
                        SmoothMap::scalar(3, mul(coord(1), coord(2))).unwrap(),
                        SmoothMap::scalar(3, coord(1)).unwrap(),
                        SmoothMap::scalar(3, coord(2)).unwrap(),
                    ],
                ),
            ],
        )
        .unwrap();
        let split_d = split_exterior_derivative(&omega).unwrap();
        let tuple_d = omega.exterior_derivative();
        let mut rng = crate::seeded_rng(17);
        let battery: Vec<SingularCube> = (0..5)
            .map(|_| crate::fixtures::random_product_cube(&product, 3, &mut rng))
            .collect();
        let dist = crate::forms::pairing_distance(&split_d, &tuple_d, &battery, &rule()).unwrap();
        assert!(dist < 1e-9, "split and tuple derivatives differ by {dist}");
    }

    #[test]
    fn antiderivative_of_exact_one_form_on_the_plane() {
        // α = d(xy) = y dx + x dy with the radial contraction h(t, x) = t x
        let plane = SpaceModel::euclidean(2);
        let alpha = GeneratorForm::from_reps(
            plane.clone(),
            1,
            vec![
                (
                    1.0,
                    vec![
                        SmoothMap::scalar(2, coord(1)).unwrap(),
                        SmoothMap::scalar(2, coord(0)).unwrap(),
                    ],
                ),
                (
                    1.0,
                    vec![
                        SmoothMap::scalar(2, coord(0)).unwrap(),
                        SmoothMap::scalar(2, coord(1)).unwrap(),
                    ],
                ),
            ],
        )
        .unwrap();
        let h = SmoothMap::new(3, vec![mul(coord(0), coord(1)), mul(coord(0), coord(2))]).unwrap();
        let mut rng = crate::seeded_rng(23);
        check_contraction_endpoints(&h, &plane, &mut rng, 10, 1e-12).unwrap();

        let battery: Vec<SingularCube> = (0..8)
            .map(|_| crate::fixtures::random_cube(&plane, 2, &mut rng))
            .collect();
        let checks: Vec<SingularCube> = (0..12)
            .map(|_| crate::fixtures::random_segment(&plane, &mut rng))
            .collect();
        let (beta, report) =
            poincare_antiderivative(&alpha, &h, &plane, &battery, &checks, &rule(), 1e-8).unwrap();
        assert!(report.max_defect < 1e-8, "defect {}", report.max_defect);

        // β should telescope like xy along boundaries
        let seg = crate::fixtures::random_segment(&plane, &mut rng);
        let ends = crate::chains::boundary_of_cube(&seg).unwrap();
        let direct = crate::forms::pair_chain(
            &GeneratorForm::from_reps(
                plane.clone(),
                0,
                vec![(
                    1.0,
                    vec![SmoothMap::scalar(2, mul(coord(0), coord(1))).unwrap()],
                )],
            )
            .unwrap(),
            &ends,
            &rule(),
        )
        .unwrap();
        let via_beta = crate::forms::pair_chain(&beta, &ends, &rule()).unwrap();
        assert_abs_diff_eq!(direct, via_beta, epsilon = 1e-8);
    }

    #[test]
    fn antiderivative_of_area_form() {
        // α = dx ∧ dy on the plane with radial contraction
        let plane = SpaceModel::euclidean(2);
        let alpha = GeneratorForm::from_reps(
            plane.clone(),
            2,
            vec![(
                1.0,
                vec![
                    SmoothMap::constant(2, &[1.0]),
                    SmoothMap::scalar(2, coord(0)).unwrap(),
                    SmoothMap::scalar(2, coord(1)).unwrap(),
                ],
            )],
        )
        .unwrap();
        let h = SmoothMap::new(3, vec![mul(coord(0), coord(1)), mul(coord(0), coord(2))]).unwrap();
        let mut rng = crate::seeded_rng(31);
        let battery: Vec<SingularCube> = (0..4)
            .map(|_| crate::fixtures::random_cube(&plane, 3, &mut rng))
            .collect();
        let checks: Vec<SingularCube> = (0..10)
            .map(|_| crate::fixtures::random_cube(&plane, 2, &mut rng))
            .collect();
        let (_, report) =
            poincare_antiderivative(&alpha, &h, &plane, &battery, &checks, &rule(), 1e-8).unwrap();
        assert!(report.max_defect < 1e-8, "defect {}", report.max_defect);
    }

    #[test]
    fn closedness_gate_rejects_non_closed_forms() {
        // α = x dy is not closed
        let plane = SpaceModel::euclidean(2);
        let alpha = GeneratorForm::from_reps(
            plane.clone(),
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
        let h = SmoothMap::new(3, vec![mul(coord(0), coord(1)), mul(coord(0), coord(2))]).unwrap();
        let square = SingularCube::identity_on(CubeBox::unit(2), plane.clone()).unwrap();
        let err = poincare_antiderivative(&alpha, &h, &plane, &[square], &[], &rule(), 1e-8);
        assert!(matches!(err, Err(Error::NotClosed(_))));
    }

    #[test]
    fn degree_zero_constancy() {
        let plane = SpaceModel::euclidean(2);
        let f = plane.element(SmoothMap::constant(2, &[4.25])).unwrap();
        let mut rng = crate::seeded_rng(41);
        let r = locally_constant_residual(&f, &[0.0, 0.0], &mut rng, 40).unwrap();
        assert_eq!(r, 0.0);

        // x - y is not constant
        let g = plane
            .element(SmoothMap::scalar(2, sub(coord(0), coord(1))).unwrap())
            .unwrap();
        let r = locally_constant_residual(&g, &[0.0, 0.0], &mut rng, 40).unwrap();
        assert!(r > 0.1);
    }

    #[test]
    fn homotopy_identity_on_product_forms() {
        let plane = SpaceModel::euclidean(2);
        let product = product_with_interval(&plane).unwrap();
        // mixed battery member: (t x + y) dt ∧ dx + (x²) dx ∧ dy
        let omega = GeneratorForm::from_reps(
            product.clone(),
            2,
            vec![
                (
                    1.0,
                    vec![
                        SmoothMap::scalar(3, add(mul(coord(0), coord(1)), coord(2))).unwrap(),
                        SmoothMap::scalar(3, coord(0)).unwrap(),
                        SmoothMap::scalar(3, coord(1)).unwrap(),
                    ],
                ),
                (
                    1.0,
                    vec![
                        SmoothMap::scalar(3, pow(coord(1), 2)).unwrap(),
                        SmoothMap::scalar(3, coord(1)).unwrap(),
                        SmoothMap::scalar(3, coord(2)).unwrap(),
                    ],
                ),
            ],
        )
        .unwrap();
        let mut rng = crate::seeded_rng(13);
        let battery: Vec<SingularCube> = (0..6)
            .map(|_| crate::fixtures::random_cube(&plane, 2, &mut rng))
            .collect();
        let r = homotopy_identity_residual(&omega, &plane, &battery, &rule()).unwrap();
        assert!(r < 1e-7, "residual {r}");

        // degree-0 case: F = t² x + y
        let f = SmoothMap::scalar(3, add(mul(pow(coord(0), 2), coord(1)), coord(2))).unwrap();
        let r0 = homotopy_identity_residual_deg0(&f, &plane, &mut rng, 30).unwrap();
        assert!(r0 < 1e-12, "residual {r0}");
        let _ = cst(0.0);
    }
}
