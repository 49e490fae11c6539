//! Generator-tuple differential forms evaluated by quadrature against
//! singular cubes.
//!
//! A degree-p form is a real-linear combination of (p+1)-tuples
//! (f_0, ..., f_p) of structure elements. Its value on a p-cube σ with
//! representative f is the quadrature of g_0 · det DG over the box, where
//! g_i = f_i ∘ f and G = (g_1, ..., g_p). Degree 0 is evaluation of f_0 at
//! the image point. Exterior derivative prepends the constant-one function;
//! wedge multiplies the leading functions and concatenates the differentials;
//! pullback composes tuple-wise.

use rand_chacha::ChaCha8Rng;

use crate::chains::{boundary_of_cube, CubicalChain, SingularCube};
use crate::error::{Error, Result};
use crate::quad::QuadratureRule;
use crate::smooth::SmoothMap;
use crate::space::{SpaceRef, StructureElement};

/// Default and escalated quadrature orders, with the relative-disagreement
/// threshold that triggers escalation.
pub const DEFAULT_QUAD_ORDER: usize = 12;
pub const ESCALATED_QUAD_ORDER: usize = 24;
pub const ESCALATION_RTOL: f64 = 1e-10;
/// Values this small are indistinguishable from zero; relative disagreement
/// below the floor never triggers escalation.
pub const ESCALATION_ABS_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct GeneratorForm {
    pub space: SpaceRef,
    degree: usize,
    /// Each term: coefficient and the (degree+1)-tuple of representatives.
    terms: Vec<(f64, Vec<SmoothMap>)>,
}

impl GeneratorForm {
    /// Build a form from (coefficient, tuple) pairs of structure elements.
    pub fn new(degree: usize, terms: Vec<(f64, Vec<StructureElement>)>) -> Result<Self> {
        let space = terms
            .first()
            .and_then(|(_, t)| t.first())
            .map(|e| e.space.clone())
            .ok_or_else(|| Error::Construction("form needs at least one term".into()))?;
        let mut raw = Vec::with_capacity(terms.len());
        for (c, tuple) in terms {
            if tuple.len() != degree + 1 {
                return Err(Error::dim(format!(
                    "degree-{degree} form takes {}-tuples, got {}",
                    degree + 1,
                    tuple.len()
                )));
            }
            for e in &tuple {
                if !std::sync::Arc::ptr_eq(&e.space, &space) {
                    return Err(Error::Construction(
                        "all tuple entries must live on the same space".into(),
                    ));
                }
            }
            raw.push((c, tuple.into_iter().map(|e| e.rep).collect()));
        }
        Ok(GeneratorForm {
            space,
            degree,
            terms: raw,
        })
    }

    /// Build directly from representatives, checking dimensions only.
    pub fn from_reps(
        space: SpaceRef,
        degree: usize,
        terms: Vec<(f64, Vec<SmoothMap>)>,
    ) -> Result<Self> {
        for (_, tuple) in &terms {
            if tuple.len() != degree + 1 {
                return Err(Error::dim(format!(
                    "degree-{degree} form takes {}-tuples, got {}",
                    degree + 1,
                    tuple.len()
                )));
            }
            for m in tuple {
                if m.input_dim() != space.ambient_dim || m.output_dim() != 1 {
                    return Err(Error::dim(format!(
                        "tuple entries must be scalar maps on R^{}",
                        space.ambient_dim
                    )));
                }
            }
        }
        Ok(GeneratorForm {
            space,
            degree,
            terms,
        })
    }

    pub fn zero(space: SpaceRef, degree: usize) -> Self {
        GeneratorForm {
            space,
            degree,
            terms: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[(f64, Vec<SmoothMap>)] {
        &self.terms
    }

    pub fn scale(mut self, c: f64) -> Self {
        for t in &mut self.terms {
            t.0 *= c;
        }
        self
    }

    pub fn add(mut self, other: GeneratorForm) -> Result<Self> {
        if self.degree != other.degree {
            return Err(Error::dim("cannot add forms of different degree"));
        }
        self.terms.extend(other.terms);
        Ok(self)
    }

    pub fn sub(self, other: GeneratorForm) -> Result<Self> {
        self.add(other.scale(-1.0))
    }

    /// Exterior derivative: prepend the constant-one function to each tuple.
    pub fn exterior_derivative(&self) -> GeneratorForm {
        let one = SmoothMap::constant(self.space.ambient_dim, &[1.0]);
        let terms = self
            .terms
            .iter()
            .map(|(c, tuple)| {
                let mut t = Vec::with_capacity(tuple.len() + 1);
                t.push(one.clone());
                t.extend(tuple.iter().cloned());
                (*c, t)
            })
            .collect();
        GeneratorForm {
            space: self.space.clone(),
            degree: self.degree + 1,
            terms,
        }
    }

    /// Exterior product. The leading functions multiply and the differential
    /// slots concatenate, matching the integral characterization
    /// ∫ f*(α) ∧ f*(β) of the product on represented cubes.
    pub fn wedge(&self, other: &GeneratorForm) -> Result<GeneratorForm> {
        if !std::sync::Arc::ptr_eq(&self.space, &other.space) {
            return Err(Error::Construction(
                "wedge factors must live on the same space".into(),
            ));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (c1, t1) in &self.terms {
            for (c2, t2) in &other.terms {
                let lead = SmoothMap::scalar(
                    self.space.ambient_dim,
                    crate::smooth::mul(t1[0].output(0).clone(), t2[0].output(0).clone()),
                )?;
                let mut tuple = Vec::with_capacity(self.degree + other.degree + 1);
                tuple.push(lead);
                tuple.extend(t1[1..].iter().cloned());
                tuple.extend(t2[1..].iter().cloned());
                terms.push((c1 * c2, tuple));
            }
        }
        Ok(GeneratorForm {
            space: self.space.clone(),
            degree: self.degree + other.degree,
            terms,
        })
    }

    /// Pullback along a map F into this form's space: tuple-wise composition.
    /// `source` is the domain space of F.
    pub fn pullback(&self, map: &SmoothMap, source: &SpaceRef) -> Result<GeneratorForm> {
        if map.input_dim() != source.ambient_dim || map.output_dim() != self.space.ambient_dim {
            return Err(Error::dim(format!(
                "pullback map must send R^{} to R^{}",
                source.ambient_dim, self.space.ambient_dim
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|(c, tuple)| {
                let t = tuple
                    .iter()
                    .map(|f| SmoothMap::compose(f, map))
                    .collect::<Result<Vec<_>>>()?;
                Ok((*c, t))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GeneratorForm {
            space: source.clone(),
            degree: self.degree,
            terms,
        })
    }

    /// Check by sampling that `map` sends `source` into this form's space.
    pub fn pullback_checked(
        &self,
        map: &SmoothMap,
        source: &SpaceRef,
        rng: &mut ChaCha8Rng,
        samples: usize,
    ) -> Result<GeneratorForm> {
        for _ in 0..samples {
            let x = source.sampler.sample(rng)?;
            let y = map.evaluate(&x)?;
            if !self.space.contains(&y) {
                return Err(Error::Membership(format!(
                    "pullback map sends {x:?} to {y:?}, outside `{}`",
                    self.space.name
                )));
            }
        }
        self.pullback(map, source)
    }
}

/// Determinant of a small dense matrix by LU with partial pivoting. A row of
/// zeros (a constant tuple entry) short-circuits to exactly 0.
fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    if n == 0 {
        return 1.0;
    }
    for row in &m {
        if row.iter().all(|&v| v == 0.0) {
            return 0.0;
        }
    }
    let mut sign = 1.0;
    for k in 0..n {
        let mut piv = k;
        let mut best = m[k][k].abs();
        for r in (k + 1)..n {
            if m[r][k].abs() > best {
                best = m[r][k].abs();
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap(piv, k);
            sign = -sign;
        }
        let d = m[k][k];
        for r in (k + 1)..n {
            let factor = m[r][k] / d;
            if factor != 0.0 {
                for c in k..n {
                    let v = m[k][c];
                    m[r][c] -= factor * v;
                }
            }
        }
    }
    let mut acc = sign;
    for (k, row) in m.iter().enumerate() {
        acc *= row[k];
    }
    acc
}

/// Value of a form on a singular cube: quadrature of g_0 det DG over the box.
pub fn lambda_eval(
    form: &GeneratorForm,
    sigma: &SingularCube,
    rule: &QuadratureRule,
) -> Result<f64> {
    let p = form.degree();
    if p != sigma.dim() {
        return Err(Error::dim(format!(
            "degree-{p} form paired with a {}-cube",
            sigma.dim()
        )));
    }
    if form.space.ambient_dim != sigma.space.ambient_dim {
        return Err(Error::dim("form and cube live in different ambient spaces"));
    }
    if p == 0 {
        let x = sigma.rep.evaluate(&[])?;
        let mut acc = 0.0;
        for (c, tuple) in &form.terms {
            acc += c * tuple[0].evaluate_scalar(&x)?;
        }
        return Ok(acc);
    }

    let mut acc = 0.0;
    for (c, tuple) in &form.terms {
        // compose every tuple entry with the representative once per term
        let composed = tuple
            .iter()
            .map(|f| SmoothMap::compose(f, &sigma.rep))
            .collect::<Result<Vec<_>>>()?;
        let mut term_val = 0.0;
        let mut err: Option<Error> = None;
        rule.for_each_node(&sigma.cube_box, |t, w| {
            if err.is_some() {
                return;
            }
            let g0 = match composed[0].evaluate_scalar(t) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            let mut jac = Vec::with_capacity(p);
            for g in &composed[1..] {
                match g.jet(t) {
                    Ok(j) => jac.push(j.jacobian.into_iter().next().unwrap()),
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                }
            }
            term_val += w * g0 * det(jac);
        });
        if let Some(e) = err {
            return Err(e);
        }
        acc += c * term_val;
    }
    Ok(acc)
}

/// Result of a quadrature-order escalation.
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveValue {
    pub value: f64,
    pub order_used: usize,
    /// Set when even the escalated order pair keeps disagreeing.
    pub flagged: bool,
}

/// Evaluate with the default order; escalate to the high order when two
/// successive orders disagree by more than the relative threshold.
pub fn lambda_eval_adaptive(
    form: &GeneratorForm,
    sigma: &SingularCube,
    base_order: usize,
) -> Result<AdaptiveValue> {
    let agree = |a: f64, b: f64| {
        let scale = a.abs().max(b.abs());
        scale <= ESCALATION_ABS_FLOOR || (a - b).abs() <= ESCALATION_RTOL * scale
    };
    let v1 = lambda_eval(form, sigma, &QuadratureRule::new(base_order))?;
    let v2 = lambda_eval(form, sigma, &QuadratureRule::new(base_order + 2))?;
    if agree(v1, v2) {
        return Ok(AdaptiveValue {
            value: v2,
            order_used: base_order + 2,
            flagged: false,
        });
    }
    let h1 = lambda_eval(form, sigma, &QuadratureRule::new(ESCALATED_QUAD_ORDER))?;
    let h2 = lambda_eval(form, sigma, &QuadratureRule::new(ESCALATED_QUAD_ORDER + 2))?;
    Ok(AdaptiveValue {
        value: h2,
        order_used: ESCALATED_QUAD_ORDER + 2,
        flagged: !agree(h1, h2),
    })
}

/// Pairing of a form against a chain, extended linearly.
pub fn pair_chain(
    form: &GeneratorForm,
    chain: &CubicalChain,
    rule: &QuadratureRule,
) -> Result<f64> {
    let mut acc = 0.0;
    for (c, cube) in &chain.terms {
        acc += *c as f64 * lambda_eval(form, cube, rule)?;
    }
    Ok(acc)
}

/// |⟨dα, σ⟩ - ⟨α, ∂σ⟩| for a degree-p form α and a (p+1)-cube σ.
pub fn stokes_residual(
    alpha: &GeneratorForm,
    sigma: &SingularCube,
    rule: &QuadratureRule,
) -> Result<f64> {
    if sigma.dim() != alpha.degree() + 1 {
        return Err(Error::dim(format!(
            "stokes pairing needs a {}-cube, got {}",
            alpha.degree() + 1,
            sigma.dim()
        )));
    }
    let lhs = lambda_eval(&alpha.exterior_derivative(), sigma, rule)?;
    let rhs = pair_chain(alpha, &boundary_of_cube(sigma)?, rule)?;
    Ok((lhs - rhs).abs())
}

/// Max over sampled 1-cubes of |⟨dφ, σ⟩ - ⟨Σ_i (∂F/∂u_i ∘ g) dg_i, σ⟩| where
/// φ = F(g_1, ..., g_n).
pub fn chain_rule_residual(
    outer: &SmoothMap,
    elements: &[StructureElement],
    cubes: &[SingularCube],
    rule: &QuadratureRule,
) -> Result<f64> {
    if outer.input_dim() != elements.len() || outer.output_dim() != 1 {
        return Err(Error::dim(
            "chain rule takes a scalar outer map over the listed elements",
        ));
    }
    let space = elements
        .first()
        .map(|e| e.space.clone())
        .ok_or_else(|| Error::Construction("need at least one element".into()))?;
    let inner = SmoothMap::stack(
        space.ambient_dim,
        &elements.iter().map(|e| e.rep.clone()).collect::<Vec<_>>(),
    )?;
    let phi = SmoothMap::compose(outer, &inner)?;
    let lhs =
        GeneratorForm::from_reps(space.clone(), 0, vec![(1.0, vec![phi])])?.exterior_derivative();

    // Σ_i (∂F/∂u_i)(g_1, ..., g_n) dg_i
    let mut rhs_terms = Vec::new();
    for (i, e) in elements.iter().enumerate() {
        let df = outer.partial(i)?;
        let coeff = SmoothMap::compose(&df, &inner)?;
        rhs_terms.push((1.0, vec![coeff, e.rep.clone()]));
    }
    let rhs = GeneratorForm::from_reps(space, 1, rhs_terms)?;

    let mut worst = 0.0f64;
    for sigma in cubes {
        let a = lambda_eval(&lhs, sigma, rule)?;
        let b = lambda_eval(&rhs, sigma, rule)?;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Equality of forms through pairings: max pairing difference over a battery
/// of test cubes.
pub fn pairing_distance(
    a: &GeneratorForm,
    b: &GeneratorForm,
    battery: &[SingularCube],
    rule: &QuadratureRule,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for sigma in battery {
        let va = lambda_eval(a, sigma, rule)?;
        let vb = lambda_eval(b, sigma, rule)?;
        worst = worst.max((va - vb).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::CubeBox;
    use crate::smooth::{self, coord, cos, mul, pow, sin};
    use crate::space::SpaceModel;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn plane() -> SpaceRef {
        SpaceModel::euclidean(2)
    }

    fn rule() -> QuadratureRule {
        QuadratureRule::new(DEFAULT_QUAD_ORDER)
    }

    /// θ ∈ [0, 2π] ↦ (R cos θ, R sin θ) as a 1-cube in the plane.
    fn circle_cube(radius: f64, space: &SpaceRef) -> SingularCube {
        SingularCube::new(
            CubeBox::new(vec![(0.0, std::f64::consts::TAU)]).unwrap(),
            SmoothMap::new(
                1,
                vec![
                    mul(smooth::cst(radius), cos(coord(0))),
                    mul(smooth::cst(radius), sin(coord(0))),
                ],
            )
            .unwrap(),
            space.clone(),
        )
        .unwrap()
    }

    fn xy_form(space: &SpaceRef, entries: &[(f64, &[usize])]) -> GeneratorForm {
        // helper: tuples of coordinate elements
        let terms = entries
            .iter()
            .map(|(c, idx)| {
                (
                    *c,
                    idx.iter()
                        .map(|&i| space.coord_element(i))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        GeneratorForm::new(entries[0].1.len() - 1, terms).unwrap()
    }

    #[test]
    fn unit_one_forms_and_top_forms() {
        let space = plane();
        // λ₁(1, x) over the identity interval is ∫₀¹ dt = 1
        let one = space.unit_element();
        let x = space.coord_element(0);
        let alpha = GeneratorForm::new(1, vec![(1.0, vec![one, x])]).unwrap();
        let seg = SingularCube::new(
            CubeBox::unit(1),
            SmoothMap::new(1, vec![coord(0), smooth::cst(0.0)]).unwrap(),
            space.clone(),
        )
        .unwrap();
        assert_relative_eq!(
            lambda_eval(&alpha, &seg, &rule()).unwrap(),
            1.0,
            max_relative = 1e-13
        );

        // λ₂(1, x, y) over the identity unit square is 1
        let beta = GeneratorForm::new(
            2,
            vec![(
                1.0,
                vec![
                    space.unit_element(),
                    space.coord_element(0),
                    space.coord_element(1),
                ],
            )],
        )
        .unwrap();
        let square = SingularCube::identity_on(CubeBox::unit(2), space.clone()).unwrap();
        assert_relative_eq!(
            lambda_eval(&beta, &square, &rule()).unwrap(),
            1.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn angular_form_measures_circle_area_scale() {
        // ω = x dy - y dx over the circle of radius R gives 2πR²
        let space = plane();
        let omega = xy_form(&space, &[(1.0, &[0, 1]), (-1.0, &[1, 0])]);
        for &r in &[0.5, 1.0, 2.0] {
            let gamma = circle_cube(r, &space);
            assert_relative_eq!(
                lambda_eval(&omega, &gamma, &rule()).unwrap(),
                std::f64::consts::TAU * r * r,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn quartic_integral_against_independent_theta_quadrature() {
        // λ₁(x², xy) on the circle: oracle is a plain 1-D integral of
        // R⁴ cos²θ d(cos θ sin θ)/dθ, evaluated with an unrelated rule.
        let space = plane();
        let x2 = space
            .element(SmoothMap::scalar(2, pow(coord(0), 2)).unwrap())
            .unwrap();
        let xy = space
            .element(SmoothMap::scalar(2, mul(coord(0), coord(1))).unwrap())
            .unwrap();
        let alpha = GeneratorForm::new(1, vec![(1.0, vec![x2, xy])]).unwrap();

        let oracle = |r: f64| {
            // composite Simpson over θ, independent of the form machinery
            let n = 4000;
            let h = std::f64::consts::TAU / n as f64;
            let f = |theta: f64| {
                let c = theta.cos();
                let s = theta.sin();
                r.powi(4) * c * c * (c * c - s * s)
            };
            let mut acc = f(0.0) + f(std::f64::consts::TAU);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(k as f64 * h);
            }
            acc * h / 3.0
        };

        for &r in &[1.0, 2.0] {
            let gamma = circle_cube(r, &space);
            let v = lambda_eval_adaptive(&alpha, &gamma, DEFAULT_QUAD_ORDER).unwrap();
            assert!(!v.flagged);
            assert_relative_eq!(v.value, oracle(r), max_relative = 1e-9);
            assert_relative_eq!(
                v.value,
                std::f64::consts::FRAC_PI_2 * r.powi(4),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn exterior_derivative_prepends_unit() {
        let space = plane();
        let f = space.coord_element(0);
        let alpha = GeneratorForm::new(0, vec![(1.0, vec![f])]).unwrap();
        let d = alpha.exterior_derivative();
        assert_eq!(d.degree(), 1);
        assert_eq!(d.terms()[0].1.len(), 2);
        // leading entry is the constant one
        assert_eq!(d.terms()[0].1[0].evaluate(&[3.0, 4.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn greens_theorem_on_the_unit_square() {
        // ⟨d(x dy), square⟩ = 1 and equals ⟨x dy, ∂square⟩
        let space = plane();
        let alpha = xy_form(&space, &[(1.0, &[0, 1])]);
        let square = SingularCube::identity_on(CubeBox::unit(2), space.clone()).unwrap();
        let d_val = lambda_eval(&alpha.exterior_derivative(), &square, &rule()).unwrap();
        assert_relative_eq!(d_val, 1.0, max_relative = 1e-12);
        let b_val = pair_chain(&alpha, &boundary_of_cube(&square).unwrap(), &rule()).unwrap();
        assert_abs_diff_eq!(d_val, b_val, epsilon = 1e-11);
    }

    #[test]
    fn second_derivative_vanishes_in_pairings() {
        let space = plane();
        let alpha = xy_form(&space, &[(1.0, &[0, 1])]);
        let dd = alpha.exterior_derivative().exterior_derivative();
        // pair against a curved 3-cube into the plane
        let sigma = SingularCube::new(
            CubeBox::unit(3),
            SmoothMap::new(
                3,
                vec![
                    smooth::add(coord(0), mul(coord(1), coord(2))),
                    smooth::sub(coord(1), pow(coord(2), 2)),
                ],
            )
            .unwrap(),
            space,
        )
        .unwrap();
        assert_eq!(lambda_eval(&dd, &sigma, &rule()).unwrap(), 0.0);
    }

    #[test]
    fn wedge_examples() {
        let space = plane();
        // (x dy) ∧ (y dx) on the identity square: ∫∫ xy det ∂(y, x)/∂(t₁, t₂) = -1/4
        let xdy = xy_form(&space, &[(1.0, &[0, 1])]);
        let ydx = xy_form(&space, &[(1.0, &[1, 0])]);
        let w = xdy.wedge(&ydx).unwrap();
        let square = SingularCube::identity_on(CubeBox::unit(2), space.clone()).unwrap();
        assert_relative_eq!(
            lambda_eval(&w, &square, &rule()).unwrap(),
            -0.25,
            max_relative = 1e-12
        );

        // independent oracle: composite Simpson double integral of -t₁t₂
        let n = 200;
        let h = 1.0 / n as f64;
        let mut oracle = 0.0;
        let wgt = |k: usize| {
            if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        for i in 0..=n {
            for j in 0..=n {
                oracle += wgt(i) * wgt(j) * (-((i as f64) * h) * ((j as f64) * h));
            }
        }
        oracle *= h * h / 9.0;
        assert_relative_eq!(
            lambda_eval(&w, &square, &rule()).unwrap(),
            oracle,
            max_relative = 1e-9
        );

        // λ₀ factor scales the leading function: x · (x dy) over the diagonal
        // segment t ↦ (t, t) is ∫₀¹ t² dt = 1/3
        let f0 = GeneratorForm::new(0, vec![(1.0, vec![space.coord_element(0)])]).unwrap();
        let scaled = f0.wedge(&xdy).unwrap();
        let diagonal = SingularCube::new(
            CubeBox::unit(1),
            SmoothMap::new(1, vec![coord(0), coord(0)]).unwrap(),
            space.clone(),
        )
        .unwrap();
        assert_relative_eq!(
            lambda_eval(&scaled, &diagonal, &rule()).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-12
        );

        // wedging with d(constant) kills every pairing: rank-deficient rows
        let const_form = GeneratorForm::new(
            1,
            vec![(
                1.0,
                vec![
                    space.unit_element(),
                    space.element(SmoothMap::constant(2, &[3.0])).unwrap(),
                ],
            )],
        )
        .unwrap();
        let dead = xdy.wedge(&const_form).unwrap();
        let curved = SingularCube::new(
            CubeBox::unit(2),
            SmoothMap::new(2, vec![coord(0), mul(coord(0), coord(1))]).unwrap(),
            space,
        )
        .unwrap();
        assert_eq!(lambda_eval(&dead, &curved, &rule()).unwrap(), 0.0);
    }

    #[test]
    fn pullback_functoriality_and_edge_cases() {
        let space = plane();
        let omega = xy_form(&space, &[(1.0, &[0, 1]), (-1.0, &[1, 0])]);

        // identity pullback leaves pairings unchanged
        let id = SmoothMap::identity(2);
        let back = omega.pullback(&id, &space).unwrap();
        let gamma = circle_cube(1.0, &space);
        assert_abs_diff_eq!(
            lambda_eval(&back, &gamma, &rule()).unwrap(),
            lambda_eval(&omega, &gamma, &rule()).unwrap(),
            epsilon = 1e-13
        );

        // pull back along the circle parametrization: pairing with the
        // parameter interval equals the pairing of ω with the circle cube
        let line = SpaceModel::euclidean(1);
        let param = SmoothMap::new(1, vec![cos(coord(0)), sin(coord(0))]).unwrap();
        let pulled = omega.pullback(&param, &line).unwrap();
        let interval = SingularCube::identity_on(
            CubeBox::new(vec![(0.0, std::f64::consts::TAU)]).unwrap(),
            line,
        )
        .unwrap();
        assert_relative_eq!(
            lambda_eval(&pulled, &interval, &rule()).unwrap(),
            std::f64::consts::TAU,
            max_relative = 1e-12
        );

        // ⟨F*α, σ⟩ = ⟨α, F∘σ⟩ for a polynomial map
        let f = SmoothMap::new(
            2,
            vec![
                smooth::add(coord(0), pow(coord(1), 2)),
                mul(coord(0), coord(1)),
            ],
        )
        .unwrap();
        let pulled = omega.pullback(&f, &space).unwrap();
        let sigma = SingularCube::new(
            CubeBox::unit(1),
            SmoothMap::new(1, vec![coord(0), smooth::add(coord(0), smooth::cst(-0.3))]).unwrap(),
            space.clone(),
        )
        .unwrap();
        let composed = SingularCube::new(
            sigma.cube_box.clone(),
            SmoothMap::compose(&f, &sigma.rep).unwrap(),
            space.clone(),
        )
        .unwrap();
        assert_abs_diff_eq!(
            lambda_eval(&pulled, &sigma, &rule()).unwrap(),
            lambda_eval(&omega, &composed, &rule()).unwrap(),
            epsilon = 1e-9
        );

        // constant map kills positive-degree forms
        let c = SmoothMap::constant(2, &[0.4, -0.7]);
        let dead = omega.pullback(&c, &space).unwrap();
        assert_eq!(lambda_eval(&dead, &gamma, &rule()).unwrap(), 0.0);
    }

    #[test]
    fn stokes_residuals_are_tiny() {
        let space = plane();
        // α = x dy against the unit square
        let alpha = xy_form(&space, &[(1.0, &[0, 1])]);
        let square = SingularCube::identity_on(CubeBox::unit(2), space.clone()).unwrap();
        assert!(stokes_residual(&alpha, &square, &rule()).unwrap() < 1e-10);

        // exact form d f: both sides telescope
        let f = space
            .element(SmoothMap::scalar(2, mul(coord(0), pow(coord(1), 2))).unwrap())
            .unwrap();
        let df = GeneratorForm::new(0, vec![(1.0, vec![f])])
            .unwrap()
            .exterior_derivative();
        assert!(stokes_residual(&df, &square, &rule()).unwrap() < 1e-10);

        // constant generators: both sides vanish
        let dead = GeneratorForm::new(
            1,
            vec![(
                2.0,
                vec![
                    space.unit_element(),
                    space.element(SmoothMap::constant(2, &[5.0])).unwrap(),
                ],
            )],
        )
        .unwrap();
        let r = stokes_residual(&dead, &square, &rule()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn chain_rule_over_random_segments() {
        let space = plane();
        let x = space.coord_element(0);
        let y = space.coord_element(1);

        // F = u·v over (x, y)
        let f = SmoothMap::scalar(2, mul(coord(0), coord(1))).unwrap();
        let mut rng = crate::seeded_rng(21);
        let cubes: Vec<SingularCube> = (0..12)
            .map(|_| crate::fixtures::random_segment(&space, &mut rng))
            .collect();
        let r = chain_rule_residual(&f, &[x.clone(), y.clone()], &cubes, &rule()).unwrap();
        assert!(r < 1e-10, "residual {r}");

        // F = id
        let idf = SmoothMap::scalar(1, coord(0)).unwrap();
        let r = chain_rule_residual(&idf, &[x], &cubes, &rule()).unwrap();
        assert!(r < 1e-12);

        // F = u² with u = xy
        let sq = SmoothMap::scalar(1, pow(coord(0), 2)).unwrap();
        let xy = space
            .element(SmoothMap::scalar(2, mul(coord(0), coord(1))).unwrap())
            .unwrap();
        let r = chain_rule_residual(&sq, &[xy], &cubes, &rule()).unwrap();
        assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn leibniz_rule_for_wedge_under_d() {
        // d(α∧β) = dα∧β - α∧dβ for 1-forms, checked through pairings
        let space = plane();
        let alpha = xy_form(&space, &[(1.0, &[0, 1])]);
        let beta = xy_form(&space, &[(1.0, &[1, 0])]);
        let lhs = alpha.wedge(&beta).unwrap().exterior_derivative();
        let rhs = alpha
            .exterior_derivative()
            .wedge(&beta)
            .unwrap()
            .add(
                alpha
                    .wedge(&beta.exterior_derivative())
                    .unwrap()
                    .scale(-1.0),
            )
            .unwrap();
        let mut rng = crate::seeded_rng(5);
        let battery: Vec<SingularCube> = (0..6)
            .map(|_| crate::fixtures::random_cube(&space, 3, &mut rng))
            .collect();
        let dist = pairing_distance(&lhs, &rhs, &battery, &rule()).unwrap();
        assert!(dist < 1e-9, "distance {dist}");
    }

    #[test]
    fn forms_factor_through_wedges_of_derivatives() {
        // λ(f0, f1, f2) equals λ0(f0) ∧ dλ0(f1) ∧ dλ0(f2) as a cochain
        let space = plane();
        let f0 = space
            .element(SmoothMap::scalar(2, mul(coord(0), coord(1))).unwrap())
            .unwrap();
        let f1 = space
            .element(SmoothMap::scalar(2, smooth::add(coord(0), pow(coord(1), 2))).unwrap())
            .unwrap();
        let f2 = space.coord_element(1);
        let direct =
            GeneratorForm::new(2, vec![(1.0, vec![f0.clone(), f1.clone(), f2.clone()])]).unwrap();
        let factored = GeneratorForm::new(0, vec![(1.0, vec![f0])])
            .unwrap()
            .wedge(
                &GeneratorForm::new(0, vec![(1.0, vec![f1])])
                    .unwrap()
                    .exterior_derivative(),
            )
            .unwrap()
            .wedge(
                &GeneratorForm::new(0, vec![(1.0, vec![f2])])
                    .unwrap()
                    .exterior_derivative(),
            )
            .unwrap();
        let mut rng = crate::seeded_rng(27);
        let battery: Vec<SingularCube> = (0..5)
            .map(|_| crate::fixtures::random_cube(&space, 2, &mut rng))
            .collect();
        let dist = pairing_distance(&direct, &factored, &battery, &rule()).unwrap();
        assert!(dist < 1e-11, "factorization distance {dist}");
    }
}
