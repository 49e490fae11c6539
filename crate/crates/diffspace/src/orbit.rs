//! Finite linear group actions, invariance checking and averaging, orbit
//! space models through invariant-polynomial maps, star-shaped contractions,
//! and the circle-integral scaling experiment separating the invariant
//! 1-form x dy - y dx from the span of invariant-generated 1-forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::forms::{lambda_eval_adaptive, GeneratorForm};
use crate::smooth::{self, rational_to_f64, SmoothMap};
use crate::space::{make_space, Membership, Sampler, SamplerNode, SpaceRef};

/// A square matrix with exact rational entries and an f64 mirror.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    pub n: usize,
    pub entries: Vec<BigRational>, // row-major
}

impl RatMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigRational::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigRational::one();
        }
        RatMatrix { n, entries }
    }

    pub fn from_i64(n: usize, rows: &[Vec<i64>]) -> Result<Self> {
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::dim("matrix shape mismatch"));
        }
        let entries = rows
            .iter()
            .flat_map(|r| {
                r.iter()
                    .map(|&v| BigRational::from_integer(BigInt::from(v)))
            })
            .collect();
        Ok(RatMatrix { n, entries })
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        let n = self.n;
        let mut entries = vec![BigRational::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let prod = a.clone() * other.entries[k * n + j].clone();
                    entries[i * n + j] += prod;
                }
            }
        }
        RatMatrix { n, entries }
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| rational_to_f64(&self.entries[i * n + j]) * x[j])
                    .sum()
            })
            .collect()
    }

    pub fn apply_rational(&self, x: &[BigRational]) -> Vec<BigRational> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = BigRational::zero();
                for j in 0..n {
                    acc += self.entries[i * n + j].clone() * x[j].clone();
                }
                acc
            })
            .collect()
    }

    /// The matrix as a linear smooth map.
    pub fn to_map(&self) -> SmoothMap {
        let rows: Vec<Vec<f64>> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| rational_to_f64(&self.entries[i * self.n + j]))
                    .collect()
            })
            .collect();
        SmoothMap::linear(&rows).unwrap()
    }
}

/// A finite set of invertible rational matrices closed under product and
/// containing the identity, acting linearly on R^n.
#[derive(Clone, Debug)]
pub struct FiniteGroupAction {
    pub ambient_dim: usize,
    elements: Vec<RatMatrix>,
}

impl FiniteGroupAction {
    /// Verify identity membership, closure under product, and existence of
    /// inverses inside the set, all in exact arithmetic.
    pub fn new(ambient_dim: usize, elements: Vec<RatMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Construction(
                "group needs at least the identity".into(),
            ));
        }
        for m in &elements {
            if m.n != ambient_dim {
                return Err(Error::dim("group element dimension mismatch"));
            }
        }
        let id = RatMatrix::identity(ambient_dim);
        if !elements.contains(&id) {
            return Err(Error::Construction("identity matrix missing".into()));
        }
        for a in &elements {
            let mut has_inverse = false;
            for b in &elements {
                let prod = a.mul(b);
                if !elements.contains(&prod) {
                    return Err(Error::Construction(
                        "element set is not closed under product".into(),
                    ));
                }
                if prod == id {
                    has_inverse = true;
                }
            }
            if !has_inverse {
                return Err(Error::Construction(
                    "element without inverse in the set".into(),
                ));
            }
        }
        Ok(FiniteGroupAction {
            ambient_dim,
            elements,
        })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, g: usize) -> &RatMatrix {
        &self.elements[g]
    }

    pub fn apply(&self, g: usize, x: &[f64]) -> Vec<f64> {
        self.elements[g].apply_f64(x)
    }

    pub fn inverse_index(&self, g: usize) -> usize {
        let id = RatMatrix::identity(self.ambient_dim);
        for (i, b) in self.elements.iter().enumerate() {
            if self.elements[g].mul(b) == id {
                return i;
            }
        }
        unreachable!("validated groups contain inverses")
    }
}

/// The two-element sign-flip action (x, y) ↦ (-x, -y) on the plane.
pub fn sign_flip_action() -> FiniteGroupAction {
    FiniteGroupAction::new(
        2,
        vec![
            RatMatrix::from_i64(2, &[vec![1, 0], vec![0, 1]]).unwrap(),
            RatMatrix::from_i64(2, &[vec![-1, 0], vec![0, -1]]).unwrap(),
        ],
    )
    .unwrap()
}

/// Max over group elements and samples of |f(g·x) - f(x)|.
pub fn check_invariance(
    f: &SmoothMap,
    action: &FiniteGroupAction,
    rng: &mut ChaCha8Rng,
    samples: usize,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x: Vec<f64> = (0..action.ambient_dim)
            .map(|_| 4.0 * rng.gen::<f64>() - 2.0)
            .collect();
        let base = f.evaluate(&x)?;
        for g in 0..action.order() {
            let gx = action.apply(g, &x);
            let v = f.evaluate(&gx)?;
            for (a, b) in v.iter().zip(&base) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

/// Exact invariance of a polynomial map on rational sample points: returns
/// the number of (sample, element) pairs with a nonzero exact difference.
pub fn check_invariance_exact(
    f: &SmoothMap,
    action: &FiniteGroupAction,
    rng: &mut ChaCha8Rng,
    samples: usize,
) -> Result<usize> {
    let mut failures = 0usize;
    for _ in 0..samples {
        let x: Vec<BigRational> = (0..action.ambient_dim)
            .map(|_| {
                BigRational::new(
                    BigInt::from(rng.gen_range(-40i64..=40)),
                    BigInt::from(rng.gen_range(1i64..=8)),
                )
            })
            .collect();
        let base = f.evaluate_rational(&x)?;
        for g in 0..action.order() {
            let gx = action.element(g).apply_rational(&x);
            let v = f.evaluate_rational(&gx)?;
            if v.iter().zip(&base).any(|(a, b)| a != b) {
                failures += 1;
            }
        }
    }
    Ok(failures)
}

/// Group-average a scalar function: (1/|G|) Σ_g f ∘ g. The result is
/// invariant by construction.
pub fn average_invariant(f: &SmoothMap, action: &FiniteGroupAction) -> Result<SmoothMap> {
    if f.input_dim() != action.ambient_dim {
        return Err(Error::dim("function dimension does not match the action"));
    }
    let scale = 1.0 / action.order() as f64;
    let mut acc = smooth::cst(0.0);
    for g in 0..action.order() {
        let composed = SmoothMap::compose(f, &action.element(g).to_map())?;
        acc = smooth::add(acc, composed.output(0).clone());
    }
    SmoothMap::scalar(action.ambient_dim, smooth::mul(smooth::cst(scale), acc))
}

/// Group-average a vector field equivariantly: (1/|G|) Σ_g g⁻¹ · (Y ∘ g).
pub fn average_equivariant_field(
    field: &SmoothMap,
    action: &FiniteGroupAction,
) -> Result<SmoothMap> {
    let n = action.ambient_dim;
    if field.input_dim() != n || field.output_dim() != n {
        return Err(Error::dim("field must be square for averaging"));
    }
    let scale = 1.0 / action.order() as f64;
    let mut outputs = vec![smooth::cst(0.0); n];
    for g in 0..action.order() {
        let composed = SmoothMap::compose(field, &action.element(g).to_map())?;
        let ginv = action.element(action.inverse_index(g));
        for i in 0..n {
            let mut row = smooth::cst(0.0);
            for j in 0..n {
                let c = rational_to_f64(&ginv.entries[i * n + j]);
                row = smooth::add(row, smooth::mul(smooth::cst(c), composed.output(j).clone()));
            }
            outputs[i] = smooth::add(outputs[i].clone(), row);
        }
    }
    let outputs = outputs
        .into_iter()
        .map(|o| smooth::mul(smooth::cst(scale), o))
        .collect();
    SmoothMap::new(n, outputs)
}

/// Tuple of invariant generator polynomials embedding the orbit space, with
/// the relations and inequalities cutting out the image.
#[derive(Clone, Debug)]
pub struct HilbertMap {
    pub components: Vec<SmoothMap>,
    pub relations: Vec<SmoothMap>,
    pub inequalities: Vec<SmoothMap>,
}

impl HilbertMap {
    pub fn image_dim(&self) -> usize {
        self.components.len()
    }

    pub fn to_map(&self, ambient_dim: usize) -> Result<SmoothMap> {
        SmoothMap::stack(ambient_dim, &self.components)
    }

    /// Sampled validation: components invariant, relations vanish on pushed
    /// samples, inequalities nonnegative on pushed samples.
    pub fn validate(
        &self,
        action: &FiniteGroupAction,
        rng: &mut ChaCha8Rng,
        samples: usize,
    ) -> Result<()> {
        let map = self.to_map(action.ambient_dim)?;
        let inv = check_invariance(&map, action, rng, samples)?;
        if inv > 1e-10 {
            return Err(Error::Precondition(format!(
                "components are not invariant (residual {inv:.3e})"
            )));
        }
        for _ in 0..samples {
            let x: Vec<f64> = (0..action.ambient_dim)
                .map(|_| 4.0 * rng.gen::<f64>() - 2.0)
                .collect();
            let y = map.evaluate(&x)?;
            for r in &self.relations {
                let v = r.evaluate_scalar(&y)?;
                if v.abs() > 1e-9 {
                    return Err(Error::Precondition(format!(
                        "relation violated by {v:.3e} on a pushed sample"
                    )));
                }
            }
            for q in &self.inequalities {
                if q.evaluate_scalar(&y)? < -1e-12 {
                    return Err(Error::Precondition(
                        "inequality violated on a pushed sample".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The quadratic-invariants description of the sign-flip orbit space:
/// components (x², xy, y²) subject to v² = u·w with u ≥ 0 and w ≥ 0.
pub fn sign_flip_hilbert() -> HilbertMap {
    HilbertMap {
        components: vec![
            SmoothMap::scalar(2, smooth::pow(smooth::coord(0), 2)).unwrap(),
            SmoothMap::scalar(2, smooth::mul(smooth::coord(0), smooth::coord(1))).unwrap(),
            SmoothMap::scalar(2, smooth::pow(smooth::coord(1), 2)).unwrap(),
        ],
        relations: vec![SmoothMap::scalar(
            3,
            smooth::sub(
                smooth::pow(smooth::coord(1), 2),
                smooth::mul(smooth::coord(0), smooth::coord(2)),
            ),
        )
        .unwrap()],
        inequalities: vec![
            SmoothMap::scalar(3, smooth::coord(0)).unwrap(),
            SmoothMap::scalar(3, smooth::coord(2)).unwrap(),
        ],
    }
}

/// An orbit space presented in image coordinates.
#[derive(Clone, Debug)]
pub struct OrbitSpaceModel {
    pub space: SpaceRef,
    pub orbit_map: SmoothMap,
}

/// Build the image model of an invariant-polynomial map: membership from the
/// relations and inequalities, sampler pushed through the map, coordinate
/// generators. Orbit separation is validated by sampling: pairs with equal
/// images must lie on a common orbit.
pub fn orbit_pushforward(
    upstairs: &SpaceRef,
    action: &FiniteGroupAction,
    hilbert: &HilbertMap,
    rng: &mut ChaCha8Rng,
) -> Result<OrbitSpaceModel> {
    hilbert.validate(action, rng, 60)?;
    let map = hilbert.to_map(upstairs.ambient_dim)?;
    let m = hilbert.image_dim();

    // separation: equal images must come from one orbit
    let pts: Vec<Vec<f64>> = (0..60)
        .map(|_| upstairs.sampler.sample(rng))
        .collect::<Result<_>>()?;
    for (i, x) in pts.iter().enumerate() {
        let px = map.evaluate(x)?;
        for y in pts.iter().skip(i + 1) {
            let py = map.evaluate(y)?;
            let img_close = px.iter().zip(&py).all(|(a, b)| (a - b).abs() <= 1e-9);
            if !img_close {
                continue;
            }
            let on_orbit = (0..action.order()).any(|g| {
                action
                    .apply(g, x)
                    .iter()
                    .zip(y)
                    .all(|(a, b)| (a - b).abs() <= 1e-9)
            });
            if !on_orbit {
                return Err(Error::Separation(x.clone(), y.clone()));
            }
        }
    }

    let mut clauses = vec![crate::space::Clause::default()];
    for r in &hilbert.relations {
        clauses[0]
            .constraints
            .push(crate::space::Constraint::Zero(r.clone()));
    }
    for q in &hilbert.inequalities {
        clauses[0]
            .constraints
            .push(crate::space::Constraint::NonNeg(q.clone()));
    }
    let sampler = Sampler::from_branches(vec![(
        1.0,
        SamplerNode::Mapped {
            inner: std::sync::Arc::new(upstairs.sampler.clone()),
            map: map.clone(),
        },
    )]);
    let generators = (0..m)
        .map(|i| SmoothMap::scalar(m, smooth::coord(i)).unwrap())
        .collect();
    let space = make_space(
        format!("{}-orbit-image", upstairs.name),
        m,
        Membership::new(clauses, 1e-8),
        sampler,
        generators,
    )?;
    Ok(OrbitSpaceModel {
        space,
        orbit_map: map,
    })
}

/// How the contraction parameter scales displacements from the base point.
#[derive(Clone, Copy, Debug)]
pub enum ContractionScaling {
    /// h(t, x) = base + t (x - base)
    Linear,
    /// h(t, x) = base + t² (x - base): the image of an upstairs linear
    /// contraction under a quadratic invariant map.
    EvenSquare,
}

/// Build a star-shaped contraction of a model onto `base`, validating by
/// sampling that scaled points stay on the model. Endpoints satisfy
/// h(1, x) = x and h(0, x) = base exactly.
pub fn build_contraction(
    space: &SpaceRef,
    base: &[f64],
    scaling: ContractionScaling,
    rng: &mut ChaCha8Rng,
) -> Result<SmoothMap> {
    let n = space.ambient_dim;
    if base.len() != n {
        return Err(Error::dim("base point dimension mismatch"));
    }
    let factor = match scaling {
        ContractionScaling::Linear => smooth::coord(0),
        ContractionScaling::EvenSquare => smooth::pow(smooth::coord(0), 2),
    };
    let outputs = (0..n)
        .map(|i| {
            smooth::add(
                smooth::cst(base[i]),
                smooth::mul(
                    factor.clone(),
                    smooth::sub(smooth::coord(i + 1), smooth::cst(base[i])),
                ),
            )
        })
        .collect();
    let h = SmoothMap::new(n + 1, outputs)?;
    // star-shape validation on a (t, sample) grid
    for _ in 0..40 {
        let x = space.sampler.sample(rng)?;
        for k in 0..=8 {
            let t = k as f64 / 8.0;
            let mut arg = vec![t];
            arg.extend(&x);
            let y = h.evaluate(&arg)?;
            if !space.contains(&y) {
                return Err(Error::Precondition(format!(
                    "scaled point {y:?} (t = {t}) leaves `{}`: model is not star-shaped under this scaling",
                    space.name
                )));
            }
        }
    }
    Ok(h)
}

/// One evaluated integral of the scaling experiment.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ScalingRow {
    pub form: String,
    pub radius: f64,
    pub value: f64,
    pub quad_order: usize,
    pub flagged: bool,
}

/// Least-squares slope of log |value| against log radius.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SlopeFit {
    pub form: String,
    pub slope: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<SlopeFit>,
}

/// Named 1-forms of the scaling experiment over the plane: the invariant
/// angular-momentum form, the two quartic-order pairings of invariant
/// quadratics, and the eight integrands whose circle integrals vanish.
pub fn scaling_experiment_forms(plane: &SpaceRef) -> Vec<(String, GeneratorForm)> {
    let el = |expr: smooth::ExprRef| plane.element(SmoothMap::scalar(2, expr).unwrap()).unwrap();
    let x = || smooth::coord(0);
    let y = || smooth::coord(1);
    let xy = || smooth::mul(x(), y());
    let form = |entries: Vec<(f64, Vec<smooth::ExprRef>)>| {
        GeneratorForm::new(
            1,
            entries
                .into_iter()
                .map(|(c, t)| (c, t.into_iter().map(&el).collect()))
                .collect(),
        )
        .unwrap()
    };
    vec![
        (
            "x_dy_minus_y_dx".to_string(),
            form(vec![(1.0, vec![x(), y()]), (-1.0, vec![y(), x()])]),
        ),
        (
            "x2_d(xy)".to_string(),
            form(vec![(1.0, vec![smooth::pow(x(), 2), xy()])]),
        ),
        (
            "y2_d(xy)".to_string(),
            form(vec![(1.0, vec![smooth::pow(y(), 2), xy()])]),
        ),
        ("x_dx".to_string(), form(vec![(1.0, vec![x(), x()])])),
        (
            "d(xy)".to_string(),
            form(vec![(1.0, vec![smooth::cst(1.0), xy()])]),
        ),
        ("y_dy".to_string(), form(vec![(1.0, vec![y(), y()])])),
        (
            "x3_dx".to_string(),
            form(vec![(1.0, vec![smooth::pow(x(), 3), x()])]),
        ),
        (
            "x2y_dy".to_string(),
            form(vec![(
                1.0,
                vec![smooth::mul(smooth::pow(x(), 2), y()), y()],
            )]),
        ),
        ("xy_d(xy)".to_string(), form(vec![(1.0, vec![xy(), xy()])])),
        (
            "y2_dx".to_string(),
            form(vec![(1.0, vec![smooth::pow(y(), 2), x()])]),
        ),
        (
            "y3_dy".to_string(),
            form(vec![(1.0, vec![smooth::pow(y(), 3), y()])]),
        ),
    ]
}

/// Integrate every experiment form over circles of the given radii and fit
/// log-log slopes for the families with non-vanishing integrals.
pub fn scaling_experiment(radii: &[f64], base_order: usize) -> Result<ScalingReport> {
    if radii.iter().any(|&r| r <= 0.0) {
        return Err(Error::Config(
            "radii must be positive (a zero radius degenerates the circle)".into(),
        ));
    }
    let plane = fixtures::plane();
    let forms = scaling_experiment_forms(&plane);
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (name, form) in &forms {
        let mut values = Vec::with_capacity(radii.len());
        for &r in radii {
            let gamma = fixtures::circle_cube(r, &plane);
            let v = lambda_eval_adaptive(form, &gamma, base_order)?;
            rows.push(ScalingRow {
                form: name.clone(),
                radius: r,
                value: v.value,
                quad_order: v.order_used,
                flagged: v.flagged,
            });
            values.push((r, v.value));
        }
        let max_abs = values.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
        if radii.len() >= 2 && max_abs > 1e-10 {
            fits.push(fit_slope(name, &values));
        }
    }
    Ok(ScalingReport { rows, fits })
}

fn fit_slope(name: &str, values: &[(f64, f64)]) -> SlopeFit {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .filter(|(_, v)| v.abs() > 0.0)
        .map(|(r, v)| (r.ln(), v.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    SlopeFit {
        form: name.to_string(),
        slope,
        r_squared,
    }
}
