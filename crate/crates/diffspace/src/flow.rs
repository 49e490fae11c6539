//! Derivations, tangent vectors, vector-field diagnostics, and integral
//! curves on space models.
//!
//! Curves are integrated in ambient coordinates with an adaptive embedded
//! Runge-Kutta pair (Dormand-Prince 5(4), cubic-Hermite dense output).
//! Membership is monitored along the trajectory; when the residual crosses
//! tolerance the exit time is located by bisection on the dense output. A
//! maximal-domain endpoint therefore records where the curve leaves the
//! space, a state-norm cap records blow-up, and a start whose trajectory
//! cannot move at all (both one-sided domains under ten minimum steps, or a
//! stationary start point) is reported as collapsed to the point.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::orbit::FiniteGroupAction;
use crate::smooth::SmoothMap;
use crate::space::{SpaceRef, StructureElement};

/// A derivation at a point: base point plus ambient components.
#[derive(Clone, Debug)]
pub struct TangentVector {
    pub base: Vec<f64>,
    pub components: Vec<f64>,
}

/// Apply a tangent vector to a structure element: the directional derivative
/// of the representative at the base point.
pub fn derivation_apply(v: &TangentVector, e: &StructureElement) -> Result<f64> {
    if !e.space.contains(&v.base) {
        return Err(Error::Membership(format!(
            "base point {:?} is not on `{}`",
            v.base, e.space.name
        )));
    }
    let grad = e.rep.gradient(&v.base)?;
    Ok(grad.iter().zip(&v.components).map(|(g, c)| g * c).sum())
}

/// An ambient vector field together with the defining equations whose
/// derivative along the field must vanish on the space.
#[derive(Clone, Debug)]
pub struct VectorFieldModel {
    pub space: SpaceRef,
    pub field: SmoothMap,
    pub tangency_certificate: Vec<SmoothMap>,
}

impl VectorFieldModel {
    pub fn new(
        space: SpaceRef,
        field: SmoothMap,
        tangency_certificate: Vec<SmoothMap>,
    ) -> Result<Self> {
        if field.input_dim() != space.ambient_dim || field.output_dim() != space.ambient_dim {
            return Err(Error::dim(format!(
                "field must map R^{0} to R^{0}",
                space.ambient_dim
            )));
        }
        Ok(VectorFieldModel {
            space,
            field,
            tangency_certificate,
        })
    }

    /// Sampled tangency: max |∇H(x) · field(x)| over space samples for every
    /// certificate equation H.
    pub fn tangency_residual(&self, rng: &mut ChaCha8Rng, samples: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x = self.space.sampler.sample(rng)?;
            let v = self.field.evaluate(&x)?;
            for h in &self.tangency_certificate {
                let grad = h.gradient(&x)?;
                let dot: f64 = grad.iter().zip(&v).map(|(a, b)| a * b).sum();
                worst = worst.max(dot.abs());
            }
        }
        Ok(worst)
    }

    /// Max defining-equation residual at a point, falling back to the
    /// membership violation when no certificate is declared.
    fn point_residual(&self, x: &[f64]) -> f64 {
        if self.tangency_certificate.is_empty() {
            return self.space.violation(x).max(0.0);
        }
        let mut worst = 0.0f64;
        for h in &self.tangency_certificate {
            if let Ok(v) = h.evaluate_scalar(x) {
                worst = worst.max(v.abs());
            }
        }
        worst
    }
}

/// Step-size and monitoring controls for the integrator.
#[derive(Clone, Debug)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Residual threshold treated as leaving the space.
    pub membership_tol: f64,
    /// Infinity-norm cap treated as blow-up.
    pub state_cap: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: 0.1,
            min_step: 1e-12,
            max_steps: 2_000_000,
            membership_tol: 1e-8,
            state_cap: 1e6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum EndReason {
    SpanReached,
    LeftSpace,
    BlowUp,
    MinStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum ExitReason {
    MaxTime,
    LeftSpace,
    BlowUp,
    CollapsedToPoint,
}

/// An integrated (two-sided) integral curve.
#[derive(Clone, Debug)]
pub struct IntegralCurveResult {
    /// Strictly increasing sample times (backward samples reversed in).
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Field values at the samples, for dense interpolation.
    pub derivs: Vec<Vec<f64>>,
    /// Max defining-equation residual at each sample.
    pub residuals: Vec<f64>,
    /// Observed maximal domain (t_min, t_max) around 0.
    pub domain: (f64, f64),
    /// Whether each endpoint is open (the limit point is not attained in S).
    pub open: (bool, bool),
    pub end_reasons: (EndReason, EndReason),
    pub exit_reason: ExitReason,
}

impl IntegralCurveResult {
    pub fn domain_length(&self) -> f64 {
        self.domain.1 - self.domain.0
    }
}

const DP_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct StepOut {
    y5: Vec<f64>,
    err_norm: f64,
    k_last: Vec<f64>,
}

fn dp_step(
    field: &SmoothMap,
    y: &[f64],
    k1: &[f64],
    h: f64,
    ctrl: &StepControl,
) -> Result<StepOut> {
    let n = y.len();
    let mut k = vec![k1.to_vec()];
    for s in 0..6 {
        let mut ys = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            let a = DP_A[s][j];
            if a != 0.0 {
                for i in 0..n {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        let _ = DP_C[s];
        k.push(field.evaluate(&ys)?);
    }
    let mut y5 = y.to_vec();
    let mut y4 = y.to_vec();
    for (j, kj) in k.iter().enumerate() {
        for i in 0..n {
            y5[i] += h * DP_B5[j] * kj[i];
            y4[i] += h * DP_B4[j] * kj[i];
        }
    }
    let mut err = 0.0;
    for i in 0..n {
        let sc = ctrl.atol + ctrl.rtol * y[i].abs().max(y5[i].abs());
        let e = (y5[i] - y4[i]) / sc;
        err += e * e;
    }
    let err_norm = (err / n as f64).sqrt();
    Ok(StepOut {
        y5,
        k_last: k.pop().unwrap(),
        err_norm,
    })
}

fn hermite(y0: &[f64], f0: &[f64], y1: &[f64], f1: &[f64], h: f64, theta: f64) -> Vec<f64> {
    let t = theta;
    let h00 = 2.0 * t * t * t - 3.0 * t * t + 1.0;
    let h10 = t * t * t - 2.0 * t * t + t;
    let h01 = -2.0 * t * t * t + 3.0 * t * t;
    let h11 = t * t * t - t * t;
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

struct DirectionResult {
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    reached: f64,
    reason: EndReason,
}

/// Integrate one direction over [0, span] (span > 0 in internal time; the
/// caller flips the field for backward runs).
fn integrate_direction(
    field: &SmoothMap,
    violation: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    span: f64,
    ctrl: &StepControl,
) -> Result<DirectionResult> {
    let mut t = 0.0;
    let mut y = x0.to_vec();
    let mut f = field.evaluate(&y)?;
    // conservative first trial step; the controller grows it quickly
    let mut h = (span / 1000.0).min(ctrl.max_step).max(ctrl.min_step);
    let mut times = vec![0.0];
    let mut points = vec![y.clone()];
    let mut derivs = vec![f.clone()];
    let mut steps = 0usize;

    while t < span {
        if steps >= ctrl.max_steps {
            return Err(Error::Construction(
                "integration exceeded the step budget".into(),
            ));
        }
        steps += 1;
        h = h.min(span - t).max(ctrl.min_step);
        let out = dp_step(field, &y, &f, h, ctrl)?;
        if out.err_norm > 1.0 {
            let shrink = (0.9 * out.err_norm.powf(-0.2)).max(0.2);
            let next = h * shrink;
            if next < ctrl.min_step {
                return Ok(DirectionResult {
                    times,
                    points,
                    derivs,
                    reached: t,
                    reason: EndReason::MinStep,
                });
            }
            h = next;
            continue;
        }
        let t_new = t + h;
        let y_new = out.y5;
        let f_new = out.k_last;

        if y_new.iter().any(|v| v.abs() > ctrl.state_cap) {
            return Ok(DirectionResult {
                times,
                points,
                derivs,
                reached: t,
                reason: EndReason::BlowUp,
            });
        }

        if violation(&y_new) > 0.0 {
            // bisect the crossing on the dense output to 1e-10 in time
            let mut lo = 0.0f64;
            let mut hi = 1.0f64;
            while (hi - lo) * h > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let ym = hermite(&y, &f, &y_new, &f_new, h, mid);
                if violation(&ym) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let t_exit = t + lo * h;
            let y_exit = hermite(&y, &f, &y_new, &f_new, h, lo);
            if t_exit > t {
                let f_exit = field.evaluate(&y_exit).unwrap_or_else(|_| f.clone());
                times.push(t_exit);
                points.push(y_exit);
                derivs.push(f_exit);
            }
            return Ok(DirectionResult {
                times,
                points,
                derivs,
                reached: t_exit,
                reason: EndReason::LeftSpace,
            });
        }

        t = t_new;
        y = y_new;
        f = f_new;
        times.push(t);
        points.push(y.clone());
        derivs.push(f.clone());
        let grow = if out.err_norm == 0.0 {
            5.0
        } else {
            (0.9 * out.err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * grow).min(ctrl.max_step);
    }
    Ok(DirectionResult {
        times,
        points,
        derivs,
        reached: span,
        reason: EndReason::SpanReached,
    })
}

/// Integrate the maximal trajectory of an ambient field through `x0` over
/// `t_span = (t_back, t_fwd)` with `t_back <= 0 <= t_fwd`.
pub fn integrate_curve(
    model: &VectorFieldModel,
    x0: &[f64],
    t_span: (f64, f64),
    ctrl: &StepControl,
) -> Result<IntegralCurveResult> {
    if !model.space.contains(x0) {
        return Err(Error::Membership(format!(
            "start point {x0:?} is not on `{}`",
            model.space.name
        )));
    }
    if !(t_span.0 <= 0.0 && t_span.1 >= 0.0) {
        return Err(Error::Construction(
            "time span must contain 0 as (t_back <= 0 <= t_fwd)".into(),
        ));
    }

    let f0 = model.field.evaluate(x0)?;
    if f0.iter().all(|v| *v == 0.0) {
        // the trajectory is pinned at the start point
        return Ok(IntegralCurveResult {
            times: vec![0.0],
            points: vec![x0.to_vec()],
            derivs: vec![f0],
            residuals: vec![model.point_residual(x0)],
            domain: (0.0, 0.0),
            open: (false, false),
            end_reasons: (EndReason::SpanReached, EndReason::SpanReached),
            exit_reason: ExitReason::CollapsedToPoint,
        });
    }

    let tol = ctrl.membership_tol;
    let violation = |x: &[f64]| model.space.violation(x) - (tol - model.space.membership.tol);
    // membership.tol is already folded into violation(); widen only when the
    // caller requests a looser monitoring tolerance
    let violation: Box<dyn Fn(&[f64]) -> f64> = if tol == model.space.membership.tol {
        Box::new(|x: &[f64]| model.space.violation(x))
    } else {
        Box::new(violation)
    };

    let fwd = integrate_direction(&model.field, &*violation, x0, t_span.1, ctrl)?;
    let neg_field = {
        let outputs = model
            .field
            .outputs()
            .iter()
            .map(|o| crate::smooth::neg(o.clone()))
            .collect();
        SmoothMap::new(model.space.ambient_dim, outputs)?
    };
    let back = integrate_direction(&neg_field, &*violation, x0, -t_span.0, ctrl)?;

    let mut times: Vec<f64> = back.times.iter().skip(1).map(|t| -t).rev().collect();
    let mut points: Vec<Vec<f64>> = back.points.iter().skip(1).rev().cloned().collect();
    // backward derivatives were taken against the negated field
    let mut derivs: Vec<Vec<f64>> = back
        .derivs
        .iter()
        .skip(1)
        .rev()
        .map(|d| d.iter().map(|v| -v).collect())
        .collect();
    times.extend(fwd.times.iter().copied());
    points.extend(fwd.points.iter().cloned());
    derivs.extend(fwd.derivs.iter().cloned());
    let residuals = points.iter().map(|p| model.point_residual(p)).collect();

    let domain = (-back.reached, fwd.reached);
    let collapse_window = 10.0 * ctrl.min_step;
    let collapsed = domain.1 < collapse_window && -domain.0 < collapse_window;
    let exit_reason = if collapsed {
        ExitReason::CollapsedToPoint
    } else if fwd.reason == EndReason::LeftSpace || back.reason == EndReason::LeftSpace {
        ExitReason::LeftSpace
    } else if fwd.reason == EndReason::BlowUp || back.reason == EndReason::BlowUp {
        ExitReason::BlowUp
    } else {
        ExitReason::MaxTime
    };
    let open_of = |r: EndReason| !matches!(r, EndReason::MinStep);
    Ok(IntegralCurveResult {
        times,
        points,
        derivs,
        residuals,
        domain,
        open: (open_of(back.reason), open_of(fwd.reason)),
        end_reasons: (back.reason, fwd.reason),
        exit_reason,
    })
}

/// One row of a uniform-neighborhood probe.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ProbeRow {
    pub radius: f64,
    pub min_domain_length: f64,
    pub all_domains_open: bool,
    pub samples: usize,
}

/// Sample points of the space within each radius of `center` and report the
/// minimum two-sided domain length of their maximal trajectories. A genuine
/// local one-parameter group keeps the minimum bounded away from zero as the
/// radius shrinks; domains collapsing with the radius certify that the
/// derivation is not a vector field. Each radius re-derives its RNG from the
/// seed so draws are comparable across radii.
pub fn uniform_epsilon_probe(
    model: &VectorFieldModel,
    center: &[f64],
    radii: &[f64],
    samples: usize,
    span_cap: f64,
    ctrl: &StepControl,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    if !model.space.contains(center) {
        return Err(Error::Membership("probe center not on the space".into()));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut rng = crate::seeded_rng(seed);
        let mut min_len = f64::INFINITY;
        let mut all_open = true;
        for _ in 0..samples {
            let p = model.space.sample_near(center, r, &mut rng)?;
            let res = integrate_curve(model, &p, (-span_cap, span_cap), ctrl)?;
            min_len = min_len.min(res.domain_length());
            all_open &= res.open.0 && res.open.1;
        }
        rows.push(ProbeRow {
            radius: r,
            min_domain_length: min_len,
            all_domains_open: all_open,
            samples,
        });
    }
    Ok(rows)
}

/// Check that the flow of an invariant field commutes with the group action:
/// max over samples of |g·φ_t(x) - φ_t(g·x)|. The field's equivariance is
/// verified by sampling first.
pub fn flow_commutation_check(
    model: &VectorFieldModel,
    action: &FiniteGroupAction,
    t_samples: &[f64],
    n_points: usize,
    ctrl: &StepControl,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    check_equivariance(model, action, rng, 50)?;
    let span = t_samples
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    let mut worst = 0.0f64;
    for _ in 0..n_points {
        let x = model.space.sampler.sample(rng)?;
        for g in 0..action.order() {
            let gx = action.apply(g, &x);
            if !model.space.contains(&gx) {
                return Err(Error::Membership(
                    "action does not preserve the space on samples".into(),
                ));
            }
            let curve_x = integrate_curve(model, &x, span, ctrl)?;
            let curve_gx = integrate_curve(model, &gx, span, ctrl)?;
            for &t in t_samples {
                let a = sample_at(&curve_x, t);
                let b = sample_at(&curve_gx, t);
                if let (Some(a), Some(b)) = (a, b) {
                    let ga = action.apply(g, &a);
                    let d = ga
                        .iter()
                        .zip(&b)
                        .map(|(p, q)| (p - q).abs())
                        .fold(0.0f64, f64::max);
                    worst = worst.max(d);
                }
            }
        }
    }
    Ok(worst)
}

fn check_equivariance(
    model: &VectorFieldModel,
    action: &FiniteGroupAction,
    rng: &mut ChaCha8Rng,
    samples: usize,
) -> Result<()> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = model.space.sampler.sample(rng)?;
        let fx = model.field.evaluate(&x)?;
        for g in 0..action.order() {
            let gx = action.apply(g, &x);
            let f_gx = model.field.evaluate(&gx)?;
            let g_fx = action.apply(g, &fx);
            for (a, b) in f_gx.iter().zip(&g_fx) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    if worst > 1e-8 {
        return Err(Error::Precondition(format!(
            "field is not invariant under the action (residual {worst:.3e})"
        )));
    }
    Ok(())
}

/// Cubic-Hermite interpolation of a stored trajectory at time t.
pub fn sample_at(curve: &IntegralCurveResult, t: f64) -> Option<Vec<f64>> {
    if t < curve.domain.0 - 1e-12 || t > curve.domain.1 + 1e-12 {
        return None;
    }
    let times = &curve.times;
    match times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
        Ok(i) => Some(curve.points[i].clone()),
        Err(i) => {
            if i == 0 || i >= times.len() {
                return curve.points.last().cloned();
            }
            let (t0, t1) = (times[i - 1], times[i]);
            let h = t1 - t0;
            let theta = if h > 0.0 { (t - t0) / h } else { 0.0 };
            Some(hermite(
                &curve.points[i - 1],
                &curve.derivs[i - 1],
                &curve.points[i],
                &curve.derivs[i],
                h,
                theta,
            ))
        }
    }
}

/// Check that the orbit map intertwines an invariant field upstairs with a
/// declared induced field on the image coordinates: the relation
/// Dπ(x)·X(x) = X̄(π(x)) is verified by sampling, then both sides are
/// integrated independently and compared as
/// max |π(φ_t(m)) - φ̄_t(π(m))|.
#[allow(clippy::too_many_arguments)]
pub fn pushforward_check(
    model: &VectorFieldModel,
    action: &FiniteGroupAction,
    orbit_map: &SmoothMap,
    induced_field: &SmoothMap,
    downstairs: &SpaceRef,
    t_samples: &[f64],
    n_points: usize,
    ctrl: &StepControl,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    check_equivariance(model, action, rng, 50)?;
    // pointwise relatedness check
    let mut rel = 0.0f64;
    for _ in 0..50 {
        let x = model.space.sampler.sample(rng)?;
        let jet = orbit_map.jet(&x)?;
        let fx = model.field.evaluate(&x)?;
        let induced_at = induced_field.evaluate(&jet.value)?;
        for (row, ind) in jet.jacobian.iter().zip(&induced_at) {
            let dot: f64 = row.iter().zip(&fx).map(|(a, b)| a * b).sum();
            rel = rel.max((dot - ind).abs());
        }
    }
    if rel > 1e-7 {
        return Err(Error::Precondition(format!(
            "declared induced field is not orbit-related to the upstairs field (residual {rel:.3e})"
        )));
    }

    let down_model = VectorFieldModel::new(downstairs.clone(), induced_field.clone(), vec![])?;
    let span = t_samples
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    let mut worst = 0.0f64;
    for _ in 0..n_points {
        let m = model.space.sampler.sample(rng)?;
        let up = integrate_curve(model, &m, span, ctrl)?;
        let m_bar = orbit_map.evaluate(&m)?;
        let down = integrate_curve(&down_model, &m_bar, span, ctrl)?;
        for &t in t_samples {
            if let (Some(a), Some(b)) = (sample_at(&up, t), sample_at(&down, t)) {
                let pa = orbit_map.evaluate(&a)?;
                for (p, q) in pa.iter().zip(&b) {
                    worst = worst.max((p - q).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Fixed-step fifth-order propagation, exposed for order-verification tests.
pub fn fixed_step_endpoint(
    field: &SmoothMap,
    x0: &[f64],
    t_end: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let ctrl = StepControl::default();
    let h = t_end / steps as f64;
    let mut y = x0.to_vec();
    for _ in 0..steps {
        let k1 = field.evaluate(&y)?;
        let out = dp_step(field, &y, &k1, h, &ctrl)?;
        y = out.y5;
    }
    Ok(y)
}
