//! Expression-tree smooth maps with exact forward-mode derivatives.
//!
//! A [`SmoothMap`] is an immutable tree over input coordinates built from
//! constants, coordinate projections, arithmetic, integer powers, the
//! elementary transcendentals, and two flat-at-zero primitives (`bump` and its
//! one-sided variant) whose derivatives of every order vanish at the origin.
//! Subtrees are reference-counted and freely shared; composition substitutes
//! inner outputs for outer coordinates, so chain-rule correctness is
//! structural rather than numerical.
//!
//! Three evaluation modes are provided:
//! * plain `f64` evaluation,
//! * forward-mode dual propagation ([`SmoothMap::jet`]) giving exact first
//!   derivatives, and
//! * exact rational evaluation for the polynomial/rational fragment, used by
//!   identity checks that must come out to literal zero.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Maximum number of active derivative directions carried by the forward-mode
/// pass. Covers every use in this crate (box dimensions and ambient
/// dimensions stay small).
pub const MAX_GRAD: usize = 8;

#[derive(Debug)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    /// Integer power; negative exponents require a nonzero base.
    Pow(Arc<Expr>, i32),
    Exp(Arc<Expr>),
    Log(Arc<Expr>),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Sqrt(Arc<Expr>),
    /// `order`-th derivative of x ↦ e^(-1/x²), smoothly extended by 0 at 0.
    Bump(Arc<Expr>, u32),
    /// `order`-th derivative of the one-sided variant: e^(-1/x²) for x > 0,
    /// identically 0 for x ≤ 0.
    BumpPlus(Arc<Expr>, u32),
}

pub type ExprRef = Arc<Expr>;

// -------------------------------------------------------------------------
// constructors with light normalization
// -------------------------------------------------------------------------

pub fn cst(v: f64) -> ExprRef {
    Arc::new(Expr::Const(v))
}

pub fn coord(i: usize) -> ExprRef {
    Arc::new(Expr::Coord(i))
}

fn const_of(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(v) => Some(*v),
        _ => None,
    }
}

pub fn add(a: ExprRef, b: ExprRef) -> ExprRef {
    match (const_of(&a), const_of(&b)) {
        (Some(x), Some(y)) => cst(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Arc::new(Expr::Add(a, b)),
    }
}

pub fn sub(a: ExprRef, b: ExprRef) -> ExprRef {
    match (const_of(&a), const_of(&b)) {
        (Some(x), Some(y)) => cst(x - y),
        (_, Some(y)) if y == 0.0 => a,
        (Some(x), _) if x == 0.0 => neg(b),
        _ => Arc::new(Expr::Sub(a, b)),
    }
}

pub fn mul(a: ExprRef, b: ExprRef) -> ExprRef {
    match (const_of(&a), const_of(&b)) {
        (Some(x), Some(y)) => cst(x * y),
        (Some(x), _) if x == 0.0 => cst(0.0),
        (_, Some(y)) if y == 0.0 => cst(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Arc::new(Expr::Mul(a, b)),
    }
}

pub fn div(a: ExprRef, b: ExprRef) -> ExprRef {
    match (const_of(&a), const_of(&b)) {
        (Some(x), Some(y)) if y != 0.0 => cst(x / y),
        (Some(x), _) if x == 0.0 => cst(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Arc::new(Expr::Div(a, b)),
    }
}

pub fn neg(a: ExprRef) -> ExprRef {
    match const_of(&a) {
        Some(x) => cst(-x),
        None => Arc::new(Expr::Neg(a)),
    }
}

pub fn pow(a: ExprRef, k: i32) -> ExprRef {
    match k {
        0 => cst(1.0),
        1 => a,
        _ => match const_of(&a) {
            Some(x) => cst(x.powi(k)),
            None => Arc::new(Expr::Pow(a, k)),
        },
    }
}

pub fn exp(a: ExprRef) -> ExprRef {
    Arc::new(Expr::Exp(a))
}
pub fn log(a: ExprRef) -> ExprRef {
    Arc::new(Expr::Log(a))
}
pub fn sin(a: ExprRef) -> ExprRef {
    Arc::new(Expr::Sin(a))
}
pub fn cos(a: ExprRef) -> ExprRef {
    Arc::new(Expr::Cos(a))
}
pub fn sqrt(a: ExprRef) -> ExprRef {
    Arc::new(Expr::Sqrt(a))
}
pub fn bump(a: ExprRef) -> ExprRef {
    Arc::new(Expr::Bump(a, 0))
}
pub fn bump_plus(a: ExprRef) -> ExprRef {
    Arc::new(Expr::BumpPlus(a, 0))
}

// -------------------------------------------------------------------------
// flat primitive: derivatives of e^(-1/x²)
// -------------------------------------------------------------------------

/// Coefficients (ascending in u = 1/x) of the polynomial q_k with
/// d^k/dx^k e^(-1/x²) = q_k(1/x) e^(-1/x²) away from 0.
/// Recurrence: q_{k+1}(u) = 2 u³ q_k(u) - u² q_k'(u).
fn bump_poly(order: u32) -> Vec<f64> {
    let mut q = vec![1.0f64];
    for _ in 0..order {
        let mut next = vec![0.0; q.len() + 3];
        for (j, &c) in q.iter().enumerate() {
            next[j + 3] += 2.0 * c;
            if j >= 1 {
                next[j + 1] -= j as f64 * c;
            }
        }
        q = next;
    }
    q
}

fn bump_value(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let u = 1.0 / x;
    let u2 = u * u;
    // exp underflows to 0 long before the polynomial factor can matter
    if u2 > 745.0 {
        return 0.0;
    }
    let q = bump_poly(order);
    let mut poly = 0.0;
    for &c in q.iter().rev() {
        poly = poly * u + c;
    }
    poly * (-u2).exp()
}

fn bump_plus_value(order: u32, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        bump_value(order, x)
    }
}

// -------------------------------------------------------------------------
// evaluation
// -------------------------------------------------------------------------

fn eval_expr(e: &Expr, x: &[f64]) -> Result<f64> {
    Ok(match e {
        Expr::Const(v) => *v,
        Expr::Coord(i) => x[*i],
        Expr::Add(a, b) => eval_expr(a, x)? + eval_expr(b, x)?,
        Expr::Sub(a, b) => eval_expr(a, x)? - eval_expr(b, x)?,
        Expr::Mul(a, b) => eval_expr(a, x)? * eval_expr(b, x)?,
        Expr::Div(a, b) => {
            let d = eval_expr(b, x)?;
            if d == 0.0 {
                return Err(Error::eval("division by zero", e));
            }
            eval_expr(a, x)? / d
        }
        Expr::Neg(a) => -eval_expr(a, x)?,
        Expr::Pow(a, k) => {
            let v = eval_expr(a, x)?;
            if *k < 0 && v == 0.0 {
                return Err(Error::eval("negative power of zero", e));
            }
            v.powi(*k)
        }
        Expr::Exp(a) => eval_expr(a, x)?.exp(),
        Expr::Log(a) => {
            let v = eval_expr(a, x)?;
            if v <= 0.0 {
                return Err(Error::eval("log of non-positive value", e));
            }
            v.ln()
        }
        Expr::Sin(a) => eval_expr(a, x)?.sin(),
        Expr::Cos(a) => eval_expr(a, x)?.cos(),
        Expr::Sqrt(a) => {
            let v = eval_expr(a, x)?;
            if v < 0.0 {
                return Err(Error::eval("sqrt of negative value", e));
            }
            v.sqrt()
        }
        Expr::Bump(a, k) => bump_value(*k, eval_expr(a, x)?),
        Expr::BumpPlus(a, k) => bump_plus_value(*k, eval_expr(a, x)?),
    })
}

/// Value plus derivative directions, propagated forward through the tree.
#[derive(Clone, Copy, Debug)]
struct Dual {
    v: f64,
    d: [f64; MAX_GRAD],
}

impl Dual {
    fn constant(v: f64) -> Self {
        Dual {
            v,
            d: [0.0; MAX_GRAD],
        }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        let mut d = [0.0; MAX_GRAD];
        for i in 0..MAX_GRAD {
            d[i] = dv * self.d[i];
        }
        Dual { v, d }
    }
}

fn eval_dual(e: &Expr, x: &[Dual]) -> Result<Dual> {
    Ok(match e {
        Expr::Const(v) => Dual::constant(*v),
        Expr::Coord(i) => x[*i],
        Expr::Add(a, b) => {
            let (a, b) = (eval_dual(a, x)?, eval_dual(b, x)?);
            let mut d = a.d;
            for i in 0..MAX_GRAD {
                d[i] += b.d[i];
            }
            Dual { v: a.v + b.v, d }
        }
        Expr::Sub(a, b) => {
            let (a, b) = (eval_dual(a, x)?, eval_dual(b, x)?);
            let mut d = a.d;
            for i in 0..MAX_GRAD {
                d[i] -= b.d[i];
            }
            Dual { v: a.v - b.v, d }
        }
        Expr::Mul(a, b) => {
            let (a, b) = (eval_dual(a, x)?, eval_dual(b, x)?);
            let mut d = [0.0; MAX_GRAD];
            for i in 0..MAX_GRAD {
                d[i] = a.d[i] * b.v + a.v * b.d[i];
            }
            Dual { v: a.v * b.v, d }
        }
        Expr::Div(a, b) => {
            let (a, b) = (eval_dual(a, x)?, eval_dual(b, x)?);
            if b.v == 0.0 {
                return Err(Error::eval("division by zero", e));
            }
            let inv = 1.0 / b.v;
            let v = a.v * inv;
            let mut d = [0.0; MAX_GRAD];
            for i in 0..MAX_GRAD {
                d[i] = (a.d[i] - v * b.d[i]) * inv;
            }
            Dual { v, d }
        }
        Expr::Neg(a) => {
            let a = eval_dual(a, x)?;
            let mut d = a.d;
            for g in d.iter_mut() {
                *g = -*g;
            }
            Dual { v: -a.v, d }
        }
        Expr::Pow(a, k) => {
            let a = eval_dual(a, x)?;
            if *k < 0 && a.v == 0.0 {
                return Err(Error::eval("negative power of zero", e));
            }
            let v = a.v.powi(*k);
            let dv = *k as f64 * a.v.powi(*k - 1);
            a.chain(v, dv)
        }
        Expr::Exp(a) => {
            let a = eval_dual(a, x)?;
            let v = a.v.exp();
            a.chain(v, v)
        }
        Expr::Log(a) => {
            let a = eval_dual(a, x)?;
            if a.v <= 0.0 {
                return Err(Error::eval("log of non-positive value", e));
            }
            a.chain(a.v.ln(), 1.0 / a.v)
        }
        Expr::Sin(a) => {
            let a = eval_dual(a, x)?;
            a.chain(a.v.sin(), a.v.cos())
        }
        Expr::Cos(a) => {
            let a = eval_dual(a, x)?;
            a.chain(a.v.cos(), -a.v.sin())
        }
        Expr::Sqrt(a) => {
            let a = eval_dual(a, x)?;
            if a.v < 0.0 {
                return Err(Error::eval("sqrt of negative value", e));
            }
            if a.v == 0.0 && a.d.iter().any(|&g| g != 0.0) {
                return Err(Error::eval("sqrt not differentiable at zero", e));
            }
            let v = a.v.sqrt();
            let dv = if a.v == 0.0 { 0.0 } else { 0.5 / v };
            a.chain(v, dv)
        }
        Expr::Bump(a, k) => {
            let a = eval_dual(a, x)?;
            a.chain(bump_value(*k, a.v), bump_value(*k + 1, a.v))
        }
        Expr::BumpPlus(a, k) => {
            let a = eval_dual(a, x)?;
            a.chain(bump_plus_value(*k, a.v), bump_plus_value(*k + 1, a.v))
        }
    })
}

fn eval_rational_expr(e: &Expr, x: &[BigRational]) -> Result<BigRational> {
    Ok(match e {
        Expr::Const(v) => {
            BigRational::from_f64(*v).ok_or_else(|| Error::eval("non-finite constant", e))?
        }
        Expr::Coord(i) => x[*i].clone(),
        Expr::Add(a, b) => eval_rational_expr(a, x)? + eval_rational_expr(b, x)?,
        Expr::Sub(a, b) => eval_rational_expr(a, x)? - eval_rational_expr(b, x)?,
        Expr::Mul(a, b) => eval_rational_expr(a, x)? * eval_rational_expr(b, x)?,
        Expr::Div(a, b) => {
            let d = eval_rational_expr(b, x)?;
            if d.is_zero() {
                return Err(Error::eval("division by zero", e));
            }
            eval_rational_expr(a, x)? / d
        }
        Expr::Neg(a) => -eval_rational_expr(a, x)?,
        Expr::Pow(a, k) => {
            let v = eval_rational_expr(a, x)?;
            if *k < 0 && v.is_zero() {
                return Err(Error::eval("negative power of zero", e));
            }
            if *k >= 0 {
                num_traits::pow::pow(v, *k as usize)
            } else {
                BigRational::from_integer(BigInt::from(1)) / num_traits::pow::pow(v, (-*k) as usize)
            }
        }
        _ => {
            return Err(Error::eval(
                "transcendental node has no exact rational value",
                e,
            ))
        }
    })
}

// -------------------------------------------------------------------------
// structural operations
// -------------------------------------------------------------------------

/// Replace each `Coord(i)` by `args[i]`.
fn subst(e: &ExprRef, args: &[ExprRef]) -> ExprRef {
    match &**e {
        Expr::Const(_) => e.clone(),
        Expr::Coord(i) => args[*i].clone(),
        Expr::Add(a, b) => add(subst(a, args), subst(b, args)),
        Expr::Sub(a, b) => sub(subst(a, args), subst(b, args)),
        Expr::Mul(a, b) => mul(subst(a, args), subst(b, args)),
        Expr::Div(a, b) => div(subst(a, args), subst(b, args)),
        Expr::Neg(a) => neg(subst(a, args)),
        Expr::Pow(a, k) => pow(subst(a, args), *k),
        Expr::Exp(a) => exp(subst(a, args)),
        Expr::Log(a) => log(subst(a, args)),
        Expr::Sin(a) => sin(subst(a, args)),
        Expr::Cos(a) => cos(subst(a, args)),
        Expr::Sqrt(a) => sqrt(subst(a, args)),
        Expr::Bump(a, k) => Arc::new(Expr::Bump(subst(a, args), *k)),
        Expr::BumpPlus(a, k) => Arc::new(Expr::BumpPlus(subst(a, args), *k)),
    }
}

/// Symbolic partial derivative along `axis`, as a new tree.
pub fn partial(e: &ExprRef, axis: usize) -> ExprRef {
    match &**e {
        Expr::Const(_) => cst(0.0),
        Expr::Coord(i) => cst(if *i == axis { 1.0 } else { 0.0 }),
        Expr::Add(a, b) => add(partial(a, axis), partial(b, axis)),
        Expr::Sub(a, b) => sub(partial(a, axis), partial(b, axis)),
        Expr::Mul(a, b) => add(
            mul(partial(a, axis), b.clone()),
            mul(a.clone(), partial(b, axis)),
        ),
        Expr::Div(a, b) => div(
            sub(
                mul(partial(a, axis), b.clone()),
                mul(a.clone(), partial(b, axis)),
            ),
            pow(b.clone(), 2),
        ),
        Expr::Neg(a) => neg(partial(a, axis)),
        Expr::Pow(a, k) => mul(
            mul(cst(*k as f64), pow(a.clone(), *k - 1)),
            partial(a, axis),
        ),
        Expr::Exp(a) => mul(exp(a.clone()), partial(a, axis)),
        Expr::Log(a) => div(partial(a, axis), a.clone()),
        Expr::Sin(a) => mul(cos(a.clone()), partial(a, axis)),
        Expr::Cos(a) => neg(mul(sin(a.clone()), partial(a, axis))),
        Expr::Sqrt(a) => div(partial(a, axis), mul(cst(2.0), sqrt(a.clone()))),
        Expr::Bump(a, k) => mul(Arc::new(Expr::Bump(a.clone(), *k + 1)), partial(a, axis)),
        Expr::BumpPlus(a, k) => mul(
            Arc::new(Expr::BumpPlus(a.clone(), *k + 1)),
            partial(a, axis),
        ),
    }
}

fn mentions_coord(e: &Expr, axis: usize) -> bool {
    match e {
        Expr::Const(_) => false,
        Expr::Coord(i) => *i == axis,
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            mentions_coord(a, axis) || mentions_coord(b, axis)
        }
        Expr::Neg(a)
        | Expr::Pow(a, _)
        | Expr::Exp(a)
        | Expr::Log(a)
        | Expr::Sin(a)
        | Expr::Cos(a)
        | Expr::Sqrt(a)
        | Expr::Bump(a, _)
        | Expr::BumpPlus(a, _) => mentions_coord(a, axis),
    }
}

fn max_coord(e: &Expr) -> Option<usize> {
    match e {
        Expr::Const(_) => None,
        Expr::Coord(i) => Some(*i),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            match (max_coord(a), max_coord(b)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            }
        }
        Expr::Neg(a)
        | Expr::Pow(a, _)
        | Expr::Exp(a)
        | Expr::Log(a)
        | Expr::Sin(a)
        | Expr::Cos(a)
        | Expr::Sqrt(a)
        | Expr::Bump(a, _)
        | Expr::BumpPlus(a, _) => max_coord(a),
    }
}

fn fmt_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(v) => write!(f, "{v}"),
        Expr::Coord(i) => write!(f, "x{}", i + 1),
        Expr::Add(a, b) => {
            write!(f, "(")?;
            fmt_expr(a, f)?;
            write!(f, " + ")?;
            fmt_expr(b, f)?;
            write!(f, ")")
        }
        Expr::Sub(a, b) => {
            write!(f, "(")?;
            fmt_expr(a, f)?;
            write!(f, " - ")?;
            fmt_expr(b, f)?;
            write!(f, ")")
        }
        Expr::Mul(a, b) => {
            write!(f, "(")?;
            fmt_expr(a, f)?;
            write!(f, "*")?;
            fmt_expr(b, f)?;
            write!(f, ")")
        }
        Expr::Div(a, b) => {
            write!(f, "(")?;
            fmt_expr(a, f)?;
            write!(f, "/")?;
            fmt_expr(b, f)?;
            write!(f, ")")
        }
        Expr::Neg(a) => {
            write!(f, "(-")?;
            fmt_expr(a, f)?;
            write!(f, ")")
        }
        Expr::Pow(a, k) => {
            fmt_expr(a, f)?;
            write!(f, "^{k}")
        }
        Expr::Exp(a) => {
            write!(f, "exp(")?;
            fmt_expr(a, f)?;
            write!(f, ")")
        }
        Expr::Log(a) => {
            write!(f, "log(")?;
            fmt_expr(a, f)?;
            write!(f, ")")
        }
        Expr::Sin(a) => {
            write!(f, "sin(")?;
            fmt_expr(a, f)?;
            write!(f, ")")
        }
        Expr::Cos(a) => {
            write!(f, "cos(")?;
            fmt_expr(a, f)?;
            write!(f, ")")
        }
        Expr::Sqrt(a) => {
            write!(f, "sqrt(")?;
            fmt_expr(a, f)?;
            write!(f, ")")
        }
        Expr::Bump(a, k) => {
            write!(f, "bump[{k}](")?;
            fmt_expr(a, f)?;
            write!(f, ")")
        }
        Expr::BumpPlus(a, k) => {
            write!(f, "bump_plus[{k}](")?;
            fmt_expr(a, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f)
    }
}

// -------------------------------------------------------------------------
// SmoothMap
// -------------------------------------------------------------------------

/// A differentiable map R^input_dim -> R^output_dim as one expression tree per
/// output component. Immutable; cloning shares subtrees.
#[derive(Clone, Debug)]
pub struct SmoothMap {
    input_dim: usize,
    outputs: Vec<ExprRef>,
}

/// Value and exact Jacobian of a [`SmoothMap`] at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: Vec<f64>,
    /// Row `r` is the gradient of output `r`; dimensions output_dim x input_dim.
    pub jacobian: Vec<Vec<f64>>,
}

impl SmoothMap {
    pub fn new(input_dim: usize, outputs: Vec<ExprRef>) -> Result<Self> {
        for o in &outputs {
            if let Some(m) = max_coord(o) {
                if m >= input_dim {
                    return Err(Error::dim(format!(
                        "expression references x{} but the map has {} input(s)",
                        m + 1,
                        input_dim
                    )));
                }
            }
        }
        Ok(SmoothMap { input_dim, outputs })
    }

    pub fn scalar(input_dim: usize, body: ExprRef) -> Result<Self> {
        SmoothMap::new(input_dim, vec![body])
    }

    /// Identity map on R^n.
    pub fn identity(n: usize) -> Self {
        SmoothMap {
            input_dim: n,
            outputs: (0..n).map(coord).collect(),
        }
    }

    /// Constant map R^n -> R^m.
    pub fn constant(input_dim: usize, values: &[f64]) -> Self {
        SmoothMap {
            input_dim,
            outputs: values.iter().map(|&v| cst(v)).collect(),
        }
    }

    /// Linear map from a row-major matrix (rows x cols).
    pub fn linear(matrix: &[Vec<f64>]) -> Result<Self> {
        let cols = matrix.first().map(|r| r.len()).unwrap_or(0);
        let mut outputs = Vec::with_capacity(matrix.len());
        for row in matrix {
            if row.len() != cols {
                return Err(Error::dim("ragged matrix"));
            }
            let mut acc = cst(0.0);
            for (j, &c) in row.iter().enumerate() {
                acc = add(acc, mul(cst(c), coord(j)));
            }
            outputs.push(acc);
        }
        SmoothMap::new(cols, outputs)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.len()
    }

    pub fn outputs(&self) -> &[ExprRef] {
        &self.outputs
    }

    pub fn output(&self, i: usize) -> &ExprRef {
        &self.outputs[i]
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::dim(format!(
                "point has dimension {}, map expects {}",
                x.len(),
                self.input_dim
            )));
        }
        self.outputs.iter().map(|o| eval_expr(o, x)).collect()
    }

    pub fn evaluate_scalar(&self, x: &[f64]) -> Result<f64> {
        let v = self.evaluate(x)?;
        if v.len() != 1 {
            return Err(Error::dim("expected a scalar map"));
        }
        Ok(v[0])
    }

    /// Exact value and Jacobian by forward-mode dual propagation.
    pub fn jet(&self, x: &[f64]) -> Result<Jet> {
        if x.len() != self.input_dim {
            return Err(Error::dim(format!(
                "point has dimension {}, map expects {}",
                x.len(),
                self.input_dim
            )));
        }
        if self.input_dim > MAX_GRAD {
            return Err(Error::dim(format!(
                "jet supports at most {MAX_GRAD} inputs, map has {}",
                self.input_dim
            )));
        }
        let mut seeds = Vec::with_capacity(x.len());
        for (i, &v) in x.iter().enumerate() {
            let mut d = [0.0; MAX_GRAD];
            d[i] = 1.0;
            seeds.push(Dual { v, d });
        }
        let mut value = Vec::with_capacity(self.outputs.len());
        let mut jacobian = Vec::with_capacity(self.outputs.len());
        for o in &self.outputs {
            let r = eval_dual(o, &seeds)?;
            value.push(r.v);
            jacobian.push(r.d[..self.input_dim].to_vec());
        }
        Ok(Jet { value, jacobian })
    }

    /// Gradient of a scalar map.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let j = self.jet(x)?;
        if j.jacobian.len() != 1 {
            return Err(Error::dim("expected a scalar map"));
        }
        Ok(j.jacobian.into_iter().next().unwrap())
    }

    /// Exact rational evaluation; restricted to the polynomial/rational
    /// fragment of the tree language.
    pub fn evaluate_rational(&self, x: &[BigRational]) -> Result<Vec<BigRational>> {
        if x.len() != self.input_dim {
            return Err(Error::dim("rational point dimension mismatch"));
        }
        self.outputs
            .iter()
            .map(|o| eval_rational_expr(o, x))
            .collect()
    }

    /// Composition `outer ∘ inner` by substituting inner outputs for outer
    /// coordinates.
    pub fn compose(outer: &SmoothMap, inner: &SmoothMap) -> Result<SmoothMap> {
        if inner.output_dim() != outer.input_dim() {
            return Err(Error::dim(format!(
                "cannot compose: inner produces {} value(s), outer expects {}",
                inner.output_dim(),
                outer.input_dim()
            )));
        }
        let outputs = outer
            .outputs
            .iter()
            .map(|o| subst(o, &inner.outputs))
            .collect();
        Ok(SmoothMap {
            input_dim: inner.input_dim,
            outputs,
        })
    }

    /// Componentwise symbolic partial derivative along `axis`.
    pub fn partial(&self, axis: usize) -> Result<SmoothMap> {
        if axis >= self.input_dim {
            return Err(Error::dim("partial axis out of range"));
        }
        Ok(SmoothMap {
            input_dim: self.input_dim,
            outputs: self.outputs.iter().map(|o| partial(o, axis)).collect(),
        })
    }

    /// Does any output reference input coordinate `axis`?
    pub fn mentions_input(&self, axis: usize) -> bool {
        self.outputs.iter().any(|o| mentions_coord(o, axis))
    }

    /// Is output `i` exactly the coordinate projection onto `axis`?
    pub fn output_is_coord(&self, i: usize, axis: usize) -> bool {
        matches!(&*self.outputs[i], Expr::Coord(j) if *j == axis)
    }

    /// Stack several scalar maps sharing an input dimension into one map.
    pub fn stack(input_dim: usize, parts: &[SmoothMap]) -> Result<SmoothMap> {
        let mut outputs = Vec::new();
        for p in parts {
            if p.input_dim != input_dim {
                return Err(Error::dim("stacked maps must share the input dimension"));
            }
            outputs.extend(p.outputs.iter().cloned());
        }
        SmoothMap::new(input_dim, outputs)
    }
}

impl fmt::Display for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, o) in self.outputs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            fmt_expr(o, f)?;
        }
        write!(f, ")")
    }
}

/// Exact rational from an `f64` (every finite double is dyadic).
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_f64(v)
}

/// Round-trip a rational to the nearest double, for mixed-mode checks.
pub fn rational_to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        if v.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}
