//! Models of differential spaces: subsets of R^n carrying a generated family
//! of smooth functions.
//!
//! A [`SpaceModel`] is an ambient dimension, a membership predicate given in
//! disjunctive normal form over equality/inequality constraints, a seedable
//! point sampler, and a finite generator list. Functions on the space are
//! represented extensionally by ambient [`SmoothMap`]s ([`StructureElement`]);
//! two elements are considered equal on the space when they agree at sampled
//! points within tolerance. The family of functions is closed under
//! composition with smooth outer maps by construction; no membership test for
//! arbitrary functions is attempted.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::smooth::{self, SmoothMap};

/// Default tolerance on membership residuals.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Default tolerance for extensional equality of structure elements.
pub const ELEMENT_EQ_TOL: f64 = 1e-9;

/// One constraint of a membership clause, as a scalar ambient map.
#[derive(Clone, Debug)]
pub enum Constraint {
    /// |expr(x)| <= tol
    Zero(SmoothMap),
    /// expr(x) >= -tol
    NonNeg(SmoothMap),
    /// expr(x) < 0, strict (open region)
    Neg(SmoothMap),
}

/// Conjunction of constraints.
#[derive(Clone, Debug, Default)]
pub struct Clause {
    pub constraints: Vec<Constraint>,
}

/// Membership predicate in disjunctive normal form: the point belongs to the
/// space when at least one clause is satisfied. An empty clause list with one
/// empty clause models all of R^n.
#[derive(Clone, Debug)]
pub struct Membership {
    pub clauses: Vec<Clause>,
    pub tol: f64,
}

impl Membership {
    pub fn whole_space() -> Self {
        Membership {
            clauses: vec![Clause::default()],
            tol: MEMBERSHIP_TOL,
        }
    }

    pub fn new(clauses: Vec<Clause>, tol: f64) -> Self {
        Membership { clauses, tol }
    }

    /// Signed violation: <= 0 inside (within tolerance), > 0 outside. The
    /// value is the best clause's worst constraint, so it is continuous along
    /// trajectories and usable for event bisection.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for clause in &self.clauses {
            let mut worst = -1.0f64;
            for c in &clause.constraints {
                let v = match c {
                    Constraint::Zero(m) => match m.evaluate_scalar(x) {
                        Ok(v) => v.abs() - self.tol,
                        Err(_) => f64::INFINITY,
                    },
                    Constraint::NonNeg(m) => match m.evaluate_scalar(x) {
                        Ok(v) => -v - self.tol,
                        Err(_) => f64::INFINITY,
                    },
                    Constraint::Neg(m) => m.evaluate_scalar(x).unwrap_or(f64::INFINITY),
                };
                worst = worst.max(v);
            }
            best = best.min(worst);
        }
        best
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.violation(x) <= 0.0
    }
}

/// One branch of a sampler.
#[derive(Clone, Debug)]
pub enum SamplerNode {
    /// A fixed list of points (used to pin singular strata).
    Points(Vec<Vec<f64>>),
    /// Parametrized patch: draw parameters uniformly from `ranges`, push
    /// through `map` (R^k -> R^n).
    Param {
        map: SmoothMap,
        ranges: Vec<(f64, f64)>,
    },
    /// Product with the unit interval: draw t in `[0,1]` and a point of the
    /// inner sampler.
    WithInterval(Arc<Sampler>),
    /// Push an inner sampler through a map (orbit maps, parametrized images).
    Mapped { inner: Arc<Sampler>, map: SmoothMap },
}

/// Radius-aware parametrized patch for probing around a center: the map's
/// first input is the probe radius, the rest are drawn from `ranges`.
#[derive(Clone, Debug)]
pub struct NearPatch {
    pub map: SmoothMap,
    pub ranges: Vec<(f64, f64)>,
}

/// Seedable, reentrant point sampler. Weighted branch choice followed by a
/// branch draw; every stream is independent given its own RNG.
#[derive(Clone, Debug, Default)]
pub struct Sampler {
    pub branches: Vec<(f64, SamplerNode)>,
    /// Optional radius-aware patches used by `sample_near`.
    pub near: Vec<NearPatch>,
}

impl Sampler {
    pub fn from_branches(branches: Vec<(f64, SamplerNode)>) -> Self {
        Sampler {
            branches,
            near: Vec::new(),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if self.branches.is_empty() {
            return Err(Error::Construction("sampler has no branches".into()));
        }
        let total: f64 = self.branches.iter().map(|(w, _)| *w).sum();
        let mut pick = rng.gen::<f64>() * total;
        for (w, node) in &self.branches {
            pick -= w;
            if pick <= 0.0 {
                return self.draw(node, rng);
            }
        }
        let node = &self.branches.last().unwrap().1;
        self.draw(node, rng)
    }

    fn draw(&self, node: &SamplerNode, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match node {
            SamplerNode::Points(pts) => {
                if pts.is_empty() {
                    return Err(Error::Construction("point sampler branch is empty".into()));
                }
                let i = rng.gen_range(0..pts.len());
                Ok(pts[i].clone())
            }
            SamplerNode::Param { map, ranges } => {
                let params: Vec<f64> = ranges
                    .iter()
                    .map(|&(a, b)| a + (b - a) * rng.gen::<f64>())
                    .collect();
                map.evaluate(&params)
            }
            SamplerNode::WithInterval(inner) => {
                let t = rng.gen::<f64>();
                let mut p = vec![t];
                p.extend(inner.sample(rng)?);
                Ok(p)
            }
            SamplerNode::Mapped { inner, map } => {
                let p = inner.sample(rng)?;
                map.evaluate(&p)
            }
        }
    }
}

/// A differential space presented inside R^ambient_dim.
#[derive(Debug)]
pub struct SpaceModel {
    pub name: String,
    pub ambient_dim: usize,
    pub membership: Membership,
    pub sampler: Sampler,
    pub generators: Vec<SmoothMap>,
}

pub type SpaceRef = Arc<SpaceModel>;

/// A function on the space, as the restriction of an ambient smooth map.
#[derive(Clone, Debug)]
pub struct StructureElement {
    pub rep: SmoothMap,
    pub space: SpaceRef,
}

impl StructureElement {
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.rep.evaluate_scalar(x)
    }

    /// Extensional equality on the space: agreement at `n` sampled points.
    pub fn eq_on_space(
        &self,
        other: &StructureElement,
        rng: &mut ChaCha8Rng,
        n: usize,
    ) -> Result<bool> {
        for _ in 0..n {
            let x = self.space.sampler.sample(rng)?;
            let a = self.rep.evaluate_scalar(&x)?;
            let b = other.rep.evaluate_scalar(&x)?;
            if (a - b).abs() > ELEMENT_EQ_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Construct a space model, validating the sampler against membership.
pub fn make_space(
    name: impl Into<String>,
    ambient_dim: usize,
    membership: Membership,
    sampler: Sampler,
    generators: Vec<SmoothMap>,
) -> Result<SpaceRef> {
    if generators.is_empty() {
        return Err(Error::Construction(
            "generator list must be nonempty (coordinate projections are allowed)".into(),
        ));
    }
    for g in &generators {
        if g.input_dim() != ambient_dim || g.output_dim() != 1 {
            return Err(Error::dim(format!(
                "generator must be a scalar map on R^{ambient_dim}"
            )));
        }
    }
    let space = SpaceModel {
        name: name.into(),
        ambient_dim,
        membership,
        sampler,
        generators,
    };
    // construction-time check: sampled points must satisfy membership
    let mut rng = crate::seeded_rng(0x5eed);
    for _ in 0..64 {
        let p = space.sampler.sample(&mut rng)?;
        if p.len() != ambient_dim {
            return Err(Error::Construction(format!(
                "sampler emits dimension {} but ambient is {ambient_dim}",
                p.len()
            )));
        }
        if !space.membership.contains(&p) {
            return Err(Error::Construction(format!(
                "sampler emitted {p:?}, which fails membership (violation {})",
                space.membership.violation(&p)
            )));
        }
    }
    Ok(Arc::new(space))
}

impl SpaceModel {
    /// R^n with coordinate generators.
    pub fn euclidean(n: usize) -> SpaceRef {
        let gens = (0..n)
            .map(|i| SmoothMap::scalar(n, smooth::coord(i)).unwrap())
            .collect();
        let sampler = Sampler::from_branches(vec![(
            1.0,
            SamplerNode::Param {
                map: SmoothMap::identity(n),
                ranges: vec![(-2.0, 2.0); n],
            },
        )]);
        make_space(
            format!("R^{n}"),
            n,
            Membership::whole_space(),
            sampler,
            gens,
        )
        .unwrap()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.membership.contains(x)
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        self.membership.violation(x)
    }

    /// Constant-one structure element.
    pub fn unit_element(self: &Arc<Self>) -> StructureElement {
        StructureElement {
            rep: SmoothMap::constant(self.ambient_dim, &[1.0]),
            space: self.clone(),
        }
    }

    /// Coordinate projection as a structure element.
    pub fn coord_element(self: &Arc<Self>, axis: usize) -> StructureElement {
        StructureElement {
            rep: SmoothMap::scalar(self.ambient_dim, smooth::coord(axis)).unwrap(),
            space: self.clone(),
        }
    }

    /// Sample a point of the space within `radius` of `center`: radius-aware
    /// sampler patches when declared, otherwise rejection over the global
    /// sampler with a ball-perturbation fallback.
    pub fn sample_near(
        &self,
        center: &[f64],
        radius: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>> {
        if !self.sampler.near.is_empty() {
            let i = rng.gen_range(0..self.sampler.near.len());
            let patch = &self.sampler.near[i];
            let mut params = Vec::with_capacity(patch.ranges.len() + 1);
            params.push(radius);
            for &(a, b) in &patch.ranges {
                params.push(a + (b - a) * rng.gen::<f64>());
            }
            return patch.map.evaluate(&params);
        }
        let dist = |p: &[f64]| -> f64 {
            p.iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        for _ in 0..200 {
            let p = self.sampler.sample(rng)?;
            if dist(&p) <= radius {
                return Ok(p);
            }
        }
        for _ in 0..400 {
            let p: Vec<f64> = center
                .iter()
                .map(|&c| c + radius * (2.0 * rng.gen::<f64>() - 1.0))
                .collect();
            if dist(&p) <= radius && self.contains(&p) {
                return Ok(p);
            }
        }
        Err(Error::Construction(format!(
            "no sample found within radius {radius} of {center:?}"
        )))
    }

    /// Wrap an ambient scalar map as a structure element.
    pub fn element(self: &Arc<Self>, rep: SmoothMap) -> Result<StructureElement> {
        if rep.input_dim() != self.ambient_dim || rep.output_dim() != 1 {
            return Err(Error::dim(format!(
                "element representative must be a scalar map on R^{}",
                self.ambient_dim
            )));
        }
        Ok(StructureElement {
            rep,
            space: self.clone(),
        })
    }
}

/// Element generated by composing a smooth outer function with selected
/// generators: outer(g_{i_1}, ..., g_{i_k}).
pub fn generated_element(
    space: &SpaceRef,
    outer: &SmoothMap,
    indices: &[usize],
) -> Result<StructureElement> {
    if outer.input_dim() != indices.len() {
        return Err(Error::dim(format!(
            "outer map expects {} inputs but {} generators were selected",
            outer.input_dim(),
            indices.len()
        )));
    }
    if outer.output_dim() != 1 {
        return Err(Error::dim("outer map must be scalar"));
    }
    let mut parts = Vec::with_capacity(indices.len());
    for &i in indices {
        let g = space
            .generators
            .get(i)
            .ok_or_else(|| Error::dim(format!("generator index {i} out of range")))?;
        parts.push(g.clone());
    }
    let inner = SmoothMap::stack(space.ambient_dim, &parts)?;
    Ok(StructureElement {
        rep: SmoothMap::compose(outer, &inner)?,
        space: space.clone(),
    })
}

/// The product I x S with I = `[0,1]`: ambient dimension grows by one, the
/// interval coordinate comes first, membership and generators lift.
pub fn product_with_interval(space: &SpaceRef) -> Result<SpaceRef> {
    let n = space.ambient_dim;
    let shift = |m: &SmoothMap| -> SmoothMap {
        // reindex x_i -> x_{i+1}
        let inner = SmoothMap::new(n + 1, (0..n).map(|i| smooth::coord(i + 1)).collect()).unwrap();
        SmoothMap::compose(m, &inner).unwrap()
    };

    let t_map = SmoothMap::scalar(n + 1, smooth::coord(0)).unwrap();
    let mut clauses = Vec::new();
    for clause in &space.membership.clauses {
        let mut constraints = vec![
            Constraint::NonNeg(t_map.clone()),
            Constraint::NonNeg(
                SmoothMap::scalar(n + 1, smooth::sub(smooth::cst(1.0), smooth::coord(0))).unwrap(),
            ),
        ];
        for c in &clause.constraints {
            constraints.push(match c {
                Constraint::Zero(m) => Constraint::Zero(shift(m)),
                Constraint::NonNeg(m) => Constraint::NonNeg(shift(m)),
                Constraint::Neg(m) => Constraint::Neg(shift(m)),
            });
        }
        clauses.push(Clause { constraints });
    }

    let mut generators = vec![t_map];
    generators.extend(space.generators.iter().map(shift));

    let sampler = Sampler::from_branches(vec![(
        1.0,
        SamplerNode::WithInterval(Arc::new(space.sampler.clone())),
    )]);

    make_space(
        format!("I x {}", space.name),
        n + 1,
        Membership::new(clauses, space.membership.tol),
        sampler,
        generators,
    )
}
