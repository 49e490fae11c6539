//! TOML file formats for spaces, flow experiments, covers, group actions,
//! and verification runs. Expressions inside the files use the text grammar
//! of [`crate::parse`]; parse failures surface with line and column relative
//! to the embedded expression.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use crate::cech::{Cover, IntersectionFlag, Region};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::orbit::{FiniteGroupAction, HilbertMap, RatMatrix};
use crate::parse::{parse_map, parse_scalar_map};
use crate::space::{
    make_space, Clause, Constraint, Membership, NearPatch, Sampler, SamplerNode, SpaceRef,
    MEMBERSHIP_TOL,
};
use crate::suites::SuiteTolerances;

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// A space reference: either a bundled fixture by name or an inline
/// definition.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub fixture: Option<String>,
    #[serde(flatten)]
    pub inline: Option<SpaceConfig>,
}

/// Inline space definition.
#[derive(Clone, Debug, Deserialize)]
pub struct SpaceConfig {
    pub name: String,
    pub ambient_dim: usize,
    pub generators: Vec<String>,
    #[serde(default)]
    pub membership_tol: Option<f64>,
    #[serde(default)]
    pub clause: Vec<ClauseConfig>,
    #[serde(default)]
    pub sampler: Vec<SamplerBranchConfig>,
    #[serde(default)]
    pub near: Vec<NearPatchConfig>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClauseConfig {
    #[serde(default)]
    pub zero: Vec<String>,
    #[serde(default)]
    pub nonneg: Vec<String>,
    #[serde(default)]
    pub neg: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerBranchConfig {
    #[serde(default = "default_weight")]
    pub weight: f64,
    /// Parametrization expressions over parameters x1..xk.
    #[serde(default)]
    pub maps: Vec<String>,
    #[serde(default)]
    pub ranges: Vec<(f64, f64)>,
    /// Explicit points (alternative to a parametrization).
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearPatchConfig {
    /// Expressions over (x1 = radius, x2.. = parameters).
    pub maps: Vec<String>,
    pub ranges: Vec<(f64, f64)>,
}

/// Resolve a fixture name to a bundled space.
pub fn fixture_space(name: &str) -> Result<SpaceRef> {
    Ok(match name {
        "plane" => fixtures::plane(),
        "line" => fixtures::line(),
        "interval" => fixtures::interval_space(),
        "circle" => fixtures::circle_space(),
        "flat-variety" => fixtures::variety_space(),
        "disk-plus-axis" => fixtures::disk_axis_space(),
        "quadratic-cone" => fixtures::cone_space(),
        other => return Err(Error::UnknownFixture(other.to_string())),
    })
}

impl SpaceSpec {
    pub fn build(&self) -> Result<SpaceRef> {
        match (&self.fixture, &self.inline) {
            (Some(name), _) => fixture_space(name),
            (None, Some(cfg)) => cfg.build(),
            (None, None) => Err(Error::Config(
                "space needs either `fixture` or an inline definition".into(),
            )),
        }
    }
}

impl SpaceConfig {
    pub fn build(&self) -> Result<SpaceRef> {
        let n = self.ambient_dim;
        let mut clauses = Vec::new();
        for c in &self.clause {
            let mut constraints = Vec::new();
            for e in &c.zero {
                constraints.push(Constraint::Zero(parse_scalar_map(e, n)?));
            }
            for e in &c.nonneg {
                constraints.push(Constraint::NonNeg(parse_scalar_map(e, n)?));
            }
            for e in &c.neg {
                constraints.push(Constraint::Neg(parse_scalar_map(e, n)?));
            }
            clauses.push(Clause { constraints });
        }
        if clauses.is_empty() {
            clauses.push(Clause::default());
        }
        let membership = Membership::new(clauses, self.membership_tol.unwrap_or(MEMBERSHIP_TOL));

        let mut branches = Vec::new();
        for b in &self.sampler {
            if !b.points.is_empty() {
                for p in &b.points {
                    if p.len() != n {
                        return Err(Error::Config(format!(
                            "sampler point {p:?} has wrong dimension"
                        )));
                    }
                }
                branches.push((b.weight, SamplerNode::Points(b.points.clone())));
            } else {
                let map = parse_map(&b.maps, b.ranges.len())?;
                if map.output_dim() != n {
                    return Err(Error::Config(
                        "sampler parametrization must produce one expression per ambient coordinate"
                            .into(),
                    ));
                }
                branches.push((
                    b.weight,
                    SamplerNode::Param {
                        map,
                        ranges: b.ranges.clone(),
                    },
                ));
            }
        }
        if branches.is_empty() {
            return Err(Error::Config(
                "space needs at least one sampler branch".into(),
            ));
        }
        let mut sampler = Sampler::from_branches(branches);
        for p in &self.near {
            let map = parse_map(&p.maps, p.ranges.len() + 1)?;
            if map.output_dim() != n {
                return Err(Error::Config(
                    "near patch must produce one expression per ambient coordinate".into(),
                ));
            }
            sampler.near.push(NearPatch {
                map,
                ranges: p.ranges.clone(),
            });
        }
        let generators = self
            .generators
            .iter()
            .map(|g| parse_scalar_map(g, n))
            .collect::<Result<Vec<_>>>()?;
        make_space(self.name.clone(), n, membership, sampler, generators)
    }
}

// ---------------------------------------------------------------------------
// flow experiment config
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub space: SpaceSpec,
    pub field: FieldConfig,
    #[serde(default)]
    pub start: Vec<StartConfig>,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub components: Vec<String>,
    #[serde(default)]
    pub certificates: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartConfig {
    pub point: Vec<f64>,
    pub span: (f64, f64),
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub membership_tol: f64,
    pub state_cap: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        let c = crate::flow::StepControl::default();
        ControlConfig {
            rtol: c.rtol,
            atol: c.atol,
            max_step: c.max_step,
            membership_tol: c.membership_tol,
            state_cap: c.state_cap,
        }
    }
}

impl ControlConfig {
    pub fn to_control(&self) -> crate::flow::StepControl {
        crate::flow::StepControl {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            membership_tol: self.membership_tol,
            state_cap: self.state_cap,
            ..crate::flow::StepControl::default()
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    #[serde(default = "default_probe_samples")]
    pub samples: usize,
    #[serde(default = "default_span_cap")]
    pub span_cap: f64,
}

fn default_probe_samples() -> usize {
    24
}

fn default_span_cap() -> f64 {
    1.0
}

// ---------------------------------------------------------------------------
// cover definition file
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub space: SpaceSpec,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    #[serde(default = "default_link_eps")]
    pub link_eps: f64,
    pub region: Vec<RegionConfig>,
    #[serde(default)]
    pub flag: Vec<FlagConfig>,
}

fn default_max_degree() -> usize {
    2
}

fn default_link_eps() -> f64 {
    0.5
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub name: String,
    pub clause: Vec<ClauseConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagConfig {
    pub tuple: Vec<usize>,
    pub kind: String, // "contractible" | "empty"
}

impl CoverConfig {
    pub fn build(&self) -> Result<Cover> {
        let space = self.space.build()?;
        let n = space.ambient_dim;
        let mut regions = Vec::new();
        for r in &self.region {
            let mut clauses = Vec::new();
            for c in &r.clause {
                let mut constraints = Vec::new();
                for e in &c.zero {
                    constraints.push(Constraint::Zero(parse_scalar_map(e, n)?));
                }
                for e in &c.nonneg {
                    constraints.push(Constraint::NonNeg(parse_scalar_map(e, n)?));
                }
                for e in &c.neg {
                    constraints.push(Constraint::Neg(parse_scalar_map(e, n)?));
                }
                clauses.push(Clause { constraints });
            }
            regions.push(Region {
                name: r.name.clone(),
                membership: Membership::new(clauses, 1e-9),
            });
        }
        let mut flags = BTreeMap::new();
        for f in &self.flag {
            let kind = match f.kind.as_str() {
                "contractible" => IntersectionFlag::Contractible,
                "empty" => IntersectionFlag::Empty,
                other => {
                    return Err(Error::Config(format!(
                        "flag kind must be `contractible` or `empty`, got `{other}`"
                    )))
                }
            };
            let mut tuple = f.tuple.clone();
            tuple.sort_unstable();
            flags.insert(tuple, kind);
        }
        Ok(Cover {
            space,
            regions,
            flags,
        })
    }
}

// ---------------------------------------------------------------------------
// action definition file
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub action: Option<ActionConfig>,
    #[serde(default)]
    pub hilbert: Option<HilbertConfig>,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    pub dim: usize,
    /// Matrices with exact rational entries written as strings: "1", "-1/2".
    pub matrices: Vec<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertConfig {
    pub components: Vec<String>,
    #[serde(default)]
    pub relations: Vec<String>,
    #[serde(default)]
    pub inequalities: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub radii: Vec<f64>,
    pub quad_order: usize,
    /// Acceptance thresholds for the slope fits.
    pub quadratic_slope_window: f64,
    pub quartic_slope_window: f64,
    pub vanishing_abs_tol: f64,
    pub value_rel_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            radii: vec![0.5, 1.0, 2.0, 4.0],
            quad_order: 12,
            quadratic_slope_window: 0.02,
            quartic_slope_window: 0.05,
            vanishing_abs_tol: 1e-9,
            value_rel_tol: 1e-8,
        }
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Config(format!("bad rational numerator `{num}`")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Config(format!("bad rational denominator `{den}`")))?;
    if den == BigInt::from(0) {
        return Err(Error::Config("rational denominator is zero".into()));
    }
    Ok(BigRational::new(num, den))
}

impl ActionConfig {
    pub fn build(&self) -> Result<FiniteGroupAction> {
        let mut elements = Vec::new();
        for m in &self.matrices {
            if m.len() != self.dim || m.iter().any(|r| r.len() != self.dim) {
                return Err(Error::Config("matrix shape mismatch".into()));
            }
            let entries = m
                .iter()
                .flat_map(|r| r.iter())
                .map(|s| parse_rational(s))
                .collect::<Result<Vec<_>>>()?;
            elements.push(RatMatrix {
                n: self.dim,
                entries,
            });
        }
        FiniteGroupAction::new(self.dim, elements)
    }
}

impl HilbertConfig {
    pub fn build(&self, ambient_dim: usize) -> Result<HilbertMap> {
        let m = self.components.len();
        Ok(HilbertMap {
            components: self
                .components
                .iter()
                .map(|e| parse_scalar_map(e, ambient_dim))
                .collect::<Result<Vec<_>>>()?,
            relations: self
                .relations
                .iter()
                .map(|e| parse_scalar_map(e, m))
                .collect::<Result<Vec<_>>>()?,
            inequalities: self
                .inequalities
                .iter()
                .map(|e| parse_scalar_map(e, m))
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

// ---------------------------------------------------------------------------
// verification run config
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub quad_order: usize,
    pub workers: usize,
    pub tolerances: SuiteTolerances,
    /// Optional literal forms and cubes to pair in addition to the suites.
    pub pairings: Option<PairingsConfig>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 42,
            quad_order: 12,
            workers: 2,
            tolerances: SuiteTolerances::default(),
            pairings: None,
        }
    }
}

/// Literal forms and cubes over one space: every form is paired with every
/// cube of matching dimension, and with every cube one dimension higher
/// through the boundary-duality residual.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingsConfig {
    pub space: SpaceSpec,
    #[serde(default)]
    pub form: Vec<FormConfig>,
    #[serde(default)]
    pub cube: Vec<CubeConfig>,
    #[serde(default = "default_stokes_tol")]
    pub stokes_tol: f64,
}

fn default_stokes_tol() -> f64 {
    1e-8
}

/// A form literal: a list of (coefficient, expression tuple) terms.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormConfig {
    pub id: String,
    pub term: Vec<TermConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    #[serde(default = "default_weight")]
    pub coeff: f64,
    pub tuple: Vec<String>,
}

/// A cube literal: box bounds plus one representative expression per ambient
/// coordinate (over box parameters x1..xp).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeConfig {
    pub id: String,
    pub bounds: Vec<(f64, f64)>,
    pub components: Vec<String>,
}

/// One evaluated pairing row.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PairingRow {
    pub form: String,
    pub cube: String,
    /// `value` for a matching-dimension pairing, `stokes-residual` for a
    /// cube one dimension above the form.
    pub kind: String,
    pub value: f64,
    pub quad_order: usize,
    pub flagged: bool,
    /// For duality rows: `exact-pair` when the residual is below tolerance,
    /// `defect` otherwise; `evaluated` for plain value rows.
    pub residual_class: String,
}

impl PairingsConfig {
    pub fn run(&self, base_order: usize) -> Result<Vec<PairingRow>> {
        let space = self.space.build()?;
        let n = space.ambient_dim;
        let mut forms = Vec::new();
        for f in &self.form {
            let degree = f
                .term
                .first()
                .map(|t| t.tuple.len().saturating_sub(1))
                .ok_or_else(|| Error::Config(format!("form `{}` has no terms", f.id)))?;
            let terms = f
                .term
                .iter()
                .map(|t| {
                    if t.tuple.len() != degree + 1 {
                        return Err(Error::Config(format!(
                            "form `{}`: all tuples must have {} entries",
                            f.id,
                            degree + 1
                        )));
                    }
                    let tuple = t
                        .tuple
                        .iter()
                        .map(|e| parse_scalar_map(e, n))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((t.coeff, tuple))
                })
                .collect::<Result<Vec<_>>>()?;
            forms.push((
                f.id.clone(),
                crate::forms::GeneratorForm::from_reps(space.clone(), degree, terms)?,
            ));
        }
        let mut cubes = Vec::new();
        for c in &self.cube {
            let p = c.bounds.len();
            let rep = parse_map(&c.components, p)?;
            let cube = crate::chains::SingularCube::new(
                crate::chains::CubeBox::new(c.bounds.clone())?,
                rep,
                space.clone(),
            )?;
            cube.validate_membership()?;
            cubes.push((c.id.clone(), cube));
        }
        let mut rows = Vec::new();
        for (fid, form) in &forms {
            for (cid, cube) in &cubes {
                if cube.dim() == form.degree() {
                    let v = crate::forms::lambda_eval_adaptive(form, cube, base_order)?;
                    rows.push(PairingRow {
                        form: fid.clone(),
                        cube: cid.clone(),
                        kind: "value".into(),
                        value: v.value,
                        quad_order: v.order_used,
                        flagged: v.flagged,
                        residual_class: "evaluated".into(),
                    });
                } else if cube.dim() == form.degree() + 1 {
                    let rule = crate::quad::QuadratureRule::new(base_order);
                    let r = crate::forms::stokes_residual(form, cube, &rule)?;
                    rows.push(PairingRow {
                        form: fid.clone(),
                        cube: cid.clone(),
                        kind: "stokes-residual".into(),
                        value: r,
                        quad_order: base_order,
                        flagged: false,
                        residual_class: if r <= self.stokes_tol {
                            "exact-pair".into()
                        } else {
                            "defect".into()
                        },
                    });
                }
            }
        }
        Ok(rows)
    }
}

pub fn load_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(config_err)
}
