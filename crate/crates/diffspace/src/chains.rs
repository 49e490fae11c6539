//! Singular cubes with smooth representatives, integer chains, the boundary
//! operator, the prism operator into I x S, and the endpoint inclusions.
//!
//! Cube equality is extensional: equal boxes and pointwise-equal
//! representatives on a deterministic sample grid. Chains are kept in a
//! canonical order (box bounds, then grid values) so that cancellation and
//! reports are reproducible.

use crate::error::{Error, Result};
use crate::smooth::{self, SmoothMap};
use crate::space::{product_with_interval, SpaceRef};

/// Tolerance for extensional cube equality on the sample grid.
pub const CUBE_EQ_TOL: f64 = 1e-12;

/// An axis-aligned box in R^p given by per-axis bounds; p = 0 is the single
/// point of R^0. Degenerate axes (equal bounds) are legal.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeBox {
    bounds: Vec<(f64, f64)>,
}

impl CubeBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &bounds {
            if lo > hi || lo.is_nan() || hi.is_nan() {
                return Err(Error::Construction(format!(
                    "box bounds must satisfy lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(CubeBox { bounds })
    }

    pub fn unit(p: usize) -> Self {
        CubeBox {
            bounds: vec![(0.0, 1.0); p],
        }
    }

    pub fn point() -> Self {
        CubeBox { bounds: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn without_axis(&self, axis: usize) -> CubeBox {
        let mut b = self.bounds.clone();
        b.remove(axis);
        CubeBox { bounds: b }
    }

    pub fn prepend_unit_axis(&self) -> CubeBox {
        let mut b = Vec::with_capacity(self.bounds.len() + 1);
        b.push((0.0, 1.0));
        b.extend_from_slice(&self.bounds);
        CubeBox { bounds: b }
    }

    /// Deterministic per-axis grid used for extensional comparisons:
    /// endpoints and midpoint of every axis.
    fn grid_axes(&self) -> Vec<Vec<f64>> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                if lo == hi {
                    vec![lo]
                } else {
                    vec![lo, 0.5 * (lo + hi), hi]
                }
            })
            .collect()
    }
}

/// A singular p-cube: a box together with a smooth representative from an
/// open neighborhood of the box into the ambient space of `space`.
#[derive(Clone, Debug)]
pub struct SingularCube {
    pub cube_box: CubeBox,
    pub rep: SmoothMap,
    pub space: SpaceRef,
}

impl SingularCube {
    pub fn new(cube_box: CubeBox, rep: SmoothMap, space: SpaceRef) -> Result<Self> {
        if rep.input_dim() != cube_box.dim() {
            return Err(Error::dim(format!(
                "representative expects {} inputs, box has dimension {}",
                rep.input_dim(),
                cube_box.dim()
            )));
        }
        if rep.output_dim() != space.ambient_dim {
            return Err(Error::dim(format!(
                "representative maps into R^{}, space is in R^{}",
                rep.output_dim(),
                space.ambient_dim
            )));
        }
        Ok(SingularCube {
            cube_box,
            rep,
            space,
        })
    }

    /// Check that grid points of the box land in the space.
    pub fn validate_membership(&self) -> Result<()> {
        let mut worst = 0.0f64;
        let mut at = Vec::new();
        for t in self.grid_points() {
            let x = self.rep.evaluate(&t)?;
            let v = self.space.violation(&x);
            if v > worst {
                worst = v;
                at = x;
            }
        }
        if worst > 0.0 {
            return Err(Error::Membership(format!(
                "cube leaves `{}` (violation {worst:.3e} at {at:?})",
                self.space.name
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.cube_box.dim()
    }

    /// The identity p-cube on a box inside Euclidean space.
    pub fn identity_on(cube_box: CubeBox, space: SpaceRef) -> Result<Self> {
        let p = cube_box.dim();
        SingularCube::new(cube_box, SmoothMap::identity(p), space)
    }

    /// All grid points of the comparison grid, as full coordinate vectors.
    fn grid_points(&self) -> Vec<Vec<f64>> {
        let axes = self.cube_box.grid_axes();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for prefix in &out {
                for &v in axis {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    /// Representative values on the comparison grid, flattened in grid order.
    fn grid_values(&self) -> Result<Vec<f64>> {
        let mut vals = Vec::new();
        for t in self.grid_points() {
            vals.extend(self.rep.evaluate(&t)?);
        }
        Ok(vals)
    }

    /// Extensional equality: same box and pointwise-equal maps on the grid.
    pub fn extensionally_equal(&self, other: &SingularCube) -> bool {
        if self.cube_box != other.cube_box {
            return false;
        }
        match (self.grid_values(), other.grid_values()) {
            (Ok(a), Ok(b)) => {
                a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= CUBE_EQ_TOL)
            }
            _ => false,
        }
    }
}

/// The face map φ_i^±: R^{p-1} -> R^p inserting the bound value at `axis`.
fn face_pin(p: usize, axis: usize, value: f64) -> SmoothMap {
    let mut outputs = Vec::with_capacity(p);
    for j in 0..p {
        if j < axis {
            outputs.push(smooth::coord(j));
        } else if j == axis {
            outputs.push(smooth::cst(value));
        } else {
            outputs.push(smooth::coord(j - 1));
        }
    }
    SmoothMap::new(p.saturating_sub(1), outputs).unwrap()
}

/// Which end of an axis a face sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceSign {
    Minus,
    Plus,
}

/// The (p-1)-cube obtained by pinning `axis` (1-based in the classical
/// formula; 0-based here) to its lower or upper bound.
pub fn face(sigma: &SingularCube, axis: usize, sign: FaceSign) -> Result<SingularCube> {
    let p = sigma.dim();
    if p == 0 {
        return Err(Error::dim("a 0-cube has no faces"));
    }
    if axis >= p {
        return Err(Error::dim(format!(
            "face axis {axis} out of range for a {p}-cube"
        )));
    }
    let (lo, hi) = sigma.cube_box.bounds()[axis];
    let value = match sign {
        FaceSign::Minus => lo,
        FaceSign::Plus => hi,
    };
    let pin = face_pin(p, axis, value);
    SingularCube::new(
        sigma.cube_box.without_axis(axis),
        SmoothMap::compose(&sigma.rep, &pin)?,
        sigma.space.clone(),
    )
}

/// Integer formal sum of singular cubes.
#[derive(Clone, Debug, Default)]
pub struct CubicalChain {
    pub terms: Vec<(i64, SingularCube)>,
}

impl CubicalChain {
    pub fn from_cube(sigma: SingularCube) -> Self {
        CubicalChain {
            terms: vec![(1, sigma)],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn negate(mut self) -> Self {
        for t in &mut self.terms {
            t.0 = -t.0;
        }
        self
    }

    pub fn add(mut self, other: CubicalChain) -> Self {
        self.terms.extend(other.terms);
        self.canonicalize()
    }

    pub fn sub(self, other: CubicalChain) -> Self {
        self.add(other.negate())
    }

    /// Merge extensionally equal cubes, drop zero coefficients, and sort by
    /// (dimension, box bounds, grid values) for reproducible reports.
    pub fn canonicalize(self) -> Self {
        let mut keyed: Vec<(Vec<f64>, i64, SingularCube)> = Vec::new();
        'next: for (c, cube) in self.terms {
            for (_, coeff, existing) in keyed.iter_mut() {
                if existing.extensionally_equal(&cube) {
                    *coeff += c;
                    continue 'next;
                }
            }
            let mut key = vec![cube.dim() as f64];
            for &(lo, hi) in cube.cube_box.bounds() {
                key.push(lo);
                key.push(hi);
            }
            key.extend(cube.grid_values().unwrap_or_default());
            keyed.push((key, c, cube));
        }
        keyed.retain(|(_, c, _)| *c != 0);
        keyed.sort_by(|a, b| {
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| *o != std::cmp::Ordering::Equal)
                .unwrap_or_else(|| a.0.len().cmp(&b.0.len()))
        });
        CubicalChain {
            terms: keyed.into_iter().map(|(_, c, cube)| (c, cube)).collect(),
        }
    }

    /// Are two chains equal after cancellation?
    pub fn chain_eq(&self, other: &CubicalChain) -> bool {
        self.clone().sub(other.clone()).is_empty()
    }
}

/// Boundary of a single cube: the alternating sum of its faces over every
/// axis, ∂σ = Σ_i (-1)^(i+1) [σ∘φ_i^+ - σ∘φ_i^-].
pub fn boundary_of_cube(sigma: &SingularCube) -> Result<CubicalChain> {
    let p = sigma.dim();
    if p == 0 {
        return Err(Error::dim("boundary is undefined on 0-cubes"));
    }
    let mut terms = Vec::with_capacity(2 * p);
    for axis in 0..p {
        let sign = if axis % 2 == 0 { 1 } else { -1 };
        terms.push((sign, face(sigma, axis, FaceSign::Plus)?));
        terms.push((-sign, face(sigma, axis, FaceSign::Minus)?));
    }
    Ok(CubicalChain { terms }.canonicalize())
}

/// Boundary extended linearly over a chain.
pub fn boundary(chain: &CubicalChain) -> Result<CubicalChain> {
    let mut out = CubicalChain::default();
    for (c, cube) in &chain.terms {
        let mut b = boundary_of_cube(cube)?;
        for t in &mut b.terms {
            t.0 *= c;
        }
        out.terms.extend(b.terms);
    }
    Ok(out.canonicalize())
}

/// The prism operator K: a p-cube over S becomes the (p+1)-cube
/// (t, u) ↦ (t, σ(u)) over I x S, with box `[0,1]` x box(σ).
pub fn prism(sigma: &SingularCube) -> Result<SingularCube> {
    let product = product_with_interval(&sigma.space)?;
    let p = sigma.dim();
    // outputs: t, then σ's outputs with box coordinates shifted by one
    let shift_inner = SmoothMap::new(p + 1, (0..p).map(|i| smooth::coord(i + 1)).collect())?;
    let shifted = SmoothMap::compose(&sigma.rep, &shift_inner)?;
    let mut outputs = vec![smooth::coord(0)];
    outputs.extend(shifted.outputs().iter().cloned());
    SingularCube::new(
        sigma.cube_box.prepend_unit_axis(),
        SmoothMap::new(p + 1, outputs)?,
        product,
    )
}

/// Prism extended linearly.
pub fn prism_chain(chain: &CubicalChain) -> Result<CubicalChain> {
    let terms = chain
        .terms
        .iter()
        .map(|(c, cube)| Ok((*c, prism(cube)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CubicalChain { terms }.canonicalize())
}

/// Endpoint inclusion u_i: the cube x ↦ (i, σ(x)) into I x S.
pub fn endpoint_inclusion(end: u8, sigma: &SingularCube) -> Result<SingularCube> {
    let product = product_with_interval(&sigma.space)?;
    let mut outputs = vec![smooth::cst(end as f64)];
    outputs.extend(sigma.rep.outputs().iter().cloned());
    SingularCube::new(
        sigma.cube_box.clone(),
        SmoothMap::new(sigma.dim(), outputs)?,
        product,
    )
}

/// Chain-level homotopy defect K∂σ + ∂Kσ - ((u₁)_*σ - (u₀)_*σ); for 0-cubes
/// the K∂ term is absent. An empty result certifies the prism identity.
pub fn prism_identity_defect(sigma: &SingularCube) -> Result<CubicalChain> {
    let k_sigma = prism(sigma)?;
    let mut lhs = boundary_of_cube(&k_sigma)?;
    if sigma.dim() > 0 {
        let kd = prism_chain(&boundary_of_cube(sigma)?)?;
        lhs = lhs.add(kd);
    }
    let u1 = CubicalChain::from_cube(endpoint_inclusion(1, sigma)?);
    let u0 = CubicalChain::from_cube(endpoint_inclusion(0, sigma)?);
    Ok(lhs.sub(u1.sub(u0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::{add, coord, cst, mul, pow};
    use crate::space::SpaceModel;

    fn unit_cube(p: usize, ambient: usize) -> SingularCube {
        // identity into R^ambient, padding extra coordinates with zero
        let space = SpaceModel::euclidean(ambient);
        let mut outputs: Vec<_> = (0..p).map(coord).collect();
        while outputs.len() < ambient {
            outputs.push(cst(0.0));
        }
        SingularCube::new(CubeBox::unit(p), SmoothMap::new(p, outputs).unwrap(), space).unwrap()
    }

    #[test]
    fn faces_of_the_unit_square() {
        let sq = unit_cube(2, 2);
        let top = face(&sq, 0, FaceSign::Plus).unwrap();
        assert_eq!(top.rep.evaluate(&[0.25]).unwrap(), vec![1.0, 0.25]);
        let bottom = face(&sq, 1, FaceSign::Minus).unwrap();
        assert_eq!(bottom.rep.evaluate(&[0.25]).unwrap(), vec![0.25, 0.0]);

        let interval = unit_cube(1, 1);
        let p0 = face(&interval, 0, FaceSign::Minus).unwrap();
        assert_eq!(p0.dim(), 0);
        assert_eq!(p0.rep.evaluate(&[]).unwrap(), vec![0.0]);

        // middle face of the 3-cube
        let c3 = unit_cube(3, 3);
        let f = face(&c3, 1, FaceSign::Minus).unwrap();
        assert_eq!(f.rep.evaluate(&[0.3, 0.8]).unwrap(), vec![0.3, 0.0, 0.8]);

        assert!(face(&p0, 0, FaceSign::Plus).is_err());
    }

    #[test]
    fn boundary_of_interval_is_endpoint_difference() {
        let space = SpaceModel::euclidean(1);
        let seg = SingularCube::new(
            CubeBox::new(vec![(-1.0, 2.0)]).unwrap(),
            SmoothMap::identity(1),
            space,
        )
        .unwrap();
        let b = boundary_of_cube(&seg).unwrap();
        assert_eq!(b.len(), 2);
        let (c0, p0) = &b.terms[0];
        let (c1, p1) = &b.terms[1];
        // canonical order sorts by grid values; identify by value
        let v0 = p0.rep.evaluate(&[]).unwrap()[0];
        let v1 = p1.rep.evaluate(&[]).unwrap()[0];
        let pairs = [(v0, *c0), (v1, *c1)];
        assert!(pairs.contains(&(2.0, 1)));
        assert!(pairs.contains(&(-1.0, -1)));
    }

    #[test]
    fn boundary_of_square_has_four_signed_edges() {
        let b = boundary_of_cube(&unit_cube(2, 2)).unwrap();
        assert_eq!(b.len(), 4);
        let total: i64 = b.terms.iter().map(|(c, _)| c.abs()).sum();
        assert_eq!(total, 4);
    }

    #[test]
    fn boundary_squared_vanishes_exactly() {
        for p in 2..=4 {
            let b2 = boundary(&boundary_of_cube(&unit_cube(p, p)).unwrap()).unwrap();
            assert!(b2.is_empty(), "non-trivial boundary² for p = {p}");
        }

        // curved representative
        let space = SpaceModel::euclidean(2);
        let rep = SmoothMap::new(
            3,
            vec![
                add(mul(coord(0), coord(1)), pow(coord(2), 2)),
                add(coord(1), mul(cst(0.5), mul(coord(0), coord(2)))),
            ],
        )
        .unwrap();
        let sigma = SingularCube::new(
            CubeBox::new(vec![(0.0, 1.0), (-1.0, 1.0), (0.5, 2.0)]).unwrap(),
            rep,
            space,
        )
        .unwrap();
        let b2 = boundary(&boundary_of_cube(&sigma).unwrap()).unwrap();
        assert!(b2.is_empty());
    }

    #[test]
    fn prism_and_endpoint_inclusions() {
        // 0-cube: K(σ)(t) = (t, x)
        let space = SpaceModel::euclidean(1);
        let pt =
            SingularCube::new(CubeBox::point(), SmoothMap::constant(0, &[0.7]), space).unwrap();
        let k = prism(&pt).unwrap();
        assert_eq!(k.dim(), 1);
        assert_eq!(k.rep.evaluate(&[0.3]).unwrap(), vec![0.3, 0.7]);

        // interval -> identity square into I x R
        let seg = unit_cube(1, 1);
        let ksq = prism(&seg).unwrap();
        assert_eq!(ksq.rep.evaluate(&[0.2, 0.9]).unwrap(), vec![0.2, 0.9]);
        ksq.validate_membership().unwrap();

        // face of the prism at the top of the interval axis equals u₁
        let top = face(&ksq, 0, FaceSign::Plus).unwrap();
        let u1 = endpoint_inclusion(1, &seg).unwrap();
        assert!(top.extensionally_equal(&u1));

        let u0 = endpoint_inclusion(0, &seg).unwrap();
        assert_eq!(u0.rep.evaluate(&[0.4]).unwrap(), vec![0.0, 0.4]);
    }

    #[test]
    fn prism_of_circle_cube_lands_on_cylinder() {
        use crate::smooth::{cos, sin};
        let space = SpaceModel::euclidean(2);
        let gamma = SingularCube::new(
            CubeBox::new(vec![(0.0, std::f64::consts::TAU)]).unwrap(),
            SmoothMap::new(1, vec![cos(coord(0)), sin(coord(0))]).unwrap(),
            space,
        )
        .unwrap();
        let cyl = prism(&gamma).unwrap();
        cyl.validate_membership().unwrap();
        let v = cyl.rep.evaluate(&[0.25, 1.0]).unwrap();
        assert_eq!(v[0], 0.25);
        assert!((v[1] - 1.0f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn prism_identity_at_chain_level() {
        // p = 0, 1, 2 including a curved square
        let pt = {
            let space = SpaceModel::euclidean(2);
            SingularCube::new(
                CubeBox::point(),
                SmoothMap::constant(0, &[0.3, -1.0]),
                space,
            )
            .unwrap()
        };
        assert!(prism_identity_defect(&pt).unwrap().is_empty());

        let seg = unit_cube(1, 2);
        assert!(prism_identity_defect(&seg).unwrap().is_empty());

        let space = SpaceModel::euclidean(2);
        let curved = SingularCube::new(
            CubeBox::new(vec![(0.0, 2.0), (-1.0, 1.0)]).unwrap(),
            SmoothMap::new(
                2,
                vec![add(coord(0), pow(coord(1), 2)), mul(coord(0), coord(1))],
            )
            .unwrap(),
            space,
        )
        .unwrap();
        assert!(prism_identity_defect(&curved).unwrap().is_empty());
    }

    #[test]
    fn degenerate_boxes_are_legal() {
        let space = SpaceModel::euclidean(1);
        let flat = SingularCube::new(
            CubeBox::new(vec![(0.5, 0.5)]).unwrap(),
            SmoothMap::identity(1),
            space,
        )
        .unwrap();
        assert_eq!(flat.dim(), 1);
        assert!(CubeBox::new(vec![(1.0, 0.0)]).is_err());
    }
}
