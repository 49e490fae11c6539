//! Cohomology of declared good covers with locally constant real
//! coefficients: nerve bases, integer coboundary matrices, and dimensions by
//! exact rational rank.
//!
//! Covers carry a declared intersection table (contractible or empty per
//! index tuple); the flags are validated against sampling, and declared
//! nonempty intersections must be connected in the sample graph. Restriction
//! maps are identities for locally constant coefficients on connected
//! intersections, so the coboundary is the signed incidence matrix of the
//! nerve.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::Zero;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::space::{Membership, SpaceRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum IntersectionFlag {
    Contractible,
    Empty,
}

/// A named region of the space, as a membership predicate on ambient
/// coordinates.
#[derive(Clone, Debug)]
pub struct Region {
    pub name: String,
    pub membership: Membership,
}

/// A cover of a space model with its declared intersection table. Tuples of
/// size >= 2 absent from the table are treated as empty; single sets are
/// assumed nonempty and contractible (good-cover pieces).
#[derive(Clone, Debug)]
pub struct Cover {
    pub space: SpaceRef,
    pub regions: Vec<Region>,
    pub flags: BTreeMap<Vec<usize>, IntersectionFlag>,
}

impl Cover {
    pub fn flag(&self, tuple: &[usize]) -> IntersectionFlag {
        if tuple.len() <= 1 {
            return IntersectionFlag::Contractible;
        }
        self.flags
            .get(tuple)
            .copied()
            .unwrap_or(IntersectionFlag::Empty)
    }

    fn regions_containing(&self, x: &[f64]) -> Vec<usize> {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.membership.contains(x))
            .map(|(i, _)| i)
            .collect()
    }

    /// Validate the declared flags against sampling:
    /// * every sampled point lies in at least one region (the cover covers);
    /// * no sample lands in an intersection declared empty;
    /// * samples of each declared-contractible intersection form one
    ///   connected component of the epsilon-neighbor graph.
    pub fn validate(&self, rng: &mut ChaCha8Rng, samples: usize, link_eps: f64) -> Result<()> {
        let mut witnesses: BTreeMap<Vec<usize>, Vec<Vec<f64>>> = BTreeMap::new();
        for _ in 0..samples {
            let x = self.space.sampler.sample(rng)?;
            let inside = self.regions_containing(&x);
            if inside.is_empty() {
                return Err(Error::FlagInconsistent(format!(
                    "sampled point {x:?} is covered by no region"
                )));
            }
            // every sub-tuple of the containing set is witnessed nonempty
            for tuple in subsets_up_to(&inside, self.regions.len()) {
                if tuple.len() >= 2 && self.flag(&tuple) == IntersectionFlag::Empty {
                    return Err(Error::FlagInconsistent(format!(
                        "point {x:?} lies in {:?}, declared empty",
                        tuple_names(self, &tuple)
                    )));
                }
                witnesses.entry(tuple).or_default().push(x.clone());
            }
        }
        // declared-contractible intersections must be witnessed and connected
        for (tuple, flag) in &self.flags {
            if *flag != IntersectionFlag::Contractible {
                continue;
            }
            let pts = witnesses.get(tuple).map(Vec::as_slice).unwrap_or(&[]);
            if pts.is_empty() {
                return Err(Error::FlagInconsistent(format!(
                    "no sample witnessed the declared-nonempty intersection {:?}",
                    tuple_names(self, tuple)
                )));
            }
            if !connected(pts, link_eps) {
                return Err(Error::FlagInconsistent(format!(
                    "samples of {:?} split into several components at scale {link_eps}",
                    tuple_names(self, tuple)
                )));
            }
        }
        Ok(())
    }
}

fn tuple_names(cover: &Cover, tuple: &[usize]) -> Vec<String> {
    tuple
        .iter()
        .map(|&i| cover.regions[i].name.clone())
        .collect()
}

fn subsets_up_to(indices: &[usize], _n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let k = indices.len();
    for mask in 1u32..(1 << k) {
        let mut t = Vec::new();
        for (j, &i) in indices.iter().enumerate() {
            if mask & (1 << j) != 0 {
                t.push(i);
            }
        }
        out.push(t);
    }
    out
}

fn connected(points: &[Vec<f64>], eps: f64) -> bool {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2.sqrt() <= eps {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let root = find(&mut parent, 0);
    (0..n).all(|i| find(&mut parent, i) == root)
}

/// The nerve complex with integer coboundary matrices: basis of degree q is
/// the ordered (q+1)-tuples with a contractible flag.
#[derive(Clone, Debug)]
pub struct CechComplex {
    pub bases: Vec<Vec<Vec<usize>>>,
    /// `deltas[q]` maps degree-q cochains to degree-(q+1) cochains,
    /// rows indexed by bases[q+1].
    pub deltas: Vec<Vec<Vec<i64>>>,
}

/// Enumerate nerve bases and the signed incidence coboundaries up to
/// `max_degree`.
pub fn build_complex(cover: &Cover, max_degree: usize) -> Result<CechComplex> {
    let n = cover.regions.len();
    let mut bases: Vec<Vec<Vec<usize>>> = Vec::new();
    for q in 0..=max_degree {
        let mut basis = Vec::new();
        let mut tuple: Vec<usize> = (0..=q).collect();
        if q < n {
            loop {
                if cover.flag(&tuple) == IntersectionFlag::Contractible {
                    basis.push(tuple.clone());
                }
                // next combination
                let mut i = q + 1;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    if tuple[i] != i + n - (q + 1) {
                        tuple[i] += 1;
                        for j in (i + 1)..=q {
                            tuple[j] = tuple[j - 1] + 1;
                        }
                        break;
                    }
                    if i == 0 {
                        tuple.clear();
                        break;
                    }
                }
                if tuple.is_empty() {
                    break;
                }
            }
        }
        bases.push(basis);
    }

    let mut deltas = Vec::new();
    for q in 0..max_degree {
        let rows = bases[q + 1].len();
        let cols = bases[q].len();
        let col_index: BTreeMap<&[usize], usize> = bases[q]
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_slice(), i))
            .collect();
        let mut m = vec![vec![0i64; cols]; rows];
        for (r, tuple) in bases[q + 1].iter().enumerate() {
            for j in 0..tuple.len() {
                let mut sub = tuple.clone();
                sub.remove(j);
                if let Some(&c) = col_index.get(sub.as_slice()) {
                    m[r][c] += if j % 2 == 0 { 1 } else { -1 };
                }
            }
        }
        deltas.push(m);
    }
    Ok(CechComplex { bases, deltas })
}

/// Exact integer product check that consecutive coboundaries compose to zero.
pub fn coboundary_squared_is_zero(cx: &CechComplex) -> bool {
    for q in 0..cx.deltas.len().saturating_sub(1) {
        let a = &cx.deltas[q];
        let b = &cx.deltas[q + 1];
        let rows = b.len();
        let mid = a.len();
        let cols = if mid > 0 { a[0].len() } else { 0 };
        for r in 0..rows {
            for c in 0..cols {
                let mut acc = 0i64;
                for k in 0..mid {
                    acc += b[r][k] * a[k][c];
                }
                if acc != 0 {
                    return false;
                }
            }
        }
    }
    true
}

/// Rank of an integer matrix over the rationals, by exact elimination.
fn rational_rank(m: &[Vec<i64>]) -> usize {
    if m.is_empty() || m[0].is_empty() {
        return 0;
    }
    let rows = m.len();
    let cols = m[0].len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| {
            r.iter()
                .map(|&v| BigRational::from_integer(v.into()))
                .collect()
        })
        .collect();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let piv = (row..rows).find(|&r| !a[r][col].is_zero());
        let Some(piv) = piv else { continue };
        a.swap(row, piv);
        let inv = a[row][col].clone();
        for r in 0..rows {
            if r != row && !a[r][col].is_zero() {
                let factor = a[r][col].clone() / inv.clone();
                for c in col..cols {
                    let sub = factor.clone() * a[row][c].clone();
                    a[r][c] -= sub;
                }
            }
        }
        row += 1;
        rank += 1;
        if row == rows {
            break;
        }
    }
    rank
}

/// Cohomology dimensions per degree: dim H^q = nullity(δ^q) - rank(δ^{q-1}).
pub fn cohomology_dims(cx: &CechComplex) -> Vec<usize> {
    let degrees = cx.bases.len();
    let mut dims = Vec::with_capacity(degrees);
    let mut prev_rank = 0usize;
    for q in 0..degrees {
        let basis_size = cx.bases[q].len();
        let rank_q = if q < cx.deltas.len() {
            rational_rank(&cx.deltas[q])
        } else {
            0
        };
        dims.push(basis_size - rank_q - prev_rank);
        prev_rank = rank_q;
    }
    dims
}

/// Number of connected components of the sample graph of a space; agrees
/// with dim H^0 for a valid cover.
pub fn sample_components(
    space: &SpaceRef,
    rng: &mut ChaCha8Rng,
    samples: usize,
    eps: f64,
) -> Result<usize> {
    let pts: Vec<Vec<f64>> = (0..samples)
        .map(|_| space.sampler.sample(rng))
        .collect::<Result<_>>()?;
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = pts[i]
                .iter()
                .zip(&pts[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2.sqrt() <= eps {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let roots: BTreeSet<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(roots.len())
}
