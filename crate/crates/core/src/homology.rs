//! Boundary matrices, persistence reduction and homology bases of sublevel complexes.
//!
//! Chains are sparse lists `(simplex index, coefficient)` sorted by the global
//! filtration index, so the lowest nonzero row of a column is its last entry.
//!
//! Each persistence class is represented by a cycle whose last simplex is the
//! class's birth simplex with coefficient 1: the reduced boundary of its killer
//! if it dies, otherwise the reduction-matrix column of the birth simplex. With
//! these representatives every inclusion-induced map is a partial identity.

use std::sync::Arc;

use thiserror::Error;

use crate::complexes::FilteredComplex;
use crate::ffield::PrimeField;
use crate::linalg::FieldMatrix;

pub type Chain = Vec<(usize, u32)>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomologyError {
    #[error("chain is not a cycle")]
    NotACycle,
    #[error("chain uses simplex {0}, which is not in the complex at this radius")]
    CycleNotInComplex(usize),
    #[error("chain has a simplex of dimension {found}, expected {expected}")]
    WrongDegree { expected: usize, found: usize },
    #[error("radius {small} is larger than radius {big}")]
    RadiusOrder { small: f64, big: f64 },
}

/// `a + c·b` for sorted sparse chains.
pub fn chain_axpy(field: PrimeField, a: &[(usize, u32)], c: u32, b: &[(usize, u32)]) -> Chain {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i == a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i]);
            i += 1;
        } else if take_b {
            let v = field.mul(c, b[j].1);
            if v != 0 {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = field.mul_add(a[i].1, c, b[j].1);
            if v != 0 {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn chain_scale(field: PrimeField, a: &[(usize, u32)], c: u32) -> Chain {
    if c == 0 {
        return Vec::new();
    }
    a.iter().map(|&(i, v)| (i, field.mul(v, c))).collect()
}

/// Sorts by index and merges repeated entries.
pub fn normalize_chain(field: PrimeField, mut a: Vec<(usize, u32)>) -> Chain {
    a.sort_unstable_by_key(|e| e.0);
    let mut out: Chain = Vec::with_capacity(a.len());
    for (i, v) in a {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 = field.add(last.1, v),
            _ => out.push((i, v % field.modulus())),
        }
        if out.last().is_some_and(|e| e.1 == 0) {
            out.pop();
        }
    }
    out
}

/// Boundary of simplex `i` with the alternating-sign convention on sorted vertices.
pub fn boundary_chain(fc: &FilteredComplex, field: PrimeField, i: usize) -> Chain {
    let s = fc.simplex(i);
    if s.len() < 2 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(s.len());
    let mut face = Vec::with_capacity(s.len() - 1);
    for skip in 0..s.len() {
        face.clear();
        face.extend(s.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v));
        let idx = fc.index_of(&face).expect("complex is closed under faces");
        let sign = if skip % 2 == 0 { 1 } else { field.neg(1) };
        out.push((idx, sign));
    }
    out.sort_unstable_by_key(|e| e.0);
    out
}

pub fn chain_boundary(fc: &FilteredComplex, field: PrimeField, z: &[(usize, u32)]) -> Chain {
    let mut acc = Vec::new();
    for &(i, c) in z {
        for (f, s) in boundary_chain(fc, field, i) {
            acc.push((f, field.mul(c, s)));
        }
    }
    normalize_chain(field, acc)
}

/// Columns are the `dim`-simplices in filtration order.
#[derive(Debug, Clone)]
pub struct BoundaryMatrix {
    pub dim: usize,
    pub simplices: Vec<usize>,
    pub columns: Vec<Chain>,
}

pub fn boundary_matrix(fc: &FilteredComplex, field: PrimeField, dim: usize) -> BoundaryMatrix {
    let simplices = fc.indices_of_dim(dim);
    let columns = simplices.iter().map(|&i| boundary_chain(fc, field, i)).collect();
    BoundaryMatrix { dim, simplices, columns }
}

impl BoundaryMatrix {
    /// Dense matrix of the boundary restricted to the first `prefix` simplices.
    pub fn to_dense(&self, fc: &FilteredComplex, field: PrimeField, prefix: usize) -> FieldMatrix {
        let rows: Vec<usize> = if self.dim == 0 {
            Vec::new()
        } else {
            fc.indices_of_dim(self.dim - 1).into_iter().filter(|&i| i < prefix).collect()
        };
        let cols: Vec<usize> = (0..self.simplices.len()).filter(|&c| self.simplices[c] < prefix).collect();
        let mut m = FieldMatrix::zeros(field, rows.len(), cols.len());
        for (j, &c) in cols.iter().enumerate() {
            for &(r, v) in &self.columns[c] {
                let i = rows.binary_search(&r).expect("face precedes simplex");
                m.set(i, j, v);
            }
        }
        m
    }
}

/// `∂∘∂ = 0` on every simplex.
pub fn boundary_squared_is_zero(fc: &FilteredComplex, field: PrimeField) -> bool {
    (0..fc.len()).all(|i| chain_boundary(fc, field, &boundary_chain(fc, field, i)).is_empty())
}

/// Betti number of the sublevel complex at `radius`, from dense ranks.
pub fn betti_by_rank(fc: &FilteredComplex, field: PrimeField, degree: usize, radius: f64) -> usize {
    let prefix = fc.sublevel_len(radius);
    let n_k = fc.indices_of_dim(degree).into_iter().filter(|&i| i < prefix).count();
    let rank_k = if degree == 0 {
        0
    } else {
        boundary_matrix(fc, field, degree).to_dense(fc, field, prefix).rank()
    };
    let rank_up = boundary_matrix(fc, field, degree + 1).to_dense(fc, field, prefix).rank();
    n_k - rank_k - rank_up
}

/// Left-to-right lowest-one column reduction. Stored columns are scaled so their
/// lowest coefficient is 1.
struct Reducer {
    field: PrimeField,
    pivot_of_row: Vec<u32>,
    r: Vec<Chain>,
    v: Vec<Chain>,
    track_v: bool,
}

const NONE: u32 = u32::MAX;

impl Reducer {
    fn new(field: PrimeField, n_rows: usize, track_v: bool) -> Self {
        Reducer {
            field,
            pivot_of_row: vec![NONE; n_rows],
            r: Vec::new(),
            v: Vec::new(),
            track_v,
        }
    }

    /// Reduces a column and returns its lowest row, or `None` if it vanished.
    fn push(&mut self, mut col: Chain, mut vcol: Chain) -> Option<usize> {
        let f = self.field;
        while let Some(&(low, c)) = col.last() {
            let j = self.pivot_of_row[low];
            if j == NONE {
                break;
            }
            let k = f.neg(c);
            col = chain_axpy(f, &col, k, &self.r[j as usize]);
            if self.track_v {
                vcol = chain_axpy(f, &vcol, k, &self.v[j as usize]);
            }
        }
        let low = col.last().map(|e| e.0);
        if let Some(l) = low {
            let inv = f.inv(col.last().unwrap().1).expect("nonzero");
            col = chain_scale(f, &col, inv);
            if self.track_v {
                vcol = chain_scale(f, &vcol, inv);
            }
            self.pivot_of_row[l] = self.r.len() as u32;
        }
        self.r.push(col);
        if self.track_v {
            self.v.push(vcol);
        }
        low
    }
}

/// Outcome of reducing one boundary matrix, in global simplex indices.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// `(lowest row, column)` of every column that survives reduction.
    pub pairs: Vec<(usize, usize)>,
    pub zero_columns: Vec<usize>,
    pub reduced: Vec<Chain>,
}

/// Standard left-to-right reduction of a boundary matrix.
pub fn reduce(bm: &BoundaryMatrix, n_rows: usize, field: PrimeField) -> Reduction {
    let mut red = Reducer::new(field, n_rows, false);
    let mut pairs = Vec::new();
    let mut zero_columns = Vec::new();
    for (c, col) in bm.columns.iter().enumerate() {
        match red.push(col.clone(), Vec::new()) {
            Some(low) => pairs.push((low, bm.simplices[c])),
            None => zero_columns.push(bm.simplices[c]),
        }
    }
    pairs.sort_unstable();
    Reduction {
        pairs,
        zero_columns,
        reduced: red.r,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Other,
    Positive(usize),
    Negative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceClass {
    pub birth_simplex: usize,
    pub death_simplex: Option<usize>,
    pub birth: f64,
    pub death: f64,
    /// Cycle whose last entry is `(birth_simplex, 1)`.
    pub representative: Chain,
}

impl PersistenceClass {
    pub fn alive_at(&self, r: f64) -> bool {
        self.birth <= r && r < self.death
    }
}

/// Degree-`k` persistence of one filtered complex.
#[derive(Debug, Clone)]
pub struct Persistence {
    complex: Arc<FilteredComplex>,
    field: PrimeField,
    degree: usize,
    roles: Vec<Role>,
    classes: Vec<PersistenceClass>,
}

/// Homology of the sublevel complex at `radius`: the classes alive there.
#[derive(Debug, Clone, PartialEq)]
pub struct HomologyBasis {
    pub degree: usize,
    pub radius: f64,
    /// Indices into [`Persistence::classes`], increasing.
    pub class_ids: Vec<usize>,
    pub representatives: Vec<Chain>,
    pub intervals: Vec<(f64, f64)>,
}

impl HomologyBasis {
    pub fn dim(&self) -> usize {
        self.class_ids.len()
    }

    fn position(&self, class: usize) -> Option<usize> {
        self.class_ids.binary_search(&class).ok()
    }
}

impl Persistence {
    pub fn compute(complex: Arc<FilteredComplex>, degree: usize, field: PrimeField) -> Self {
        let fc = &*complex;
        let n = fc.len();
        let mut roles = vec![Role::Other; n];
        let mut classes = Vec::new();

        let kidx = fc.indices_of_dim(degree);
        let mut red_k = Reducer::new(field, n, true);
        for &j in &kidx {
            let col = if degree == 0 { Vec::new() } else { boundary_chain(fc, field, j) };
            match red_k.push(col, vec![(j, 1)]) {
                Some(_) => roles[j] = Role::Negative,
                None => {
                    roles[j] = Role::Positive(classes.len());
                    classes.push(PersistenceClass {
                        birth_simplex: j,
                        death_simplex: None,
                        birth: fc.birth(j),
                        death: f64::INFINITY,
                        representative: red_k.v.last().unwrap().clone(),
                    });
                }
            }
        }
        drop(red_k);

        // On a cone every positive k-simplex (k >= 1) is eventually killed, and once
        // all are paired the remaining columns reduce to zero.
        let stop_when_paired = degree >= 1 && fc.cone_apex(degree).is_some();
        let positives = classes.len();
        let mut paired = 0;
        let mut red_up = Reducer::new(field, n, false);
        for i in fc.indices_of_dim(degree + 1) {
            if stop_when_paired && paired == positives {
                break;
            }
            if let Some(low) = red_up.push(boundary_chain(fc, field, i), Vec::new()) {
                let Role::Positive(c) = roles[low] else {
                    unreachable!("reduced column ends at a positive simplex");
                };
                let class = &mut classes[c];
                class.death_simplex = Some(i);
                class.death = fc.birth(i);
                class.representative = red_up.r.last().unwrap().clone();
                paired += 1;
            }
        }

        Persistence {
            complex,
            field,
            degree,
            roles,
            classes,
        }
    }

    pub fn complex(&self) -> &Arc<FilteredComplex> {
        &self.complex
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn classes(&self) -> &[PersistenceClass] {
        &self.classes
    }

    /// `(birth simplex, death simplex)` pairs, essential classes with `None`.
    pub fn pairs(&self) -> Vec<(usize, Option<usize>)> {
        self.classes.iter().map(|c| (c.birth_simplex, c.death_simplex)).collect()
    }

    /// Bars of positive length as `(birth, death)` radii.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.classes
            .iter()
            .filter(|c| c.birth < c.death)
            .map(|c| (c.birth, c.death))
            .collect()
    }

    /// Radii where the homology changes.
    pub fn event_radii(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self
            .intervals()
            .into_iter()
            .flat_map(|(b, d)| [b, d])
            .filter(|x| x.is_finite())
            .collect();
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    }

    pub fn betti(&self, radius: f64) -> usize {
        self.classes.iter().filter(|c| c.alive_at(radius)).count()
    }

    pub fn basis_at(&self, radius: f64) -> HomologyBasis {
        let mut b = HomologyBasis {
            degree: self.degree,
            radius,
            class_ids: Vec::new(),
            representatives: Vec::new(),
            intervals: Vec::new(),
        };
        for (id, c) in self.classes.iter().enumerate() {
            if c.alive_at(radius) {
                b.class_ids.push(id);
                b.representatives.push(c.representative.clone());
                b.intervals.push((c.birth, c.death));
            }
        }
        b
    }

    /// Coordinates of the cycle `z` in `basis`, so that `z − Σ cᵢ·repᵢ` is a boundary.
    pub fn reduce_cycle(&self, z: &[(usize, u32)], basis: &HomologyBasis) -> Result<Vec<u32>, HomologyError> {
        let f = self.field;
        let fc = &*self.complex;
        let r = basis.radius;
        let prefix = fc.sublevel_len(r);
        let mut coords = vec![0u32; basis.dim()];
        let mut z: Chain = z.to_vec();
        while let Some(&(low, c)) = z.last() {
            if low >= prefix {
                return Err(HomologyError::CycleNotInComplex(low));
            }
            let d = fc.dim_of(low);
            if d != self.degree {
                return Err(HomologyError::WrongDegree {
                    expected: self.degree,
                    found: d,
                });
            }
            let Role::Positive(id) = self.roles[low] else {
                return Err(HomologyError::NotACycle);
            };
            let class = &self.classes[id];
            if let Some(pos) = basis.position(id) {
                coords[pos] = f.add(coords[pos], c);
            } else if class.death > r {
                // neither alive nor dead at r: the birth simplex is present, so
                // the class must be in the basis
                unreachable!("basis does not match radius");
            }
            z = chain_axpy(f, &z, f.neg(c), &class.representative);
        }
        Ok(coords)
    }

    /// Matrix of `H(K_small) → H(K_big)` in the two bases.
    pub fn inclusion_induced(&self, small: &HomologyBasis, big: &HomologyBasis) -> Result<FieldMatrix, HomologyError> {
        if small.radius > big.radius {
            return Err(HomologyError::RadiusOrder {
                small: small.radius,
                big: big.radius,
            });
        }
        let cols = small
            .representatives
            .iter()
            .map(|z| self.reduce_cycle(z, big))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FieldMatrix::from_columns(self.field, big.dim(), &cols))
    }
}

/// Chain map of a vertex map: degenerate simplices vanish, the rest are sorted
/// with the sign of the sorting permutation.
pub fn push_forward(
    z: &[(usize, u32)],
    source: &FilteredComplex,
    target: &FilteredComplex,
    vertex_map: &[usize],
    field: PrimeField,
) -> Result<Chain, HomologyError> {
    let mut acc = Vec::with_capacity(z.len());
    for &(i, c) in z {
        let mut img: Vec<usize> = source.simplex(i).iter().map(|&v| vertex_map[v]).collect();
        let mut inversions = 0;
        for a in 0..img.len() {
            for b in a + 1..img.len() {
                if img[a] > img[b] {
                    inversions += 1;
                }
            }
        }
        img.sort_unstable();
        if img.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let idx = target
            .index_of(&img)
            .ok_or(HomologyError::CycleNotInComplex(i))?;
        let c = if inversions % 2 == 0 { c } else { field.neg(c) };
        acc.push((idx, c));
    }
    Ok(normalize_chain(field, acc))
}

/// Matrix of the map `H(G_r) → H(T_r)` induced by a vertex map, in the two bases.
pub fn projection_induced(
    source: &Persistence,
    target: &Persistence,
    vertex_map: &[usize],
    basis_source: &HomologyBasis,
    basis_target: &HomologyBasis,
) -> Result<FieldMatrix, HomologyError> {
    let cols = basis_source
        .representatives
        .iter()
        .map(|z| {
            let w = push_forward(z, source.complex(), target.complex(), vertex_map, source.field())?;
            target.reduce_cycle(&w, basis_target)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FieldMatrix::from_columns(source.field(), basis_target.dim(), &cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::{map_complexes, vietoris_rips, Simplex};
    use crate::geometry::{synth_circle_map, synth_torus_map};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f() -> PrimeField {
        PrimeField::default()
    }

    fn complex(list: &[(&[usize], f64)]) -> Arc<FilteredComplex> {
        Arc::new(FilteredComplex::from_simplices(
            list.iter().map(|(s, b)| (s.to_vec(), *b)).collect(),
        ))
    }

    fn square() -> Arc<FilteredComplex> {
        complex(&[
            (&[0], 0.0),
            (&[1], 0.0),
            (&[2], 0.0),
            (&[3], 0.0),
            (&[0, 1], 1.0),
            (&[1, 2], 1.0),
            (&[2, 3], 1.0),
            (&[0, 3], 1.0),
        ])
    }

    #[test]
    fn reduction_examples() {
        let sq = square();
        let h1 = Persistence::compute(sq.clone(), 1, f());
        assert_eq!(h1.classes().len(), 1);
        assert_eq!(h1.classes()[0].death, f64::INFINITY);
        let h0 = Persistence::compute(sq.clone(), 0, f());
        assert_eq!(h0.intervals().iter().filter(|i| i.1.is_infinite()).count(), 1);

        let pt = complex(&[(&[0], 0.0)]);
        let h0 = Persistence::compute(pt, 0, f());
        assert_eq!(h0.pairs(), vec![(0, None)]);

        let tri = complex(&[
            (&[0], 0.0),
            (&[1], 0.0),
            (&[2], 0.0),
            (&[0, 1], 1.0),
            (&[0, 2], 1.0),
            (&[1, 2], 1.0),
            (&[0, 1, 2], 2.0),
        ]);
        let h1 = Persistence::compute(tri.clone(), 1, f());
        assert_eq!(h1.intervals(), vec![(1.0, 2.0)]);
        let bm = boundary_matrix(&tri, f(), 2);
        let red = reduce(&bm, tri.len(), f());
        assert_eq!(red.pairs, vec![(5, 6)]);
        assert!(red.zero_columns.is_empty());
    }

    #[test]
    fn basis_examples() {
        let m = synth_circle_map(12, 1, 0.0, 0).unwrap();
        let fc = Arc::new(vietoris_rips(m.domain(), 2, 2.0));
        let h1 = Persistence::compute(fc.clone(), 1, f());
        let edge = (std::f64::consts::PI / 12.0).sin();
        assert_eq!(h1.basis_at(edge + 1e-9).dim(), 1);
        let h0 = Persistence::compute(fc.clone(), 0, f());
        assert_eq!(h0.basis_at(edge / 2.0).dim(), 12);
        assert_eq!(h1.basis_at(edge / 2.0).dim(), 0);
    }

    #[test]
    fn flat_torus_grid_betti_numbers() {
        let m = synth_torus_map(8, [[1, 0], [0, 1]]).unwrap();
        let r = 2f64.sqrt() / 16.0;
        let fc = Arc::new(vietoris_rips(m.domain(), 2, 0.2));
        let h0 = Persistence::compute(fc.clone(), 0, f());
        let h1 = Persistence::compute(fc.clone(), 1, f());
        // grid spacing 1/8; diagonals have length sqrt(2)/8 = 2r
        assert_eq!((h0.betti(r), h1.betti(r)), (1, 2));
        assert_eq!(betti_by_rank(&fc, f(), 0, r), 1);
        assert_eq!(betti_by_rank(&fc, f(), 1, r), 2);
        // only axis neighbours: every square is an empty hole
        assert_eq!(h1.betti(1.0 / 16.0), 65);
        assert_eq!(betti_by_rank(&fc, f(), 1, 1.0 / 16.0), 65);
    }

    #[test]
    fn reduce_cycle_examples() {
        let m = synth_circle_map(10, 1, 0.1, 4).unwrap();
        let fc = Arc::new(vietoris_rips(m.domain(), 2, 2.0));
        let h1 = Persistence::compute(fc.clone(), 1, f());
        let (b, d) = h1.intervals().into_iter().max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0))).unwrap();
        let basis = h1.basis_at((b + d) / 2.0);
        for (k, z) in basis.representatives.iter().enumerate() {
            let mut e = vec![0; basis.dim()];
            e[k] = 1;
            assert_eq!(h1.reduce_cycle(z, &basis).unwrap(), e);
        }
        // boundary of a present triangle
        let prefix = fc.sublevel_len(basis.radius);
        let t = (0..prefix).find(|&i| fc.dim_of(i) == 2).unwrap();
        let bd = boundary_chain(&fc, f(), t);
        assert!(h1.reduce_cycle(&bd, &basis).unwrap().iter().all(|&c| c == 0));
        // linearity
        if basis.dim() >= 2 {
            let s = chain_axpy(f(), &basis.representatives[0], 1, &basis.representatives[1]);
            let c = h1.reduce_cycle(&s, &basis).unwrap();
            assert_eq!((c[0], c[1]), (1, 1));
        }
        // a single edge is not a cycle
        let e = (0..prefix).find(|&i| fc.dim_of(i) == 1).unwrap();
        assert_eq!(h1.reduce_cycle(&[(e, 1)], &basis), Err(HomologyError::NotACycle));
    }

    #[test]
    fn inclusion_examples() {
        let m = synth_circle_map(16, 1, 0.0, 0).unwrap();
        let fc = Arc::new(vietoris_rips(m.domain(), 2, 2.0));
        let h1 = Persistence::compute(fc.clone(), 1, f());
        let (b, d) = h1.intervals()[0];
        let a = h1.basis_at(b);
        assert!(h1.inclusion_induced(&a, &a).unwrap().is_identity());
        let mid = h1.basis_at((b + d) / 2.0);
        let m1 = h1.inclusion_induced(&a, &mid).unwrap();
        assert_eq!(m1.shape(), (1, 1));
        assert_ne!(m1.get(0, 0), 0);
        let late = h1.basis_at(d);
        assert_eq!(late.dim(), 0);
        assert_eq!(h1.inclusion_induced(&a, &late).unwrap().shape(), (0, 1));
        assert!(matches!(h1.inclusion_induced(&mid, &a), Err(HomologyError::RadiusOrder { .. })));
    }

    /// Random closed complex: random simplices plus all their faces.
    fn random_complex(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Arc<FilteredComplex> {
        let mut births: std::collections::HashMap<Simplex, f64> = Default::default();
        for _ in 0..count {
            let k = rng.gen_range(1..=4.min(n));
            let mut s: Simplex = rand::seq::index::sample(rng, n, k).into_vec();
            s.sort_unstable();
            let b = rng.gen_range(0..10) as f64;
            for mask in 1u32..(1 << s.len()) {
                let face: Simplex = (0..s.len()).filter(|&i| mask >> i & 1 == 1).map(|i| s[i]).collect();
                let e = births.entry(face).or_insert(b);
                *e = e.min(b);
            }
        }
        // faces must not be born after cofaces
        let mut list: Vec<(Simplex, f64)> = births.into_iter().collect();
        list.sort_by_key(|(s, _)| std::cmp::Reverse(s.len()));
        let mut fixed: std::collections::HashMap<Simplex, f64> = Default::default();
        for (s, b) in list {
            let b = s_min_cofaces(&fixed, &s, b);
            fixed.insert(s, b);
        }
        Arc::new(FilteredComplex::from_simplices(fixed.into_iter().collect()))
    }

    fn s_min_cofaces(fixed: &std::collections::HashMap<Simplex, f64>, s: &Simplex, b: f64) -> f64 {
        fixed
            .iter()
            .filter(|(t, _)| t.len() == s.len() + 1 && s.iter().all(|v| t.contains(v)))
            .map(|(_, &tb)| tb)
            .fold(b, f64::min)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn betti_numbers_match_rank_oracle(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fc = random_complex(&mut rng, 7, 12);
            prop_assume!(fc.len() <= 200);
            prop_assert!(crate::complexes::validate_filtration(&fc).is_ok());
            prop_assert!(boundary_squared_is_zero(&fc, f()));
            for k in 0..3 {
                let p = Persistence::compute(fc.clone(), k, f());
                for r in 0..11 {
                    let r = r as f64;
                    prop_assert_eq!(p.betti(r), betti_by_rank(&fc, f(), k, r));
                }
            }
        }

        #[test]
        fn inclusions_compose(seed in any::<u64>()) {
            let m = synth_circle_map(14, 1, 0.25, seed).unwrap();
            let fc = Arc::new(vietoris_rips(m.domain(), 2, 2.0));
            let h1 = Persistence::compute(fc.clone(), 1, f());
            let radii = crate::complexes::critical_radii(&fc);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..10 {
                let mut t: Vec<f64> = (0..3).map(|_| radii[rng.gen_range(0..radii.len())]).collect();
                t.sort_by(f64::total_cmp);
                let b: Vec<HomologyBasis> = t.iter().map(|&r| h1.basis_at(r)).collect();
                let m13 = h1.inclusion_induced(&b[0], &b[2]).unwrap();
                let m12 = h1.inclusion_induced(&b[0], &b[1]).unwrap();
                let m23 = h1.inclusion_induced(&b[1], &b[2]).unwrap();
                prop_assert_eq!(m13, m23.matmul(&m12).unwrap());
            }
        }

        #[test]
        fn projections_are_chain_maps(seed in any::<u64>(), power in -2i64..4) {
            let m = synth_circle_map(10, power, 0.2, seed).unwrap();
            let mc = map_complexes(&m, 2, 1.2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let id: Vec<usize> = (0..m.len()).collect();
            for _ in 0..10 {
                let z: Chain = normalize_chain(
                    f(),
                    (0..5).map(|_| (rng.gen_range(0..mc.graph.len()), rng.gen_range(1..1009))).collect(),
                );
                for (target, map) in [(&mc.domain, &id), (&mc.image, &mc.image_map)] {
                    let lhs = chain_boundary(target, f(), &push_forward(&z, &mc.graph, target, map, f()).unwrap());
                    let rhs = push_forward(&chain_boundary(&mc.graph, f(), &z), &mc.graph, target, map, f()).unwrap();
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        let id = synth_circle_map(12, 1, 0.0, 0).unwrap();
        let mc = map_complexes(&id, 2, 2.0);
        let g = Persistence::compute(Arc::new(mc.graph.clone()), 1, f());
        let c = Persistence::compute(Arc::new(mc.domain.clone()), 1, f());
        let r = g.intervals()[0].0;
        let verts: Vec<usize> = (0..12).collect();
        let p = projection_induced(&g, &c, &verts, &g.basis_at(r), &c.basis_at(r)).unwrap();
        assert!(p.is_identity());

        let z2 = synth_circle_map(24, 2, 0.0, 0).unwrap();
        let mc = map_complexes(&z2, 2, 2.0);
        let g = Persistence::compute(Arc::new(mc.graph.clone()), 1, f());
        let d = Persistence::compute(Arc::new(mc.image.clone()), 1, f());
        let longest = g.intervals().into_iter().max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0))).unwrap();
        let r = longest.0;
        let bg = g.basis_at(r);
        let bd = d.basis_at(r);
        assert_eq!((bg.dim(), bd.dim()), (1, 1));
        let q = projection_induced(&g, &d, &mc.image_map, &bg, &bd).unwrap();
        // winding of the image of the graph generator relative to the image generator
        let w = |z: &Chain, fc: &FilteredComplex, cloud: &crate::geometry::PointCloud| {
            let edges: Vec<(usize, usize, u32)> = z.iter().map(|&(i, c)| (fc.simplex(i)[0], fc.simplex(i)[1], c)).collect();
            crate::geometry::chain_winding(cloud, &edges, f()).unwrap()[0]
        };
        let (distinct, _) = z2.image().dedup();
        let pushed = push_forward(&bg.representatives[0], &mc.graph, &mc.image, &mc.image_map, f()).unwrap();
        let ratio = w(&pushed, &mc.image, &distinct) / w(&bd.representatives[0], &mc.image, &distinct);
        assert_eq!(ratio.abs(), 2);
        assert_eq!(f().lift_symmetric(q.get(0, 0)), ratio);

        let constant = crate::geometry::SampledMap::new(
            z2.domain().clone(),
            crate::geometry::PointCloud::euclidean(vec![vec![0.5, 0.5]; 24]).unwrap(),
        )
        .unwrap();
        let mc = map_complexes(&constant, 2, 2.0);
        let g = Persistence::compute(Arc::new(mc.graph.clone()), 1, f());
        let d = Persistence::compute(Arc::new(mc.image.clone()), 1, f());
        let r = g.intervals()[0].0;
        let q = projection_induced(&g, &d, &mc.image_map, &g.basis_at(r), &d.basis_at(r)).unwrap();
        assert_eq!(q.shape(), (0, 1));
    }

    #[test]
    fn early_stop_matches_full_reduction() {
        let m = synth_circle_map(20, 1, 0.2, 9).unwrap();
        let cone = Arc::new(vietoris_rips(m.domain(), 2, 5.0));
        assert!(cone.cone_apex(1).is_some());
        let fast = Persistence::compute(cone.clone(), 1, f());
        let bm = boundary_matrix(&cone, f(), 2);
        let slow = reduce(&bm, cone.len(), f()).pairs;
        let fast_pairs: Vec<_> = fast.pairs().into_iter().filter_map(|(b, d)| Some((b, d?))).collect();
        assert_eq!(fast_pairs, slow);
        assert!(fast.pairs().iter().all(|p| p.1.is_some()));
    }
}
