//! Representations of type-A quivers: interval decomposition, block restriction,
//! the staged I[1,3] extraction for `HC ← HG → HD`, and induced maps.
//!
//! Vertices are numbered from 0. An [`Interval`] `{start, end}` is inclusive and
//! prints in the 1-based `I[b,d]` notation.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ffield::PrimeField;
use crate::linalg::{FieldMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuiverError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad orientation symbol {0:?} (expected 'f' or 'b')")]
    BadOrientation(char),
    #[error("decomposition certificate failed at {0}")]
    CertificateFailure(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `Forward` at position `k` points from vertex `k` to `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arrow {
    Forward,
    Backward,
}

pub fn parse_orientation(s: &str) -> Result<Vec<Arrow>, QuiverError> {
    s.chars()
        .map(|c| match c {
            'f' => Ok(Arrow::Forward),
            'b' => Ok(Arrow::Backward),
            other => Err(QuiverError::BadOrientation(other)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "empty interval");
        Interval { start, end }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.start <= v && v <= self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I[{},{}]", self.start + 1, self.end + 1)
    }
}

/// A vector space per vertex and a matrix per arrow. A forward arrow `k` has
/// shape `dims[k+1] × dims[k]`, a backward one `dims[k] × dims[k+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnRepresentation {
    field: PrimeField,
    orientation: Vec<Arrow>,
    dims: Vec<usize>,
    maps: Vec<FieldMatrix>,
}

fn arrow_shape(orientation: &[Arrow], dims: &[usize], k: usize) -> (usize, usize) {
    match orientation[k] {
        Arrow::Forward => (dims[k + 1], dims[k]),
        Arrow::Backward => (dims[k], dims[k + 1]),
    }
}

impl AnRepresentation {
    pub fn new(
        field: PrimeField,
        orientation: Vec<Arrow>,
        dims: Vec<usize>,
        maps: Vec<FieldMatrix>,
    ) -> Result<Self, QuiverError> {
        if dims.is_empty() || orientation.len() + 1 != dims.len() || maps.len() != orientation.len() {
            return Err(QuiverError::ShapeMismatch(format!(
                "{} vertices, {} arrows, {} maps",
                dims.len(),
                orientation.len(),
                maps.len()
            )));
        }
        for (k, m) in maps.iter().enumerate() {
            let want = arrow_shape(&orientation, &dims, k);
            if m.shape() != want {
                return Err(QuiverError::ShapeMismatch(format!(
                    "arrow {k}: expected {want:?}, found {:?}",
                    m.shape()
                )));
            }
        }
        Ok(AnRepresentation {
            field,
            orientation,
            dims,
            maps,
        })
    }

    /// The canonical direct sum of the given intervals, in the given order.
    pub fn interval_sum(field: PrimeField, orientation: Vec<Arrow>, summands: &[Interval]) -> Self {
        let n = orientation.len() + 1;
        let at: Vec<Vec<usize>> = (0..n)
            .map(|v| (0..summands.len()).filter(|&s| summands[s].contains(v)).collect())
            .collect();
        let dims: Vec<usize> = at.iter().map(Vec::len).collect();
        let maps = (0..n - 1)
            .map(|k| {
                let (src, dst) = match orientation[k] {
                    Arrow::Forward => (k, k + 1),
                    Arrow::Backward => (k + 1, k),
                };
                let mut m = FieldMatrix::zeros(field, dims[dst], dims[src]);
                for (j, s) in at[src].iter().enumerate() {
                    if let Some(i) = at[dst].iter().position(|t| t == s) {
                        m.set(i, j, 1);
                    }
                }
                m
            })
            .collect();
        AnRepresentation {
            field,
            orientation,
            dims,
            maps,
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn orientation(&self) -> &[Arrow] {
        &self.orientation
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn maps(&self) -> &[FieldMatrix] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }

    /// The same representation read from the last vertex to the first.
    pub fn reversed(&self) -> Self {
        let orientation = self
            .orientation
            .iter()
            .rev()
            .map(|a| match a {
                Arrow::Forward => Arrow::Backward,
                Arrow::Backward => Arrow::Forward,
            })
            .collect();
        AnRepresentation {
            field: self.field,
            orientation,
            dims: self.dims.iter().rev().copied().collect(),
            maps: self.maps.iter().rev().cloned().collect(),
        }
    }

    /// Maps rewritten in the bases whose vectors are the columns of `bases[v]`.
    pub fn in_bases(&self, bases: &[FieldMatrix]) -> Result<Self, QuiverError> {
        let inv: Vec<FieldMatrix> = bases.iter().map(|b| b.inverse()).collect::<Result<_, _>>()?;
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let (src, dst) = match self.orientation[k] {
                    Arrow::Forward => (k, k + 1),
                    Arrow::Backward => (k + 1, k),
                };
                inv[dst].matmul(m)?.matmul(&bases[src])
            })
            .collect::<Result<_, _>>()?;
        Ok(AnRepresentation {
            maps,
            ..self.clone()
        })
    }
}

/// Whether the identity-on-overlap candidate `src → dst` is a morphism, which is
/// exactly when `Hom(src, dst) ≠ 0`.
pub fn hom_nonzero(src: Interval, dst: Interval, orientation: &[Arrow]) -> bool {
    if src.end < dst.start || dst.end < src.start {
        return false;
    }
    let both = |v: usize| src.contains(v) && dst.contains(v);
    (0..orientation.len()).all(|k| {
        let (a, b) = match orientation[k] {
            Arrow::Forward => (k, k + 1),
            Arrow::Backward => (k + 1, k),
        };
        // square from src_a to dst_b: dst(a→b)·f_a against f_b·src(a→b)
        if !(src.contains(a) && dst.contains(b)) {
            return true;
        }
        let lhs = both(a) && dst.contains(b);
        let rhs = src.contains(b) && both(b);
        lhs == rhs
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Born {
    First,
    Forward,
    Backward,
}

struct Bar {
    start: usize,
    born: Born,
    vecs: Vec<Vec<u32>>,
}

impl Bar {
    fn at(&self, v: usize) -> &[u32] {
        &self.vecs[v - self.start]
    }

    /// Donor order: additions go only from earlier to later bars.
    fn order_key(&self) -> (u8, isize) {
        match self.born {
            Born::Backward => (0, -(self.start as isize)),
            _ => (1, self.start as isize),
        }
    }
}

fn axpy(field: PrimeField, a: &mut [u32], c: u32, b: &[u32]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x = field.mul_add(*x, c, *y);
    }
}

fn last_nonzero(v: &[u32]) -> Option<usize> {
    v.iter().rposition(|&x| x != 0)
}

/// `target += c · donor` on every vertex where both are alive, up to `upto`.
fn add_bar(field: PrimeField, bars: &mut [Bar], target: usize, donor: usize, c: u32, upto: usize) {
    let lo = bars[target].start.max(bars[donor].start);
    for v in lo..=upto {
        let d = bars[donor].at(v).to_vec();
        let t = v - bars[target].start;
        axpy(field, &mut bars[target].vecs[t], c, &d);
    }
}

/// Direct-sum decomposition with its certificate: the columns of `bases[v]` are
/// the vectors of the summands alive at `v`, in summand order.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalDecomposition {
    pub orientation: Vec<Arrow>,
    pub summands: Vec<Interval>,
    pub bases: Vec<FieldMatrix>,
}

impl IntervalDecomposition {
    pub fn multiplicity(&self, iv: Interval) -> usize {
        self.summands.iter().filter(|&&s| s == iv).count()
    }

    pub fn multiplicities(&self) -> BTreeMap<Interval, usize> {
        let mut m = BTreeMap::new();
        for &s in &self.summands {
            *m.entry(s).or_insert(0) += 1;
        }
        m
    }

    /// Indices into `summands` of the summands alive at `v`; column order of `bases[v]`.
    pub fn summands_at(&self, v: usize) -> Vec<usize> {
        (0..self.summands.len()).filter(|&s| self.summands[s].contains(v)).collect()
    }

    /// Columns of `bases[v]` belonging to summands equal to `iv`.
    pub fn columns_of(&self, v: usize, iv: Interval) -> Vec<usize> {
        self.summands_at(v)
            .into_iter()
            .enumerate()
            .filter(|&(_, s)| self.summands[s] == iv)
            .map(|(c, _)| c)
            .collect()
    }

    /// Checks that the bases are invertible and conjugate `rep` to the canonical sum.
    pub fn verify(&self, rep: &AnRepresentation) -> Result<(), QuiverError> {
        let canon = AnRepresentation::interval_sum(rep.field, rep.orientation.clone(), &self.summands);
        if canon.dims != rep.dims {
            return Err(QuiverError::CertificateFailure(format!(
                "dimension vector {:?} vs {:?}",
                canon.dims, rep.dims
            )));
        }
        let conj = rep
            .in_bases(&self.bases)
            .map_err(|e| QuiverError::CertificateFailure(format!("basis not invertible: {e}")))?;
        for (k, (a, b)) in conj.maps.iter().zip(&canon.maps).enumerate() {
            if a != b {
                return Err(QuiverError::CertificateFailure(format!("arrow {k}")));
            }
        }
        Ok(())
    }
}

/// Interval decomposition by a left-to-right sweep that only uses permissible
/// additions. The result is verified against the certificate before returning.
pub fn decompose_an(rep: &AnRepresentation) -> Result<IntervalDecomposition, QuiverError> {
    let f = rep.field;
    let n = rep.len();
    let mut done: Vec<(Interval, Vec<Vec<u32>>)> = Vec::new();
    let mut bars: Vec<Bar> = (0..rep.dims[0])
        .map(|i| {
            let mut e = vec![0; rep.dims[0]];
            e[i] = 1;
            Bar {
                start: 0,
                born: Born::First,
                vecs: vec![e],
            }
        })
        .collect();

    for k in 0..n - 1 {
        bars.sort_by_key(Bar::order_key);
        let m = &rep.maps[k];
        let mut next: Vec<Bar> = Vec::new();
        let mut closing = vec![false; bars.len()];
        match rep.orientation[k] {
            Arrow::Forward => {
                let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
                let mut imgs: Vec<Vec<u32>> = Vec::with_capacity(bars.len());
                for t in 0..bars.len() {
                    let mut w = m.mul_vec(bars[t].at(k))?;
                    while let Some(low) = last_nonzero(&w) {
                        let Some(&d) = owner.get(&low) else { break };
                        let c = f.neg(f.div(w[low], imgs[d][low]).expect("pivot is nonzero"));
                        let dimg = imgs[d].clone();
                        axpy(f, &mut w, c, &dimg);
                        add_bar(f, &mut bars, t, d, c, k);
                    }
                    match last_nonzero(&w) {
                        Some(low) => {
                            owner.insert(low, t);
                        }
                        None => closing[t] = true,
                    }
                    imgs.push(w);
                }
                for (t, bar) in bars.iter_mut().enumerate() {
                    if !closing[t] {
                        bar.vecs.push(imgs[t].clone());
                    }
                }
                for row in 0..rep.dims[k + 1] {
                    if !owner.contains_key(&row) {
                        let mut e = vec![0; rep.dims[k + 1]];
                        e[row] = 1;
                        next.push(Bar {
                            start: k + 1,
                            born: Born::Forward,
                            vecs: vec![e],
                        });
                    }
                }
            }
            Arrow::Backward => {
                let cols: Vec<Vec<u32>> = bars.iter().map(|b| b.at(k).to_vec()).collect();
                let basis = FieldMatrix::from_columns(f, rep.dims[k], &cols);
                let coords = basis.inverse()?.matmul(m)?;
                let width = rep.dims[k + 1];
                let mut red: Vec<Vec<u32>> = (0..width).map(|j| coords.column(j)).collect();
                let mut pre: Vec<Vec<u32>> = (0..width)
                    .map(|j| {
                        let mut e = vec![0; width];
                        e[j] = 1;
                        e
                    })
                    .collect();
                let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
                for j in 0..width {
                    while let Some(low) = last_nonzero(&red[j]) {
                        let Some(&i) = owner.get(&low) else { break };
                        let c = f.neg(f.div(red[j][low], red[i][low]).expect("pivot is nonzero"));
                        let (ri, pi) = (red[i].clone(), pre[i].clone());
                        axpy(f, &mut red[j], c, &ri);
                        axpy(f, &mut pre[j], c, &pi);
                    }
                    if let Some(low) = last_nonzero(&red[j]) {
                        owner.insert(low, j);
                    }
                }
                let snapshot: Vec<Vec<Vec<u32>>> = bars.iter().map(|b| b.vecs.clone()).collect();
                for (t, bar) in bars.iter_mut().enumerate() {
                    let Some(&j) = owner.get(&t) else {
                        closing[t] = true;
                        continue;
                    };
                    for v in bar.start..=k {
                        let mut acc = vec![0; rep.dims[v]];
                        for (d, &c) in red[j].iter().enumerate() {
                            let donor_start = k + 1 - snapshot[d].len();
                            if c != 0 && v >= donor_start {
                                axpy(f, &mut acc, c, &snapshot[d][v - donor_start]);
                            }
                        }
                        bar.vecs[v - bar.start] = acc;
                    }
                    bar.vecs.push(pre[j].clone());
                }
                for j in 0..width {
                    if last_nonzero(&red[j]).is_none() {
                        next.push(Bar {
                            start: k + 1,
                            born: Born::Backward,
                            vecs: vec![pre[j].clone()],
                        });
                    }
                }
            }
        }
        let mut kept = Vec::new();
        for (t, bar) in bars.into_iter().enumerate() {
            if closing[t] {
                done.push((Interval::new(bar.start, k), bar.vecs));
            } else {
                kept.push(bar);
            }
        }
        kept.extend(next);
        bars = kept;
    }
    for bar in bars {
        done.push((Interval::new(bar.start, n - 1), bar.vecs));
    }

    done.sort_by_key(|(iv, _)| *iv);
    let summands: Vec<Interval> = done.iter().map(|(iv, _)| *iv).collect();
    let bases = (0..n)
        .map(|v| {
            let cols: Vec<Vec<u32>> = done
                .iter()
                .filter(|(iv, _)| iv.contains(v))
                .map(|(iv, vecs)| vecs[v - iv.start].clone())
                .collect();
            FieldMatrix::from_columns(f, rep.dims[v], &cols)
        })
        .collect();
    let dec = IntervalDecomposition {
        orientation: rep.orientation.clone(),
        summands,
        bases,
    };
    dec.verify(rep)?;
    Ok(dec)
}

/// The `(iv, iv)` block of a morphism `g` (one matrix per vertex, `W_v × V_v`)
/// between decomposed representations, read at the first vertex of `iv`.
pub fn diagonal_block(
    g: &[FieldMatrix],
    src: &IntervalDecomposition,
    dst: &IntervalDecomposition,
    iv: Interval,
) -> Result<FieldMatrix, QuiverError> {
    let v = iv.start;
    if g.len() != src.bases.len() || g.len() != dst.bases.len() || v >= g.len() {
        return Err(QuiverError::ShapeMismatch("morphism length".into()));
    }
    let local = dst.bases[v].inverse()?.matmul(&g[v])?.matmul(&src.bases[v])?;
    Ok(local.select(&dst.columns_of(v, iv), &src.columns_of(v, iv)))
}

/// `HX ← HF → HY` as the pair `(p, q)` sharing the column space.
#[derive(Debug, Clone, PartialEq)]
pub struct A3Triple {
    pub p: FieldMatrix,
    pub q: FieldMatrix,
}

impl A3Triple {
    pub fn new(p: FieldMatrix, q: FieldMatrix) -> Result<Self, QuiverError> {
        if p.cols() != q.cols() {
            return Err(QuiverError::ShapeMismatch(format!(
                "p has {} columns, q has {}",
                p.cols(),
                q.cols()
            )));
        }
        Ok(A3Triple { p, q })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.p.rows(), self.p.cols(), self.q.rows())
    }

    pub fn as_representation(&self) -> AnRepresentation {
        let (a, m, c) = self.dims();
        AnRepresentation::new(
            self.p.field(),
            vec![Arrow::Backward, Arrow::Forward],
            vec![a, m, c],
            vec![self.p.clone(), self.q.clone()],
        )
        .expect("shapes agree")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct A3Multiplicities {
    pub m11: usize,
    pub m12: usize,
    pub m13: usize,
    pub m22: usize,
    pub m23: usize,
    pub m33: usize,
}

/// Multiplicities from kernel dimensions.
pub fn a3_multiplicities(t: &A3Triple) -> A3Multiplicities {
    let (a, m, c) = t.dims();
    let rp = t.p.rank();
    let rq = t.q.rank();
    let mut stacked = FieldMatrix::zeros(t.p.field(), a + c, m);
    for j in 0..m {
        for i in 0..a {
            stacked.set(i, j, t.p.get(i, j));
        }
        for i in 0..c {
            stacked.set(a + i, j, t.q.get(i, j));
        }
    }
    let m22 = m - stacked.rank();
    let (kp, kq) = (m - rp, m - rq);
    A3Multiplicities {
        m11: a - rp,
        m12: kq - m22,
        m13: m + m22 - kp - kq,
        m22,
        m23: kp - m22,
        m33: c - rq,
    }
}

/// Normal form of a triple. In the transformed coordinates
/// `left · p · middle = [[I_r1, 0], [0, 0]]` and `right · q · middle` has an
/// identity block `I_r2` on middle columns `r1..r1+r2` (rows `0..r2`) and an
/// identity block `I_r3` on middle columns `0..r3` (rows `r2..r2+r3`), zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct I13Extraction {
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
    /// Row transform of `p`.
    pub left: FieldMatrix,
    /// Column transform of the shared middle space; its first `r3` columns span the I[1,3] part.
    pub middle: FieldMatrix,
    pub middle_inv: FieldMatrix,
    /// Row transform of `q`.
    pub right: FieldMatrix,
    dims: (usize, usize, usize),
}

impl I13Extraction {
    pub fn i13_columns(&self) -> std::ops::Range<usize> {
        0..self.r3
    }

    pub fn multiplicities(&self) -> A3Multiplicities {
        let (a, m, c) = self.dims;
        A3Multiplicities {
            m11: a - self.r1,
            m12: self.r1 - self.r3,
            m13: self.r3,
            m22: m - self.r1 - self.r2,
            m23: self.r2,
            m33: c - self.r2 - self.r3,
        }
    }

    /// The extraction viewed as an interval decomposition of the A₃(bf) representation.
    pub fn as_decomposition(&self) -> Result<IntervalDecomposition, QuiverError> {
        let (a, m, c) = self.dims;
        let (r1, r2, r3) = (self.r1, self.r2, self.r3);
        let left_inv = self.left.inverse()?;
        let right_inv = self.right.inverse()?;
        let iv = Interval::new;
        let mut summands = Vec::new();
        summands.extend(std::iter::repeat_n(iv(0, 0), a - r1));
        summands.extend(std::iter::repeat_n(iv(0, 1), r1 - r3));
        summands.extend(std::iter::repeat_n(iv(0, 2), r3));
        summands.extend(std::iter::repeat_n(iv(1, 1), m - r1 - r2));
        summands.extend(std::iter::repeat_n(iv(1, 2), r2));
        summands.extend(std::iter::repeat_n(iv(2, 2), c - r2 - r3));
        let order = |parts: &[std::ops::Range<usize>]| -> Vec<usize> { parts.iter().cloned().flatten().collect() };
        let all_rows = |x: &FieldMatrix| (0..x.rows()).collect::<Vec<_>>();
        let b0 = left_inv.select(&all_rows(&left_inv), &order(&[r1..a, r3..r1, 0..r3]));
        let b1 = self
            .middle
            .select(&all_rows(&self.middle), &order(&[r3..r1, 0..r3, r1 + r2..m, r1..r1 + r2]));
        let b2 = right_inv.select(&all_rows(&right_inv), &order(&[r2..r2 + r3, 0..r2, r2 + r3..c]));
        Ok(IntervalDecomposition {
            orientation: vec![Arrow::Backward, Arrow::Forward],
            summands,
            bases: vec![b0, b1, b2],
        })
    }
}

fn embed(field: PrimeField, n: usize, at: usize, block: &FieldMatrix) -> FieldMatrix {
    let mut out = FieldMatrix::identity(field, n);
    for i in 0..block.rows() {
        for j in 0..block.cols() {
            out.set(at + i, at + j, block.get(i, j));
        }
    }
    out
}

/// Staged reduction of `(p, q)` to the normal form of [`I13Extraction`].
pub fn extract_i13(t: &A3Triple) -> Result<I13Extraction, QuiverError> {
    let field = t.p.field();
    let (a, m, c) = t.dims();

    // Smith form of p
    let s1 = t.p.smith_normal_form();
    let r1 = s1.rank;
    let mut left = s1.row_transform;
    let mut middle = s1.col_transform;

    // Smith form of the block of q on ker p
    let x2 = t.q.matmul(&middle)?.submatrix(0..c, r1..m);
    let s2 = x2.smith_normal_form();
    let r2 = s2.rank;
    let mut right = s2.row_transform;
    middle = middle.matmul(&embed(field, m, r1, &s2.col_transform))?;

    // clear the top-left block with the identity columns
    let q2 = right.matmul(&t.q)?.matmul(&middle)?;
    let mut clear = FieldMatrix::identity(field, m);
    for i in 0..r2 {
        for j in 0..r1 {
            clear.set(r1 + i, j, field.neg(q2.get(i, j)));
        }
    }
    middle = middle.matmul(&clear)?;

    // Smith form of the remaining block, then undo its column side effect on p
    let q3 = right.matmul(&t.q)?.matmul(&middle)?;
    let x4 = q3.submatrix(r2..c, 0..r1);
    let s4 = x4.smith_normal_form();
    let r3 = s4.rank;
    right = embed(field, c, r2, &s4.row_transform).matmul(&right)?;
    middle = middle.matmul(&embed(field, m, 0, &s4.col_transform))?;
    left = embed(field, a, 0, &s4.col_transform.inverse()?).matmul(&left)?;

    let middle_inv = middle.inverse()?;
    let ext = I13Extraction {
        r1,
        r2,
        r3,
        left,
        middle,
        middle_inv,
        right,
        dims: (a, m, c),
    };
    check_normal_form(t, &ext)?;
    Ok(ext)
}

fn check_normal_form(t: &A3Triple, e: &I13Extraction) -> Result<(), QuiverError> {
    let pn = e.left.matmul(&t.p)?.matmul(&e.middle)?;
    let qn = e.right.matmul(&t.q)?.matmul(&e.middle)?;
    let (r1, r2, r3) = (e.r1, e.r2, e.r3);
    for i in 0..pn.rows() {
        for j in 0..pn.cols() {
            if pn.get(i, j) != (i == j && i < r1) as u32 {
                return Err(QuiverError::CertificateFailure(format!("p normal form at ({i},{j})")));
            }
        }
    }
    for i in 0..qn.rows() {
        for j in 0..qn.cols() {
            let want = (i < r2 && j == r1 + i) || (i >= r2 && i < r2 + r3 && j == i - r2);
            if qn.get(i, j) != want as u32 {
                return Err(QuiverError::CertificateFailure(format!("q normal form at ({i},{j})")));
            }
        }
    }
    if r3 > r1.min(t.q.rank()) {
        return Err(QuiverError::CertificateFailure("r3 exceeds min(r1, rank q)".into()));
    }
    Ok(())
}

/// The I[1,3] block of a middle-space map `phi`, in the two extractions' bases.
pub fn restrict_block(phi: &FieldMatrix, from: &I13Extraction, to: &I13Extraction) -> Result<FieldMatrix, QuiverError> {
    if phi.cols() != from.middle.rows() || phi.rows() != to.middle.rows() {
        return Err(QuiverError::ShapeMismatch(format!(
            "phi is {:?}, middle spaces are {} and {}",
            phi.shape(),
            from.middle.rows(),
            to.middle.rows()
        )));
    }
    let full = to.middle_inv.matmul(phi)?.matmul(&from.middle)?;
    Ok(full.submatrix(0..to.r3, 0..from.r3))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedMap {
    /// `dim HY × dim HX`.
    pub matrix: FieldMatrix,
    /// `im p = HX`.
    pub complete: bool,
    /// `q(ker p) = 0`.
    pub consistent: bool,
    pub extraction: I13Extraction,
}

/// `F* = right⁻¹ · ι · π · left`: project the left space onto its I[1,3]
/// coordinates and include them as the matching right coordinates.
pub fn induced_map_from_triple(t: &A3Triple) -> Result<InducedMap, QuiverError> {
    let field = t.p.field();
    let (a, _, c) = t.dims();
    let e = extract_i13(t)?;
    let mut glue = FieldMatrix::zeros(field, c, a);
    for j in 0..e.r3 {
        glue.set(e.r2 + j, j, 1);
    }
    let matrix = e.right.inverse()?.matmul(&glue)?.matmul(&e.left)?;
    let complete = t.p.rank() == a;
    let consistent = t.q.matmul(&t.p.kernel_basis())?.is_zero();
    Ok(InducedMap {
        matrix,
        complete,
        consistent,
        extraction: e,
    })
}

/// Random representations and block morphisms between interval sums.
pub mod random {
    use super::*;
    use rand::Rng;

    pub fn random_intervals<R: Rng + ?Sized>(n: usize, max_mult: usize, rng: &mut R) -> Vec<Interval> {
        let mut out = Vec::new();
        for s in 0..n {
            for e in s..n {
                for _ in 0..rng.gen_range(0..=max_mult) {
                    out.push(Interval::new(s, e));
                }
            }
        }
        out
    }

    /// A random morphism between canonical interval sums: one scalar per summand
    /// pair with nonzero Hom, applied through the identity-on-overlap basis.
    pub fn random_block_morphism<R: Rng + ?Sized>(
        field: PrimeField,
        orientation: &[Arrow],
        src: &[Interval],
        dst: &[Interval],
        rng: &mut R,
    ) -> Vec<FieldMatrix> {
        let n = orientation.len() + 1;
        let p = field.modulus();
        let scalars: Vec<Vec<u32>> = dst
            .iter()
            .map(|&d| {
                src.iter()
                    .map(|&s| if hom_nonzero(s, d, orientation) { rng.gen_range(0..p) } else { 0 })
                    .collect()
            })
            .collect();
        (0..n)
            .map(|v| {
                let rows: Vec<usize> = (0..dst.len()).filter(|&i| dst[i].contains(v)).collect();
                let cols: Vec<usize> = (0..src.len()).filter(|&j| src[j].contains(v)).collect();
                FieldMatrix::from_fn(field, rows.len(), cols.len(), |i, j| scalars[rows[i]][cols[j]] as i64)
            })
            .collect()
    }

    pub fn random_bases<R: Rng + ?Sized>(field: PrimeField, dims: &[usize], rng: &mut R) -> Vec<FieldMatrix> {
        dims.iter().map(|&d| FieldMatrix::random_invertible(field, d, rng)).collect()
    }

    /// `rep` rewritten so that the columns of `bases[v]` become its standard basis.
    pub fn disguise(rep: &AnRepresentation, bases: &[FieldMatrix]) -> AnRepresentation {
        let inv: Vec<FieldMatrix> = bases.iter().map(|b| b.inverse().unwrap()).collect();
        rep.in_bases(&inv).expect("invertible")
    }

    /// A morphism `g` between representations, rewritten for disguised source and target.
    pub fn disguise_morphism(g: &[FieldMatrix], src: &[FieldMatrix], dst: &[FieldMatrix]) -> Vec<FieldMatrix> {
        g.iter()
            .zip(src)
            .zip(dst)
            .map(|((g, s), d)| d.matmul(g).unwrap().matmul(&s.inverse().unwrap()).unwrap())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::random::*;
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f() -> PrimeField {
        PrimeField::default()
    }

    fn bf() -> Vec<Arrow> {
        vec![Arrow::Backward, Arrow::Forward]
    }

    fn random_triple(rng: &mut ChaCha8Rng, m: usize) -> A3Triple {
        let a = rng.gen_range(0..6);
        let c = rng.gen_range(0..6);
        let rp = rng.gen_range(0..=a.min(m));
        let rq = rng.gen_range(0..=c.min(m));
        A3Triple::new(
            FieldMatrix::random_with_rank(f(), a, m, rp, rng),
            FieldMatrix::random_with_rank(f(), c, m, rq, rng),
        )
        .unwrap()
    }

    /// dim Hom(src, dst) from the commutativity constraints, by nullspace.
    fn hom_dim(src: Interval, dst: Interval, orientation: &[Arrow]) -> usize {
        let n = orientation.len() + 1;
        let vars: Vec<usize> = (0..n).filter(|&v| src.contains(v) && dst.contains(v)).collect();
        let var = |v: usize| vars.iter().position(|&x| x == v);
        let mut rows: Vec<Vec<i64>> = Vec::new();
        for (k, arrow) in orientation.iter().enumerate() {
            let (a, b) = match arrow {
                Arrow::Forward => (k, k + 1),
                Arrow::Backward => (k + 1, k),
            };
            if !(src.contains(a) && dst.contains(b)) {
                continue;
            }
            // dst_map · g_a − g_b · src_map = 0
            let mut row = vec![0i64; vars.len()];
            if dst.contains(a) {
                if let Some(i) = var(a) {
                    row[i] += 1;
                }
            }
            if src.contains(b) {
                if let Some(i) = var(b) {
                    row[i] -= 1;
                }
            }
            rows.push(row);
        }
        if vars.is_empty() {
            return 0;
        }
        let m = FieldMatrix::from_fn(f(), rows.len(), vars.len(), |i, j| rows[i][j]);
        vars.len() - m.rank()
    }

    #[test]
    fn hom_table_for_bf() {
        let iv = Interval::new;
        let order = [iv(2, 2), iv(0, 0), iv(0, 2), iv(1, 2), iv(0, 1), iv(1, 1)];
        // rows are targets, columns sources
        let table = [
            "*.....", //
            ".*....", //
            "***...", //
            "*.**..", //
            ".**.*.", //
            "..****",
        ];
        for (r, &dst) in order.iter().enumerate() {
            for (c, &src) in order.iter().enumerate() {
                let want = table[r].as_bytes()[c] == b'*';
                assert_eq!(hom_nonzero(src, dst, &bf()), want, "Hom({src} -> {dst})");
            }
        }
        // only I[1,3] maps both ways with I[1,3]
        let full = iv(0, 2);
        for &other in &order {
            let both = hom_nonzero(other, full, &bf()) && hom_nonzero(full, other, &bf());
            assert_eq!(both, other == full);
        }
    }

    #[test]
    fn hom_dimension_is_zero_or_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(1..7);
            let o: Vec<Arrow> = (0..n - 1)
                .map(|_| if rng.gen() { Arrow::Forward } else { Arrow::Backward })
                .collect();
            let mut pick = || {
                let s = rng.gen_range(0..n);
                Interval::new(s, rng.gen_range(s..n))
            };
            let (a, b) = (pick(), pick());
            let d = hom_dim(a, b, &o);
            assert!(d <= 1);
            assert_eq!(d == 1, hom_nonzero(a, b, &o), "{a} -> {b} under {o:?}");
        }
    }

    #[test]
    fn extraction_examples() {
        let one = |v: i64| FieldMatrix::from_rows(f(), &[[v]]);
        let e = extract_i13(&A3Triple::new(one(1), one(1)).unwrap()).unwrap();
        assert_eq!((e.r3, e.multiplicities().m13), (1, 1));
        let e = extract_i13(&A3Triple::new(one(1), one(0)).unwrap()).unwrap();
        assert_eq!(e.r3, 0);
        assert_eq!(e.multiplicities().m12, 1);

        let t = A3Triple::new(FieldMatrix::zeros(f(), 2, 3), FieldMatrix::zeros(f(), 1, 3)).unwrap();
        let want = A3Multiplicities {
            m11: 2,
            m22: 3,
            m33: 1,
            ..Default::default()
        };
        assert_eq!(a3_multiplicities(&t), want);
        assert_eq!(extract_i13(&t).unwrap().multiplicities(), want);

        let id = FieldMatrix::identity(f(), 4);
        let t = A3Triple::new(id.clone(), id).unwrap();
        assert_eq!(
            a3_multiplicities(&t),
            A3Multiplicities {
                m13: 4,
                ..Default::default()
            }
        );
        assert!(A3Triple::new(FieldMatrix::zeros(f(), 1, 2), FieldMatrix::zeros(f(), 1, 3)).is_err());
    }

    #[test]
    fn extraction_matches_kernel_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let t = random_triple(&mut rng, 7);
            let e = extract_i13(&t).unwrap();
            let oracle = a3_multiplicities(&t);
            assert_eq!(e.r3, oracle.m13);
            assert_eq!(e.multiplicities(), oracle);
            let (a, m, c) = t.dims();
            let mu = oracle;
            assert_eq!(mu.m11 + mu.m12 + mu.m13, a);
            assert_eq!(mu.m12 + mu.m13 + mu.m22 + mu.m23, m);
            assert_eq!(mu.m13 + mu.m23 + mu.m33, c);
            // the extraction is itself a certified decomposition
            let dec = e.as_decomposition().unwrap();
            dec.verify(&t.as_representation()).unwrap();
        }
    }

    #[test]
    fn restrict_block_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let t = random_triple(&mut rng, 5);
        let e = extract_i13(&t).unwrap();
        let block = restrict_block(&FieldMatrix::identity(f(), 5), &e, &e).unwrap();
        assert!(block.is_identity());

        // identity on the middle space into a triple whose q kills everything
        let zero_q = A3Triple::new(t.p.clone(), FieldMatrix::zeros(f(), t.q.rows(), 5)).unwrap();
        let ez = extract_i13(&zero_q).unwrap();
        assert_eq!(ez.r3, 0);
        assert_eq!(restrict_block(&FieldMatrix::identity(f(), 5), &e, &ez).unwrap().shape(), (0, e.r3));

        assert!(matches!(
            restrict_block(&FieldMatrix::identity(f(), 4), &e, &e),
            Err(QuiverError::ShapeMismatch(_))
        ));
    }

    fn rank_oracle(rep: &AnRepresentation) -> BTreeMap<Interval, usize> {
        let n = rep.len();
        let r = |i: isize, j: isize| -> isize {
            if i < 0 || j >= n as isize || i > j {
                return 0;
            }
            let (i, j) = (i as usize, j as usize);
            let mut m = FieldMatrix::identity(rep.field(), rep.dims()[i]);
            for k in i..j {
                m = rep.maps()[k].matmul(&m).unwrap();
            }
            m.rank() as isize
        };
        let mut out = BTreeMap::new();
        for b in 0..n as isize {
            for d in b..n as isize {
                let mult = r(b, d) - r(b - 1, d) - r(b, d + 1) + r(b - 1, d + 1);
                if mult > 0 {
                    out.insert(Interval::new(b as usize, d as usize), mult as usize);
                }
            }
        }
        out
    }

    fn random_rep(rng: &mut ChaCha8Rng, orientation: Vec<Arrow>, max_dim: usize) -> AnRepresentation {
        let dims: Vec<usize> = (0..orientation.len() + 1).map(|_| rng.gen_range(0..=max_dim)).collect();
        let maps = (0..orientation.len())
            .map(|k| {
                let (r, c) = arrow_shape(&orientation, &dims, k);
                let rank = rng.gen_range(0..=r.min(c));
                FieldMatrix::random_with_rank(f(), r, c, rank, rng)
            })
            .collect();
        AnRepresentation::new(f(), orientation, dims, maps).unwrap()
    }

    #[test]
    fn decompose_examples() {
        let fwd = vec![Arrow::Forward; 3];
        let ids = vec![FieldMatrix::identity(f(), 1); 3];
        let rep = AnRepresentation::new(f(), fwd.clone(), vec![1; 4], ids).unwrap();
        let dec = decompose_an(&rep).unwrap();
        assert_eq!(dec.summands, vec![Interval::new(0, 3)]);

        let zero = AnRepresentation::new(
            f(),
            fwd,
            vec![0; 4],
            vec![FieldMatrix::zeros(f(), 0, 0); 3],
        )
        .unwrap();
        assert!(decompose_an(&zero).unwrap().summands.is_empty());

        let single = AnRepresentation::new(f(), vec![], vec![3], vec![]).unwrap();
        assert_eq!(decompose_an(&single).unwrap().multiplicity(Interval::new(0, 0)), 3);
    }

    #[test]
    fn forward_decomposition_matches_rank_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let rep = random_rep(&mut rng, vec![Arrow::Forward; n - 1], 6);
            let dec = decompose_an(&rep).unwrap();
            assert_eq!(dec.multiplicities(), rank_oracle(&rep));
        }
    }

    proptest! {
        #[test]
        fn zigzag_decomposition_is_certified_and_unique(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let o: Vec<Arrow> = (0..n - 1).map(|_| if rng.gen() { Arrow::Forward } else { Arrow::Backward }).collect();
            let rep = random_rep(&mut rng, o, 5);
            let dec = decompose_an(&rep).unwrap();
            let back = decompose_an(&rep.reversed()).unwrap();
            let flipped: BTreeMap<Interval, usize> = back
                .multiplicities()
                .into_iter()
                .map(|(iv, m)| (Interval::new(n - 1 - iv.end, n - 1 - iv.start), m))
                .collect();
            prop_assert_eq!(dec.multiplicities(), flipped);
            for v in 0..n {
                prop_assert_eq!(dec.summands_at(v).len(), rep.dims()[v]);
            }
        }

        #[test]
        fn disguised_interval_sums_are_recovered(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let o: Vec<Arrow> = (0..n - 1).map(|_| if rng.gen() { Arrow::Forward } else { Arrow::Backward }).collect();
            let mut ivs = random_intervals(n, 2, &mut rng);
            ivs.sort();
            let canon = AnRepresentation::interval_sum(f(), o, &ivs);
            let bases = random_bases(f(), canon.dims(), &mut rng);
            let rep = disguise(&canon, &bases);
            prop_assert_eq!(decompose_an(&rep).unwrap().summands, ivs);
        }

        #[test]
        fn diagonal_blocks_are_functorial(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let o: Vec<Arrow> = (0..n - 1).map(|_| if rng.gen() { Arrow::Forward } else { Arrow::Backward }).collect();
            let sums: Vec<Vec<Interval>> = (0..3).map(|_| random_intervals(n, 2, &mut rng)).collect();
            let canon: Vec<AnRepresentation> = sums.iter().map(|s| AnRepresentation::interval_sum(f(), o.clone(), s)).collect();
            let bases: Vec<Vec<FieldMatrix>> = canon.iter().map(|c| random_bases(f(), c.dims(), &mut rng)).collect();
            let reps: Vec<AnRepresentation> = canon.iter().zip(&bases).map(|(c, b)| disguise(c, b)).collect();
            let theta = disguise_morphism(&random_block_morphism(f(), &o, &sums[0], &sums[1], &mut rng), &bases[0], &bases[1]);
            let psi = disguise_morphism(&random_block_morphism(f(), &o, &sums[1], &sums[2], &mut rng), &bases[1], &bases[2]);
            let comp: Vec<FieldMatrix> = psi.iter().zip(&theta).map(|(a, b)| a.matmul(b).unwrap()).collect();
            let decs: Vec<IntervalDecomposition> = reps.iter().map(|r| decompose_an(r).unwrap()).collect();
            for s in 0..n {
                for e in s..n {
                    let iv = Interval::new(s, e);
                    let lhs = diagonal_block(&comp, &decs[0], &decs[2], iv).unwrap();
                    let rhs = diagonal_block(&psi, &decs[1], &decs[2], iv).unwrap()
                        .matmul(&diagonal_block(&theta, &decs[0], &decs[1], iv).unwrap()).unwrap();
                    prop_assert_eq!(lhs, rhs);
                }
            }
            let ident: Vec<FieldMatrix> = reps[0].dims().iter().map(|&d| FieldMatrix::identity(f(), d)).collect();
            for &iv in &decs[0].summands {
                prop_assert!(diagonal_block(&ident, &decs[0], &decs[0], iv).unwrap().is_identity());
            }
        }

        #[test]
        fn induced_map_matches_right_inverse_oracle(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = rng.gen_range(0..5);
            let m = a + rng.gen_range(0..4);
            let c = rng.gen_range(0..5);
            let p = FieldMatrix::random_with_rank(f(), a, m, a, &mut rng);
            // q vanishes on ker p: q = h · p
            let h = FieldMatrix::random(f(), c, a, &mut rng);
            let q = h.matmul(&p).unwrap();
            let out = induced_map_from_triple(&A3Triple::new(p.clone(), q.clone()).unwrap()).unwrap();
            prop_assert!(out.complete && out.consistent);
            let cols: Vec<Vec<u32>> = (0..a)
                .map(|i| {
                    let mut e = vec![0; a];
                    e[i] = 1;
                    p.solve(&e).unwrap()
                })
                .collect();
            let right_inv = FieldMatrix::from_columns(f(), m, &cols);
            prop_assert_eq!(&out.matrix, &q.matmul(&right_inv).unwrap());
            prop_assert_eq!(out.matrix, h);
        }
    }

    #[test]
    fn extraction_block_agrees_with_diagonal_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let full = Interval::new(0, 2);
        for _ in 0..50 {
            let sums: Vec<Vec<Interval>> = (0..2).map(|_| random_intervals(3, 2, &mut rng)).collect();
            let canon: Vec<AnRepresentation> = sums.iter().map(|s| AnRepresentation::interval_sum(f(), bf(), s)).collect();
            let bases: Vec<Vec<FieldMatrix>> = canon.iter().map(|c| random_bases(f(), c.dims(), &mut rng)).collect();
            let triples: Vec<A3Triple> = canon
                .iter()
                .zip(&bases)
                .map(|(c, b)| {
                    let r = disguise(c, b);
                    A3Triple::new(r.maps()[0].clone(), r.maps()[1].clone()).unwrap()
                })
                .collect();
            let g = disguise_morphism(&random_block_morphism(f(), &bf(), &sums[0], &sums[1], &mut rng), &bases[0], &bases[1]);
            let (e1, e2) = (extract_i13(&triples[0]).unwrap(), extract_i13(&triples[1]).unwrap());
            let (d1, d2) = (e1.as_decomposition().unwrap(), e2.as_decomposition().unwrap());
            assert_eq!(
                diagonal_block(&g, &d1, &d2, full).unwrap(),
                restrict_block(&g[1], &e1, &e2).unwrap()
            );
        }
    }

    #[test]
    fn induced_map_examples() {
        let id = FieldMatrix::identity(f(), 2);
        let out = induced_map_from_triple(&A3Triple::new(id.clone(), id).unwrap()).unwrap();
        assert!(out.matrix.is_identity() && out.complete && out.consistent);

        let out = induced_map_from_triple(
            &A3Triple::new(FieldMatrix::from_rows(f(), &[[0]]), FieldMatrix::from_rows(f(), &[[1]])).unwrap(),
        )
        .unwrap();
        assert!(!out.complete);
        assert!(!out.consistent);
        assert_eq!(out.matrix.shape(), (1, 1));
    }

    #[test]
    fn orientation_parsing() {
        assert_eq!(parse_orientation("bf").unwrap(), bf());
        assert_eq!(parse_orientation("x"), Err(QuiverError::BadOrientation('x')));
        assert_eq!(Interval::new(0, 2).to_string(), "I[1,3]");
    }
}
