//! Filtered simplicial complexes: Vietoris–Rips and the graph complex of a sampled map.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{PointCloud, SampledMap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComplexError {
    #[error("index mismatch: {0}")]
    IndexMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A simplex is its strictly increasing vertex list.
pub type Simplex = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub enum FiltrationViolation {
    MissingFace { simplex: Simplex, face: Simplex },
    FaceBornLater { simplex: Simplex, face: Simplex },
    OutOfOrder { position: usize },
    Unsorted { simplex: Simplex },
}

/// Simplices sorted by `(birth, dimension, lexicographic)`.
#[derive(Debug, Clone)]
pub struct FilteredComplex {
    simplices: Vec<Simplex>,
    births: Vec<f64>,
    max_dim: usize,
    n_vertices: usize,
    index: HashMap<Simplex, usize>,
}

fn filtration_cmp(a: (&Simplex, f64), b: (&Simplex, f64)) -> Ordering {
    a.1.total_cmp(&b.1)
        .then(a.0.len().cmp(&b.0.len()))
        .then_with(|| a.0.cmp(b.0))
}

impl FilteredComplex {
    /// Sorts into filtration order; does not check closure (see [`validate_filtration`]).
    pub fn from_simplices(list: Vec<(Simplex, f64)>) -> Self {
        let mut list: Vec<(Simplex, f64)> = list
            .into_iter()
            .map(|(mut s, b)| {
                s.sort_unstable();
                (s, b)
            })
            .collect();
        list.sort_by(|a, b| filtration_cmp((&a.0, a.1), (&b.0, b.1)));
        let max_dim = list.iter().map(|(s, _)| s.len().saturating_sub(1)).max().unwrap_or(0);
        let n_vertices = list
            .iter()
            .flat_map(|(s, _)| s.iter())
            .max()
            .map_or(0, |v| v + 1);
        let (simplices, births): (Vec<_>, Vec<_>) = list.into_iter().unzip();
        let index = simplices.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        FilteredComplex {
            simplices,
            births,
            max_dim,
            n_vertices,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn simplex(&self, i: usize) -> &Simplex {
        &self.simplices[i]
    }

    pub fn birth(&self, i: usize) -> f64 {
        self.births[i]
    }

    pub fn simplices(&self) -> impl Iterator<Item = (&Simplex, f64)> {
        self.simplices.iter().zip(self.births.iter().copied())
    }

    pub fn index_of(&self, s: &[usize]) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn dim_of(&self, i: usize) -> usize {
        self.simplices[i].len() - 1
    }

    /// Number of simplices in the sublevel complex at radius `r` (a prefix).
    pub fn sublevel_len(&self, r: f64) -> usize {
        self.births.partition_point(|&b| b <= r)
    }

    pub fn max_birth(&self) -> f64 {
        self.births.last().copied().unwrap_or(0.0)
    }

    /// Global indices of the `d`-simplices, in filtration order.
    pub fn indices_of_dim(&self, d: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.simplices[i].len() == d + 1).collect()
    }

    /// Some vertex `v` such that `σ ∪ {v}` is present for every `k`-simplex `σ`
    /// avoiding `v`. Then the complex has no homology in degree `k ≥ 1`.
    pub fn cone_apex(&self, k: usize) -> Option<usize> {
        if k + 1 > self.max_dim {
            return None;
        }
        let ks = self.indices_of_dim(k);
        (0..self.n_vertices).find(|&v| {
            self.index.contains_key(&vec![v])
                && ks.iter().all(|&i| {
                    let s = &self.simplices[i];
                    if s.contains(&v) {
                        return true;
                    }
                    let mut t = s.clone();
                    let pos = t.partition_point(|&x| x < v);
                    t.insert(pos, v);
                    self.index.contains_key(&t)
                })
        })
    }

    /// One simplex per line, `birth;v1,v2,...`.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        for (s, b) in self.simplices() {
            let vs: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{b};{}", vs.join(","));
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self, ComplexError> {
        let mut list = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ComplexError::Parse { line: idx + 1, msg };
            let (b, vs) = line.split_once(';').ok_or_else(|| err("missing ';'".into()))?;
            let birth: f64 = b.trim().parse().map_err(|e| err(format!("birth: {e}")))?;
            let simplex = vs
                .split(',')
                .map(|v| v.trim().parse::<usize>().map_err(|e| err(format!("vertex: {e}"))))
                .collect::<Result<Simplex, _>>()?;
            list.push((simplex, birth));
        }
        Ok(Self::from_simplices(list))
    }
}

/// Rips complex of an abstract distance, births `max pairwise distance / 2`.
pub fn rips_by(
    n: usize,
    dist: impl Fn(usize, usize) -> f64,
    max_dim: usize,
    max_radius: f64,
) -> FilteredComplex {
    let mut list: Vec<(Simplex, f64)> = (0..n).map(|v| (vec![v], 0.0)).collect();
    if max_dim >= 1 {
        let mut up: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let r = dist(i, j) / 2.0;
                if r <= max_radius {
                    up[i].push((j, r));
                }
            }
        }
        let lookup: Vec<HashMap<usize, f64>> = up.iter().map(|l| l.iter().copied().collect()).collect();
        // depth-first clique extension through higher-indexed common neighbours
        let mut stack: Vec<(Simplex, f64, Vec<usize>)> = Vec::new();
        for i in 0..n {
            for &(j, r) in &up[i] {
                let cands: Vec<usize> = up[j]
                    .iter()
                    .map(|&(w, _)| w)
                    .filter(|w| lookup[i].contains_key(w))
                    .collect();
                stack.push((vec![i, j], r, cands));
            }
        }
        while let Some((s, r, cands)) = stack.pop() {
            if s.len() <= max_dim {
                for (pos, &w) in cands.iter().enumerate() {
                    let b = s.iter().fold(r, |acc, &v| {
                        let d = if v < w { lookup[v][&w] } else { lookup[w][&v] };
                        acc.max(d)
                    });
                    let rest: Vec<usize> = cands[pos + 1..]
                        .iter()
                        .copied()
                        .filter(|x| lookup[w].contains_key(x))
                        .collect();
                    let mut t = s.clone();
                    t.push(w);
                    stack.push((t, b, rest));
                }
            }
            list.push((s, r));
        }
    }
    let mut fc = FilteredComplex::from_simplices(list);
    fc.max_dim = max_dim;
    fc.n_vertices = n;
    fc
}

pub fn vietoris_rips(cloud: &PointCloud, max_dim: usize, max_radius: f64) -> FilteredComplex {
    rips_by(cloud.len(), |i, j| cloud.dist(i, j), max_dim, max_radius)
}

/// The graph complex on vertices `0..n` of `Gr(f↾S)`: a simplex is present when
/// it lies in `c` and its vertex-set image (through `image_map`) lies in `d`; its
/// birth is the larger of the two births.
pub fn graph_complex(
    c: &FilteredComplex,
    d: &FilteredComplex,
    image_map: &[usize],
) -> Result<FilteredComplex, ComplexError> {
    if image_map.len() != c.n_vertices() {
        return Err(ComplexError::IndexMismatch(format!(
            "domain complex has {} vertices but the vertex map has {}",
            c.n_vertices(),
            image_map.len()
        )));
    }
    if let Some(&bad) = image_map.iter().find(|&&v| v >= d.n_vertices()) {
        return Err(ComplexError::IndexMismatch(format!(
            "image vertex {bad} outside image complex of {} vertices",
            d.n_vertices()
        )));
    }
    let mut list = Vec::new();
    for (s, b) in c.simplices() {
        let img = image_simplex(s, image_map);
        if let Some(k) = d.index_of(&img) {
            list.push((s.clone(), b.max(d.birth(k))));
        }
    }
    let mut fc = FilteredComplex::from_simplices(list);
    fc.max_dim = c.max_dim;
    fc.n_vertices = c.n_vertices;
    Ok(fc)
}

/// Sorted, deduplicated image of a vertex set.
pub fn image_simplex(s: &[usize], map: &[usize]) -> Simplex {
    let mut img: Simplex = s.iter().map(|&v| map[v]).collect();
    img.sort_unstable();
    img.dedup();
    img
}

/// The three filtrations of a sampled map. `image_map` sends sample `i` to its
/// vertex in the image complex, which is built on the distinct image points.
#[derive(Debug, Clone)]
pub struct MapComplexes {
    pub domain: FilteredComplex,
    pub graph: FilteredComplex,
    pub image: FilteredComplex,
    pub image_map: Vec<usize>,
}

pub fn map_complexes(m: &SampledMap, max_dim: usize, max_radius: f64) -> MapComplexes {
    let (distinct, image_map) = m.image().dedup();
    let domain = vietoris_rips(m.domain(), max_dim, max_radius);
    let image = vietoris_rips(&distinct, max_dim, max_radius);
    let graph = graph_complex(&domain, &image, &image_map).expect("aligned by construction");
    MapComplexes {
        domain,
        graph,
        image,
        image_map,
    }
}

pub fn validate_filtration(fc: &FilteredComplex) -> Result<(), Vec<FiltrationViolation>> {
    let mut out = Vec::new();
    for i in 1..fc.len() {
        let prev = (&fc.simplices[i - 1], fc.births[i - 1]);
        let cur = (&fc.simplices[i], fc.births[i]);
        if filtration_cmp(prev, cur) != Ordering::Less {
            out.push(FiltrationViolation::OutOfOrder { position: i });
        }
    }
    for (s, b) in fc.simplices() {
        if s.windows(2).any(|w| w[0] >= w[1]) {
            out.push(FiltrationViolation::Unsorted { simplex: s.clone() });
            continue;
        }
        if s.len() < 2 {
            continue;
        }
        for skip in 0..s.len() {
            let face: Simplex = s
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != skip)
                .map(|(_, &v)| v)
                .collect();
            match fc.index_of(&face) {
                None => out.push(FiltrationViolation::MissingFace {
                    simplex: s.clone(),
                    face,
                }),
                Some(k) if fc.births[k] > b => out.push(FiltrationViolation::FaceBornLater {
                    simplex: s.clone(),
                    face,
                }),
                Some(_) => {}
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Sorted distinct birth values.
pub fn critical_radii(fc: &FilteredComplex) -> Vec<f64> {
    let mut r = fc.births.clone();
    r.dedup();
    r
}
