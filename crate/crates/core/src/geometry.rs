//! Point clouds, metrics, sampled maps and the synthetic experiment generators.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::ffield::PrimeField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("point set is empty")]
    EmptySet,
    #[error("ambiguous lift at step {0}: displacement is exactly half a period")]
    AmbiguousLift(usize),
    #[error("path passes through the origin at step {0}")]
    ThroughOrigin(usize),
    #[error("domain has {domain} points but image has {image}")]
    SizeMismatch { domain: usize, image: usize },
    #[error("domain and image use different metrics")]
    MetricMismatch,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    /// Quotient of R^n by the lattice generated by `periods[i] · e_i`.
    FlatTorus { periods: Vec<f64> },
}

impl Metric {
    pub fn unit_torus(dim: usize) -> Metric {
        Metric::FlatTorus {
            periods: vec![1.0; dim],
        }
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> Result<f64, GeometryError> {
        if a.len() != b.len() {
            return Err(GeometryError::DimMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        if let Metric::FlatTorus { periods } = self {
            if periods.len() != a.len() {
                return Err(GeometryError::DimMismatch {
                    expected: periods.len(),
                    found: a.len(),
                });
            }
        }
        Ok(self.dist_unchecked(a, b))
    }

    // The lattice-shift minimum factorizes per coordinate, so the 3^n candidates
    // collapse to a 3-way minimum on each axis.
    pub(crate) fn dist_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::FlatTorus { periods } => a
                .iter()
                .zip(b)
                .zip(periods)
                .map(|((x, y), p)| {
                    let d = (x - y).abs();
                    let d = d.min((d - p).abs()).min((d + p).abs());
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    fn same_family(&self, other: &Metric) -> bool {
        matches!(
            (self, other),
            (Metric::Euclidean, Metric::Euclidean) | (Metric::FlatTorus { .. }, Metric::FlatTorus { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Vec<f64>>,
    metric: Metric,
}

impl PointCloud {
    /// Torus coordinates are wrapped into the fundamental domain.
    pub fn new(dim: usize, points: Vec<Vec<f64>>, metric: Metric) -> Result<Self, GeometryError> {
        if let Metric::FlatTorus { periods } = &metric {
            if periods.len() != dim {
                return Err(GeometryError::DimMismatch {
                    expected: dim,
                    found: periods.len(),
                });
            }
            if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(GeometryError::InvalidParam("torus periods must be positive".into()));
            }
        }
        let mut points = points;
        for p in &mut points {
            if p.len() != dim {
                return Err(GeometryError::DimMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if let Metric::FlatTorus { periods } = &metric {
                for (x, per) in p.iter_mut().zip(periods) {
                    *x = x.rem_euclid(*per);
                    if *x >= *per {
                        *x = 0.0;
                    }
                }
            }
        }
        Ok(PointCloud { dim, points, metric })
    }

    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let dim = points.first().map_or(0, Vec::len);
        Self::new(dim, points, Metric::Euclidean)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.dist_unchecked(&self.points[i], &self.points[j])
    }

    /// Collapses exactly coincident points. Returns the distinct points in order
    /// of first appearance and the map from old to new indices.
    pub fn dedup(&self) -> (PointCloud, Vec<usize>) {
        let mut distinct: Vec<Vec<f64>> = Vec::new();
        let mut index = std::collections::HashMap::new();
        let mut map = Vec::with_capacity(self.len());
        for p in &self.points {
            let key: Vec<u64> = p.iter().map(|x| (x + 0.0).to_bits()).collect();
            let id = *index.entry(key).or_insert_with(|| {
                distinct.push(p.clone());
                distinct.len() - 1
            });
            map.push(id);
        }
        let cloud = PointCloud {
            dim: self.dim,
            points: distinct,
            metric: self.metric.clone(),
        };
        (cloud, map)
    }
}

pub fn dist(a: &[f64], b: &[f64], metric: &Metric) -> Result<f64, GeometryError> {
    metric.dist(a, b)
}

/// `image[i] = f(domain[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMap {
    domain: PointCloud,
    image: PointCloud,
}

impl SampledMap {
    pub fn new(domain: PointCloud, image: PointCloud) -> Result<Self, GeometryError> {
        if domain.len() != image.len() {
            return Err(GeometryError::SizeMismatch {
                domain: domain.len(),
                image: image.len(),
            });
        }
        if !domain.metric.same_family(&image.metric) {
            return Err(GeometryError::MetricMismatch);
        }
        Ok(SampledMap { domain, image })
    }

    pub fn domain(&self) -> &PointCloud {
        &self.domain
    }

    pub fn image(&self) -> &PointCloud {
        &self.image
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// Max-metric distance between graph points `(s_i, f(s_i))` and `(s_j, f(s_j))`.
    pub fn graph_dist(&self, i: usize, j: usize) -> f64 {
        self.domain.dist(i, j).max(self.image.dist(i, j))
    }

    /// Smallest Rips radius at which some graph vertex is joined to every other,
    /// i.e. half of `min_i max_j graph_dist(i, j)`.
    pub fn graph_enclosing_radius(&self) -> f64 {
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| self.graph_dist(i, j)).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
            .min(f64::MAX)
            / 2.0
    }
}

fn directed_hausdorff(na: usize, nb: usize, d: impl Fn(usize, usize) -> f64) -> f64 {
    (0..na)
        .map(|i| (0..nb).map(|j| d(i, j)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>], metric: &Metric) -> Result<f64, GeometryError> {
    if a.is_empty() || b.is_empty() {
        return Err(GeometryError::EmptySet);
    }
    for p in a.iter().chain(b) {
        if p.len() != a[0].len() {
            return Err(GeometryError::DimMismatch {
                expected: a[0].len(),
                found: p.len(),
            });
        }
    }
    let d = |i: usize, j: usize| metric.dist_unchecked(&a[i], &b[j]);
    let fwd = directed_hausdorff(a.len(), b.len(), d);
    let bwd = directed_hausdorff(b.len(), a.len(), |j, i| d(i, j));
    Ok(fwd.max(bwd))
}

/// Hausdorff distance between `Gr(h)` and `Gr(h')` under the max metric.
pub fn graph_hausdorff(a: &SampledMap, b: &SampledMap) -> Result<f64, GeometryError> {
    if a.is_empty() || b.is_empty() {
        return Err(GeometryError::EmptySet);
    }
    if a.domain.dim != b.domain.dim || a.image.dim != b.image.dim {
        return Err(GeometryError::DimMismatch {
            expected: a.domain.dim,
            found: b.domain.dim,
        });
    }
    let d = |i: usize, j: usize| {
        let x = a.domain.metric.dist_unchecked(a.domain.point(i), b.domain.point(j));
        let y = a.image.metric.dist_unchecked(a.image.point(i), b.image.point(j));
        x.max(y)
    };
    let fwd = directed_hausdorff(a.len(), b.len(), d);
    let bwd = directed_hausdorff(b.len(), a.len(), |j, i| d(i, j));
    Ok(fwd.max(bwd))
}

/// `n` evenly spaced unit-circle points and their images under `z ↦ z^power`.
///
/// The image of sample `j` is sample `(power · j) mod n`, so images land exactly
/// on sample positions. Gaussian noise of standard deviation `sigma` is then added
/// independently to every coordinate, domain first, then image, from a ChaCha8
/// stream seeded with `seed`.
pub fn synth_circle_map(n: usize, power: i64, sigma: f64, seed: u64) -> Result<SampledMap, GeometryError> {
    if n < 3 {
        return Err(GeometryError::InvalidParam(format!("need at least 3 points, got {n}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(GeometryError::InvalidParam(format!("sigma must be >= 0, got {sigma}")));
    }
    let at = |k: i64| {
        let k = k.rem_euclid(n as i64);
        let t = 2.0 * PI * k as f64 / n as f64;
        vec![t.cos(), t.sin()]
    };
    let mut domain: Vec<Vec<f64>> = (0..n as i64).map(at).collect();
    let mut image: Vec<Vec<f64>> = (0..n as i64).map(|j| at(power * j)).collect();
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).expect("valid sigma");
        for p in domain.iter_mut().chain(image.iter_mut()) {
            for x in p.iter_mut() {
                *x += normal.sample(&mut rng);
            }
        }
    }
    SampledMap::new(PointCloud::euclidean(domain)?, PointCloud::euclidean(image)?)
}

/// The `grid × grid` lattice `(i/grid, j/grid)` on the unit torus and its image
/// under the linear map `matrix`, computed in exact integer arithmetic.
pub fn synth_torus_map(grid: usize, matrix: [[i64; 2]; 2]) -> Result<SampledMap, GeometryError> {
    if grid < 2 {
        return Err(GeometryError::InvalidParam(format!("grid must be >= 2, got {grid}")));
    }
    let g = grid as i64;
    let mut domain = Vec::with_capacity(grid * grid);
    let mut image = Vec::with_capacity(grid * grid);
    for i in 0..g {
        for j in 0..g {
            domain.push(vec![i as f64 / g as f64, j as f64 / g as f64]);
            let u = (matrix[0][0] * i + matrix[0][1] * j).rem_euclid(g);
            let v = (matrix[1][0] * i + matrix[1][1] * j).rem_euclid(g);
            image.push(vec![u as f64 / g as f64, v as f64 / g as f64]);
        }
    }
    let metric = Metric::unit_torus(2);
    SampledMap::new(
        PointCloud::new(2, domain, metric.clone())?,
        PointCloud::new(2, image, metric)?,
    )
}

fn minimal_displacement(a: f64, b: f64, period: f64, step: usize) -> Result<f64, GeometryError> {
    let d = (b - a).rem_euclid(period);
    let half = period / 2.0;
    if d == half {
        return Err(GeometryError::AmbiguousLift(step));
    }
    Ok(if d > half { d - period } else { d })
}

/// Winding of a closed vertex path on a flat torus, one integer per axis.
/// The path is closed implicitly if the last vertex differs from the first.
pub fn winding_vector(path: &[Vec<f64>], periods: &[f64]) -> Result<Vec<i64>, GeometryError> {
    let mut total = vec![0.0; periods.len()];
    let n = path.len();
    for (step, i) in (0..n).enumerate() {
        let (a, b) = (&path[i], &path[(i + 1) % n]);
        if a.len() != periods.len() || b.len() != periods.len() {
            return Err(GeometryError::DimMismatch {
                expected: periods.len(),
                found: a.len().min(b.len()),
            });
        }
        for (k, per) in periods.iter().enumerate() {
            total[k] += minimal_displacement(a[k], b[k], *per, step)?;
        }
    }
    Ok(total
        .iter()
        .zip(periods)
        .map(|(t, p)| (t / p).round() as i64)
        .collect())
}

/// Winding number about the origin of a closed planar path, by summing signed angles.
pub fn planar_winding(path: &[Vec<f64>]) -> Result<i64, GeometryError> {
    let n = path.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (&path[i], &path[(i + 1) % n]);
        if a.len() != 2 || b.len() != 2 {
            return Err(GeometryError::DimMismatch {
                expected: 2,
                found: a.len().min(b.len()),
            });
        }
        if a[0] == 0.0 && a[1] == 0.0 {
            return Err(GeometryError::ThroughOrigin(i));
        }
        let cross = a[0] * b[1] - a[1] * b[0];
        let dot = a[0] * b[0] + a[1] * b[1];
        if cross == 0.0 && dot < 0.0 {
            return Err(GeometryError::AmbiguousLift(i));
        }
        total += cross.atan2(dot);
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Signed crossings of the positive x-axis by the segment `a → b`.
/// Summed over a closed polygon this is its winding number about the origin.
pub fn ray_crossing(a: &[f64], b: &[f64]) -> i64 {
    let up = a[1] <= 0.0 && b[1] > 0.0;
    let down = b[1] <= 0.0 && a[1] > 0.0;
    if !(up || down) {
        return 0;
    }
    // x-coordinate where the segment meets y = 0, sign-tested without division
    let num = a[0] * (b[1] - a[1]) - a[1] * (b[0] - a[0]);
    let den = b[1] - a[1];
    let positive = if den > 0.0 { num > 0.0 } else { num < 0.0 };
    match (positive, up) {
        (false, _) => 0,
        (true, true) => 1,
        (true, false) => -1,
    }
}

/// Lattice-line crossings of the minimal lift of `a → b` on a flat torus, per axis.
pub fn torus_crossing(a: &[f64], b: &[f64], periods: &[f64]) -> Result<Vec<i64>, GeometryError> {
    a.iter()
        .zip(b)
        .zip(periods)
        .map(|((x, y), p)| {
            let d = minimal_displacement(*x, *y, *p, 0)?;
            Ok(((x + d) / p).floor() as i64)
        })
        .collect()
}

/// Winding of a 1-chain with coefficients in `field`, evaluated through integer
/// crossing cocycles mod p and lifted symmetrically. Edges are `(u, v, coeff)` with
/// orientation `u → v`. Euclidean clouds must be planar and give one entry.
pub fn chain_winding(
    cloud: &PointCloud,
    edges: &[(usize, usize, u32)],
    field: PrimeField,
) -> Result<Vec<i64>, GeometryError> {
    let width = match cloud.metric() {
        Metric::Euclidean if cloud.dim() == 2 => 1,
        Metric::Euclidean => {
            return Err(GeometryError::DimMismatch {
                expected: 2,
                found: cloud.dim(),
            })
        }
        Metric::FlatTorus { periods } => periods.len(),
    };
    let mut acc = vec![0u32; width];
    for &(u, v, c) in edges {
        let (a, b) = (cloud.point(u), cloud.point(v));
        let w = match cloud.metric() {
            Metric::Euclidean => vec![ray_crossing(a, b)],
            Metric::FlatTorus { periods } => torus_crossing(a, b, periods)?,
        };
        for (slot, k) in acc.iter_mut().zip(w) {
            *slot = field.mul_add(*slot, c, field.reduce(k));
        }
    }
    Ok(acc.into_iter().map(|v| field.lift_symmetric(v)).collect())
}

/// Point cloud CSV: one point per row.
pub fn parse_point_cloud_csv(text: &str, metric: Metric) -> Result<PointCloud, GeometryError> {
    let rows = parse_rows(text)?;
    let dim = rows.first().map_or(0, Vec::len);
    PointCloud::new(dim, rows, metric)
}

/// Sampled map CSV: `2n` columns, domain coordinates then image coordinates.
pub fn parse_sampled_map_csv(text: &str, metric: Metric) -> Result<SampledMap, GeometryError> {
    let rows = parse_rows(text)?;
    let Some(first) = rows.first() else {
        return Err(GeometryError::EmptySet);
    };
    if first.len() % 2 != 0 {
        return Err(GeometryError::Parse {
            line: 1,
            msg: format!("expected an even number of columns, found {}", first.len()),
        });
    }
    let n = first.len() / 2;
    let (domain, image) = rows.into_iter().map(|r| (r[..n].to_vec(), r[n..].to_vec())).unzip();
    SampledMap::new(
        PointCloud::new(n, domain, metric.clone())?,
        PointCloud::new(n, image, metric)?,
    )
}

fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>, GeometryError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| GeometryError::Parse {
                    line: idx + 1,
                    msg: format!("{:?}: {e}", f.trim()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(GeometryError::Parse {
                    line: idx + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn join(p: &[f64]) -> String {
    p.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

pub fn point_cloud_to_csv(cloud: &PointCloud) -> String {
    cloud.points.iter().map(|p| join(p) + "\n").collect()
}

pub fn sampled_map_to_csv(map: &SampledMap) -> String {
    (0..map.len())
        .map(|i| format!("{},{}\n", join(map.domain.point(i)), join(map.image.point(i))))
        .collect()
}
