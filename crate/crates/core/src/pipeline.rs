//! From a sampled map to the persistence of its I[1,3] part: three filtrations,
//! one A₃ triple per radius, the restricted forward module and its diagram, with
//! generator cycles. Also the row-by-row pipeline for chains of maps and the
//! reconstruction of an induced map on H₁ from generator windings.

use std::collections::HashMap;
use std::sync::Arc;
use std::thread;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::complexes::{graph_complex, map_complexes, vietoris_rips, FilteredComplex};
use crate::diagram_io::PersistenceDiagram;
use crate::ffield::PrimeField;
use crate::geometry::{chain_winding, GeometryError, PointCloud, SampledMap};
use crate::homology::{chain_axpy, projection_induced, push_forward, Chain, HomologyBasis, HomologyError, Persistence};
use crate::linalg::{FieldMatrix, LinalgError};
use crate::quiver::{
    decompose_an, diagonal_block, extract_i13, restrict_block, A3Triple, AnRepresentation, Arrow, I13Extraction,
    Interval, IntervalDecomposition, QuiverError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("maps {0} and {1} do not compose: {2}")]
    ChainMismatch(usize, usize, String),
    #[error("domain windings do not span")]
    DegenerateSpan,
    #[error("windings are not related by a single linear map")]
    InconsistentWindings,
    #[error("entry {0} has no small rational lift")]
    NoRationalLift(u32),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl PipelineError {
    /// Whether the error reports a failed internal check rather than bad input.
    pub fn is_certificate_failure(&self) -> bool {
        matches!(self, PipelineError::Quiver(QuiverError::CertificateFailure(_)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub field: PrimeField,
    pub degree: usize,
    /// Top simplex dimension; `degree + 1` when unset.
    pub max_dim: Option<usize>,
    /// Largest filtration radius; the graph's enclosing radius when unset.
    pub max_radius: Option<f64>,
    /// Randomizes every basis choice; the diagram must not depend on it.
    pub shuffle_seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            field: PrimeField::default(),
            degree: 1,
            max_dim: None,
            max_radius: None,
            shuffle_seed: None,
        }
    }
}

impl PipelineConfig {
    pub fn max_dim(&self) -> usize {
        self.max_dim.unwrap_or(self.degree + 1)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.max_dim() < self.degree + 1 {
            return Err(PipelineError::Config(format!(
                "max_dim {} must be at least degree + 1 = {}",
                self.max_dim(),
                self.degree + 1
            )));
        }
        if let Some(r) = self.max_radius {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(PipelineError::Config(format!("max_radius {r} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// A representation `V_0 → V_1 → …` with `V_i` living over `[radii[i], radii[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardModule {
    pub field: PrimeField,
    pub radii: Vec<f64>,
    pub dims: Vec<usize>,
    pub transitions: Vec<FieldMatrix>,
}

impl ForwardModule {
    pub fn representation(&self) -> Result<AnRepresentation, QuiverError> {
        if self.radii.is_empty() {
            return AnRepresentation::new(self.field, vec![], vec![0], vec![]);
        }
        AnRepresentation::new(
            self.field,
            vec![Arrow::Forward; self.radii.len() - 1],
            self.dims.clone(),
            self.transitions.clone(),
        )
    }

    pub fn decompose(&self) -> Result<IntervalDecomposition, QuiverError> {
        decompose_an(&self.representation()?)
    }

    /// `(birth, death)` radii of a summand; a summand reaching the last radius never dies.
    pub fn bar(&self, iv: Interval) -> (f64, f64) {
        let death = self.radii.get(iv.end + 1).copied().unwrap_or(f64::INFINITY);
        (self.radii[iv.start], death)
    }

    pub fn diagram(&self, degree: usize, cap: Option<f64>) -> Result<PersistenceDiagram, QuiverError> {
        let dec = self.decompose()?;
        Ok(PersistenceDiagram::from_intervals(
            degree,
            self.field.modulus(),
            cap,
            dec.summands.iter().map(|&iv| self.bar(iv)),
        ))
    }
}

/// Everything computed at one radius of the grid.
#[derive(Debug, Clone)]
pub struct RadiusSlice {
    pub radius: f64,
    pub domain: HomologyBasis,
    pub graph: HomologyBasis,
    pub image: HomologyBasis,
    /// `(p*, q*)` in the working bases (randomized when shuffling).
    pub triple: A3Triple,
    pub extraction: I13Extraction,
    /// Working basis of `H(G_r)` in the coordinates of `graph`.
    pub graph_change: FieldMatrix,
}

impl RadiusSlice {
    /// Columns are the I[1,3] vectors of the middle space, in `graph` coordinates.
    pub fn i13_frame(&self) -> FieldMatrix {
        let full = self.graph_change.matmul(&self.extraction.middle).expect("shapes agree");
        full.submatrix(0..full.rows(), self.extraction.i13_columns())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPair {
    pub birth: f64,
    pub death: f64,
    pub graph_cycle: Chain,
    pub domain_cycle: Chain,
    pub image_cycle: Chain,
}

#[derive(Debug, Clone)]
pub struct SampledMapModule {
    pub config: PipelineConfig,
    pub max_radius: f64,
    pub module: ForwardModule,
    pub slices: Vec<RadiusSlice>,
    pub domain: Persistence,
    pub graph: Persistence,
    pub image: Persistence,
    /// Sample index to vertex of the image complex.
    pub image_map: Vec<usize>,
    pub domain_cloud: PointCloud,
    /// Distinct image points, the vertices of the image complex.
    pub image_cloud: PointCloud,
}

/// Union of the event radii of the given persistences.
fn radius_grid<'a>(pers: impl IntoIterator<Item = &'a Persistence>) -> Vec<f64> {
    let mut radii: Vec<f64> = pers.into_iter().flat_map(Persistence::event_radii).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii
}

fn compute_all(complexes: Vec<FilteredComplex>, degree: usize, field: PrimeField) -> Vec<Persistence> {
    thread::scope(|s| {
        let handles: Vec<_> = complexes
            .into_iter()
            .map(|fc| s.spawn(move || Persistence::compute(Arc::new(fc), degree, field)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("reduction thread")).collect()
    })
}

fn combine(field: PrimeField, coords: &[u32], reps: &[Chain]) -> Chain {
    coords
        .iter()
        .zip(reps)
        .filter(|(&c, _)| c != 0)
        .fold(Vec::new(), |acc, (&c, z)| chain_axpy(field, &acc, c, z))
}

/// Oriented edges `(u, v, coeff)` of a 1-chain.
pub fn chain_edges(fc: &FilteredComplex, z: &[(usize, u32)]) -> Vec<(usize, usize, u32)> {
    z.iter()
        .filter(|(i, _)| fc.dim_of(*i) == 1)
        .map(|&(i, c)| {
            let s = fc.simplex(i);
            (s[0], s[1], c)
        })
        .collect()
}

pub fn build_module(m: &SampledMap, cfg: &PipelineConfig) -> Result<SampledMapModule, PipelineError> {
    cfg.validate()?;
    let field = cfg.field;
    let max_radius = cfg.max_radius.unwrap_or_else(|| m.graph_enclosing_radius());
    let mc = map_complexes(m, cfg.max_dim(), max_radius);
    let image_map = mc.image_map.clone();
    let mut pers = compute_all(vec![mc.domain, mc.graph, mc.image], cfg.degree, field).into_iter();
    let (pc, pg, pd) = (pers.next().unwrap(), pers.next().unwrap(), pers.next().unwrap());
    let radii = radius_grid([&pc, &pg, &pd]);

    let identity: Vec<usize> = (0..m.len()).collect();
    let mut rng = cfg.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let mut slices = Vec::with_capacity(radii.len());
    for &r in &radii {
        let (bc, bg, bd) = (pc.basis_at(r), pg.basis_at(r), pd.basis_at(r));
        let mut p = projection_induced(&pg, &pc, &identity, &bg, &bc)?;
        let mut q = projection_induced(&pg, &pd, &image_map, &bg, &bd)?;
        let mut graph_change = FieldMatrix::identity(field, bg.dim());
        if let Some(rng) = rng.as_mut() {
            let sc = FieldMatrix::random_invertible(field, bc.dim(), rng);
            let sd = FieldMatrix::random_invertible(field, bd.dim(), rng);
            graph_change = FieldMatrix::random_invertible(field, bg.dim(), rng);
            p = sc.inverse()?.matmul(&p)?.matmul(&graph_change)?;
            q = sd.inverse()?.matmul(&q)?.matmul(&graph_change)?;
        }
        let triple = A3Triple::new(p, q)?;
        let extraction = extract_i13(&triple)?;
        slices.push(RadiusSlice {
            radius: r,
            domain: bc,
            graph: bg,
            image: bd,
            triple,
            extraction,
            graph_change,
        });
    }

    let mut transitions = Vec::with_capacity(radii.len().saturating_sub(1));
    for w in slices.windows(2) {
        let j = pg.inclusion_induced(&w[0].graph, &w[1].graph)?;
        let j = w[1].graph_change.inverse()?.matmul(&j)?.matmul(&w[0].graph_change)?;
        transitions.push(restrict_block(&j, &w[0].extraction, &w[1].extraction)?);
    }
    let module = ForwardModule {
        field,
        dims: slices.iter().map(|s| s.extraction.r3).collect(),
        radii,
        transitions,
    };
    let (image_cloud, _) = m.image().dedup();
    Ok(SampledMapModule {
        config: cfg.clone(),
        max_radius,
        module,
        slices,
        domain: pc,
        graph: pg,
        image: pd,
        image_map,
        domain_cloud: m.domain().clone(),
        image_cloud,
    })
}

pub fn module_diagram(m: &SampledMapModule) -> Result<PersistenceDiagram, PipelineError> {
    Ok(m.module.diagram(m.config.degree, Some(m.max_radius))?)
}

impl SampledMapModule {
    /// One generator per summand, using the cycle at the birth radius.
    pub fn generators(&self) -> Result<Vec<GeneratorPair>, PipelineError> {
        let dec = self.module.decompose()?;
        let f = self.config.field;
        let identity: Vec<usize> = (0..self.domain_cloud.len()).collect();
        let mut out = Vec::with_capacity(dec.summands.len());
        for (idx, &iv) in dec.summands.iter().enumerate() {
            let s = iv.start;
            let pos = dec.summands_at(s).iter().position(|&x| x == idx).expect("summand alive at its start");
            let local = dec.bases[s].column(pos);
            let slice = &self.slices[s];
            let coords = slice.i13_frame().mul_vec(&local)?;
            let graph_cycle = combine(f, &coords, &slice.graph.representatives);
            let domain_cycle = push_forward(&graph_cycle, self.graph.complex(), self.domain.complex(), &identity, f)?;
            let image_cycle = push_forward(&graph_cycle, self.graph.complex(), self.image.complex(), &self.image_map, f)?;
            let (birth, death) = self.module.bar(iv);
            out.push(GeneratorPair {
                birth,
                death,
                graph_cycle,
                domain_cycle,
                image_cycle,
            });
        }
        Ok(out)
    }

    /// Generators of the summands with the given bar.
    pub fn extract_generators(&self, birth: f64, death: f64) -> Result<Vec<GeneratorPair>, PipelineError> {
        Ok(self
            .generators()?
            .into_iter()
            .filter(|g| g.birth == birth && g.death == death)
            .collect())
    }

    /// Windings of the domain and image cycles of a degree-1 generator.
    pub fn windings(&self, g: &GeneratorPair) -> Result<(Vec<i64>, Vec<i64>), PipelineError> {
        let f = self.config.field;
        let dom = chain_winding(&self.domain_cloud, &chain_edges(self.domain.complex(), &g.domain_cycle), f)?;
        let img = chain_winding(&self.image_cloud, &chain_edges(self.image.complex(), &g.image_cycle), f)?;
        Ok((dom, img))
    }
}

/// The unique matrix `M` over ℚ with `M · d = e` for every `(d, e)` winding pair,
/// solved over the field and lifted by rational reconstruction.
pub fn induced_h1_matrix(pairs: &[(Vec<i64>, Vec<i64>)], field: PrimeField) -> Result<Vec<Vec<Ratio<i64>>>, PipelineError> {
    let Some((d0, e0)) = pairs.first() else {
        return Err(PipelineError::DegenerateSpan);
    };
    let (n, m) = (d0.len(), e0.len());
    if pairs.iter().any(|(d, e)| d.len() != n || e.len() != m) {
        return Err(PipelineError::Config("winding vectors of unequal length".into()));
    }
    let col = |v: &[i64]| v.iter().map(|&x| field.reduce(x)).collect::<Vec<u32>>();
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..pairs.len() {
        let mut trial: Vec<Vec<u32>> = chosen.iter().map(|&j| col(&pairs[j].0)).collect();
        trial.push(col(&pairs[i].0));
        if FieldMatrix::from_columns(field, n, &trial).rank() == trial.len() {
            chosen.push(i);
        }
        if chosen.len() == n {
            break;
        }
    }
    if chosen.len() < n {
        return Err(PipelineError::DegenerateSpan);
    }
    let dmat = FieldMatrix::from_columns(field, n, &chosen.iter().map(|&j| col(&pairs[j].0)).collect::<Vec<_>>());
    let emat = FieldMatrix::from_columns(field, m, &chosen.iter().map(|&j| col(&pairs[j].1)).collect::<Vec<_>>());
    let mat = emat.matmul(&dmat.inverse()?)?;
    for (d, e) in pairs {
        if mat.mul_vec(&col(d))? != col(e) {
            return Err(PipelineError::InconsistentWindings);
        }
    }
    (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = mat.get(i, j);
                    field
                        .rational_reconstruct(v)
                        .map(|(a, b)| Ratio::new(a, b))
                        .ok_or(PipelineError::NoRationalLift(v))
                })
                .collect()
        })
        .collect()
}

/// Per-radius data of a chain of maps: the decomposed row at that radius.
#[derive(Debug, Clone)]
pub struct RowSlice {
    pub radius: f64,
    /// One basis per row vertex, `C¹, G¹, C², …, Cᵀ`.
    pub bases: Vec<HomologyBasis>,
    pub decomposition: IntervalDecomposition,
}

#[derive(Debug, Clone)]
pub struct TimeseriesModule {
    pub config: PipelineConfig,
    pub max_radius: f64,
    /// The diagonal block chosen, in row-vertex indices.
    pub block: Interval,
    pub module: ForwardModule,
    pub rows: Vec<RowSlice>,
    /// Persistence of every row vertex.
    pub persistence: Vec<Persistence>,
    /// Point clouds of the `C` vertices, in order.
    pub clouds: Vec<PointCloud>,
}

fn bit_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|x| (x + 0.0).to_bits()).collect()
}

/// Row-wise pipeline for `S₁ → S₂ → … → S_T`: every row
/// `C¹ ← G¹ → C² ← … → Cᵀ` is decomposed, the vertical inclusions are restricted
/// to the diagonal block of `block` (the full row when `None`), and the resulting
/// forward module is returned.
pub fn timeseries_module(
    maps: &[SampledMap],
    cfg: &PipelineConfig,
    block: Option<Interval>,
) -> Result<TimeseriesModule, PipelineError> {
    cfg.validate()?;
    if maps.is_empty() {
        return Err(PipelineError::Config("at least one map is required".into()));
    }
    let field = cfg.field;
    let t_count = maps.len() + 1;
    let n_vertices = 2 * t_count - 1;
    let block = block.unwrap_or(Interval::new(0, n_vertices - 1));
    if block.end >= n_vertices {
        return Err(PipelineError::Config(format!(
            "block {block} outside a row of {n_vertices} vertices"
        )));
    }

    // clouds C¹..Cᵀ and the vertex maps G^t → C^{t+1}
    let mut clouds: Vec<PointCloud> = maps.iter().map(|m| m.domain().clone()).collect();
    let mut forward_maps: Vec<Vec<usize>> = Vec::with_capacity(maps.len());
    for t in 0..maps.len() - 1 {
        let next: HashMap<Vec<u64>, usize> = maps[t + 1]
            .domain()
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| (bit_key(p), i))
            .collect();
        let vm = maps[t]
            .image()
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                next.get(&bit_key(p))
                    .copied()
                    .ok_or_else(|| PipelineError::ChainMismatch(t, t + 1, format!("image of sample {i} is not a domain point")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        forward_maps.push(vm);
    }
    let (last_cloud, last_map) = maps[maps.len() - 1].image().dedup();
    clouds.push(last_cloud);
    forward_maps.push(last_map);

    let max_radius = cfg.max_radius.unwrap_or_else(|| {
        maps.iter().map(SampledMap::graph_enclosing_radius).fold(0.0, f64::max)
    });
    let c_complexes: Vec<FilteredComplex> = thread::scope(|s| {
        let handles: Vec<_> = clouds
            .iter()
            .map(|c| s.spawn(move || vietoris_rips(c, cfg.max_dim(), max_radius)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("complex thread")).collect()
    });
    let mut row: Vec<FilteredComplex> = Vec::with_capacity(n_vertices);
    for t in 0..maps.len() {
        row.push(c_complexes[t].clone());
        row.push(
            graph_complex(&c_complexes[t], &c_complexes[t + 1], &forward_maps[t])
                .map_err(|e| PipelineError::ChainMismatch(t, t + 1, e.to_string()))?,
        );
    }
    row.push(c_complexes[maps.len()].clone());
    let persistence = compute_all(row, cfg.degree, field);
    let radii = radius_grid(&persistence);

    let orientation: Vec<Arrow> = (0..n_vertices - 1)
        .map(|k| if k % 2 == 0 { Arrow::Backward } else { Arrow::Forward })
        .collect();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in &radii {
        let bases: Vec<HomologyBasis> = persistence.iter().map(|p| p.basis_at(r)).collect();
        let mut arrows = Vec::with_capacity(n_vertices - 1);
        for t in 0..maps.len() {
            let g = 2 * t + 1;
            let identity: Vec<usize> = (0..clouds[t].len()).collect();
            arrows.push(projection_induced(&persistence[g], &persistence[g - 1], &identity, &bases[g], &bases[g - 1])?);
            arrows.push(projection_induced(
                &persistence[g],
                &persistence[g + 1],
                &forward_maps[t],
                &bases[g],
                &bases[g + 1],
            )?);
        }
        let dims = bases.iter().map(HomologyBasis::dim).collect();
        let rep = AnRepresentation::new(field, orientation.clone(), dims, arrows)?;
        let decomposition = decompose_an(&rep)?;
        rows.push(RowSlice {
            radius: r,
            bases,
            decomposition,
        });
    }

    let mut transitions = Vec::with_capacity(rows.len().saturating_sub(1));
    for w in rows.windows(2) {
        let g: Vec<FieldMatrix> = persistence
            .iter()
            .enumerate()
            .map(|(v, p)| p.inclusion_induced(&w[0].bases[v], &w[1].bases[v]))
            .collect::<Result<_, _>>()?;
        transitions.push(diagonal_block(&g, &w[0].decomposition, &w[1].decomposition, block)?);
    }
    let module = ForwardModule {
        field,
        dims: rows.iter().map(|r| r.decomposition.multiplicity(block)).collect(),
        radii,
        transitions,
    };
    Ok(TimeseriesModule {
        config: cfg.clone(),
        max_radius,
        block,
        module,
        rows,
        persistence,
        clouds,
    })
}

impl TimeseriesModule {
    pub fn diagram(&self) -> Result<PersistenceDiagram, PipelineError> {
        Ok(self.module.diagram(self.config.degree, Some(self.max_radius))?)
    }

    /// For each summand of the forward module, its cycle at every row vertex of
    /// the block, taken at the birth radius.
    pub fn generator_cycles(&self) -> Result<Vec<(f64, f64, Vec<Chain>)>, PipelineError> {
        let dec = self.module.decompose()?;
        let f = self.config.field;
        let mut out = Vec::new();
        for (idx, &iv) in dec.summands.iter().enumerate() {
            let s = iv.start;
            let pos = dec.summands_at(s).iter().position(|&x| x == idx).expect("summand alive at its start");
            let local = dec.bases[s].column(pos);
            let row = &self.rows[s];
            let mut cycles = Vec::new();
            for v in self.block.start..=self.block.end {
                let cols = row.decomposition.columns_of(v, self.block);
                let basis = &row.decomposition.bases[v];
                let frame = basis.select(&(0..basis.rows()).collect::<Vec<_>>(), &cols);
                let coords = frame.mul_vec(&local)?;
                cycles.push(combine(f, &coords, &row.bases[v].representatives));
            }
            let (birth, death) = self.module.bar(iv);
            out.push((birth, death, cycles));
        }
        Ok(out)
    }

    /// Winding of a degree-1 cycle sitting at row vertex `v`, which must be a `C` vertex.
    pub fn winding_at(&self, v: usize, z: &[(usize, u32)]) -> Result<Vec<i64>, PipelineError> {
        if v % 2 == 1 {
            return Err(PipelineError::Config(format!("row vertex {v} is a graph vertex")));
        }
        let fc = self.persistence[v].complex();
        Ok(chain_winding(&self.clouds[v / 2], &chain_edges(fc, z), self.config.field)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram_io::bottleneck;
    use crate::geometry::{synth_circle_map, synth_torus_map};

    fn circle(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()
    }

    fn identity_map(points: Vec<Vec<f64>>) -> SampledMap {
        let c = PointCloud::euclidean(points).unwrap();
        SampledMap::new(c.clone(), c).unwrap()
    }

    fn plain_diagram(cloud: &PointCloud, degree: usize, max_radius: f64) -> PersistenceDiagram {
        let fc = vietoris_rips(cloud, degree + 1, max_radius);
        let p = Persistence::compute(Arc::new(fc), degree, PrimeField::default());
        PersistenceDiagram::from_intervals(degree, 1009, Some(max_radius), p.intervals())
    }

    #[test]
    fn identity_map_gives_plain_persistence() {
        for pts in [circle(4), circle(12)] {
            let m = identity_map(pts);
            for degree in [0, 1] {
                let cfg = PipelineConfig {
                    degree,
                    ..Default::default()
                };
                let module = build_module(&m, &cfg).unwrap();
                let d = module_diagram(&module).unwrap();
                assert_eq!(d, plain_diagram(m.domain(), degree, module.max_radius));
            }
        }
        let m = identity_map(circle(4));
        let module = build_module(&m, &PipelineConfig::default()).unwrap();
        for s in &module.slices {
            assert_eq!(s.extraction.r3, s.graph.dim());
        }
    }

    #[test]
    fn constant_map_has_no_i13_part() {
        let dom = PointCloud::euclidean(circle(10)).unwrap();
        let img = PointCloud::euclidean(vec![vec![3.0, 3.0]; 10]).unwrap();
        let module = build_module(&SampledMap::new(dom, img).unwrap(), &PipelineConfig::default()).unwrap();
        assert!(module.module.dims.iter().all(|&d| d == 0));
        assert_eq!(module_diagram(&module).unwrap().total_multiplicity(), 0);
    }

    #[test]
    fn empty_module_has_empty_diagram() {
        let m = ForwardModule {
            field: PrimeField::default(),
            radii: vec![],
            dims: vec![],
            transitions: vec![],
        };
        assert!(m.diagram(1, None).unwrap().points.is_empty());
    }

    #[test]
    fn z_squared_has_one_point_with_winding_ratio_two() {
        let m = synth_circle_map(40, 2, 0.0, 0).unwrap();
        let module = build_module(&m, &PipelineConfig::default()).unwrap();
        let d = module_diagram(&module).unwrap();
        assert_eq!(d.total_multiplicity(), 1, "{d:?}");
        let gens = module.generators().unwrap();
        let (dom, img) = module.windings(&gens[0]).unwrap();
        assert_eq!(dom[0].abs(), 1);
        assert_eq!(img[0], 2 * dom[0]);
        for s in &module.slices {
            let bound = s.domain.dim().min(s.graph.dim()).min(s.image.dim());
            assert!(s.extraction.r3 <= bound);
        }
    }

    #[test]
    fn diagram_does_not_depend_on_basis_choices() {
        let m = synth_circle_map(30, 2, 0.1, 4).unwrap();
        let base = module_diagram(&build_module(&m, &PipelineConfig::default()).unwrap()).unwrap();
        for seed in 0..3 {
            let cfg = PipelineConfig {
                shuffle_seed: Some(seed),
                ..Default::default()
            };
            let shuffled = build_module(&m, &cfg).unwrap();
            assert_eq!(module_diagram(&shuffled).unwrap(), base);
            let gens = shuffled.generators().unwrap();
            let (dom, img) = shuffled.windings(&gens[0]).unwrap();
            let f = PrimeField::default();
            // the class is defined up to a scalar; the ratio is not
            assert_eq!(f.reduce(img[0]), f.mul(2, f.reduce(dom[0])));
        }
    }

    #[test]
    fn generator_cycles_are_related_by_the_projections() {
        let m = synth_circle_map(30, -1, 0.0, 0).unwrap();
        let module = build_module(&m, &PipelineConfig::default()).unwrap();
        let g = &module.generators().unwrap()[0];
        let f = PrimeField::default();
        let fc = module.domain.complex();
        assert!(crate::homology::chain_boundary(fc, f, &g.domain_cycle).is_empty());
        let (dom, img) = module.windings(g).unwrap();
        assert_eq!(img[0], -dom[0]);
    }

    #[test]
    fn induced_h1_matrix_examples() {
        let f = PrimeField::default();
        let r = |a: i64| Ratio::from_integer(a);
        let pairs = vec![(vec![-1, 0], vec![-2, -1]), (vec![0, 1], vec![1, 1])];
        assert_eq!(induced_h1_matrix(&pairs, f).unwrap(), vec![vec![r(2), r(1)], vec![r(1), r(1)]]);
        let ident = vec![(vec![1, 0], vec![1, 0]), (vec![1, 1], vec![1, 1])];
        assert_eq!(induced_h1_matrix(&ident, f).unwrap(), vec![vec![r(1), r(0)], vec![r(0), r(1)]]);
        // scaling a pair by a unit of the field does not change the answer
        let scaled = vec![(vec![-505, 0], vec![-1, -505]), (vec![0, 1], vec![1, 1])];
        assert_eq!(induced_h1_matrix(&scaled, f).unwrap(), vec![vec![r(2), r(1)], vec![r(1), r(1)]]);
        let half = vec![(vec![2], vec![1])];
        assert_eq!(induced_h1_matrix(&half, f).unwrap(), vec![vec![Ratio::new(1, 2)]]);
        assert_eq!(
            induced_h1_matrix(&[(vec![1, 0], vec![1, 0]), (vec![2, 0], vec![2, 0])], f),
            Err(PipelineError::DegenerateSpan)
        );
        assert_eq!(
            induced_h1_matrix(&[(vec![1], vec![1]), (vec![1], vec![2])], f),
            Err(PipelineError::InconsistentWindings)
        );
    }

    #[test]
    fn torus_reconstruction() {
        // dyadic grid, so equal distances are equal floats
        let m = synth_torus_map(8, [[2, 1], [1, 1]]).unwrap();
        let module = build_module(&m, &PipelineConfig::default()).unwrap();
        let d = module_diagram(&module).unwrap();
        assert_eq!(d.points.len(), 1, "{d:?}");
        assert_eq!(d.points[0].multiplicity, 2);
        let pairs: Vec<_> = module
            .generators()
            .unwrap()
            .iter()
            .map(|g| module.windings(g).unwrap())
            .collect();
        let r = |a: i64| Ratio::from_integer(a);
        assert_eq!(
            induced_h1_matrix(&pairs, PrimeField::default()).unwrap(),
            vec![vec![r(2), r(1)], vec![r(1), r(1)]]
        );
    }

    #[test]
    fn single_map_timeseries_matches_build_module() {
        let m = synth_circle_map(24, 2, 0.05, 3).unwrap();
        let cfg = PipelineConfig::default();
        let ts = timeseries_module(std::slice::from_ref(&m), &cfg, None).unwrap();
        let direct = module_diagram(&build_module(&m, &cfg).unwrap()).unwrap();
        assert_eq!(ts.diagram().unwrap(), direct);
    }

    #[test]
    fn identity_chain_collapses_to_plain_persistence() {
        let m = identity_map(circle(12));
        let cfg = PipelineConfig::default();
        let ts = timeseries_module(&[m.clone(), m.clone()], &cfg, None).unwrap();
        assert_eq!(ts.diagram().unwrap(), plain_diagram(m.domain(), 1, ts.max_radius));
    }

    #[test]
    fn z_squared_twice_winds_four_times() {
        let first = synth_circle_map(48, 2, 0.0, 0).unwrap();
        let second = SampledMap::new(first.image().dedup().0, {
            let (mid, _) = first.image().dedup();
            let pts = mid
                .points()
                .iter()
                .map(|p| {
                    let (x, y) = (p[0], p[1]);
                    vec![x * x - y * y, 2.0 * x * y]
                })
                .collect();
            PointCloud::euclidean(pts).unwrap()
        })
        .unwrap();
        let ts = timeseries_module(&[first, second], &PipelineConfig::default(), None).unwrap();
        let d = ts.diagram().unwrap();
        assert_eq!(d.total_multiplicity(), 1, "{d:?}");
        let (_, _, cycles) = &ts.generator_cycles().unwrap()[0];
        let w0 = ts.winding_at(0, &cycles[0]).unwrap()[0];
        let w4 = ts.winding_at(4, &cycles[4]).unwrap()[0];
        let f = PrimeField::default();
        assert_ne!(w0, 0);
        assert_eq!(f.reduce(w4), f.mul(4, f.reduce(w0)));
    }

    #[test]
    fn chain_mismatch_is_reported() {
        let a = synth_circle_map(10, 2, 0.0, 0).unwrap();
        let b = synth_circle_map(7, 2, 0.0, 0).unwrap();
        assert!(matches!(
            timeseries_module(&[a, b], &PipelineConfig::default(), None),
            Err(PipelineError::ChainMismatch(0, 1, _))
        ));
    }

    #[test]
    fn perturbation_respects_stability() {
        let a = synth_circle_map(30, 2, 0.0, 1).unwrap();
        let b = synth_circle_map(30, 2, 0.09, 1).unwrap();
        let cap = a.graph_enclosing_radius().max(b.graph_enclosing_radius());
        let cfg = PipelineConfig {
            max_radius: Some(cap),
            ..Default::default()
        };
        let da = module_diagram(&build_module(&a, &cfg).unwrap()).unwrap();
        let db = module_diagram(&build_module(&b, &cfg).unwrap()).unwrap();
        let h = crate::geometry::graph_hausdorff(&a, &b).unwrap();
        assert!(bottleneck(&da, &db).unwrap() <= h + 1e-9);
    }

    #[test]
    fn config_is_validated() {
        let m = identity_map(circle(4));
        let cfg = PipelineConfig {
            max_dim: Some(1),
            ..Default::default()
        };
        assert!(matches!(build_module(&m, &cfg), Err(PipelineError::Config(_))));
    }
}
