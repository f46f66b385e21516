//! Persistence diagrams: bottleneck distance and JSON/CSV/SVG serialization.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffield::DEFAULT_MODULUS;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("parse error at {context}: {msg}")]
    Parse { context: String, msg: String },
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
}

fn parse_err(context: impl Into<String>, msg: impl Into<String>) -> DiagramError {
    DiagramError::Parse {
        context: context.into(),
        msg: msg.into(),
    }
}

/// `death` is `f64::INFINITY` for an essential class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
    pub multiplicity: usize,
}

impl DiagramPoint {
    pub fn lifetime(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub degree: usize,
    pub field: u32,
    /// Stand-in for infinite deaths in capped comparisons and plots.
    pub cap: Option<f64>,
    /// Sorted by `(birth, death)`, one entry per distinct pair.
    pub points: Vec<DiagramPoint>,
}

impl PersistenceDiagram {
    pub fn empty(degree: usize) -> Self {
        PersistenceDiagram {
            degree,
            field: DEFAULT_MODULUS,
            cap: None,
            points: Vec::new(),
        }
    }

    /// Collects `(birth, death)` bars, merging equal pairs and dropping empty ones.
    pub fn from_intervals(
        degree: usize,
        field: u32,
        cap: Option<f64>,
        bars: impl IntoIterator<Item = (f64, f64)>,
    ) -> Self {
        let mut bars: Vec<(f64, f64)> = bars.into_iter().filter(|(b, d)| b < d).collect();
        bars.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut points: Vec<DiagramPoint> = Vec::new();
        for (birth, death) in bars {
            match points.last_mut() {
                Some(p) if p.birth == birth && p.death == death => p.multiplicity += 1,
                _ => points.push(DiagramPoint {
                    birth,
                    death,
                    multiplicity: 1,
                }),
            }
        }
        PersistenceDiagram {
            degree,
            field,
            cap,
            points,
        }
    }

    /// Number of off-diagonal points, counting multiplicity.
    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    /// Longest lifetime; infinite deaths count up to the cap when one is set.
    pub fn max_lifetime(&self) -> f64 {
        self.points
            .iter()
            .map(|p| match (p.death.is_finite(), self.cap) {
                (false, Some(c)) => c - p.birth,
                _ => p.lifetime(),
            })
            .fold(0.0, f64::max)
    }

    /// One entry per unit of multiplicity.
    pub fn expanded(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .flat_map(|p| std::iter::repeat_n((p.birth, p.death), p.multiplicity))
            .collect()
    }

    /// Same multiset with every infinite death replaced by `cap`.
    pub fn capped(&self, cap: f64) -> Self {
        let bars = self
            .expanded()
            .into_iter()
            .map(|(b, d)| (b, if d.is_finite() { d } else { cap }));
        PersistenceDiagram::from_intervals(self.degree, self.field, Some(cap), bars)
    }
}

/// Maximum bipartite matching by augmenting paths; `adj[l]` lists right vertices.
fn perfect_matching(adj: &[Vec<usize>], n_right: usize) -> bool {
    fn augment(l: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [usize]) -> bool {
        for &r in &adj[l] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if owner[r] == usize::MAX || augment(owner[r], adj, seen, owner) {
                owner[r] = l;
                return true;
            }
        }
        false
    }
    let mut owner = vec![usize::MAX; n_right];
    for l in 0..adj.len() {
        let mut seen = vec![false; n_right];
        if !augment(l, adj, &mut seen, &mut owner) {
            return false;
        }
    }
    true
}

fn finite_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let linf = |x: (f64, f64), y: (f64, f64)| (x.0 - y.0).abs().max((x.1 - y.1).abs());
    let half = |x: (f64, f64)| (x.1 - x.0) / 2.0;
    let mut candidates: Vec<f64> = vec![0.0];
    candidates.extend(a.iter().chain(b).map(|&x| half(x)));
    for &x in a {
        for &y in b {
            candidates.push(linf(x, y));
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // left: a then diagonal copies of b; right: b then diagonal copies of a
    let feasible = |eps: f64| {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
        for i in 0..n {
            for j in 0..m {
                if linf(a[i], b[j]) <= eps {
                    adj[i].push(j);
                }
            }
            if half(a[i]) <= eps {
                adj[i].push(m + i);
            }
        }
        for j in 0..m {
            if half(b[j]) <= eps {
                adj[n + j].push(j);
            }
            adj[n + j].extend((0..n).map(|i| m + i));
        }
        perfect_matching(&adj, n + m)
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Bottleneck distance. Infinite points are matched only among themselves; the
/// distance is infinite when their counts differ.
pub fn bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<f64, DiagramError> {
    if d1.degree != d2.degree {
        return Err(DiagramError::DegreeMismatch(d1.degree, d2.degree));
    }
    let (e1, e2) = (d1.expanded(), d2.expanded());
    let (f1, i1): (Vec<_>, Vec<_>) = e1.into_iter().partition(|p| p.1.is_finite());
    let (f2, i2): (Vec<_>, Vec<_>) = e2.into_iter().partition(|p| p.1.is_finite());
    if i1.len() != i2.len() {
        return Ok(f64::INFINITY);
    }
    let mut b1: Vec<f64> = i1.iter().map(|p| p.0).collect();
    let mut b2: Vec<f64> = i2.iter().map(|p| p.0).collect();
    b1.sort_by(f64::total_cmp);
    b2.sort_by(f64::total_cmp);
    let inf_cost = b1.iter().zip(&b2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(finite_bottleneck(&f1, &f2).max(inf_cost))
}

/// Bottleneck distance after replacing infinite deaths by `cap`.
pub fn bottleneck_capped(d1: &PersistenceDiagram, d2: &PersistenceDiagram, cap: f64) -> Result<f64, DiagramError> {
    bottleneck(&d1.capped(cap), &d2.capped(cap))
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonDeath {
    Finite(f64),
    Word(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonPoint {
    birth: f64,
    death: JsonDeath,
    multiplicity: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDiagram {
    degree: usize,
    field: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    cap: Option<f64>,
    points: Vec<JsonPoint>,
}

pub fn write_diagram_json(d: &PersistenceDiagram) -> String {
    let doc = JsonDiagram {
        degree: d.degree,
        field: d.field,
        cap: d.cap,
        points: d
            .points
            .iter()
            .map(|p| JsonPoint {
                birth: p.birth,
                death: if p.death.is_finite() {
                    JsonDeath::Finite(p.death)
                } else {
                    JsonDeath::Word("inf".into())
                },
                multiplicity: p.multiplicity,
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("diagram serializes")
}

pub fn read_diagram_json(text: &str) -> Result<PersistenceDiagram, DiagramError> {
    let doc: JsonDiagram = serde_json::from_str(text)
        .map_err(|e| parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let mut points = Vec::with_capacity(doc.points.len());
    for (i, p) in doc.points.into_iter().enumerate() {
        let death = match p.death {
            JsonDeath::Finite(d) => d,
            JsonDeath::Word(w) if w == "inf" => f64::INFINITY,
            JsonDeath::Word(w) => return Err(parse_err(format!("points[{i}].death"), format!("unexpected {w:?}"))),
        };
        if !p.birth.is_finite() {
            return Err(parse_err(format!("points[{i}].birth"), "birth must be finite"));
        }
        if death < p.birth {
            return Err(parse_err(format!("points[{i}].death"), "death precedes birth"));
        }
        if p.multiplicity == 0 {
            return Err(parse_err(format!("points[{i}].multiplicity"), "multiplicity must be positive"));
        }
        points.push(DiagramPoint {
            birth: p.birth,
            death,
            multiplicity: p.multiplicity,
        });
    }
    points.sort_by(|x, y| x.birth.total_cmp(&y.birth).then(x.death.total_cmp(&y.death)));
    Ok(PersistenceDiagram {
        degree: doc.degree,
        field: doc.field,
        cap: doc.cap,
        points,
    })
}

pub fn diagram_to_csv(d: &PersistenceDiagram) -> String {
    let mut out = String::from("birth,death,multiplicity\n");
    for p in &d.points {
        let death = if p.death.is_finite() { p.death.to_string() } else { "inf".into() };
        writeln!(out, "{},{},{}", p.birth, death, p.multiplicity).unwrap();
    }
    out
}

pub fn diagram_from_csv(text: &str, degree: usize, field: u32) -> Result<PersistenceDiagram, DiagramError> {
    let mut bars = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let ctx = format!("line {}", ln + 1);
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(parse_err(ctx, "expected birth,death,multiplicity"));
        }
        let num = |s: &str| -> Result<f64, DiagramError> {
            if s == "inf" {
                return Ok(f64::INFINITY);
            }
            s.parse().map_err(|_| parse_err(ctx.clone(), format!("bad number {s:?}")))
        };
        let (b, d) = (num(cells[0])?, num(cells[1])?);
        let m: usize = cells[2].parse().map_err(|_| parse_err(ctx.clone(), "bad multiplicity"))?;
        if d < b || m == 0 || !b.is_finite() {
            return Err(parse_err(ctx, "invalid point"));
        }
        bars.extend(std::iter::repeat_n((b, d), m));
    }
    Ok(PersistenceDiagram::from_intervals(degree, field, None, bars))
}

/// Square plot with the diagonal; infinite deaths sit on a dashed line at `cap`.
pub fn render_svg(d: &PersistenceDiagram, cap: f64) -> String {
    const SIZE: f64 = 400.0;
    const MARGIN: f64 = 40.0;
    let span = if cap > 0.0 { cap } else { 1.0 };
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let x = |v: f64| MARGIN + v * scale;
    let y = |v: f64| SIZE - MARGIN - v * scale;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{w:.2}" height="{w:.2}" fill="none" stroke="black"/>"#,
        w = SIZE - 2.0 * MARGIN
    )
    .unwrap();
    writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray"/>"#,
        x(0.0),
        y(0.0),
        x(span),
        y(span)
    )
    .unwrap();
    if d.points.iter().any(|p| !p.death.is_finite()) {
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            x(0.0),
            y(span),
            x(span),
            y(span)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">birth</text>"#,
        SIZE / 2.0,
        SIZE - 10.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="12" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 12 {:.2})">death</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{span:.3}</text>"#,
        x(span),
        SIZE - MARGIN + 14.0
    )
    .unwrap();
    for p in &d.points {
        let death = if p.death.is_finite() { p.death.min(span) } else { span };
        let r = 3.0 + 2.0 * (p.multiplicity.min(6) as f64 - 1.0);
        let (cx, cy) = (x(p.birth.min(span)), y(death));
        writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.1}" fill="steelblue" fill-opacity="0.8" stroke="black"/>"#
        )
        .unwrap();
        if p.multiplicity > 1 {
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">x{}</text>"#,
                cx + r + 2.0,
                cy - r,
                p.multiplicity
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

/// A chain written out for export: simplices as vertex lists with coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainTerm {
    pub simplex: Vec<usize>,
    pub coeff: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub birth: f64,
    /// `None` for a class that never dies.
    pub death: Option<f64>,
    pub domain: Vec<ChainTerm>,
    pub graph: Vec<ChainTerm>,
    pub image: Vec<ChainTerm>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub domain_winding: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub image_winding: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorsFile {
    pub degree: usize,
    pub field: u32,
    pub generators: Vec<GeneratorRecord>,
}

pub fn write_generators_json(g: &GeneratorsFile) -> String {
    serde_json::to_string_pretty(g).expect("generators serialize")
}

pub fn read_generators_json(text: &str) -> Result<GeneratorsFile, DiagramError> {
    serde_json::from_str(text).map_err(|e| parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string()))
}
