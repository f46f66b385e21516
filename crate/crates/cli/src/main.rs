use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use smph::complexes::FilteredComplex;
use smph::diagram_io::{
    bottleneck, diagram_to_csv, read_diagram_json, render_svg, write_diagram_json, write_generators_json, ChainTerm,
    GeneratorRecord, GeneratorsFile, PersistenceDiagram,
};
use smph::ffield::PrimeField;
use smph::geometry::{
    graph_hausdorff, parse_sampled_map_csv, sampled_map_to_csv, synth_circle_map, synth_torus_map, Metric, SampledMap,
};
use smph::pipeline::{build_module, module_diagram, timeseries_module, PipelineConfig, PipelineError};
use smph::quiver::Interval;

const STABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "smph", version, about = "Persistent homology of sampled maps")]
struct Cli {
    /// Prime modulus of the coefficient field.
    #[arg(long, global = true, default_value_t = 1009)]
    field: u64,
    /// Homology degree.
    #[arg(long, global = true, default_value_t = 1)]
    degree: usize,
    /// Top simplex dimension (defaults to degree + 1).
    #[arg(long, global = true)]
    max_dim: Option<usize>,
    /// Largest filtration radius (defaults to the enclosing radius of the graph).
    #[arg(long, global = true)]
    max_radius: Option<f64>,
    /// Noise seed for `synth`; basis shuffle seed for the pipelines.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "SMPH_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Output formats.
    #[arg(long, global = true, value_delimiter = ',', default_value = "json")]
    emit: Vec<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Svg,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic sampled map as CSV.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Diagram (and generators) of one sampled map.
    Ph {
        map: PathBuf,
        #[command(flatten)]
        input: InputOpts,
    },
    /// Compare the bottleneck distance of two maps' diagrams with the Hausdorff distance of their graphs.
    Stability {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        input: InputOpts,
    },
    /// Diagram of a chain of composable maps.
    Timeseries {
        #[arg(required = true)]
        maps: Vec<PathBuf>,
        /// Diagonal block as 1-based row vertices `A B` (default: the full row).
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        block: Option<Vec<usize>>,
        #[command(flatten)]
        input: InputOpts,
    },
    /// Render a diagram JSON file as SVG.
    DiagramRender {
        diagram: PathBuf,
        /// Plot extent; defaults to the cap stored in the file or the largest finite value.
        #[arg(long)]
        cap: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InputOpts {
    /// Read coordinates on the unit flat torus instead of Euclidean space.
    #[arg(long)]
    torus: bool,
    /// Base name of the output files.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Subcommand, Debug)]
enum SynthKind {
    /// `z ↦ z^power` on evenly spaced circle points.
    Circle {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
        power: i64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A linear map of the flat torus on a square grid.
    Torus {
        #[arg(long, default_value_t = 8)]
        grid: usize,
        /// Entries `a b c d` of the matrix `[[a, b], [c, d]]`.
        #[arg(long, num_args = 4, allow_negative_numbers = true, default_values_t = [2, 1, 1, 1])]
        matrix: Vec<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// An error with its exit code: 2 for bad input, 3 for a failed internal check.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 2, err }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = if e.is_certificate_failure() { 3 } else { 2 };
        Failure {
            code,
            err: anyhow::Error::new(e),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            if f.code == 2 {
                eprintln!("run `smph --help` for usage");
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome<()> {
    let field = PrimeField::new(cli.field).map_err(|e| anyhow!("--field: {e}"))?;
    let cfg = PipelineConfig {
        field,
        degree: cli.degree,
        max_dim: cli.max_dim,
        max_radius: cli.max_radius,
        shuffle_seed: cli.seed,
    };
    match &cli.command {
        Command::Synth { kind } => synth(cli, kind),
        Command::Ph { map, input } => ph(cli, &cfg, map, input),
        Command::Stability { a, b, input } => stability(cli, &cfg, a, b, input),
        Command::Timeseries { maps, block, input } => timeseries(cli, &cfg, maps, block.as_deref(), input),
        Command::DiagramRender { diagram, cap, out } => diagram_render(cli, diagram, *cap, out.as_deref()),
    }
}

fn write_file(path: &Path, contents: &str) -> Outcome<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}

fn synth(cli: &Cli, kind: &SynthKind) -> Outcome<()> {
    let (map, out, default_name) = match kind {
        SynthKind::Circle { n, power, sigma, out } => {
            let m = synth_circle_map(*n, *power, *sigma, cli.seed.unwrap_or(0)).map_err(anyhow::Error::new)?;
            (m, out, "circle.csv")
        }
        SynthKind::Torus { grid, matrix, out } => {
            let m = synth_torus_map(*grid, [[matrix[0], matrix[1]], [matrix[2], matrix[3]]]).map_err(anyhow::Error::new)?;
            (m, out, "torus.csv")
        }
    };
    let path = out.clone().unwrap_or_else(|| cli.out_dir.join(default_name));
    write_file(&path, &sampled_map_to_csv(&map))
}

fn read_map(path: &Path, torus: bool) -> Outcome<SampledMap> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let width = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .map_or(0, |l| l.split(',').count());
    let metric = if torus { Metric::unit_torus(width / 2) } else { Metric::Euclidean };
    let map = parse_sampled_map_csv(&text, metric).with_context(|| format!("parsing {}", path.display()))?;
    Ok(map)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned())
}

fn emit_diagram(cli: &Cli, name: &str, d: &PersistenceDiagram) -> Outcome<()> {
    for fmt in &cli.emit {
        match fmt {
            Format::Json => write_file(&cli.out_dir.join(format!("{name}.diagram.json")), &write_diagram_json(d))?,
            Format::Csv => write_file(&cli.out_dir.join(format!("{name}.diagram.csv")), &diagram_to_csv(d))?,
            Format::Svg => {
                let cap = plot_cap(d, None);
                write_file(&cli.out_dir.join(format!("{name}.svg")), &render_svg(d, cap))?
            }
        }
    }
    Ok(())
}

fn plot_cap(d: &PersistenceDiagram, cap: Option<f64>) -> f64 {
    cap.or(d.cap).unwrap_or_else(|| {
        d.points
            .iter()
            .flat_map(|p| [p.birth, p.death])
            .filter(|x| x.is_finite())
            .fold(1.0, f64::max)
    })
}

fn terms(fc: &FilteredComplex, z: &[(usize, u32)]) -> Vec<ChainTerm> {
    z.iter()
        .map(|&(i, coeff)| ChainTerm {
            simplex: fc.simplex(i).clone(),
            coeff,
        })
        .collect()
}

fn ph(cli: &Cli, cfg: &PipelineConfig, path: &Path, input: &InputOpts) -> Outcome<()> {
    let map = read_map(path, input.torus)?;
    let module = build_module(&map, cfg)?;
    let d = module_diagram(&module)?;
    let name = input.name.clone().unwrap_or_else(|| stem(path));
    emit_diagram(cli, &name, &d)?;
    if cli.emit.contains(&Format::Json) {
        let mut generators = Vec::new();
        for g in module.generators()? {
            let windings = if cfg.degree == 1 { module.windings(&g).ok() } else { None };
            generators.push(GeneratorRecord {
                birth: g.birth,
                death: g.death.is_finite().then_some(g.death),
                domain: terms(module.domain.complex(), &g.domain_cycle),
                graph: terms(module.graph.complex(), &g.graph_cycle),
                image: terms(module.image.complex(), &g.image_cycle),
                domain_winding: windings.as_ref().map(|w| w.0.clone()),
                image_winding: windings.map(|w| w.1),
            });
        }
        let file = GeneratorsFile {
            degree: cfg.degree,
            field: cfg.field.modulus(),
            generators,
        };
        write_file(&cli.out_dir.join(format!("{name}.generators.json")), &write_generators_json(&file))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StabilityReport {
    hausdorff: f64,
    bottleneck: f64,
    satisfied: bool,
}

fn stability(cli: &Cli, cfg: &PipelineConfig, a: &Path, b: &Path, input: &InputOpts) -> Outcome<()> {
    let (ma, mb) = (read_map(a, input.torus)?, read_map(b, input.torus)?);
    let hausdorff = graph_hausdorff(&ma, &mb).map_err(anyhow::Error::new)?;
    // a shared radius range keeps the two diagrams comparable
    let cfg = PipelineConfig {
        max_radius: Some(
            cfg.max_radius
                .unwrap_or_else(|| ma.graph_enclosing_radius().max(mb.graph_enclosing_radius())),
        ),
        ..cfg.clone()
    };
    let da = module_diagram(&build_module(&ma, &cfg)?)?;
    let db = module_diagram(&build_module(&mb, &cfg)?)?;
    let bn = bottleneck(&da, &db).map_err(anyhow::Error::new)?;
    let report = StabilityReport {
        hausdorff,
        bottleneck: bn,
        satisfied: bn <= hausdorff + STABILITY_TOLERANCE,
    };
    let text = serde_json::to_string(&report).map_err(anyhow::Error::new)?;
    let name = input.name.clone().unwrap_or_else(|| "stability".into());
    write_file(&cli.out_dir.join(format!("{name}.json")), &text)?;
    println!("{text}");
    Ok(())
}

fn timeseries(cli: &Cli, cfg: &PipelineConfig, paths: &[PathBuf], block: Option<&[usize]>, input: &InputOpts) -> Outcome<()> {
    let maps = paths
        .iter()
        .map(|p| read_map(p, input.torus))
        .collect::<Result<Vec<_>, _>>()?;
    let block = match block {
        Some([a, b]) if 1 <= *a && a <= b => Some(Interval::new(a - 1, b - 1)),
        Some(other) => return Err(anyhow!("--block expects 1 <= A <= B, got {other:?}").into()),
        None => None,
    };
    let module = timeseries_module(&maps, cfg, block)?;
    let d = module.diagram()?;
    let name = input.name.clone().unwrap_or_else(|| "timeseries".into());
    emit_diagram(cli, &name, &d)
}

fn diagram_render(cli: &Cli, path: &Path, cap: Option<f64>, out: Option<&Path>) -> Outcome<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let d = read_diagram_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let cap = plot_cap(&d, cap);
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cli.out_dir.join(format!("{}.svg", stem(path))));
    write_file(&out, &render_svg(&d, cap))
}
