use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use co_topo::dataset::{export_realizations, export_torsions};
use co_topo::pipeline::{CircularParams, IsomapParams, PersistenceParams};
use co_topo::{
    compare_quotients, configure_threads, ingest, run, sample_dataset, synthetic_dataset, Dataset, IngestOptions, Layout,
    PipelineConfig, QuotientOptions, SampleOptions, Subspace,
};
use cyclo_topo::embedding::NeighborhoodRule;
use cyclo_topo::metrics::{BaseMetric, MetricSpec, Quotient};
use cyclo_topo::sampling::SyntheticKind;
use cyclo_topo::symmetry::ToleranceConfig;

#[derive(Parser)]
#[command(name = "co-topo", version, about = "Topology of the cyclooctane conformation space")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "CO_TOPO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a coordinate file and report the estimated linkage.
    Ingest {
        file: PathBuf,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Write the normalized carbon24 rows here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write torsion angles here.
        #[arg(long)]
        torsions: Option<PathBuf>,
    },
    /// Sample the conformation variety by projected random walks.
    Sample {
        #[arg(long, default_value_t = 115.0)]
        phi_deg: f64,
        #[arg(long, default_value_t = 1.53)]
        length: f64,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4096)]
        chains: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 5)]
        thin: usize,
        /// Minimum d∠ between kept samples.
        #[arg(long, default_value_t = 1.0)]
        min_sep: f64,
        #[arg(long, default_value_t = 0.1)]
        step_size: f64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured pipeline on a coordinate file.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long, value_enum, default_value_t = MetricArg::Angular)]
        metric: MetricArg,
        #[arg(long, value_enum, default_value_t = QuotientArg::None)]
        quotient: QuotientArg,
        /// full, A, B, C, AuB, AuC, BuC, M1, M2 or types:<list>.
        #[arg(long, default_value = "full")]
        subspace: Subspace,
        #[command(flatten)]
        hom: HomologyArgs,
        /// Embedding dimension; enables Isomap.
        #[arg(long)]
        isomap_dim: Option<usize>,
        #[arg(long, default_value_t = 12)]
        knn: usize,
        /// Neighbourhood radius instead of k nearest neighbours.
        #[arg(long)]
        eps: Option<f64>,
        /// Scale of the circular coordinate; enables it.
        #[arg(long)]
        circular_r: Option<f64>,
        #[arg(long, default_value_t = 47)]
        circular_prime: u32,
        /// Types whose points define loops for winding numbers.
        #[arg(long, value_delimiter = ',')]
        winding_types: Vec<u8>,
        #[command(flatten)]
        tol: ToleranceArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for summary and CSV exports.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Betti numbers of the subspaces under the C8 and D8 quotient metrics.
    Quotients {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long, value_enum, default_value_t = MetricArg::Angular)]
        base: MetricArg,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
        primes: Vec<u32>,
        #[arg(long, default_value_t = 2)]
        max_dim: usize,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long, default_value_t = 3.5)]
        r_max: f64,
        /// Cutoff of the D8 rows.
        #[arg(long, default_value_t = 3.0)]
        r_max_dihedral: f64,
        #[command(flatten)]
        tol: ToleranceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Persistence of a synthetic manifold sample.
    Synth {
        #[arg(long)]
        kind: SyntheticKind,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
        primes: Vec<u32>,
        /// Defaults depend on the kind.
        #[arg(long)]
        max_dim: Option<usize>,
        #[arg(long)]
        r_max: Option<f64>,
        /// Defaults to half of r_max.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        prominence: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct LayoutArgs {
    #[arg(long, default_value = "carbon24")]
    layout: Layout,
    /// Carbon columns of a full72 file, 24 zero-based indices.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<usize>,
    /// Bound on the relative constraint residual of each row.
    #[arg(long, default_value_t = 1e-3)]
    residual_tol: f64,
}

impl LayoutArgs {
    fn options(&self) -> Result<IngestOptions> {
        let layout = match (&self.layout, self.columns.is_empty()) {
            (l, true) => l.clone(),
            (Layout::Full72 { .. }, false) => Layout::Full72 { carbon_columns: self.columns.clone() },
            (Layout::Carbon24, false) => bail!("--columns applies to the full72 layout"),
        };
        Ok(IngestOptions { layout, residual_tol: self.residual_tol })
    }
}

#[derive(Args)]
struct HomologyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
    primes: Vec<u32>,
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
    #[arg(long, default_value_t = 6.0)]
    r_max: f64,
    /// Scale of the reported Betti numbers.
    #[arg(long, default_value_t = 4.0)]
    r: f64,
    #[arg(long, default_value_t = 2.0)]
    prominence: f64,
}

#[derive(Args)]
struct ToleranceArgs {
    /// Matching tolerance of the two-dimensional types, degrees.
    #[arg(long, default_value_t = 2.5)]
    tol_2d: f64,
    #[arg(long, default_value_t = 5.0)]
    tol_1d: f64,
    #[arg(long, default_value_t = 5.0)]
    tol_0d: f64,
}

impl ToleranceArgs {
    fn config(&self) -> ToleranceConfig {
        ToleranceConfig { tol_2d: self.tol_2d.to_radians(), tol_1d: self.tol_1d.to_radians(), tol_0d: self.tol_0d.to_radians() }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Angular,
    Euclidean,
}

impl From<MetricArg> for BaseMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Angular => BaseMetric::Angular,
            MetricArg::Euclidean => BaseMetric::Euclidean,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QuotientArg {
    None,
    #[value(name = "C8")]
    C8,
    #[value(name = "D8")]
    D8,
}

impl From<QuotientArg> for Quotient {
    fn from(q: QuotientArg) -> Self {
        match q {
            QuotientArg::None => Quotient::None,
            QuotientArg::C8 => Quotient::C8,
            QuotientArg::D8 => Quotient::D8,
        }
    }
}

fn load(path: &PathBuf, layout: &LayoutArgs) -> Result<Dataset> {
    ingest(path, &layout.options()?).with_context(|| format!("ingesting {}", path.display()))
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `(max_dim, r_max)` for each synthetic kind.
fn synth_defaults(kind: SyntheticKind) -> (usize, f64) {
    match kind {
        SyntheticKind::Circle => (1, 0.5),
        SyntheticKind::Sphere2 => (2, 0.6),
        SyntheticKind::FlatTorus | SyntheticKind::FlatKleinBottle => (2, 0.15),
        SyntheticKind::MobiusStrip => (2, 0.15),
    }
}

fn execute(cli: Cli) -> Result<()> {
    configure_threads(cli.threads).map_err(anyhow::Error::msg)?;
    match cli.command {
        Command::Ingest { file, layout, out, torsions } => {
            let data = load(&file, &layout)?;
            let p = data.params.expect("ingested data carries parameters");
            println!("rows = {}", data.len());
            println!("bond_length = {}", p.bond_length());
            println!("bond_angle_deg = {}", p.bond_angle().to_degrees());
            let r = data.realizations.as_deref().unwrap_or_default();
            if let Some(o) = out {
                emit(&export_realizations(r), Some(&o))?;
            }
            if let Some(t) = torsions {
                emit(&export_torsions(data.torsions.as_deref().unwrap_or_default()), Some(&t))?;
            }
        }
        Command::Sample { phi_deg, length, n, seed, chains, steps, thin, min_sep, step_size, out } => {
            let opts = SampleOptions {
                bond_angle_deg: phi_deg,
                bond_length: length,
                count: n,
                seed,
                chains,
                steps,
                thin,
                min_separation: min_sep,
                step_size,
            };
            let data = sample_dataset(&opts)?;
            log::info!("sampled {} conformations", data.len());
            emit(&export_realizations(data.realizations.as_deref().unwrap_or_default()), out.as_ref())?;
        }
        Command::Run {
            input,
            layout,
            metric,
            quotient,
            subspace,
            hom,
            isomap_dim,
            knn,
            eps,
            circular_r,
            circular_prime,
            winding_types,
            tol,
            seed,
            out,
        } => {
            let data = load(&input, &layout)?;
            let rule = match eps {
                Some(e) => NeighborhoodRule::Eps(e),
                None => NeighborhoodRule::Knn(knn),
            };
            let config = PipelineConfig {
                metric: MetricSpec::new(metric.into(), quotient.into()),
                subspace,
                persistence: PersistenceParams {
                    primes: hom.primes,
                    max_dim: hom.max_dim,
                    r_max: hom.r_max,
                    r: hom.r,
                    prominence: hom.prominence,
                },
                isomap: isomap_dim.map(|dim| IsomapParams { rule, dim }),
                circular: circular_r.map(|r| CircularParams { r, prime: circular_prime, winding_types }),
                tolerance: tol.config(),
                seed,
            };
            let result = run(&config, &data)?;
            if let Some(dir) = out {
                result.bundle.write_to(&dir)?;
            }
            print!("{}", result.bundle.summary());
        }
        Command::Quotients { input, layout, base, primes, max_dim, r, r_max, r_max_dihedral, tol, out } => {
            let data = load(&input, &layout)?;
            let opts = QuotientOptions { base: base.into(), primes, max_dim, r, r_max, r_max_dihedral, tolerance: tol.config() };
            let report = compare_quotients(&data, &opts)?;
            emit(&report.to_text(), out.as_ref())?;
        }
        Command::Synth { kind, n, seed, noise, primes, max_dim, r_max, r, prominence, out } => {
            let (dim0, rmax0) = synth_defaults(kind);
            let r_max = r_max.unwrap_or(rmax0);
            let data = synthetic_dataset(kind, n, seed, noise);
            let config = PipelineConfig {
                persistence: PersistenceParams {
                    primes,
                    max_dim: max_dim.unwrap_or(dim0),
                    r_max,
                    r: r.unwrap_or(r_max / 2.0),
                    prominence,
                },
                ..Default::default()
            };
            let result = run(&config, &data)?;
            if let Some(dir) = out {
                result.bundle.write_to(&dir)?;
            }
            print!("{}", result.bundle.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
