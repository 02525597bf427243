//! Pipeline behind the `co-topo` command: dataset ingestion and sampling,
//! configured persistence runs and the quotient comparison.

pub mod dataset;
pub mod pipeline;
pub mod quotients;

use cyclo_topo::geometry::LinkageParams;
use cyclo_topo::sampling::{sample_variety, synthetic_points, SamplerConfig, SamplingError, SyntheticKind, SyntheticSpec};

pub use dataset::{ingest, ingest_str, Dataset, IngestError, IngestOptions, Layout, Origin, ParseError, ValidationError};
pub use pipeline::{run, PipelineConfig, PipelineError, RunBundle, RunOutput, Subspace};
pub use quotients::{compare_quotients, QuotientOptions, QuotientReport};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "CO_TOPO_THREADS";

/// Caps the global worker pool. Results do not depend on the count.
pub fn configure_threads(threads: Option<usize>) -> Result<(), String> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| format!("{THREADS_ENV}={v} is not a count"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOptions {
    pub bond_angle_deg: f64,
    pub bond_length: f64,
    pub count: usize,
    pub seed: u64,
    pub chains: usize,
    pub steps: usize,
    pub thin: usize,
    pub min_separation: f64,
    pub step_size: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            bond_angle_deg: 115.0,
            bond_length: 1.53,
            count: 2000,
            seed: 1,
            chains: 4096,
            steps: 100,
            thin: 5,
            min_separation: 1.0,
            step_size: 0.1,
        }
    }
}

impl SampleOptions {
    pub fn to_text(&self) -> String {
        format!(
            "sample phi_deg {} length {} n {} seed {} chains {} steps {} thin {} min_sep {} step {}",
            self.bond_angle_deg, self.bond_length, self.count, self.seed, self.chains, self.steps, self.thin, self.min_separation, self.step_size
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SampleError {
    #[error("linkage parameters: {0}")]
    Params(#[from] cyclo_topo::GeometryError),
    #[error("sampler: {0}")]
    Sampling(#[from] SamplingError),
}

/// Random-walk sample of the variety; provenance is the hash of the options.
pub fn sample_dataset(opts: &SampleOptions) -> Result<Dataset, SampleError> {
    let params = LinkageParams::new(opts.bond_length, opts.bond_angle_deg.to_radians())?;
    let cfg = SamplerConfig {
        count: opts.count,
        seed: opts.seed,
        step_size: opts.step_size,
        min_separation: opts.min_separation,
        chains: opts.chains,
        steps: Some(opts.steps),
        thin: opts.thin,
        ..Default::default()
    };
    let samples = sample_variety(&params, &cfg)?;
    let mut data = Dataset::from_realizations(Origin::Sampled, samples, pipeline::hex_digest(opts.to_text().as_bytes()))?;
    data.params = Some(params);
    Ok(data)
}

pub fn synthetic_dataset(kind: SyntheticKind, count: usize, seed: u64, noise: f64) -> Dataset {
    let spec = SyntheticSpec { kind, count, seed, noise };
    let text = format!("synth {spec:?}");
    Dataset::synthetic(synthetic_points(&spec), pipeline::hex_digest(text.as_bytes()))
}
