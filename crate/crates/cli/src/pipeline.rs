//! Configured runs: classification, subspace selection, distances,
//! persistence, embedding and circular coordinates, with text exports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use cyclo_topo::embedding::{isomap, neighborhood_graph, shortest_path, EmbeddingError, Isomap, NeighborhoodRule};
use cyclo_topo::homology::{
    betti_at, circular_coordinate, persistence, plateau_around, prominent_betti, winding_sum, CircularCoordinate,
    CircularOptions, HomologyError, PersistenceDiagram,
};
use cyclo_topo::metrics::{distance_matrix, BaseMetric, DistanceMatrix, MetricError, MetricSpec, Points, Quotient};
use cyclo_topo::symmetry::{
    classify_all, hemisphere_split, subspace_indices, Hemisphere, SelectMode, Selector, SymmetryLabel, ToleranceConfig,
};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{Dataset, Origin};

/// Named subspaces of the conformation space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subspace {
    Full,
    A,
    B,
    C,
    AB,
    AC,
    BC,
    /// `C` restricted to hemisphere one and the hemisphere boundary.
    M1,
    /// `C` restricted to hemisphere two and the hemisphere boundary.
    M2,
    /// Points carrying any of the listed types.
    Types(Vec<u8>),
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subspace::Full => f.write_str("full"),
            Subspace::A => f.write_str("A"),
            Subspace::B => f.write_str("B"),
            Subspace::C => f.write_str("C"),
            Subspace::AB => f.write_str("AuB"),
            Subspace::AC => f.write_str("AuC"),
            Subspace::BC => f.write_str("BuC"),
            Subspace::M1 => f.write_str("M1"),
            Subspace::M2 => f.write_str("M2"),
            Subspace::Types(ts) => {
                write!(f, "types:{}", ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }
}

impl FromStr for Subspace {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "full" => Subspace::Full,
            "A" => Subspace::A,
            "B" => Subspace::B,
            "C" => Subspace::C,
            "AuB" | "A∪B" | "AB" => Subspace::AB,
            "AuC" | "A∪C" | "AC" => Subspace::AC,
            "BuC" | "B∪C" | "BC" => Subspace::BC,
            "M1" => Subspace::M1,
            "M2" => Subspace::M2,
            other => {
                let list = other.strip_prefix("types:").ok_or_else(|| format!("unknown subspace '{other}'"))?;
                let ts = list
                    .split(',')
                    .map(|t| t.trim().parse::<u8>().ok().filter(|v| (1..=18).contains(v)))
                    .collect::<Option<Vec<u8>>>()
                    .ok_or_else(|| format!("bad type list '{list}'"))?;
                if ts.is_empty() {
                    return Err("empty type list".into());
                }
                Subspace::Types(ts)
            }
        })
    }
}

/// Indices of the points of `subspace`, in dataset order.
pub fn select(
    subspace: &Subspace,
    labels: &[SymmetryLabel],
    torsions: &[cyclo_topo::TorsionSequence],
    tol: &ToleranceConfig,
) -> Vec<usize> {
    let pick = |s: Selector, m: SelectMode| subspace_indices(labels, &s, m, tol);
    let union = |x: Vec<usize>, y: Vec<usize>| {
        let mut v: Vec<usize> = x.into_iter().chain(y).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let a = || pick(Selector::A, SelectMode::Any);
    let b = || pick(Selector::B, SelectMode::Any);
    let c = || pick(Selector::C, SelectMode::Closure);
    let half = |drop: Hemisphere| c().into_iter().filter(|&i| hemisphere_split(&torsions[i], tol.tol_1d) != drop).collect();
    match subspace {
        Subspace::Full => (0..labels.len()).collect(),
        Subspace::A => a(),
        Subspace::B => b(),
        Subspace::C => c(),
        Subspace::AB => union(a(), b()),
        Subspace::AC => union(a(), c()),
        Subspace::BC => union(b(), c()),
        Subspace::M1 => half(Hemisphere::Two),
        Subspace::M2 => half(Hemisphere::One),
        Subspace::Types(ts) => pick(Selector::types(ts), SelectMode::Any),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceParams {
    pub primes: Vec<u32>,
    pub max_dim: usize,
    pub r_max: f64,
    /// Scale at which Betti numbers are reported.
    pub r: f64,
    pub prominence: f64,
}

impl Default for PersistenceParams {
    fn default() -> Self {
        Self { primes: vec![2, 3], max_dim: 2, r_max: 6.0, r: 4.0, prominence: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsomapParams {
    pub rule: NeighborhoodRule,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircularParams {
    pub r: f64,
    pub prime: u32,
    /// For each type, the winding along a loop through the selected points
    /// of that type is reported.
    pub winding_types: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub metric: MetricSpec,
    pub subspace: Subspace,
    pub persistence: PersistenceParams,
    pub isomap: Option<IsomapParams>,
    pub circular: Option<CircularParams>,
    pub tolerance: ToleranceConfig,
    /// Seeds everything random in a run; currently nothing is, so it only
    /// enters the configuration hash.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            metric: MetricSpec::angular(),
            subspace: Subspace::Full,
            persistence: PersistenceParams::default(),
            isomap: None,
            circular: None,
            tolerance: ToleranceConfig::default(),
            seed: 0,
        }
    }
}

pub fn base_name(b: BaseMetric) -> &'static str {
    match b {
        BaseMetric::Angular => "angular",
        BaseMetric::Euclidean => "euclidean",
    }
}

pub fn quotient_name(q: Quotient) -> &'static str {
    match q {
        Quotient::None => "none",
        Quotient::C8 => "C8",
        Quotient::D8 => "D8",
    }
}

fn rule_text(rule: &NeighborhoodRule) -> String {
    match rule {
        NeighborhoodRule::Knn(k) => format!("knn:{k}"),
        NeighborhoodRule::Eps(e) => format!("eps:{e}"),
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    /// Canonical `key = value` rendering; the configuration hash is taken
    /// over this text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.persistence;
        let _ = writeln!(s, "metric = {}", base_name(self.metric.base));
        let _ = writeln!(s, "quotient = {}", quotient_name(self.metric.quotient));
        let _ = writeln!(s, "subspace = {}", self.subspace);
        let _ = writeln!(s, "primes = {}", join(&p.primes));
        let _ = writeln!(s, "max_dim = {}", p.max_dim);
        let _ = writeln!(s, "r_max = {}", p.r_max);
        let _ = writeln!(s, "r = {}", p.r);
        let _ = writeln!(s, "prominence = {}", p.prominence);
        if let Some(iso) = &self.isomap {
            let _ = writeln!(s, "isomap = {} dim {}", rule_text(&iso.rule), iso.dim);
        }
        if let Some(c) = &self.circular {
            let _ = writeln!(s, "circular = r {} prime {} types {}", c.r, c.prime, join(&c.winding_types));
        }
        let t = &self.tolerance;
        let _ = writeln!(s, "tolerance = {},{},{}", t.tol_2d, t.tol_1d, t.tol_0d);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    pub fn hash(&self) -> String {
        hex_digest(self.to_text().as_bytes())
    }

    /// Rejects combinations the dataset cannot support.
    pub fn validate(&self, data: &Dataset) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let p = &self.persistence;
        if p.primes.is_empty() {
            return bad("at least one prime is required".into());
        }
        if !(p.r_max > 0.0) || !(p.r >= 0.0 && p.r <= p.r_max) {
            return bad(format!("need 0 <= r <= r_max and r_max > 0, got r = {}, r_max = {}", p.r, p.r_max));
        }
        if !(p.prominence > 1.0) {
            return bad(format!("prominence ratio must exceed 1, got {}", p.prominence));
        }
        if !self.tolerance.is_valid() {
            return bad("tolerances must be nonnegative".into());
        }
        if data.is_empty() {
            return bad("dataset is empty".into());
        }
        if data.origin == Origin::Synthetic {
            if self.subspace != Subspace::Full || self.metric.quotient != Quotient::None {
                return bad("synthetic data supports only subspace full without quotient".into());
            }
            if self.circular.as_ref().is_some_and(|c| !c.winding_types.is_empty()) {
                return bad("synthetic data carries no symmetry types".into());
            }
        } else {
            if data.torsions.is_none() {
                return bad("dataset has no torsions".into());
            }
            if self.metric.base == BaseMetric::Euclidean && data.realizations.is_none() {
                return bad("the euclidean metric needs realizations".into());
            }
        }
        if let Some(iso) = &self.isomap {
            if iso.dim == 0 {
                return bad("isomap dimension must be positive".into());
            }
        }
        Ok(())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("distance matrix: {0}")]
    Metric(#[from] MetricError),
    #[error("persistence over F_{prime}: {source}")]
    Persistence { prime: u32, source: HomologyError },
    #[error("circular coordinate: {0}")]
    Circular(HomologyError),
    #[error("isomap: {0}")]
    Isomap(#[from] EmbeddingError),
    #[error("selected subspace {0} is empty")]
    EmptySelection(String),
    #[error("loop through type {ty}: {reason}")]
    Loop { ty: u8, reason: String },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Named text artifacts of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunBundle {
    pub files: BTreeMap<String, String>,
}

impl RunBundle {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }

    pub fn summary(&self) -> &str {
        self.get("summary.txt").unwrap_or("")
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), PipelineError> {
        let io = |path: &Path, source| PipelineError::Io { path: path.display().to_string(), source };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, text) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

/// Looks up `key` in `key = value` text.
pub fn summary_value<'a>(summary: &'a str, key: &str) -> Option<&'a str> {
    summary.lines().find_map(|l| {
        let (k, v) = l.split_once(" = ")?;
        (k == key).then_some(v)
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Dataset indices of the selected points.
    pub selected: Vec<usize>,
    pub labels: Option<Vec<SymmetryLabel>>,
    pub diagrams: Vec<PersistenceDiagram>,
    pub isomap: Option<Isomap>,
    pub circular: Option<CircularCoordinate>,
    /// `(type, winding sum, loop in selection indices)`.
    pub windings: Vec<(u8, f64, Vec<usize>)>,
    pub bundle: RunBundle,
}

/// Distances between the selected points under `metric`, or the synthetic
/// sample's own metric.
pub fn selection_distances(data: &Dataset, selected: &[usize], metric: MetricSpec) -> Result<DistanceMatrix, PipelineError> {
    if let Some(s) = &data.synthetic {
        return Ok(DistanceMatrix::from_fn(selected.len(), |i, j| s.distance(selected[i], selected[j])));
    }
    let d = match metric.base {
        BaseMetric::Angular => {
            let t = data.torsions.as_ref().ok_or_else(|| PipelineError::Config("dataset has no torsions".into()))?;
            let sub: Vec<_> = selected.iter().map(|&i| t[i]).collect();
            distance_matrix(Points::Torsions(&sub), metric)?
        }
        BaseMetric::Euclidean => {
            let r = data.realizations.as_ref().ok_or_else(|| PipelineError::Config("dataset has no realizations".into()))?;
            let sub: Vec<_> = selected.iter().map(|&i| r[i].clone()).collect();
            distance_matrix(Points::Standard(&sub), metric)?
        }
    };
    Ok(d)
}

/// Labels of `data`, computed if absent.
pub fn labels_of(data: &Dataset, tol: &ToleranceConfig) -> Option<Vec<SymmetryLabel>> {
    if let Some(l) = &data.labels {
        return Some(l.clone());
    }
    data.torsions.as_ref().map(|t| classify_all(t, tol))
}

/// Closed vertex path in the VR graph of `d` at scale `r` visiting
/// `members` in the cyclic order of their angle in a planar Isomap
/// embedding of the members alone.
pub fn loop_through(d: &DistanceMatrix, members: &[usize], r: f64) -> Result<Vec<usize>, String> {
    if members.len() < 3 {
        return Err(format!("{} points, need at least 3", members.len()));
    }
    let sub = d.submatrix(members);
    let k = 4.min(members.len() - 1);
    let iso = isomap(&sub, NeighborhoodRule::Knn(k), 2).map_err(|e| e.to_string())?;
    let co = &iso.embedding.coords;
    if iso.embedding.dim < 2 {
        return Err("members embed on a line".into());
    }
    let m = co.len() as f64;
    let cx = co.iter().map(|p| p[0]).sum::<f64>() / m;
    let cy = co.iter().map(|p| p[1]).sum::<f64>() / m;
    let angle = |k: usize| (co[k][1] - cy).atan2(co[k][0] - cx);
    let mut order: Vec<usize> = (0..co.len()).collect();
    order.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)).then(a.cmp(&b)));
    let stops: Vec<usize> = order.iter().map(|&k| members[iso.vertices[k]]).collect();
    let g = neighborhood_graph(d, NeighborhoodRule::Eps(r));
    let mut path = vec![stops[0]];
    for w in 0..stops.len() {
        let (u, v) = (stops[w], stops[(w + 1) % stops.len()]);
        let leg = shortest_path(&g, u, v).ok_or_else(|| format!("no path from {u} to {v} at scale {r}"))?;
        path.extend_from_slice(&leg[1..]);
    }
    if path.len() < 2 {
        path.push(stops[0]);
    }
    Ok(path)
}

/// Runs the configured stages on `data`. Identical inputs give identical
/// bundles.
pub fn run(config: &PipelineConfig, data: &Dataset) -> Result<RunOutput, PipelineError> {
    config.validate(data)?;
    let tol = &config.tolerance;
    let labels = labels_of(data, tol);
    let selected = match (&labels, &data.torsions) {
        (Some(l), Some(t)) => select(&config.subspace, l, t, tol),
        _ => (0..data.len()).collect(),
    };
    if selected.is_empty() {
        return Err(PipelineError::EmptySelection(config.subspace.to_string()));
    }
    let d = selection_distances(data, &selected, config.metric)?;
    let p = &config.persistence;
    let mut diagrams = Vec::new();
    for &prime in &p.primes {
        let diag = persistence(&d, prime, p.max_dim, p.r_max).map_err(|source| PipelineError::Persistence { prime, source })?;
        diagrams.push(diag);
    }
    let iso = match &config.isomap {
        Some(ip) => Some(isomap(&d, ip.rule, ip.dim)?),
        None => None,
    };
    let mut circular = None;
    let mut windings = Vec::new();
    if let Some(cp) = &config.circular {
        let opts = CircularOptions { prime: cp.prime, ..Default::default() };
        let c = circular_coordinate(&d, cp.r, &opts).map_err(PipelineError::Circular)?;
        let l = labels.as_ref();
        for &ty in &cp.winding_types {
            let members: Vec<usize> = (0..selected.len()).filter(|&k| l.is_some_and(|l| l[selected[k]].has(ty))).collect();
            let path = loop_through(&d, &members, cp.r).map_err(|reason| PipelineError::Loop { ty, reason })?;
            let w = winding_sum(&c, &path).map_err(|e| PipelineError::Loop { ty, reason: e.to_string() })?;
            windings.push((ty, w, path));
        }
        circular = Some(c);
    }
    let mut out = RunOutput { selected, labels, diagrams, isomap: iso, circular, windings, bundle: RunBundle::default() };
    out.bundle = render(config, data, &out);
    Ok(out)
}

fn render(config: &PipelineConfig, data: &Dataset, out: &RunOutput) -> RunBundle {
    let mut files = BTreeMap::new();
    let mut s = String::from("# co-topo run summary\n");
    let p = &config.persistence;
    let _ = writeln!(s, "config_hash = {}", config.hash());
    let _ = writeln!(s, "origin = {}", data.origin);
    let _ = writeln!(s, "provenance = {}", data.provenance);
    let _ = writeln!(s, "n_points = {}", data.len());
    if data.origin == Origin::Synthetic {
        let _ = writeln!(s, "metric = synthetic");
    } else {
        let _ = writeln!(s, "metric = {}", base_name(config.metric.base));
    }
    let _ = writeln!(s, "quotient = {}", quotient_name(config.metric.quotient));
    let _ = writeln!(s, "subspace = {}", config.subspace);
    let _ = writeln!(s, "n_selected = {}", out.selected.len());
    let _ = writeln!(s, "r = {}", p.r);
    let _ = writeln!(s, "r_max = {}", p.r_max);
    let _ = writeln!(s, "max_dim = {}", p.max_dim);
    let _ = writeln!(s, "prominence = {}", p.prominence);
    for diag in &out.diagrams {
        let f = diag.field_char();
        let (lo, hi) = plateau_around(diag, p.r);
        let _ = writeln!(s, "betti_p{f} = {}", join(&betti_at(diag, p.r)));
        let _ = writeln!(s, "plateau_p{f} = {lo},{hi}");
        let _ = writeln!(s, "prominent_p{f} = {}", join(&prominent_betti(diag, p.prominence)));
        let _ = writeln!(s, "intervals_p{f} = {}", join(&diag.intervals().iter().map(Vec::len).collect::<Vec<_>>()));
        files.insert(format!("diagram_p{f}.csv"), diag.to_text());
    }
    if let Some(labels) = &out.labels {
        let mut hist = BTreeMap::new();
        let mut strata = BTreeMap::new();
        for l in labels {
            for t in &l.types {
                *hist.entry(*t).or_insert(0usize) += 1;
            }
            for k in &l.strata0 {
                *strata.entry(k.clone()).or_insert(0usize) += 1;
            }
        }
        for t in 1..=18u8 {
            let _ = writeln!(s, "label_type_{t} = {}", hist.get(&t).copied().unwrap_or(0));
        }
        for (k, v) in &strata {
            let _ = writeln!(s, "label_stratum_{} = {v}", k.replace(',', "_"));
        }
        let torsions = data.torsions.as_ref().expect("labels come from torsions");
        let mut chosen = vec![false; labels.len()];
        for &i in &out.selected {
            chosen[i] = true;
        }
        let mut t = String::from("index,types,strata,type1_residual,hemisphere,selected\n");
        for (i, l) in labels.iter().enumerate() {
            let h = match hemisphere_split(&torsions[i], config.tolerance.tol_1d) {
                Hemisphere::One => "1",
                Hemisphere::Two => "2",
                Hemisphere::Boundary => "0",
            };
            let strata: Vec<&str> = l.strata0.iter().map(String::as_str).collect();
            let _ = writeln!(t, "{i},{},{},{},{h},{}", l.types_string(), strata.join(" "), l.type1_residual, u8::from(chosen[i]));
        }
        files.insert("labels.csv".into(), t);
    }
    if let Some(iso) = &out.isomap {
        let e = &iso.embedding;
        let q = &iso.distortion.quantiles;
        let _ = writeln!(s, "isomap_dim = {}", e.dim);
        let _ = writeln!(s, "isomap_dropped = {}", iso.dropped);
        let _ = writeln!(s, "isomap_spectrum = {}", join(&e.spectrum));
        let _ = writeln!(s, "distortion_mean_abs = {}", iso.distortion.mean_abs);
        for (name, v) in ["q05", "q25", "q50", "q75", "q95"].iter().zip(q) {
            let _ = writeln!(s, "distortion_{name} = {v}");
        }
        let ids: Vec<usize> = iso.vertices.iter().map(|&k| out.selected[k]).collect();
        files.insert("embedding.csv".into(), e.to_text(&ids));
        let mut dist = String::from("i,j,geodesic,embedded,log_ratio\n");
        for ed in &iso.distortion.edges {
            let _ = writeln!(dist, "{},{},{},{},{}", out.selected[ed.i], out.selected[ed.j], ed.geodesic, ed.embedded, ed.log_ratio);
        }
        files.insert("distortion.csv".into(), dist);
    }
    if let Some(c) = &out.circular {
        let _ = writeln!(s, "circular_prime = {}", c.prime);
        let _ = writeln!(s, "circular_r = {}", c.scale);
        let _ = writeln!(s, "circular_interval = {},{}", c.source_interval.birth, c.source_interval.death);
        for (ty, w, path) in &out.windings {
            let _ = writeln!(s, "winding_type_{ty} = {w}");
            let _ = writeln!(s, "winding_type_{ty}_path_length = {}", path.len() - 1);
        }
        let mut t = String::from("index,value\n");
        for (k, v) in c.values.iter().enumerate() {
            let _ = writeln!(t, "{},{v}", out.selected[k]);
        }
        files.insert("circular.csv".into(), t);
    }
    files.insert("summary.txt".into(), s);
    RunBundle { files }
}
