//! Persistence of the subspaces under the cyclic and dihedral quotient
//! metrics, side by side with the cell-complex model.

use std::fmt::Write as _;

use cyclo_topo::homology::cw::models;
use cyclo_topo::homology::{betti_at, cw_betti, persistence, plateau_around};
use cyclo_topo::metrics::{BaseMetric, MetricSpec, Quotient};
use cyclo_topo::symmetry::ToleranceConfig;

use crate::dataset::Dataset;
use crate::pipeline::{base_name, labels_of, quotient_name, select, selection_distances, PipelineError, Subspace};

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientOptions {
    pub base: BaseMetric,
    pub primes: Vec<u32>,
    pub max_dim: usize,
    pub r: f64,
    pub r_max: f64,
    /// Cutoff for the `D8` rows, whose distances are smaller.
    pub r_max_dihedral: f64,
    pub tolerance: ToleranceConfig,
}

impl Default for QuotientOptions {
    fn default() -> Self {
        Self { base: BaseMetric::Angular, primes: vec![2, 3], max_dim: 2, r: 2.0, r_max: 3.5, r_max_dihedral: 3.0, tolerance: ToleranceConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldBetti {
    pub prime: u32,
    pub betti: Vec<usize>,
    pub plateau: (f64, f64),
    /// Betti numbers of the cell-complex model over the same field.
    pub model: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientRow {
    pub subspace: Subspace,
    pub quotient: Quotient,
    pub n: usize,
    pub fields: Vec<FieldBetti>,
}

impl QuotientRow {
    pub fn betti(&self, prime: u32) -> Option<&[usize]> {
        self.fields.iter().find(|f| f.prime == prime).map(|f| f.betti.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientReport {
    pub base: BaseMetric,
    pub r: f64,
    pub r_max: f64,
    pub r_max_dihedral: f64,
    pub rows: Vec<QuotientRow>,
}

impl QuotientReport {
    pub fn row(&self, subspace: &Subspace, quotient: Quotient) -> Option<&QuotientRow> {
        self.rows.iter().find(|r| &r.subspace == subspace && r.quotient == quotient)
    }

    /// CSV with header `subspace,group,n,field,betti,model,plateau_lo,plateau_hi`;
    /// Betti lists are space separated.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# base = {}, r = {}, r_max = {}, r_max_dihedral = {}\n",
            base_name(self.base),
            self.r,
            self.r_max,
            self.r_max_dihedral
        );
        s.push_str("subspace,group,n,field,betti,model,plateau_lo,plateau_hi\n");
        let sp = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        for row in &self.rows {
            for f in &row.fields {
                let model = f.model.as_deref().map(sp).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{model},{},{}",
                    row.subspace,
                    quotient_name(row.quotient),
                    row.n,
                    f.prime,
                    sp(&f.betti),
                    f.plateau.0,
                    f.plateau.1
                );
            }
        }
        s
    }
}

fn cyclic_model(subspace: &Subspace) -> Option<cyclo_topo::homology::CWComplexDescription> {
    let parts: &[&str] = match subspace {
        Subspace::A => &["A"],
        Subspace::AB => &["A", "B"],
        Subspace::AC => &["A", "C"],
        Subspace::BC => &["B", "C"],
        Subspace::Full => &["A", "B", "C"],
        _ => return None,
    };
    models::cyclic_quotient_piece(parts)
}

/// Rows in order: `A`, `A∪B`, `A∪C`, `B∪C`, full under `C8`, then full,
/// `A`, `B`, `C` under `D8`.
pub fn compare_quotients(data: &Dataset, opts: &QuotientOptions) -> Result<QuotientReport, PipelineError> {
    match opts.base {
        BaseMetric::Angular if data.torsions.is_none() => return Err(PipelineError::Config("dataset has no torsions".into())),
        BaseMetric::Euclidean if data.realizations.is_none() => {
            return Err(PipelineError::Config("the euclidean metric needs realizations".into()))
        }
        _ => {}
    }
    if opts.primes.is_empty() || !(opts.r >= 0.0 && opts.r <= opts.r_max.min(opts.r_max_dihedral)) {
        return Err(PipelineError::Config("need primes and 0 <= r <= r_max, r_max_dihedral".into()));
    }
    let tol = &opts.tolerance;
    let labels = labels_of(data, tol).expect("torsions checked above");
    let torsions = data.torsions.as_ref().expect("torsions checked above");
    let plan = [
        (Subspace::A, Quotient::C8),
        (Subspace::AB, Quotient::C8),
        (Subspace::AC, Quotient::C8),
        (Subspace::BC, Quotient::C8),
        (Subspace::Full, Quotient::C8),
        (Subspace::Full, Quotient::D8),
        (Subspace::A, Quotient::D8),
        (Subspace::B, Quotient::D8),
        (Subspace::C, Quotient::D8),
    ];
    let mut rows = Vec::new();
    for (subspace, quotient) in plan {
        let idx = select(&subspace, &labels, torsions, tol);
        if idx.is_empty() {
            return Err(PipelineError::EmptySelection(subspace.to_string()));
        }
        let d = selection_distances(data, &idx, MetricSpec::new(opts.base, quotient))?;
        let model = if quotient == Quotient::C8 { cyclic_model(&subspace) } else { None };
        let r_max = if quotient == Quotient::D8 { opts.r_max_dihedral } else { opts.r_max };
        let mut fields = Vec::new();
        for &prime in &opts.primes {
            let diag = persistence(&d, prime, opts.max_dim, r_max).map_err(|source| PipelineError::Persistence { prime, source })?;
            let model = model.as_ref().map(|m| cw_betti(m, prime)).transpose().map_err(|source| PipelineError::Persistence { prime, source })?;
            fields.push(FieldBetti { prime, betti: betti_at(&diag, opts.r), plateau: plateau_around(&diag, opts.r), model });
        }
        log::info!("{subspace}/{}: {} points", quotient_name(quotient), idx.len());
        rows.push(QuotientRow { subspace, quotient, n: idx.len(), fields });
    }
    Ok(QuotientReport { base: opts.base, r: opts.r, r_max: opts.r_max, r_max_dihedral: opts.r_max_dihedral, rows })
}
