//! Symmetry types of torsion sequences, the subspaces `A`, `B`, `C`, the
//! hemisphere split and a census of the zero-dimensional strata.
//!
//! The patterns are data: see `data/symmetry_patterns.txt` and
//! `docs/symmetry-patterns.md`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    chain_from_torsions, constraint_residual, torsions_of_points, wrap_angle, LinkageParams, TorsionSequence, RING,
};
use crate::metrics::circular_distance;

const BUILTIN_PATTERNS: &str = include_str!("../data/symmetry_patterns.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key {0} is defined with different tiers")]
    TierMismatch(String),
    #[error("complement of undefined key {0}")]
    UnknownComplement(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tier {
    TwoD,
    OneD,
    ZeroD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Var { var: u8, negated: bool },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// Relation between two entries of a pattern: `σ_i = σ_j`, `σ_i = -σ_j`, or
/// `σ_i = 0` (with `j = i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equality {
    Same(usize, usize),
    Opposite(usize, usize),
    Zero(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternConstraint {
    pub entries: Option<[Entry; RING]>,
    pub signs: Option<[Sign; RING]>,
    /// Signed comparisons between pattern variables.
    pub order: Vec<(u8, u8, Relation)>,
    pub shift_invariant: bool,
    pub mirror_variant: bool,
}

impl PatternConstraint {
    /// Equalities implied by the entries, each occurrence compared with the
    /// first occurrence of its variable.
    pub fn equalities(&self) -> Vec<Equality> {
        let Some(entries) = &self.entries else { return Vec::new() };
        let mut first: BTreeMap<u8, (usize, bool)> = BTreeMap::new();
        let mut out = Vec::new();
        for (j, e) in entries.iter().enumerate() {
            match *e {
                Entry::Zero => out.push(Equality::Zero(j)),
                Entry::Var { var, negated } => match first.get(&var) {
                    None => {
                        first.insert(var, (j, negated));
                    }
                    Some(&(i, neg_i)) => {
                        out.push(if neg_i == negated { Equality::Same(i, j) } else { Equality::Opposite(i, j) })
                    }
                },
            }
        }
        out
    }

    /// Index and sign of the first occurrence of each variable.
    fn first_occurrence(&self, var: u8) -> Option<(usize, bool)> {
        self.entries.as_ref()?.iter().enumerate().find_map(|(i, e)| match *e {
            Entry::Var { var: v, negated } if v == var => Some((i, negated)),
            _ => None,
        })
    }

    /// Smallest tolerance at which `tau` satisfies this constraint in the
    /// given frame.
    pub fn frame_residual(&self, tau: &[f64; RING]) -> f64 {
        let mut r: f64 = 0.0;
        for eq in self.equalities() {
            r = r.max(match eq {
                Equality::Same(i, j) => circular_distance(tau[i], tau[j]),
                Equality::Opposite(i, j) => circular_distance(tau[i], -tau[j]),
                Equality::Zero(i) => tau[i].abs(),
            });
        }
        if let Some(signs) = &self.signs {
            for (x, s) in tau.iter().zip(signs) {
                r = r.max(match s {
                    Sign::Plus => (-x).max(0.0),
                    Sign::Minus => x.max(0.0),
                    Sign::Free => 0.0,
                });
            }
        }
        for &(u, v, rel) in &self.order {
            let value = |var: u8| {
                let (i, neg) = self.first_occurrence(var).expect("validated at parse time");
                if neg {
                    -tau[i]
                } else {
                    tau[i]
                }
            };
            let (a, b) = (value(u), value(v));
            r = r.max(match rel {
                Relation::Le => (a - b).max(0.0),
                Relation::Ge => (b - a).max(0.0),
                Relation::Eq => wrap_angle(a - b).abs(),
            });
        }
        r
    }

    /// Minimum of [`Self::frame_residual`] over the shifts and mirror
    /// variants this constraint allows; also returns the minimising frame as
    /// `(shift, mirrored)`.
    pub fn residual(&self, sigma: &TorsionSequence) -> (f64, usize, bool) {
        let a = sigma.angles();
        let shifts = if self.shift_invariant { RING } else { 1 };
        let mut best = (f64::INFINITY, 0, false);
        for mirrored in [false, true] {
            if mirrored && !self.mirror_variant {
                continue;
            }
            for k in 0..shifts {
                let tau: [f64; RING] = std::array::from_fn(|i| {
                    let x = a[(i + k) % RING];
                    if mirrored {
                        -x
                    } else {
                        x
                    }
                });
                let r = self.frame_residual(&tau);
                if r < best.0 {
                    best = (r, k, mirrored);
                }
            }
        }
        best
    }

    fn variables(&self) -> Vec<u8> {
        let mut v: Vec<u8> = self
            .entries
            .iter()
            .flatten()
            .filter_map(|e| match e {
                Entry::Var { var, .. } => Some(*var),
                Entry::Zero => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternDefinition {
    pub key: String,
    pub tier: Tier,
    pub alternatives: Vec<PatternConstraint>,
    /// For `complement=k`: the key whose failure defines this one.
    pub complement_of: Option<String>,
    pub cardinality: Option<usize>,
}

/// Parsed pattern file: numbered types and zero-dimensional strata.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    pub types: Vec<(u8, PatternDefinition)>,
    pub strata: Vec<PatternDefinition>,
}

impl PatternSet {
    pub fn builtin() -> &'static PatternSet {
        static SET: OnceLock<PatternSet> = OnceLock::new();
        SET.get_or_init(|| PatternSet::parse(BUILTIN_PATTERNS).expect("builtin pattern file parses"))
    }

    pub fn parse(text: &str) -> Result<Self, PatternError> {
        let mut types: BTreeMap<u8, PatternDefinition> = BTreeMap::new();
        let mut strata: Vec<PatternDefinition> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| PatternError::Syntax { line: lineno + 1, message };
            let mut tokens = line.split_whitespace();
            let kind = tokens.next().ok_or_else(|| err("missing kind".into()))?;
            let key = tokens.next().ok_or_else(|| err("missing key".into()))?.to_string();
            let tier = match tokens.next() {
                Some("2d") => Tier::TwoD,
                Some("1d") => Tier::OneD,
                Some("0d") => Tier::ZeroD,
                other => return Err(err(format!("bad tier {other:?}"))),
            };
            let mut c = PatternConstraint {
                entries: None,
                signs: None,
                order: Vec::new(),
                shift_invariant: true,
                mirror_variant: false,
            };
            let mut complement = None;
            let mut cardinality = None;
            let mut order_src = None;
            for t in tokens {
                let (name, value) = t.split_once('=').unwrap_or((t, ""));
                match name {
                    "pattern" => c.entries = Some(parse_entries(value).map_err(err)?),
                    "signs" => c.signs = Some(parse_signs(value).map_err(err)?),
                    "order" => order_src = Some(value.to_string()),
                    "mirror" => c.mirror_variant = true,
                    "noshift" => c.shift_invariant = false,
                    "complement" => complement = Some(value.to_string()),
                    "cardinality" => {
                        cardinality = Some(value.parse().map_err(|_| err(format!("bad cardinality {value}")))?)
                    }
                    other => return Err(err(format!("unknown field {other}"))),
                }
            }
            if let Some(src) = order_src {
                for rel in src.split(',') {
                    let (u, r, v) = if let Some((u, v)) = rel.split_once("<=") {
                        (u, Relation::Le, v)
                    } else if let Some((u, v)) = rel.split_once(">=") {
                        (u, Relation::Ge, v)
                    } else if let Some((u, v)) = rel.split_once('=') {
                        (u, Relation::Eq, v)
                    } else {
                        return Err(err(format!("bad relation {rel}")));
                    };
                    let (u, v) = (parse_var(u).map_err(err)?, parse_var(v).map_err(err)?);
                    if c.first_occurrence(u).is_none() || c.first_occurrence(v).is_none() {
                        return Err(err(format!("relation {rel} uses a variable absent from the pattern")));
                    }
                    c.order.push((u, v, r));
                }
            }
            if complement.is_none() && c.entries.is_none() && c.signs.is_none() {
                return Err(err("line has no constraint".into()));
            }
            let def = PatternDefinition {
                key: key.clone(),
                tier,
                alternatives: if complement.is_some() { Vec::new() } else { vec![c] },
                complement_of: complement,
                cardinality,
            };
            match kind {
                "type" => {
                    let id: u8 = key.parse().map_err(|_| err(format!("bad type number {key}")))?;
                    match types.get_mut(&id) {
                        Some(existing) => {
                            if existing.tier != def.tier {
                                return Err(PatternError::TierMismatch(key));
                            }
                            existing.alternatives.extend(def.alternatives);
                        }
                        None => {
                            types.insert(id, def);
                        }
                    }
                }
                "stratum" => match strata.iter_mut().find(|s| s.key == key) {
                    Some(existing) => existing.alternatives.extend(def.alternatives),
                    None => strata.push(def),
                },
                other => return Err(err(format!("unknown kind {other}"))),
            }
        }
        for def in types.values() {
            if let Some(k) = &def.complement_of {
                let ok = k.parse::<u8>().ok().is_some_and(|id| types.get(&id).is_some_and(|d| d.complement_of.is_none()));
                if !ok {
                    return Err(PatternError::UnknownComplement(k.clone()));
                }
            }
        }
        Ok(Self { types: types.into_iter().collect(), strata })
    }

    pub fn type_def(&self, id: u8) -> Option<&PatternDefinition> {
        self.types.iter().find(|(k, _)| *k == id).map(|(_, d)| d)
    }
}

fn parse_var(s: &str) -> Result<u8, String> {
    let b = s.as_bytes();
    if b.len() == 1 && b[0].is_ascii_lowercase() {
        Ok(b[0])
    } else {
        Err(format!("bad variable {s}"))
    }
}

fn parse_entries(s: &str) -> Result<[Entry; RING], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != RING {
        return Err(format!("pattern needs {RING} entries, got {}", parts.len()));
    }
    let mut out = [Entry::Zero; RING];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = match p {
            "0" => Entry::Zero,
            _ => match p.strip_prefix('-') {
                Some(v) => Entry::Var { var: parse_var(v)?, negated: true },
                None => Entry::Var { var: parse_var(p)?, negated: false },
            },
        };
    }
    Ok(out)
}

fn parse_signs(s: &str) -> Result<[Sign; RING], String> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() != RING {
        return Err(format!("signs need {RING} characters"));
    }
    let mut out = [Sign::Free; RING];
    for (o, c) in out.iter_mut().zip(chars) {
        *o = match c {
            '+' => Sign::Plus,
            '-' => Sign::Minus,
            '*' => Sign::Free,
            _ => return Err(format!("bad sign {c}")),
        };
    }
    Ok(out)
}

/// Matching tolerances in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub tol_2d: f64,
    pub tol_1d: f64,
    pub tol_0d: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { tol_2d: 2.5f64.to_radians(), tol_1d: 5f64.to_radians(), tol_0d: 5f64.to_radians() }
    }
}

impl ToleranceConfig {
    pub fn for_tier(&self, tier: Tier) -> f64 {
        match tier {
            Tier::TwoD => self.tol_2d,
            Tier::OneD => self.tol_1d,
            Tier::ZeroD => self.tol_0d,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.tol_2d, self.tol_1d, self.tol_0d].iter().all(|t| *t >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryLabel {
    pub types: BTreeSet<u8>,
    pub strata0: BTreeSet<String>,
    /// Residual of the type-1 pattern, zero on `A ∪ B`.
    pub type1_residual: f64,
}

impl SymmetryLabel {
    pub fn has(&self, t: u8) -> bool {
        self.types.contains(&t)
    }

    pub fn types_string(&self) -> String {
        self.types.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// Residual of a pattern definition: the smallest tolerance at which it
/// matches. Complements have no residual.
pub fn definition_residual(def: &PatternDefinition, sigma: &TorsionSequence) -> f64 {
    def.alternatives.iter().map(|c| c.residual(sigma).0).fold(f64::INFINITY, f64::min)
}

pub fn classify(sigma: &TorsionSequence, tol: &ToleranceConfig) -> SymmetryLabel {
    classify_with(PatternSet::builtin(), sigma, tol)
}

pub fn classify_with(set: &PatternSet, sigma: &TorsionSequence, tol: &ToleranceConfig) -> SymmetryLabel {
    let mut types = BTreeSet::new();
    let mut residuals: BTreeMap<u8, f64> = BTreeMap::new();
    for (id, def) in &set.types {
        if def.complement_of.is_none() {
            let r = definition_residual(def, sigma);
            residuals.insert(*id, r);
            if r <= tol.for_tier(def.tier) {
                types.insert(*id);
            }
        }
    }
    for (id, def) in &set.types {
        if let Some(k) = &def.complement_of {
            let base: u8 = k.parse().expect("validated at parse time");
            if residuals[&base] > tol.for_tier(def.tier) {
                types.insert(*id);
            }
        }
    }
    let strata0 = set
        .strata
        .iter()
        .filter(|s| definition_residual(s, sigma) <= tol.for_tier(s.tier))
        .map(|s| s.key.clone())
        .collect();
    let type1_residual = residuals.get(&1).copied().unwrap_or(f64::INFINITY);
    SymmetryLabel { types, strata0, type1_residual }
}

pub fn classify_all(sigmas: &[TorsionSequence], tol: &ToleranceConfig) -> Vec<SymmetryLabel> {
    sigmas.par_iter().map(|s| classify(s, tol)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Types(BTreeSet<u8>),
    /// Types 3 or 4.
    A,
    /// Type 1 but neither 3 nor 4.
    B,
    /// Type 2; in closure mode also type-1 points off the type-1 locus.
    C,
}

impl Selector {
    pub fn types(ts: &[u8]) -> Self {
        Self::Types(ts.iter().copied().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    Any,
    Closure,
}

/// Type-1 residuals above this fraction of `tol_2d` count as off the
/// type-1 locus for the closure of `C`.
pub const CLOSURE_FRACTION: f64 = 1e-2;

fn selects(label: &SymmetryLabel, selector: &Selector, mode: SelectMode, tol: &ToleranceConfig) -> bool {
    match selector {
        Selector::Types(ts) => ts.iter().any(|t| label.has(*t)),
        Selector::A => label.has(3) || label.has(4),
        Selector::B => label.has(1) && !label.has(3) && !label.has(4),
        Selector::C => {
            label.has(2) || (mode == SelectMode::Closure && label.type1_residual > CLOSURE_FRACTION * tol.tol_2d)
        }
    }
}

pub fn subspace_indices(
    labels: &[SymmetryLabel],
    selector: &Selector,
    mode: SelectMode,
    tol: &ToleranceConfig,
) -> Vec<usize> {
    labels.iter().enumerate().filter(|(_, l)| selects(l, selector, mode, tol)).map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hemisphere {
    One,
    Two,
    Boundary,
}

/// Sign of `Σ σ_even - Σ σ_odd`, with `Boundary` when its magnitude is at
/// most `tol`.
pub fn hemisphere_split(sigma: &TorsionSequence, tol: f64) -> Hemisphere {
    let a = sigma.angles();
    let diff: f64 = (0..RING).map(|i| if i % 2 == 0 { a[i] } else { -a[i] }).sum();
    if diff.abs() <= tol {
        Hemisphere::Boundary
    } else if diff > 0.0 {
        Hemisphere::One
    } else {
        Hemisphere::Two
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusOptions {
    /// Seeds are sample points whose stratum residual is at most this.
    pub seed_radius: f64,
    pub max_iters: usize,
    /// Convergence threshold on the closure residual.
    pub solve_tol: f64,
    /// Solutions closer than this in every torsion are merged.
    pub merge_tol: f64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self { seed_radius: 0.6, max_iters: 100, solve_tol: 1e-11, merge_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumCensus {
    pub key: String,
    pub expected: Option<usize>,
    /// Sample points within `tol_0d` of the stratum.
    pub in_ball: usize,
    pub seeds: usize,
    /// Distinct solutions refined from the seeds.
    pub solutions: Vec<TorsionSequence>,
}

/// Refines sample points near each zero-dimensional stratum to exact
/// solutions of the ring closure restricted to the stratum's pattern and
/// counts the distinct ones.
pub fn strata_census(
    sigmas: &[TorsionSequence],
    params: &LinkageParams,
    tol: &ToleranceConfig,
    opts: &CensusOptions,
) -> Vec<StratumCensus> {
    let set = PatternSet::builtin();
    set.strata
        .iter()
        .map(|s| {
            let mut in_ball = 0;
            let mut seeds = Vec::new();
            for sigma in sigmas {
                for c in &s.alternatives {
                    let (r, shift, mirrored) = c.residual(sigma);
                    if r <= tol.for_tier(s.tier) {
                        in_ball += 1;
                    }
                    if r <= opts.seed_radius {
                        seeds.push((c, *sigma, shift, mirrored));
                    }
                }
            }
            let found: Vec<TorsionSequence> = seeds
                .par_iter()
                .filter_map(|(c, sigma, shift, mirrored)| solve_pattern(c, sigma, *shift, *mirrored, params, opts))
                .collect();
            let mut solutions: Vec<TorsionSequence> = Vec::new();
            for f in found {
                let dup = solutions.iter().any(|g| {
                    (0..RING).all(|i| circular_distance(f.get(i), g.get(i)) <= opts.merge_tol)
                });
                if !dup {
                    solutions.push(f);
                }
            }
            solutions.sort_by(|a, b| a.angles().partial_cmp(b.angles()).unwrap_or(std::cmp::Ordering::Equal));
            StratumCensus { key: s.key.clone(), expected: s.cardinality, in_ball, seeds: seeds.len(), solutions }
        })
        .collect()
}

/// Gauss–Newton on the pattern variables of `c` in the frame `(shift,
/// mirrored)`, starting from the least-squares fit to `sigma`. Returns the
/// closed configuration's torsions in the original frame.
pub fn solve_pattern(
    c: &PatternConstraint,
    sigma: &TorsionSequence,
    shift: usize,
    mirrored: bool,
    params: &LinkageParams,
    opts: &CensusOptions,
) -> Option<TorsionSequence> {
    let entries = c.entries?;
    let vars = c.variables();
    let a = sigma.angles();
    let tau: [f64; RING] = std::array::from_fn(|i| {
        let x = a[(i + shift) % RING];
        if mirrored {
            -x
        } else {
            x
        }
    });
    let mut v: Vec<f64> = vars
        .iter()
        .map(|&var| {
            let vals: Vec<f64> = entries
                .iter()
                .enumerate()
                .filter_map(|(i, e)| match *e {
                    Entry::Var { var: w, negated } if w == var => Some(if negated { -tau[i] } else { tau[i] }),
                    _ => None,
                })
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect();
    let build = |v: &[f64]| -> [f64; RING] {
        std::array::from_fn(|i| match entries[i] {
            Entry::Zero => 0.0,
            Entry::Var { var, negated } => {
                let x = v[vars.iter().position(|&w| w == var).expect("variable listed")];
                if negated {
                    -x
                } else {
                    x
                }
            }
        })
    };
    let l2 = params.bond_length() * params.bond_length();
    let residual = |v: &[f64]| -> Option<[f64; 6]> {
        let t = TorsionSequence::new(build(v));
        let x = chain_from_torsions(&t, params);
        let cr = constraint_residual(&x, params);
        let s = torsions_of_points(&x).ok()?;
        Some([
            cr[7] / l2,
            cr[14] / l2,
            cr[15] / l2,
            wrap_angle(s.get(6) - t.get(6)),
            wrap_angle(s.get(7) - t.get(7)),
            wrap_angle(s.get(0) - t.get(0)),
        ])
    };
    let norm = |r: &[f64; 6]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let m = v.len();
    let mut r = residual(&v)?;
    for _ in 0..opts.max_iters {
        if norm(&r) <= opts.solve_tol {
            break;
        }
        let h = 1e-7;
        let mut jac = vec![[0.0; 6]; m];
        for k in 0..m {
            let mut vp = v.clone();
            vp[k] += h;
            let rp = residual(&vp)?;
            for e in 0..6 {
                jac[k][e] = (rp[e] - r[e]) / h;
            }
        }
        // Normal equations, at most two unknowns in practice.
        let mut jtj = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut jtr = nalgebra::DVector::<f64>::zeros(m);
        for p in 0..m {
            for q in 0..m {
                jtj[(p, q)] = (0..6).map(|e| jac[p][e] * jac[q][e]).sum();
            }
            jtr[p] = (0..6).map(|e| jac[p][e] * r[e]).sum();
        }
        let step = jtj.lu().solve(&jtr)?;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let cand: Vec<f64> = v.iter().zip(step.iter()).map(|(a, d)| a - lambda * d).collect();
            if let Some(rc) = residual(&cand) {
                if norm(&rc) < norm(&r) {
                    v = cand;
                    r = rc;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if norm(&r) > opts.solve_tol {
        return None;
    }
    let t = build(&v);
    let back: [f64; RING] = std::array::from_fn(|i| {
        let x = t[(i + RING - shift) % RING];
        if mirrored {
            -x
        } else {
            x
        }
    });
    Some(TorsionSequence::new(back))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{act_on_torsions, GroupElement};
    use proptest::prelude::*;

    fn seq(a: [f64; RING]) -> TorsionSequence {
        TorsionSequence::new(a)
    }

    #[test]
    fn builtin_parses() {
        let set = PatternSet::builtin();
        assert_eq!(set.types.len(), 18);
        assert_eq!(set.strata.len(), 7);
        let cards: Vec<usize> = set.strata.iter().map(|s| s.cardinality.unwrap()).collect();
        assert_eq!(cards, vec![2, 4, 4, 8, 8, 8, 8]);
        assert_eq!(set.type_def(5).unwrap().alternatives.len(), 2);
        assert_eq!(set.type_def(16).unwrap().alternatives.len(), 2);
        assert_eq!(set.type_def(2).unwrap().complement_of.as_deref(), Some("1"));
    }

    #[test]
    fn parse_errors() {
        assert!(PatternSet::parse("type 1 3d pattern=a,b,c,d,a,b,c,d").is_err());
        assert!(PatternSet::parse("type 1 2d pattern=a,b,c").is_err());
        assert!(PatternSet::parse("type 1 2d signs=+-").is_err());
        assert!(PatternSet::parse("type 1 2d pattern=a,b,c,d,a,b,c,d order=a<=z").is_err());
        assert!(PatternSet::parse("type 2 2d complement=1").is_err());
        assert!(PatternSet::parse("type 1 2d").is_err());
    }

    #[test]
    fn equalities_of_type_13() {
        let set = PatternSet::builtin();
        let c = &set.type_def(13).unwrap().alternatives[0];
        let eq = c.equalities();
        assert_eq!(eq.len(), 4);
        assert!(eq.contains(&Equality::Opposite(0, 7)));
        assert!(eq.contains(&Equality::Opposite(3, 4)));
    }

    #[test]
    fn crown_like_alternating() {
        let a = 1.553;
        let l = classify(&seq([a, -a, a, -a, a, -a, a, -a]), &ToleranceConfig::default());
        for t in [1, 3, 13, 14] {
            assert!(l.has(t), "{t}: {:?}", l.types);
        }
        assert!(!l.has(2));
        assert!(l.strata0.contains("3,13,14"));
    }

    #[test]
    fn equator_strata() {
        let a = 1.0;
        let tol = ToleranceConfig::default();
        let l = classify(&seq([a, 0.0, -a, 0.0, a, 0.0, -a, 0.0]), &tol);
        for t in [1, 14, 15] {
            assert!(l.has(t), "{t}: {:?}", l.types);
        }
        assert!(!l.has(13));
        assert!(l.strata0.contains("14,15"));
        let l = classify(&seq([a, a, -a, -a, a, a, -a, -a]), &tol);
        for t in [1, 13, 15] {
            assert!(l.has(t), "{t}: {:?}", l.types);
        }
        assert!(!l.has(14));
        assert!(l.strata0.contains("13,15"));
    }

    #[test]
    fn generic_sequences() {
        let tol = ToleranceConfig::default();
        let l = classify(&seq([0.1, 0.7, -1.3, 0.4, 1.1, -0.2, 0.9, -0.8]), &tol);
        assert_eq!(l.types, BTreeSet::from([2, 8]));
        assert!(l.strata0.is_empty());
        let l = classify(&seq([0.1, 0.7, 1.3, -0.4, -1.1, 0.2, -0.9, -0.8]), &tol);
        assert_eq!(l.types, BTreeSet::from([2]));
        assert!(l.strata0.is_empty());
    }

    #[test]
    fn type_four_borders_three() {
        // (+, -, 0⁻, -) with γ the largest of the negatives.
        let l = classify(&seq([1.2, -0.9, -0.01, -0.5, 1.2, -0.9, -0.01, -0.5]), &ToleranceConfig::default());
        assert!(l.has(4) && l.has(3), "{:?}", l.types);
        let l = classify(&seq([1.2, -0.9, -0.3, -0.5, 1.2, -0.9, -0.3, -0.5]), &ToleranceConfig::default());
        assert!(l.has(4) && !l.has(3) && !l.has(5) && !l.has(6), "{:?}", l.types);
        let l = classify(&seq([1.2, -0.3, -0.6, -0.9, 1.2, -0.3, -0.6, -0.9]), &ToleranceConfig::default());
        assert!(l.has(5) && !l.has(4), "{:?}", l.types);
        let l = classify(&seq([1.2, -0.3, -0.9, -0.6, 1.2, -0.3, -0.9, -0.6]), &ToleranceConfig::default());
        assert!(l.has(6) && !l.has(5), "{:?}", l.types);
        let l = classify(&seq([-1.2, 0.3, 0.9, 0.6, -1.2, 0.3, 0.9, 0.6]), &ToleranceConfig::default());
        assert!(l.has(6), "{:?}", l.types);
    }

    #[test]
    fn sign_only_types() {
        let l = classify(&seq([0.5, 0.6, -0.7, 0.4, 0.9, -0.2, 0.3, -0.8]), &ToleranceConfig::default());
        assert!(l.has(8) && l.has(2), "{:?}", l.types);
        let l = classify(&seq([-0.5, -0.6, 0.7, -0.4, -0.9, 0.2, -0.3, 0.8]), &ToleranceConfig::default());
        assert!(l.has(9), "{:?}", l.types);
    }

    #[test]
    fn subspaces() {
        let tol = ToleranceConfig::default();
        let generic = classify(&seq([0.1, 0.7, -1.3, 0.4, 1.1, -0.2, 0.9, -0.8]), &tol);
        let labels = vec![generic.clone(), generic];
        assert!(subspace_indices(&labels, &Selector::A, SelectMode::Any, &tol).is_empty());
        assert_eq!(subspace_indices(&labels, &Selector::C, SelectMode::Closure, &tol), vec![0, 1]);
        let a = 1.553;
        let pole = classify(&seq([a, -a, a, -a, a, -a, a, -a]), &tol);
        let labels = vec![pole];
        assert_eq!(subspace_indices(&labels, &Selector::A, SelectMode::Any, &tol), vec![0]);
        assert!(subspace_indices(&labels, &Selector::B, SelectMode::Any, &tol).is_empty());
        assert_eq!(subspace_indices(&labels, &Selector::types(&[13, 99]), SelectMode::Any, &tol), vec![0]);
        let near = classify(&seq([0.5, -0.2, 0.3, -0.4, 0.52, -0.2, 0.3, -0.4]), &tol);
        assert!(near.has(1));
        assert_eq!(subspace_indices(&[near], &Selector::C, SelectMode::Closure, &tol), vec![0]);
    }

    #[test]
    fn hemispheres() {
        let tol = 5f64.to_radians();
        assert_eq!(hemisphere_split(&seq([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]), tol), Hemisphere::One);
        assert_eq!(hemisphere_split(&seq([-1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]), tol), Hemisphere::Two);
        let (a, b) = (0.8, 0.3);
        assert_eq!(hemisphere_split(&seq([a, b, -a, -b, a, b, -a, -b]), tol), Hemisphere::Boundary);
        let (c, d) = (1.1, -0.4);
        assert_eq!(hemisphere_split(&seq([a, b, c, d, -a, -b, -c, -d]), tol), Hemisphere::Boundary);
    }

    #[test]
    fn solver_finds_crown() {
        let set = PatternSet::builtin();
        let s = set.strata.iter().find(|s| s.key == "3,13,14").unwrap();
        let params = LinkageParams::cyclooctane();
        let guess = seq([1.5, -1.5, 1.5, -1.5, 1.5, -1.5, 1.5, -1.5]);
        let sol = solve_pattern(&s.alternatives[0], &guess, 0, false, &params, &CensusOptions::default()).unwrap();
        let x = chain_from_torsions(&sol, &params);
        assert!(constraint_residual(&x, &params).iter().all(|r| r.abs() < 1e-9));
        let ref_crown = torsions_of_points(&crate::geometry::crown(&params, true).unwrap()).unwrap();
        let a = sol.get(0).abs();
        assert!((a - ref_crown.get(0).abs()).abs() < 1e-8, "{a} {}", ref_crown);
    }

    fn arb_angle() -> impl Strategy<Value = f64> {
        -3.0f64..3.0
    }

    proptest! {
        #[test]
        fn type_one_construction(a in arb_angle(), b in arb_angle(), c in arb_angle(), d in arb_angle()) {
            let l = classify(&seq([a, b, c, d, a, b, c, d]), &ToleranceConfig::default());
            prop_assert!(l.has(1));
            prop_assert!(!l.has(2));
        }

        #[test]
        fn exactly_one_of_one_and_two(v in proptest::array::uniform8(arb_angle())) {
            let l = classify(&seq(v), &ToleranceConfig::default());
            prop_assert!(l.has(1) != l.has(2));
            if (3..=7).any(|t| l.has(t)) {
                prop_assert!(l.has(1));
            }
        }

        #[test]
        fn shift_invariance(v in proptest::array::uniform8(arb_angle()), k in 0i64..8) {
            let s = seq(v);
            let tol = ToleranceConfig::default();
            let t = act_on_torsions(&GroupElement::new(k, false), &s);
            let (a, b) = (classify(&s, &tol), classify(&t, &tol));
            prop_assert_eq!(a.types, b.types);
            prop_assert_eq!(a.strata0, b.strata0);
        }

        #[test]
        fn mirror_types_survive_negation(v in proptest::array::uniform8(arb_angle())) {
            let s = seq(v);
            let tol = ToleranceConfig::default();
            let (a, b) = (classify(&s, &tol), classify(&s.negated(), &tol));
            for t in [1, 2, 3, 4, 5, 6, 7, 13, 14, 15, 16, 17, 18] {
                prop_assert_eq!(a.has(t), b.has(t), "type {}", t);
            }
        }

        #[test]
        fn tolerance_monotone(v in proptest::array::uniform8(-0.3f64..0.3), f in 1.0f64..4.0) {
            // Small angles make many patterns nearly hold.
            let s = seq(v);
            let tol = ToleranceConfig::default();
            let big = ToleranceConfig { tol_2d: tol.tol_2d * f, tol_1d: tol.tol_1d * f, tol_0d: tol.tol_0d * f };
            let (a, b) = (classify(&s, &tol), classify(&s, &big));
            for t in a.types.iter().filter(|&&t| t != 2) {
                prop_assert!(b.has(*t));
            }
            prop_assert!(a.strata0.is_subset(&b.strata0));
        }

        #[test]
        fn hemisphere_matches_recomputation(v in proptest::array::uniform8(arb_angle())) {
            let s = seq(v);
            let tol = 0.05;
            let even = v[0] + v[2] + v[4] + v[6];
            let odd = v[1] + v[3] + v[5] + v[7];
            let expected = if (even - odd).abs() <= tol {
                Hemisphere::Boundary
            } else if even > odd {
                Hemisphere::One
            } else {
                Hemisphere::Two
            };
            prop_assert_eq!(hemisphere_split(&s, tol), expected);
        }
    }
}
