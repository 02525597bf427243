//! One line per acceptance criterion, `criterion N: PASS|FAIL ...`. The test
//! fails if any criterion fails.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use co_topo::pipeline::{summary_value, CircularParams, PersistenceParams};
use co_topo::{compare_quotients, run, sample_dataset, synthetic_dataset, Dataset, PipelineConfig, QuotientOptions, SampleOptions, Subspace};
use cyclo_topo::embedding::{classical_mds, neighborhood_graph, shortest_paths_from, NeighborhoodRule};
use cyclo_topo::geometry::{act_on_standard, act_on_torsions, axis_rotation, torsion_angles, GroupElement, Point, TorsionSequence};
use cyclo_topo::homology::cw::models;
use cyclo_topo::homology::{build_filtration, cw_betti, persistence, prominent_betti};
use cyclo_topo::metrics::{
    angular_distance, circular_distance, distance_matrix, distortion_stats, euclidean_distance, quotient_angular, MetricSpec,
    Points, Quotient,
};
use cyclo_topo::sampling::SyntheticKind;
use cyclo_topo::symmetry::{strata_census, CensusOptions, ToleranceConfig};
use cyclo_topo::{DistanceMatrix, LinkageParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Ledger {
    lines: Vec<String>,
    failed: Vec<u32>,
}

impl Ledger {
    fn record(&mut self, n: u32, pass: bool, time: Duration, detail: String) {
        let line = format!("criterion {n}: {} ({:.1} s) {detail}", if pass { "PASS" } else { "FAIL" }, time.as_secs_f64());
        println!("{line}");
        self.lines.push(line);
        if !pass {
            self.failed.push(n);
        }
    }
}

fn naive_diagram(d: &DistanceMatrix, p: u64, max_dim: usize, r_max: f64) -> Vec<Vec<(f64, f64)>> {
    let filt = build_filtration(d, max_dim, r_max).unwrap();
    let s = &filt.simplices;
    let m = s.len();
    let pos: HashMap<Vec<usize>, usize> = s.iter().enumerate().map(|(i, x)| (x.vertices.clone(), i)).collect();
    let mut cols = vec![vec![0u64; m]; m];
    for (j, x) in s.iter().enumerate() {
        for k in 0..x.vertices.len() {
            if x.vertices.len() < 2 {
                break;
            }
            let mut face = x.vertices.clone();
            face.remove(k);
            cols[j][pos[&face]] = if k % 2 == 0 { 1 } else { p - 1 };
        }
    }
    let low = |c: &[u64]| c.iter().rposition(|&v| v != 0);
    let inv = |a: u64| (1..p).find(|b| a * b % p == 1).unwrap();
    let mut owner: HashMap<usize, usize> = HashMap::new();
    let mut lows = vec![None; m];
    for j in 0..m {
        while let Some(l) = low(&cols[j]) {
            let Some(&k) = owner.get(&l) else { break };
            let f = (p - cols[j][l]) * inv(cols[k][l]) % p;
            for r in 0..m {
                cols[j][r] = (cols[j][r] + f * cols[k][r]) % p;
            }
        }
        if let Some(l) = low(&cols[j]) {
            owner.insert(l, j);
            lows[j] = Some(l);
        }
    }
    let killed: HashSet<usize> = lows.iter().flatten().copied().collect();
    let mut out = vec![Vec::new(); max_dim + 1];
    for j in 0..m {
        match lows[j] {
            Some(i) if s[i].dim() <= max_dim && s[j].diameter > s[i].diameter => out[s[i].dim()].push((s[i].diameter, s[j].diameter)),
            None if s[j].dim() <= max_dim && !killed.contains(&j) => out[s[j].dim()].push((s[j].diameter, f64::INFINITY)),
            _ => {}
        }
    }
    for v in out.iter_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    out
}

fn criterion_1(ledger: &mut Ledger) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let d = if rng.random_bool(0.5) {
            let pts: Vec<[f64; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
            DistanceMatrix::from_fn(n, |i, j| pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        } else {
            let v: Vec<f64> = (0..n * n).map(|_| rng.random_range(1..5) as f64).collect();
            DistanceMatrix::from_fn(n, |i, j| v[i * n + j])
        };
        let r_max = if rng.random_bool(0.3) { f64::INFINITY } else { rng.random_range(0.3..4.0) };
        for p in [2u32, 3] {
            let fast = persistence(&d, p, 2, r_max).unwrap();
            let fast: Vec<Vec<(f64, f64)>> = fast.intervals().iter().map(|v| v.iter().map(|i| (i.birth, i.death)).collect()).collect();
            if fast != naive_diagram(&d, p as u64, 2, r_max) {
                mismatches += 1;
            }
        }
    }
    let time = t.elapsed();
    ledger.record(1, mismatches == 0 && time < Duration::from_secs(10), time, format!("{mismatches} mismatches in 400 diagrams"));
}

fn criterion_2(ledger: &mut Ledger) {
    let t = Instant::now();
    let cases = [
        (SyntheticKind::Circle, 200, 1, 0.5, [vec![1, 1], vec![1, 1]]),
        (SyntheticKind::Sphere2, 500, 2, 0.6, [vec![1, 0, 1], vec![1, 0, 1]]),
        (SyntheticKind::FlatTorus, 400, 2, 0.15, [vec![1, 2, 1], vec![1, 2, 1]]),
        (SyntheticKind::FlatKleinBottle, 400, 2, 0.15, [vec![1, 2, 1], vec![1, 1, 0]]),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (kind, n, max_dim, r_max, expected) in cases {
        let data = synthetic_dataset(kind, n, 1, 0.0);
        let d = data.synthetic.as_ref().unwrap().distance_matrix();
        for (p, want) in [2u32, 3].into_iter().zip(&expected) {
            let got = prominent_betti(&persistence(&d, p, max_dim, r_max).unwrap(), 2.0);
            ok &= &got == want;
            detail.push(format!("{kind:?}/F{p} {got:?}"));
        }
    }
    let time = t.elapsed();
    ledger.record(2, ok && time < Duration::from_secs(300), time, detail.join(", "));
}

fn full_config(subspace: Subspace) -> PipelineConfig {
    PipelineConfig {
        subspace,
        persistence: PersistenceParams { primes: vec![2, 3], max_dim: 2, r_max: 6.0, r: 4.0, prominence: 2.0 },
        ..Default::default()
    }
}

fn betti_pair(summary: &str) -> (String, String) {
    (summary_value(summary, "betti_p2").unwrap().to_string(), summary_value(summary, "betti_p3").unwrap().to_string())
}

fn criterion_3(ledger: &mut Ledger, data: &Dataset, sample_time: Duration) {
    let t = Instant::now();
    let out = run(&full_config(Subspace::Full), data).unwrap();
    let s = out.bundle.summary();
    let (b2, b3) = betti_pair(s);
    let mut widths = Vec::new();
    for key in ["plateau_p2", "plateau_p3"] {
        let (lo, hi) = summary_value(s, key).unwrap().split_once(',').unwrap();
        widths.push(hi.parse::<f64>().unwrap() / lo.parse::<f64>().unwrap());
    }
    let time = t.elapsed() + sample_time;
    let pass = data.len() >= 1500 && b2 == "1,1,2" && b3 == "1,1,2" && widths.iter().all(|w| *w >= 2.0) && time < Duration::from_secs(900);
    ledger.record(
        3,
        pass,
        time,
        format!("n = {}, F2 ({b2}), F3 ({b3}), plateau ratios {:.2}/{:.2}", data.len(), widths[0], widths[1]),
    );
}

fn criterion_4(ledger: &mut Ledger, data: &Dataset) {
    let t = Instant::now();
    let ab = run(&full_config(Subspace::AB), data).unwrap();
    let c = run(&full_config(Subspace::C), data).unwrap();
    let (ab2, ab3) = betti_pair(ab.bundle.summary());
    let (c2, c3) = betti_pair(c.bundle.summary());
    let pass = ab2 == "1,0,1" && ab3 == "1,0,1" && c2 == "1,2,1" && c3 == "1,1,0" && t.elapsed() < Duration::from_secs(900);
    ledger.record(
        4,
        pass,
        t.elapsed(),
        format!("AuB (n = {}) F2 ({ab2}) F3 ({ab3}); C (n = {}) F2 ({c2}) F3 ({c3})", ab.selected.len(), c.selected.len()),
    );
}

fn criterion_5(ledger: &mut Ledger, data: &Dataset) {
    let t = Instant::now();
    let config = PipelineConfig {
        subspace: Subspace::M1,
        persistence: PersistenceParams { primes: vec![2], max_dim: 1, r_max: 6.0, r: 4.0, prominence: 2.0 },
        circular: Some(CircularParams { r: 4.0, prime: 47, winding_types: vec![18, 16] }),
        ..Default::default()
    };
    let (pass, detail) = match run(&config, data) {
        Ok(out) => {
            let w: HashMap<u8, f64> = out.windings.iter().map(|(ty, w, _)| (*ty, *w)).collect();
            let check = |ty: u8, want: f64| (w[&ty].abs() - want).abs() < 0.1;
            (check(18, 2.0) && check(16, 1.0), format!("n = {}, winding type 18 {:.4}, type 16 {:.4}", out.selected.len(), w[&18], w[&16]))
        }
        Err(e) => (false, e.to_string()),
    };
    ledger.record(5, pass, t.elapsed(), detail);
}

fn criterion_6(ledger: &mut Ledger, data: &Dataset) {
    let t = Instant::now();
    let report = compare_quotients(data, &QuotientOptions::default()).unwrap();
    let expected: [(Subspace, Quotient, [usize; 3], [usize; 3]); 6] = [
        (Subspace::A, Quotient::C8, [1, 0, 0], [1, 0, 0]),
        (Subspace::AB, Quotient::C8, [1, 1, 1], [1, 0, 0]),
        (Subspace::AC, Quotient::C8, [1, 1, 1], [1, 0, 0]),
        (Subspace::BC, Quotient::C8, [1, 2, 1], [1, 1, 0]),
        (Subspace::Full, Quotient::C8, [1, 1, 2], [1, 0, 0]),
        (Subspace::Full, Quotient::D8, [1, 0, 0], [1, 0, 0]),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (s, q, f2, f3) in &expected {
        let row = report.row(s, *q).unwrap();
        let (g2, g3) = (row.betti(2).unwrap(), row.betti(3).unwrap());
        let ok = g2 == f2 && g3 == f3;
        pass &= ok;
        detail.push(format!("{s}/{q:?} {g2:?}/{g3:?}{}", if ok { "" } else { " mismatch" }));
    }
    let time = t.elapsed();
    ledger.record(6, pass && time < Duration::from_secs(1200), time, detail.join(", "));
}

fn criterion_7(ledger: &mut Ledger, data: &Dataset) {
    let t = Instant::now();
    let tol = ToleranceConfig::default();
    let labels = co_topo::pipeline::labels_of(data, &tol).unwrap();
    let ones = labels.iter().filter(|l| l.has(1)).count();
    let twos = labels.iter().filter(|l| l.has(2)).count();
    let both = labels.iter().filter(|l| l.has(1) && l.has(2)).count();
    let census = strata_census(data.torsions.as_ref().unwrap(), &data.params.unwrap(), &tol, &CensusOptions::default());
    let counts: Vec<usize> = census.iter().map(|c| c.solutions.len()).collect();
    let in_ball: Vec<usize> = census.iter().map(|c| c.in_ball).collect();
    let pass = ones + twos == data.len() && both == 0 && counts == [2, 4, 4, 8, 8, 8, 8];
    ledger.record(
        7,
        pass,
        t.elapsed(),
        format!("type 1 {ones} + type 2 {twos} = {}, strata {counts:?}, sample points in ball {in_ball:?}", data.len()),
    );
}

fn criterion_8(ledger: &mut Ledger, data: &Dataset) {
    let t = Instant::now();
    let da = distance_matrix(Points::Torsions(data.torsions.as_ref().unwrap()), MetricSpec::angular()).unwrap();
    let de = distance_matrix(Points::Standard(data.realizations.as_ref().unwrap()), MetricSpec::euclidean()).unwrap();
    let st = distortion_stats(&da, &de, 100_000, 5).unwrap();
    let finite = st.min_ratio.is_finite() && st.max_ratio.is_finite() && st.min_ratio > 0.0;
    ledger.record(
        8,
        st.correlation > 0.9 && finite,
        t.elapsed(),
        format!("{} pairs, pearson {:.4}, ratio d_euclid/d_angular in [{:.4}, {:.4}]", st.pairs.len(), st.correlation, st.min_ratio, st.max_ratio),
    );
}

fn criterion_9(ledger: &mut Ledger) {
    let t = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    let full = models::sphere_and_klein_bottle();
    for p in [2, 3] {
        let b = cw_betti(&full, p).unwrap();
        pass &= b == [1, 1, 2];
        detail.push(format!("sphere+KB/F{p} {b:?}"));
    }
    let rows: [(&[&str], [usize; 3], [usize; 3]); 6] = [
        (&["A"], [1, 0, 0], [1, 0, 0]),
        (&["B"], [1, 0, 0], [1, 0, 0]),
        (&["A", "B"], [1, 1, 1], [1, 0, 0]),
        (&["A", "C"], [1, 1, 1], [1, 0, 0]),
        (&["B", "C"], [1, 2, 1], [1, 1, 0]),
        (&["A", "B", "C"], [1, 1, 2], [1, 0, 0]),
    ];
    for (parts, f2, f3) in rows {
        let c = models::cyclic_quotient_piece(parts).unwrap();
        let (g2, g3) = (cw_betti(&c, 2).unwrap(), cw_betti(&c, 3).unwrap());
        let ok = g2 == f2 && g3 == f3;
        pass &= ok;
        detail.push(format!("{}/C8 {g2:?}/{g3:?}{}", parts.join("u"), if ok { "" } else { " mismatch" }));
    }
    ledger.record(9, pass, t.elapsed(), detail.join(", "));
}

fn random_torsions(rng: &mut ChaCha8Rng) -> TorsionSequence {
    TorsionSequence::new(std::array::from_fn(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
}

fn criterion_10(ledger: &mut Ledger, data: &Dataset) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures: Vec<String> = Vec::new();
    let eps = 1e-9;

    let mut metric_bad = 0;
    let reals = data.realizations.as_ref().unwrap();
    for _ in 0..10_000 {
        let (a, b, c) = (random_torsions(&mut rng), random_torsions(&mut rng), random_torsions(&mut rng));
        for q in [Quotient::None, Quotient::C8, Quotient::D8] {
            let d = |x: &TorsionSequence, y: &TorsionSequence| quotient_angular(q, x, y);
            if d(&a, &a) > eps || (d(&a, &b) - d(&b, &a)).abs() > eps || d(&a, &c) > d(&a, &b) + d(&b, &c) + eps || d(&a, &b) < 0.0 {
                metric_bad += 1;
            }
        }
        if quotient_angular(Quotient::None, &a, &b) != angular_distance(&a, &b) {
            metric_bad += 1;
        }
        let (x, y, z) = (&reals[rng.random_range(0..reals.len())], &reals[rng.random_range(0..reals.len())], &reals[rng.random_range(0..reals.len())]);
        let e = |u, v| euclidean_distance(u, v).expect("same length");
        if e(x, x) > eps || (e(x, y) - e(y, x)).abs() > eps || e(x, z) > e(x, y) + e(y, z) + eps {
            metric_bad += 1;
        }
    }
    if metric_bad > 0 {
        failures.push(format!("{metric_bad} metric axiom violations"));
    }

    let elements: Vec<GroupElement> = GroupElement::dihedral().collect();
    let t1 = GroupElement::new(1, false);
    let s = GroupElement::new(0, true);
    let mut group_bad = 0;
    group_bad += usize::from(elements.len() != 16 || elements.iter().collect::<HashSet<_>>().len() != 16);
    group_bad += usize::from(t1.pow(8) != GroupElement::IDENTITY || s.compose(&s) != GroupElement::IDENTITY);
    group_bad += usize::from(s.compose(&t1).compose(&s) != t1.inverse());
    let sigma = random_torsions(&mut rng);
    let x = &reals[0];
    let sx = torsion_angles(x.realization()).unwrap();
    for g in &elements {
        group_bad += usize::from(g.compose(&g.inverse()) != GroupElement::IDENTITY);
        let moved = torsion_angles(act_on_standard(g, x).realization()).unwrap();
        group_bad += usize::from((0..8).any(|i| circular_distance(moved.get(i), act_on_torsions(g, &sx).get(i)) > eps));
        for h in &elements {
            let gh = g.compose(h);
            group_bad += usize::from(!elements.contains(&gh));
            group_bad += usize::from(act_on_torsions(&gh, &sigma) != act_on_torsions(g, &act_on_torsions(h, &sigma)));
        }
    }
    if group_bad > 0 {
        failures.push(format!("{group_bad} group relation violations"));
    }

    let mut se3_bad = 0;
    for k in 0..100 {
        let axis = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let rot = axis_rotation(&axis, rng.random_range(0.0..std::f64::consts::TAU));
        let shift = Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let r = reals[k * 7 % reals.len()].realization();
        let (a, b) = (torsion_angles(r).unwrap(), torsion_angles(&r.transformed(&rot, &shift)).unwrap());
        se3_bad += usize::from((0..8).any(|i| circular_distance(a.get(i), b.get(i)) > eps));
    }
    if se3_bad > 0 {
        failures.push(format!("{se3_bad} rigid motions changed torsions"));
    }

    let mut mds_err = 0.0f64;
    for _ in 0..20 {
        let pts: Vec<[f64; 3]> = (0..20).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let d = DistanceMatrix::from_fn(20, |i, j| pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
        let e = classical_mds(&d, 3).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                mds_err = mds_err.max((e.distance(i, j) - d.get(i, j)).abs());
            }
        }
    }
    if !(mds_err < 1e-6) {
        failures.push(format!("MDS round trip error {mds_err:e}"));
    }

    let mut path_bad = 0;
    for _ in 0..50 {
        let n = rng.random_range(2..25);
        let w: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.1..3.0)).collect();
        let dm = DistanceMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { w[i.min(j) * n + i.max(j)] });
        let g = neighborhood_graph(&dm, NeighborhoodRule::Eps(rng.random_range(0.5..2.5)));
        let mut fw = vec![vec![f64::INFINITY; n]; n];
        for (u, v, wt) in g.edges() {
            fw[u][v] = wt;
            fw[v][u] = wt;
        }
        for (i, row) in fw.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if fw[i][k] + fw[k][j] < fw[i][j] {
                        fw[i][j] = fw[i][k] + fw[k][j];
                    }
                }
            }
        }
        for (s, row) in fw.iter().enumerate() {
            let dj = shortest_paths_from(&g, s);
            path_bad += dj.iter().zip(row).filter(|(a, b)| !((a.is_infinite() && b.is_infinite()) || (*a - *b).abs() < 1e-9)).count();
        }
    }
    if path_bad > 0 {
        failures.push(format!("{path_bad} shortest-path mismatches"));
    }

    let time = t.elapsed();
    let detail = if failures.is_empty() {
        format!("metric axioms on 10000 triples, 16 group elements, 100 motions, MDS error {mds_err:.1e}, 50 graphs")
    } else {
        failures.join(", ")
    };
    ledger.record(10, failures.is_empty() && time < Duration::from_secs(120), time, detail);
}

#[test]
fn acceptance() {
    let mut ledger = Ledger { lines: Vec::new(), failed: Vec::new() };
    criterion_1(&mut ledger);
    criterion_2(&mut ledger);
    let t = Instant::now();
    let data = sample_dataset(&SampleOptions::default()).unwrap();
    let sample_time = t.elapsed();
    assert_eq!(data.params, Some(LinkageParams::cyclooctane()));
    criterion_3(&mut ledger, &data, sample_time);
    criterion_4(&mut ledger, &data);
    criterion_5(&mut ledger, &data);
    criterion_6(&mut ledger, &data);
    criterion_7(&mut ledger, &data);
    criterion_8(&mut ledger, &data);
    criterion_9(&mut ledger);
    criterion_10(&mut ledger, &data);
    assert!(ledger.failed.is_empty(), "failed criteria {:?}\n{}", ledger.failed, ledger.lines.join("\n"));
}
