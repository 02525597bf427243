use cyclo_topo::homology::{betti_at, build_filtration, persistence, Interval, PersistenceDiagram};
use cyclo_topo::DistanceMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense homology reduction of the explicit filtration, no optimisations.
fn naive_diagram(d: &DistanceMatrix, p: u64, max_dim: usize, r_max: f64) -> Vec<Vec<(f64, f64)>> {
    let filt = build_filtration(d, max_dim, r_max).unwrap();
    let s = &filt.simplices;
    let m = s.len();
    let pos: std::collections::HashMap<Vec<usize>, usize> =
        s.iter().enumerate().map(|(i, x)| (x.vertices.clone(), i)).collect();
    let mut cols: Vec<Vec<u64>> = vec![vec![0; m]; m];
    for (j, x) in s.iter().enumerate() {
        if x.vertices.len() < 2 {
            continue;
        }
        for k in 0..x.vertices.len() {
            let mut face = x.vertices.clone();
            face.remove(k);
            let sign = if k % 2 == 0 { 1 } else { p - 1 };
            cols[j][pos[&face]] = sign;
        }
    }
    let low = |c: &Vec<u64>| c.iter().rposition(|&v| v != 0);
    let inv = |a: u64| (1..p).find(|b| a * b % p == 1).unwrap();
    let mut low_owner: std::collections::HashMap<usize, usize> = Default::default();
    let mut lows = vec![None; m];
    for j in 0..m {
        while let Some(l) = low(&cols[j]) {
            let Some(&k) = low_owner.get(&l) else { break };
            let f = (p - cols[j][l]) * inv(cols[k][l]) % p;
            for r in 0..m {
                cols[j][r] = (cols[j][r] + f * cols[k][r]) % p;
            }
        }
        if let Some(l) = low(&cols[j]) {
            low_owner.insert(l, j);
            lows[j] = Some(l);
        }
    }
    let mut out = vec![Vec::new(); max_dim + 1];
    let killed: std::collections::HashSet<usize> = lows.iter().flatten().copied().collect();
    for j in 0..m {
        match lows[j] {
            Some(i) => {
                let q = s[i].dim();
                if q <= max_dim && s[j].diameter > s[i].diameter {
                    out[q].push((s[i].diameter, s[j].diameter));
                }
            }
            None => {
                let q = s[j].dim();
                if q <= max_dim && !killed.contains(&j) {
                    out[q].push((s[j].diameter, f64::INFINITY));
                }
            }
        }
    }
    for v in out.iter_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    out
}

fn as_pairs(d: &PersistenceDiagram) -> Vec<Vec<(f64, f64)>> {
    d.intervals().iter().map(|v| v.iter().map(|i| (i.birth, i.death)).collect()).collect()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (DistanceMatrix, f64) {
    let n = rng.random_range(1..=8);
    let d = if rng.random_bool(0.5) {
        let pts: Vec<[f64; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        DistanceMatrix::from_fn(n, |i, j| {
            pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
    } else {
        // Small integer entries force many ties.
        let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(1..5) as f64).collect();
        DistanceMatrix::from_fn(n, |i, j| vals[i * n + j])
    };
    let r_max = if rng.random_bool(0.3) { f64::INFINITY } else { rng.random_range(0.3..4.0) };
    (d, r_max)
}

#[test]
fn matches_naive_reduction_on_small_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let (d, r_max) = random_instance(&mut rng);
        for p in [2u32, 3] {
            let fast = persistence(&d, p, 2, r_max).unwrap();
            let slow = naive_diagram(&d, p as u64, 2, r_max);
            assert_eq!(as_pairs(&fast), slow, "case {case}, p = {p}");
        }
    }
}

#[test]
fn dimension_zero_is_field_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (d, r_max) = random_instance(&mut rng);
        let a = persistence(&d, 2, 1, r_max).unwrap();
        for p in [3, 5, 47] {
            assert_eq!(a.dim(0), persistence(&d, p, 1, r_max).unwrap().dim(0));
        }
    }
}

#[test]
fn euler_characteristic_matches_simplex_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let n = rng.random_range(1..=7);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        let d = DistanceMatrix::from_fn(n, |i, j| ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt());
        // With max_dim = 2 every simplex up to dimension 3 is present, so
        // the alternating sum is exact once no tetrahedra exist below r.
        let diag = persistence(&d, 2, 2, f64::INFINITY).unwrap();
        let filt = build_filtration(&d, 2, f64::INFINITY).unwrap();
        for k in 0..20 {
            let r = k as f64 * 0.08;
            let chi: i64 = filt
                .simplices
                .iter()
                .filter(|s| s.diameter <= r && s.dim() <= 2)
                .map(|s| if s.dim() % 2 == 0 { 1 } else { -1 })
                .sum();
            let has_tet = filt.simplices.iter().any(|s| s.diameter <= r && s.dim() == 3);
            if has_tet {
                continue;
            }
            let b = betti_at(&diag, r);
            assert_eq!(b[0] as i64 - b[1] as i64 + b[2] as i64, chi, "r = {r}");
        }
    }
}

/// Bottleneck distance by thresholded bipartite matching with diagonal
/// copies, checked on every candidate threshold.
fn bottleneck(a: &[Interval], b: &[Interval]) -> f64 {
    let fin = |v: &[Interval]| v.iter().filter(|i| !i.is_essential()).map(|i| (i.birth, i.death)).collect::<Vec<_>>();
    let inf = |v: &[Interval]| {
        let mut x: Vec<f64> = v.iter().filter(|i| i.is_essential()).map(|i| i.birth).collect();
        x.sort_by(f64::total_cmp);
        x
    };
    let (ia, ib) = (inf(a), inf(b));
    assert_eq!(ia.len(), ib.len());
    let ess = ia.iter().zip(&ib).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let (pa, pb) = (fin(a), fin(b));
    let (n, m) = (pa.len(), pb.len());
    let cost = |i: usize, j: usize| -> f64 {
        match (i < n, j < m) {
            (true, true) => (pa[i].0 - pb[j].0).abs().max((pa[i].1 - pb[j].1).abs()),
            (true, false) => (pa[i].1 - pa[i].0) / 2.0,
            (false, true) => (pb[j].1 - pb[j].0) / 2.0,
            (false, false) => 0.0,
        }
    };
    let size = n + m;
    if size == 0 {
        return ess;
    }
    let mut cands: Vec<f64> = (0..size).flat_map(|i| (0..size).map(move |j| (i, j))).map(|(i, j)| cost(i, j)).collect();
    cands.sort_by(f64::total_cmp);
    for eps in cands {
        let ok = |i: usize, j: usize| cost(i, j) <= eps;
        let mut mate: Vec<Option<usize>> = vec![None; size];
        let mut matched = 0;
        for i in 0..size {
            let mut seen = vec![false; size];
            if augment(i, &ok, &mut mate, &mut seen, size) {
                matched += 1;
            }
        }
        if matched == size {
            return eps.max(ess);
        }
    }
    f64::INFINITY
}

fn augment(i: usize, ok: &dyn Fn(usize, usize) -> bool, mate: &mut [Option<usize>], seen: &mut [bool], size: usize) -> bool {
    for j in 0..size {
        if ok(i, j) && !seen[j] {
            seen[j] = true;
            if mate[j].is_none() || augment(mate[j].unwrap(), ok, mate, seen, size) {
                mate[j] = Some(i);
                return true;
            }
        }
    }
    false
}

#[test]
fn perturbation_moves_endpoints_by_at_most_twice_the_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let n = rng.random_range(3..=7);
        let base: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.5..2.0)).collect();
        let eps = 0.01;
        let noise: Vec<f64> = (0..n * n).map(|_| rng.random_range(-eps..eps)).collect();
        let d1 = DistanceMatrix::from_fn(n, |i, j| base[i * n + j]);
        let d2 = DistanceMatrix::from_fn(n, |i, j| base[i * n + j] + noise[i * n + j]);
        let a = persistence(&d1, 2, 1, f64::INFINITY).unwrap();
        let b = persistence(&d2, 2, 1, f64::INFINITY).unwrap();
        for q in 0..=1 {
            let bn = bottleneck(a.dim(q), b.dim(q));
            assert!(bn <= 2.0 * eps + 1e-12, "q = {q}, {bn}, {:?} vs {:?}", a.dim(q), b.dim(q));
        }
    }
}
