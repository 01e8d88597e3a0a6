//! Boosted trees against exhaustive split search and loss-trace checks.

use pfkit::model::gbdt::RegNode;
use pfkit::model::{Gbdt, GbdtParams, Matrix};
use pfkit::PersonalityClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn class(i: usize) -> PersonalityClass {
    PersonalityClass::from_index(i).unwrap()
}

fn noisy(n: usize, d: usize, seed: u64) -> (Matrix, Vec<PersonalityClass>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let r: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut k = ((r[0] > 0.0) as usize) * 2 + (r[1] > 0.0) as usize;
        if rng.random_bool(0.15) {
            k = rng.random_range(0..4);
        }
        rows.push(r);
        y.push(class(k));
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}

#[test]
fn loss_is_non_increasing_over_100_rounds() {
    let (x, y) = noisy(200, 5, 1);
    let m = Gbdt::train(&x, &y, &GbdtParams::default(), 1).unwrap();
    assert_eq!(m.loss_trace.len(), 101);
    for (i, w) in m.loss_trace.windows(2).enumerate() {
        assert!(w[1] <= w[0], "round {i}: {} -> {}", w[0], w[1]);
    }
    assert!(m.loss_trace[100] < 0.5 * m.loss_trace[0]);
}

#[test]
fn zero_learning_rate_gives_priors_everywhere() {
    let (x, y) = noisy(120, 3, 2);
    let p = GbdtParams {
        learning_rate: 0.0,
        ..Default::default()
    };
    let m = Gbdt::train(&x, &y, &p, 2).unwrap();
    let mut prior = [0.0; 4];
    for c in &y {
        prior[c.index()] += 1.0 / y.len() as f64;
    }
    for i in 0..x.rows() {
        for (a, b) in m.predict_proba(x.row(i)).iter().zip(prior) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

/// Best `<=` threshold by the second-order gain, found by trying every
/// distinct value.
fn exhaustive_threshold(xs: &[f64], g: &[f64], h: &[f64], lambda: f64) -> Option<(f64, f64)> {
    let mut values: Vec<f64> = xs.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let (gt, ht): (f64, f64) = (g.iter().sum(), h.iter().sum());
    let mut best: Option<(f64, f64)> = None;
    for &t in &values[..values.len() - 1] {
        let (mut gl, mut hl) = (0.0, 0.0);
        for i in 0..xs.len() {
            if xs[i] <= t {
                gl += g[i];
                hl += h[i];
            }
        }
        let (gr, hr) = (gt - gl, ht - hl);
        if hl < 1.0 || hr < 1.0 {
            continue;
        }
        let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - gt * gt / (ht + lambda));
        if best.is_none_or(|(b, _)| gain > b + 1e-12) {
            best = Some((gain, t));
        }
    }
    best
}

#[test]
fn depth_one_split_matches_exhaustive_search() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..40).map(|_| rng.random_range(0..25) as f64).collect();
        let y: Vec<PersonalityClass> = xs
            .iter()
            .map(|&v| {
                class(if rng.random_bool(0.2) {
                    rng.random_range(0..4)
                } else {
                    (v as usize) / 7 % 4
                })
            })
            .collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v]).collect();
        let p = GbdtParams {
            rounds: 1,
            max_depth: 1,
            ..Default::default()
        };
        let m = Gbdt::train(&Matrix::from_rows(&rows).unwrap(), &y, &p, seed).unwrap();
        let n = y.len() as f64;
        for k in 0..4 {
            let prior = y.iter().filter(|c| c.index() == k).count() as f64 / n;
            let g: Vec<f64> = y.iter().map(|c| prior - (c.index() == k) as u8 as f64).collect();
            let h: Vec<f64> = vec![(2.0 * prior * (1.0 - prior)).max(1e-16); y.len()];
            let want = exhaustive_threshold(&xs, &g, &h, 1.0).filter(|(gain, _)| *gain > 0.0);
            match (&m.rounds[0][k].nodes[0], want) {
                (RegNode::Split { threshold, gain, .. }, Some((wg, wt))) => {
                    assert_eq!(*threshold, wt, "seed {seed} class {k}");
                    assert!((gain - wg).abs() < 1e-9);
                }
                (RegNode::Leaf { .. }, None) => {}
                (got, want) => panic!("seed {seed} class {k}: {got:?} vs {want:?}"),
            }
        }
    }
}

#[test]
fn same_seed_same_model() {
    let (x, y) = noisy(150, 4, 3);
    let p = GbdtParams {
        rounds: 10,
        ..Default::default()
    };
    assert_eq!(Gbdt::train(&x, &y, &p, 5).unwrap(), Gbdt::train(&x, &y, &p, 5).unwrap());
}
