//! Random forest against an exhaustive single-tree oracle and invariance
//! properties.

use pfkit::model::{ForestParams, Matrix, MaxFeatures, RandomForest};
use pfkit::PersonalityClass;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn class(i: usize) -> PersonalityClass {
    PersonalityClass::from_index(i).unwrap()
}

/// Plain recursive CART: every feature, every distinct value as a `<=`
/// threshold, weighted Gini in floating point, first minimum kept.
enum Oracle {
    Leaf(usize),
    Split(usize, f64, Box<Oracle>, Box<Oracle>),
}

fn gini(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut c = [0.0; 4];
    for &l in labels {
        c[l] += 1.0;
    }
    1.0 - c.iter().map(|x| (x / n) * (x / n)).sum::<f64>()
}

fn majority(labels: &[usize]) -> usize {
    let mut c = [0usize; 4];
    for &l in labels {
        c[l] += 1;
    }
    (0..4).fold(0, |b, k| if c[k] > c[b] { k } else { b })
}

fn oracle(rows: &[Vec<f64>], labels: &[usize]) -> Oracle {
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Oracle::Leaf(first);
    }
    let n = labels.len() as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..rows[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for &t in &values[..values.len() - 1] {
            let (l, r): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| rows[i][f] <= t);
            let ll: Vec<usize> = l.iter().map(|&i| labels[i]).collect();
            let rl: Vec<usize> = r.iter().map(|&i| labels[i]).collect();
            let imp = ll.len() as f64 / n * gini(&ll) + rl.len() as f64 / n * gini(&rl);
            if best.is_none_or(|(b, _, _)| imp < b - 1e-12) {
                best = Some((imp, f, t));
            }
        }
    }
    match best {
        None => Oracle::Leaf(majority(labels)),
        Some((_, f, t)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| rows[i][f] <= t);
            let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
                (
                    idx.iter().map(|&i| rows[i].clone()).collect(),
                    idx.iter().map(|&i| labels[i]).collect(),
                )
            };
            let (lr, ll) = pick(&l);
            let (rr, rl) = pick(&r);
            Oracle::Split(f, t, Box::new(oracle(&lr, &ll)), Box::new(oracle(&rr, &rl)))
        }
    }
}

fn oracle_predict(o: &Oracle, x: &[f64]) -> usize {
    match o {
        Oracle::Leaf(c) => *c,
        Oracle::Split(f, t, l, r) => oracle_predict(if x[*f] <= *t { l } else { r }, x),
    }
}

fn single_tree() -> ForestParams {
    ForestParams {
        n_trees: 1,
        max_features: MaxFeatures::All,
        bootstrap: false,
        ..Default::default()
    }
}

#[test]
fn one_tree_matches_exhaustive_oracle() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..3).map(|_| rng.random_range(0..5) as f64).collect())
            .collect();
        let labels: Vec<usize> = (0..10)
            .map(|i| if i < 4 { i } else { rng.random_range(0..4) })
            .collect();
        let y: Vec<_> = labels.iter().map(|&l| class(l)).collect();
        let forest = RandomForest::train(&Matrix::from_rows(&rows).unwrap(), &y, &single_tree(), seed).unwrap();
        let o = oracle(&rows, &labels);
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    let x = [a as f64 - 0.5, b as f64, c as f64 - 0.25];
                    assert_eq!(
                        forest.predict(&x).index(),
                        oracle_predict(&o, &x),
                        "seed {seed} at {x:?}"
                    );
                }
            }
        }
    }
}

fn separable(n_per_class: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<PersonalityClass>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for k in 0..4 {
        for _ in 0..n_per_class {
            let cx = if k % 2 == 0 { 0.0 } else { 10.0 };
            let cy = if k < 2 { 0.0 } else { 10.0 };
            rows.push(vec![
                cx + rng.random_range(-3.0..3.0),
                cy + rng.random_range(-3.0..3.0),
                rng.random_range(0.0..1.0),
            ]);
            y.push(class(k));
        }
    }
    (rows, y)
}

#[test]
fn memorizes_separable_training_set() {
    let (rows, y) = separable(50, 3);
    let x = Matrix::from_rows(&rows).unwrap();
    let f = RandomForest::train(&x, &y, &ForestParams::default(), 42).unwrap();
    let correct = (0..x.rows()).filter(|&i| f.predict(x.row(i)) == y[i]).count();
    assert_eq!(correct, 200);
}

#[test]
fn same_seed_same_predictions() {
    let (rows, y) = separable(30, 4);
    let x = Matrix::from_rows(&rows).unwrap();
    let a = RandomForest::train(&x, &y, &ForestParams::default(), 9).unwrap();
    let b = RandomForest::train(&x, &y, &ForestParams::default(), 9).unwrap();
    assert_eq!(a, b);
    let (held, _) = separable(20, 99);
    for r in &held {
        assert_eq!(a.predict(r), b.predict(r));
    }
}

#[test]
fn single_class_is_rejected() {
    let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
    let err = RandomForest::train(&x, &[class(1), class(1)], &ForestParams::default(), 1);
    assert!(err.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monotone_transform_of_one_column_keeps_predictions(
        seed in 0u64..1000,
        column in 0usize..3,
        transform in 0usize..3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gen = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
        };
        let train = gen(&mut rng, 60);
        let test = gen(&mut rng, 40);
        let y: Vec<_> = train.iter().map(|r| class(((r[0] + r[1] > 0.0) as usize) * 2 + (r[2] > 0.5) as usize)).collect();
        let f = |v: f64| match transform {
            0 => v.exp(),
            1 => v * v * v + 5.0,
            _ => 3.0 * v - 1.0,
        };
        let map = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rows.iter().map(|r| {
                let mut r = r.clone();
                r[column] = f(r[column]);
                r
            }).collect()
        };
        let params = ForestParams { n_trees: 15, ..Default::default() };
        let a = RandomForest::train(&Matrix::from_rows(&train).unwrap(), &y, &params, seed).unwrap();
        let b = RandomForest::train(&Matrix::from_rows(&map(&train)).unwrap(), &y, &params, seed).unwrap();
        for (r, t) in test.iter().zip(map(&test)) {
            prop_assert_eq!(a.predict(r), b.predict(&t));
        }
    }
}
