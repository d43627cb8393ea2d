mod common;

use asjq::datagen::{generate_relation, Distribution, GenParams, JoinShape};
use asjq::join::join_all;
use asjq::model::{AggregateFn, Side};
use asjq::skyline::prune_skyline;
use common::instance;

#[test]
fn keys_are_uniform() {
    let (n, c) = (20_000, 8u32);
    let rel = generate_relation(&GenParams::new(n, 1, 1, c, Distribution::Independent, 4), "A").unwrap();
    let mut counts = vec![0usize; c as usize];
    for t in rel.tuples() {
        counts[t.values[0] as usize] += 1;
    }
    let p = 1.0 / c as f64;
    let mean = n as f64 * p;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for (k, &got) in counts.iter().enumerate() {
        assert!((got as f64 - mean).abs() < 3.0 * sigma, "key {k}: {got} vs {mean}");
    }
}

#[test]
fn skyline_size_follows_the_distribution() {
    for seed in [1, 2, 3] {
        let sizes: Vec<usize> = Distribution::ALL
            .iter()
            .map(|&dist| {
                let params = GenParams::new(5000, 2, 2, 1, dist, seed);
                let (q, a, _) = instance(params, JoinShape::Equi, &[AggregateFn::Sum]);
                prune_skyline(&q, Side::Left, &a).unwrap().skyline.len()
            })
            .collect();
        assert!(sizes[0] < sizes[1] && sizes[1] < sizes[2], "seed {seed}: {sizes:?}");
    }
}

#[test]
fn equi_join_size_is_near_n_squared_over_c() {
    for (n, c) in [(400, 4), (1000, 10), (600, 1)] {
        let params = GenParams::new(n, 1, 1, c, Distribution::Correlated, 11);
        let (q, a, b) = instance(params, JoinShape::Equi, &[AggregateFn::Sum]);
        let got = join_all(&q, &a, &b).unwrap().count() as f64;
        let expected = (n * n) as f64 / c as f64;
        assert!((got - expected).abs() / expected < 0.1, "N={n} C={c}: {got}");
    }
}

#[test]
fn ordered_join_keeps_about_half() {
    let params = GenParams::new(500, 1, 1, 1, Distribution::Independent, 5);
    let (q, a, b) = instance(params, JoinShape::Ordered, &[AggregateFn::Sum]);
    let got = join_all(&q, &a, &b).unwrap().count() as f64;
    assert!((got / 250_000.0 - 0.5).abs() < 0.05, "{got}");
}

#[test]
fn generation_is_reproducible() {
    let p = GenParams::new(300, 2, 1, 3, Distribution::AntiCorrelated, 99);
    assert_eq!(generate_relation(&p, "A").unwrap().tuples(), generate_relation(&p, "A").unwrap().tuples());
    assert_ne!(
        generate_relation(&p, "A").unwrap().tuples(),
        generate_relation(&p.with_seed(100), "A").unwrap().tuples()
    );
}
