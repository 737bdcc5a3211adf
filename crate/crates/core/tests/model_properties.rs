use dp_core::{
    d_star, expected_distortion, output_distribution, posterior_sampling, tv_distance, wasserstein1,
    DistortionMatrix, Distribution, Estimator, GroundMetric, JointChannel, Matrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pmf(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn dist(p: Vec<f64>) -> Distribution {
    Distribution::with_tolerances(p, &dp_core::Tolerances { validation: 1e-10, ..Default::default() }).unwrap()
}

#[test]
fn w1_under_hamming_is_tv_on_1000_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let p = dist(random_pmf(&mut rng, n));
        let q = dist(random_pmf(&mut rng, n));
        let (w, _) = wasserstein1(&p, &q, &GroundMetric::hamming(n)).unwrap();
        worst = worst.max((w - tv_distance(&p, &q).unwrap()).abs());
    }
    assert!(worst <= 1e-10, "worst |W1 - TV| = {worst}");
}

/// Every deterministic rule `y -> targets[y]`.
fn all_maps(n_x: usize, n_y: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n_x.pow(n_y as u32);
    (0..total).map(move |mut k| {
        (0..n_y)
            .map(|_| {
                let t = k % n_x;
                k /= n_x;
                t
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distortion_within_cost_range(seed in any::<u64>(), n_x in 1usize..5, n_y in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = JointChannel::new(Matrix::from_row_major(n_x, n_y, random_pmf(&mut rng, n_x * n_y)).unwrap());
        prop_assume!(ch.is_ok());
        let ch = ch.unwrap();
        let d = DistortionMatrix::new(Matrix::from_fn(n_x, n_x, |_, _| rng.gen::<f64>())).unwrap();
        let mut cols = Vec::new();
        for _ in 0..n_y {
            cols.push(random_pmf(&mut rng, n_x));
        }
        let q = Estimator::new(Matrix::from_fn(n_x, n_y, |x, y| cols[y][x])).unwrap();
        let e = expected_distortion(&ch, &d, &q).unwrap();
        prop_assert!(e >= d.matrix().min_entry() - 1e-12);
        prop_assert!(e <= d.matrix().max_entry() + 1e-12);
    }

    #[test]
    fn posterior_sampling_reproduces_source(seed in any::<u64>(), n_x in 1usize..6, n_y in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = JointChannel::new(Matrix::from_row_major(n_x, n_y, random_pmf(&mut rng, n_x * n_y)).unwrap());
        prop_assume!(ch.is_ok());
        let ch = ch.unwrap();
        let out = output_distribution(&posterior_sampling(&ch), ch.p_y()).unwrap();
        for (a, b) in out.as_slice().iter().zip(ch.p_x()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn greedy_beats_every_deterministic_rule(seed in any::<u64>(), n_x in 1usize..5, n_y in 1usize..6) {
        prop_assume!(n_x.pow(n_y as u32) <= 4096);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = JointChannel::new(Matrix::from_row_major(n_x, n_y, random_pmf(&mut rng, n_x * n_y)).unwrap());
        prop_assume!(ch.is_ok());
        let ch = ch.unwrap();
        let d = DistortionMatrix::new(Matrix::from_fn(n_x, n_x, |_, _| rng.gen::<f64>())).unwrap();
        let (value, greedy) = d_star(&ch, &d);
        prop_assert!((expected_distortion(&ch, &d, &greedy).unwrap() - value).abs() <= 1e-15);
        for targets in all_maps(n_x, n_y) {
            let q = Estimator::deterministic(n_x, &targets);
            prop_assert!(expected_distortion(&ch, &d, &q).unwrap() >= value - 1e-15);
        }
    }

    #[test]
    fn tv_is_a_metric(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q, r) = (
            dist(random_pmf(&mut rng, n)),
            dist(random_pmf(&mut rng, n)),
            dist(random_pmf(&mut rng, n)),
        );
        let tv = |a: &Distribution, b: &Distribution| tv_distance(a, b).unwrap();
        prop_assert_eq!(tv(&p, &q), tv(&q, &p));
        prop_assert_eq!(tv(&p, &p), 0.0);
        prop_assert!(tv(&p, &r) <= tv(&p, &q) + tv(&q, &r) + 1e-15);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&tv(&p, &q)));
        if p != q {
            prop_assert!(tv(&p, &q) > 0.0);
        }
    }
}
