use std::sync::Arc;

use cfou::grid_chaos::{
    chaos_moments_exact, eval_i11, fourth_moment_gap_routes, GridKernel, PhiGram,
};
use cfou::isserlis::oracle_moments;
use cfou::randfield::{ComplexNoiseSampler, GridSpec, HurstParam};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gram(h: f64, t: f64, n: usize) -> Arc<PhiGram> {
    PhiGram::shared(HurstParam::new(h).unwrap(), GridSpec::new(t, n).unwrap()).unwrap()
}

fn random_kernel(gram: Arc<PhiGram>, seed: u64) -> GridKernel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridKernel::from_fn(gram, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

#[test]
fn exact_moments_match_isserlis_oracle() {
    for (seed, (h, n)) in [(0.5, 3), (0.6, 4), (0.7, 5), (0.3, 4), (0.65, 6)].into_iter().enumerate() {
        let k = random_kernel(gram(h, 1.5, n), seed as u64);
        let exact = chaos_moments_exact(&k).unwrap();
        let oracle = oracle_moments(&k).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(exact.m2_abs, oracle.m2_abs) < 1e-11, "{exact:?} {oracle:?}");
        assert!((exact.m2 - oracle.m2).norm() / oracle.m2.norm() < 1e-11);
        assert!(rel(exact.m4_abs, oracle.m4_abs) < 1e-11);
        let routes = fourth_moment_gap_routes(&k, 64).unwrap();
        assert!(rel(routes.from_contractions, oracle.gap()) < 1e-9);
    }
}

#[test]
fn isometry_holds_statistically() {
    let g = gram(0.6, 4.0, 16);
    let k = random_kernel(g.clone(), 77);
    let exact = chaos_moments_exact(&k).unwrap();
    let sampler = ComplexNoiseSampler::new(g.hurst(), g.grid()).unwrap();
    let m = 20_000;
    let vals: Vec<Complex64> = (0..m)
        .map(|s| eval_i11(&k, &sampler.sample(s as u64)).unwrap())
        .collect();
    let mean: Complex64 = vals.iter().sum::<Complex64>() / m as f64;
    let sq: Vec<f64> = vals.iter().map(|z| z.norm_sqr()).collect();
    let m2 = sq.iter().sum::<f64>() / m as f64;
    let var_sq = sq.iter().map(|x| (x - m2).powi(2)).sum::<f64>() / (m - 1) as f64;
    let se = (var_sq / m as f64).sqrt();
    assert!((m2 - exact.m2_abs).abs() < 5.0 * se, "{m2} vs {} (se {se})", exact.m2_abs);
    let se_mean = (exact.m2_abs / m as f64).sqrt();
    assert!(mean.norm() < 5.0 * se_mean);
}
