use cfou::quadrature::TanhSinh;
use cfou::randfield::{
    fbm_increment_cov, sample_fbm_cholesky, ComplexNoiseSampler, FbmSampler, GridSpec, HurstParam,
};
use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

fn hp(h: f64) -> HurstParam {
    HurstParam::new(h).unwrap()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample mean of `x` and its standard error.
fn mean_se(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
    (m, (var / x.len() as f64).sqrt())
}

fn ks_statistic(mut x: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    x.sort_by(f64::total_cmp);
    let m = x.len() as f64;
    x.iter().enumerate().fold(0.0, |d: f64, (i, &v)| {
        let f = cdf(v);
        d.max((i + 1) as f64 / m - f).max(f - i as f64 / m)
    })
}

/// `α_H ∫_{I_j} ∫_{I_k} |u − v|^{2H−2} dv du` by nested quadrature.
fn rectangle_quadrature(h: f64, dt: f64, j: usize, k: usize) -> f64 {
    let alpha = h * (2.0 * h - 1.0);
    let p = 2.0 * h - 2.0;
    let rule = TanhSinh::with_tolerance(1e-12);
    let (lo, hi) = (j.min(k), j.max(k));
    if lo == hi {
        // two triangles; inner variable w = u − v
        let q = rule.span(dt, |u, _| rule.span(u, |w, _| Complex64::new(w.powf(p), 0.0)).value);
        return 2.0 * alpha * q.value.re;
    }
    // u in I_hi measured from its left end, v in I_lo measured from its right end
    let gap = (hi - lo - 1) as f64 * dt;
    let q = rule.span(dt, |x, _| {
        rule.span(dt, |y, _| Complex64::new((gap + x + y).powf(p), 0.0)).value
    });
    alpha * q.value.re
}

#[test]
fn closed_form_matches_rectangle_quadrature() {
    for &h in &[0.55, 0.6, 0.7, 0.9] {
        let grid = GridSpec::new(2.0, 8).unwrap();
        for &(j, k) in &[(0, 0), (0, 1), (2, 5), (7, 0), (3, 3)] {
            let exact = fbm_increment_cov(hp(h), grid, j, k).unwrap();
            let quad = rectangle_quadrature(h, grid.dt(), j, k);
            assert!((exact - quad).abs() <= 1e-8 * exact.abs(), "h={h} ({j},{k}) {exact} {quad}");
        }
    }
}

#[test]
fn brownian_increments_are_standard_normal() {
    let grid = GridSpec::new(4.0, 64).unwrap();
    let sampler = FbmSampler::new(hp(0.5), grid).unwrap();
    let m = 10_000;
    let scale = grid.dt().sqrt();
    let first: Vec<f64> = (0..m).map(|s| sampler.sample(s).increments[0] / scale).collect();
    let middle: Vec<f64> = (0..m).map(|s| sampler.sample(s).increments[31] / scale).collect();
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let crit = 1.628 / (m as f64).sqrt();
    assert!(ks_statistic(first.clone(), |x| n01.cdf(x)) < crit);
    assert!(ks_statistic(middle.clone(), |x| n01.cdf(x)) < crit);
    let prod: Vec<f64> = first.iter().zip(&middle).map(|(a, b)| a * b).collect();
    let (c, se) = mean_se(&prod);
    assert!(c.abs() < 4.0 * se);
}

#[test]
fn lag_one_covariance_h07() {
    let grid = GridSpec::new(512.0, 512).unwrap();
    let h = hp(0.7);
    let sampler = FbmSampler::new(h, grid).unwrap();
    let prod: Vec<f64> = (0..100_000u64)
        .map(|s| {
            let x = sampler.sample(s).increments;
            x[100] * x[101]
        })
        .collect();
    let (c, se) = mean_se(&prod);
    let exact = fbm_increment_cov(h, grid, 100, 101).unwrap();
    assert!((c - exact).abs() < 3.0 * se, "{c} vs {exact} (se {se})");
}

#[test]
fn fft_and_cholesky_samplers_agree() {
    let grid = GridSpec::new(3.0, 256).unwrap();
    let h = hp(0.6);
    let fft = FbmSampler::new(h, grid).unwrap();
    let m = 10_000u64;
    let a: Vec<Vec<f64>> = (0..m).map(|s| fft.sample(s).increments).collect();
    let b: Vec<Vec<f64>> = (0..m)
        .map(|s| sample_fbm_cholesky(h, grid, 1_000_000 + s).unwrap().increments)
        .collect();
    for &(j, k) in &[(0, 0), (0, 1), (10, 12), (50, 150), (255, 255), (100, 101)] {
        let pa: Vec<f64> = a.iter().map(|x| x[j] * x[k]).collect();
        let pb: Vec<f64> = b.iter().map(|x| x[j] * x[k]).collect();
        let (ma, sa) = mean_se(&pa);
        let (mb, sb) = mean_se(&pb);
        assert!((ma - mb).abs() < 4.0 * (sa * sa + sb * sb).sqrt(), "({j},{k}) {ma} {mb}");
        let exact = fbm_increment_cov(h, grid, j, k).unwrap();
        assert!((mb - exact).abs() < 4.0 * sb);
    }
}

#[test]
fn fbm_variance_is_self_similar() {
    let grid = GridSpec::new(5.0, 100).unwrap();
    let h = hp(0.65);
    let sampler = FbmSampler::new(h, grid).unwrap();
    let paths: Vec<Vec<f64>> = (0..20_000u64).map(|s| sampler.sample(s).values()).collect();
    for k in [1usize, 10, 37, 100] {
        let sq: Vec<f64> = paths.iter().map(|p| p[k] * p[k]).collect();
        let (v, se) = mean_se(&sq);
        let t: f64 = grid.time(k);
        assert!((v - t.powf(1.3)).abs() < 4.0 * se, "k={k} {v} {}", t.powf(1.3));
    }
}

#[test]
fn complex_noise_moments() {
    let grid = GridSpec::new(2.0, 32).unwrap();
    let h = hp(0.6);
    let sampler = ComplexNoiseSampler::new(h, grid).unwrap();
    let m = 20_000u64;
    let draws: Vec<Complex64> = (0..m).map(|s| sampler.sample(s).increments[5]).collect();
    let abs2: Vec<f64> = draws.iter().map(|z| z.norm_sqr()).collect();
    let (v, se) = mean_se(&abs2);
    let target = grid.dt().powf(1.2);
    assert!((v - target).abs() < 4.0 * se);
    let sq_re: Vec<f64> = draws.iter().map(|z| (z * z).re).collect();
    let sq_im: Vec<f64> = draws.iter().map(|z| (z * z).im).collect();
    for x in [sq_re, sq_im] {
        let (c, se) = mean_se(&x);
        assert!(c.abs() < 4.0 * se);
    }
    assert_eq!(sampler.sample(9), sampler.sample(9));
}
