//! Seeded Monte Carlo experiments on the drift estimator.
//!
//! Replica `r` at horizon index `i` is driven by
//! `replica_seed(base_seed, i, r)`, so results do not depend on how replicas
//! are scheduled. Per-replica outputs are stored by index and reduced with
//! pairwise summation in index order.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::asymptotics::limiting_covariance;
use crate::error::{CfouError, Result};
use crate::ou_sim::{estimate_with_correction, wick_correction, ModelParams, PsiFunctional, Simulator};
use crate::randfield::{ComplexNoiseSampler, GridSpec};
use crate::seed::replica_seed;

/// Largest fraction of failed replicas tolerated before a run is aborted.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub t_list: Vec<f64>,
    pub dt: f64,
    pub replicas: usize,
    pub base_seed: u64,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.replicas == 0 {
            return Err(CfouError::arg("at least one replica is required"));
        }
        if self.t_list.is_empty() {
            return Err(CfouError::arg("horizon list is empty"));
        }
        if self.t_list.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(CfouError::arg("horizons must be positive"));
        }
        if self.t_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CfouError::arg("horizons must be strictly ascending"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CfouError::arg(format!("dt = {} must be positive", self.dt)));
        }
        if self.workers == 0 {
            return Err(CfouError::arg("workers must be at least 1"));
        }
        Ok(())
    }

    pub fn grid(&self, t_max: f64) -> Result<GridSpec> {
        GridSpec::with_step(t_max, self.dt)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CfouError::Resource(format!("cannot start worker pool: {e}")))
    }
}

/// Sum in a fixed binary tree over the slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

fn cmean(xs: &[Complex64]) -> Complex64 {
    let re: Vec<f64> = xs.iter().map(|z| z.re).collect();
    let im: Vec<f64> = xs.iter().map(|z| z.im).collect();
    Complex64::new(mean(&re), mean(&im))
}

/// Unbiased sample covariance of two columns.
fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len();
    if m < 2 {
        return f64::NAN;
    }
    let (mx, my) = (mean(x), mean(y));
    let prod: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    pairwise_sum(&prod) / (m - 1) as f64
}

/// Standard error of the mean of a sample.
fn mean_se(x: &[f64]) -> f64 {
    (covariance(x, x) / x.len() as f64).sqrt()
}

/// Modulus of a complex mean and its standard error
/// `sqrt((s²_re + s²_im) / M)`.
fn complex_mean_se(xs: &[Complex64]) -> f64 {
    let re: Vec<f64> = xs.iter().map(|z| z.re).collect();
    let im: Vec<f64> = xs.iter().map(|z| z.im).collect();
    ((covariance(&re, &re) + covariance(&im, &im)) / xs.len() as f64).sqrt()
}

/// Sample covariance of bivariate points and the standard errors of its
/// entries.
pub fn sample_covariance(points: &[[f64; 2]]) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let x: Vec<f64> = points.iter().map(|p| p[0]).collect();
    let y: Vec<f64> = points.iter().map(|p| p[1]).collect();
    let cols = [x, y];
    let means = [mean(&cols[0]), mean(&cols[1])];
    let mut cov = [[0.0; 2]; 2];
    let mut se = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            cov[i][j] = covariance(&cols[i], &cols[j]);
            let prod: Vec<f64> = cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .collect();
            se[i][j] = mean_se(&prod);
        }
    }
    (cov, se)
}

fn inverse_2x2(m: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].abs().max(m[1][1].abs());
    if !(det.is_finite() && det > 1e-12 * scale * scale) {
        return Err(CfouError::arg(format!("predicted covariance is singular (det = {det:.3e})")));
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

fn mahalanobis_sq(inv: &[[f64; 2]; 2], p: [f64; 2]) -> f64 {
    p[0] * (inv[0][0] * p[0] + inv[0][1] * p[1]) + p[1] * (inv[1][0] * p[0] + inv[1][1] * p[1])
}

/// Results at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub t_max: f64,
    pub n_steps: usize,
    pub attempted: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub mean_gamma_hat: Complex64,
    /// `|mean(γ̂) − γ|`
    pub bias: f64,
    pub bias_se: f64,
    pub mean_gamma_hat_pathwise: Complex64,
    pub bias_pathwise: f64,
    pub bias_pathwise_se: f64,
    /// Mean of the uncorrected numerator `Σ conj(Z_k)(Z_{k+1} − Z_k)`.
    pub mean_numerator_pathwise: Complex64,
    pub numerator_pathwise_se: f64,
    /// Mean of the noise part of the pathwise numerator, whose expectation is
    /// the Wick trace.
    pub mean_noise_pathwise: Complex64,
    pub noise_pathwise_se: f64,
    /// Analytic Wick trace `C_T`.
    pub wick_trace: Complex64,
    /// Sample covariance of `(√T Re(γ̂−γ), √T Im(γ̂−γ))`.
    pub sample_cov: [[f64; 2]; 2],
    pub sample_cov_se: [[f64; 2]; 2],
    /// Mean squared Mahalanobis distance under the predicted covariance
    /// (2 under the limit law).
    pub mahalanobis_mean: Option<f64>,
    /// The points `√T (γ̂ − γ)` by replica index.
    pub scaled_errors: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub config: ExperimentConfig,
    /// Limit covariance of `√T(γ̂_T − γ)`, when it could be computed.
    pub predicted_cov: Option<[[f64; 2]; 2]>,
    pub rows: Vec<McRow>,
}

#[derive(Debug, Clone, Copy)]
struct Replica {
    gamma_hat: Complex64,
    gamma_hat_pathwise: Complex64,
    numerator_pathwise: Complex64,
    noise_pathwise: Complex64,
}

fn failure_check(failed: usize, attempted: usize, t_max: f64) -> Result<()> {
    if failed as f64 > MAX_FAILURE_FRACTION * attempted as f64 {
        return Err(CfouError::DegeneratePath(format!(
            "{failed} of {attempted} replicas failed at T = {t_max}"
        )));
    }
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<McSummary> {
    cfg.validate()?;
    cfg.params.require_estimation_range()?;
    let predicted_cov = if cfg.params.a > 0.0 {
        limiting_covariance(&cfg.params).ok().map(|c| c.cov)
    } else {
        None
    };
    let inv = predicted_cov.map(inverse_2x2).transpose().ok().flatten();
    let pool = cfg.pool()?;
    let gamma = cfg.params.gamma();
    let mut rows = Vec::with_capacity(cfg.t_list.len());
    for (ti, &t_max) in cfg.t_list.iter().enumerate() {
        let grid = cfg.grid(t_max)?;
        let sim = Simulator::new(cfg.params, grid)?;
        let correction = wick_correction(&cfg.params, grid);
        let outcomes: Vec<Result<Replica>> = pool.install(|| {
            (0..cfg.replicas)
                .into_par_iter()
                .map(|r| {
                    let seed = replica_seed(cfg.base_seed, ti, r);
                    let est = estimate_with_correction(&sim.run(seed), correction)?;
                    Ok(Replica {
                        gamma_hat: est.gamma_hat,
                        gamma_hat_pathwise: est.gamma_hat_pathwise,
                        numerator_pathwise: est.numerator_pathwise,
                        noise_pathwise: est.noise_pathwise,
                    })
                })
                .collect()
        });
        let ok: Vec<Replica> = outcomes.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
        let failed = cfg.replicas - ok.len();
        failure_check(failed, cfg.replicas, t_max)?;
        if ok.is_empty() {
            return Err(CfouError::DegeneratePath(format!("no replica succeeded at T = {t_max}")));
        }
        let g: Vec<Complex64> = ok.iter().map(|r| r.gamma_hat).collect();
        let gp: Vec<Complex64> = ok.iter().map(|r| r.gamma_hat_pathwise).collect();
        let np: Vec<Complex64> = ok.iter().map(|r| r.numerator_pathwise).collect();
        let wp: Vec<Complex64> = ok.iter().map(|r| r.noise_pathwise).collect();
        let mean_g = cmean(&g);
        let mean_gp = cmean(&gp);
        let root_t = t_max.sqrt();
        let scaled: Vec<[f64; 2]> = g
            .iter()
            .map(|z| {
                let e = (z - gamma) * root_t;
                [e.re, e.im]
            })
            .collect();
        let (sample_cov, sample_cov_se) = sample_covariance(&scaled);
        let mahalanobis_mean = inv.map(|m| {
            let d: Vec<f64> = scaled.iter().map(|p| mahalanobis_sq(&m, *p)).collect();
            mean(&d)
        });
        rows.push(McRow {
            t_max,
            n_steps: grid.n_steps(),
            attempted: cfg.replicas,
            succeeded: ok.len(),
            failed,
            mean_gamma_hat: mean_g,
            bias: (mean_g - gamma).norm(),
            bias_se: complex_mean_se(&g),
            mean_gamma_hat_pathwise: mean_gp,
            bias_pathwise: (mean_gp - gamma).norm(),
            bias_pathwise_se: complex_mean_se(&gp),
            mean_numerator_pathwise: cmean(&np),
            numerator_pathwise_se: complex_mean_se(&np),
            mean_noise_pathwise: cmean(&wp),
            noise_pathwise_se: complex_mean_se(&wp),
            wick_trace: correction,
            sample_cov,
            sample_cov_se,
            mahalanobis_mean,
            scaled_errors: scaled,
        });
    }
    Ok(McSummary {
        config: cfg.clone(),
        predicted_cov,
        rows,
    })
}

/// Outcome of [`normality_test`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityReport {
    pub samples: usize,
    /// Kolmogorov–Smirnov distance between the squared Mahalanobis distances
    /// and the χ²(2) law.
    pub ks_statistic: f64,
    /// 99% critical value for `samples` points.
    pub critical_value: f64,
    pub passes: bool,
    pub sample_cov: [[f64; 2]; 2],
    /// `|S − P| / P` on the diagonal, `|S₀₁ − P₀₁| / sqrt(P₀₀ P₁₁)` off it.
    pub cov_rel_error: [[f64; 2]; 2],
}

impl NormalityReport {
    pub fn max_cov_rel_error(&self) -> f64 {
        self.cov_rel_error.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }
}

/// Minimum sample size accepted by [`normality_test`].
pub const NORMALITY_MIN_SAMPLES: usize = 200;

/// 99% Kolmogorov–Smirnov critical value with Stephens' small-sample factor.
pub fn ks_critical_99(m: usize) -> f64 {
    let r = (m as f64).sqrt();
    1.628 / (r + 0.12 + 0.11 / r)
}

pub fn normality_test(row: &McRow, predicted_cov: [[f64; 2]; 2]) -> Result<NormalityReport> {
    normality_test_points(&row.scaled_errors, predicted_cov)
}

pub fn normality_test_points(points: &[[f64; 2]], predicted_cov: [[f64; 2]; 2]) -> Result<NormalityReport> {
    let m = points.len();
    if m < NORMALITY_MIN_SAMPLES {
        return Err(CfouError::arg(format!(
            "normality test needs at least {NORMALITY_MIN_SAMPLES} points, got {m}"
        )));
    }
    let inv = inverse_2x2(predicted_cov)?;
    let mut d: Vec<f64> = points.iter().map(|p| mahalanobis_sq(&inv, *p)).collect();
    d.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, &x) in d.iter().enumerate() {
        let cdf = 1.0 - (-0.5 * x).exp();
        ks = ks
            .max((i + 1) as f64 / m as f64 - cdf)
            .max(cdf - i as f64 / m as f64);
    }
    let critical_value = ks_critical_99(m);
    let (sample_cov, _) = sample_covariance(points);
    let p = predicted_cov;
    let off_scale = (p[0][0] * p[1][1]).sqrt();
    let cov_rel_error = [
        [
            (sample_cov[0][0] - p[0][0]).abs() / p[0][0],
            (sample_cov[0][1] - p[0][1]).abs() / off_scale,
        ],
        [
            (sample_cov[1][0] - p[1][0]).abs() / off_scale,
            (sample_cov[1][1] - p[1][1]).abs() / p[1][1],
        ],
    ];
    Ok(NormalityReport {
        samples: m,
        ks_statistic: ks,
        critical_value,
        passes: ks <= critical_value,
        sample_cov,
        cov_rel_error,
    })
}

/// Monte Carlo moments of `F_T = I_{1,1}(ψ_T) / (α_H √T)` at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourthMomentRow {
    pub t_max: f64,
    pub n_steps: usize,
    pub samples: usize,
    pub m2_abs: f64,
    pub m2_abs_se: f64,
    pub m2: Complex64,
    /// Standard errors of the real and imaginary parts of `m2`.
    pub m2_se: [f64; 2],
    pub m4_abs: f64,
    pub m4_abs_se: f64,
    /// `E|F|⁴ − 2(E|F|²)² − |E F²|²`
    pub gap: f64,
    /// Delta-method standard error of `gap`.
    pub gap_se: f64,
}

/// Diagonal weight of the tabulated ψ used by [`fourth_moment_mc`].
pub const FOURTH_MOMENT_DIAGONAL: f64 = 0.5;

pub fn fourth_moment_mc(cfg: &ExperimentConfig) -> Result<Vec<FourthMomentRow>> {
    cfg.validate()?;
    let h = cfg.params.h;
    if !(h.value() > 0.5 && h.value() < 0.75) {
        return Err(CfouError::arg(format!("H = {} outside (1/2, 3/4)", h.value())));
    }
    let pool = cfg.pool()?;
    let mut rows = Vec::with_capacity(cfg.t_list.len());
    for (ti, &t_max) in cfg.t_list.iter().enumerate() {
        let grid = cfg.grid(t_max)?;
        let sampler = ComplexNoiseSampler::new(h, grid)?;
        let functional = PsiFunctional::new(&cfg.params, grid, FOURTH_MOMENT_DIAGONAL);
        let norm = 1.0 / (h.alpha() * t_max.sqrt());
        let values: Vec<Complex64> = pool.install(|| {
            (0..cfg.replicas)
                .into_par_iter()
                .map(|r| {
                    let noise = sampler.sample(replica_seed(cfg.base_seed, ti, r));
                    functional.eval(&noise).map(|x| x * norm)
                })
                .collect::<Result<_>>()
        })?;
        let abs2: Vec<f64> = values.iter().map(|f| f.norm_sqr()).collect();
        let abs4: Vec<f64> = abs2.iter().map(|a| a * a).collect();
        let sq_re: Vec<f64> = values.iter().map(|f| (f * f).re).collect();
        let sq_im: Vec<f64> = values.iter().map(|f| (f * f).im).collect();
        let m2_abs = mean(&abs2);
        let m2 = Complex64::new(mean(&sq_re), mean(&sq_im));
        let m4_abs = mean(&abs4);
        let linear: Vec<f64> = (0..values.len())
            .map(|i| abs4[i] - 4.0 * m2_abs * abs2[i] - 2.0 * (m2.re * sq_re[i] + m2.im * sq_im[i]))
            .collect();
        rows.push(FourthMomentRow {
            t_max,
            n_steps: grid.n_steps(),
            samples: values.len(),
            m2_abs,
            m2_abs_se: mean_se(&abs2),
            m2,
            m2_se: [mean_se(&sq_re), mean_se(&sq_im)],
            m4_abs,
            m4_abs_se: mean_se(&abs4),
            gap: m4_abs - 2.0 * m2_abs * m2_abs - m2.norm_sqr(),
            gap_se: mean_se(&linear),
        });
    }
    Ok(rows)
}
