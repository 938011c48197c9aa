//! Exact-covariance fractional Brownian motion on uniform grids.
//!
//! Increments are sampled by circulant embedding of the fractional Gaussian
//! noise autocovariance. When the embedding has a materially negative
//! eigenvalue the sampler falls back to a dense Cholesky factor, and the path
//! records which method produced it.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{CfouError, Result};
use crate::seed::sub_seed;

/// Eigenvalues below this abort circulant embedding.
const NEGATIVE_EIGEN_TOL: f64 = -1e-10;

/// Default size cap for the dense Cholesky oracle.
pub const CHOLESKY_ORACLE_CAP: usize = 2048;

/// Hurst exponent in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 && h < 1.0 {
            Ok(HurstParam(h))
        } else {
            Err(CfouError::arg(format!("Hurst parameter {h} outside (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `H (2H - 1)`, the prefactor of the covariance density.
    pub fn alpha(self) -> f64 {
        self.0 * (2.0 * self.0 - 1.0)
    }

    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }
}

/// Uniform grid `t_k = k dt`, `k = 0..=n_steps`, on `[0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    t_max: f64,
    n_steps: usize,
}

impl GridSpec {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(CfouError::arg(format!("horizon {t_max} must be positive")));
        }
        if n_steps == 0 {
            return Err(CfouError::arg("grid needs at least one step"));
        }
        Ok(GridSpec { t_max, n_steps })
    }

    /// Grid of `round(t_max / dt)` steps.
    pub fn with_step(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CfouError::arg(format!("step {dt} must be positive")));
        }
        let n = (t_max / dt).round();
        if n < 1.0 {
            return Err(CfouError::arg(format!("step {dt} exceeds horizon {t_max}")));
        }
        GridSpec::new(t_max, n as usize)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }
}

/// Autocovariance of unit-spacing fractional Gaussian noise at `lag`.
pub fn fgn_autocov(h: HurstParam, lag: usize) -> f64 {
    let two_h = 2.0 * h.value();
    let m = lag as f64;
    if lag == 0 {
        return 1.0;
    }
    0.5 * ((m + 1.0).powf(two_h) + (m - 1.0).powf(two_h) - 2.0 * m.powf(two_h))
}

/// Covariance of increments `j` and `k` of fBm on `grid`.
pub fn fbm_increment_cov(h: HurstParam, grid: GridSpec, j: usize, k: usize) -> Result<f64> {
    let n = grid.n_steps();
    if j >= n || k >= n {
        return Err(CfouError::arg(format!(
            "increment index ({j}, {k}) outside grid of {n} steps"
        )));
    }
    Ok(grid.dt().powf(2.0 * h.value()) * fgn_autocov(h, j.abs_diff(k)))
}

/// `ρ(0), .., ρ(len - 1)` for increments on `grid`.
pub fn increment_autocov(h: HurstParam, grid: GridSpec, len: usize) -> Vec<f64> {
    let scale = grid.dt().powf(2.0 * h.value());
    (0..len).map(|m| scale * fgn_autocov(h, m)).collect()
}

/// How a path was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMethod {
    CirculantEmbedding { embedding_len: usize },
    /// Circulant embedding was not nonnegative definite; the dense factor was used.
    CholeskyFallback { embedding_len: usize },
    Cholesky,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealFbmPath {
    pub grid: GridSpec,
    pub hurst: HurstParam,
    pub increments: Vec<f64>,
    pub method: SamplerMethod,
}

impl RealFbmPath {
    /// Path values `B_{t_0} = 0, .., B_{t_n}`.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for dx in &self.increments {
            acc += dx;
            out.push(acc);
        }
        out
    }
}

/// Increments `Δζ_k = (ΔB¹_k + i ΔB²_k) / √2` of complex fBm.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub grid: GridSpec,
    pub hurst: HurstParam,
    pub increments: Vec<Complex64>,
}

enum Engine {
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Dense {
        factor: DMatrix<f64>,
        fallback_from: Option<usize>,
    },
}

/// Reusable sampler for one `(h, grid)` pair. Cheap to share across threads.
pub struct FbmSampler {
    hurst: HurstParam,
    grid: GridSpec,
    engine: Engine,
}

impl std::fmt::Debug for FbmSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmSampler")
            .field("hurst", &self.hurst)
            .field("grid", &self.grid)
            .field("method", &self.method())
            .finish()
    }
}

/// Smallest power of two that is at least `2 (n - 1)` (and at least 2).
pub fn embedding_len(n: usize) -> usize {
    (2 * n.saturating_sub(1)).max(2).next_power_of_two()
}

fn dense_factor(h: HurstParam, grid: GridSpec) -> Result<DMatrix<f64>> {
    let n = grid.n_steps();
    let acov = increment_autocov(h, grid, n);
    let cov = DMatrix::from_fn(n, n, |j, k| acov[j.abs_diff(k)]);
    cov.cholesky().map(|c| c.l()).ok_or_else(|| {
        CfouError::numerical(
            format!("increment covariance for H={} on {n} steps is not positive definite", h.value()),
            0.0,
        )
    })
}

impl FbmSampler {
    /// Circulant-embedding sampler, falling back to Cholesky when needed.
    pub fn new(h: HurstParam, grid: GridSpec) -> Result<Self> {
        let n = grid.n_steps();
        let m = embedding_len(n);
        let half = m / 2;
        let unit: Vec<f64> = (0..=half).map(|k| fgn_autocov(h, k)).collect();
        let mut row: Vec<Complex64> = (0..m)
            .map(|k| Complex64::new(if k <= half { unit[k] } else { unit[m - k] }, 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);

        let min_eig = row.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min_eig < NEGATIVE_EIGEN_TOL {
            return Ok(FbmSampler {
                hurst: h,
                grid,
                engine: Engine::Dense {
                    factor: dense_factor(h, grid)?,
                    fallback_from: Some(m),
                },
            });
        }
        let scale = grid.dt().powf(h.value());
        let sqrt_eig = row
            .iter()
            .map(|z| scale * (z.re.max(0.0) / m as f64).sqrt())
            .collect();
        Ok(FbmSampler {
            hurst: h,
            grid,
            engine: Engine::Circulant { sqrt_eig, fft },
        })
    }

    /// Dense-factor sampler; refuses grids above `cap` steps.
    pub fn cholesky(h: HurstParam, grid: GridSpec, cap: usize) -> Result<Self> {
        if grid.n_steps() > cap {
            return Err(CfouError::Resource(format!(
                "Cholesky oracle limited to {cap} steps, grid has {}",
                grid.n_steps()
            )));
        }
        Ok(FbmSampler {
            hurst: h,
            grid,
            engine: Engine::Dense {
                factor: dense_factor(h, grid)?,
                fallback_from: None,
            },
        })
    }

    pub fn method(&self) -> SamplerMethod {
        match &self.engine {
            Engine::Circulant { sqrt_eig, .. } => SamplerMethod::CirculantEmbedding {
                embedding_len: sqrt_eig.len(),
            },
            Engine::Dense {
                fallback_from: Some(m),
                ..
            } => SamplerMethod::CholeskyFallback { embedding_len: *m },
            Engine::Dense { .. } => SamplerMethod::Cholesky,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn sample(&self, seed: u64) -> RealFbmPath {
        let n = self.grid.n_steps();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let increments = match &self.engine {
            Engine::Circulant { sqrt_eig, fft } => {
                let mut buf: Vec<Complex64> = sqrt_eig
                    .iter()
                    .map(|s| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re, im) * *s
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..n].iter().map(|z| z.re).collect()
            }
            Engine::Dense { factor, .. } => {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                (factor * z).iter().copied().collect()
            }
        };
        RealFbmPath {
            grid: self.grid,
            hurst: self.hurst,
            increments,
            method: self.method(),
        }
    }
}

/// Complex noise from two independent real samplers' draws.
#[derive(Debug)]
pub struct ComplexNoiseSampler {
    real: FbmSampler,
}

impl ComplexNoiseSampler {
    pub fn new(h: HurstParam, grid: GridSpec) -> Result<Self> {
        Ok(ComplexNoiseSampler {
            real: FbmSampler::new(h, grid)?,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.real.grid
    }

    pub fn hurst(&self) -> HurstParam {
        self.real.hurst
    }

    pub fn method(&self) -> SamplerMethod {
        self.real.method()
    }

    /// Streams 0 and 1 of `seed` drive `B¹` and `B²`.
    pub fn sample(&self, seed: u64) -> NoisePath {
        let b1 = self.real.sample(sub_seed(seed, 0));
        let b2 = self.real.sample(sub_seed(seed, 1));
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let increments = b1
            .increments
            .iter()
            .zip(&b2.increments)
            .map(|(x, y)| Complex64::new(*x, *y) * inv_sqrt2)
            .collect();
        NoisePath {
            grid: self.real.grid,
            hurst: self.real.hurst,
            increments,
        }
    }
}

pub fn sample_fbm(h: HurstParam, grid: GridSpec, seed: u64) -> Result<RealFbmPath> {
    Ok(FbmSampler::new(h, grid)?.sample(seed))
}

pub fn sample_fbm_cholesky(h: HurstParam, grid: GridSpec, seed: u64) -> Result<RealFbmPath> {
    Ok(FbmSampler::cholesky(h, grid, CHOLESKY_ORACLE_CAP)?.sample(seed))
}

pub fn sample_complex_noise(h: HurstParam, grid: GridSpec, seed: u64) -> Result<NoisePath> {
    Ok(ComplexNoiseSampler::new(h, grid)?.sample(seed))
}
