//! Complex Wiener–Itô calculus of order (1,1) on a uniform grid.
//!
//! A kernel `K` is an `n × n` complex matrix whose row index is the ζ-slot and
//! whose column index is the ζ̄-slot. With `ξ = Δζ` on the grid,
//! `E[ξ ξᵀ] = 0` and `E[ξ ξᴴ] = Σ`, the increment covariance. The double
//! integral of `K` is the Wick-ordered quadratic form
//!
//! ```text
//! F = Σ_{r,s} K[r][s] (ξ_r conj(ξ_s) − Σ[r][s])
//! ```
//!
//! and every moment used here reduces to traces of products of `K`, `Kᴴ` and `Σ`:
//! `E|F|² = tr(KΣKᴴΣ)`, `E F² = tr(KΣKΣ)`.

use std::sync::Arc;

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

use crate::error::{CfouError, Result};
use crate::randfield::{increment_autocov, GridSpec, HurstParam, NoisePath};

/// Default size cap for exact moment computations.
pub const EXACT_MOMENT_CAP: usize = 512;

/// Largest grid for which a dense gram matrix is built.
pub const GRAM_CAP: usize = 8192;

/// Increment covariance matrix of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiGram {
    grid: GridSpec,
    hurst: HurstParam,
    autocov: Vec<f64>,
    sigma: Array2<Complex64>,
}

impl PhiGram {
    pub fn new(h: HurstParam, grid: GridSpec) -> Result<Self> {
        let n = grid.n_steps();
        if n > GRAM_CAP {
            return Err(CfouError::Resource(format!(
                "gram matrix limited to {GRAM_CAP} steps, grid has {n}"
            )));
        }
        let autocov = increment_autocov(h, grid, n);
        let sigma = Array2::from_shape_fn((n, n), |(j, k)| Complex64::new(autocov[j.abs_diff(k)], 0.0));
        Ok(PhiGram {
            grid,
            hurst: h,
            autocov,
            sigma,
        })
    }

    pub fn shared(h: HurstParam, grid: GridSpec) -> Result<Arc<Self>> {
        PhiGram::new(h, grid).map(Arc::new)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn n(&self) -> usize {
        self.grid.n_steps()
    }

    /// `Σ[j][k]`.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.autocov[j.abs_diff(k)]
    }

    /// `Σ[0][m]`, the covariance at lag `m`.
    pub fn autocov(&self) -> &[f64] {
        &self.autocov
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.sigma
    }

    fn same_as(&self, other: &PhiGram) -> bool {
        std::ptr::eq(self, other) || (self.grid == other.grid && self.hurst == other.hurst)
    }
}

/// `Σ_{j,k} f[j] conj(g[k]) Σ[j][k]`.
pub fn phi_inner(gram: &PhiGram, f: &[Complex64], g: &[Complex64]) -> Result<Complex64> {
    let n = gram.n();
    if f.len() != n || g.len() != n {
        return Err(CfouError::arg(format!(
            "vectors of length {} and {} on a grid of {n} steps",
            f.len(),
            g.len()
        )));
    }
    let gc: Array1<Complex64> = g.iter().map(|z| z.conj()).collect();
    let sg = gram.sigma.dot(&gc);
    Ok(f.iter().zip(sg.iter()).map(|(a, b)| a * b).sum())
}

/// Two-slot kernel tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridKernel {
    gram: Arc<PhiGram>,
    values: Array2<Complex64>,
}

impl GridKernel {
    pub fn new(gram: Arc<PhiGram>, values: Array2<Complex64>) -> Result<Self> {
        let n = gram.n();
        if values.dim() != (n, n) {
            return Err(CfouError::arg(format!(
                "kernel of shape {:?} on a grid of {n} steps",
                values.dim()
            )));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(CfouError::arg("kernel has non-finite entries"));
        }
        Ok(GridKernel { gram, values })
    }

    pub fn zeros(gram: Arc<PhiGram>) -> Self {
        let n = gram.n();
        GridKernel {
            gram,
            values: Array2::zeros((n, n)),
        }
    }

    pub fn from_fn<F>(gram: Arc<PhiGram>, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> Complex64,
    {
        let n = gram.n();
        let values = Array2::from_shape_fn((n, n), |(r, s)| f(r, s));
        GridKernel { gram, values }
    }

    pub fn gram(&self) -> &Arc<PhiGram> {
        &self.gram
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.gram.n()
    }

    /// `Kᴴ`: the kernel of the conjugate integral.
    pub fn conj_transpose(&self) -> GridKernel {
        GridKernel {
            gram: self.gram.clone(),
            values: self.values.t().mapv(|z| z.conj()),
        }
    }

    pub fn scaled(&self, c: Complex64) -> GridKernel {
        GridKernel {
            gram: self.gram.clone(),
            values: self.values.mapv(|z| z * c),
        }
    }

    /// Squared φ-norm `tr(KΣKᴴΣ)`.
    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.gram.sigma, &self.values)
    }

    fn check_pair(&self, other: &GridKernel) -> Result<()> {
        if self.gram.same_as(&other.gram) {
            Ok(())
        } else {
            Err(CfouError::arg("kernels live on different grids"))
        }
    }
}

fn norm_sq(sigma: &Array2<Complex64>, r: &Array2<Complex64>) -> f64 {
    let left = sigma.dot(r);
    let right = r.dot(sigma);
    Zip::from(&left)
        .and(&right)
        .fold(0.0, |acc, a, b| acc + (a * b.conj()).re)
}

/// `tr(A Σ B Σ)`.
fn trace_sandwich(sigma: &Array2<Complex64>, a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    let p = a.dot(sigma);
    let q = b.dot(sigma);
    Zip::from(&p).and(&q.t()).fold(Complex64::new(0.0, 0.0), |acc, x, y| acc + x * y)
}

/// Discrete double integral `Σ K[r][s] (ξ_r conj(ξ_s) − Σ[r][s])`.
pub fn eval_i11(kernel: &GridKernel, noise: &NoisePath) -> Result<Complex64> {
    let gram = &kernel.gram;
    if noise.grid != gram.grid || noise.hurst != gram.hurst {
        return Err(CfouError::arg("noise and kernel live on different grids"));
    }
    let xi_bar: Array1<Complex64> = noise.increments.iter().map(|z| z.conj()).collect();
    let k_xi = kernel.values.dot(&xi_bar);
    let raw: Complex64 = noise.increments.iter().zip(k_xi.iter()).map(|(a, b)| a * b).sum();
    Ok(raw - wick_trace(kernel))
}

/// `Σ_{r,s} K[r][s] Σ[r][s]`, the mean of the uncentered form.
pub fn wick_trace(kernel: &GridKernel) -> Complex64 {
    Zip::from(&kernel.values)
        .and(&kernel.gram.sigma)
        .fold(Complex64::new(0.0, 0.0), |acc, k, s| acc + k * s)
}

/// Rank-4 tensor `f(r, s) g(u, v)`, kept unevaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorProduct {
    pub f: GridKernel,
    pub g: GridKernel,
}

impl TensorProduct {
    pub fn entry(&self, r: usize, s: usize, u: usize, v: usize) -> Complex64 {
        self.f.values[[r, s]] * self.g.values[[u, v]]
    }

    pub fn norm_sq(&self) -> f64 {
        self.f.norm_sq() * self.g.norm_sq()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Contraction {
    Kernel(GridKernel),
    Scalar(Complex64),
    Tensor(TensorProduct),
}

impl Contraction {
    pub fn norm_sq(&self) -> f64 {
        match self {
            Contraction::Kernel(k) => k.norm_sq(),
            Contraction::Scalar(z) => z.norm_sqr(),
            Contraction::Tensor(t) => t.norm_sq(),
        }
    }

    pub fn into_kernel(self) -> Option<GridKernel> {
        match self {
            Contraction::Kernel(k) => Some(k),
            _ => None,
        }
    }

    pub fn scalar(&self) -> Option<Complex64> {
        match self {
            Contraction::Scalar(z) => Some(*z),
            _ => None,
        }
    }
}

/// `f ⊗_{i,j} g`: `i` pairs the ζ-slot of `f` with the ζ̄-slot of `g`, `j` pairs
/// the ζ̄-slot of `f` with the ζ-slot of `g`.
///
/// * `(1,0)` gives the kernel `gΣf`, `(0,1)` gives `fΣg`;
/// * `(1,1)` gives the scalar `tr(fΣgΣ)`;
/// * `(0,0)` gives the lazy tensor product.
pub fn contract(f: &GridKernel, g: &GridKernel, i: u8, j: u8) -> Result<Contraction> {
    f.check_pair(g)?;
    let sigma = &f.gram.sigma;
    let kernel = |values| Contraction::Kernel(GridKernel {
        gram: f.gram.clone(),
        values,
    });
    match (i, j) {
        (0, 0) => Ok(Contraction::Tensor(TensorProduct {
            f: f.clone(),
            g: g.clone(),
        })),
        (1, 0) => Ok(kernel(g.values.dot(sigma).dot(&f.values))),
        (0, 1) => Ok(kernel(f.values.dot(sigma).dot(&g.values))),
        (1, 1) => Ok(Contraction::Scalar(trace_sandwich(sigma, &f.values, &g.values))),
        _ => Err(CfouError::arg(format!(
            "contraction ({i}, {j}) undefined for (1,1) kernels"
        ))),
    }
}

/// Second and fourth moments of `F = I_{1,1}(K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosMoments {
    /// `E|F|²`
    pub m2_abs: f64,
    /// `E F²`
    pub m2: Complex64,
    /// `E|F|⁴`
    pub m4_abs: f64,
}

impl ChaosMoments {
    pub fn gap(&self) -> f64 {
        self.m4_abs - 2.0 * self.m2_abs * self.m2_abs - self.m2.norm_sqr()
    }
}

fn check_cap(kernel: &GridKernel, cap: usize) -> Result<()> {
    if kernel.n() > cap {
        Err(CfouError::Resource(format!(
            "exact moments limited to {cap} steps, kernel has {}",
            kernel.n()
        )))
    } else {
        Ok(())
    }
}

struct Products {
    f_sf: Array2<Complex64>,
    h_sf: Array2<Complex64>,
    f_sh: Array2<Complex64>,
}

fn products(kernel: &GridKernel) -> Products {
    let sigma = &kernel.gram.sigma;
    let f = &kernel.values;
    let h = f.t().mapv(|z| z.conj());
    let fs = f.dot(sigma);
    let sf = sigma.dot(f);
    Products {
        f_sf: fs.dot(f),
        h_sf: h.dot(&sf),
        f_sh: fs.dot(&h),
    }
}

pub fn chaos_moments_exact(kernel: &GridKernel) -> Result<ChaosMoments> {
    chaos_moments_exact_capped(kernel, EXACT_MOMENT_CAP)
}

/// Moments with the fourth moment taken from the contraction expansion
/// `‖h⊗_{1,0}f‖² + ‖f⊗_{1,0}h‖² + ‖f⊗_{0,1}f + f⊗_{1,0}f‖²` (with `h = fᴴ`).
pub fn chaos_moments_exact_capped(kernel: &GridKernel, cap: usize) -> Result<ChaosMoments> {
    check_cap(kernel, cap)?;
    let sigma = &kernel.gram.sigma;
    let f = &kernel.values;
    let m2_abs = norm_sq(sigma, f);
    let m2 = trace_sandwich(sigma, f, f);
    let p = products(kernel);
    let twice = p.f_sf.mapv(|z| z * 2.0);
    let gap = norm_sq(sigma, &p.f_sh) + norm_sq(sigma, &p.h_sf) + norm_sq(sigma, &twice);
    Ok(ChaosMoments {
        m2_abs,
        m2,
        m4_abs: 2.0 * m2_abs * m2_abs + m2.norm_sqr() + gap,
    })
}

/// Relative agreement required between the two evaluations of the gap.
pub const GAP_ROUTE_TOL: f64 = 1e-9;

/// Both evaluations of `E|F|⁴ − 2(E|F|²)² − |E F²|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRoutes {
    pub from_moments: f64,
    pub from_contractions: f64,
    pub moments: ChaosMoments,
}

impl GapRoutes {
    pub fn relative_residual(&self) -> f64 {
        let scale = self.from_moments.abs().max(self.from_contractions.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.from_moments - self.from_contractions).abs() / scale
        }
    }
}

/// Gap as the sum `‖f⊗_{1,0}f‖² + ‖f⊗_{0,1}f‖² + ‖h⊗_{1,0}f + f⊗_{1,0}h‖²`.
fn gap_from_contractions(kernel: &GridKernel) -> f64 {
    let sigma = &kernel.gram.sigma;
    let p = products(kernel);
    let ff = norm_sq(sigma, &p.f_sf);
    let mixed = &p.h_sf + &p.f_sh;
    2.0 * ff + norm_sq(sigma, &mixed)
}

pub fn fourth_moment_gap_routes(kernel: &GridKernel, cap: usize) -> Result<GapRoutes> {
    let moments = chaos_moments_exact_capped(kernel, cap)?;
    Ok(GapRoutes {
        from_moments: moments.gap(),
        from_contractions: gap_from_contractions(kernel),
        moments,
    })
}

pub fn fourth_moment_gap(kernel: &GridKernel) -> Result<f64> {
    let routes = fourth_moment_gap_routes(kernel, EXACT_MOMENT_CAP)?;
    let residual = routes.relative_residual();
    if residual > GAP_ROUTE_TOL {
        return Err(CfouError::numerical(
            "fourth-moment gap routes disagree",
            residual,
        ));
    }
    Ok(routes.from_moments)
}

/// `(Var‖DF‖², Var‖D̄F‖², Var⟨DF, DF̄⟩)`, equal to
/// `‖h⊗_{1,0}f‖²`, `‖f⊗_{1,0}h‖²` and `‖f⊗_{0,1}f‖²`.
pub fn malliavin_variances(kernel: &GridKernel) -> Result<(f64, f64, f64)> {
    check_cap(kernel, EXACT_MOMENT_CAP)?;
    let sigma = &kernel.gram.sigma;
    let p = products(kernel);
    Ok((
        norm_sq(sigma, &p.h_sf),
        norm_sq(sigma, &p.f_sh),
        norm_sq(sigma, &p.f_sf),
    ))
}
