//! Complex fractional Ornstein–Uhlenbeck paths and the least-squares drift
//! estimator.
//!
//! Paths follow `Z_{k+1} = e^{−γ dt} Z_k + √a Δζ_k`. The estimator divides the
//! Wick-corrected numerator `Σ conj(Z_k)(Z_{k+1} − Z_k) − C_T` by the
//! left-point energy `dt Σ_{k<n} |Z_k|²`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CfouError, Result};
use crate::grid_chaos::{GridKernel, PhiGram};
use crate::quadrature::TanhSinh;
use crate::randfield::{increment_autocov, ComplexNoiseSampler, GridSpec, HurstParam, NoisePath};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub omega: f64,
    pub a: f64,
    pub h: HurstParam,
    pub z0: Complex64,
}

impl ModelParams {
    pub fn new(lambda: f64, omega: f64, a: f64, h: f64) -> Result<Self> {
        let p = ModelParams {
            lambda,
            omega,
            a,
            h: HurstParam::new(h)?,
            z0: Complex64::new(0.0, 0.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_z0(mut self, z0: Complex64) -> Self {
        self.z0 = z0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(CfouError::arg(format!("lambda = {} must be positive", self.lambda)));
        }
        if !self.omega.is_finite() {
            return Err(CfouError::arg("omega must be finite"));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(CfouError::arg(format!("a = {} must be nonnegative", self.a)));
        }
        if !(self.z0.re.is_finite() && self.z0.im.is_finite()) {
            return Err(CfouError::arg("z0 must be finite"));
        }
        Ok(())
    }

    /// `γ = λ − iω`.
    pub fn gamma(&self) -> Complex64 {
        Complex64::new(self.lambda, -self.omega)
    }

    /// Checks `1/2 ≤ H < 3/4`.
    pub fn require_estimation_range(&self) -> Result<()> {
        let h = self.h.value();
        if (0.5..0.75).contains(&h) {
            Ok(())
        } else {
            Err(CfouError::arg(format!("H = {h} outside [1/2, 3/4)")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub z: Vec<Complex64>,
    pub params: ModelParams,
    pub seed: u64,
}

impl Trajectory {
    /// `(1/T) ∫_0^T |Z_t|² dt` by the trapezoid rule.
    pub fn energy_average(&self) -> f64 {
        let n = self.z.len() - 1;
        let inner: f64 = self.z[1..n].iter().map(|z| z.norm_sqr()).sum();
        let ends = 0.5 * (self.z[0].norm_sqr() + self.z[n].norm_sqr());
        (inner + ends) * self.grid.dt() / self.grid.t_max()
    }
}

/// Noise sampler bound to one parameter set and grid.
#[derive(Debug)]
pub struct Simulator {
    params: ModelParams,
    noise: ComplexNoiseSampler,
}

impl Simulator {
    pub fn new(params: ModelParams, grid: GridSpec) -> Result<Self> {
        params.validate()?;
        params.require_estimation_range()?;
        Ok(Simulator {
            params,
            noise: ComplexNoiseSampler::new(params.h, grid)?,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.noise.grid()
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn noise(&self, seed: u64) -> NoisePath {
        self.noise.sample(seed)
    }

    pub fn run(&self, seed: u64) -> Trajectory {
        let noise = self.noise(seed);
        self.propagate(&noise, seed)
    }

    /// Path driven by the given increments.
    pub fn propagate(&self, noise: &NoisePath, seed: u64) -> Trajectory {
        let grid = self.grid();
        let decay = (-self.params.gamma() * grid.dt()).exp();
        let scale = self.params.a.sqrt();
        let mut z = Vec::with_capacity(grid.n_steps() + 1);
        let mut cur = self.params.z0;
        z.push(cur);
        for dz in &noise.increments {
            cur = decay * cur + scale * dz;
            z.push(cur);
        }
        Trajectory {
            grid,
            z,
            params: self.params,
            seed,
        }
    }
}

pub fn simulate(params: ModelParams, grid: GridSpec, seed: u64) -> Result<Trajectory> {
    Ok(Simulator::new(params, grid)?.run(seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub gamma_hat: Complex64,
    pub gamma_hat_pathwise: Complex64,
    /// `(dt / T) Σ_{k<n} |Z_k|²`
    pub denom: f64,
    /// Deterministic Wick trace `C_T` removed from the pathwise numerator.
    pub numerator_correction: Complex64,
    /// `Σ conj(Z_k)(Z_{k+1} − Z_k)`
    pub numerator_pathwise: Complex64,
    /// Noise part `Σ conj(Z_k)(Z_{k+1} − e^{−γ dt} Z_k) = √a Σ conj(Z_k) Δζ_k`
    /// of the pathwise numerator; its mean is `C_T`.
    pub noise_pathwise: Complex64,
    pub t_max: f64,
    pub n_steps: usize,
}

/// `C_T = Σ_k √a E[conj(Z_k) Δζ_k] = a Σ_{m≥1} (n − m) e^{−γ̄(m−1)dt} ρ(m)`.
pub fn wick_correction(params: &ModelParams, grid: GridSpec) -> Complex64 {
    let n = grid.n_steps();
    if params.h.is_brownian() || params.a == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let rho = increment_autocov(params.h, grid, n);
    let step = (-params.gamma().conj() * grid.dt()).exp();
    let mut factor = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 1..n {
        sum += factor * ((n - m) as f64 * rho[m]);
        factor *= step;
    }
    sum * params.a
}

/// Estimate with a precomputed Wick trace.
pub fn estimate_with_correction(traj: &Trajectory, correction: Complex64) -> Result<EstimateResult> {
    let grid = traj.grid;
    let n = grid.n_steps();
    if n < 2 {
        return Err(CfouError::arg("estimator needs at least two steps"));
    }
    let decay = (-traj.params.gamma() * grid.dt()).exp();
    let mut energy = 0.0;
    let mut num = Complex64::new(0.0, 0.0);
    let mut noise = Complex64::new(0.0, 0.0);
    for k in 0..n {
        energy += traj.z[k].norm_sqr();
        num += traj.z[k].conj() * (traj.z[k + 1] - traj.z[k]);
        noise += traj.z[k].conj() * (traj.z[k + 1] - decay * traj.z[k]);
    }
    if !(energy > 0.0) {
        return Err(CfouError::DegeneratePath(format!(
            "path with seed {} has zero energy",
            traj.seed
        )));
    }
    let t = grid.t_max();
    let denom = energy * grid.dt() / t;
    Ok(EstimateResult {
        gamma_hat: -(num - correction) / (t * denom),
        gamma_hat_pathwise: -num / (t * denom),
        denom,
        numerator_correction: correction,
        numerator_pathwise: num,
        noise_pathwise: noise,
        t_max: t,
        n_steps: n,
    })
}

pub fn estimate(traj: &Trajectory) -> Result<EstimateResult> {
    estimate_with_correction(traj, wick_correction(&traj.params, traj.grid))
}

/// `ψ[r][s] = e^{−γ̄(t_r − t_s)}` for `s ≤ r`, zero above the diagonal.
pub fn psi_kernel(params: &ModelParams, gram: Arc<PhiGram>) -> GridKernel {
    lower_exponential(params.gamma().conj(), gram, 0)
}

/// `h[r][s] = e^{−γ(t_s − t_r)}` for `r ≤ s`; the conjugate transpose of ψ.
pub fn h_kernel(params: &ModelParams, gram: Arc<PhiGram>) -> GridKernel {
    psi_kernel(params, gram).conj_transpose()
}

/// Kernel of the Wick-ordered noise part of the estimator numerator:
/// `K[r][s] = e^{−γ̄(r − 1 − s)dt}` for `s < r`, so that for `z0 = 0`
/// `N_sk = (e^{−γ dt} − 1) Σ_{k<n} |Z_k|² + a I_{1,1}(K)`.
pub fn estimator_kernel(params: &ModelParams, gram: Arc<PhiGram>) -> GridKernel {
    lower_exponential(params.gamma().conj(), gram, 1)
}

fn lower_exponential(beta: Complex64, gram: Arc<PhiGram>, offset: usize) -> GridKernel {
    let n = gram.n();
    let step = (-beta * gram.grid().dt()).exp();
    let mut powers = Vec::with_capacity(n);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        powers.push(p);
        p *= step;
    }
    GridKernel::from_fn(gram, |r, s| {
        if r >= s + offset {
            powers[r - s - offset]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// ψ tabulated with `diagonal` on the cells `r = s` in place of 1. The value ½
/// is the cell average of the indicator `1_{s ≤ r}`.
pub fn psi_kernel_with_diagonal(params: &ModelParams, gram: Arc<PhiGram>, diagonal: f64) -> GridKernel {
    let psi = psi_kernel(params, gram.clone());
    GridKernel::from_fn(gram, |r, s| {
        if r == s {
            Complex64::new(diagonal, 0.0)
        } else {
            psi.values()[[r, s]]
        }
    })
}

/// `I_{1,1}` of [`psi_kernel_with_diagonal`] in `O(n)` per path, for grids too
/// large to tabulate.
#[derive(Debug, Clone, Copy)]
pub struct PsiFunctional {
    step: Complex64,
    diagonal: f64,
    trace: Complex64,
    grid: GridSpec,
}

impl PsiFunctional {
    pub fn new(params: &ModelParams, grid: GridSpec, diagonal: f64) -> Self {
        let n = grid.n_steps();
        let rho = increment_autocov(params.h, grid, n);
        let step = (-params.gamma().conj() * grid.dt()).exp();
        let mut trace = Complex64::new(diagonal * n as f64 * rho[0], 0.0);
        let mut factor = step;
        for (m, r) in rho.iter().enumerate().skip(1) {
            trace += factor * ((n - m) as f64 * r);
            factor *= step;
        }
        PsiFunctional {
            step,
            diagonal,
            trace,
            grid,
        }
    }

    /// `Σ_{r,s} K[r][s] E[Δζ_r conj(Δζ_s)]`.
    pub fn trace(&self) -> Complex64 {
        self.trace
    }

    pub fn eval(&self, noise: &NoisePath) -> Result<Complex64> {
        if noise.grid != self.grid {
            return Err(CfouError::arg("noise and functional live on different grids"));
        }
        // y = Σ_{s<r} e^{−γ̄(r−s)dt} conj(Δζ_s)
        let mut y = Complex64::new(0.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for dz in &noise.increments {
            y *= self.step;
            sum += dz * (y + dz.conj() * self.diagonal);
            y += dz.conj();
        }
        Ok(sum - self.trace)
    }
}

/// `E[Y_{t+s} conj(Y_t)]` of the stationary solution, from
/// `a α_H / (2λ) [∫_0^∞ e^{−γw} |s − w|^{2H−2} dw + ∫_0^∞ e^{−γ̄x} (s + x)^{2H−2} dx]`,
/// which is the double integral after integrating out `v₂` along the lines
/// `v₁ − v₂ = const`.
pub fn stationary_autocov(params: &ModelParams, s: f64) -> Result<Complex64> {
    params.validate()?;
    let h = params.h.value();
    if h <= 0.5 {
        return Err(CfouError::arg(format!("stationary covariance needs H > 1/2, got {h}")));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(CfouError::arg(format!("lag {s} must be nonnegative")));
    }
    if params.a == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let p = 2.0 * h - 2.0;
    let g = params.gamma();
    let rule = TanhSinh::with_tolerance(1e-11);
    let before = rule.span(s, |w, cw| (-g * w).exp() * cw.powf(p));
    let after = rule.half_line(|x| (-g * (s + x)).exp() * x.powf(p));
    let backward = rule.half_line(|x| (-g.conj() * x).exp() * (s + x).powf(p));
    let total = before.combine(after).combine(backward);
    if !total.converged || total.relative_error() > 1e-8 {
        return Err(CfouError::numerical(
            format!("stationary covariance at lag {s} did not converge"),
            total.relative_error(),
        ));
    }
    Ok(total.value * (params.a * params.h.alpha() / (2.0 * params.lambda)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(h: f64, lambda: f64, omega: f64, a: f64) -> ModelParams {
        ModelParams::new(lambda, omega, a, h).unwrap()
    }

    #[test]
    fn noise_free_decay_is_exact() {
        let p = params(0.6, 0.7, 2.0, 0.0).with_z0(Complex64::new(1.0, -0.5));
        let grid = GridSpec::new(10.0, 200).unwrap();
        let tr = simulate(p, grid, 3).unwrap();
        for (k, z) in tr.z.iter().enumerate() {
            let exact = p.z0 * (-p.gamma() * grid.time(k)).exp();
            assert!((z - exact).norm() < 1e-12);
        }
        let est = estimate(&tr).unwrap();
        let expect = (1.0 - (-p.gamma() * grid.dt()).exp()) / grid.dt();
        assert!((est.gamma_hat - expect).norm() < 1e-12);
        assert_eq!(est.gamma_hat, est.gamma_hat_pathwise);
    }

    #[test]
    fn hurst_range_enforced() {
        let grid = GridSpec::new(1.0, 10).unwrap();
        assert!(simulate(params(0.8, 1.0, 0.0, 1.0), grid, 0).is_err());
        assert!(simulate(params(0.45, 1.0, 0.0, 1.0), grid, 0).is_err());
        assert!(simulate(params(0.5, 1.0, 0.0, 1.0), grid, 0).is_ok());
        assert!(ModelParams::new(0.0, 0.0, 1.0, 0.6).is_err());
        assert!(ModelParams::new(1.0, 0.0, -1.0, 0.6).is_err());
    }

    #[test]
    fn zero_energy_is_degenerate() {
        let p = params(0.6, 1.0, 0.0, 0.0);
        let tr = simulate(p, GridSpec::new(1.0, 10).unwrap(), 0).unwrap();
        assert!(matches!(estimate(&tr), Err(CfouError::DegeneratePath(_))));
    }

    #[test]
    fn brownian_has_no_correction() {
        let p = params(0.5, 1.0, 0.5, 1.0);
        let grid = GridSpec::new(5.0, 50).unwrap();
        assert_eq!(wick_correction(&p, grid), Complex64::new(0.0, 0.0));
        let est = estimate(&simulate(p, grid, 1).unwrap()).unwrap();
        assert_eq!(est.gamma_hat, est.gamma_hat_pathwise);
    }

    #[test]
    fn wick_correction_matches_double_sum() {
        let p = params(0.65, 0.8, 1.3, 1.7);
        let grid = GridSpec::new(3.0, 40).unwrap();
        let n = grid.n_steps();
        let dt = grid.dt();
        let mut direct = Complex64::new(0.0, 0.0);
        for k in 0..n {
            for j in 0..k {
                let rho = crate::randfield::fbm_increment_cov(p.h, grid, j, k).unwrap();
                direct += (-p.gamma().conj() * ((k - 1 - j) as f64 * dt)).exp() * rho;
            }
        }
        direct *= p.a;
        assert!((wick_correction(&p, grid) - direct).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn kernels_are_adjoint() {
        let p = params(0.6, 1.0, 0.5, 1.0);
        let gram = PhiGram::shared(p.h, GridSpec::new(2.0, 16).unwrap()).unwrap();
        let psi = psi_kernel(&p, gram.clone());
        let h = h_kernel(&p, gram);
        for r in 0..16 {
            assert_eq!(psi.values()[[r, r]], Complex64::new(1.0, 0.0));
            for s in 0..16 {
                assert_eq!(h.values()[[r, s]], psi.values()[[s, r]].conj());
                if s > r {
                    assert_eq!(psi.values()[[r, s]], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn stationary_autocov_zero_lag() {
        let p = params(0.6, 1.0, 0.0, 1.0);
        let v = stationary_autocov(&p, 0.0).unwrap();
        // a α_H Γ(0.2) at λ = 1, ω = 0
        let expect = 0.12 * statrs::function::gamma::gamma(0.2);
        assert!((v.re - expect).abs() < 1e-9 * expect, "{v}");
        assert!(v.im.abs() < 1e-12);
        let zero = stationary_autocov(&params(0.6, 1.0, 0.0, 0.0), 1.0).unwrap();
        assert_eq!(zero, Complex64::new(0.0, 0.0));
        assert!(stationary_autocov(&params(0.5, 1.0, 0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn psi_functional_matches_kernel() {
        let p = params(0.62, 0.9, -0.7, 1.0);
        let grid = GridSpec::new(3.0, 24).unwrap();
        let gram = PhiGram::shared(p.h, grid).unwrap();
        let noise = crate::randfield::sample_complex_noise(p.h, grid, 11).unwrap();
        for diag in [1.0, 0.5] {
            let k = psi_kernel_with_diagonal(&p, gram.clone(), diag);
            let slow = crate::grid_chaos::eval_i11(&k, &noise).unwrap();
            let f = PsiFunctional::new(&p, grid, diag);
            assert!((f.trace() - crate::grid_chaos::wick_trace(&k)).norm() < 1e-12 * f.trace().norm());
            assert!((f.eval(&noise).unwrap() - slow).norm() < 1e-11 * slow.norm().max(1.0));
        }
    }
}
