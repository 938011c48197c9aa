//! Limit constants of the drift estimator.
//!
//! With `α = 2H − 2`, `G_β(b) = ∫_0^∞ e^{−βa} (a + b)^α da` and
//! `K(t) = Γ(2H−1)² (2/|γ|^{4H−2} + γ^{2−4H} + γ̄^{2−4H}) / (2λ)`:
//!
//! * `d = Γ(2H−1) (γ^{1−2H} + γ̄^{1−2H}) / (2λ)`;
//! * `σ² = 2 ∫_0^∞ |G_γ(b)|² db + K`, equivalently
//!   `σ² = 2/Γ(2−2H)² ∫∫ (xy)^{1−2H} / ((x+y)(x+γ̄)(y+γ)) dx dy + K`;
//! * `c + ib = 2/Γ(2−2H)² ∫∫ (xy)^{1−2H} / (y+γ̄)² [1/(x+y) + 1/(x+γ̄)] dx dy`.
//!
//! `σ²` and `c + ib` are the limits of `E|X_T|² / (α_H² T)` and
//! `E X_T² / (α_H² T)` for the double integral `X_T` of ψ_T. Each is computed
//! three ways: the `(x, y)` integrals above, one-dimensional nestings of the
//! exponential `(a, b, c)` forms, and finite-`T` integrals over the six
//! orderings of the four time arguments, extrapolated in `T`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{CfouError, Result};
use crate::grid_chaos::{contract, PhiGram};
use crate::ou_sim::{h_kernel, psi_kernel, ModelParams};
use crate::quadrature::{InnerLog, QuadResult, TanhSinh};
use crate::randfield::GridSpec;

/// Tolerance between the closed form of `d` and its quadrature.
pub const D_ROUTE_TOL: f64 = 1e-6;

/// Largest grid used by [`contraction_decay`].
pub const DECAY_GRID_CAP: usize = 4096;

/// Relative tolerance of the finite-`T` region quadratures.
pub const SIX_REGION_TOL: f64 = 1e-9;

/// Default horizons for the finite-`T` extrapolation.
pub const DEFAULT_EXTRAPOLATION_T: [f64; 5] = [100.0, 200.0, 400.0, 800.0, 1600.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    MellinXy,
    ExponentialAbc,
    SixRegionExtrapolation,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::MellinXy => "mellin_xy",
            Route::ExponentialAbc => "exponential_abc",
            Route::SixRegionExtrapolation => "six_region_extrapolation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    pub value: Complex64,
    pub est_error: f64,
    pub evaluations: usize,
    pub route: Route,
    pub converged: bool,
}

impl QuadratureReport {
    fn from_quad(q: QuadResult, scale: Complex64, shift: Complex64, route: Route) -> Self {
        QuadratureReport {
            value: q.value * scale + shift,
            est_error: q.total_error() * scale.norm(),
            evaluations: q.evaluations,
            route,
            converged: q.converged,
        }
    }

    pub fn relative_error(&self) -> f64 {
        self.est_error / self.value.norm().max(f64::MIN_POSITIVE)
    }
}

fn require_fractional(params: &ModelParams) -> Result<()> {
    params.validate()?;
    let h = params.h.value();
    if h > 0.5 && h < 0.75 {
        Ok(())
    } else {
        Err(CfouError::arg(format!("H = {h} outside (1/2, 3/4)")))
    }
}

fn rule() -> TanhSinh {
    TanhSinh::with_tolerance(1e-10)
}

fn check_imag(z: Complex64, what: &str, tol: f64) -> Result<f64> {
    if z.im.abs() > tol * z.norm() {
        return Err(CfouError::numerical(
            format!("{what} has imaginary part {:.3e}", z.im),
            z.im.abs() / z.norm(),
        ));
    }
    Ok(z.re)
}

/// `d` in closed form and by quadrature of
/// `∫∫_{[0,∞)²} e^{−γu₁ − γ̄u₂} |u₁ − u₂|^{2H−2} du₁ du₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DReport {
    pub closed_form: f64,
    pub closed_form_imag: f64,
    pub quadrature: QuadratureReport,
}

impl DReport {
    pub fn relative_gap(&self) -> f64 {
        (self.quadrature.value.re - self.closed_form).abs() / self.closed_form.abs()
    }
}

pub fn d_closed_form(params: &ModelParams) -> Complex64 {
    let h = params.h.value();
    let g = params.gamma();
    let e = Complex64::new(1.0 - 2.0 * h, 0.0);
    (g.powc(e) + g.conj().powc(e)) * (gamma(2.0 * h - 1.0) / (2.0 * params.lambda))
}

pub fn const_d(params: &ModelParams) -> Result<DReport> {
    params.validate()?;
    let h = params.h.value();
    if !(h > 0.5 && h < 1.0) {
        return Err(CfouError::arg(format!("H = {h} outside (1/2, 1)")));
    }
    let closed = d_closed_form(params);
    let p = 2.0 * params.h.value() - 2.0;
    let g = params.gamma();
    let two_lambda = 2.0 * params.lambda;
    // u = min(u₁, u₂), w = |u₁ − u₂|
    let r = rule();
    let mut log = InnerLog::new();
    let outer = r.half_line(|u| {
        let inner = r.half_line(|w| ((-g * w).exp() + (-g.conj() * w).exp()) * w.powf(p));
        log.take_scaled(inner, Complex64::new((-two_lambda * u).exp(), 0.0))
    });
    let q = log.finish(outer);
    let report = DReport {
        closed_form: closed.re,
        closed_form_imag: closed.im,
        quadrature: QuadratureReport::from_quad(q, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Route::ExponentialAbc),
    };
    if closed.im.abs() > 1e-10 * closed.norm() {
        return Err(CfouError::numerical("closed form of d is not real", closed.im.abs() / closed.norm()));
    }
    if !(closed.re > 0.0) {
        return Err(CfouError::numerical("closed form of d is not positive", closed.re));
    }
    let gap = report.relative_gap();
    if gap > D_ROUTE_TOL {
        return Err(CfouError::numerical("closed form and quadrature of d disagree", gap));
    }
    Ok(report)
}

/// `Γ(2H−1)² (2/|γ|^{4H−2} + γ^{2−4H} + γ̄^{2−4H}) / (2λ)`, the contribution of
/// the four orderings in which the two intervals overlap.
pub fn sigma2_overlap_term(params: &ModelParams) -> f64 {
    let h = params.h.value();
    let g = params.gamma();
    let e = Complex64::new(2.0 - 4.0 * h, 0.0);
    let mixed = 2.0 * g.norm().powf(2.0 - 4.0 * h) + 2.0 * g.powc(e).re;
    gamma(2.0 * h - 1.0).powi(2) * mixed / (2.0 * params.lambda)
}

fn mellin_prefactor(h: f64) -> f64 {
    2.0 / gamma(2.0 - 2.0 * h).powi(2)
}

/// `∫_0^∞ dv v^{2−4H} ∫_0^1 dt t^{1−2H} k(v, t)`, the two triangles `x < y` and
/// `y < x` of a quarter-plane integral after `x = vt` (resp. `y = vt`).
fn polar_quarter_plane<F>(h: f64, mut k: F) -> QuadResult
where
    F: FnMut(f64, f64) -> Complex64,
{
    let r = rule();
    let mut log = InnerLog::new();
    let a = 2.0 - 4.0 * h;
    let b = 1.0 - 2.0 * h;
    let outer = r.half_line(|v| {
        let inner = r.unit(|t, _| k(v, t) * t.powf(b));
        log.take_scaled(inner, Complex64::new(v.powf(a), 0.0))
    });
    log.finish(outer)
}

/// σ² from the `(x, y)` integral (route `mellin_xy`).
pub fn const_sigma2(params: &ModelParams) -> Result<QuadratureReport> {
    require_fractional(params)?;
    let h = params.h.value();
    let g = params.gamma();
    let gb = g.conj();
    let q = polar_quarter_plane(h, |v, t| {
        let w = 1.0 / (1.0 + t);
        ((v * t + gb) * (v + g)).inv() * w + ((v + gb) * (v * t + g)).inv() * w
    });
    let report = QuadratureReport::from_quad(
        q,
        Complex64::new(mellin_prefactor(h), 0.0),
        Complex64::new(sigma2_overlap_term(params), 0.0),
        Route::MellinXy,
    );
    check_imag(q.value, "sigma2 integral", 1e-8)?;
    finish_report(report, "sigma2 (mellin_xy)")
}

/// `c + ib` from the `(x, y)` integral (route `mellin_xy`).
pub fn const_cb(params: &ModelParams) -> Result<QuadratureReport> {
    require_fractional(params)?;
    let h = params.h.value();
    let gb = params.gamma().conj();
    let coupled = polar_quarter_plane(h, |v, t| {
        let w = 1.0 / (1.0 + t);
        ((v + gb) * (v + gb)).inv() * w + ((v * t + gb) * (v * t + gb)).inv() * w
    });
    let r = rule();
    let s = 1.0 - 2.0 * h;
    let fx = r.half_line(|x| (x + gb).inv() * x.powf(s));
    let fy = r.half_line(|y| ((y + gb) * (y + gb)).inv() * y.powf(s));
    let separable = fx.value * fy.value;
    let sep_err = fx.total_error() * fy.value.norm() + fy.total_error() * fx.value.norm();
    let total = QuadResult {
        value: coupled.value + separable,
        est_error: coupled.est_error + sep_err,
        evaluations: coupled.evaluations + fx.evaluations + fy.evaluations,
        converged: coupled.converged && fx.converged && fy.converged,
        inner_error: coupled.inner_error,
    };
    let report = QuadratureReport::from_quad(
        total,
        Complex64::new(mellin_prefactor(h), 0.0),
        Complex64::new(0.0, 0.0),
        Route::MellinXy,
    );
    finish_report(report, "c + ib (mellin_xy)")
}

fn finish_report(report: QuadratureReport, what: &str) -> Result<QuadratureReport> {
    if !report.value.re.is_finite() || !report.value.im.is_finite() {
        return Err(CfouError::numerical(format!("{what} is not finite"), f64::INFINITY));
    }
    if report.relative_error() > 1e-6 {
        return Err(CfouError::numerical(
            format!("{what} did not reach tolerance"),
            report.relative_error(),
        ));
    }
    Ok(report)
}

/// `∫_0^∞ w(a) (a + b)^α da` with `w` smooth and decaying on the scale
/// `scale`: split at `a = 1`, evaluated geometrically in `a + b` below the
/// split when `b < 1` and on a stretched half-line above it.
fn shifted_power<W>(r: &TanhSinh, p: f64, b: f64, scale: f64, mut w: W) -> QuadResult
where
    W: FnMut(f64) -> Complex64,
{
    let head = if b > 1.0 {
        r.unit(|a, _| w(a) * (a + b).powf(p))
    } else if b > 0.0 {
        r.geometric(b, 1.0 + b, |v| w((v - b).max(0.0)) * v.powf(p))
    } else {
        r.unit(|a, _| w(a) * a.powf(p))
    };
    let mut tail = r.half_line(|y| {
        let x = scale * y;
        w(1.0 + x) * (1.0 + x + b).powf(p)
    });
    tail.value *= scale;
    tail.est_error *= scale;
    head.combine(tail)
}

fn decay_scale(beta: Complex64) -> f64 {
    (1.0 / beta.re).max(1.0)
}

/// `G_β(b) = ∫_0^∞ e^{−βa} (a + b)^{2H−2} da`.
pub fn g_transform(beta: Complex64, h: f64, b: f64) -> QuadResult {
    shifted_power(&rule(), 2.0 * h - 2.0, b, decay_scale(beta), |a| (-beta * a).exp())
}

/// `∫_0^∞ s e^{−βs} (s + b)^{2H−2} ds`.
fn g1_transform(r: &TanhSinh, beta: Complex64, h: f64, b: f64) -> QuadResult {
    shifted_power(r, 2.0 * h - 2.0, b, decay_scale(beta), |s| (-beta * s).exp() * s)
}

/// σ² as `2 ∫ |G_γ|² + K` (route `exponential_abc`).
pub fn const_sigma2_abc(params: &ModelParams) -> Result<QuadratureReport> {
    require_fractional(params)?;
    let h = params.h.value();
    let g = params.gamma();
    let r = rule();
    let mut log = InnerLog::new();
    let outer = r.half_line(|b| {
        let gv = shifted_power(&r, 2.0 * h - 2.0, b, decay_scale(g), |a| (-g * a).exp());
        let conj = gv.value.conj();
        log.take_scaled(gv, conj)
    });
    let q = log.finish(outer);
    let report = QuadratureReport::from_quad(
        q,
        Complex64::new(2.0, 0.0),
        Complex64::new(sigma2_overlap_term(params), 0.0),
        Route::ExponentialAbc,
    );
    finish_report(report, "sigma2 (exponential_abc)")
}

/// `c + ib = 2 (R₁ + R₃ + R₅)` with
/// `R₁ = ∫ b^α G¹(b) db`, `R₃ = ∫ q^α e^{−2γ̄q} G¹(q) dq`, `R₅ = ∫ e^{−2γ̄q} G_γ̄(q)² dq`
/// and `G¹(b) = ∫ s e^{−γ̄s} (s + b)^α ds` (route `exponential_abc`).
pub fn const_cb_abc(params: &ModelParams) -> Result<QuadratureReport> {
    require_fractional(params)?;
    let h = params.h.value();
    let p = 2.0 * h - 2.0;
    let gb = params.gamma().conj();
    let r = rule();
    let mut log = InnerLog::new();
    let outer = r.half_line(|b| {
        let decay = (-gb * (2.0 * b)).exp();
        let g1 = g1_transform(&r, gb, h, b);
        let g0 = shifted_power(&r, p, b, decay_scale(gb), |a| (-gb * a).exp());
        let g0_factor = decay * g0.value;
        log.take_scaled(g1, (1.0 + decay) * b.powf(p)) + log.take_scaled(g0, g0_factor)
    });
    let q = log.finish(outer);
    let report = QuadratureReport::from_quad(q, Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0), Route::ExponentialAbc);
    finish_report(report, "c + ib (exponential_abc)")
}

/// Which pair of time arguments the covariance kernel connects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// `ψ_T ⊗ conj(ψ_T)`, whose normalized limit is `σ²`.
    Modulus,
    /// `ψ_T ⊗ conj(h_T)`, whose normalized limit is `c + ib`.
    Square,
}

/// Region integrals `I₁..I₆` at one horizon, each normalized by `T` and
/// including the factor `α_H²`.
///
/// Regions follow the orderings of `(s₁, t₁, s₂, t₂)`:
/// `s₂<t₂<s₁<t₁`, `s₁<t₁<s₂<t₂`, `s₁<s₂<t₁<t₂`, `s₂<s₁<t₂<t₁`, `s₁<s₂<t₂<t₁`,
/// `s₂<s₁<t₁<t₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixRegions {
    pub t_max: f64,
    pub pairing: Pairing,
    pub values: [Complex64; 6],
    pub errors: [f64; 6],
    pub evaluations: usize,
}

impl SixRegions {
    pub fn total(&self) -> Complex64 {
        self.values.iter().sum()
    }
}

fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.25 {
        // Σ (−z)^k / (k+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..20 {
            term *= -z / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (Complex64::new(1.0, 0.0) - (-z).exp()) / z
    }
}

fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 0.25 {
        // Σ (−z)^k / (k! (k+2))
        let mut fact = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.5, 0.0);
        for k in 1..20 {
            fact *= -z / k as f64;
            sum += fact / (k as f64 + 2.0);
        }
        sum
    } else {
        (Complex64::new(1.0, 0.0) - (-z).exp() * (1.0 + z)) / (z * z)
    }
}

/// `∫_0^U e^{−κu} (1 − (c₀ + u)/T) du`.
fn linear_weight(kappa: Complex64, u: f64, c0: f64, t: f64) -> Complex64 {
    if u <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let z = kappa * u;
    phi1(z) * (u * (1.0 - c0 / t)) - phi2(z) * (u * u / t)
}

struct RegionCtx {
    p: f64,
    t: f64,
    rule: TanhSinh,
}

impl RegionCtx {
    /// Orderings whose two φ-factors share the middle gap: integrand
    /// `e^{−β₁g₁ − β₂g₂ − β₃g₃} (g₁+g₂)^α (g₂+g₃)^α` over the simplex of gaps.
    /// With `m = min(g₁+g₂, g₂+g₃)` and `r` the difference, the middle gap is
    /// integrated in closed form.
    fn ridge(&self, b1: Complex64, b2: Complex64, b3: Complex64) -> QuadResult {
        let kappa = b1 + b3 - b2;
        self.ridge_half(b2, b3, kappa).combine(self.ridge_half(b2, b1, kappa))
    }

    fn ridge_half(&self, b2: Complex64, far: Complex64, kappa: Complex64) -> QuadResult {
        let (p, t) = (self.p, self.t);
        let r = &self.rule;
        let mut log = InnerLog::new();
        let outer = r.long_span(t, |d| {
            let len = t - d;
            let half = 0.5 * len;
            let split = d.min(half);
            let f = |m: f64| {
                let u = m.min(len - m);
                (-b2 * m).exp() * linear_weight(kappa, u, m + d, t) * (m.powf(p) * (m + d).powf(p))
            };
            let a = r.span(split, |m, _| f(m));
            let b = r.geometric(split, half, f);
            let c = r.span(half, |x, cx| {
                let m = half + x;
                let u = cx.min(m);
                (-b2 * m).exp() * linear_weight(kappa, u, m + d, t) * (m.powf(p) * (m + d).powf(p))
            });
            log.take_scaled(a.combine(b).combine(c), (-far * d).exp())
        });
        log.finish(outer)
    }

    /// Orderings in which the φ-factors sit on the outer gaps:
    /// `e^{−β₁g₁ − β₂g₂ − β₃g₃} g₁^α g₃^α`.
    fn separated(&self, b1: Complex64, b2: Complex64, b3: Complex64) -> QuadResult {
        let (p, t) = (self.p, self.t);
        let r = &self.rule;
        let mut log = InnerLog::new();
        let outer = r.long_span(t, |g1| {
            let rest = t - g1;
            let inner = r.span(rest, |g3, cg3| {
                (-b3 * g3).exp() * linear_weight(b2, cg3, g1 + g3, t) * g3.powf(p)
            });
            log.take_scaled(inner, (-b1 * g1).exp() * g1.powf(p))
        });
        log.finish(outer)
    }

    /// Orderings with factors `g₂^α L^α` and weight `e^{−β_s(g₁+g₃) − β₂g₂}`,
    /// in polar form `L = w`, `g₂ = w t`.
    fn spanning(&self, bs: Complex64, b2: Complex64) -> QuadResult {
        let (p, t) = (self.p, self.t);
        let r = &self.rule;
        let mut log = InnerLog::new();
        let outer = r.long_span(t, |w| {
            let inner = r.unit(|x, cx| (-(bs * cx + b2 * x) * w).exp() * (x.powf(p) * cx));
            log.take_scaled(inner, Complex64::new(w.powf(2.0 + 2.0 * p) * (1.0 - w / t), 0.0))
        });
        log.finish(outer)
    }
}

pub fn six_region_integrals(params: &ModelParams, t_max: f64, pairing: Pairing) -> Result<SixRegions> {
    require_fractional(params)?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(CfouError::arg(format!("horizon {t_max} must be positive")));
    }
    let ctx = RegionCtx {
        p: 2.0 * params.h.value() - 2.0,
        t: t_max,
        rule: TanhSinh::with_tolerance(SIX_REGION_TOL),
    };
    let g = params.gamma();
    let gb = g.conj();
    let zero = Complex64::new(0.0, 0.0);
    let two_l = Complex64::new(2.0 * params.lambda, 0.0);
    let q: [QuadResult; 6] = match pairing {
        Pairing::Modulus => {
            // I₂ is the mirror image of I₁ and reduces to the same integral
            let first = ctx.ridge(g, zero, gb);
            [
                first,
                first,
                ctx.separated(gb, two_l, g),
                ctx.separated(g, two_l, gb),
                ctx.separated(gb, two_l, gb),
                ctx.separated(g, two_l, g),
            ]
        }
        Pairing::Square => {
            let ends = ctx.spanning(gb, zero);
            let mids = ctx.spanning(gb, gb * 2.0);
            let nested = ctx.ridge(gb, gb * 2.0, gb);
            [ends, ends, mids, mids, nested, nested]
        }
    };
    let scale = params.h.alpha().powi(2);
    let mut values = [zero; 6];
    let mut errors = [0.0; 6];
    let mut evaluations = 0;
    for (i, r) in q.iter().enumerate() {
        values[i] = r.value * scale;
        errors[i] = r.total_error() * scale;
        evaluations += r.evaluations;
        if !r.converged && r.relative_error() > 1e-7 {
            return Err(CfouError::numerical(
                format!("region {} at T = {t_max} did not converge", i + 1),
                r.relative_error(),
            ));
        }
    }
    Ok(SixRegions {
        t_max,
        pairing,
        values,
        errors,
        evaluations,
    })
}

/// Exponents of the large-`T` expansion of region `i` (0-based).
fn tail_exponents(h: f64, pairing: Pairing, region: usize) -> Vec<f64> {
    let algebraic = region < 2;
    let _ = pairing;
    if algebraic {
        vec![0.0, 4.0 * h - 3.0, -1.0, 4.0 * h - 4.0]
    } else {
        vec![0.0, -1.0]
    }
}

/// Least-squares fit of `y(T) = Σ c_k T^{e_k}`; returns `c_0`.
fn fit_limit(ts: &[f64], ys: &[Complex64], exps: &[f64]) -> Result<Complex64> {
    let rows = ts.len();
    let cols = exps.len();
    if rows < cols {
        return Err(CfouError::arg(format!(
            "extrapolation needs at least {cols} horizons, got {rows}"
        )));
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| ts[i].powf(exps[j]));
    let svd = a.svd(true, true);
    let solve = |y: DVector<f64>| -> Result<f64> {
        let x = svd
            .solve(&y, 1e-14)
            .map_err(|e| CfouError::numerical(format!("extrapolation fit failed: {e}"), f64::NAN))?;
        Ok(x[0])
    };
    let re = solve(DVector::from_iterator(rows, ys.iter().map(|z| z.re)))?;
    let im = solve(DVector::from_iterator(rows, ys.iter().map(|z| z.im)))?;
    Ok(Complex64::new(re, im))
}

/// Extrapolated `T → ∞` limit of the normalized region sum divided by `α_H²`.
pub fn six_region_limit(params: &ModelParams, pairing: Pairing, ts: &[f64]) -> Result<QuadratureReport> {
    require_fractional(params)?;
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CfouError::arg("extrapolation horizons must be increasing"));
    }
    let h = params.h.value();
    let tables: Vec<SixRegions> = ts
        .par_iter()
        .map(|&t| six_region_integrals(params, t, pairing))
        .collect::<Result<_>>()?;
    let scale = params.h.alpha().powi(2);
    let mut value = Complex64::new(0.0, 0.0);
    let mut spread = 0.0;
    for region in 0..6 {
        let ys: Vec<Complex64> = tables.iter().map(|t| t.values[region] / scale).collect();
        let exps = tail_exponents(h, pairing, region);
        let full = fit_limit(ts, &ys, &exps)?;
        let spare = ts.len() - exps.len();
        let reduced = if spare > 0 {
            fit_limit(&ts[1..], &ys[1..], &exps)?
        } else {
            full
        };
        value += full;
        spread += (full - reduced).norm();
    }
    let quad_err: f64 = tables.iter().map(|t| t.errors.iter().sum::<f64>()).fold(0.0, f64::max) / scale;
    Ok(QuadratureReport {
        value,
        est_error: spread + quad_err,
        evaluations: tables.iter().map(|t| t.evaluations).sum(),
        route: Route::SixRegionExtrapolation,
        converged: true,
    })
}

/// One row of [`contraction_decay`]: φ-norms of contractions divided by `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub t_max: f64,
    pub n_steps: usize,
    pub psi_psi_01: f64,
    pub psi_psi_10: f64,
    pub psi_h_01: f64,
    pub psi_h_10: f64,
}

pub fn contraction_decay(params: &ModelParams, t_list: &[f64], dt: f64) -> Result<Vec<DecayRow>> {
    contraction_decay_capped(params, t_list, dt, DECAY_GRID_CAP)
}

pub fn contraction_decay_capped(
    params: &ModelParams,
    t_list: &[f64],
    dt: f64,
    cap: usize,
) -> Result<Vec<DecayRow>> {
    require_fractional(params)?;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let grid = GridSpec::with_step(t, dt)?;
        if grid.n_steps() > cap {
            return Err(CfouError::Resource(format!(
                "contraction grid limited to {cap} steps, T = {t} needs {}",
                grid.n_steps()
            )));
        }
        let gram = PhiGram::shared(params.h, grid)?;
        let psi = psi_kernel(params, gram.clone());
        let h = h_kernel(params, gram);
        let norm = |i, j, g| -> Result<f64> { Ok(contract(&psi, g, i, j)?.norm_sq().sqrt() / t) };
        rows.push(DecayRow {
            t_max: t,
            n_steps: grid.n_steps(),
            psi_psi_01: norm(0, 1, &psi)?,
            psi_psi_10: norm(1, 0, &psi)?,
            psi_h_01: norm(0, 1, &h)?,
            psi_h_10: norm(1, 0, &h)?,
        });
    }
    Ok(rows)
}

/// Ordinary least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Limit law of `√T (γ̂_T − γ)` as a covariance of `(Re, Im)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConstants {
    pub params: ModelParams,
    /// `d`; at `H = 1/2` this holds `1/(2λ)`, the limit of `α_H d`.
    pub d: f64,
    /// Imaginary part of the closed form of `d` before it was discarded.
    pub d_imag: f64,
    /// `σ²`; at `H = 1/2` the Brownian value `1/(2λ)`.
    pub sigma2: f64,
    pub c: f64,
    pub b: f64,
    /// `[[σ²+c, b], [b, σ²−c]] / (2d²)`.
    pub cov: [[f64; 2]; 2],
    /// The nominal form `[[σ²+c, −b], [−b, σ²−c]] / (2d²a)`, i.e. with `c + ib`
    /// conjugated and an extra `1/a`; at `H = 1/2` it is `λ/(4a) Id₂`.
    pub cov_nominal: [[f64; 2]; 2],
    pub sigma2_error: f64,
    pub cb_error: f64,
    pub d_error: f64,
}

impl AsymptoticConstants {
    pub fn is_psd(&self) -> bool {
        let m = self.cov;
        m[0][0] >= 0.0 && m[1][1] >= 0.0 && m[0][0] * m[1][1] - m[0][1] * m[1][0] >= -1e-14 * m[0][0].abs().max(m[1][1].abs()).powi(2)
    }
}

fn cov_matrix(sigma2: f64, c: f64, b: f64, scale: f64) -> [[f64; 2]; 2] {
    [[(sigma2 + c) * scale, b * scale], [b * scale, (sigma2 - c) * scale]]
}

pub fn limiting_covariance(params: &ModelParams) -> Result<AsymptoticConstants> {
    params.validate()?;
    params.require_estimation_range()?;
    if params.h.is_brownian() {
        let v = 1.0 / (2.0 * params.lambda);
        let nominal = if params.a > 0.0 {
            params.lambda / (4.0 * params.a)
        } else {
            f64::INFINITY
        };
        return Ok(AsymptoticConstants {
            params: *params,
            d: v,
            d_imag: 0.0,
            sigma2: v,
            c: 0.0,
            b: 0.0,
            cov: cov_matrix(v, 0.0, 0.0, 1.0 / (2.0 * v * v)),
            cov_nominal: [[nominal, 0.0], [0.0, nominal]],
            sigma2_error: 0.0,
            cb_error: 0.0,
            d_error: 0.0,
        });
    }
    let d = const_d(params)?;
    let s2 = const_sigma2(params)?;
    let cb = const_cb(params)?;
    let sigma2 = s2.value.re;
    let (c, b) = (cb.value.re, cb.value.im);
    let scale = 1.0 / (2.0 * d.closed_form * d.closed_form);
    Ok(AsymptoticConstants {
        params: *params,
        d: d.closed_form,
        d_imag: d.closed_form_imag,
        sigma2,
        c,
        b,
        cov: cov_matrix(sigma2, c, b, scale),
        cov_nominal: cov_matrix(sigma2, c, -b, scale / params.a),
        sigma2_error: s2.est_error,
        cb_error: cb.est_error,
        d_error: d.quadrature.est_error,
    })
}
