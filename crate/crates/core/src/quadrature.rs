//! Double-exponential (tanh-sinh) quadrature.
//!
//! The rule integrates over `[0, 1]` and hands the integrand both the abscissa
//! and its complement, each computed without cancellation. Endpoint
//! singularities of the form `x^p` with `p > -1` are resolved as long as the
//! integrand is written in terms of the distance to the singular endpoint.
//! Half-line integrals use the map `x = u / (1 - u)`; long finite spans are
//! split at 1 and logarithmically stretched beyond it.

use std::sync::OnceLock;

use num_complex::Complex64;

const T_MAX: f64 = 6.0;
const MAX_LEVEL: usize = 12;

#[derive(Debug, Clone, Copy)]
struct Node {
    /// Distance of the abscissa from the nearer endpoint.
    near: f64,
    /// Distance from the farther endpoint (`1 - near`, computed directly).
    far: f64,
    weight: f64,
}

fn node(t: f64) -> Node {
    let e = (-std::f64::consts::PI * t.sinh()).exp();
    let denom = 1.0 + e;
    Node {
        near: e / denom,
        far: 1.0 / denom,
        weight: std::f64::consts::PI * t.cosh() * e / (denom * denom),
    }
}

/// Nodes added at each refinement level; level 0 holds `t = 0, 1, .., 6`.
fn levels() -> &'static [Vec<Node>] {
    static TABLE: OnceLock<Vec<Vec<Node>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(MAX_LEVEL + 1);
        table.push((1..=T_MAX as usize).map(|j| node(j as f64)).collect());
        for level in 1..=MAX_LEVEL {
            let h = 0.5f64.powi(level as i32);
            let count = (T_MAX / h) as usize;
            table.push(
                (1..=count)
                    .step_by(2)
                    .map(|j| node(j as f64 * h))
                    .collect(),
            );
        }
        table
    })
}

/// Outcome of a single quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    /// Difference between the last two refinement levels.
    pub est_error: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Largest error reported by any inner quadrature (nested rules only).
    pub inner_error: f64,
}

impl QuadResult {
    /// Error estimate including propagated inner errors, relative to the value.
    pub fn relative_error(&self) -> f64 {
        let scale = self.value.norm().max(f64::MIN_POSITIVE);
        (self.est_error + self.inner_error) / scale
    }

    pub fn total_error(&self) -> f64 {
        self.est_error + self.inner_error
    }
}

/// Tanh-sinh rule with a relative stopping tolerance.
#[derive(Debug, Clone, Copy)]
pub struct TanhSinh {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub min_level: usize,
    pub max_level: usize,
}

impl Default for TanhSinh {
    fn default() -> Self {
        TanhSinh {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            min_level: 3,
            max_level: 9,
        }
    }
}

impl TanhSinh {
    pub fn with_tolerance(rel_tol: f64) -> Self {
        TanhSinh {
            rel_tol,
            ..Default::default()
        }
    }

    /// `∫_0^1 f(x, 1 - x) dx`.
    pub fn unit<F>(&self, mut f: F) -> QuadResult
    where
        F: FnMut(f64, f64) -> Complex64,
    {
        let table = levels();
        let max_level = self.max_level.min(MAX_LEVEL);
        let mut eval = |x: f64, cx: f64, evaluations: &mut usize| -> Complex64 {
            *evaluations += 1;
            let y = f(x, cx);
            if y.re.is_finite() && y.im.is_finite() {
                y
            } else {
                Complex64::new(0.0, 0.0)
            }
        };

        let mut evaluations = 0usize;
        // t = 0 is counted once.
        let mut raw = eval(0.5, 0.5, &mut evaluations) * (std::f64::consts::PI / 4.0);
        for n in &table[0] {
            if n.near > 0.0 {
                raw += (eval(n.near, n.far, &mut evaluations) + eval(n.far, n.near, &mut evaluations))
                    * n.weight;
            }
        }
        let mut estimate = raw;
        let mut error = f64::INFINITY;
        let mut converged = false;
        for level in 1..=max_level {
            let h = 0.5f64.powi(level as i32);
            for n in &table[level] {
                if n.near > 0.0 {
                    raw += (eval(n.near, n.far, &mut evaluations)
                        + eval(n.far, n.near, &mut evaluations))
                        * n.weight;
                }
            }
            let next = raw * h;
            error = (next - estimate).norm();
            estimate = next;
            if level >= self.min_level && error <= self.abs_tol.max(self.rel_tol * estimate.norm()) {
                converged = true;
                break;
            }
        }
        QuadResult {
            value: estimate,
            est_error: error,
            evaluations,
            converged,
            inner_error: 0.0,
        }
    }

    /// `∫_0^len f(x, len - x) dx` for a finite span.
    pub fn span<F>(&self, len: f64, mut f: F) -> QuadResult
    where
        F: FnMut(f64, f64) -> Complex64,
    {
        if len <= 0.0 {
            return QuadResult::zero();
        }
        let mut r = self.unit(|u, cu| f(len * u, len * cu));
        r.value *= len;
        r.est_error *= len;
        r
    }

    /// `∫_0^∞ f(x) dx` through `x = u / (1 - u)`.
    pub fn half_line<F>(&self, mut f: F) -> QuadResult
    where
        F: FnMut(f64) -> Complex64,
    {
        self.unit(|u, cu| {
            let x = u / cu;
            f(x) / (cu * cu)
        })
    }

    /// `∫_0^len f(x) dx` for spans that may be long compared with the
    /// integrand's features near zero: `[0, 1]` directly, `[1, len]` after
    /// `x = e^y`.
    pub fn long_span<F>(&self, len: f64, mut f: F) -> QuadResult
    where
        F: FnMut(f64) -> Complex64,
    {
        if len <= 1.0 {
            return self.span(len, |x, _| f(x));
        }
        let head = self.span(1.0, |x, _| f(x));
        let tail = self.span(len.ln(), |y, _| {
            let x = y.exp();
            f(x) * x
        });
        head.combine(tail)
    }

    /// `∫_lo^hi f(v) dv` under `v = lo (hi/lo)^t`, for integrands whose
    /// features are spread evenly in `ln v`. Requires `0 < lo`.
    pub fn geometric<F>(&self, lo: f64, hi: f64, mut f: F) -> QuadResult
    where
        F: FnMut(f64) -> Complex64,
    {
        if !(hi > lo) || !(lo > 0.0) {
            return QuadResult::zero();
        }
        let log_ratio = (hi / lo).ln();
        self.unit(|t, ct| {
            // evaluate from the nearer end so both endpoints are exact
            let v = if t <= 0.5 {
                lo * (t * log_ratio).exp()
            } else {
                hi * (-ct * log_ratio).exp()
            };
            f(v) * (v * log_ratio)
        })
    }
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult {
            value: Complex64::new(0.0, 0.0),
            est_error: 0.0,
            evaluations: 0,
            converged: true,
            inner_error: 0.0,
        }
    }

    /// Sum of two independent pieces of one integral.
    pub fn combine(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            est_error: self.est_error + other.est_error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
            inner_error: self.inner_error + other.inner_error,
        }
    }
}

/// Bookkeeping for nested rules: records what the inner integrals reported so
/// the outer result can carry it. Inner relative errors are averaged with the
/// magnitude of the outer integrand as weight.
#[derive(Debug, Default, Clone, Copy)]
pub struct InnerLog {
    pub evaluations: usize,
    pub all_converged: bool,
    err_sum: f64,
    mag_sum: f64,
    seen: bool,
}

/// Weighted mean inner relative error above which a nested result is
/// reported as not converged.
pub const INNER_REL_LIMIT: f64 = 1e-7;

impl InnerLog {
    pub fn new() -> Self {
        InnerLog {
            all_converged: true,
            ..Default::default()
        }
    }

    /// Record an inner result and return its value.
    pub fn take(&mut self, r: QuadResult) -> Complex64 {
        self.take_scaled(r, Complex64::new(1.0, 0.0))
    }

    /// Record an inner result that enters the outer integrand multiplied by
    /// `factor`; returns the product.
    pub fn take_scaled(&mut self, r: QuadResult, factor: Complex64) -> Complex64 {
        self.seen = true;
        self.evaluations += r.evaluations;
        self.all_converged &= r.converged;
        let scale = factor.norm();
        if scale.is_finite() {
            self.err_sum += r.total_error() * scale;
            self.mag_sum += r.value.norm() * scale;
        }
        r.value * factor
    }

    pub fn mean_relative_error(&self) -> f64 {
        if self.mag_sum > 0.0 {
            self.err_sum / self.mag_sum
        } else {
            0.0
        }
    }

    /// Fold the inner record into the outer result.
    pub fn finish(self, mut outer: QuadResult) -> QuadResult {
        if self.seen {
            let rel = self.mean_relative_error();
            outer.evaluations += self.evaluations;
            outer.inner_error += rel * outer.value.norm();
            outer.converged &= rel <= INNER_REL_LIMIT;
        }
        outer
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn polynomial_on_unit_interval() {
        let r = TanhSinh::default().unit(|x, _| c(3.0 * x * x));
        assert!(r.converged);
        assert!((r.value.re - 1.0).abs() < 1e-13);
    }

    #[test]
    fn strong_endpoint_singularity() {
        // ∫_0^1 x^{-0.9} dx = 10
        let r = TanhSinh::default().unit(|x, _| c(x.powf(-0.9)));
        assert!((r.value.re - 10.0).abs() < 1e-8, "{:?}", r);
    }

    #[test]
    fn singularity_at_right_endpoint_uses_complement() {
        // ∫_0^2 (2 - x)^{-0.8} dx = 2^{0.2} / 0.2
        let r = TanhSinh::default().span(2.0, |_, cx| c(cx.powf(-0.8)));
        let exact = 2f64.powf(0.2) / 0.2;
        assert!((r.value.re - exact).abs() < 1e-8 * exact, "{:?}", r);
    }

    #[test]
    fn half_line_gamma_integral() {
        // ∫_0^∞ x^{-0.6} e^{-x} dx = Γ(0.4)
        let r = TanhSinh::default().half_line(|x| c(x.powf(-0.6) * (-x).exp()));
        let exact = statrs::function::gamma::gamma(0.4);
        assert!((r.value.re - exact).abs() < 1e-9 * exact, "{:?}", r);
    }

    #[test]
    fn half_line_complex_exponential() {
        // ∫_0^∞ e^{-(1 - 2i) x} dx = 1 / (1 - 2i)
        let g = Complex64::new(1.0, -2.0);
        let r = TanhSinh::default().half_line(|x| (-g * x).exp());
        assert!((r.value - g.inv()).norm() < 1e-9, "{:?}", r);
    }

    #[test]
    fn long_span_algebraic_tail() {
        // ∫_0^L (1 + x)^{-1.5} dx = 2 (1 - (1 + L)^{-1/2})
        let len = 5000.0;
        let r = TanhSinh::default().long_span(len, |x| c((1.0 + x).powf(-1.5)));
        let exact = 2.0 * (1.0 - (1.0 + len).powf(-0.5));
        assert!((r.value.re - exact).abs() < 1e-10, "{:?}", r);
    }

    #[test]
    fn nested_corner_singularity() {
        // ∫_0^1∫_0^1 (x + y)^{-1} dx dy = 2 ln 2
        let rule = TanhSinh::default();
        let mut log = InnerLog::new();
        let outer = rule.unit(|y, _| log.take(rule.unit(|x, _| c(1.0 / (x + y)))));
        let r = log.finish(outer);
        assert!((r.value.re - 2.0 * 2f64.ln()).abs() < 1e-8, "{:?}", r);
    }

    #[test]
    fn geometric_map() {
        // ∫_1e-6^1 v^{-0.5} dv
        let r = TanhSinh::default().geometric(1e-6, 1.0, |v| c(v.powf(-0.5)));
        assert!((r.value.re - 2.0 * (1.0 - 1e-3)).abs() < 1e-12, "{:?}", r);
    }

    #[test]
    fn nested_corner_after_diagonal_split() {
        // same integral, x = y t on the lower triangle (doubled by symmetry)
        let rule = TanhSinh::default();
        let mut log = InnerLog::new();
        let outer = rule.unit(|y, _| log.take(rule.unit(|t, _| c(y / (y * t + y)))));
        let r = log.finish(outer);
        assert!((2.0 * r.value.re - 2.0 * 2f64.ln()).abs() < 1e-12, "{:?}", r);
        assert!(r.converged);
    }
}
