//! Brute-force Gaussian moment oracle for small grids.
//!
//! Each factor `Q_i = Σ_{r,s} A_i[r][s] ξ_r conj(ξ_s)` has one ζ-leg and one
//! ζ̄-leg. Because `E[ξ ξᵀ] = 0`, the only nonzero Isserlis pairings match
//! every ζ-leg with some ζ̄-leg, so `E[Π Q_i]` is a sum over all bijections of
//! legs and over every index tuple. Centering is applied afterwards by
//! expanding `Π (Q_i − E Q_i)` over subsets.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{CfouError, Result};
use crate::grid_chaos::GridKernel;

/// Largest grid the oracle accepts.
pub const ISSERLIS_CAP: usize = 8;

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// `E[Π_i Q_i]` for uncentered factors, by explicit summation over all index
/// tuples and all leg bijections.
pub fn raw_moment(sigma: &Array2<f64>, factors: &[&Array2<Complex64>]) -> Result<Complex64> {
    let n = sigma.nrows();
    if n > ISSERLIS_CAP {
        return Err(CfouError::Resource(format!(
            "Isserlis oracle limited to {ISSERLIS_CAP} steps, got {n}"
        )));
    }
    if factors.iter().any(|a| a.dim() != (n, n)) {
        return Err(CfouError::arg("factor shape does not match the gram matrix"));
    }
    let k = factors.len();
    if k == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let perms = permutations(k);
    let total = n.pow(2 * k as u32);
    let mut idx = vec![0usize; 2 * k];
    let mut sum = Complex64::new(0.0, 0.0);
    for code in 0..total {
        let mut c = code;
        for slot in idx.iter_mut() {
            *slot = c % n;
            c /= n;
        }
        let (rows, cols) = idx.split_at(k);
        let mut coeff = Complex64::new(1.0, 0.0);
        for (i, a) in factors.iter().enumerate() {
            coeff *= a[[rows[i], cols[i]]];
        }
        if coeff == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut weight = 0.0;
        for p in &perms {
            let mut w = 1.0;
            for i in 0..k {
                w *= sigma[[rows[i], cols[p[i]]]];
            }
            weight += w;
        }
        sum += coeff * weight;
    }
    Ok(sum)
}

/// `E[Π_i (Q_i − E Q_i)]` from raw moments of all sub-products.
pub fn centered_moment(sigma: &Array2<f64>, factors: &[&Array2<Complex64>]) -> Result<Complex64> {
    let k = factors.len();
    let means: Vec<Complex64> = factors
        .iter()
        .map(|a| raw_moment(sigma, &[a]))
        .collect::<Result<_>>()?;
    let mut total = Complex64::new(0.0, 0.0);
    for mask in 0u32..(1 << k) {
        let chosen: Vec<&Array2<Complex64>> = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| factors[i])
            .collect();
        let mut term = raw_moment(sigma, &chosen)?;
        for (i, m) in means.iter().enumerate() {
            if mask & (1 << i) == 0 {
                term *= -m;
            }
        }
        total += term;
    }
    Ok(total)
}

/// Oracle values of `(E|F|², E F², E|F|⁴)` for `F = I_{1,1}(K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMoments {
    pub m2_abs: f64,
    pub m2: Complex64,
    pub m4_abs: f64,
}

impl OracleMoments {
    pub fn gap(&self) -> f64 {
        self.m4_abs - 2.0 * self.m2_abs * self.m2_abs - self.m2.norm_sqr()
    }
}

pub fn oracle_moments(kernel: &GridKernel) -> Result<OracleMoments> {
    let gram = kernel.gram();
    let n = gram.n();
    let sigma = Array2::from_shape_fn((n, n), |(j, k)| gram.get(j, k));
    let f = kernel.values();
    // conj(F) carries the ζ-leg on the old column index: matrix Kᴴ.
    let h = kernel.conj_transpose();
    let h = h.values();
    let m2_abs = centered_moment(&sigma, &[f, h])?;
    let m2 = centered_moment(&sigma, &[f, f])?;
    let m4_abs = centered_moment(&sigma, &[f, f, h, h])?;
    Ok(OracleMoments {
        m2_abs: m2_abs.re,
        m2,
        m4_abs: m4_abs.re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn scalar_complex_gaussian() {
        // single coordinate with E|ξ|² = s: E|ξ|^{2k} = k! s^k
        let s = 0.7;
        let sigma = Array2::from_elem((1, 1), s);
        let one = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
        let m3 = raw_moment(&sigma, &[&one, &one, &one]).unwrap();
        assert!((m3.re - 6.0 * s.powi(3)).abs() < 1e-14);
        // centered exponential: third central moment 2 s³
        let c3 = centered_moment(&sigma, &[&one, &one, &one]).unwrap();
        assert!((c3.re - 2.0 * s.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn cap_enforced() {
        let sigma = Array2::<f64>::eye(9);
        let a = Array2::<Complex64>::zeros((9, 9));
        assert!(raw_moment(&sigma, &[&a]).is_err());
    }
}
