//! Polynomial roots as eigenvalues of a balanced companion matrix.
//!
//! The companion matrix is already upper Hessenberg, so the eigenvalues come
//! from a complex single-shift QR iteration with Wilkinson shifts and
//! deflation on small subdiagonal entries.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MAX_SWEEPS_PER_ROOT: usize = 60;

/// All roots of `c_0 + c_1 z + ... + c_d z^d`. The leading coefficient
/// must be nonzero.
pub(crate) fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = coeffs.len().saturating_sub(1);
    match d {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![-coeffs[0] / coeffs[1]]),
        _ => {}
    }
    let lead = coeffs[d];
    debug_assert!(lead != ZERO);

    let mut h = Hessenberg::zeros(d);
    for j in 0..d {
        h.set(0, j, -coeffs[d - 1 - j] / lead);
    }
    for i in 1..d {
        h.set(i, i - 1, Complex64::new(1.0, 0.0));
    }
    h.balance();
    h.eigenvalues()
}

/// Dense row-major square matrix holding an upper Hessenberg form.
struct Hessenberg {
    n: usize,
    a: Vec<Complex64>,
}

impl Hessenberg {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![ZERO; n * n],
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[i * self.n + j] = v;
    }

    /// Diagonal similarity by powers of two so that row and column norms
    /// are comparable.
    fn balance(&mut self) {
        let n = self.n;
        loop {
            let mut converged = true;
            for i in 0..n {
                let mut c = 0.0;
                let mut r = 0.0;
                for j in 0..n {
                    if j != i {
                        c += self.get(j, i).l1_norm();
                        r += self.get(i, j).l1_norm();
                    }
                }
                if c == 0.0 || r == 0.0 {
                    continue;
                }
                let total = c + r;
                let mut f = 1.0;
                let mut g = r / 2.0;
                while c < g {
                    f *= 2.0;
                    c *= 4.0;
                }
                g = r * 2.0;
                while c > g {
                    f /= 2.0;
                    c /= 4.0;
                }
                if (c + r) / f < 0.95 * total {
                    converged = false;
                    for j in 0..n {
                        let v = self.get(i, j) / f;
                        self.set(i, j, v);
                        let v = self.get(j, i) * f;
                        self.set(j, i, v);
                    }
                }
            }
            if converged {
                break;
            }
        }
    }

    fn eigenvalues(mut self) -> Result<Vec<Complex64>> {
        let n = self.n;
        let mut out = vec![ZERO; n];
        let mut hi = n - 1;
        let mut iter = 0;
        let mut total = 0;
        loop {
            if hi == 0 {
                out[0] = self.get(0, 0);
                break;
            }
            // find the start of the active unreduced block
            let mut lo = hi;
            while lo > 0 {
                let sub = self.get(lo, lo - 1).norm();
                let diag = self.get(lo - 1, lo - 1).norm() + self.get(lo, lo).norm();
                if sub <= f64::EPSILON * diag || sub < f64::MIN_POSITIVE {
                    self.set(lo, lo - 1, ZERO);
                    break;
                }
                lo -= 1;
            }
            if lo == hi {
                out[hi] = self.get(hi, hi);
                hi -= 1;
                iter = 0;
                continue;
            }

            iter += 1;
            total += 1;
            if total > MAX_SWEEPS_PER_ROOT * n {
                return Err(Error::EigenNoConvergence(n));
            }
            let shift = if iter % 11 == 0 {
                // exceptional shift to break cycles
                self.get(hi, hi) + self.get(hi, hi - 1).norm() * Complex64::new(0.75, 0.43)
            } else {
                self.wilkinson_shift(hi)
            };
            self.qr_sweep(lo, hi, shift);
        }
        Ok(out)
    }

    /// Eigenvalue of the trailing 2x2 block closest to its last entry.
    fn wilkinson_shift(&self, hi: usize) -> Complex64 {
        let a = self.get(hi - 1, hi - 1);
        let b = self.get(hi - 1, hi);
        let c = self.get(hi, hi - 1);
        let d = self.get(hi, hi);
        let half = (a - d) * 0.5;
        let disc = (half * half + b * c).sqrt();
        let mean = (a + d) * 0.5;
        let (m1, m2) = (mean + disc, mean - disc);
        if (m1 - d).norm() <= (m2 - d).norm() {
            m1
        } else {
            m2
        }
    }

    /// One explicit shifted QR step `H - mu = QR`, `H <- RQ + mu` on rows
    /// and columns `lo..=hi`.
    fn qr_sweep(&mut self, lo: usize, hi: usize, shift: Complex64) {
        for k in lo..=hi {
            let v = self.get(k, k) - shift;
            self.set(k, k, v);
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let x = self.get(k, k);
            let y = self.get(k + 1, k);
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (Complex64::new(1.0, 0.0), ZERO)
            } else {
                (x / r, y / r)
            };
            for j in k..=hi {
                let hk = self.get(k, j);
                let hk1 = self.get(k + 1, j);
                self.set(k, j, c.conj() * hk + s.conj() * hk1);
                self.set(k + 1, j, -s * hk + c * hk1);
            }
            rotations.push((c, s));
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + offset;
            for i in lo..=(k + 1).min(hi) {
                let a = self.get(i, k);
                let b = self.get(i, k + 1);
                self.set(i, k, a * c + b * s);
                self.set(i, k + 1, -a * s.conj() + b * c.conj());
            }
        }
        for k in lo..=hi {
            let v = self.get(k, k) + shift;
            self.set(k, k, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
        let mut p = vec![c(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![ZERO; p.len() + 1];
            for (i, &a) in p.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            p = next;
        }
        p
    }

    fn assert_same_roots(mut got: Vec<Complex64>, want: &[Complex64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for w in want {
            let (idx, dist) = got
                .iter()
                .enumerate()
                .map(|(i, g)| (i, (g - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(dist < tol, "root {w} missing, closest at {dist:e}");
            got.remove(idx);
        }
    }

    #[test]
    fn quadratic() {
        // z^2 - 0.25
        let r = polynomial_roots(&[c(-0.25, 0.0), ZERO, c(1.0, 0.0)]).unwrap();
        assert_same_roots(r, &[c(0.5, 0.0), c(-0.5, 0.0)], 1e-14);
    }

    #[test]
    fn linear() {
        let r = polynomial_roots(&[c(1.0, 1.0), c(2.0, 0.0)]).unwrap();
        assert_same_roots(r, &[c(-0.5, -0.5)], 1e-15);
    }

    #[test]
    fn mixed_complex_roots() {
        let want = [
            c(0.3, 0.1),
            c(-0.7, 0.2),
            c(2.5, -1.0),
            c(0.0, 1.5),
            c(-4.0, 0.0),
            c(0.05, -0.4),
        ];
        let r = polynomial_roots(&from_roots(&want)).unwrap();
        assert_same_roots(r, &want, 1e-10);
    }

    #[test]
    fn badly_scaled_leading_coefficient() {
        // tiny leading coefficient as produced by a truncated Poisson tail
        let mut p: Vec<Complex64> = (0..18)
            .map(|j| c(0.3 / (j as f64 + 1.0).powi(3), 0.0))
            .collect();
        p[2] -= c(1.0, 0.0);
        p[17] = c(1e-16, 0.0);
        let r = polynomial_roots(&p).unwrap();
        assert_eq!(r.len(), 17);
        for z in r.iter().filter(|z| z.norm() < 1.0) {
            let val = p.iter().rev().fold(ZERO, |acc, &a| acc * z + a);
            assert!(val.norm() < 1e-12, "residual {}", val.norm());
        }
    }
}
