//! Truncated power series in `u` with polynomial-in-`z` coefficients.
//!
//! The reflected-walk transform is built as the exponential of
//! `sum_l (u^l / l) E(z^{S_l^+})`. Coefficients of index `<= N` in `u` and
//! degree `<= M` in `z` are exact under truncation: neither product below
//! ever feeds a dropped term back into a kept one.

use num_complex::Complex64;

use crate::dist::{IncrementDistribution, WalkPmf};
use crate::error::{Error, Result};

/// Dense real polynomial `c_0 + c_1 z + ... + c_M z^M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZPolynomial {
    coeffs: Vec<f64>,
}

impl ZPolynomial {
    /// The degree cap is `coeffs.len() - 1`; an empty vector becomes `0`.
    pub fn from_coeffs(mut coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero(degree_cap: usize) -> Self {
        Self {
            coeffs: vec![0.0; degree_cap + 1],
        }
    }

    pub fn constant(c: f64, degree_cap: usize) -> Self {
        let mut p = Self::zero(degree_cap);
        p.coeffs[0] = c;
        p
    }

    /// The monomial `z^k` (zero if `k` exceeds the cap).
    pub fn monomial(k: usize, degree_cap: usize) -> Self {
        let mut p = Self::zero(degree_cap);
        if k <= degree_cap {
            p.coeffs[k] = 1.0;
        }
        p
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree_cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// One past the last nonzero coefficient.
    fn support_len(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .map_or(0, |i| i + 1)
    }

    pub fn eval_real(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self += factor * (a * b)`, truncated at the cap of `self`.
    fn add_product(&mut self, a: &ZPolynomial, b: &ZPolynomial, factor: f64) {
        let cap = self.coeffs.len();
        let la = a.support_len().min(cap);
        let lb = b.support_len().min(cap);
        for (i, &x) in a.coeffs[..la].iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let x = x * factor;
            let end = lb.min(cap - i);
            for (o, &y) in self.coeffs[i..i + end].iter_mut().zip(&b.coeffs[..end]) {
                *o += x * y;
            }
        }
    }
}

/// Truncated product of two polynomials with the same degree cap.
pub fn poly_mul(a: &ZPolynomial, b: &ZPolynomial) -> Result<ZPolynomial> {
    if a.degree_cap() != b.degree_cap() {
        return Err(Error::DegreeMismatch(a.degree_cap(), b.degree_cap()));
    }
    let mut out = ZPolynomial::zero(a.degree_cap());
    out.add_product(a, b, 1.0);
    Ok(out)
}

/// `f_0 + f_1 u + ... + f_N u^N` with each `f_n` a [`ZPolynomial`].
#[derive(Debug, Clone, PartialEq)]
pub struct USeries {
    coeffs: Vec<ZPolynomial>,
}

impl USeries {
    /// All coefficients must share one degree cap.
    pub fn from_coeffs(coeffs: Vec<ZPolynomial>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Precondition("series needs at least one coefficient".into()))?
            .degree_cap();
        if let Some(bad) = coeffs.iter().find(|c| c.degree_cap() != first) {
            return Err(Error::DegreeMismatch(first, bad.degree_cap()));
        }
        Ok(Self { coeffs })
    }

    pub fn zero(order_cap: usize, degree_cap: usize) -> Self {
        Self {
            coeffs: vec![ZPolynomial::zero(degree_cap); order_cap + 1],
        }
    }

    pub fn coeffs(&self) -> &[ZPolynomial] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &ZPolynomial {
        &self.coeffs[n]
    }

    pub fn order_cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn degree_cap(&self) -> usize {
        self.coeffs[0].degree_cap()
    }

    /// Partial sum `sum_{n <= N} u^n f_n(z)`.
    pub fn eval(&self, u: Complex64, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, f| acc * u + f.eval(z))
    }

    pub fn eval_real(&self, u: f64, z: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, f| acc * u + f.eval_real(z))
    }
}

/// `exp(g)` for a series with zero constant term.
///
/// Uses `n f_n = sum_{l=1}^{n} l g_l f_{n-l}`, `f_0 = 1`, with a fixed
/// summation order in `l`.
pub fn series_exp(g: &USeries) -> Result<USeries> {
    if !g.coeffs[0].is_zero() {
        let deviation = g.coeffs[0]
            .coeffs
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
        return Err(Error::ConstantTerm {
            expected: "zero",
            deviation,
        });
    }
    let m = g.degree_cap();
    let mut f = Vec::with_capacity(g.coeffs.len());
    f.push(ZPolynomial::constant(1.0, m));
    for n in 1..g.coeffs.len() {
        let mut acc = ZPolynomial::zero(m);
        for l in 1..=n {
            acc.add_product(&g.coeffs[l], &f[n - l], l as f64);
        }
        f.push(acc.scaled(1.0 / n as f64));
    }
    Ok(USeries { coeffs: f })
}

/// `log(f)` for a series with unit constant term; inverse of [`series_exp`].
pub fn series_log(f: &USeries) -> Result<USeries> {
    let deviation = f.coeffs[0]
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| if i == 0 { (c - 1.0).abs() } else { c.abs() })
        .fold(0.0f64, f64::max);
    if deviation > 1e-14 {
        return Err(Error::ConstantTerm {
            expected: "one",
            deviation,
        });
    }
    let m = f.degree_cap();
    let mut g: Vec<ZPolynomial> = Vec::with_capacity(f.coeffs.len());
    g.push(ZPolynomial::zero(m));
    for n in 1..f.coeffs.len() {
        // n g_n = n f_n - sum_{l=1}^{n-1} l g_l f_{n-l}
        let mut acc = f.coeffs[n].scaled(n as f64);
        for l in 1..n {
            acc.add_product(&g[l], &f.coeffs[n - l], -(l as f64));
        }
        g.push(acc.scaled(1.0 / n as f64));
    }
    Ok(USeries { coeffs: g })
}

/// The `u`-exponent `sum_{l=1}^{N} (u^l / l) E(z^{S_l^+})`, degree cap `M`.
pub fn spitzer_exponent(
    dist: &IncrementDistribution,
    order_cap: usize,
    degree_cap: usize,
) -> Result<USeries> {
    let mut g = Vec::with_capacity(order_cap + 1);
    g.push(ZPolynomial::zero(degree_cap));
    let mut walk: Option<WalkPmf> = None;
    for l in 1..=order_cap {
        let next = match walk {
            None => crate::dist::walk_pmf(dist, 1)?,
            Some(w) => w.step(dist)?,
        };
        g.push(next.positive_part(degree_cap).scaled(1.0 / l as f64));
        walk = Some(next);
    }
    Ok(USeries { coeffs: g })
}

/// Transform of the reflected walk as a series: `f_n` is the pgf of `M_n`
/// truncated to degree `M`.
pub fn spitzer_series(
    dist: &IncrementDistribution,
    order_cap: usize,
    degree_cap: usize,
) -> Result<USeries> {
    if order_cap == 0 {
        return Err(Error::InvalidParameter {
            name: "order_cap",
            reason: "must be at least 1".into(),
        });
    }
    series_exp(&spitzer_exponent(dist, order_cap, degree_cap)?)
}

/// `f_0(z), ..., f_N(z)` at one fixed `z`: the Spitzer series with `z`
/// substituted before exponentiating, so no degree truncation is involved.
pub fn spitzer_coefficients_at(
    dist: &IncrementDistribution,
    order_cap: usize,
    z: Complex64,
) -> Result<Vec<Complex64>> {
    if order_cap == 0 {
        return Err(Error::InvalidParameter {
            name: "order_cap",
            reason: "must be at least 1".into(),
        });
    }
    // l g_l = E(z^{S_l^+})
    let mut lg = Vec::with_capacity(order_cap + 1);
    lg.push(Complex64::new(0.0, 0.0));
    let mut walk = crate::dist::walk_pmf(dist, 1)?;
    for l in 1..=order_cap {
        if l > 1 {
            walk = walk.step(dist)?;
        }
        let mut nonpositive = 0.0;
        let mut positive = Complex64::new(0.0, 0.0);
        let first = walk.offset().max(1);
        let mut power = z.powi(first as i32);
        for (i, &p) in walk.probs().iter().enumerate() {
            let k = walk.offset() + i as i64;
            if k <= 0 {
                nonpositive += p;
            } else {
                positive += p * power;
                power *= z;
            }
        }
        lg.push(positive + nonpositive);
    }
    let mut f = Vec::with_capacity(order_cap + 1);
    f.push(Complex64::new(1.0, 0.0));
    for n in 1..=order_cap {
        let acc: Complex64 = (1..=n).map(|l| lg[l] * f[n - l]).sum();
        f.push(acc / n as f64);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_family, DistSpec, Family};
    use proptest::prelude::*;

    fn poly(c: &[f64]) -> ZPolynomial {
        ZPolynomial::from_coeffs(c.to_vec())
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn mul_examples() {
        let p = poly(&[0.2, -1.0, 3.0]);
        assert_eq!(poly_mul(&ZPolynomial::constant(1.0, 2), &p).unwrap(), p);
        let z = ZPolynomial::monomial(1, 3);
        let z2 = ZPolynomial::monomial(2, 3);
        assert_eq!(poly_mul(&z, &z2).unwrap(), ZPolynomial::monomial(3, 3));
        let h = poly(&[0.5, 0.5, 0.0]);
        assert_eq!(poly_mul(&h, &h).unwrap().coeffs(), &[0.25, 0.5, 0.25]);
        assert_eq!(
            poly_mul(&h, &ZPolynomial::zero(4)),
            Err(Error::DegreeMismatch(2, 4))
        );
        // z^2 * z^2 drops out entirely under cap 3
        assert!(poly_mul(&z2, &z2).unwrap().is_zero());
    }

    #[test]
    fn coefficients_at_match_polynomial_series() {
        let d = make_family(&DistSpec::new(Family::Binomial { trials: 3, p: 0.4 }, 2)).unwrap();
        let n = 12;
        let full = spitzer_series(&d, n, n * d.upward_reach()).unwrap();
        for z in [0.0, 0.3, 1.0, -0.8] {
            let zc = Complex64::new(z, 0.2);
            let at = spitzer_coefficients_at(&d, n, zc).unwrap();
            for (k, f) in at.iter().enumerate() {
                assert!((f - full.coeff(k).eval(zc)).norm() < 1e-14);
            }
        }
        // every increment positive: the walk never sits at or below zero
        let up = IncrementDistribution::explicit(&[0.0, 0.0, 0.0, 1.0], 1).unwrap();
        let at = spitzer_coefficients_at(&up, 3, Complex64::new(0.5, 0.0)).unwrap();
        assert!((at[3].re - 0.5f64.powi(6)).abs() < 1e-15);
    }

    #[test]
    fn exp_examples() {
        let zero = USeries::zero(5, 2);
        let f = series_exp(&zero).unwrap();
        assert_eq!(f.coeff(0), &ZPolynomial::constant(1.0, 2));
        assert!(f.coeffs()[1..].iter().all(ZPolynomial::is_zero));

        let c = 0.7;
        let mut g = USeries::zero(8, 0);
        g.coeffs[1] = ZPolynomial::constant(c, 0);
        let f = series_exp(&g).unwrap();
        let mut fact = 1.0;
        for n in 0..=8 {
            if n > 0 {
                fact *= n as f64;
            }
            assert!((f.coeff(n).coeffs()[0] - c.powi(n as i32) / fact).abs() < 1e-15);
        }

        let mut g = USeries::zero(20, 1);
        for l in 1..=20 {
            g.coeffs[l] = ZPolynomial::constant(1.0 / l as f64, 1);
        }
        let f = series_exp(&g).unwrap();
        for n in 0..=20 {
            assert!((f.coeff(n).coeffs()[0] - 1.0).abs() < 1e-13);
        }
        let back = series_log(&f).unwrap();
        for l in 1..=20 {
            assert!((back.coeff(l).coeffs()[0] - 1.0 / l as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn exp_log_reject_bad_constant() {
        let mut g = USeries::zero(2, 1);
        g.coeffs[0] = ZPolynomial::constant(0.1, 1);
        assert!(matches!(series_exp(&g), Err(Error::ConstantTerm { .. })));
        assert!(matches!(
            series_log(&USeries::zero(2, 1)),
            Err(Error::ConstantTerm { .. })
        ));
        let one = series_exp(&USeries::zero(3, 2)).unwrap();
        assert!(series_log(&one)
            .unwrap()
            .coeffs()
            .iter()
            .all(ZPolynomial::is_zero));
    }

    #[test]
    fn spitzer_examples() {
        let zero = IncrementDistribution::deterministic(2, 2).unwrap();
        let f = spitzer_series(&zero, 10, 3).unwrap();
        for n in 0..=10 {
            assert_eq!(f.coeff(n), &ZPolynomial::constant(1.0, 3));
        }

        // four equally likely paths of the simple walk
        let sw = IncrementDistribution::explicit(&[0.5, 0.0, 0.5], 1).unwrap();
        let f = spitzer_series(&sw, 2, 2).unwrap();
        assert!(close(f.coeff(1).coeffs(), &[0.5, 0.5, 0.0], 1e-15));
        assert!(close(f.coeff(2).coeffs(), &[0.5, 0.25, 0.25], 1e-15));

        let bern = make_family(&DistSpec::new(
            Family::BernoulliScaled { p: 0.3, scale: 1 },
            1,
        ))
        .unwrap();
        let f = spitzer_series(&bern, 15, 4).unwrap();
        for n in 0..=15 {
            assert!(close(
                f.coeff(n).coeffs(),
                &[1.0, 0.0, 0.0, 0.0, 0.0],
                1e-14
            ));
        }
        assert!(spitzer_series(&bern, 0, 4).is_err());
    }

    #[test]
    fn spitzer_normalized_on_full_support() {
        let d = make_family(&DistSpec::new(Family::Binomial { trials: 3, p: 0.4 }, 2)).unwrap();
        let n = 25;
        let f = spitzer_series(&d, n, n * d.upward_reach()).unwrap();
        for k in 0..=n {
            assert!((f.coeff(k).sum() - 1.0).abs() < 1e-12);
        }
    }

    fn dist_strategy() -> impl Strategy<Value = IncrementDistribution> {
        (prop::collection::vec(0.0f64..1.0, 1..6), 1usize..4).prop_filter_map("mass", |(w, s)| {
            let total: f64 = w.iter().sum();
            if total < 1e-3 {
                return None;
            }
            let pmf: Vec<f64> = w.iter().map(|x| x / total).collect();
            IncrementDistribution::explicit(&pmf, s).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn truncation_is_exact(dist in dist_strategy(), n in 1usize..12, m in 0usize..10) {
            let small = spitzer_series(&dist, n, m).unwrap();
            let big = spitzer_series(&dist, n, m + 5).unwrap();
            for k in 0..=n {
                for i in 0..=m {
                    prop_assert!((small.coeff(k).coeffs()[i] - big.coeff(k).coeffs()[i]).abs() <= 1e-14);
                }
            }
        }

        #[test]
        fn exp_log_round_trip(raw in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 1..10)) {
            let mut coeffs = vec![ZPolynomial::zero(3)];
            coeffs.extend(raw.into_iter().map(ZPolynomial::from_coeffs));
            let g = USeries::from_coeffs(coeffs).unwrap();
            let back = series_log(&series_exp(&g).unwrap()).unwrap();
            for (a, b) in back.coeffs().iter().zip(g.coeffs()) {
                prop_assert!(close(a.coeffs(), b.coeffs(), 1e-12));
            }
        }

        #[test]
        fn spitzer_coefficients_are_subprobabilities(dist in dist_strategy(), n in 1usize..15) {
            let m = n * dist.upward_reach();
            let f = spitzer_series(&dist, n, m).unwrap();
            for k in 0..=n {
                let c = f.coeff(k);
                prop_assert!(c.coeffs().iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
                prop_assert!((0.0..=1.0 + 1e-11).contains(&c.sum()));
            }
            // M_n is stochastically nondecreasing in n
            for k in 0..n {
                let (a, b) = (f.coeff(k).coeffs(), f.coeff(k + 1).coeffs());
                for m0 in 1..=m {
                    let ta: f64 = a[m0..].iter().sum();
                    let tb: f64 = b[m0..].iter().sum();
                    prop_assert!(tb >= ta - 1e-11);
                }
            }
        }
    }
}
