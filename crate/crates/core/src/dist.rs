//! Increment distributions `X = A - s` and the law of the free walk `S_l`.
//!
//! `A` is a nonnegative integer variable with a finite pmf. Families with
//! infinite support are truncated at the smallest index whose removed tail
//! mass is below the requested tolerance, then renormalized.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::ZPolynomial;

/// Largest tail tolerance accepted by [`make_family`].
pub const MAX_TAIL_TOLERANCE: f64 = 1e-14;

/// Upper bound on generated terms for infinite-support families.
const MAX_FAMILY_TERMS: usize = 200_000;

/// Upper bound on the support length of `S_l`.
pub const WALK_SUPPORT_CAP: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `A = c` with probability one.
    Deterministic {
        c: usize,
    },
    /// `A = scale * B` with `B ~ Bernoulli(p)`.
    BernoulliScaled {
        p: f64,
        scale: usize,
    },
    Binomial {
        trials: usize,
        p: f64,
    },
    PoissonTruncated {
        lambda: f64,
    },
    /// `P(A = j) = p (1 - p)^j`, `j >= 0`.
    GeometricTruncated {
        p: f64,
    },
    Explicit {
        pmf: Vec<f64>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Deterministic { .. } => "deterministic",
            Family::BernoulliScaled { .. } => "bernoulli-scaled",
            Family::Binomial { .. } => "binomial",
            Family::PoissonTruncated { .. } => "poisson-truncated",
            Family::GeometricTruncated { .. } => "geometric-truncated",
            Family::Explicit { .. } => "explicit",
        }
    }
}

/// Family, downward jump bound and tail tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistSpec {
    pub family: Family,
    pub s: usize,
    pub tail_tolerance: f64,
}

impl DistSpec {
    pub fn new(family: Family, s: usize) -> Self {
        Self {
            family,
            s,
            tail_tolerance: MAX_TAIL_TOLERANCE,
        }
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Self {
        self.tail_tolerance = tol;
        self
    }
}

/// Radius of convergence of the (untruncated) pgf `A(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyticityRadius {
    Finite(f64),
    Infinite,
}

impl AnalyticityRadius {
    pub fn value(self) -> f64 {
        match self {
            AnalyticityRadius::Finite(r) => r,
            AnalyticityRadius::Infinite => f64::INFINITY,
        }
    }
}

/// Law of the increment `X = A - s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementDistribution {
    s: usize,
    pmf: Vec<f64>,
    family: &'static str,
    truncation_defect: f64,
    radius: AnalyticityRadius,
    warnings: Vec<String>,
}

impl IncrementDistribution {
    /// Builds a distribution from an explicit pmf of `A`.
    pub fn explicit(pmf: &[f64], s: usize) -> Result<Self> {
        make_family(&DistSpec::new(Family::Explicit { pmf: pmf.to_vec() }, s))
    }

    /// `A = c` almost surely.
    pub fn deterministic(c: usize, s: usize) -> Result<Self> {
        make_family(&DistSpec::new(Family::Deterministic { c }, s))
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `P(A = j)` for `j = 0..=J`, trailing zeros stripped.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Largest index `J` with `P(A = J) > 0`.
    pub fn max_jump(&self) -> usize {
        self.pmf.len() - 1
    }

    /// `max(J - s, 0)`: the per-step growth of the support of `M_n`.
    pub fn upward_reach(&self) -> usize {
        self.max_jump().saturating_sub(self.s)
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    pub fn truncation_defect(&self) -> f64 {
        self.truncation_defect
    }

    pub fn analyticity_radius(&self) -> AnalyticityRadius {
        self.radius
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `A(w) = sum_j p_j w^j` by Horner evaluation.
    pub fn pgf(&self, w: Complex64) -> Complex64 {
        self.pmf
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &p| acc * w + p)
    }

    pub fn pgf_real(&self, x: f64) -> f64 {
        self.pmf.iter().rev().fold(0.0, |acc, &p| acc * x + p)
    }

    /// `A'(w)`.
    pub fn pgf_derivative(&self, w: Complex64) -> Complex64 {
        self.pmf
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (j, &p)| {
                acc * w + p * j as f64
            })
    }
}

/// Free-function form of [`IncrementDistribution::pgf`].
pub fn pgf_eval(dist: &IncrementDistribution, w: Complex64) -> Complex64 {
    dist.pgf(w)
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(name, format!("{p} is not in [0, 1]")));
    }
    Ok(())
}

/// Instantiates a named family.
pub fn make_family(spec: &DistSpec) -> Result<IncrementDistribution> {
    if spec.s == 0 {
        return Err(invalid("s", "must be a positive integer"));
    }
    let tol = spec.tail_tolerance;
    if !(tol > 0.0) || tol.is_nan() {
        return Err(invalid("tail_tolerance", format!("{tol} must be positive")));
    }
    if tol > MAX_TAIL_TOLERANCE {
        return Err(Error::TailToleranceTooLoose(tol));
    }

    let (raw, defect, radius) = match &spec.family {
        Family::Deterministic { c } => {
            let mut pmf = vec![0.0; c + 1];
            pmf[*c] = 1.0;
            (pmf, 0.0, AnalyticityRadius::Infinite)
        }
        Family::BernoulliScaled { p, scale } => {
            check_probability("p", *p)?;
            if *scale == 0 {
                return Err(invalid("scale", "must be positive"));
            }
            let mut pmf = vec![0.0; scale + 1];
            pmf[0] = 1.0 - p;
            pmf[*scale] = *p;
            (pmf, 0.0, AnalyticityRadius::Infinite)
        }
        Family::Binomial { trials, p } => {
            check_probability("p", *p)?;
            (binomial_pmf(*trials, *p), 0.0, AnalyticityRadius::Infinite)
        }
        Family::PoissonTruncated { lambda } => {
            if !(*lambda > 0.0) || !lambda.is_finite() {
                return Err(invalid("lambda", format!("{lambda} must be positive")));
            }
            let ln_lambda = lambda.ln();
            let mut ln_p = -lambda;
            let terms = generate_terms(*lambda, |j| {
                if j > 0 {
                    ln_p += ln_lambda - (j as f64).ln();
                }
                ln_p.exp()
            })?;
            let (pmf, defect) = truncate_tail(terms, tol);
            (pmf, defect, AnalyticityRadius::Infinite)
        }
        Family::GeometricTruncated { p } => {
            check_probability("p", *p)?;
            if *p == 0.0 {
                return Err(Error::RadiusTooSmall(1.0));
            }
            if *p == 1.0 {
                (vec![1.0], 0.0, AnalyticityRadius::Infinite)
            } else {
                let q = 1.0 - p;
                let mut term = *p;
                let terms = generate_terms(0.0, |j| {
                    if j > 0 {
                        term *= q;
                    }
                    term
                })?;
                let (pmf, defect) = truncate_tail(terms, tol);
                (pmf, defect, AnalyticityRadius::Finite(1.0 / q))
            }
        }
        Family::Explicit { pmf } => {
            if pmf.is_empty() {
                return Err(invalid("pmf", "must not be empty"));
            }
            if let Some(bad) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(invalid("pmf", format!("entry {bad} is not a probability")));
            }
            let total: f64 = pmf.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invalid("pmf", format!("entries sum to {total}, not 1")));
            }
            (pmf.clone(), 0.0, AnalyticityRadius::Infinite)
        }
    };

    if defect > MAX_TAIL_TOLERANCE {
        return Err(Error::TruncationDefect(defect));
    }
    if radius.value() <= 1.0 {
        return Err(Error::RadiusTooSmall(radius.value()));
    }

    let mut pmf = raw;
    while pmf.len() > 1 && pmf[pmf.len() - 1] == 0.0 {
        pmf.pop();
    }
    let total: f64 = pmf.iter().sum();
    if !(total > 0.0) {
        return Err(invalid("pmf", "has no mass"));
    }
    pmf.iter_mut().for_each(|p| *p /= total);

    let mut warnings = Vec::new();
    if pmf[0] == 0.0 {
        warnings.push(format!(
            "P(A = 0) = 0: the kernel has a root of multiplicity >= 1 at z = 0 (s = {})",
            spec.s
        ));
    }

    Ok(IncrementDistribution {
        s: spec.s,
        pmf,
        family: spec.family.name(),
        truncation_defect: defect,
        radius,
        warnings,
    })
}

fn binomial_pmf(trials: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let mut out = Vec::with_capacity(trials + 1);
    let mut choose = 1.0f64;
    for j in 0..=trials {
        if j > 0 {
            choose = choose * (trials - j + 1) as f64 / j as f64;
        }
        out.push(choose * p.powi(j as i32) * q.powi((trials - j) as i32));
    }
    out
}

/// Generates pmf terms until they are negligible past `mode`.
fn generate_terms(mode: f64, mut term: impl FnMut(usize) -> f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for j in 0..MAX_FAMILY_TERMS {
        let t = term(j);
        out.push(t);
        if (j as f64) > mode && t < 1e-40 {
            return Ok(out);
        }
    }
    Err(invalid(
        "family",
        format!("pmf needs more than {MAX_FAMILY_TERMS} terms before its tail is negligible"),
    ))
}

/// Cuts `terms` at the smallest `J` with `sum_{j > J} terms[j] <= tol`.
fn truncate_tail(mut terms: Vec<f64>, tol: f64) -> (Vec<f64>, f64) {
    // tails[j] = sum of terms strictly after j, summed from the small end
    let mut tails = vec![0.0; terms.len()];
    let mut acc = 0.0;
    for j in (0..terms.len()).rev() {
        tails[j] = acc;
        acc += terms[j];
    }
    let cut = tails
        .iter()
        .position(|&t| t <= tol)
        .unwrap_or(terms.len() - 1);
    terms.truncate(cut + 1);
    (terms, tails[cut])
}

/// Law of `S_l = X_1 + ... + X_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPmf {
    l: usize,
    offset: i64,
    probs: Vec<f64>,
}

impl WalkPmf {
    pub fn steps(&self) -> usize {
        self.l
    }

    /// Smallest support point `-s l`.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// `probs()[k] = P(S_l = offset + k)`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(S_l = k)`, zero outside the support.
    pub fn prob(&self, k: i64) -> f64 {
        let idx = k - self.offset;
        if idx < 0 {
            return 0.0;
        }
        self.probs.get(idx as usize).copied().unwrap_or(0.0)
    }

    /// Largest support point `(J - s) l`.
    pub fn max_value(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    /// Law of `S_{l+1}`.
    pub fn step(&self, dist: &IncrementDistribution) -> Result<WalkPmf> {
        let len = self.probs.len() + dist.pmf().len() - 1;
        if len > WALK_SUPPORT_CAP {
            return Err(Error::SupportTooLarge {
                len,
                cap: WALK_SUPPORT_CAP,
            });
        }
        Ok(WalkPmf {
            l: self.l + 1,
            offset: self.offset - dist.s() as i64,
            probs: convolve(&self.probs, dist.pmf()),
        })
    }

    /// Law of `S_l + S'_m` for independent walks.
    pub fn convolve(&self, other: &WalkPmf) -> Result<WalkPmf> {
        let len = self.probs.len() + other.probs.len() - 1;
        if len > WALK_SUPPORT_CAP {
            return Err(Error::SupportTooLarge {
                len,
                cap: WALK_SUPPORT_CAP,
            });
        }
        Ok(WalkPmf {
            l: self.l + other.l,
            offset: self.offset + other.offset,
            probs: convolve(&self.probs, &other.probs),
        })
    }

    /// `E(z^{S_l^+})` truncated to degree `m_max`.
    pub fn positive_part(&self, m_max: usize) -> ZPolynomial {
        let mut coeffs = vec![0.0; m_max + 1];
        for (idx, &p) in self.probs.iter().enumerate() {
            let k = self.offset + idx as i64;
            if k <= 0 {
                coeffs[0] += p;
            } else if (k as usize) <= m_max {
                coeffs[k as usize] = p;
            }
        }
        ZPolynomial::from_coeffs(coeffs)
    }
}

/// Schoolbook convolution of two nonnegative sequences.
pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// Law of `S_l` by `l - 1` successive convolutions with the pmf of `A`.
pub fn walk_pmf(dist: &IncrementDistribution, l: usize) -> Result<WalkPmf> {
    if l == 0 {
        return Err(invalid("l", "must be at least 1"));
    }
    let mut walk = WalkPmf {
        l: 1,
        offset: -(dist.s() as i64),
        probs: dist.pmf().to_vec(),
    };
    for _ in 1..l {
        walk = walk.step(dist)?;
    }
    Ok(walk)
}

/// `E(z^{S_l^+})` truncated to degree `m_max`.
pub fn positive_part_pgf(
    dist: &IncrementDistribution,
    l: usize,
    m_max: usize,
) -> Result<ZPolynomial> {
    Ok(walk_pmf(dist, l)?.positive_part(m_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_walk() -> IncrementDistribution {
        IncrementDistribution::explicit(&[0.5, 0.0, 0.5], 1).unwrap()
    }

    #[test]
    fn deterministic_point_mass() {
        let d = IncrementDistribution::deterministic(2, 2).unwrap();
        assert_eq!(d.pmf(), &[0.0, 0.0, 1.0]);
        assert_eq!(d.upward_reach(), 0);
        assert_eq!(d.warnings().len(), 1);
    }

    #[test]
    fn explicit_copy() {
        let d = simple_walk();
        assert_eq!(d.pmf(), &[0.5, 0.0, 0.5]);
        assert_eq!(d.truncation_defect(), 0.0);
        assert!(d.warnings().is_empty());
    }

    #[test]
    fn geometric_half_truncates_at_46() {
        // brute-force tail: smallest J with 2^-(J+1) <= 1e-14
        let mut j = 0;
        while 0.5f64.powi(j + 1) > 1e-14 {
            j += 1;
        }
        assert_eq!(j, 46);
        let d = make_family(&DistSpec::new(Family::GeometricTruncated { p: 0.5 }, 1)).unwrap();
        assert_eq!(d.max_jump(), 46);
        assert!(d.truncation_defect() <= 1e-14);
        assert!((d.truncation_defect() - 0.5f64.powi(47)).abs() < 1e-20);
        assert_eq!(d.analyticity_radius(), AnalyticityRadius::Finite(2.0));
        let sum: f64 = d.pmf().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn poisson_normalized() {
        let d = make_family(&DistSpec::new(Family::PoissonTruncated { lambda: 1.2 }, 2)).unwrap();
        let sum: f64 = d.pmf().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-14);
        assert!(d.truncation_defect() <= 1e-14);
        assert!((d.pmf()[1] - 1.2 * (-1.2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn binomial_matches_closed_form() {
        let d = make_family(&DistSpec::new(Family::Binomial { trials: 3, p: 0.4 }, 2)).unwrap();
        let expect = [0.216, 0.432, 0.288, 0.064];
        for (a, b) in d.pmf().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_loose_tolerance() {
        let spec =
            DistSpec::new(Family::GeometricTruncated { p: 0.5 }, 1).with_tail_tolerance(1e-2);
        assert_eq!(make_family(&spec), Err(Error::TailToleranceTooLoose(1e-2)));
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(make_family(&DistSpec::new(Family::Binomial { trials: 3, p: 1.5 }, 1)).is_err());
        assert!(make_family(&DistSpec::new(Family::PoissonTruncated { lambda: -1.0 }, 1)).is_err());
        assert!(IncrementDistribution::explicit(&[0.5, 0.2], 1).is_err());
        assert!(IncrementDistribution::explicit(&[1.0], 0).is_err());
        assert_eq!(
            make_family(&DistSpec::new(Family::GeometricTruncated { p: 0.0 }, 1)),
            Err(Error::RadiusTooSmall(1.0))
        );
    }

    #[test]
    fn pgf_examples() {
        let d = IncrementDistribution::deterministic(2, 2).unwrap();
        let w = Complex64::new(0.3, -1.7);
        assert!((d.pgf(w) - w * w).norm() < 1e-15);
        let sw = simple_walk();
        assert!((pgf_eval(&sw, Complex64::new(1.0, 0.0)) - 1.0).norm() < 1e-15);
        assert!(pgf_eval(&sw, Complex64::i()).norm() < 1e-15);
    }

    #[test]
    fn pgf_derivative_matches_difference() {
        let d = make_family(&DistSpec::new(Family::Binomial { trials: 4, p: 0.3 }, 2)).unwrap();
        let w = Complex64::new(0.4, 0.3);
        let h = 1e-6;
        let fd = (d.pgf(w + h) - d.pgf(w - h)) / (2.0 * h);
        assert!((fd - d.pgf_derivative(w)).norm() < 1e-9);
    }

    #[test]
    fn walk_examples() {
        let w = walk_pmf(&simple_walk(), 2).unwrap();
        assert_eq!(w.offset(), -2);
        assert_eq!(w.prob(-2), 0.25);
        assert_eq!(w.prob(-1), 0.0);
        assert_eq!(w.prob(0), 0.5);
        assert_eq!(w.prob(2), 0.25);

        let zero = IncrementDistribution::deterministic(3, 3).unwrap();
        let w = walk_pmf(&zero, 7).unwrap();
        assert_eq!(w.prob(0), 1.0);
        assert_eq!(w.probs().iter().sum::<f64>(), 1.0);

        let d = make_family(&DistSpec::new(Family::Binomial { trials: 3, p: 0.4 }, 2)).unwrap();
        let w = walk_pmf(&d, 1).unwrap();
        assert_eq!(w.offset(), -2);
        assert_eq!(w.probs(), d.pmf());
        assert!(walk_pmf(&d, 0).is_err());
    }

    #[test]
    fn positive_part_examples() {
        let sw = simple_walk();
        let p = positive_part_pgf(&sw, 1, 3).unwrap();
        assert_eq!(p.coeffs(), &[0.5, 0.5, 0.0, 0.0]);
        let p = positive_part_pgf(&sw, 2, 2).unwrap();
        assert_eq!(p.coeffs(), &[0.75, 0.0, 0.25]);
        let zero = IncrementDistribution::deterministic(1, 1).unwrap();
        let p = positive_part_pgf(&zero, 5, 4).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn positive_part_full_support_sums_to_one() {
        let d = make_family(&DistSpec::new(Family::PoissonTruncated { lambda: 1.2 }, 2)).unwrap();
        for l in 1..=8 {
            let m = (d.max_jump() - d.s()) * l;
            let p = positive_part_pgf(&d, l, m).unwrap();
            assert!((p.eval_real(1.0) - 1.0).abs() < 1e-12);
        }
    }
}
