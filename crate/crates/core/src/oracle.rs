//! Ground truth by forward dynamic programming on `M_{n+1} = (M_n + A_{n+1} - s)^+`,
//! and structural checks of the one-step functional equation and of the
//! kernel-method numerator.

use num_complex::Complex64;
use serde::Serialize;

use crate::dist::IncrementDistribution;
use crate::error::{Error, Result};
use crate::kernel::RootSet;
use crate::series::USeries;

/// Which method produced a [`DistributionTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dp,
    Spitzer,
    ProductInversion,
    PollaczekInversion,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::Spitzer => "spitzer",
            Method::ProductInversion => "product-inversion",
            Method::PollaczekInversion => "pollaczek-inversion",
        }
    }
}

/// `P(M_n = m)` for `n = 0..=n_max`, `m = 0..=m_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionTable {
    pub method: Method,
    pub probs: Vec<Vec<f64>>,
    /// Row `n` holds the whole support of `M_n`.
    pub complete_rows: Vec<bool>,
}

impl DistributionTable {
    /// Wraps raw rows; completeness follows from support growth
    /// `m_max >= n (J - s)^+`.
    pub fn new(method: Method, dist: &IncrementDistribution, probs: Vec<Vec<f64>>) -> Self {
        let m_max = probs.first().map_or(0, |r| r.len().saturating_sub(1));
        let reach = dist.upward_reach();
        let complete_rows = (0..probs.len()).map(|n| n * reach <= m_max).collect();
        Self {
            method,
            probs,
            complete_rows,
        }
    }

    /// Rows `0..=N` of a series, each coefficient truncated to its degree cap.
    pub fn from_series(method: Method, dist: &IncrementDistribution, series: &USeries) -> Self {
        let probs = series
            .coeffs()
            .iter()
            .map(|c| c.coeffs().to_vec())
            .collect();
        Self::new(method, dist, probs)
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn m_max(&self) -> usize {
        self.probs[0].len() - 1
    }

    pub fn prob(&self, n: usize, m: usize) -> f64 {
        self.probs[n][m]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.probs[n]
    }

    pub fn is_complete(&self, n: usize) -> bool {
        self.complete_rows.get(n).copied().unwrap_or(false)
    }

    /// Length of the leading run of complete rows.
    pub fn complete_prefix(&self) -> usize {
        self.complete_rows.iter().take_while(|c| **c).count()
    }

    /// `E(z^{M_n})` from row `n`.
    pub fn row_pgf(&self, n: usize, z: Complex64) -> Complex64 {
        self.probs[n]
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &p| acc * z + p)
    }
}

/// DP table plus the mass that left `[0, m_max]` by each row.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable {
    pub table: DistributionTable,
    pub overflow: Vec<f64>,
}

/// Exact forward recursion for the law of `M_n`.
///
/// Mass pushed above `m_max` goes to an overflow accumulator and is never
/// redistributed, so `row sum + overflow = 1` holds for every row.
pub fn lindley_dp(dist: &IncrementDistribution, n_max: usize, m_max: usize) -> DpTable {
    let s = dist.s();
    let pmf = dist.pmf();
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut overflow = Vec::with_capacity(n_max + 1);
    let mut cur = vec![0.0; m_max + 1];
    cur[0] = 1.0;
    let mut lost = 0.0;
    rows.push(cur.clone());
    overflow.push(lost);
    for _ in 0..n_max {
        let mut next = vec![0.0; m_max + 1];
        for (m, &pm) in cur.iter().enumerate() {
            if pm == 0.0 {
                continue;
            }
            for (j, &pj) in pmf.iter().enumerate() {
                let target = m + j;
                if target <= s {
                    next[0] += pm * pj;
                } else if target - s <= m_max {
                    next[target - s] += pm * pj;
                } else {
                    lost += pm * pj;
                }
            }
        }
        cur = next;
        rows.push(cur.clone());
        overflow.push(lost);
    }
    DpTable {
        table: DistributionTable::new(Method::Dp, dist, rows),
        overflow,
    }
}

/// `F_r(u)` coefficients: `P(M_n + A_{n+1} = r)` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySeries {
    pub r: usize,
    pub coeffs: Vec<f64>,
}

impl BoundarySeries {
    pub fn eval(&self, u: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }
}

/// `P(M_n + A = r)` from row `n` (needs `r <= m_max`).
fn boundary_prob(dist: &IncrementDistribution, row: &[f64], r: usize) -> f64 {
    (0..=r)
        .map(|m| row.get(m).copied().unwrap_or(0.0) * dist.pmf().get(r - m).copied().unwrap_or(0.0))
        .sum()
}

/// The `s` boundary series built from the complete prefix of `table`.
pub fn boundary_series(
    dist: &IncrementDistribution,
    table: &DistributionTable,
) -> Vec<BoundarySeries> {
    let rows = table.complete_prefix();
    (0..dist.s())
        .map(|r| BoundarySeries {
            r,
            coeffs: (0..rows)
                .map(|n| boundary_prob(dist, table.row(n), r))
                .collect(),
        })
        .collect()
}

/// `|E(z^{M_{n+1}}) - [E(z^{M_n}) A(z) z^{-s} + sum_r P(M_n + A = r)(1 - z^{r-s})]|`.
pub fn functional_equation_check(
    dist: &IncrementDistribution,
    table: &DistributionTable,
    n: usize,
    z: Complex64,
) -> Result<f64> {
    for row in [n, n + 1] {
        if !table.is_complete(row) {
            return Err(Error::IncompleteRow(row));
        }
    }
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Precondition("z must be nonzero".into()));
    }
    let s = dist.s() as i32;
    let lhs = table.row_pgf(n + 1, z);
    let mut rhs = table.row_pgf(n, z) * dist.pgf(z) * z.powi(-s);
    for r in 0..dist.s() {
        let p = boundary_prob(dist, table.row(n), r);
        rhs += p * (1.0 - z.powi(r as i32 - s));
    }
    Ok((lhs - rhs).norm())
}

/// Rows needed so the truncated boundary series are within `tol / 10` of
/// the full ones: smallest `n` with `u^{n+1} / (1 - u) <= tol / 10`.
pub fn required_rows(u: f64, tol: f64) -> usize {
    let target = tol / 10.0 * (1.0 - u);
    let mut n = 0usize;
    let mut power = u;
    while power > target {
        power *= u;
        n += 1;
    }
    n
}

/// `N(u, z) = z^s + u sum_r (z^s - z^r) F_r(u)` with truncated `F_r`.
pub fn numerator_eval(
    dist: &IncrementDistribution,
    u: Complex64,
    z: Complex64,
    series: &[BoundarySeries],
) -> Complex64 {
    let s = dist.s() as u32;
    let zs = z.powu(s);
    let mut value = zs;
    for fr in series {
        value += u * (zs - z.powu(fr.r as u32)) * fr.eval(u);
    }
    value
}

/// Checks that the numerator vanishes at every kernel root, that
/// `N(u, 1) = 1`, and that `N(u, z) = prod_k (z - z_k)/(1 - z_k)` on a grid
/// of `z`. Returns the largest deviation.
pub fn numerator_check(
    dist: &IncrementDistribution,
    u: f64,
    roots: &RootSet,
    table: &DistributionTable,
    tol: f64,
) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Precondition(format!("u = {u} must lie in (0, 1)")));
    }
    let uc = Complex64::new(u, 0.0);
    if roots.u() != uc {
        return Err(Error::Precondition("root set belongs to another u".into()));
    }
    let need = required_rows(u, tol);
    let have = table.complete_prefix();
    if have < need + 1 {
        return Err(Error::InsufficientRows {
            have,
            need: need + 1,
        });
    }
    let series = boundary_series(dist, table);
    let mut worst = 0.0f64;
    for &zk in roots.roots() {
        worst = worst.max(numerator_eval(dist, uc, zk, &series).norm());
    }
    let one = Complex64::new(1.0, 0.0);
    worst = worst.max((numerator_eval(dist, uc, one, &series) - 1.0).norm());
    for i in 0..=8 {
        let z = Complex64::from_polar(0.25 + 0.75 * i as f64 / 8.0, 0.7 * i as f64);
        let product: Complex64 = roots
            .roots()
            .iter()
            .map(|&zk| (z - zk) / (1.0 - zk))
            .product();
        worst = worst.max((numerator_eval(dist, uc, z, &series) - product).norm());
    }
    Ok(worst)
}

/// DP table deep enough for [`numerator_check`] at `(u, tol)`.
pub fn numerator_table(dist: &IncrementDistribution, u: f64, tol: f64) -> DistributionTable {
    let n = required_rows(u, tol) + 1;
    lindley_dp(dist, n, (n * dist.upward_reach()).max(dist.s())).table
}
