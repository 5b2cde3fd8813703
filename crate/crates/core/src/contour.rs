//! Trapezoidal quadrature on circles: the Pollaczek integral for `F(u, z)`,
//! Cauchy coefficient extraction and the walk-law coefficient identity.
//!
//! Every integrand here is analytic in an annulus around its contour, so the
//! equal-angle trapezoidal rule converges geometrically. Node counts double
//! until two successive estimates agree.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::dist::{walk_pmf, IncrementDistribution};
use crate::error::{Error, Result};

/// Largest outer radius considered by [`choose_outer_radius`].
pub const OUTER_RADIUS_CAP: f64 = 4.0;
/// Required safety: `v A(b) / b^s <= 1 - MIN_MARGIN`.
pub const MIN_MARGIN: f64 = 1e-3;
const RADIUS_GRID: usize = 400;

/// Equal-angle trapezoidal rule on `|w| = radius` with node doubling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleQuadrature {
    radius: f64,
    nodes: usize,
    max_doublings: u32,
    tol: f64,
}

impl CircleQuadrature {
    pub fn new(radius: f64, nodes: usize, max_doublings: u32, tol: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Precondition(format!(
                "radius {radius} must be positive"
            )));
        }
        if nodes < 16 || !nodes.is_power_of_two() {
            return Err(Error::Precondition(format!(
                "node count {nodes} must be a power of two >= 16"
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::Precondition(format!(
                "tolerance {tol} must be positive"
            )));
        }
        Ok(Self {
            radius,
            nodes,
            max_doublings,
            tol,
        })
    }

    /// 16 starting nodes, up to 12 doublings, tolerance `1e-13`.
    pub fn standard(radius: f64) -> Self {
        Self::new(radius, 16, 12, 1e-13).expect("valid standard quadrature")
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn max_doublings(&self) -> u32 {
        self.max_doublings
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        Self::new(radius, self.nodes, self.max_doublings, self.tol).map(|q| {
            self = q;
            self
        })
    }

    /// `k`-th of `n` equally spaced points on the circle.
    pub fn node(&self, k: usize, n: usize) -> Complex64 {
        Complex64::from_polar(self.radius, TAU * k as f64 / n as f64)
    }
}

/// Estimate plus the mean magnitude of its summands (the roundoff scale).
type Estimate = (Complex64, f64);

/// Doubles the node count until successive estimates agree to `tol` or to
/// the roundoff level of the sum. Returns the estimate and node count used.
fn refine<F>(quad: &CircleQuadrature, mut estimate: F) -> Result<(Complex64, usize)>
where
    F: FnMut(usize) -> Result<Estimate>,
{
    let mut n = quad.nodes;
    let (mut prev, _) = estimate(n)?;
    for _ in 0..quad.max_doublings {
        n *= 2;
        let (cur, scale) = estimate(n)?;
        let floor = 64.0 * f64::EPSILON * scale;
        if (cur - prev).norm() <= quad.tol.max(floor) {
            return Ok((cur, n));
        }
        prev = cur;
    }
    let (last, _) = estimate(n)?;
    Err(Error::NoConvergence {
        doublings: quad.max_doublings,
        previous: prev,
        last,
    })
}

/// `(1 / 2 pi i) oint f(w) w^{-n-1} dw` on `|w| = quad.radius()`.
///
/// Starts with more than `n` nodes: with `N <= n` the lower coefficients
/// `c_{n - N}, c_{n - 2N}, ...` alias onto index `n`, and two aliased
/// estimates can agree and pass for converged.
pub fn cauchy_coeff<F>(mut f: F, n: usize, quad: &CircleQuadrature) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let quad = &CircleQuadrature {
        nodes: quad.nodes.max((n + 1).next_power_of_two()),
        ..*quad
    };
    refine(quad, |nodes| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for j in 0..nodes {
            let w = quad.node(j, nodes);
            // w^{-n} via the exact angle index to avoid drift
            let angle = -TAU * ((j * n) % nodes) as f64 / nodes as f64;
            let term = f(w)? * Complex64::from_polar(quad.radius.powi(-(n as i32)), angle);
            mag += term.norm();
            acc += term;
        }
        Ok((acc / nodes as f64, mag / nodes as f64))
    })
    .map(|(v, _)| v)
}

/// Coefficients `c_0..c_{count-1}` from samples `f(r e^{2 pi i j / N})`,
/// `j = 0..N-1`, by one discrete Fourier transform. Indices `>= N` wrap.
pub fn circle_coefficients(samples: &[Complex64], radius: f64, count: usize) -> Vec<Complex64> {
    if samples.is_empty() {
        return vec![Complex64::new(0.0, 0.0); count];
    }
    let fft = FftPlanner::new().plan_fft_forward(samples.len());
    fft_coefficients(fft.as_ref(), samples.to_vec(), radius, count)
}

fn fft_coefficients(
    fft: &dyn Fft<f64>,
    mut buffer: Vec<Complex64>,
    radius: f64,
    count: usize,
) -> Vec<Complex64> {
    let nodes = buffer.len();
    fft.process(&mut buffer);
    let mut scale = 1.0 / nodes as f64;
    (0..count)
        .map(|n| {
            let c = buffer[n % nodes] * scale;
            scale /= radius;
            c
        })
        .collect()
}

/// Outer contour radius valid for every `|u| <= v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusCertificate {
    b: f64,
    v: f64,
    ratio: f64,
}

impl RadiusCertificate {
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// `max_{|w| = b} |v A(w) / w^s| = v A(b) / b^s`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// `1 - ratio`.
    pub fn margin(&self) -> f64 {
        1.0 - self.ratio
    }
}

fn radius_ratio(dist: &IncrementDistribution, v: f64, b: f64) -> f64 {
    v * dist.pgf_real(b) / b.powi(dist.s() as i32)
}

/// Picks `b > 1` with `v A(b) / b^s <= 1 - 1e-3`.
///
/// `b -> A(b)/b^s` is log-convex in `log b` and equals one at `b = 1`, so the
/// admissible radii form an interval `(1, b_hi]`. The scan finds `b_hi` on a
/// geometric grid below `min(R, 4)` and returns the geometric midpoint
/// `sqrt(b_hi)`, which keeps the contour away from both the pole at `w = 1`
/// and the outer kernel zeros.
pub fn choose_outer_radius(dist: &IncrementDistribution, v: f64) -> Result<RadiusCertificate> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Precondition(format!("v = {v} must lie in (0, 1)")));
    }
    let upper = dist.analyticity_radius().value().min(OUTER_RADIUS_CAP);
    let limit = 1.0 - MIN_MARGIN;
    let log_upper = upper.ln();
    let mut b_hi = None;
    let mut best = (f64::INFINITY, f64::NAN);
    for i in 1..RADIUS_GRID {
        let b = (log_upper * i as f64 / RADIUS_GRID as f64).exp();
        let ratio = radius_ratio(dist, v, b);
        if ratio < best.0 {
            best = (ratio, b);
        }
        if ratio <= limit {
            b_hi = Some(b);
        } else {
            break;
        }
    }
    let b_hi = b_hi.ok_or(Error::NoAdmissibleRadius {
        v,
        best_ratio: best.0,
        best_b: best.1,
    })?;
    let b = b_hi.sqrt();
    let ratio = radius_ratio(dist, v, b);
    if ratio > limit {
        return Err(Error::NoAdmissibleRadius {
            v,
            best_ratio: ratio,
            best_b: b,
        });
    }
    Ok(RadiusCertificate { b, v, ratio })
}

/// `ln(1 - u w^{-s} A(w))` on the principal branch, with the argument
/// required to stay in the right half-plane.
fn pollaczek_log(dist: &IncrementDistribution, u: Complex64, w: Complex64) -> Result<Complex64> {
    let arg = 1.0 - u * dist.pgf(w) / w.powu(dist.s() as u32);
    if !(arg.re > 0.0) {
        return Err(Error::BranchViolation(arg));
    }
    Ok(arg.ln())
}

/// Samples of `ln(1 - u w^{-s} A(w))` on one node set of `|w| = b`.
struct PollaczekNodes {
    ws: Vec<Complex64>,
    logs: Vec<Complex64>,
}

impl PollaczekNodes {
    fn at_angles(
        dist: &IncrementDistribution,
        u: Complex64,
        b: f64,
        angles: impl Iterator<Item = f64>,
    ) -> Result<Self> {
        let ws: Vec<Complex64> = angles.map(|t| Complex64::from_polar(b, t)).collect();
        let logs = ws
            .iter()
            .map(|&w| pollaczek_log(dist, u, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ws, logs })
    }

    /// `nodes` equally spaced points starting at angle zero.
    fn new(dist: &IncrementDistribution, u: Complex64, b: f64, nodes: usize) -> Result<Self> {
        let step = TAU / nodes as f64;
        Self::at_angles(dist, u, b, (0..nodes).map(|j| step * j as f64))
    }

    /// The `nodes` midpoints between the points of [`PollaczekNodes::new`].
    fn interleaved(
        dist: &IncrementDistribution,
        u: Complex64,
        b: f64,
        nodes: usize,
    ) -> Result<Self> {
        let step = TAU / nodes as f64;
        Self::at_angles(dist, u, b, (0..nodes).map(|j| step * (j as f64 + 0.5)))
    }

    /// Unnormalized sum of the integrand terms at `z`, and of their moduli.
    fn sums(&self, z: Complex64) -> Estimate {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for (&w, &l) in self.ws.iter().zip(&self.logs) {
            let term = (1.0 - z) * w / ((w - 1.0) * (w - z)) * l;
            mag += term.norm();
            acc += term;
        }
        (acc, mag)
    }
}

fn check_pollaczek_args(u: Complex64, z: Complex64, cert: &RadiusCertificate) -> Result<()> {
    if u.norm() > cert.v * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "|u| = {} exceeds the certified cap v = {}",
            u.norm(),
            cert.v
        )));
    }
    if z.norm() > cert.b - 1e-6 {
        return Err(Error::Precondition(format!(
            "|z| = {} must be at most b - 1e-6 = {}",
            z.norm(),
            cert.b - 1e-6
        )));
    }
    Ok(())
}

/// One trapezoidal evaluation of the Pollaczek integral with a fixed node
/// count and no refinement.
pub fn pollaczek_fixed(
    dist: &IncrementDistribution,
    u: Complex64,
    z: Complex64,
    cert: &RadiusCertificate,
    nodes: usize,
) -> Result<Complex64> {
    check_pollaczek_args(u, z, cert)?;
    if z == Complex64::new(1.0, 0.0) {
        return Ok(1.0 / (1.0 - u));
    }
    let (sum, _) = PollaczekNodes::new(dist, u, cert.b, nodes)?.sums(z);
    Ok((sum / nodes as f64).exp() / (1.0 - u))
}

/// `F(u, z) = exp((1/2 pi i) oint_{|w|=b} (1-z)/((w-1)(w-z)) ln(1 - u w^{-s} A(w)) dw) / (1 - u)`.
///
/// The kernel `(1-z)/((w-1)(w-z))` is `-d/dw ln((z-w)/(1-w))`; expanding it
/// as `sum_k (1 - z^k) w^{-k-1}` recovers the positive-part series term by term.
///
/// The radius of `quad` is replaced by the certified `b`.
pub fn pollaczek_eval(
    dist: &IncrementDistribution,
    u: Complex64,
    z: Complex64,
    cert: &RadiusCertificate,
    quad: &CircleQuadrature,
) -> Result<Complex64> {
    Ok(pollaczek_eval_many(dist, u, &[z], cert, quad)?[0])
}

/// [`pollaczek_eval`] at many `z` sharing the log samples of one `u`.
/// Nodes double until every point has converged.
pub fn pollaczek_eval_many(
    dist: &IncrementDistribution,
    u: Complex64,
    zs: &[Complex64],
    cert: &RadiusCertificate,
    quad: &CircleQuadrature,
) -> Result<Vec<Complex64>> {
    for &z in zs {
        check_pollaczek_args(u, z, cert)?;
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = (Complex64::new(0.0, 0.0), 0.0);
    // running trapezoid sums; each doubling only adds the interleaved nodes
    let accumulate = |samples: PollaczekNodes, sums: &mut [Estimate]| {
        for (acc, &z) in sums.iter_mut().zip(zs) {
            if z != one {
                let (s, m) = samples.sums(z);
                acc.0 += s;
                acc.1 += m;
            }
        }
    };
    let mut nodes = quad.nodes;
    let mut sums = vec![zero; zs.len()];
    accumulate(PollaczekNodes::new(dist, u, cert.b, nodes)?, &mut sums);
    let mut prev: Vec<Complex64> = sums.iter().map(|s| s.0 / nodes as f64).collect();
    for _ in 0..quad.max_doublings {
        accumulate(
            PollaczekNodes::interleaved(dist, u, cert.b, nodes)?,
            &mut sums,
        );
        nodes *= 2;
        let mut worst: Option<(usize, f64)> = None;
        for (i, (sum, p)) in sums.iter().zip(&prev).enumerate() {
            let cur = sum.0 / nodes as f64;
            let floor = 64.0 * f64::EPSILON * sum.1 / nodes as f64;
            let excess = (cur - p).norm() / quad.tol.max(floor);
            if excess > 1.0 && worst.is_none_or(|w| excess > w.1) {
                worst = Some((i, excess));
            }
        }
        let cur: Vec<Complex64> = sums.iter().map(|s| s.0 / nodes as f64).collect();
        match worst {
            None => {
                let scale = 1.0 / (1.0 - u);
                return Ok(cur.iter().map(|e| e.exp() * scale).collect());
            }
            Some((i, _)) if nodes >= quad.nodes << quad.max_doublings => {
                return Err(Error::NoConvergence {
                    doublings: quad.max_doublings,
                    previous: prev[i],
                    last: cur[i],
                });
            }
            Some(_) => prev = cur,
        }
    }
    Err(Error::NoConvergence {
        doublings: quad.max_doublings,
        previous: prev[0],
        last: prev[0],
    })
}

/// Contour-integral and convolution values of `P(S_l = k)`:
/// `(1/2 pi i) oint_{|w|=b} A^l(w) / w^{k+sl+1} dw`.
pub fn verify_coeff_identity(
    dist: &IncrementDistribution,
    l: usize,
    k: usize,
    cert: &RadiusCertificate,
    quad: &CircleQuadrature,
) -> Result<(Complex64, f64)> {
    if l == 0 || k == 0 {
        return Err(Error::Precondition("l and k must be positive".into()));
    }
    let contour = quad.with_radius(cert.b)?;
    let integral = cauchy_coeff(
        |w| Ok(dist.pgf(w).powu(l as u32)),
        k + dist.s() * l,
        &contour,
    )?;
    let pmf = walk_pmf(dist, l)?.prob(k as i64);
    Ok((integral, pmf))
}

/// Settings for recovering `P(M_n = m)` from samples of `F(u, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionGrid {
    pub n_max: usize,
    pub m_max: usize,
    /// Bound on the `z`-degree of every `u^n` coefficient with `n <= n_max`,
    /// i.e. `n_max (J - s)^+`. With more `z` nodes than this the `z`
    /// extraction has no aliasing, so only the `u` nodes are refined.
    pub z_degree: usize,
    /// Radius of the `u` circle.
    pub u_radius: f64,
    /// Radius of the `z` circle.
    pub z_radius: f64,
    pub max_doublings: u32,
    /// Successive-table agreement required to stop doubling.
    pub tol: f64,
}

/// A recovered table together with the node counts that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    /// `probs[n][m]`, real parts of the recovered coefficients.
    pub probs: Vec<Vec<f64>>,
    pub u_nodes: usize,
    pub z_nodes: usize,
    /// Largest imaginary part discarded.
    pub max_imag: f64,
}

/// Table from one `u` circle of `u_nodes` points and one `z` circle, plus
/// the largest sampled `|F|`.
fn invert_once<F>(
    sample: &mut F,
    grid: &InversionGrid,
    zs: &[Complex64],
    u_nodes: usize,
) -> Result<(Vec<Vec<Complex64>>, f64)>
where
    F: FnMut(Complex64, &[Complex64]) -> Result<Vec<Complex64>>,
{
    let mut planner = FftPlanner::new();
    let z_fft = planner.plan_fft_forward(zs.len());
    let u_fft = planner.plan_fft_forward(u_nodes);
    let mut peak = 0.0f64;
    // z_coeffs[j][m]: coefficient of z^m at the j-th u node
    let mut z_coeffs = Vec::with_capacity(u_nodes);
    for j in 0..u_nodes {
        let u = Complex64::from_polar(grid.u_radius, TAU * j as f64 / u_nodes as f64);
        let values = sample(u, zs)?;
        if values.len() != zs.len() {
            return Err(Error::Precondition(format!(
                "sampler returned {} values for {} points",
                values.len(),
                zs.len()
            )));
        }
        peak = values.iter().fold(peak, |m, v| m.max(v.norm()));
        z_coeffs.push(fft_coefficients(
            z_fft.as_ref(),
            values,
            grid.z_radius,
            grid.m_max + 1,
        ));
    }
    let mut table = vec![vec![Complex64::new(0.0, 0.0); grid.m_max + 1]; grid.n_max + 1];
    for m in 0..=grid.m_max {
        let column = z_coeffs.iter().map(|row| row[m]).collect();
        let coeffs = fft_coefficients(u_fft.as_ref(), column, grid.u_radius, grid.n_max + 1);
        for (row, value) in table.iter_mut().zip(coeffs) {
            row[m] = value;
        }
    }
    Ok((table, peak))
}

/// Recovers `P(M_n = m)` for `n <= n_max`, `m <= m_max` from a bivariate
/// transform by Cauchy extraction on a circle in `u` and one in `z`.
///
/// `sample(u, zs)` returns `F(u, z)` at every `z` in `zs`, so per-`u` work
/// (root finding, log samples) is shared. The `z` circle gets the next
/// power of two above `max(z_degree, m_max)`; the `u` circle starts at the
/// next power of two above `2 (n_max + 1)` and doubles until two successive tables
/// agree to `tol`, or to the roundoff level `eps * max|F| * u_radius^{-n}`
/// of row `n`.
pub fn invert_transform<F>(mut sample: F, grid: &InversionGrid) -> Result<Inversion>
where
    F: FnMut(Complex64, &[Complex64]) -> Result<Vec<Complex64>>,
{
    if !(grid.u_radius > 0.0 && grid.u_radius < 1.0) {
        return Err(Error::Precondition(format!(
            "u radius {} must lie in (0, 1)",
            grid.u_radius
        )));
    }
    if !(grid.z_radius > 0.0) {
        return Err(Error::Precondition("z radius must be positive".into()));
    }
    let z_nodes = (grid.z_degree.max(grid.m_max) + 1)
        .next_power_of_two()
        .max(16);
    let zs: Vec<Complex64> = (0..z_nodes)
        .map(|k| Complex64::from_polar(grid.z_radius, TAU * k as f64 / z_nodes as f64))
        .collect();
    let mut u_nodes = (2 * (grid.n_max + 1)).next_power_of_two().max(16);
    let (mut prev, _) = invert_once(&mut sample, grid, &zs, u_nodes)?;
    let mut worst = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for _ in 0..grid.max_doublings {
        u_nodes *= 2;
        let (cur, peak) = invert_once(&mut sample, grid, &zs, u_nodes)?;
        let mut converged = true;
        let mut worst_excess = 0.0;
        for (n, (a, b)) in cur.iter().zip(&prev).enumerate() {
            let floor = 64.0 * f64::EPSILON * peak * grid.u_radius.powi(-(n as i32));
            let tol = grid.tol.max(floor);
            for (x, y) in a.iter().zip(b) {
                let excess = (x - y).norm() / tol;
                if excess > 1.0 {
                    converged = false;
                    if excess > worst_excess {
                        worst_excess = excess;
                        worst = (*y, *x);
                    }
                }
            }
        }
        if converged {
            let max_imag = cur.iter().flatten().fold(0.0f64, |m, v| m.max(v.im.abs()));
            return Ok(Inversion {
                probs: cur
                    .into_iter()
                    .map(|row| row.into_iter().map(|v| v.re).collect())
                    .collect(),
                u_nodes,
                z_nodes,
                max_imag,
            });
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        doublings: grid.max_doublings,
        previous: worst.0,
        last: worst.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_family, DistSpec, Family};
    use crate::kernel::{find_kernel_roots, product_eval};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn simple_walk() -> IncrementDistribution {
        IncrementDistribution::explicit(&[0.5, 0.0, 0.5], 1).unwrap()
    }

    #[test]
    fn quadrature_validation() {
        assert!(CircleQuadrature::new(1.0, 8, 4, 1e-12).is_err());
        assert!(CircleQuadrature::new(1.0, 24, 4, 1e-12).is_err());
        assert!(CircleQuadrature::new(0.0, 16, 4, 1e-12).is_err());
        assert!(CircleQuadrature::new(1.0, 32, 4, 1e-12).is_ok());
    }

    #[test]
    fn cauchy_examples() {
        let q = CircleQuadrature::standard(0.7);
        let v = cauchy_coeff(|_| Ok(Complex64::new(2.5, -1.0)), 0, &q).unwrap();
        assert!((v - Complex64::new(2.5, -1.0)).norm() < 1e-15);
        let q = CircleQuadrature::standard(1.0);
        let v = cauchy_coeff(|w| Ok(w * w), 2, &q).unwrap();
        assert!((v - 1.0).norm() < 1e-15);
        let v = cauchy_coeff(|w| Ok(w * w), 3, &q).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn cauchy_of_product_transform() {
        let sw = simple_walk();
        let q = CircleQuadrature::standard(0.5);
        let p = cauchy_coeff(
            |u| {
                let r = find_kernel_roots(&sw, u)?;
                product_eval(&sw, u, c(0.0), &r)
            },
            2,
            &q,
        )
        .unwrap();
        assert!((p - 0.5).norm() < 1e-12);
    }

    #[test]
    fn cauchy_exact_for_polynomials() {
        let coeffs: Vec<f64> = (0..40).map(|k| ((k * 7 + 3) % 11) as f64 - 5.0).collect();
        let f = |w: Complex64| Ok(coeffs.iter().rev().fold(c(0.0), |acc, &a| acc * w + a));
        let q = CircleQuadrature::new(1.0, 64, 0, 1e-13).unwrap();
        for (n, &a) in coeffs.iter().enumerate() {
            let v = refine_once(&f, n, &q);
            assert!((v - a).norm() <= 1e-13 * a.abs().max(1.0), "n = {n}");
        }
    }

    #[test]
    fn cauchy_high_index_does_not_alias() {
        let q = CircleQuadrature::new(1.0, 16, 4, 1e-13).unwrap();
        let v = cauchy_coeff(|_| Ok(c(1.0)), 32, &q).unwrap();
        assert!(v.norm() < 1e-14, "{v}");
    }

    fn refine_once(
        f: &dyn Fn(Complex64) -> Result<Complex64>,
        n: usize,
        q: &CircleQuadrature,
    ) -> Complex64 {
        let samples: Vec<Complex64> = (0..q.nodes())
            .map(|j| f(q.node(j, q.nodes())).unwrap())
            .collect();
        circle_coefficients(&samples, q.radius(), n + 1)[n]
    }

    #[test]
    fn outer_radius_examples() {
        let down = IncrementDistribution::deterministic(0, 1).unwrap();
        let cert = choose_outer_radius(&down, 0.5).unwrap();
        assert!(cert.b() > 1.9 && cert.b() < 2.0);
        assert!((cert.ratio() - 0.5 / cert.b()).abs() < 1e-15);

        let zero = IncrementDistribution::deterministic(2, 2).unwrap();
        let cert = choose_outer_radius(&zero, 0.99).unwrap();
        assert!((cert.ratio() - 0.99).abs() < 1e-15);
        assert!(choose_outer_radius(&zero, 0.9995).is_err());

        let cert = choose_outer_radius(&simple_walk(), 0.5).unwrap();
        assert!(cert.b() > 1.0 && cert.b() < 3.0);
        let b = cert.b();
        assert!(0.25 * (1.0 + b * b) / b < 1.0);
        assert!(b < 2.0 + 3f64.sqrt());

        let geo = make_family(&DistSpec::new(Family::GeometricTruncated { p: 0.5 }, 1)).unwrap();
        let cert = choose_outer_radius(&geo, 0.9).unwrap();
        assert!(cert.b() < 2.0 && cert.margin() >= 1e-3);
        assert!(choose_outer_radius(&geo, 1.0).is_err());
    }

    #[test]
    fn pollaczek_trivial_points() {
        let d = make_family(&DistSpec::new(Family::PoissonTruncated { lambda: 1.2 }, 2)).unwrap();
        let cert = choose_outer_radius(&d, 0.8).unwrap();
        let q = CircleQuadrature::standard(1.0);
        let v = pollaczek_eval(&d, c(0.0), c(0.3), &cert, &q).unwrap();
        assert!((v - 1.0).norm() < 1e-13);
        let u = Complex64::new(0.4, 0.3);
        let v = pollaczek_eval(&d, u, c(1.0), &cert, &q).unwrap();
        assert_eq!(v, 1.0 / (1.0 - u));
        assert!(pollaczek_eval(&d, c(0.81), c(0.3), &cert, &q).is_err());
        assert!(pollaczek_eval(&d, c(0.5), c(cert.b()), &cert, &q).is_err());
    }

    #[test]
    fn pollaczek_matches_product() {
        let sw = simple_walk();
        let u = c(0.5);
        let mut cert = choose_outer_radius(&sw, 0.5).unwrap();
        cert.b = 1.5;
        let q = CircleQuadrature::new(1.0, 16, 12, 1e-12).unwrap();
        let roots = find_kernel_roots(&sw, u).unwrap();
        let p = pollaczek_eval(&sw, u, c(0.5), &cert, &q).unwrap();
        let r = product_eval(&sw, u, c(0.5), &roots).unwrap();
        assert!((p - r).norm() < 1e-10, "{p} vs {r}");
    }

    #[test]
    fn coefficient_identity_examples() {
        let q = CircleQuadrature::standard(1.0);
        let zero = IncrementDistribution::deterministic(1, 1).unwrap();
        let cert = choose_outer_radius(&zero, 0.5).unwrap();
        let (i, p) = verify_coeff_identity(&zero, 3, 1, &cert, &q).unwrap();
        assert!(i.norm() < 1e-15 && p == 0.0);

        let sw = simple_walk();
        let cert = choose_outer_radius(&sw, 0.5).unwrap();
        let (i, p) = verify_coeff_identity(&sw, 2, 2, &cert, &q).unwrap();
        assert_eq!(p, 0.25);
        assert!((i - 0.25).norm() < 1e-14);

        let geo = make_family(&DistSpec::new(Family::GeometricTruncated { p: 0.5 }, 1)).unwrap();
        let cert = choose_outer_radius(&geo, 0.5).unwrap();
        let (i, p) = verify_coeff_identity(&geo, 1, 1, &cert, &q).unwrap();
        assert!((p - 0.125).abs() < 1e-14);
        assert!((i - p).norm() < 1e-14);
    }

    #[test]
    fn inversion_of_product_transform() {
        // P(M_2 = .) = (1/2, 1/4, 1/4) for the simple walk
        let sw = simple_walk();
        let grid = InversionGrid {
            n_max: 4,
            m_max: 4,
            z_degree: 4,
            u_radius: 0.5,
            z_radius: 1.0,
            max_doublings: 4,
            tol: 1e-12,
        };
        let inv = invert_transform(
            |u, zs| {
                let roots = find_kernel_roots(&sw, u)?;
                zs.iter()
                    .map(|&z| product_eval(&sw, u, z, &roots))
                    .collect()
            },
            &grid,
        )
        .unwrap();
        let want = [0.5, 0.25, 0.25, 0.0, 0.0];
        for (got, want) in inv.probs[2].iter().zip(want) {
            assert!((got - want).abs() < 1e-13);
        }
        assert!(inv.max_imag < 1e-13);
        assert_eq!(inv.probs[0][0].round(), 1.0);
    }

    #[test]
    fn inversion_rejects_bad_radius() {
        let grid = InversionGrid {
            n_max: 2,
            m_max: 2,
            z_degree: 2,
            u_radius: 1.0,
            z_radius: 1.0,
            max_doublings: 1,
            tol: 1e-12,
        };
        assert!(
            invert_transform(|_, zs| Ok(vec![Complex64::new(1.0, 0.0); zs.len()]), &grid).is_err()
        );
    }
}
