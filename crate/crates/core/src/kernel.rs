//! Roots of the kernel `k(w) = w^s - u A(w)` inside the unit disk and the
//! product representation of the transform `F(u, z)` built from them.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::dist::IncrementDistribution;
use crate::error::{Error, Result};
use crate::roots::polynomial_roots;

/// Roots closer than this are reported as one multiplicity cluster.
pub const CLUSTER_TOLERANCE: f64 = 1e-7;
/// A root is inside the disk when `|z| < 1 - IN_DISK_MARGIN`.
pub const IN_DISK_MARGIN: f64 = 1e-12;
const POLISH_MAX_ITER: usize = 50;

/// The `s` in-disk roots `z_k(u)` of the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    u: Complex64,
    roots: Vec<Complex64>,
    residuals: Vec<f64>,
    clusters: Vec<Vec<usize>>,
    max_modulus: f64,
    zero_multiplicity: usize,
    all_roots: Vec<Complex64>,
}

impl RootSet {
    pub fn u(&self) -> Complex64 {
        self.u
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// `|z_k^s - u A(z_k)|` per root.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Partition of root indices into groups closer than [`CLUSTER_TOLERANCE`].
    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn max_modulus(&self) -> f64 {
        self.max_modulus
    }

    /// Number of roots at exactly `z = 0`, present when `P(A = 0) = 0` or `u = 0`.
    pub fn zero_multiplicity(&self) -> usize {
        self.zero_multiplicity
    }

    /// Every root of the kernel polynomial, inside and outside the disk.
    pub fn all_roots(&self) -> &[Complex64] {
        &self.all_roots
    }
}

/// `w^s - u A(w)`.
pub fn kernel_eval(dist: &IncrementDistribution, u: Complex64, w: Complex64) -> Complex64 {
    w.powu(dist.s() as u32) - u * dist.pgf(w)
}

/// `s w^{s-1} - u A'(w)`.
pub fn kernel_derivative(dist: &IncrementDistribution, u: Complex64, w: Complex64) -> Complex64 {
    let s = dist.s();
    w.powu(s as u32 - 1) * s as f64 - u * dist.pgf_derivative(w)
}

/// Ascending coefficients of the kernel polynomial with exact zero roots
/// removed, and the number removed.
fn deflated_kernel(dist: &IncrementDistribution, u: Complex64) -> (Vec<Complex64>, usize) {
    let s = dist.s();
    let degree = s.max(dist.max_jump());
    let mut c = vec![Complex64::new(0.0, 0.0); degree + 1];
    for (j, &p) in dist.pmf().iter().enumerate() {
        c[j] = -u * p;
    }
    c[s] += 1.0;
    while c.len() > 1 && c[c.len() - 1] == Complex64::new(0.0, 0.0) {
        c.pop();
    }
    let zeros = c
        .iter()
        .take_while(|x| **x == Complex64::new(0.0, 0.0))
        .count();
    (c.split_off(zeros), zeros)
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn polish(dist: &IncrementDistribution, u: Complex64, mut z: Complex64) -> (Complex64, f64) {
    let mut residual = kernel_eval(dist, u, z).norm();
    for _ in 0..POLISH_MAX_ITER {
        // polish to roundoff; the guard below stops once Newton stalls
        if residual == 0.0 {
            break;
        }
        let dk = kernel_derivative(dist, u, z);
        if dk == Complex64::new(0.0, 0.0) {
            break;
        }
        let next = z - kernel_eval(dist, u, z) / dk;
        let next_residual = kernel_eval(dist, u, next).norm();
        if !(next_residual < residual) {
            break;
        }
        z = next;
        residual = next_residual;
    }
    (z, residual)
}

fn cluster(roots: &[Complex64]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..roots.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if (roots[i] - roots[j]).norm() < CLUSTER_TOLERANCE {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..roots.len() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| find(&mut parent, g[0]) == r) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Finds the `s` roots of `z^s - u A(z)` in the open unit disk.
pub fn find_kernel_roots(dist: &IncrementDistribution, u: Complex64) -> Result<RootSet> {
    if !(u.norm() < 1.0) {
        return Err(Error::UOutOfRange(u.norm()));
    }
    let s = dist.s();
    let (deflated, zero_multiplicity) = deflated_kernel(dist, u);
    let mut all_roots = vec![Complex64::new(0.0, 0.0); zero_multiplicity];
    for z in polynomial_roots(&deflated)? {
        all_roots.push(polish(dist, u, z).0);
    }

    let mut roots = Vec::with_capacity(s);
    let mut residuals = Vec::with_capacity(s);
    for &z in &all_roots {
        if z.norm() < 1.0 - IN_DISK_MARGIN {
            roots.push(z);
            residuals.push(kernel_eval(dist, u, z).norm());
        }
    }
    if roots.len() != s {
        return Err(Error::RootCount {
            expected: s,
            found: roots.len(),
            roots: all_roots.iter().map(|z| (*z, z.norm())).collect(),
        });
    }
    let max_modulus = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let clusters = cluster(&roots);
    Ok(RootSet {
        u,
        roots,
        residuals,
        clusters,
        max_modulus,
        zero_multiplicity,
        all_roots,
    })
}

/// `F(u, z) = prod_k (z - z_k)/(1 - z_k) / (z^s - u A(z))`.
///
/// Roots at exactly zero are cancelled against the matching power of `z`
/// in the kernel, so `z = 0` is admissible when `P(A = 0) = 0`.
pub fn product_eval(
    dist: &IncrementDistribution,
    u: Complex64,
    z: Complex64,
    roots: &RootSet,
) -> Result<Complex64> {
    if roots.u != u {
        return Err(Error::Precondition(format!(
            "root set was computed for u = {}, not {u}",
            roots.u
        )));
    }
    let (deflated, zeros) = deflated_kernel(dist, u);
    debug_assert_eq!(zeros, roots.zero_multiplicity);
    let kernel = horner(&deflated, z);
    let scale: f64 = deflated
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * z.norm() + c.norm());
    if kernel.norm() < 1e-12 * scale {
        return Err(Error::AtKernelRoot(z));
    }
    let mut value = Complex64::new(1.0, 0.0) / kernel;
    for &zk in roots
        .roots
        .iter()
        .filter(|r| **r != Complex64::new(0.0, 0.0))
    {
        value *= (z - zk) / (1.0 - zk);
    }
    Ok(value)
}

/// Both sides of the logarithmic-residue identity
/// `sum_k ln((z - z_k)/(1 - z_k)) = (1/2 pi i) oint_{|w|=a} ln((z - w)/(1 - w)) k'(w)/k(w) dw`,
/// the right side by the trapezoidal rule on `nodes` equally spaced points.
pub fn root_logresidue_check(
    dist: &IncrementDistribution,
    u: f64,
    z: f64,
    inner_radius: f64,
    nodes: usize,
) -> Result<(Complex64, Complex64)> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Precondition(format!("u = {u} must lie in (0, 1)")));
    }
    if nodes == 0 {
        return Err(Error::Precondition("nodes must be positive".into()));
    }
    let uc = Complex64::new(u, 0.0);
    let roots = find_kernel_roots(dist, uc)?;
    let a = inner_radius;
    if !(roots.max_modulus() < a && a < z && z < 1.0) {
        return Err(Error::RadiusOrdering(format!(
            "need max|z_k| = {} < a = {a} < z = {z} < 1",
            roots.max_modulus()
        )));
    }
    let zc = Complex64::new(z, 0.0);
    let lhs: Complex64 = roots
        .roots()
        .iter()
        .map(|&zk| ((zc - zk) / (1.0 - zk)).ln())
        .sum();

    let mut rhs = Complex64::new(0.0, 0.0);
    let mut min_kernel = f64::INFINITY;
    for j in 0..nodes {
        let w = Complex64::from_polar(a, TAU * j as f64 / nodes as f64);
        let k = kernel_eval(dist, uc, w);
        min_kernel = min_kernel.min(k.norm());
        rhs += ((zc - w) / (1.0 - w)).ln() * kernel_derivative(dist, uc, w) / k * w;
    }
    if min_kernel < 1e-12 {
        return Err(Error::KernelVanishesOnContour(min_kernel));
    }
    Ok((lhs, rhs / nodes as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_family, DistSpec, Family};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn simple_walk() -> IncrementDistribution {
        IncrementDistribution::explicit(&[0.5, 0.0, 0.5], 1).unwrap()
    }

    #[test]
    fn degenerate_kernel_has_zero_roots() {
        let d = IncrementDistribution::deterministic(3, 3).unwrap();
        let r = find_kernel_roots(&d, Complex64::new(0.4, 0.2)).unwrap();
        assert_eq!(r.roots(), &[c(0.0); 3]);
        assert_eq!(r.zero_multiplicity(), 3);
        assert_eq!(r.clusters(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn pure_downward_roots() {
        let d = IncrementDistribution::deterministic(0, 2).unwrap();
        let r = find_kernel_roots(&d, c(0.25)).unwrap();
        let mut re: Vec<f64> = r.roots().iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 0.5).abs() < 1e-15 && (re[1] - 0.5).abs() < 1e-15);
        assert!(r.roots().iter().all(|z| z.im.abs() < 1e-15));
    }

    #[test]
    fn simple_walk_root() {
        let r = find_kernel_roots(&simple_walk(), c(0.5)).unwrap();
        assert_eq!(r.roots().len(), 1);
        assert!((r.roots()[0] - c(2.0 - 3f64.sqrt())).norm() < 1e-15);
        assert!(r.max_residual() <= 1e-15);
        assert_eq!(r.all_roots().len(), 2);
    }

    #[test]
    fn u_zero_and_out_of_range() {
        let d = make_family(&DistSpec::new(Family::Binomial { trials: 4, p: 0.5 }, 2)).unwrap();
        let r = find_kernel_roots(&d, c(0.0)).unwrap();
        assert_eq!(r.zero_multiplicity(), 2);
        assert!(matches!(
            find_kernel_roots(&d, c(1.0)),
            Err(Error::UOutOfRange(_))
        ));
    }

    #[test]
    fn product_examples() {
        let sw = simple_walk();
        let u = c(0.5);
        let r = find_kernel_roots(&sw, u).unwrap();
        let at_one = product_eval(&sw, u, c(1.0), &r).unwrap();
        assert!((at_one - 2.0).norm() < 1e-15);

        let zero = IncrementDistribution::deterministic(2, 2).unwrap();
        let u = Complex64::new(0.3, -0.2);
        let r = find_kernel_roots(&zero, u).unwrap();
        for z in [c(0.0), c(0.5), Complex64::new(-0.3, 0.9)] {
            let v = product_eval(&zero, u, z, &r).unwrap();
            assert!((v - 1.0 / (1.0 - u)).norm() < 1e-15);
        }
    }

    #[test]
    fn product_rejects_kernel_root() {
        let d = IncrementDistribution::deterministic(0, 1).unwrap();
        let u = c(0.25);
        let r = find_kernel_roots(&d, u).unwrap();
        assert!(matches!(
            product_eval(&d, u, c(0.25), &r),
            Err(Error::AtKernelRoot(_))
        ));
        let other = find_kernel_roots(&d, c(0.3)).unwrap();
        assert!(product_eval(&d, u, c(0.5), &other).is_err());
    }

    #[test]
    fn logresidue_examples() {
        let d = IncrementDistribution::deterministic(0, 1).unwrap();
        let (lhs, rhs) = root_logresidue_check(&d, 0.25, 0.5, 0.35, 256).unwrap();
        assert!((lhs - c((1.0f64 / 3.0).ln())).norm() < 1e-15);
        assert!((lhs - rhs).norm() < 1e-12);

        let d = IncrementDistribution::deterministic(2, 2).unwrap();
        let (lhs, rhs) = root_logresidue_check(&d, 0.6, 0.7, 0.3, 64).unwrap();
        assert!((lhs - c(2.0 * 0.7f64.ln())).norm() < 1e-15);
        assert!((lhs - rhs).norm() < 1e-13);

        let (lhs, rhs) = root_logresidue_check(&simple_walk(), 0.5, 0.6, 0.4, 512).unwrap();
        let z0 = 2.0 - 3f64.sqrt();
        assert!((lhs - c(((0.6 - z0) / (1.0 - z0)).ln())).norm() < 1e-14);
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn logresidue_rejects_bad_radii() {
        let sw = simple_walk();
        assert!(matches!(
            root_logresidue_check(&sw, 0.5, 0.6, 0.2, 64),
            Err(Error::RadiusOrdering(_))
        ));
        assert!(matches!(
            root_logresidue_check(&sw, 0.5, 0.3, 0.4, 64),
            Err(Error::RadiusOrdering(_))
        ));
    }

    #[test]
    fn newton_polish_never_increases_residual() {
        let d = make_family(&DistSpec::new(Family::PoissonTruncated { lambda: 1.2 }, 2)).unwrap();
        let u = Complex64::new(0.3, 0.4);
        let (deflated, _) = deflated_kernel(&d, u);
        for z in polynomial_roots(&deflated).unwrap() {
            let before = kernel_eval(&d, u, z).norm();
            let (_, after) = polish(&d, u, z);
            assert!(after <= before);
        }
    }
}
