//! Executes the configured methods and cross-checks them.

use spitzer_core::contour::{invert_transform, InversionGrid};
use spitzer_core::kernel::find_kernel_roots;
use spitzer_core::oracle::{numerator_table, DistributionTable};
use spitzer_core::{
    choose_outer_radius, functional_equation_check, lindley_dp, numerator_check,
    pollaczek_eval_many, product_eval, root_logresidue_check, spitzer_coefficients_at,
    spitzer_series, verify_coeff_identity, CircleQuadrature, Complex64, IncrementDistribution,
    Method, RadiusCertificate,
};

use crate::config::RunConfig;
use crate::error::{method_err, RunError};
use crate::report::{AgreementReport, CheckResult, Environment, InversionInfo, PairResult, Worst};

/// Node count of the log-residue quadrature.
pub const LOGRESIDUE_NODES: usize = 512;
/// Node doublings allowed while inverting a transform.
const INVERSION_DOUBLINGS: u32 = 4;

/// Tables in method order plus the agreement report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<DistributionTable>,
    pub report: AgreementReport,
}

impl RunOutput {
    pub fn all_pass(&self) -> bool {
        self.report.all_pass()
    }
}

fn is_transform(m: Method) -> bool {
    matches!(m, Method::ProductInversion | Method::PollaczekInversion)
}

fn list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("[{}]", items.join(", "))
}

struct Context<'a> {
    config: &'a RunConfig,
    dist: IncrementDistribution,
    certificate: Option<RadiusCertificate>,
}

impl Context<'_> {
    fn certificate(&mut self) -> Result<RadiusCertificate, RunError> {
        if let Some(c) = self.certificate {
            return Ok(c);
        }
        let v = self.config.grid.v;
        let c = choose_outer_radius(&self.dist, v)
            .map_err(method_err("contour radius", format!("v = {v}")))?;
        self.certificate = Some(c);
        Ok(c)
    }

    fn inversion_grid(&self) -> InversionGrid {
        let g = &self.config.grid;
        InversionGrid {
            n_max: g.n_max,
            m_max: g.m_max,
            z_degree: g.n_max * self.dist.upward_reach(),
            u_radius: g.u_radius,
            z_radius: 1.0,
            max_doublings: INVERSION_DOUBLINGS,
            tol: self.config.tol.inversion,
        }
    }

    fn table(
        &mut self,
        method: Method,
    ) -> Result<(DistributionTable, Option<InversionInfo>), RunError> {
        let g = &self.config.grid;
        let dist = &self.dist;
        let (n_max, m_max) = (g.n_max, g.m_max);
        let sizes = format!("n_max = {n_max}, m_max = {m_max}");
        let inversion = match method {
            Method::Dp => {
                let dp = lindley_dp(dist, n_max, m_max);
                return Ok((dp.table, None));
            }
            Method::Spitzer => {
                let series = spitzer_series(dist, n_max, m_max)
                    .map_err(method_err(method.as_str(), sizes))?;
                return Ok((DistributionTable::from_series(method, dist, &series), None));
            }
            Method::ProductInversion => {
                let grid = self.inversion_grid();
                let mut failed_at = Complex64::new(0.0, 0.0);
                invert_transform(
                    |u, zs| {
                        failed_at = u;
                        let roots = find_kernel_roots(dist, u)?;
                        zs.iter()
                            .map(|&z| product_eval(dist, u, z, &roots))
                            .collect()
                    },
                    &grid,
                )
                .map_err(|e| method_err(method.as_str(), format!("{sizes}, u = {failed_at}"))(e))?
            }
            Method::PollaczekInversion => {
                let cert = self.certificate()?;
                let grid = self.inversion_grid();
                let dist = &self.dist;
                let quad = CircleQuadrature::standard(cert.b());
                let mut failed_at = Complex64::new(0.0, 0.0);
                invert_transform(
                    |u, zs| {
                        failed_at = u;
                        pollaczek_eval_many(dist, u, zs, &cert, &quad)
                    },
                    &grid,
                )
                .map_err(|e| {
                    method_err(
                        method.as_str(),
                        format!("{sizes}, u = {failed_at}, b = {}", cert.b()),
                    )(e)
                })?
            }
        };
        let info = InversionInfo {
            method,
            u_radius: g.u_radius,
            z_radius: 1.0,
            u_nodes: inversion.u_nodes,
            z_nodes: inversion.z_nodes,
            max_imag: inversion.max_imag,
        };
        Ok((
            DistributionTable::new(method, &self.dist, inversion.probs),
            Some(info),
        ))
    }

    fn functional_check(&self, dp: &DistributionTable) -> Result<Option<CheckResult>, RunError> {
        let g = &self.config.grid;
        let mut worst = Worst::default();
        let mut any = false;
        for n in (0..g.n_max).filter(|&n| dp.is_complete(n) && dp.is_complete(n + 1)) {
            for &z in &g.z_grid {
                let r =
                    functional_equation_check(&self.dist, dp, n, Complex64::new(z, 0.0)).map_err(
                        method_err("functional equation", format!("n = {n}, z = {z}")),
                    )?;
                worst.update(r, || format!("n={n}, z={z}"));
                any = true;
            }
        }
        Ok(any.then(|| {
            CheckResult::new(
                "functional-equation",
                format!("complete rows n < {}, z in {}", g.n_max, list(&g.z_grid)),
                worst.finish(),
                self.config.tol.functional,
            )
        }))
    }

    fn numerator_check(&self) -> Result<CheckResult, RunError> {
        let g = &self.config.grid;
        let tol = self.config.tol.numerator;
        let mut worst = Worst::default();
        for &u in &g.u_grid {
            let params = format!("u = {u}");
            let roots = find_kernel_roots(&self.dist, Complex64::new(u, 0.0))
                .map_err(method_err("kernel roots", params.clone()))?;
            let table = numerator_table(&self.dist, u, tol);
            let r = numerator_check(&self.dist, u, &roots, &table, tol)
                .map_err(method_err("numerator", params.clone()))?;
            worst.update(r, || params);
        }
        Ok(CheckResult::new(
            "numerator",
            format!("u in {}", list(&g.u_grid)),
            worst.finish(),
            tol,
        ))
    }

    fn coefficient_check(&mut self) -> Result<CheckResult, RunError> {
        let cert = self.certificate()?;
        let quad = CircleQuadrature::standard(cert.b());
        let top = self.config.grid.coeff_max;
        let mut worst = Worst::default();
        for l in 1..=top {
            for k in 1..=top {
                let (integral, pmf) = verify_coeff_identity(&self.dist, l, k, &cert, &quad)
                    .map_err(method_err(
                        "coefficient identity",
                        format!("l = {l}, k = {k}"),
                    ))?;
                worst.update((integral - pmf).norm(), || format!("l={l}, k={k}"));
            }
        }
        Ok(CheckResult::new(
            "coefficient-identity",
            format!("1 <= l, k <= {top}, b = {}", cert.b()),
            worst.finish(),
            self.config.tol.coefficient,
        ))
    }

    fn logresidue_check(&self) -> Result<CheckResult, RunError> {
        let g = &self.config.grid;
        let mut worst = Worst::default();
        for &u in &g.u_grid {
            let roots = find_kernel_roots(&self.dist, Complex64::new(u, 0.0))
                .map_err(method_err("kernel roots", format!("u = {u}")))?;
            let z = 0.5 * (roots.max_modulus() + 1.0);
            let a = 0.5 * (roots.max_modulus() + z);
            let params = format!("u = {u}, z = {z}, a = {a}");
            let (lhs, rhs) = root_logresidue_check(&self.dist, u, z, a, LOGRESIDUE_NODES)
                .map_err(method_err("log residue", params.clone()))?;
            worst.update((lhs - rhs).norm(), || params);
        }
        Ok(CheckResult::new(
            "log-residue",
            format!("u in {}, {LOGRESIDUE_NODES} nodes", list(&g.u_grid)),
            worst.finish(),
            self.config.tol.logresidue,
        ))
    }

    /// `F(u, 1) = 1/(1 - u)` for every selected transform-valued method.
    fn normalization_check(&mut self, method: Method) -> Result<CheckResult, RunError> {
        let g = &self.config.grid;
        let n_max = g.n_max;
        let u_grid = g.u_grid.clone();
        let one = Complex64::new(1.0, 0.0);
        let cert = match method {
            Method::PollaczekInversion => Some(self.certificate()?),
            _ => None,
        };
        let mut worst = Worst::default();
        for u in u_grid {
            let uc = Complex64::new(u, 0.0);
            let params = format!("u = {u}");
            let value = match method {
                Method::Spitzer => {
                    // partial sum plus the exact tail sum_{n > N} u^n
                    let f = spitzer_coefficients_at(&self.dist, n_max, one)
                        .map_err(method_err(method.as_str(), params.clone()))?;
                    let head = f
                        .iter()
                        .rev()
                        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c);
                    head + u.powi(n_max as i32 + 1) / (1.0 - u)
                }
                Method::ProductInversion => find_kernel_roots(&self.dist, uc)
                    .and_then(|roots| product_eval(&self.dist, uc, one, &roots))
                    .map_err(method_err(method.as_str(), params.clone()))?,
                Method::PollaczekInversion => {
                    let cert = cert.unwrap();
                    let quad = CircleQuadrature::standard(cert.b());
                    pollaczek_eval_many(&self.dist, uc, &[one], &cert, &quad)
                        .map_err(method_err(method.as_str(), params.clone()))?[0]
                }
                Method::Dp => unreachable!("dp has no transform"),
            };
            worst.update((value - 1.0 / (1.0 - u)).norm(), || params);
        }
        Ok(CheckResult::new(
            match method {
                Method::Spitzer => "normalization-spitzer",
                Method::ProductInversion => "normalization-product",
                _ => "normalization-pollaczek",
            },
            format!("z = 1, u in {}", list(&self.config.grid.u_grid)),
            worst.finish(),
            self.config.tol.normalization,
        ))
    }
}

/// Runs every configured method, compares each pair of tables over their
/// common complete rows, and runs the structural checks whenever a
/// comparison is requested. Deterministic for a given config.
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    let dist = config.increment().map_err(method_err(
        "distribution",
        format!("family {}", config.distribution.family.name()),
    ))?;
    let mut ctx = Context {
        config,
        dist,
        certificate: None,
    };

    let mut tables = Vec::with_capacity(config.methods.len());
    let mut inversions = Vec::new();
    for &method in &config.methods {
        let (table, info) = ctx.table(method)?;
        tables.push(table);
        inversions.extend(info);
    }

    let mut pairs = Vec::new();
    for (i, a) in tables.iter().enumerate() {
        for b in &tables[i + 1..] {
            let tol = if is_transform(a.method) || is_transform(b.method) {
                config.tol.transform
            } else {
                config.tol.series
            };
            pairs.push(PairResult::compare(a, b, tol));
        }
    }

    let mut checks = Vec::new();
    if config.methods.len() > 1 {
        let dp = &tables[0];
        checks.extend(ctx.functional_check(dp)?);
        checks.push(ctx.numerator_check()?);
        checks.push(ctx.coefficient_check()?);
        checks.push(ctx.logresidue_check()?);
        for &m in config.methods.iter().filter(|m| **m != Method::Dp) {
            checks.push(ctx.normalization_check(m)?);
        }
    }

    let g = &config.grid;
    let environment = Environment {
        family: ctx.dist.family(),
        s: ctx.dist.s(),
        max_jump: ctx.dist.max_jump(),
        truncation_defect: ctx.dist.truncation_defect(),
        warnings: ctx.dist.warnings().to_vec(),
        n_max: g.n_max,
        m_max: g.m_max,
        complete_rows: tables[0].complete_prefix(),
        series_orders: config.has(Method::Spitzer).then_some((g.n_max, g.m_max)),
        certificate: ctx.certificate,
        inversions,
        logresidue_nodes: if checks.is_empty() {
            0
        } else {
            LOGRESIDUE_NODES
        },
    };
    Ok(RunOutput {
        tables,
        report: AgreementReport {
            pairs,
            checks,
            environment,
        },
    })
}
