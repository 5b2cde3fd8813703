//! Cross-method agreement report.

use std::fmt::Write as _;

use serde::Serialize;
use spitzer_core::{DistributionTable, Method, RadiusCertificate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub m: usize,
}

/// Entrywise comparison of two tables over the rows complete in both.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult {
    pub methods: [Method; 2],
    pub max_deviation: f64,
    pub arg_max: Option<Cell>,
    pub cells: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl PairResult {
    pub fn compare(a: &DistributionTable, b: &DistributionTable, tolerance: f64) -> Self {
        let mut max_deviation = 0.0f64;
        let mut arg_max = None;
        let mut cells = 0;
        let rows = a.n_max().min(b.n_max());
        let cols = a.m_max().min(b.m_max());
        for n in (0..=rows).filter(|&n| a.is_complete(n) && b.is_complete(n)) {
            for m in 0..=cols {
                let d = (a.prob(n, m) - b.prob(n, m)).abs();
                cells += 1;
                // NaN must not hide behind a smaller finite deviation
                if d > max_deviation || d.is_nan() && !max_deviation.is_nan() {
                    max_deviation = d;
                    arg_max = Some(Cell { n, m });
                }
            }
        }
        Self {
            methods: [a.method, b.method],
            max_deviation,
            arg_max,
            cells,
            tolerance,
            pass: max_deviation <= tolerance,
        }
    }
}

/// One structural check: largest residual over its parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    /// Where the residual was evaluated, e.g. `u in [0.25, 0.5]`.
    pub parameters: String,
    /// Parameters of the worst case.
    pub worst_at: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(
        name: &'static str,
        parameters: String,
        worst: (f64, String),
        tolerance: f64,
    ) -> Self {
        Self {
            name,
            parameters,
            worst_at: worst.1,
            residual: worst.0,
            tolerance,
            pass: worst.0 <= tolerance,
        }
    }
}

/// Tracks the largest residual and where it occurred.
#[derive(Debug, Clone, Default)]
pub(crate) struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    pub(crate) fn update(&mut self, value: f64, at: impl FnOnce() -> String) {
        if value > self.value || value.is_nan() && !self.value.is_nan() || self.at.is_empty() {
            self.value = value;
            self.at = at();
        }
    }

    pub(crate) fn finish(self) -> (f64, String) {
        (self.value, self.at)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionInfo {
    pub method: Method,
    pub u_radius: f64,
    pub z_radius: f64,
    pub u_nodes: usize,
    pub z_nodes: usize,
    /// Largest imaginary part dropped from the recovered table.
    pub max_imag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub family: &'static str,
    pub s: usize,
    pub max_jump: usize,
    pub truncation_defect: f64,
    pub warnings: Vec<String>,
    pub n_max: usize,
    pub m_max: usize,
    /// Rows `0..complete_rows` hold the whole support of `M_n`.
    pub complete_rows: usize,
    /// Truncation orders `(N, M)` of the series method.
    pub series_orders: Option<(usize, usize)>,
    pub certificate: Option<RadiusCertificate>,
    pub inversions: Vec<InversionInfo>,
    pub logresidue_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub pairs: Vec<PairResult>,
    pub checks: Vec<CheckResult>,
    pub environment: Environment,
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

impl AgreementReport {
    pub fn all_pass(&self) -> bool {
        self.pairs.iter().all(|p| p.pass) && self.checks.iter().all(|c| c.pass)
    }

    /// Human-readable summary; `verbose` adds the environment echo.
    pub fn render(&self, verbose: bool) -> String {
        let env = &self.environment;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "distribution {} s={} J={} n_max={} m_max={} complete_rows={}",
            env.family, env.s, env.max_jump, env.n_max, env.m_max, env.complete_rows
        );
        if verbose {
            let _ = writeln!(out, "  truncation defect {:e}", env.truncation_defect);
            for w in &env.warnings {
                let _ = writeln!(out, "  warning: {w}");
            }
            if let Some((n, m)) = env.series_orders {
                let _ = writeln!(out, "  series orders N={n} M={m}");
            }
            if let Some(c) = &env.certificate {
                let _ = writeln!(
                    out,
                    "  contour certificate b={} v={} ratio={} margin={}",
                    c.b(),
                    c.v(),
                    c.ratio(),
                    c.margin()
                );
            }
            for inv in &env.inversions {
                let _ = writeln!(
                    out,
                    "  {} inversion: |u|={} |z|={} nodes {}x{} max dropped imag {:e}",
                    inv.method.as_str(),
                    inv.u_radius,
                    inv.z_radius,
                    inv.u_nodes,
                    inv.z_nodes,
                    inv.max_imag
                );
            }
        }
        if self.pairs.is_empty() {
            let _ = writeln!(out, "comparisons: none");
        }
        for p in &self.pairs {
            let at = p
                .arg_max
                .map_or_else(|| "-".to_string(), |c| format!("(n={}, m={})", c.n, c.m));
            let _ = writeln!(
                out,
                "{} {} vs {}: max deviation {:e} at {} over {} cells, tolerance {:e}",
                verdict(p.pass),
                p.methods[0].as_str(),
                p.methods[1].as_str(),
                p.max_deviation,
                at,
                p.cells,
                p.tolerance
            );
        }
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {}: residual {:e} at {}, tolerance {:e}",
                verdict(c.pass),
                c.name,
                c.residual,
                c.worst_at,
                c.tolerance
            );
            if verbose {
                let _ = writeln!(out, "  over {}", c.parameters);
            }
        }
        let _ = writeln!(out, "overall {}", verdict(self.all_pass()));
        out
    }
}
