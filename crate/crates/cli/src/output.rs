//! CSV and JSON encodings of a run.

use std::fmt::Write as _;

use serde::Serialize;
use spitzer_core::DistributionTable;

use crate::config::{Format, RunConfig};
use crate::report::AgreementReport;
use crate::run::RunOutput;

/// CSV with header `n,m,method,probability`, rows in method, `n`, `m` order.
pub fn to_csv(tables: &[DistributionTable]) -> String {
    let mut out = String::from("n,m,method,probability\n");
    for t in tables {
        for (n, row) in t.probs.iter().enumerate() {
            for (m, p) in row.iter().enumerate() {
                let _ = writeln!(out, "{n},{m},{},{p:e}", t.method.as_str());
            }
        }
    }
    out
}

#[derive(Serialize)]
struct JsonRun<'a> {
    config: &'a RunConfig,
    tables: &'a [DistributionTable],
    report: &'a AgreementReport,
}

/// JSON object with the echoed config, the tables and the report.
pub fn to_json(config: &RunConfig, output: &RunOutput) -> String {
    let doc = JsonRun {
        config,
        tables: &output.tables,
        report: &output.report,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("run output serializes");
    text.push('\n');
    text
}

pub fn render(config: &RunConfig, output: &RunOutput) -> String {
    match config.format {
        Format::Csv => to_csv(&output.tables),
        Format::Json => to_json(config, output),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spitzer_core::Method;

    #[test]
    fn csv_layout() {
        let t = DistributionTable {
            method: Method::Dp,
            probs: vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            complete_rows: vec![true, true],
        };
        assert_eq!(
            to_csv(&[t]),
            "n,m,method,probability\n0,0,dp,1e0\n0,1,dp,0e0\n1,0,dp,5e-1\n1,1,dp,5e-1\n"
        );
    }
}
