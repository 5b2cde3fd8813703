//! Run configuration: a flat `key = value` file (TOML syntax, top-level
//! keys plus dotted `tol.*` keys), validated into a [`RunConfig`].

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spitzer_core::dist::MAX_TAIL_TOLERANCE;
use spitzer_core::{make_family, DistSpec, Family, IncrementDistribution, Method};
use toml::Spanned;

use crate::error::ConfigError;

/// Output encoding of the tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Parses one method name as written in configs and on the command line.
pub fn parse_method(name: &str) -> Result<Method, String> {
    match name.trim() {
        "dp" => Ok(Method::Dp),
        "spitzer" => Ok(Method::Spitzer),
        "product" | "product-inversion" => Ok(Method::ProductInversion),
        "pollaczek" | "pollaczek-inversion" => Ok(Method::PollaczekInversion),
        other => Err(format!(
            "unknown method `{other}` (expected dp, spitzer, product or pollaczek)"
        )),
    }
}

/// Parses `all` or a comma-separated list of method names.
pub fn parse_method_list(list: &str) -> Result<Vec<Method>, String> {
    if list.trim() == "all" {
        return Ok(ALL_METHODS.to_vec());
    }
    list.split(',').map(parse_method).collect()
}

pub const ALL_METHODS: [Method; 4] = [
    Method::Dp,
    Method::Spitzer,
    Method::ProductInversion,
    Method::PollaczekInversion,
];

/// Per-check tolerances. Pass flags compare a residual against one of these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Method pairs that involve no transform inversion.
    pub series: f64,
    /// Method pairs that involve a transform inversion.
    pub transform: f64,
    pub functional: f64,
    pub numerator: f64,
    pub coefficient: f64,
    pub logresidue: f64,
    pub normalization: f64,
    /// Agreement of successive tables while doubling inversion nodes.
    pub inversion: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            series: 1e-11,
            transform: 1e-9,
            functional: 1e-11,
            numerator: 1e-9,
            coefficient: 1e-10,
            logresidue: 1e-8,
            normalization: 1e-12,
            inversion: 1e-12,
        }
    }
}

/// Table and evaluation grids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub n_max: usize,
    pub m_max: usize,
    /// Radius of the `u` circle used to invert the transform methods.
    pub u_radius: f64,
    /// Largest `|u|` the contour certificate must cover.
    pub v: f64,
    /// Real `u` values for the numerator and log-residue checks.
    pub u_grid: Vec<f64>,
    /// Real `z` values for the functional-equation check.
    pub z_grid: Vec<f64>,
    /// `l, k <= coeff_max` for the coefficient identity.
    pub coeff_max: usize,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub distribution: DistSpec,
    /// Sorted, deduplicated; contains `dp` whenever another method is present.
    pub methods: Vec<Method>,
    pub grid: Grid,
    pub tol: Tolerances,
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub verbose: bool,
}

impl RunConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        text.parse()
    }

    /// Replaces the method set, re-adding `dp` when comparisons are implied.
    pub fn set_methods(&mut self, methods: Vec<Method>) -> Result<(), ConfigError> {
        self.methods = normalize_methods(methods).map_err(|reason| ConfigError::Flag {
            flag: "--methods",
            reason,
        })?;
        Ok(())
    }

    /// The increment distribution described by the config.
    pub fn increment(&self) -> spitzer_core::Result<IncrementDistribution> {
        make_family(&self.distribution)
    }

    pub fn has(&self, method: Method) -> bool {
        self.methods.contains(&method)
    }
}

fn normalize_methods(methods: Vec<Method>) -> Result<Vec<Method>, String> {
    if methods.is_empty() {
        return Err("at least one method is required".into());
    }
    let mut set: BTreeSet<Method> = methods.into_iter().collect();
    if set.iter().any(|m| *m != Method::Dp) {
        set.insert(Method::Dp);
    }
    Ok(set.into_iter().collect())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MethodsValue {
    List(Vec<String>),
    One(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    family: Spanned<String>,
    s: Spanned<i64>,
    tail_tolerance: Option<Spanned<f64>>,
    c: Option<Spanned<i64>>,
    p: Option<Spanned<f64>>,
    scale: Option<Spanned<i64>>,
    trials: Option<Spanned<i64>>,
    lambda: Option<Spanned<f64>>,
    pmf: Option<Spanned<Vec<f64>>>,

    methods: Option<Spanned<MethodsValue>>,
    n_max: Option<Spanned<i64>>,
    m_max: Option<Spanned<i64>>,
    u_radius: Option<Spanned<f64>>,
    v: Option<Spanned<f64>>,
    u_grid: Option<Spanned<Vec<f64>>>,
    z_grid: Option<Spanned<Vec<f64>>>,
    coeff_max: Option<Spanned<i64>>,
    #[serde(default)]
    tol: Tolerances,

    format: Option<Spanned<String>>,
    output: Option<Spanned<String>>,
    verbose: Option<Spanned<bool>>,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, span: Range<usize>, field: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Field {
            line: line_of(self.text, span.start),
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    fn count<T: Copy + Into<i64>>(
        &self,
        v: &Spanned<T>,
        field: &str,
        min: i64,
    ) -> Result<usize, ConfigError> {
        let x: i64 = (*v.get_ref()).into();
        if x < min {
            return Err(self.err(v.span(), field, format!("{x} must be at least {min}")));
        }
        Ok(x as usize)
    }

    fn open_unit(&self, v: &Spanned<f64>, field: &str) -> Result<f64, ConfigError> {
        let x = *v.get_ref();
        if !(x > 0.0 && x < 1.0) {
            return Err(self.err(v.span(), field, format!("{x} must lie in (0, 1)")));
        }
        Ok(x)
    }
}

const FAMILY_PARAMS: [&str; 6] = ["c", "p", "scale", "trials", "lambda", "pmf"];

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let ctx = Ctx { text };

        let s = ctx.count(&raw.s, "s", 1)?;
        let family_span = raw.family.span();
        let present: [(bool, Option<Range<usize>>); 6] = [
            (raw.c.is_some(), raw.c.as_ref().map(|v| v.span())),
            (raw.p.is_some(), raw.p.as_ref().map(|v| v.span())),
            (raw.scale.is_some(), raw.scale.as_ref().map(|v| v.span())),
            (raw.trials.is_some(), raw.trials.as_ref().map(|v| v.span())),
            (raw.lambda.is_some(), raw.lambda.as_ref().map(|v| v.span())),
            (raw.pmf.is_some(), raw.pmf.as_ref().map(|v| v.span())),
        ];
        let name = raw.family.get_ref().as_str();
        let allowed: &[&str] = match name {
            "deterministic" => &["c"],
            "bernoulli-scaled" => &["p", "scale"],
            "binomial" => &["trials", "p"],
            "poisson" | "poisson-truncated" => &["lambda"],
            "geometric" | "geometric-truncated" => &["p"],
            "explicit" => &["pmf"],
            other => {
                return Err(ctx.err(
                    family_span,
                    "family",
                    format!(
                        "unknown family `{other}` (expected deterministic, bernoulli-scaled, \
                         binomial, poisson, geometric or explicit)"
                    ),
                ))
            }
        };
        for (param, (given, span)) in FAMILY_PARAMS.iter().zip(&present) {
            if *given && !allowed.contains(param) {
                return Err(ctx.err(
                    span.clone().unwrap(),
                    param,
                    format!("not a parameter of family `{name}`"),
                ));
            }
            if !*given && allowed.contains(param) {
                return Err(ctx.err(
                    family_span.clone(),
                    param,
                    format!("family `{name}` requires `{param}`"),
                ));
            }
        }
        let family = match name {
            "deterministic" => Family::Deterministic {
                c: ctx.count(raw.c.as_ref().unwrap(), "c", 0)?,
            },
            "bernoulli-scaled" => Family::BernoulliScaled {
                p: *raw.p.as_ref().unwrap().get_ref(),
                scale: ctx.count(raw.scale.as_ref().unwrap(), "scale", 1)?,
            },
            "binomial" => Family::Binomial {
                trials: ctx.count(raw.trials.as_ref().unwrap(), "trials", 0)?,
                p: *raw.p.as_ref().unwrap().get_ref(),
            },
            "poisson" | "poisson-truncated" => Family::PoissonTruncated {
                lambda: *raw.lambda.as_ref().unwrap().get_ref(),
            },
            "geometric" | "geometric-truncated" => Family::GeometricTruncated {
                p: *raw.p.as_ref().unwrap().get_ref(),
            },
            _ => Family::Explicit {
                pmf: raw.pmf.as_ref().unwrap().get_ref().clone(),
            },
        };
        let tail_tolerance = raw
            .tail_tolerance
            .as_ref()
            .map_or(MAX_TAIL_TOLERANCE, |v| *v.get_ref());
        let distribution = DistSpec::new(family, s).with_tail_tolerance(tail_tolerance);

        // surface family errors now, attributed to the offending line
        let dist = make_family(&distribution).map_err(|e| {
            let (field, span) = match &e {
                spitzer_core::Error::TailToleranceTooLoose(_)
                | spitzer_core::Error::TruncationDefect(_) => (
                    "tail_tolerance",
                    raw.tail_tolerance.as_ref().map(|v| v.span()),
                ),
                spitzer_core::Error::InvalidParameter { name, .. } => {
                    let idx = FAMILY_PARAMS.iter().position(|p| p == name);
                    (*name, idx.and_then(|i| present[i].1.clone()))
                }
                _ => ("family", None),
            };
            let span = span.unwrap_or_else(|| {
                if field == "s" {
                    raw.s.span()
                } else {
                    family_span.clone()
                }
            });
            ctx.err(span, field, e.to_string())
        })?;

        let methods = match &raw.methods {
            None => vec![Method::Dp],
            Some(m) => {
                let parsed = match m.get_ref() {
                    MethodsValue::One(list) => parse_method_list(list),
                    MethodsValue::List(items) => {
                        if items.len() == 1 && items[0] == "all" {
                            Ok(ALL_METHODS.to_vec())
                        } else {
                            items.iter().map(|i| parse_method(i)).collect()
                        }
                    }
                };
                parsed
                    .and_then(normalize_methods)
                    .map_err(|reason| ctx.err(m.span(), "methods", reason))?
            }
        };

        let n_max = raw
            .n_max
            .as_ref()
            .map_or(Ok(20), |v| ctx.count(v, "n_max", 1))?;
        let full = (n_max * dist.upward_reach()).max(1);
        let m_max = raw
            .m_max
            .as_ref()
            .map_or(Ok(full), |v| ctx.count(v, "m_max", 0))?;
        let u_radius = raw
            .u_radius
            .as_ref()
            .map_or(Ok(0.5), |v| ctx.open_unit(v, "u_radius"))?;
        let v = raw.v.as_ref().map_or(Ok(0.75), |v| ctx.open_unit(v, "v"))?;
        if v < u_radius && methods.contains(&Method::PollaczekInversion) {
            let span = raw.v.as_ref().map_or(0..0, |x| x.span());
            return Err(ctx.err(
                span,
                "v",
                format!("{v} is below u_radius = {u_radius}; the contour must cover the u circle"),
            ));
        }
        let unit_list = |field: &str, value: &Option<Spanned<Vec<f64>>>, default: &[f64]| {
            let Some(list) = value else {
                return Ok(default.to_vec());
            };
            if list.get_ref().is_empty() {
                return Err(ctx.err(list.span(), field, "must not be empty"));
            }
            Ok(list.get_ref().clone())
        };
        let u_grid = unit_list("u_grid", &raw.u_grid, &[0.25, 0.5])?;
        if let Some(bad) = u_grid.iter().find(|u| !(**u > 0.0 && **u < 1.0)) {
            let span = raw.u_grid.as_ref().unwrap().span();
            return Err(ctx.err(span, "u_grid", format!("{bad} must lie in (0, 1)")));
        }
        let z_grid = unit_list("z_grid", &raw.z_grid, &[0.25, 0.5, 0.75, 1.0])?;
        if let Some(bad) = z_grid.iter().find(|z| !(z.is_finite() && **z != 0.0)) {
            let span = raw.z_grid.as_ref().unwrap().span();
            return Err(ctx.err(span, "z_grid", format!("{bad} must be finite and nonzero")));
        }
        let coeff_max = raw
            .coeff_max
            .as_ref()
            .map_or(Ok(10), |v| ctx.count(v, "coeff_max", 1))?;

        let tol = raw.tol;
        for (field, value) in [
            ("tol.series", tol.series),
            ("tol.transform", tol.transform),
            ("tol.functional", tol.functional),
            ("tol.numerator", tol.numerator),
            ("tol.coefficient", tol.coefficient),
            ("tol.logresidue", tol.logresidue),
            ("tol.normalization", tol.normalization),
            ("tol.inversion", tol.inversion),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::Field {
                    line: text
                        .find(field.trim_start_matches("tol."))
                        .map_or(1, |o| line_of(text, o)),
                    field: field.into(),
                    reason: format!("{value} must be positive"),
                });
            }
        }

        let format = match &raw.format {
            None => Format::Csv,
            Some(f) => f
                .get_ref()
                .parse()
                .map_err(|reason: String| ctx.err(f.span(), "format", reason))?,
        };

        Ok(RunConfig {
            distribution,
            methods,
            grid: Grid {
                n_max,
                m_max,
                u_radius,
                v,
                u_grid,
                z_grid,
                coeff_max,
            },
            tol,
            format,
            output: raw.output.map(|o| PathBuf::from(o.into_inner())),
            verbose: raw.verbose.is_some_and(|v| v.into_inner()),
        })
    }
}
