//! Exact distribution of the reflected lattice random walk
//! `M_{n+1} = (M_n + A_{n+1} - s)^+`, `M_0 = 0`, computed four ways:
//!
//! * [`oracle::lindley_dp`]: forward dynamic programming on the recursion,
//! * [`series::spitzer_series`]: exponential of the free-walk positive-part series,
//! * [`kernel::product_eval`]: product over the in-disk roots of `z^s - u A(z)`,
//! * [`contour::pollaczek_eval`]: contour integral on a circle `|w| = b > 1`.
//!
//! The transform methods evaluate `F(u, z) = sum_n u^n E(z^{M_n})`; the
//! series and DP methods produce `P(M_n = m)` directly.

pub mod contour;
pub mod dist;
pub mod error;
pub mod kernel;
pub mod oracle;
mod roots;
pub mod series;

pub use contour::{
    cauchy_coeff, choose_outer_radius, circle_coefficients, invert_transform, pollaczek_eval,
    pollaczek_eval_many, verify_coeff_identity, CircleQuadrature, Inversion, InversionGrid,
    RadiusCertificate,
};
pub use dist::{
    make_family, pgf_eval, positive_part_pgf, walk_pmf, AnalyticityRadius, DistSpec, Family,
    IncrementDistribution, WalkPmf,
};
pub use error::{Error, Result};
pub use kernel::{find_kernel_roots, product_eval, root_logresidue_check, RootSet};
pub use oracle::{
    functional_equation_check, lindley_dp, numerator_check, BoundarySeries, DistributionTable,
    Method,
};
pub use series::{
    poly_mul, series_exp, series_log, spitzer_coefficients_at, spitzer_series, USeries, ZPolynomial,
};

pub use num_complex::Complex64;
