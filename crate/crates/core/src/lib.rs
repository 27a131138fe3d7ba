//! Benchmark-relative portfolio analytics.
//!
//! * [`market`]: the asset universe and the scalar quadratic forms behind every closed form.
//! * [`frontier`]: Markowitz, minimum-TEV and ESG-mandated TEV frontiers.
//! * [`equilibrium`]: demands of mandated institutions and retail investors, market
//!   clearing and the implied ESG premium.
//! * [`empirical`]: panel cleaning, portfolio formation, beta estimation and
//!   cross-sectional regressions.
//!
//! Verification oracles live in [`oracle`] and [`verify`]; [`synth`] simulates
//! panels from a known equilibrium.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod empirical;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod frontier;
pub mod io;
pub mod linalg;
pub mod market;
pub mod oracle;
pub mod synth;
pub mod verify;

pub use error::{Error, ErrorClass, Result};
pub use exec::Execution;
pub use frontier::{FrontierCurve, FrontierModel, FrontierPortfolio, MandateSpec, Multipliers};
pub use market::{Benchmark, BenchmarkMoments, FrontierScalars, MarketUniverse, PortfolioStats};
