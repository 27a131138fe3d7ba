//! Bundled illustrative four-asset market and example benchmarks.
//!
//! The risk-reducer and return-enhancer weights are constructed to hit a
//! target mean, M-SD ratio and ESG score to two decimals.

use nalgebra::{DMatrix, DVector};

use crate::market::{Benchmark, MarketUniverse};

pub const FOUR_ASSET_IDS: [&str; 4] = ["A", "B", "C", "D"];
pub const FOUR_ASSET_MU: [f64; 4] = [0.15, 0.10, 0.05, 0.02];
pub const FOUR_ASSET_XI: [f64; 4] = [0.07, 0.10, 0.17, 0.67];
#[rustfmt::skip]
pub const FOUR_ASSET_OMEGA: [f64; 16] = [
    0.06, 0.04, 0.02, 0.01,
    0.04, 0.05, 0.03, 0.02,
    0.02, 0.03, 0.08, 0.03,
    0.01, 0.02, 0.03, 0.06,
];

/// Risk-reducer benchmark: mean 0.08, M-SD 0.45, ESG 0.22 (two decimals).
pub const RISK_REDUCER_WEIGHTS: [f64; 4] = [0.228, 0.346, 0.232, 0.194];
/// Return-enhancer benchmark: mean 0.10, M-SD 0.53, ESG 0.16 (two decimals).
pub const RETURN_ENHANCER_WEIGHTS: [f64; 4] = [0.409, 0.293, 0.194, 0.104];
/// A demanding benchmark (high return and high ESG score) with `G* < 0`.
pub const DEMANDING_WEIGHTS: [f64; 4] = [0.5, 0.2, 0.0, 0.3];

pub fn four_asset_universe() -> MarketUniverse {
    MarketUniverse::new(
        FOUR_ASSET_IDS.iter().map(|s| s.to_string()).collect(),
        DVector::from_row_slice(&FOUR_ASSET_MU),
        DVector::from_row_slice(&FOUR_ASSET_XI),
        DMatrix::from_row_slice(4, 4, &FOUR_ASSET_OMEGA),
    )
    .expect("bundled universe is valid")
}

fn bench(w: &[f64; 4]) -> Benchmark {
    Benchmark::new(DVector::from_row_slice(w)).expect("bundled benchmark is valid")
}

pub fn risk_reducer_benchmark() -> Benchmark {
    bench(&RISK_REDUCER_WEIGHTS)
}

pub fn return_enhancer_benchmark() -> Benchmark {
    bench(&RETURN_ENHANCER_WEIGHTS)
}

pub fn demanding_benchmark() -> Benchmark {
    bench(&DEMANDING_WEIGHTS)
}
