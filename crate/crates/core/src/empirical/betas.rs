//! Two-step market and benchmark-residual betas.
//!
//! Step one regresses benchmark excess returns on market excess returns
//! (with an intercept) and keeps the residual `e(t)`. Step two computes, per
//! series `j`, `β_mj = Cov(r_m, r_j)/Var(r_m)` and `β_ej = Cov(e, r_j)/Var(e)`.
//! All moments use excess returns over the same months, so
//! `β_bj = β_mb β_mj Var(r_m)/Var(r_be) + β_ej Var(e)/Var(r_be)` holds exactly.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;

use super::panel::{FactorPanel, ReturnEsgPanel};
use super::stats::{covariance, variance};

/// Minimum number of monthly observations for any beta.
pub const MIN_HISTORY: usize = 24;
/// Residual variance below this fraction of the benchmark variance is treated as zero.
const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetBetas {
    pub asset: String,
    pub beta_m: f64,
    pub beta_e: f64,
    /// `Cov(r_be, r_j)/Var(r_be)` computed directly.
    pub beta_b: f64,
    /// Same quantity rebuilt from `β_m` and `β_e`.
    pub beta_b_decomposed: f64,
    pub n_obs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaReport {
    pub beta_mb: f64,
    pub alpha_mb: f64,
    pub var_market: f64,
    pub var_benchmark: f64,
    pub var_residual: f64,
    pub assets: Vec<AssetBetas>,
}

impl BetaReport {
    /// Largest gap between direct and decomposed benchmark betas.
    pub fn decomposition_gap(&self) -> f64 {
        self.assets
            .iter()
            .map(|a| (a.beta_b - a.beta_b_decomposed).abs())
            .fold(0.0, f64::max)
    }
}

fn check_series(name: &str, v: &DVector<f64>, t: usize) -> Result<()> {
    if v.len() != t {
        return Err(Error::DimensionMismatch(format!(
            "{name} has {} months, panel has {t}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} has a missing value")));
    }
    Ok(())
}

struct Moments<'a> {
    market: &'a [f64],
    benchmark: &'a [f64],
    residual: &'a [f64],
    beta_mb: f64,
}

fn series_betas(
    panel: &ReturnEsgPanel,
    j: usize,
    rf: &[f64],
    m: &Moments<'_>,
) -> Result<AssetBetas> {
    let rows: Vec<usize> = (0..panel.n_months())
        .filter(|&t| !panel.returns[(t, j)].is_nan())
        .collect();
    if rows.len() < MIN_HISTORY {
        return Err(Error::InsufficientHistory {
            needed: MIN_HISTORY,
            got: rows.len(),
        });
    }
    let pick = |s: &[f64]| rows.iter().map(|&t| s[t]).collect::<Vec<_>>();
    let x: Vec<f64> = rows
        .iter()
        .map(|&t| panel.returns[(t, j)] - rf[t])
        .collect();
    let (xm, xb, e) = (pick(m.market), pick(m.benchmark), pick(m.residual));
    let (vm, vb, ve) = (variance(&xm), variance(&xb), variance(&e));
    if !(ve > RESIDUAL_FLOOR * vb) {
        return Err(Error::DegenerateSeries(format!(
            "benchmark residual has no variance over the months observed for {}",
            panel.asset_ids[j]
        )));
    }
    let beta_m = covariance(&xm, &x) / vm;
    let beta_e = covariance(&e, &x) / ve;
    Ok(AssetBetas {
        asset: panel.asset_ids[j].clone(),
        beta_m,
        beta_e,
        beta_b: covariance(&xb, &x) / vb,
        beta_b_decomposed: m.beta_mb * beta_m * vm / vb + beta_e * ve / vb,
        n_obs: rows.len(),
    })
}

pub fn benchmark_residual_betas(
    panel: &ReturnEsgPanel,
    market_returns: &DVector<f64>,
    benchmark_returns: &DVector<f64>,
    risk_free: &DVector<f64>,
) -> Result<BetaReport> {
    benchmark_residual_betas_with(
        panel,
        market_returns,
        benchmark_returns,
        risk_free,
        Execution::default(),
    )
}

pub fn benchmark_residual_betas_with(
    panel: &ReturnEsgPanel,
    market_returns: &DVector<f64>,
    benchmark_returns: &DVector<f64>,
    risk_free: &DVector<f64>,
    exec: Execution,
) -> Result<BetaReport> {
    let t = panel.n_months();
    check_series("market returns", market_returns, t)?;
    check_series("benchmark returns", benchmark_returns, t)?;
    check_series("risk-free rate", risk_free, t)?;
    if t < MIN_HISTORY {
        return Err(Error::InsufficientHistory {
            needed: MIN_HISTORY,
            got: t,
        });
    }
    let rf: Vec<f64> = risk_free.iter().copied().collect();
    let xm: Vec<f64> = market_returns.iter().zip(&rf).map(|(r, f)| r - f).collect();
    let xb: Vec<f64> = benchmark_returns
        .iter()
        .zip(&rf)
        .map(|(r, f)| r - f)
        .collect();
    let var_market = variance(&xm);
    let scale = xm.iter().map(|v| v * v).sum::<f64>() / t as f64;
    if !(var_market > 1e-14 * scale) || var_market == 0.0 {
        return Err(Error::DegenerateSeries(
            "market excess return is constant".into(),
        ));
    }
    let beta_mb = covariance(&xb, &xm) / var_market;
    let alpha_mb = super::stats::mean(&xb) - beta_mb * super::stats::mean(&xm);
    let residual: Vec<f64> = xb
        .iter()
        .zip(&xm)
        .map(|(b, m)| b - alpha_mb - beta_mb * m)
        .collect();
    let var_benchmark = variance(&xb);
    let var_residual = variance(&residual);
    if !(var_residual > RESIDUAL_FLOOR * var_benchmark) {
        return Err(Error::DegenerateSeries(
            "benchmark is collinear with the market; residual has no variance".into(),
        ));
    }
    let moments = Moments {
        market: &xm,
        benchmark: &xb,
        residual: &residual,
        beta_mb,
    };
    let assets = exec
        .map_range(panel.n_assets(), |j| series_betas(panel, j, &rf, &moments))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(BetaReport {
        beta_mb,
        alpha_mb,
        var_market,
        var_benchmark,
        var_residual,
        assets,
    })
}

/// Univariate loadings `Cov(f, r_j − r_f)/Var(f)` on the four non-market factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorLoadings {
    pub smb: f64,
    pub hml: f64,
    pub rmw: f64,
    pub cma: f64,
}

pub fn factor_loadings(
    panel: &ReturnEsgPanel,
    factors: &FactorPanel,
) -> Result<Vec<FactorLoadings>> {
    factor_loadings_with(panel, factors, Execution::default())
}

pub fn factor_loadings_with(
    panel: &ReturnEsgPanel,
    factors: &FactorPanel,
    exec: Execution,
) -> Result<Vec<FactorLoadings>> {
    if factors.dates != panel.dates {
        return Err(Error::DimensionMismatch(
            "factor panel is not aligned to the return panel".into(),
        ));
    }
    exec.map_range(panel.n_assets(), |j| {
        let rows: Vec<usize> = (0..panel.n_months())
            .filter(|&t| !panel.returns[(t, j)].is_nan())
            .collect();
        if rows.len() < MIN_HISTORY {
            return Err(Error::InsufficientHistory {
                needed: MIN_HISTORY,
                got: rows.len(),
            });
        }
        let x: Vec<f64> = rows
            .iter()
            .map(|&t| panel.returns[(t, j)] - factors.risk_free[t])
            .collect();
        let load = |f: &DVector<f64>| -> Result<f64> {
            let fv: Vec<f64> = rows.iter().map(|&t| f[t]).collect();
            let v = variance(&fv);
            if !(v > 0.0) {
                return Err(Error::DegenerateSeries("factor series is constant".into()));
            }
            Ok(covariance(&fv, &x) / v)
        };
        Ok(FactorLoadings {
            smb: load(&factors.smb)?,
            hml: load(&factors.hml)?,
            rmw: load(&factors.rmw)?,
            cma: load(&factors.cma)?,
        })
    })
    .into_iter()
    .collect()
}
