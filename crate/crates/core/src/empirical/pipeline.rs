//! End-to-end estimation: clean, form portfolios, check the mandate, estimate
//! betas and run the model family.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;

use super::betas::{benchmark_residual_betas_with, factor_loadings_with, BetaReport};
use super::binding::{binding_check, BindingCheck};
use super::cleaning::{
    normalize_esg, winsorize_with, WinsorScope, DEFAULT_LOWER_PCT, DEFAULT_UPPER_PCT,
};
use super::comparison::{model_comparison, ModelComparison};
use super::panel::{FactorPanel, ReturnEsgPanel, SectorMap};
use super::portfolios::{
    cap_filter, form_portfolios, portfolio_benchmark_weights, top_k_benchmark, weighted_returns,
    PortfolioScheme, Weighting, DEFAULT_MIN_ASSETS,
};
use super::regression::{fit_model, CrossSection, ModelKind, RegressionFit};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub lower_pct: f64,
    pub upper_pct: f64,
    pub winsor_scope: WinsorScope,
    /// Percent of assets kept, largest average capitalization first.
    pub cap_filter_pct: f64,
    /// Portfolio grouping for the binding check; `None` groups by sector.
    pub quantiles: Option<usize>,
    pub min_assets: usize,
    /// Benchmark constituents: this many largest assets by final-month capitalization.
    pub benchmark_top_k: usize,
    pub market_weighting: Weighting,
    pub models: Vec<ModelKind>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lower_pct: DEFAULT_LOWER_PCT,
            upper_pct: DEFAULT_UPPER_PCT,
            winsor_scope: WinsorScope::Pooled,
            cap_filter_pct: 75.0,
            quantiles: None,
            min_assets: DEFAULT_MIN_ASSETS,
            benchmark_top_k: 50,
            market_weighting: Weighting::Value,
            models: ModelKind::ALL.to_vec(),
        }
    }
}

/// Cleaned panel plus the market and benchmark proxies built on it.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedPanel {
    pub panel: ReturnEsgPanel,
    pub market_returns: DVector<f64>,
    pub benchmark_returns: DVector<f64>,
    pub benchmark_weights: std::collections::BTreeMap<String, f64>,
    pub risk_free: DVector<f64>,
    pub factors: Option<FactorPanel>,
}

/// Drops unscored assets, winsorizes returns, normalizes scores and builds
/// the market (all assets) and benchmark (largest assets) return proxies.
pub fn prepare(
    raw: &ReturnEsgPanel,
    factors: Option<&FactorPanel>,
    config: &PipelineConfig,
) -> Result<PreparedPanel> {
    let scored = raw.drop_unscored();
    if scored.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let cleaned = winsorize_with(
        &scored,
        config.lower_pct,
        config.upper_pct,
        config.winsor_scope,
    )?;
    let panel = normalize_esg(&cleaned)?;
    let all: Vec<usize> = (0..panel.n_assets()).collect();
    let market_returns = weighted_returns(&panel, &all, config.market_weighting)?;
    let benchmark_weights = top_k_benchmark(&panel, config.benchmark_top_k)?;
    let constituents: Vec<usize> = panel
        .asset_ids
        .iter()
        .enumerate()
        .filter(|(_, id)| benchmark_weights.contains_key(*id))
        .map(|(j, _)| j)
        .collect();
    let benchmark_returns = weighted_returns(&panel, &constituents, Weighting::Value)?;
    let factors = factors.map(|f| f.align(&panel.dates)).transpose()?;
    let risk_free = factors
        .as_ref()
        .map(|f| f.risk_free.clone())
        .unwrap_or_else(|| DVector::zeros(panel.n_months()));
    Ok(PreparedPanel {
        panel,
        market_returns,
        benchmark_returns,
        benchmark_weights,
        risk_free,
        factors,
    })
}

/// Checks the mandate on equal-weighted portfolios of the prepared panel.
pub fn portfolio_binding_check(
    prepared: &PreparedPanel,
    sectors: Option<&SectorMap>,
    config: &PipelineConfig,
) -> Result<BindingCheck> {
    let scheme = match (config.quantiles, sectors) {
        (Some(k), _) => PortfolioScheme::EsgQuantiles(k),
        (None, Some(map)) => PortfolioScheme::Sectors(map.clone()),
        (None, None) => {
            return Err(Error::InvalidInput(
                "sector grouping needs a sector map; pass one or choose quantiles".into(),
            ))
        }
    };
    let portfolios = form_portfolios(
        &prepared.panel,
        &scheme,
        config.cap_filter_pct,
        config.min_assets,
    )?;
    let weights = portfolio_benchmark_weights(&portfolios, &prepared.benchmark_weights)?;
    binding_check(&portfolios.panel, &weights)
}

/// Betas and average returns of the size-filtered assets.
pub fn build_cross_section(
    prepared: &PreparedPanel,
    config: &PipelineConfig,
    exec: Execution,
) -> Result<(CrossSection, BetaReport)> {
    let assets = cap_filter(&prepared.panel, config.cap_filter_pct)?;
    let report = benchmark_residual_betas_with(
        &assets,
        &prepared.market_returns,
        &prepared.benchmark_returns,
        &prepared.risk_free,
        exec,
    )?;
    let factor_loadings = match &prepared.factors {
        Some(f) => {
            let loads = factor_loadings_with(&assets, f, exec)?;
            Some([
                loads.iter().map(|l| l.smb).collect(),
                loads.iter().map(|l| l.hml).collect(),
                loads.iter().map(|l| l.rmw).collect(),
                loads.iter().map(|l| l.cma).collect(),
            ])
        }
        None => None,
    };
    let cs = CrossSection {
        asset_ids: assets.asset_ids.clone(),
        mean_return: assets.mean_returns().iter().copied().collect(),
        beta_m: report.assets.iter().map(|a| a.beta_m).collect(),
        beta_e: report.assets.iter().map(|a| a.beta_e).collect(),
        xi: assets.average_esg().iter().copied().collect(),
        factor_loadings,
    };
    Ok((cs, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub binding: BindingCheck,
    pub betas: BetaReport,
    pub cross_section: CrossSection,
    pub fits: Vec<RegressionFit>,
    pub comparison: ModelComparison,
}

pub fn run_pipeline(
    raw: &ReturnEsgPanel,
    factors: Option<&FactorPanel>,
    sectors: Option<&SectorMap>,
    config: &PipelineConfig,
) -> Result<PipelineReport> {
    run_pipeline_with(raw, factors, sectors, config, Execution::default())
}

pub fn run_pipeline_with(
    raw: &ReturnEsgPanel,
    factors: Option<&FactorPanel>,
    sectors: Option<&SectorMap>,
    config: &PipelineConfig,
    exec: Execution,
) -> Result<PipelineReport> {
    let prepared = prepare(raw, factors, config)?;
    let binding = portfolio_binding_check(&prepared, sectors, config)?;
    let (cross_section, betas) = build_cross_section(&prepared, config, exec)?;
    let fits = config
        .models
        .iter()
        .filter(|m| cross_section.factor_loadings.is_some() || !m.needs_factors())
        .map(|&m| fit_model(&cross_section, m))
        .collect::<Result<Vec<_>>>()?;
    let comparison = model_comparison(&fits)?;
    Ok(PipelineReport {
        binding,
        betas,
        cross_section,
        fits,
        comparison,
    })
}
