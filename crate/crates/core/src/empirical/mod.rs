//! Estimation on monthly return and ESG score panels.

pub mod betas;
pub mod binding;
pub mod cleaning;
pub mod comparison;
pub mod panel;
pub mod pipeline;
pub mod portfolios;
pub mod regression;
pub mod stats;

pub use betas::{benchmark_residual_betas, factor_loadings, BetaReport};
pub use binding::{binding_check, BindingCheck};
pub use cleaning::{normalize_esg, winsorize, winsorize_with, WinsorScope};
pub use comparison::{format_table, model_comparison, ModelComparison};
pub use panel::{FactorPanel, ReturnEsgPanel, SectorMap, YearMonth};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineReport};
pub use portfolios::{form_portfolios, PortfolioPanel, PortfolioScheme};
pub use regression::{cross_sectional_regress, CrossSection, ModelKind, RegressionFit, Regressor};
