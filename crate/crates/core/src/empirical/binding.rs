//! Whether an ESG mandate would bind on estimated portfolio moments.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frontier::FrontierModel;
use crate::market::{Benchmark, FrontierScalars, MarketUniverse};

use super::panel::ReturnEsgPanel;
use super::stats::sample_covariance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BindingCheck {
    /// `E − (A/C)A_E` on the estimated moments; negative means binding for `G > 0`.
    pub e_minus_ratio: f64,
    /// `G*` when the mandate binds there.
    pub g_star: Option<f64>,
    pub g_star_raw: f64,
    pub scalars: FrontierScalars,
    pub n_months: usize,
    pub n_portfolios: usize,
}

/// Plugs sample means, the sample covariance and time-average scores of
/// the portfolios into the frontier closed forms. Months in which any
/// portfolio lacks a return are skipped.
pub fn binding_check(
    portfolios: &ReturnEsgPanel,
    benchmark_weights: &DVector<f64>,
) -> Result<BindingCheck> {
    let universe = estimate_universe(portfolios)?;
    let benchmark = Benchmark::new(benchmark_weights.clone())?;
    let model = FrontierModel::new(&universe, &benchmark)?;
    let g_star_raw = model.g_star_raw()?;
    Ok(BindingCheck {
        e_minus_ratio: model.scalars.esg_return_alignment(),
        g_star: model.g_star()?,
        g_star_raw,
        scalars: model.scalars,
        n_months: complete_rows(portfolios).len(),
        n_portfolios: portfolios.n_assets(),
    })
}

fn complete_rows(panel: &ReturnEsgPanel) -> Vec<usize> {
    (0..panel.n_months())
        .filter(|&t| panel.returns.row(t).iter().all(|v| !v.is_nan()))
        .collect()
}

/// Sample-moment universe of a (portfolio) panel.
pub fn estimate_universe(panel: &ReturnEsgPanel) -> Result<MarketUniverse> {
    let rows = complete_rows(panel);
    let n = panel.n_assets();
    if rows.len() <= n {
        return Err(Error::SingularCovariance(format!(
            "{} complete months for {n} series",
            rows.len()
        )));
    }
    let data = DMatrix::from_fn(rows.len(), n, |i, j| panel.returns[(rows[i], j)]);
    let mu = DVector::from_iterator(n, data.column_iter().map(|c| c.mean()));
    let xi = panel.average_esg();
    if xi.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("a portfolio has no ESG score".into()));
    }
    let omega = sample_covariance(&data);
    MarketUniverse::new(panel.asset_ids.clone(), mu, xi, omega).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot, value } => {
            Error::SingularCovariance(format!("pivot {pivot} = {value:e}"))
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::panel::YearMonth;
    use crate::fixtures::*;
    use crate::frontier::FrontierModel;
    use crate::market::compute_scalars;

    /// A panel whose sample moments reproduce a given (μ, Ω) exactly.
    fn panel_with_moments(mu: &[f64], xi: &[f64], omega: &DMatrix<f64>) -> ReturnEsgPanel {
        let n = mu.len();
        // rows μ ± s·L e_k: mean μ, sample covariance L Lᵀ when s² = (2n − 1)/2
        let l = omega.clone().cholesky().unwrap().l();
        let t = 2 * n;
        let scale = ((t as f64 - 1.0) / 2.0).sqrt();
        let mut returns = DMatrix::zeros(t, n);
        for k in 0..n {
            for j in 0..n {
                returns[(2 * k, j)] = mu[j] + scale * l[(j, k)];
                returns[(2 * k + 1, j)] = mu[j] - scale * l[(j, k)];
            }
        }
        let mut dates = vec![YearMonth::new(2000, 1).unwrap()];
        while dates.len() < t {
            let next = dates.last().unwrap().next();
            dates.push(next);
        }
        ReturnEsgPanel::new(
            dates,
            FOUR_ASSET_IDS
                .iter()
                .take(n)
                .map(|s| s.to_string())
                .collect(),
            returns,
            DMatrix::from_fn(t, n, |_, j| xi[j]),
            DMatrix::from_element(t, n, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn four_asset_panel_matches_direct_computation() {
        let u = four_asset_universe();
        let panel = panel_with_moments(&FOUR_ASSET_MU, &FOUR_ASSET_XI, u.omega());
        let b = risk_reducer_benchmark();
        let check = binding_check(&panel, b.weights()).unwrap();
        let direct = FrontierModel::new(&u, &b).unwrap();
        let s = compute_scalars(&u);
        assert!((check.e_minus_ratio - s.esg_return_alignment()).abs() < 1e-10);
        assert!((check.g_star.unwrap() - direct.g_star().unwrap().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn too_few_months_is_singular() {
        let panel = panel_with_moments(
            &FOUR_ASSET_MU,
            &FOUR_ASSET_XI,
            four_asset_universe().omega(),
        );
        let short = ReturnEsgPanel::new(
            panel.dates[..3].to_vec(),
            panel.asset_ids.clone(),
            panel.returns.rows(0, 3).into_owned(),
            panel.esg.rows(0, 3).into_owned(),
            panel.market_cap.rows(0, 3).into_owned(),
        )
        .unwrap();
        let b = risk_reducer_benchmark();
        assert!(matches!(
            binding_check(&short, b.weights()),
            Err(Error::SingularCovariance(_))
        ));
    }

    #[test]
    fn score_return_link_sets_the_sign() {
        let u = four_asset_universe();
        let noise = [0.004, -0.003, 0.002, -0.001];
        let b = risk_reducer_benchmark();
        let against: Vec<f64> = FOUR_ASSET_MU
            .iter()
            .zip(noise)
            .map(|(m, e)| -m + e)
            .collect();
        let check = binding_check(
            &panel_with_moments(&FOUR_ASSET_MU, &against, u.omega()),
            b.weights(),
        )
        .unwrap();
        assert!(check.e_minus_ratio < 0.0);
        assert!(check.g_star.unwrap() > 0.0);
        let along: Vec<f64> = FOUR_ASSET_MU
            .iter()
            .zip(noise)
            .map(|(m, e)| m + e)
            .collect();
        let check = binding_check(
            &panel_with_moments(&FOUR_ASSET_MU, &along, u.omega()),
            b.weights(),
        )
        .unwrap();
        assert!(check.e_minus_ratio > 0.0);
    }
}
