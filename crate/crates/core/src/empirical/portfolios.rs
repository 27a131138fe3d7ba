//! Size filtering, portfolio formation and benchmark/market proxies.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::panel::{ReturnEsgPanel, SectorMap};

/// Groups with fewer members than this are dropped.
pub const DEFAULT_MIN_ASSETS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum PortfolioScheme {
    Sectors(SectorMap),
    /// `k` groups sorted on time-average score, lowest scores first.
    EsgQuantiles(usize),
}

/// Portfolio-level panel plus the member assets of each portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioPanel {
    pub panel: ReturnEsgPanel,
    pub members: Vec<Vec<String>>,
    /// Groups dropped for having too few members, with their sizes.
    pub excluded: Vec<(String, usize)>,
}

/// Keeps the `pct` percent of assets with the largest time-average capitalization.
pub fn cap_filter(panel: &ReturnEsgPanel, pct: f64) -> Result<ReturnEsgPanel> {
    if !(pct > 0.0 && pct <= 100.0) {
        return Err(Error::InvalidInput(format!(
            "cap filter must lie in (0, 100], got {pct}"
        )));
    }
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let caps = panel.average_cap();
    let mut order: Vec<usize> = (0..panel.n_assets())
        .filter(|&j| !caps[j].is_nan())
        .collect();
    order.sort_by(|&i, &j| caps[j].total_cmp(&caps[i]).then(i.cmp(&j)));
    let keep = ((pct / 100.0) * panel.n_assets() as f64).ceil() as usize;
    order.truncate(keep);
    order.sort_unstable();
    Ok(panel.select_assets(&order))
}

fn nan_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .filter(|v| !v.is_nan())
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn nan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut any = false;
    let mut total = 0.0;
    for v in values.filter(|v| !v.is_nan()) {
        any = true;
        total += v;
    }
    if any {
        total
    } else {
        f64::NAN
    }
}

fn groups(
    panel: &ReturnEsgPanel,
    scheme: &PortfolioScheme,
) -> Result<BTreeMap<String, Vec<usize>>> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    match scheme {
        PortfolioScheme::Sectors(map) => {
            for (j, id) in panel.asset_ids.iter().enumerate() {
                let sector = map
                    .get(id)
                    .ok_or_else(|| Error::InvalidInput(format!("asset {id} has no sector")))?;
                out.entry(sector.clone()).or_default().push(j);
            }
        }
        PortfolioScheme::EsgQuantiles(k) => {
            let k = *k;
            if k == 0 {
                return Err(Error::InvalidInput(
                    "quantile count must be positive".into(),
                ));
            }
            let scores = panel.average_esg();
            let mut order: Vec<usize> = (0..panel.n_assets())
                .filter(|&j| !scores[j].is_nan())
                .collect();
            order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
            let n = order.len();
            let width = k.to_string().len().max(2);
            for (rank, &j) in order.iter().enumerate() {
                let g = rank * k / n;
                out.entry(format!("Q{:0width$}", g + 1))
                    .or_default()
                    .push(j);
            }
        }
    }
    Ok(out)
}

/// Equal-weighted portfolios after dropping the smallest assets.
///
/// Portfolio returns and scores are monthly cross-sectional means over
/// members with data; capitalization is the members' sum.
pub fn form_portfolios(
    panel: &ReturnEsgPanel,
    scheme: &PortfolioScheme,
    cap_filter_pct: f64,
    min_assets: usize,
) -> Result<PortfolioPanel> {
    let filtered = cap_filter(panel, cap_filter_pct)?;
    let mut labels = Vec::new();
    let mut members = Vec::new();
    let mut excluded = Vec::new();
    for (label, cols) in groups(&filtered, scheme)? {
        if cols.len() < min_assets {
            excluded.push((label, cols.len()));
        } else {
            labels.push(label);
            members.push(cols);
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let t = filtered.n_months();
    let p = members.len();
    let build = |src: &DMatrix<f64>, agg: fn(std::vec::IntoIter<f64>) -> f64| {
        DMatrix::from_fn(t, p, |i, g| {
            let cells: Vec<f64> = members[g].iter().map(|&j| src[(i, j)]).collect();
            agg(cells.into_iter())
        })
    };
    let returns = build(&filtered.returns, nan_mean);
    let esg = build(&filtered.esg, nan_mean);
    let caps = build(&filtered.market_cap, nan_sum);
    let member_ids = members
        .iter()
        .map(|cols| {
            cols.iter()
                .map(|&j| filtered.asset_ids[j].clone())
                .collect()
        })
        .collect();
    Ok(PortfolioPanel {
        panel: ReturnEsgPanel::new(filtered.dates.clone(), labels, returns, esg, caps)?,
        members: member_ids,
        excluded,
    })
}

/// Value weights of the `top_k` largest assets by final-month capitalization.
pub fn top_k_benchmark(panel: &ReturnEsgPanel, top_k: usize) -> Result<BTreeMap<String, f64>> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    if top_k == 0 {
        return Err(Error::InvalidInput(
            "benchmark size must be positive".into(),
        ));
    }
    let last = panel.n_months() - 1;
    let caps = panel.market_cap.row(last);
    let mut order: Vec<usize> = (0..panel.n_assets())
        .filter(|&j| caps[j].is_finite() && caps[j] > 0.0)
        .collect();
    order.sort_by(|&i, &j| caps[j].total_cmp(&caps[i]).then(i.cmp(&j)));
    order.truncate(top_k);
    let total: f64 = order.iter().map(|&j| caps[j]).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(
            "no positive final-month capitalization".into(),
        ));
    }
    Ok(order
        .into_iter()
        .map(|j| (panel.asset_ids[j].clone(), caps[j] / total))
        .collect())
}

/// Maps asset-level benchmark weights onto portfolios by membership and
/// renormalizes; constituents outside every portfolio are dropped.
pub fn portfolio_benchmark_weights(
    portfolios: &PortfolioPanel,
    asset_weights: &BTreeMap<String, f64>,
) -> Result<DVector<f64>> {
    let raw = DVector::from_iterator(
        portfolios.members.len(),
        portfolios.members.iter().map(|ids| {
            ids.iter()
                .filter_map(|id| asset_weights.get(id))
                .sum::<f64>()
        }),
    );
    let total = raw.sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(
            "no benchmark constituent belongs to a retained portfolio".into(),
        ));
    }
    Ok(raw / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Value,
    Equal,
}

/// Monthly return of a portfolio of `columns`, weighted by same-month
/// capitalization (or equally) over members with a return that month.
pub fn weighted_returns(
    panel: &ReturnEsgPanel,
    columns: &[usize],
    weighting: Weighting,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(panel.n_months());
    for t in 0..panel.n_months() {
        let mut num = 0.0;
        let mut den = 0.0;
        for &j in columns {
            let r = panel.returns[(t, j)];
            let w = match weighting {
                Weighting::Value => panel.market_cap[(t, j)],
                Weighting::Equal => 1.0,
            };
            if r.is_nan() || !(w > 0.0) {
                continue;
            }
            num += w * r;
            den += w;
        }
        if den == 0.0 {
            return Err(Error::InvalidInput(format!(
                "no return available for the proxy portfolio in {}",
                panel.dates[t]
            )));
        }
        out[t] = num / den;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::panel::YearMonth;

    fn panel(n: usize, t: usize) -> ReturnEsgPanel {
        let mut d = vec![YearMonth::new(2020, 1).unwrap()];
        while d.len() < t {
            let next = d.last().unwrap().next();
            d.push(next);
        }
        ReturnEsgPanel::new(
            d,
            (0..n).map(|j| format!("S{j:03}")).collect(),
            DMatrix::from_fn(t, n, |i, j| 0.001 * (i as f64) + 0.01 * (j as f64)),
            DMatrix::from_fn(t, n, |_, j| j as f64),
            DMatrix::from_fn(t, n, |_, j| (j + 1) as f64),
        )
        .unwrap()
    }

    #[test]
    fn single_sector_is_cross_sectional_mean() {
        let p = panel(8, 3);
        let map = p
            .asset_ids
            .iter()
            .map(|id| (id.clone(), "all".to_string()))
            .collect();
        let f = form_portfolios(&p, &PortfolioScheme::Sectors(map), 100.0, 6).unwrap();
        assert_eq!(f.panel.n_assets(), 1);
        for t in 0..3 {
            let mean = p.returns.row(t).mean();
            assert!((f.panel.returns[(t, 0)] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn deciles_split_evenly() {
        let p = panel(100, 2);
        let f = form_portfolios(&p, &PortfolioScheme::EsgQuantiles(10), 100.0, 6).unwrap();
        assert_eq!(f.panel.n_assets(), 10);
        assert!(f.members.iter().all(|m| m.len() == 10));
        assert_eq!(f.panel.asset_ids[0], "Q01");
        assert_eq!(f.members[0][0], "S000");
    }

    #[test]
    fn small_sector_excluded() {
        let p = panel(11, 2);
        let map = p
            .asset_ids
            .iter()
            .enumerate()
            .map(|(j, id)| (id.clone(), if j < 6 { "big" } else { "small" }.to_string()))
            .collect();
        let f = form_portfolios(&p, &PortfolioScheme::Sectors(map), 100.0, 6).unwrap();
        assert_eq!(f.panel.asset_ids, vec!["big"]);
        assert_eq!(f.excluded, vec![("small".to_string(), 5)]);
    }

    #[test]
    fn cap_filter_keeps_largest() {
        let p = panel(8, 2);
        let f = cap_filter(&p, 75.0).unwrap();
        assert_eq!(f.n_assets(), 6);
        assert_eq!(f.asset_ids[0], "S002");
    }

    #[test]
    fn benchmark_mapping() {
        let p = panel(12, 2);
        let map = p
            .asset_ids
            .iter()
            .enumerate()
            .map(|(j, id)| {
                (
                    id.clone(),
                    if j % 2 == 0 { "even" } else { "odd" }.to_string(),
                )
            })
            .collect();
        let f = form_portfolios(&p, &PortfolioScheme::Sectors(map), 100.0, 6).unwrap();
        let bench = top_k_benchmark(&p, 2).unwrap();
        assert_eq!(bench.len(), 2);
        assert!((bench["S011"] - 12.0 / 23.0).abs() < 1e-15);
        let w = portfolio_benchmark_weights(&f, &bench).unwrap();
        assert!((w.sum() - 1.0).abs() < 1e-15);
        assert!((w[0] - 11.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn value_weighted_proxy() {
        let p = panel(2, 1);
        let r = weighted_returns(&p, &[0, 1], Weighting::Value).unwrap();
        assert!((r[0] - (1.0 * 0.0 + 2.0 * 0.01) / 3.0).abs() < 1e-15);
        let e = weighted_returns(&p, &[0, 1], Weighting::Equal).unwrap();
        assert!((e[0] - 0.005).abs() < 1e-15);
    }
}
