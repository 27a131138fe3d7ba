//! Winsorization and score normalization.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::panel::ReturnEsgPanel;

pub const DEFAULT_LOWER_PCT: f64 = 2.5;
pub const DEFAULT_UPPER_PCT: f64 = 97.5;

/// Which observations share a pair of percentile bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WinsorScope {
    /// One pair of bounds for the whole panel.
    #[default]
    Pooled,
    /// Separate bounds for every month's cross-section.
    PerMonth,
}

/// Nearest-rank percentile of sorted data: the value at rank `⌈p/100 · n⌉`.
///
/// Unlike interpolated percentiles this always returns an observed value,
/// which makes clipping to it idempotent.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

fn bounds(values: &mut [f64], lower: f64, upper: f64) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some((nearest_rank(values, lower), nearest_rank(values, upper)))
}

fn clip(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if x.is_nan() {
        x
    } else {
        x.clamp(lo, hi)
    }
}

/// Clips returns to pooled percentile bounds. Missing cells stay missing.
pub fn winsorize(panel: &ReturnEsgPanel, lower_pct: f64, upper_pct: f64) -> Result<ReturnEsgPanel> {
    winsorize_with(panel, lower_pct, upper_pct, WinsorScope::Pooled)
}

pub fn winsorize_with(
    panel: &ReturnEsgPanel,
    lower_pct: f64,
    upper_pct: f64,
    scope: WinsorScope,
) -> Result<ReturnEsgPanel> {
    if !(lower_pct > 0.0 && lower_pct < 50.0 && upper_pct > 50.0 && upper_pct < 100.0) {
        return Err(Error::InvalidInput(format!(
            "winsor bounds must lie in (0, 50) and (50, 100), got {lower_pct} and {upper_pct}"
        )));
    }
    let mut out = panel.clone();
    match scope {
        WinsorScope::Pooled => {
            let mut values: Vec<f64> = panel
                .returns
                .iter()
                .copied()
                .filter(|v| !v.is_nan())
                .collect();
            let b = bounds(&mut values, lower_pct, upper_pct).ok_or(Error::EmptyPanel)?;
            out.returns.apply(|x| *x = clip(*x, b));
        }
        WinsorScope::PerMonth => {
            let mut any = false;
            for t in 0..panel.n_months() {
                let mut values: Vec<f64> = panel
                    .returns
                    .row(t)
                    .iter()
                    .copied()
                    .filter(|v| !v.is_nan())
                    .collect();
                if let Some(b) = bounds(&mut values, lower_pct, upper_pct) {
                    any = true;
                    out.returns.row_mut(t).apply(|x| *x = clip(*x, b));
                }
            }
            if !any {
                return Err(Error::EmptyPanel);
            }
        }
    }
    Ok(out)
}

/// Carries each asset's last released score forward over missing months.
pub fn forward_fill(scores: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = scores.clone();
    for mut col in out.column_iter_mut() {
        let mut last = f64::NAN;
        for v in col.iter_mut() {
            if v.is_nan() {
                *v = last;
            } else {
                last = *v;
            }
        }
    }
    out
}

/// Forward-fills scores, then subtracts each month's cross-sectional mean.
pub fn normalize_esg(panel: &ReturnEsgPanel) -> Result<ReturnEsgPanel> {
    let mut esg = forward_fill(&panel.esg);
    for (t, mut row) in esg.row_iter_mut().enumerate() {
        let (sum, n) = row
            .iter()
            .filter(|v| !v.is_nan())
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            return Err(Error::NoScoresInMonth(panel.dates[t].to_string()));
        }
        let mean = sum / n as f64;
        row.apply(|v| *v -= mean);
    }
    Ok(ReturnEsgPanel {
        esg,
        ..panel.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::panel::YearMonth;

    fn months(n: usize) -> Vec<YearMonth> {
        let mut d = vec![YearMonth::new(2020, 1).unwrap()];
        while d.len() < n {
            let next = d.last().unwrap().next();
            d.push(next);
        }
        d
    }

    fn panel(returns: DMatrix<f64>, esg: DMatrix<f64>) -> ReturnEsgPanel {
        let (t, n) = returns.shape();
        ReturnEsgPanel::new(
            months(t),
            (0..n).map(|j| format!("S{j}")).collect(),
            returns,
            esg,
            DMatrix::from_element(t, n, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn nearest_rank_percentiles() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 97.5), 975.0);
        assert_eq!(nearest_rank(&v, 2.5), 25.0);
        assert_eq!(nearest_rank(&[3.0], 2.5), 3.0);
    }

    #[test]
    fn clips_single_outlier() {
        let mut r = DMatrix::from_fn(100, 10, |i, j| ((i * 10 + j) as f64) * 1e-4);
        r[(42, 3)] = 3.0;
        let p = panel(r.clone(), DMatrix::zeros(100, 10));
        let w = winsorize(&p, 2.5, 97.5).unwrap();
        let mut sorted: Vec<f64> = r.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(w.returns[(42, 3)], sorted[974]);
        let again = winsorize(&w, 2.5, 97.5).unwrap();
        assert_eq!(again.returns, w.returns);
    }

    #[test]
    fn constant_panel_unchanged_and_missing_kept() {
        let mut r = DMatrix::from_element(5, 4, 0.01);
        r[(1, 1)] = f64::NAN;
        let p = panel(r, DMatrix::zeros(5, 4));
        let w = winsorize_with(&p, 2.5, 97.5, WinsorScope::PerMonth).unwrap();
        assert!(w.returns[(1, 1)].is_nan());
        assert_eq!(w.returns[(0, 0)], 0.01);
        assert!(winsorize(&p, 60.0, 97.5).is_err());
    }

    #[test]
    fn forward_fill_then_demean() {
        let nan = f64::NAN;
        let esg = DMatrix::from_row_slice(3, 2, &[40.0, 60.0, nan, 70.0, nan, nan]);
        let p = panel(DMatrix::zeros(3, 2), esg);
        let n = normalize_esg(&p).unwrap();
        assert_eq!(
            n.esg.row(0).iter().copied().collect::<Vec<_>>(),
            vec![-10.0, 10.0]
        );
        assert_eq!(
            n.esg.row(1).iter().copied().collect::<Vec<_>>(),
            vec![-15.0, 15.0]
        );
        assert_eq!(
            n.esg.row(2).iter().copied().collect::<Vec<_>>(),
            vec![-15.0, 15.0]
        );
        let empty = panel(
            DMatrix::zeros(2, 2),
            DMatrix::from_row_slice(2, 2, &[nan, nan, 1.0, 2.0]),
        );
        assert!(matches!(normalize_esg(&empty), Err(Error::NoScoresInMonth(m)) if m == "2020-01"));
    }
}
