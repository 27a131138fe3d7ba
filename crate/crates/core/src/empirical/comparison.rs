//! Ranking fitted models and the coefficient-over-standard-error table.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::format_g;

use super::regression::RegressionFit;

/// Significance level for the ESG premium flag.
pub const PREMIUM_SIGNIFICANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model_name: String,
    pub r2_adjusted: f64,
    pub aic: f64,
    pub n_obs: usize,
    pub gamma: Option<f64>,
    pub gamma_p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelComparison {
    /// Ascending AIC; ties keep input order.
    pub rows: Vec<ComparisonRow>,
    /// Every model with a score term has `Γ̂ > 0` with p-value below 1%.
    /// False when no model has a score term.
    pub esg_premium_significant: bool,
}

pub fn model_comparison(fits: &[RegressionFit]) -> Result<ModelComparison> {
    if let Some(first) = fits.first() {
        if let Some(other) = fits.iter().find(|f| f.n_obs != first.n_obs) {
            return Err(Error::MismatchedSamples(format!(
                "{} has {} observations, {} has {}",
                first.model_name, first.n_obs, other.model_name, other.n_obs
            )));
        }
    }
    let mut rows: Vec<ComparisonRow> = fits
        .iter()
        .map(|f| {
            let gamma = f.coefficient("gamma");
            ComparisonRow {
                model_name: f.model_name.clone(),
                r2_adjusted: f.r2_adjusted,
                aic: f.aic,
                n_obs: f.n_obs,
                gamma: gamma.map(|c| c.estimate),
                gamma_p_value: gamma.map(|c| c.p_value),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    let esg: Vec<&ComparisonRow> = rows.iter().filter(|r| r.gamma.is_some()).collect();
    let esg_premium_significant = !esg.is_empty()
        && esg
            .iter()
            .all(|r| r.gamma.unwrap() > 0.0 && r.gamma_p_value.unwrap() < PREMIUM_SIGNIFICANCE);
    Ok(ModelComparison {
        rows,
        esg_premium_significant,
    })
}

fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Plain-text table: one column per model, estimates with significance
/// stars over parenthesized standard errors, then adjusted R² (percent) and AIC.
pub fn format_table(fits: &[RegressionFit]) -> String {
    let mut names: Vec<&str> = Vec::new();
    for f in fits {
        for c in &f.coefficients {
            if !names.contains(&c.name.as_str()) {
                names.push(&c.name);
            }
        }
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    header.extend(fits.iter().map(|f| f.model_name.clone()));
    rows.push(header);
    for name in &names {
        let mut est = vec![name.to_string()];
        let mut se = vec![String::new()];
        for f in fits {
            match f.coefficient(name) {
                Some(c) => {
                    est.push(format!("{}{}", format_g(c.estimate), stars(c.p_value)));
                    se.push(format!("({})", format_g(c.std_error)));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        rows.push(est);
        rows.push(se);
    }
    let mut r2 = vec!["r2_adj_pct".to_string()];
    r2.extend(fits.iter().map(|f| format_g(100.0 * f.r2_adjusted)));
    rows.push(r2);
    let mut aic = vec!["aic".to_string()];
    aic.extend(fits.iter().map(|f| format_g(f.aic)));
    rows.push(aic);
    let mut n = vec!["n_obs".to_string()];
    n.extend(fits.iter().map(|f| f.n_obs.to_string()));
    rows.push(n);

    let cols = rows[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{:>w$}", cell, w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out.push_str("significance: * p<0.10, ** p<0.05, *** p<0.01\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::regression::{cross_sectional_regress, Regressor};

    fn fit(name: &str, y: &[f64], xs: Vec<Regressor>) -> RegressionFit {
        cross_sectional_regress(y, &xs, name).unwrap()
    }

    #[test]
    fn stable_sort_and_flag() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let z: Vec<f64> = (0..30).map(|i| (i as f64 * 1.91).cos()).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&z)
            .enumerate()
            .map(|(i, (a, b))| 1.0 + a - 2.0 * b + 0.01 * ((i * 7 % 5) as f64))
            .collect();
        let small = fit("small", &y, vec![Regressor::new("b1", x.clone())]);
        let dup = small.clone();
        let big = fit(
            "big",
            &y,
            vec![
                Regressor::new("b1", x.clone()),
                Regressor::negated("gamma", z.clone()),
            ],
        );
        let cmp = model_comparison(&[small.clone(), dup, big]).unwrap();
        assert_eq!(cmp.rows[0].model_name, "big");
        assert_eq!(cmp.rows[1].model_name, "small");
        assert_eq!(cmp.rows[2].model_name, "small");
        assert!(cmp.esg_premium_significant);
        assert!(!model_comparison(&[small]).unwrap().esg_premium_significant);
        let table = format_table(&[cmp_fit(&y, &x)]);
        assert!(table.contains("***"));
        assert!(table.contains('('));
    }

    fn cmp_fit(y: &[f64], x: &[f64]) -> RegressionFit {
        fit("capm", y, vec![Regressor::new("b1", x.to_vec())])
    }

    #[test]
    fn mismatched_samples() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let a = fit("a", &y, vec![Regressor::new("b1", x.clone())]);
        let b = fit("b", &y[..8], vec![Regressor::new("b1", x[..8].to_vec())]);
        assert!(matches!(
            model_comparison(&[a, b]),
            Err(Error::MismatchedSamples(_))
        ));
    }
}
