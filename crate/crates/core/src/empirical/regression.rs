//! Cross-sectional OLS with the model family used to price ESG scores.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// `|R_kk|` below this fraction of the largest diagonal of R flags a dependent column.
const RANK_TOLERANCE: f64 = 1e-10;

/// One explanatory variable. When `negate` is set the coefficient is
/// reported with its sign flipped, for terms that enter the pricing
/// equation with a minus sign.
#[derive(Debug, Clone, PartialEq)]
pub struct Regressor {
    pub name: String,
    pub values: Vec<f64>,
    pub negate: bool,
}

impl Regressor {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
            negate: false,
        }
    }

    pub fn negated(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            negate: true,
            ..Self::new(name, values)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub model_name: String,
    /// Intercept first, labelled `a`.
    pub coefficients: Vec<Coefficient>,
    pub r2: f64,
    pub r2_adjusted: f64,
    /// `n·ln(RSS/n) + 2p`, `p` counting the intercept.
    pub aic: f64,
    pub rss: f64,
    pub n_obs: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// OLS of `y` on an intercept and `regressors`, via Householder QR.
pub fn cross_sectional_regress(
    y: &[f64],
    regressors: &[Regressor],
    model_name: &str,
) -> Result<RegressionFit> {
    let n = y.len();
    let p = regressors.len() + 1;
    if let Some(r) = regressors.iter().find(|r| r.values.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "regressor {} has {} values, response has {n}",
            r.name,
            r.values.len()
        )));
    }
    if y.iter()
        .chain(regressors.iter().flat_map(|r| r.values.iter()))
        .any(|v| !v.is_finite())
    {
        return Err(Error::InvalidInput("regression data must be finite".into()));
    }
    if n <= p {
        return Err(Error::InvalidInput(format!(
            "{n} observations cannot identify {p} coefficients"
        )));
    }
    let mut names = vec!["a".to_string()];
    names.extend(regressors.iter().map(|r| r.name.clone()));
    let x = DMatrix::from_fn(n, p, |i, k| {
        if k == 0 {
            1.0
        } else {
            regressors[k - 1].values[i]
        }
    });
    let yv = DVector::from_column_slice(y);

    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    if let Some(k) = (0..p).find(|&k| !(r[(k, k)].abs() > RANK_TOLERANCE * max_diag)) {
        return Err(Error::RankDeficientDesign {
            column: names[k].clone(),
        });
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficientDesign {
            column: names[p - 1].clone(),
        })?;
    let residuals = &yv - &x * &beta;
    let rss = residuals.norm_squared();
    let y_mean = yv.mean();
    let tss = yv.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>();
    let dof = (n - p) as f64;
    let sigma2 = rss / dof;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("triangular factor checked above");
    let t_dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");

    let coefficients = (0..p)
        .map(|k| {
            let sign = if k > 0 && regressors[k - 1].negate {
                -1.0
            } else {
                1.0
            };
            let std_error = (sigma2 * r_inv.row(k).norm_squared()).sqrt();
            let estimate = sign * beta[k];
            let t_stat = estimate / std_error;
            let p_value = if t_stat.is_nan() {
                f64::NAN
            } else {
                2.0 * (1.0 - t_dist.cdf(t_stat.abs()))
            };
            Coefficient {
                name: names[k].clone(),
                estimate,
                std_error,
                t_stat,
                p_value,
            }
        })
        .collect();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { f64::NAN };
    Ok(RegressionFit {
        model_name: model_name.to_string(),
        coefficients,
        r2,
        r2_adjusted: 1.0 - (1.0 - r2) * (n as f64 - 1.0) / dof,
        aic: n as f64 * (rss / n as f64).ln() + 2.0 * p as f64,
        rss,
        n_obs: n,
        residuals: residuals.iter().copied().collect(),
    })
}

/// Per-asset inputs of the cross-sectional regressions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossSection {
    pub asset_ids: Vec<String>,
    pub mean_return: Vec<f64>,
    pub beta_m: Vec<f64>,
    pub beta_e: Vec<f64>,
    pub xi: Vec<f64>,
    /// Univariate SMB, HML, RMW, CMA loadings, when factors were supplied.
    pub factor_loadings: Option<[Vec<f64>; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Capm,
    Ff3,
    Ff5,
    Tev,
    Esg,
    CapmEsg,
    TevEsg,
    Ff5TevEsg,
}

pub const FACTOR_NAMES: [&str; 4] = ["b_smb", "b_hml", "b_rmw", "b_cma"];

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Capm,
        ModelKind::Ff3,
        ModelKind::Ff5,
        ModelKind::Tev,
        ModelKind::Esg,
        ModelKind::CapmEsg,
        ModelKind::TevEsg,
        ModelKind::Ff5TevEsg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Capm => "capm",
            ModelKind::Ff3 => "ff3",
            ModelKind::Ff5 => "ff5",
            ModelKind::Tev => "tev",
            ModelKind::Esg => "esg",
            ModelKind::CapmEsg => "capm_esg",
            ModelKind::TevEsg => "tev_esg",
            ModelKind::Ff5TevEsg => "ff5_tev_esg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn needs_factors(self) -> bool {
        matches!(self, ModelKind::Ff3 | ModelKind::Ff5 | ModelKind::Ff5TevEsg)
    }

    pub fn has_esg(self) -> bool {
        matches!(
            self,
            ModelKind::Esg | ModelKind::CapmEsg | ModelKind::TevEsg | ModelKind::Ff5TevEsg
        )
    }

    /// Regressors in reporting order: `b1` (market beta), factor loadings,
    /// `b2` (benchmark-residual beta, sign flipped), `gamma` (score, sign flipped).
    pub fn regressors(self, cs: &CrossSection) -> Result<Vec<Regressor>> {
        let market = Regressor::new("b1", cs.beta_m.clone());
        let residual = Regressor::negated("b2", cs.beta_e.clone());
        let esg = Regressor::negated("gamma", cs.xi.clone());
        let factors = |k: usize| -> Result<Vec<Regressor>> {
            let loads = cs.factor_loadings.as_ref().ok_or_else(|| {
                Error::InvalidInput(format!("model {} needs factor series", self.name()))
            })?;
            Ok((0..k)
                .map(|i| Regressor::new(FACTOR_NAMES[i], loads[i].clone()))
                .collect())
        };
        Ok(match self {
            ModelKind::Capm => vec![market],
            ModelKind::Ff3 => [vec![market], factors(2)?].concat(),
            ModelKind::Ff5 => [vec![market], factors(4)?].concat(),
            ModelKind::Tev => vec![market, residual],
            ModelKind::Esg => vec![esg],
            ModelKind::CapmEsg => vec![market, esg],
            ModelKind::TevEsg => vec![market, residual, esg],
            ModelKind::Ff5TevEsg => [vec![market], factors(4)?, vec![residual, esg]].concat(),
        })
    }
}

pub fn fit_model(cs: &CrossSection, model: ModelKind) -> Result<RegressionFit> {
    cross_sectional_regress(&cs.mean_return, &model.regressors(cs)?, model.name())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let z: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        (x, z)
    }

    #[test]
    fn self_regression() {
        let (x, _) = sample(50, 1);
        let fit = cross_sectional_regress(&x, &[Regressor::new("x", x.clone())], "self").unwrap();
        assert!((fit.coefficients[1].estimate - 1.0).abs() < 1e-12);
        assert!(fit.coefficients[0].estimate.abs() < 1e-12);
        assert!((fit.r2_adjusted - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residuals_orthogonal_and_statistics() {
        let (x, z) = sample(80, 2);
        let y: Vec<f64> = x
            .iter()
            .zip(&z)
            .map(|(a, b)| 0.3 + 2.0 * a + 0.5 * b)
            .collect();
        let noise: Vec<f64> = sample(80, 3).0;
        let y: Vec<f64> = y.iter().zip(&noise).map(|(a, e)| a + 0.1 * e).collect();
        let fit = cross_sectional_regress(
            &y,
            &[
                Regressor::new("x", x.clone()),
                Regressor::negated("z", z.clone()),
            ],
            "m",
        )
        .unwrap();
        let scale: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for col in [vec![1.0; 80], x.clone(), z.clone()] {
            let dot: f64 = col.iter().zip(&fit.residuals).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-10 * scale);
        }
        let zc = fit.coefficient("z").unwrap();
        assert!((zc.estimate + 0.5).abs() < 0.05);
        assert!(zc.p_value < 1e-6);
        // AIC and adjusted R² by their definitions
        let n = 80.0;
        assert!((fit.aic - (n * (fit.rss / n).ln() + 6.0)).abs() < 1e-10);
        assert!((fit.r2_adjusted - (1.0 - (1.0 - fit.r2) * 79.0 / 77.0)).abs() < 1e-12);
        // standard errors against the normal-equation inverse
        let xm = DMatrix::from_fn(80, 3, |i, k| match k {
            0 => 1.0,
            1 => x[i],
            _ => z[i],
        });
        let inv = (xm.transpose() * &xm).try_inverse().unwrap();
        let s2 = fit.rss / 77.0;
        for k in 0..3 {
            assert!((fit.coefficients[k].std_error - (s2 * inv[(k, k)]).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficiency_reported() {
        let (x, _) = sample(20, 4);
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let err = cross_sectional_regress(
            &x,
            &[Regressor::new("x", x.clone()), Regressor::new("x2", twice)],
            "bad",
        )
        .unwrap_err();
        assert!(matches!(err, Error::RankDeficientDesign { column } if column == "x2"));
        let constant = vec![1.0; 20];
        assert!(cross_sectional_regress(&x, &[Regressor::new("c", constant)], "bad").is_err());
    }

    #[test]
    fn models_select_regressors() {
        let cs = CrossSection {
            asset_ids: vec![],
            mean_return: vec![],
            beta_m: vec![],
            beta_e: vec![],
            xi: vec![],
            factor_loadings: None,
        };
        assert_eq!(ModelKind::TevEsg.regressors(&cs).unwrap().len(), 3);
        assert!(ModelKind::Ff5.regressors(&cs).is_err());
        assert_eq!(ModelKind::parse("ff5_tev_esg"), Some(ModelKind::Ff5TevEsg));
        assert!(ModelKind::ALL.iter().filter(|m| m.has_esg()).count() == 4);
    }
}
