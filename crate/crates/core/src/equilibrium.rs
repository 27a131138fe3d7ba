//! Equilibrium with mandated institutional investors and mean-variance retail investors.
//!
//! Expected returns are taken as given. Each investor's demand is solved in
//! closed form, demands are aggregated into the market portfolio, and the
//! pricing constants are read off the clearing condition
//!
//! ```text
//! μ = r_f*·1 + θ1·Ω x_m − θ2·Ω x̄0 − Γ·ξ
//! ```
//!
//! where `x̄0` is the wealth-share weighted average of institutional benchmarks.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frontier::SINGULAR_ESG_TOLERANCE;
use crate::linalg::quad_form;
use crate::market::{compute_scalars, Benchmark, MarketUniverse};

#[derive(Debug, Clone, PartialEq)]
pub struct InstitutionalInvestor {
    pub wealth: f64,
    pub risk_aversion: f64,
    pub benchmark: Benchmark,
    pub h_target: f64,
}

impl InstitutionalInvestor {
    pub fn new(
        wealth: f64,
        risk_aversion: f64,
        benchmark: Benchmark,
        h_target: f64,
    ) -> Result<Self> {
        check_positive("institution wealth", wealth)?;
        check_positive("institution risk aversion", risk_aversion)?;
        if !h_target.is_finite() {
            return Err(Error::InvalidInput("h_target must be finite".into()));
        }
        Ok(Self {
            wealth,
            risk_aversion,
            benchmark,
            h_target,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetailInvestor {
    pub wealth: f64,
    pub risk_aversion: f64,
}

impl RetailInvestor {
    pub fn new(wealth: f64, risk_aversion: f64) -> Result<Self> {
        check_positive("retail wealth", wealth)?;
        check_positive("retail risk aversion", risk_aversion)?;
        Ok(Self {
            wealth,
            risk_aversion,
        })
    }
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidInput(format!(
            "{what} must be positive, got {v}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EquilibriumEconomy {
    pub universe: MarketUniverse,
    pub institutions: Vec<InstitutionalInvestor>,
    pub retail: Vec<RetailInvestor>,
    pub risk_free: f64,
}

impl EquilibriumEconomy {
    pub fn new(
        universe: MarketUniverse,
        institutions: Vec<InstitutionalInvestor>,
        retail: Vec<RetailInvestor>,
        risk_free: f64,
    ) -> Result<Self> {
        if institutions.is_empty() && retail.is_empty() {
            return Err(Error::InvalidInput("economy has no investors".into()));
        }
        if !risk_free.is_finite() {
            return Err(Error::InvalidInput("risk-free rate must be finite".into()));
        }
        for inst in &institutions {
            universe.check_len("institution benchmark", inst.benchmark.len())?;
        }
        Ok(Self {
            universe,
            institutions,
            retail,
            risk_free,
        })
    }

    pub fn market_wealth(&self) -> f64 {
        self.institutions.iter().map(|i| i.wealth).sum::<f64>()
            + self.retail.iter().map(|r| r.wealth).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstitutionalOptimum {
    pub weights: DVector<f64>,
    pub omega1: f64,
    pub omega2: f64,
    pub binding: bool,
}

/// Optimal demand of one institution: `x = x0 + (1/a)Ω⁻¹(μ − ω1·1 − ω2·ξ)`.
///
/// The mandate binds when the unconstrained active ESG score
/// `(E − (A/C)A_E)/a` falls strictly short of `H`; then
/// `ω2 = [(E − (A/C)A_E) − a·H] / (B_E − Z·A_E) < 0` and `ω1 = A/C − ω2·Z`.
pub fn institutional_optimum(
    universe: &MarketUniverse,
    investor: &InstitutionalInvestor,
) -> Result<InstitutionalOptimum> {
    universe.check_len("institution benchmark", investor.benchmark.len())?;
    let s = compute_scalars(universe);
    s.require_non_degenerate()?;
    let a = investor.risk_aversion;
    let alignment = s.esg_return_alignment();
    let binding = alignment / a < investor.h_target;
    let (omega1, omega2) = if binding {
        let dispersion = s.esg_dispersion();
        if !(dispersion > SINGULAR_ESG_TOLERANCE * s.b_e.abs()) {
            return Err(Error::SingularEsgDirection);
        }
        let omega2 = (alignment - a * investor.h_target) / dispersion;
        (s.mvp_mean() - omega2 * s.z, omega2)
    } else {
        (s.mvp_mean(), 0.0)
    };
    let tilt = universe.inv_mu() - universe.inv_one() * omega1 - universe.inv_xi() * omega2;
    Ok(InstitutionalOptimum {
        weights: investor.benchmark.weights() + tilt / a,
        omega1,
        omega2,
        binding,
    })
}

/// Risky-asset demand `(1/a)Ω⁻¹(μ − r_f·1)`; the remainder sits in the risk-free asset.
pub fn retail_optimum(
    universe: &MarketUniverse,
    investor: &RetailInvestor,
    risk_free: f64,
) -> Result<DVector<f64>> {
    if !risk_free.is_finite() {
        return Err(Error::InvalidInput("risk-free rate must be finite".into()));
    }
    Ok((universe.inv_mu() - universe.inv_one() * risk_free) / investor.risk_aversion)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumPricing {
    pub r_f_star: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub gamma: f64,
    /// `Σ Wᵢ/aᵢ + Σ W_l/a_l`
    pub delta: f64,
    /// Wealth-share weighted institutional benchmark `Σ Wᵢ x0i / Σ Wᵢ` (zero without institutions).
    #[serde(serialize_with = "crate::io::serialize_dvector")]
    pub aggregate_benchmark: DVector<f64>,
    /// Unnormalized `Σ Wᵢ x0i`.
    #[serde(serialize_with = "crate::io::serialize_dvector")]
    pub raw_aggregate_benchmark: DVector<f64>,
    /// Indices of institutions whose mandate binds.
    pub binding_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketClearing {
    pub market_weights: DVector<f64>,
    pub pricing: EquilibriumPricing,
    pub institutional: Vec<InstitutionalOptimum>,
    pub retail: Vec<DVector<f64>>,
    pub market_wealth: f64,
}

pub fn clear_market(economy: &EquilibriumEconomy) -> Result<MarketClearing> {
    clear_market_with(economy, Execution::default())
}

pub fn clear_market_with(economy: &EquilibriumEconomy, exec: Execution) -> Result<MarketClearing> {
    let u = &economy.universe;
    let n = u.len();
    let institutional = exec
        .map(&economy.institutions, |inv| institutional_optimum(u, inv))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let retail = economy
        .retail
        .iter()
        .map(|inv| retail_optimum(u, inv, economy.risk_free))
        .collect::<Result<Vec<_>>>()?;

    let market_wealth = economy.market_wealth();
    let mut holdings = DVector::zeros(n);
    let mut raw_benchmark = DVector::zeros(n);
    let mut delta = 0.0;
    let mut rate_sum = 0.0;
    let mut gamma_sum = 0.0;
    let mut institutional_wealth = 0.0;
    let mut binding_set = Vec::new();
    for (k, (inv, opt)) in economy.institutions.iter().zip(&institutional).enumerate() {
        let tolerance = inv.wealth / inv.risk_aversion;
        holdings += &opt.weights * inv.wealth;
        raw_benchmark += inv.benchmark.weights() * inv.wealth;
        institutional_wealth += inv.wealth;
        delta += tolerance;
        rate_sum += opt.omega1 * tolerance;
        gamma_sum -= opt.omega2 * tolerance;
        if opt.binding {
            binding_set.push(k);
        }
    }
    for (inv, y) in economy.retail.iter().zip(&retail) {
        let tolerance = inv.wealth / inv.risk_aversion;
        holdings += y * inv.wealth;
        delta += tolerance;
        rate_sum += economy.risk_free * tolerance;
    }
    let aggregate_benchmark = if institutional_wealth > 0.0 {
        &raw_benchmark / institutional_wealth
    } else {
        DVector::zeros(n)
    };

    Ok(MarketClearing {
        market_weights: holdings / market_wealth,
        pricing: EquilibriumPricing {
            r_f_star: rate_sum / delta,
            theta1: market_wealth / delta,
            theta2: institutional_wealth / delta,
            gamma: gamma_sum / delta,
            delta,
            aggregate_benchmark,
            raw_aggregate_benchmark: raw_benchmark,
            binding_set,
        },
        institutional,
        retail,
        market_wealth,
    })
}

/// Pricing for an economy whose institutions all have `H = 0`, where every
/// institution shares the same multipliers `ω1`, `ω2`.
pub fn pricing_homogeneous(economy: &EquilibriumEconomy) -> Result<EquilibriumPricing> {
    if economy.institutions.iter().any(|i| i.h_target != 0.0) {
        return Err(Error::InvalidInput(
            "homogeneous pricing requires every ESG target to be zero".into(),
        ));
    }
    let u = &economy.universe;
    let s = compute_scalars(u);
    s.require_non_degenerate()?;
    let binding = s.esg_return_alignment() < 0.0;
    let (omega1, omega2) = if binding && !economy.institutions.is_empty() {
        let dispersion = s.esg_dispersion();
        if !(dispersion > SINGULAR_ESG_TOLERANCE * s.b_e.abs()) {
            return Err(Error::SingularEsgDirection);
        }
        let omega2 = s.esg_return_alignment() / dispersion;
        (s.mvp_mean() - omega2 * s.z, omega2)
    } else {
        (s.mvp_mean(), 0.0)
    };
    let inst_tolerance: f64 = economy
        .institutions
        .iter()
        .map(|i| i.wealth / i.risk_aversion)
        .sum();
    let retail_tolerance: f64 = economy
        .retail
        .iter()
        .map(|r| r.wealth / r.risk_aversion)
        .sum();
    let delta = inst_tolerance + retail_tolerance;
    let institutional_wealth: f64 = economy.institutions.iter().map(|i| i.wealth).sum();
    let mut raw = DVector::zeros(u.len());
    for inst in &economy.institutions {
        raw += inst.benchmark.weights() * inst.wealth;
    }
    let aggregate = if institutional_wealth > 0.0 {
        &raw / institutional_wealth
    } else {
        DVector::zeros(u.len())
    };
    Ok(EquilibriumPricing {
        r_f_star: (omega1 * inst_tolerance + retail_tolerance * economy.risk_free) / delta,
        theta1: economy.market_wealth() / delta,
        theta2: institutional_wealth / delta,
        gamma: -omega2 * inst_tolerance / delta,
        delta,
        aggregate_benchmark: aggregate,
        raw_aggregate_benchmark: raw,
        binding_set: if binding {
            (0..economy.institutions.len()).collect()
        } else {
            Vec::new()
        },
    })
}

/// Expected returns implied by the pricing constants.
pub fn equilibrium_mu(
    pricing: &EquilibriumPricing,
    universe: &MarketUniverse,
    market_weights: &DVector<f64>,
) -> Result<DVector<f64>> {
    universe.check_len("market weights", market_weights.len())?;
    universe.check_len("aggregate benchmark", pricing.aggregate_benchmark.len())?;
    let omega = universe.omega();
    Ok(DVector::from_element(universe.len(), pricing.r_f_star)
        + omega * market_weights * pricing.theta1
        - omega * &pricing.aggregate_benchmark * pricing.theta2
        - universe.xi() * pricing.gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssetBeta {
    pub beta_m: f64,
    pub beta_b: f64,
    pub mu_implied: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaForm {
    /// `θ1·σ_m²`
    pub theta1_star: f64,
    /// `θ2·σ_b²`
    pub theta2_star: f64,
    pub market_variance: f64,
    pub benchmark_variance: f64,
    pub assets: Vec<AssetBeta>,
}

/// Beta representation `μ_j = r_f* + θ1*·β_mj − θ2*·β_bj − Γ·ξ_j`.
pub fn beta_form(
    pricing: &EquilibriumPricing,
    universe: &MarketUniverse,
    market_weights: &DVector<f64>,
    benchmark_weights: &DVector<f64>,
) -> Result<BetaForm> {
    universe.check_len("market weights", market_weights.len())?;
    universe.check_len("benchmark weights", benchmark_weights.len())?;
    let omega = universe.omega();
    let market_variance = quad_form(omega, market_weights);
    let benchmark_variance = quad_form(omega, benchmark_weights);
    if !(market_variance > 0.0) {
        return Err(Error::ZeroVariance("market portfolio".into()));
    }
    if !(benchmark_variance > 0.0) {
        return Err(Error::ZeroVariance("aggregate benchmark".into()));
    }
    let cov_m = omega * market_weights;
    let cov_b = omega * benchmark_weights;
    let theta1_star = pricing.theta1 * market_variance;
    let theta2_star = pricing.theta2 * benchmark_variance;
    let assets = (0..universe.len())
        .map(|j| {
            let beta_m = cov_m[j] / market_variance;
            let beta_b = cov_b[j] / benchmark_variance;
            AssetBeta {
                beta_m,
                beta_b,
                mu_implied: pricing.r_f_star + theta1_star * beta_m
                    - theta2_star * beta_b
                    - pricing.gamma * universe.xi()[j],
            }
        })
        .collect();
    Ok(BetaForm {
        theta1_star,
        theta2_star,
        market_variance,
        benchmark_variance,
        assets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::oracle::mean_tev_oracle;

    fn inst(w: f64, a: f64, b: Benchmark, h: f64) -> InstitutionalInvestor {
        InstitutionalInvestor::new(w, a, b, h).unwrap()
    }

    fn four_asset_economy() -> EquilibriumEconomy {
        EquilibriumEconomy::new(
            four_asset_universe(),
            vec![inst(2.0, 2.0, risk_reducer_benchmark(), 0.0)],
            vec![RetailInvestor::new(1.0, 3.0).unwrap()],
            0.01,
        )
        .unwrap()
    }

    #[test]
    fn institution_matches_oracle() {
        let u = four_asset_universe();
        for h in [0.0, 0.05, -0.5, -0.2] {
            let i = inst(1.0, 2.0, risk_reducer_benchmark(), h);
            let opt = institutional_optimum(&u, &i).unwrap();
            let oracle = mean_tev_oracle(&u, &i.benchmark, 2.0, h).unwrap();
            assert!((&opt.weights - &oracle.weights).amax() < 1e-10, "h = {h}");
            assert_eq!(opt.binding, oracle.active, "h = {h}");
            assert!((opt.weights.sum() - 1.0).abs() < 1e-12);
            if opt.binding {
                assert!(opt.omega2 < 0.0);
                let excess = (&opt.weights - i.benchmark.weights()).dot(u.xi());
                assert!((excess - h).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positive_alignment_never_binds_at_zero_target() {
        let u = four_asset_universe();
        let flipped = u.with_scores(u.xi().map(|x| -x)).unwrap();
        let s = compute_scalars(&flipped);
        assert!(s.esg_return_alignment() > 0.0);
        let opt = institutional_optimum(&flipped, &inst(1.0, 2.0, risk_reducer_benchmark(), 0.0))
            .unwrap();
        assert!(!opt.binding);
        assert_eq!(opt.omega2, 0.0);
        assert!((opt.omega1 - s.mvp_mean()).abs() < 1e-15);
    }

    #[test]
    fn retail_demand_properties() {
        let u = four_asset_universe();
        let y = retail_optimum(&u, &RetailInvestor::new(1.0, 3.0).unwrap(), 0.01).unwrap();
        let residual = u.omega() * &y * 3.0 - (u.mu() - DVector::from_element(4, 0.01));
        assert!(residual.amax() < 1e-13);
        let y2 = retail_optimum(&u, &RetailInvestor::new(1.0, 6.0).unwrap(), 0.01).unwrap();
        assert!((&y * 0.5 - y2).amax() < 1e-15);
        let flat = u.with_returns(DVector::from_element(4, 0.03)).unwrap();
        let zero = retail_optimum(&flat, &RetailInvestor::new(1.0, 3.0).unwrap(), 0.03).unwrap();
        assert!(zero.amax() < 1e-13);
    }

    #[test]
    fn round_trip_and_positive_premium() {
        let e = four_asset_economy();
        let c = clear_market(&e).unwrap();
        assert_eq!(c.pricing.binding_set, vec![0]);
        assert!(c.pricing.gamma > 0.0);
        let opt = &c.institutional[0];
        let expected = -(2.0 / 2.0) * opt.omega2 / c.pricing.delta;
        assert!((c.pricing.gamma - expected).abs() < 1e-15);
        let mu = equilibrium_mu(&c.pricing, &e.universe, &c.market_weights).unwrap();
        assert!((mu - e.universe.mu()).amax() < 1e-12);
        let betas = beta_form(
            &c.pricing,
            &e.universe,
            &c.market_weights,
            &c.pricing.aggregate_benchmark,
        )
        .unwrap();
        for (j, b) in betas.assets.iter().enumerate() {
            assert!((b.mu_implied - e.universe.mu()[j]).abs() < 1e-12);
        }
        // market composite has unit beta
        let beta_mkt: f64 = betas
            .assets
            .iter()
            .zip(c.market_weights.iter())
            .map(|(b, w)| b.beta_m * w)
            .sum();
        assert!((beta_mkt - 1.0).abs() < 1e-12);
    }

    #[test]
    fn retail_only_economy_is_single_factor() {
        let u = four_asset_universe();
        let e = EquilibriumEconomy::new(
            u.clone(),
            vec![],
            vec![RetailInvestor::new(1.0, 3.0).unwrap()],
            0.01,
        )
        .unwrap();
        let c = clear_market(&e).unwrap();
        assert_eq!(c.pricing.theta2, 0.0);
        assert_eq!(c.pricing.gamma, 0.0);
        let excess = u.mu() - DVector::from_element(4, c.pricing.r_f_star);
        let ratio = excess.component_div(&(u.omega() * &c.market_weights));
        assert!(ratio.max() - ratio.min() < 1e-12);
    }

    #[test]
    fn homogeneous_matches_general() {
        let e = EquilibriumEconomy::new(
            four_asset_universe(),
            vec![
                inst(2.0, 2.0, risk_reducer_benchmark(), 0.0),
                inst(1.5, 4.0, return_enhancer_benchmark(), 0.0),
            ],
            vec![RetailInvestor::new(1.0, 3.0).unwrap()],
            0.01,
        )
        .unwrap();
        let general = clear_market(&e).unwrap().pricing;
        let special = pricing_homogeneous(&e).unwrap();
        for (x, y) in [
            (general.r_f_star, special.r_f_star),
            (general.theta1, special.theta1),
            (general.theta2, special.theta2),
            (general.gamma, special.gamma),
        ] {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(general.binding_set, special.binding_set);
    }

    #[test]
    fn score_shift_moves_rate_not_premium() {
        let e = four_asset_economy();
        let c = clear_market(&e).unwrap();
        let shift = 0.4;
        let shifted = EquilibriumEconomy::new(
            e.universe
                .with_scores(e.universe.xi().add_scalar(shift))
                .unwrap(),
            e.institutions.clone(),
            e.retail.clone(),
            e.risk_free,
        )
        .unwrap();
        let cs = clear_market(&shifted).unwrap();
        assert!((cs.market_weights.clone() - &c.market_weights).amax() < 1e-12);
        assert!((cs.pricing.gamma - c.pricing.gamma).abs() < 1e-12);
        assert!(
            (cs.pricing.r_f_star - (c.pricing.r_f_star + shift * c.pricing.gamma)).abs() < 1e-12
        );
        let mu = equilibrium_mu(&cs.pricing, &shifted.universe, &cs.market_weights).unwrap();
        assert!((mu - e.universe.mu()).amax() < 1e-12);
    }

    #[test]
    fn nearly_infinite_retail_aversion_is_continuous() {
        let e = four_asset_economy();
        let base = EquilibriumEconomy::new(
            e.universe.clone(),
            e.institutions.clone(),
            vec![],
            e.risk_free,
        )
        .unwrap();
        let with = EquilibriumEconomy::new(
            e.universe.clone(),
            e.institutions.clone(),
            vec![RetailInvestor::new(1.0, 1e12).unwrap()],
            e.risk_free,
        )
        .unwrap();
        let a = clear_market(&base).unwrap();
        let b = clear_market(&with).unwrap();
        // holdings: W_m x_m equal up to the vanishing retail demand
        let ha = &a.market_weights * a.market_wealth;
        let hb = &b.market_weights * b.market_wealth;
        assert!((ha - hb).amax() < 1e-10);
        assert!((a.pricing.delta - b.pricing.delta).abs() < 1e-11);
        assert!((a.pricing.gamma - b.pricing.gamma).abs() < 1e-10);
    }

    #[test]
    fn validation() {
        assert!(InstitutionalInvestor::new(0.0, 1.0, risk_reducer_benchmark(), 0.0).is_err());
        assert!(RetailInvestor::new(1.0, -1.0).is_err());
        assert!(EquilibriumEconomy::new(four_asset_universe(), vec![], vec![], 0.0).is_err());
    }
}
