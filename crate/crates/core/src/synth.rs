//! Synthetic return and score panels priced by the equilibrium model.
//!
//! Expected returns are the fixed point of the market-clearing map with
//! constant capitalizations as supply, so the ESG premium `Γ` of the data is
//! known. Realized returns add factor, sector and fat-tailed idiosyncratic
//! noise; scores are released every January with small revisions.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StudentT};
use serde::Serialize;

use crate::empirical::panel::{FactorPanel, ReturnEsgPanel, SectorMap, YearMonth};
use crate::equilibrium::{
    clear_market, equilibrium_mu, EquilibriumEconomy, EquilibriumPricing, InstitutionalInvestor,
    RetailInvestor,
};
use crate::error::{Error, Result};
use crate::market::{Benchmark, MarketUniverse};

/// Monthly volatilities of the market, size, value, profitability and
/// investment factors.
const FACTOR_VOLS: [f64; 5] = [0.045, 0.025, 0.025, 0.015, 0.015];
const SECTOR_VOL: f64 = 0.02;
const FIXED_POINT_TOLERANCE: f64 = 1e-15;
const MAX_ITERATIONS: usize = 2000;
/// Relative mandate targets of the institutions; scaled to hit the configured premium.
const H_PROFILE: [f64; 3] = [0.5, 1.0, 1.5];
const INSTITUTION_AVERSION: [f64; 3] = [2.5, 3.0, 3.5];
const RETAIL_AVERSION: f64 = 3.0;
const STUDENT_DF: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_assets: usize,
    pub n_months: usize,
    pub start: String,
    /// The last sector gets `small_sector_size` assets; the rest are spread evenly.
    pub n_sectors: usize,
    pub small_sector_size: usize,
    pub benchmark_top_k: usize,
    /// ESG premium per score point per month.
    pub gamma: f64,
    pub risk_free: f64,
    pub institutional_share: f64,
    pub n_unscored: usize,
    /// Assets whose first score arrives one year into the sample.
    pub n_late_scored: usize,
    /// Missing-return probability for the smallest fifth of assets.
    pub missing_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            n_assets: 150,
            n_months: 180,
            start: "2006-01".into(),
            n_sectors: 11,
            small_sector_size: 5,
            benchmark_top_k: 50,
            gamma: 3e-4,
            risk_free: 0.002,
            institutional_share: 0.6,
            n_unscored: 4,
            n_late_scored: 10,
            missing_rate: 0.02,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<YearMonth> {
        let start: YearMonth = self.start.parse()?;
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if self.n_sectors < 2 || self.n_assets < self.n_sectors * 6 {
            return bad("need at least two sectors and six assets per sector");
        }
        if self.n_months < 36 {
            return bad("need at least 36 months");
        }
        if self.benchmark_top_k == 0 || self.benchmark_top_k > self.n_assets {
            return bad("benchmark size must be within the universe");
        }
        if !(self.institutional_share > 0.0 && self.institutional_share < 1.0) {
            return bad("institutional share must lie in (0, 1)");
        }
        if !(self.gamma > 0.0) || !self.risk_free.is_finite() {
            return bad("premium must be positive and the risk-free rate finite");
        }
        if !(0.0..0.5).contains(&self.missing_rate) {
            return bad("missing rate must lie in [0, 0.5)");
        }
        if self.n_unscored + self.n_late_scored > self.n_assets / 5 {
            return bad("too many unscored assets");
        }
        Ok(start)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    /// True moments; scores in points.
    pub universe: MarketUniverse,
    pub market_weights: DVector<f64>,
    pub benchmark: Benchmark,
    pub economy: EquilibriumEconomy,
    pub pricing: EquilibriumPricing,
    /// Mandate scale that yields the configured premium.
    pub h_scale: f64,
    pub panel: ReturnEsgPanel,
    pub factors: FactorPanel,
    pub sectors: SectorMap,
    pub sector_of: Vec<usize>,
}

struct Structure {
    ids: Vec<String>,
    sector_of: Vec<usize>,
    caps: DVector<f64>,
    scores: DVector<f64>,
    loadings: DMatrix<f64>,
    idio_vol: DVector<f64>,
}

fn draw_structure(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Structure> {
    let n = cfg.n_assets;
    let ids: Vec<String> = (1..=n).map(|j| format!("S{j:03}")).collect();
    let big = cfg.n_sectors - 1;
    let mut sector_of: Vec<usize> = (0..n - cfg.small_sector_size).map(|j| j % big).collect();
    sector_of.extend(std::iter::repeat_n(big, cfg.small_sector_size));
    sector_of.shuffle(rng);

    let lognormal = LogNormal::new(9.0, 1.2).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let caps: DVector<f64> = DVector::from_fn(n, |_, _| lognormal.sample(rng));

    let offsets: Vec<f64> = (0..cfg.n_sectors)
        .map(|_| rng.random_range(-15.0..15.0))
        .collect();
    let noise = Normal::new(0.0, 12.0).expect("valid normal");
    let log_cap_mean = caps.iter().map(|c: &f64| c.ln()).sum::<f64>() / n as f64;
    let scores = DVector::from_fn(n, |j, _| {
        (50.0 + offsets[sector_of[j]] + noise.sample(rng)).clamp(1.0, 99.0)
    });

    let style = Normal::new(0.0, 0.4).expect("valid normal");
    let loadings = DMatrix::from_fn(n, FACTOR_VOLS.len(), |j, k| match k {
        0 => rng.random_range(0.7..1.3),
        1 => -0.4 * (caps[j].ln() - log_cap_mean) + style.sample(rng),
        _ => style.sample(rng),
    });
    let idio_vol = DVector::from_fn(n, |_, _| rng.random_range(0.05..0.10));
    Ok(Structure {
        ids,
        sector_of,
        caps,
        scores,
        loadings,
        idio_vol,
    })
}

fn covariance(s: &Structure, n_sectors: usize) -> DMatrix<f64> {
    let n = s.ids.len();
    let factor_var = DMatrix::from_diagonal(&DVector::from_iterator(
        FACTOR_VOLS.len(),
        FACTOR_VOLS.iter().map(|v| v * v),
    ));
    let mut omega = &s.loadings * factor_var * s.loadings.transpose();
    for i in 0..n {
        for j in 0..n {
            if s.sector_of[i] == s.sector_of[j] {
                omega[(i, j)] += SECTOR_VOL * SECTOR_VOL;
            }
        }
        omega[(i, i)] += s.idio_vol[i] * s.idio_vol[i];
    }
    debug_assert!(s.sector_of.iter().all(|&k| k < n_sectors));
    omega
}

/// Value weights of the `k` largest capitalizations.
fn top_k_weights(caps: &DVector<f64>, k: usize) -> Result<Benchmark> {
    let mut order: Vec<usize> = (0..caps.len()).collect();
    order.sort_by(|&i, &j| caps[j].total_cmp(&caps[i]).then(i.cmp(&j)));
    let mut w = DVector::zeros(caps.len());
    for &j in &order[..k] {
        w[j] = caps[j];
    }
    Benchmark::normalized(w)
}

fn economy(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    cfg: &SynthConfig,
    h_scale: f64,
) -> Result<EquilibriumEconomy> {
    let each = cfg.institutional_share / H_PROFILE.len() as f64;
    let institutions = H_PROFILE
        .iter()
        .zip(INSTITUTION_AVERSION)
        .map(|(&h, a)| InstitutionalInvestor::new(each, a, benchmark.clone(), h * h_scale))
        .collect::<Result<Vec<_>>>()?;
    let retail = vec![RetailInvestor::new(
        1.0 - cfg.institutional_share,
        RETAIL_AVERSION,
    )?];
    EquilibriumEconomy::new(universe.clone(), institutions, retail, cfg.risk_free)
}

/// Iterates `μ ← equilibrium_mu(pricing(μ), q)` until the market clears at
/// the supply weights `q`. The map contracts at the institutional share of
/// risk tolerance.
pub fn equilibrium_fixed_point(
    economy: &EquilibriumEconomy,
    supply: &DVector<f64>,
) -> Result<(MarketUniverse, EquilibriumPricing)> {
    let mut universe = economy.universe.clone();
    for _ in 0..MAX_ITERATIONS {
        let econ = EquilibriumEconomy {
            universe: universe.clone(),
            ..economy.clone()
        };
        let pricing = clear_market(&econ)?.pricing;
        let mu = equilibrium_mu(&pricing, &universe, supply)?;
        let step = (&mu - universe.mu()).amax();
        universe = universe.with_returns(mu)?;
        if step <= FIXED_POINT_TOLERANCE * (1.0 + universe.mu().amax()) {
            let econ = EquilibriumEconomy {
                universe: universe.clone(),
                ..economy.clone()
            };
            return Ok((universe, clear_market(&econ)?.pricing));
        }
    }
    Err(Error::Infeasible(
        "equilibrium iteration did not converge".into(),
    ))
}

fn solve_prices(
    base: &MarketUniverse,
    benchmark: &Benchmark,
    supply: &DVector<f64>,
    cfg: &SynthConfig,
) -> Result<(EquilibriumEconomy, MarketUniverse, EquilibriumPricing, f64)> {
    // Γ is affine in the mandate scale while every mandate binds
    let gamma_at = |h: f64| -> Result<f64> {
        let econ = economy(base, benchmark, cfg, h)?;
        Ok(equilibrium_fixed_point(&econ, supply)?.1.gamma)
    };
    let (h1, h2) = (100.0, 200.0);
    let (g1, g2) = (gamma_at(h1)?, gamma_at(h2)?);
    let h_scale = h1 + (cfg.gamma - g1) * (h2 - h1) / (g2 - g1);
    let econ = economy(base, benchmark, cfg, h_scale)?;
    let (universe, pricing) = equilibrium_fixed_point(&econ, supply)?;
    if pricing.binding_set.len() != H_PROFILE.len() {
        return Err(Error::Infeasible(
            "premium target leaves a mandate slack; raise the premium".into(),
        ));
    }
    let econ = EquilibriumEconomy {
        universe: universe.clone(),
        ..econ
    };
    Ok((econ, universe, pricing, h_scale))
}

fn month_grid(start: YearMonth, n: usize) -> Vec<YearMonth> {
    std::iter::successors(Some(start), |d| Some(d.next()))
        .take(n)
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SyntheticMarket> {
    let start = cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = draw_structure(cfg, &mut rng)?;
    let n = cfg.n_assets;
    let omega = covariance(&s, cfg.n_sectors);
    let supply = &s.caps / s.caps.sum();
    let benchmark = top_k_weights(&s.caps, cfg.benchmark_top_k)?;
    let seed_mu = DVector::from_element(n, cfg.risk_free) + &omega * &supply * 3.0;
    let base = MarketUniverse::new(s.ids.clone(), seed_mu, s.scores.clone(), omega)?;
    let (economy, universe, pricing, h_scale) = solve_prices(&base, &benchmark, &supply, cfg)?;

    let t_len = cfg.n_months;
    let dates = month_grid(start, t_len);
    let k = FACTOR_VOLS.len();
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let student = StudentT::new(STUDENT_DF).expect("valid df");
    let t_scale = ((STUDENT_DF - 2.0) / STUDENT_DF).sqrt();
    let factor_draws = DMatrix::from_fn(t_len, k, |_, f| {
        FACTOR_VOLS[f] * std_normal.sample(&mut rng)
    });
    let sector_draws = DMatrix::from_fn(t_len, cfg.n_sectors, |_, _| {
        SECTOR_VOL * std_normal.sample(&mut rng)
    });
    let mut returns = DMatrix::from_fn(t_len, n, |t, j| {
        let common: f64 = (0..k)
            .map(|f| s.loadings[(j, f)] * factor_draws[(t, f)])
            .sum();
        let idio = s.idio_vol[j] * t_scale * student.sample(&mut rng);
        universe.mu()[j] + common + sector_draws[(t, s.sector_of[j])] + idio
    });
    let market = &returns * &supply;

    let mut by_size: Vec<usize> = (0..n).collect();
    by_size.sort_by(|&i, &j| s.caps[i].total_cmp(&s.caps[j]).then(i.cmp(&j)));
    let smallest = &by_size[..n / 5];
    for &j in smallest {
        for t in 0..t_len {
            if rng.random_bool(cfg.missing_rate) {
                returns[(t, j)] = f64::NAN;
            }
        }
    }
    let unscored = &smallest[..cfg.n_unscored];
    let late = &smallest[cfg.n_unscored..cfg.n_unscored + cfg.n_late_scored];
    let revision = Normal::new(0.0, 2.0).expect("valid normal");
    let mut esg = DMatrix::from_element(t_len, n, f64::NAN);
    for t in (0..t_len).filter(|&t| t == 0 || dates[t].month == 1) {
        for j in 0..n {
            if unscored.contains(&j) || (t < 12 && late.contains(&j)) {
                continue;
            }
            esg[(t, j)] = (s.scores[j] + revision.sample(&mut rng)).clamp(0.0, 100.0);
        }
    }
    let caps = DMatrix::from_fn(t_len, n, |_, j| s.caps[j]);
    let panel = ReturnEsgPanel::new(dates.clone(), s.ids.clone(), returns, esg, caps)?;

    let rf = DVector::from_element(t_len, cfg.risk_free);
    let factors = FactorPanel::new(
        dates,
        [
            market - &rf,
            factor_draws.column(1).into_owned(),
            factor_draws.column(2).into_owned(),
            factor_draws.column(3).into_owned(),
            factor_draws.column(4).into_owned(),
            rf,
        ],
    )?;
    let sectors: SectorMap = s
        .ids
        .iter()
        .zip(&s.sector_of)
        .map(|(id, &k)| (id.clone(), format!("SEC{:02}", k + 1)))
        .collect();
    Ok(SyntheticMarket {
        universe,
        market_weights: supply,
        benchmark,
        economy,
        pricing,
        h_scale,
        panel,
        factors,
        sectors,
        sector_of: s.sector_of,
    })
}
