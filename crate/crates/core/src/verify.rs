//! Seeded randomized checks of the closed-form frontier against the QP oracle.
//!
//! Instance `k` of seed `s` draws from its own ChaCha8 stream, so the suite
//! gives the same numbers sequentially and in parallel.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::exec::Execution;
use crate::frontier::{tev_esg_portfolio, MandateSpec};
use crate::linalg::max_abs_diff;
use crate::market::{compute_scalars, Benchmark, MarketUniverse};
use crate::oracle::qp_oracle;

pub const DEFAULT_INSTANCES: usize = 100;
pub const MIN_ASSETS: usize = 3;
pub const MAX_ASSETS: usize = 10;

/// Weight tolerance of the closed form against the oracle.
pub const WEIGHT_TOLERANCE: f64 = 1e-7;
pub const SLACKNESS_TOLERANCE: f64 = 1e-9;
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

pub fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Random universe with a one-factor-plus-noise covariance, annual-scale
/// expected returns in `[0.01, 0.15]` and scores in `[0, 1]`.
pub fn random_universe<R: Rng>(rng: &mut R, n: usize) -> Result<MarketUniverse> {
    let loadings: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let factor_var = 0.03;
    let mut omega = DMatrix::from_fn(n, n, |i, j| factor_var * loadings[i] * loadings[j]);
    let extra: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        0.08 * z
    });
    omega += &extra * extra.transpose() / n as f64;
    for i in 0..n {
        omega[(i, i)] += rng.random_range(0.01..0.05);
    }
    let mu = DVector::from_fn(n, |_, _| rng.random_range(0.01..0.15));
    let xi = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
    MarketUniverse::unlabeled(mu, xi, omega)
}

/// Long-only benchmark with random positive weights.
pub fn random_benchmark<R: Rng>(rng: &mut R, n: usize) -> Result<Benchmark> {
    Benchmark::normalized(DVector::from_fn(n, |_, _| rng.random_range(0.1..1.0)))
}

#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub universe: MarketUniverse,
    pub benchmark: Benchmark,
    pub mandate: MandateSpec,
}

/// Instance `index` of the suite: `N ∈ [3, 10]`, `G ∈ [−0.05, 0.05]`,
/// `H ∈ [−0.05, 0.10]`, which mixes binding and slack mandates.
pub fn oracle_instance(seed: u64, index: usize) -> Result<OracleInstance> {
    let mut rng = instance_rng(seed, index);
    let n = rng.random_range(MIN_ASSETS..=MAX_ASSETS);
    let universe = random_universe(&mut rng, n)?;
    let benchmark = random_benchmark(&mut rng, n)?;
    let mandate = MandateSpec::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.10))?;
    Ok(OracleInstance {
        universe,
        benchmark,
        mandate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceCheck {
    pub index: usize,
    pub n_assets: usize,
    pub g_target: f64,
    pub h_target: f64,
    pub binding: bool,
    pub oracle_active: bool,
    pub weight_deviation: f64,
    /// `|λ2·(esg_excess − H)|`
    pub slackness: f64,
    pub lambda2: f64,
    pub budget_residual: f64,
    pub return_residual: f64,
    pub d_e: f64,
}

impl InstanceCheck {
    pub fn kkt_ok(&self) -> bool {
        self.slackness < SLACKNESS_TOLERANCE
            && self.lambda2 <= 0.0
            && self.budget_residual < RESIDUAL_TOLERANCE
            && self.return_residual < RESIDUAL_TOLERANCE
            && (!self.binding || self.d_e < 0.0)
    }
}

pub fn check_instance(seed: u64, index: usize) -> Result<InstanceCheck> {
    let inst = oracle_instance(seed, index)?;
    let (u, b, m) = (&inst.universe, &inst.benchmark, &inst.mandate);
    let p = tev_esg_portfolio(u, b, m)?;
    let oracle = qp_oracle(u, b, m)?;
    let diff = &p.weights - b.weights();
    Ok(InstanceCheck {
        index,
        n_assets: u.len(),
        g_target: m.g_target,
        h_target: m.h_target,
        binding: p.binding,
        oracle_active: oracle.active,
        weight_deviation: max_abs_diff(&p.weights, &oracle.weights),
        slackness: (p.multipliers.lambda2 * (p.esg_excess - m.h_target)).abs(),
        lambda2: p.multipliers.lambda2,
        budget_residual: (p.weights.sum() - 1.0).abs(),
        return_residual: (diff.dot(u.mu()) - m.g_target).abs(),
        d_e: compute_scalars(u).d_e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub instances: usize,
    pub binding_instances: usize,
    pub max_weight_deviation: f64,
    pub max_slackness: f64,
    pub max_lambda2: f64,
    pub max_budget_residual: f64,
    pub max_return_residual: f64,
    pub kkt_failures: usize,
    pub passed: bool,
    pub checks: Vec<InstanceCheck>,
}

pub fn oracle_suite(seed: u64, instances: usize, exec: Execution) -> Result<OracleReport> {
    let checks = exec
        .map_range(instances, |k| check_instance(seed, k))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&InstanceCheck) -> f64| checks.iter().map(f).fold(0.0_f64, f64::max);
    let max_lambda2 = checks
        .iter()
        .map(|c| c.lambda2)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_weight_deviation = max(|c| c.weight_deviation);
    let kkt_failures = checks.iter().filter(|c| !c.kkt_ok()).count();
    Ok(OracleReport {
        seed,
        instances,
        binding_instances: checks.iter().filter(|c| c.binding).count(),
        max_weight_deviation,
        max_slackness: max(|c| c.slackness),
        max_lambda2: if checks.is_empty() { 0.0 } else { max_lambda2 },
        max_budget_residual: max(|c| c.budget_residual),
        max_return_residual: max(|c| c.return_residual),
        kkt_failures,
        passed: max_weight_deviation < WEIGHT_TOLERANCE && kkt_failures == 0,
        checks,
    })
}
