//! Static market description and the quadratic forms every closed-form
//! frontier and equilibrium expression is built from.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{quad_form, CholeskyFactor};

/// Relative tolerance for the symmetry check on Ω.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// `|D| < DEGENERACY_TOLERANCE · B · C` flags μ ∝ 1.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;
/// Benchmark weights must sum to one within this tolerance.
pub const BUDGET_TOLERANCE: f64 = 1e-12;

/// Asset-level expected returns μ, ESG scores ξ and return covariance Ω.
///
/// Ω is factorized once on construction and `Ω⁻¹1`, `Ω⁻¹μ`, `Ω⁻¹ξ` are cached;
/// the inverse itself is never formed.
#[derive(Debug, Clone)]
pub struct MarketUniverse {
    asset_ids: Vec<String>,
    mu: DVector<f64>,
    xi: DVector<f64>,
    omega: DMatrix<f64>,
    factor: CholeskyFactor,
    inv_one: DVector<f64>,
    inv_mu: DVector<f64>,
    inv_xi: DVector<f64>,
}

impl MarketUniverse {
    pub fn new(
        asset_ids: Vec<String>,
        mu: DVector<f64>,
        xi: DVector<f64>,
        omega: DMatrix<f64>,
    ) -> Result<Self> {
        let n = mu.len();
        if n < 2 {
            return Err(Error::DimensionMismatch(format!(
                "a universe needs at least two assets, got {n}"
            )));
        }
        if asset_ids.len() != n || xi.len() != n || omega.nrows() != n || omega.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "ids={}, mu={}, xi={}, omega={}x{}",
                asset_ids.len(),
                n,
                xi.len(),
                omega.nrows(),
                omega.ncols()
            )));
        }
        if mu
            .iter()
            .chain(xi.iter())
            .chain(omega.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("non-finite value in universe".into()));
        }
        let scale = omega.amax();
        for row in 0..n {
            for col in (row + 1)..n {
                let gap = (omega[(row, col)] - omega[(col, row)]).abs();
                if gap > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::NotSymmetric { row, col, gap });
                }
            }
        }
        let factor = CholeskyFactor::new(&omega)?;
        let inv_one = factor.solve(&DVector::from_element(n, 1.0));
        let inv_mu = factor.solve(&mu);
        let inv_xi = factor.solve(&xi);
        Ok(Self {
            asset_ids,
            mu,
            xi,
            omega,
            factor,
            inv_one,
            inv_mu,
            inv_xi,
        })
    }

    /// Same as [`MarketUniverse::new`] with generated labels `A1..AN`.
    pub fn unlabeled(mu: DVector<f64>, xi: DVector<f64>, omega: DMatrix<f64>) -> Result<Self> {
        let ids = (1..=mu.len()).map(|i| format!("A{i}")).collect();
        Self::new(ids, mu, xi, omega)
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn xi(&self) -> &DVector<f64> {
        &self.xi
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    /// `Ω⁻¹ 1`.
    pub fn inv_one(&self) -> &DVector<f64> {
        &self.inv_one
    }

    /// `Ω⁻¹ μ`.
    pub fn inv_mu(&self) -> &DVector<f64> {
        &self.inv_mu
    }

    /// `Ω⁻¹ ξ`.
    pub fn inv_xi(&self) -> &DVector<f64> {
        &self.inv_xi
    }

    /// Solves `Ω x = rhs` with the cached factorization.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(rhs)
    }

    /// Copy of the universe with a different score vector (Ω is refactorized).
    pub fn with_scores(&self, xi: DVector<f64>) -> Result<Self> {
        Self::new(
            self.asset_ids.clone(),
            self.mu.clone(),
            xi,
            self.omega.clone(),
        )
    }

    /// Copy of the universe with different expected returns.
    pub fn with_returns(&self, mu: DVector<f64>) -> Result<Self> {
        Self::new(
            self.asset_ids.clone(),
            mu,
            self.xi.clone(),
            self.omega.clone(),
        )
    }

    pub(crate) fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{what} has {len} entries, universe has {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Benchmark portfolio `x0`. Short positions are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    weights: DVector<f64>,
}

impl Benchmark {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("non-finite benchmark weight".into()));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > BUDGET_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "benchmark weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Rescales arbitrary non-zero-sum weights onto the budget constraint.
    pub fn normalized(raw: DVector<f64>) -> Result<Self> {
        let total = raw.sum();
        if total == 0.0 || !total.is_finite() {
            return Err(Error::InvalidInput("benchmark weights sum to zero".into()));
        }
        Self::new(raw / total)
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// The quadratic forms of 1, μ and ξ in the Ω⁻¹ metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierScalars {
    /// `1ᵀΩ⁻¹μ`
    pub a: f64,
    /// `μᵀΩ⁻¹μ`
    pub b: f64,
    /// `1ᵀΩ⁻¹1`
    pub c: f64,
    /// `1ᵀΩ⁻¹ξ`
    pub a_e: f64,
    /// `ξᵀΩ⁻¹ξ`
    pub b_e: f64,
    /// `ξᵀΩ⁻¹μ`
    pub e: f64,
    /// `BC − A²`
    pub d: f64,
    /// `−2A E A_E + A_E² B + A² B_E + E² C − B B_E C`
    pub d_e: f64,
    /// `A_E / C`, the ESG score of the minimum variance portfolio.
    pub z: f64,
}

impl FrontierScalars {
    /// Expected return of the minimum variance portfolio, `A/C`.
    pub fn mvp_mean(&self) -> f64 {
        self.a / self.c
    }

    /// `E − (A/C)·A_E`: the Ω⁻¹-inner product of μ and ξ after removing the
    /// unit direction. Its sign decides on which side of `G = 0` the ESG
    /// mandate binds.
    pub fn esg_return_alignment(&self) -> f64 {
        self.e - self.a / self.c * self.a_e
    }

    /// `(ξ − Z1)ᵀΩ⁻¹ξ = B_E − Z·A_E`, the squared Ω⁻¹-length of ξ off the unit direction.
    pub fn esg_dispersion(&self) -> f64 {
        self.b_e - self.z * self.a_e
    }

    /// μ proportional to 1 (no return dispersion in the Ω⁻¹ metric).
    pub fn is_degenerate(&self) -> bool {
        !(self.d.abs() >= DEGENERACY_TOLERANCE * self.b.abs() * self.c)
    }

    pub(crate) fn require_non_degenerate(&self) -> Result<()> {
        if self.is_degenerate() {
            return Err(Error::DegenerateUniverse(format!(
                "D = {:e} vanishes relative to B·C = {:e}; expected returns are proportional to 1",
                self.d,
                self.b * self.c
            )));
        }
        Ok(())
    }
}

/// Computes the nine scalars from the cached solves of one factorization.
pub fn compute_scalars(universe: &MarketUniverse) -> FrontierScalars {
    let one = DVector::from_element(universe.len(), 1.0);
    let a = one.dot(universe.inv_mu());
    let b = universe.mu().dot(universe.inv_mu());
    let c = one.dot(universe.inv_one());
    let a_e = one.dot(universe.inv_xi());
    let b_e = universe.xi().dot(universe.inv_xi());
    let e = universe.xi().dot(universe.inv_mu());
    let d = b * c - a * a;
    let d_e = -2.0 * a * e * a_e + a_e * a_e * b + a * a * b_e + e * e * c - b * b_e * c;
    FrontierScalars {
        a,
        b,
        c,
        a_e,
        b_e,
        e,
        d,
        d_e,
        z: a_e / c,
    }
}

/// Minimum variance portfolio `Ω⁻¹1 / C`.
pub fn mvp_weights(universe: &MarketUniverse) -> DVector<f64> {
    let c = universe.inv_one().sum();
    universe.inv_one() / c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioStats {
    pub mean: f64,
    pub variance: f64,
    pub esg: f64,
    /// Tracking error variance against the benchmark.
    pub tev: f64,
    /// Mean over standard deviation.
    pub msd_ratio: f64,
}

pub fn portfolio_stats(
    universe: &MarketUniverse,
    weights: &DVector<f64>,
    benchmark: &Benchmark,
) -> Result<PortfolioStats> {
    universe.check_len("weights", weights.len())?;
    universe.check_len("benchmark", benchmark.len())?;
    let mean = weights.dot(universe.mu());
    let variance = quad_form(universe.omega(), weights);
    let active = weights - benchmark.weights();
    Ok(PortfolioStats {
        mean,
        variance,
        esg: weights.dot(universe.xi()),
        tev: quad_form(universe.omega(), &active),
        msd_ratio: mean / variance.sqrt(),
    })
}

/// Benchmark quantities the closed-form frontier expressions depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMoments {
    /// `x0ᵀ1`
    pub budget: f64,
    /// `x0ᵀμ`
    pub mean: f64,
    /// `x0ᵀξ`
    pub esg: f64,
    /// `x0ᵀΩx0`
    pub variance: f64,
}

impl BenchmarkMoments {
    pub fn of(universe: &MarketUniverse, benchmark: &Benchmark) -> Result<Self> {
        universe.check_len("benchmark", benchmark.len())?;
        let x0 = benchmark.weights();
        Ok(Self {
            budget: x0.sum(),
            mean: x0.dot(universe.mu()),
            esg: x0.dot(universe.xi()),
            variance: quad_form(universe.omega(), x0),
        })
    }
}
