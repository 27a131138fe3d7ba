//! Brute-force verification solvers.
//!
//! Each problem is solved from its full `(N + m)`-dimensional KKT system by
//! dense LU, once per active-set hypothesis. Nothing here touches the
//! frontier scalars or the cached Cholesky solves, so agreement with the
//! closed forms is a genuine second route.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::frontier::MandateSpec;
use crate::linalg::quad_form;
use crate::market::{Benchmark, MarketUniverse};

/// Largest universe the oracles accept.
pub const ORACLE_MAX_ASSETS: usize = 50;
/// Feasibility slack when testing the inactive hypothesis.
const FEASIBILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub weights: DVector<f64>,
    /// Whether the ESG inequality was active in the accepted hypothesis.
    pub active: bool,
    pub objective: f64,
}

fn check_size(universe: &MarketUniverse) -> Result<()> {
    if universe.len() > ORACLE_MAX_ASSETS {
        return Err(Error::InvalidInput(format!(
            "oracle limited to {ORACLE_MAX_ASSETS} assets, got {}",
            universe.len()
        )));
    }
    Ok(())
}

/// Solves `[Q Aᵀ; A 0] [d; ν] = [q; b]` and returns `d`.
fn solve_kkt(
    q_block: &DMatrix<f64>,
    q_rhs: &DVector<f64>,
    rows: &[&DVector<f64>],
    rhs: &[f64],
) -> Result<DVector<f64>> {
    let n = q_block.nrows();
    let m = rows.len();
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(q_block);
    for (k, row) in rows.iter().enumerate() {
        for i in 0..n {
            kkt[(n + k, i)] = row[i];
            kkt[(i, n + k)] = row[i];
        }
    }
    let mut b = DVector::zeros(n + m);
    b.rows_mut(0, n).copy_from(q_rhs);
    for (k, v) in rhs.iter().enumerate() {
        b[n + k] = *v;
    }
    let sol = kkt
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Infeasible("KKT matrix is singular".into()))?;
    Ok(sol.rows(0, n).into_owned())
}

/// Minimum-TEV portfolio with equality constraints only (budget and return target).
pub fn equality_qp_oracle(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    g: f64,
) -> Result<DVector<f64>> {
    check_size(universe)?;
    let n = universe.len();
    let one = DVector::from_element(n, 1.0);
    let x0 = benchmark.weights();
    let q = universe.omega() * 2.0;
    let d = solve_kkt(
        &q,
        &DVector::zeros(n),
        &[&one, universe.mu()],
        &[1.0 - x0.sum(), g],
    )?;
    Ok(x0 + d)
}

/// Minimum-TEV portfolio under the ESG mandate, by enumerating both active sets.
///
/// Minimizes `(x − x0)ᵀΩ(x − x0)` subject to `xᵀ1 = 1`, `(x − x0)ᵀμ = G` and
/// `(x − x0)ᵀξ ≥ H`; the feasible candidate with the smaller objective wins,
/// the inactive one on ties.
pub fn qp_oracle(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    mandate: &MandateSpec,
) -> Result<OracleSolution> {
    check_size(universe)?;
    universe.check_len("benchmark", benchmark.len())?;
    let n = universe.len();
    let one = DVector::from_element(n, 1.0);
    let x0 = benchmark.weights();
    let q = universe.omega() * 2.0;
    let zero = DVector::zeros(n);
    let budget = 1.0 - x0.sum();
    let (g, h) = (mandate.g_target, mandate.h_target);
    let objective = |d: &DVector<f64>| quad_form(universe.omega(), d);

    let mut best: Option<(DVector<f64>, bool, f64)> = None;
    if let Ok(d) = solve_kkt(&q, &zero, &[&one, universe.mu()], &[budget, g]) {
        let slack_ok = d.dot(universe.xi()) >= h - FEASIBILITY_SLACK * (1.0 + h.abs());
        if slack_ok {
            let f = objective(&d);
            best = Some((d, false, f));
        }
    }
    if let Ok(d) = solve_kkt(
        &q,
        &zero,
        &[&one, universe.mu(), universe.xi()],
        &[budget, g, h],
    ) {
        let f = objective(&d);
        if best.as_ref().is_none_or(|(_, _, fb)| f < *fb) {
            best = Some((d, true, f));
        }
    }
    let (d, active, objective) =
        best.ok_or_else(|| Error::Infeasible("no feasible active set".into()))?;
    Ok(OracleSolution {
        weights: x0 + d,
        active,
        objective,
    })
}

/// Institutional investor optimum by enumeration.
///
/// Maximizes `μᵀx − (a/2)(x − x0)ᵀΩ(x − x0)` subject to `xᵀ1 = 1` and
/// `(x − x0)ᵀξ ≥ H`, choosing the feasible hypothesis with the higher utility.
pub fn mean_tev_oracle(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    risk_aversion: f64,
    h: f64,
) -> Result<OracleSolution> {
    check_size(universe)?;
    universe.check_len("benchmark", benchmark.len())?;
    let n = universe.len();
    let one = DVector::from_element(n, 1.0);
    let x0 = benchmark.weights();
    let q = universe.omega() * risk_aversion;
    let budget = 1.0 - x0.sum();
    let utility = |d: &DVector<f64>| {
        (x0 + d).dot(universe.mu()) - 0.5 * risk_aversion * quad_form(universe.omega(), d)
    };

    let mut best: Option<(DVector<f64>, bool, f64)> = None;
    if let Ok(d) = solve_kkt(&q, universe.mu(), &[&one], &[budget]) {
        if d.dot(universe.xi()) >= h - FEASIBILITY_SLACK * (1.0 + h.abs()) {
            let u = utility(&d);
            best = Some((d, false, u));
        }
    }
    if let Ok(d) = solve_kkt(&q, universe.mu(), &[&one, universe.xi()], &[budget, h]) {
        let u = utility(&d);
        if best.as_ref().is_none_or(|(_, _, ub)| u > *ub) {
            best = Some((d, true, u));
        }
    }
    let (d, active, objective) =
        best.ok_or_else(|| Error::Infeasible("no feasible active set".into()))?;
    Ok(OracleSolution {
        weights: x0 + d,
        active,
        objective,
    })
}
