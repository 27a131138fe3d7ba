//! Closed-form minimum-TEV frontiers with and without an ESG mandate.
//!
//! The mandate problem is
//!
//! ```text
//! min (x − x0)ᵀ Ω (x − x0)   s.t.   xᵀ1 = 1,  (x − x0)ᵀμ = G,  (x − x0)ᵀξ ≥ H
//! ```
//!
//! with optimum `x* = x0 − ½ Ω⁻¹(λ1·1 + λ2·ξ + λ3·μ)`. When the ESG inequality is
//! slack, `λ2 = 0` and the portfolio is the classic minimum-TEV portfolio.
//! Multipliers of the binding branch come from a dense 3×3 solve; the
//! printed closed forms are kept in [`closed_form_multipliers`] and drive the
//! variance functions, so the two routes check each other.

use nalgebra::{DVector, Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{linspace, quad_form};
use crate::market::{
    compute_scalars, Benchmark, BenchmarkMoments, FrontierScalars, MarketUniverse,
};

/// Default sweep: 201 points over [−0.10, 0.10] per period.
pub const DEFAULT_G_MIN: f64 = -0.10;
pub const DEFAULT_G_MAX: f64 = 0.10;
pub const DEFAULT_G_STEPS: usize = 201;

/// Roots closer than this (relative) to the binding boundary are the boundary.
pub const ROOT_COINCIDENCE_TOLERANCE: f64 = 1e-9;
/// `−D_E ≤ SINGULAR_ESG_TOLERANCE · D · B_E` means ξ ∈ span(1, μ) in the Ω⁻¹ metric.
pub const SINGULAR_ESG_TOLERANCE: f64 = 1e-12;

/// Return over-performance `G` and ESG over-performance `H` against the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MandateSpec {
    pub g_target: f64,
    pub h_target: f64,
}

impl MandateSpec {
    pub fn new(g_target: f64, h_target: f64) -> Result<Self> {
        if !g_target.is_finite() || !h_target.is_finite() {
            return Err(Error::InvalidInput("mandate targets must be finite".into()));
        }
        Ok(Self { g_target, h_target })
    }

    /// Mandate that only asks the ESG score not to fall below the benchmark's.
    pub fn return_target(g_target: f64) -> Self {
        Self {
            g_target,
            h_target: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Multipliers {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPortfolio {
    pub weights: DVector<f64>,
    pub multipliers: Multipliers,
    pub binding: bool,
    pub g_target: f64,
    pub h_target: f64,
    pub tev: f64,
    pub variance: f64,
    /// `(x − x0)ᵀξ`
    pub esg_excess: f64,
}

/// ESG excess `(x − x0)ᵀξ` of the unconstrained minimum-TEV portfolio at `G`,
/// i.e. `(E − (A/C)A_E)·C·G / D`.
pub fn unconstrained_esg_excess(scalars: &FrontierScalars, g: f64) -> f64 {
    (scalars.c * scalars.e - scalars.a * scalars.a_e) * g / scalars.d
}

/// Whether the ESG inequality is active at the optimum.
///
/// Strict comparison of the closed-form excess with `H`; ties count as slack,
/// except at `G = H = 0` where the optimum is the benchmark itself and the
/// constraint holds with equality.
pub fn is_binding(scalars: &FrontierScalars, mandate: &MandateSpec) -> bool {
    if mandate.g_target == 0.0 && mandate.h_target == 0.0 {
        return true;
    }
    unconstrained_esg_excess(scalars, mandate.g_target) < mandate.h_target
}

/// Where the mandate switches between slack and binding as `G` varies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "side", content = "boundary", rename_all = "snake_case")]
pub enum BindingRegion {
    /// Binding for `G > boundary` (the case `E − (A/C)A_E < 0`).
    Above(f64),
    /// Binding for `G < boundary` (the case `E − (A/C)A_E > 0`).
    Below(f64),
    /// `E − (A/C)A_E = 0` and `H > 0`.
    Everywhere,
    /// `E − (A/C)A_E = 0` and `H ≤ 0`.
    Nowhere,
}

impl BindingRegion {
    pub fn of(scalars: &FrontierScalars, h: f64) -> Self {
        let slope = (scalars.c * scalars.e - scalars.a * scalars.a_e) / scalars.d;
        if slope < 0.0 {
            BindingRegion::Above(h / slope)
        } else if slope > 0.0 {
            BindingRegion::Below(h / slope)
        } else if h > 0.0 {
            BindingRegion::Everywhere
        } else {
            BindingRegion::Nowhere
        }
    }

    pub fn boundary(&self) -> Option<f64> {
        match *self {
            BindingRegion::Above(g) | BindingRegion::Below(g) => Some(g),
            _ => None,
        }
    }
}

/// `G_b = H·D / (C(E − (A/C)A_E))`, the return target at which the mandate starts to bind.
pub fn binding_boundary(scalars: &FrontierScalars, h: f64) -> Option<f64> {
    BindingRegion::of(scalars, h).boundary()
}

/// Multipliers of the unconstrained minimum-TEV problem: `λ̂1 = 2AG/D`, `λ̂3 = −2CG/D`.
pub fn tev_multipliers(scalars: &FrontierScalars, g: f64) -> Multipliers {
    Multipliers {
        lambda1: 2.0 * scalars.a * g / scalars.d,
        lambda2: 0.0,
        lambda3: -2.0 * scalars.c * g / scalars.d,
    }
}

/// Closed-form multipliers of the binding branch.
///
/// ```text
/// λ1 = [2(E A_E − A B_E)G + 2(A E − A_E B)H] / D_E
/// λ2 = [2(A A_E − E C)G  + 2 D H]            / D_E
/// λ3 = [2(B_E C − A_E²)G + 2(A A_E − E C)H]  / D_E
/// ```
pub fn closed_form_multipliers(scalars: &FrontierScalars, mandate: &MandateSpec) -> Multipliers {
    let s = scalars;
    let (g, h) = (mandate.g_target, mandate.h_target);
    Multipliers {
        lambda1: (2.0 * (s.e * s.a_e - s.a * s.b_e) * g + 2.0 * (s.a * s.e - s.a_e * s.b) * h)
            / s.d_e,
        lambda2: (2.0 * (s.a * s.a_e - s.e * s.c) * g + 2.0 * s.d * h) / s.d_e,
        lambda3: (2.0 * (s.b_e * s.c - s.a_e * s.a_e) * g + 2.0 * (s.a * s.a_e - s.e * s.c) * h)
            / s.d_e,
    }
}

fn require_esg_direction(scalars: &FrontierScalars) -> Result<()> {
    if !(-scalars.d_e > SINGULAR_ESG_TOLERANCE * scalars.d * scalars.b_e.abs()) {
        return Err(Error::SingularEsgDirection);
    }
    Ok(())
}

/// Solves the three-equality KKT system `M λ = −2 (0, H, G)` with the Gram
/// matrix `M` of (1, ξ, μ) in the Ω⁻¹ metric.
pub fn solve_binding_multipliers(
    scalars: &FrontierScalars,
    mandate: &MandateSpec,
) -> Result<Multipliers> {
    require_esg_direction(scalars)?;
    let s = scalars;
    #[rustfmt::skip]
    let gram = Matrix3::new(
        s.c,   s.a_e, s.a,
        s.a_e, s.b_e, s.e,
        s.a,   s.e,   s.b,
    );
    let rhs = Vector3::new(0.0, -2.0 * mandate.h_target, -2.0 * mandate.g_target);
    let lambda = gram.lu().solve(&rhs).ok_or(Error::SingularEsgDirection)?;
    Ok(Multipliers {
        lambda1: lambda[0],
        lambda2: lambda[1],
        lambda3: lambda[2],
    })
}

fn assemble(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    mandate: &MandateSpec,
    multipliers: Multipliers,
    binding: bool,
) -> FrontierPortfolio {
    let x0 = benchmark.weights();
    let shift = universe.inv_one() * multipliers.lambda1
        + universe.inv_xi() * multipliers.lambda2
        + universe.inv_mu() * multipliers.lambda3;
    let weights = x0 - shift * 0.5;
    let active = &weights - x0;
    FrontierPortfolio {
        tev: quad_form(universe.omega(), &active),
        variance: quad_form(universe.omega(), &weights),
        esg_excess: active.dot(universe.xi()),
        weights,
        multipliers,
        binding,
        g_target: mandate.g_target,
        h_target: mandate.h_target,
    }
}

/// Minimum-TEV portfolio for return target `g`, ignoring ESG scores.
pub fn tev_portfolio(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    g: f64,
) -> Result<FrontierPortfolio> {
    universe.check_len("benchmark", benchmark.len())?;
    let scalars = compute_scalars(universe);
    scalars.require_non_degenerate()?;
    Ok(assemble(
        universe,
        benchmark,
        &MandateSpec::return_target(g),
        tev_multipliers(&scalars, g),
        false,
    ))
}

/// Minimum-TEV portfolio under the ESG mandate `(x − x0)ᵀξ ≥ H`.
pub fn tev_esg_portfolio(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    mandate: &MandateSpec,
) -> Result<FrontierPortfolio> {
    universe.check_len("benchmark", benchmark.len())?;
    let scalars = compute_scalars(universe);
    scalars.require_non_degenerate()?;
    if !is_binding(&scalars, mandate) {
        let mult = tev_multipliers(&scalars, mandate.g_target);
        return Ok(assemble(universe, benchmark, mandate, mult, false));
    }
    if mandate.g_target == 0.0 && mandate.h_target == 0.0 {
        return Ok(assemble(
            universe,
            benchmark,
            mandate,
            Multipliers::default(),
            true,
        ));
    }
    let mult = solve_binding_multipliers(&scalars, mandate)?;
    debug_assert!(
        scalars.d_e < 0.0,
        "binding mandate with D_E = {}",
        scalars.d_e
    );
    debug_assert!(
        mult.lambda2 <= 1e-9 * (mult.lambda1.abs() + mult.lambda3.abs()).max(1.0),
        "binding mandate with λ2 = {}",
        mult.lambda2
    );
    Ok(assemble(universe, benchmark, mandate, mult, true))
}

/// Closed-form frontier variances for one universe and benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierModel {
    pub scalars: FrontierScalars,
    pub moments: BenchmarkMoments,
}

impl FrontierModel {
    pub fn new(universe: &MarketUniverse, benchmark: &Benchmark) -> Result<Self> {
        let scalars = compute_scalars(universe);
        scalars.require_non_degenerate()?;
        Ok(Self {
            scalars,
            moments: BenchmarkMoments::of(universe, benchmark)?,
        })
    }

    pub fn from_parts(scalars: FrontierScalars, moments: BenchmarkMoments) -> Result<Self> {
        scalars.require_non_degenerate()?;
        Ok(Self { scalars, moments })
    }

    /// `x0ᵀ(λ1·1 + λ2·ξ + λ3·μ)`
    fn benchmark_load(&self, m: &Multipliers) -> f64 {
        m.lambda1 * self.moments.budget
            + m.lambda2 * self.moments.esg
            + m.lambda3 * self.moments.mean
    }

    /// Minimum variance at expected return `G + x0ᵀμ`:
    /// `(C/D)(G + x0ᵀμ − A/C)² + 1/C`.
    pub fn variance_markowitz(&self, g: f64) -> f64 {
        let s = &self.scalars;
        let gap = g + self.moments.mean - s.a / s.c;
        s.c / s.d * gap * gap + 1.0 / s.c
    }

    /// Tracking error variance of the minimum-TEV portfolio, `C G² / D`.
    pub fn tev_tev(&self, g: f64) -> f64 {
        self.scalars.c * g * g / self.scalars.d
    }

    /// `x0ᵀΩx0 − x0ᵀ(λ̂1·1 + λ̂3·μ) + C G²/D`.
    pub fn variance_tev(&self, g: f64) -> f64 {
        let m = tev_multipliers(&self.scalars, g);
        self.moments.variance - self.benchmark_load(&m) + self.tev_tev(g)
    }

    /// Tracking error variance on the mandated frontier.
    pub fn tev_tev_esg(&self, mandate: &MandateSpec) -> f64 {
        if !is_binding(&self.scalars, mandate) {
            return self.tev_tev(mandate.g_target);
        }
        let s = &self.scalars;
        let (g, h) = (mandate.g_target, mandate.h_target);
        ((s.a_e * s.a_e - s.b_e * s.c) * g * g + (2.0 * s.e * s.c - 2.0 * s.a * s.a_e) * g * h
            - s.d * h * h)
            / s.d_e
    }

    /// Piecewise variance of the mandated frontier; equals
    /// [`FrontierModel::variance_tev`] wherever the mandate is slack.
    pub fn variance_tev_esg(&self, mandate: &MandateSpec) -> f64 {
        if !is_binding(&self.scalars, mandate) {
            return self.variance_tev(mandate.g_target);
        }
        let m = closed_form_multipliers(&self.scalars, mandate);
        self.moments.variance - self.benchmark_load(&m) + self.tev_tev_esg(mandate)
    }

    /// Quadratic `q2 G² + q1 G + q0` equal to `Var_TEV(G) − Var_TEV_ESG(G)`
    /// on the binding branch for a fixed `H`.
    fn difference_quadratic(&self, h: f64) -> (f64, f64, f64) {
        let s = &self.scalars;
        let per_g = closed_form_multipliers(s, &MandateSpec::return_target(1.0));
        let per_h = closed_form_multipliers(
            s,
            &MandateSpec {
                g_target: 0.0,
                h_target: 1.0,
            },
        );
        let roll = tev_multipliers(s, 1.0);
        let q2 = s.c / s.d - (s.a_e * s.a_e - s.b_e * s.c) / s.d_e;
        let q1 = self.benchmark_load(&per_g)
            - self.benchmark_load(&roll)
            - (2.0 * s.e * s.c - 2.0 * s.a * s.a_e) * h / s.d_e;
        let q0 = h * self.benchmark_load(&per_h) + s.d * h * h / s.d_e;
        (q2, q1, q0)
    }

    fn require_alignment(&self) -> Result<f64> {
        let s = &self.scalars;
        let cross = s.a * s.a_e - s.e * s.c;
        let denom = cross * cross;
        let scale = (s.a * s.a_e).abs() + (s.e * s.c).abs();
        if !(denom > 1e-14 * scale * scale) {
            return Err(Error::DegenerateUniverse(
                "E − (A/C)A_E = 0: the TEV and mandated frontiers have no isolated intersection"
                    .into(),
            ));
        }
        Ok(denom)
    }

    /// Nonzero root `G*` of `Var_TEV(G) − Var_TEV_ESG(G)` on the binding
    /// branch with `H = 0`, whether or not the mandate binds there.
    pub fn g_star_raw(&self) -> Result<f64> {
        let s = &self.scalars;
        // C·D_E − D(A_E² − B_E C), algebraically (A·A_E − E·C)²
        self.require_alignment()?;
        let denom = s.c * s.d_e - s.d * (s.a_e * s.a_e - s.b_e * s.c);
        let unit = s.a * s.d_e - s.d * (s.e * s.a_e - s.a * s.b_e);
        let esg = -s.d * (s.a * s.a_e - s.e * s.c);
        let ret = -(s.d_e * s.c + s.d * (s.b_e * s.c - s.a_e * s.a_e));
        Ok(
            2.0 * (unit * self.moments.budget + esg * self.moments.esg + ret * self.moments.mean)
                / denom,
        )
    }

    /// `G*` when the mandate binds there, `None` when the frontiers only touch at 0.
    pub fn g_star(&self) -> Result<Option<f64>> {
        let g = self.g_star_raw()?;
        let binds = g != 0.0 && is_binding(&self.scalars, &MandateSpec::return_target(g));
        Ok(binds.then_some(g))
    }

    /// Second intersection `Ĝ` of the frontiers for an ESG target `h`.
    ///
    /// One root of the variance-equality quadratic is the binding boundary;
    /// the other is returned when it lies on the binding side of the
    /// boundary. Tangency (both roots at the boundary) yields `None`.
    pub fn g_hat(&self, h: f64) -> Result<Option<f64>> {
        let region = BindingRegion::of(&self.scalars, h);
        let boundary = match region.boundary() {
            Some(b) => b,
            None => {
                return Err(Error::DegenerateUniverse(
                    "E − (A/C)A_E = 0: no binding boundary".into(),
                ))
            }
        };
        self.require_alignment()?;
        let (q2, q1, _) = self.difference_quadratic(h);
        let other = -q1 / q2 - boundary;
        let scale = other.abs().max(boundary.abs());
        if (other - boundary).abs() <= ROOT_COINCIDENCE_TOLERANCE * scale {
            return Ok(None);
        }
        let on_binding_side = match region {
            BindingRegion::Above(b) => other > b,
            BindingRegion::Below(b) => other < b,
            _ => false,
        };
        Ok(on_binding_side.then_some(other))
    }

    /// Evaluates the variance-difference quadratic (testing aid).
    pub fn binding_variance_gap(&self, g: f64, h: f64) -> f64 {
        let (q2, q1, q0) = self.difference_quadratic(h);
        (q2 * g + q1) * g + q0
    }
}

/// Variance functions by name, for callers that do not keep a [`FrontierModel`].
pub fn variance_markowitz(
    scalars: &FrontierScalars,
    moments: &BenchmarkMoments,
    g: f64,
) -> Result<f64> {
    Ok(FrontierModel::from_parts(*scalars, *moments)?.variance_markowitz(g))
}

pub fn variance_tev(universe: &MarketUniverse, benchmark: &Benchmark, g: f64) -> Result<f64> {
    Ok(FrontierModel::new(universe, benchmark)?.variance_tev(g))
}

pub fn variance_tev_esg(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    mandate: &MandateSpec,
) -> Result<f64> {
    Ok(FrontierModel::new(universe, benchmark)?.variance_tev_esg(mandate))
}

pub fn g_star(universe: &MarketUniverse, benchmark: &Benchmark) -> Result<Option<f64>> {
    FrontierModel::new(universe, benchmark)?.g_star()
}

pub fn g_hat(universe: &MarketUniverse, benchmark: &Benchmark, h: f64) -> Result<Option<f64>> {
    FrontierModel::new(universe, benchmark)?.g_hat(h)
}

/// Affine dependence of `G*` on the benchmark's mean and ESG score:
/// `G* = d1 + d2·x0ᵀμ + d3·x0ᵀξ` for fully invested benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImprovementRegion {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl ImprovementRegion {
    pub fn g_star_at(&self, benchmark_mean: f64, benchmark_esg: f64) -> f64 {
        self.d1 + self.d2 * benchmark_mean + self.d3 * benchmark_esg
    }

    /// Benchmark mean on the `G* = 0` line for a given benchmark ESG score.
    pub fn zero_line_mean(&self, benchmark_esg: f64) -> f64 {
        -(self.d1 + self.d3 * benchmark_esg) / self.d2
    }
}

pub fn improvement_region(scalars: &FrontierScalars) -> Result<ImprovementRegion> {
    scalars.require_non_degenerate()?;
    let s = scalars;
    let model = FrontierModel {
        scalars: *s,
        moments: BenchmarkMoments {
            budget: 1.0,
            mean: 0.0,
            esg: 0.0,
            variance: 0.0,
        },
    };
    model.require_alignment()?;
    let denom = s.c * s.d_e - s.d * (s.a_e * s.a_e - s.b_e * s.c);
    Ok(ImprovementRegion {
        d1: 2.0 * (s.a * s.d_e - s.d * (s.e * s.a_e - s.a * s.b_e)) / denom,
        d2: -2.0 * (s.d_e * s.c + s.d * (s.b_e * s.c - s.a_e * s.a_e)) / denom,
        d3: -2.0 * s.d * (s.a * s.a_e - s.e * s.c) / denom,
    })
}

/// The three frontiers sampled on a grid of return targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierCurve {
    pub h_target: f64,
    pub g_grid: Vec<f64>,
    pub var_front: Vec<f64>,
    pub var_tev: Vec<f64>,
    pub var_tev_esg: Vec<f64>,
    pub tev_tev: Vec<f64>,
    pub tev_tev_esg: Vec<f64>,
    pub binding_mask: Vec<bool>,
    /// Return targets where the TEV and mandated frontiers meet.
    pub intersections: Vec<f64>,
    pub binding_region: BindingRegion,
    pub scalars: FrontierScalars,
    pub moments: BenchmarkMoments,
}

pub fn default_grid() -> Vec<f64> {
    linspace(DEFAULT_G_MIN, DEFAULT_G_MAX, DEFAULT_G_STEPS)
}

pub fn frontier_sweep(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    g_grid: &[f64],
    h: f64,
) -> Result<FrontierCurve> {
    frontier_sweep_with(universe, benchmark, g_grid, h, Execution::default())
}

pub fn frontier_sweep_with(
    universe: &MarketUniverse,
    benchmark: &Benchmark,
    g_grid: &[f64],
    h: f64,
    exec: Execution,
) -> Result<FrontierCurve> {
    if g_grid.iter().any(|g| !g.is_finite()) || !h.is_finite() {
        return Err(Error::InvalidInput("grid and H must be finite".into()));
    }
    if g_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("return grid must be sorted".into()));
    }
    let model = FrontierModel::new(universe, benchmark)?;
    let points = exec.map(g_grid, |&g| {
        let mandate = MandateSpec {
            g_target: g,
            h_target: h,
        };
        (
            model.variance_markowitz(g),
            model.variance_tev(g),
            model.variance_tev_esg(&mandate),
            model.tev_tev(g),
            model.tev_tev_esg(&mandate),
            is_binding(&model.scalars, &mandate),
        )
    });

    let binding_region = BindingRegion::of(&model.scalars, h);
    let mut intersections = Vec::new();
    if let Some(boundary) = binding_region.boundary() {
        intersections.push(boundary);
        match model.g_hat(h) {
            Ok(Some(g)) => intersections.push(g),
            Ok(None) | Err(Error::DegenerateUniverse(_)) => {}
            Err(e) => return Err(e),
        }
    }
    intersections.sort_by(f64::total_cmp);

    let mut curve = FrontierCurve {
        h_target: h,
        g_grid: g_grid.to_vec(),
        var_front: Vec::with_capacity(points.len()),
        var_tev: Vec::with_capacity(points.len()),
        var_tev_esg: Vec::with_capacity(points.len()),
        tev_tev: Vec::with_capacity(points.len()),
        tev_tev_esg: Vec::with_capacity(points.len()),
        binding_mask: Vec::with_capacity(points.len()),
        intersections,
        binding_region,
        scalars: model.scalars,
        moments: model.moments,
    };
    for (front, tev, esg, tev_t, tev_e, binding) in points {
        curve.var_front.push(front);
        curve.var_tev.push(tev);
        curve.var_tev_esg.push(esg);
        curve.tev_tev.push(tev_t);
        curve.tev_tev_esg.push(tev_e);
        curve.binding_mask.push(binding);
    }
    Ok(curve)
}

/// Binding criterion for uncorrelated assets: `Σ ξᵢ vᵢ (μᵢ − A/C) < 0` with
/// `vᵢ = 1/Ωᵢᵢ`. Equivalent to `E − (A/C)A_E < 0` when Ω is diagonal.
pub fn diagonal_binding_criterion(mu: &[f64], xi: &[f64], variances: &[f64]) -> bool {
    let inv: Vec<f64> = variances.iter().map(|v| 1.0 / v).collect();
    let c: f64 = inv.iter().sum();
    let a: f64 = inv.iter().zip(mu).map(|(v, m)| v * m).sum();
    let mvp_mean = a / c;
    let total: f64 = xi
        .iter()
        .zip(&inv)
        .zip(mu)
        .map(|((x, v), m)| x * v * (m - mvp_mean))
        .sum();
    total < 0.0
}

/// With `ξ = γμ` the mandate binds for `G > 0` exactly when `γ < 0`.
pub fn linear_binding_criterion(gamma: f64) -> bool {
    gamma < 0.0
}
