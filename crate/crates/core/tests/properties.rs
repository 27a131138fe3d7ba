use esgtev::empirical::cleaning::{normalize_esg, winsorize};
use esgtev::empirical::panel::{ReturnEsgPanel, YearMonth};
use esgtev::empirical::regression::{cross_sectional_regress, Regressor};
use esgtev::equilibrium::{
    clear_market, equilibrium_mu, EquilibriumEconomy, InstitutionalInvestor, RetailInvestor,
};
use esgtev::frontier::{
    binding_boundary, tev_esg_portfolio, tev_portfolio, FrontierModel, MandateSpec,
};
use esgtev::linalg::{max_abs_diff, quad_form};
use esgtev::market::{compute_scalars, mvp_weights, portfolio_stats, Benchmark, MarketUniverse};
use esgtev::verify::{instance_rng, random_benchmark, random_universe};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn universe_and_benchmark(seed: u64, n: usize) -> (MarketUniverse, Benchmark) {
    let mut rng = instance_rng(seed, n);
    let u = random_universe(&mut rng, n).unwrap();
    let b = random_benchmark(&mut rng, n).unwrap();
    (u, b)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mvp_variance_is_a_lower_bound(seed in any::<u64>(), n in 3usize..12, shift_seed in any::<u64>()) {
        let (u, _) = universe_and_benchmark(seed, n);
        let s = compute_scalars(&u);
        prop_assert!(s.c > 0.0 && s.d > 0.0);
        let mvp = mvp_weights(&u);
        prop_assert!(rel(quad_form(u.omega(), &mvp), 1.0 / s.c) < 1e-10);
        let mut rng = instance_rng(shift_seed, 0);
        for _ in 0..20 {
            let mut w = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let total = w.sum();
            w.add_scalar_mut((1.0 - total) / n as f64);
            prop_assert!(quad_form(u.omega(), &w) >= 1.0 / s.c * (1.0 - 1e-12));
        }
    }

    #[test]
    fn scalars_ignore_asset_order(seed in any::<u64>(), n in 3usize..12) {
        let (u, _) = universe_and_benchmark(seed, n);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut instance_rng(seed ^ 1, 0));
        let shuffled = MarketUniverse::unlabeled(
            DVector::from_fn(n, |i, _| u.mu()[perm[i]]),
            DVector::from_fn(n, |i, _| u.xi()[perm[i]]),
            DMatrix::from_fn(n, n, |i, j| u.omega()[(perm[i], perm[j])]),
        ).unwrap();
        let (a, b) = (compute_scalars(&u), compute_scalars(&shuffled));
        for (x, y) in [(a.a, b.a), (a.b, b.b), (a.c, b.c), (a.d, b.d), (a.a_e, b.a_e), (a.b_e, b.b_e), (a.e, b.e), (a.d_e, b.d_e)] {
            prop_assert!(rel(x, y) < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn mvp_msd_ratio(seed in any::<u64>(), n in 3usize..12) {
        let (u, b) = universe_and_benchmark(seed, n);
        let s = compute_scalars(&u);
        let stats = portfolio_stats(&u, &mvp_weights(&u), &b).unwrap();
        prop_assert!(rel(stats.msd_ratio, s.a / s.c * s.c.sqrt()) < 1e-10);
    }

    #[test]
    fn mandated_portfolio_kkt(seed in any::<u64>(), n in 3usize..10, g in -0.08f64..0.08, h in -0.1f64..0.15) {
        let (u, b) = universe_and_benchmark(seed, n);
        let mandate = MandateSpec::new(g, h).unwrap();
        let p = tev_esg_portfolio(&u, &b, &mandate).unwrap();
        let s = compute_scalars(&u);
        // Nearly collinear draws give huge multipliers and weights; scale round-off accordingly.
        let size = 1.0 + p.weights.amax();
        prop_assert!((p.multipliers.lambda2 * (p.esg_excess - h)).abs() < 1e-9 * size * (1.0 + p.multipliers.lambda2.abs()));
        prop_assert!((p.weights.sum() - 1.0).abs() < 1e-10 * size);
        prop_assert!(((&p.weights - b.weights()).dot(u.mu()) - g).abs() < 1e-10 * size);
        prop_assert!(p.esg_excess >= h - 1e-10 * size);
        if p.binding {
            prop_assert!(p.multipliers.lambda2 <= 0.0);
            prop_assert!(s.d_e < 0.0);
        } else {
            prop_assert_eq!(p.multipliers.lambda2, 0.0);
            let plain = tev_portfolio(&u, &b, g).unwrap();
            prop_assert!(max_abs_diff(&p.weights, &plain.weights) < 1e-12);
        }
        let plain = tev_portfolio(&u, &b, g).unwrap();
        prop_assert!(p.tev >= plain.tev * (1.0 - 1e-10) - 1e-15);
    }

    #[test]
    fn closed_form_variances_match_portfolios(seed in any::<u64>(), n in 3usize..10, h in -0.05f64..0.1) {
        let (u, b) = universe_and_benchmark(seed, n);
        let model = FrontierModel::new(&u, &b).unwrap();
        for k in 0..201 {
            let g = -0.1 + 0.001 * k as f64;
            let mandate = MandateSpec::new(g, h).unwrap();
            let p = tev_esg_portfolio(&u, &b, &mandate).unwrap();
            let t = tev_portfolio(&u, &b, g).unwrap();
            prop_assert!(rel(model.variance_tev_esg(&mandate), quad_form(u.omega(), &p.weights)) < 1e-10);
            prop_assert!(rel(model.variance_tev(g), quad_form(u.omega(), &t.weights)) < 1e-10);
        }
    }

    #[test]
    fn mandated_variance_is_continuous_at_the_boundary(seed in any::<u64>(), n in 3usize..10, h in -0.05f64..0.1) {
        let (u, b) = universe_and_benchmark(seed, n);
        let model = FrontierModel::new(&u, &b).unwrap();
        if let Some(gb) = binding_boundary(&model.scalars, h) {
            let var = |g: f64| model.variance_tev_esg(&MandateSpec::new(g, h).unwrap());
            let jump = |eps: f64| (var(gb - eps) - var(gb + eps)).abs();
            // The jump shrinks linearly with the offset, so the branches meet.
            let floor = 1e-12 * var(gb).abs().max(1.0);
            prop_assert!(jump(1e-8) <= jump(1e-6) / 50.0 + floor, "{} {}", jump(1e-8), jump(1e-6));
        }
    }

    #[test]
    fn equilibrium_round_trip_and_wealth_identity(seed in any::<u64>(), n in 3usize..8, scale in 0.1f64..50.0) {
        let mut rng = instance_rng(seed, 0);
        let u = random_universe(&mut rng, n).unwrap();
        let institutions: Vec<InstitutionalInvestor> = (0..rng.random_range(1..=3))
            .map(|_| {
                let bench = random_benchmark(&mut rng, n).unwrap();
                InstitutionalInvestor::new(rng.random_range(1.0..10.0), rng.random_range(1.0..6.0), bench, rng.random_range(-0.3..0.3)).unwrap()
            })
            .collect();
        let retail: Vec<RetailInvestor> = (0..rng.random_range(0..=2))
            .map(|_| RetailInvestor::new(rng.random_range(1.0..10.0), rng.random_range(1.0..6.0)).unwrap())
            .collect();
        let economy = EquilibriumEconomy::new(u.clone(), institutions.clone(), retail.clone(), 0.01).unwrap();
        let clearing = clear_market(&economy).unwrap();
        let mu = equilibrium_mu(&clearing.pricing, &u, &clearing.market_weights).unwrap();
        prop_assert!(max_abs_diff(&mu, u.mu()) < 1e-10);

        let held: f64 = institutions.iter().zip(&clearing.institutional).map(|(i, x)| i.wealth * x.weights.sum()).sum::<f64>()
            + retail.iter().zip(&clearing.retail).map(|(r, y)| r.wealth * y.sum()).sum::<f64>();
        prop_assert!((clearing.market_wealth * clearing.market_weights.sum() - held).abs() < 1e-9 * clearing.market_wealth);
        for x in &clearing.institutional {
            prop_assert!((x.weights.sum() - 1.0).abs() < 1e-10);
        }
        let gamma = clearing.pricing.gamma;
        prop_assert!(gamma >= 0.0);
        prop_assert_eq!(gamma > 0.0, !clearing.pricing.binding_set.is_empty());

        // Scaling every wealth by the same factor leaves prices unchanged.
        let scaled = EquilibriumEconomy::new(
            u.clone(),
            institutions.iter().map(|i| InstitutionalInvestor::new(i.wealth * scale, i.risk_aversion, i.benchmark.clone(), i.h_target).unwrap()).collect(),
            retail.iter().map(|r| RetailInvestor::new(r.wealth * scale, r.risk_aversion).unwrap()).collect(),
            0.01,
        ).unwrap();
        let p = clear_market(&scaled).unwrap().pricing;
        prop_assert!((p.gamma - gamma).abs() < 1e-12 * (1.0 + gamma.abs()));
        prop_assert!((p.r_f_star - clearing.pricing.r_f_star).abs() < 1e-12);
    }

    #[test]
    fn ols_residuals_are_orthogonal(seed in any::<u64>(), n in 12usize..80, k in 1usize..4) {
        let mut rng = instance_rng(seed, 0);
        let regs: Vec<Regressor> = (0..k)
            .map(|i| Regressor::new(format!("x{i}"), (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()))
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fit = cross_sectional_regress(&y, &regs, "m").unwrap();
        let e = &fit.residuals;
        let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
        prop_assert!(e.iter().sum::<f64>().abs() < 1e-8 * scale);
        for r in &regs {
            let dot: f64 = r.values.iter().zip(e).map(|(x, y)| x * y).sum();
            prop_assert!(dot.abs() < 1e-8 * scale);
        }
        prop_assert!(fit.coefficients.iter().all(|c| c.std_error > 0.0));
    }

    #[test]
    fn winsorize_is_idempotent_and_order_preserving(seed in any::<u64>(), t in 6usize..30, n in 3usize..15) {
        let mut rng = instance_rng(seed, 0);
        let returns = DMatrix::from_fn(t, n, |_, _| {
            if rng.random_bool(0.05) { f64::NAN } else { rng.random_range(-0.5..0.5) }
        });
        let esg = DMatrix::from_fn(t, n, |_, _| rng.random_range(0.0..100.0));
        let panel = synthetic_panel(returns, esg);
        let once = winsorize(&panel, 5.0, 95.0).unwrap();
        let twice = winsorize(&once, 5.0, 95.0).unwrap();
        for (x, y) in once.returns.iter().zip(twice.returns.iter()) {
            prop_assert!(x == y || (x.is_nan() && y.is_nan()));
        }
        let pairs: Vec<(f64, f64)> = panel.returns.iter().zip(once.returns.iter())
            .filter(|(x, _)| !x.is_nan()).map(|(x, y)| (*x, *y)).collect();
        for a in &pairs {
            for b in &pairs {
                if a.0 <= b.0 {
                    prop_assert!(a.1 <= b.1);
                }
            }
        }
        let normalized = normalize_esg(&panel).unwrap();
        for row in normalized.esg.row_iter() {
            prop_assert!((row.sum() / n as f64).abs() < 1e-10);
        }
    }
}

fn synthetic_panel(returns: DMatrix<f64>, esg: DMatrix<f64>) -> ReturnEsgPanel {
    let (t, n) = returns.shape();
    let mut dates = vec![YearMonth::new(2010, 1).unwrap()];
    for _ in 1..t {
        let last = *dates.last().unwrap();
        dates.push(last.next());
    }
    ReturnEsgPanel::new(
        dates,
        (0..n).map(|j| format!("A{j}")).collect(),
        returns,
        esg,
        DMatrix::from_element(t, n, 1.0),
    )
    .unwrap()
}

#[test]
fn bundled_four_asset_files_match_fixture_module() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/four_asset");
    let u =
        esgtev::io::read_universe(&dir.join("assets.csv"), &dir.join("covariance.csv")).unwrap();
    let expected = esgtev::fixtures::four_asset_universe();
    assert_eq!(u.asset_ids(), expected.asset_ids());
    assert_eq!(u.mu(), expected.mu());
    assert_eq!(u.xi(), expected.xi());
    assert_eq!(u.omega(), expected.omega());
    for (file, bench) in [
        (
            "risk_reducer.csv",
            esgtev::fixtures::risk_reducer_benchmark(),
        ),
        (
            "return_enhancer.csv",
            esgtev::fixtures::return_enhancer_benchmark(),
        ),
        ("demanding.csv", esgtev::fixtures::demanding_benchmark()),
    ] {
        let read = esgtev::io::read_benchmark(&dir.join(file), &u).unwrap();
        assert_eq!(read.weights(), bench.weights(), "{file}");
    }
    let economy = esgtev::io::read_economy(&dir.join("economy.json")).unwrap();
    assert_eq!(economy.institutions.len(), 2);
    assert_eq!(economy.retail.len(), 1);
}
