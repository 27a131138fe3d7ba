//! `esgtev` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numerical degeneracy,
//! 4 bad input data, 5 filesystem failure. Failures print a JSON object on
//! standard error. Set `ESGTEV_LOG=info` for progress messages on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use esgtev::empirical::pipeline::{build_cross_section, portfolio_binding_check, prepare};
use esgtev::empirical::portfolios::Weighting;
use esgtev::empirical::regression::fit_model;
use esgtev::empirical::{format_table, model_comparison, ModelKind, PipelineConfig, WinsorScope};
use esgtev::equilibrium::{beta_form, clear_market_with};
use esgtev::frontier::{
    frontier_sweep_with, improvement_region, tev_esg_portfolio, BindingRegion, MandateSpec,
    DEFAULT_G_MAX, DEFAULT_G_MIN, DEFAULT_G_STEPS,
};
use esgtev::io::{self, format_g, to_json_string, CsvText};
use esgtev::linalg::{linspace, max_abs_diff};
use esgtev::market::{compute_scalars, mvp_weights};
use esgtev::oracle::qp_oracle;
use esgtev::synth::{generate, SynthConfig};
use esgtev::verify::{oracle_suite, DEFAULT_INSTANCES};
use esgtev::{Error, ErrorClass, Execution, FrontierModel};

const LOG_ENV: &str = "ESGTEV_LOG";

#[derive(Parser, Debug)]
#[command(
    name = "esgtev",
    version,
    about = "Benchmark-relative frontiers under ESG mandates, equilibrium pricing and its estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frontier scalars A, B, C, D and their ESG counterparts.
    Scalars {
        #[command(flatten)]
        universe: UniverseArgs,
        #[command(flatten)]
        output: JsonOutput,
    },
    /// Sample the Markowitz, TEV and TEV-ESG frontiers on a grid of return targets.
    Frontier {
        #[command(flatten)]
        universe: UniverseArgs,
        #[command(flatten)]
        benchmark: BenchmarkArgs,
        #[arg(long, default_value_t = DEFAULT_G_MIN, allow_negative_numbers = true)]
        g_min: f64,
        #[arg(long, default_value_t = DEFAULT_G_MAX, allow_negative_numbers = true)]
        g_max: f64,
        #[arg(long, default_value_t = DEFAULT_G_STEPS)]
        g_steps: usize,
        /// ESG over-performance target.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        h: f64,
        #[command(flatten)]
        exec: ExecArgs,
        #[command(flatten)]
        output: TabularOutput,
    },
    /// Minimum-TEV portfolio under the ESG mandate, cross-checked against the QP oracle.
    Portfolio {
        #[command(flatten)]
        universe: UniverseArgs,
        #[command(flatten)]
        benchmark: BenchmarkArgs,
        /// Return over-performance target.
        #[arg(long, allow_negative_numbers = true)]
        g: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        h: f64,
        #[command(flatten)]
        output: TabularOutput,
    },
    /// Frontier intersections G* and Ĝ and the improvement region.
    Gstar {
        #[command(flatten)]
        universe: UniverseArgs,
        #[command(flatten)]
        benchmark: BenchmarkArgs,
        /// ESG target for Ĝ; omitted means only G* is reported.
        #[arg(long, allow_negative_numbers = true)]
        h: Option<f64>,
        #[command(flatten)]
        output: JsonOutput,
    },
    /// Market clearing and equilibrium pricing for an economy file.
    Equilibrium {
        /// Economy JSON; relative paths inside resolve against its directory.
        #[arg(long)]
        economy: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
        #[command(flatten)]
        output: TabularOutput,
    },
    /// Clean a return/score panel: drop unscored assets, winsorize, normalize scores.
    Ingest {
        #[command(flatten)]
        panel: PanelArgs,
        #[command(flatten)]
        cleaning: CleaningArgs,
        #[command(flatten)]
        output: TabularOutput,
    },
    /// Market and benchmark-residual betas of the size-filtered assets.
    Betas {
        #[command(flatten)]
        panel: PanelArgs,
        #[command(flatten)]
        cleaning: CleaningArgs,
        #[command(flatten)]
        exec: ExecArgs,
        #[command(flatten)]
        output: TabularOutput,
    },
    /// Cross-sectional regressions of average returns on betas and scores.
    Regress {
        #[command(flatten)]
        panel: PanelArgs,
        #[command(flatten)]
        cleaning: CleaningArgs,
        /// Model to fit; repeat for several. Defaults to every model the inputs support.
        #[arg(long = "model", value_parser = parse_model)]
        models: Vec<ModelKind>,
        #[command(flatten)]
        exec: ExecArgs,
        #[command(flatten)]
        output: ReportOutput,
    },
    /// Full pipeline: binding check on portfolios, betas, every model, ranked by AIC.
    Compare {
        #[command(flatten)]
        panel: PanelArgs,
        /// `asset,sector` file; required unless --quantiles is given.
        #[arg(long)]
        sectors: Option<PathBuf>,
        /// Group on score quantiles instead of sectors.
        #[arg(long)]
        quantiles: Option<usize>,
        #[arg(long, default_value_t = 6)]
        min_assets: usize,
        #[command(flatten)]
        cleaning: CleaningArgs,
        #[arg(long = "model", value_parser = parse_model)]
        models: Vec<ModelKind>,
        #[command(flatten)]
        exec: ExecArgs,
        #[command(flatten)]
        output: ReportOutput,
    },
    /// Randomized closed-form versus QP-oracle equivalence suite.
    OracleCheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_INSTANCES)]
        instances: usize,
        /// Include per-instance results.
        #[arg(long)]
        detail: bool,
        #[command(flatten)]
        exec: ExecArgs,
        #[command(flatten)]
        output: JsonOutput,
    },
    /// Write a synthetic equilibrium panel with a known ESG premium.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = SynthConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = SynthConfig::default().n_assets)]
        assets: usize,
        #[arg(long, default_value_t = SynthConfig::default().n_months)]
        months: usize,
        /// ESG premium per score point per month.
        #[arg(long, default_value_t = SynthConfig::default().gamma)]
        gamma: f64,
    },
}

#[derive(Args, Debug)]
struct UniverseArgs {
    /// `asset,mu,xi` file.
    #[arg(long)]
    assets: PathBuf,
    /// Covariance matrix with asset ids as header.
    #[arg(long)]
    covariance: PathBuf,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// `asset,weight` file.
    #[arg(long)]
    benchmark: PathBuf,
}

#[derive(Args, Debug)]
struct PanelArgs {
    /// Long `date,asset,return,market_cap` file.
    #[arg(long)]
    returns: PathBuf,
    /// Long `date,asset,esg` file.
    #[arg(long)]
    esg: PathBuf,
    /// `date,mkt_rf,smb,hml,rmw,cma,rf` file; enables excess returns and factor models.
    #[arg(long)]
    factors: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CleaningArgs {
    #[arg(long, default_value_t = 2.5)]
    lower_pct: f64,
    #[arg(long, default_value_t = 97.5)]
    upper_pct: f64,
    #[arg(long, value_enum, default_value_t = Scope::Pooled)]
    winsor_scope: Scope,
    /// Percent of assets kept by average capitalization.
    #[arg(long, default_value_t = 75.0)]
    cap_filter: f64,
    /// Benchmark constituents: largest assets by final-month capitalization.
    #[arg(long, default_value_t = 50)]
    top_k: usize,
    #[arg(long, value_enum, default_value_t = MarketWeighting::Value)]
    market_weighting: MarketWeighting,
}

#[derive(Args, Debug)]
struct ExecArgs {
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

impl ExecArgs {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Args, Debug)]
struct JsonOutput {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TabularOutput {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct ReportOutput {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scope {
    Pooled,
    PerMonth,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MarketWeighting {
    Value,
    Equal,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = ModelKind::ALL.iter().map(|m| m.name()).collect();
        format!("unknown model {s:?}; expected one of {}", names.join(", "))
    })
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    class: &'static str,
    kind: String,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            class: "config",
            kind: "invalid_config".into(),
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, class) = match e.class() {
            ErrorClass::Config => (2, "config"),
            ErrorClass::Numerical => (3, "numerical"),
            ErrorClass::Data => (4, "data"),
            ErrorClass::Io => (5, "io"),
        };
        Self {
            code,
            class,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn log(msg: &str) {
    if std::env::var(LOG_ENV).is_ok_and(|v| !v.is_empty() && v != "off" && v != "0") {
        eprintln!("esgtev: {msg}");
    }
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::config(format!(
            "input file {} does not exist",
            path.display()
        )))
    }
}

/// Writes via a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| {
        Failure::from(Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(io_err)?;
    }
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, contents: &str) -> CliResult<()> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn json_text(v: &impl serde::Serialize) -> CliResult<String> {
    Ok(to_json_string(v)?)
}

fn load_universe(args: &UniverseArgs) -> CliResult<esgtev::MarketUniverse> {
    require_file(&args.assets)?;
    require_file(&args.covariance)?;
    Ok(io::read_universe(&args.assets, &args.covariance)?)
}

fn load_benchmark(
    args: &BenchmarkArgs,
    u: &esgtev::MarketUniverse,
) -> CliResult<esgtev::Benchmark> {
    require_file(&args.benchmark)?;
    Ok(io::read_benchmark(&args.benchmark, u)?)
}

fn check_finite(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Failure::config(format!("--{name} must be finite")))
    }
}

fn pipeline_config(c: &CleaningArgs, models: &[ModelKind]) -> CliResult<PipelineConfig> {
    if !(0.0 <= c.lower_pct && c.lower_pct < c.upper_pct && c.upper_pct <= 100.0) {
        return Err(Failure::config(
            "winsor bounds need 0 <= lower-pct < upper-pct <= 100",
        ));
    }
    if !(c.cap_filter > 0.0 && c.cap_filter <= 100.0) {
        return Err(Failure::config("--cap-filter must lie in (0, 100]"));
    }
    if c.top_k == 0 {
        return Err(Failure::config("--top-k must be positive"));
    }
    let mut models = models.to_vec();
    models.dedup();
    Ok(PipelineConfig {
        lower_pct: c.lower_pct,
        upper_pct: c.upper_pct,
        winsor_scope: match c.winsor_scope {
            Scope::Pooled => WinsorScope::Pooled,
            Scope::PerMonth => WinsorScope::PerMonth,
        },
        cap_filter_pct: c.cap_filter,
        benchmark_top_k: c.top_k,
        market_weighting: match c.market_weighting {
            MarketWeighting::Value => Weighting::Value,
            MarketWeighting::Equal => Weighting::Equal,
        },
        models: if models.is_empty() {
            ModelKind::ALL.to_vec()
        } else {
            models
        },
        ..PipelineConfig::default()
    })
}

struct LoadedPanel {
    panel: esgtev::empirical::ReturnEsgPanel,
    factors: Option<esgtev::empirical::FactorPanel>,
}

fn load_panel(args: &PanelArgs) -> CliResult<LoadedPanel> {
    require_file(&args.returns)?;
    require_file(&args.esg)?;
    if let Some(f) = &args.factors {
        require_file(f)?;
    }
    let panel = io::read_panel(&args.returns, &args.esg)?;
    let factors = args.factors.as_deref().map(io::read_factors).transpose()?;
    log(&format!(
        "panel: {} months x {} assets",
        panel.n_months(),
        panel.n_assets()
    ));
    Ok(LoadedPanel { panel, factors })
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}

fn weights_map(ids: &[String], w: &[f64]) -> Value {
    let mut m = Map::new();
    for (id, x) in ids.iter().zip(w.iter()) {
        m.insert(id.clone(), json!(x));
    }
    Value::Object(m)
}

fn region_json(r: &BindingRegion) -> Value {
    match r {
        BindingRegion::Above(b) => json!({"binds": "above", "boundary": b}),
        BindingRegion::Below(b) => json!({"binds": "below", "boundary": b}),
        BindingRegion::Everywhere => json!({"binds": "everywhere", "boundary": null}),
        BindingRegion::Nowhere => json!({"binds": "nowhere", "boundary": null}),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Scalars { universe, output } => {
            let u = load_universe(&universe)?;
            let s = compute_scalars(&u);
            let mvp = mvp_weights(&u);
            let report = json!({
                "scalars": s,
                "mvp_mean": s.mvp_mean(),
                "esg_return_alignment": s.esg_return_alignment(),
                "esg_dispersion": s.esg_dispersion(),
                "degenerate": s.is_degenerate(),
                "mvp": {
                    "weights": weights_map(u.asset_ids(), mvp.as_slice()),
                    "mean": s.mvp_mean(),
                    "variance": 1.0 / s.c,
                    "esg": s.a_e / s.c,
                },
            });
            emit(&output.out, &json_text(&report)?)
        }
        Command::Frontier {
            universe,
            benchmark,
            g_min,
            g_max,
            g_steps,
            h,
            exec,
            output,
        } => {
            for (n, v) in [("g-min", g_min), ("g-max", g_max), ("h", h)] {
                check_finite(n, v)?;
            }
            if g_min.is_nan() || g_max.is_nan() || g_min >= g_max {
                return Err(Failure::config("--g-min must be below --g-max"));
            }
            if g_steps < 2 {
                return Err(Failure::config("--g-steps must be at least 2"));
            }
            let u = load_universe(&universe)?;
            let b = load_benchmark(&benchmark, &u)?;
            let grid = linspace(g_min, g_max, g_steps);
            let curve = frontier_sweep_with(&u, &b, &grid, h, exec.execution())?;
            let text = match output.format {
                Format::Json => json_text(&curve)?,
                Format::Csv => {
                    let mut text = io::frontier_csv(&curve);
                    let mut block = CsvText::new(&["intersection"]);
                    for g in &curve.intersections {
                        block.row([format_g(*g)]);
                    }
                    text.push('\n');
                    text.push_str(&block.finish());
                    text
                }
            };
            emit(&output.out, &text)
        }
        Command::Portfolio {
            universe,
            benchmark,
            g,
            h,
            output,
        } => {
            check_finite("g", g)?;
            check_finite("h", h)?;
            let u = load_universe(&universe)?;
            let b = load_benchmark(&benchmark, &u)?;
            let mandate = MandateSpec::new(g, h)?;
            let p = tev_esg_portfolio(&u, &b, &mandate)?;
            let oracle = if u.len() <= esgtev::oracle::ORACLE_MAX_ASSETS {
                Some(qp_oracle(&u, &b, &mandate)?)
            } else {
                None
            };
            let text = match output.format {
                Format::Csv => {
                    let mut csv = CsvText::new(&["asset", "weight", "benchmark", "oracle"]);
                    for (j, id) in u.asset_ids().iter().enumerate() {
                        csv.row([
                            id.clone(),
                            format_g(p.weights[j]),
                            format_g(b.weights()[j]),
                            oracle
                                .as_ref()
                                .map_or(String::new(), |o| format_g(o.weights[j])),
                        ]);
                    }
                    csv.finish()
                }
                Format::Json => json_text(&json!({
                    "g_target": g,
                    "h_target": h,
                    "binding": p.binding,
                    "multipliers": p.multipliers,
                    "tev": p.tev,
                    "variance": p.variance,
                    "esg_excess": p.esg_excess,
                    "weights": weights_map(u.asset_ids(), p.weights.as_slice()),
                    "oracle_max_deviation": opt(oracle.as_ref().map(|o| max_abs_diff(&o.weights, &p.weights))),
                }))?,
            };
            emit(&output.out, &text)
        }
        Command::Gstar {
            universe,
            benchmark,
            h,
            output,
        } => {
            if let Some(h) = h {
                check_finite("h", h)?;
            }
            let u = load_universe(&universe)?;
            let b = load_benchmark(&benchmark, &u)?;
            let model = FrontierModel::new(&u, &b)?;
            let s = model.scalars;
            let mut report = json!({
                "esg_return_alignment": s.esg_return_alignment(),
                "g_star": opt(model.g_star()?),
                "g_star_raw": model.g_star_raw()?,
                "binding_region": region_json(&BindingRegion::of(&s, 0.0)),
                "improvement_region": improvement_region(&s)?,
                "benchmark": model.moments,
            });
            if let Some(h) = h {
                report["h_target"] = json!(h);
                report["g_hat"] = opt(model.g_hat(h)?);
                report["binding_region_h"] = region_json(&BindingRegion::of(&s, h));
            }
            emit(&output.out, &json_text(&report)?)
        }
        Command::Equilibrium {
            economy,
            exec,
            output,
        } => {
            require_file(&economy)?;
            let econ = io::read_economy(&economy)?;
            let clearing = clear_market_with(&econ, exec.execution())?;
            let u = &econ.universe;
            let betas = if econ.institutions.is_empty() {
                None
            } else {
                Some(beta_form(
                    &clearing.pricing,
                    u,
                    &clearing.market_weights,
                    &clearing.pricing.aggregate_benchmark,
                )?)
            };
            let mu = esgtev::equilibrium::equilibrium_mu(
                &clearing.pricing,
                u,
                &clearing.market_weights,
            )?;
            let text = match output.format {
                Format::Csv => {
                    let mut csv = CsvText::new(&[
                        "asset",
                        "market_weight",
                        "mu",
                        "mu_implied",
                        "beta_m",
                        "beta_b",
                    ]);
                    for (j, id) in u.asset_ids().iter().enumerate() {
                        let beta = betas.as_ref().map(|b| b.assets[j]);
                        csv.row([
                            id.clone(),
                            format_g(clearing.market_weights[j]),
                            format_g(u.mu()[j]),
                            format_g(mu[j]),
                            beta.map_or(String::new(), |b| format_g(b.beta_m)),
                            beta.map_or(String::new(), |b| format_g(b.beta_b)),
                        ]);
                    }
                    csv.finish()
                }
                Format::Json => {
                    let institutions: Vec<Value> = clearing
                        .institutional
                        .iter()
                        .map(|o| {
                            json!({
                                "omega1": o.omega1,
                                "omega2": o.omega2,
                                "binding": o.binding,
                                "weights": weights_map(u.asset_ids(), o.weights.as_slice()),
                            })
                        })
                        .collect();
                    json_text(&json!({
                        "pricing": clearing.pricing,
                        "market_wealth": clearing.market_wealth,
                        "market_weights": weights_map(u.asset_ids(), clearing.market_weights.as_slice()),
                        "mu_residual": max_abs_diff(&mu, u.mu()),
                        "institutions": institutions,
                        "beta_form": betas,
                    }))?
                }
            };
            emit(&output.out, &text)
        }
        Command::Ingest {
            panel,
            cleaning,
            output,
        } => {
            let config = pipeline_config(&cleaning, &[])?;
            let loaded = load_panel(&panel)?;
            let prepared = prepare(&loaded.panel, loaded.factors.as_ref(), &config)?;
            let p = &prepared.panel;
            let text = match output.format {
                Format::Csv => {
                    let mut csv = CsvText::new(&["date", "asset", "return", "market_cap", "esg"]);
                    for (t, date) in p.dates.iter().enumerate() {
                        for (j, id) in p.asset_ids.iter().enumerate() {
                            csv.row([
                                date.to_string(),
                                id.clone(),
                                io::opt_num(p.returns[(t, j)]),
                                io::opt_num(p.market_cap[(t, j)]),
                                io::opt_num(p.esg[(t, j)]),
                            ]);
                        }
                    }
                    csv.finish()
                }
                Format::Json => {
                    let dropped: Vec<&String> = loaded
                        .panel
                        .asset_ids
                        .iter()
                        .filter(|id| !p.asset_ids.contains(id))
                        .collect();
                    json_text(&json!({
                        "n_months": p.n_months(),
                        "n_assets": p.n_assets(),
                        "first_month": p.dates.first().map(|d| d.to_string()),
                        "last_month": p.dates.last().map(|d| d.to_string()),
                        "dropped_unscored": dropped,
                        "missing_returns": p.returns.iter().filter(|v| v.is_nan()).count(),
                        "benchmark_weights": prepared.benchmark_weights,
                        "market_returns": prepared.market_returns.as_slice(),
                        "benchmark_returns": prepared.benchmark_returns.as_slice(),
                    }))?
                }
            };
            emit(&output.out, &text)
        }
        Command::Betas {
            panel,
            cleaning,
            exec,
            output,
        } => {
            let config = pipeline_config(&cleaning, &[])?;
            let loaded = load_panel(&panel)?;
            let prepared = prepare(&loaded.panel, loaded.factors.as_ref(), &config)?;
            let (cs, report) = build_cross_section(&prepared, &config, exec.execution())?;
            let text = match output.format {
                Format::Csv => {
                    let mut csv = CsvText::new(&[
                        "asset",
                        "beta_m",
                        "beta_e",
                        "beta_b",
                        "n_obs",
                        "mean_return",
                        "xi",
                    ]);
                    for (k, a) in report.assets.iter().enumerate() {
                        csv.row([
                            a.asset.clone(),
                            format_g(a.beta_m),
                            format_g(a.beta_e),
                            format_g(a.beta_b),
                            a.n_obs.to_string(),
                            format_g(cs.mean_return[k]),
                            format_g(cs.xi[k]),
                        ]);
                    }
                    csv.finish()
                }
                Format::Json => json_text(&json!({
                    "report": report,
                    "decomposition_gap": report.decomposition_gap(),
                    "cross_section": cs,
                }))?,
            };
            emit(&output.out, &text)
        }
        Command::Regress {
            panel,
            cleaning,
            models,
            exec,
            output,
        } => {
            let config = pipeline_config(&cleaning, &models)?;
            let loaded = load_panel(&panel)?;
            let prepared = prepare(&loaded.panel, loaded.factors.as_ref(), &config)?;
            let (cs, _) = build_cross_section(&prepared, &config, exec.execution())?;
            let explicit = !models.is_empty();
            let mut fits = Vec::new();
            for &m in &config.models {
                if m.needs_factors() && cs.factor_loadings.is_none() {
                    if explicit {
                        return Err(Failure::config(format!(
                            "model {} needs --factors",
                            m.name()
                        )));
                    }
                    continue;
                }
                fits.push(fit_model(&cs, m)?);
            }
            let text = match output.format {
                ReportFormat::Table => format_table(&fits),
                ReportFormat::Json => json_text(&fits)?,
            };
            emit(&output.out, &text)
        }
        Command::Compare {
            panel,
            sectors,
            quantiles,
            min_assets,
            cleaning,
            models,
            exec,
            output,
        } => {
            let mut config = pipeline_config(&cleaning, &models)?;
            if quantiles.is_some_and(|k| k < 2) {
                return Err(Failure::config("--quantiles must be at least 2"));
            }
            if quantiles.is_none() && sectors.is_none() {
                return Err(Failure::config("give --sectors or --quantiles"));
            }
            config.quantiles = quantiles;
            config.min_assets = min_assets;
            let sector_map = match &sectors {
                Some(path) => {
                    require_file(path)?;
                    Some(io::read_sectors(path)?)
                }
                None => None,
            };
            let loaded = load_panel(&panel)?;
            let started = Instant::now();
            let prepared = prepare(&loaded.panel, loaded.factors.as_ref(), &config)?;
            let binding = portfolio_binding_check(&prepared, sector_map.as_ref(), &config)?;
            let (cs, _) = build_cross_section(&prepared, &config, exec.execution())?;
            let fits = config
                .models
                .iter()
                .filter(|m| cs.factor_loadings.is_some() || !m.needs_factors())
                .map(|&m| fit_model(&cs, m))
                .collect::<Result<Vec<_>, _>>()?;
            let comparison = model_comparison(&fits)?;
            log(&format!(
                "pipeline finished in {:.3}s",
                started.elapsed().as_secs_f64()
            ));
            let text = match output.format {
                ReportFormat::Table => {
                    let mut s = format!(
                        "portfolios: {}\nmonths: {}\ne_minus_ratio: {}\ng_star: {}\ng_star_raw: {}\n\n",
                        binding.n_portfolios,
                        binding.n_months,
                        format_g(binding.e_minus_ratio),
                        binding.g_star.map_or("none".to_string(), format_g),
                        format_g(binding.g_star_raw),
                    );
                    s.push_str(&format_table(&fits));
                    s.push_str("\nrank  model  aic  r2_adj\n");
                    for (k, r) in comparison.rows.iter().enumerate() {
                        s.push_str(&format!(
                            "{}  {}  {}  {}\n",
                            k + 1,
                            r.model_name,
                            format_g(r.aic),
                            format_g(r.r2_adjusted)
                        ));
                    }
                    s.push_str(&format!(
                        "esg_premium_significant: {}\n",
                        comparison.esg_premium_significant
                    ));
                    s
                }
                ReportFormat::Json => json_text(&json!({
                    "binding": binding,
                    "fits": fits,
                    "comparison": comparison,
                }))?,
            };
            emit(&output.out, &text)
        }
        Command::OracleCheck {
            seed,
            instances,
            detail,
            exec,
            output,
        } => {
            if instances == 0 {
                return Err(Failure::config("--instances must be positive"));
            }
            let mut report = oracle_suite(seed, instances, exec.execution())?;
            let passed = report.passed;
            if !detail {
                report.checks.clear();
            }
            emit(&output.out, &json_text(&report)?)?;
            if passed {
                Ok(())
            } else {
                Err(Failure {
                    code: 3,
                    class: "numerical",
                    kind: "oracle_mismatch".into(),
                    message: format!(
                        "closed form deviates from the oracle by {} ({} KKT failures)",
                        format_g(report.max_weight_deviation),
                        report.kkt_failures
                    ),
                })
            }
        }
        Command::Synth {
            out_dir,
            seed,
            assets,
            months,
            gamma,
        } => {
            let cfg = SynthConfig {
                seed,
                n_assets: assets,
                n_months: months,
                gamma,
                ..SynthConfig::default()
            };
            let m = generate(&cfg)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Failure::from(Error::Io(e)))?;
            let (returns, esg) = io::panel_csv(&m.panel);
            write_atomic(&out_dir.join("returns.csv"), &returns)?;
            write_atomic(&out_dir.join("esg.csv"), &esg)?;
            write_atomic(&out_dir.join("factors.csv"), &io::factors_csv(&m.factors))?;
            write_atomic(
                &out_dir.join("sectors.csv"),
                &io::sectors_csv(&m.sectors, &m.panel.asset_ids),
            )?;
            let truth = json!({
                "config": cfg,
                "pricing": m.pricing,
                "h_scale": m.h_scale,
                "mu": weights_map(m.universe.asset_ids(), m.universe.mu().as_slice()),
                "xi": weights_map(m.universe.asset_ids(), m.universe.xi().as_slice()),
            });
            write_atomic(&out_dir.join("truth.json"), &json_text(&truth)?)?;
            log(&format!("wrote synthetic panel to {}", out_dir.display()));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
                return ExitCode::from(2);
            }
            let failure = Failure {
                code: 2,
                class: "config",
                kind: "usage".into(),
                message: e.to_string().trim().to_string(),
            };
            report(&failure);
            return ExitCode::from(failure.code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(f.code)
        }
    }
}

fn report(f: &Failure) {
    let body = json!({"error": {"class": f.class, "kind": f.kind, "message": f.message}});
    eprintln!("{body}");
}
