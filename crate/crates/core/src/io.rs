//! File formats: CSV and JSON readers, writers, and number formatting.
//!
//! Every float written by this crate goes through [`format_g`] (12
//! significant digits) or [`round_json`], so outputs are byte-stable.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::empirical::panel::{FactorPanel, ReturnEsgPanel, SectorMap, YearMonth};
use crate::equilibrium::{EquilibriumEconomy, InstitutionalInvestor, RetailInvestor};
use crate::error::{Error, Result};
use crate::frontier::FrontierCurve;
use crate::market::{Benchmark, MarketUniverse};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed,
/// scientific notation outside `[1e-4, 1e12)`.
pub fn format_g(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to 12 significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        format_g(x).parse().expect("formatted float parses")
    } else {
        x
    }
}

/// Serializes `value` to JSON with every number rounded to 12 significant
/// digits and non-finite numbers as `null`.
pub fn round_json<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(v)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64 number");
                *v = serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON text with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&round_json(value)?)?;
    s.push('\n');
    Ok(s)
}

pub fn serialize_dvector<S: Serializer>(
    v: &DVector<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(r)
}

fn expect_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    context: &str,
    expected: &[&str],
) -> Result<()> {
    let header = rdr.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            context,
            format!(
                "expected header {:?}, got {:?}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn parse_f64(context: &str, line: u64, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(context, format!("line {line}: {field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(
            context,
            format!("line {line}: non-finite value"),
        ));
    }
    Ok(v)
}

/// Empty fields are missing (`NaN`).
fn parse_optional(context: &str, line: u64, field: &str) -> Result<f64> {
    if field.is_empty() {
        Ok(f64::NAN)
    } else {
        parse_f64(context, line, field)
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Reads `asset,mu,xi` plus a square covariance CSV whose header lists the
/// asset ids (rows in header order). Covariance columns may be in any order.
pub fn read_universe(assets: &Path, covariance: &Path) -> Result<MarketUniverse> {
    read_universe_from(open(assets)?, open(covariance)?)
}

pub fn read_universe_from<A: Read, C: Read>(assets: A, covariance: C) -> Result<MarketUniverse> {
    let ctx = "assets csv";
    let mut rdr = reader(assets);
    expect_header(&mut rdr, ctx, &["asset", "mu", "xi"])?;
    let (mut ids, mut mu, mut xi) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(Error::parse(ctx, format!("line {line}: expected 3 fields")));
        }
        if ids.contains(&rec[0].to_string()) {
            return Err(Error::parse(
                ctx,
                format!("line {line}: duplicate asset {}", &rec[0]),
            ));
        }
        ids.push(rec[0].to_string());
        mu.push(parse_f64(ctx, line, &rec[1])?);
        xi.push(parse_f64(ctx, line, &rec[2])?);
    }

    let ctx = "covariance csv";
    let mut rdr = reader(covariance);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut sorted_header = header.clone();
    sorted_header.sort();
    let mut sorted_ids = ids.clone();
    sorted_ids.sort();
    if sorted_header != sorted_ids {
        return Err(Error::parse(
            ctx,
            "header must list exactly the asset ids of the assets file",
        ));
    }
    let n = ids.len();
    let mut raw = DMatrix::zeros(n, n);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rows >= n || rec.len() != n {
            return Err(Error::parse(
                ctx,
                format!("line {line}: expected an {n}x{n} matrix"),
            ));
        }
        for (c, field) in rec.iter().enumerate() {
            raw[(rows, c)] = parse_f64(ctx, line, field)?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(ctx, format!("expected {n} rows, got {rows}")));
    }
    let pos: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let perm: Vec<usize> = ids.iter().map(|id| pos[id.as_str()]).collect();
    let omega = DMatrix::from_fn(n, n, |i, j| raw[(perm[i], perm[j])]);
    MarketUniverse::new(ids, DVector::from_vec(mu), DVector::from_vec(xi), omega)
}

/// Reads `asset,weight`; every universe asset must appear exactly once.
pub fn read_benchmark(path: &Path, universe: &MarketUniverse) -> Result<Benchmark> {
    read_benchmark_from(open(path)?, universe)
}

pub fn read_benchmark_from<R: Read>(r: R, universe: &MarketUniverse) -> Result<Benchmark> {
    let ctx = "benchmark csv";
    let mut rdr = reader(r);
    expect_header(&mut rdr, ctx, &["asset", "weight"])?;
    let pos: HashMap<&str, usize> = universe
        .asset_ids()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut w = vec![f64::NAN; universe.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 2 {
            return Err(Error::parse(ctx, format!("line {line}: expected 2 fields")));
        }
        let &i = pos
            .get(&rec[0])
            .ok_or_else(|| Error::parse(ctx, format!("line {line}: unknown asset {}", &rec[0])))?;
        if !w[i].is_nan() {
            return Err(Error::parse(
                ctx,
                format!("line {line}: duplicate asset {}", &rec[0]),
            ));
        }
        w[i] = parse_f64(ctx, line, &rec[1])?;
    }
    if let Some(i) = w.iter().position(|v| v.is_nan()) {
        return Err(Error::parse(
            ctx,
            format!("no weight for asset {}", universe.asset_ids()[i]),
        ));
    }
    Benchmark::new(DVector::from_vec(w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniverseFiles {
    pub assets: PathBuf,
    pub covariance: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstitutionSpec {
    pub wealth: f64,
    pub risk_aversion: f64,
    pub benchmark: PathBuf,
    #[serde(default)]
    pub h_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetailSpec {
    pub wealth: f64,
    pub risk_aversion: f64,
}

/// Economy description; relative paths resolve against the JSON file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomySpec {
    pub universe: UniverseFiles,
    pub risk_free: f64,
    #[serde(default)]
    pub institutions: Vec<InstitutionSpec>,
    #[serde(default)]
    pub retail: Vec<RetailSpec>,
}

pub fn read_economy(path: &Path) -> Result<EquilibriumEconomy> {
    let doc: EconomySpec = serde_json::from_reader(open(path)?)
        .map_err(|e| Error::parse("economy json", e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let universe = read_universe(
        &base.join(&doc.universe.assets),
        &base.join(&doc.universe.covariance),
    )?;
    let institutions = doc
        .institutions
        .iter()
        .map(|i| {
            let bench = read_benchmark(&base.join(&i.benchmark), &universe)?;
            InstitutionalInvestor::new(i.wealth, i.risk_aversion, bench, i.h_target)
        })
        .collect::<Result<Vec<_>>>()?;
    let retail = doc
        .retail
        .iter()
        .map(|r| RetailInvestor::new(r.wealth, r.risk_aversion))
        .collect::<Result<Vec<_>>>()?;
    EquilibriumEconomy::new(universe, institutions, retail, doc.risk_free)
}

fn month_range(first: YearMonth, last: YearMonth) -> Vec<YearMonth> {
    let mut out = vec![first];
    while *out.last().expect("non-empty") < last {
        let next = out.last().expect("non-empty").next();
        out.push(next);
    }
    out
}

/// Reads the long-format `date,asset,return,market_cap` file and the
/// `date,asset,esg` file into one panel spanning every month between the
/// first and last return date. Empty cells are missing.
pub fn read_panel(returns: &Path, esg: &Path) -> Result<ReturnEsgPanel> {
    read_panel_from(open(returns)?, open(esg)?)
}

pub fn read_panel_from<R: Read, E: Read>(returns: R, esg: E) -> Result<ReturnEsgPanel> {
    let ctx = "returns csv";
    let mut rdr = reader(returns);
    expect_header(&mut rdr, ctx, &["date", "asset", "return", "market_cap"])?;
    let mut rows = Vec::new();
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 4 {
            return Err(Error::parse(ctx, format!("line {line}: expected 4 fields")));
        }
        let date: YearMonth = rec[0]
            .parse()
            .map_err(|e: Error| Error::parse(ctx, format!("line {line}: {e}")))?;
        let j = *index.entry(rec[1].to_string()).or_insert_with(|| {
            ids.push(rec[1].to_string());
            ids.len() - 1
        });
        rows.push((
            date,
            j,
            parse_optional(ctx, line, &rec[2])?,
            parse_optional(ctx, line, &rec[3])?,
            line,
        ));
    }
    let first = rows.iter().map(|r| r.0).min().ok_or(Error::EmptyPanel)?;
    let last = rows.iter().map(|r| r.0).max().ok_or(Error::EmptyPanel)?;
    let dates = month_range(first, last);
    let t_of: BTreeMap<YearMonth, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let (t, n) = (dates.len(), ids.len());
    let mut ret = DMatrix::from_element(t, n, f64::NAN);
    let mut cap = DMatrix::from_element(t, n, f64::NAN);
    let mut seen = vec![false; t * n];
    for (date, j, r, c, line) in rows {
        let i = t_of[&date];
        if std::mem::replace(&mut seen[i * n + j], true) {
            return Err(Error::parse(
                ctx,
                format!("line {line}: duplicate row for {} {date}", ids[j]),
            ));
        }
        ret[(i, j)] = r;
        cap[(i, j)] = c;
    }

    let ctx = "esg csv";
    let mut rdr = reader(esg);
    expect_header(&mut rdr, ctx, &["date", "asset", "esg"])?;
    let mut scores = DMatrix::from_element(t, n, f64::NAN);
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(Error::parse(ctx, format!("line {line}: expected 3 fields")));
        }
        let date: YearMonth = rec[0]
            .parse()
            .map_err(|e: Error| Error::parse(ctx, format!("line {line}: {e}")))?;
        let i = *t_of.get(&date).ok_or_else(|| {
            Error::parse(
                ctx,
                format!("line {line}: {date} outside the return sample"),
            )
        })?;
        let j = *index.get(&rec[1]).ok_or_else(|| {
            Error::parse(
                ctx,
                format!("line {line}: asset {} has no returns", &rec[1]),
            )
        })?;
        if !scores[(i, j)].is_nan() {
            return Err(Error::parse(ctx, format!("line {line}: duplicate score")));
        }
        scores[(i, j)] = parse_optional(ctx, line, &rec[2])?;
    }
    ReturnEsgPanel::new(dates, ids, ret, scores, cap)
}

pub const FACTOR_HEADER: [&str; 7] = ["date", "mkt_rf", "smb", "hml", "rmw", "cma", "rf"];

pub fn read_factors(path: &Path) -> Result<FactorPanel> {
    read_factors_from(open(path)?)
}

pub fn read_factors_from<R: Read>(r: R) -> Result<FactorPanel> {
    let ctx = "factor csv";
    let mut rdr = reader(r);
    expect_header(&mut rdr, ctx, &FACTOR_HEADER)?;
    let mut dates = Vec::new();
    let mut cols: [Vec<f64>; 6] = Default::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 7 {
            return Err(Error::parse(ctx, format!("line {line}: expected 7 fields")));
        }
        dates.push(
            rec[0]
                .parse::<YearMonth>()
                .map_err(|e| Error::parse(ctx, format!("line {line}: {e}")))?,
        );
        for (k, col) in cols.iter_mut().enumerate() {
            col.push(parse_f64(ctx, line, &rec[k + 1])?);
        }
    }
    FactorPanel::new(dates, cols.map(DVector::from_vec))
}

pub fn read_sectors(path: &Path) -> Result<SectorMap> {
    read_sectors_from(open(path)?)
}

pub fn read_sectors_from<R: Read>(r: R) -> Result<SectorMap> {
    let ctx = "sector csv";
    let mut rdr = reader(r);
    expect_header(&mut rdr, ctx, &["asset", "sector"])?;
    let mut map = SectorMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 2 || rec[1].is_empty() {
            return Err(Error::parse(
                ctx,
                format!("line {line}: expected asset,sector"),
            ));
        }
        if map.insert(rec[0].to_string(), rec[1].to_string()).is_some() {
            return Err(Error::parse(
                ctx,
                format!("line {line}: duplicate asset {}", &rec[0]),
            ));
        }
    }
    Ok(map)
}

/// Small CSV builder writing `format_g` numbers.
#[derive(Debug, Default)]
pub struct CsvText {
    out: String,
}

impl CsvText {
    pub fn new(header: &[&str]) -> Self {
        let mut s = Self::default();
        s.row(header.iter().map(|h| h.to_string()));
        s
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn num(x: f64) -> String {
    format_g(x)
}

/// Missing values become empty cells.
pub fn opt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format_g(x)
    }
}

pub fn frontier_csv(curve: &FrontierCurve) -> String {
    let mut csv = CsvText::new(&["g", "var_front", "var_tev", "var_tev_esg", "binding"]);
    for k in 0..curve.g_grid.len() {
        csv.row([
            num(curve.g_grid[k]),
            num(curve.var_front[k]),
            num(curve.var_tev[k]),
            num(curve.var_tev_esg[k]),
            curve.binding_mask[k].to_string(),
        ]);
    }
    csv.finish()
}

pub fn universe_csv(universe: &MarketUniverse) -> (String, String) {
    let mut assets = CsvText::new(&["asset", "mu", "xi"]);
    for (j, id) in universe.asset_ids().iter().enumerate() {
        assets.row([id.clone(), num(universe.mu()[j]), num(universe.xi()[j])]);
    }
    let ids: Vec<&str> = universe.asset_ids().iter().map(String::as_str).collect();
    let mut cov = CsvText::new(&ids);
    for row in universe.omega().row_iter() {
        cov.row(row.iter().map(|v| num(*v)));
    }
    (assets.finish(), cov.finish())
}

pub fn benchmark_csv(ids: &[String], weights: &DVector<f64>) -> String {
    let mut csv = CsvText::new(&["asset", "weight"]);
    for (id, w) in ids.iter().zip(weights.iter()) {
        csv.row([id.clone(), num(*w)]);
    }
    csv.finish()
}

/// Long-format returns and ESG files; rows with neither return nor cap are skipped,
/// as are missing scores.
pub fn panel_csv(panel: &ReturnEsgPanel) -> (String, String) {
    let mut ret = CsvText::new(&["date", "asset", "return", "market_cap"]);
    let mut esg = CsvText::new(&["date", "asset", "esg"]);
    for (t, date) in panel.dates.iter().enumerate() {
        for (j, id) in panel.asset_ids.iter().enumerate() {
            let (r, c) = (panel.returns[(t, j)], panel.market_cap[(t, j)]);
            if !(r.is_nan() && c.is_nan()) {
                ret.row([date.to_string(), id.clone(), opt_num(r), opt_num(c)]);
            }
            let s = panel.esg[(t, j)];
            if !s.is_nan() {
                esg.row([date.to_string(), id.clone(), num(s)]);
            }
        }
    }
    (ret.finish(), esg.finish())
}

pub fn factors_csv(f: &FactorPanel) -> String {
    let mut csv = CsvText::new(&FACTOR_HEADER);
    for (t, date) in f.dates.iter().enumerate() {
        csv.row([
            date.to_string(),
            num(f.market_excess[t]),
            num(f.smb[t]),
            num(f.hml[t]),
            num(f.rmw[t]),
            num(f.cma[t]),
            num(f.risk_free[t]),
        ]);
    }
    csv.finish()
}

pub fn sectors_csv(map: &SectorMap, order: &[String]) -> String {
    let mut csv = CsvText::new(&["asset", "sector"]);
    for id in order {
        if let Some(s) = map.get(id) {
            csv.row([id.clone(), s.clone()]);
        }
    }
    csv.finish()
}
