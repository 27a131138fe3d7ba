//! Monthly return, score and capitalization panels.
//!
//! Matrices are stored months × assets. Missing cells are `NaN`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Calendar month, parsed from and printed as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::parse("date", format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Accepts `YYYY-MM` and, for convenience, `YYYY-MM-DD` (the day is ignored).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::parse("date", format!("expected YYYY-MM, got {s:?}"));
        let mut parts = s.split('-');
        let year = parts.next().ok_or_else(bad)?;
        let month = parts.next().ok_or_else(bad)?;
        if year.len() != 4 || month.len() != 2 {
            return Err(bad());
        }
        if let Some(day) = parts.next() {
            if day.len() != 2 || day.parse::<u8>().is_err() || parts.next().is_some() {
                return Err(bad());
            }
        }
        let year = year.parse().map_err(|_| bad())?;
        let month = month.parse().map_err(|_| bad())?;
        Self::new(year, month)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn check_months(dates: &[YearMonth]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1] != w[0].next() {
            return Err(Error::InvalidInput(format!(
                "dates must be consecutive months: {} followed by {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnEsgPanel {
    pub dates: Vec<YearMonth>,
    pub asset_ids: Vec<String>,
    pub returns: DMatrix<f64>,
    pub esg: DMatrix<f64>,
    pub market_cap: DMatrix<f64>,
}

impl ReturnEsgPanel {
    pub fn new(
        dates: Vec<YearMonth>,
        asset_ids: Vec<String>,
        returns: DMatrix<f64>,
        esg: DMatrix<f64>,
        market_cap: DMatrix<f64>,
    ) -> Result<Self> {
        let shape = (dates.len(), asset_ids.len());
        for (name, m) in [
            ("returns", &returns),
            ("esg", &esg),
            ("market_cap", &market_cap),
        ] {
            if m.shape() != shape {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    shape.0,
                    shape.1
                )));
            }
            if m.iter().any(|v| v.is_infinite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} contains an infinite value"
                )));
            }
        }
        check_months(&dates)?;
        Ok(Self {
            dates,
            asset_ids,
            returns,
            esg,
            market_cap,
        })
    }

    pub fn n_months(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty() || self.asset_ids.is_empty()
    }

    /// Keeps the listed asset columns, in the given order.
    pub fn select_assets(&self, columns: &[usize]) -> Self {
        Self {
            dates: self.dates.clone(),
            asset_ids: columns.iter().map(|&j| self.asset_ids[j].clone()).collect(),
            returns: self.returns.select_columns(columns),
            esg: self.esg.select_columns(columns),
            market_cap: self.market_cap.select_columns(columns),
        }
    }

    /// Drops assets with no ESG score in any month.
    pub fn drop_unscored(&self) -> Self {
        let keep: Vec<usize> = (0..self.n_assets())
            .filter(|&j| self.esg.column(j).iter().any(|v| !v.is_nan()))
            .collect();
        self.select_assets(&keep)
    }

    /// Time average of each asset's capitalization over available months.
    pub fn average_cap(&self) -> DVector<f64> {
        column_means(&self.market_cap)
    }

    /// Time average of each asset's score over available months.
    pub fn average_esg(&self) -> DVector<f64> {
        column_means(&self.esg)
    }

    pub fn mean_returns(&self) -> DVector<f64> {
        column_means(&self.returns)
    }
}

/// Column means ignoring `NaN`; a column without data yields `NaN`.
pub fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        m.ncols(),
        m.column_iter().map(|c| {
            let (sum, n) = c
                .iter()
                .filter(|v| !v.is_nan())
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if n == 0 {
                f64::NAN
            } else {
                sum / n as f64
            }
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanel {
    pub dates: Vec<YearMonth>,
    pub market_excess: DVector<f64>,
    pub smb: DVector<f64>,
    pub hml: DVector<f64>,
    pub rmw: DVector<f64>,
    pub cma: DVector<f64>,
    pub risk_free: DVector<f64>,
}

impl FactorPanel {
    pub fn new(dates: Vec<YearMonth>, columns: [DVector<f64>; 6]) -> Result<Self> {
        let [market_excess, smb, hml, rmw, cma, risk_free] = columns;
        for c in [&market_excess, &smb, &hml, &rmw, &cma, &risk_free] {
            if c.len() != dates.len() {
                return Err(Error::DimensionMismatch(format!(
                    "factor column has {} rows, expected {}",
                    c.len(),
                    dates.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(
                    "factor panel has a missing value".into(),
                ));
            }
        }
        check_months(&dates)?;
        Ok(Self {
            dates,
            market_excess,
            smb,
            hml,
            rmw,
            cma,
            risk_free,
        })
    }

    /// Restricts the factors to `dates`, which must all be present.
    pub fn align(&self, dates: &[YearMonth]) -> Result<Self> {
        let index: BTreeMap<YearMonth, usize> = self
            .dates
            .iter()
            .enumerate()
            .map(|(i, d)| (*d, i))
            .collect();
        let rows = dates
            .iter()
            .map(|d| {
                index
                    .get(d)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("factor panel has no row for {d}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let pick =
            |v: &DVector<f64>| DVector::from_iterator(rows.len(), rows.iter().map(|&i| v[i]));
        Ok(Self {
            dates: dates.to_vec(),
            market_excess: pick(&self.market_excess),
            smb: pick(&self.smb),
            hml: pick(&self.hml),
            rmw: pick(&self.rmw),
            cma: pick(&self.cma),
            risk_free: pick(&self.risk_free),
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Asset id → sector label.
pub type SectorMap = BTreeMap<String, String>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_months() {
        let m: YearMonth = "2022-12".parse().unwrap();
        assert_eq!(m.to_string(), "2022-12");
        assert_eq!(m.next().to_string(), "2023-01");
        assert_eq!("2022-12-31".parse::<YearMonth>().unwrap(), m);
        for bad in ["2022-13", "22-12", "2022/12", "2022-1", "x"] {
            assert!(bad.parse::<YearMonth>().is_err(), "{bad}");
        }
    }

    #[test]
    fn rejects_gaps() {
        let d = vec![
            YearMonth::new(2020, 1).unwrap(),
            YearMonth::new(2020, 3).unwrap(),
        ];
        let m = DMatrix::zeros(2, 1);
        assert!(ReturnEsgPanel::new(d, vec!["a".into()], m.clone(), m.clone(), m).is_err());
    }

    #[test]
    fn column_means_skip_missing() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, f64::NAN, 3.0, f64::NAN, f64::NAN, f64::NAN]);
        let c = column_means(&m);
        assert_eq!(c[0], 2.0);
        assert!(c[1].is_nan());
    }
}
