//! Annual factor panel ingestion and the log-return transform.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64, Table};

/// Factors whose log-returns are negated so that positive values mean
/// higher well-being.
pub const DEFAULT_REVERSAL: [&str; 7] = ["CPI", "Unemploy", "Inequality", "CrimeRate", "Uncertainty", "GenderParity", "VXO"];

/// Prefix marking a sign-reversed factor in return panels.
pub const REVERSED_PREFIX: &str = "Neg";

#[derive(Debug, Clone, PartialEq)]
pub struct PanelConfig {
    /// Factors to keep, in output order. `None` keeps every column in file order.
    pub factors: Option<Vec<String>>,
    pub reversal: Vec<String>,
    /// Inclusive year range to restrict to, applied after intersecting the factors' own ranges.
    pub years: Option<(i32, i32)>,
}

impl Default for PanelConfig {
    fn default() -> Self {
        PanelConfig { factors: None, reversal: DEFAULT_REVERSAL.iter().map(|s| s.to_string()).collect(), years: None }
    }
}

/// Aligned annual factor levels. `values[i][t]` is factor i in `years[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanel {
    pub factor_names: Vec<String>,
    pub years: Vec<i32>,
    pub values: Vec<Vec<f64>>,
    pub reverse_sign: Vec<bool>,
}

/// Log-returns per factor and year. The first year is the zeroed base year.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub factor_names: Vec<String>,
    pub years: Vec<i32>,
    pub returns: Vec<Vec<f64>>,
    pub reversed: Vec<bool>,
}

fn check_years(years: &[i32]) -> Result<()> {
    for w in years.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(Error::YearGap { before: w[0], after: w[1] });
        }
    }
    Ok(())
}

impl FactorPanel {
    /// Builds a panel, validating every invariant. Levels must be finite and
    /// strictly positive since every factor enters a log-return.
    pub fn new(factor_names: Vec<String>, years: Vec<i32>, values: Vec<Vec<f64>>, reverse_sign: Vec<bool>) -> Result<Self> {
        if factor_names.is_empty() || years.is_empty() {
            return Err(Error::Input("panel needs at least one factor and one year".into()));
        }
        if values.len() != factor_names.len() || reverse_sign.len() != factor_names.len() {
            return Err(Error::Input("panel dimensions do not match factor list".into()));
        }
        check_years(&years)?;
        for (name, row) in factor_names.iter().zip(&values) {
            if row.len() != years.len() {
                return Err(Error::Input(format!("factor `{name}` has {} values for {} years", row.len(), years.len())));
            }
            for (&year, &v) in years.iter().zip(row) {
                if !v.is_finite() {
                    return Err(Error::MissingValue { factor: name.clone(), year });
                }
                if v <= 0.0 {
                    return Err(Error::NonPositiveLevel { factor: name.clone(), year, value: v });
                }
            }
        }
        Ok(FactorPanel { factor_names, years, values, reverse_sign })
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }
}

/// Reads a delimiter-separated level file: a header naming the factors after
/// a leading year column, then one row per year.
pub fn load_panel(path: &Path, config: &PanelConfig) -> Result<FactorPanel> {
    parse_panel(&Table::read(path)?, config)
}

pub fn parse_panel(table: &Table, config: &PanelConfig) -> Result<FactorPanel> {
    if table.header.len() < 2 {
        return Err(Error::Input("header must contain a year column and at least one factor".into()));
    }
    let wanted: Vec<String> = match &config.factors {
        Some(f) => f.clone(),
        None => table.header[1..].to_vec(),
    };
    let mut cols = Vec::with_capacity(wanted.len());
    for name in &wanted {
        let idx = table.header.iter().skip(1).position(|h| h == name).ok_or_else(|| Error::MissingFactor { factor: name.clone() })?;
        cols.push(idx + 1);
    }

    let mut years = Vec::with_capacity(table.rows.len());
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(table.rows.len()); wanted.len()];
    for row in &table.rows {
        let raw_year = row.first().map(String::as_str).unwrap_or("");
        let year: i32 = raw_year.trim().parse().map_err(|_| Error::Input(format!("year `{raw_year}` is not an integer")))?;
        years.push(year);
        for (k, &c) in cols.iter().enumerate() {
            let raw = row.get(c).map(|s| s.trim()).unwrap_or("");
            let v = if raw.is_empty() || raw == "NA" {
                None
            } else {
                match parse_f64(raw) {
                    Some(v) if v.is_finite() => Some(v),
                    _ => return Err(Error::NonNumeric { factor: wanted[k].clone(), year, raw: raw.to_string() }),
                }
            };
            cells[k].push(v);
        }
    }
    for w in years.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Input(format!("years not strictly increasing: {} then {}", w[0], w[1])));
        }
    }

    // Common range: latest first observation to earliest last observation.
    let mut lo = i32::MIN;
    let mut hi = i32::MAX;
    for (k, col) in cells.iter().enumerate() {
        let first = col.iter().position(Option::is_some);
        let last = col.iter().rposition(Option::is_some);
        match (first, last) {
            (Some(f), Some(l)) => {
                lo = lo.max(years[f]);
                hi = hi.min(years[l]);
            }
            _ => return Err(Error::MissingFactor { factor: wanted[k].clone() }),
        }
    }
    if let Some((a, b)) = config.years {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if lo > hi {
        return Err(Error::Input(format!("factors share no common year range (latest start {lo}, earliest end {hi})")));
    }

    let keep: Vec<usize> = (0..years.len()).filter(|&t| years[t] >= lo && years[t] <= hi).collect();
    let kept_years: Vec<i32> = keep.iter().map(|&t| years[t]).collect();
    check_years(&kept_years)?;
    if kept_years.first() != Some(&lo) || kept_years.last() != Some(&hi) {
        return Err(Error::Input(format!("file does not cover the requested years {lo}..{hi}")));
    }
    let mut values = Vec::with_capacity(wanted.len());
    for (k, col) in cells.iter().enumerate() {
        let mut row = Vec::with_capacity(keep.len());
        for &t in &keep {
            match col[t] {
                Some(v) if v > 0.0 => row.push(v),
                Some(v) => return Err(Error::NonPositiveLevel { factor: wanted[k].clone(), year: years[t], value: v }),
                None => return Err(Error::MissingValue { factor: wanted[k].clone(), year: years[t] }),
            }
        }
        values.push(row);
    }
    let reverse_sign = wanted.iter().map(|n| config.reversal.iter().any(|r| r == n)).collect();
    FactorPanel::new(wanted, kept_years, values, reverse_sign)
}

/// r(i,t) = log P(i,t) - log P(i,t-1), negated for reversed factors; the base year is 0.
pub fn to_log_returns(panel: &FactorPanel) -> Result<ReturnPanel> {
    let mut returns = Vec::with_capacity(panel.n_factors());
    for (i, row) in panel.values.iter().enumerate() {
        for (t, &v) in row.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveLevel { factor: panel.factor_names[i].clone(), year: panel.years[t], value: v });
            }
        }
        let sign = if panel.reverse_sign[i] { -1.0 } else { 1.0 };
        let mut r = Vec::with_capacity(row.len());
        r.push(0.0);
        r.extend(row.windows(2).map(|w| sign * (w[1].ln() - w[0].ln())));
        returns.push(r);
    }
    let factor_names = panel
        .factor_names
        .iter()
        .zip(&panel.reverse_sign)
        .map(|(n, &rev)| if rev { format!("{REVERSED_PREFIX}{n}") } else { n.clone() })
        .collect();
    ReturnPanel::new(factor_names, panel.years.clone(), returns, panel.reverse_sign.clone())
}

impl ReturnPanel {
    pub fn new(factor_names: Vec<String>, years: Vec<i32>, returns: Vec<Vec<f64>>, reversed: Vec<bool>) -> Result<Self> {
        if factor_names.is_empty() || years.is_empty() {
            return Err(Error::Input("return panel needs at least one factor and one year".into()));
        }
        if returns.len() != factor_names.len() || reversed.len() != factor_names.len() {
            return Err(Error::Input("return panel dimensions do not match factor list".into()));
        }
        check_years(&years)?;
        for (name, row) in factor_names.iter().zip(&returns) {
            if row.len() != years.len() {
                return Err(Error::Input(format!("factor `{name}` has {} returns for {} years", row.len(), years.len())));
            }
            if row[0] != 0.0 {
                return Err(Error::Input(format!("factor `{name}`: base-year return must be 0, got {}", row[0])));
            }
            if let Some(t) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::MissingValue { factor: name.clone(), year: years[t] });
            }
        }
        Ok(ReturnPanel { factor_names, years, returns, reversed })
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }

    /// Returns the panel with factor `i` sign-flipped and its reversal flag toggled.
    pub fn toggle_reversal(&self, i: usize) -> ReturnPanel {
        let mut out = self.clone();
        out.returns[i].iter_mut().for_each(|v| *v = -*v);
        out.reversed[i] = !out.reversed[i];
        let name = &self.factor_names[i];
        out.factor_names[i] = match name.strip_prefix(REVERSED_PREFIX) {
            Some(base) if self.reversed[i] => base.to_string(),
            _ => format!("{REVERSED_PREFIX}{name}"),
        };
        out
    }

    /// Recovers levels from returns given each factor's base-year level.
    pub fn to_levels(&self, base_levels: &[f64]) -> Vec<Vec<f64>> {
        self.returns
            .iter()
            .zip(&self.reversed)
            .zip(base_levels)
            .map(|((row, &rev), &p0)| {
                let sign = if rev { -1.0 } else { 1.0 };
                let mut acc = 0.0;
                row.iter()
                    .map(|r| {
                        acc += sign * r;
                        p0 * acc.exp()
                    })
                    .collect()
            })
            .collect()
    }

    /// Year-major rows of the panel (one inner vector per year).
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_years()).map(|t| self.returns.iter().map(|r| r[t]).collect()).collect()
    }

    pub fn to_table(&self) -> Table {
        let mut header = vec!["year".to_string()];
        header.extend(self.factor_names.iter().cloned());
        let rows = (0..self.n_years())
            .map(|t| {
                let mut r = vec![self.years[t].to_string()];
                r.extend(self.returns.iter().map(|col| fmt_f64(col[t])));
                r
            })
            .collect();
        Table { comments: vec!["kind: log-returns".into(), "base year row is zero".into()], header, rows }
    }

    /// Reads a return table; factors named with the `Neg` prefix are marked reversed.
    pub fn from_table(table: &Table) -> Result<ReturnPanel> {
        if table.header.len() < 2 {
            return Err(Error::Input("return table needs a year column and at least one factor".into()));
        }
        let names: Vec<String> = table.header[1..].to_vec();
        let mut years = Vec::new();
        let mut returns = vec![Vec::new(); names.len()];
        for row in &table.rows {
            let raw_year = row.first().map(String::as_str).unwrap_or("");
            let year: i32 = raw_year.parse().map_err(|_| Error::Input(format!("year `{raw_year}` is not an integer")))?;
            years.push(year);
            for (k, name) in names.iter().enumerate() {
                let raw = row.get(k + 1).map(String::as_str).unwrap_or("");
                let v = parse_f64(raw).filter(|v| v.is_finite());
                match v {
                    Some(v) => returns[k].push(v),
                    None if raw.is_empty() || raw == "NA" => return Err(Error::MissingValue { factor: name.clone(), year }),
                    None => return Err(Error::NonNumeric { factor: name.clone(), year, raw: raw.to_string() }),
                }
            }
        }
        let reversed = names.iter().map(|n| n.starts_with(REVERSED_PREFIX)).collect();
        ReturnPanel::new(names, years, returns, reversed)
    }

    pub fn read(path: &Path) -> Result<ReturnPanel> {
        ReturnPanel::from_table(&Table::read(path)?)
    }
}
