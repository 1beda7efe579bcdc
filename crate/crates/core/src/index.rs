//! Equal-weight standardized index of factor log-returns, and the PCA screen.
//!
//! Each factor is standardized by its sample mean m(i) and sample standard
//! deviation s(i), the standardized series are summed with weight 1/sqrt(N),
//! and the result is mapped back to return units with the average mean m and
//! average scale s:
//!
//! ```text
//! R(i,t) = (r(i,t) - m(i)) / s(i),   R(t) = sum_i R(i,t) / sqrt(N),   r_t = m + s R(t)
//! ```
//!
//! The zero base-year row counts as an observation unless excluded.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64, KeyValues, Table};
use crate::numeric::stats;
use crate::panel::ReturnPanel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IndexOptions {
    /// Leave the zeroed base year out of m(i) and s(i).
    pub exclude_base_year: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub years: Vec<i32>,
    /// r_t.
    pub values: Vec<f64>,
    /// R(t).
    pub standardized: Vec<f64>,
    pub m: f64,
    pub s: f64,
    pub factor_names: Vec<String>,
    pub factor_means: Vec<f64>,
    pub factor_scales: Vec<f64>,
    pub exclude_base_year: bool,
}

pub fn build_index(returns: &ReturnPanel) -> Result<IndexSeries> {
    build_index_with(returns, IndexOptions::default())
}

pub fn build_index_with(returns: &ReturnPanel, options: IndexOptions) -> Result<IndexSeries> {
    build_index_from_returns(&returns.factor_names, &returns.years, &returns.returns, options)
}

/// Index from a factor-major return matrix without the zero base-year check.
pub fn build_index_from_returns(
    factor_names: &[String],
    years: &[i32],
    returns: &[Vec<f64>],
    options: IndexOptions,
) -> Result<IndexSeries> {
    if returns.is_empty() || returns.len() != factor_names.len() {
        return Err(Error::Input("index needs at least one factor with a name".into()));
    }
    let skip = usize::from(options.exclude_base_year);
    if years.len() < skip + 2 {
        return Err(Error::TooFewObservations { needed: skip + 2, got: years.len() });
    }
    let mut means = Vec::with_capacity(returns.len());
    let mut scales = Vec::with_capacity(returns.len());
    for (name, row) in factor_names.iter().zip(returns) {
        if row.len() != years.len() {
            return Err(Error::Input(format!("factor `{name}` has {} returns for {} years", row.len(), years.len())));
        }
        let active = &row[skip..];
        let sd = stats::sample_sd(active);
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance { name: name.clone() });
        }
        means.push(stats::mean(active));
        scales.push(sd);
    }
    let n = returns.len() as f64;
    let root_n = n.sqrt();
    let standardized: Vec<f64> = (0..years.len())
        .map(|t| returns.iter().zip(&means).zip(&scales).map(|((row, m), s)| (row[t] - m) / s).sum::<f64>() / root_n)
        .collect();
    let m = means.iter().sum::<f64>() / n;
    let s = scales.iter().sum::<f64>() / n;
    // With one factor the map is the identity; skip the rounding of the round trip.
    let values = if returns.len() == 1 { returns[0].clone() } else { standardized.iter().map(|r| m + s * r).collect() };
    Ok(IndexSeries {
        years: years.to_vec(),
        values,
        standardized,
        m,
        s,
        factor_names: factor_names.to_vec(),
        factor_means: means,
        factor_scales: scales,
        exclude_base_year: options.exclude_base_year,
    })
}

impl IndexSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_table(&self) -> Table {
        Table {
            comments: vec!["kind: index log-returns".into()],
            header: vec!["year".into(), "index".into()],
            rows: self.years.iter().zip(&self.values).map(|(y, v)| vec![y.to_string(), fmt_f64(*v)]).collect(),
        }
    }

    /// Sidecar with m, s and the per-factor m(i), s(i).
    pub fn metadata(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.comments.push("index standardization constants".into());
        kv.push_f64("m", self.m);
        kv.push_f64("s", self.s);
        kv.push("exclude_base_year", self.exclude_base_year);
        for ((name, mi), si) in self.factor_names.iter().zip(&self.factor_means).zip(&self.factor_scales) {
            kv.push_f64(&format!("m.{name}"), *mi);
            kv.push_f64(&format!("s.{name}"), *si);
        }
        kv
    }
}

/// Reads a `year,value` series (the index file or any single-column table).
pub fn read_series(path: &Path) -> Result<(Vec<i32>, Vec<f64>)> {
    let table = Table::read(path)?;
    if table.header.len() < 2 {
        return Err(Error::Input(format!("{}: expected a year column and a value column", path.display())));
    }
    let mut years = Vec::with_capacity(table.rows.len());
    let mut values = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let raw_year = row.first().map(String::as_str).unwrap_or("");
        years.push(raw_year.parse().map_err(|_| Error::Input(format!("year `{raw_year}` is not an integer")))?);
        let raw = row.get(1).map(String::as_str).unwrap_or("");
        values.push(
            parse_f64(raw)
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Input(format!("value `{raw}` for year {raw_year} is not a finite number")))?,
        );
    }
    Ok((years, values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaSummary {
    pub factor_names: Vec<String>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub proportions: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// loadings[k][i]: weight of factor i in component k.
    pub loadings: Vec<Vec<f64>>,
}

pub fn pca(returns: &ReturnPanel) -> Result<PcaSummary> {
    pca_from_returns(&returns.factor_names, &returns.returns)
}

/// PCA of the correlation matrix of factor-major series.
pub fn pca_from_returns(factor_names: &[String], returns: &[Vec<f64>]) -> Result<PcaSummary> {
    let n = returns.len();
    if n < 2 {
        return Err(Error::Input(format!("PCA needs at least 2 factors, got {n}")));
    }
    for (name, row) in factor_names.iter().zip(returns) {
        if !(stats::sample_sd(row) > 0.0) {
            return Err(Error::ZeroVariance { name: name.clone() });
        }
    }
    let cov = stats::covariance_matrix(returns);
    let corr = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt() });
    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let loadings: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            if v.iter().find(|x| x.abs() > 1e-12).is_some_and(|x| *x < 0.0) {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let proportions: Vec<f64> = eigenvalues.iter().map(|e| e / n as f64).collect();
    let cumulative = proportions
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    Ok(PcaSummary { factor_names: factor_names.to_vec(), eigenvalues, proportions, cumulative, loadings })
}

impl PcaSummary {
    pub fn to_table(&self) -> Table {
        Table {
            comments: vec!["kind: PCA of the factor-return correlation matrix".into()],
            header: vec!["component".into(), "eigenvalue".into(), "proportion".into(), "cumulative".into()],
            rows: (0..self.eigenvalues.len())
                .map(|k| {
                    vec![
                        (k + 1).to_string(),
                        fmt_f64(self.eigenvalues[k]),
                        fmt_f64(self.proportions[k]),
                        fmt_f64(self.cumulative[k]),
                    ]
                })
                .collect(),
        }
    }

    pub fn loadings_table(&self) -> Table {
        let mut header = vec!["factor".to_string()];
        header.extend((1..=self.loadings.len()).map(|k| format!("PC{k}")));
        Table {
            comments: vec!["kind: PCA loadings".into()],
            header,
            rows: self
                .factor_names
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let mut r = vec![name.clone()];
                    r.extend(self.loadings.iter().map(|l| fmt_f64(l[i])));
                    r
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(returns: Vec<Vec<f64>>) -> ReturnPanel {
        let names = (0..returns.len()).map(|i| format!("f{i}")).collect();
        let years = (2000..2000 + returns[0].len() as i32).collect();
        let rev = vec![false; returns.len()];
        ReturnPanel::new(names, years, returns, rev).unwrap()
    }

    #[test]
    fn mirrored_factors_cancel() {
        let a = vec![0.0, 0.1, -0.3, 0.25, 0.05];
        let b: Vec<f64> = a.iter().map(|v| -v).collect();
        let idx = build_index(&panel(vec![a, b])).unwrap();
        for (r, big_r) in idx.values.iter().zip(&idx.standardized) {
            assert!(big_r.abs() < 1e-15);
            assert!((r - idx.m).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_variance_named() {
        let err = build_index(&panel(vec![vec![0.0, 0.1, 0.2], vec![0.0; 3]])).unwrap_err();
        assert_eq!(err, Error::ZeroVariance { name: "f1".into() });
    }

    #[test]
    fn base_year_exclusion_changes_statistics() {
        let p = panel(vec![vec![0.0, 0.1, 0.3, 0.2]]);
        let with = build_index(&p).unwrap();
        let without = build_index_with(&p, IndexOptions { exclude_base_year: true }).unwrap();
        assert!((with.m - 0.15).abs() < 1e-15);
        assert!((without.m - 0.2).abs() < 1e-15);
    }

    #[test]
    fn perfectly_correlated_pair() {
        let a = vec![0.0, 0.1, -0.3, 0.25, 0.05];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let s = pca(&panel(vec![a, b])).unwrap();
        assert!((s.proportions[0] - 1.0).abs() < 1e-12 && s.proportions[1].abs() < 1e-12);
        assert!(s.loadings[0].iter().all(|v| *v > 0.0));
    }
}
