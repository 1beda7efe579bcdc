//! Euler risk budgets of a fixed-weight factor portfolio.
//!
//! For a risk measure R(w) homogeneous of degree one, the contributions
//! MCTR_i = w_i dR/dw_i sum to R(w). The standard-deviation budget uses the
//! sample covariance; the ETL budget uses the component estimator
//! MCTR_i = -w_i mean{r(i,t) : p_t <= VaR_q(p)}, which sums to the scenario
//! ETL by construction.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64, Table};
use crate::numeric::stats;
use crate::panel::ReturnPanel;

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetColumn {
    /// `Std`, or `ETL95` for confidence 0.95 (tail level 0.05).
    pub label: String,
    /// Portfolio risk R(w).
    pub risk: f64,
    pub mctr: Vec<f64>,
    pub pctr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskBudgetTable {
    /// Factor names, or group names after [`group_budget`].
    pub names: Vec<String>,
    pub columns: Vec<BudgetColumn>,
}

pub fn equal_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_inputs(names: &[String], returns: &[Vec<f64>], w: &[f64]) -> Result<usize> {
    if returns.is_empty() || names.len() != returns.len() {
        return Err(Error::Input("risk budget needs one named return series per factor".into()));
    }
    if w.len() != returns.len() {
        return Err(Error::Input(format!("{} weights for {} factors", w.len(), returns.len())));
    }
    let total: f64 = w.iter().sum();
    if w.iter().any(|v| !v.is_finite()) || (total - 1.0).abs() > 1e-10 {
        return Err(Error::Input(format!("weights must be finite and sum to 1, got sum {total}")));
    }
    let n = returns[0].len();
    for (name, row) in names.iter().zip(returns) {
        if row.len() != n {
            return Err(Error::Input(format!("factor `{name}` has {} observations, expected {n}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("factor `{name}` has a non-finite return")));
        }
    }
    if n == 0 {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    Ok(n)
}

/// MCTR_i = w_i (Sigma w)_i / sqrt(w' Sigma w) from the sample covariance.
pub fn std_budget(names: &[String], returns: &[Vec<f64>], w: &[f64]) -> Result<BudgetColumn> {
    let n = check_inputs(names, returns, w)?;
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let cov = stats::covariance_matrix(returns);
    let eig = SymmetricEigen::new(cov.clone()).eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(eig.min() > 1e-12 * max) {
        return Err(Error::Singular("covariance matrix of factor returns".into()));
    }
    let wv = DVector::from_column_slice(w);
    let sw: DVector<f64> = &cov * &wv;
    let risk = wv.dot(&sw).sqrt();
    let mctr: Vec<f64> = w.iter().zip(sw.iter()).map(|(wi, s)| wi * s / risk).collect();
    let total: f64 = mctr.iter().sum();
    let pctr = mctr.iter().map(|m| m / total).collect();
    Ok(BudgetColumn { label: "Std".into(), risk, mctr, pctr })
}

/// Component ETL at tail level `q` (0.05 for ETL95).
pub fn etl_budget(names: &[String], returns: &[Vec<f64>], w: &[f64], q: f64) -> Result<BudgetColumn> {
    let n = check_inputs(names, returns, w)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Input(format!("tail level {q} outside (0, 1)")));
    }
    let p: Vec<f64> = (0..n).map(|t| w.iter().zip(returns).map(|(wi, r)| wi * r[t]).sum()).collect();
    let var = stats::lower_quantile(&p, q)?;
    let tail: Vec<usize> = (0..n).filter(|&t| p[t] <= var).collect();
    if tail.is_empty() {
        return Err(Error::EmptyTail(format!("no portfolio return at or below VaR at level {q}; use a larger sample")));
    }
    let k = tail.len() as f64;
    let risk = -tail.iter().map(|&t| p[t]).sum::<f64>() / k;
    if risk == 0.0 {
        return Err(Error::Numerical(format!("portfolio ETL at level {q} is zero; percentage contributions undefined")));
    }
    let mctr: Vec<f64> = w.iter().zip(returns).map(|(wi, r)| -wi * tail.iter().map(|&t| r[t]).sum::<f64>() / k).collect();
    let pctr = mctr.iter().map(|m| m / risk).collect();
    Ok(BudgetColumn { label: etl_label(q), risk, mctr, pctr })
}

/// `ETL95` for tail level 0.05.
pub fn etl_label(q: f64) -> String {
    let pct = ((1.0 - q) * 1e6).round() / 1e4;
    format!("ETL{pct}")
}

/// ETL columns at each confidence level (0.95, 0.99) followed by the Std column.
pub fn risk_budget(names: &[String], returns: &[Vec<f64>], w: &[f64], confidence: &[f64]) -> Result<RiskBudgetTable> {
    let mut columns = Vec::with_capacity(confidence.len() + 1);
    for &c in confidence {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Input(format!("confidence level {c} outside (0, 1)")));
        }
        columns.push(etl_budget(names, returns, w, 1.0 - c)?);
    }
    columns.push(std_budget(names, returns, w)?);
    Ok(RiskBudgetTable { names: names.to_vec(), columns })
}

/// Equal-weight budgets on a return panel; `exclude_base_year` drops the zeroed first row.
pub fn panel_budget(panel: &ReturnPanel, confidence: &[f64], exclude_base_year: bool) -> Result<RiskBudgetTable> {
    let skip = usize::from(exclude_base_year);
    let returns: Vec<Vec<f64>> = panel.returns.iter().map(|r| r[skip..].to_vec()).collect();
    risk_budget(&panel.factor_names, &returns, &equal_weights(returns.len()), confidence)
}

/// Sums rows over a partition of the factors: RC_{M_k} = sum_{i in M_k} RC_i.
pub fn group_budget(table: &RiskBudgetTable, groups: &[(String, Vec<String>)]) -> Result<RiskBudgetTable> {
    let index: HashMap<&str, usize> = table.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut owner: Vec<Option<&str>> = vec![None; table.names.len()];
    let mut members = Vec::with_capacity(groups.len());
    for (group, names) in groups {
        let mut rows = Vec::with_capacity(names.len());
        for name in names {
            let &i = index.get(name.as_str()).ok_or_else(|| Error::Input(format!("group `{group}`: unknown factor `{name}`")))?;
            if let Some(prev) = owner[i] {
                return Err(Error::Input(format!("factor `{name}` is in both `{prev}` and `{group}`")));
            }
            owner[i] = Some(group);
            rows.push(i);
        }
        members.push(rows);
    }
    let missing: Vec<&str> = owner.iter().zip(&table.names).filter(|(o, _)| o.is_none()).map(|(_, n)| n.as_str()).collect();
    if !missing.is_empty() {
        return Err(Error::Input(format!("groups do not cover factor(s): {}", missing.join(", "))));
    }
    let columns = table
        .columns
        .iter()
        .map(|c| BudgetColumn {
            label: c.label.clone(),
            risk: c.risk,
            mctr: members.iter().map(|rows| rows.iter().map(|&i| c.mctr[i]).sum()).collect(),
            pctr: members.iter().map(|rows| rows.iter().map(|&i| c.pctr[i]).sum()).collect(),
        })
        .collect();
    Ok(RiskBudgetTable { names: groups.iter().map(|g| g.0.clone()).collect(), columns })
}

impl RiskBudgetTable {
    pub fn column(&self, label: &str) -> Option<&BudgetColumn> {
        self.columns.iter().find(|c| c.label == label)
    }

    /// One row per factor plus a final `portfolio` row holding R(w) and 1.
    pub fn to_table(&self) -> Table {
        let mut header = vec!["factor".to_string()];
        for c in &self.columns {
            header.push(format!("MCTR_{}", c.label));
            header.push(format!("PCTR_{}", c.label));
        }
        let mut rows: Vec<Vec<String>> = self
            .names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let mut r = vec![name.clone()];
                for c in &self.columns {
                    r.push(fmt_f64(c.mctr[i]));
                    r.push(fmt_f64(c.pctr[i]));
                }
                r
            })
            .collect();
        let mut total = vec!["portfolio".to_string()];
        for c in &self.columns {
            total.push(fmt_f64(c.risk));
            total.push(fmt_f64(1.0));
        }
        rows.push(total);
        Table {
            comments: vec!["kind: Euler risk budget (signed fractions; negative marks a diversifier)".into()],
            header,
            rows,
        }
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        let labels: Vec<String> = table
            .header
            .iter()
            .skip(1)
            .step_by(2)
            .map(|h| h.strip_prefix("MCTR_").map(str::to_string).ok_or_else(|| Error::Input(format!("unexpected budget column `{h}`"))))
            .collect::<Result<_>>()?;
        if table.header.len() != 1 + 2 * labels.len() {
            return Err(Error::Input("budget table must have MCTR/PCTR column pairs".into()));
        }
        let (last, body) = table.rows.split_last().ok_or_else(|| Error::Input("empty budget table".into()))?;
        if last.first().map(String::as_str) != Some("portfolio") {
            return Err(Error::Input("budget table must end with a `portfolio` row".into()));
        }
        let cell = |row: &[String], j: usize| -> Result<f64> {
            let raw = row.get(j).map(String::as_str).unwrap_or("");
            parse_f64(raw).ok_or_else(|| Error::Input(format!("budget cell `{raw}` is not a number")))
        };
        let mut columns = Vec::with_capacity(labels.len());
        for (k, label) in labels.into_iter().enumerate() {
            columns.push(BudgetColumn {
                label,
                risk: cell(last, 1 + 2 * k)?,
                mctr: body.iter().map(|r| cell(r, 1 + 2 * k)).collect::<Result<_>>()?,
                pctr: body.iter().map(|r| cell(r, 2 + 2 * k)).collect::<Result<_>>()?,
            });
        }
        Ok(RiskBudgetTable { names: body.iter().map(|r| r[0].clone()).collect(), columns })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_table().write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_table(&Table::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn two_factor_hand_computation() {
        // Columns with covariance exactly diag(1, 4).
        let x = vec![1.0, -1.0, 1.0, -1.0];
        let y = vec![2.0, 2.0, -2.0, -2.0];
        let s: Vec<f64> = x.iter().map(|v| v * (4.0f64 / 3.0).sqrt().recip()).collect();
        let t: Vec<f64> = y.iter().map(|v| v * (4.0f64 / 3.0).sqrt().recip()).collect();
        let b = std_budget(&names(2), &[s, t], &[0.5, 0.5]).unwrap();
        assert!((b.risk - 1.25f64.sqrt()).abs() < 1e-12);
        assert!((b.mctr[0] - 0.25 / 1.25f64.sqrt()).abs() < 1e-12);
        assert!((b.mctr[1] - 1.0 / 1.25f64.sqrt()).abs() < 1e-12);
        assert!((b.pctr[0] - 0.2).abs() < 1e-12 && (b.pctr[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn single_factor_etl_identity() {
        let r = vec![0.3, -0.2, 0.1, -0.5, 0.0, 0.2, -0.1, 0.4, 0.05, -0.3];
        let b = etl_budget(&names(1), &[r], &[1.0], 0.2).unwrap();
        assert_eq!(b.mctr[0], 0.4);
        assert_eq!(b.risk, 0.4);
        assert_eq!(b.pctr[0], 1.0);
        assert_eq!(b.label, "ETL80");
    }

    #[test]
    fn singular_covariance() {
        let a = vec![0.1, 0.2, -0.1, 0.0];
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
        assert!(matches!(std_budget(&names(2), &[a, b], &[0.5, 0.5]), Err(Error::Singular(_))));
    }

    #[test]
    fn partition_errors() {
        let r = vec![vec![0.1, -0.2, 0.3], vec![0.0, -0.1, 0.1]];
        let t = risk_budget(&names(2), &r, &[0.5, 0.5], &[0.5]).unwrap();
        let g = |v: &[(&str, &[&str])]| v.iter().map(|(n, m)| (n.to_string(), m.iter().map(|s| s.to_string()).collect())).collect::<Vec<_>>();
        assert!(group_budget(&t, &g(&[("a", &["f0"])])).is_err());
        assert!(group_budget(&t, &g(&[("a", &["f0", "f1"]), ("b", &["f1"])])).is_err());
        assert!(group_budget(&t, &g(&[("a", &["f0", "f9"])])).is_err());
        let all = group_budget(&t, &g(&[("all", &["f0", "f1"])])).unwrap();
        for c in &all.columns {
            assert!((c.mctr[0] - c.risk).abs() < 1e-12);
        }
    }

    #[test]
    fn table_round_trip() {
        let r = vec![vec![0.1, -0.2, 0.3, 0.05], vec![0.0, 0.1, -0.1, 0.2]];
        let t = risk_budget(&names(2), &r, &[0.5, 0.5], &[0.95, 0.99]).unwrap();
        assert_eq!(RiskBudgetTable::from_table(&t.to_table()).unwrap(), t);
        assert_eq!(t.columns.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(), ["ETL95", "ETL99", "Std"]);
    }
}
