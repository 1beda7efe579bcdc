use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use std::path::Path;

use crate::io::{fmt_f64, parse_f64, Table};
use crate::numeric::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRisk {
    pub level: f64,
    /// Lower empirical quantile (the ceil(qN)-th smallest draw).
    pub var: f64,
    /// Mean of the draws at or below VaR.
    pub es: f64,
    /// Number of draws at or below VaR.
    pub tail_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskSummary {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Moment skewness m3 / m2^{3/2}.
    pub skewness: f64,
    /// Moment excess kurtosis m4 / m2^2 - 3.
    pub excess_kurtosis: f64,
    pub tails: Vec<TailRisk>,
}

/// VaR and ES of `draws` at each level, plus summary statistics.
pub fn risk_summary(draws: &[f64], levels: &[f64]) -> Result<RiskSummary> {
    if draws.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if draws.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("risk summary: non-finite draw".into()));
    }
    for &q in levels {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Input(format!("risk level {q} outside (0, 1)")));
        }
        let needed = (1.0 / q - 1e-9).ceil() as usize;
        if draws.len() < needed {
            return Err(Error::TooFewObservations { needed, got: draws.len() });
        }
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    let (skewness, excess_kurtosis) = stats::skewness_kurtosis(&sorted);
    let tails = levels
        .iter()
        .map(|&q| {
            let k = stats::quantile_rank(q, n);
            let var = sorted[k - 1];
            let count = sorted.partition_point(|&v| v <= var);
            let es = sorted[..count].iter().sum::<f64>() / count as f64;
            TailRisk { level: q, var, es, tail_count: count }
        })
        .collect();
    Ok(RiskSummary {
        n,
        min: sorted[0],
        max: sorted[n - 1],
        mean: stats::mean(draws),
        median,
        skewness,
        excess_kurtosis,
        tails,
    })
}

impl RiskSummary {
    pub fn to_table(&self) -> Table {
        let mut rows = vec![
            vec!["n".to_string(), self.n.to_string()],
            vec!["min".into(), fmt_f64(self.min)],
            vec!["max".into(), fmt_f64(self.max)],
            vec!["mean".into(), fmt_f64(self.mean)],
            vec!["median".into(), fmt_f64(self.median)],
            vec!["skewness".into(), fmt_f64(self.skewness)],
            vec!["excess_kurtosis".into(), fmt_f64(self.excess_kurtosis)],
        ];
        for t in &self.tails {
            rows.push(vec![format!("VaR_{}", t.level), fmt_f64(t.var)]);
            rows.push(vec![format!("ES_{}", t.level), fmt_f64(t.es)]);
            rows.push(vec![format!("tail_count_{}", t.level), t.tail_count.to_string()]);
        }
        Table { comments: vec!["kind: summary statistics and left-tail risk".into()], header: vec!["statistic".into(), "value".into()], rows }
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        if table.header != ["statistic", "value"] {
            return Err(Error::Input("risk table header must be statistic,value".into()));
        }
        let mut stat = std::collections::HashMap::new();
        let mut levels = Vec::new();
        for r in &table.rows {
            let (key, raw) = match r.as_slice() {
                [k, v] => (k.as_str(), v.as_str()),
                _ => return Err(Error::Input("risk table rows need two cells".into())),
            };
            let v = parse_f64(raw).ok_or_else(|| Error::Input(format!("risk table: `{key}` value `{raw}` is not a number")))?;
            if let Some(q) = key.strip_prefix("VaR_") {
                levels.push(q.parse::<f64>().map_err(|_| Error::Input(format!("risk table: bad level in `{key}`")))?);
            }
            stat.insert(key.to_string(), v);
        }
        let get = |key: &str| stat.get(key).copied().ok_or_else(|| Error::Input(format!("risk table lacks `{key}`")));
        let tails = levels
            .iter()
            .map(|&q| {
                Ok(TailRisk {
                    level: q,
                    var: get(&format!("VaR_{q}"))?,
                    es: get(&format!("ES_{q}"))?,
                    tail_count: get(&format!("tail_count_{q}"))? as usize,
                })
            })
            .collect::<Result<_>>()?;
        Ok(RiskSummary {
            n: get("n")? as usize,
            min: get("min")?,
            max: get("max")?,
            mean: get("mean")?,
            median: get("median")?,
            skewness: get("skewness")?,
            excess_kurtosis: get("excess_kurtosis")?,
            tails,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_table().write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_table(&Table::read(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjungBox {
    pub statistic: f64,
    pub p_value: f64,
    pub lags: usize,
}

/// Q = n (n + 2) sum_{k=1..h} rho_k^2 / (n - k), referred to chi-square(h).
pub fn ljung_box(series: &[f64], lags: usize) -> Result<LjungBox> {
    let n = series.len();
    if lags == 0 || 2 * lags >= n {
        return Err(Error::Input(format!("Ljung-Box needs 0 < lags < n/2, got lags={lags}, n={n}")));
    }
    let m = stats::mean(series);
    let den: f64 = series.iter().map(|v| (v - m) * (v - m)).sum();
    if !(den > 0.0) {
        return Err(Error::ZeroVariance { name: "Ljung-Box series".into() });
    }
    let nf = n as f64;
    let mut q = 0.0;
    for k in 1..=lags {
        let num: f64 = (k..n).map(|t| (series[t] - m) * (series[t - k] - m)).sum();
        let rho = num / den;
        q += rho * rho / (nf - k as f64);
    }
    let statistic = nf * (nf + 2.0) * q;
    let chi = ChiSquared::new(lags as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(LjungBox { statistic, p_value: chi.sf(statistic).clamp(0.0, 1.0), lags })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_order_statistics() {
        let draws: Vec<f64> = (-3..=6).map(f64::from).collect();
        let s = risk_summary(&draws, &[0.1]).unwrap();
        assert_eq!(s.tails[0].var, -3.0);
        assert_eq!(s.tails[0].es, -3.0);
        assert_eq!(s.median, 1.5);
        let s = risk_summary(&draws, &[0.3]).unwrap();
        assert_eq!(s.tails[0].var, -1.0);
        assert_eq!(s.tails[0].es, -2.0);
    }

    #[test]
    fn table_round_trip() {
        let draws: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = risk_summary(&draws, &[0.01, 0.05, 0.1]).unwrap();
        assert_eq!(RiskSummary::from_table(&Table::parse(&s.to_table().render()).unwrap()).unwrap(), s);
    }

    #[test]
    fn too_few_draws() {
        assert!(matches!(risk_summary(&[1.0; 50], &[0.01]), Err(Error::TooFewObservations { needed: 100, .. })));
    }

    #[test]
    fn ljung_box_detects_ar1() {
        let mut rng = crate::rng::stream(1, "lb-test", 0);
        let mut x = vec![0.0f64; 10_000];
        for t in 1..x.len() {
            let z: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
            x[t] = 0.9 * x[t - 1] + z;
        }
        assert!(ljung_box(&x, 10).unwrap().p_value < 1e-6);
        assert!(matches!(ljung_box(&[1.0; 30], 5), Err(Error::ZeroVariance { .. })));
        assert!(ljung_box(&x[..30], 15).is_err());
    }
}
