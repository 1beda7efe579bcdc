//! Systemic-risk stress measures of the index Y against a stressor X.
//!
//! With v_x the lower empirical q-quantile of X:
//! CoVaR_q is the q-quantile of Y given X <= v_x, CoES_q is the mean of Y
//! given X <= v_x and Y <= CoVaR_q, and CoETL_q is the mean of Y given
//! X <= v_x and Y <= VaR_q(Y). All three are computed on draws from a
//! bivariate GH law fitted to the observed (X, Y) pairs.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ghdist::bivariate::{fit_bivariate, Point};
use crate::ghdist::{fit, Variant};
use crate::io::{fmt_f64, parse_f64, Table};
use crate::numeric::stats;
use crate::rng;

/// Minimum joint simulation size for [`run_stress`].
pub const MIN_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressMeasures {
    pub level: f64,
    pub covar: f64,
    pub coes: f64,
    pub coetl: f64,
    /// |{j : x_j <= v_x}|.
    pub conditioning_size: usize,
    /// |{j : x_j <= v_x, y_j <= v_y}|.
    pub joint_tail_size: usize,
}

/// Smallest draw count accepted at level q: 100 / q^2.
pub fn required_draws(q: f64) -> usize {
    (100.0 / (q * q) - 1e-6).ceil() as usize
}

/// Draws are (x, y) = (stressor, index).
pub fn stress_measures(joint: &[Point], q: f64) -> Result<StressMeasures> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Input(format!("stress level {q} outside (0, 1)")));
    }
    let needed = required_draws(q);
    if joint.len() < needed {
        return Err(Error::TooFewObservations { needed, got: joint.len() });
    }
    measures_unchecked(joint, q)
}

fn measures_unchecked(joint: &[Point], q: f64) -> Result<StressMeasures> {
    let mut xs: Vec<f64> = joint.iter().map(|p| p[0]).collect();
    let vx = stats::lower_quantile_in_place(&mut xs, q)?;
    let mut ys: Vec<f64> = joint.iter().map(|p| p[1]).collect();
    let vy = stats::lower_quantile_in_place(&mut ys, q)?;
    let mut cond: Vec<f64> = joint.iter().filter(|p| p[0] <= vx).map(|p| p[1]).collect();
    let conditioning_size = cond.len();
    if conditioning_size == 0 {
        return Err(Error::EmptyTail(format!("no draw with the stressor at or below its {q}-quantile")));
    }
    let covar = stats::lower_quantile_in_place(&mut cond, q)?;
    let below: Vec<f64> = cond.iter().copied().filter(|&y| y <= covar).collect();
    let coes = below.iter().sum::<f64>() / below.len() as f64;
    let joint_tail: Vec<f64> = joint.iter().filter(|p| p[0] <= vx && p[1] <= vy).map(|p| p[1]).collect();
    if joint_tail.is_empty() {
        return Err(Error::EmptyTail(format!(
            "no draw with both the stressor and the index at or below their {q}-quantiles; increase the number of draws"
        )));
    }
    let coetl = joint_tail.iter().sum::<f64>() / joint_tail.len() as f64;
    Ok(StressMeasures { level: q, covar, coes, coetl, conditioning_size, joint_tail_size: joint_tail.len() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressRow {
    pub measures: StressMeasures,
    pub covar_se: f64,
    pub coes_se: f64,
    pub coetl_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressReport {
    pub stressor: String,
    pub variant: Variant,
    /// Rows in ascending level order.
    pub rows: Vec<StressRow>,
    pub draws: usize,
    pub seed: u64,
    pub bootstrap: usize,
    /// Sample correlation of the observed pairs.
    pub correlation: f64,
    pub observations: usize,
    /// The stressor was an exact affine image of the index; the pair was
    /// simulated from a univariate fit instead of a bivariate one.
    pub degenerate: bool,
    /// All three measures weakly decrease as q decreases.
    pub monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StressOptions {
    pub variant: Variant,
    pub draws: usize,
    pub seed: u64,
    /// Bootstrap resamples of the simulated set used for standard errors; 0 disables.
    pub bootstrap: usize,
}

impl Default for StressOptions {
    fn default() -> Self {
        StressOptions { variant: Variant::Gh, draws: 1_000_000, seed: 0, bootstrap: 500 }
    }
}

fn sd(v: &[f64]) -> f64 {
    let finite: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.len() < 2 {
        f64::NAN
    } else {
        stats::sample_sd(&finite)
    }
}

/// Bootstrap standard errors (CoVaR, CoES, CoETL) per level.
pub fn bootstrap_se(joint: &[Point], levels: &[f64], resamples: usize, seed: u64) -> Vec<[f64; 3]> {
    let n = joint.len();
    let reps: Vec<Vec<[f64; 3]>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, "stress-bootstrap", b as u64);
            let sample: Vec<Point> = (0..n).map(|_| joint[rng.random_range(0..n)]).collect();
            levels
                .iter()
                .map(|&q| match measures_unchecked(&sample, q) {
                    Ok(m) => [m.covar, m.coes, m.coetl],
                    Err(_) => [f64::NAN; 3],
                })
                .collect()
        })
        .collect();
    (0..levels.len())
        .map(|k| {
            let col = |j: usize| sd(&reps.iter().map(|r| r[k][j]).collect::<Vec<_>>());
            [col(0), col(1), col(2)]
        })
        .collect()
}

/// Whether CoVaR, CoES and CoETL are each non-decreasing in q.
pub fn is_monotone(rows: &[StressMeasures]) -> bool {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.level.total_cmp(&b.level));
    sorted.windows(2).all(|w| w[0].covar <= w[1].covar && w[0].coes <= w[1].coes && w[0].coetl <= w[1].coetl)
}

/// Fits the joint law of (stressor, index), simulates `draws` pairs and measures them at each level.
pub fn run_stress(index: &[f64], stressor: &[f64], stressor_name: &str, levels: &[f64], options: &StressOptions) -> Result<StressReport> {
    if index.len() != stressor.len() {
        return Err(Error::Input(format!("index has {} returns but stressor `{stressor_name}` has {}", index.len(), stressor.len())));
    }
    if options.draws < MIN_DRAWS {
        return Err(Error::TooFewObservations { needed: MIN_DRAWS, got: options.draws });
    }
    if levels.is_empty() {
        return Err(Error::Input("at least one stress level is required".into()));
    }
    for &q in levels {
        let needed = required_draws(q);
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Input(format!("stress level {q} outside (0, 1)")));
        }
        if options.draws < needed {
            return Err(Error::TooFewObservations { needed, got: options.draws });
        }
    }
    if index.iter().chain(stressor).any(|v| !v.is_finite()) {
        return Err(Error::Input("stress inputs must be finite".into()));
    }
    let correlation = stats::correlation(stressor, index);
    let degenerate = correlation.abs() > 1.0 - 1e-12;
    let joint: Vec<Point> = if degenerate {
        // Collinear pairs have no bivariate density: simulate Y and map it onto X.
        let law = fit::fit_univariate(index, options.variant)?.params;
        let slope = correlation * stats::sample_sd(stressor) / stats::sample_sd(index);
        let (mx, my) = (stats::mean(stressor), stats::mean(index));
        law.sample(options.draws, options.seed).into_iter().map(|y| [mx + slope * (y - my), y]).collect()
    } else {
        let data: Vec<Point> = stressor.iter().zip(index).map(|(&x, &y)| [x, y]).collect();
        fit_bivariate(&data, options.variant)?.params.sample(options.draws, options.seed)
    };
    let mut sorted_levels = levels.to_vec();
    sorted_levels.sort_by(f64::total_cmp);
    sorted_levels.dedup();
    let measures: Vec<StressMeasures> = sorted_levels.iter().map(|&q| stress_measures(&joint, q)).collect::<Result<_>>()?;
    let se = if options.bootstrap > 0 {
        bootstrap_se(&joint, &sorted_levels, options.bootstrap, options.seed)
    } else {
        vec![[f64::NAN; 3]; sorted_levels.len()]
    };
    let monotone = is_monotone(&measures);
    let rows = measures
        .into_iter()
        .zip(se)
        .map(|(m, s)| StressRow { measures: m, covar_se: s[0], coes_se: s[1], coetl_se: s[2] })
        .collect();
    Ok(StressReport {
        stressor: stressor_name.to_string(),
        variant: options.variant,
        rows,
        draws: options.draws,
        seed: options.seed,
        bootstrap: options.bootstrap,
        correlation,
        observations: index.len(),
        degenerate,
        monotone,
    })
}

const HEADER: [&str; 9] = ["q", "CoES", "CoVaR", "CoETL", "CoES_se", "CoVaR_se", "CoETL_se", "conditioning_size", "joint_tail_size"];

impl StressReport {
    pub fn to_table(&self) -> Table {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let m = &r.measures;
                vec![
                    fmt_f64(m.level),
                    fmt_f64(m.coes),
                    fmt_f64(m.covar),
                    fmt_f64(m.coetl),
                    fmt_f64(r.coes_se),
                    fmt_f64(r.covar_se),
                    fmt_f64(r.coetl_se),
                    m.conditioning_size.to_string(),
                    m.joint_tail_size.to_string(),
                ]
            })
            .collect();
        Table {
            comments: vec![
                "kind: left-tail systemic risk measures on the index".into(),
                format!("stressor: {}", self.stressor),
                format!("variant: {}", self.variant),
                format!("draws: {}", self.draws),
                format!("seed: {}", self.seed),
                format!("bootstrap: {}", self.bootstrap),
                format!("correlation: {}", fmt_f64(self.correlation)),
                format!("observations: {}", self.observations),
                format!("degenerate: {}", self.degenerate),
                format!("monotone: {}", self.monotone),
            ],
            header: HEADER.map(String::from).to_vec(),
            rows,
        }
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        if table.header != HEADER {
            return Err(Error::Input(format!("stress table header must be {}", HEADER.join(","))));
        }
        let meta = |key: &str| -> Result<&str> {
            table
                .comments
                .iter()
                .find_map(|c| c.strip_prefix(key).and_then(|r| r.strip_prefix(':')).map(str::trim))
                .ok_or_else(|| Error::Input(format!("stress table lacks `{key}` header line")))
        };
        let bad = |key: &str, raw: &str| Error::Input(format!("stress table: bad `{key}` value `{raw}`"));
        let int = |key: &str| -> Result<usize> { meta(key).and_then(|r| r.parse().map_err(|_| bad(key, r))) };
        let flag = |key: &str| -> Result<bool> { meta(key).and_then(|r| r.parse().map_err(|_| bad(key, r))) };
        let num = |raw: &str| parse_f64(raw).ok_or_else(|| Error::Input(format!("stress cell `{raw}` is not a number")));
        let rows = table
            .rows
            .iter()
            .map(|r| {
                let count = |raw: &str| raw.parse::<usize>().map_err(|_| bad("size", raw));
                Ok(StressRow {
                    measures: StressMeasures {
                        level: num(&r[0])?,
                        coes: num(&r[1])?,
                        covar: num(&r[2])?,
                        coetl: num(&r[3])?,
                        conditioning_size: count(&r[7])?,
                        joint_tail_size: count(&r[8])?,
                    },
                    coes_se: num(&r[4])?,
                    covar_se: num(&r[5])?,
                    coetl_se: num(&r[6])?,
                })
            })
            .collect::<Result<_>>()?;
        let seed_raw = meta("seed")?;
        Ok(StressReport {
            stressor: meta("stressor")?.to_string(),
            variant: meta("variant")?.parse()?,
            rows,
            draws: int("draws")?,
            seed: seed_raw.parse().map_err(|_| bad("seed", seed_raw))?,
            bootstrap: int("bootstrap")?,
            correlation: num(meta("correlation")?)?,
            observations: int("observations")?,
            degenerate: flag("degenerate")?,
            monotone: flag("monotone")?,
        })
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

    #[test]
    fn comonotone_reduction() {
        let x: Vec<f64> = crate::ghdist::GhParams::nig(1.5, 0.2, 1.0, 0.0).unwrap().sample(10_000, 4);
        let joint: Vec<Point> = x.iter().map(|&v| [v, v]).collect();
        let m = stress_measures(&joint, 0.1).unwrap();
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        // Bottom decile has 1000 draws; its 10% quantile is the 100th smallest overall.
        assert_eq!(m.conditioning_size, 1000);
        assert_eq!(m.covar, sorted[99]);
        assert!((m.coes - sorted[..100].iter().sum::<f64>() / 100.0).abs() < 1e-13);
        assert!((m.coetl - sorted[..1000].iter().sum::<f64>() / 1000.0).abs() < 1e-13);
    }

    #[test]
    fn draw_count_precondition() {
        let joint = vec![[0.0, 0.0]; 39_999];
        assert!(matches!(stress_measures(&joint, 0.05), Err(Error::TooFewObservations { needed: 40_000, .. })));
        assert_eq!(required_draws(0.1), 10_000);
        assert_eq!(required_draws(0.01), 1_000_000);
    }

    #[test]
    fn report_round_trip() {
        let m = StressMeasures { level: 0.05, covar: -1.2, coes: -1.5, coetl: -1.1, conditioning_size: 500, joint_tail_size: 60 };
        let r = StressReport {
            stressor: "Trade".into(),
            variant: Variant::Nig,
            rows: vec![StressRow { measures: m, covar_se: 0.01, coes_se: 0.02, coetl_se: f64::NAN }],
            draws: 10_000,
            seed: 7,
            bootstrap: 0,
            correlation: 0.15,
            observations: 30,
            degenerate: false,
            monotone: true,
        };
        let back = StressReport::from_table(&r.to_table()).unwrap();
        assert!(back.rows[0].coetl_se.is_nan());
        assert_eq!(back.to_table().render(), r.to_table().render());
    }
}
