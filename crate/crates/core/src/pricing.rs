//! Risk-neutral Monte Carlo prices of European options on the index.
//!
//! Under the real-world measure the one-period log-return is
//! r = r' + lambda0 sqrt(h) - h/2 + sqrt(h) eps, with conditional MGF
//! M(u) = exp{(r' + lambda0 sqrt(h) - h/2) u} M_eps(sqrt(h) u). The Esscher
//! parameter theta solves M(1 + theta) = M(theta) e^{r'}, and the tilted
//! innovation law has skewness beta + sqrt(h) theta (a normal innovation
//! becomes N(sqrt(h) theta, 1)). Paths follow that law period by period
//! with h updated by the GARCH recursion.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;

use crate::econometrics::{GarchModel, Innovation, ScenarioKind, ScenarioSet};
use crate::error::{Error, Result};
use crate::ghdist::GhSampler;
use crate::io::{fmt_f64, parse_f64, Table};
use crate::numeric::{norm_cdf, roots};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsscherSolution {
    pub theta: f64,
    /// ln M(1 + theta) - ln M(theta) - r' at the returned theta.
    pub residual: f64,
    pub bracket: (f64, f64),
}

/// Terms of the Esscher equation; `convexity` = false drops the -h/2 drift (test hook).
#[derive(Debug, Clone, Copy)]
pub struct EsscherProblem {
    pub h: f64,
    pub lambda0: f64,
    pub riskfree: f64,
    pub convexity: bool,
}

/// Admissible theta: both sqrt(h) theta and sqrt(h)(1 + theta) inside the innovation MGF strip.
pub fn esscher_strip(innovation: &Innovation, h: f64) -> (f64, f64) {
    match innovation {
        Innovation::Normal => (f64::NEG_INFINITY, f64::INFINITY),
        Innovation::Gh(p) => {
            let (lo, hi) = p.mgf_strip();
            let s = h.sqrt();
            (lo / s, hi / s - 1.0)
        }
    }
}

fn esscher_equation(innovation: &Innovation, prob: &EsscherProblem, theta: f64) -> Result<f64> {
    let s = prob.h.sqrt();
    let drift = prob.lambda0 * s - if prob.convexity { 0.5 * prob.h } else { 0.0 };
    Ok(drift + innovation.ln_mgf(s * (1.0 + theta))? - innovation.ln_mgf(s * theta)?)
}

pub fn solve_esscher(model: &GarchModel, h: f64) -> Result<EsscherSolution> {
    solve_esscher_with(&model.innovation, &EsscherProblem { h, lambda0: model.lambda0, riskfree: model.riskfree, convexity: true })
}

/// The equation is increasing in theta (cumulant functions are convex), so a
/// sign change is sought by expanding a bracket inside the admissible strip.
pub fn solve_esscher_with(innovation: &Innovation, prob: &EsscherProblem) -> Result<EsscherSolution> {
    if !(prob.h > 0.0 && prob.h.is_finite()) {
        return Err(Error::Input(format!("conditional variance must be positive, got {}", prob.h)));
    }
    let (lo, hi) = esscher_strip(innovation, prob.h);
    if !(lo < hi) {
        return Err(Error::EsscherNoRoot { h: prob.h, lo, hi });
    }
    // r' enters both sides and cancels.
    let f = |theta: f64| esscher_equation(innovation, prob, theta);
    let (mut a, mut b) = if lo.is_finite() {
        let pad = 1e-10 * (hi - lo);
        (lo + pad, hi - pad)
    } else {
        (-1.0, 1.0)
    };
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if !lo.is_finite() {
        let mut k = 0;
        while fa.signum() == fb.signum() && k < 200 {
            if fa > 0.0 {
                a *= 2.0;
                fa = f(a)?;
            } else {
                b *= 2.0;
                fb = f(b)?;
            }
            k += 1;
        }
    }
    if fa == 0.0 {
        return Ok(EsscherSolution { theta: a, residual: 0.0, bracket: (a, b) });
    }
    if fb == 0.0 {
        return Ok(EsscherSolution { theta: b, residual: 0.0, bracket: (a, b) });
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::EsscherNoRoot { h: prob.h, lo, hi });
    }
    let scale = a.abs().max(b.abs()).max(1.0);
    let root = roots::brent(|t| f(t).unwrap_or(f64::NAN), a, b, 1e-15 * scale, 1e-14, 500)
        .ok_or(Error::EsscherNoRoot { h: prob.h, lo, hi })?;
    Ok(EsscherSolution { theta: root.x, residual: root.residual, bracket: (a, b) })
}

/// Innovation law after an Esscher tilt by u.
enum Tilted {
    Normal { shift: f64 },
    Gh(GhSampler),
}

impl Tilted {
    fn new(innovation: &Innovation, u: f64) -> Result<Self> {
        match innovation {
            Innovation::Normal => Ok(Tilted::Normal { shift: u }),
            Innovation::Gh(p) => Ok(Tilted::Gh(GhSampler::new(&p.with_beta(p.beta() + u)?))),
        }
    }

    fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Tilted::Normal { shift } => shift + rng.sample::<f64, _>(rand_distr::StandardNormal),
            Tilted::Gh(s) => s.draw(rng),
        }
    }
}

/// Per-worker cache of Esscher roots keyed by h quantized to 1e-12.
struct EsscherCache<'a> {
    model: &'a GarchModel,
    roots: HashMap<i64, (f64, std::sync::Arc<Tilted>)>,
}

impl<'a> EsscherCache<'a> {
    fn new(model: &'a GarchModel) -> Self {
        EsscherCache { model, roots: HashMap::new() }
    }

    fn tilted(&mut self, h: f64) -> Result<std::sync::Arc<Tilted>> {
        let key = (h * 1e12).round() as i64;
        if let Some((_, t)) = self.roots.get(&key) {
            return Ok(t.clone());
        }
        let sol = solve_esscher(self.model, h)?;
        let t = std::sync::Arc::new(Tilted::new(&self.model.innovation, h.sqrt() * sol.theta)?);
        if self.roots.len() > 100_000 {
            self.roots.clear();
        }
        self.roots.insert(key, (sol.theta, t.clone()));
        Ok(t)
    }
}

/// Terminal prices I_T = I0 exp(sum r_t) for T = 1..max(maturities), recorded
/// at each requested maturity from the same paths.
pub fn simulate_riskneutral_multi(model: &GarchModel, maturities: &[usize], n_paths: usize, i0: f64, seed: u64) -> Result<Vec<ScenarioSet>> {
    model.validate()?;
    if !(i0 > 0.0 && i0.is_finite()) {
        return Err(Error::Input(format!("initial index level must be positive, got {i0}")));
    }
    if n_paths == 0 {
        return Err(Error::Input("path count must be positive".into()));
    }
    let horizon = maturities.iter().copied().max().unwrap_or(0);
    let h1 = model.forecast_variance();
    let blocks: Vec<Result<Vec<Vec<f64>>>> = rng::shards(n_paths)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(shard, _, len)| {
            let mut rng = rng::stream(seed, "riskneutral-paths", shard);
            let mut cache = EsscherCache::new(model);
            let mut out = vec![Vec::with_capacity(len); maturities.len()];
            for _ in 0..len {
                let mut h = h1;
                let mut log_sum = 0.0;
                let record = |t: usize, log_sum: f64, out: &mut Vec<Vec<f64>>| {
                    for (k, &m) in maturities.iter().enumerate() {
                        if m == t {
                            out[k].push(i0 * log_sum.exp());
                        }
                    }
                };
                record(0, 0.0, &mut out);
                for t in 1..=horizon {
                    let tilted = cache.tilted(h).map_err(|e| Error::PathFailure { period: t, h, source: Box::new(e) })?;
                    let eps = tilted.draw(&mut rng);
                    let s = h.sqrt();
                    let r = model.riskfree + model.lambda0 * s - 0.5 * h + s * eps;
                    log_sum += r;
                    record(t, log_sum, &mut out);
                    let e = s * eps;
                    h = model.omega + model.a * h + model.b * e * e;
                }
            }
            Ok(out)
        })
        .collect();
    let mut sets: Vec<Vec<f64>> = vec![Vec::with_capacity(n_paths); maturities.len()];
    for block in blocks {
        for (k, v) in block?.into_iter().enumerate() {
            sets[k].extend(v);
        }
    }
    Ok(sets
        .into_iter()
        .zip(maturities)
        .map(|(draws, &t)| ScenarioSet {
            kind: ScenarioKind::TerminalPrice,
            draws,
            seed: Some(seed),
            provenance: vec![
                format!("risk-neutral terminal prices, T = {t}, I0 = {i0}, h1 = {h1}"),
                format!("lambda0 = {}, r' = {}, innovation = {}", model.lambda0, model.riskfree, model.innovation.label()),
            ],
        })
        .collect())
}

pub fn simulate_riskneutral(model: &GarchModel, maturity: usize, n_paths: usize, i0: f64, seed: u64) -> Result<ScenarioSet> {
    Ok(simulate_riskneutral_multi(model, &[maturity], n_paths, i0, seed)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub maturity: usize,
    pub strike: f64,
    pub call: f64,
    pub put: f64,
    pub call_se: f64,
    pub put_se: f64,
    /// Mean terminal price on the path set.
    pub forward: f64,
    pub implied_vol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionGrid {
    pub i0: f64,
    pub riskfree: f64,
    pub valuation: usize,
    pub n_paths: usize,
    pub quotes: Vec<OptionQuote>,
}

fn mean_and_se(x: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let m = x.clone().sum::<f64>() / nf;
    let v = x.map(|v| (v - m) * (v - m)).sum::<f64>() / (nf - 1.0).max(1.0);
    (m, (v / nf).sqrt())
}

/// Discounted Monte Carlo call and put prices for each strike on one path set.
pub fn price_options(terminal: &[f64], strikes: &[f64], maturity: usize, valuation: usize, riskfree: f64) -> Result<Vec<OptionQuote>> {
    if terminal.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if valuation > maturity {
        return Err(Error::Input(format!("valuation period {valuation} is after maturity {maturity}")));
    }
    if let Some(k) = strikes.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
        return Err(Error::Input(format!("strike {k} must be non-negative")));
    }
    let n = terminal.len();
    let disc = (-riskfree * (maturity - valuation) as f64).exp();
    let forward = terminal.iter().sum::<f64>() / n as f64;
    Ok(strikes
        .iter()
        .map(|&k| {
            let (c, cse) = mean_and_se(terminal.iter().map(move |&i| (i - k).max(0.0)), n);
            let (p, pse) = mean_and_se(terminal.iter().map(move |&i| (k - i).max(0.0)), n);
            OptionQuote {
                maturity,
                strike: k,
                call: disc * c,
                put: disc * p,
                call_se: disc * cse,
                put_se: disc * pse,
                forward,
                implied_vol: None,
            }
        })
        .collect())
}

/// Black-Scholes call price with time to maturity `tau` periods.
pub fn black_scholes_call(s: f64, k: f64, tau: f64, r: f64, sigma: f64) -> f64 {
    if tau <= 0.0 || sigma <= 0.0 {
        return (s - k * (-r * tau).exp()).max(0.0);
    }
    if k <= 0.0 {
        return s - k * (-r * tau).exp();
    }
    let sq = sigma * tau.sqrt();
    let d1 = ((s / k).ln() + (r + 0.5 * sigma * sigma) * tau) / sq;
    s * norm_cdf(d1) - k * (-r * tau).exp() * norm_cdf(d1 - sq)
}

/// Implied volatility by bisection on [1e-6, 5]; `None` outside the no-arbitrage band.
pub fn implied_vol(price: f64, s: f64, k: f64, tau: f64, r: f64) -> Option<f64> {
    let lower = (s - k * (-r * tau).exp()).max(0.0);
    if !(tau > 0.0 && k > 0.0 && price > lower && price < s) {
        return None;
    }
    let (lo, hi) = (1e-6, 5.0);
    let f = |sigma: f64| black_scholes_call(s, k, tau, r, sigma) - price;
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return None;
    }
    roots::bisect(f, lo, hi, 1e-10, 200)
}

const GRID_HEADER: [&str; 9] = ["T", "K", "moneyness", "call", "put", "call_se", "put_se", "implied_vol", "forward"];

impl OptionGrid {
    /// Prices every (maturity, strike) pair; the path sets must be ordered like `maturities`.
    pub fn build(paths: &[ScenarioSet], maturities: &[usize], strikes: &[f64], i0: f64, riskfree: f64, valuation: usize) -> Result<Self> {
        if paths.len() != maturities.len() {
            return Err(Error::Input("one path set per maturity is required".into()));
        }
        let mut quotes = Vec::new();
        for (set, &t) in paths.iter().zip(maturities) {
            for mut q in price_options(&set.draws, strikes, t, valuation, riskfree)? {
                q.implied_vol = implied_vol(q.call, i0, q.strike, (t - valuation) as f64, riskfree);
                quotes.push(q);
            }
        }
        Ok(OptionGrid { i0, riskfree, valuation, n_paths: paths.first().map_or(0, |p| p.draws.len()), quotes })
    }

    pub fn to_table(&self) -> Table {
        let header = GRID_HEADER.map(String::from).to_vec();
        let rows = self
            .quotes
            .iter()
            .map(|q| {
                vec![
                    q.maturity.to_string(),
                    fmt_f64(q.strike),
                    fmt_f64(self.i0 / q.strike),
                    fmt_f64(q.call),
                    fmt_f64(q.put),
                    fmt_f64(q.call_se),
                    fmt_f64(q.put_se),
                    q.implied_vol.map_or("NA".to_string(), fmt_f64),
                    fmt_f64(q.forward),
                ]
            })
            .collect();
        Table {
            comments: vec![
                "kind: Monte Carlo option prices under the Esscher risk-neutral measure".into(),
                format!("i0: {}", fmt_f64(self.i0)),
                format!("riskfree: {}", fmt_f64(self.riskfree)),
                format!("valuation: {}", self.valuation),
                format!("paths: {}", self.n_paths),
            ],
            header,
            rows,
        }
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        if table.header != GRID_HEADER {
            return Err(Error::Input(format!("option table header must be {}", GRID_HEADER.join(","))));
        }
        let meta = |key: &str| table.meta(key).ok_or_else(|| Error::Input(format!("option table lacks `{key}` header line")));
        let num = |raw: &str| parse_f64(raw).ok_or_else(|| Error::Input(format!("option table cell `{raw}` is not a number")));
        let int = |raw: &str| raw.parse::<usize>().map_err(|_| Error::Input(format!("option table: `{raw}` is not a count")));
        let quotes = table
            .rows
            .iter()
            .map(|r| {
                if r.len() != GRID_HEADER.len() {
                    return Err(Error::Input(format!("option table row has {} cells, expected {}", r.len(), GRID_HEADER.len())));
                }
                let iv = num(&r[7])?;
                Ok(OptionQuote {
                    maturity: int(&r[0])?,
                    strike: num(&r[1])?,
                    call: num(&r[3])?,
                    put: num(&r[4])?,
                    call_se: num(&r[5])?,
                    put_se: num(&r[6])?,
                    forward: num(&r[8])?,
                    implied_vol: (!iv.is_nan()).then_some(iv),
                })
            })
            .collect::<Result<_>>()?;
        Ok(OptionGrid {
            i0: num(meta("i0")?)?,
            riskfree: num(meta("riskfree")?)?,
            valuation: int(meta("valuation")?)?,
            n_paths: int(meta("paths")?)?,
            quotes,
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
    use crate::ghdist::GhParams;

    #[test]
    fn normal_closed_form() {
        for &(l0, h) in &[(0.0, 0.04), (0.3, 0.01), (-0.7, 0.5), (1.2, 2.0)] {
            let p = EsscherProblem { h, lambda0: l0, riskfree: 0.02, convexity: true };
            let s = solve_esscher_with(&Innovation::Normal, &p).unwrap();
            assert!((s.theta + l0 / h.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_law_without_drift() {
        let inn = Innovation::Gh(GhParams::nig(2.0, 0.0, 1.0, 0.0).unwrap());
        let p = EsscherProblem { h: 0.3, lambda0: 0.0, riskfree: 0.0, convexity: false };
        let s = solve_esscher_with(&inn, &p).unwrap();
        assert!((s.theta + 0.5).abs() < 1e-10);
    }

    #[test]
    fn empty_strip_is_an_error() {
        // sqrt(h) >= 2 alpha leaves no admissible theta.
        let inn = Innovation::Gh(GhParams::vg(1.0, 1.0, 0.5, 0.0).unwrap());
        let p = EsscherProblem { h: 4.0, lambda0: 0.0, riskfree: 0.0, convexity: true };
        assert!(matches!(solve_esscher_with(&inn, &p), Err(Error::EsscherNoRoot { .. })));
    }

    #[test]
    fn zero_maturity_is_identity() {
        let m = GarchModel::new(0.0, 0.0, 0.04, 0.0, 0.0, Innovation::Normal).unwrap();
        let s = simulate_riskneutral(&m, 0, 100, 3.0, 1).unwrap();
        assert!(s.draws.iter().all(|&v| v == 3.0));
    }

    #[test]
    fn parity_and_zero_strike() {
        let paths = [0.5, 1.2, 0.9, 1.7, 1.0];
        let q = price_options(&paths, &[0.0, 1.0, 1.3], 3, 1, 0.05).unwrap();
        let disc = (-0.1f64).exp();
        let mean = paths.iter().sum::<f64>() / 5.0;
        assert!((q[0].call - disc * mean).abs() < 1e-15 && q[0].put == 0.0);
        for x in &q {
            assert!((x.call - x.put - disc * (mean - x.strike)).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_table_round_trip() {
        let m = GarchModel::new(0.0, 0.0, 0.04, 0.0, 0.0, Innovation::Normal).unwrap();
        let paths = simulate_riskneutral_multi(&m, &[1, 2], 500, 1.0, 2).unwrap();
        let grid = OptionGrid::build(&paths, &[1, 2], &[0.5, 1.0, 40.0], 1.0, 0.01, 0).unwrap();
        assert!(grid.quotes.iter().any(|q| q.implied_vol.is_none()));
        assert_eq!(OptionGrid::from_table(&Table::parse(&grid.to_table().render()).unwrap()).unwrap(), grid);
    }

    #[test]
    fn implied_vol_round_trip() {
        let c = black_scholes_call(1.0, 1.1, 2.0, 0.01, 0.25);
        assert!((implied_vol(c, 1.0, 1.1, 2.0, 0.01).unwrap() - 0.25).abs() < 1e-6);
        assert!(implied_vol(0.01, 1.0, 0.5, 1.0, 0.0).is_none());
        assert!((black_scholes_call(1.0, 1.0, 1.0, 0.0, 0.2) - 0.0797).abs() < 1e-4);
    }
}
