//! One function per pipeline stage. Each reads its inputs from disk and
//! writes its artifacts, so subcommands and `run` share the same code path.

use std::path::Path;

use swbi::econometrics::{
    fit_garch_with, risk_summary, simulate_stationary_with, GarchModel, GarchOptions, RiskSummary, ScenarioSet,
    StationaryMethod,
};
use swbi::index::{build_index_with, pca, read_series, IndexOptions, IndexSeries, PcaSummary};
use swbi::io::{write_text, Table};
use swbi::panel::{load_panel, to_log_returns, PanelConfig, ReturnPanel};
use swbi::pricing::{simulate_riskneutral_multi, OptionGrid};
use swbi::riskbudget::{group_budget, panel_budget, RiskBudgetTable};
use swbi::stress::{run_stress, StressOptions, StressReport};
use swbi::{Error, Result};

pub fn panel_returns(input: &Path, config: &PanelConfig, out: &Path) -> Result<ReturnPanel> {
    let returns = to_log_returns(&load_panel(input, config)?)?;
    let mut table = returns.to_table();
    table.comments.push(format!("source: {}", file_name(input)));
    table.write(out)?;
    Ok(returns)
}

/// Writes the index series and its `key = value` sidecar.
pub fn index_build(returns: &Path, options: IndexOptions, out: &Path, meta: &Path) -> Result<IndexSeries> {
    let index = build_index_with(&ReturnPanel::read(returns)?, options)?;
    index.to_table().write(out)?;
    write_text(meta, &index.metadata().render())?;
    Ok(index)
}

pub fn index_pca(returns: &Path, out: &Path, loadings: Option<&Path>) -> Result<PcaSummary> {
    let summary = pca(&ReturnPanel::read(returns)?)?;
    summary.to_table().write(out)?;
    if let Some(path) = loadings {
        summary.loadings_table().write(path)?;
    }
    Ok(summary)
}

pub fn fit_garch(index: &Path, options: &GarchOptions, out: &Path) -> Result<GarchModel> {
    let (_, series) = read_series(index)?;
    let model = fit_garch_with(&series, options)?;
    model.write(out)?;
    Ok(model)
}

pub fn fit_gh(series: &Path, variant: swbi::ghdist::Variant, out: &Path) -> Result<swbi::ghdist::fit::UnivariateFit> {
    let (_, x) = read_series(series)?;
    let fit = swbi::ghdist::fit::fit_univariate(&x, variant)?;
    let mut kv = fit.params.to_key_values("");
    kv.comments.push(format!("univariate {variant} fit to {} ({} points)", file_name(series), x.len()));
    kv.push_f64("loglik", fit.log_likelihood);
    write_text(out, &kv.render())?;
    Ok(fit)
}

pub fn simulate(model: &Path, n: usize, seed: u64, method: StationaryMethod, out: &Path) -> Result<ScenarioSet> {
    let set = simulate_stationary_with(&GarchModel::read(model)?, n, seed, method)?;
    set.write(out)?;
    Ok(set)
}

pub fn risk(scenarios: &Path, levels: &[f64], out: Option<&Path>) -> Result<RiskSummary> {
    let summary = risk_summary(&ScenarioSet::read(scenarios)?.draws, levels)?;
    if let Some(path) = out {
        summary.write(path)?;
    }
    Ok(summary)
}

pub struct PriceRequest<'a> {
    pub i0: f64,
    pub strikes: &'a [f64],
    pub maturities: &'a [usize],
    pub n: usize,
    pub seed: u64,
    pub valuation: usize,
    pub lambda0: Option<f64>,
    pub riskfree: Option<f64>,
}

pub fn price(model: &Path, req: &PriceRequest, out: &Path) -> Result<OptionGrid> {
    let mut m = GarchModel::read(model)?;
    m = m.with_premium(req.lambda0.unwrap_or(m.lambda0), req.riskfree.unwrap_or(m.riskfree));
    let paths = simulate_riskneutral_multi(&m, req.maturities, req.n, req.i0, req.seed)?;
    let grid = OptionGrid::build(&paths, req.maturities, req.strikes, req.i0, m.riskfree, req.valuation)?;
    let mut table = grid.to_table();
    table.comments.push(format!("seed: {}", req.seed));
    table.write(out)?;
    Ok(grid)
}

pub fn budget(returns: &Path, levels: &[f64], exclude_base_year: bool, groups: &[(String, Vec<String>)], out: &Path) -> Result<RiskBudgetTable> {
    let mut table = panel_budget(&ReturnPanel::read(returns)?, levels, exclude_base_year)?;
    if !groups.is_empty() {
        table = group_budget(&table, groups)?;
    }
    table.write(out)?;
    Ok(table)
}

/// Pairs the index with a stressor series on their common years.
pub fn stress(index: &Path, stressor: &Path, levels: &[f64], options: &StressOptions, out: &Path) -> Result<StressReport> {
    let (iy, iv) = read_series(index)?;
    let (sy, sv) = read_series(stressor)?;
    let name = Table::read(stressor)?.header.get(1).cloned().unwrap_or_else(|| "stressor".into());
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (year, v) in iy.iter().zip(&iv) {
        if let Some(k) = sy.iter().position(|s| s == year) {
            x.push(sv[k]);
            y.push(*v);
        }
    }
    if x.len() < swbi::ghdist::fit::MIN_OBSERVATIONS {
        return Err(Error::TooFewObservations { needed: swbi::ghdist::fit::MIN_OBSERVATIONS, got: x.len() });
    }
    let report = run_stress(&y, &x, &name, levels, options)?;
    report.write(out)?;
    Ok(report)
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
}
