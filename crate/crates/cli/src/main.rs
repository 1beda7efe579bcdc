use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swbi::econometrics::{GarchOptions, InnovationFamily, StationaryMethod};
use swbi::ghdist::Variant;
use swbi::index::IndexOptions;
use swbi::io::read_text;
use swbi::panel::{PanelConfig, DEFAULT_REVERSAL};
use swbi::stress::StressOptions;
use swbi_cli::config::{self, RunConfig};
use swbi_cli::pipeline::run_pipeline;
use swbi_cli::{steps, Failure};

fn at(step: &'static str) -> impl Fn(swbi::Error) -> Failure {
    move |error| Failure::Step { step, error }
}

#[derive(Parser)]
#[command(name = "swbi", version, about = "Well-being index construction, GARCH option pricing, risk budgets and stress tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a factor-level panel or convert it to log-returns.
    #[command(subcommand)]
    Panel(PanelCommand),
    /// Build the index from a return panel, or run PCA on it.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Fit an ARMA(1,1)-GARCH(1,1) model or a univariate GH law.
    #[command(subcommand)]
    Fit(FitCommand),
    /// Simulate stationary return scenarios from a fitted model.
    Simulate(SimulateArgs),
    /// Summary statistics and VaR/ES of a scenario file.
    Risk(RiskArgs),
    /// Monte Carlo option prices under the Esscher risk-neutral measure.
    Price(PriceArgs),
    /// Std and ETL risk budgets of an equally weighted return panel.
    Budget(BudgetArgs),
    /// CoVaR, CoES and CoETL of the index under a stressor.
    Stress(StressArgs),
    /// Run the whole pipeline from a config file.
    Run(RunArgs),
}

#[derive(Args)]
struct PanelOptions {
    /// Factors whose returns are negated (comma-separated); defaults to the standard reversal set.
    #[arg(long, value_delimiter = ',')]
    reverse: Option<Vec<String>>,
    /// Keep only these factors, in this order.
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<String>>,
}

impl PanelOptions {
    fn config(&self) -> PanelConfig {
        PanelConfig {
            factors: self.factors.clone(),
            reversal: self.reverse.clone().unwrap_or_else(|| DEFAULT_REVERSAL.iter().map(|s| s.to_string()).collect()),
            years: None,
        }
    }
}

#[derive(Subcommand)]
enum PanelCommand {
    Validate {
        file: PathBuf,
        #[command(flatten)]
        options: PanelOptions,
    },
    Returns {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        options: PanelOptions,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    Build {
        returns: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sidecar with m, s and per-factor constants; defaults to `<out>.meta`.
        #[arg(long)]
        meta: Option<PathBuf>,
        #[arg(long)]
        exclude_base_year: bool,
    },
    Pca {
        returns: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        loadings: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FitCommand {
    Garch {
        index: PathBuf,
        #[arg(long, default_value = "normal", value_parser = parse_family)]
        innovations: InnovationFamily,
        /// Estimate the GARCH and innovation parameters in one likelihood.
        #[arg(long)]
        joint: bool,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda0: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        riskfree: f64,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Gh {
        series: PathBuf,
        #[arg(long, default_value = "gh", value_parser = parse_variant)]
        variant: Variant,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(short, default_value_t = 10_000)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// `independent` paths or one `long` path.
    #[arg(long, default_value = "independent")]
    method: String,
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RiskArgs {
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = config::DEFAULT_RISK_LEVELS)]
    levels: Vec<f64>,
    /// Also write the table here; it is always printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "I0", visible_alias = "i0", default_value_t = 1.0)]
    i0: f64,
    #[arg(long, value_delimiter = ',')]
    strikes: Option<Vec<f64>>,
    /// Comma list or inclusive range such as `1..10`.
    #[arg(long, default_value = "1..10", value_parser = parse_maturities)]
    maturities: Maturities,
    #[arg(short, default_value_t = 10_000)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    valuation: usize,
    /// Override the model's market price of risk.
    #[arg(long, allow_negative_numbers = true)]
    lambda0: Option<f64>,
    /// Override the model's risk-free rate.
    #[arg(long, allow_negative_numbers = true)]
    riskfree: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    returns: PathBuf,
    /// ETL confidence levels.
    #[arg(long, value_delimiter = ',', default_values_t = config::DEFAULT_BUDGET_LEVELS)]
    levels: Vec<f64>,
    #[arg(long)]
    exclude_base_year: bool,
    /// Aggregate factors into groups: `name=f1,f2,...`; repeat for each group.
    #[arg(long, value_parser = parse_group)]
    group: Vec<(String, Vec<String>)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StressArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    stressor: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = config::DEFAULT_RISK_LEVELS)]
    levels: Vec<f64>,
    #[arg(short, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "gh", value_parser = parse_variant)]
    variant: Variant,
    /// Bootstrap resamples for standard errors; 0 disables them.
    #[arg(long, default_value_t = 500)]
    bootstrap: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Validate and print the planned manifest without writing anything.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Clone, Debug)]
struct Maturities(Vec<usize>);

fn parse_maturities(raw: &str) -> Result<Maturities, String> {
    if let Some((a, b)) = raw.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range end `{b}`"))?;
        if a > b {
            return Err(format!("empty range {raw}"));
        }
        return Ok(Maturities((a..=b).collect()));
    }
    raw.split(',').map(|t| t.trim().parse().map_err(|_| format!("bad maturity `{t}`"))).collect::<Result<_, _>>().map(Maturities)
}

fn parse_family(raw: &str) -> Result<InnovationFamily, String> {
    raw.parse().map_err(|e: swbi::Error| e.to_string())
}

fn parse_variant(raw: &str) -> Result<Variant, String> {
    raw.parse().map_err(|e: swbi::Error| e.to_string())
}

fn parse_group(raw: &str) -> Result<(String, Vec<String>), String> {
    let (name, members) = raw.split_once('=').ok_or("expected name=f1,f2,...")?;
    Ok((name.trim().to_string(), members.split(',').map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect()))
}

fn check_levels(levels: &[f64]) -> Result<(), Failure> {
    let bad: Vec<String> = levels.iter().filter(|q| !(**q > 0.0 && **q < 1.0)).map(|q| format!("level {q} outside (0, 1)")).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(bad))
    }
}

fn default_meta(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Panel(PanelCommand::Validate { file, options }) => {
            let panel = swbi::panel::load_panel(&file, &options.config()).map_err(at("panel"))?;
            let reversed: Vec<&str> = panel.factor_names.iter().zip(&panel.reverse_sign).filter(|(_, r)| **r).map(|(n, _)| n.as_str()).collect();
            println!("factors: {}", panel.n_factors());
            println!("years: {}-{} ({})", panel.years[0], panel.years[panel.n_years() - 1], panel.n_years());
            println!("reversed: {}", if reversed.is_empty() { "none".into() } else { reversed.join(", ") });
        }
        Command::Panel(PanelCommand::Returns { file, out, options }) => {
            steps::panel_returns(&file, &options.config(), &out).map_err(at("panel"))?;
        }
        Command::Index(IndexCommand::Build { returns, out, meta, exclude_base_year }) => {
            let meta = meta.unwrap_or_else(|| default_meta(&out));
            let idx = steps::index_build(&returns, IndexOptions { exclude_base_year }, &out, &meta).map_err(at("index"))?;
            println!("m = {}, s = {}", idx.m, idx.s);
        }
        Command::Index(IndexCommand::Pca { returns, out, loadings }) => {
            let s = steps::index_pca(&returns, &out, loadings.as_deref()).map_err(at("index"))?;
            println!("first component explains {:.4} of the variance", s.proportions[0]);
        }
        Command::Fit(FitCommand::Garch { index, innovations, joint, lambda0, riskfree, restarts, seed, out }) => {
            if restarts == 0 {
                return Err(Failure::Validation(vec!["--restarts must be at least 1".into()]));
            }
            let options = GarchOptions { innovations, joint, lambda0, riskfree, restarts, seed };
            let m = steps::fit_garch(&index, &options, &out).map_err(at("fit"))?;
            if let Some(w) = &m.warning {
                eprintln!("warning: {w}");
            }
            println!("omega = {}, a = {}, b = {}, innovation = {}", m.omega, m.a, m.b, m.innovation.label());
        }
        Command::Fit(FitCommand::Gh { series, variant, out }) => {
            let f = steps::fit_gh(&series, variant, &out).map_err(at("fit"))?;
            println!("{} (log-likelihood {})", f.params, f.log_likelihood);
        }
        Command::Simulate(a) => {
            let method = match a.method.as_str() {
                "independent" => StationaryMethod::IndependentPaths { burn_in: a.burn_in },
                "long" if a.thin > 0 => StationaryMethod::LongPath { burn_in: a.burn_in, thin: a.thin },
                other => return Err(Failure::Validation(vec![format!("--method must be independent or long (thin >= 1), got `{other}`")])),
            };
            if a.n == 0 {
                return Err(Failure::Validation(vec!["-n must be at least 1".into()]));
            }
            steps::simulate(&a.model, a.n, a.seed, method, &a.out).map_err(at("simulate"))?;
        }
        Command::Risk(a) => {
            check_levels(&a.levels)?;
            let s = steps::risk(&a.scenarios, &a.levels, a.out.as_deref()).map_err(at("risk"))?;
            print!("{}", s.to_table().render());
        }
        Command::Price(a) => {
            let strikes = a.strikes.unwrap_or_else(config::default_strikes);
            let req = steps::PriceRequest {
                i0: a.i0,
                strikes: &strikes,
                maturities: &a.maturities.0,
                n: a.n,
                seed: a.seed,
                valuation: a.valuation,
                lambda0: a.lambda0,
                riskfree: a.riskfree,
            };
            steps::price(&a.model, &req, &a.out).map_err(at("price"))?;
        }
        Command::Budget(a) => {
            check_levels(&a.levels)?;
            steps::budget(&a.returns, &a.levels, a.exclude_base_year, &a.group, &a.out).map_err(at("budget"))?;
        }
        Command::Stress(a) => {
            check_levels(&a.levels)?;
            let options = StressOptions { variant: a.variant, draws: a.n, seed: a.seed, bootstrap: a.bootstrap };
            let r = steps::stress(&a.index, &a.stressor, &a.levels, &options, &a.out).map_err(at("stress"))?;
            if !r.monotone {
                eprintln!("warning: stress measures are not monotone in q at this draw count");
            }
        }
        Command::Run(a) => {
            let text = read_text(&a.config).map_err(at("config"))?;
            let base = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
            let config = RunConfig::parse(&text, &base).map_err(Failure::Validation)?;
            let manifest = run_pipeline(&config, &text, a.dry_run)?;
            if a.dry_run {
                print!("{}", manifest.to_table().render());
            } else {
                println!("{} steps wrote {} files to {}", config.steps.len(), manifest.outputs().len(), config.output_dir.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.exit_code())
        }
    }
}
