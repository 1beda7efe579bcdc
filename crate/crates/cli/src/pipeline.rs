//! End-to-end orchestration and the run manifest.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use swbi::econometrics::GarchOptions;
use swbi::index::IndexOptions;
use swbi::io::Table;
use swbi::stress::StressOptions;

use crate::config::{RunConfig, Step};
use crate::steps::{self, PriceRequest};
use crate::Failure;

pub const MANIFEST: &str = "manifest.csv";

/// Files each step reads from and writes to the output directory.
fn artifacts(step: Step) -> (&'static [&'static str], &'static [&'static str]) {
    match step {
        Step::Panel => (&[], &["returns.csv"]),
        Step::Index => (&["returns.csv"], &["index.csv", "index.meta"]),
        Step::Fit => (&["index.csv"], &["model.txt"]),
        Step::Simulate => (&["model.txt"], &["scenarios.txt"]),
        Step::Risk => (&["scenarios.txt"], &["risk.csv"]),
        Step::Price => (&["model.txt"], &["options.csv"]),
        Step::Budget => (&["returns.csv"], &["budget.csv"]),
        Step::Stress => (&["index.csv"], &["stress.csv"]),
    }
}

fn external_inputs(config: &RunConfig, step: Step) -> Vec<PathBuf> {
    match step {
        Step::Panel => config.panel_input.iter().cloned().collect(),
        Step::Stress => config.stressor.iter().cloned().collect(),
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub step: String,
    /// `input` or `output`.
    pub role: String,
    pub file: String,
    /// Hex SHA-256, or `-` for a planned output.
    pub sha256: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    /// `complete` or `planned`.
    pub status: String,
    pub records: Vec<Record>,
}

const HEADER: [&str; 5] = ["step", "role", "file", "sha256", "seed"];

impl RunManifest {
    pub fn to_table(&self) -> Table {
        Table {
            comments: vec![
                "kind: run manifest".into(),
                format!("tool_version: {}", self.tool_version),
                format!("config_sha256: {}", self.config_sha256),
                format!("seed: {}", self.seed.map_or("none".into(), |s| s.to_string())),
                format!("status: {}", self.status),
            ],
            header: HEADER.map(String::from).to_vec(),
            rows: self
                .records
                .iter()
                .map(|r| vec![r.step.clone(), r.role.clone(), r.file.clone(), r.sha256.clone(), r.seed.map_or("-".into(), |s| s.to_string())])
                .collect(),
        }
    }

    pub fn from_table(table: &Table) -> swbi::Result<Self> {
        let bad = |what: &str| swbi::Error::Input(format!("manifest: {what}"));
        if table.header != HEADER {
            return Err(bad("unexpected header"));
        }
        let meta = |k: &str| table.meta(k).map(String::from).ok_or_else(|| bad(&format!("missing `{k}`")));
        let seed = match meta("seed")?.as_str() {
            "none" => None,
            s => Some(s.parse().map_err(|_| bad("bad seed"))?),
        };
        let records = table
            .rows
            .iter()
            .map(|r| match r.as_slice() {
                [step, role, file, sha, s] => Ok(Record {
                    step: step.clone(),
                    role: role.clone(),
                    file: file.clone(),
                    sha256: sha.clone(),
                    seed: if s == "-" { None } else { Some(s.parse().map_err(|_| bad("bad step seed"))?) },
                }),
                _ => Err(bad("row needs five cells")),
            })
            .collect::<swbi::Result<_>>()?;
        Ok(RunManifest { tool_version: meta("tool_version")?, config_sha256: meta("config_sha256")?, seed, status: meta("status")?, records })
    }

    pub fn read(path: &Path) -> swbi::Result<Self> {
        Self::from_table(&Table::read(path)?)
    }

    /// Distinct output files.
    pub fn outputs(&self) -> Vec<&Record> {
        self.records.iter().filter(|r| r.role == "output").collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_file(path: &Path) -> swbi::Result<String> {
    std::fs::read(path)
        .map(|b| sha256_hex(&b))
        .map_err(|e| swbi::Error::Io { path: path.display().to_string(), message: e.to_string() })
}

fn display_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned())
}

/// Checks that every input is either produced by an earlier enabled step or already on disk.
fn check_inputs(config: &RunConfig) -> Vec<String> {
    let mut errors = Vec::new();
    for &step in &config.steps {
        for name in artifacts(step).0 {
            let producer = Step::ALL.into_iter().find(|s| artifacts(*s).1.contains(name)).expect("every input has a producer");
            if !config.steps.contains(&producer) && !config.output_dir.join(name).is_file() {
                errors.push(format!("step `{}` needs {name}, which step `{}` would produce but is not enabled", step.name(), producer.name()));
            }
        }
        for path in external_inputs(config, step) {
            if !path.is_file() {
                errors.push(format!("step `{}`: input {} is not a readable file", step.name(), path.display()));
            }
        }
    }
    errors
}

fn execute(config: &RunConfig, step: Step) -> swbi::Result<()> {
    let dir = &config.output_dir;
    let out = |name: &str| dir.join(name);
    let seed = config.seed.unwrap_or(0);
    match step {
        Step::Panel => steps::panel_returns(config.panel_input.as_deref().expect("validated"), &config.panel, &out("returns.csv")).map(drop),
        Step::Index => steps::index_build(
            &out("returns.csv"),
            IndexOptions { exclude_base_year: config.exclude_base_year },
            &out("index.csv"),
            &out("index.meta"),
        )
        .map(drop),
        Step::Fit => {
            let options = GarchOptions {
                innovations: config.innovations,
                joint: config.joint,
                lambda0: config.lambda0,
                riskfree: config.riskfree,
                restarts: config.restarts,
                seed,
            };
            steps::fit_garch(&out("index.csv"), &options, &out("model.txt")).map(drop)
        }
        Step::Simulate => steps::simulate(&out("model.txt"), config.simulate_n, seed, config.method, &out("scenarios.txt")).map(drop),
        Step::Risk => steps::risk(&out("scenarios.txt"), &config.risk_levels, Some(&out("risk.csv"))).map(drop),
        Step::Price => {
            let req = PriceRequest {
                i0: config.i0,
                strikes: &config.strikes,
                maturities: &config.maturities,
                n: config.price_n,
                seed,
                valuation: config.valuation,
                lambda0: None,
                riskfree: None,
            };
            steps::price(&out("model.txt"), &req, &out("options.csv")).map(drop)
        }
        Step::Budget => steps::budget(&out("returns.csv"), &config.budget_levels, config.budget_exclude_base_year, &config.groups, &out("budget.csv")).map(drop),
        Step::Stress => {
            let options = StressOptions { variant: config.variant, draws: config.stress_n, seed, bootstrap: config.bootstrap };
            steps::stress(&out("index.csv"), config.stressor.as_deref().expect("validated"), &config.stress_levels, &options, &out("stress.csv")).map(drop)
        }
    }
}

/// Runs (or with `dry_run`, plans) the enabled steps in pipeline order.
/// A dry run writes nothing.
pub fn run_pipeline(config: &RunConfig, config_text: &str, dry_run: bool) -> Result<RunManifest, Failure> {
    let errors = check_inputs(config);
    if !errors.is_empty() {
        return Err(Failure::Validation(errors));
    }
    let mut records = Vec::new();
    for &step in &config.steps {
        let seed = if step.is_stochastic() { config.seed } else { None };
        if !dry_run {
            execute(config, step).map_err(|error| Failure::Step { step: step.name(), error })?;
        }
        let (inputs, outputs) = artifacts(step);
        let mut record = |role: &str, path: PathBuf, file: String, planned: bool| -> Result<(), Failure> {
            let sha256 = if planned { "-".into() } else { digest_file(&path).map_err(|error| Failure::Step { step: step.name(), error })? };
            records.push(Record { step: step.name().into(), role: role.into(), file, sha256, seed });
            Ok(())
        };
        for path in external_inputs(config, step) {
            let name = display_name(&path);
            record("input", path, name, false)?;
        }
        for name in inputs {
            let produced_here = config.steps.iter().any(|s| artifacts(*s).1.contains(name));
            record("input", config.output_dir.join(name), name.to_string(), dry_run && produced_here)?;
        }
        for name in outputs {
            record("output", config.output_dir.join(name), name.to_string(), dry_run)?;
        }
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        seed: config.seed,
        status: if dry_run { "planned" } else { "complete" }.into(),
        records,
    };
    if !dry_run {
        manifest.to_table().write(&config.output_dir.join(MANIFEST)).map_err(|error| Failure::Step { step: "manifest", error })?;
    }
    Ok(manifest)
}
