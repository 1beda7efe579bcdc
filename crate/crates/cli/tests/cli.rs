use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swbi::econometrics::{GarchModel, RiskSummary, ScenarioSet};
use swbi::index::read_series;
use swbi::io::Table;
use swbi::panel::ReturnPanel;
use swbi::pricing::OptionGrid;
use swbi::riskbudget::RiskBudgetTable;
use swbi::stress::StressReport;
use swbi_cli::pipeline::RunManifest;

const CONFIG: &str = r#"seed = 7
output_dir = "out"

[panel]
input = "panel.csv"

[fit]
innovations = "vg"
lambda0 = 0.05
riskfree = 0.01

[simulate]
n = 5000

[price]
strikes = [0.9, 1.0, 1.1]
maturities = [1, 2, 3]
n = 5000

[stress]
stressor = "trade.csv"
levels = [0.10]
n = 20000
variant = "nig"
bootstrap = 10
"#;

fn swbi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swbi")).args(args).output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// A scratch directory holding the fixtures and a config.
fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for f in ["panel.csv", "trade.csv"] {
        std::fs::copy(fixture(f), dir.path().join(f)).unwrap();
    }
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

fn run(dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    let mut args = vec!["run", cfg.to_str().unwrap()];
    args.extend(extra);
    swbi(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_run_is_deterministic_and_round_trips() {
    let (a, b) = (workspace(CONFIG), workspace(CONFIG));
    for d in [&a, &b] {
        let o = run(d.path(), &[]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let out = a.path().join("out");
    let manifest = RunManifest::read(&out.join("manifest.csv")).unwrap();
    let mut steps: Vec<&str> = manifest.records.iter().map(|r| r.step.as_str()).collect();
    steps.dedup();
    assert_eq!(steps, ["panel", "index", "fit", "simulate", "risk", "price", "budget", "stress"]);
    assert!(steps.iter().all(|s| manifest.outputs().iter().any(|r| r.step == *s)));
    assert_eq!(manifest.seed, Some(7));

    // Byte-identical artifacts and manifests across the two runs.
    for r in manifest.outputs() {
        let x = std::fs::read(out.join(&r.file)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join("out").join(&r.file)).unwrap(), "{}", r.file);
        assert_eq!(swbi_cli::pipeline::sha256_hex(&x), r.sha256);
    }
    assert_eq!(std::fs::read(out.join("manifest.csv")).unwrap(), std::fs::read(b.path().join("out/manifest.csv")).unwrap());

    // Each artifact reads back and survives a write/read cycle.
    let again = a.path().join("again");
    std::fs::create_dir(&again).unwrap();
    let p = |name: &str| out.join(name);
    let q = |name: &str| again.join(name);

    let returns = ReturnPanel::read(&p("returns.csv")).unwrap();
    assert_eq!((returns.n_factors(), returns.n_years()), (13, 31));
    returns.to_table().write(&q("returns.csv")).unwrap();
    assert_eq!(ReturnPanel::read(&q("returns.csv")).unwrap(), returns);

    let (years, index) = read_series(&p("index.csv")).unwrap();
    assert_eq!(years.len(), 31);
    assert!(index.iter().all(|v| v.is_finite()));

    let model = GarchModel::read(&p("model.txt")).unwrap();
    model.write(&q("model.txt")).unwrap();
    assert_eq!(std::fs::read(p("model.txt")).unwrap(), std::fs::read(q("model.txt")).unwrap());

    let scenarios = ScenarioSet::read(&p("scenarios.txt")).unwrap();
    assert_eq!((scenarios.draws.len(), scenarios.seed), (5000, Some(7)));
    scenarios.write(&q("scenarios.txt")).unwrap();
    assert_eq!(std::fs::read(p("scenarios.txt")).unwrap(), std::fs::read(q("scenarios.txt")).unwrap());

    let risk = RiskSummary::read(&p("risk.csv")).unwrap();
    risk.write(&q("risk.csv")).unwrap();
    assert_eq!(std::fs::read(p("risk.csv")).unwrap(), std::fs::read(q("risk.csv")).unwrap());

    let grid = OptionGrid::read(&p("options.csv")).unwrap();
    assert_eq!(grid.quotes.len(), 9);
    grid.write(&q("options.csv")).unwrap();
    assert_eq!(OptionGrid::read(&q("options.csv")).unwrap(), grid);

    let budget = RiskBudgetTable::read(&p("budget.csv")).unwrap();
    assert_eq!(budget.columns.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(), ["ETL95", "ETL99", "Std"]);
    budget.write(&q("budget.csv")).unwrap();
    assert_eq!(std::fs::read(p("budget.csv")).unwrap(), std::fs::read(q("budget.csv")).unwrap());

    let stress = StressReport::read(&p("stress.csv")).unwrap();
    assert_eq!((stress.stressor.as_str(), stress.observations), ("Trade", 30));
    stress.write(&q("stress.csv")).unwrap();
    assert_eq!(std::fs::read(p("stress.csv")).unwrap(), std::fs::read(q("stress.csv")).unwrap());

    let table = Table::read(&p("manifest.csv")).unwrap();
    assert_eq!(RunManifest::from_table(&Table::parse(&manifest.to_table().render()).unwrap()).unwrap(), manifest);
    assert_eq!(table.render().into_bytes(), std::fs::read(p("manifest.csv")).unwrap());
}

#[test]
fn dry_run_writes_nothing() {
    let d = workspace(CONFIG);
    let o = run(d.path(), &["--dry-run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!d.path().join("out").exists());
    let planned = RunManifest::from_table(&Table::parse(&String::from_utf8(o.stdout).unwrap()).unwrap()).unwrap();
    assert_eq!(planned.status, "planned");
    assert!(planned.outputs().iter().all(|r| r.sha256 == "-"));
    assert_eq!(planned.outputs().len(), 9);
}

#[test]
fn missing_seed_is_a_validation_error() {
    let d = workspace(&CONFIG.replace("seed = 7\n", "").replace("steps", "x"));
    let o = run(d.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`seed` is required"), "{}", stderr(&o));
    assert!(!d.path().join("out").exists());
}

#[test]
fn validation_errors_are_reported_together() {
    let bad = CONFIG.replace("levels = [0.10]", "levels = [1.5]").replace("n = 5000\n\n[price]", "n = 0\n\n[price]");
    let d = workspace(&bad);
    let o = run(d.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("stress.levels") && err.contains("simulate.n"), "{err}");
}

#[test]
fn deterministic_subset_needs_no_seed() {
    let cfg = "steps = [\"panel\", \"index\", \"budget\"]\n[panel]\ninput = \"panel.csv\"\n";
    let d = workspace(cfg);
    let o = run(d.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.path().join("out/budget.csv").is_file() && !d.path().join("out/model.txt").exists());
}

#[test]
fn missing_upstream_artifact_is_reported() {
    let d = workspace("seed = 1\nsteps = [\"simulate\"]\n");
    let o = run(d.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.txt"), "{}", stderr(&o));
}

#[test]
fn subcommands_chain() {
    let d = tempfile::tempdir().unwrap();
    let p = |n: &str| d.path().join(n).to_str().unwrap().to_string();
    let panel = fixture("panel.csv");
    let ok = |o: Output| {
        assert!(o.status.success(), "{}", stderr(&o));
        String::from_utf8(o.stdout).unwrap()
    };
    let summary = ok(swbi(&["panel", "validate", panel.to_str().unwrap()]));
    assert!(summary.contains("factors: 13") && summary.contains("1986-2016"), "{summary}");
    ok(swbi(&["panel", "returns", panel.to_str().unwrap(), "--out", &p("r.csv")]));
    ok(swbi(&["index", "build", &p("r.csv"), "--out", &p("i.csv")]));
    assert!(d.path().join("i.csv.meta").is_file());
    ok(swbi(&["index", "pca", &p("r.csv"), "--out", &p("pca.csv"), "--loadings", &p("load.csv")]));
    ok(swbi(&["fit", "garch", &p("i.csv"), "--innovations", "normal", "--seed", "3", "--out", &p("m.txt")]));
    ok(swbi(&["fit", "gh", &p("i.csv"), "--variant", "nig", "--out", &p("gh.txt")]));
    ok(swbi(&["simulate", "--model", &p("m.txt"), "-n", "2000", "--seed", "3", "--out", &p("s.txt")]));
    let risk = ok(swbi(&["risk", "--scenarios", &p("s.txt"), "--levels", "0.01,0.05"]));
    assert!(risk.contains("VaR_0.01") && risk.contains("ES_0.05"), "{risk}");
    ok(swbi(&["price", "--model", &p("m.txt"), "--I0", "100", "--strikes", "90,100,110", "--maturities", "1..3", "-n", "2000", "--seed", "3", "--out", &p("o.csv")]));
    assert_eq!(OptionGrid::read(&d.path().join("o.csv")).unwrap().quotes.len(), 9);
    ok(swbi(&["budget", "--returns", &p("r.csv"), "--levels", "0.9", "--group", "macro=GDP,DispIncome,GovTrans,NegCPI,NegUnemploy", "--group", "rest=Confidence,NegCrimeRate,NegGenderParity,NegInequality,LifeExpect,Sentiment,NegUncertainty,NegVXO", "--out", &p("b.csv")]));
    assert_eq!(RiskBudgetTable::read(&d.path().join("b.csv")).unwrap().names, ["macro", "rest"]);
    let trade = fixture("trade.csv");
    ok(swbi(&["stress", "--index", &p("i.csv"), "--stressor", trade.to_str().unwrap(), "--levels", "0.1", "-n", "10000", "--seed", "3", "--variant", "nig", "--bootstrap", "0", "--out", &p("st.csv")]));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let model = d.path().join("m.txt");
    // Level outside (0, 1): validation.
    let o = swbi(&["risk", "--scenarios", "nowhere.txt", "--levels", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    // Missing file: validation.
    let o = swbi(&["risk", "--scenarios", d.path().join("nowhere.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    // Non-stationary model: numerical.
    std::fs::write(&model, "ar = 0\nma = 0\nomega = 0.1\na = 0.7\nb = 0.4\nlambda0 = 0\nriskfree = 0\nloglik = 0\nn_obs = 31\nlast_variance = 0.1\nlast_residual = 0\njoint = false\ninnovation = normal\n").unwrap();
    let o = swbi(&["simulate", "--model", model.to_str().unwrap(), "--seed", "1", "--out", d.path().join("s.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    // No seed on a stochastic subcommand: usage error.
    let o = swbi(&["simulate", "--model", model.to_str().unwrap(), "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}
