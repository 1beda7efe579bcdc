//! Run configuration: `key = value` sections, one per pipeline step.
//!
//! ```text
//! seed = 42
//! output_dir = "out"
//!
//! [panel]
//! input = "panel.csv"
//!
//! [stress]
//! stressor = "trade.csv"
//! levels = [0.05, 0.10]
//! ```
//!
//! Relative paths resolve against the config file's directory. Every problem
//! found is reported, not just the first.

use std::path::{Path, PathBuf};

use swbi::econometrics::{InnovationFamily, StationaryMethod};
use swbi::ghdist::Variant;
use swbi::panel::{PanelConfig, DEFAULT_REVERSAL};
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Step {
    Panel,
    Index,
    Fit,
    Simulate,
    Risk,
    Price,
    Budget,
    Stress,
}

impl Step {
    pub const ALL: [Step; 8] = [Step::Panel, Step::Index, Step::Fit, Step::Simulate, Step::Risk, Step::Price, Step::Budget, Step::Stress];

    pub fn name(self) -> &'static str {
        match self {
            Step::Panel => "panel",
            Step::Index => "index",
            Step::Fit => "fit",
            Step::Simulate => "simulate",
            Step::Risk => "risk",
            Step::Price => "price",
            Step::Budget => "budget",
            Step::Stress => "stress",
        }
    }

    /// Steps whose output depends on the master seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Step::Fit | Step::Simulate | Step::Price | Step::Stress)
    }

    fn parse(raw: &str) -> Option<Step> {
        Step::ALL.into_iter().find(|s| s.name() == raw)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub steps: Vec<Step>,
    pub panel_input: Option<PathBuf>,
    pub panel: PanelConfig,
    pub exclude_base_year: bool,
    pub innovations: InnovationFamily,
    pub joint: bool,
    pub lambda0: f64,
    pub riskfree: f64,
    pub restarts: usize,
    pub simulate_n: usize,
    pub method: StationaryMethod,
    pub risk_levels: Vec<f64>,
    pub i0: f64,
    pub strikes: Vec<f64>,
    pub maturities: Vec<usize>,
    pub price_n: usize,
    pub valuation: usize,
    pub budget_levels: Vec<f64>,
    pub budget_exclude_base_year: bool,
    pub groups: Vec<(String, Vec<String>)>,
    pub stressor: Option<PathBuf>,
    pub stress_levels: Vec<f64>,
    pub stress_n: usize,
    pub variant: Variant,
    pub bootstrap: usize,
}

const SECTIONS: [(&str, &[&str]); 9] = [
    ("", &["seed", "output_dir", "steps"]),
    ("panel", &["input", "reverse", "factors", "years"]),
    ("index", &["exclude_base_year"]),
    ("fit", &["innovations", "joint", "lambda0", "riskfree", "restarts"]),
    ("simulate", &["n", "method", "burn_in", "thin"]),
    ("risk", &["levels"]),
    ("price", &["i0", "strikes", "maturities", "n", "valuation"]),
    ("budget", &["levels", "exclude_base_year", "groups"]),
    ("stress", &["stressor", "levels", "n", "variant", "bootstrap"]),
];

/// Collects type and range errors while reading one section.
struct Reader<'a> {
    section: &'a str,
    table: Option<&'a Table>,
    errors: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn key(&self, k: &str) -> String {
        if self.section.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.section)
        }
    }

    fn get(&self, k: &str) -> Option<&Value> {
        self.table.and_then(|t| t.get(k))
    }

    fn fail(&mut self, k: &str, what: &str) {
        let key = self.key(k);
        self.errors.push(format!("`{key}`: {what}"));
    }

    fn float(&mut self, k: &str, default: f64) -> f64 {
        match self.get(k) {
            None => default,
            Some(Value::Float(v)) => *v,
            Some(Value::Integer(v)) => *v as f64,
            Some(_) => {
                self.fail(k, "expected a number");
                default
            }
        }
    }

    fn count(&mut self, k: &str, default: usize, min: usize) -> usize {
        match self.get(k) {
            None => default,
            Some(Value::Integer(v)) if *v >= min as i64 => *v as usize,
            Some(_) => {
                self.fail(k, &format!("expected an integer >= {min}"));
                default
            }
        }
    }

    fn flag(&mut self, k: &str, default: bool) -> bool {
        match self.get(k) {
            None => default,
            Some(Value::Boolean(v)) => *v,
            Some(_) => {
                self.fail(k, "expected true or false");
                default
            }
        }
    }

    fn string(&mut self, k: &str) -> Option<String> {
        match self.get(k) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.fail(k, "expected a string");
                None
            }
        }
    }

    fn strings(&mut self, k: &str) -> Option<Vec<String>> {
        match self.get(k) {
            None => None,
            Some(Value::Array(a)) if a.iter().all(Value::is_str) => Some(a.iter().filter_map(|v| v.as_str().map(String::from)).collect()),
            Some(_) => {
                self.fail(k, "expected a list of strings");
                None
            }
        }
    }

    fn floats(&mut self, k: &str) -> Option<Vec<f64>> {
        match self.get(k) {
            None => None,
            Some(Value::Array(a)) => {
                let v: Vec<f64> = a.iter().filter_map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64))).collect();
                if v.len() == a.len() && !v.is_empty() {
                    Some(v)
                } else {
                    self.fail(k, "expected a non-empty list of numbers");
                    None
                }
            }
            Some(_) => {
                self.fail(k, "expected a list of numbers");
                None
            }
        }
    }

    /// Levels strictly inside (0, 1).
    fn levels(&mut self, k: &str, default: &[f64]) -> Vec<f64> {
        let v = self.floats(k).unwrap_or_else(|| default.to_vec());
        if let Some(bad) = v.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            self.fail(k, &format!("level {bad} outside (0, 1)"));
        }
        v
    }
}

pub const DEFAULT_RISK_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];
pub const DEFAULT_BUDGET_LEVELS: [f64; 2] = [0.95, 0.99];

pub fn default_strikes() -> Vec<f64> {
    (0..9).map(|k| 0.8 + 0.05 * k as f64).collect()
}

impl RunConfig {
    /// Parses and validates a config; `Err` carries every problem found.
    pub fn parse(text: &str, base: &Path) -> Result<RunConfig, Vec<String>> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| vec![format!("config is not valid: {}", e.message())])?;
        let mut errors = Vec::new();

        for (key, value) in &root {
            match SECTIONS.iter().find(|(s, _)| s == key) {
                Some(_) if !value.is_table() => errors.push(format!("`{key}` must be a section")),
                Some((name, keys)) => {
                    for k in value.as_table().into_iter().flat_map(Table::keys) {
                        if !keys.contains(&k.as_str()) {
                            errors.push(format!("unknown key `{name}.{k}`"));
                        }
                    }
                }
                None if SECTIONS[0].1.contains(&key.as_str()) => {}
                None => errors.push(format!("unknown key or section `{key}`")),
            }
        }
        let section = |name: &str| root.get(name).and_then(Value::as_table);
        let resolve = |p: String| if Path::new(&p).is_absolute() { PathBuf::from(p) } else { base.join(p) };

        let mut r = Reader { section: "", table: Some(&root), errors: &mut errors };
        let seed = match r.get("seed") {
            None => None,
            Some(Value::Integer(v)) if *v >= 0 => Some(*v as u64),
            Some(_) => {
                r.fail("seed", "expected a non-negative integer");
                None
            }
        };
        let output_dir = resolve(r.string("output_dir").unwrap_or_else(|| "out".into()));
        let steps = match r.strings("steps") {
            None => Step::ALL.to_vec(),
            Some(names) => {
                let mut steps = Vec::new();
                for n in &names {
                    match Step::parse(n) {
                        Some(s) => steps.push(s),
                        None => r.fail("steps", &format!("unknown step `{n}`")),
                    }
                }
                steps.sort();
                steps.dedup();
                steps
            }
        };

        let mut r = Reader { section: "panel", table: section("panel"), errors: &mut errors };
        let panel_input = r.string("input").map(resolve);
        let reversal = r.strings("reverse").unwrap_or_else(|| DEFAULT_REVERSAL.iter().map(|s| s.to_string()).collect());
        let factors = r.strings("factors");
        let years = r.floats("years").and_then(|y| match y.as_slice() {
            [a, b] if a.fract() == 0.0 && b.fract() == 0.0 && a <= b => Some((*a as i32, *b as i32)),
            _ => {
                r.fail("years", "expected [first, last] years");
                None
            }
        });

        let mut r = Reader { section: "index", table: section("index"), errors: &mut errors };
        let exclude_base_year = r.flag("exclude_base_year", false);

        let mut r = Reader { section: "fit", table: section("fit"), errors: &mut errors };
        let innovations = match r.string("innovations").map(|s| s.parse::<InnovationFamily>()) {
            None => InnovationFamily::Normal,
            Some(Ok(f)) => f,
            Some(Err(_)) => {
                r.fail("innovations", "expected normal, vg, nig or gh");
                InnovationFamily::Normal
            }
        };
        let joint = r.flag("joint", false);
        let lambda0 = r.float("lambda0", 0.0);
        let riskfree = r.float("riskfree", 0.0);
        let restarts = r.count("restarts", 5, 1);

        let mut r = Reader { section: "simulate", table: section("simulate"), errors: &mut errors };
        let simulate_n = r.count("n", 10_000, 1);
        let burn_in = r.count("burn_in", 500, 0);
        let thin = r.count("thin", 1, 1);
        let method = match r.string("method").as_deref() {
            None | Some("independent") => StationaryMethod::IndependentPaths { burn_in },
            Some("long") => StationaryMethod::LongPath { burn_in, thin },
            Some(other) => {
                r.fail("method", &format!("expected independent or long, got `{other}`"));
                StationaryMethod::IndependentPaths { burn_in }
            }
        };

        let mut r = Reader { section: "risk", table: section("risk"), errors: &mut errors };
        let risk_levels = r.levels("levels", &DEFAULT_RISK_LEVELS);

        let mut r = Reader { section: "price", table: section("price"), errors: &mut errors };
        let i0 = r.float("i0", 1.0);
        if !(i0 > 0.0 && i0.is_finite()) {
            r.fail("i0", "must be positive");
        }
        let strikes = r.floats("strikes").unwrap_or_else(default_strikes);
        if strikes.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            r.fail("strikes", "strikes must be non-negative");
        }
        let maturities: Vec<usize> = match r.get("maturities") {
            None => (1..=10).collect(),
            Some(Value::Array(a)) if !a.is_empty() && a.iter().all(|v| v.as_integer().is_some_and(|i| i >= 0)) => {
                a.iter().filter_map(Value::as_integer).map(|i| i as usize).collect()
            }
            Some(_) => {
                r.fail("maturities", "expected a non-empty list of non-negative integers");
                Vec::new()
            }
        };
        let price_n = r.count("n", 10_000, 1);
        let valuation = r.count("valuation", 0, 0);
        if maturities.iter().any(|&t| t < valuation) {
            r.fail("valuation", "valuation period is after a maturity");
        }

        let mut r = Reader { section: "budget", table: section("budget"), errors: &mut errors };
        let budget_levels = r.levels("levels", &DEFAULT_BUDGET_LEVELS);
        let budget_exclude_base_year = r.flag("exclude_base_year", false);
        let mut groups = Vec::new();
        match r.get("groups") {
            None => {}
            Some(Value::Table(t)) => {
                let entries: Vec<(String, Value)> = t.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
                for (name, members) in entries {
                    match members.as_array().filter(|a| a.iter().all(Value::is_str)) {
                        Some(a) => groups.push((name, a.iter().filter_map(|v| v.as_str().map(String::from)).collect())),
                        None => r.fail("groups", &format!("group `{name}` must be a list of factor names")),
                    }
                }
            }
            Some(_) => r.fail("groups", "expected a table of group = [factors]"),
        }

        let mut r = Reader { section: "stress", table: section("stress"), errors: &mut errors };
        let stressor = r.string("stressor").map(resolve);
        let stress_levels = r.levels("levels", &DEFAULT_RISK_LEVELS);
        let stress_n = r.count("n", 1_000_000, swbi::stress::MIN_DRAWS);
        let variant = match r.string("variant").map(|s| s.parse::<Variant>()) {
            None => Variant::Gh,
            Some(Ok(v)) => v,
            Some(Err(_)) => {
                r.fail("variant", "expected gh, vg or nig");
                Variant::Gh
            }
        };
        let bootstrap = r.count("bootstrap", 500, 0);
        for q in &stress_levels {
            let needed = swbi::stress::required_draws(*q);
            if *q > 0.0 && stress_n < needed {
                r.fail("n", &format!("level {q} needs at least {needed} draws"));
            }
        }

        // Contract checks that depend on which steps run.
        if seed.is_none() {
            let stochastic: Vec<&str> = steps.iter().filter(|s| s.is_stochastic()).map(|s| s.name()).collect();
            if !stochastic.is_empty() {
                errors.push(format!("`seed` is required for stochastic step(s): {}", stochastic.join(", ")));
            }
        }
        if steps.contains(&Step::Panel) && panel_input.is_none() {
            errors.push("`panel.input` is required for the panel step".into());
        }
        if steps.contains(&Step::Stress) && stressor.is_none() {
            errors.push("`stress.stressor` is required for the stress step".into());
        }

        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(RunConfig {
            seed,
            output_dir,
            steps,
            panel_input,
            panel: PanelConfig { factors, reversal, years },
            exclude_base_year,
            innovations,
            joint,
            lambda0,
            riskfree,
            restarts,
            simulate_n,
            method,
            risk_levels,
            i0,
            strikes,
            maturities,
            price_n,
            valuation,
            budget_levels,
            budget_exclude_base_year,
            groups,
            stressor,
            stress_levels,
            stress_n,
            variant,
            bootstrap,
        })
    }
}
