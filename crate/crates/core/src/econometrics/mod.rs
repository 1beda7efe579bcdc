//! Zero-mean ARMA(1,1)-GARCH(1,1) on the index return series.
//!
//! ```text
//! r_t = phi r_{t-1} + theta e_{t-1} + e_t,   e_t = sqrt(h_t) eps_t
//! h_t = omega + a h_{t-1} + b e_{t-1}^2
//! ```
//!
//! The variance recursion is driven by the raw shock e_t, so a + b < 1 is
//! the covariance-stationarity condition. Estimation is two-stage: Gaussian
//! QMLE of the five ARMA-GARCH coefficients, then (optionally) a GH-family
//! law fitted to the standardized residuals eps_t = e_t / sqrt(h_t).

mod risk;
mod scenario;

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub use risk::{ljung_box, risk_summary, LjungBox, RiskSummary, TailRisk};
pub use scenario::{simulate_stationary, simulate_stationary_with, ScenarioKind, ScenarioSet, StationaryMethod};

use crate::error::{Error, Result};
use crate::ghdist::fit::{fit_univariate, log_likelihood as gh_log_likelihood};
use crate::ghdist::{GhDensity, GhParams, GhSampler, Variant};
use crate::io::{read_text, write_text, KeyValues};
use crate::numeric::optim::{minimize_with_restarts, BfgsSettings};
use crate::numeric::stats;

pub const MIN_OBSERVATIONS: usize = 20;
/// a + b above this is reported as a boundary solution.
const BOUNDARY_PERSISTENCE: f64 = 0.999;

/// Law of the standardized innovation eps_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Normal,
    Gh(GhParams),
}

impl Innovation {
    /// ln E[e^{u eps}]. Normal: u^2 / 2.
    pub fn ln_mgf(&self, u: f64) -> Result<f64> {
        match self {
            Innovation::Normal => Ok(0.5 * u * u),
            Innovation::Gh(p) => p.ln_mgf(u),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Innovation::Normal => 0.0,
            Innovation::Gh(p) => p.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Innovation::Normal => 1.0,
            Innovation::Gh(p) => p.variance(),
        }
    }

    pub fn sampler(&self) -> InnovationSampler {
        match self {
            Innovation::Normal => InnovationSampler::Normal,
            Innovation::Gh(p) => InnovationSampler::Gh(GhSampler::new(p)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Innovation::Normal => "normal".into(),
            Innovation::Gh(p) => p.variant().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum InnovationSampler {
    Normal,
    Gh(GhSampler),
}

impl InnovationSampler {
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationSampler::Normal => rng.sample(rand_distr::StandardNormal),
            InnovationSampler::Gh(s) => s.draw(rng),
        }
    }
}

/// Innovation family requested from [`fit_garch_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnovationFamily {
    Normal,
    Gh(Variant),
}

impl FromStr for InnovationFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("normal") {
            Ok(InnovationFamily::Normal)
        } else {
            s.parse().map(InnovationFamily::Gh)
        }
    }
}

impl fmt::Display for InnovationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnovationFamily::Normal => f.write_str("normal"),
            InnovationFamily::Gh(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchModel {
    pub ar: f64,
    pub ma: f64,
    pub omega: f64,
    /// Coefficient on h_{t-1}.
    pub a: f64,
    /// Coefficient on e_{t-1}^2.
    pub b: f64,
    pub lambda0: f64,
    pub riskfree: f64,
    pub innovation: Innovation,
    /// Gaussian quasi-log-likelihood of the ARMA-GARCH stage.
    pub loglik: f64,
    /// Log-likelihood of the innovation law on the standardized residuals, when fitted.
    pub innovation_loglik: Option<f64>,
    pub n_obs: usize,
    /// h_T and e_T at the end of the estimation sample.
    pub last_variance: f64,
    pub last_residual: f64,
    pub joint: bool,
    pub warning: Option<String>,
}

impl GarchModel {
    /// Model with given coefficients and no estimation history; h_T is set
    /// to the unconditional variance and e_T to zero.
    pub fn new(ar: f64, ma: f64, omega: f64, a: f64, b: f64, innovation: Innovation) -> Result<Self> {
        let m = GarchModel {
            ar,
            ma,
            omega,
            a,
            b,
            lambda0: 0.0,
            riskfree: 0.0,
            innovation,
            loglik: f64::NAN,
            innovation_loglik: None,
            n_obs: 0,
            last_variance: 0.0,
            last_residual: 0.0,
            joint: false,
            warning: None,
        };
        m.validate()?;
        Ok(GarchModel { last_variance: m.unconditional_variance(), ..m })
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.ar, self.ma, self.omega, self.a, self.b, self.lambda0, self.riskfree];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite GARCH coefficient".into()));
        }
        if self.omega <= 0.0 {
            return Err(Error::Parameter(format!("omega must be positive, got {}", self.omega)));
        }
        if self.a < 0.0 || self.b < 0.0 {
            return Err(Error::Parameter(format!("a and b must be non-negative, got a={}, b={}", self.a, self.b)));
        }
        if self.ar.abs() >= 1.0 {
            return Err(Error::Parameter(format!("|ar| must be below 1, got {}", self.ar)));
        }
        if self.persistence() >= 1.0 {
            return Err(Error::NonStationary { persistence: self.persistence() });
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.a + self.b
    }

    /// omega / (1 - a - b).
    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.a - self.b)
    }

    /// One-step forecast h_{T+1} = omega + a h_T + b e_T^2.
    pub fn forecast_variance(&self) -> f64 {
        self.omega + self.a * self.last_variance + self.b * self.last_residual * self.last_residual
    }

    pub fn with_premium(&self, lambda0: f64, riskfree: f64) -> Self {
        GarchModel { lambda0, riskfree, ..self.clone() }
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.comments.push("ARMA(1,1)-GARCH(1,1): h_t = omega + a h_{t-1} + b e_{t-1}^2".into());
        kv.push_f64("ar", self.ar);
        kv.push_f64("ma", self.ma);
        kv.push_f64("omega", self.omega);
        kv.push_f64("a", self.a);
        kv.push_f64("b", self.b);
        kv.push_f64("lambda0", self.lambda0);
        kv.push_f64("riskfree", self.riskfree);
        kv.push_f64("loglik", self.loglik);
        if let Some(l) = self.innovation_loglik {
            kv.push_f64("innovation_loglik", l);
        }
        kv.push("n_obs", self.n_obs);
        kv.push_f64("last_variance", self.last_variance);
        kv.push_f64("last_residual", self.last_residual);
        kv.push("joint", self.joint);
        kv.push("innovation", self.innovation.label());
        if let Innovation::Gh(p) = &self.innovation {
            kv.entries.extend(p.to_key_values("innovation.").entries);
        }
        if let Some(w) = &self.warning {
            kv.push("warning", w);
        }
        kv
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let innovation = match kv.require("innovation")? {
            s if s.eq_ignore_ascii_case("normal") => Innovation::Normal,
            _ => Innovation::Gh(GhParams::from_key_values(kv, "innovation.")?),
        };
        let m = GarchModel {
            ar: kv.require_f64("ar")?,
            ma: kv.require_f64("ma")?,
            omega: kv.require_f64("omega")?,
            a: kv.require_f64("a")?,
            b: kv.require_f64("b")?,
            lambda0: kv.get_f64("lambda0")?.unwrap_or(0.0),
            riskfree: kv.get_f64("riskfree")?.unwrap_or(0.0),
            innovation,
            loglik: kv.get_f64("loglik")?.unwrap_or(f64::NAN),
            innovation_loglik: kv.get_f64("innovation_loglik")?,
            n_obs: kv.get("n_obs").map(str::parse).transpose().map_err(|_| Error::Input("n_obs is not an integer".into()))?.unwrap_or(0),
            last_variance: kv.require_f64("last_variance")?,
            last_residual: kv.require_f64("last_residual")?,
            joint: kv.get("joint") == Some("true"),
            warning: kv.get("warning").map(str::to_string),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_key_values().render())
    }

    pub fn read(path: &Path) -> Result<Self> {
        GarchModel::from_key_values(&KeyValues::parse(&read_text(path)?)?)
    }
}

/// ARMA residuals e_t and filtered variances h_t, with r_0 = e_0 = 0 and h_1 = omega / (1 - a - b).
pub fn filter(series: &[f64], ar: f64, ma: f64, omega: f64, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let n = series.len();
    let mut e = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    let mut prev_r = 0.0;
    let mut prev_e = 0.0;
    let mut prev_h = omega / (1.0 - a - b);
    for (t, &r) in series.iter().enumerate() {
        let ht = if t == 0 { prev_h } else { omega + a * prev_h + b * prev_e * prev_e };
        let et = r - ar * prev_r - ma * prev_e;
        e.push(et);
        h.push(ht);
        prev_r = r;
        prev_e = et;
        prev_h = ht;
    }
    (e, h)
}

fn gaussian_qll(e: &[f64], h: &[f64]) -> f64 {
    e.iter().zip(h).map(|(e, h)| -0.5 * ((2.0 * PI).ln() + h.ln() + e * e / h)).sum()
}

/// Standardized residuals e_t / sqrt(h_t) under the model's coefficients.
pub fn innovations(model: &GarchModel, series: &[f64]) -> ScenarioSet {
    let (e, h) = filter(series, model.ar, model.ma, model.omega, model.a, model.b);
    let draws = e.iter().zip(&h).map(|(e, h)| e / h.sqrt()).collect();
    ScenarioSet {
        kind: ScenarioKind::Innovation,
        draws,
        seed: None,
        provenance: vec![format!("standardized ARMA-GARCH residuals of a {}-point series", series.len())],
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GarchOptions {
    pub innovations: InnovationFamily,
    /// Maximize the likelihood of the ARMA-GARCH coefficients and the
    /// innovation law together (innovation law standardized to zero mean and
    /// unit variance) instead of the two-stage default.
    pub joint: bool,
    pub lambda0: f64,
    pub riskfree: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for GarchOptions {
    fn default() -> Self {
        GarchOptions { innovations: InnovationFamily::Normal, joint: false, lambda0: 0.0, riskfree: 0.0, restarts: 5, seed: 0 }
    }
}

pub fn fit_garch(series: &[f64]) -> Result<GarchModel> {
    fit_garch_with(series, &GarchOptions::default())
}

/// Unconstrained coordinates: phi = tanh(x0), theta = tanh(x1), omega = e^{x2},
/// (a, b, 1 - a - b) = softmax(x3, x4, 0).
fn decode_garch(x: &[f64], scale: f64) -> (f64, f64, f64, f64, f64) {
    let (ea, eb) = (x[3].exp(), x[4].exp());
    let z = 1.0 + ea + eb;
    (x[0].tanh(), x[1].tanh(), scale * x[2].exp(), ea / z, eb / z)
}

fn encode_garch(ar: f64, ma: f64, omega: f64, a: f64, b: f64, scale: f64) -> Vec<f64> {
    let rest = 1.0 - a - b;
    vec![ar.atanh(), ma.atanh(), (omega / scale).ln(), (a / rest).ln(), (b / rest).ln()]
}

fn lag_autocorrelation(x: &[f64]) -> f64 {
    let m = stats::mean(x);
    let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    num / den
}

pub fn fit_garch_with(series: &[f64], options: &GarchOptions) -> Result<GarchModel> {
    if series.len() < MIN_OBSERVATIONS {
        return Err(Error::TooFewObservations { needed: MIN_OBSERVATIONS, got: series.len() });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("GARCH fit: non-finite observation".into()));
    }
    let var = series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64;
    if !(stats::sample_variance(series) > 1e-20 * var) {
        return Err(Error::ZeroVariance { name: "GARCH input series".into() });
    }
    let n = series.len() as f64;
    let objective = |x: &[f64]| {
        let (ar, ma, omega, a, b) = decode_garch(x, var);
        let (e, h) = filter(series, ar, ma, omega, a, b);
        -gaussian_qll(&e, &h) / n
    };
    // Moment-based starts: AR from the lag-1 autocorrelation, persistence from
    // that of the squared series, variance matched to the sample.
    let rho = lag_autocorrelation(series).clamp(-0.9, 0.9);
    let squares: Vec<f64> = series.iter().map(|v| v * v).collect();
    let rho2 = lag_autocorrelation(&squares).clamp(0.0, 0.9);
    let mut starts = Vec::new();
    for (a, b) in [(0.5 * rho2 + 0.02, 0.5 * rho2 + 0.02), (0.8, 0.1), (0.02, 0.02)] {
        starts.push(encode_garch(rho, 0.0, var * (1.0 - a - b), a, b, var));
    }
    let search = minimize_with_restarts(&objective, &starts, BfgsSettings::default(), options.restarts, 0.3, options.seed, "garch-fit-restart");
    let best = search.best;
    let (ar, ma, omega, a, b) = decode_garch(&best.x, var);
    if !(best.converged && best.value.is_finite()) {
        return Err(Error::FitFailed {
            attempts: search.attempts,
            best_loglik: -best.value * n,
            best_params: vec![ar, ma, omega, a, b],
            message: "ARMA-GARCH quasi-likelihood did not converge".into(),
        });
    }
    let (e, h) = filter(series, ar, ma, omega, a, b);
    let loglik = gaussian_qll(&e, &h);
    let mut model = GarchModel {
        ar,
        ma,
        omega,
        a,
        b,
        lambda0: options.lambda0,
        riskfree: options.riskfree,
        innovation: Innovation::Normal,
        loglik,
        innovation_loglik: None,
        n_obs: series.len(),
        last_variance: *h.last().expect("non-empty"),
        last_residual: *e.last().expect("non-empty"),
        joint: false,
        warning: None,
    };
    if let InnovationFamily::Gh(variant) = options.innovations {
        let eps = innovations(&model, series).draws;
        let fit = fit_univariate(&eps, variant)?;
        model.innovation = Innovation::Gh(fit.params);
        model.innovation_loglik = Some(fit.log_likelihood);
        if options.joint {
            model = fit_joint(series, &model, options)?;
        }
    }
    if model.persistence() > BOUNDARY_PERSISTENCE {
        model.warning = Some(format!("a + b = {} is at the stationarity boundary", model.persistence()));
    }
    Ok(model)
}

/// GH-family law standardized to zero mean and unit variance.
fn standardized_law(p: &GhParams) -> Option<GhParams> {
    let sd = p.variance().sqrt();
    p.affine(1.0 / sd, -p.mean() / sd).ok()
}

fn fit_joint(series: &[f64], two_stage: &GarchModel, options: &GarchOptions) -> Result<GarchModel> {
    let Innovation::Gh(law) = two_stage.innovation else {
        return Ok(two_stage.clone());
    };
    let variant = law.variant();
    let law = standardized_law(&law).ok_or_else(|| Error::Numerical("innovation law has no finite variance".into()))?;
    let var = series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64;
    // Shape coordinates; location and scale are implied by standardization.
    let shape = |p: &GhParams| -> Vec<f64> {
        let g = p.gamma().ln();
        match variant {
            Variant::Gh => vec![p.lambda(), p.beta(), g, p.delta().ln()],
            Variant::Nig => vec![p.beta(), g, p.delta().ln()],
            Variant::Vg => vec![p.lambda().ln(), p.beta(), g],
        }
    };
    let unshape = |t: &[f64]| -> Option<GhParams> {
        let p = match variant {
            Variant::Gh => GhParams::gh(t[0], t[1].hypot(t[2].exp()), t[1], t[3].exp(), 0.0),
            Variant::Nig => GhParams::nig(t[0].hypot(t[1].exp()), t[0], t[2].exp(), 0.0),
            Variant::Vg => GhParams::vg(t[0].exp(), t[1].hypot(t[2].exp()), t[1], 0.0),
        }
        .ok()?;
        standardized_law(&p)
    };
    let garch_start = encode_garch(two_stage.ar, two_stage.ma, two_stage.omega, two_stage.a, two_stage.b, var);
    let k = garch_start.len();
    let mut start = garch_start;
    start.extend(shape(&law));
    let n = series.len() as f64;
    let objective = |x: &[f64]| {
        let (ar, ma, omega, a, b) = decode_garch(&x[..k], var);
        let Some(law) = unshape(&x[k..]) else { return f64::INFINITY };
        let dens = GhDensity::new(&law);
        let (e, h) = filter(series, ar, ma, omega, a, b);
        let ll: f64 = e.iter().zip(&h).map(|(e, h)| dens.ln_density(e / h.sqrt()) - 0.5 * h.ln()).sum();
        -ll / n
    };
    let search = minimize_with_restarts(&objective, &[start], BfgsSettings::default(), options.restarts, 0.1, options.seed, "garch-joint-restart");
    let best = search.best;
    let (ar, ma, omega, a, b) = decode_garch(&best.x[..k], var);
    let law = unshape(&best.x[k..]);
    let (Some(law), true) = (law, best.converged && best.value.is_finite()) else {
        return Err(Error::FitFailed {
            attempts: search.attempts,
            best_loglik: -best.value * n,
            best_params: vec![ar, ma, omega, a, b],
            message: "joint ARMA-GARCH-GH likelihood did not converge".into(),
        });
    };
    let (e, h) = filter(series, ar, ma, omega, a, b);
    let eps: Vec<f64> = e.iter().zip(&h).map(|(e, h)| e / h.sqrt()).collect();
    Ok(GarchModel {
        ar,
        ma,
        omega,
        a,
        b,
        innovation: Innovation::Gh(law),
        loglik: gaussian_qll(&e, &h),
        innovation_loglik: Some(gh_log_likelihood(&eps, &law)),
        last_variance: *h.last().expect("non-empty"),
        last_residual: *e.last().expect("non-empty"),
        joint: true,
        ..two_stage.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_variance_reduction() {
        let m = GarchModel::new(0.0, 0.0, 0.25, 0.0, 0.0, Innovation::Normal).unwrap();
        let series = [0.1, -0.4, 0.3, 0.0, 1.2];
        let eps = innovations(&m, &series).draws;
        for (x, e) in series.iter().zip(&eps) {
            assert!((x / 0.5 - e).abs() < 1e-15);
        }
    }

    #[test]
    fn filtered_variance_bounded_below() {
        let (_, h) = filter(&[0.5, -2.0, 0.1, 3.0, -0.2], 0.3, -0.2, 0.05, 0.6, 0.3);
        assert!(h.iter().all(|&v| v >= 0.05));
    }

    #[test]
    fn rejects_non_stationary() {
        assert!(matches!(GarchModel::new(0.0, 0.0, 1.0, 0.7, 0.3, Innovation::Normal), Err(Error::NonStationary { .. })));
    }

    #[test]
    fn constant_series_is_zero_variance() {
        assert!(matches!(fit_garch(&[0.3; 40]), Err(Error::ZeroVariance { .. })));
    }

    #[test]
    fn model_file_round_trip() {
        let law = GhParams::vg(1.3, 1.8, -0.2, 0.1).unwrap();
        let m = GarchModel::new(0.2, -0.1, 0.01, 0.5, 0.2, Innovation::Gh(law)).unwrap().with_premium(0.05, 0.01);
        let back = GarchModel::from_key_values(&KeyValues::parse(&m.to_key_values().render()).unwrap()).unwrap();
        assert_eq!(back.ar, m.ar);
        assert_eq!(back.innovation, m.innovation);
        assert_eq!(back.forecast_variance(), m.forecast_variance());
        assert_eq!(back.lambda0, 0.05);
    }

    #[test]
    fn coordinate_transforms_round_trip() {
        let x = encode_garch(0.3, -0.4, 0.02, 0.7, 0.2, 0.1);
        let (ar, ma, omega, a, b) = decode_garch(&x, 0.1);
        assert!((ar - 0.3).abs() < 1e-14 && (ma + 0.4).abs() < 1e-14);
        assert!((omega - 0.02).abs() < 1e-15 && (a - 0.7).abs() < 1e-14 && (b - 0.2).abs() < 1e-14);
    }
}
