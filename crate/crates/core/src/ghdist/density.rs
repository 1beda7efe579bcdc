use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use super::GhParams;
use crate::numeric::bessel::ln_bessel_k;

/// Log-density with the parameter-only terms precomputed.
#[derive(Debug, Clone)]
pub struct GhDensity {
    lambda: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
    mu: f64,
    ln_norm: f64,
    /// ln f(mu) for the Gamma mixture; +inf when lambda <= 1/2.
    ln_at_mu: f64,
}

impl GhDensity {
    pub fn new(p: &GhParams) -> Self {
        let (lambda, alpha, beta, delta, mu) = (p.lambda, p.alpha, p.beta, p.delta, p.mu);
        let gamma = p.gamma();
        let (ln_norm, ln_at_mu) = if delta > 0.0 {
            let ln_norm = lambda * (gamma / delta).ln() - 0.5 * (2.0 * PI).ln() - ln_bessel_k(lambda, delta * gamma);
            (ln_norm, f64::NAN)
        } else {
            let nu = lambda - 0.5;
            let ln_norm = 2.0 * lambda * gamma.ln() - 0.5 * PI.ln() - ln_gamma(lambda) - nu * (2.0 * alpha).ln();
            // |x|^nu K_nu(alpha |x|) -> Gamma(nu) 2^{nu-1} alpha^{-nu} as x -> 0.
            let ln_at_mu = if nu > 0.0 {
                ln_norm + ln_gamma(nu) + (nu - 1.0) * 2f64.ln() - nu * alpha.ln()
            } else {
                f64::INFINITY
            };
            (ln_norm, ln_at_mu)
        };
        GhDensity { lambda, alpha, beta, delta, mu, ln_norm, ln_at_mu }
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        let d = x - self.mu;
        let nu = self.lambda - 0.5;
        if self.delta > 0.0 {
            let q = self.delta.hypot(d);
            self.ln_norm + self.beta * d + ln_bessel_k(nu, self.alpha * q) + nu * (q / self.alpha).ln()
        } else if d == 0.0 {
            self.ln_at_mu
        } else {
            let a = d.abs();
            self.ln_norm + nu * a.ln() + ln_bessel_k(nu, self.alpha * a) + self.beta * d
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{norm_pdf, quad};

    /// Density as the normal mixture integral over the mixing law, an
    /// independent route to the same function.
    fn mixture_oracle(p: &GhParams, x: f64) -> f64 {
        let psi = p.alpha * p.alpha - p.beta * p.beta;
        let chi = p.delta * p.delta;
        let ln_mix_norm = if chi > 0.0 {
            // GIG normalizer: (psi/chi)^{lambda/2} / (2 K_lambda(sqrt(chi psi)))
            0.5 * p.lambda * (psi / chi).ln() - 2f64.ln() - ln_bessel_k(p.lambda, (chi * psi).sqrt())
        } else {
            p.lambda * (0.5 * psi).ln() - ln_gamma(p.lambda)
        };
        let integrand = |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let ln_mix = ln_mix_norm + (p.lambda - 1.0) * w.ln() - 0.5 * (chi / w + psi * w);
            let s = w.sqrt();
            ln_mix.exp() * norm_pdf((x - p.mu - p.beta * w) / s) / s
        };
        quad::integrate_to_infinity(&integrand, 0.0, 1e-11, 0.0).value
    }

    #[test]
    fn matches_mixture_integral() {
        let cases = [
            GhParams::gh(0.4, 1.7, 0.3, 0.8, 0.1).unwrap(),
            GhParams::gh(-1.3, 2.5, -1.0, 1.4, -0.2).unwrap(),
            GhParams::gh(2.5, 1.0, 0.6, 0.3, 0.0).unwrap(),
            GhParams::nig(3.0, 1.2, 0.5, 0.05).unwrap(),
            GhParams::vg(1.6, 2.0, -0.5, 0.0).unwrap(),
            GhParams::vg(3.0, 1.3, 0.2, 0.4).unwrap(),
        ];
        for p in &cases {
            let dens = GhDensity::new(p);
            for &x in &[-3.0, -1.1, -0.25, 0.07, 0.5, 1.9, 4.0] {
                let oracle = mixture_oracle(p, x);
                let got = dens.density(x);
                assert!((got - oracle).abs() < 1e-8 * oracle.max(1e-3), "{p} x={x} got={got} oracle={oracle}");
            }
        }
    }

    #[test]
    fn vg_peak_limit() {
        let p = GhParams::vg(1.6, 2.0, -0.5, 0.0).unwrap();
        let d = GhDensity::new(&p);
        let at = d.density(0.0);
        assert!((d.density(1e-7) / at - 1.0).abs() < 1e-5);
        let p = GhParams::vg(0.4, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(GhDensity::new(&p).density(0.0), f64::INFINITY);
    }

    #[test]
    fn integrates_to_one() {
        let cases = [
            GhParams::gh(0.4, 1.7, 0.3, 0.8, 0.1).unwrap(),
            GhParams::gh(-2.0, 3.0, 1.5, 2.0, 0.0).unwrap(),
            GhParams::nig(1.0, -0.6, 0.4, 0.3).unwrap(),
            GhParams::vg(0.8, 1.5, 0.4, -0.2).unwrap(),
            GhParams::vg(0.3, 4.0, -2.0, 0.0).unwrap(),
        ];
        for p in &cases {
            let d = GhDensity::new(p);
            let f = |x: f64| d.density(x);
            let total = quad::integrate(&f, -50.0, p.mu, 1e-12, 0.0).value + quad::integrate(&f, p.mu, 50.0, 1e-12, 0.0).value;
            assert!((total - 1.0).abs() < 1e-6, "{p}: {total}");
        }
    }
}
