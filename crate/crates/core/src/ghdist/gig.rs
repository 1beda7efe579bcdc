//! Generalized inverse Gaussian variates.
//!
//! Hoermann and Leydold's rejection schemes: ratio-of-uniforms with and
//! without mode shift, plus the dedicated method for small omega with
//! 0 <= lambda < 1, where the density is not T-concave. Negative lambda uses
//! the reciprocal of a GIG(-lambda) draw.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// GIG(lambda, chi, psi), density proportional to w^{lambda-1} exp(-(chi/w + psi w)/2).
#[derive(Debug, Clone)]
pub struct GigSampler {
    /// Scale eta = sqrt(chi / psi).
    eta: f64,
    invert: bool,
    method: Method,
}

#[derive(Debug, Clone)]
enum Method {
    RouShift { t: f64, s: f64, xm: f64, nc: f64, uminus: f64, uplus: f64 },
    RouNoShift { t: f64, s: f64, nc: f64, um: f64 },
    Concave { lambda: f64, omega: f64, x0: f64, xs: f64, k0: f64, k1: f64, k2: f64, a: [f64; 3] },
}

/// Mode of y^{lambda-1} exp(-omega/2 (y + 1/y)).
fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        ((lambda - 1.0).hypot(omega) + (lambda - 1.0)) / omega
    } else {
        omega / ((1.0 - lambda).hypot(omega) + (1.0 - lambda))
    }
}

impl GigSampler {
    /// Requires chi > 0 and psi > 0.
    pub fn new(lambda: f64, chi: f64, psi: f64) -> Self {
        let omega = (chi * psi).sqrt();
        let eta = (chi / psi).sqrt();
        let invert = lambda < 0.0;
        let lambda = lambda.abs();
        let method = if lambda > 2.0 || omega > 3.0 {
            let t = 0.5 * (lambda - 1.0);
            let s = 0.25 * omega;
            let xm = gig_mode(lambda, omega);
            let nc = t * xm.ln() - s * (xm + 1.0 / xm);
            // Extremes of (x - xm) sqrt(f(x)) are roots of a cubic.
            let a = -(2.0 * (lambda + 1.0) / omega + xm);
            let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
            let c = xm;
            let p = b - a * a / 3.0;
            let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
            let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
            let fak = 2.0 * (-p / 3.0).sqrt();
            let y1 = fak * (fi / 3.0).cos() - a / 3.0;
            let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
            let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
            let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
            Method::RouShift { t, s, xm, nc, uminus, uplus }
        } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
            let t = 0.5 * (lambda - 1.0);
            let s = 0.25 * omega;
            let xm = gig_mode(lambda, omega);
            let nc = t * xm.ln() - s * (xm + 1.0 / xm);
            let ym = ((lambda + 1.0) + (lambda + 1.0).hypot(omega)) / omega;
            let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
            Method::RouNoShift { t, s, nc, um }
        } else {
            let xm = gig_mode(lambda, omega);
            let x0 = omega / (1.0 - lambda);
            let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
            let a0 = k0 * x0;
            let (xs, k1, a1, k2, a2) = if x0 >= 2.0 / omega {
                let k2 = x0.powf(lambda - 1.0);
                (x0, 0.0, 0.0, k2, k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega)
            } else {
                let k1 = (-omega).exp();
                let a1 = if lambda == 0.0 {
                    k1 * (2.0 / (omega * omega)).ln()
                } else {
                    k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
                };
                let k2 = (2.0 / omega).powf(lambda - 1.0);
                (2.0 / omega, k1, a1, k2, k2 * 2.0 * (-1f64).exp() / omega)
            };
            Method::Concave { lambda, omega, x0, xs, k0, k1, k2, a: [a0, a1, a2] }
        };
        GigSampler { eta, invert, method }
    }

    /// Draw from the standardized law (eta = 1, lambda >= 0).
    fn draw_standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.method {
            Method::RouShift { t, s, xm, nc, uminus, uplus } => loop {
                let u = uminus + rng.random::<f64>() * (uplus - uminus);
                let v: f64 = rng.random();
                let x = u / v + xm;
                if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
                    return x;
                }
            },
            Method::RouNoShift { t, s, nc, um } => loop {
                let u = um * rng.random::<f64>();
                let v: f64 = rng.random();
                let x = u / v;
                if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
                    return x;
                }
            },
            Method::Concave { lambda, omega, x0, xs, k0, k1, k2, a } => {
                let total = a[0] + a[1] + a[2];
                loop {
                    let v = total * rng.random::<f64>();
                    let (x, hat) = if v <= a[0] {
                        (x0 * v / a[0], k0)
                    } else if v <= a[0] + a[1] {
                        let v = v - a[0];
                        let x = if lambda == 0.0 {
                            omega * (v * omega.exp()).exp()
                        } else {
                            (x0.powf(lambda) + v * lambda / k1).powf(1.0 / lambda)
                        };
                        (x, k1 * x.powf(lambda - 1.0))
                    } else {
                        let v = v - a[0] - a[1];
                        let z = (-xs * omega / 2.0).exp() - v * omega / (2.0 * k2);
                        let x = -2.0 / omega * z.ln();
                        (x, k2 * (-omega / 2.0 * x).exp())
                    };
                    if x <= 0.0 || !x.is_finite() {
                        continue;
                    }
                    let u = rng.random::<f64>() * hat;
                    if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
                        return x;
                    }
                }
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y = self.draw_standard(rng);
        if self.invert {
            self.eta / y
        } else {
            self.eta * y
        }
    }
}

/// Mixing law of a GH variate: GIG when chi > 0, Gamma(lambda, rate psi/2) when chi = 0.
#[derive(Debug, Clone)]
pub enum Mixing {
    Gig(GigSampler),
    Gamma(Gamma<f64>),
}

impl Mixing {
    pub fn new(lambda: f64, chi: f64, psi: f64) -> Self {
        if chi > 0.0 {
            Mixing::Gig(GigSampler::new(lambda, chi, psi))
        } else {
            Mixing::Gamma(Gamma::new(lambda, 2.0 / psi).expect("validated gamma mixing parameters"))
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Mixing::Gig(g) => g.draw(rng),
            Mixing::Gamma(g) => g.sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::bessel::ln_bessel_k;

    fn gig_moments(lambda: f64, chi: f64, psi: f64) -> (f64, f64) {
        let omega = (chi * psi).sqrt();
        let eta = (chi / psi).sqrt();
        let k = ln_bessel_k(lambda, omega);
        let m1 = eta * (ln_bessel_k(lambda + 1.0, omega) - k).exp();
        let m2 = eta * eta * (ln_bessel_k(lambda + 2.0, omega) - k).exp();
        (m1, m2 - m1 * m1)
    }

    #[test]
    fn sample_moments_every_branch() {
        // (lambda, chi, psi) chosen to hit shift, no-shift, small-omega and inverted paths.
        let cases = [(3.0, 1.0, 2.0), (0.5, 4.0, 4.0), (1.2, 0.5, 0.5), (0.3, 0.01, 0.5), (0.0, 0.02, 0.5), (-0.5, 1.0, 3.0), (-2.5, 0.3, 0.1)];
        let n = 200_000;
        for (i, &(l, c, p)) in cases.iter().enumerate() {
            let s = GigSampler::new(l, c, p);
            let mut rng = crate::rng::stream(11, "gig-test", i as u64);
            let draws: Vec<f64> = (0..n).map(|_| s.draw(&mut rng)).collect();
            let m = draws.iter().sum::<f64>() / n as f64;
            let (em, ev) = gig_moments(l, c, p);
            let se = (ev / n as f64).sqrt();
            assert!((m - em).abs() < 5.0 * se, "case {i}: mean {m} vs {em} (se {se})");
        }
    }
}
