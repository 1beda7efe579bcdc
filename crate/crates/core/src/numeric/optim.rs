//! Unconstrained minimizers used by the maximum-likelihood fits.
//!
//! Constraints are handled by the callers through parameter transforms, so
//! both methods here operate on all of R^n. Non-finite objective values are
//! treated as +inf.

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsSettings {
    pub max_iter: usize,
    /// Stop when the sup-norm of the gradient falls below this.
    pub grad_tol: f64,
    /// Stop when the relative objective decrease stays below this.
    pub f_rel_tol: f64,
}

impl Default for BfgsSettings {
    fn default() -> Self {
        BfgsSettings { max_iter: 500, grad_tol: 1e-6, f_rel_tol: 1e-13 }
    }
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

struct Counted<'a, F> {
    f: &'a F,
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        finite_or_inf((self.f)(x))
    }

    fn gradient(&mut self, x: &[f64], fx: f64) -> Vec<f64> {
        let mut probe = x.to_vec();
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            let h = 1e-5 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = self.eval(&probe);
            probe[i] = x[i] - h;
            let down = self.eval(&probe);
            probe[i] = x[i];
            g[i] = if up.is_finite() && down.is_finite() {
                (up - down) / (2.0 * h)
            } else if up.is_finite() {
                (up - fx) / h
            } else if down.is_finite() {
                (fx - down) / h
            } else {
                0.0
            };
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton minimization with central-difference gradients and an
/// Armijo backtracking line search.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], settings: BfgsSettings) -> Minimum {
    let n = x0.len();
    let mut obj = Counted { f, evaluations: 0 };
    let mut x = x0.to_vec();
    let mut fx = obj.eval(&x);
    if !fx.is_finite() {
        return Minimum { x, value: fx, iterations: 0, evaluations: obj.evaluations, converged: false };
    }
    let mut g = obj.gradient(&x, fx);
    let mut hinv = identity(n);
    let mut first = true;
    let mut stalls = 0;
    for iter in 0..settings.max_iter {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm < settings.grad_tol {
            return Minimum { x, value: fx, iterations: iter, evaluations: obj.evaluations, converged: true };
        }
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&hinv[i], &g)).collect();
        let mut slope = dot(&g, &p);
        if slope >= 0.0 {
            hinv = identity(n);
            p = g.iter().map(|v| -v).collect();
            slope = dot(&g, &p);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + step * pi).collect();
            let ft = obj.eval(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fxn)) = accepted else {
            // No descent along p; a reset to steepest descent is the last resort.
            if first {
                break;
            }
            hinv = identity(n);
            first = true;
            continue;
        };
        let gn = obj.gradient(&xn, fxn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if first {
                let scale = sy / dot(&y, &y);
                for (i, row) in hinv.iter_mut().enumerate() {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    row[i] = scale;
                }
            }
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
            first = false;
        }
        let rel = (fx - fxn).abs() / fx.abs().max(1.0);
        x = xn;
        fx = fxn;
        g = gn;
        if rel < settings.f_rel_tol {
            stalls += 1;
            if stalls >= 3 {
                return Minimum { x, value: fx, iterations: iter + 1, evaluations: obj.evaluations, converged: true };
            }
        } else {
            stalls = 0;
        }
    }
    let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Minimum {
        converged: gnorm < settings.grad_tol.sqrt(),
        x,
        value: fx,
        iterations: settings.max_iter,
        evaluations: obj.evaluations,
    }
}

/// Outcome of [`minimize_with_restarts`].
#[derive(Debug, Clone)]
pub struct Search {
    pub best: Minimum,
    /// BFGS runs performed, starts and restarts together.
    pub attempts: usize,
}

/// Runs BFGS from every start, keeps the best, then while the best point is
/// not converged restarts up to `restarts` times from a perturbation of it.
/// Perturbations are uniform in +-`jitter` per coordinate, drawn from the
/// stream (`seed`, `step`), so the search is deterministic.
pub fn minimize_with_restarts<F: Fn(&[f64]) -> f64>(
    f: &F,
    starts: &[Vec<f64>],
    settings: BfgsSettings,
    restarts: usize,
    jitter: f64,
    seed: u64,
    step: &str,
) -> Search {
    use rand::Rng;
    let mut best: Option<Minimum> = None;
    let mut attempts = 0;
    let better = |m: &Minimum, b: &Option<Minimum>| b.as_ref().is_none_or(|b| m.value < b.value || !b.value.is_finite());
    for s in starts {
        let m = bfgs(f, s, settings);
        attempts += 1;
        if better(&m, &best) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one start");
    let mut rng = crate::rng::stream(seed, step, 0);
    for _ in 0..restarts {
        if best.converged && best.value.is_finite() {
            break;
        }
        let x0: Vec<f64> = best.x.iter().map(|v| v + jitter * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let m = bfgs(f, &x0, settings);
        attempts += 1;
        if m.value < best.value || (m.converged && m.value <= best.value + 1e-12 * best.value.abs()) || !best.value.is_finite() {
            best = m;
        }
    }
    Search { best, attempts }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect()
}

/// Nelder-Mead simplex search with dimension-adaptive coefficients.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], initial_step: f64, max_evals: usize, f_tol: f64) -> Minimum {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut obj = Counted { f, evaluations: 0 };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = obj.eval(x0);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += initial_step * x0[i].abs().max(1.0);
        let fv = obj.eval(&v);
        simplex.push((v, fv));
    }
    let mut iterations = 0;
    let mut converged = false;
    while obj.evaluations < max_evals {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best.is_finite() && (worst - best).abs() <= f_tol * (best.abs() + f_tol) {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / nf).collect();
        let along = |t: f64, w: &[f64]| -> Vec<f64> { centroid.iter().zip(w).map(|(c, wj)| c + t * (c - wj)).collect() };
        let xr = along(alpha, &simplex[n].0);
        let fr = obj.eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma, &simplex[n].0);
            let fe = obj.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(alpha * rho, &simplex[n].0);
            let fc = obj.eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho, &simplex[n].0);
            let fc = obj.eval(&xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let shrunk: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
            let fs = obj.eval(&shrunk);
            *vertex = (shrunk, fs);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, iterations, evaluations: obj.evaluations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn bfgs_rosenbrock() {
        let m = bfgs(&rosenbrock, &[-1.2, 1.0], BfgsSettings::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn nelder_mead_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + (x[2] - 0.5).powi(2);
        let m = nelder_mead(&f, &[0.0, 0.0, 0.0], 0.5, 5000, 1e-14);
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-4 && (m.x[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| if x[0] <= 0.0 { f64::NAN } else { x[0] - x[0].ln() };
        let m = bfgs(&f, &[3.0], BfgsSettings::default());
        assert!((m.x[0] - 1.0).abs() < 1e-5);
    }
}
