use super::{GhDensity, GhParams};
use crate::numeric::{quad, roots};

const NODES: usize = 800;
const SPAN_SDS: f64 = 40.0;
const REL_TOL: f64 = 1e-12;
const ABS_TOL: f64 = 1e-16;

/// Distribution function by numerical integration of the density.
///
/// Cumulative mass is tabulated once on a grid spanning mean +- 40 standard
/// deviations (with mu always a node, since the VG density can be singular
/// there). A query integrates only from the nearest node below it.
/// The VG density is infinite at mu for lambda <= 1/2; that single point carries no mass.
fn finite_density(d: &GhDensity, x: f64) -> f64 {
    let v = d.density(x);
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct GhCdf {
    density: GhDensity,
    nodes: Vec<f64>,
    cum: Vec<f64>,
}

impl GhCdf {
    pub fn new(p: &GhParams) -> Self {
        let density = GhDensity::new(p);
        let center = p.mean();
        let sd = p.variance().sqrt();
        let lo = center - SPAN_SDS * sd;
        let hi = center + SPAN_SDS * sd;
        let mut nodes: Vec<f64> = (0..=NODES).map(|k| lo + (hi - lo) * k as f64 / NODES as f64).collect();
        if p.mu() > lo && p.mu() < hi {
            // A node a rounding error away from mu would put quadrature points on the singularity.
            let gap = 1e-6 * (hi - lo) / NODES as f64;
            nodes.retain(|n| (n - p.mu()).abs() > gap);
            nodes.push(p.mu());
            nodes.sort_by(f64::total_cmp);
        }
        let f = |x: f64| finite_density(&density, x);
        let mut cum = Vec::with_capacity(nodes.len());
        let mut acc = quad::integrate_from_neg_infinity(&f, nodes[0], REL_TOL, ABS_TOL).value;
        cum.push(acc);
        for w in nodes.windows(2) {
            acc += quad::integrate(&f, w[0], w[1], REL_TOL, ABS_TOL).value;
            cum.push(acc);
        }
        GhCdf { density, nodes, cum }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let f = |t: f64| finite_density(&self.density, t);
        if x.is_nan() {
            return f64::NAN;
        }
        if x < self.nodes[0] {
            return quad::integrate_from_neg_infinity(&f, x, REL_TOL, ABS_TOL).value;
        }
        let last = self.nodes.len() - 1;
        if x >= self.nodes[last] {
            let upper = quad::integrate_to_infinity(&f, x, REL_TOL, ABS_TOL).value;
            return (1.0 - upper).clamp(0.0, 1.0);
        }
        let k = self.nodes.partition_point(|&n| n <= x) - 1;
        let v = self.cum[k] + quad::integrate(&f, self.nodes[k], x, REL_TOL, ABS_TOL).value;
        v.clamp(0.0, 1.0)
    }

    /// Inverse of [`GhCdf::cdf`] for p in (0, 1).
    pub fn quantile(&self, p: f64) -> f64 {
        let last = self.nodes.len() - 1;
        let (mut lo, mut hi) = if p <= self.cum[0] {
            let width = self.nodes[last] - self.nodes[0];
            let mut lo = self.nodes[0] - width;
            while self.cdf(lo) > p {
                lo -= width;
            }
            (lo, self.nodes[0])
        } else if p >= self.cum[last] {
            let width = self.nodes[last] - self.nodes[0];
            let mut hi = self.nodes[last] + width;
            while self.cdf(hi) < p {
                hi += width;
            }
            (self.nodes[last], hi)
        } else {
            let k = self.cum.partition_point(|&c| c <= p);
            (self.nodes[k - 1], self.nodes[k])
        };
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        let tol = 1e-15 * (hi - lo).abs().max(lo.abs()).max(hi.abs());
        roots::brent(|x| self.cdf(x) - p, lo, hi, tol, 0.0, 200).map_or(0.5 * (lo + hi), |r| r.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_law_has_half_at_mu() {
        let p = GhParams::gh(0.8, 2.0, 0.0, 0.7, 0.3).unwrap();
        let c = GhCdf::new(&p);
        assert!((c.cdf(0.3) - 0.5).abs() < 1e-12);
        assert!((c.cdf(0.3 + 0.9) + c.cdf(0.3 - 0.9) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn grid_node_next_to_singularity() {
        // With this law a grid node falls within rounding distance of mu.
        let p = GhParams::vg(0.4, 1.0, -0.3, 0.2).unwrap();
        let c = GhCdf::new(&p);
        let f = |t: f64| p.density(t);
        let direct = quad::integrate(&f, -80.0, 0.5, 1e-12, 1e-16).value;
        assert!((c.cdf(0.5) - direct).abs() < 1e-9);
    }

    #[test]
    fn monotone_and_bounded() {
        let p = GhParams::vg(0.4, 1.5, 0.5, 0.0).unwrap();
        let c = GhCdf::new(&p);
        let mut prev = 0.0;
        for k in -300..=300 {
            let v = c.cdf(k as f64 * 0.05);
            assert!(v >= prev - 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!(c.cdf(-1e3) < 1e-12 && c.cdf(1e3) > 1.0 - 1e-12);
    }

    #[test]
    fn quantile_inverts() {
        let p = GhParams::nig(1.5, -0.4, 0.8, 0.1).unwrap();
        let c = GhCdf::new(&p);
        for &q in &[1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((c.cdf(c.quantile(q)) - q).abs() < 1e-12, "q={q}");
        }
    }
}
