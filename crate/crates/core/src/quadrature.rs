//! Gauss-type rules on intervals and on the half-line.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Which rule to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureKind {
    /// Gauss-Legendre on `[lo, hi]`.
    Legendre { lo: f64, hi: f64 },
    /// Gauss-Legendre in `u` on `(0, 1)` mapped by `t = -scale * ln(1 - u)`.
    ExpMapped { scale: f64 },
    /// Gauss-Laguerre for `t = scale * x`, weights carry `e^x` so plain integrands work.
    Laguerre { scale: f64 },
    /// Gauss-Legendre in `ln t` on `[lo, hi]`.
    LogMapped { lo: f64, hi: f64 },
    /// Gauss-Legendre in `s` on `(-1, 1)` mapped by `t = (1 + s) / (1 - s)`.
    /// Node `n-1-i` is the reciprocal of node `i`.
    Reciprocal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Interval { lo: f64, hi: f64 },
    HalfLine,
}

impl QuadratureKind {
    pub fn support(&self) -> Support {
        match *self {
            QuadratureKind::Legendre { lo, hi } | QuadratureKind::LogMapped { lo, hi } => {
                Support::Interval { lo, hi }
            }
            _ => Support::HalfLine,
        }
    }
}

/// Nodes in ascending order with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub support: Support,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    pub fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| libm::sqrt(*w)).collect()
    }

    /// Rule built from explicit nodes and weights (ascending, positive).
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>, support: Support) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidParameter {
                name: "quadrature",
                reason: "nodes and weights must be non-empty and of equal length".into(),
            });
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "quadrature",
                reason: "nodes must ascend and weights must be positive".into(),
            });
        }
        Ok(QuadratureRule { nodes, weights, support })
    }

    /// Concatenation of rules on adjacent, non-overlapping pieces.
    pub fn concat(parts: &[QuadratureRule], support: Support) -> Result<Self> {
        let nodes = parts.iter().flat_map(|p| p.nodes.iter().copied()).collect();
        let weights = parts.iter().flat_map(|p| p.weights.iter().copied()).collect();
        Self::from_parts(nodes, weights, support)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = libm::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if libm::fabs(dz) < 1e-16 {
                break;
            }
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_on(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    (
        x.iter().map(|s| mid + half * s).collect(),
        w.iter().map(|v| half * v).collect(),
    )
}

// Newton on the Laguerre recurrence; weights are returned already multiplied by
// e^x. Past ~100 nodes the recurrence values overflow, so n is capped.
const LAGUERRE_MAX_NODES: usize = 100;

fn gauss_laguerre_scaled(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n > LAGUERRE_MAX_NODES {
        return Err(Error::InvalidParameter {
            name: "quadrature",
            reason: alloc::format!("Laguerre rule limited to {LAGUERRE_MAX_NODES} nodes, got {n}"),
        });
    }
    let nf = n as f64;
    let mut x: Vec<f64> = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2])
            }
        };
        let mut converged = false;
        let (mut p2, mut pp) = (0.0, 1.0);
        for _ in 0..200 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = (nf * p1 - nf * p2) / z;
            let dz = p1 / pp;
            z -= dz;
            if libm::fabs(dz) <= 1e-15 * z.max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence("Laguerre node iteration"));
        }
        x.push(z);
        w.push(-libm::exp(z) / (pp * nf * p2));
    }
    Ok((x, w))
}

/// Builds a rule of `n >= 2` nodes.
pub fn make_quadrature(kind: QuadratureKind, n: usize) -> Result<QuadratureRule> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "quadrature",
            reason: alloc::format!("need at least 2 nodes, got {n}"),
        });
    }
    let positive = |v: f64, what: &str| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "quadrature",
                reason: alloc::format!("{what} must be positive and finite, got {v}"),
            })
        }
    };
    let (nodes, weights) = match kind {
        QuadratureKind::Legendre { lo, hi } => {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "quadrature",
                    reason: alloc::format!("empty interval [{lo}, {hi}]"),
                });
            }
            legendre_on(lo, hi, n)
        }
        QuadratureKind::ExpMapped { scale } => {
            positive(scale, "scale")?;
            let (u, wu) = legendre_on(0.0, 1.0, n);
            let t = u.iter().map(|&u| -scale * libm::log1p(-u)).collect();
            let w = u.iter().zip(&wu).map(|(&u, &w)| scale * w / (1.0 - u)).collect();
            (t, w)
        }
        QuadratureKind::Laguerre { scale } => {
            positive(scale, "scale")?;
            let (x, w) = gauss_laguerre_scaled(n)?;
            (
                x.iter().map(|v| scale * v).collect(),
                w.iter().map(|v| scale * v).collect(),
            )
        }
        QuadratureKind::LogMapped { lo, hi } => {
            positive(lo, "lower end")?;
            positive(hi, "upper end")?;
            if !(lo < hi) {
                return Err(Error::InvalidParameter {
                    name: "quadrature",
                    reason: alloc::format!("empty interval [{lo}, {hi}]"),
                });
            }
            let (u, wu) = legendre_on(libm::log(lo), libm::log(hi), n);
            let t: Vec<f64> = u.iter().map(|&u| libm::exp(u)).collect();
            let w = t.iter().zip(&wu).map(|(&t, &w)| t * w).collect();
            (t, w)
        }
        QuadratureKind::Reciprocal => {
            let (s, ws) = gauss_legendre(n);
            let t = s.iter().map(|&s| (1.0 + s) / (1.0 - s)).collect();
            let w = s
                .iter()
                .zip(&ws)
                .map(|(&s, &w)| 2.0 * w / ((1.0 - s) * (1.0 - s)))
                .collect();
            (t, w)
        }
    };
    QuadratureRule::from_parts(nodes, weights, kind.support())
}

/// Composite Gauss-Legendre with `panels` equal panels of `order` nodes each.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, order: usize) -> Result<QuadratureRule> {
    if panels == 0 || order == 0 || !(lo < hi) {
        return Err(Error::InvalidParameter {
            name: "quadrature",
            reason: "composite rule needs panels, order >= 1 and lo < hi".into(),
        });
    }
    let h = (hi - lo) / panels as f64;
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (s, v) in x.iter().zip(&w) {
            nodes.push(a + 0.5 * h * (s + 1.0));
            weights.push(0.5 * h * v);
        }
    }
    QuadratureRule::from_parts(nodes, weights, Support::Interval { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_quartic() {
        let r = make_quadrature(QuadratureKind::Legendre { lo: 0.0, hi: 1.0 }, 5).unwrap();
        assert!((r.integrate(|x| x.powi(4)) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn legendre_weights_sum_to_length() {
        for n in [2, 3, 10, 57, 400] {
            let r = make_quadrature(QuadratureKind::Legendre { lo: -2.0, hi: 5.0 }, n).unwrap();
            assert!((r.weights.iter().sum::<f64>() - 7.0).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn halfline_exponentials() {
        let r = make_quadrature(QuadratureKind::ExpMapped { scale: 1.0 }, 60).unwrap();
        assert!((r.integrate(|t| libm::exp(-t)) - 1.0).abs() < 1e-8);
        assert!((r.integrate(|t| libm::exp(-2.0 * t)) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn halfline_error_decreases_with_nodes() {
        let errs: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&n| {
                let r = make_quadrature(QuadratureKind::ExpMapped { scale: 1.0 }, n).unwrap();
                (r.integrate(|t| t * libm::exp(-t)) - 1.0).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn laguerre_is_exact_for_polynomial_times_exponential() {
        let r = make_quadrature(QuadratureKind::Laguerre { scale: 1.0 }, 20).unwrap();
        // int t^3 e^-t = 6
        assert!((r.integrate(|t| t * t * t * libm::exp(-t)) - 6.0).abs() < 1e-10);
        assert!(make_quadrature(QuadratureKind::Laguerre { scale: 1.0 }, 101).is_err());
    }

    #[test]
    fn reciprocal_rule_is_symmetric() {
        let r = make_quadrature(QuadratureKind::Reciprocal, 40).unwrap();
        let n = r.len();
        for i in 0..n {
            assert!((r.nodes[i] * r.nodes[n - 1 - i] - 1.0).abs() < 1e-12);
            // w(1/t) = w(t) / t^2
            let t = r.nodes[i];
            assert!((r.weights[n - 1 - i] - r.weights[i] / (t * t)).abs() < 1e-10 * r.weights[n - 1 - i]);
        }
        assert!((r.integrate(|t| 1.0 / (1.0 + t * t)) - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn log_mapped_integrates_power() {
        let r = make_quadrature(QuadratureKind::LogMapped { lo: 1e-3, hi: 1e3 }, 80).unwrap();
        assert!((r.integrate(|t| 1.0 / t) - 2.0 * libm::log(1e3)).abs() < 1e-12);
    }

    #[test]
    fn rejects_single_node() {
        assert!(make_quadrature(QuadratureKind::ExpMapped { scale: 1.0 }, 1).is_err());
    }
}
