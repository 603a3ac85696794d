//! Composite Gauss–Legendre quadrature on `[0, 1]` with optional grading
//! toward one singular endpoint.
//!
//! With `grading_exponent = g > 1` and a declared singular end, the panel
//! breakpoints are placed at `τ_i = (i/n)^g` in a reference variable and the
//! physical abscissa is `x = τ^g` (mirrored for the right end). Both the
//! panel placement and the polynomial change of variables cluster nodes at
//! the singular end, and the Jacobian `g τ^{g-1}` flattens power-law
//! singularities `x^{-σ}` with `σ < 1`. Nodes are always interior, so an
//! endpoint singularity is never sampled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integrand is not finite at node x = {node} (value {value})")]
    NonFinite { node: f64, value: f64 },
    #[error("invalid quadrature configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularEnd {
    Left,
    Right,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub grading_exponent: f64,
    pub singular_end: SingularEnd,
}

impl QuadratureConfig {
    pub const DEFAULT_PANELS: usize = 64;
    pub const DEFAULT_NODES: usize = 8;
    pub const DEFAULT_GRADING: f64 = 3.0;

    pub fn uniform(panels: usize, nodes_per_panel: usize) -> Self {
        QuadratureConfig {
            panels,
            nodes_per_panel,
            grading_exponent: 1.0,
            singular_end: SingularEnd::None,
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.panels * self.nodes_per_panel
    }

    /// Same node distribution family with `factor` times as many panels.
    pub fn refined(&self, factor: usize) -> Self {
        QuadratureConfig {
            panels: self.panels * factor,
            ..*self
        }
    }

    fn validate(&self) -> Result<(), QuadratureError> {
        if self.panels == 0 || self.nodes_per_panel == 0 {
            return Err(QuadratureError::Config(
                "panels and nodes_per_panel must be positive".into(),
            ));
        }
        if !(self.grading_exponent >= 1.0) || !self.grading_exponent.is_finite() {
            return Err(QuadratureError::Config(format!(
                "grading exponent must be a finite real >= 1, got {}",
                self.grading_exponent
            )));
        }
        Ok(())
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig::uniform(Self::DEFAULT_PANELS, Self::DEFAULT_NODES)
    }
}

/// Where the integrand may blow up, as declared by kernel metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Singularity {
    None,
    /// `f(x) ~ x^{-order}` near `x = 0`.
    Left { order: f64 },
    /// `f(x) ~ (1-x)^{-order}` near `x = 1`.
    Right { order: f64 },
}

/// 64 panels × 8 nodes; grading 3 toward a declared singular end.
pub fn default_config(singularity: Singularity) -> QuadratureConfig {
    let (end, graded) = match singularity {
        Singularity::None => (SingularEnd::None, false),
        Singularity::Left { order } => (SingularEnd::Left, order > 0.0),
        Singularity::Right { order } => (SingularEnd::Right, order > 0.0),
    };
    if !graded {
        return QuadratureConfig::default();
    }
    QuadratureConfig {
        panels: QuadratureConfig::DEFAULT_PANELS,
        nodes_per_panel: QuadratureConfig::DEFAULT_NODES,
        grading_exponent: QuadratureConfig::DEFAULT_GRADING,
        singular_end: end,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
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

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A materialised node/weight set for a configuration on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    config: QuadratureConfig,
    nodes: Vec<f64>,
    /// `1 - node`, carried separately so that nodes clustered at `x = 1`
    /// keep their distance to the endpoint exactly.
    complements: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(config: QuadratureConfig) -> Result<Self, QuadratureError> {
        config.validate()?;
        let (gx, gw) = gauss_legendre(config.nodes_per_panel);
        let n = config.panels;
        let graded = config.singular_end != SingularEnd::None && config.grading_exponent > 1.0;
        let g = if graded { config.grading_exponent } else { 1.0 };
        let mut nodes = Vec::with_capacity(config.total_nodes());
        let mut weights = Vec::with_capacity(config.total_nodes());
        for k in 0..n {
            let a = (k as f64 / n as f64).powf(g);
            let b = ((k + 1) as f64 / n as f64).powf(g);
            let half = 0.5 * (b - a);
            for (xi, wi) in gx.iter().zip(&gw) {
                let tau = a + half * (xi + 1.0);
                let (x, jac) = if graded {
                    (tau.powf(g), g * tau.powf(g - 1.0))
                } else {
                    (tau, 1.0)
                };
                nodes.push(x);
                weights.push(wi * half * jac);
            }
        }
        let mut complements: Vec<f64> = nodes.iter().map(|x| 1.0 - x).collect();
        if config.singular_end == SingularEnd::Right && graded {
            std::mem::swap(&mut nodes, &mut complements);
            nodes.reverse();
            complements.reverse();
            weights.reverse();
        }
        Ok(QuadratureRule {
            config,
            nodes,
            complements,
            weights,
        })
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn complements(&self) -> &[f64] {
        &self.complements
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64, QuadratureError> {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(QuadratureError::NonFinite { node: x, value: v });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Fallible integrand variant; the first error short-circuits.
    pub fn try_integrate<F, E>(&self, f: F) -> Result<f64, E>
    where
        F: Fn(f64) -> Result<f64, E>,
        E: From<QuadratureError>,
    {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x)?;
            if !v.is_finite() {
                return Err(QuadratureError::NonFinite { node: x, value: v }.into());
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<f64, QuadratureError> {
    QuadratureRule::new(*cfg)?.integrate(f)
}

/// Uniform composite Gauss–Legendre on an arbitrary interval `[a, b]`.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    gl: &(Vec<f64>, Vec<f64>),
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let half = 0.5 * h;
        for (xi, wi) in gl.0.iter().zip(&gl.1) {
            acc += wi * half * f(lo + half * (xi + 1.0));
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn unit_measure_and_linear() {
        let cfg = QuadratureConfig::default();
        assert!(rel(integrate(|_| 1.0, &cfg).unwrap(), 1.0) < 1e-14);
        assert!(rel(integrate(|t| t, &cfg).unwrap(), 0.5) < 1e-14);
    }

    #[test]
    fn left_singularity_inverse_sqrt() {
        let cfg = default_config(Singularity::Left { order: 0.5 });
        assert_eq!(cfg.grading_exponent, 3.0);
        assert_eq!(cfg.singular_end, SingularEnd::Left);
        let v = integrate(|t| t.powf(-0.5), &cfg).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn right_singularity_is_mirror() {
        let cfg = default_config(Singularity::Right { order: 0.5 });
        assert_eq!(cfg.singular_end, SingularEnd::Right);
        let rule = QuadratureRule::new(cfg).unwrap();
        assert!(rule.complements().iter().all(|&d| d > 0.0 && d < 1.0));
        let via_complement: f64 = rule
            .complements()
            .iter()
            .zip(rule.weights())
            .map(|(d, w)| w * d.powf(-0.5))
            .sum();
        assert!((via_complement - 2.0).abs() < 1e-10, "{via_complement}");
        assert!(rule.nodes().windows(2).all(|w| w[0] <= w[1]));
        assert!(rule.complements().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn power_singularities_other_orders() {
        let cfg = default_config(Singularity::Left { order: 0.6 });
        for sigma in [0.1, 0.25, 0.5, 0.6] {
            let exact = 1.0 / (1.0 - sigma);
            let v = integrate(|t| t.powf(-sigma), &cfg).unwrap();
            assert!(rel(v, exact) < 1e-8, "sigma={sigma} v={v}");
        }
    }

    #[test]
    fn default_config_without_singularity_is_uniform() {
        let cfg = default_config(Singularity::None);
        assert_eq!(cfg.total_nodes(), 512);
        assert_eq!(cfg.grading_exponent, 1.0);
        assert_eq!(cfg.singular_end, SingularEnd::None);
    }

    #[test]
    fn exactness_degrees_0_to_7_with_4_nodes() {
        let cfg = QuadratureConfig::uniform(1, 4);
        for d in 0..=7 {
            let v = integrate(|t| t.powi(d), &cfg).unwrap();
            let exact = 1.0 / (d as f64 + 1.0);
            assert!(rel(v, exact) < 1e-13, "degree {d}");
        }
        let cfg = QuadratureConfig::uniform(5, 4);
        for d in 0..=7 {
            let v = integrate(|t| (t - 0.3).powi(d), &cfg).unwrap();
            let exact = (0.7f64.powi(d + 1) - (-0.3f64).powi(d + 1)) / (d as f64 + 1.0);
            assert!((v - exact).abs() < 1e-13 * exact.abs().max(1.0), "degree {d}");
        }
    }

    #[test]
    fn convergence_under_panel_halving() {
        let exact = std::f64::consts::E - 1.0;
        let mut prev = f64::INFINITY;
        for panels in [1, 2, 4, 8] {
            let err = (integrate(f64::exp, &QuadratureConfig::uniform(panels, 2)).unwrap() - exact).abs();
            if prev > 1e-14 {
                assert!(err <= prev / 10.0 || err < 1e-14, "panels={panels} err={err} prev={prev}");
            }
            prev = err;
        }
    }

    #[test]
    fn nonfinite_integrand_names_node() {
        let err = integrate(|t| if t > 0.5 { f64::NAN } else { 1.0 }, &QuadratureConfig::default())
            .unwrap_err();
        match err {
            QuadratureError::NonFinite { node, .. } => assert!(node > 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(QuadratureRule::new(QuadratureConfig::uniform(0, 8)).is_err());
        let c = QuadratureConfig { grading_exponent: 0.5, ..Default::default() };
        assert!(QuadratureRule::new(c).is_err());
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14, "n={n}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }
}
