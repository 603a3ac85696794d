//! Variable-exponent primitives: exponent fields, grid functions, the
//! modular `I_p(u) = ∫ |u|^p` and the Luxemburg norm.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, Expression, Var};
use crate::quadrature::{default_config, QuadratureError, QuadratureRule, Singularity};
use crate::search::{golden_max, golden_min};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VexpError {
    #[error("invalid exponent field: {0}")]
    Exponent(String),
    #[error("invalid grid function: {0}")]
    Grid(String),
    #[error("negative value {value} at node {index} (t = {t}); cone candidates must be nonnegative")]
    Negative { index: usize, t: f64, value: f64 },
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Samples used when certifying exponent bounds.
const EXPONENT_SAMPLES: usize = 4097;
/// Slack allowed between declared and sampled exponent bounds.
const BOUND_SLACK: f64 = 1e-9;

pub const DEFAULT_NORM_TOL: f64 = 1e-10;
pub const MAX_BISECTION_ITERS: usize = 200;

/// A continuous exponent `p(·)` on `[0, 1]` with certified bracketing bounds.
///
/// `p_minus`/`p_plus` are the bounds used in every formula. They may be looser
/// than the sampled range (`tight_minus`/`tight_plus`), which is kept for
/// reporting.
#[derive(Clone)]
pub struct ExponentField {
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
    p_minus: f64,
    p_plus: f64,
    tight_minus: f64,
    tight_plus: f64,
}

impl fmt::Debug for ExponentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExponentField")
            .field("label", &self.label)
            .field("p_minus", &self.p_minus)
            .field("p_plus", &self.p_plus)
            .field("tight_minus", &self.tight_minus)
            .field("tight_plus", &self.tight_plus)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentBounds {
    pub p_minus: f64,
    pub p_plus: f64,
    pub tight_minus: f64,
    pub tight_plus: f64,
}

impl ExponentField {
    pub fn constant(p: f64) -> Result<Self, VexpError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(VexpError::Exponent(format!("constant exponent must be in (1, inf), got {p}")));
        }
        Ok(ExponentField {
            func: Arc::new(move |_| p),
            label: format!("{p:?}"),
            p_minus: p,
            p_plus: p,
            tight_minus: p,
            tight_plus: p,
        })
    }

    /// Builds a field from a closure, computing tight bounds by dense sampling
    /// with golden-section polish. `declared` bounds must bracket them.
    pub fn from_fn<F>(label: impl Into<String>, f: F, declared: Option<(f64, f64)>) -> Result<Self, VexpError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (tight_minus, tight_plus) = sampled_range(&f)?;
        let (p_minus, p_plus) = match declared {
            Some((lo, hi)) => {
                if !(lo <= hi) {
                    return Err(VexpError::Exponent(format!("declared p- = {lo} exceeds p+ = {hi}")));
                }
                if lo > tight_minus + BOUND_SLACK || hi < tight_plus - BOUND_SLACK {
                    return Err(VexpError::Exponent(format!(
                        "declared bounds [{lo}, {hi}] do not bracket the sampled range [{tight_minus}, {tight_plus}]"
                    )));
                }
                (lo, hi)
            }
            None => (tight_minus, tight_plus),
        };
        if !(p_minus > 1.0) || !p_plus.is_finite() {
            return Err(VexpError::Exponent(format!(
                "exponent bounds must satisfy 1 < p- <= p+ < inf, got [{p_minus}, {p_plus}]"
            )));
        }
        Ok(ExponentField {
            func: Arc::new(f),
            label: label.into(),
            p_minus,
            p_plus,
            tight_minus,
            tight_plus,
        })
    }

    pub fn from_expr(expr: &Expression, declared: Option<(f64, f64)>) -> Result<Self, VexpError> {
        expr.require_vars(&[Var::T])?;
        // Surface evaluation errors eagerly on the sampling grid.
        for i in 0..EXPONENT_SAMPLES {
            expr.eval_t(i as f64 / (EXPONENT_SAMPLES - 1) as f64)?;
        }
        let e = expr.clone();
        Self::from_fn(expr.source(), move |t| e.eval_t(t).unwrap_or(f64::NAN), declared)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.func)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn bounds(&self) -> ExponentBounds {
        ExponentBounds {
            p_minus: self.p_minus,
            p_plus: self.p_plus,
            tight_minus: self.tight_minus,
            tight_plus: self.tight_plus,
        }
    }

    /// Pointwise `factor · p(·)` with scaled bounds.
    ///
    /// Division (`factor < 1`) is how `p(·)/q` is built; the result must
    /// still have minimum above one.
    pub fn scale(&self, factor: f64) -> Result<Self, VexpError> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(VexpError::Exponent(format!("scale factor must be positive, got {factor}")));
        }
        let p_minus = self.p_minus * factor;
        if !(p_minus > 1.0) {
            return Err(VexpError::Exponent(format!(
                "scaled exponent minimum {p_minus} must exceed 1"
            )));
        }
        let inner = Arc::clone(&self.func);
        Ok(ExponentField {
            func: Arc::new(move |t| factor * inner(t)),
            label: format!("{factor:?}*({})", self.label),
            p_minus,
            p_plus: self.p_plus * factor,
            tight_minus: self.tight_minus * factor,
            tight_plus: self.tight_plus * factor,
        })
    }
}

pub fn scale_exponent(p: &ExponentField, factor: f64) -> Result<ExponentField, VexpError> {
    p.scale(factor)
}

fn sampled_range<F: Fn(f64) -> f64>(f: &F) -> Result<(f64, f64), VexpError> {
    let n = EXPONENT_SAMPLES;
    let h = 1.0 / (n - 1) as f64;
    let mut lo = (f64::INFINITY, 0usize);
    let mut hi = (f64::NEG_INFINITY, 0usize);
    for i in 0..n {
        let v = f(i as f64 * h);
        if !v.is_finite() {
            return Err(VexpError::Exponent(format!("p(t) is not finite at t = {}", i as f64 * h)));
        }
        if v < lo.0 {
            lo = (v, i);
        }
        if v > hi.0 {
            hi = (v, i);
        }
    }
    let bracket = |i: usize| {
        (
            (i.saturating_sub(1)) as f64 * h,
            ((i + 1).min(n - 1)) as f64 * h,
        )
    };
    let (a, b) = bracket(lo.1);
    let (_, vmin) = golden_min(f, a, b, 1e-12);
    let (a, b) = bracket(hi.1);
    let (_, vmax) = golden_max(f, a, b, 1e-12);
    Ok((lo.0.min(vmin), hi.0.max(vmax)))
}

/// A nonnegative continuous function on `[0, 1]`, stored as samples with
/// piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    /// 512 panels plus both endpoints.
    pub const DEFAULT_NODES: usize = 513;

    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self, VexpError> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(VexpError::Grid(format!(
                "need at least two nodes and one value per node (got {} nodes, {} values)",
                nodes.len(),
                values.len()
            )));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(VexpError::Grid("nodes must start at 0 and end at 1".into()));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(VexpError::Grid("nodes must be strictly increasing".into()));
        }
        for (i, (&t, &v)) in nodes.iter().zip(&values).enumerate() {
            if !v.is_finite() {
                return Err(VexpError::Grid(format!("value at node {i} (t = {t}) is not finite")));
            }
            if v < 0.0 {
                return Err(VexpError::Negative { index: i, t, value: v });
            }
        }
        Ok(GridFunction { nodes, values })
    }

    pub fn uniform_nodes(n: usize) -> Vec<f64> {
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        nodes[n - 1] = 1.0;
        nodes
    }

    /// Samples `f` on `n` uniform nodes.
    pub fn sample<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self, VexpError> {
        if n < 2 {
            return Err(VexpError::Grid("need at least two nodes".into()));
        }
        let nodes = Self::uniform_nodes(n);
        let values = nodes.iter().map(|&t| f(t)).collect();
        Self::new(nodes, values)
    }

    pub fn sample_on<F: Fn(f64) -> f64>(nodes: &[f64], f: F) -> Result<Self, VexpError> {
        Self::new(nodes.to_vec(), nodes.iter().map(|&t| f(t)).collect())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self, VexpError> {
        Self::sample(n, |_| c)
    }

    pub fn zero_like(&self) -> Self {
        GridFunction {
            nodes: self.nodes.clone(),
            values: vec![0.0; self.values.len()],
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Same nodes, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, VexpError> {
        Self::new(self.nodes.clone(), values)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.nodes.len();
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= 1.0 {
            return self.values[n - 1];
        }
        let j = self.nodes.partition_point(|&x| x <= t);
        // nodes[j-1] <= t < nodes[j]
        let (x0, x1) = (self.nodes[j - 1], self.nodes[j]);
        if t == x0 {
            return self.values[j - 1];
        }
        let w = (t - x0) / (x1 - x0);
        self.values[j - 1] + w * (self.values[j] - self.values[j - 1])
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Minimum of the interpolant over `[a, b]`.
    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        let mut m = self.eval(a).min(self.eval(b));
        for (&t, &v) in self.nodes.iter().zip(&self.values) {
            if t > a && t < b {
                m = m.min(v);
            }
        }
        m
    }

    /// `∫₀¹ u`, exact for the piecewise-linear interpolant.
    pub fn integral(&self) -> f64 {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self, VexpError> {
        self.with_values(self.values.iter().map(|v| c * v).collect())
    }

    /// Pointwise comparison at nodes (for grids sharing the same nodes).
    pub fn le_pointwise(&self, other: &GridFunction) -> bool {
        self.nodes == other.nodes && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

/// `u` and `p` sampled on the nodes of one quadrature rule, so the modular of
/// any multiple of `u` is a single weighted sum.
#[derive(Debug, Clone)]
pub struct ModularSampler {
    weights: Vec<f64>,
    u: Vec<f64>,
    p: Vec<f64>,
}

impl ModularSampler {
    pub fn new(u: &GridFunction, p: &ExponentField, rule: &QuadratureRule) -> Result<Self, VexpError> {
        let mut weights = Vec::with_capacity(rule.len());
        let mut us = Vec::with_capacity(rule.len());
        let mut ps = Vec::with_capacity(rule.len());
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let pv = p.eval(x);
            if !pv.is_finite() {
                return Err(QuadratureError::NonFinite { node: x, value: pv }.into());
            }
            weights.push(w);
            us.push(u.eval(x).abs());
            ps.push(pv);
        }
        Ok(ModularSampler { weights, u: us, p: ps })
    }

    /// `I_p(u / δ)`.
    pub fn modular_scaled(&self, delta: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.u)
            .zip(&self.p)
            .map(|((w, u), p)| if *u == 0.0 { 0.0 } else { w * (u / delta).powf(*p) })
            .sum()
    }

    pub fn modular(&self) -> f64 {
        self.modular_scaled(1.0)
    }

    fn exponent_range(&self) -> (f64, f64) {
        self.p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)))
    }

    /// Bisection on `δ ↦ I(u/δ)`, which is strictly decreasing.
    ///
    /// `sup_bound` must satisfy `I(u/sup_bound) <= 1`; `‖u‖∞` always does.
    pub fn luxemburg(&self, sup_bound: f64, tol: f64) -> Result<f64, VexpError> {
        if !(tol > 0.0) {
            return Err(VexpError::Tolerance(tol));
        }
        if sup_bound == 0.0 || self.u.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        let i0 = self.modular();
        let (pmin, pmax) = self.exponent_range();
        let mut lo = i0.powf(1.0 / pmin).min(i0.powf(1.0 / pmax)).min(sup_bound);
        let mut guard = 0;
        while self.modular_scaled(lo) < 1.0 && guard < 64 {
            lo *= 0.5;
            guard += 1;
        }
        let mut hi = sup_bound;
        if (self.modular_scaled(hi) - 1.0).abs() <= tol {
            return Ok(hi);
        }
        if (self.modular_scaled(lo) - 1.0).abs() <= tol {
            return Ok(lo);
        }
        let mut best = (f64::INFINITY, hi);
        for _ in 0..MAX_BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            let gap = self.modular_scaled(mid) - 1.0;
            if gap.abs() < best.0 {
                best = (gap.abs(), mid);
            }
            if gap.abs() <= tol || mid == lo || mid == hi {
                return Ok(mid);
            }
            if gap > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(best.1)
    }
}

fn default_rule() -> QuadratureRule {
    QuadratureRule::new(default_config(Singularity::None)).expect("default quadrature config is valid")
}

pub fn modular(u: &GridFunction, p: &ExponentField) -> Result<f64, VexpError> {
    Ok(ModularSampler::new(u, p, &default_rule())?.modular())
}

pub fn luxemburg_norm(u: &GridFunction, p: &ExponentField, tol: f64) -> Result<f64, VexpError> {
    luxemburg_norm_with(u, p, tol, &default_rule())
}

pub fn luxemburg_norm_with(
    u: &GridFunction,
    p: &ExponentField,
    tol: f64,
    rule: &QuadratureRule,
) -> Result<f64, VexpError> {
    if !(tol > 0.0) {
        return Err(VexpError::Tolerance(tol));
    }
    ModularSampler::new(u, p, rule)?.luxemburg(u.sup(), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormModularReport {
    pub norm: f64,
    pub modular: f64,
    /// Lower end of the comparison chain for the regime of `norm`.
    pub lower: f64,
    pub upper: f64,
    pub norm_at_least_one: bool,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

impl NormModularReport {
    pub fn pass(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Relative slack for comparing norm-derived powers against the modular.
const CHAIN_SLACK: f64 = 1e-8;

/// `‖u‖^{p⁻} ≤ I ≤ ‖u‖^{p⁺}` when `‖u‖ ≥ 1`, reversed when `‖u‖ ≤ 1`.
pub fn check_norm_modular_bounds(u: &GridFunction, p: &ExponentField) -> Result<NormModularReport, VexpError> {
    let rule = default_rule();
    let sampler = ModularSampler::new(u, p, &rule)?;
    let norm = sampler.luxemburg(u.sup(), DEFAULT_NORM_TOL)?;
    let modular = sampler.modular();
    let atleast = norm >= 1.0;
    let (lower, upper) = if atleast {
        (norm.powf(p.p_minus()), norm.powf(p.p_plus()))
    } else {
        (norm.powf(p.p_plus()), norm.powf(p.p_minus()))
    };
    let slack = |x: f64| CHAIN_SLACK * x.abs().max(1e-300);
    Ok(NormModularReport {
        norm,
        modular,
        lower,
        upper,
        norm_at_least_one: atleast,
        lower_holds: lower <= modular + slack(modular),
        upper_holds: modular <= upper + slack(upper),
    })
}
