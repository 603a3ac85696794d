//! The nonlocal functional `Φ(u) = ∫₀¹ b(1−s) u(s)^{p(s)} ds`, its kernel,
//! cone membership tests, `∂V̂_ρ` classification and the strict-inclusion
//! witness.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, Expression, Var};
use crate::greens::ConeConstants;
use crate::quadrature::{default_config, QuadratureConfig, QuadratureError, QuadratureRule, Singularity};
use crate::vexp::{luxemburg_norm_with, ExponentField, GridFunction, VexpError, DEFAULT_NORM_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonlocalError {
    #[error("kernel is not positive and finite at t = {t} (value {value})")]
    Kernel { t: f64, value: f64 },
    #[error("singular order must lie in [0, 1), got {0}")]
    SingularOrder(f64),
    #[error("integral of b^{exponent} does not converge under mesh refinement (estimates {estimates:?})")]
    Divergent { exponent: f64, estimates: [f64; 3] },
    #[error("rho must be positive, got {0}")]
    Rho(f64),
    #[error("cannot scale the zero function onto a level set")]
    ZeroFunction,
    #[error("infeasible witness parameters: {0}")]
    Witness(String),
    #[error(transparent)]
    Vexp(#[from] VexpError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Refinement factors for the integrability ratio test.
const LEVELS: [usize; 3] = [1, 2, 4];

/// The convolution weight `b`, positive on `(0, 1]`, possibly with
/// `b(t) ~ t^{−σ}` at the origin.
#[derive(Clone)]
pub struct Kernel {
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
    singular_order: f64,
    constant: Option<f64>,
    rules: Vec<QuadratureRule>,
    /// `b(1 − s_j)` at each rule's nodes, evaluated through the stored
    /// complements so no node collapses onto the singularity.
    b_values: Vec<Vec<f64>>,
    l1_norm: f64,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("label", &self.label)
            .field("singular_order", &self.singular_order)
            .field("l1_norm", &self.l1_norm)
            .finish()
    }
}

impl Kernel {
    pub fn constant(c: f64) -> Result<Self, NonlocalError> {
        let mut k = Self::from_fn(format!("{c:?}"), move |_| c, 0.0)?;
        k.constant = Some(c);
        Ok(k)
    }

    pub fn from_expr(expr: &Expression, singular_order: f64) -> Result<Self, NonlocalError> {
        expr.require_vars(&[Var::T])?;
        let e = expr.clone();
        Self::from_fn(expr.source(), move |t| e.eval_t(t).unwrap_or(f64::NAN), singular_order)
    }

    pub fn from_fn<F>(label: impl Into<String>, f: F, singular_order: f64) -> Result<Self, NonlocalError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(0.0..1.0).contains(&singular_order) {
            return Err(NonlocalError::SingularOrder(singular_order));
        }
        let base = default_config(Singularity::Right { order: singular_order });
        let mut rules = Vec::with_capacity(LEVELS.len());
        let mut b_values = Vec::with_capacity(LEVELS.len());
        for factor in LEVELS {
            let rule = QuadratureRule::new(base.refined(factor))?;
            let vals: Vec<f64> = rule.complements().iter().map(|&d| f(d)).collect();
            for (&d, &v) in rule.complements().iter().zip(&vals) {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(NonlocalError::Kernel { t: d, value: v });
                }
            }
            rules.push(rule);
            b_values.push(vals);
        }
        let mut k = Kernel {
            func: Arc::new(f),
            label: label.into(),
            singular_order,
            constant: None,
            rules,
            b_values,
            l1_norm: f64::NAN,
        };
        k.l1_norm = k.power_integral(1.0)?;
        Ok(k)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.func)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn singular_order(&self) -> f64 {
        self.singular_order
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    /// `(b ∗ 1)(1) = ∫₀¹ b`.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rules[0]
    }

    /// `b(1 − s_j)` on the base rule.
    pub fn weights_times_b(&self) -> Vec<f64> {
        self.rules[0].weights().iter().zip(&self.b_values[0]).map(|(w, b)| w * b).collect()
    }

    /// `∫₀¹ b^e`, accepted only if three successive mesh refinements agree
    /// or contract.
    pub fn power_integral(&self, exponent: f64) -> Result<f64, NonlocalError> {
        if let Some(c) = self.constant {
            return Ok(c.powf(exponent));
        }
        // b^e behaves like t^{−σe} at the origin.
        let effective = self.singular_order * exponent;
        if effective >= 1.0 {
            return Err(NonlocalError::Divergent { exponent, estimates: [f64::INFINITY; 3] });
        }
        let mut est = [0.0; 3];
        if effective > self.singular_order {
            // Panel grading and substitution compound to an error order of about
            // g²(1 − σe); keep it at the level the base rule gives for σ = 1/2.
            let g = (4.5 / (1.0 - effective)).sqrt().clamp(3.0, 8.0);
            let base = QuadratureConfig {
                grading_exponent: g,
                ..default_config(Singularity::Right { order: effective })
            };
            for (k, factor) in LEVELS.into_iter().enumerate() {
                let rule = QuadratureRule::new(base.refined(factor))?;
                est[k] = rule
                    .complements()
                    .iter()
                    .zip(rule.weights())
                    .map(|(&d, w)| w * self.eval(d).powf(exponent))
                    .sum();
            }
        } else {
            for (k, (rule, vals)) in self.rules.iter().zip(&self.b_values).enumerate() {
                est[k] = rule.weights().iter().zip(vals).map(|(w, b)| w * b.powf(exponent)).sum();
            }
        }
        if est.iter().any(|v| !v.is_finite()) {
            return Err(NonlocalError::Divergent { exponent, estimates: est });
        }
        let d1 = (est[1] - est[0]).abs();
        let d2 = (est[2] - est[1]).abs();
        let scale = est[2].abs().max(1.0);
        if d2 <= 1e-9 * scale || d2 <= 0.25 * d1 {
            Ok(est[2])
        } else {
            Err(NonlocalError::Divergent { exponent, estimates: est })
        }
    }
}

/// `Φ` specialised to one kernel and exponent: node positions, `w_j b_j` and
/// `p_j`, so each evaluation is a single pass.
#[derive(Debug, Clone)]
pub struct PhiEvaluator {
    nodes: Vec<f64>,
    wb: Vec<f64>,
    p: Vec<f64>,
}

impl PhiEvaluator {
    pub fn new(p: &ExponentField, k: &Kernel) -> Result<Self, NonlocalError> {
        let rule = k.rule();
        let mut ps = Vec::with_capacity(rule.len());
        for &x in rule.nodes() {
            let v = p.eval(x);
            if !v.is_finite() {
                return Err(QuadratureError::NonFinite { node: x, value: v }.into());
            }
            ps.push(v);
        }
        Ok(PhiEvaluator { nodes: rule.nodes().to_vec(), wb: k.weights_times_b(), p: ps })
    }

    fn samples(&self, u: &GridFunction) -> Vec<f64> {
        self.nodes.iter().map(|&x| u.eval(x)).collect()
    }

    pub fn eval(&self, u: &GridFunction) -> f64 {
        self.eval_scaled(&self.samples(u), 1.0)
    }

    fn eval_scaled(&self, samples: &[f64], c: f64) -> f64 {
        samples
            .iter()
            .zip(&self.wb)
            .zip(&self.p)
            .map(|((&u, &wb), &p)| if u == 0.0 { 0.0 } else { wb * (c * u).powf(p) })
            .sum()
    }

    /// The `c > 0` with `Φ(c·u₀) = ρ`, by bisection; `c ↦ Φ(c·u₀)` is
    /// continuous and strictly increasing for `u₀ ≢ 0`.
    pub fn boundary_scale(&self, u0: &GridFunction, rho: f64, tol: f64) -> Result<f64, NonlocalError> {
        if !(rho > 0.0) {
            return Err(NonlocalError::Rho(rho));
        }
        let samples = self.samples(u0);
        let at_one = self.eval_scaled(&samples, 1.0);
        if !(at_one > 0.0) {
            return Err(NonlocalError::ZeroFunction);
        }
        let band = tol * rho.max(1.0);
        let (mut lo, mut hi) = (1.0, 1.0);
        while self.eval_scaled(&samples, lo) > rho {
            lo *= 0.5;
        }
        while self.eval_scaled(&samples, hi) < rho {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.eval_scaled(&samples, mid);
            if (v - rho).abs() <= band || mid == lo || mid == hi {
                return Ok(mid);
            }
            if v < rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

pub fn phi(u: &GridFunction, p: &ExponentField, k: &Kernel) -> Result<f64, NonlocalError> {
    Ok(PhiEvaluator::new(p, k)?.eval(u))
}

/// `∂V̂_ρ` band: `|Φ − ρ| ≤ tol · max(1, ρ)`.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    Inside,
    Boundary,
    Outside,
}

/// Classifies `u` against `V̂_ρ` by `Φ(u)` versus `ρ`; `tol` is relative to
/// `max(1, ρ)`.
pub fn boundary_test(
    u: &GridFunction,
    rho: f64,
    p: &ExponentField,
    k: &Kernel,
    tol: f64,
) -> Result<BoundaryClass, NonlocalError> {
    if !(rho > 0.0) {
        return Err(NonlocalError::Rho(rho));
    }
    let v = phi(u, p, k)?;
    let band = tol * rho.max(1.0);
    Ok(if (v - rho).abs() <= band {
        BoundaryClass::Boundary
    } else if v < rho {
        BoundaryClass::Inside
    } else {
        BoundaryClass::Outside
    })
}

/// `c·u₀` with `Φ(c·u₀) = ρ`.
pub fn scale_to_boundary(
    u0: &GridFunction,
    rho: f64,
    p: &ExponentField,
    k: &Kernel,
    tol: f64,
) -> Result<GridFunction, NonlocalError> {
    let c = PhiEvaluator::new(p, k)?.boundary_scale(u0, rho, tol)?;
    Ok(u0.scaled(c)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeVerdict {
    pub member: bool,
    /// `min u`.
    pub nonnegativity: f64,
    /// `min_{[α,β]} u − η₀‖u‖∞`.
    pub plateau: f64,
    /// `∫u − C₀·‖u‖` with the cone's norm.
    pub coercivity: f64,
}

/// Margins within this multiple of `max(1, ‖u‖∞)` below zero still count.
const CONE_SLACK: f64 = 1e-12;

fn verdict(u: &GridFunction, cc: &ConeConstants, norm: f64) -> ConeVerdict {
    let sup = u.sup();
    let nonnegativity = u.values().iter().copied().fold(f64::INFINITY, f64::min);
    let plateau = u.min_on(cc.alpha, cc.beta) - cc.eta0 * sup;
    let coercivity = u.integral() - cc.c0 * norm;
    let slack = -CONE_SLACK * sup.max(1.0);
    ConeVerdict {
        member: nonnegativity >= 0.0 && plateau >= slack && coercivity >= slack,
        nonnegativity,
        plateau,
        coercivity,
    }
}

pub fn in_hybrid_cone(u: &GridFunction, cc: &ConeConstants, p: &ExponentField) -> Result<ConeVerdict, NonlocalError> {
    let rule = QuadratureRule::new(default_config(Singularity::None))?;
    in_hybrid_cone_with(u, cc, p, &rule)
}

pub fn in_hybrid_cone_with(
    u: &GridFunction,
    cc: &ConeConstants,
    p: &ExponentField,
    rule: &QuadratureRule,
) -> Result<ConeVerdict, NonlocalError> {
    let norm = luxemburg_norm_with(u, p, DEFAULT_NORM_TOL, rule)?;
    Ok(verdict(u, cc, norm))
}

pub fn in_sup_cone(u: &GridFunction, cc: &ConeConstants) -> ConeVerdict {
    verdict(u, cc, u.sup())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessParams {
    pub p_const: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    pub xi0: f64,
    pub ramp_width: f64,
}

impl WitnessParams {
    /// Midpoint of the admissible range for `m`.
    pub fn centred_m(p_const: f64, c0: f64, alpha: f64, beta: f64) -> f64 {
        let lo = c0.powf(p_const / (p_const - 1.0)).max(beta - alpha);
        0.5 * (lo + c0)
    }

    pub fn validate(&self) -> Result<(), NonlocalError> {
        let &WitnessParams { p_const: p, c0, alpha, beta, m, xi0, ramp_width } = self;
        let bad = |msg: String| Err(NonlocalError::Witness(msg));
        if !(p > 1.0) || !p.is_finite() {
            return bad(format!("exponent {p} must lie in (1, inf)"));
        }
        if !(c0 > 0.0 && c0 < 1.0) {
            return bad(format!("C0 = {c0} outside (0, 1)"));
        }
        if !(0.0 <= alpha && alpha < beta && beta <= 1.0) {
            return bad(format!("plateau [{alpha}, {beta}] is not a subinterval of [0, 1]"));
        }
        if !(xi0 > 0.0) || !xi0.is_finite() {
            return bad(format!("height {xi0} must be positive"));
        }
        if !(ramp_width > 0.0) {
            return bad(format!("ramp width {ramp_width} must be positive"));
        }
        let lo = c0.powf(p / (p - 1.0)).max(beta - alpha);
        if !(lo < m && m < c0) {
            return bad(format!("support measure m = {m} must satisfy {lo} < m < C0 = {c0}"));
        }
        Ok(())
    }
}

/// Support, plateau and closed-form norms of the trapezoid built from `wp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessShape {
    pub support: (f64, f64),
    pub plateau: (f64, f64),
    pub integral: f64,
    pub lp_norm: f64,
}

pub fn witness_shape(wp: &WitnessParams) -> Result<WitnessShape, NonlocalError> {
    wp.validate()?;
    let ext = 0.5 * (wp.m - (wp.beta - wp.alpha));
    let (mut a, mut b) = (wp.alpha - ext, wp.beta + ext);
    if a < 0.0 {
        a = 0.0;
        b = wp.m;
    } else if b > 1.0 {
        b = 1.0;
        a = 1.0 - wp.m;
    }
    let r = wp.ramp_width;
    // A ramp is dropped where the support reaches the end of [0, 1].
    let left = if a > 0.0 { r } else { 0.0 };
    let right = if b < 1.0 { r } else { 0.0 };
    let plateau = (a + left, b - right);
    if plateau.0 > wp.alpha || plateau.1 < wp.beta {
        return Err(NonlocalError::Witness(format!(
            "ramp width {r} does not fit between [{}, {}] and the support [{a}, {b}]",
            wp.alpha, wp.beta
        )));
    }
    let ramps = left + right;
    let integral = wp.m - 0.5 * ramps;
    let lp_norm = ((wp.m - ramps) + ramps / (wp.p_const + 1.0)).powf(1.0 / wp.p_const);
    if !(integral >= wp.c0 * lp_norm) {
        return Err(NonlocalError::Witness(format!(
            "ramps too wide: integral {integral} below C0 times the L^p norm {lp_norm}"
        )));
    }
    if !(integral < wp.c0) {
        return Err(NonlocalError::Witness(format!(
            "integral {integral} is not below C0; the witness would lie in the sup-norm cone"
        )));
    }
    Ok(WitnessShape { support: (a, b), plateau, integral: wp.xi0 * integral, lp_norm: wp.xi0 * lp_norm })
}

/// `ξ₀·φ` with `φ` a trapezoid: 1 on a plateau containing `[α, β]`, linear
/// ramps to 0 at the edges of a support interval of measure `m`.
pub fn build_witness(wp: &WitnessParams) -> Result<GridFunction, NonlocalError> {
    build_witness_on(wp, GridFunction::DEFAULT_NODES)
}

pub fn build_witness_on(wp: &WitnessParams, n: usize) -> Result<GridFunction, NonlocalError> {
    let shape = witness_shape(wp)?;
    let (a, b) = shape.support;
    let (c, d) = shape.plateau;
    let mut nodes = GridFunction::uniform_nodes(n.max(2));
    nodes.extend([a, b, c, d]);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let phi = |t: f64| {
        if t < a || t > b {
            0.0
        } else if t < c {
            (t - a) / (c - a)
        } else if t <= d {
            1.0
        } else {
            (b - t) / (b - d)
        }
    };
    Ok(GridFunction::sample_on(&nodes, |t| wp.xi0 * phi(t))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    fn rl_kernel() -> Kernel {
        let e = Expression::parse("t^(-1/2)/gamma(1/2)").unwrap();
        Kernel::from_expr(&e, 0.5).unwrap()
    }

    #[test]
    fn phi_examples() {
        let one = Kernel::constant(1.0).unwrap();
        let u1 = GridFunction::constant(513, 1.0).unwrap();
        let p2 = ExponentField::constant(2.0).unwrap();
        assert!((phi(&u1, &p2, &one).unwrap() - 1.0).abs() < 1e-14);
        let uc = GridFunction::constant(513, 1.7).unwrap();
        assert!((phi(&uc, &p2, &one).unwrap() - 2.89).abs() < 1e-13);
        let v = phi(&u1, &p2, &rl_kernel()).unwrap();
        assert!((v - 1.0 / gamma(1.5)).abs() < 1e-8, "{v}");
        assert!((rl_kernel().l1_norm() - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn kernel_rejections() {
        assert!(matches!(Kernel::constant(0.0), Err(NonlocalError::Kernel { .. })));
        assert!(Kernel::from_expr(&Expression::parse("t - 0.5").unwrap(), 0.0).is_err());
        assert!(matches!(Kernel::constant(1.0).map(|_| ()), Ok(())));
        assert!(Kernel::from_expr(&Expression::parse("1").unwrap(), 1.0).is_err());
    }

    #[test]
    fn power_integrals_and_divergence() {
        let k = rl_kernel();
        // ∫ (s^{-1/2}/√π)^{-2} = π/2.
        let v = k.power_integral(-2.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-9, "{v}");
        assert!(matches!(k.power_integral(2.0), Err(NonlocalError::Divergent { .. })));
        let smooth = Kernel::from_expr(&Expression::parse("1 + t").unwrap(), 0.0).unwrap();
        assert!((smooth.power_integral(2.0).unwrap() - 7.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_examples() {
        let one = Kernel::constant(1.0).unwrap();
        let p2 = ExponentField::constant(2.0).unwrap();
        let rho = 0.36;
        let u = GridFunction::constant(513, 0.6).unwrap();
        assert_eq!(boundary_test(&u, rho, &p2, &one, DEFAULT_BOUNDARY_TOL).unwrap(), BoundaryClass::Boundary);
        let z = GridFunction::constant(513, 0.0).unwrap();
        assert_eq!(boundary_test(&z, 1.0, &p2, &one, DEFAULT_BOUNDARY_TOL).unwrap(), BoundaryClass::Inside);
        let two = GridFunction::constant(513, 2.0).unwrap();
        assert_eq!(boundary_test(&two, 1.0, &p2, &one, DEFAULT_BOUNDARY_TOL).unwrap(), BoundaryClass::Outside);
        assert!(matches!(scale_to_boundary(&z, 1.0, &p2, &one, 1e-9), Err(NonlocalError::ZeroFunction)));
        let s = GridFunction::sample(513, |t| (std::f64::consts::PI * t).sin()).unwrap();
        let on = scale_to_boundary(&s, 3.0, &p2, &one, 1e-12).unwrap();
        assert!((phi(&on, &p2, &one).unwrap() - 3.0).abs() <= 3e-12);
    }

    fn cc(eta0: f64, c0: f64) -> ConeConstants {
        ConeConstants::new(0.25, 0.75, eta0, c0).unwrap()
    }

    #[test]
    fn cone_examples() {
        let p = ExponentField::constant(2.0).unwrap();
        let c = cc(0.25, 0.5);
        let one = GridFunction::constant(513, 1.0).unwrap();
        let v = in_hybrid_cone(&one, &c, &p).unwrap();
        assert!(v.member);
        assert!((v.nonnegativity - 1.0).abs() < 1e-15);
        assert!((v.plateau - 0.75).abs() < 1e-15);
        assert!((v.coercivity - 0.5).abs() < 1e-9);
        assert!(in_sup_cone(&one, &c).member);
        let z = GridFunction::constant(513, 0.0).unwrap();
        let v = in_hybrid_cone(&z, &c, &p).unwrap();
        assert!(v.member && v.plateau == 0.0 && v.coercivity == 0.0);
        // Tall narrow spike of height 1 and base 0.01.
        let spike = GridFunction::sample(1025, |t| (1.0 - (t - 0.5).abs() / 0.005).max(0.0)).unwrap();
        let v = in_sup_cone(&spike, &cc(0.01, 0.5));
        assert!(!v.member && v.coercivity < -0.49, "{v:?}");
    }

    #[test]
    fn witness_examples() {
        let wp = WitnessParams { p_const: 2.0, c0: 0.5, alpha: 0.4, beta: 0.5, m: 0.4, xi0: 1.0, ramp_width: 0.01 };
        let w = build_witness(&wp).unwrap();
        let c = ConeConstants::new(0.4, 0.5, 1.0, 0.5).unwrap();
        let p = ExponentField::constant(2.0).unwrap();
        let h = in_hybrid_cone(&w, &c, &p).unwrap();
        assert!(h.member, "{h:?}");
        let s = in_sup_cone(&w, &c);
        assert!(!s.member && s.coercivity <= -0.05);
        let shape = witness_shape(&wp).unwrap();
        assert!((w.integral() - shape.integral).abs() < 1e-12);
        assert_eq!(shape.support, (0.25, 0.65));

        let bad = WitnessParams { m: 0.6, ..wp };
        assert!(matches!(build_witness(&bad), Err(NonlocalError::Witness(_))));

        let m = WitnessParams::centred_m(3.0, 0.4, 0.45, 0.5);
        assert!((m - (0.4f64.powf(1.5) + 0.4) / 2.0).abs() < 1e-15);
        let wp3 = WitnessParams { p_const: 3.0, c0: 0.4, alpha: 0.45, beta: 0.5, m, xi0: 2.0, ramp_width: 0.01 };
        let w3 = build_witness(&wp3).unwrap();
        let c3 = ConeConstants::new(0.45, 0.5, 1.0, 0.4).unwrap();
        let p3 = ExponentField::constant(3.0).unwrap();
        assert!(in_hybrid_cone(&w3, &c3, &p3).unwrap().member);
        assert!(!in_sup_cone(&w3, &c3).member);
    }

    #[test]
    fn witness_clipped_at_left_end() {
        let wp = WitnessParams { p_const: 2.0, c0: 0.5, alpha: 0.0, beta: 0.1, m: 0.4, xi0: 1.0, ramp_width: 0.01 };
        let shape = witness_shape(&wp).unwrap();
        assert_eq!(shape.support, (0.0, 0.4));
        assert_eq!(shape.plateau.0, 0.0);
    }
}
