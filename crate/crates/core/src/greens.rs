//! Green's functions on `[0, 1]²` and the cone constants `η₀`, `C₀`.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, Expression, Var};
use crate::quadrature::{gauss_legendre, integrate_interval};
use crate::search::{golden_min, grid_max, grid_min};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GreensError {
    #[error("argument ({t}, {s}) outside [0,1]^2")]
    Domain { t: f64, s: f64 },
    #[error("invalid interval [{alpha}, {beta}]; need 0 <= alpha < beta <= 1")]
    Interval { alpha: f64, beta: f64 },
    #[error("Green's function is negative ({value}) at (t, s) = ({t}, {s})")]
    Negative { t: f64, s: f64, value: f64 },
    #[error("structural hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenKind {
    Dirichlet,
    RightFocal,
    Custom,
}

#[derive(Debug, Clone)]
pub struct GreensFunction {
    kind: GreenKind,
    custom: Option<Expression>,
}

/// Points per axis for the nonnegativity screen of a custom G.
const SCREEN: usize = 65;
/// s-grid for infima over `(0, 1)`.
const S_GRID: usize = 4097;
/// t-grid for maxima and minima in t.
const T_GRID: usize = 1025;
/// Closest approach to `s ∈ {0, 1}` in end refinement.
const END_GAP: f64 = 1e-12;
const POLISH_TOL: f64 = 1e-12;

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(8))
}

impl GreensFunction {
    pub fn dirichlet() -> Self {
        GreensFunction { kind: GreenKind::Dirichlet, custom: None }
    }

    pub fn right_focal() -> Self {
        GreensFunction { kind: GreenKind::RightFocal, custom: None }
    }

    /// A user-supplied G as an expression in `t` and `s`, screened for
    /// evaluability and nonnegativity on a grid.
    pub fn custom(expr: Expression) -> Result<Self, GreensError> {
        expr.require_vars(&[Var::T, Var::S])?;
        for i in 0..SCREEN {
            for j in 0..SCREEN {
                let t = i as f64 / (SCREEN - 1) as f64;
                let s = j as f64 / (SCREEN - 1) as f64;
                let v = expr.eval_ts(t, s)?;
                if v < 0.0 {
                    return Err(GreensError::Negative { t, s, value: v });
                }
            }
        }
        Ok(GreensFunction { kind: GreenKind::Custom, custom: Some(expr) })
    }

    pub fn kind(&self) -> GreenKind {
        self.kind
    }

    pub fn custom_expr(&self) -> Option<&Expression> {
        self.custom.as_ref()
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64, GreensError> {
        if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&s) {
            return Err(GreensError::Domain { t, s });
        }
        match &self.custom {
            Some(e) => {
                let v = e.eval_ts(t, s)?;
                if v < 0.0 {
                    return Err(GreensError::Negative { t, s, value: v });
                }
                Ok(v)
            }
            None => Ok(self.value(t, s)),
        }
    }

    /// Unchecked evaluation for internal loops; arguments are in range and
    /// custom evaluation failures (screened at construction) map to NaN.
    pub(crate) fn value(&self, t: f64, s: f64) -> f64 {
        match self.kind {
            GreenKind::Dirichlet => {
                if t <= s {
                    t * (1.0 - s)
                } else {
                    s * (1.0 - t)
                }
            }
            GreenKind::RightFocal => t.min(s),
            GreenKind::Custom => self
                .custom
                .as_ref()
                .and_then(|e| e.eval_ts(t, s).ok())
                .unwrap_or(f64::NAN),
        }
    }

    /// `𝒢(s) = max_t G(t, s)`.
    pub fn script_g(&self, s: f64) -> f64 {
        let (_, grid) = grid_max(|t| self.value(t, s), 0.0, 1.0, T_GRID, POLISH_TOL);
        grid.max(self.value(s, s))
    }

    /// `min_{t ∈ [α, β]} G(t, s)`.
    pub fn min_t_on(&self, s: f64, alpha: f64, beta: f64) -> f64 {
        let n = 257;
        let (_, m) = grid_min(|t| self.value(t, s), alpha, beta, n, POLISH_TOL);
        let mut m = m.min(self.value(alpha, s)).min(self.value(beta, s));
        if s > alpha && s < beta {
            m = m.min(self.value(s, s));
        }
        m
    }

    /// `∫_a^b G(t, s) ds`, with a panel break at the kink `s = t`.
    pub fn int_g(&self, t: f64, a: f64, b: f64) -> Result<f64, GreensError> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(GreensError::Interval { alpha: a, beta: b });
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(GreensError::Domain { t, s: a });
        }
        Ok(self.int_g_unchecked(t, a, b))
    }

    fn int_g_unchecked(&self, t: f64, a: f64, b: f64) -> f64 {
        let f = |s: f64| self.value(t, s);
        let panels = if self.kind == GreenKind::Custom { 16 } else { 1 };
        if t > a && t < b {
            integrate_interval(f, a, t, panels, gl8()) + integrate_interval(f, t, b, panels, gl8())
        } else {
            integrate_interval(f, a, b, panels, gl8())
        }
    }

    /// `∫₀¹ G(t, s) dt` for fixed `s`.
    pub fn int_g_dt(&self, s: f64) -> f64 {
        let f = |t: f64| self.value(t, s);
        let panels = if self.kind == GreenKind::Custom { 16 } else { 1 };
        integrate_interval(f, 0.0, s, panels, gl8()) + integrate_interval(f, s, 1.0, panels, gl8())
    }
}

pub fn eval_g(g: &GreensFunction, t: f64, s: f64) -> Result<f64, GreensError> {
    g.eval(t, s)
}

pub fn script_g(g: &GreensFunction, s: f64) -> f64 {
    g.script_g(s)
}

pub fn int_g(g: &GreensFunction, t: f64, a: f64, b: f64) -> Result<f64, GreensError> {
    g.int_g(t, a, b)
}

/// Infimum of `ratio` over `s ∈ (0, 1)`: dense grid, golden polish around the
/// best interior sample, and a push toward whichever end is lowest.
fn inf_over_open_unit<F>(ratio: F) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = S_GRID;
    let h = 1.0 / (n - 1) as f64;
    let samples: Vec<(usize, f64)> = (1..n - 1)
        .into_par_iter()
        .map(|i| (i, ratio(i as f64 * h)))
        .collect();
    let (bi, bv) = samples
        .iter()
        .copied()
        .fold((1, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut best = (bi as f64 * h, bv);
    let lo = if bi == 1 { END_GAP } else { (bi - 1) as f64 * h };
    let hi = if bi == n - 2 { 1.0 - END_GAP } else { (bi + 1) as f64 * h };
    let polished = golden_min(&ratio, lo, hi, POLISH_TOL);
    if polished.1 < best.1 {
        best = polished;
    }
    // The infimum of an endpoint-monotone ratio sits at s → 0 or s → 1 even
    // when an interior sample wins on the grid.
    for (a, b) in [(END_GAP, h), (1.0 - h, 1.0 - END_GAP)] {
        let cand = golden_min(&ratio, a, b, POLISH_TOL);
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeConstants {
    pub alpha: f64,
    pub beta: f64,
    pub eta0: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
}

impl ConeConstants {
    pub fn new(alpha: f64, beta: f64, eta0: f64, c0: f64) -> Result<Self, GreensError> {
        if !(0.0 <= alpha && alpha < beta && beta <= 1.0) {
            return Err(GreensError::Interval { alpha, beta });
        }
        if !(eta0 > 0.0 && eta0 <= 1.0) {
            return Err(GreensError::Hypothesis(format!("eta0 = {eta0} outside (0, 1]")));
        }
        if !(c0 > 0.0 && c0 < 1.0) {
            return Err(GreensError::Hypothesis(format!("C0 = {c0} outside (0, 1)")));
        }
        Ok(ConeConstants { alpha, beta, eta0, c0 })
    }

    pub fn compute(g: &GreensFunction, alpha: f64, beta: f64) -> Result<Self, GreensError> {
        let eta0 = compute_eta0(g, alpha, beta)?;
        let c0 = compute_c0(g)?;
        Self::new(alpha, beta, eta0, c0)
    }
}

/// Raw infimum of `min_{[α,β]} G(·, s) / 𝒢(s)` over `s ∈ (0, 1)`, unclamped.
pub fn eta0_ratio_inf(g: &GreensFunction, alpha: f64, beta: f64) -> Result<f64, GreensError> {
    if !(0.0 <= alpha && alpha < beta && beta <= 1.0) {
        return Err(GreensError::Interval { alpha, beta });
    }
    let (_, v) = inf_over_open_unit(|s| g.min_t_on(s, alpha, beta) / g.script_g(s));
    Ok(v)
}

pub fn compute_eta0(g: &GreensFunction, alpha: f64, beta: f64) -> Result<f64, GreensError> {
    let v = eta0_ratio_inf(g, alpha, beta)?;
    if !(v > 0.0) {
        return Err(GreensError::Hypothesis(format!(
            "eta0 = {v} is not positive on [{alpha}, {beta}]"
        )));
    }
    Ok(v.min(1.0))
}

/// Raw infimum of `∫₀¹ G(t, s) dt / 𝒢(s)` over `s ∈ (0, 1)`.
pub fn c0_ratio_inf(g: &GreensFunction) -> f64 {
    inf_over_open_unit(|s| g.int_g_dt(s) / g.script_g(s)).1
}

pub fn compute_c0(g: &GreensFunction) -> Result<f64, GreensError> {
    let v = c0_ratio_inf(g);
    if !(v > 0.0 && v < 1.0) {
        return Err(GreensError::Hypothesis(format!("C0 = {v} outside (0, 1)")));
    }
    Ok(v)
}

/// `sup_t ∫_a^b G(t, s) ds`.
pub fn sup_int_g(g: &GreensFunction, a: f64, b: f64) -> Result<f64, GreensError> {
    g.int_g(0.5, a, b)?;
    Ok(grid_max(|t| g.int_g_unchecked(t, a, b), 0.0, 1.0, T_GRID, POLISH_TOL).1)
}

/// `inf_{t ∈ [c, d]} ∫_a^b G(t, s) ds`.
pub fn inf_int_g(g: &GreensFunction, t_lo: f64, t_hi: f64, a: f64, b: f64) -> Result<f64, GreensError> {
    g.int_g(t_lo, a, b)?;
    if !(t_lo <= t_hi && t_hi <= 1.0) {
        return Err(GreensError::Interval { alpha: t_lo, beta: t_hi });
    }
    Ok(grid_min(|t| g.int_g_unchecked(t, a, b), t_lo, t_hi, T_GRID, POLISH_TOL).1)
}
