//! Hypothesis checks, the two existence conditions, their inversion into
//! thresholds on `λ·f`, and the certified Luxemburg-norm annulus.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{self, BoundsError, BoundsLedger};
use crate::expr::{ExprError, Expression, Var};
use crate::greens::{self, ConeConstants, GreenKind, GreensError, GreensFunction};
use crate::nonlocal::{Kernel, NonlocalError};
use crate::quadrature::{gauss_legendre, integrate_interval};
use crate::search::{rect_max, rect_min, Rect};
use crate::vexp::{luxemburg_norm, ExponentBounds, ExponentField, GridFunction, VexpError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExistenceError {
    #[error("invalid problem: {0}")]
    Config(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Vexp(#[from] VexpError),
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Luxemburg-norm bisection: `|I(u/δ) − 1| ≤ norm`.
    pub norm: f64,
    /// `∂V̂_ρ` band, relative to `max(1, ρ)`.
    pub boundary: f64,
    /// Fixed-point residual `‖u − Tu‖∞`.
    pub solve: f64,
    /// `C` in the differential residual bound `C·h²`.
    pub residual_constant: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { norm: 1e-10, boundary: 1e-9, solve: 1e-10, residual_constant: 100.0 }
    }
}

/// A value printed as a decimal next to the closed form it abbreviates.
#[derive(Debug, Clone)]
pub struct PrintedValue {
    pub expr: Expression,
    pub printed: f64,
}

/// Old sup-norm framework thresholds, for the comparison block.
#[derive(Debug, Clone)]
pub struct ComparisonSpec {
    pub old_threshold_min: PrintedValue,
    pub old_threshold_max: PrintedValue,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub a: Expression,
    pub f: Expression,
    pub lambda: f64,
    pub p: ExponentField,
    pub kernel: Kernel,
    pub green: GreensFunction,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub b_bounds: Option<(f64, f64)>,
    pub grid_nodes: usize,
    pub tolerances: Tolerances,
    pub comparison: Option<ComparisonSpec>,
}

/// Points used to certify `A > 0` on `[ρ₁, ρ₂]`.
const A_SAMPLES: usize = 10_001;
/// Per-axis grid for `f ≥ 0` screening.
const F_SCREEN: usize = 65;
/// Per-axis grid for `f^m`, `f^M` before polishing.
const F_EXTREMA_GRID: usize = 256;

impl ProblemSpec {
    /// `0.999·p⁻ + 0.001`, just inside `(1, p⁻)`.
    pub fn default_q(p: &ExponentField) -> f64 {
        0.999 * p.p_minus() + 0.001
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Expression,
        f: Expression,
        lambda: f64,
        p: ExponentField,
        kernel: Kernel,
        green: GreensFunction,
        alpha: f64,
        beta: f64,
        q: Option<f64>,
        rho1: f64,
        rho2: f64,
    ) -> Result<Self, ExistenceError> {
        let b_bounds = kernel.constant_value().map(|c| (c, c));
        let q = q.unwrap_or_else(|| Self::default_q(&p));
        let spec = ProblemSpec {
            a,
            f,
            lambda,
            p,
            kernel,
            green,
            alpha,
            beta,
            q,
            rho1,
            rho2,
            b_bounds,
            grid_nodes: GridFunction::DEFAULT_NODES,
            tolerances: Tolerances::default(),
            comparison: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ExistenceError> {
        let bad = |m: String| Err(ExistenceError::Config(m));
        self.a.require_vars(&[Var::T])?;
        self.f.require_vars(&[Var::T, Var::U])?;
        for (name, v) in [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("q", self.q),
            ("rho1", self.rho1),
            ("rho2", self.rho2),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(self.lambda > 0.0) {
            return bad(format!("lambda = {} must be positive", self.lambda));
        }
        if !(0.0 <= self.alpha && self.alpha < self.beta && self.beta <= 1.0) {
            return bad(format!("need 0 <= alpha < beta <= 1, got [{}, {}]", self.alpha, self.beta));
        }
        if !(0.0 < self.rho1 && self.rho1 < self.rho2) {
            return bad(format!("need 0 < rho1 < rho2, got ({}, {})", self.rho1, self.rho2));
        }
        if !(self.q > 1.0 && self.q < self.p.p_minus()) {
            return bad(format!("q = {} must lie in (1, p-) = (1, {})", self.q, self.p.p_minus()));
        }
        if let Some((lo, hi)) = self.b_bounds {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!("b_bounds must satisfy 0 < b_* <= b^*, got [{lo}, {hi}]"));
            }
        }
        if self.grid_nodes < 3 {
            return bad(format!("grid_nodes = {} is too small", self.grid_nodes));
        }
        let t = &self.tolerances;
        if !(t.norm > 0.0 && t.boundary > 0.0 && t.solve > 0.0 && t.residual_constant > 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn with_q(&self, q: f64) -> Result<Self, ExistenceError> {
        let mut s = self.clone();
        s.q = q;
        s.validate()?;
        Ok(s)
    }

    pub fn eval_a(&self, x: f64) -> Result<f64, ExprError> {
        self.a.eval_t(x)
    }

    pub fn eval_f(&self, t: f64, u: f64) -> Result<f64, ExprError> {
        self.f.eval_tu(t, u)
    }

    fn f_or_nan(&self, t: f64, u: f64) -> f64 {
        self.f.eval_tu(t, u).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisItem {
    pub id: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub pass: bool,
    pub items: Vec<HypothesisItem>,
    pub exponent_bounds: ExponentBounds,
    pub kernel_l1_norm: f64,
}

impl HypothesisReport {
    pub fn failures(&self) -> Vec<&HypothesisItem> {
        self.items.iter().filter(|i| !i.pass).collect()
    }
}

fn item(id: &str, pass: bool, value: Option<f64>, detail: String) -> HypothesisItem {
    HypothesisItem { id: id.into(), pass, value, detail }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    PMinus,
    PPlus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub pass: bool,
    pub lhs: Option<f64>,
    pub rhs: f64,
    pub branch: Option<Branch>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CapSource {
    BConsolidated,
    BStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenIntegrals {
    /// `inf_{t∈[α,β]} ∫_α^β G(t,s) ds`.
    pub inf_int_alpha_beta: f64,
    /// `sup_t ∫_α^β G(t,s) ds`.
    pub sup_int_alpha_beta: f64,
    /// `sup_t ∫₀¹ G(t,s) ds`.
    pub sup_int_unit: f64,
    /// `∫_α^β 𝒢(s) ds`.
    pub int_script_g_alpha_beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerReport {
    #[serde(rename = "N1")]
    pub n1: f64,
    #[serde(rename = "Y1")]
    pub y1: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    pub refinement_holds: bool,
    pub f_m: f64,
    pub f_m_at: [f64; 2],
    pub rectangle: Rect,
    pub cap_source: CapSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterReport {
    #[serde(rename = "f_M")]
    pub f_max: f64,
    #[serde(rename = "f_M_at")]
    pub f_max_at: [f64; 2],
    pub rectangle: Rect,
    pub cap_source: CapSource,
    /// `‖∫₀¹G(·,s)ds‖` in exponent `q·p(·)`.
    pub h_norm_qp: f64,
    /// The same in exponent `p(·)`, for comparison with printed values.
    pub h_norm_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Condition (1) holds iff `λ·f^m` exceeds this.
    pub lambda_min_threshold: f64,
    /// Condition (2) holds iff `λ·f^M` is below this.
    pub lambda_max_threshold: f64,
    /// `lambda_max_threshold` with `‖h‖` taken in `p(·)` instead of `q·p(·)`.
    pub lambda_max_threshold_p_norm: f64,
    pub lambda_f_m: f64,
    #[serde(rename = "lambda_f_M")]
    pub lambda_f_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrintedCheck {
    pub closed_form: f64,
    pub printed: f64,
    pub relative_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureRow {
    pub figure: u8,
    pub quantity: String,
    pub old: f64,
    pub new: f64,
    /// Positive for reductions of heights/radii/inner thresholds, and for
    /// increases of the outer threshold: positive always means "better".
    pub improvement_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub old_threshold_min: Option<PrintedCheck>,
    pub old_threshold_max: Option<PrintedCheck>,
    pub old_u_range_rho1: Option<f64>,
    pub old_u_range_rho2: Option<f64>,
    pub old_sup_localisation: Interval,
    pub figures: Vec<FigureRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusReport {
    pub certified: bool,
    pub q: f64,
    pub lambda: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub green: GreenKind,
    pub hypotheses: HypothesisReport,
    pub cone_constants: Option<ConeConstants>,
    pub green_integrals: Option<GreenIntegrals>,
    pub ledger_rho1: Option<BoundsLedger>,
    pub ledger_rho2: Option<BoundsLedger>,
    pub inner: Option<InnerReport>,
    pub outer: Option<OuterReport>,
    pub cond1: Option<ConditionVerdict>,
    pub cond2: Option<ConditionVerdict>,
    pub thresholds: Option<Thresholds>,
    pub annulus_thm: Option<Interval>,
    pub annulus_qfree: Option<Interval>,
    pub annulus_best: Option<Interval>,
    pub sup_localisation: Option<Interval>,
    pub comparison: Option<Comparison>,
}

impl AnnulusReport {
    pub fn conditions_pass(&self) -> bool {
        self.cond1.as_ref().is_some_and(|c| c.pass) && self.cond2.as_ref().is_some_and(|c| c.pass)
    }
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(8))
}

/// The q-independent part of a check.
#[derive(Debug, Clone)]
pub struct Prepared {
    spec: ProblemSpec,
    a_items: Vec<HypothesisItem>,
    a_ok: bool,
    cone: Option<ConeConstants>,
    h3_items: Vec<HypothesisItem>,
    integrals: Option<GreenIntegrals>,
    h: GridFunction,
}

impl Prepared {
    pub fn new(spec: &ProblemSpec) -> Result<Self, ExistenceError> {
        spec.validate()?;
        let (a_items, a_ok) = check_a(spec);
        let g = &spec.green;
        let eta = greens::eta0_ratio_inf(g, spec.alpha, spec.beta)?;
        let c0 = greens::c0_ratio_inf(g);
        let script_positive = (1..64).all(|i| g.script_g(i as f64 / 64.0) > 0.0);
        let h3_items = vec![
            item(
                "H3.1",
                eta > 0.0 && script_positive,
                Some(eta.min(1.0)),
                format!(
                    "eta0 = inf over s in (0,1) of min_[alpha,beta] G(.,s) / max_t G(.,s) = {eta:.12}; script-G positive on samples: {script_positive}"
                ),
            ),
            item(
                "H3.2",
                c0 > 0.0 && c0 < 1.0,
                Some(c0),
                format!("C0 = inf over s in (0,1) of int_0^1 G(t,s) dt / max_t G(.,s) = {c0:.12}"),
            ),
        ];
        let cone = if h3_items.iter().all(|i| i.pass) {
            Some(ConeConstants::new(spec.alpha, spec.beta, eta.min(1.0), c0)?)
        } else {
            None
        };
        let integrals = GreenIntegrals {
            inf_int_alpha_beta: greens::inf_int_g(g, spec.alpha, spec.beta, spec.alpha, spec.beta)?,
            sup_int_alpha_beta: greens::sup_int_g(g, spec.alpha, spec.beta)?,
            sup_int_unit: greens::sup_int_g(g, 0.0, 1.0)?,
            int_script_g_alpha_beta: integrate_interval(|s| g.script_g(s), spec.alpha, spec.beta, 16, gl8()),
        };
        let nodes = GridFunction::uniform_nodes(spec.grid_nodes);
        let h = GridFunction::sample_on(&nodes, |t| g.int_g(t, 0.0, 1.0).unwrap_or(f64::NAN))?;
        Ok(Prepared { spec: spec.clone(), a_items, a_ok, cone, h3_items, integrals: Some(integrals), h })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    /// `h(t) = ∫₀¹ G(t,s) ds` on the problem grid.
    pub fn h(&self) -> &GridFunction {
        &self.h
    }

    pub fn evaluate(&self, q: f64) -> Result<AnnulusReport, ExistenceError> {
        let spec = self.spec.with_q(q)?;
        let p = &spec.p;
        let k = &spec.kernel;
        let mut items = self.a_items.clone();
        items.push(item(
            "H1.2",
            k.l1_norm().is_finite() && k.l1_norm() > 0.0,
            Some(k.l1_norm()),
            format!(
                "b = {} positive at all quadrature nodes; (b*1)(1) = {:.12} converged under refinement",
                k.label(),
                k.l1_norm()
            ),
        ));
        let eb = p.bounds();
        items.push(item(
            "p_bounds",
            eb.p_minus > 1.0 && eb.p_minus <= eb.tight_minus + 1e-9 && eb.tight_plus <= eb.p_plus + 1e-9,
            None,
            format!(
                "declared [{}, {}] bracket sampled [{:.12}, {:.12}]",
                eb.p_minus, eb.p_plus, eb.tight_minus, eb.tight_plus
            ),
        ));
        items.push(item("q_range", true, Some(q), format!("q = {q} in (1, {})", eb.p_minus)));
        items.extend(self.h3_items.iter().cloned());

        let ledgers = match &self.cone {
            Some(cc) => Some((
                bounds::ledger(spec.rho1, q, cc, k, p, spec.b_bounds)?,
                bounds::ledger(spec.rho2, q, cc, k, p, spec.b_bounds)?,
            )),
            None => None,
        };
        let caps = ledgers.as_ref().map(|(l1, l2)| (cap(l1), cap(l2)));

        let u_top = caps.map(|(c1, c2)| c1.0.max(c2.0)).unwrap_or(1.0);
        items.extend(check_f(&spec, u_top));

        let pass = items.iter().all(|i| i.pass);
        let hypotheses = HypothesisReport { pass, items, exponent_bounds: eb, kernel_l1_norm: k.l1_norm() };

        let mut report = AnnulusReport {
            certified: false,
            q,
            lambda: spec.lambda,
            rho1: spec.rho1,
            rho2: spec.rho2,
            green: spec.green.kind(),
            hypotheses,
            cone_constants: self.cone,
            green_integrals: self.integrals,
            ledger_rho1: ledgers.map(|l| l.0),
            ledger_rho2: ledgers.map(|l| l.1),
            inner: None,
            outer: None,
            cond1: None,
            cond2: None,
            thresholds: None,
            annulus_thm: None,
            annulus_qfree: None,
            annulus_best: None,
            sup_localisation: None,
            comparison: None,
        };
        let (Some(cc), Some((l1, l2)), Some((cap1, cap2)), Some(gi)) = (self.cone, ledgers, caps, self.integrals) else {
            return Ok(report);
        };
        if !(pass && self.a_ok) {
            return Ok(report);
        }

        let a1 = spec.eval_a(spec.rho1)?;
        let a2 = spec.eval_a(spec.rho2)?;
        let pm = p.p_minus();
        let pp = p.p_plus();
        let width = spec.beta - spec.alpha;

        // Inner condition.
        let lower_u = cc.eta0 * l1.m_rho;
        if !(lower_u <= cap1.0) {
            return Err(ExistenceError::Config(format!(
                "empty inner rectangle: u-range [{lower_u}, {}]",
                cap1.0
            )));
        }
        let rect1 = Rect { t: (spec.alpha, spec.beta), u: (lower_u, cap1.0) };
        let (at_m, f_m) = rect_min(|t, u| spec.f_or_nan(t, u), &rect1, F_EXTREMA_GRID);
        let n1 = spec.lambda / a1 * f_m * gi.inf_int_alpha_beta;
        let y1 = n1 * width.powf(q / pm);
        let n0 = spec.lambda / a1 * cc.eta0 * f_m * gi.int_script_g_alpha_beta;
        let ratio1 = spec.rho1 / l1.c1q;
        let (e1, b1) = if ratio1 >= 1.0 { (pm, Branch::PMinus) } else { (pp, Branch::PPlus) };
        let lhs1 = l1.c1q * y1.powf(e1);
        report.cond1 = Some(ConditionVerdict { pass: lhs1 > spec.rho1, lhs: Some(lhs1), rhs: spec.rho1, branch: Some(b1), detail: None });
        report.inner = Some(InnerReport {
            n1,
            y1,
            n0,
            refinement_holds: n1 >= n0 * (1.0 - 1e-12),
            f_m,
            f_m_at: at_m,
            rectangle: rect1,
            cap_source: cap1.1,
        });
        let threshold_min = a1 * ratio1.powf(1.0 / e1) / (gi.inf_int_alpha_beta * width.powf(q / pm));

        // Outer condition.
        let rect2 = Rect { t: (0.0, 1.0), u: (0.0, cap2.0) };
        let (at_max, f_max) = rect_max(|t, u| spec.f_or_nan(t, u), &rect2, F_EXTREMA_GRID);
        let qp = p.scale(q)?;
        let h_norm_qp = luxemburg_norm(&self.h, &qp, spec.tolerances.norm)?;
        let h_norm_p = luxemburg_norm(&self.h, p, spec.tolerances.norm)?;
        report.outer = Some(OuterReport {
            f_max,
            f_max_at: at_max,
            rectangle: rect2,
            cap_source: cap2.1,
            h_norm_qp,
            h_norm_p,
        });
        let (threshold_max, threshold_max_p) = match l2.c2q {
            Some(c2) => {
                let ratio2 = spec.rho2 / c2;
                let (e2, b2) = if ratio2 >= 1.0 { (pp, Branch::PPlus) } else { (pm, Branch::PMinus) };
                let lhs2 = c2 * (spec.lambda * f_max / a2 * h_norm_qp).powf(e2);
                report.cond2 = Some(ConditionVerdict { pass: lhs2 < spec.rho2, lhs: Some(lhs2), rhs: spec.rho2, branch: Some(b2), detail: None });
                let scale = a2 * ratio2.powf(1.0 / e2);
                (scale / h_norm_qp, scale / h_norm_p)
            }
            None => {
                report.cond2 = Some(ConditionVerdict {
                    pass: false,
                    lhs: None,
                    rhs: spec.rho2,
                    branch: None,
                    detail: Some(format!("C2(q) diverges at q = {q}: b^(q/(q-1)) is not integrable")),
                });
                (f64::NAN, f64::NAN)
            }
        };
        report.thresholds = Some(Thresholds {
            lambda_min_threshold: threshold_min,
            lambda_max_threshold: threshold_max,
            lambda_max_threshold_p_norm: threshold_max_p,
            lambda_f_m: spec.lambda * f_m,
            lambda_f_max: spec.lambda * f_max,
        });

        // Localisation.
        let thm = Interval { lower: cc.eta0 * width.powf(1.0 / pm) * l1.m_rho, upper: l2.big_m_rho };
        let qfree = match (l1.qfree_lower, l2.qfree_upper) {
            (Some(lower), Some(upper)) => Some(Interval { lower, upper }),
            _ => None,
        };
        let best = match qfree {
            Some(qf) => Interval { lower: thm.lower.max(qf.lower), upper: thm.upper.min(qf.upper) },
            None => thm,
        };
        let old_upper = l2.m_sup_star.unwrap_or(l2.b_old);
        let sup_loc = Interval { lower: l1.m_rho, upper: old_upper };
        report.annulus_thm = Some(thm);
        report.annulus_qfree = qfree;
        report.annulus_best = Some(best);
        report.sup_localisation = Some(sup_loc);
        report.comparison = Some(comparison(&spec, &l1, &l2, cap1.0, cap2.0, best, sup_loc, threshold_min, threshold_max, threshold_max_p)?);
        report.certified = report.conditions_pass();
        Ok(report)
    }
}

/// Tightest available sup-norm cap: `B∞,ρ` consolidated, or `B*∞,ρ` when `b`
/// is bounded and that is smaller.
fn cap(l: &BoundsLedger) -> (f64, CapSource) {
    match l.b_star {
        Some(s) if s < l.b_consolidated => (s, CapSource::BStar),
        _ => (l.b_consolidated, CapSource::BConsolidated),
    }
}

fn check_a(spec: &ProblemSpec) -> (Vec<HypothesisItem>, bool) {
    let n = A_SAMPLES;
    let mut min = (f64::INFINITY, spec.rho1);
    let mut failure = None;
    for i in 0..n {
        let x = if i == n - 1 { spec.rho2 } else { spec.rho1 + (spec.rho2 - spec.rho1) * i as f64 / (n - 1) as f64 };
        match spec.eval_a(x) {
            Ok(v) if v.is_finite() => {
                if v < min.0 {
                    min = (v, x);
                }
            }
            Ok(v) => {
                failure.get_or_insert(format!("A({x}) = {v} is not finite"));
            }
            Err(e) => {
                failure.get_or_insert(format!("A({x}): {e}"));
            }
        }
    }
    let evaluable = failure.is_none();
    let positive = evaluable && min.0 > 0.0;
    let items = vec![
        item(
            "H1.1",
            evaluable,
            None,
            failure.unwrap_or_else(|| format!("A evaluates on {n} samples of [rho1, rho2]")),
        ),
        item(
            "H1.3",
            positive,
            Some(min.0),
            format!("min sampled A on [{}, {}] is {} at {}", spec.rho1, spec.rho2, min.0, min.1),
        ),
    ];
    (items, positive)
}

fn check_f(spec: &ProblemSpec, u_top: f64) -> Vec<HypothesisItem> {
    let n = F_SCREEN;
    let mut min = (f64::INFINITY, [0.0, 0.0]);
    let mut failure = None;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        for j in 0..n {
            let u = u_top * j as f64 / (n - 1) as f64;
            match spec.eval_f(t, u) {
                Ok(v) if v.is_finite() => {
                    if v < min.0 {
                        min = (v, [t, u]);
                    }
                }
                Ok(v) => {
                    failure.get_or_insert(format!("f({t}, {u}) = {v} is not finite"));
                }
                Err(e) => {
                    failure.get_or_insert(format!("f({t}, {u}): {e}"));
                }
            }
        }
    }
    vec![
        item(
            "H1.1f",
            failure.is_none(),
            None,
            failure.clone().unwrap_or_else(|| format!("f evaluates on a {n}x{n} grid of [0,1]x[0,{u_top}]")),
        ),
        item(
            "H2",
            failure.is_none() && min.0 >= 0.0,
            Some(min.0),
            format!("min sampled f on [0,1]x[0,{u_top}] is {} at (t, u) = ({}, {})", min.0, min.1[0], min.1[1]),
        ),
    ]
}

fn printed_check(v: &PrintedValue) -> Result<PrintedCheck, ExistenceError> {
    let closed_form = v.expr.eval(&Default::default())?;
    Ok(PrintedCheck {
        closed_form,
        printed: v.printed,
        relative_difference: ((closed_form - v.printed) / v.printed).abs(),
    })
}

fn reduction(old: f64, new: f64) -> f64 {
    100.0 * (1.0 - new / old)
}

#[allow(clippy::too_many_arguments)]
fn comparison(
    spec: &ProblemSpec,
    l1: &BoundsLedger,
    l2: &BoundsLedger,
    cap1: f64,
    cap2: f64,
    best: Interval,
    sup_loc: Interval,
    threshold_min: f64,
    threshold_max: f64,
    threshold_max_p: f64,
) -> Result<Comparison, ExistenceError> {
    let mut figures = Vec::new();
    let row = |figure: u8, quantity: &str, old: f64, new: f64, improvement_percent: f64| FigureRow {
        figure,
        quantity: quantity.into(),
        old,
        new,
        improvement_percent,
    };
    if let Some(old1) = l1.m_sup_star {
        figures.push(row(1, "inner_u_range", old1, cap1, reduction(old1, cap1)));
    }
    if let Some(old2) = l2.m_sup_star {
        figures.push(row(1, "outer_u_range", old2, cap2, reduction(old2, cap2)));
    }
    figures.push(row(1, "inner_radius", sup_loc.lower, best.lower, 100.0 * (best.lower / sup_loc.lower - 1.0)));
    figures.push(row(1, "outer_radius", sup_loc.upper, best.upper, reduction(sup_loc.upper, best.upper)));
    let (mut old_min, mut old_max) = (None, None);
    if let Some(c) = &spec.comparison {
        let m = printed_check(&c.old_threshold_min)?;
        let x = printed_check(&c.old_threshold_max)?;
        figures.push(row(2, "inner_threshold", m.printed, threshold_min, reduction(m.printed, threshold_min)));
        figures.push(row(2, "outer_threshold", x.printed, threshold_max, 100.0 * (threshold_max / x.printed - 1.0)));
        figures.push(row(
            2,
            "outer_threshold_p_norm",
            x.printed,
            threshold_max_p,
            100.0 * (threshold_max_p / x.printed - 1.0),
        ));
        old_min = Some(m);
        old_max = Some(x);
    }
    Ok(Comparison {
        old_threshold_min: old_min,
        old_threshold_max: old_max,
        old_u_range_rho1: l1.m_sup_star,
        old_u_range_rho2: l2.m_sup_star,
        old_sup_localisation: sup_loc,
        figures,
    })
}

/// Full certificate at the problem's own `q`.
pub fn check(spec: &ProblemSpec) -> Result<AnnulusReport, ExistenceError> {
    Prepared::new(spec)?.evaluate(spec.q)
}

pub fn check_hypotheses(spec: &ProblemSpec) -> Result<HypothesisReport, ExistenceError> {
    Ok(check(spec)?.hypotheses)
}

/// `(threshold on λ·f^m, threshold on λ·f^M)`.
pub fn lambda_thresholds(spec: &ProblemSpec) -> Result<(f64, f64), ExistenceError> {
    let r = check(spec)?;
    let t = r.thresholds.ok_or_else(|| {
        ExistenceError::Config(format!(
            "hypotheses fail: {}",
            r.hypotheses.failures().iter().map(|i| i.id.as_str()).collect::<Vec<_>>().join(", ")
        ))
    })?;
    Ok((t.lambda_min_threshold, t.lambda_max_threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub q: f64,
    pub lambda_min_threshold: Option<f64>,
    pub lambda_max_threshold: Option<f64>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Row with the smallest inner threshold.
    pub best_min: Option<SweepRow>,
    /// Row with the largest outer threshold.
    pub best_max: Option<SweepRow>,
}

/// `n` values with `q − 1` log-spaced over `[10⁻³, 0.999]·(p⁻ − 1)`.
pub fn sweep_values(p: &ExponentField, n: usize) -> Vec<f64> {
    let span = p.p_minus() - 1.0;
    let (lo, hi) = (1e-3f64.ln(), 0.999f64.ln());
    (0..n)
        .map(|i| {
            let x = if n == 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            1.0 + span * x.exp()
        })
        .collect()
}

/// Evaluates every q in parallel; rows keep the input order.
pub fn q_sweep(spec: &ProblemSpec, n: usize) -> Result<SweepReport, ExistenceError> {
    let prepared = Prepared::new(spec)?;
    let qs = sweep_values(&spec.p, n);
    let rows = qs
        .par_iter()
        .map(|&q| {
            let r = prepared.evaluate(q)?;
            Ok(SweepRow {
                q,
                lambda_min_threshold: r.thresholds.map(|t| t.lambda_min_threshold),
                lambda_max_threshold: r.thresholds.map(|t| t.lambda_max_threshold).filter(|v| v.is_finite()),
                certified: r.certified,
            })
        })
        .collect::<Result<Vec<_>, ExistenceError>>()?;
    let best_min = rows
        .iter()
        .filter(|r| r.lambda_min_threshold.is_some())
        .min_by(|a, b| a.lambda_min_threshold.unwrap().total_cmp(&b.lambda_min_threshold.unwrap()))
        .cloned();
    let best_max = rows
        .iter()
        .filter(|r| r.lambda_max_threshold.is_some())
        .max_by(|a, b| a.lambda_max_threshold.unwrap().total_cmp(&b.lambda_max_threshold.unwrap()))
        .cloned();
    Ok(SweepReport { rows, best_min, best_max })
}
