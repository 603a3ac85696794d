//! The fixed-point operator `T`, a damped Picard / Anderson iteration for
//! its fixed points, and a posteriori verification of the result.

use serde::Serialize;
use thiserror::Error;

use crate::existence::{AnnulusReport, ProblemSpec};
use crate::expr::ExprError;
use crate::greens::{GreenKind, GreensError};
use crate::nonlocal::{self, ConeVerdict, NonlocalError, PhiEvaluator};
use crate::quadrature::gauss_legendre;
use crate::vexp::{luxemburg_norm, GridFunction, VexpError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("A(Phi(u)) = {a} vanishes at Phi(u) = {phi}")]
    SingularCoefficient { phi: f64, a: f64 },
    #[error("Phi(u) = {phi} lies outside [{rho1}, {rho2}]")]
    Domain { phi: f64, rho1: f64, rho2: f64 },
    #[error("u is on a grid of {got} nodes, the operator uses {expected}")]
    GridMismatch { got: usize, expected: usize },
    #[error("f({t}, {u}) = {value} is negative or not finite")]
    Source { t: f64, u: f64, value: f64 },
    #[error("invalid solver setting: {0}")]
    Setting(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
    #[error(transparent)]
    Vexp(#[from] VexpError),
}

/// `A(Φ)` with `|A| ≤ this` counts as zero.
const A_ZERO: f64 = 1e-14;

/// `T` discretised on a fixed grid: `(Tu)(tᵢ) = λ/A(Φ(u)) · Σⱼ Wᵢⱼ f(sⱼ, uⱼ)`,
/// where `Wᵢⱼ = ∫₀¹ G(tᵢ, s) φⱼ(s) ds` against the hat function `φⱼ`.
#[derive(Debug, Clone)]
pub struct Operator {
    spec: ProblemSpec,
    nodes: Vec<f64>,
    w: Vec<Vec<f64>>,
    phi: PhiEvaluator,
}

impl Operator {
    pub fn new(spec: &ProblemSpec) -> Result<Self, SolveError> {
        Self::with_nodes(spec, spec.grid_nodes)
    }

    pub fn with_nodes(spec: &ProblemSpec, n: usize) -> Result<Self, SolveError> {
        if n < 3 {
            return Err(SolveError::Setting(format!("{n} grid nodes")));
        }
        let nodes = GridFunction::uniform_nodes(n);
        let (x, wq) = gauss_legendre(4);
        let g = &spec.green;
        // Kinks of the built-in kinds sit at s = t, a node, so each element is smooth.
        let w = nodes
            .iter()
            .map(|&t| {
                let mut row = vec![0.0; n];
                for e in 0..n - 1 {
                    let (a, b) = (nodes[e], nodes[e + 1]);
                    let half = 0.5 * (b - a);
                    for (xi, wi) in x.iter().zip(&wq) {
                        let s = a + half * (xi + 1.0);
                        let gv = g.value(t, s) * wi * half;
                        let right = (s - a) / (b - a);
                        row[e] += gv * (1.0 - right);
                        row[e + 1] += gv * right;
                    }
                }
                row
            })
            .collect();
        let phi = PhiEvaluator::new(&spec.p, &spec.kernel)?;
        Ok(Operator { spec: spec.clone(), nodes, w, phi })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn phi(&self, u: &GridFunction) -> f64 {
        self.phi.eval(u)
    }

    /// `Tu`. With `guard`, `Φ(u)` must lie in `[ρ₁, ρ₂]`.
    pub fn apply(&self, u: &GridFunction, guard: bool) -> Result<GridFunction, SolveError> {
        if u.values().len() != self.nodes.len() {
            return Err(SolveError::GridMismatch { got: u.values().len(), expected: self.nodes.len() });
        }
        let s = &self.spec;
        let phi = self.phi.eval(u);
        if guard && !(s.rho1 <= phi && phi <= s.rho2) {
            return Err(SolveError::Domain { phi, rho1: s.rho1, rho2: s.rho2 });
        }
        let mut fv = Vec::with_capacity(self.nodes.len());
        for (&t, &uj) in self.nodes.iter().zip(u.values()) {
            let v = s.eval_f(t, uj)?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SolveError::Source { t, u: uj, value: v });
            }
            fv.push(v);
        }
        // Zero integrand: Tu = 0 whatever A does.
        if fv.iter().all(|&v| v == 0.0) {
            return Ok(u.with_values(vec![0.0; fv.len()])?);
        }
        let a = s.eval_a(phi)?;
        if !(a.abs() > A_ZERO) || !a.is_finite() {
            return Err(SolveError::SingularCoefficient { phi, a });
        }
        let c = s.lambda / a;
        let values = self
            .w
            .iter()
            .map(|row| (c * row.iter().zip(&fv).map(|(w, f)| w * f).sum::<f64>()).max(0.0))
            .collect();
        Ok(u.with_values(values)?)
    }
}

pub fn apply_t(u: &GridFunction, spec: &ProblemSpec, guard: bool) -> Result<GridFunction, SolveError> {
    Operator::with_nodes(spec, u.nodes().len())?.apply(u, guard)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Picard,
    DampedPicard,
    Anderson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    /// `‖u − Tu‖∞` at the returned iterate.
    pub residual_sup: f64,
    pub phi_value: f64,
    pub method: Method,
    pub converged: bool,
    pub tolerance: f64,
    pub residual_history: Vec<f64>,
}

/// Iterations without a 0.1% improvement of the best residual before
/// switching to Anderson mixing.
const STAGNATION: usize = 200;
const ANDERSON_DEPTH: usize = 3;
const OMEGA_MIN: f64 = 1.0 / 64.0;

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Default start: a constant with `Φ = √(ρ₁ρ₂)`.
pub fn default_init(op: &Operator) -> Result<GridFunction, SolveError> {
    let s = op.spec();
    let one = GridFunction::new(op.nodes().to_vec(), vec![1.0; op.nodes().len()])?;
    let c = op.phi.boundary_scale(&one, (s.rho1 * s.rho2).sqrt(), s.tolerances.boundary)?;
    Ok(one.scaled(c)?)
}

/// Anderson step from the last `depth + 1` iterates `x` and residuals `r = Tx − x`.
fn anderson_step(xs: &[Vec<f64>], rs: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = xs.len() - 1;
    let n = xs[k].len();
    let m = k.min(ANDERSON_DEPTH);
    if m == 0 {
        return None;
    }
    let df: Vec<Vec<f64>> = (k - m..k).map(|i| (0..n).map(|j| rs[i + 1][j] - rs[i][j]).collect()).collect();
    let dx: Vec<Vec<f64>> = (k - m..k).map(|i| (0..n).map(|j| xs[i + 1][j] - xs[i][j]).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = dot(&df[i], &df[j]);
        }
        a[i][i] *= 1.0 + 1e-10;
        rhs[i] = dot(&df[i], &rs[k]);
    }
    // Gaussian elimination with partial pivoting on the tiny normal system.
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 1e-300) {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let prow = &top[col];
        for (k, row) in rest.iter_mut().enumerate() {
            let f = row[col] / prow[col];
            for (x, &y) in row[col..].iter_mut().zip(&prow[col..]) {
                *x -= f * y;
            }
            rhs[col + 1 + k] -= f * rhs[col];
        }
    }
    let mut gamma = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|j| a[i][j] * gamma[j]).sum();
        gamma[i] = (rhs[i] - s) / a[i][i];
    }
    let out: Vec<f64> = (0..n)
        .map(|j| {
            let corr: f64 = (0..m).map(|i| gamma[i] * (dx[i][j] + df[i][j])).sum();
            (xs[k][j] + rs[k][j] - corr).max(0.0)
        })
        .collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Damped Picard `u ← (1−ω)u + ω·Tu`, with `ω` halved when the residual
/// would grow and multiplied by 1.2 after a successful step, falling back to Anderson
/// mixing after prolonged stagnation. Non-convergence is reported through
/// `converged = false`, not as an error.
pub fn solve(
    spec: &ProblemSpec,
    init: Option<GridFunction>,
    tol: f64,
    max_iter: usize,
) -> Result<(GridFunction, SolveDiagnostics), SolveError> {
    let op = Operator::new(spec)?;
    solve_with(&op, init, tol, max_iter)
}

pub fn solve_with(
    op: &Operator,
    init: Option<GridFunction>,
    tol: f64,
    max_iter: usize,
) -> Result<(GridFunction, SolveDiagnostics), SolveError> {
    if !(tol > 0.0) {
        return Err(SolveError::Setting(format!("tol = {tol} must be positive")));
    }
    let mut u = match init {
        Some(u) => u,
        None => default_init(op)?,
    };
    let mut tu = op.apply(&u, false)?;
    let mut res = sup_diff(u.values(), tu.values());
    let mut omega: f64 = 1.0;
    let mut method = Method::Picard;
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut stagnant = 0;
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut rs: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;
    loop {
        history.push(res);
        if res <= tol || iterations >= max_iter || !res.is_finite() {
            let diag = SolveDiagnostics {
                iterations,
                residual_sup: res,
                phi_value: op.phi(&u),
                method,
                converged: res <= tol,
                tolerance: tol,
                residual_history: history,
            };
            return Ok((u, diag));
        }
        if res < best * 0.999 {
            best = res;
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if method != Method::Anderson && stagnant >= STAGNATION {
            method = Method::Anderson;
            xs.clear();
            rs.clear();
        }
        let mut accepted = None;
        if method == Method::Anderson {
            xs.push(u.values().to_vec());
            rs.push(tu.values().iter().zip(u.values()).map(|(t, x)| t - x).collect());
            if xs.len() > ANDERSON_DEPTH + 1 {
                xs.remove(0);
                rs.remove(0);
            }
            if let Some(next) = anderson_step(&xs, &rs) {
                let cand = u.with_values(next)?;
                if let Ok(tc) = op.apply(&cand, false) {
                    let rc = sup_diff(cand.values(), tc.values());
                    if rc.is_finite() {
                        accepted = Some((cand, tc, rc));
                    }
                }
            }
        }
        // Backtracking on ω: a step is taken only if T evaluates at the
        // candidate and the residual does not grow, except at the floor.
        while accepted.is_none() {
            let next = u.values().iter().zip(tu.values()).map(|(x, t)| (1.0 - omega) * x + omega * t).collect();
            let cand = u.with_values(next)?;
            match op.apply(&cand, false) {
                Ok(tc) => {
                    let rc = sup_diff(cand.values(), tc.values());
                    if rc <= res {
                        accepted = Some((cand, tc, rc));
                        omega = (omega * 1.2).min(1.0);
                    } else if omega <= OMEGA_MIN {
                        accepted = Some((cand, tc, rc));
                    } else {
                        omega = (omega * 0.5).max(OMEGA_MIN);
                    }
                }
                Err(e) if omega <= OMEGA_MIN => return Err(e),
                Err(_) => omega = (omega * 0.5).max(OMEGA_MIN),
            }
            if omega < 1.0 && method == Method::Picard {
                method = Method::DampedPicard;
            }
        }
        let (cand, tc, rc) = accepted.expect("loop exits with a step");
        u = cand;
        tu = tc;
        res = rc;
        iterations += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub phi: f64,
    /// (a) `ρ₁ < Φ(u) < ρ₂`.
    pub phi_in_range: Check,
    /// (b) `u` in the hybrid cone.
    pub cone: Option<ConeVerdict>,
    pub cone_check: Check,
    pub luxemburg_norm: f64,
    /// (c) `‖u‖` within the best annulus.
    pub norm_in_annulus: Check,
    /// (d) `sup |−A(Φ)·D²u − λf|` over interior nodes, against
    /// `C·h²·max(1, sup λf)`.
    pub differential_residual: f64,
    pub residual_bound: f64,
    pub residual_check: Check,
    /// (e) boundary conditions of the Green's kind.
    pub boundary_check: Check,
}

fn check(pass: bool, detail: String) -> Check {
    Check { pass, detail }
}

pub fn verify_solution(u: &GridFunction, spec: &ProblemSpec, report: &AnnulusReport) -> Result<VerifyReport, SolveError> {
    let phi = nonlocal::phi(u, &spec.p, &spec.kernel)?;
    let phi_in_range = check(
        spec.rho1 < phi && phi < spec.rho2,
        format!("Phi(u) = {phi} against ({}, {})", spec.rho1, spec.rho2),
    );

    let (cone, cone_check) = match &report.cone_constants {
        Some(cc) => {
            let v = nonlocal::in_hybrid_cone(u, cc, &spec.p)?;
            let c = check(
                v.member,
                format!("margins: min u {}, plateau {}, coercivity {}", v.nonnegativity, v.plateau, v.coercivity),
            );
            (Some(v), c)
        }
        None => (None, check(false, "cone constants unavailable".into())),
    };

    let norm = if u.is_zero() { 0.0 } else { luxemburg_norm(u, &spec.p, spec.tolerances.norm)? };
    let slack = spec.tolerances.boundary * norm.max(1.0);
    let norm_in_annulus = match report.annulus_best {
        Some(a) => check(
            a.lower - slack <= norm && norm <= a.upper + slack,
            format!("||u|| = {norm} against [{}, {}]", a.lower, a.upper),
        ),
        None => check(false, "no certified annulus".into()),
    };

    let nodes = u.nodes();
    let v = u.values();
    let n = nodes.len();
    let a_phi = spec.eval_a(phi)?;
    let mut resid: f64 = 0.0;
    let mut hmax: f64 = 0.0;
    let mut source: f64 = 0.0;
    for i in 1..n - 1 {
        let (h0, h1) = (nodes[i] - nodes[i - 1], nodes[i + 1] - nodes[i]);
        hmax = hmax.max(h0).max(h1);
        let d2 = 2.0 * (h0 * v[i + 1] - (h0 + h1) * v[i] + h1 * v[i - 1]) / (h0 * h1 * (h0 + h1));
        let lf = spec.lambda * spec.eval_f(nodes[i], v[i])?;
        source = source.max(lf.abs());
        let r = (-a_phi * d2 - lf).abs();
        resid = resid.max(if r.is_finite() { r } else { f64::INFINITY });
    }
    // Relative to the size of the equation's terms, so λ-scaling does not
    // change the verdict.
    let bound = spec.tolerances.residual_constant * hmax * hmax * source.max(1.0);
    let residual_check = check(
        resid <= bound,
        format!("sup residual {resid} against C h^2 max(1, sup lambda f) = {bound}"),
    );

    let edge_tol = 1e-9 * u.sup().max(1.0);
    let boundary_check = match spec.green.kind() {
        GreenKind::Dirichlet => check(
            v[0].abs() <= edge_tol && v[n - 1].abs() <= edge_tol,
            format!("u(0) = {}, u(1) = {}", v[0], v[n - 1]),
        ),
        GreenKind::RightFocal => {
            let h = nodes[n - 1] - nodes[n - 2];
            let du = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
            let du_tol = spec.tolerances.residual_constant * h;
            check(
                v[0].abs() <= edge_tol && du.abs() <= du_tol,
                format!("u(0) = {}, one-sided u'(1) = {du} against {du_tol}", v[0]),
            )
        }
        GreenKind::Custom => check(true, "custom Green's function: boundary conditions not known".into()),
    };

    let pass = phi_in_range.pass && cone_check.pass && norm_in_annulus.pass && residual_check.pass && boundary_check.pass;
    Ok(VerifyReport {
        pass,
        phi,
        phi_in_range,
        cone,
        cone_check,
        luxemburg_norm: norm,
        norm_in_annulus,
        differential_residual: resid,
        residual_bound: bound,
        residual_check,
        boundary_check,
    })
}

/// `t,u` rows with a header.
pub fn solution_csv(u: &GridFunction) -> String {
    let mut s = String::from("t,u\n");
    for (t, v) in u.nodes().iter().zip(u.values()) {
        s.push_str(&format!("{t:.16e},{v:.16e}\n"));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionRecord<'a> {
    pub nodes: &'a [f64],
    pub values: &'a [f64],
    pub diagnostics: &'a SolveDiagnostics,
    pub verification: Option<&'a VerifyReport>,
}
