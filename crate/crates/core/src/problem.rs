//! Strict JSON problem files.

use serde::Deserialize;
use thiserror::Error;

use crate::existence::{ComparisonSpec, ExistenceError, PrintedValue, ProblemSpec, Tolerances};
use crate::expr::{ExprError, Expression};
use crate::greens::{GreensError, GreensFunction};
use crate::nonlocal::{Kernel, NonlocalError};
use crate::vexp::{ExponentField, VexpError};

/// The problem file shipped with the repository; a nonlocal problem with
/// `A(t) = (1000/3)·t·sin(πt/6)`, `b ≡ 1` and a Dirichlet Green's function.
pub const BUNDLED_EXAMPLE: &str = include_str!("../../../problems/example_2_12.json");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("malformed problem file: {0}")]
    Json(String),
    #[error("invalid {field}: {message}")]
    Field { field: &'static str, message: String },
    #[error(transparent)]
    Spec(#[from] ExistenceError),
}

fn field<E: std::fmt::Display>(field: &'static str) -> impl Fn(E) -> ProblemError {
    move |e| ProblemError::Field { field, message: e.to_string() }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub description: Option<String>,
    #[serde(rename = "A")]
    pub a: String,
    pub f: String,
    pub p: String,
    #[serde(default)]
    pub p_minus: Option<f64>,
    #[serde(default)]
    pub p_plus: Option<f64>,
    pub b: KernelFile,
    #[serde(default)]
    pub b_bounds: Option<[f64; 2]>,
    pub green: GreenFile,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub q: Option<QFile>,
    pub rho1: f64,
    pub rho2: f64,
    pub lambda: f64,
    #[serde(default)]
    pub grid_nodes: Option<usize>,
    #[serde(default)]
    pub tolerances: Option<TolerancesFile>,
    #[serde(default)]
    pub comparison: Option<ComparisonFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum KernelFile {
    Constant(ConstantKernel),
    Expr(ExprKernel),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantKernel {
    pub constant: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprKernel {
    pub expr: String,
    #[serde(default)]
    pub singular_order: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenFile {
    pub kind: GreenKindFile,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GreenKindFile {
    Named(NamedGreen),
    Custom(CustomGreen),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedGreen {
    Dirichlet,
    RightFocal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomGreen {
    pub custom: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum QFile {
    Value(f64),
    Sweep(SweepFile),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub sweep: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesFile {
    pub norm: Option<f64>,
    pub boundary: Option<f64>,
    pub solve: Option<f64>,
    pub residual_constant: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrintedFile {
    pub closed_form: String,
    pub printed: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonFile {
    pub old_threshold_min: PrintedFile,
    pub old_threshold_max: PrintedFile,
}

/// A parsed problem: the `ProblemSpec` plus the sweep request, if any.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub sweep: Option<usize>,
    pub description: Option<String>,
}

fn finite(name: &'static str, v: f64) -> Result<f64, ProblemError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ProblemError::Field { field: name, message: format!("{v} is not finite") })
    }
}

fn parse_expr(name: &'static str, src: &str) -> Result<Expression, ProblemError> {
    Expression::parse(src).map_err(field::<ExprError>(name))
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        serde_json::from_str(text).map_err(|e| ProblemError::Json(e.to_string()))
    }

    pub fn into_problem(self) -> Result<Problem, ProblemError> {
        let p_expr = parse_expr("p", &self.p)?;
        let declared = match (self.p_minus, self.p_plus) {
            (None, None) => None,
            (lo, hi) => {
                let tight = ExponentField::from_expr(&p_expr, None).map_err(field::<VexpError>("p"))?.bounds();
                Some((
                    finite("p_minus", lo.unwrap_or(tight.tight_minus))?,
                    finite("p_plus", hi.unwrap_or(tight.tight_plus))?,
                ))
            }
        };
        let p = ExponentField::from_expr(&p_expr, declared).map_err(field::<VexpError>("p"))?;
        let kernel = match &self.b {
            KernelFile::Constant(c) => Kernel::constant(finite("b", c.constant)?),
            KernelFile::Expr(e) => Kernel::from_expr(&parse_expr("b", &e.expr)?, finite("b", e.singular_order)?),
        }
        .map_err(field::<NonlocalError>("b"))?;
        let green = match &self.green.kind {
            GreenKindFile::Named(NamedGreen::Dirichlet) => GreensFunction::dirichlet(),
            GreenKindFile::Named(NamedGreen::RightFocal) => GreensFunction::right_focal(),
            GreenKindFile::Custom(c) => {
                GreensFunction::custom(parse_expr("green", &c.custom)?).map_err(field::<GreensError>("green"))?
            }
        };
        let (q, sweep) = match self.q {
            None => (None, None),
            Some(QFile::Value(q)) => (Some(finite("q", q)?), None),
            Some(QFile::Sweep(s)) => {
                if s.sweep == 0 {
                    return Err(ProblemError::Field { field: "q", message: "sweep needs at least one value".into() });
                }
                (None, Some(s.sweep))
            }
        };
        let mut spec = ProblemSpec::new(
            parse_expr("A", &self.a)?,
            parse_expr("f", &self.f)?,
            finite("lambda", self.lambda)?,
            p,
            kernel,
            green,
            finite("alpha", self.alpha)?,
            finite("beta", self.beta)?,
            q,
            finite("rho1", self.rho1)?,
            finite("rho2", self.rho2)?,
        )?;
        if let Some([lo, hi]) = self.b_bounds {
            spec.b_bounds = Some((finite("b_bounds", lo)?, finite("b_bounds", hi)?));
        }
        if let Some(n) = self.grid_nodes {
            spec.grid_nodes = n;
        }
        if let Some(t) = self.tolerances {
            let d = Tolerances::default();
            spec.tolerances = Tolerances {
                norm: finite("tolerances.norm", t.norm.unwrap_or(d.norm))?,
                boundary: finite("tolerances.boundary", t.boundary.unwrap_or(d.boundary))?,
                solve: finite("tolerances.solve", t.solve.unwrap_or(d.solve))?,
                residual_constant: finite("tolerances.residual_constant", t.residual_constant.unwrap_or(d.residual_constant))?,
            };
        }
        if let Some(c) = self.comparison {
            let printed = |name: &'static str, v: PrintedFile| -> Result<PrintedValue, ProblemError> {
                let expr = parse_expr(name, &v.closed_form)?;
                if !expr.free_variables().is_empty() {
                    return Err(ProblemError::Field { field: name, message: "closed form must be a constant".into() });
                }
                Ok(PrintedValue { expr, printed: finite(name, v.printed)? })
            };
            spec.comparison = Some(ComparisonSpec {
                old_threshold_min: printed("comparison.old_threshold_min", c.old_threshold_min)?,
                old_threshold_max: printed("comparison.old_threshold_max", c.old_threshold_max)?,
            });
        }
        spec.validate()?;
        Ok(Problem { spec, sweep, description: self.description })
    }
}

pub fn parse_problem(text: &str) -> Result<Problem, ProblemError> {
    ProblemFile::from_json(text)?.into_problem()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::GreenKind;

    #[test]
    fn bundled_example_parses() {
        let pr = parse_problem(BUNDLED_EXAMPLE).unwrap();
        let s = &pr.spec;
        assert_eq!((s.p.p_minus(), s.p.p_plus()), (2.0, 5.0));
        assert_eq!(s.b_bounds, Some((1.0, 1.0)));
        assert_eq!(s.green.kind(), GreenKind::Dirichlet);
        assert!((s.q - 1.999).abs() < 1e-15);
        assert_eq!(s.rho1, 0.0004);
        assert!(s.comparison.is_some() && pr.sweep.is_none());
    }

    fn with(key: &str, value: serde_json::Value) -> String {
        let mut v: serde_json::Value = serde_json::from_str(BUNDLED_EXAMPLE).unwrap();
        v[key] = value;
        v.to_string()
    }

    #[test]
    fn rejects_unknown_and_invalid_fields() {
        assert!(matches!(parse_problem(&with("rho_1", 0.1.into())), Err(ProblemError::Json(_))));
        assert!(matches!(parse_problem("{\"A\": "), Err(ProblemError::Json(_))));
        assert!(matches!(parse_problem(&with("rho1", 5.0.into())), Err(ProblemError::Spec(_))));
        assert!(parse_problem(&with("q", 2.5.into())).is_err());
        assert!(parse_problem(&with("b", serde_json::json!({"constant": 1, "expr": "1"}))).is_err());
        assert!(parse_problem(&with("green", serde_json::json!({"kind": "neumann"}))).is_err());
        assert!(parse_problem(&with("p_minus", 4.5.into())).is_err());
        assert!(matches!(parse_problem(&with("f", "u +".into())), Err(ProblemError::Field { field: "f", .. })));
    }

    #[test]
    fn alternative_forms() {
        let pr = parse_problem(&with("q", serde_json::json!({"sweep": 8}))).unwrap();
        assert_eq!(pr.sweep, Some(8));
        let pr = parse_problem(&with("green", serde_json::json!({"kind": {"custom": "t*(1-s)"}}))).unwrap();
        assert_eq!(pr.spec.green.kind(), GreenKind::Custom);
        let pr = parse_problem(&with("b", serde_json::json!({"expr": "t^(-1/2)", "singular_order": 0.5}))).unwrap();
        assert_eq!(pr.spec.kernel.singular_order(), 0.5);
        let pr = parse_problem(&with("tolerances", serde_json::json!({"solve": 1e-8}))).unwrap();
        assert_eq!(pr.spec.tolerances.solve, 1e-8);
        assert_eq!(pr.spec.tolerances.norm, 1e-10);
    }
}
