//! Closed-form bound ledger: `ε₁`, `ε₂`, `m_ρ`, `M_ρ`, `C₁(q)`, `C₂(q)`,
//! the sup-norm caps `B∞,ρ` in all variants and the q-free annulus.

use serde::Serialize;
use thiserror::Error;

use crate::greens::ConeConstants;
use crate::nonlocal::{Kernel, NonlocalError};
use crate::vexp::ExponentField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("q = {q} must lie in (1, p-) = (1, {p_minus})")]
    Q { q: f64, p_minus: f64 },
    #[error("kernel bounds must satisfy 0 < b_* <= b^*, got ({lower}, {upper})")]
    KernelBounds { lower: f64, upper: f64 },
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
}

fn positive(name: &'static str, value: f64) -> Result<f64, BoundsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BoundsError::NonPositive { name, value })
    }
}

fn check_q(q: f64, p: &ExponentField) -> Result<(), BoundsError> {
    if q > 1.0 && q < p.p_minus() {
        Ok(())
    } else {
        Err(BoundsError::Q { q, p_minus: p.p_minus() })
    }
}

/// `ratio^{1/p⁻} − ratio^{1/p⁺}` below one, zero otherwise. Negative in the
/// sub-unit regime, as the formula is written.
pub fn eps1(ratio: f64, p: &ExponentField) -> Result<f64, BoundsError> {
    positive("ratio", ratio)?;
    Ok(if ratio >= 1.0 {
        0.0
    } else {
        ratio.powf(1.0 / p.p_minus()) - ratio.powf(1.0 / p.p_plus())
    })
}

/// `K^{1/p⁺} − K^{1/p⁻}` below one, zero otherwise.
pub fn eps2(k: f64, p: &ExponentField) -> Result<f64, BoundsError> {
    positive("K", k)?;
    Ok(if k >= 1.0 {
        0.0
    } else {
        k.powf(1.0 / p.p_plus()) - k.powf(1.0 / p.p_minus())
    })
}

fn check_q_gt_one(q: f64) -> Result<(), BoundsError> {
    if q > 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::Q { q, p_minus: f64::INFINITY })
    }
}

/// `∫₀¹ b^{1/(1−q)}`.
pub fn reciprocal_integral(q: f64, k: &Kernel) -> Result<f64, BoundsError> {
    check_q_gt_one(q)?;
    Ok(k.power_integral(1.0 / (1.0 - q))?)
}

/// `C₁(q) = (∫₀¹ b(1−s)^{1/(1−q)} ds)^{1−q}`.
pub fn c1(q: f64, k: &Kernel) -> Result<f64, BoundsError> {
    Ok(reciprocal_integral(q, k)?.powf(1.0 - q))
}

/// `C₂(q) = (∫₀¹ |b(1−s)|^{q/(q−1)} ds)^{(q−1)/q}`.
pub fn c2(q: f64, k: &Kernel) -> Result<f64, BoundsError> {
    check_q_gt_one(q)?;
    Ok(k.power_integral(q / (q - 1.0))?.powf((q - 1.0) / q))
}

/// `m_ρ = (ρ/(b∗1)(1))^{1/p⁺} + ε₁(ρ/(b∗1)(1))`.
pub fn m_rho(rho: f64, k: &Kernel, p: &ExponentField) -> Result<f64, BoundsError> {
    positive("rho", rho)?;
    let ratio = rho / k.l1_norm();
    Ok(ratio.powf(1.0 / p.p_plus()) + eps1(ratio, p)?)
}

/// `(ρ/C₁)^{1/p⁻} + ε₂(ρ/C₁)`, the Luxemburg-norm cap in exponent `p/q`.
fn m_pq(rho: f64, c1: f64, p: &ExponentField) -> Result<f64, BoundsError> {
    let k = rho / c1;
    Ok(k.powf(1.0 / p.p_minus()) + eps2(k, p)?)
}

/// `M_ρ = [(ρ/C₁(q))^{1/p⁻} + ε₂(ρ/C₁(q))] / (η₀ (β−α)^{q/p⁻})`.
pub fn big_m_rho(rho: f64, q: f64, cc: &ConeConstants, k: &Kernel, p: &ExponentField) -> Result<f64, BoundsError> {
    positive("rho", rho)?;
    let c1v = c1(q, k)?;
    Ok(m_pq(rho, c1v, p)? / (cc.eta0 * (cc.beta - cc.alpha).powf(q / p.p_minus())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BVariants {
    pub b_lux: f64,
    pub b_old: f64,
    pub b_consolidated: f64,
}

pub fn b_variants(rho: f64, q: f64, cc: &ConeConstants, k: &Kernel, p: &ExponentField) -> Result<BVariants, BoundsError> {
    positive("rho", rho)?;
    check_q(q, p)?;
    let j = reciprocal_integral(q, k)?;
    let c1v = j.powf(1.0 - q);
    let pm = p.p_minus();
    let b_lux = m_pq(rho, c1v, p)? / (cc.eta0 * (cc.beta - cc.alpha).powf(q / pm));
    let b_old = 2f64.powf((p.p_plus() - q) / pm) / cc.c0
        * (rho.powf(1.0 / q) * j.powf((q - 1.0) / q) + 1.0).powf(q / pm);
    Ok(BVariants { b_lux, b_old, b_consolidated: b_lux.min(b_old) })
}

/// Norm interval for `u ∈ ∂V̂_ρ` when `b_* ≤ b ≤ b^*`.
pub fn qfree_annulus(rho: f64, b_lower: f64, b_upper: f64, p: &ExponentField) -> Result<(f64, f64), BoundsError> {
    positive("rho", rho)?;
    check_kernel_bounds(b_lower, b_upper)?;
    let lo = rho / b_upper;
    let hi = rho / b_lower;
    Ok((
        lo.powf(1.0 / p.p_plus()) + eps1(lo, p)?,
        hi.powf(1.0 / p.p_minus()) + eps2(hi, p)?,
    ))
}

fn check_kernel_bounds(lower: f64, upper: f64) -> Result<(), BoundsError> {
    if lower > 0.0 && lower <= upper && upper.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::KernelBounds { lower, upper })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BStar {
    pub b_star_lux: f64,
    pub m_sup_star: f64,
    pub b_star: f64,
}

pub fn b_star(rho: f64, cc: &ConeConstants, b_lower: f64, p: &ExponentField) -> Result<BStar, BoundsError> {
    positive("rho", rho)?;
    positive("b_*", b_lower)?;
    let pm = p.p_minus();
    let k = rho / b_lower;
    let b_star_lux = (k.powf(1.0 / pm) + eps2(k, p)?) / (cc.eta0 * (cc.beta - cc.alpha).powf(1.0 / pm));
    let m_sup_star = 2f64.powf((p.p_plus() - pm) / pm) / cc.c0 * (rho.powf(1.0 / pm) + 1.0);
    Ok(BStar { b_star_lux, m_sup_star, b_star: b_star_lux.min(m_sup_star) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsLedger {
    pub rho: f64,
    pub q: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub m_rho: f64,
    #[serde(rename = "M_rho")]
    pub big_m_rho: f64,
    #[serde(rename = "C1q")]
    pub c1q: f64,
    #[serde(rename = "C2q")]
    pub c2q: Option<f64>,
    #[serde(rename = "B_lux")]
    pub b_lux: f64,
    #[serde(rename = "B_old")]
    pub b_old: f64,
    #[serde(rename = "B_consolidated")]
    pub b_consolidated: f64,
    pub qfree_lower: Option<f64>,
    pub qfree_upper: Option<f64>,
    #[serde(rename = "B_star_lux")]
    pub b_star_lux: Option<f64>,
    #[serde(rename = "M_sup_star")]
    pub m_sup_star: Option<f64>,
    #[serde(rename = "B_star")]
    pub b_star: Option<f64>,
}

/// Every bound at one `(ρ, q)`. `C₂(q)` is `None` when its integral
/// diverges; that only matters for the outer condition.
pub fn ledger(
    rho: f64,
    q: f64,
    cc: &ConeConstants,
    k: &Kernel,
    p: &ExponentField,
    b_bounds: Option<(f64, f64)>,
) -> Result<BoundsLedger, BoundsError> {
    let bv = b_variants(rho, q, cc, k, p)?;
    let c1q = c1(q, k)?;
    let c2q = match c2(q, k) {
        Ok(v) => Some(v),
        Err(BoundsError::Nonlocal(NonlocalError::Divergent { .. })) => None,
        Err(e) => return Err(e),
    };
    let ratio = rho / k.l1_norm();
    let (qfree, star) = match b_bounds {
        Some((lo, hi)) => (Some(qfree_annulus(rho, lo, hi, p)?), Some(b_star(rho, cc, lo, p)?)),
        None => (None, None),
    };
    Ok(BoundsLedger {
        rho,
        q,
        eps1: eps1(ratio, p)?,
        eps2: eps2(rho / c1q, p)?,
        m_rho: m_rho(rho, k, p)?,
        big_m_rho: bv.b_lux,
        c1q,
        c2q,
        b_lux: bv.b_lux,
        b_old: bv.b_old,
        b_consolidated: bv.b_consolidated,
        qfree_lower: qfree.map(|a| a.0),
        qfree_upper: qfree.map(|a| a.1),
        b_star_lux: star.map(|s| s.b_star_lux),
        m_sup_star: star.map(|s| s.m_sup_star),
        b_star: star.map(|s| s.b_star),
    })
}

/// The `ρ` at which `B_lux = B_old`, searched on `[lo, hi]` in log scale.
/// Below it the consolidated bound is the Luxemburg one.
pub fn crossover(
    q: f64,
    cc: &ConeConstants,
    k: &Kernel,
    p: &ExponentField,
    lo: f64,
    hi: f64,
) -> Result<Option<f64>, BoundsError> {
    let gap = |rho: f64| -> Result<f64, BoundsError> {
        let v = b_variants(rho, q, cc, k, p)?;
        Ok(v.b_lux - v.b_old)
    };
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let (ga, gb) = (gap(lo)?, gap(hi)?);
    if ga.signum() == gb.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let gm = gap(mid.exp())?;
        if gm.signum() == ga.signum() {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    Ok(Some((0.5 * (a + b)).exp()))
}
