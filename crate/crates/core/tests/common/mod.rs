#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use luxloc::expr::Expression;
use luxloc::greens::{ConeConstants, GreensFunction};
use luxloc::problem::{parse_problem, BUNDLED_EXAMPLE};
use luxloc::existence::ProblemSpec;
use luxloc::vexp::{ExponentField, GridFunction};

pub const SEED: u64 = 0x5eed_2025;

pub fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn example_spec() -> ProblemSpec {
    parse_problem(BUNDLED_EXAMPLE).unwrap().spec
}

pub fn example_field() -> ExponentField {
    example_spec().p
}

/// The five exponent fields of the property suite.
pub fn exponent_fields() -> Vec<ExponentField> {
    let e = |s: &str, b: Option<(f64, f64)>| ExponentField::from_expr(&Expression::parse(s).unwrap(), b).unwrap();
    vec![
        ExponentField::constant(2.0).unwrap(),
        ExponentField::constant(1.5).unwrap(),
        example_field(),
        e("2 + t", None),
        e("3 + sin(2*pi*t)", Some((2.0, 4.0))),
    ]
}

/// A nonnegative profile with a few bumps, random overall scale and
/// occasional flat zero stretches.
pub fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> GridFunction {
    let k = rng.gen_range(1..=4);
    let bumps: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.03..0.5), rng.gen_range(0.1..1.0)))
        .collect();
    let floor = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.3) };
    let cut = if rng.gen_bool(0.2) { rng.gen_range(0.1..0.5) } else { 0.0 };
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    GridFunction::sample(n, |t| {
        let v: f64 = bumps.iter().map(|&(c, w, a)| a * (-((t - c) / w).powi(2)).exp()).sum::<f64>() + floor;
        scale * (v - cut).max(0.0)
    })
    .unwrap()
}

/// Positive combination of Dirichlet Green's columns `G(·, sₖ)`: always in
/// both cones for `[1/4, 3/4]`, `η₀ = 1/4`, `C₀ = 1/2`.
pub fn random_cone_function(rng: &mut ChaCha8Rng, n: usize) -> GridFunction {
    let g = GreensFunction::dirichlet();
    let k = rng.gen_range(1..=5);
    let cols: Vec<(f64, f64)> = (0..k).map(|_| (rng.gen_range(0.02..0.98), rng.gen_range(0.05..1.0))).collect();
    let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
    GridFunction::sample(n, |t| scale * cols.iter().map(|&(s, c)| c * g.eval(t, s).unwrap()).sum::<f64>()).unwrap()
}

pub fn dirichlet_cone() -> ConeConstants {
    ConeConstants::new(0.25, 0.75, 0.25, 0.5).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
