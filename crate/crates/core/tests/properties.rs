//! Seeded invariants across the modules.

mod common;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use luxloc::bounds;
use luxloc::existence::{self, ProblemSpec};
use luxloc::expr::{Bindings, Expression};
use luxloc::greens::{self, GreensFunction};
use luxloc::nonlocal::{self, Kernel, PhiEvaluator};
use luxloc::quadrature::{QuadratureConfig, QuadratureRule, SingularEnd};
use luxloc::solver::Operator;
use luxloc::vexp::{luxemburg_norm, modular, GridFunction};

const TOL: f64 = 1e-10;

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..50).prop_map(|n| n.to_string()),
        (0.0f64..10.0).prop_map(|x| format!("{x}")),
        Just("t".to_string()),
        Just("u".to_string()),
        Just("s".to_string()),
        Just("pi".to_string()),
        Just("e".to_string()),
    ]
}

fn expression() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a}){op}({b})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            (prop::sample::select(vec!["sin", "cos", "exp", "log", "sqrt", "abs", "tan", "gamma"]), inner.clone())
                .prop_map(|(f, a)| format!("{f}({a})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("pow({a}, {b})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, rng_algorithm: prop::test_runner::RngAlgorithm::ChaCha, ..ProptestConfig::default() })]

    #[test]
    fn serialise_round_trip_evaluates_identically(src in expression(), t in 0.0f64..1.0, u in 0.0f64..3.0, s in 0.0f64..1.0) {
        let e = Expression::parse(&src).unwrap();
        let again = Expression::parse(&e.serialise()).unwrap();
        let b = Bindings { t: Some(t), u: Some(u), s: Some(s) };
        match (e.eval(&b), again.eval(&b)) {
            (Ok(x), Ok(y)) => prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()), "{src}: {x} vs {y}"),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{src}: {x:?} vs {y:?}"),
        }
    }

    #[test]
    fn quadrature_is_linear(a in -5.0f64..5.0, c in -5.0f64..5.0, k in 1.0f64..6.0) {
        let rule = QuadratureRule::new(QuadratureConfig::default()).unwrap();
        let f = |x: f64| (k * x).sin() + x * x;
        let g = |x: f64| (-(k * x)).exp();
        let lhs = rule.integrate(|x| a * f(x) + c * g(x)).unwrap();
        let rhs = a * rule.integrate(f).unwrap() + c * rule.integrate(g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn dirichlet_is_symmetric(t in 0.0f64..=1.0, s in 0.0f64..=1.0) {
        let g = GreensFunction::dirichlet();
        prop_assert_eq!(g.eval(t, s).unwrap(), g.eval(s, t).unwrap());
    }
}

#[test]
fn graded_rule_is_linear_too() {
    let cfg = QuadratureConfig { grading_exponent: 3.0, singular_end: SingularEnd::Left, ..QuadratureConfig::default() };
    let rule = QuadratureRule::new(cfg).unwrap();
    let lhs = rule.integrate(|x| 2.0 * x.powf(-0.5) - 3.0 * x).unwrap();
    let rhs = 2.0 * rule.integrate(|x| x.powf(-0.5)).unwrap() - 3.0 * rule.integrate(|x| x).unwrap();
    assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());
}

#[test]
fn luxemburg_norm_invariants() {
    let mut r = rng(1);
    let mut failures = Vec::new();
    for p in exponent_fields() {
        let q = 1.0 + 0.5 * (p.p_minus() - 1.0);
        let p_over_q = p.scale(1.0 / q).unwrap();
        for i in 0..100 {
            let u = random_profile(&mut r, 257);
            if u.is_zero() {
                continue;
            }
            let n = luxemburg_norm(&u, &p, TOL).unwrap();
            let c = 10f64.powf(r.gen_range(-1.5..1.5));
            let nc = luxemburg_norm(&u.scaled(c).unwrap(), &p, TOL).unwrap();
            if (nc - c * n).abs() > 2.0 * TOL * c * n {
                failures.push(format!("{} #{i}: homogeneity {nc} vs {}", p.label(), c * n));
            }
            if n > u.sup() + TOL {
                failures.push(format!("{} #{i}: embedding {n} > {}", p.label(), u.sup()));
            }
            let m = modular(&u.scaled(1.0 / n).unwrap(), &p).unwrap();
            if (m - 1.0).abs() > 1e-9 {
                failures.push(format!("{} #{i}: modular at norm {m}", p.label()));
            }
            let bigger = u.with_values(u.values().iter().map(|v| v * r.gen_range(1.0..1.5)).collect()).unwrap();
            if n > luxemburg_norm(&bigger, &p, TOL).unwrap() + 2.0 * TOL {
                failures.push(format!("{} #{i}: lattice monotonicity", p.label()));
            }
            if luxemburg_norm(&u, &p_over_q, TOL).unwrap() > n + 2.0 * TOL {
                failures.push(format!("{} #{i}: exponent scaling", p.label()));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn plateau_ratio_bounded_by_eta0() {
    for g in [GreensFunction::dirichlet(), GreensFunction::right_focal()] {
        let eta = greens::compute_eta0(&g, 0.25, 0.75).unwrap();
        let c0 = greens::compute_c0(&g).unwrap();
        assert!(eta > 0.0 && eta <= 1.0 && c0 > 0.0 && c0 < 1.0);
        for i in 1..512 {
            let s = i as f64 / 512.0;
            assert!(g.min_t_on(s, 0.25, 0.75) / g.script_g(s) >= eta - 1e-9, "{:?} at s = {s}", g.kind());
        }
    }
}

#[test]
fn sup_cone_is_inside_hybrid_cone() {
    let mut r = rng(2);
    let cc = dirichlet_cone();
    let p = example_field();
    let mut in_sup = 0;
    for i in 0..500 {
        let u = if i % 2 == 0 { random_cone_function(&mut r, 257) } else { random_profile(&mut r, 257) };
        let s = nonlocal::in_sup_cone(&u, &cc);
        if s.member {
            in_sup += 1;
            let h = nonlocal::in_hybrid_cone(&u, &cc, &p).unwrap();
            assert!(h.member, "#{i}: {s:?} vs {h:?}");
        }
    }
    assert!(in_sup > 100, "only {in_sup} samples exercised the inclusion");
}

#[test]
fn boundary_scaling_and_phi_monotonicity() {
    let mut r = rng(3);
    let p = example_field();
    let kernels = [
        Kernel::constant(1.0).unwrap(),
        Kernel::from_expr(&Expression::parse("t^(-1/2)").unwrap(), 0.5).unwrap(),
    ];
    for k in &kernels {
        let phi = PhiEvaluator::new(&p, k).unwrap();
        for _ in 0..100 {
            let u = random_profile(&mut r, 257);
            if u.is_zero() {
                continue;
            }
            let rho = 10f64.powf(r.gen_range(-3.0..1.0));
            let v = nonlocal::scale_to_boundary(&u, rho, &p, k, 1e-9).unwrap();
            assert!((phi.eval(&v) - rho).abs() <= 1e-9 * rho.max(1.0));
            let w = u.with_values(u.values().iter().map(|x| x * r.gen_range(1.0..2.0)).collect()).unwrap();
            assert!(phi.eval(&u) <= phi.eval(&w) + 1e-12);
        }
    }
}

#[test]
fn bounds_algebraic_collapses() {
    let p = example_field();
    let k = Kernel::constant(1.0).unwrap();
    let (pm, pp) = (p.p_minus(), p.p_plus());
    let c1 = bounds::c1(1.5, &k).unwrap();
    for i in 0..=80 {
        let rho = 10f64.powf(-4.0 + 8.0 * i as f64 / 80.0);
        let ratio = rho / k.l1_norm();
        let m = bounds::m_rho(rho, &k, &p).unwrap();
        assert!((m - ratio.powf(1.0 / pm).min(ratio.powf(1.0 / pp))).abs() <= 1e-12 * m.max(1.0));
        let kk = rho / c1;
        let lhs = kk.powf(1.0 / pm) + bounds::eps2(kk, &p).unwrap();
        assert!((lhs - kk.powf(1.0 / pm).max(kk.powf(1.0 / pp))).abs() <= 1e-12 * lhs.max(1.0));
    }
}

#[test]
fn ledger_continuous_across_regime_boundary() {
    let p = example_field();
    let k = Kernel::constant(1.0).unwrap();
    let cc = dirichlet_cone();
    let b = bounds::c1(1.999, &k).unwrap();
    let lo = bounds::ledger(b * (1.0 - 1e-12), 1.999, &cc, &k, &p, Some((1.0, 1.0))).unwrap();
    let hi = bounds::ledger(b * (1.0 + 1e-12), 1.999, &cc, &k, &p, Some((1.0, 1.0))).unwrap();
    let pairs = [
        (lo.m_rho, hi.m_rho),
        (lo.big_m_rho, hi.big_m_rho),
        (lo.b_old, hi.b_old),
        (lo.b_consolidated, hi.b_consolidated),
        (lo.qfree_lower.unwrap(), hi.qfree_lower.unwrap()),
        (lo.qfree_upper.unwrap(), hi.qfree_upper.unwrap()),
        (lo.b_star.unwrap(), hi.b_star.unwrap()),
        (lo.eps1, hi.eps1),
        (lo.eps2, hi.eps2),
    ];
    for (i, (a, b)) in pairs.iter().enumerate() {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "entry {i}: {a} vs {b}");
    }
}

fn random_spec(r: &mut rand_chacha::ChaCha8Rng) -> ProblemSpec {
    let mut s = example_spec();
    let c: f64 = r.gen_range(0.1..10.0);
    let a: f64 = r.gen_range(0.5..2.0);
    s.f = Expression::parse(&format!("{c} * (1 + u/(1+u)) + {a} * t * u")).unwrap();
    s.lambda = 10f64.powf(r.gen_range(-2.0..2.0));
    let alpha = r.gen_range(0.05..0.4);
    s.alpha = alpha;
    s.beta = r.gen_range(alpha + 0.1..0.95);
    s.rho1 = 10f64.powf(r.gen_range(-4.0..-1.0));
    s.rho2 = r.gen_range(1.0..5.0);
    s.validate().unwrap();
    s
}

#[test]
fn n1_refines_n0() {
    let mut r = rng(4);
    let mut specs = vec![example_spec()];
    specs.extend((0..20).map(|_| random_spec(&mut r)));
    for (i, s) in specs.iter().enumerate() {
        let rep = existence::check(s).unwrap();
        let inner = rep.inner.unwrap_or_else(|| panic!("spec {i}: {:?}", rep.hypotheses.failures()));
        assert!(inner.n1 >= inner.n0 * (1.0 - 1e-12), "spec {i}: N1 = {} < N0 = {}", inner.n1, inner.n0);
    }
}

#[test]
fn condition1_jump_at_branch_point_is_reported() {
    // ρ₁ straddling C₁(q) flips the exponent; the left side is continuous,
    // so the jump shows up only through the threshold.
    let s = example_spec();
    let c1 = bounds::c1(s.q, &s.kernel).unwrap();
    let at = |rho1: f64| {
        let mut t = s.clone();
        t.rho1 = rho1;
        existence::check(&t).unwrap()
    };
    let below = at(c1 * (1.0 - 1e-9));
    let above = at(c1 * (1.0 + 1e-9));
    let (cb, ca) = (below.cond1.unwrap(), above.cond1.unwrap());
    assert_eq!(cb.branch, Some(existence::Branch::PPlus));
    assert_eq!(ca.branch, Some(existence::Branch::PMinus));
    let (tb, ta) = (below.thresholds.unwrap().lambda_min_threshold, above.thresholds.unwrap().lambda_min_threshold);
    // Both branches give (ρ₁/C₁)^{1/e} = 1 at the branch point: no jump in the threshold.
    assert!(rel(tb, ta) < 1e-6, "{tb} vs {ta}");
}

#[test]
fn operator_preserves_the_cone() {
    let mut r = rng(5);
    let s = {
        let mut s = example_spec();
        s.grid_nodes = 129;
        s
    };
    let op = Operator::new(&s).unwrap();
    let rep = existence::check(&s).unwrap();
    let cc = rep.cone_constants.unwrap();
    let nodes = op.nodes().to_vec();
    let mut tested = 0;
    while tested < 200 {
        let u0 = random_profile(&mut r, 129);
        if u0.is_zero() {
            continue;
        }
        let rho = s.rho1 * (s.rho2 / s.rho1).powf(r.gen_range(0.0..1.0));
        let u = nonlocal::scale_to_boundary(&u0, rho, &s.p, &s.kernel, 1e-9).unwrap();
        let u = GridFunction::new(nodes.clone(), u.values().to_vec()).unwrap();
        let tu = op.apply(&u, true).unwrap();
        let v = nonlocal::in_hybrid_cone(&tu, &cc, &s.p).unwrap();
        assert!(v.member, "{v:?}");
        tested += 1;
    }
}

#[test]
fn q_sweep_is_ordered_and_deterministic() {
    let s = example_spec();
    let a = existence::q_sweep(&s, 8).unwrap();
    let b = existence::q_sweep(&s, 8).unwrap();
    assert_eq!(a, b);
    assert!(a.rows.windows(2).all(|w| w[0].q < w[1].q));
    // With b ≡ 1 both thresholds improve as q → 1: (β−α)^{q/p⁻} grows and
    // ‖h‖ in q·p(·) shrinks.
    assert_eq!(a.best_min.unwrap().q, a.rows[0].q);
    assert_eq!(a.best_max.unwrap().q, a.rows[0].q);
    let end = a.rows.last().unwrap().lambda_max_threshold.unwrap();
    let start = a.rows[0].lambda_max_threshold.unwrap();
    assert!(end < start);
}
