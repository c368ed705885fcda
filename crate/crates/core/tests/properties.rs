//! Property tests over random exponent fields, domains and functions.

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fraclab::embeddings::{patch_union_check, proof_chain_check};
use fraclab::exponents::{
    boundary_samples, covering_partition, critical_trace_exponent, domain_samples, frozen_margin_holds,
    subcritical_gap, Arity, CoveringOptions, ExponentField, ExtReal, Role,
};
use fraclab::geometry::{Domain, GridFunction, PairQuadrature, Scope};
use fraclab::modular::{
    boundary_gagliardo_seminorm, gagliardo_seminorm, luxemburg_norm, modular_gagliardo, modular_lebesgue,
};

/// `c0 + c1 sin(k u) + c2 v` in the named coordinates.
fn profile(c: &[f64; 4], u: &str, v: &str) -> String {
    format!("{} + {} * sin({} * {u}) + {} * {v}", c[0], c[1], c[3], c[2])
}

fn univariate(c: &[f64; 4], dim: usize) -> String {
    if dim == 1 {
        profile(c, "x", "x")
    } else {
        profile(c, "x1", "x2")
    }
}

/// Symmetric average of a profile at the two points.
fn symmetric(c: &[f64; 4], dim: usize) -> String {
    if dim == 1 {
        format!("(({}) + ({})) / 2", profile(c, "x", "x"), profile(c, "y", "y"))
    } else {
        format!("(({}) + ({})) / 2", profile(c, "x1", "x2"), profile(c, "y1", "y2"))
    }
}

fn coeffs(lo: f64, hi: f64) -> impl Strategy<Value = [f64; 4]> {
    (lo..hi, -0.3..0.3f64, -0.3..0.3f64, 1.0..4.0f64).prop_map(|(a, b, c, k)| [a, b, c, k])
}

fn domain(two_d: bool, n: usize) -> Arc<Domain> {
    if two_d {
        Arc::new(Domain::rectangle([0.0, 0.0], [1.0, 1.5], n, n + 2).unwrap())
    } else {
        Arc::new(Domain::interval(-0.5, 1.0, 4 * n).unwrap())
    }
}

fn random_function(d: &Arc<Domain>, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
    GridFunction::from_fn(d.clone(), |x| a[0] + a[1] * (3.0 * x[0]).sin() + a[2] * x[1] * x[0] + a[3] * (2.0 * x[1]).cos())
        .unwrap()
}

fn field(src: &str, arity: Arity) -> ExponentField {
    ExponentField::parse(src, arity).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lebesgue_unit_ball_and_homogeneity(two_d in any::<bool>(), n in 3usize..9, c in coeffs(1.5, 3.5), seed in any::<u64>(), scale in 0.01..50.0f64, boundary in any::<bool>()) {
        let d = domain(two_d, n);
        let scope = if boundary { Scope::Boundary } else { Scope::Interior };
        let arity = if boundary { Arity::Boundary } else { Arity::Univariate };
        let p = field(&univariate(&c, d.dim()), arity);
        let f = random_function(&d, seed);
        let r = luxemburg_norm(&f, &p, scope).unwrap();
        let m = modular_lebesgue(&f, &p, scope, r.lambda_star).unwrap();
        prop_assert!(m <= 1.0 && m > 1.0 - 1e-10, "{m}");
        let scaled = luxemburg_norm(&f.scaled(-scale), &p, scope).unwrap().lambda_star;
        prop_assert!(rel(scaled, scale * r.lambda_star) < 1e-10);
    }

    #[test]
    fn lebesgue_triangle_inequality(two_d in any::<bool>(), n in 3usize..9, c in coeffs(1.2, 3.5), s1 in any::<u64>(), s2 in any::<u64>()) {
        let d = domain(two_d, n);
        let p = field(&univariate(&c, d.dim()), Arity::Univariate);
        let (f, g) = (random_function(&d, s1), random_function(&d, s2));
        let nf = luxemburg_norm(&f, &p, Scope::Interior).unwrap().lambda_star;
        let ng = luxemburg_norm(&g, &p, Scope::Interior).unwrap().lambda_star;
        let nfg = luxemburg_norm(&f.add(&g).unwrap(), &p, Scope::Interior).unwrap().lambda_star;
        prop_assert!(nfg <= (nf + ng) * (1.0 + 1e-12));
    }

    #[test]
    fn constant_exponent_is_classical_norm(two_d in any::<bool>(), n in 3usize..9, p in 1.05..6.0f64, seed in any::<u64>()) {
        let d = domain(two_d, n);
        let f = random_function(&d, seed);
        let lam = luxemburg_norm(&f, &ExponentField::constant(p, Arity::Univariate), Scope::Interior).unwrap().lambda_star;
        let w = d.weights(Scope::Interior);
        let classical = f.interior().iter().zip(&w).map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
        prop_assert!(rel(lam, classical) < 1e-11);
    }

    #[test]
    fn seminorm_unit_ball_homogeneity_translation(two_d in any::<bool>(), n in 3usize..7, c in coeffs(1.6, 3.0), s in 0.1..0.9f64, seed in any::<u64>(), scale in 0.1..20.0f64, shift in -5.0..5.0f64) {
        let d = domain(two_d, n);
        let p = field(&symmetric(&c, d.dim()), Arity::Bivariate);
        let s = ExponentField::constant(s, Arity::Bivariate);
        let pq = PairQuadrature::new(&d, Scope::Interior).unwrap();
        let f = random_function(&d, seed);
        let lam = gagliardo_seminorm(&f, &p, &s, &pq).unwrap().lambda_star;
        let m = modular_gagliardo(&f, &p, &s, &pq, lam).unwrap();
        prop_assert!(m <= 1.0 && m > 1.0 - 1e-10, "{m}");
        let scaled = gagliardo_seminorm(&f.scaled(scale), &p, &s, &pq).unwrap().lambda_star;
        prop_assert!(rel(scaled, scale * lam) < 1e-10);
        let one = GridFunction::from_fn(d.clone(), |_| shift).unwrap();
        let moved = gagliardo_seminorm(&f.add(&one).unwrap(), &p, &s, &pq).unwrap().lambda_star;
        prop_assert!(rel(moved, lam) < 1e-9);
    }

    #[test]
    fn transposed_symmetric_field_gives_identical_bits(n in 3usize..7, c in coeffs(1.6, 3.0), seed in any::<u64>()) {
        let d = domain(true, n);
        let mut p = field(&symmetric(&c, 2), Arity::Bivariate);
        p.validate_bounds(&d, Role::Exponent, 2).unwrap();
        prop_assert_eq!(p.symmetric(), Some(true));
        let s = field("0.4", Arity::Bivariate);
        let pq = PairQuadrature::new(&d, Scope::Interior).unwrap();
        let f = random_function(&d, seed);
        let a = gagliardo_seminorm(&f, &p, &s, &pq).unwrap().lambda_star;
        let b = gagliardo_seminorm(&f, &p.transposed(), &s, &pq).unwrap().lambda_star;
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn diagonal_extension_and_idempotent_bounds(two_d in any::<bool>(), n in 2usize..8, c in coeffs(1.5, 3.0)) {
        let d = domain(two_d, n);
        let mut p = field(&symmetric(&c, d.dim()), Arity::Bivariate);
        let first = p.validate_bounds(&d, Role::Exponent, 2).unwrap();
        let second = p.validate_bounds(&d, Role::Exponent, 2).unwrap();
        prop_assert_eq!(first, second);
        let single = field(&univariate(&c, d.dim()), Arity::Univariate);
        for x in domain_samples(&d, 2) {
            prop_assert!(rel(p.at(&x), single.at(&x)) < 1e-15);
            prop_assert!(p.at(&x) >= first.0 && p.at(&x) <= first.1);
        }
    }

    #[test]
    fn gap_shrinks_as_q_grows(c in coeffs(2.0, 2.8), s in 0.3..0.6f64, q0 in 1.05..1.3f64, bump in 0.0..0.3f64) {
        let d = domain(true, 6);
        let p = field(&symmetric(&c, 2), Arity::Bivariate);
        let s = ExponentField::constant(s, Arity::Bivariate);
        let q = field(&format!("{q0} + 0.1 * x1"), Arity::Boundary);
        let q_up = field(&format!("{} + 0.1 * x1", q0 + bump), Arity::Boundary);
        let base = subcritical_gap(&p, &q, &s, &d, 2);
        let raised = subcritical_gap(&p, &q_up, &s, &d, 2);
        if let (Ok(a), Ok(b)) = (&base, &raised) {
            prop_assert!(b.k <= a.k);
        }
        if base.is_err() {
            prop_assert!(raised.is_err());
        }
    }

    #[test]
    fn certificate_survives_refinement(c in coeffs(2.3, 2.6), s0 in 0.5..0.6f64, s1 in -0.05..0.05f64, q0 in 1.05..1.2f64) {
        let coarse = domain(true, 8);
        let p = field(&symmetric(&c, 2), Arity::Bivariate);
        let s = field(&format!("{s0} + {s1} * (x1 + y1) / 2"), Arity::Bivariate);
        let q = field(&format!("{q0} + 0.1 * x2"), Arity::Boundary);
        let gap = subcritical_gap(&p, &q, &s, &coarse, 2).unwrap();
        let cert = covering_partition(&p, &q, &s, &coarse, gap.k, &CoveringOptions::default()).unwrap();
        prop_assert!(cert.is_valid());
        let fine = domain(true, 16);
        for x in boundary_samples(&fine, 4) {
            let mut covered = false;
            for pt in cert.patches.iter().filter(|pt| pt.contains(&x, 2)) {
                covered = true;
                prop_assert!(critical_trace_exponent(&p, &s, 2, &x).sub(q.at(&x)) >= cert.gap_k.scale(0.5));
                prop_assert!(frozen_margin_holds(2, pt.p_i, pt.s_i, cert.gap_k, q.at(&x)));
                prop_assert!(p.at(&x) > pt.p_i);
                prop_assert!(s.at(&x) >= pt.s_i - 1e-12);
            }
            prop_assert!(covered, "{:?} not covered", x);
        }
    }

    #[test]
    fn proof_chain_inequalities_hold(c in coeffs(2.3, 2.6), q0 in 1.05..1.2f64, seed in any::<u64>()) {
        let d = Arc::new(Domain::rectangle([0.0, 0.0], [1.0, 1.0], 10, 10).unwrap());
        let p = field(&symmetric(&c, 2), Arity::Bivariate);
        let s = field("0.5", Arity::Bivariate);
        let q = field(&format!("{q0} + 0.1 * x1"), Arity::Boundary);
        let gap = subcritical_gap(&p, &q, &s, &d, 2).unwrap();
        let cert = covering_partition(&p, &q, &s, &d, gap.k, &CoveringOptions::default()).unwrap();
        let f = random_function(&d, seed);
        for r in proof_chain_check(&f, &cert, &p, &s).unwrap() {
            prop_assert!(r.weighted_bound_holds && r.monotone_holds, "patch {}", r.patch);
            prop_assert!(r.weighted_norm <= r.patch_seminorm * (1.0 + 1e-12));
            prop_assert!(r.patch_seminorm <= r.domain_seminorm * (1.0 + 1e-12));
        }
        prop_assert!(patch_union_check(&f, &cert, &q).unwrap().holds);
    }
}

#[test]
fn gap_is_infinite_when_sp_reaches_n() {
    let d = domain(true, 4);
    let gap = subcritical_gap(&field("2.5", Arity::Bivariate), &field("2", Arity::Boundary), &field("0.8", Arity::Bivariate), &d, 2)
        .unwrap();
    assert_eq!(gap.k, ExtReal::Infinite);
}

#[test]
fn boundary_seminorm_refines_smoothly() {
    let at = |n: usize| {
        let d = Arc::new(Domain::rectangle([0.0, 0.0], [1.0, 1.0], n, n).unwrap());
        let f = GridFunction::from_fn(d.clone(), |x| (2.0 * x[0]).sin() + x[1] * x[1]).unwrap();
        let pq = PairQuadrature::new(&d, Scope::Boundary).unwrap();
        boundary_gagliardo_seminorm(&f, &field("1.8", Arity::Bivariate), &field("0.3", Arity::Bivariate), &pq)
            .unwrap()
            .lambda_star
    };
    let (a, b) = (at(32), at(64));
    assert!(rel(a, b) < 0.05, "{a} {b}");
}
