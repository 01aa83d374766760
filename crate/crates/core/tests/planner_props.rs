use massart_forge::planner::{
    evaluate_schedule, log_binomial, massart_to_tsybakov_zeta, plan, tsybakov_to_massart, Constants, TsybakovParams,
};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

fn exact_log_binomial(n: u64, r: u64) -> f64 {
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    // ln of a big integer through its top 64 bits and the remaining shift
    let bits = acc.bits();
    if bits <= 1000 {
        acc.to_f64().unwrap().ln()
    } else {
        let shift = bits - 64;
        let top = (&acc >> shift).to_f64().unwrap();
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_binomial_matches_big_integers(n in 1u64..3000, frac in 0.0f64..1.0) {
        let r = (frac * n as f64) as u64;
        let exact = exact_log_binomial(n, r);
        let got = log_binomial(n, r);
        prop_assert!((got - exact).abs() <= 1e-10 * exact.abs().max(1.0), "n={} r={} got={} exact={}", n, r, got, exact);
    }

    #[test]
    fn tsybakov_round_trip(a in 0.5f64..4.0, alpha in 0.05f64..0.95, s in 0.01f64..0.99) {
        let params = TsybakovParams::new(a, alpha).unwrap();
        // valid zeta lies strictly below A·(1/2)^{α/(1−α)}
        let zeta = s * params.tail_bound(0.5);
        // below this gap 1/2 − η is not representable next to 1/2
        prop_assume!((zeta / a).powf(1.0 / params.exponent()) >= 1e-3);
        let eta = tsybakov_to_massart(params, zeta).unwrap();
        prop_assert!(eta > 0.0 && eta <= 0.5);
        let back = massart_to_tsybakov_zeta(params, eta);
        prop_assert!((back - zeta).abs() <= 1e-12 * zeta.max(1e-3), "zeta={} back={}", zeta, back);
    }

    #[test]
    fn schedule_is_monotone(log_m in 1e3f64..1e7, step in 1.01f64..3.0, lz in 1.5f64..50.0) {
        let zeta = (-lz).exp();
        let c = Constants::default();
        let lo = evaluate_schedule(log_m, 0.49, zeta, c);
        let hi = evaluate_schedule(log_m * step, 0.49, zeta, c);
        if let (Ok(lo), Ok(hi)) = (lo, hi) {
            prop_assert!(hi.log_tau < lo.log_tau);
            prop_assert!(hi.m >= lo.m);
            prop_assert!(hi.d >= lo.d);
        }
    }

    #[test]
    fn returned_plans_are_sound(
        log_m in 1e2f64..1e12,
        lz in 1.1f64..30.0,
        c_tau in 0.01f64..100.0,
        c_m in 1e-9f64..100.0,
        c_d in 0.01f64..10.0,
        c_zeta in 1e-3f64..10.0,
    ) {
        let constants = Constants { c_tau, c_m, c_d, c_zeta };
        if let Ok(p) = plan(log_m, 0.49, (-lz).exp(), constants) {
            prop_assert!(p.log_epsilon < (p.delta / 8.0).ln());
            prop_assert!(p.delta < 1.0);
            prop_assert!(p.d >= 2);
            prop_assert!(p.m_prime_log <= p.log_m);
            prop_assert!(p.l >= c_zeta);
        }
    }
}

#[test]
fn huge_scale_stays_finite() {
    let log_m = 1e6;
    let p = evaluate_schedule(log_m, 0.49, (-50.0f64).exp(), Constants::default()).unwrap();
    for v in [p.log_tau, p.k, p.delta, p.log_epsilon, p.c, p.m_prime_log] {
        assert!(v.is_finite());
    }
}
