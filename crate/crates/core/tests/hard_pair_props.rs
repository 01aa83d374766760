use massart_forge::gaussian::interval_mass;
use massart_forge::onedim::{build_hard_pair, HardPair, HardPairConfig, Interval, IntervalUnion};
use proptest::prelude::*;

fn config_strategy() -> impl Strategy<Value = HardPairConfig> {
    (0.01f64..0.4, 1u32..8, 0.05f64..0.95).prop_map(|(zeta, extra, frac)| {
        let floor = (4.0 * (1.0 / zeta).ln().sqrt()).floor() as u32 + 1;
        let d = floor.max(2) + extra;
        let delta = HardPairConfig::delta_for(zeta, d);
        HardPairConfig::new(zeta, d, frac * delta / 8.0).unwrap()
    })
}

fn pair_strategy() -> impl Strategy<Value = HardPair> {
    config_strategy().prop_map(|c| build_hard_pair(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn densities_respect_the_interval_system(pair in pair_strategy(), u in prop::collection::vec(-1.0f64..1.0, 200)) {
        let reach = pair.config.n_max as f64 * pair.config.delta;
        let core = pair.support_core();
        for s in u {
            let x = s * reach;
            let (a, b) = (pair.a.density(x), pair.b.density(x));
            prop_assert!(a >= 0.0 && b >= 0.0);
            if pair.j2.contains(x) {
                prop_assert_eq!(a, 0.0);
            }
            if pair.j1.contains(x) {
                prop_assert_eq!(b, 0.0);
            }
            if !core.contains(x) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn densities_inside_pieces(pair in pair_strategy(), idx in any::<prop::sample::Index>(), s in 0.0f64..1.0) {
        // points drawn inside J1 and J2 directly, which uniform x rarely hits
        let j1 = pair.j1.intervals();
        let i = &j1[idx.index(j1.len())];
        let x = i.lo + s * i.width();
        prop_assert_eq!(pair.b.density(x), 0.0);
        prop_assert!(pair.a.density(x) > 0.0);
        let j2 = pair.j2.intervals();
        let i = &j2[idx.index(j2.len())];
        let x = i.lo + s * i.width();
        prop_assert_eq!(pair.a.density(x), 0.0);
        prop_assert!(pair.b.density(x) > 0.0);
    }

    #[test]
    fn total_mass_and_tail(pair in pair_strategy()) {
        let ta = pair.a.total_mass().value;
        let tb = pair.b.total_mass().value;
        prop_assert!((ta - tb).abs() <= 1e-12 * ta);
        let core = pair.support_core();
        let zeta = pair.config.zeta;
        prop_assert!(1.0 - pair.a.mass_in(&core) <= zeta);
        prop_assert!(1.0 - pair.b.mass_in(&core) <= zeta);
        prop_assert_eq!(pair.j1.len(), 2 * pair.config.d as usize + 1);
        prop_assert_eq!(pair.j2.len(), 2 * pair.config.d as usize + 1);
        prop_assert!(pair.j1.union(&pair.j2).is_ok());
    }

    #[test]
    fn piece_integrals_match_gaussian_masses(pair in pair_strategy()) {
        for p in pair.a.pieces().iter().chain(pair.b.pieces()) {
            let direct = p.scale * interval_mass(p.lo + p.shift, p.hi + p.shift);
            prop_assert!((p.mass() - direct).abs() <= 1e-12 * direct.max(1e-300));
        }
    }

    #[test]
    fn membership_matches_linear_scan(
        starts in prop::collection::btree_set(0i32..400, 1..30),
        xs in prop::collection::vec(-5.0f64..45.0, 100),
    ) {
        let intervals: Vec<Interval> = starts.iter().map(|&s| Interval::new(s as f64 / 10.0, s as f64 / 10.0 + 0.05)).collect();
        let u = IntervalUnion::new(intervals.clone()).unwrap();
        for x in xs {
            let scan = intervals.iter().any(|i| i.lo <= x && x <= i.hi);
            prop_assert_eq!(u.contains(x), scan);
            if !intervals.iter().any(|i| x == i.lo || x == i.hi) {
                prop_assert_eq!(u.complement().contains(x), !scan);
            }
        }
    }
}

#[test]
fn cdf_reaches_one_and_is_monotone() {
    let pair = build_hard_pair(HardPairConfig::new(0.05, 10, 0.05).unwrap()).unwrap();
    for m in [&pair.a, &pair.b] {
        let mut last = 0.0;
        for i in 0..=4000 {
            let x = -15.0 + 30.0 * i as f64 / 4000.0;
            let c = m.cdf(x);
            assert!(c + 1e-15 >= last, "cdf decreased at {x}");
            last = c;
        }
        assert!((last - 1.0).abs() < 1e-12);
    }
}
