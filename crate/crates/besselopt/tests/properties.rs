//! Randomized invariants complementing the deterministic acceptance suite.

use besselopt::cli::{records_from_csv, records_from_json, records_to_csv, records_to_json, ResultRecord};
use besselopt::dynamics::fit_exponent_from_masses;
use besselopt::kernels::{drift_integral, Strategy};
use besselopt::spectral::eigen_step;
use proptest::prelude::*;
use proptest::strategy::Strategy as ProptestStrategy;

fn finite_f64() -> impl ProptestStrategy<Value = f64> {
    prop_oneof![
        -1e300..1e300f64,
        -1.0..1.0f64,
        Just(0.1 + 0.2),
        Just(f64::MIN_POSITIVE),
        Just(-0.0),
    ]
}

proptest! {
    /// Serialized records survive JSON and CSV round trips bit-for-bit.
    #[test]
    fn record_round_trips_lossless(a in finite_f64(), b in finite_f64(), s in 0u64..u64::MAX) {
        let mut rec = ResultRecord::new("solve", "solution");
        rec.eta = Some(a);
        rec.eigenvalue_e = Some(b);
        rec.seed = Some(s);
        let records = vec![rec];
        let json = records_to_json(&records).unwrap();
        prop_assert_eq!(&records_from_json(&json).unwrap(), &records);
        let csv = records_to_csv(&records).unwrap();
        prop_assert_eq!(&records_from_csv(&csv).unwrap(), &records);
    }

    /// The rate of a step strategy stays within its bounds and switches
    /// exactly once.
    #[test]
    fn step_rate_bounded_and_monotone(
        r1 in 0.1..5.0f64,
        gap in 0.0..5.0f64,
        c in 0.05..4.0f64,
        x in 0.0..20.0f64,
        y in 0.0..20.0f64,
    ) {
        let s = Strategy::step(r1, r1 + gap, c).unwrap();
        let r = s.rate(x);
        prop_assert!((r1..=r1 + gap).contains(&r));
        if x <= y {
            prop_assert!(s.rate(x) <= s.rate(y));
            prop_assert!(drift_integral(&s, x) <= drift_integral(&s, y));
        }
    }

    /// A pure power law is recovered exactly by the tail-slope fit.
    #[test]
    fn power_law_slope_recovered(k in 0.2..2.0f64, c in 0.01..0.9f64) {
        let eps: Vec<f64> = (0..8).map(|i| 0.5 * 0.5f64.powi(i)).collect();
        let masses: Vec<f64> = eps.iter().map(|e| c * e.powf(k)).collect();
        let fit = fit_exponent_from_masses(&eps, &masses).unwrap();
        prop_assert!((fit.slope - k).abs() < 1e-9, "slope {} vs {k}", fit.slope);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    /// The principal eigenvalue depends only on the rate ratio: scaling both
    /// rates by `s` and the cutoff by `sqrt(s)` leaves it unchanged.
    #[test]
    fn eigenvalue_scale_invariant(scale in 0.3..3.0f64, c in 0.6..1.8f64) {
        let base = eigen_step(1.0, 1.0, 4.0, c).unwrap();
        let scaled = eigen_step(1.0, scale, 4.0 * scale, scale.sqrt() * c).unwrap();
        prop_assert!(
            (base.eigenvalue_e - scaled.eigenvalue_e).abs() < 1e-9,
            "{} vs {}",
            base.eigenvalue_e,
            scaled.eigenvalue_e
        );
    }
}
