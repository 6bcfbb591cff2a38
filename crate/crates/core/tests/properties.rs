use dnstat::density::DensityConfig;
use dnstat::detectors::{default_grid, markov_bound_check, st_dndc, st_dnm, st_dnp, DetectorConfig};
use dnstat::dnmeans::{convolution, dn_mean, dn_stat_limit, WeightSequence};
use dnstat::korovkin::{mkz_apply, mkz_apply_many, SampledFunction};
use dnstat::rvmodel::zoo;
use dnstat::{CdfAt, DeferredSchedule, NormalizerMode, RealSeq, RvModel, WeightScheme};
use proptest::prelude::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn schemes() -> Vec<(DeferredSchedule, WeightScheme)> {
    vec![
        (DeferredSchedule::plain(), WeightScheme::ones()),
        (DeferredSchedule::example1(), WeightScheme::example1()),
        (DeferredSchedule::affine(1, 0, 3, 0), WeightScheme::identity()),
        (DeferredSchedule::affine(0, 0, 2, 0), WeightScheme::ones()),
        (
            DeferredSchedule::affine(2, -1, 4, -1),
            WeightScheme::tabulated(vec![1.0, 2.0, 3.0], vec![0.5, 1.0]).unwrap(),
        ),
    ]
}

fn scheme() -> impl Strategy<Value = (DeferredSchedule, WeightScheme)> {
    (0..schemes().len()).prop_map(|i| schemes().swap_remove(i))
}

fn model() -> impl Strategy<Value = RvModel> {
    (0..zoo().len()).prop_map(|i| zoo().swap_remove(i))
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn regular_means_preserve_constants(sw in scheme(), c in -100.0f64..100.0, m in 1u64..300) {
        let (s, w) = sw;
        let t = dn_mean(&RealSeq::constant(c), &s, &w, m, NormalizerMode::Regular).unwrap();
        prop_assert!((t - c).abs() <= 1e-12 * c.abs().max(1.0), "t={t} c={c}");
    }

    #[test]
    fn literal_matches_regular_for_constant_weights(
        a in 0.1f64..10.0, b in 0.1f64..10.0, m in 1u64..300, xa in 0i64..3, extra in 1i64..4,
    ) {
        let s = DeferredSchedule::affine(xa, 0, xa + extra, 0);
        let w = WeightScheme::new(WeightSequence::Constant(a), WeightSequence::Constant(b));
        let reg = convolution(&s, &w, m, NormalizerMode::Regular).unwrap();
        let lit = convolution(&s, &w, m, NormalizerMode::PaperLiteral).unwrap();
        prop_assert!((reg - lit).abs() <= 1e-12 * reg);
        let seq = RealSeq::identity();
        let tr = dn_mean(&seq, &s, &w, m, NormalizerMode::Regular).unwrap();
        let tl = dn_mean(&seq, &s, &w, m, NormalizerMode::PaperLiteral).unwrap();
        prop_assert!((tr - tl).abs() <= 1e-12 * tr.abs());
    }

    #[test]
    fn means_are_invariant_under_weight_scaling(
        e in prop::collection::vec(0.1f64..5.0, 1..6),
        g in prop::collection::vec(0.1f64..5.0, 1..6),
        k in 0.01f64..100.0,
        m in 1u64..200,
    ) {
        let s = DeferredSchedule::affine(1, 0, 3, 0);
        let w1 = WeightScheme::tabulated(e.clone(), g.clone()).unwrap();
        let w2 = WeightScheme::tabulated(e.iter().map(|v| v * k).collect(), g).unwrap();
        let seq = RealSeq::alternating();
        let t1 = dn_mean(&seq, &s, &w1, m, NormalizerMode::Regular).unwrap();
        let t2 = dn_mean(&seq, &s, &w2, m, NormalizerMode::Regular).unwrap();
        prop_assert!((t1 - t2).abs() <= 1e-10, "{t1} vs {t2}");
    }
}

proptest! {
    #![proptest_config(cases(40))]

    #[test]
    fn densities_lie_in_unit_interval_and_shrink_with_threshold(
        sw in scheme(),
        values in prop::collection::vec(-3.0f64..3.0, 1..40),
        eps in 0.05f64..2.0,
        bump in 0.01f64..2.0,
    ) {
        let (s, w) = sw;
        let seq = RealSeq::from_values("v", values);
        let cfg = DensityConfig::default().with_horizon(80);
        let lo = dn_stat_limit(&seq, 0.0, eps, &s, &w, &cfg).unwrap();
        let hi = dn_stat_limit(&seq, 0.0, eps + bump, &s, &w, &cfg).unwrap();
        for (a, b) in lo.trace.iter().zip(&hi.trace) {
            prop_assert!((0.0..=1.0).contains(&a.density));
            prop_assert!(b.count <= a.count);
        }
        prop_assert!(hi.tail_max <= lo.tail_max);
    }

    #[test]
    fn cdfs_are_monotone(model in model(), m in 1u64..500, mut ts in prop::collection::vec(-5.0f64..5.0, 2..20)) {
        ts.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        for t in ts {
            let f = model.cdf(CdfAt::Index(m), t).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn markov_bound_holds(model in model(), m in 1u64..5000, eps in 0.01f64..3.0, r in 1.0f64..3.0) {
        let c = markov_bound_check(&model, m, eps, r).unwrap();
        prop_assert!(c.holds, "{}: {c:?}", model.name());
    }
}

/// Thresholds chosen so that each index counted by the weaker mode is also
/// counted by the stronger one (Markov, and `|F_m - F| <= P(|D| >= eps)`
/// away from the limit atoms); the small slack absorbs rounding.
const SLACK: f64 = 1.0 - 1e-9;

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn mean_convergence_implies_probability_convergence(
        model in model(), sw in scheme(), eps in 0.05f64..2.0, delta in 0.05f64..1.0, r in 1.0f64..2.5,
    ) {
        let (s, w) = sw;
        let density = DensityConfig::default().with_horizon(150);
        let p = DetectorConfig { eps, delta, r, grid: None, density };
        let q = DetectorConfig { eps: delta * eps.powf(r) * SLACK, ..p.clone() };
        let dnp = st_dnp(&model, &s, &w, &p).unwrap();
        let dnm = st_dnm(&model, &s, &w, &q).unwrap();
        for (a, b) in dnp.trace.iter().zip(&dnm.trace) {
            prop_assert!(a.count <= b.count, "{} m={}", model.name(), a.m);
        }
        prop_assert!(!dnm.converges() || dnp.converges());
    }

    #[test]
    fn probability_convergence_implies_distribution_convergence(
        model in model(), sw in scheme(), level in 0.05f64..1.0,
    ) {
        let (s, w) = sw;
        let grid = default_grid(&model).unwrap();
        let atoms = model.limit_atoms().unwrap();
        let gap = grid
            .iter()
            .flat_map(|t| atoms.iter().map(move |a| (t - a).abs()))
            .fold(f64::INFINITY, f64::min);
        let density = DensityConfig::default().with_horizon(150);
        let dc = DetectorConfig { eps: level, delta: 0.5, r: 1.0, grid: Some(grid), density };
        let pc = DetectorConfig { eps: 0.5 * gap, delta: level * SLACK, ..dc.clone() };
        let dndc = st_dndc(&model, &s, &w, &dc).unwrap();
        let dnp = st_dnp(&model, &s, &w, &pc).unwrap();
        for point in &dndc.points {
            for (a, b) in point.result.trace.iter().zip(&dnp.trace) {
                prop_assert!(a.count <= b.count, "{} t={} m={}", model.name(), point.t, a.m);
            }
        }
        prop_assert!(!dnp.converges() || dndc.converges());
    }
}

fn trig_poly(c: [f64; 4]) -> SampledFunction {
    SampledFunction::new("p", move |y| {
        c[0] + c[1] * y + c[2] * (3.0 * y).sin() + c[3] * (5.0 * y * y).cos()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn mkz_is_linear(
        c1 in prop::array::uniform4(-2.0f64..2.0),
        c2 in prop::array::uniform4(-2.0f64..2.0),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        m in 1u64..120,
        y in 0.0f64..0.99,
    ) {
        let (f, g) = (trig_poly(c1), trig_poly(c2));
        let h = SampledFunction::linear(a, &f, b, &g).unwrap();
        let v = mkz_apply_many(&[&f, &g, &h], m, y, 1e-12).unwrap();
        prop_assert!((v[2] - (a * v[0] + b * v[1])).abs() <= 1e-9, "{v:?}");
    }

    #[test]
    fn mkz_is_positive(c in prop::array::uniform4(-2.0f64..2.0), m in 1u64..120, y in 0.0f64..0.99) {
        let p = trig_poly(c);
        let f = SampledFunction::new("p^2", move |t| p.eval(t).powi(2)).unwrap();
        prop_assert!(mkz_apply(&f, m, y, 1e-12).unwrap() >= 0.0);
    }

    #[test]
    fn mkz_moments(m in 1u64..300, y in 0.0f64..0.995) {
        let fs = SampledFunction::test_functions();
        let v = mkz_apply_many(&[&fs[0], &fs[1], &fs[2]], m, y, 1e-10).unwrap();
        prop_assert!((v[0] - 1.0).abs() <= 1e-8);
        prop_assert!((v[1] - y).abs() <= 1e-8);
        let excess = v[2] - y * y;
        let scale = y * (1.0 - y).powi(2);
        prop_assert!(excess >= scale / (m as f64 + 1.0) - 1e-9, "m={m} y={y} excess={excess}");
        prop_assert!(excess <= y * (1.0 - y) / m as f64 + 1e-9, "m={m} y={y} excess={excess}");
    }
}
