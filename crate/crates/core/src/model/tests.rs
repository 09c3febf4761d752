use super::*;
use crate::ballots::{summarize, Scope, TallyRow};
use proptest::prelude::*;

fn dist(pairs: &[(f64, f64)]) -> DistanceDistribution {
    DistanceDistribution::from_weighted(pairs.iter().copied()).unwrap()
}

fn uniform_grid(x_max: f64, n: usize) -> DistanceDistribution {
    dist(&(0..=n).map(|k| (x_max * k as f64 / n as f64, 1.0)).collect::<Vec<_>>())
}

fn point_mass(x: f64, support: f64) -> DistanceDistribution {
    dist(&[(x, 1.0)]).with_support_max(support).unwrap()
}

/// Exact first and second moments of the discrete uniform grid of `n + 1`
/// points on `[0, x_max]`.
fn grid_moments(x_max: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    (x_max / 2.0, x_max * x_max * (2.0 * nf + 1.0) / (6.0 * nf))
}

fn summary_with_delta(v_h: u64, v_n: u64) -> BallotSummary {
    let row = TallyRow {
        region_id: "R".into(),
        unit_id: "u".into(),
        votes_h: v_h,
        votes_n: v_n,
        votes_other: 0,
        counted_by_halftime: true,
        settlement_id: None,
    };
    summarize(&[row], &Scope::Country).unwrap()
}

fn random_dist() -> impl Strategy<Value = DistanceDistribution> {
    prop::collection::vec((0.0f64..400.0, 1e-3f64..1.0), 2..400).prop_filter_map("needs spread", |atoms| {
        let d = DistanceDistribution::from_weighted(atoms).ok()?;
        (d.x_max() > 0.0 && gip_lower_bound(&d).is_ok()).then_some(d)
    })
}

#[test]
fn fair_win_moment_examples() {
    assert!(moment_fair_win(&uniform_grid(10.0, 10)).unwrap().abs() < 1e-14);
    assert_eq!(moment_fair_win(&point_mass(8.0, 8.0)).unwrap(), 4.0);
    let d = dist(&[(10.0, 0.3), (20.0, 0.7)]);
    assert!((moment_fair_win(&d).unwrap() - 7.0).abs() < 1e-12);
}

#[test]
fn halftime_lead_moment_examples() {
    let x_max = 60.0;
    let u = uniform_grid(x_max, 100_000);
    let got = moment_halftime_lead(&u).unwrap();
    let want = x_max * x_max / 12.0;
    assert!((got / want - 1.0).abs() < 1e-3);
    assert_eq!(moment_halftime_lead(&point_mass(8.0, 8.0)).unwrap(), 0.0);
    assert_eq!(moment_halftime_lead(&point_mass(4.0, 8.0)).unwrap(), 0.0);
}

#[test]
fn degenerate_support_is_reported() {
    let d = dist(&[(0.0, 1.0)]);
    assert!(matches!(moment_fair_win(&d), Err(Error::Degenerate(_))));
    assert!(matches!(moment_halftime_lead(&d), Err(Error::Degenerate(_))));
    assert!(!conjecture_all_geo(&d));
    assert!(Moments::of(&d).is_degenerate());
    assert!(matches!(gip_lower_bound(&point_mass(8.0, 8.0)), Err(Error::Degenerate(_))));
}

#[test]
fn all_geo_examples() {
    assert!(!conjecture_all_geo(&point_mass(5.0, 5.0)));
    assert!(!conjecture_all_geo(&uniform_grid(10.0, 20)));
    // 0.6 at 0.9 x_M and 0.4 at 0 with x_M = 1:
    // E(X − 1/2) = 0.54 − 0.5 = 0.04
    // E[(X − 1/2)(X − 1)] = 0.6·0.4·(−0.1) + 0.4·(−0.5)·(−1) = 0.176
    let d = dist(&[(0.9, 0.6), (0.0, 0.4)]).with_support_max(1.0).unwrap();
    assert!((moment_fair_win(&d).unwrap() - 0.04).abs() < 1e-15);
    assert!((moment_halftime_lead(&d).unwrap() - 0.176).abs() < 1e-15);
    assert!(conjecture_all_geo(&d));
}

#[test]
fn gip_lower_bound_examples() {
    let x_max = 90.0;
    let u = uniform_grid(x_max, 100_000);
    let l = gip_lower_bound(&u).unwrap();
    assert!((l / (-x_max / 6.0) - 1.0).abs() < 1e-3);
    assert_eq!(gip_lower_bound(&point_mass(5.0, 10.0)).unwrap(), 0.0);
}

#[test]
fn halftime_shares_examples() {
    let u = uniform_grid(50.0, 200);
    let flat_g = ModelSpec { g_vanishes_at_xm: false, ..ModelSpec::new(FormParams::Linear { m: 0.004, d: Some(0.0) }) };
    assert_eq!(eval_halftime_shares(&flat_g, &u).unwrap(), eval_final_shares(&flat_g, &u).unwrap());

    let no_h = ModelSpec::linear(0.0);
    let (vh, vn) = eval_halftime_shares(&no_h, &u).unwrap();
    assert_eq!(vh, vn);

    // polynomial oracle on the discrete uniform law
    let (x_max, n) = (50.0, 200);
    let (mu1, mu2) = grid_moments(x_max, n);
    let spec = ModelSpec { c: 0.45, epsilon: 0.02, ..ModelSpec::linear(0.006) };
    let (c, e, m) = (spec.c, spec.epsilon, 0.006);
    let a_h = c + e - m * x_max / 2.0;
    let a_n = c - e + m * x_max / 2.0;
    let want_h = a_h + (m - a_h / x_max) * mu1 - m / x_max * mu2;
    let want_n = a_n + (-m - a_n / x_max) * mu1 + m / x_max * mu2;
    let (vh, vn) = eval_halftime_shares(&spec, &u).unwrap();
    assert!((vh - want_h).abs() < 1e-13, "{vh} vs {want_h}");
    assert!((vn - want_n).abs() < 1e-13);
}

#[test]
fn final_shares_examples() {
    let u = uniform_grid(50.0, 200);
    let base = ModelSpec::linear(0.006);
    let (fh, fn_) = eval_final_shares(&base, &u).unwrap();
    assert!((fh - 0.5).abs() < 1e-14 && (fn_ - 0.5).abs() < 1e-14);
    let shifted = ModelSpec { epsilon: 0.03, ..base };
    let (sh, sn) = eval_final_shares(&shifted, &u).unwrap();
    assert!(((sh - sn) - (fh - fn_) - 0.06).abs() < 1e-14);
    let d = dist(&[(10.0, 0.3), (20.0, 0.7)]);
    let (fh, _) = eval_final_shares(&base, &d).unwrap();
    assert!((fh - (0.5 + 0.006 * (17.0 - 10.0))).abs() < 1e-14);
}

#[test]
fn gip_estimate_examples() {
    let u = uniform_grid(40.0, 400);
    let s = summary_with_delta(41, 46);
    let no_h = ModelSpec::linear(0.0);
    assert!((gip_estimate(&no_h, &u, &s).unwrap() - 0.5 * s.delta).abs() < 1e-15);

    let even = summary_with_delta(10, 10);
    let spec = ModelSpec::linear(0.01);
    let model = spec.bind(40.0).unwrap();
    let cm = ComponentMoments::of(&model, &u);
    assert!((gip_estimate(&spec, &u, &even).unwrap() + cm.e_gh / cm.e_g).abs() < 1e-15);

    // polynomial oracle: (x − X/2)(1 − x/X) = 3x/2 − x²/X − X/2
    let (x_max, n) = (40.0, 400);
    let (mu1, mu2) = grid_moments(x_max, n);
    let e_hg = 0.01 * (1.5 * mu1 - mu2 / x_max - x_max / 2.0);
    let e_g = 1.0 - mu1 / x_max;
    let want = 0.5 * s.delta - e_hg / e_g;
    assert!((gip_estimate(&spec, &u, &s).unwrap() - want).abs() < 1e-13);
}

#[test]
fn general_win_examples() {
    let u = uniform_grid(40.0, 50);
    let no_h = ModelSpec::linear(0.0);
    assert!(general_win_condition(&no_h, &u, &summary_with_delta(11, 10)).unwrap());
    assert!(!general_win_condition(&no_h, &u, &summary_with_delta(10, 11)).unwrap());
}

#[test]
fn sweep_examples() {
    let u = uniform_grid(40.0, 50);
    let rows = sweep_model_params(&[ModelSpec::linear(0.0)], &u).unwrap();
    assert_eq!((rows[0].e_h, rows[0].e_gh, rows[0].flag), (0.0, 0.0, false));

    // a point mass gives E[gh] = g h and E[h] = h: opposite signs impossible for g > 0
    let pm = point_mass(13.0, 40.0);
    for kind in [FormKind::Linear, FormKind::Exp1, FormKind::Exp2, FormKind::Logarithmic, FormKind::PowerLaw] {
        let grid = default_grid(kind, pm.x_max(), &ModelSpec::linear(0.0));
        for row in sweep_model_params(&grid, &pm).unwrap() {
            assert!(!row.flag, "{row:?}");
        }
    }
    assert_eq!(default_grid(FormKind::Exp2, 40.0, &ModelSpec::linear(0.0)).len(), 256);
    assert_eq!(default_grid(FormKind::Linear, 40.0, &ModelSpec::linear(0.0)).len(), 41);
}

#[test]
fn window_lower_bound_generalises_linear() {
    let d = dist(&[(3.0, 0.5), (9.0, 0.2), (30.0, 0.3)]);
    let linear = window_lower_bound(&ModelSpec::linear(0.001), &d).unwrap();
    assert_eq!(linear, gip_lower_bound(&d).unwrap());
    // power law with exponent 1 is the linear model in normalised units
    let power = window_lower_bound(&ModelSpec::new(FormParams::PowerLaw { exponent: 1.0 }), &d).unwrap();
    assert!((power * d.x_max() - linear).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lower_bound_is_variance_ratio(d in random_dist()) {
        let mean = d.iter().map(|(x, w)| w * x).sum::<f64>();
        let var = d.iter().map(|(x, w)| w * (x - mean) * (x - mean)).sum::<f64>();
        let want = var / (mean - d.x_max());
        let got = gip_lower_bound(&d).unwrap();
        prop_assert!(got <= 0.0);
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1e-300));
    }

    #[test]
    fn linear_halftime_sign_matches_moment(d in random_dist(), m in 1e-5f64..1e-3) {
        let spec = ModelSpec::linear(m.min(0.99 / d.x_max()));
        let (vh, vn) = eval_halftime_shares(&spec, &d).unwrap();
        let lead = moment_halftime_lead(&d).unwrap();
        prop_assert_eq!((vn - vh) > 0.0, lead > 0.0);
    }

    #[test]
    fn flat_g_halftime_equals_final(d in random_dist(), m in -1e-3f64..1e-3) {
        let spec = ModelSpec {
            g_vanishes_at_xm: false,
            ..ModelSpec::new(FormParams::Linear { m: m.clamp(-0.99 / d.x_max(), 0.99 / d.x_max()), d: Some(0.0) })
        };
        prop_assert_eq!(eval_halftime_shares(&spec, &d).unwrap(), eval_final_shares(&spec, &d).unwrap());
    }

    #[test]
    fn general_condition_matches_linear_window(d in random_dist(), delta in -0.999f64..0.999, slope in 1e-4f64..1.0) {
        let m = slope / d.x_max();
        let spec = ModelSpec::linear(m);
        let general = general_win_condition_delta(&spec, &d, delta).unwrap();
        let l = gip_lower_bound(&d).unwrap();
        let middle = spec.c / m * delta;
        prop_assume!((middle - l).abs() > 1e-9 * l.abs());
        prop_assert_eq!(general, l < middle);
    }
}
