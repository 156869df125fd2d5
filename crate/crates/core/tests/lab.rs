use wsal::engine::{run_main, AlgoConfig};
use wsal::hypotheses::{Classifier, Disc, Halfspace, Label, Line, Space, Threshold};
use wsal::lab::{
    check_invariants, estimate_alpha, estimate_theta, exact_theta, measure_error, run_comparison, run_trial,
    sweep, theta_grid, DiagnosticOptions, Learner, TrialOptions, CSV_HEADER,
};
use wsal::world::instances::build_world;
use wsal::world::{build_case_study, Family, InstanceSpec, WeakModeKind, World};
use wsal::Error;

fn line_world(nu: f64, weak_mode: WeakModeKind) -> World<Line> {
    let spec = InstanceSpec { nu, weak_mode, g: 0.05, ..Default::default() };
    build_world(&spec, 21).unwrap()
}

fn small_config() -> AlgoConfig {
    AlgoConfig { scale: 1e-3, target_epsilon: 0.125, ..AlgoConfig::default() }
}

#[test]
fn measured_errors_match_the_instance() {
    let w = line_world(0.0, WeakModeKind::Identical);
    let before = w.ledger().clone();
    let perfect = Threshold { threshold: 0.5, orientation: Label::Pos };
    let m = measure_error(&perfect, &w, 10_000).unwrap();
    assert_eq!(m.estimate, 0.0);
    // Constant +1 errs on the negative half.
    let constant = Threshold { threshold: f64::NEG_INFINITY, orientation: Label::Pos };
    let m = measure_error(&constant, &w, 100_000).unwrap();
    assert!((m.estimate - 0.5).abs() <= m.ci, "{m:?}");
    let w = line_world(0.1, WeakModeKind::Identical);
    let m = measure_error(&w.h_star(), &w, 100_000).unwrap();
    assert!((m.estimate - 0.1).abs() <= m.ci, "{m:?}");
    assert_eq!(w.ledger(), &before);
    assert!(measure_error(&perfect, &w, 99).is_err());
}

#[test]
fn theta_estimates_track_the_closed_form() {
    let w = line_world(0.1, WeakModeKind::Identical);
    let h = w.h_star();
    let radii: Vec<f64> = (1..=10).map(|i| 0.02 * i as f64).collect();
    let est = estimate_theta(&w, &h, &radii, 200_000).unwrap();
    for (r, t) in est {
        let exact = exact_theta::<Line>(&h, r);
        assert!((t - exact).abs() <= 0.05 * exact, "r {r}: {t} vs {exact}");
    }
    let disc = build_case_study(0.1, 0.15, 2).unwrap();
    let h = disc.h_star();
    let est = estimate_theta(&disc, &h, &radii, 200_000).unwrap();
    for (r, t) in est {
        let exact = exact_theta::<Disc>(&h, r);
        assert!((t - exact).abs() <= 0.05 * exact, "r {r}: {t} vs {exact}");
    }
    assert_eq!(theta_grid(0.01).len(), 32);
    assert_eq!(theta_grid(2.0), vec![2.0]);
    assert!(estimate_theta(&disc, &h, &[0.0], 10).is_err());
}

#[test]
fn ball_masses_agree_with_monte_carlo() {
    // Three standard deviations of a binomial count, for both families.
    let n = 100_000;
    let mut rng = wsal::world::stream_rng(5, wsal::world::Stream::Test);
    let line_pts = Line::sample_batch(&mut rng, n);
    let disc_pts = Disc::sample_batch(&mut rng, n);
    let t = Threshold { threshold: 0.4, orientation: Label::Pos };
    let hs = Halfspace::new(1.0).unwrap();
    for r in [0.01, 0.05, 0.1, 0.3] {
        let p = Line::ball_disagreement_mass(&t, r);
        let c = line_pts.iter().filter(|x| Line::ball_disagreement_contains(&t, r, x)).count() as f64;
        assert!((c - n as f64 * p).abs() <= 3.0 * (n as f64 * p * (1.0 - p)).sqrt() + 1.0);
        let p = Disc::ball_disagreement_mass(&hs, r);
        let c = disc_pts.iter().filter(|x| Disc::ball_disagreement_contains(&hs, r, x)).count() as f64;
        assert!((c - n as f64 * p).abs() <= 3.0 * (n as f64 * p * (1.0 - p)).sqrt() + 1.0);
    }
}

#[test]
fn alpha_estimates() {
    let same = line_world(0.1, WeakModeKind::Identical);
    let a = estimate_alpha(&same, &same.h_star(), 0.2, 0.0, 50_000).unwrap();
    assert_eq!(a.alpha_hat, 0.0);

    let adv = line_world(0.1, WeakModeKind::Adversarial);
    let a = estimate_alpha(&adv, &adv.h_star(), 0.2, 0.0, 50_000).unwrap();
    assert!(a.alpha_hat <= a.dis_mass);
    assert!((a.alpha_hat - a.dis_mass).abs() < 0.01, "{a:?}");

    let g = 0.15;
    let case = build_case_study(0.1, g, 3).unwrap();
    let r = 2.0 * 0.1 + 0.01;
    let a = estimate_alpha(&case, &case.h_star(), r, 0.0, 100_000).unwrap();
    assert!(a.alpha_hat <= g + 0.02, "{a:?}");
    assert!(a.alpha_hat <= a.dis_mass);
    assert_eq!(a.fn_mass, 0.0);
    // The returned classifier covers every sampled disagreement.
    assert!(a.classifier.predict(&[0.0, 1.0]).is_pos());
}

#[test]
fn comparisons_share_the_initial_sample() {
    let spec = InstanceSpec { nu: 0.1, weak_mode: WeakModeKind::BoundaryDisagree, g: 0.05, ..Default::default() };
    let opts = TrialOptions { n_test: 10_000, workers: 2, baseline: true };
    let rows = run_comparison(&spec, &AlgoConfig::default(), &[1, 2], &opts).unwrap();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        let b = row.baseline.as_ref().unwrap();
        assert_eq!(b.ledger.weak_queries, 0);
        assert_eq!(row.same_initial_sample, Some(true));
        assert!(row.ratio.unwrap() < 1.0);
        assert!(row.main.passes(0.05));
    }
    assert!(run_comparison(&spec, &AlgoConfig::default(), &[1], &opts).is_err());
}

#[test]
fn failed_trials_are_recorded() {
    let spec = InstanceSpec { nu: 0.45, ..Default::default() };
    let t = run_trial(&spec, &AlgoConfig::default(), 1, Learner::Main, 1000);
    assert!(matches!(t.error, Some(Error::InfeasibleGeometry(_))));
    assert!(!t.passes(1.0));
    let spec = InstanceSpec::default();
    let config = AlgoConfig { max_doubling_t: 3, ..small_config() };
    let t = run_trial(&spec, &config, 1, Learner::Main, 1000);
    assert_eq!(t.error, Some(Error::DoublingCapExceeded { cap: 3 }));
    assert_eq!(t.trace.len(), 1);
}

#[test]
fn sweeps_are_reproducible() {
    let specs = [
        InstanceSpec { nu: 0.05, ..Default::default() },
        InstanceSpec { family: Family::Halfspace2d, nu: 0.05, weak_mode: WeakModeKind::Adversarial, ..Default::default() },
    ];
    let config = AlgoConfig { scale: 1e-4, target_epsilon: 0.25, ..AlgoConfig::default() };
    let opts = TrialOptions { n_test: 2000, workers: 2, baseline: false };
    let go = |opts: &TrialOptions| {
        let mut out = Vec::new();
        let rows = sweep(&specs, &[1, 2, 3], &config, opts, &mut out).unwrap();
        (rows, String::from_utf8(out).unwrap())
    };
    let (rows, csv) = go(&opts);
    assert_eq!(rows, 6);
    assert_eq!(csv, go(&opts).1);
    assert_eq!(csv, go(&TrialOptions { workers: 1, ..opts }).1);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], CSV_HEADER.join(","));
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    for rec in reader.records() {
        let rec = rec.unwrap();
        assert_eq!(rec.len(), CSV_HEADER.len());
        assert_eq!(&rec[18], "");
    }
    let (rows, csv) = go(&TrialOptions { baseline: true, ..opts });
    assert_eq!(rows, 12);
    assert_eq!(csv.lines().filter(|l| l.contains(",baseline,")).count(), 6);
}

#[test]
fn invariants_on_a_retained_run() {
    let mut w = line_world(0.1, WeakModeKind::Identical);
    let config = AlgoConfig { retain: true, ..small_config() };
    let out = run_main(&mut w, &config).unwrap();
    let opts = DiagnosticOptions { grid: 32, n_mc: 20_000, max_points: 1 << 16 };
    let report = check_invariants(&out, &w, &config, &opts).unwrap();
    assert_eq!(report.epochs.len(), out.epochs.len());
    assert!(report.invariant1_margin <= 0.0, "{report:?}");
    assert!(report.epochs.iter().all(|e| e.invariant2_stopping));
    // W = O makes every difference-classifier false negative impossible.
    assert!(report.invariant3_fn_mass[1..].iter().all(|m| *m == Some(0.0)));
    assert!(report.epochs.iter().all(|e| e.invariant3_holds.is_none()));
    for (_, a) in &report.alpha_hat {
        assert_eq!(*a, 0.0);
    }

    let mut no_shadow = w.clone();
    no_shadow.set_shadow_enabled(false);
    assert_eq!(check_invariants(&out, &no_shadow, &config, &opts).unwrap_err(), Error::Unavailable("shadow labels"));
    let plain = run_main(&mut line_world(0.1, WeakModeKind::Identical), &small_config()).unwrap();
    assert!(check_invariants(&plain, &w, &config, &opts).is_err());
}
