use mia_core::analysis::{corr_moments, epsilon_estimate, max_users_convergence, max_users_ddm, mp_eigen_limits};
use mia_core::channel::{gram, normalized_correlation, sample_channel, trial_rng};
use mia_core::linalg::{hermitian_eig_extremes, iteration_spectral_radius};
use mia_core::montecarlo::{
    bound_comparison, mean_residual_powers, run_experiment, sir_trial, ExperimentKind, ExperimentSpec, RunOptions,
};
use mia_core::report::Rows;
use mia_core::stats::MeanAccumulator;

fn opts() -> RunOptions {
    RunOptions::default()
}

fn spec(kind: ExperimentKind, m: usize, k_list: &[usize], n_list: &[usize], trials: usize) -> ExperimentSpec {
    ExperimentSpec {
        antennas: m,
        k_list: k_list.to_vec(),
        n_list: n_list.to_vec(),
        trials,
        base_seed: 77,
        kind,
    }
}

#[test]
fn channel_entries_have_unit_power() {
    let h = sample_channel(1024, 128, &mut trial_rng(1, 100, 0)).unwrap();
    let mut acc = MeanAccumulator::default();
    for z in h.entries() {
        acc.push(z.norm_sqr());
    }
    assert!((acc.mean() - 1.0).abs() < 3.0 * acc.std_error(), "{}", acc.mean());

    let mut acc = MeanAccumulator::default();
    for t in 0..1_000_000 {
        let h = sample_channel(2, 1, &mut trial_rng(2, 100, t)).unwrap();
        acc.push(h.column(0)[0].norm_sqr());
    }
    assert!((acc.mean() - 1.0).abs() < 3.0 * acc.std_error(), "{}", acc.mean());
}

#[test]
fn gram_diagonal_grows_like_m() {
    let mut acc = MeanAccumulator::default();
    for t in 0..10_000 {
        let g = gram(&sample_channel(64, 8, &mut trial_rng(3, 100, t)).unwrap());
        acc.push(g.diag()[t as usize % 8] / 64.0);
    }
    assert!((acc.mean() - 1.0).abs() < 3.0 * acc.std_error(), "{}", acc.mean());
}

#[test]
fn correlation_mean_matches_closed_form() {
    let mut acc = MeanAccumulator::default();
    for t in 0..100_000 {
        let h = sample_channel(128, 2, &mut trial_rng(4, 100, t)).unwrap();
        acc.push(normalized_correlation(&h, 0, 1).unwrap().magnitude());
    }
    let want = corr_moments(128).unwrap().mean_x;
    assert!((acc.mean() - want).abs() < 0.01 * want, "{} vs {want}", acc.mean());
}

#[test]
fn largest_eigenvalue_approaches_edge() {
    let mut acc = MeanAccumulator::default();
    for t in 0..1_000 {
        let g = gram(&sample_channel(512, 16, &mut trial_rng(5, 100, t)).unwrap());
        acc.push(hermitian_eig_extremes(g.matrix()).unwrap().lambda_max);
    }
    let edge = mp_eigen_limits(512, 16).unwrap().lambda_max;
    assert!((acc.mean() - edge).abs() < 0.02 * edge, "{} vs {edge}", acc.mean());
}

#[test]
fn largest_eigenvalue_matches_edge_with_finite_size_shift() {
    let (m, k) = (512.0f64, 16.0f64);
    let mut acc = MeanAccumulator::default();
    for t in 0..1_000 {
        let g = gram(&sample_channel(512, 16, &mut trial_rng(5, 100, t)).unwrap());
        acc.push(hermitian_eig_extremes(g.matrix()).unwrap().lambda_max);
    }
    // Tracy-Widom (beta = 2) mean -1.771 on the edge fluctuation scale
    let scale = (m.sqrt() + k.sqrt()) * (1.0 / m.sqrt() + 1.0 / k.sqrt()).cbrt();
    let shifted = mp_eigen_limits(512, 16).unwrap().lambda_max - 1.771 * scale;
    assert!(
        (acc.mean() - shifted).abs() < 0.01 * shifted,
        "{} vs {shifted}",
        acc.mean()
    );
}

#[test]
fn single_user_probabilities_are_one() {
    for kind in [ExperimentKind::Convergence, ExperimentKind::Ddm] {
        let report = run_experiment(&spec(kind, 32, &[1], &[], 200), &opts()).unwrap();
        match report.rows {
            Rows::Convergence(r) => assert_eq!((r[0].exact_successes, r[0].approx_successes), (200, 200)),
            Rows::Ddm(r) => assert_eq!((r[0].strict_successes, r[0].delta_successes), (200, 200)),
            _ => unreachable!(),
        }
    }
}

#[test]
fn small_table_rows() {
    let report = run_experiment(&spec(ExperimentKind::Convergence, 64, &[10], &[], 10_000), &opts()).unwrap();
    let Rows::Convergence(r) = report.rows else {
        unreachable!()
    };
    assert!((r[0].exact_p - 0.999).abs() <= 0.002, "{}", r[0].exact_p);

    let report = run_experiment(&spec(ExperimentKind::Ddm, 256, &[12], &[], 10_000), &opts()).unwrap();
    let Rows::Ddm(r) = report.rows else { unreachable!() };
    assert!((r[0].strict_p - 0.998).abs() <= 0.005, "{}", r[0].strict_p);
    assert_eq!(report.meta.configurations[0].trials, 10_000);
}

#[test]
fn convergence_conditions_agree() {
    for m in [128usize, 256, 512] {
        let k = max_users_convergence(m).unwrap();
        let report = run_experiment(&spec(ExperimentKind::Convergence, m, &[k], &[], 2_000), &opts()).unwrap();
        let Rows::Convergence(r) = report.rows else {
            unreachable!()
        };
        let agree = r[0].agreement as f64 / r[0].trials as f64;
        assert!(agree >= 0.98, "M={m}: {agree}");
    }
}

#[test]
fn dominance_conditions_agree_for_large_arrays() {
    for m in [256usize, 512] {
        let k = max_users_ddm(m).unwrap();
        let report = run_experiment(&spec(ExperimentKind::Ddm, m, &[k], &[], 10_000), &opts()).unwrap();
        let Rows::Ddm(r) = report.rows else { unreachable!() };
        assert!((r[0].strict_p - r[0].delta_p).abs() <= 0.03, "M={m}");
    }
}

#[test]
fn first_and_second_order_means() {
    let means = mean_residual_powers(128, 8, 2, 10_000, 9, &opts()).unwrap();
    assert!((means[0] - 0.4375).abs() <= 0.05 * 0.4375, "{}", means[0]);
    let eps2 = epsilon_estimate(128, 8, 2).unwrap().epsilon;
    assert!((means[1] - eps2).abs() <= 0.05 * eps2, "{} vs {eps2}", means[1]);
}

#[test]
fn residual_mean_decreases_in_ddm_regime() {
    for m in [64usize, 128, 256] {
        let k = max_users_ddm(m).unwrap();
        let means = mean_residual_powers(m, k, 6, 2_000, 10, &opts()).unwrap();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "M={m}: {means:?}");
    }
}

#[test]
fn residual_is_finite_when_series_converges() {
    for t in 0..500 {
        let mut rng = trial_rng(11, 100, t);
        let g = gram(&sample_channel(64, 10, &mut rng.clone()).unwrap());
        let e = sir_trial(64, 10, 3, &mut rng).unwrap();
        assert!(e >= 0.0);
        if iteration_spectral_radius(&g).unwrap() < 1.0 {
            assert!(e.is_finite());
        }
    }
}

#[test]
fn estimated_sir_tracks_simulation() {
    let report = run_experiment(&spec(ExperimentKind::Sir, 128, &[4, 8], &[1, 2, 3, 4], 1_000), &opts()).unwrap();
    let Rows::Sir(points) = report.rows else { unreachable!() };
    let mut misses = Vec::new();
    for p in &points {
        let tol = if p.users == 4 { 0.5 } else { 1.0 };
        let gap = (p.sir_estimated_db.unwrap().0 - p.sir_exact_db.0).abs();
        if gap > tol {
            misses.push(format!("K={} N={}: {gap:.2} dB", p.users, p.terms));
        }
    }
    assert!(
        misses.is_empty(),
        "estimate off by more than tolerance: {}",
        misses.join(", ")
    );
}

#[test]
fn bound_sits_below_exact_and_loosens_with_n() {
    let points = bound_comparison(128, &[2, 4, 8, 16], &[1, 2, 3, 4], 1_000, 12, &opts()).unwrap();
    for p in &points {
        assert!(p.sir_lower_bound_db.unwrap().0 <= p.sir_exact_db.0 + 0.5);
    }
    for k in [2usize, 4, 8, 16] {
        let gaps: Vec<f64> = points
            .iter()
            .filter(|p| p.users == k)
            .map(|p| p.sir_exact_db.0 - p.sir_lower_bound_db.unwrap().0)
            .collect();
        assert!(gaps[1] > gaps[0], "K={k}: {gaps:?}");
    }
}

#[test]
fn bound_needs_more_than_four_antennas() {
    assert!(matches!(
        bound_comparison(4, &[2], &[1], 10, 1, &opts()),
        Err(mia_core::Error::Domain(_))
    ));
}

#[test]
fn report_round_trips_through_csv() {
    for kind in [ExperimentKind::Convergence, ExperimentKind::Ddm, ExperimentKind::Sir] {
        let report = run_experiment(&spec(kind, 64, &[1, 4], &[1, 2], 50), &opts()).unwrap();
        let csv = report.rows.to_csv().unwrap();
        let back = Rows::from_csv(report.rows.kind(), &csv).unwrap();
        assert_eq!(back, report.rows);
    }
}
