use tradeoff::harness::*;
use tradeoff::pareto::dominates;
use tradeoff::scalarize::Scalarization;
use tradeoff::RngHandle;

fn concave(iterations: u64) -> ExperimentConfig {
    ExperimentConfig::new(
        ProblemSpec::ConcaveFront(ConcaveFrontSpec { dim: 3 }),
        Algorithm::Ours,
        iterations,
    )
}

fn sphere(algorithm: Algorithm, iterations: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        ProblemSpec::NoisySphere(NoisySphereSpec { dim: 10 }),
        algorithm,
        iterations,
    );
    c.noise = 0.05;
    c.gains.a = 0.04;
    c
}

#[test]
fn one_trajectory_per_seed_in_order() {
    let mut c = concave(20);
    c.seeds = vec![3, 1, 2];
    let report = run_experiment(&c).unwrap();
    assert_eq!(report.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![3, 1, 2]);
    for r in &report.runs {
        assert_eq!(r.trajectory.len(), 20);
        assert_eq!(r.outcome, SeedOutcome::Completed);
        assert_eq!(r.calls, 60);
        assert_eq!(r.final_pair(), r.trajectory.last().map(|s| s.pair));
    }
    assert_ne!(report.runs[0].trajectory, report.runs[1].trajectory);
}

#[test]
fn es_calls_match_population_times_iterations() {
    let mut c = sphere(Algorithm::EsBaseline, 30);
    c.es.population = 6;
    c.seeds = vec![1, 2];
    let report = run_experiment(&c).unwrap();
    for r in &report.runs {
        assert_eq!(r.calls, 180);
        assert_eq!(r.trajectory.last().unwrap().cumulative_calls, 180);
    }
}

#[test]
fn reuse_midpoint_spends_two_calls_per_step() {
    let mut c = concave(25);
    c.reuse_midpoint = true;
    let report = run_experiment(&c).unwrap();
    for (i, s) in report.runs[0].trajectory.iter().enumerate() {
        assert_eq!(s.cumulative_calls, 2 * (i as u64 + 1));
    }
}

#[test]
fn record_files_are_reproducible() {
    let mut c = concave(40);
    c.seeds = vec![5, 6];
    c.noise = 0.01;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    emit_report(&run_experiment(&c).unwrap(), a.path()).unwrap();
    emit_report(&run_experiment(&c).unwrap(), b.path()).unwrap();
    for seed in [5, 6] {
        let name = record_file_name(seed);
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y);
        let text = String::from_utf8(x).unwrap();
        assert_eq!(text.lines().count(), 41);
        assert_eq!(
            text.lines().next().unwrap(),
            "step,L_blackbox,L_whitebox,active_index,I_k,step_size,cumulative_calls"
        );
    }
    let echoed = load_config(&a.path().join("config.toml")).unwrap();
    assert_eq!(echoed, c);
    assert!(std::fs::read_to_string(a.path().join("summary.txt")).unwrap().contains("completed"));
}

#[test]
fn records_read_back_to_the_trajectory() {
    let report = run_experiment(&concave(15)).unwrap();
    let traj = &report.runs[0].trajectory;
    let mut buf = Vec::new();
    write_records(traj, &mut buf).unwrap();
    let rows = read_records(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), traj.len());
    for (row, step) in rows.iter().zip(traj) {
        assert_eq!(*row, RecordRow::from(step));
    }
}

#[test]
fn empty_run_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    emit_report(&run_experiment(&concave(0)).unwrap(), dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(record_file_name(1))).unwrap();
    assert_eq!(text.lines().count(), 1);
    let summary = summarize_record_file(&dir.path().join(record_file_name(1))).unwrap();
    assert!(summary.contains("0 steps"));
}

#[test]
fn ablations_match_the_full_method_while_inactive() {
    let full = run_experiment(&concave(8)).unwrap().runs.remove(0).trajectory;
    for ablation in Ablation::ALL {
        let mut c = concave(8);
        c.ablations = vec![ablation];
        let run = run_experiment(&c).unwrap().runs.remove(0).trajectory;
        // the first step sees an empty store, so only the indicator can differ
        assert_eq!(run[0].pair, full[0].pair, "{ablation:?}");
        assert_eq!(run[0].cumulative_calls, full[0].cumulative_calls);
        if ablation == Ablation::NoCriticalCollection {
            // with fewer estimates than the store holds nothing is ever evicted
            assert_eq!(run[..6], full[..6]);
        }
    }
}

#[test]
fn divergence_is_recorded_per_seed() {
    let mut c = concave(50);
    c.problem = ProblemSpec::TwoQuadratic(TwoQuadraticSpec::default());
    c.gains.a = 1e4;
    c.seeds = vec![1, 2];
    let report = run_experiment(&c).unwrap();
    assert!(report.all_diverged());
    for r in &report.runs {
        assert!(matches!(r.outcome, SeedOutcome::Diverged { .. }));
        assert!(r.theta.is_none());
    }
}

#[test]
fn budget_truncates_every_seed() {
    let mut c = concave(50);
    c.budget = Some(31);
    c.seeds = vec![1, 2, 3];
    let report = run_experiment(&c).unwrap();
    assert!(report.all_budget_exhausted());
    for r in &report.runs {
        assert_eq!(r.trajectory.len(), 10);
        assert_eq!(r.calls, 31);
    }
}

#[test]
fn full_method_beats_no_history_on_the_sphere() {
    let mut ours = sphere(Algorithm::Ours, 600);
    ours.seeds = (1..=7).collect();
    let mut plain = ours.clone();
    plain.ablations = vec![Ablation::NoHistory];
    let a = run_experiment(&ours).unwrap().median_evals_to_threshold().unwrap();
    let b = run_experiment(&plain).unwrap().median_evals_to_threshold().unwrap();
    assert!(a < b, "{a} vs {b}");
}

#[test]
fn final_points_are_checked_against_their_trajectory() {
    let report = run_experiment(&concave(200)).unwrap();
    let run = &report.runs[0];
    let last = run.final_pair().unwrap();
    let expected = !run.trajectory.iter().any(|s| dominates(&s.pair, &last));
    assert_eq!(run.non_dominated, Some(expected));
}

#[test]
fn single_weight_sweep_has_one_entry() {
    let sweep = sweep_lambda(&concave(50), &[[0.5, 0.5]]).unwrap();
    assert_eq!(sweep.entries.len(), 1);
    assert!(sweep_lambda(&concave(5), &[[0.0, 1.0]]).is_err());
}

#[test]
fn weight_file_parsing() {
    let w = parse_lambdas("# weights\n0.1 0.9\n\n0.5,0.5\n").unwrap();
    assert_eq!(w, vec![[0.1, 0.9], [0.5, 0.5]]);
    assert!(parse_lambdas("0.1\n").is_err());
    assert_eq!(weight_grid(2), vec![[0.25, 0.75], [0.75, 0.25]]);
}

#[test]
fn grid_check_on_the_convex_problem() {
    let mut c = concave(1);
    c.problem = ProblemSpec::TwoQuadratic(TwoQuadraticSpec::default());
    let report = theorem_check(&c, Scalarization::AugmentedTchebycheff, 5, 21, &mut RngHandle::new(0, 3)).unwrap();
    assert_eq!(report.passed_count(), 5);
    assert_eq!(report.grid_size, 441);
    let mut anon = c.clone();
    anon.problem = ProblemSpec::NoisySphere(NoisySphereSpec::default());
    assert!(theorem_check(&anon, Scalarization::AugmentedTchebycheff, 1, 5, &mut RngHandle::new(0, 3)).is_err());
}
