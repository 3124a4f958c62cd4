use super::*;
use crate::fit::FitResult;

fn small_config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        n: 4,
        c: 1,
        num_hamiltonians: 3,
        num_initial_states: 2,
        generations: 8,
        burn_in: 2,
        seed: 11,
        ..ExperimentConfig::full(dir)
    }
}

#[test]
fn presets_match_the_experiment() {
    let p = ExperimentConfig::full("out");
    assert_eq!((p.n, p.c, p.num_hamiltonians, p.num_initial_states, p.generations, p.burn_in), (4, 2, 200, 10, 10, 4));
    assert!((p.p_m - 1.0 / 24.0).abs() < 1e-15);
    assert_eq!(p.variants.len(), 4);
    p.validate().unwrap();
    let r = ExperimentConfig::reduced("out");
    assert_eq!((r.num_hamiltonians, r.num_initial_states), (50, 5));
    assert_eq!(p.spectral_cloners(), vec![Cloner::Bcqo, Cloner::Uqcm]);
    let vs = p.variant_list();
    assert_eq!(vs.iter().filter(|v| v.has_mutation()).count(), 2);
    assert!(vs.iter().all(|v| v.has_mutation() == (v.p_m > 0.0)));
}

#[test]
fn invalid_configs_are_rejected() {
    let base = ExperimentConfig::full("out");
    let cases = [
        ExperimentConfig { burn_in: 10, ..base.clone() },
        ExperimentConfig { burn_in: 9, ..base.clone() },
        ExperimentConfig { num_hamiltonians: 0, ..base.clone() },
        ExperimentConfig { p_m: 1.5, ..base.clone() },
        ExperimentConfig { variants: vec![], ..base.clone() },
        ExperimentConfig { variants: vec![base.variants[0]; 2], ..base.clone() },
        ExperimentConfig { top_k: 1, ..base.clone() },
        ExperimentConfig { c: 0, ..base.clone() },
    ];
    for c in cases {
        assert!(c.validate().is_err(), "{c:?}");
    }
    assert!(ExperimentConfig { burn_in: 8, ..base }.validate().is_ok());
}

#[test]
fn config_json_and_hash() {
    let a = ExperimentConfig::full("a");
    let text = serde_json::to_string(&a).unwrap();
    assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), a);
    assert_eq!(a.hash(), ExperimentConfig::full("b").hash());
    assert_ne!(a.hash(), ExperimentConfig::reduced("a").hash());
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["unknown"] = serde_json::json!(1);
    assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    // Optional fields fall back to defaults.
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["init_mode", "spectral", "top_k"] {
        v.as_object_mut().unwrap().remove(key);
    }
    assert_eq!(serde_json::from_value::<ExperimentConfig>(v).unwrap(), a);
}

#[test]
fn experiment_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = run_experiment(&config, false).unwrap();
    assert_eq!(out.records.len(), 3 * 4 * 2);
    assert_eq!(out.spectral.len(), 3 * 2);
    assert!(out.records.iter().all(|r| r.status == RecordStatus::Ok));
    for r in &out.records {
        assert_eq!(r.fidelity_series.len(), 9);
        assert!(r.fidelity_series.iter().all(|f| (0.0..=1.0).contains(f)));
        assert!(r.fit.is_some());
        assert_eq!(r.ham_hash, experiment_hamiltonian(&config, r.ham_index).content_hash());
    }
    // All variants of a Hamiltonian start from the same sorted population.
    for h in 0..3 {
        for s in 0..2 {
            let starts: Vec<f64> =
                out.records.iter().filter(|r| r.ham_index == h && r.init_index == s).map(|r| r.fidelity_series[0]).collect();
            assert_eq!(starts.len(), 4);
            assert!(starts.iter().all(|f| *f == starts[0]), "{starts:?}");
        }
    }
    // Without mutation the channel is deterministic, so the mutation seed is irrelevant
    // but still distinct per trajectory.
    let mut seeds: Vec<u64> = out.records.iter().map(|r| r.seed).collect();
    seeds.sort();
    seeds.dedup();
    assert_eq!(seeds.len(), out.records.len());

    let on_disk: Vec<BenchRecord> = read_jsonl(&dir.path().join(RECORDS_FILE)).unwrap();
    assert_eq!(on_disk, out.records);
    let spec: Vec<SpectralRecord> = read_jsonl(&dir.path().join(SPECTRAL_FILE)).unwrap();
    assert_eq!(spec.len(), 6);
    assert!(spec.iter().all(|s| s.report.as_ref().is_some_and(|r| r.m == 1)));
    let summary: AggregateStats = serde_json::from_str(&fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary, out.summary);
    assert_eq!(summary.variants.len(), 4);
    assert_eq!(summary.config_hash.as_deref(), Some(config.hash().as_str()));
    let csv = fs::read_to_string(dir.path().join(SCATTER_FILE)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("ham_hash,variant,F_inf_sim,F_inf_pred,gamma_sim,gamma_pred"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().filter(|r| r.contains("sampled")).all(|r| r.contains(",,")));
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&small_config(a.path()), false).unwrap();
    run_experiment(&small_config(b.path()), false).unwrap();
    for file in [RECORDS_FILE, SPECTRAL_FILE, SUMMARY_FILE, SCATTER_FILE] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn resume_completes_a_truncated_run_identically() {
    let full = tempfile::tempdir().unwrap();
    run_experiment(&small_config(full.path()), false).unwrap();
    let part = tempfile::tempdir().unwrap();
    let config = small_config(part.path());
    run_experiment(&config, false).unwrap();
    // Keep one complete Hamiltonian plus a partial second one.
    let records = fs::read_to_string(part.path().join(RECORDS_FILE)).unwrap();
    let kept: Vec<&str> = records.lines().take(8 + 3).collect();
    fs::write(part.path().join(RECORDS_FILE), kept.join("\n") + "\n").unwrap();
    fs::remove_file(part.path().join(SUMMARY_FILE)).unwrap();
    let out = run_experiment(&config, true).unwrap();
    assert_eq!(out.computed_hamiltonians, 2);
    for file in [RECORDS_FILE, SPECTRAL_FILE, SUMMARY_FILE] {
        assert_eq!(fs::read(full.path().join(file)).unwrap(), fs::read(part.path().join(file)).unwrap(), "{file}");
    }
    // A completed run resumes without recomputation.
    assert_eq!(run_experiment(&config, true).unwrap().computed_hamiltonians, 0);
}

#[test]
fn resume_with_other_config_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&small_config(dir.path()), false).unwrap();
    let other = ExperimentConfig { seed: 12, ..small_config(dir.path()) };
    assert!(matches!(run_experiment(&other, true), Err(QgaError::ResumeConflict(_))));
}

fn record(ham: usize, variant: Variant, f_inf: f64, gamma: f64) -> BenchRecord {
    BenchRecord {
        ham_index: ham,
        init_index: 0,
        ham_hash: format!("h{ham}"),
        variant,
        seed: 0,
        init_mode: InitMode::HaarFull,
        status: RecordStatus::Ok,
        error: None,
        fidelity_series: vec![],
        energy_series: vec![],
        fit: Some(FitResult { f_inf, beta: 0.0, gamma, rms: 0.0, degenerate: false }),
    }
}

#[test]
fn identical_cloner_results_give_zero_wins_with_one_sided_interval() {
    let b = Variant::without_mutation(Cloner::Bcqo);
    let u = Variant::without_mutation(Cloner::Uqcm);
    let mut records = Vec::new();
    for h in 0..20 {
        let g = 0.3 + 0.01 * h as f64;
        records.push(record(h, b, 0.7, g));
        records.push(record(h, u, 0.7, g + 0.1));
    }
    // BCQO never faster.
    let swapped: Vec<BenchRecord> =
        records.iter().map(|r| BenchRecord { variant: if r.variant == b { u } else { b }, ..r.clone() }).collect();
    let stats = aggregate(&swapped, &[]).unwrap();
    let w = stats.win_rate(MutationMode::Off).unwrap();
    assert_eq!((w.wins, w.comparisons, w.rate), (0, 20, Some(0.0)));
    assert_eq!(w.ci_method, "one-sided-exact");
    let bound = 100.0 * (1.0 - 0.05f64.powf(1.0 / 20.0));
    assert!((w.ci_high.unwrap() - bound).abs() < 1e-12);
    // Identical gammas are ties, leaving nothing to compare.
    let same: Vec<BenchRecord> = records.iter().filter(|r| r.variant == b).flat_map(|r| [r.clone(), BenchRecord { variant: u, ..r.clone() }]).collect();
    let w = aggregate(&same, &[]).unwrap().win_rate(MutationMode::Off).unwrap().clone();
    assert_eq!((w.comparisons, w.ties, w.rate), (0, 20, None));
}

#[test]
fn normal_interval_in_percentage_points() {
    let w = win_rate(MutationMode::Off, 154, 200, 0);
    assert!((w.rate.unwrap() - 77.0).abs() < 1e-12);
    let half = 1.96 * (0.77f64 * 0.23 / 200.0).sqrt() * 100.0;
    assert!((w.ci_half_width.unwrap() - half).abs() < 1e-12);
    assert!((half - 5.83).abs() < 0.01);
    assert_eq!(w.ci_method, "normal");
}

#[test]
fn statistics_average_initial_states_first() {
    let b = Variant::without_mutation(Cloner::Bcqo);
    let mut records = vec![record(0, b, 0.6, 0.4), record(0, b, 0.8, 0.6), record(1, b, 0.9, 0.2)];
    records[1].init_index = 1;
    let s = aggregate(&records, &[]).unwrap();
    let v = s.variant(Cloner::Bcqo, MutationMode::Off).unwrap();
    assert_eq!(v.hamiltonians, 2);
    assert!((v.f_inf_mean - 0.8).abs() < 1e-12);
    assert!((v.f_inf_std - 0.1).abs() < 1e-12);
    assert!((v.gamma_min - 0.2).abs() < 1e-12 && (v.gamma_max - 0.5).abs() < 1e-12);
}

#[test]
fn failed_records_are_counted_not_averaged() {
    let b = Variant::without_mutation(Cloner::Bcqo);
    let mut bad = record(1, b, 0.0, 0.0);
    bad.status = RecordStatus::Failed;
    bad.fit = None;
    let s = aggregate(&[record(0, b, 0.7, 0.5), bad.clone()], &[]).unwrap();
    assert_eq!(s.failed_records, 1);
    assert_eq!(s.variants[0].hamiltonians, 1);
    assert!(matches!(aggregate(&[], &[]), Err(QgaError::EmptyStats(_))));
    assert!(matches!(aggregate(&[bad], &[]), Err(QgaError::EmptyStats(_))));
}

#[test]
fn r2_is_the_squared_correlation() {
    let x = [1.0, 2.0, 3.0, 4.0];
    assert!((pearson_r2(&x, &[3.0, 5.0, 7.0, 9.0]).unwrap() - 1.0).abs() < 1e-15);
    assert!((pearson_r2(&x, &[-1.0, -2.0, -3.0, -4.0]).unwrap() - 1.0).abs() < 1e-15);
    // Independent computation: r = cov / (sx sy).
    let y = [2.0, 1.0, 4.0, 3.0];
    let r = 0.6;
    assert!((pearson_r2(&x, &y).unwrap() - r * r).abs() < 1e-12);
    assert_eq!(pearson_r2(&x, &[1.0; 4]), None);
    assert_eq!(pearson_r2(&x[..1], &y[..1]), None);
}

#[test]
fn spectral_record_round_trips_in_both_states() {
    let failed = SpectralRecord { ham_index: 3, status: RecordStatus::Failed, error: Some("boom".into()), report: None };
    let text = serde_json::to_string(&failed).unwrap();
    assert_eq!(serde_json::from_str::<SpectralRecord>(&text).unwrap(), failed);
}
