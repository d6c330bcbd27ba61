mod common;

use std::path::Path;

use common::{gram, random_points, rng};
use gpmw::harness::{
    export, find_logs, regret_series, run_experiment, select_kernel, write_outputs, EpisodeLog, ExperimentConfig,
    RegretLedger,
};
use gpmw::harness::{build_environment, fit_routing_kernels, summarize};
use gpmw::games::{RoutingGame, RoutingSettings};
use gpmw::games::routing::KernelGrid;
use gpmw::kernel_gp::KernelSpec;
use gpmw::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const MATRIX: &str = r#"
name = "tiny"
horizon = 15
repeats = 2
seed = 11

[environment]
kind = "matrix"
actions = 6
noise_std = 1.0
kernel = { family = "squared-exponential", lengthscale = 2.0 }

[[players]]
variant = "gp-mw"

[[players]]
role = "opponent"
variant = "exp3p"
"#;

fn config(text: &str) -> ExperimentConfig {
    let cfg = ExperimentConfig::from_toml_str(text, Path::new("inline.toml"), Path::new(".")).unwrap();
    cfg.validate().unwrap();
    cfg
}

fn brute_force_regret(payoffs: &[Vec<f64>], actions: &[usize]) -> Vec<f64> {
    let k = payoffs[0].len();
    (1..=actions.len())
        .map(|t| {
            let best = (0..k)
                .map(|a| (0..t).map(|s| payoffs[s][a]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            let got: f64 = (0..t).map(|s| payoffs[s][actions[s]]).sum();
            (best - got) / t as f64
        })
        .collect()
}

#[test]
fn regret_matches_brute_force() {
    let mut r = rng(3);
    let payoffs: Vec<Vec<f64>> = (0..50).map(|_| (0..5).map(|_| r.random()).collect()).collect();
    let actions: Vec<usize> = (0..50).map(|_| r.random_range(0..5)).collect();
    let fast = regret_series(&payoffs, &actions).unwrap();
    let slow = brute_force_regret(&payoffs, &actions);
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() < 1e-12);
    }
    let mut ledger = RegretLedger::new(5);
    for (p, &a) in payoffs.iter().zip(&actions) {
        ledger.record(p, a).unwrap();
    }
    assert_eq!(ledger.regret_series(), fast);
}

#[test]
fn regret_simple_cases() {
    let constant = vec![vec![0.4; 3]; 10];
    assert!(regret_series(&constant, &[0, 1, 2, 0, 1, 2, 0, 1, 2, 0]).unwrap().iter().all(|x| *x == 0.0));
    let fixed = vec![vec![1.0, 0.0]; 10];
    assert!(regret_series(&fixed, &[1; 10]).unwrap().iter().all(|x| *x == 1.0));
    assert!(matches!(regret_series(&fixed, &[1; 9]), Err(Error::Input(_))));
}

#[test]
fn single_round_episode() {
    let mut cfg = config(MATRIX);
    cfg.horizon = 1;
    cfg.repeats = 1;
    let logs = run_experiment(&cfg).unwrap();
    assert_eq!(logs[0].records.len(), 2);
    let game = build_environment(&cfg, 0).unwrap();
    let joint: Vec<usize> = (0..2).map(|p| logs[0].agent_records(p).next().unwrap().action).collect();
    let ctx = game.contexts(&joint);
    for p in 0..2 {
        let rec = logs[0].agent_records(p).next().unwrap();
        let best = (0..6).map(|a| game.payoff(p, a, &ctx[p])).fold(f64::NEG_INFINITY, f64::max);
        assert!(rec.regret >= 0.0);
        assert!((rec.regret - (best - game.payoff(p, rec.action, &ctx[p]))).abs() < 1e-12);
    }
}

#[test]
fn runs_are_reproducible_and_seeded() {
    let cfg = config(MATRIX);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.len(), 2);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.to_csv_bytes().unwrap(), y.to_csv_bytes().unwrap());
    }
    assert_ne!(a[0].to_csv_bytes().unwrap(), a[1].to_csv_bytes().unwrap());
    let mut other = cfg.clone();
    other.seed = Some(12);
    let c = run_experiment(&other).unwrap();
    assert_ne!(a[0].to_csv_bytes().unwrap(), c[0].to_csv_bytes().unwrap());
}

#[test]
fn log_round_trip_and_export() {
    let cfg = config(MATRIX);
    let logs = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = write_outputs(dir.path(), &cfg.name, 11, &logs).unwrap();
    assert_eq!(summary.repeats, 2);
    assert_eq!(summary.horizon, 15);
    let found = find_logs(dir.path()).unwrap();
    assert_eq!(found.len(), 2);
    for ((repeat, path), log) in found.iter().zip(&logs) {
        let back = EpisodeLog::read_csv(path, *repeat).unwrap();
        assert_eq!(back.records, log.records);
    }
    let snapshot = |d: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("series_"))
            .map(|p| (p.display().to_string(), std::fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    let first = snapshot(dir.path());
    assert!(!first.is_empty());
    export(dir.path()).unwrap();
    assert_eq!(snapshot(dir.path()), first);
    export(dir.path()).unwrap();
    assert_eq!(snapshot(dir.path()), first);
    let again = summarize(&logs).unwrap();
    assert_eq!(again, summary);

    let empty = tempfile::tempdir().unwrap();
    assert!(export(empty.path()).is_err());
}

#[test]
fn config_errors_name_the_field() {
    let bad_horizon = MATRIX.replace("horizon = 15", "horizon = 0");
    let cfg = ExperimentConfig::from_toml_str(&bad_horizon, Path::new("x.toml"), Path::new(".")).unwrap();
    assert!(matches!(cfg.validate(), Err(Error::Config { .. })));
    let unknown = MATRIX.replace("variant = \"gp-mw\"", "variant = \"gp-nope\"");
    match ExperimentConfig::from_toml_str(&unknown, Path::new("x.toml"), Path::new(".")) {
        Err(Error::Parse { line, .. }) => assert!(line > 0),
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("unknown variant accepted"),
    }
    let missing = MATRIX
        .replace("kind = \"matrix\"", "kind = \"routing\"\nnetwork = \"nowhere_net.tntp\"\ntrips = \"nowhere_trips.tntp\"")
        .replace("actions = 6\nnoise_std = 1.0\nkernel = { family = \"squared-exponential\", lengthscale = 2.0 }\n", "");
    let cfg = ExperimentConfig::from_toml_str(&missing, Path::new("x.toml"), Path::new(".")).unwrap();
    assert!(cfg.validate().is_err());
}

#[test]
fn marginal_likelihood_recovers_lengthscale() {
    let truth = KernelSpec::squared_exponential(2.0);
    let candidates: Vec<KernelSpec> = [0.5, 2.0, 8.0].iter().map(|&l| KernelSpec::squared_exponential(l)).collect();
    let noise_std = 0.1;
    let mut hits = 0;
    for trial in 0..20 {
        let mut r = rng(1000 + trial);
        let xs = random_points(&mut r, 80, 2, 10.0);
        let k = gram(&truth, &xs) + DMatrix::identity(80, 80) * 1e-9;
        let l = k.cholesky().unwrap().l();
        let z = DVector::from_fn(80, |_, _| -> f64 { StandardNormal.sample(&mut r) });
        let f = l * z;
        let ys: Vec<f64> = f
            .iter()
            .map(|v| v + { let e: f64 = StandardNormal.sample(&mut r); noise_std * e })
            .collect();
        let fit = select_kernel(&candidates, &xs, &ys, noise_std * noise_std, 0.0).unwrap();
        if fit.index == 1 {
            hits += 1;
        }
    }
    assert!(hits >= 18, "recovered {hits}/20");
    let single = select_kernel(&candidates[2..], &[], &[], 0.01, 0.0).unwrap();
    assert_eq!(single.kernel, candidates[2]);
}

#[test]
fn routing_fit_picks_allowed_degree() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sioux_falls");
    let settings: RoutingSettings = toml::from_str(&format!(
        "network = {:?}\ntrips = {:?}\nlearners = 3\nbound_samples = 500\n",
        data.join("SiouxFalls_net.tntp"),
        data.join("SiouxFalls_trips.tntp")
    ))
    .unwrap();
    let mut game = RoutingGame::build(&settings, 5).unwrap();
    let grid = KernelGrid::default();
    assert_eq!(grid.samples, 200);
    let fits = fit_routing_kernels(&mut game, &grid, settings.kernel.offset, 5).unwrap();
    assert_eq!(fits.len(), 3);
    let degrees = grid.candidates(settings.kernel.offset);
    for (p, fit) in fits.iter().enumerate() {
        assert!([2, 4, 6].contains(&degrees[fit.index].degree));
        assert_eq!(game.kernel(p), &fit.kernel);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ledger_matches_oracle(seed in any::<u64>(), k in 1usize..6, t in 1usize..40) {
        let mut r = rng(seed);
        let payoffs: Vec<Vec<f64>> = (0..t).map(|_| (0..k).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let actions: Vec<usize> = (0..t).map(|_| r.random_range(0..k)).collect();
        let mut ledger = RegretLedger::new(k);
        let mut prev = vec![0.0; k];
        for (p, &a) in payoffs.iter().zip(&actions) {
            ledger.record(p, a).unwrap();
            for ((now, before), x) in ledger.counterfactual_sums().iter().zip(&prev).zip(p) {
                prop_assert!((now - before - x).abs() < 1e-12);
            }
            prev = ledger.counterfactual_sums().to_vec();
        }
        let slow = brute_force_regret(&payoffs, &actions);
        for (a, b) in ledger.regret_series().iter().zip(&slow) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
