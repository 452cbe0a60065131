//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use dyadic_core::bmo::{bmo_v_norm, little_bmo_norm, little_product_bmo_norm, product_bmo_norm};
use dyadic_core::commutator::commutator_apply;
use dyadic_core::experiments::{
    apply_fixture, random_function, replay, run_ensemble, run_verify, Experiment, ExperimentConfig, ExperimentReport, FixtureMode,
    FixtureOutcome, Suite, VerifyOptions,
};
use dyadic_core::haar::HaarSign;
use dyadic_core::rng::derive_seed;
use dyadic_core::weights::{ap_constant, conjugate, gen_ap_weight, slice_ap_constant};
use dyadic_core::{GridFunction, MultiGrid, ParamSubset, Partition, TestFamily};

type Outcome = Result<String, String>;
type Criterion<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.file_name().unwrap().to_string_lossy().starts_with("norms_"))
        .collect();
    out.sort();
    out
}

fn exact_identities() -> Outcome {
    let report = run_verify(&VerifyOptions::default()).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for s in &report.suites {
        if let Some(f) = &s.failure {
            return Err(format!("{} failed on {:?} with error {:e}", s.suite, f.artifact.levels, f.artifact.error));
        }
        parts.push(format!("{} {} checks max {:.1e}", s.suite, s.checks, s.max_error));
    }
    ensure(report.suites.len() == Suite::ALL.len(), "not every suite ran")?;

    let canary = VerifyOptions { suites: vec![Suite::Telescoping], haar_sign: HaarSign::Flipped, ..Default::default() };
    let flipped = run_verify(&canary).map_err(|e| e.to_string())?;
    let failure = flipped.suites[0].failure.as_ref().ok_or("flipped Haar sign went unnoticed")?;
    let replayed = replay(&failure.artifact).map_err(|e| e.to_string())?;
    ensure(replayed == failure.artifact.error, "replay did not reproduce the failure")?;
    parts.push("sign-flip canary caught and replayed".into());
    Ok(parts.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let errors = common::oracle_errors(common::ORACLE_INSTANCES, 0xacce);
    let worst = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    for (name, e) in &errors {
        ensure(*e <= common::ORACLE_TOLERANCE, format!("{name}: relative error {e:e}"))?;
    }
    Ok(format!("{} functionals x {} instances, worst relative error {worst:.1e}", errors.len(), common::ORACLE_INSTANCES))
}

fn structural_checks() -> Outcome {
    let mut worst_duality: f64 = 0.0;
    let mut checked = 0;
    for s in 0..120u64 {
        let levels = match s % 4 {
            0 => vec![6],
            1 => vec![3, 3],
            2 => vec![4, 2],
            _ => vec![2, 2, 2],
        };
        let grid = MultiGrid::new(levels).unwrap();
        let w = gen_ap_weight(derive_seed(s, 1), &grid, 0.2 + 0.6 * (s % 5) as f64 / 5.0).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let q = conjugate(p);
            let full = ap_constant(&w, p).unwrap();
            let dual = ap_constant(&w.power(1.0 - q), q).unwrap();
            let target = full.powf(q - 1.0);
            worst_duality = worst_duality.max((dual - target).abs() / target);
            for axis in 0..grid.m() {
                ensure(slice_ap_constant(&w, p, axis).unwrap() <= full * (1.0 + 1e-12), "slice A_p exceeds full A_p")?;
            }
        }

        let nu = gen_ap_weight(derive_seed(s, 2), &grid, 0.3).unwrap();
        let all = ParamSubset::all(&grid);
        let c = GridFunction::constant(&grid, 1.0 + s as f64);
        let partition = Partition::new(vec![(0..grid.m()).collect()], grid.m()).unwrap();
        let zeros = [
            product_bmo_norm(&c, &nu, &all, TestFamily::Rectangles).unwrap(),
            little_bmo_norm(&c, &nu).unwrap(),
            bmo_v_norm(&c, &nu, &ParamSubset::new(vec![0]).unwrap()).unwrap(),
            little_product_bmo_norm(&c, &nu, &partition).unwrap(),
        ];
        ensure(zeros.iter().all(|&z| z == 0.0), format!("BMO of a constant is {zeros:?}"))?;

        let small = MultiGrid::new(if s % 2 == 0 { vec![2, 2] } else { vec![3, 1] }).unwrap();
        let b = random_function(&small, derive_seed(s, 3));
        let nu = gen_ap_weight(derive_seed(s, 4), &small, 0.5).unwrap();
        let sub = ParamSubset::all(&small);
        let family: Vec<f64> = [TestFamily::Rectangles, TestFamily::RectanglesPlusUnions(2), TestFamily::RectanglesPlusUnions(3)]
            .into_iter()
            .map(|t| product_bmo_norm(&b, &nu, &sub, t).unwrap())
            .collect();
        ensure(family[0] <= family[1] && family[1] <= family[2], format!("test-family monotonicity broken: {family:?}"))?;
        checked += 1;
    }
    ensure(worst_duality <= 1e-10, format!("A_p duality off by {worst_duality:e}"))?;
    Ok(format!("{checked} weights/symbols, worst duality error {worst_duality:.1e}"))
}

fn empirical_suite(reports: &mut Vec<(ExperimentConfig, ExperimentReport)>) -> Outcome {
    let mut max_by_family = Vec::new();
    for path in configs() {
        let cfg = ExperimentConfig::load(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let report = run_ensemble(&cfg).map_err(|e| format!("{}: {e}", cfg.name))?;
        let s = &report.summary;
        ensure(s.count >= 100 && cfg.levels == [5, 5], format!("{}: ensemble too small or wrong grid", cfg.name))?;
        ensure(s.non_finite == 0 && report.rows.iter().all(|r| r.ratio.is_finite()), format!("{}: non-finite ratio", cfg.name))?;
        ensure(s.flagged == 0, format!("{}: {} flagged records", cfg.name, s.flagged))?;
        match apply_fixture(&cfg, &report, FixtureMode::Check).map_err(|e| e.to_string())? {
            Some(FixtureOutcome::Matched) => {}
            other => return Err(format!("{}: fixture {other:?}", cfg.name)),
        }
        max_by_family.push(format!("{} {:.3}", cfg.name.trim_end_matches("_depth5"), s.max));
        reports.push((cfg, report));
    }
    ensure(reports.len() == 15, format!("expected 15 shipped ensembles, found {}", reports.len()))?;
    Ok(format!("15 ensembles finite, unflagged, fixtures matched; max ratios: {}", max_by_family.join(", ")))
}

fn degenerate_case() -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for path in configs() {
        let cfg = ExperimentConfig::load(&path).unwrap();
        let Experiment::Bloom { commutators } = &cfg.experiment else { continue };
        let grid = cfg.grid().unwrap();
        for index in 0..commutators.len() {
            for instance in 0..3 {
                let seed = cfg.instance_seed(index + instance * commutators.len());
                let c = cfg.commutator(&grid, index, seed).map_err(|e| e.to_string())?;
                let c = c.with_symbol(GridFunction::constant(&grid, 2.75)).map_err(|e| e.to_string())?;
                let f = random_function(&grid, derive_seed(seed, 4));
                let out = commutator_apply(&c, &f).map_err(|e| e.to_string())?.max_abs();
                worst = worst.max(out);
                ensure(out <= 1e-14, format!("{} template {index}: |[b,T]f| = {out:e}", cfg.name))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} commutators from every shipped template, worst output {worst:.1e}"))
}

fn determinism(reports: &[(ExperimentConfig, ExperimentReport)]) -> Outcome {
    ensure(!reports.is_empty(), "no reports from the empirical suite")?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().map_err(|e| e.to_string())?;
    for (cfg, first) in reports {
        let second = pool.install(|| run_ensemble(cfg)).map_err(|e| e.to_string())?;
        ensure(first.to_csv() == second.to_csv(), format!("{}: CSV bytes differ between runs", cfg.name))?;
        ensure(first.summary == second.summary, format!("{}: summaries differ", cfg.name))?;
    }
    Ok(format!("{} configs rerun on a 4-thread pool, byte-identical CSV", reports.len()))
}

fn main() {
    let mut reports = Vec::new();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("exact identities", Box::new(exact_identities)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("structural checks", Box::new(structural_checks)),
        ("empirical inequality suite", Box::new(|| empirical_suite(&mut reports))),
        ("degenerate-case contract", Box::new(degenerate_case)),
    ];
    let mut failed = 0;
    let mut run = |n: usize, name: &str, f: Criterion| {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} {name}: PASS ({secs:.1}s) {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({secs:.1}s) {why}");
            }
        }
    };
    for (n, (name, f)) in criteria.into_iter().enumerate() {
        run(n + 1, name, f);
    }
    run(6, "determinism", Box::new(|| determinism(&reports)));
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
