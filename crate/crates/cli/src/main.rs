use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dyadic_core::experiments::{
    apply_fixture, random_function, replay, run_ensemble, run_norms, run_search, run_verify, ExperimentConfig, FixtureMode,
    FixtureOutcome, NormsConfig, ReplayArtifact, Suite, VerifyOptions,
};
use dyadic_core::haar::HaarSign;
use dyadic_core::io::{format_f64, save_grid_function};
use dyadic_core::weights::gen_ap_weight;
use dyadic_core::{Error, GridFunction, MultiGrid, OperatorFile};

#[derive(Parser)]
#[command(name = "dyadic", version, about = "Multi-parameter dyadic harmonic analysis laboratory")]
struct Cli {
    /// Worker threads for ensembles (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exact-identity suites, or replay a saved failure.
    Verify(VerifyArgs),
    /// Tabulate norms and weight constants as CSV.
    Norms(NormsArgs),
    /// Run a seeded ensemble and compare it with its frozen fixture.
    Bloom(BloomArgs),
    /// Coordinate-ascent search for a large Bloom ratio.
    Search(SearchArgs),
    /// Write an operator, weight or symbol file.
    Gen(GenArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Suites to run (repeatable); all by default.
    #[arg(long = "suite", value_enum)]
    suites: Vec<SuiteArg>,
    /// Directory receiving replay artifacts.
    #[arg(long, default_value = "verify-artifacts")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Recompute a saved artifact instead of running suites.
    #[arg(long, conflicts_with = "suites")]
    replay: Option<PathBuf>,
    #[arg(long, hide = true)]
    flip_haar_sign: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Orthonormality,
    Parseval,
    Expansion,
    Telescoping,
    Commutator,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Orthonormality => Suite::Orthonormality,
            SuiteArg::Parseval => Suite::Parseval,
            SuiteArg::Expansion => Suite::Expansion,
            SuiteArg::Telescoping => Suite::Telescoping,
            SuiteArg::Commutator => Suite::Commutator,
        }
    }
}

#[derive(Args)]
struct NormsArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; falls back to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureArg {
    Check,
    Regenerate,
}

#[derive(Args)]
struct BloomArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; falls back to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's fixture mode.
    #[arg(long, value_enum)]
    fixture: Option<FixtureArg>,
}

#[derive(Args)]
struct SearchArgs {
    /// Ensemble config naming the commutator, weights and exponent.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV of the best ratio per iteration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Operator,
    Weight,
    Symbol,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    /// Levels per axis, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Operator type: shift, partial_paraproduct or full_paraproduct.
    #[arg(long = "type", default_value = "shift")]
    op_type: String,
    #[arg(long, value_delimiter = ',')]
    axes: Vec<usize>,
    /// Complexity pairs `k:l`, comma separated, one per axis.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    complexity: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long)]
    flavor: Option<String>,
    #[arg(long)]
    adjoint: bool,
    /// Weight roughness in `[0, 1)`.
    #[arg(long, default_value_t = 0.5)]
    roughness: f64,
    /// Constant symbol value instead of random entries.
    #[arg(long)]
    constant: Option<f64>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (k, l) = s.split_once(':').ok_or_else(|| format!("expected k:l, found {s:?}"))?;
    Ok((k.parse().map_err(|e| format!("{k:?}: {e}"))?, l.parse().map_err(|e| format!("{l:?}: {e}"))?))
}

/// Exit status of a command that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Format(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<Outcome, Error> {
    if let Some(path) = args.replay {
        let artifact = ReplayArtifact::load(&path)?;
        let error = replay(&artifact)?;
        let holds = error <= artifact.tolerance;
        println!(
            "{} {:?} recorded={} replayed={} tolerance={} {}",
            artifact.suite,
            artifact.levels,
            format_f64(artifact.error),
            format_f64(error),
            format_f64(artifact.tolerance),
            if holds { "PASS" } else { "FAIL" }
        );
        return Ok(if holds { Outcome::Pass } else { Outcome::Fail });
    }
    let mut opts = VerifyOptions { seed: args.seed, artifact_dir: Some(args.out), ..Default::default() };
    if !args.suites.is_empty() {
        opts.suites = args.suites.into_iter().map(Suite::from).collect();
    }
    if args.flip_haar_sign {
        opts.haar_sign = HaarSign::Flipped;
    }
    let report = run_verify(&opts)?;
    for s in &report.suites {
        let status = if s.passed() { "PASS" } else { "FAIL" };
        println!("{:<15} checks={:<10} max_error={:<24} tolerance={} {status}", s.suite, s.checks, format_f64(s.max_error), format_f64(s.suite.tolerance()));
        if let Some(f) = &s.failure {
            println!("  failing grid {:?}, error {}", f.artifact.levels, format_f64(f.artifact.error));
            if let Some(p) = &f.path {
                println!("  replay artifact: {}", p.display());
            }
        }
    }
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

fn norms(args: NormsArgs) -> Result<Outcome, Error> {
    let cfg = NormsConfig::load(&args.config)?;
    let csv = run_norms(&cfg)?;
    write_or_print(args.out.as_deref().or(cfg.output.as_deref()), &csv)?;
    Ok(Outcome::Pass)
}

fn bloom(args: BloomArgs) -> Result<Outcome, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let mode = match args.fixture {
        Some(FixtureArg::Check) => FixtureMode::Check,
        Some(FixtureArg::Regenerate) => FixtureMode::Regenerate,
        None => cfg.fixture,
    };
    let report = run_ensemble(&cfg)?;
    match args.out.as_deref().or(cfg.output.as_deref()) {
        Some(path) => {
            let sidecar = report.write(path)?;
            eprintln!("wrote {} and {}", path.display(), sidecar.display());
        }
        None => print!("{}", report.to_csv()),
    }
    let s = &report.summary;
    eprintln!(
        "{}: count={} flagged={} non_finite={} min={} median={} q90={} max={}",
        report.name,
        s.count,
        s.flagged,
        s.non_finite,
        format_f64(s.min),
        format_f64(s.median),
        format_f64(s.q90),
        format_f64(s.max)
    );
    let outcome = match apply_fixture(&cfg, &report, mode)? {
        None => Outcome::Pass,
        Some(FixtureOutcome::Matched) => {
            eprintln!("fixture matched");
            Outcome::Pass
        }
        Some(FixtureOutcome::Regenerated(p)) => {
            eprintln!("fixture written to {}", p.display());
            Outcome::Pass
        }
        Some(FixtureOutcome::Missing(p)) => {
            apply_fixture(&cfg, &report, FixtureMode::Regenerate)?;
            eprintln!("no fixture at {}; froze the current summary", p.display());
            Outcome::Pass
        }
        Some(FixtureOutcome::Drifted(stats)) => {
            for line in stats {
                eprintln!("fixture drift: {line}");
            }
            Outcome::Fail
        }
    };
    Ok(outcome)
}

fn search(args: SearchArgs) -> Result<Outcome, Error> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let outcome = run_search(&cfg, args.budget, args.seed)?;
    if let Some(path) = &args.out {
        let mut csv = String::from("iteration,ratio\n");
        for (i, r) in outcome.trajectory.iter().enumerate() {
            csv.push_str(&format!("{i},{}\n", format_f64(*r)));
        }
        write_or_print(Some(path), &csv)?;
    }
    println!("{}", serde_json::to_string_pretty(&outcome.best).map_err(|e| Error::Format(e.to_string()))?);
    Ok(Outcome::Pass)
}

fn generate(args: GenArgs) -> Result<Outcome, Error> {
    let grid = MultiGrid::new(args.levels.clone()).map_err(|e| Error::Config(format!("levels: {e}")))?;
    match args.kind {
        GenKind::Operator => {
            let file = OperatorFile {
                kind: args.op_type,
                levels: args.levels,
                axes: args.axes,
                complexity: args.complexity,
                seed: Some(args.seed),
                theta: Some(args.theta),
                flavor: args.flavor,
                adjoint: args.adjoint,
                coefficients: None,
                symbol: None,
            };
            let spec = file.build().map_err(|e| match e {
                Error::Config(_) => e,
                other => Error::Config(other.to_string()),
            })?;
            OperatorFile::from_spec(&spec).save(&args.out)?;
            eprintln!("wrote {} ({})", args.out.display(), spec.id());
        }
        GenKind::Weight => {
            if !(0.0..1.0).contains(&args.roughness) {
                return Err(Error::Config("roughness: must lie in [0, 1)".into()));
            }
            let w = gen_ap_weight(args.seed, &grid, args.roughness)?;
            save_grid_function(&args.out, w.values())?;
            eprintln!("wrote {}", args.out.display());
        }
        GenKind::Symbol => {
            let b = match args.constant {
                Some(v) => GridFunction::constant(&grid, v),
                None => random_function(&grid, args.seed),
            };
            save_grid_function(&args.out, &b)?;
            eprintln!("wrote {}", args.out.display());
        }
    }
    Ok(Outcome::Pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Norms(a) => norms(a),
        Command::Bloom(a) => bloom(a),
        Command::Search(a) => search(a),
        Command::Gen(a) => generate(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
