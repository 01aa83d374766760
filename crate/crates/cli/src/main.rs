//! `massart-forge` command-line front end.
//!
//! Exit codes: 0 success, 1 internal error or failed checks, 2 invalid or
//! infeasible input.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod manifest;

use anyhow::{anyhow, Context, Result};
use args::{Cli, Command, DensityArgs, ExperimentArgs, GenArgs, PairArgs, PlanArgs, ReplayArgs, VerifyArgs};
use clap::Parser;
use manifest::{manifest_path, OutputFile, RunManifest, Summary, RNG_NAME};
use massart_forge::format::to_json_string;
use massart_forge::instance::{make_instance, random_unit, sample_labeled, write_dataset_csv, DatasetSidecar};
use massart_forge::onedim::{build_hard_pair, default_density_window, density_curve, write_density_csv, HardPairConfig};
use massart_forge::planner::{evaluate_schedule, Constants};
use massart_forge::sq_lab::{distinguishing_experiment, ExperimentConfig, LearnerKind};
use massart_forge::verify::{run_verification, LiftCheckConfig, VerifyConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const THREADS_ENV: &str = "MASSART_FORGE_THREADS";

/// Rejected input, mapped to exit code 2.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<massart_forge::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
    }
    1
}

/// Library errors carry their own classification; keep them in the chain.
fn lib<T>(r: massart_forge::Result<T>) -> Result<T> {
    r.map_err(anyhow::Error::new)
}

struct Outcome {
    outputs: Vec<PathBuf>,
    config: serde_json::Value,
    seed: Option<u64>,
    summary: Summary,
    exit: u8,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Writes JSON to `path`, or to stdout when there is none.
fn emit_json<T: Serialize>(value: &T, path: Option<&Path>, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let text = to_json_string(value)?;
    match path {
        Some(p) => {
            write_text(p, &text)?;
            outputs.push(p.to_path_buf());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn pair_config(p: &PairArgs) -> Result<HardPairConfig> {
    lib(HardPairConfig::new(p.zeta, p.d, p.epsilon))
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

fn cmd_plan(a: &PlanArgs) -> Result<Outcome> {
    let zeta = match (a.zeta, a.zeta_exp) {
        (Some(z), None) => z,
        (None, Some(s)) => (-a.log_m.powf(s)).exp(),
        _ => return Err(input_error("exactly one of --zeta and --zeta-exp is required")),
    };
    let constants = Constants {
        c_tau: a.c_tau,
        c_m: a.c_m,
        c_d: a.c_d,
        c_zeta: a.c_zeta,
    };
    let plan = lib(evaluate_schedule(a.log_m, a.eta, zeta, constants))?;
    let mut outputs = Vec::new();
    emit_json(&plan, a.out.as_deref(), &mut outputs)?;
    let feasible = plan.is_feasible();
    let detail = if feasible {
        "feasible".to_string()
    } else {
        format!("infeasible: {}", plan.violations.join("; "))
    };
    if !feasible {
        eprintln!("error: {detail}");
    }
    Ok(Outcome {
        outputs,
        config: serde_json::json!({
            "log_M": a.log_m, "zeta": zeta, "eta": a.eta, "constants": to_value(&constants)?,
        }),
        seed: None,
        summary: Summary { pass: feasible, detail },
        exit: if feasible { 0 } else { 2 },
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn cmd_gen(a: &GenArgs) -> Result<Outcome> {
    let pair = lib(build_hard_pair(pair_config(&a.pair)?))?;
    if a.m == 0 {
        return Err(input_error("--m must be positive"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let v = random_unit(a.m, &mut rng);
    let instance = lib(make_instance(pair, v, a.eta))?;
    rng.set_stream(1);
    rng.set_word_pos(0);
    let samples = sample_labeled(&instance, &mut rng, a.n);

    let mut w = create(&a.out)?;
    write_dataset_csv(&mut w, a.m, &samples)?;
    w.flush()?;
    let sidecar = DatasetSidecar::new(&instance, a.seed, a.redact);
    let side = sidecar_path(&a.out);
    write_text(&side, &to_json_string(&sidecar)?)?;
    Ok(Outcome {
        outputs: vec![a.out.clone(), side],
        config: serde_json::json!({
            "zeta": a.pair.zeta, "d": a.pair.d, "epsilon": a.pair.epsilon, "eta": a.eta,
            "m": a.m, "n": a.n, "redact": a.redact,
        }),
        seed: Some(a.seed),
        summary: Summary {
            pass: true,
            detail: format!("{} rows", a.n),
        },
        exit: 0,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    pair_config(&a.pair)?;
    let config = VerifyConfig {
        zeta: a.pair.zeta,
        d: a.pair.d,
        epsilon: a.pair.epsilon,
        k: a.k,
        eta: a.eta,
        m: a.m,
        samples: a.samples,
        seed: a.seed,
        lift: LiftCheckConfig::default(),
        ..VerifyConfig::default()
    };
    let report = lib(run_verification(&config))?;
    let mut outputs = Vec::new();
    emit_json(&report, a.report.as_deref(), &mut outputs)?;
    let failed: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
    let detail = if failed.is_empty() {
        format!("{} checks passed", report.checks.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    if !report.pass {
        eprintln!("verification {detail}");
    }
    Ok(Outcome {
        outputs,
        config: to_value(&config)?,
        seed: Some(a.seed),
        summary: Summary {
            pass: report.pass,
            detail,
        },
        exit: if report.pass { 0 } else { 1 },
    })
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if !s.contains(',') {
        if let Ok(n) = s.parse::<u64>() {
            if n == 0 {
                return Err(input_error("--seeds must name at least one seed"));
            }
            return Ok((0..n).collect());
        }
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| input_error(format!("invalid seed {t:?}")))
        })
        .collect()
}

fn parse_learners(s: &str) -> Result<Vec<LearnerKind>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| lib(t.trim().parse::<LearnerKind>()))
        .collect()
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<Outcome> {
    pair_config(&a.pair)?;
    let config = ExperimentConfig {
        zeta: a.pair.zeta,
        d: a.pair.d,
        epsilon: a.pair.epsilon,
        eta: a.eta,
        m: a.m,
        tau: a.tau,
        seeds: parse_seeds(&a.seeds)?,
        learners: parse_learners(&a.learners)?,
        k: a.k,
        heldout: a.heldout,
        query_budget: a.query_budget,
        adversarial: a.adversarial,
        ..ExperimentConfig::default()
    };
    let report = lib(distinguishing_experiment(&config))?;
    let mut outputs = Vec::new();
    emit_json(&report, a.out.as_deref(), &mut outputs)?;
    let c = &report.checks;
    let pass = c.planted_gap_above_5tau && c.moment_gaps_within_2tau && c.learners_above_floor;
    Ok(Outcome {
        outputs,
        config: to_value(&config)?,
        seed: config.seeds.first().copied(),
        summary: Summary {
            pass,
            detail: format!(
                "planted gap min {:.6}, moment gap max {:.6}, learner error min {:.6}",
                c.planted_gap_min, c.moment_gap_max, c.learner_error_min
            ),
        },
        exit: 0,
    })
}

fn cmd_density(a: &DensityArgs) -> Result<Outcome> {
    let cfg = pair_config(&a.pair)?;
    if a.grid == 0 {
        return Err(input_error("--grid must be positive"));
    }
    let (dlo, dhi) = default_density_window(&cfg);
    let (lo, hi) = (a.lo.unwrap_or(dlo), a.hi.unwrap_or(dhi));
    if !(lo < hi) {
        return Err(input_error(format!("empty window [{lo}, {hi}]")));
    }
    let pair = lib(build_hard_pair(cfg))?;
    let rows = density_curve(&pair, lo, hi, a.grid);
    let mut w = create(&a.out)?;
    write_density_csv(&mut w, &rows)?;
    w.flush()?;
    Ok(Outcome {
        outputs: vec![a.out.clone()],
        config: serde_json::json!({
            "zeta": a.pair.zeta, "d": a.pair.d, "epsilon": a.pair.epsilon,
            "grid": a.grid, "lo": lo, "hi": hi,
        }),
        seed: None,
        summary: Summary {
            pass: true,
            detail: format!("{} rows", rows.len()),
        },
        exit: 0,
    })
}

/// Primary output a manifest is named after, if the command writes files.
fn anchor(command: &Command) -> Option<PathBuf> {
    match command {
        Command::Plan(a) => a.out.clone(),
        Command::Gen(a) => Some(a.out.clone()),
        Command::Verify(a) => a.report.clone(),
        Command::Experiment(a) => a.out.clone(),
        Command::EmitDensity(a) => Some(a.out.clone()),
        Command::Replay(_) => None,
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Plan(_) => "plan",
        Command::Gen(_) => "gen",
        Command::Verify(_) => "verify",
        Command::Experiment(_) => "experiment",
        Command::EmitDensity(_) => "emit-density",
        Command::Replay(_) => "replay",
    }
}

/// Runs one non-replay command and emits its manifest.
fn run_recorded(command: &Command, argv: &[String]) -> Result<u8> {
    let started_at = manifest::now();
    let result = match command {
        Command::Plan(a) => cmd_plan(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::EmitDensity(a) => cmd_density(a),
        Command::Replay(_) => unreachable!("replay is not recorded"),
    };
    let (outcome, err) = match result {
        Ok(o) => (o, None),
        Err(e) => {
            let o = Outcome {
                outputs: Vec::new(),
                config: serde_json::Value::Null,
                seed: None,
                summary: Summary {
                    pass: false,
                    detail: format!("{e:#}"),
                },
                exit: exit_code_for(&e),
            };
            (o, Some(e))
        }
    };
    let outputs = outcome
        .outputs
        .iter()
        .map(|p| OutputFile::hash(p))
        .collect::<Result<Vec<_>>>()?;
    let m = RunManifest {
        command: command_name(command).into(),
        argv: argv.to_vec(),
        config: outcome.config,
        seed: outcome.seed,
        rng: RNG_NAME.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: manifest::now(),
        outputs,
        summary: outcome.summary,
    };
    let text = serde_json::to_string_pretty(&m)? + "\n";
    match anchor(command) {
        Some(p) => write_text(&manifest_path(&p), &text)?,
        None => eprint!("{text}"),
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(outcome.exit)
}

const OUTPUT_FLAGS: [&str; 2] = ["--out", "--report"];

/// Points every output flag of `argv` into `dir`, keeping file names.
fn redirect_outputs(argv: &[String], dir: &Path) -> Result<Vec<String>> {
    let relocate = |p: &str| -> Result<String> {
        let name = Path::new(p)
            .file_name()
            .ok_or_else(|| input_error(format!("output path {p:?} has no file name")))?;
        Ok(dir.join(name).to_string_lossy().into_owned())
    };
    let mut out = Vec::with_capacity(argv.len());
    let mut i = 0;
    while i < argv.len() {
        let tok = &argv[i];
        if OUTPUT_FLAGS.contains(&tok.as_str()) && i + 1 < argv.len() {
            out.push(tok.clone());
            out.push(relocate(&argv[i + 1])?);
            i += 2;
            continue;
        }
        match OUTPUT_FLAGS.iter().find_map(|f| tok.strip_prefix(&format!("{f}="))) {
            Some(p) => {
                let flag = &tok[..tok.len() - p.len()];
                out.push(format!("{flag}{}", relocate(p)?));
            }
            None => out.push(tok.clone()),
        }
        i += 1;
    }
    Ok(out)
}

fn cmd_replay(a: &ReplayArgs) -> Result<u8> {
    let recorded = manifest::read(&a.manifest).map_err(|e| input_error(format!("{e:#}")))?;
    let dir = a.out_dir.clone().unwrap_or_else(|| {
        a.manifest
            .parent()
            .map(|p| p.join("replay"))
            .unwrap_or_else(|| PathBuf::from("replay"))
    });
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let argv = redirect_outputs(&recorded.argv, &dir)?;
    let cli = Cli::try_parse_from(std::iter::once("massart-forge".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| input_error(format!("manifest arguments do not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(input_error("a replay manifest cannot itself be replayed"));
    }
    let code = run_recorded(&cli.command, &argv)?;
    if code != recorded_exit(&recorded) {
        eprintln!("replay exit code {code} differs from the recorded outcome");
    }
    let mut identical = true;
    for o in &recorded.outputs {
        let name = o.path.file_name().ok_or_else(|| anyhow!("recorded output without file name"))?;
        let fresh = OutputFile::hash(&dir.join(name))?;
        let same = fresh.sha256 == o.sha256;
        identical &= same;
        println!(
            "{} {} {}",
            if same { "identical" } else { "DIFFERENT" },
            o.path.display(),
            fresh.path.display()
        );
    }
    Ok(if identical { 0 } else { 1 })
}

fn recorded_exit(m: &RunManifest) -> u8 {
    match (m.command.as_str(), m.summary.pass) {
        (_, true) => 0,
        ("plan", false) => 2,
        ("experiment", false) => 0,
        _ => 1,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| input_error(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run() -> Result<u8> {
    let cli = Cli::parse();
    configure_threads()?;
    match &cli.command {
        Command::Replay(a) => cmd_replay(a),
        other => {
            let argv: Vec<String> = std::env::args().skip(1).collect();
            run_recorded(other, &argv)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
