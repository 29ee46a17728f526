//! `lamprate`: experiment runner for lamplighter random-walk simulation and
//! mechanical lemma verification.
//!
//! Subcommands: `simulate`, `verify-lemmas`, `tsp`, `presets`. Configuration
//! parse errors exit with status 2, run failures with status 1. Set
//! `LAMPRATE_LOG` (error/warn/info/debug) to control verbosity.

mod config;
mod presets;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lamprate_core::cases::{
    select_sigmas, validate_tables, validate_tables_injecting_fault, verify_distance_bounds,
    verify_phi_inequality, Selection, TableCase,
};
use lamprate_core::estimators::{
    aggregate_rates, range_law, return_probability, run_trials, EstimatorConfig, IdentityReport,
};
use lamprate_core::rational::{rat_to_string, Rat};
use lamprate_core::tsp;
use lamprate_core::walk::{GenerationCheck, MeasureKind};

use config::{RunConfig, TspModeSpec};

#[derive(Parser)]
#[command(
    name = "lamprate",
    about = "Lamplighter random walks: exact tour metrics, seeded simulation, rate estimation and lemma verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation experiment and write its result documents.
    Simulate(SimulateArgs),
    /// Verify the distance lemmas and comparison tables mechanically.
    VerifyLemmas(VerifyArgs),
    /// Solve one travelling-salesman instance (debugging aid).
    Tsp(TspArgs),
    /// List or dump the embedded experiment presets.
    Presets(PresetsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Path to a TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of an embedded preset.
    #[arg(long)]
    preset: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the horizon.
    #[arg(long)]
    horizon: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Tour solver strategy.
    #[arg(long, value_parser = ["auto", "exact", "heuristic"])]
    tsp_mode: Option<String>,
    /// Output directory for the result documents.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Verify a specific backend configuration instead of the default sweep.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random rational length assignments per table case.
    #[arg(long, default_value_t = 100)]
    assignments: usize,
    #[arg(long, default_value_t = 0x600D)]
    seed: u64,
    /// Write the full JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Self-test: tamper one table row and prove the detector reports it.
    #[arg(long, default_value_t = false)]
    inject_fault: bool,
}

#[derive(Args)]
struct TspArgs {
    /// Path to a TOML instance (backend, supp, target).
    #[arg(long)]
    instance: PathBuf,
    /// Cross-check exact modes against the brute-force oracle.
    #[arg(long, default_value_t = false)]
    check: bool,
}

#[derive(Args)]
struct PresetsArgs {
    #[command(subcommand)]
    action: Option<PresetAction>,
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names (default action).
    List,
    /// Print a preset as TOML.
    Dump { name: String },
}

enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LAMPRATE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::VerifyLemmas(args) => cmd_verify_lemmas(args),
        Command::Tsp(args) => cmd_tsp(args),
        Command::Presets(args) => cmd_presets(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("run failed: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_run_config(args: &SimulateArgs) -> Result<RunConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            RunConfig::from_toml(&text)?
        }
        (None, Some(name)) => presets::preset(name)
            .ok_or_else(|| anyhow!("unknown preset `{name}`; see `lamprate presets`"))?,
        (None, None) => bail!("either --config or --preset is required"),
        (Some(_), Some(_)) => unreachable!("clap forbids this combination"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(horizon) = args.horizon {
        cfg.horizon = horizon;
    }
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
    if let Some(mode) = &args.tsp_mode {
        cfg.tsp_mode = match mode.as_str() {
            "auto" => TspModeSpec::Auto,
            "exact" => TspModeSpec::Exact,
            "heuristic" => TspModeSpec::Heuristic,
            _ => unreachable!("clap validates the value"),
        };
    }
    if cfg.trials < 2 {
        bail!("at least two trials are required");
    }
    Ok(cfg)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = load_run_config(&args).map_err(Failure::Config)?;
    let backend = cfg.build_backend().map_err(Failure::Config)?;
    let measure = cfg.build_measure(&backend).map_err(Failure::Config)?;
    let lamp_cost = cfg.lamp_cost_rat().map_err(Failure::Config)?;
    let checkpoints = cfg.checkpoint_list().map_err(Failure::Config)?;

    let generation_warning = match measure.generation() {
        GenerationCheck::Confirmed => None,
        GenerationCheck::Unconfirmed(note) => {
            log::warn!("generation condition unconfirmed: {note}");
            Some(note.clone())
        }
    };

    let mut est_cfg = EstimatorConfig::new(cfg.horizon, cfg.trials, cfg.seed)
        .with_lamp_cost(lamp_cost)
        .with_tsp(cfg.tsp_config())
        .with_jobs(cfg.jobs);
    est_cfg.checkpoints = checkpoints;

    log::info!(
        "running {} trials of horizon {} on {} threads",
        cfg.trials,
        cfg.horizon,
        if cfg.jobs == 0 { num_threads() } else { cfg.jobs }
    );
    let records = run_trials(&measure, &est_cfg).map_err(|e| Failure::Run(e.into()))?;
    let rates = aggregate_rates(&records, lamp_cost, cfg.seed);
    let ret = return_probability(&measure, cfg.horizon, cfg.trials, cfg.seed ^ 0x7A7E)
        .map_err(|e| Failure::Run(e.into()))?;
    let range = range_law(&records, Some(&ret));
    let identity_check = matches!(measure.kind(), MeasureKind::WalkSwitch).then(|| {
        // Both sides already exist: the lamp side from the wreath trials, the
        // projection side from the independent return run.
        let projection_side = 0.5 * (1.0 - ret.p_return);
        IdentityReport {
            ell_supp: rates.ell_supp,
            projection_side,
            return_estimate: ret.clone(),
            discrepancy: (rates.ell_supp.mean - projection_side).abs(),
        }
    });

    let doc = report::ExperimentDoc {
        config: cfg.clone(),
        rates,
        return_probability: ret,
        range_law: range,
        identity_check,
        generation_warning,
    };

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(Failure::Run)?;
    let doc_path = args.out_dir.join(format!("{}.estimates.json", cfg.name));
    let stream_path = args.out_dir.join(format!("{}.checkpoints.ndjson", cfg.name));
    let csv_path = args.out_dir.join("summary.csv");
    report::write_document(&doc_path, &doc).map_err(Failure::Run)?;
    report::write_checkpoint_stream(&stream_path, &records).map_err(Failure::Run)?;
    report::write_csv_row(&csv_path, &doc).map_err(Failure::Run)?;

    print!("{}", report::human_summary(&doc));
    println!(
        "wrote {}, {}, {}",
        doc_path.display(),
        stream_path.display(),
        csv_path.display()
    );
    Ok(())
}

fn num_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Serialize)]
struct ConfigSection {
    name: String,
    outcome: String,
    bounds_ok: Option<bool>,
    phi_ok: Option<bool>,
    min_phi_slack: Option<String>,
}

#[derive(Serialize)]
struct LemmaReport {
    configs: Vec<ConfigSection>,
    tables: Vec<lamprate_core::cases::TableReport>,
    all_ok: bool,
}

fn verify_backend_section(
    name: &str,
    backend: &lamprate_core::Backend,
) -> Result<(ConfigSection, bool)> {
    match select_sigmas(backend) {
        Ok(Selection::Triple(triple)) => {
            let bounds = verify_distance_bounds(backend, &triple)?;
            let phi = verify_phi_inequality(backend, &triple)?;
            let min_slack = phi.rows.iter().map(|r| r.slack).min().map(rat_to_string);
            let ok = bounds.all_ok && phi.all_ok;
            Ok((
                ConfigSection {
                    name: name.to_string(),
                    outcome: format!("case {:?}", triple.case),
                    bounds_ok: Some(bounds.all_ok),
                    phi_ok: Some(phi.all_ok),
                    min_phi_slack: min_slack,
                },
                ok,
            ))
        }
        Ok(Selection::DegenerateLinearMetric) => Ok((
            ConfigSection {
                name: name.to_string(),
                outcome: "degenerate: linear metric, no tour acceleration triple".to_string(),
                bounds_ok: None,
                phi_ok: None,
                min_phi_slack: None,
            },
            true,
        )),
        Err(e) => Ok((
            ConfigSection {
                name: name.to_string(),
                outcome: format!("not applicable: {e}"),
                bounds_ok: None,
                phi_ok: None,
                min_phi_slack: None,
            },
            true,
        )),
    }
}

fn cmd_verify_lemmas(args: VerifyArgs) -> Result<(), Failure> {
    let rat = |n: i64, d: i64| Rat::new(n, d);
    let mut configs = Vec::new();
    let mut all_ok = true;

    let mut add = |section: (ConfigSection, bool), all_ok: &mut bool| {
        *all_ok &= section.1;
        configs.push(section.0);
    };

    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Config)?;
        let cfg = RunConfig::from_toml(&text).map_err(Failure::Config)?;
        let backend = cfg.build_backend().map_err(Failure::Config)?;
        add(
            verify_backend_section(&cfg.name, &backend).map_err(Failure::Run)?,
            &mut all_ok,
        );
    } else {
        use lamprate_core::Backend;
        let roster: Vec<(&str, Backend)> = vec![
            (
                "free group, unit lengths",
                Backend::free(2, &[rat(1, 1), rat(1, 1)]).unwrap(),
            ),
            (
                "rank-3 lattice, lengths (1/2, 1, 1)",
                Backend::hypercubic(3, &[rat(1, 2), rat(1, 1), rat(1, 1)]).unwrap(),
            ),
            (
                "weighted Z, short jump (Z-I)",
                Backend::line(&[(1, rat(1, 1)), (2, rat(1, 2))]).unwrap(),
            ),
            (
                "weighted Z, cheap jump (Z-II)",
                Backend::line(&[(1, rat(1, 1)), (2, rat(3, 2))]).unwrap(),
            ),
            (
                "weighted Z, linear metric l=(1,3,5)",
                Backend::line(&[(1, rat(1, 1)), (2, rat(3, 1)), (3, rat(5, 1))]).unwrap(),
            ),
            (
                "Z2*Z2 (two-generated, recurrent)",
                Backend::c2c2(rat(1, 1), rat(1, 1)).unwrap(),
            ),
        ];
        for (name, backend) in &roster {
            add(
                verify_backend_section(name, backend).map_err(Failure::Run)?,
                &mut all_ok,
            );
        }
    }

    let mut tables = Vec::new();
    for case in [TableCase::I, TableCase::II, TableCase::III, TableCase::ZI] {
        let report = if args.inject_fault {
            validate_tables_injecting_fault(case, args.assignments.min(4), args.seed, 0)
        } else {
            validate_tables(case, args.assignments, args.seed)
        }
        .map_err(|e| Failure::Run(e.into()))?;
        all_ok &= report.all_ok();
        tables.push(report);
    }

    let report = LemmaReport {
        configs,
        tables,
        all_ok,
    };

    for section in &report.configs {
        let status = match (section.bounds_ok, section.phi_ok) {
            (Some(b), Some(p)) if b && p => "pass",
            (None, None) => "info",
            _ => "FAIL",
        };
        println!("[{status}] {} -> {}", section.name, section.outcome);
        if let Some(slack) = &section.min_phi_slack {
            println!("       minimum arrangement slack {slack}");
        }
    }
    for table in &report.tables {
        let status = if table.all_ok() { "pass" } else { "FAIL" };
        println!(
            "[{status}] table case {:?} ({:?}): {} rows over {} assignments, {} violations",
            table.case,
            table.mode,
            table.rows_checked,
            table.assignments,
            table.violations.len()
        );
        for v in table.violations.iter().take(3) {
            println!("       counterexample row ({}) at {}: {}", v.row, v.assignment, v.detail);
        }
    }

    if let Some(path) = &args.json {
        let file = std::fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(Failure::Run)?;
        serde_json::to_writer_pretty(file, &report)
            .context("writing the JSON report")
            .map_err(Failure::Run)?;
    }

    if report.all_ok {
        println!("all lemma checks passed");
        Ok(())
    } else {
        Err(Failure::Run(anyhow!("lemma checks reported violations")))
    }
}

#[derive(serde::Deserialize)]
struct TspInstance {
    backend: config::BackendSpec,
    supp: Vec<String>,
    target: String,
    #[serde(default)]
    mode: TspModeSpec,
    #[serde(default = "default_cap")]
    cap: usize,
}

fn default_cap() -> usize {
    18
}

fn cmd_tsp(args: TspArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))
        .map_err(Failure::Config)?;
    let instance: TspInstance = toml::from_str(&text)
        .context("failed to parse the instance")
        .map_err(Failure::Config)?;
    // Reuse the backend builder by wrapping the spec in a dummy run config.
    let backend_cfg = RunConfig {
        name: "tsp".to_string(),
        backend: instance.backend,
        measure: config::MeasureSpec::WalkSwitch {
            mu0: config::Mu0Spec::Keyword("uniform".to_string()),
        },
        lamp_modulus: 2,
        lamp_cost: "0/1".to_string(),
        horizon: 1,
        trials: 2,
        seed: 0,
        checkpoints: Default::default(),
        tsp_mode: instance.mode,
        tsp_cap: instance.cap,
        jobs: 1,
    };
    let backend = backend_cfg.build_backend().map_err(Failure::Config)?;
    let supp: Vec<_> = instance
        .supp
        .iter()
        .map(|s| {
            backend
                .parse_element(s)
                .map_err(|e| Failure::Config(anyhow!("support element `{s}`: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let target = backend
        .parse_element(&instance.target)
        .map_err(|e| Failure::Config(anyhow!("target `{}`: {e}", instance.target)))?;

    let result = tsp::solve(&backend, &supp, &target, &backend_cfg.tsp_config())
        .map_err(|e| Failure::Run(anyhow!("{e}")))?;
    println!("value: {}", rat_to_string(result.value));
    println!(
        "order: [{}]",
        result
            .order
            .iter()
            .map(|p| backend.format_element(p))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("mode: {}", result.mode.as_str());

    if args.check {
        if supp.len() > tsp::BRUTEFORCE_CAP {
            println!("oracle check skipped: support larger than the brute-force cap");
        } else {
            let oracle = tsp::bruteforce_oracle(&backend, &supp, &target)
                .map_err(|e| Failure::Run(anyhow!("{e}")))?;
            if result.mode.is_exact() {
                if result.value == oracle {
                    println!("oracle agreement: exact match ({})", rat_to_string(oracle));
                } else {
                    return Err(Failure::Run(anyhow!(
                        "oracle mismatch: solver {} vs brute force {}",
                        rat_to_string(result.value),
                        rat_to_string(oracle)
                    )));
                }
            } else {
                let ok = result.value >= oracle;
                println!(
                    "oracle bound: heuristic {} >= optimum {} ({})",
                    rat_to_string(result.value),
                    rat_to_string(oracle),
                    if ok { "consistent" } else { "VIOLATED" }
                );
                if !ok {
                    return Err(Failure::Run(anyhow!("heuristic undercut the optimum")));
                }
            }
        }
    }
    Ok(())
}

fn cmd_presets(args: PresetsArgs) -> Result<(), Failure> {
    match args.action.unwrap_or(PresetAction::List) {
        PresetAction::List => {
            for name in presets::PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        PresetAction::Dump { name } => {
            let cfg = presets::preset(&name).ok_or_else(|| {
                Failure::Config(anyhow!("unknown preset `{name}`; see `lamprate presets`"))
            })?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}
