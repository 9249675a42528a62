mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gcpc::harness::{
    cc_reference_amplitude, compute_metrics, critical_reactance, identify_nominal, run_scenario_with, simulate,
    sweep, ControllerMode, CriticalSearch, PretrainedController, RunTiming, ScenarioConfig, SimulationRun,
    SweepPoint, Trace,
};
use gcpc::ispc::IspcArtifact;
use serde::Serialize;

use config::{load, LoadedConfig};

#[derive(Parser)]
#[command(name = "gcpc", version, about = "Converter fault scenarios under PI and subspace predictive control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one fault scenario and write trace.csv, metrics.json and manifest.json.
    Simulate(Common),
    /// Identify the nominal predictor and write artifact.json and rank.json.
    Identify(Common),
    /// Bisect the critical fault reactance for each configured controller.
    Sweep(Common),
    /// Recompute metrics.json from an existing trace.csv.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Trace to evaluate.
        #[arg(long)]
        trace: PathBuf,
        /// CC trace of the same scenario defining the settling tube; when
        /// omitted a CC trace is taken as its own reference and any other
        /// trace gets a freshly simulated CC companion.
        #[arg(long)]
        reference_trace: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; omitted sections take the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `scenario.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `scenario.controller_mode` (CC, FT_ISPC, REGULAR_ISPC); for
    /// `sweep`, restricts the run to that controller's range.
    #[arg(long)]
    mode: Option<ControllerMode>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    config_path: Option<String>,
    config_sha256: &'a str,
    seed: u64,
    seed_override: Option<u64>,
    controller_mode: ControllerMode,
    out_dir: String,
    effective_config: &'a ScenarioConfig,
    wall_s: f64,
    timing: Option<&'a RunTiming>,
    identification_timing: Option<&'a RunTiming>,
}

struct Session<'a> {
    cmd: &'static str,
    common: &'a Common,
    loaded: LoadedConfig,
    scenario: ScenarioConfig,
    started: Instant,
}

impl<'a> Session<'a> {
    fn new(cmd: &'static str, common: &'a Common) -> Result<Self> {
        let loaded = load(common.config.as_deref())?;
        let mut scenario = loaded.file.scenario.clone();
        if let Some(seed) = common.seed {
            scenario.rng_seed = seed;
        }
        if let Some(mode) = common.mode {
            scenario.controller_mode = mode;
        }
        scenario.validate().context("invalid configuration")?;
        fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
        Ok(Self {
            cmd,
            common,
            loaded,
            scenario,
            started: Instant::now(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.common.out.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn manifest(&self, timing: Option<&RunTiming>, identification: Option<&RunTiming>) -> Result<()> {
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.cmd,
            config_path: self.loaded.path.as_ref().map(|p| p.display().to_string()),
            config_sha256: &self.loaded.sha256,
            seed: self.scenario.rng_seed,
            seed_override: self.common.seed,
            controller_mode: self.scenario.controller_mode,
            out_dir: self.common.out.display().to_string(),
            effective_config: &self.scenario,
            wall_s: self.started.elapsed().as_secs_f64(),
            timing,
            identification_timing: identification,
        };
        self.write_json("manifest.json", &m)
    }

    /// Regular-iSPC controller from the configured artifact or a fresh identification.
    fn pretrained(&self) -> Result<(PretrainedController, Option<RunTiming>)> {
        if let Some(path) = &self.loaded.file.artifact {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let artifact = IspcArtifact::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
            if artifact.config != self.scenario.ispc {
                bail!("artifact {} was identified with different ispc settings", path.display());
            }
            return Ok((PretrainedController::from_artifact(&artifact)?, None));
        }
        let id = identify_nominal(&self.scenario).context("nominal identification")?;
        if !id.rank().persistently_exciting {
            bail!("identification data is not persistently exciting: {:?}", id.rank());
        }
        self.write("artifact.json", &id.artifact().to_json()?)?;
        Ok((PretrainedController::from(&id), Some(id.timing.clone())))
    }
}

fn cmd_simulate(common: &Common) -> Result<()> {
    let ctx = Session::new("simulate", common)?;
    let (pre, id_timing) = match ctx.scenario.controller_mode {
        ControllerMode::RegularIspc => {
            let (p, t) = ctx.pretrained()?;
            (Some(p), t)
        }
        _ => (None, None),
    };
    let out = run_scenario_with(&ctx.scenario, pre.as_ref())?;
    ctx.write("trace.csv", &out.run.trace.to_csv())?;
    ctx.write_json("metrics.json", &out.metrics)?;
    if let Some(rank) = &out.run.ft_rank {
        ctx.write_json("rank.json", rank)?;
    }
    ctx.manifest(Some(&out.run.timing), id_timing.as_ref())?;
    let m = &out.metrics;
    eprintln!(
        "{}: stable = {}, during-fault RMSE vdc2 {:?} vpll {:?}{}",
        ctx.scenario.controller_mode.as_str(),
        m.stable,
        m.rmse_during.vdc2,
        m.rmse_during.vpll,
        m.diverged_at.map_or(String::new(), |t| format!(", diverged at {t:.3} s"))
    );
    Ok(())
}

fn cmd_identify(common: &Common) -> Result<ExitCode> {
    let ctx = Session::new("identify", common)?;
    let id = identify_nominal(&ctx.scenario).context("nominal identification")?;
    ctx.write_json("rank.json", id.rank())?;
    ctx.manifest(None, Some(&id.timing))?;
    if !id.rank().persistently_exciting {
        eprintln!(
            "error: identification data is not persistently exciting (input rank {} of {}, regressor rank {} of {})",
            id.rank().input_rank,
            id.rank().input_rows,
            id.rank().rank,
            id.rank().rows
        );
        return Ok(ExitCode::FAILURE);
    }
    ctx.write("artifact.json", &id.artifact().to_json()?)?;
    eprintln!(
        "identified {} columns: regressor rank {} of {}, training residual {:.3e}",
        ctx.scenario.ispc.t_cols,
        id.rank().rank,
        id.rank().rows,
        id.predictor.training_residual
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CriticalReport {
    mode: ControllerMode,
    lower: f64,
    upper: f64,
    result: Option<CriticalSearch>,
    error: Option<String>,
}

fn cmd_sweep(common: &Common) -> Result<ExitCode> {
    let ctx = Session::new("sweep", common)?;
    let sweep_cfg = &ctx.loaded.file.sweep;
    let ranges: Vec<_> = sweep_cfg
        .ranges
        .iter()
        .filter(|r| common.mode.is_none_or(|m| m == r.mode))
        .collect();
    if ranges.is_empty() {
        bail!("no sweep range configured for the selected controller");
    }
    let mut csv = fs::File::create(ctx.path("sweep.csv"))?;
    writeln!(csv, "mode,xg,vg,stable,diverged_at")?;
    let mut reports = Vec::new();
    let mut failed = false;
    let mut id_timing = None;
    for range in ranges {
        let scenario = ScenarioConfig {
            controller_mode: range.mode,
            ..ctx.scenario.clone()
        };
        let pre = match range.mode {
            ControllerMode::RegularIspc => {
                let (p, t) = ctx.pretrained()?;
                id_timing = t.or(id_timing);
                Some(p)
            }
            _ => None,
        };
        let mut points: Vec<SweepPoint> = Vec::new();
        if sweep_cfg.grid_points >= 2 {
            let n = sweep_cfg.grid_points;
            let xgs: Vec<f64> = (0..n)
                .map(|i| range.lower + (range.upper - range.lower) * i as f64 / (n - 1) as f64)
                .collect();
            points.extend(sweep(&scenario, &xgs, common.jobs, pre.as_ref())?);
        }
        let search = critical_reactance(&scenario, range.lower, range.upper, sweep_cfg.tol, common.jobs, pre.as_ref());
        let (result, error) = match search {
            Ok(s) => {
                points.extend(s.evaluations.iter().copied());
                eprintln!("{}: critical reactance {:.4} p.u.", range.mode.as_str(), s.critical);
                (Some(s), None)
            }
            Err(e) => {
                eprintln!("error: {}: {e}", range.mode.as_str());
                failed = true;
                (None, Some(e.to_string()))
            }
        };
        for p in &points {
            let div = p.diverged_at.map_or(String::new(), |t| format!("{t:.6}"));
            writeln!(csv, "{},{:.8e},{:.8e},{},{div}", range.mode.as_str(), p.xg, p.vg, p.stable)?;
        }
        reports.push(CriticalReport {
            mode: range.mode,
            lower: range.lower,
            upper: range.upper,
            result,
            error,
        });
    }
    ctx.write_json("critical.json", &reports)?;
    ctx.manifest(None, id_timing.as_ref())?;
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn read_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Trace::from_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_metrics(common: &Common, trace: &Path, reference: Option<&Path>) -> Result<()> {
    let ctx = Session::new("metrics", common)?;
    let tr = read_trace(trace)?;
    let cfg = &ctx.scenario;
    if (tr.ts - cfg.ts()).abs() > 1e-9 {
        bail!("trace sample time {} s differs from the configured {} s", tr.ts, cfg.ts());
    }
    let reference = match reference {
        Some(p) => read_trace(p)?,
        None if cfg.controller_mode == ControllerMode::Cc => tr.clone(),
        None => {
            let cc = ScenarioConfig {
                controller_mode: ControllerMode::Cc,
                ..cfg.clone()
            };
            simulate(&cc, None)?.trace
        }
    };
    let activation_time = tr
        .rows
        .windows(2)
        .find(|w| w[0].controller != w[1].controller && w[1].controller == gcpc::harness::ControllerTag::Ispc)
        .map(|w| w[1].t);
    let run = SimulationRun {
        trace: tr,
        timing: RunTiming::default(),
        activation_time,
        ft_rank: None,
        handover: None,
    };
    let metrics = compute_metrics(cfg, &run, cc_reference_amplitude(&reference, &cfg.fault));
    ctx.write_json("metrics.json", &metrics)?;
    ctx.manifest(None, None)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Simulate(c) => cmd_simulate(c).map(|_| ExitCode::SUCCESS),
        Command::Identify(c) => cmd_identify(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Metrics {
            common,
            trace,
            reference_trace,
        } => cmd_metrics(common, trace, reference_trace.as_deref()).map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
