//! Fault scenarios under CC, fault-triggered iSPC and regular iSPC.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{
    classify_stability, oscillation_amplitude, rmse, settling_time, Window, FALLBACK_TUBE, TUBE_FRACTION,
};
use super::steady_state::init_steady_state;
use super::trace::{Channel, ControllerTag, GridPhase, Trace, TraceRow};
use crate::conventional::{ControlReferences, ConventionalGains};
use crate::error::{Error, Result};
use crate::frames::DqVector;
use crate::ispc::{
    build_hankel, compute_gains, estimate_predictor_with, ControllerGains, Exciter, IoLog, IspcArtifact, IspcConfig,
    IspcRuntime, Predictor, RankReport,
};
use crate::plant::{
    current_reference, measure_outputs, rk4_step, ControllerOutputs, FaultEvent, OuterCommand, PlantParams,
    PlantState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControllerMode {
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "FT_ISPC")]
    FtIspc,
    #[serde(rename = "REGULAR_ISPC")]
    RegularIspc,
}

impl ControllerMode {
    pub const ALL: [ControllerMode; 3] = [ControllerMode::Cc, ControllerMode::FtIspc, ControllerMode::RegularIspc];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerMode::Cc => "CC",
            ControllerMode::FtIspc => "FT_ISPC",
            ControllerMode::RegularIspc => "REGULAR_ISPC",
        }
    }
}

impl std::str::FromStr for ControllerMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "CC" => Ok(ControllerMode::Cc),
            "FT_ISPC" => Ok(ControllerMode::FtIspc),
            "REGULAR_ISPC" | "ISPC" => Ok(ControllerMode::RegularIspc),
            _ => Err(Error::config("controller_mode", format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub controller_mode: ControllerMode,
    pub fault: FaultEvent,
    pub plant: PlantParams,
    pub conventional: ConventionalGains,
    pub references: ControlReferences,
    /// Controller settings; `ispc.t_cols` is the regular-iSPC dataset size.
    pub ispc: IspcConfig,
    /// Identification length of the fault-triggered variant, in samples.
    pub ft_samples: usize,
    /// Simulated horizon, s.
    pub t_end: f64,
    /// Delay between fault onset and the start of fault-time identification, s.
    pub detection_delay: f64,
    /// Uniform excitation half-width per channel during identification, p.u.
    pub excitation_amplitude: f64,
    pub rng_seed: u64,
    /// RK4 step, s; must divide `ispc.ts`.
    pub dt: f64,
    /// RMSE window length after fault onset and after clearance, s.
    pub rmse_window: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            controller_mode: ControllerMode::Cc,
            fault: FaultEvent::default(),
            plant: PlantParams::default(),
            conventional: ConventionalGains::default(),
            references: ControlReferences::default(),
            ispc: IspcConfig::default(),
            ft_samples: 750,
            t_end: 9.0,
            detection_delay: 1.0,
            excitation_amplitude: 0.02,
            rng_seed: 1,
            dt: 1e-5,
            rmse_window: 4.0,
        }
    }
}

fn is_multiple(t: f64, ts: f64) -> bool {
    let r = t / ts;
    (r - r.round()).abs() < 1e-6
}

impl ScenarioConfig {
    pub fn for_mode(mode: ControllerMode) -> Self {
        Self {
            controller_mode: mode,
            ..Self::default()
        }
    }

    pub fn ts(&self) -> f64 {
        self.ispc.ts
    }

    pub fn substeps(&self) -> usize {
        (self.ispc.ts / self.dt).round() as usize
    }

    pub fn sample_index(&self, t: f64) -> usize {
        (t / self.ts()).round() as usize
    }

    /// Controller settings used for fault-time identification.
    pub fn ft_ispc_config(&self) -> IspcConfig {
        IspcConfig {
            t_cols: self.ft_samples.saturating_sub(self.ispc.t_ini + self.ispc.horizon + 1),
            ..self.ispc.clone()
        }
    }

    /// Time at which fault-triggered identification starts.
    pub fn identification_start(&self) -> f64 {
        self.fault.t_start + self.detection_delay
    }

    /// Time at which fault-triggered iSPC takes over.
    pub fn activation_time(&self) -> f64 {
        self.identification_start() + self.ft_samples as f64 * self.ts()
    }

    pub fn validate(&self) -> Result<()> {
        self.fault.validate()?;
        self.plant.validate()?;
        self.conventional.validate()?;
        self.references.validate()?;
        self.ispc.validate()?;
        if self.ispc.n_u != 2 || self.ispc.n_y != 2 {
            return Err(Error::config("ispc.n_u", "the converter has two inputs and two outputs"));
        }
        if !(self.dt > 0.0 && self.dt <= self.ts()) || !is_multiple(self.ts(), self.dt) {
            return Err(Error::config("dt", "must be positive and divide ispc.ts exactly"));
        }
        if !is_multiple(self.fault.t_start, self.ts()) {
            return Err(Error::config("fault.t_start", "must be a multiple of ispc.ts"));
        }
        if !is_multiple(self.fault.t_clear, self.ts()) {
            return Err(Error::config("fault.t_clear", "must be a multiple of ispc.ts"));
        }
        if !(self.t_end > self.fault.t_clear) {
            return Err(Error::config("t_end", "must be later than fault.t_clear"));
        }
        if !(self.detection_delay >= 0.0) || !is_multiple(self.detection_delay, self.ts()) {
            return Err(Error::config("detection_delay", "must be a non-negative multiple of ispc.ts"));
        }
        if !(self.excitation_amplitude >= 0.0 && self.excitation_amplitude.is_finite()) {
            return Err(Error::config("excitation_amplitude", "must be finite and non-negative"));
        }
        if !(self.rmse_window > 0.0) {
            return Err(Error::config("rmse_window", "must be positive"));
        }
        if self.controller_mode == ControllerMode::FtIspc {
            let ft = self.ft_ispc_config();
            if ft.t_cols < ft.min_columns() {
                return Err(Error::config(
                    "ft_samples",
                    format!(
                        "too short: needs at least {} samples",
                        ft.min_columns() + ft.t_ini + ft.horizon + 1
                    ),
                ));
            }
            if self.activation_time() > self.fault.t_clear + 1e-9 {
                return Err(Error::config(
                    "ft_samples",
                    "fault.t_start + detection_delay + ft_samples * ts must not exceed fault.t_clear",
                ));
            }
        }
        Ok(())
    }
}

/// Wall-clock timing of one run, s unless noted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub simulation_s: f64,
    pub identification_s: Option<f64>,
    pub predictor_s: Option<f64>,
    pub gains_s: Option<f64>,
    pub control_steps: usize,
    pub control_step_mean_ms: Option<f64>,
    pub control_step_max_ms: Option<f64>,
}

#[derive(Debug, Default)]
struct StepClock {
    count: usize,
    total: f64,
    max: f64,
}

impl StepClock {
    fn record(&mut self, secs: f64) {
        self.count += 1;
        self.total += secs;
        self.max = self.max.max(secs);
    }

    fn fill(&self, t: &mut RunTiming) {
        t.control_steps = self.count;
        if self.count > 0 {
            t.control_step_mean_ms = Some(1e3 * self.total / self.count as f64);
            t.control_step_max_ms = Some(1e3 * self.max);
        }
    }
}

/// Fixed-step closed-loop integrator advancing one controller sample at a time.
struct Simulator<'a> {
    cfg: &'a ScenarioConfig,
    fault: Option<FaultEvent>,
    state: PlantState,
    k: usize,
    fault_start_k: usize,
    fault_clear_k: usize,
}

impl<'a> Simulator<'a> {
    fn new(cfg: &'a ScenarioConfig, fault: Option<FaultEvent>, state: PlantState) -> Self {
        Self {
            cfg,
            fault,
            state,
            k: 0,
            fault_start_k: cfg.sample_index(cfg.fault.t_start),
            fault_clear_k: cfg.sample_index(cfg.fault.t_clear),
        }
    }

    fn t(&self) -> f64 {
        self.k as f64 * self.cfg.ts()
    }

    fn phase(&self) -> GridPhase {
        match self.fault {
            None => GridPhase::Nominal,
            Some(_) if self.k < self.fault_start_k => GridPhase::Nominal,
            Some(_) if self.k < self.fault_clear_k => GridPhase::Fault,
            Some(_) => GridPhase::Cleared,
        }
    }

    fn params(&self) -> PlantParams {
        let mut p = self.cfg.plant;
        if let (Some(f), GridPhase::Fault) = (self.fault, self.phase()) {
            p.xg = f.xg_fault;
            p.vg = f.vg_fault;
        }
        p
    }

    fn ctrl(&self, command: OuterCommand) -> ControllerOutputs {
        ControllerOutputs {
            command,
            refs: self.cfg.references,
            gains: self.cfg.conventional,
        }
    }

    fn pi_reference(&self) -> DqVector {
        current_reference(&self.state, &self.ctrl(OuterCommand::Pi))
    }

    /// Integrates over one sample; returns the divergence time if the detector trips.
    fn advance(&mut self, command: OuterCommand) -> std::result::Result<(), f64> {
        let params = self.params();
        let ctrl = self.ctrl(command);
        let dt = self.cfg.dt;
        let t0 = self.t();
        for j in 0..self.cfg.substeps() {
            self.state = rk4_step(&self.state, &ctrl, &params, dt);
            if self.state.is_diverged() {
                return Err(t0 + (j + 1) as f64 * dt);
            }
        }
        self.k += 1;
        Ok(())
    }
}

/// Product of a nominal identification experiment.
#[derive(Debug, Clone)]
pub struct Identification {
    pub config: IspcConfig,
    pub log: IoLog,
    pub predictor: Predictor,
    pub gains: ControllerGains,
    /// Equilibrium the identification started from.
    pub equilibrium: PlantState,
    pub u_op: DqVector,
    pub timing: RunTiming,
}

impl Identification {
    pub fn rank(&self) -> &RankReport {
        &self.predictor.rank
    }

    pub fn artifact(&self) -> IspcArtifact {
        let y = measure_outputs(&self.equilibrium);
        IspcArtifact::new(
            &self.config,
            &self.predictor,
            &self.gains,
            vec![self.u_op.d, self.u_op.q],
            vec![y.vdc2, y.vpll],
        )
    }
}

fn fit(log: &IoLog, cfg: &IspcConfig, timing: &mut RunTiming) -> Result<(Predictor, ControllerGains)> {
    let started = Instant::now();
    let hankel = build_hankel(log, cfg)?;
    let predictor = estimate_predictor_with(&hankel, cfg.pinv_rtol)?;
    timing.predictor_s = Some(started.elapsed().as_secs_f64());
    let started = Instant::now();
    let gains = compute_gains(&predictor, cfg)?;
    timing.gains_s = Some(started.elapsed().as_secs_f64());
    Ok((predictor, gains))
}

/// Nominal equilibrium for the configured plant and export level.
pub fn equilibrium(cfg: &ScenarioConfig) -> Result<PlantState> {
    init_steady_state(&cfg.plant, &cfg.references, &cfg.conventional, cfg.plant.pwind, cfg.dt)
}

/// Records CC-plus-excitation data under nominal conditions and fits the predictor.
pub fn identify_nominal(cfg: &ScenarioConfig) -> Result<Identification> {
    identify_nominal_from(cfg, equilibrium(cfg)?)
}

pub fn identify_nominal_from(cfg: &ScenarioConfig, start: PlantState) -> Result<Identification> {
    let icfg = cfg.ispc.clone();
    let samples = icfg.required_samples();
    let mut sim = Simulator::new(cfg, None, start);
    let mut exciter = Exciter::new(cfg.rng_seed, cfg.excitation_amplitude);
    let mut log = IoLog::with_capacity(2, 2, samples);
    let u_op = sim.pi_reference();
    let mut timing = RunTiming::default();
    let started = Instant::now();
    for _ in 0..samples {
        let y = measure_outputs(&sim.state);
        let u = exciter.excite(sim.pi_reference());
        log.push(&[u.d, u.q], &[y.vdc2, y.vpll]);
        sim.advance(OuterCommand::Hold {
            i_ref: u,
            integrate_outer: true,
        })
        .map_err(|t| Error::Diverged { t })?;
    }
    timing.identification_s = Some(started.elapsed().as_secs_f64());
    let (predictor, gains) = fit(&log, &icfg, &mut timing)?;
    Ok(Identification {
        config: icfg,
        log,
        predictor,
        gains,
        equilibrium: start,
        u_op,
        timing,
    })
}

/// Controller gains and operating point handed to a regular-iSPC run.
#[derive(Debug, Clone)]
pub struct PretrainedController {
    pub gains: ControllerGains,
    pub u_op: DqVector,
}

impl From<&Identification> for PretrainedController {
    fn from(id: &Identification) -> Self {
        Self {
            gains: id.gains.clone(),
            u_op: id.u_op,
        }
    }
}

impl PretrainedController {
    pub fn from_artifact(a: &IspcArtifact) -> Result<Self> {
        if a.u_op.len() != 2 {
            return Err(Error::InvalidInput("artifact operating point must have two inputs".into()));
        }
        Ok(Self {
            gains: a.gains()?,
            u_op: DqVector::new(a.u_op[0], a.u_op[1]),
        })
    }
}

/// Raw result of a simulation, before metrics.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub trace: Trace,
    pub timing: RunTiming,
    /// FT-iSPC takeover time, when reached.
    pub activation_time: Option<f64>,
    /// Rank diagnostics of the fault-time identification.
    pub ft_rank: Option<RankReport>,
    /// First iSPC input after takeover and the last input before it.
    pub handover: Option<(DqVector, DqVector)>,
}

enum Stage {
    Cc,
    Identifying,
    Ispc,
}

/// Runs the scenario. Regular iSPC needs `pretrained` gains; when `None` a
/// nominal identification is performed first.
pub fn simulate(cfg: &ScenarioConfig, pretrained: Option<&PretrainedController>) -> Result<SimulationRun> {
    cfg.validate()?;
    let start = equilibrium(cfg)?;
    let owned;
    let pretrained = match (cfg.controller_mode, pretrained) {
        (ControllerMode::RegularIspc, None) => {
            owned = PretrainedController::from(&identify_nominal_from(cfg, start)?);
            Some(&owned)
        }
        (_, p) => p,
    };
    simulate_from(cfg, start, pretrained)
}

fn simulate_from(cfg: &ScenarioConfig, start: PlantState, pretrained: Option<&PretrainedController>) -> Result<SimulationRun> {
    let ts = cfg.ts();
    let n = cfg.sample_index(cfg.t_end);
    let r_y = [cfg.references.vdc2_ref, cfg.references.vpcc_ref];
    let mut sim = Simulator::new(cfg, Some(cfg.fault), start);
    let mut trace = Trace::new(ts);
    trace.rows.reserve(n);
    let mut timing = RunTiming::default();
    let mut clock = StepClock::default();
    let mut activation_time = None;
    let mut ft_rank = None;
    let mut handover = None;

    let icfg = cfg.ispc.clone();
    let (mut runtime, mut gains, mut stage) = match cfg.controller_mode {
        ControllerMode::RegularIspc => {
            let pre = pretrained.ok_or_else(|| Error::InvalidInput("regular iSPC needs identified gains".into()))?;
            if pre.gains.t_ini != icfg.t_ini || pre.gains.horizon != icfg.horizon {
                return Err(Error::InvalidInput("identified gains do not match the configured horizons".into()));
            }
            let y = measure_outputs(&start);
            let rt = IspcRuntime::at_rest(2, icfg.t_ini, &[pre.u_op.d, pre.u_op.q], &[y.vdc2, y.vpll]);
            (rt, Some(pre.gains.clone()), Stage::Ispc)
        }
        _ => (IspcRuntime::new(2, 2, icfg.t_ini), None, Stage::Cc),
    };

    let id_start_k = cfg.sample_index(cfg.identification_start());
    let ft_cfg = cfg.ft_ispc_config();
    let mut exciter = Exciter::new(cfg.rng_seed, cfg.excitation_amplitude);
    let mut log = IoLog::with_capacity(2, 2, cfg.ft_samples);
    let mut identify_clock = None;

    let started = Instant::now();
    while sim.k < n {
        if cfg.controller_mode == ControllerMode::FtIspc {
            if matches!(stage, Stage::Cc) && sim.k == id_start_k {
                stage = Stage::Identifying;
                identify_clock = Some(Instant::now());
            } else if matches!(stage, Stage::Identifying) && log.len() == cfg.ft_samples {
                timing.identification_s = identify_clock.map(|c| c.elapsed().as_secs_f64());
                let (pred, g) = fit(&log, &ft_cfg, &mut timing)?;
                ft_rank = Some(pred.rank.clone());
                gains = Some(g);
                stage = Stage::Ispc;
                activation_time = Some(sim.t());
            }
        }

        let y = measure_outputs(&sim.state);
        runtime.observe_output(&[y.vdc2, y.vpll]);
        let (u, command, tag) = match stage {
            Stage::Cc => {
                let u = sim.pi_reference();
                runtime.record_input(&[u.d, u.q]);
                (u, OuterCommand::Pi, ControllerTag::Cc)
            }
            Stage::Identifying => {
                let u = exciter.excite(sim.pi_reference());
                log.push(&[u.d, u.q], &[y.vdc2, y.vpll]);
                runtime.record_input(&[u.d, u.q]);
                (
                    u,
                    OuterCommand::Hold {
                        i_ref: u,
                        integrate_outer: true,
                    },
                    ControllerTag::Identifying,
                )
            }
            Stage::Ispc => {
                let g = gains.as_ref().expect("iSPC stage has gains");
                let before = runtime.u_prev().map(|p| DqVector::new(p[0], p[1]));
                let t0 = Instant::now();
                let u = runtime.control_step(g, &r_y)?;
                clock.record(t0.elapsed().as_secs_f64());
                let u = DqVector::new(u[0], u[1]);
                if handover.is_none() && cfg.controller_mode == ControllerMode::FtIspc {
                    handover = before.map(|b| (b, u));
                }
                (
                    u,
                    OuterCommand::Hold {
                        i_ref: u,
                        integrate_outer: false,
                    },
                    ControllerTag::Ispc,
                )
            }
        };
        trace.rows.push(TraceRow {
            t: sim.t(),
            y,
            u,
            controller: tag,
            phase: sim.phase(),
        });
        if let Err(t) = sim.advance(command) {
            trace.diverged = Some(t);
            break;
        }
    }
    timing.simulation_s = started.elapsed().as_secs_f64();
    clock.fill(&mut timing);
    Ok(SimulationRun {
        trace,
        timing,
        activation_time,
        ft_rank,
        handover,
    })
}

/// A value per output channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerChannel<T> {
    pub vdc2: T,
    pub vpll: T,
}

impl<T: Copy> PerChannel<T> {
    pub fn from_fn(mut f: impl FnMut(Channel) -> T) -> Self {
        Self {
            vdc2: f(Channel::Vdc2),
            vpll: f(Channel::Vpll),
        }
    }

    pub fn get(&self, c: Channel) -> T {
        match c {
            Channel::Vdc2 => self.vdc2,
            Channel::Vpll => self.vpll,
        }
    }
}

/// Settling time (`None` = not settled) and RMSE over one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub window: Window,
    pub settling: PerChannel<Option<f64>>,
    pub rmse: PerChannel<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub settling_during: PerChannel<Option<f64>>,
    pub settling_after: PerChannel<Option<f64>>,
    pub rmse_during: PerChannel<Option<f64>>,
    pub rmse_after: PerChannel<Option<f64>>,
    pub stable: bool,
    /// Oscillation amplitude over the last second of the fault.
    pub osc_amplitude: PerChannel<Option<f64>>,
    /// CC oscillation amplitude that defines the tube.
    pub reference_amplitude: PerChannel<Option<f64>>,
    pub tube_radius: PerChannel<f64>,
    /// The fixed fallback tube replaced the CC-derived one.
    pub tube_fallback: bool,
    pub diverged_at: Option<f64>,
    pub activation_time: Option<f64>,
    /// FT-iSPC during-fault metrics anchored at activation instead of fault onset.
    pub during_from_activation: Option<WindowMetrics>,
}

/// Oscillation amplitude of a CC run over the sustained part of the fault
/// (fault onset + 1 s to clearance); `None` when the run diverged.
pub fn cc_reference_amplitude(trace: &Trace, fault: &FaultEvent) -> Option<PerChannel<f64>> {
    if trace.diverged.is_some() {
        return None;
    }
    let w = Window::new((fault.t_start + 1.0).min(fault.t_clear), fault.t_clear);
    let a = PerChannel::from_fn(|c| oscillation_amplitude(trace, c, w).ok());
    match (a.vdc2, a.vpll) {
        (Some(d), Some(v)) if d > 0.0 && v > 0.0 => Some(PerChannel { vdc2: d, vpll: v }),
        _ => None,
    }
}

fn window_metrics(trace: &Trace, refs: [f64; 2], tube: PerChannel<f64>, window: Window) -> WindowMetrics {
    let refs = PerChannel {
        vdc2: refs[0],
        vpll: refs[1],
    };
    WindowMetrics {
        window,
        settling: PerChannel::from_fn(|c| {
            if trace.diverged.is_some() {
                None
            } else {
                settling_time(trace, c, refs.get(c), tube.get(c), window)
            }
        }),
        rmse: PerChannel::from_fn(|c| rmse(trace, c, refs.get(c), window).ok()),
    }
}

/// Table-style metrics of `run`, with the tube derived from `cc_amplitude`.
pub fn compute_metrics(cfg: &ScenarioConfig, run: &SimulationRun, cc_amplitude: Option<PerChannel<f64>>) -> Metrics {
    let trace = &run.trace;
    let f = &cfg.fault;
    let refs = [cfg.references.vdc2_ref, cfg.references.vpcc_ref];
    let (tube, tube_fallback) = match cc_amplitude {
        Some(a) => (
            PerChannel {
                vdc2: TUBE_FRACTION * a.vdc2,
                vpll: TUBE_FRACTION * a.vpll,
            },
            false,
        ),
        None => (
            PerChannel {
                vdc2: FALLBACK_TUBE,
                vpll: FALLBACK_TUBE,
            },
            true,
        ),
    };
    let during = Window::new(f.t_start, f.t_clear);
    let after = Window::new(f.t_clear, cfg.t_end);
    let settle_during = window_metrics(trace, refs, tube, during);
    let settle_after = window_metrics(trace, refs, tube, after);
    let rmse_during = window_metrics(trace, refs, tube, Window::new(f.t_start, f.t_start + cfg.rmse_window));
    let rmse_after = window_metrics(trace, refs, tube, Window::new(f.t_clear, f.t_clear + cfg.rmse_window));
    let last_second = Window::new(f.t_clear - 1.0, f.t_clear);
    Metrics {
        settling_during: settle_during.settling,
        settling_after: settle_after.settling,
        rmse_during: rmse_during.rmse,
        rmse_after: rmse_after.rmse,
        stable: classify_stability(trace, f, refs),
        osc_amplitude: PerChannel::from_fn(|c| oscillation_amplitude(trace, c, last_second).ok()),
        reference_amplitude: PerChannel::from_fn(|c| cc_amplitude.map(|a| a.get(c))),
        tube_radius: tube,
        tube_fallback,
        diverged_at: trace.diverged,
        activation_time: run.activation_time,
        during_from_activation: run
            .activation_time
            .map(|t| window_metrics(trace, refs, tube, Window::new(t, f.t_clear))),
    }
}

/// Trace, metrics and timing of one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub run: SimulationRun,
    pub metrics: Metrics,
    /// CC companion used for the tube, when the scenario itself is not CC.
    pub companion: Option<SimulationRun>,
}

/// Runs the scenario and evaluates its metrics. iSPC modes also run the CC
/// companion scenario whose oscillation amplitude defines the settling tube.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    run_scenario_with(cfg, None)
}

pub fn run_scenario_with(cfg: &ScenarioConfig, pretrained: Option<&PretrainedController>) -> Result<ScenarioOutcome> {
    let run = simulate(cfg, pretrained)?;
    let companion = match cfg.controller_mode {
        ControllerMode::Cc => None,
        _ => Some(simulate(
            &ScenarioConfig {
                controller_mode: ControllerMode::Cc,
                ..cfg.clone()
            },
            None,
        )?),
    };
    let cc_trace = companion.as_ref().map_or(&run.trace, |c| &c.trace);
    let amplitude = cc_reference_amplitude(cc_trace, &cfg.fault);
    let metrics = compute_metrics(cfg, &run, amplitude);
    Ok(ScenarioOutcome {
        run,
        metrics,
        companion,
    })
}
