//! Fault experiments: steady-state initialization, controller lifecycle,
//! metrics and critical-reactance searches.

pub mod metrics;
pub mod scenario;
pub mod steady_state;
pub mod sweep;
pub mod trace;

pub use metrics::{classify_stability, oscillation_amplitude, rmse, settling_time, Window};
pub use scenario::{
    cc_reference_amplitude, compute_metrics, equilibrium, identify_nominal, identify_nominal_from, run_scenario,
    run_scenario_with, simulate, ControllerMode, Identification, Metrics, PerChannel, PretrainedController,
    RunTiming, ScenarioConfig, ScenarioOutcome, SimulationRun, WindowMetrics,
};
pub use steady_state::init_steady_state;
pub use sweep::{classify_at, critical_reactance, sweep, CriticalSearch, SweepPoint, DEFAULT_TOL};
pub use trace::{Channel, ControllerTag, GridPhase, Trace, TraceRow, TRACE_HEADER};
