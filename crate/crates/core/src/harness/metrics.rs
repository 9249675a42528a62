//! Trace metrics: oscillation amplitude, tube settling time, RMSE and the
//! sustained-oscillation stability classification.

use serde::{Deserialize, Serialize};

use super::trace::{Channel, Trace};
use crate::error::{Error, Result};
use crate::plant::FaultEvent;

/// Half-open time window `[start, end)`, s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub const fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        // sample instants are k * ts; the slack keeps exact boundaries stable under rounding
        let eps = 1e-9;
        t >= self.start - eps && t < self.end - eps
    }
}

/// Fallback tube radius when no finite reference amplitude exists.
pub const FALLBACK_TUBE: f64 = 0.01;
/// Tube radius as a fraction of the reference oscillation amplitude.
pub const TUBE_FRACTION: f64 = 0.02;
/// Amplitude ratio (last vs second fault second) below which an oscillation counts as decaying.
pub const DECAY_RATIO: f64 = 0.5;
/// Oscillation amplitudes below this are treated as settled regardless of the ratio.
pub const AMPLITUDE_FLOOR: f64 = 1e-4;
/// A settling instant must leave at least this much of the window inside the tube.
pub const SETTLE_MIN_HOLD: f64 = 0.1;

fn window_values(trace: &Trace, channel: Channel, window: Window) -> Vec<(f64, f64)> {
    trace
        .rows
        .iter()
        .filter(|r| window.contains(r.t))
        .map(|r| (r.t, channel.value(&r.y)))
        .collect()
}

/// Half the peak-to-peak excursion of `channel` over `window`.
pub fn oscillation_amplitude(trace: &Trace, channel: Channel, window: Window) -> Result<f64> {
    let vals = window_values(trace, channel, window);
    if vals.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty window [{}, {}) for {}",
            window.start,
            window.end,
            channel.name()
        )));
    }
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    Ok(0.5 * (hi - lo))
}

/// Time from `window.start` until `channel` enters and stays within
/// `steady_value +- tube_radius` up to the end of the window (or of the trace).
///
/// Returns `None` when the channel never settles, or settles with less than
/// [`SETTLE_MIN_HOLD`] of the window left.
pub fn settling_time(trace: &Trace, channel: Channel, steady_value: f64, tube_radius: f64, window: Window) -> Option<f64> {
    assert!(tube_radius > 0.0, "tube radius must be positive");
    let vals = window_values(trace, channel, window);
    let last_t = vals.last()?.0;
    let mut settle_at = None;
    for &(t, v) in vals.iter().rev() {
        if (v - steady_value).abs() <= tube_radius {
            settle_at = Some(t);
        } else {
            break;
        }
    }
    let t = settle_at?;
    let end = window.end.min(last_t + trace.ts);
    if t > window.start + 1e-9 && end - t < SETTLE_MIN_HOLD {
        return None;
    }
    Some((t - window.start).max(0.0))
}

/// Root-mean-square deviation from `reference` over `window`.
pub fn rmse(trace: &Trace, channel: Channel, reference: f64, window: Window) -> Result<f64> {
    let vals = window_values(trace, channel, window);
    if vals.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty window [{}, {}) for {}",
            window.start,
            window.end,
            channel.name()
        )));
    }
    let ss: f64 = vals.iter().map(|&(_, v)| (v - reference).powi(2)).sum();
    Ok((ss / vals.len() as f64).sqrt())
}

/// Stable when the run did not diverge, the oscillation envelope decays over the
/// fault (last second vs second second) on both channels, and both channels
/// settle within [`FALLBACK_TUBE`] of their reference after clearance.
pub fn classify_stability(trace: &Trace, fault: &FaultEvent, references: [f64; 2]) -> bool {
    if trace.diverged.is_some() {
        return false;
    }
    let early = Window::new(fault.t_start + 1.0, fault.t_start + 2.0);
    let late = Window::new(fault.t_clear - 1.0, fault.t_clear);
    let after = Window::new(fault.t_clear, f64::INFINITY);
    for (channel, reference) in Channel::ALL.into_iter().zip(references) {
        let (Ok(a_early), Ok(a_late)) = (
            oscillation_amplitude(trace, channel, early),
            oscillation_amplitude(trace, channel, late),
        ) else {
            return false;
        };
        if a_late > AMPLITUDE_FLOOR && a_late > DECAY_RATIO * a_early {
            return false;
        }
        if settling_time(trace, channel, reference, FALLBACK_TUBE, after).is_none() {
            return false;
        }
    }
    true
}
