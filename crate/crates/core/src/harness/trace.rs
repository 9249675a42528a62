//! Sampled simulation records and their CSV form.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conventional::OutputSample;
use crate::error::{Error, Result};
use crate::frames::DqVector;

pub const TRACE_HEADER: &str = "t,vdc2,vpll,iref_d,iref_q,controller,phase";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Vdc2,
    Vpll,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Vdc2, Channel::Vpll];

    pub fn value(self, y: &OutputSample) -> f64 {
        match self {
            Channel::Vdc2 => y.vdc2,
            Channel::Vpll => y.vpll,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Vdc2 => "vdc2",
            Channel::Vpll => "vpll",
        }
    }
}

/// Which outer layer produced the current reference at a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerTag {
    Cc,
    Identifying,
    Ispc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridPhase {
    Nominal,
    Fault,
    Cleared,
}

macro_rules! tag_strings {
    ($ty:ty { $($variant:ident => $s:literal),* $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$variant => $s),* }
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(Self::$variant),)*
                    other => Err(Error::InvalidInput(format!("unknown {} tag {other:?}", stringify!($ty)))),
                }
            }
        }
    };
}

tag_strings!(ControllerTag { Cc => "cc", Identifying => "identifying", Ispc => "ispc" });
tag_strings!(GridPhase { Nominal => "nominal", Fault => "fault", Cleared => "cleared" });

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub y: OutputSample,
    /// Current reference applied over `[t, t + ts)`.
    pub u: DqVector,
    pub controller: ControllerTag,
    pub phase: GridPhase,
}

/// Per-sample records at the controller sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub ts: f64,
    pub rows: Vec<TraceRow>,
    /// Time at which the divergence detector tripped, if it did.
    pub diverged: Option<f64>,
}

impl Trace {
    pub fn new(ts: f64) -> Self {
        Self {
            ts,
            rows: Vec::new(),
            diverged: None,
        }
    }

    pub fn end_time(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t + self.ts)
    }

    /// CSV with [`TRACE_HEADER`], numbers at 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{},{}",
                r.t,
                r.y.vdc2,
                r.y.vpll,
                r.u.d,
                r.u.q,
                r.controller.as_str(),
                r.phase.as_str()
            );
        }
        out
    }

    /// Parses CSV produced by [`to_csv`](Self::to_csv). The sample time is taken
    /// from the first two rows.
    pub fn from_csv(text: &str) -> Result<Trace> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::InvalidInput("empty trace file".into()))?;
        if header.trim() != TRACE_HEADER {
            let expected: Vec<&str> = TRACE_HEADER.split(',').collect();
            let got: Vec<&str> = header.trim().split(',').collect();
            let bad = expected
                .iter()
                .enumerate()
                .find(|(i, name)| got.get(*i) != Some(name))
                .map_or("<extra>", |(_, n)| n);
            return Err(Error::InvalidInput(format!("trace header mismatch at column {bad:?}")));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::InvalidInput(format!("line {}: expected 7 columns", lineno + 2)));
            }
            let num = |i: usize, name: &str| -> Result<f64> {
                f[i].trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("line {}: column {name:?} is not a number", lineno + 2)))
            };
            rows.push(TraceRow {
                t: num(0, "t")?,
                y: OutputSample {
                    vdc2: num(1, "vdc2")?,
                    vpll: num(2, "vpll")?,
                },
                u: DqVector::new(num(3, "iref_d")?, num(4, "iref_q")?),
                controller: f[5].trim().parse()?,
                phase: f[6].trim().parse()?,
            });
        }
        let ts = match rows.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => return Err(Error::InvalidInput("trace needs at least two rows".into())),
        };
        Ok(Trace { ts, rows, diverged: None })
    }
}
