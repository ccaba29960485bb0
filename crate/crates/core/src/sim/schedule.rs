//! Schedules: who steps next.
//!
//! Three modes: a scripted list of process ids, round-robin rotation, and a
//! seeded uniform-random choice among unfinished processes. The file format
//! is line-oriented — `# mode:` and `# seed:` headers, then one process id
//! per line (the step sequence for scripted mode; the participant rotation
//! for the generated modes).

use crate::ids::ProcessId;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    Scripted,
    RoundRobin,
    Random,
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScheduleMode::Scripted => "scripted",
            ScheduleMode::RoundRobin => "roundrobin",
            ScheduleMode::Random => "random",
        };
        f.write_str(s)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Schedule {
    /// Exactly these steps, in order.
    Scripted(Vec<ProcessId>),
    /// Cycle through the participants until everyone is done.
    RoundRobin { procs: Vec<ProcessId> },
    /// Seeded uniform choice among not-yet-finished participants.
    Random { procs: Vec<ProcessId>, seed: u64 },
}

impl Schedule {
    pub fn mode(&self) -> ScheduleMode {
        match self {
            Schedule::Scripted(_) => ScheduleMode::Scripted,
            Schedule::RoundRobin { .. } => ScheduleMode::RoundRobin,
            Schedule::Random { .. } => ScheduleMode::Random,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Schedule::Random { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

/// Iterator-like chooser the simulation pulls process ids from.
pub(crate) enum Chooser {
    Scripted {
        steps: Vec<ProcessId>,
        next: usize,
    },
    RoundRobin {
        procs: Vec<ProcessId>,
        next: usize,
    },
    Random {
        procs: Vec<ProcessId>,
        rng: ChaCha8Rng,
    },
}

// SmallRng is only used in tests and harness helpers; the simulation itself
// sticks to ChaCha for cross-version stability.
#[allow(dead_code)]
pub(crate) type HarnessRng = SmallRng;

impl Chooser {
    pub(crate) fn new(schedule: &Schedule) -> Chooser {
        match schedule {
            Schedule::Scripted(steps) => Chooser::Scripted {
                steps: steps.clone(),
                next: 0,
            },
            Schedule::RoundRobin { procs } => Chooser::RoundRobin {
                procs: procs.clone(),
                next: 0,
            },
            Schedule::Random { procs, seed } => Chooser::Random {
                procs: procs.clone(),
                rng: ChaCha8Rng::seed_from_u64(*seed),
            },
        }
    }

    /// Next process to schedule. `unfinished` filters the generated modes;
    /// scripted steps are returned verbatim (a finished process records a
    /// no-op). Returns `None` when the schedule is exhausted.
    pub(crate) fn next_process(
        &mut self,
        unfinished: &dyn Fn(ProcessId) -> bool,
    ) -> Option<ProcessId> {
        match self {
            Chooser::Scripted { steps, next } => {
                let p = steps.get(*next).copied();
                if p.is_some() {
                    *next += 1;
                }
                p
            }
            Chooser::RoundRobin { procs, next } => {
                if procs.iter().copied().any(|p| unfinished(p)) {
                    let p = procs[*next % procs.len()];
                    *next += 1;
                    Some(p)
                } else {
                    None
                }
            }
            Chooser::Random { procs, rng } => {
                let live: Vec<ProcessId> =
                    procs.iter().copied().filter(|p| unfinished(*p)).collect();
                if live.is_empty() {
                    None
                } else {
                    Some(live[rng.random_range(0..live.len())])
                }
            }
        }
    }

    pub(crate) fn is_scripted(&self) -> bool {
        matches!(self, Chooser::Scripted { .. })
    }

    /// Remaining scripted steps (0 for generated modes).
    pub(crate) fn scripted_remaining(&self) -> usize {
        match self {
            Chooser::Scripted { steps, next } => steps.len().saturating_sub(*next),
            _ => 0,
        }
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum ScheduleParseError {
    #[error("line {line}: expected a process id, got {token:?}")]
    BadToken { line: usize, token: String },
    #[error("line {line}: unknown header {header:?}")]
    BadHeader { line: usize, header: String },
    #[error("unknown mode {0:?}")]
    BadMode(String),
    #[error("scripted schedule has a seed header but seeds apply to random mode only")]
    SeedWithoutRandom,
    #[error("schedule lists no processes")]
    Empty,
}

/// Parse the line-oriented schedule format.
///
/// ```text
/// # mode: random
/// # seed: 7
/// 1
/// 2
/// 3
/// ```
pub fn parse_schedule(text: &str) -> Result<Schedule, ScheduleParseError> {
    let mut mode = ScheduleMode::Scripted;
    let mut seed: Option<u64> = None;
    let mut procs: Vec<ProcessId> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(m) = rest.strip_prefix("mode:") {
                mode = match m.trim() {
                    "scripted" => ScheduleMode::Scripted,
                    "roundrobin" | "round-robin" => ScheduleMode::RoundRobin,
                    "random" => ScheduleMode::Random,
                    other => return Err(ScheduleParseError::BadMode(other.to_string())),
                };
            } else if let Some(s) = rest.strip_prefix("seed:") {
                seed = Some(s.trim().parse().map_err(|_| ScheduleParseError::BadToken {
                    line: i + 1,
                    token: s.trim().to_string(),
                })?);
            } else {
                return Err(ScheduleParseError::BadHeader {
                    line: i + 1,
                    header: rest.to_string(),
                });
            }
            continue;
        }
        let token = line.trim_start_matches('p');
        let id: u32 = token.parse().map_err(|_| ScheduleParseError::BadToken {
            line: i + 1,
            token: line.to_string(),
        })?;
        procs.push(ProcessId(id));
    }
    if procs.is_empty() {
        return Err(ScheduleParseError::Empty);
    }
    match mode {
        ScheduleMode::Scripted => {
            if seed.is_some() {
                return Err(ScheduleParseError::SeedWithoutRandom);
            }
            Ok(Schedule::Scripted(procs))
        }
        ScheduleMode::RoundRobin => Ok(Schedule::RoundRobin { procs }),
        ScheduleMode::Random => Ok(Schedule::Random {
            procs,
            seed: seed.unwrap_or(0),
        }),
    }
}

pub fn format_schedule(schedule: &Schedule) -> String {
    let mut out = String::new();
    out.push_str(&format!("# mode: {}\n", schedule.mode()));
    if let Some(seed) = schedule.seed() {
        out.push_str(&format!("# seed: {seed}\n"));
    }
    let procs = match schedule {
        Schedule::Scripted(steps) => steps,
        Schedule::RoundRobin { procs } | Schedule::Random { procs, .. } => procs,
    };
    for p in procs {
        out.push_str(&format!("{}\n", p.0));
    }
    out
}
