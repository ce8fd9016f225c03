//! Contention-based random access: preamble contention and detection,
//! 4-step and 2-step message accounting, back-off and power ramping, and
//! prioritized random access.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::model::UeId;
use crate::time::SimDuration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum RaMode {
    FourStep,
    TwoStep,
}

/// One-way delays of the RA handshake messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct MsgLatencies {
    pub msg1: SimDuration,
    pub msg2: SimDuration,
    pub msg3: SimDuration,
    pub msg4: SimDuration,
    pub msga: SimDuration,
    pub msgb: SimDuration,
}

impl MsgLatencies {
    pub const fn uniform(d: SimDuration) -> Self {
        MsgLatencies { msg1: d, msg2: d, msg3: d, msg4: d, msga: d, msgb: d }
    }
}

impl Default for MsgLatencies {
    fn default() -> Self {
        MsgLatencies::uniform(SimDuration::from_millis(2))
    }
}

impl RaMode {
    /// Messages exchanged by an access that completes contention resolution.
    pub const fn messages(self) -> u32 {
        match self {
            RaMode::FourStep => 4,
            RaMode::TwoStep => 2,
        }
    }

    /// Preamble transmission until the gNB holds the connection request.
    pub fn request_latency(self, l: &MsgLatencies) -> SimDuration {
        match self {
            RaMode::FourStep => l.msg1 + l.msg2 + l.msg3,
            RaMode::TwoStep => l.msga,
        }
    }

    /// Delivery of the contention-resolution message after the request.
    pub fn response_latency(self, l: &MsgLatencies) -> SimDuration {
        match self {
            RaMode::FourStep => l.msg4,
            RaMode::TwoStep => l.msgb,
        }
    }

    pub fn handshake_latency(self, l: &MsgLatencies) -> SimDuration {
        self.request_latency(l) + self.response_latency(l)
    }

    /// Time until a UE whose preamble went undetected gives up on the
    /// response window.
    pub fn no_response_latency(self, l: &MsgLatencies) -> SimDuration {
        match self {
            RaMode::FourStep => l.msg1 + l.msg2,
            RaMode::TwoStep => l.msga + l.msgb,
        }
    }
}

/// Prioritized random access parameters for MPS/MCS UEs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PrioritizedRa {
    /// Multiplier on the back-off indicator, in (0, 1].
    pub backoff_scaling: f64,
    pub power_ramping_step_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct RachConfig {
    pub n_preambles: u16,
    pub occasion_period: SimDuration,
    pub backoff_indicator: SimDuration,
    /// dB
    pub power_ramping_step: f64,
    /// dBm
    pub initial_power: f64,
    /// dBm, compared against received preamble power.
    pub detection_threshold: f64,
    pub max_attempts: u32,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub prioritized: Option<PrioritizedRa>,
    pub mode: RaMode,
    /// 2-step access is only permitted in small cells.
    pub small_cell: bool,
    pub msg_latencies: MsgLatencies,
}

impl Default for RachConfig {
    fn default() -> Self {
        RachConfig {
            n_preambles: 64,
            occasion_period: SimDuration::from_millis(10),
            backoff_indicator: SimDuration::from_millis(20),
            power_ramping_step: 2.0,
            initial_power: -10.0,
            detection_threshold: -110.0,
            max_attempts: 10,
            prioritized: None,
            mode: RaMode::FourStep,
            small_cell: false,
            msg_latencies: MsgLatencies::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RachConfigError {
    #[error("n_preambles must be > 0")]
    NoPreambles,
    #[error("occasion_period must be > 0")]
    ZeroPeriod,
    #[error("power_ramping_step must be > 0 dB, got {0}")]
    RampingStep(f64),
    #[error("max_attempts must be > 0")]
    NoAttempts,
    #[error("backoff_scaling must be in (0, 1], got {0}")]
    BackoffScaling(f64),
    #[error("power_ramping_step_high ({high}) must be >= power_ramping_step ({normal})")]
    HighStep { high: f64, normal: f64 },
    #[error("2-step random access requires a small cell")]
    TwoStepLargeCell,
}

impl RachConfig {
    // Negated comparisons so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), RachConfigError> {
        if self.n_preambles == 0 {
            return Err(RachConfigError::NoPreambles);
        }
        if self.occasion_period.is_zero() {
            return Err(RachConfigError::ZeroPeriod);
        }
        if !(self.power_ramping_step > 0.0) {
            return Err(RachConfigError::RampingStep(self.power_ramping_step));
        }
        if self.max_attempts == 0 {
            return Err(RachConfigError::NoAttempts);
        }
        if let Some(p) = &self.prioritized {
            if !(p.backoff_scaling > 0.0 && p.backoff_scaling <= 1.0) {
                return Err(RachConfigError::BackoffScaling(p.backoff_scaling));
            }
            if !(p.power_ramping_step_high >= self.power_ramping_step) {
                return Err(RachConfigError::HighStep {
                    high: p.power_ramping_step_high,
                    normal: self.power_ramping_step,
                });
            }
        }
        if self.mode == RaMode::TwoStep && !self.small_cell {
            return Err(RachConfigError::TwoStepLargeCell);
        }
        Ok(())
    }

    fn scaling(&self, class: PriorityClass) -> f64 {
        match (class, &self.prioritized) {
            (PriorityClass::Prioritized, Some(p)) => p.backoff_scaling,
            _ => 1.0,
        }
    }

    /// Ramping step applied to retries of the given class.
    pub fn ramping_step(&self, class: PriorityClass) -> f64 {
        match (class, &self.prioritized) {
            (PriorityClass::Prioritized, Some(p)) => p.power_ramping_step_high,
            _ => self.power_ramping_step,
        }
    }

    /// Upper bound of the back-off draw for the given class.
    pub fn effective_backoff_indicator(&self, class: PriorityClass) -> SimDuration {
        self.backoff_indicator.mul_f64(self.scaling(class))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorityClass {
    Normal,
    Prioritized,
}

/// Per-UE state across RA attempts of one access.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaAttemptState {
    pub attempt_no: u32,
    /// dBm
    pub current_power: f64,
    pub chosen_preamble: u16,
    /// Whether the next retry reuses the previous beam.
    pub same_beam_as_previous: bool,
    pub priority_class: PriorityClass,
}

impl RaAttemptState {
    pub fn first(cfg: &RachConfig, preamble: u16, class: PriorityClass) -> Self {
        RaAttemptState {
            attempt_no: 1,
            current_power: cfg.initial_power,
            chosen_preamble: preamble,
            same_beam_as_previous: true,
            priority_class: class,
        }
    }

    /// Moves to the next attempt with the given retry parameters.
    pub fn advance(&mut self, params: RetryParams, preamble: u16) {
        self.attempt_no += 1;
        self.current_power = params.power;
        self.chosen_preamble = preamble;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryParams {
    pub backoff: SimDuration,
    /// dBm
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("random access failed after {attempts} attempts")]
pub struct RaFailure {
    pub attempts: u32,
}

/// Back-off and transmit power for the retry following a failed attempt.
///
/// The back-off is `draw x BI`, scaled for prioritized UEs. Power ramps by
/// the class step when the beam is reused and otherwise restarts from the
/// initial power.
pub fn next_attempt_params(state: &RaAttemptState, cfg: &RachConfig, uniform_draw: f64) -> Result<RetryParams, RaFailure> {
    if state.attempt_no >= cfg.max_attempts {
        return Err(RaFailure { attempts: state.attempt_no });
    }
    let backoff = cfg.backoff_indicator.mul_f64(uniform_draw * cfg.scaling(state.priority_class));
    let power = if state.same_beam_as_previous {
        state.current_power + cfg.ramping_step(state.priority_class)
    } else {
        cfg.initial_power
    };
    Ok(RetryParams { backoff, power })
}

/// A preamble heard at one RACH occasion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreambleTx {
    pub ue: UeId,
    pub preamble: u16,
    /// Power at the receiver, dBm.
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreambleResult {
    /// The UE proceeds to MSG2/MSGB. `contended` marks a shared index.
    Detected { contended: bool },
    NotDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RachOutcome {
    pub ue: UeId,
    pub preamble: u16,
    pub result: PreambleResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RachRoundError {
    #[error("preamble index {index} out of range for {n_preambles} preambles")]
    PreambleRange { index: u16, n_preambles: u16 },
    #[error("contention resolution needs at least one contender")]
    NoContenders,
}

/// Resolves one RACH occasion. Outcomes follow input order.
///
/// Transmissions below the detection threshold are not detected. Among the
/// detected ones, an index shared by two or more UEs is a collision: every
/// collider receives the response and is flagged contended.
pub fn rach_round(occasion: &[PreambleTx], cfg: &RachConfig) -> Result<Vec<RachOutcome>, RachRoundError> {
    let mut users = alloc::vec![0u32; cfg.n_preambles as usize];
    for tx in occasion {
        if tx.preamble >= cfg.n_preambles {
            return Err(RachRoundError::PreambleRange { index: tx.preamble, n_preambles: cfg.n_preambles });
        }
        if tx.power >= cfg.detection_threshold {
            users[tx.preamble as usize] += 1;
        }
    }
    Ok(occasion
        .iter()
        .map(|tx| RachOutcome {
            ue: tx.ue,
            preamble: tx.preamble,
            result: if tx.power >= cfg.detection_threshold {
                PreambleResult::Detected { contended: users[tx.preamble as usize] > 1 }
            } else {
                PreambleResult::NotDetected
            },
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentionResolution {
    pub winner: UeId,
    pub losers: Vec<UeId>,
    /// Messages exchanged by each contender in this handshake.
    pub messages: u32,
    /// Preamble-to-resolution latency.
    pub latency: SimDuration,
}

/// Picks one winner uniformly among UEs that shared a detected preamble.
pub fn contention_resolution(
    contenders: &[UeId],
    cfg: &RachConfig,
    uniform_draw: f64,
) -> Result<ContentionResolution, RachRoundError> {
    if contenders.is_empty() {
        return Err(RachRoundError::NoContenders);
    }
    let n = contenders.len();
    let idx = ((uniform_draw.clamp(0.0, 1.0) * n as f64) as usize).min(n - 1);
    let winner = contenders[idx];
    let losers = contenders.iter().copied().filter(|u| *u != winner).collect();
    Ok(ContentionResolution {
        winner,
        losers,
        messages: cfg.mode.messages(),
        latency: cfg.mode.handshake_latency(&cfg.msg_latencies),
    })
}
