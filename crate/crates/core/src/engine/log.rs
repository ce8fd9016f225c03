//! Append-only event log with a running SHA-256 digest.
//!
//! Each record is rendered to one canonical text line and hashed. Records
//! carry only per-UE and per-cell identifiers, never global counters, so a
//! subset of the log (for example one slice) can be compared across runs
//! that differ elsewhere.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use sha2::{Digest, Sha256};

use crate::admission::RejectReason;
use crate::model::{CellId, EstablishmentCause, FlowId, Snssai, UeId};
use crate::time::{SimDuration, SimTime};

use super::metrics::Metric;

#[derive(Debug, Clone, PartialEq)]
pub enum RecordKind {
    AttemptStart { cause: EstablishmentCause, ai: u8 },
    CellNotSelectable,
    UacAllowed,
    UacBarred { until: SimTime, wait_time: bool },
    Preamble { preamble: u16, attempt_no: u32, power_dbm: f64 },
    RaCollision { preamble: u16, contenders: u32 },
    RaRetry { backoff: SimDuration },
    Admission { decision: AdmissionLabel, victims: u32 },
    Connected,
    Outcome { outcome: Metric },
    WaitTimeApplied { until: SimTime },
    Preempted { flow: FlowId },
    Released { flows: u32 },
    FlowReleased { flow: FlowId },
    QueueExit { waited: SimDuration },
    Paged { priority: u8 },
    PagingCycle(PagingCycleSummary),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmissionLabel {
    Admit,
    Queue { position: u32 },
    Reject { reason: RejectReason, wait_time: Option<SimDuration> },
    Preempt,
}

impl fmt::Display for AdmissionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissionLabel::Admit => f.write_str("admit"),
            AdmissionLabel::Queue { position } => write!(f, "queue@{position}"),
            AdmissionLabel::Reject { reason, wait_time: Some(w) } => write!(f, "reject:{}:wait={w}", reason.as_str()),
            AdmissionLabel::Reject { reason, wait_time: None } => write!(f, "reject:{}", reason.as_str()),
            AdmissionLabel::Preempt => f.write_str("preempt"),
        }
    }
}

/// What one paging cycle did in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PagingCycleSummary {
    pub paged: u32,
    /// Numerically largest (least urgent) priority that was paged.
    pub max_paged_priority: Option<u8>,
    pub deferred: u32,
    /// Numerically smallest (most urgent) priority that was deferred.
    pub min_deferred_priority: Option<u8>,
    pub dropped: u32,
    /// Youngest age among dropped requests.
    pub min_drop_age: Option<SimDuration>,
    pub discard_timeout: SimDuration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: SimTime,
    pub cell: Option<CellId>,
    pub ue: Option<UeId>,
    pub slice: Option<Snssai>,
    pub ac: Option<u8>,
    pub kind: RecordKind,
}

struct Opt<T>(Option<T>);

impl<T: fmt::Display> fmt::Display for Opt<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(v) => v.fmt(f),
            None => f.write_str("-"),
        }
    }
}

impl fmt::Display for EventRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} cell={} ue={} slice={} ac={} ",
            self.time.as_micros(),
            Opt(self.cell),
            Opt(self.ue),
            Opt(self.slice),
            Opt(self.ac)
        )?;
        match &self.kind {
            RecordKind::AttemptStart { cause, ai } => write!(f, "attempt cause={cause} ai={ai}"),
            RecordKind::CellNotSelectable => f.write_str("cell_not_selectable"),
            RecordKind::UacAllowed => f.write_str("uac_allowed"),
            RecordKind::UacBarred { until, wait_time } => {
                write!(f, "uac_barred until={} wait_time={wait_time}", until.as_micros())
            }
            RecordKind::Preamble { preamble, attempt_no, power_dbm } => {
                write!(f, "preamble idx={preamble} try={attempt_no} rx={power_dbm:.2}")
            }
            RecordKind::RaCollision { preamble, contenders } => {
                write!(f, "ra_collision idx={preamble} n={contenders}")
            }
            RecordKind::RaRetry { backoff } => write!(f, "ra_retry backoff={backoff}"),
            RecordKind::Admission { decision, victims } => write!(f, "admission {decision} victims={victims}"),
            RecordKind::Connected => f.write_str("connected"),
            RecordKind::Outcome { outcome } => write!(f, "outcome {}", outcome.as_str()),
            RecordKind::WaitTimeApplied { until } => write!(f, "wait_time until={}", until.as_micros()),
            RecordKind::Preempted { flow } => write!(f, "preempted flow={}", flow.0),
            RecordKind::Released { flows } => write!(f, "released flows={flows}"),
            RecordKind::FlowReleased { flow } => write!(f, "flow_released flow={}", flow.0),
            RecordKind::QueueExit { waited } => write!(f, "queue_exit waited={waited}"),
            RecordKind::Paged { priority } => write!(f, "paged prio={priority}"),
            RecordKind::PagingCycle(s) => write!(
                f,
                "paging_cycle paged={} max_paged={} deferred={} min_deferred={} dropped={} min_drop_age={} timeout={}",
                s.paged,
                Opt(s.max_paged_priority),
                s.deferred,
                Opt(s.min_deferred_priority),
                s.dropped,
                Opt(s.min_drop_age),
                s.discard_timeout
            ),
        }
    }
}

/// Running digest over all records, optionally keeping the records.
#[derive(Clone)]
pub struct EventLog {
    hasher: Sha256,
    len: u64,
    retain: bool,
    records: Vec<EventRecord>,
    line: String,
}

impl fmt::Debug for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventLog").field("len", &self.len).field("retained", &self.records.len()).finish()
    }
}

impl EventLog {
    pub fn new(retain: bool) -> Self {
        EventLog { hasher: Sha256::new(), len: 0, retain, records: Vec::new(), line: String::new() }
    }

    pub fn push(&mut self, record: EventRecord) {
        self.line.clear();
        let _ = writeln!(self.line, "{record}");
        self.hasher.update(self.line.as_bytes());
        self.len += 1;
        if self.retain {
            self.records.push(record);
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Records kept when the log was created with `retain`.
    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn digest(&self) -> [u8; 32] {
        self.hasher.clone().finalize().into()
    }

    /// Digest over the retained records matching `pred`.
    pub fn digest_where(&self, pred: impl Fn(&EventRecord) -> bool) -> [u8; 32] {
        let mut h = Sha256::new();
        let mut line = String::new();
        for r in self.records.iter().filter(|r| pred(r)) {
            line.clear();
            let _ = writeln!(line, "{r}");
            h.update(line.as_bytes());
        }
        h.finalize().into()
    }
}

pub fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}
