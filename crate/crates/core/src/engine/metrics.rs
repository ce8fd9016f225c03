//! Counters and histograms keyed by (metric, AI, AC, slice, cause).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{EstablishmentCause, Snssai};
use crate::time::SimDuration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    AttemptsGenerated,
    AccessSuccess,
    BarredCell,
    BarredUac,
    RaFailure,
    Rejected,
    Unresolved,
    ArrivalsSuppressed,
    RaPreambles,
    RaCollisions,
    RaBackoff,
    RaMessages,
    AccessLatency,
    Preemptions,
    Queued,
    QueueWait,
    PagingRequests,
    PagingDelivered,
    PagingDropped,
    PagingConnected,
    AdmissionConfigErrors,
    ReleaseWarnings,
}

impl Metric {
    /// Terminal attempt outcomes; each attempt ends in exactly one.
    pub const OUTCOMES: [Metric; 6] = [
        Metric::AccessSuccess,
        Metric::BarredCell,
        Metric::BarredUac,
        Metric::RaFailure,
        Metric::Rejected,
        Metric::Unresolved,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Metric::AttemptsGenerated => "attempts_generated",
            Metric::AccessSuccess => "access_success",
            Metric::BarredCell => "barred_cell",
            Metric::BarredUac => "barred_uac",
            Metric::RaFailure => "ra_failures",
            Metric::Rejected => "rejects",
            Metric::Unresolved => "unresolved",
            Metric::ArrivalsSuppressed => "arrivals_suppressed",
            Metric::RaPreambles => "ra_preambles",
            Metric::RaCollisions => "ra_collisions",
            Metric::RaBackoff => "ra_backoff_us",
            Metric::RaMessages => "ra_messages",
            Metric::AccessLatency => "access_latency_us",
            Metric::Preemptions => "preemptions",
            Metric::Queued => "queued",
            Metric::QueueWait => "queue_wait_us",
            Metric::PagingRequests => "paging_requests",
            Metric::PagingDelivered => "paging_delivered",
            Metric::PagingDropped => "paging_dropped",
            Metric::PagingConnected => "paging_connected",
            Metric::AdmissionConfigErrors => "admission_config_errors",
            Metric::ReleaseWarnings => "release_warnings",
        }
    }

    pub fn is_outcome(self) -> bool {
        Metric::OUTCOMES.contains(&self)
    }
}

/// Dimensions shared by all series. `None` means "not applicable".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Dims {
    pub ai: Option<u8>,
    pub ac: Option<u8>,
    pub slice: Option<Snssai>,
    pub cause: Option<EstablishmentCause>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Series {
    count: u64,
    sum: u64,
    samples: Vec<u64>,
}

#[derive(Debug, Clone, Default)]
pub struct MetricsSink {
    series: BTreeMap<(Metric, Dims), Series>,
}

impl MetricsSink {
    pub fn incr(&mut self, metric: Metric, dims: Dims) {
        self.add(metric, dims, 1);
    }

    pub fn add(&mut self, metric: Metric, dims: Dims, n: u64) {
        let s = self.series.entry((metric, dims)).or_default();
        s.count += n;
        s.sum += n;
    }

    /// Records one histogram sample.
    pub fn observe(&mut self, metric: Metric, dims: Dims, value: u64) {
        let s = self.series.entry((metric, dims)).or_default();
        s.count += 1;
        s.sum += value;
        s.samples.push(value);
    }

    pub fn observe_duration(&mut self, metric: Metric, dims: Dims, d: SimDuration) {
        self.observe(metric, dims, d.as_micros());
    }

    pub fn rows(&self) -> Vec<MetricRow> {
        self.series
            .iter()
            .map(|((metric, dims), s)| {
                let (p50, p95) = if s.samples.is_empty() {
                    (None, None)
                } else {
                    let mut sorted = s.samples.clone();
                    sorted.sort_unstable();
                    (Some(nearest_rank(&sorted, 50)), Some(nearest_rank(&sorted, 95)))
                };
                MetricRow { metric: *metric, dims: *dims, count: s.count, sum: s.sum, p50, p95 }
            })
            .collect()
    }
}

/// Nearest-rank percentile of sorted, non-empty data.
pub fn nearest_rank(sorted: &[u64], pct: u32) -> u64 {
    let n = sorted.len() as u64;
    let rank = (pct as u64 * n).div_ceil(100).max(1);
    sorted[(rank - 1) as usize]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: Metric,
    pub dims: Dims,
    pub count: u64,
    pub sum: u64,
    pub p50: Option<u64>,
    pub p95: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub duration: SimDuration,
    pub events_processed: u64,
    pub rows: Vec<MetricRow>,
    pub log_digest: [u8; 32],
    /// Descriptions of audit violations; empty when auditing found nothing
    /// or was not requested.
    pub audit_violations: Vec<String>,
}

impl MetricsReport {
    pub fn total(&self, metric: Metric) -> u64 {
        self.total_where(metric, |_| true)
    }

    pub fn total_where(&self, metric: Metric, pred: impl Fn(&Dims) -> bool) -> u64 {
        self.rows.iter().filter(|r| r.metric == metric && pred(&r.dims)).map(|r| r.count).sum()
    }

    pub fn digest_hex(&self) -> String {
        super::log::hex(&self.log_digest)
    }
}
