//! Deterministic discrete-event engine.
//!
//! One run walks every UE access through cell selection, UAC, random access
//! and admission control, plus paging, holding and release. All randomness
//! comes from named substreams of the run seed, so a (scenario, seed) pair
//! always produces the same report and event-log digest.

pub mod log;
pub mod metrics;
pub mod queue;
pub mod rng;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::admission::{
    AdmissionDecision, AdmissionKind, AdmissionRequest, CellState, QueueOutcome, RejectReason, ReleaseReason,
    ReleaseTarget,
};
use crate::model::{
    derive_access_info, AccessIdentity, AccessIdentitySet, EstablishmentCause, FlowId, PlmnId, QosFlowRequest,
    RrcEvent, RrcState, Snssai, UeId, UeProfile,
};
use crate::preventive::{
    apply_wait_time, cell_selection_check, paging_control_filter, route_paging, uac_check, BarringCause, CellSite,
    PagingOrigin, PagingRequest, Topology, UacDecision, UacDraw,
};
use crate::random_access::{
    contention_resolution, next_attempt_params, rach_round, PreambleResult, PreambleTx, PriorityClass,
    RaAttemptState,
};
use crate::scenario::{InitialState, ReleaseTo, RequestKind, ScenarioConfig, TrafficModel, ValidationError};
use crate::time::{SimDuration, SimTime};

pub use self::log::{AdmissionLabel, EventLog, EventRecord, PagingCycleSummary, RecordKind};
pub use self::metrics::{Dims, Metric, MetricRow, MetricsReport};
use self::metrics::MetricsSink;
use self::queue::EventQueue;
use self::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep every log record in memory (needed for filtered digests).
    pub retain_log: bool,
    /// Run the admission audit every this many events, and at the end.
    pub audit_every: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("scenario has {} validation error(s)", .0.len())]
    Invalid(Vec<ValidationError>),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub log: EventLog,
}

pub fn run(scenario: &ScenarioConfig, seed: u64) -> Result<RunOutput, RunError> {
    run_with(scenario, seed, RunOptions::default())
}

pub fn run_with(scenario: &ScenarioConfig, seed: u64, opts: RunOptions) -> Result<RunOutput, RunError> {
    scenario.validate().map_err(RunError::Invalid)?;
    let mut sim = Sim::new(scenario, seed, opts);
    sim.schedule_initial();
    sim.run_loop();
    Ok(sim.into_output())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AccessResult {
    Connected,
    Rejected(Option<SimDuration>),
}

#[derive(Debug, Clone)]
enum Event {
    Arrival { ue: usize, cause: Option<EstablishmentCause>, renew: bool },
    PagingArrival { pop: usize },
    PagingEnqueue { cell: usize, req: PagingRequest },
    PagingCycle { cell: usize },
    RachOccasion { cell: usize },
    RaRetry { ue: usize, epoch: u64 },
    AdmissionEval { ue: usize, epoch: u64 },
    AccessResult { ue: usize, epoch: u64, result: AccessResult },
    Release { ue: usize, epoch: u64 },
    FlowRelease { ue: usize, flow: FlowId },
    QueueCheck { cell: usize, slice: Option<Snssai> },
}

struct Attempt {
    start: SimTime,
    cause: EstablishmentCause,
    dims: Dims,
    ra: Option<RaAttemptState>,
    messages: u32,
}

struct UeRt {
    profile: UeProfile,
    pop: usize,
    cell: usize,
    epoch: u64,
    attempt: Option<Attempt>,
    next_flow: u32,
}

struct CellRt {
    admission: CellState,
    paging_queue: Vec<PagingRequest>,
    ra_pending: BTreeMap<SimTime, Vec<(usize, u16, f64)>>,
    uac: Stream,
    backoff: Stream,
    preamble: Stream,
    contention: Stream,
    beam: Stream,
}

struct PopRt {
    traffic: Stream,
    paging: Stream,
    holding: Stream,
    first_ue: usize,
}

enum Pending {
    Connection { ue: usize, epoch: u64 },
    Flow { ue: usize, start: SimTime, dims: Dims },
}

type PendingKey = (usize, UeId, Option<FlowId>);

struct Sim<'a> {
    sc: &'a ScenarioConfig,
    seed: u64,
    opts: RunOptions,
    horizon: SimTime,
    q: EventQueue<Event>,
    cells: Vec<CellRt>,
    pops: Vec<PopRt>,
    ues: Vec<UeRt>,
    topology: Topology,
    metrics: MetricsSink,
    log: EventLog,
    pending: BTreeMap<PendingKey, Pending>,
    next_page_id: u64,
    events: u64,
    audit: Vec<String>,
}

const HIGH_PRIORITY_RA: [AccessIdentity; 2] = [AccessIdentity::MPS, AccessIdentity::MCS];

impl<'a> Sim<'a> {
    fn new(sc: &'a ScenarioConfig, seed: u64, opts: RunOptions) -> Self {
        let cells = sc
            .cells
            .iter()
            .map(|c| {
                let s = |purpose: &str| substream(seed, &format!("{purpose}/cell-{}", c.id));
                CellRt {
                    admission: CellState::new(&c.pools),
                    paging_queue: Vec::new(),
                    ra_pending: BTreeMap::new(),
                    uac: s("uac"),
                    backoff: s("backoff"),
                    preamble: s("preamble"),
                    contention: s("contention"),
                    beam: s("beam"),
                }
            })
            .collect();
        let topology = Topology {
            cells: sc.cells.iter().map(|c| CellSite { cell: c.id, gnb: c.gnb, tac: c.tac }).collect(),
            inter_gnb_delay: sc.inter_gnb_delay,
        };
        let mut pops = Vec::new();
        let mut ues = Vec::new();
        for (p, pop) in sc.populations.iter().enumerate() {
            let s = |purpose: &str| substream(seed, &format!("{purpose}/{}", pop.name));
            pops.push(PopRt { traffic: s("traffic"), paging: s("paging"), holding: s("holding"), first_ue: ues.len() });
            let cell = sc.cells.iter().position(|c| c.id == pop.cell).expect("validated cell reference");
            let t = &pop.template;
            for _ in 0..pop.count {
                let ue_id = UeId(ues.len() as u32 + 1);
                let rrc_state = match (pop.kind, t.initial_state) {
                    (RequestKind::QosFlow, _) | (_, InitialState::Connected) => RrcState::Connected,
                    (_, InitialState::Inactive) => RrcState::Inactive { anchor: pop.cell },
                    (_, InitialState::Idle) => RrcState::Idle,
                };
                let profile = UeProfile {
                    ue_id,
                    access_identities: t.access_identities,
                    home_plmn: t.home_plmn,
                    equivalent_plmns: t.equivalent_plmns.clone(),
                    in_home_country: t.in_home_country,
                    in_home_plmn: t.in_home_plmn,
                    priority_ai_granted_abroad: t.priority_ai_granted_abroad,
                    npn_authorized: t.npn_authorized.clone(),
                    subscribed_slices: t.subscribed_slices.clone(),
                    rrc_state,
                    serving_cell: Some(pop.cell),
                    wait_time_until: None,
                    tracking_areas: if t.tracking_areas.is_empty() {
                        alloc::vec![sc.cells[cell].tac]
                    } else {
                        t.tracking_areas.clone()
                    },
                    rna: t.rna.clone(),
                };
                ues.push(UeRt { profile, pop: p, cell, epoch: 0, attempt: None, next_flow: 0 });
            }
        }
        Sim {
            sc,
            seed,
            opts,
            horizon: SimTime::ZERO + sc.duration,
            q: EventQueue::default(),
            cells,
            pops,
            ues,
            topology,
            metrics: MetricsSink::default(),
            log: EventLog::new(opts.retain_log),
            pending: BTreeMap::new(),
            next_page_id: 0,
            events: 0,
            audit: Vec::new(),
        }
    }

    fn now(&self) -> SimTime {
        self.q.now()
    }

    fn schedule(&mut self, at: SimTime, ev: Event) {
        if at <= self.horizon {
            self.q.schedule(at, ev);
        }
    }

    fn schedule_initial(&mut self) {
        let sc = self.sc;
        let mut paging = false;
        for (p, pop) in sc.populations.iter().enumerate() {
            let first = self.pops[p].first_ue;
            match &pop.traffic {
                TrafficModel::Poisson { rate, start } => {
                    if *rate > 0.0 {
                        for k in 0..pop.count as usize {
                            let gap = SimDuration::from_secs_f64(self.pops[p].traffic.exponential(*rate));
                            self.schedule(*start + gap, Event::Arrival { ue: first + k, cause: None, renew: true });
                        }
                    }
                }
                TrafficModel::Burst { activation_time, jitter } => {
                    for k in 0..pop.count as usize {
                        let offset = jitter.mul_f64(self.pops[p].traffic.uniform());
                        self.schedule(*activation_time + offset, Event::Arrival { ue: first + k, cause: None, renew: false });
                    }
                }
                TrafficModel::PagingLoad { rate, .. } => {
                    paging = true;
                    if *rate > 0.0 {
                        let gap = SimDuration::from_secs_f64(self.pops[p].traffic.exponential(*rate));
                        self.schedule(SimTime::ZERO + gap, Event::PagingArrival { pop: p });
                    }
                }
                TrafficModel::Scripted { attempts } => {
                    for a in attempts {
                        let ue = first + a.ue_index as usize;
                        self.schedule(a.at, Event::Arrival { ue, cause: Some(a.cause), renew: false });
                    }
                }
                TrafficModel::Silent => {}
            }
        }
        if paging {
            for (c, cell) in sc.cells.iter().enumerate() {
                self.schedule(SimTime::ZERO + cell.paging.cycle, Event::PagingCycle { cell: c });
            }
        }
    }

    fn run_loop(&mut self) {
        while let Some(t) = self.q.peek_time() {
            if t > self.horizon {
                break;
            }
            let (_, _, ev) = self.q.pop().expect("peeked");
            self.events += 1;
            self.dispatch(ev);
            if let Some(n) = self.opts.audit_every {
                if n > 0 && self.events.is_multiple_of(n) {
                    self.run_audit();
                }
            }
        }
    }

    fn dispatch(&mut self, ev: Event) {
        match ev {
            Event::Arrival { ue, cause, renew } => self.on_arrival(ue, cause, renew),
            Event::PagingArrival { pop } => self.on_paging_arrival(pop),
            Event::PagingEnqueue { cell, req } => self.cells[cell].paging_queue.push(req),
            Event::PagingCycle { cell } => self.on_paging_cycle(cell),
            Event::RachOccasion { cell } => self.on_rach_occasion(cell),
            Event::RaRetry { ue, epoch } => {
                if self.live(ue, epoch) {
                    self.queue_preamble(ue);
                }
            }
            Event::AdmissionEval { ue, epoch } => {
                if self.live(ue, epoch) {
                    self.on_admission_eval(ue, epoch);
                }
            }
            Event::AccessResult { ue, epoch, result } => {
                if self.live(ue, epoch) {
                    self.on_access_result(ue, result);
                }
            }
            Event::Release { ue, epoch } => {
                if self.ues[ue].epoch == epoch && self.ues[ue].profile.rrc_state.is_connected() {
                    self.on_release(ue);
                }
            }
            Event::FlowRelease { ue, flow } => self.on_flow_release(ue, flow),
            Event::QueueCheck { cell, slice } => {
                let slices: BTreeSet<Option<Snssai>> = core::iter::once(slice).collect();
                self.drive_queue(cell, &slices);
            }
        }
    }

    /// The UE still runs the attempt the event was scheduled for.
    fn live(&self, ue: usize, epoch: u64) -> bool {
        self.ues[ue].epoch == epoch && self.ues[ue].attempt.is_some()
    }

    fn record(&mut self, ue: Option<usize>, cell: Option<usize>, slice: Option<Snssai>, ac: Option<u8>, kind: RecordKind) {
        let rec = EventRecord {
            time: self.now(),
            cell: cell.map(|c| self.sc.cells[c].id),
            ue: ue.map(|u| self.ues[u].profile.ue_id),
            slice,
            ac,
            kind,
        };
        self.log.push(rec);
    }

    fn record_attempt(&mut self, ue: usize, kind: RecordKind) {
        let dims = self.ues[ue].attempt.as_ref().map(|a| a.dims).unwrap_or_default();
        let cell = self.ues[ue].cell;
        self.record(Some(ue), Some(cell), dims.slice, dims.ac, kind);
    }

    fn finish(&mut self, ue: usize, outcome: Metric) {
        let Some(a) = self.ues[ue].attempt.as_ref() else { return };
        let dims = a.dims;
        self.metrics.incr(outcome, dims);
        self.record_attempt(ue, RecordKind::Outcome { outcome });
        self.ues[ue].attempt = None;
    }

    // -- arrivals ----------------------------------------------------------

    fn on_arrival(&mut self, ue: usize, cause: Option<EstablishmentCause>, renew: bool) {
        let sc = self.sc;
        let p = self.ues[ue].pop;
        let pop = &sc.populations[p];
        if renew {
            if let TrafficModel::Poisson { rate, .. } = pop.traffic {
                let gap = SimDuration::from_secs_f64(self.pops[p].traffic.exponential(rate));
                let at = self.now() + gap;
                self.schedule(at, Event::Arrival { ue, cause: None, renew: true });
            }
        }
        let cause = match cause {
            Some(c) => c,
            None => pop.cause_mix[self.pops[p].traffic.weighted(pop.cause_mix.iter().map(|c| c.weight))].cause,
        };
        match pop.kind {
            RequestKind::Connection => self.start_access(ue, cause),
            RequestKind::QosFlow => self.start_flow_setup(ue, cause),
        }
    }

    fn attempt_dims(&self, ue: usize, cause: EstablishmentCause) -> (Dims, crate::model::AccessInfo) {
        let pop = &self.sc.populations[self.ues[ue].pop];
        let info = derive_access_info(cause, &pop.traits, &self.ues[ue].profile);
        let dims = Dims {
            ai: Some(info.identities.primary().value()),
            ac: Some(info.category.value()),
            slice: pop.flows.first().map(|f| f.snssai),
            cause: Some(cause),
        };
        (dims, info)
    }

    fn start_access(&mut self, ue: usize, cause: EstablishmentCause) {
        let sc = self.sc;
        let (dims, info) = self.attempt_dims(ue, cause);
        let u = &self.ues[ue];
        if u.attempt.is_some() || u.profile.rrc_state.is_connected() {
            self.metrics.incr(Metric::ArrivalsSuppressed, dims);
            return;
        }
        let now = self.now();
        self.metrics.incr(Metric::AttemptsGenerated, dims);
        let u = &mut self.ues[ue];
        u.epoch += 1;
        u.attempt = Some(Attempt { start: now, cause, dims, ra: None, messages: 0 });
        self.record_attempt(ue, RecordKind::AttemptStart { cause, ai: dims.ai.unwrap_or(0) });

        let c = self.ues[ue].cell;
        let cell_cfg = &sc.cells[c];
        let emergency = cause == EstablishmentCause::Emergency;
        if !cell_selection_check(&self.ues[ue].profile, &cell_cfg.access, emergency).is_selectable() {
            self.record_attempt(ue, RecordKind::CellNotSelectable);
            self.finish(ue, Metric::BarredCell);
            return;
        }
        let factor = self.cells[c].uac.uniform();
        let jitter = self.cells[c].uac.uniform();
        let draw = UacDraw::with_jitter(factor, jitter);
        match uac_check(info.category, info.identities, &cell_cfg.uac, draw, now, &self.ues[ue].profile) {
            UacDecision::Allowed => {
                self.record_attempt(ue, RecordKind::UacAllowed);
                self.begin_ra(ue);
            }
            UacDecision::Barred { until, cause } => {
                let wait_time = cause == BarringCause::WaitTime;
                self.record_attempt(ue, RecordKind::UacBarred { until, wait_time });
                self.finish(ue, Metric::BarredUac);
            }
        }
    }

    // -- random access -----------------------------------------------------

    fn begin_ra(&mut self, ue: usize) {
        let sc = self.sc;
        let c = self.ues[ue].cell;
        let rach = &sc.cells[c].rach;
        let pop = &sc.populations[self.ues[ue].pop];
        let high: AccessIdentitySet = HIGH_PRIORITY_RA.into_iter().collect();
        let prioritized = pop.prioritized_ra
            && rach.prioritized.is_some()
            && !self.ues[ue].profile.effective_identities().intersection(high).is_empty();
        let class = if prioritized { PriorityClass::Prioritized } else { PriorityClass::Normal };
        let preamble = self.cells[c].preamble.below(rach.n_preambles as u64) as u16;
        let state = RaAttemptState::first(rach, preamble, class);
        if let Some(a) = self.ues[ue].attempt.as_mut() {
            a.ra = Some(state);
        }
        self.queue_preamble(ue);
    }

    /// Puts the UE's current preamble on the next RACH occasion strictly
    /// after now.
    fn queue_preamble(&mut self, ue: usize) {
        let sc = self.sc;
        let c = self.ues[ue].cell;
        let period = sc.cells[c].rach.occasion_period.as_micros();
        let occasion = SimTime::from_micros((self.now().as_micros() / period + 1) * period);
        let Some(state) = self.ues[ue].attempt.as_ref().and_then(|a| a.ra) else { return };
        let rx = state.current_power - sc.populations[self.ues[ue].pop].template.path_loss;
        let slot = self.cells[c].ra_pending.entry(occasion).or_default();
        let first = slot.is_empty();
        slot.push((ue, state.chosen_preamble, rx));
        if first {
            self.schedule(occasion, Event::RachOccasion { cell: c });
        }
    }

    fn on_rach_occasion(&mut self, c: usize) {
        let sc = self.sc;
        let now = self.now();
        let rach = &sc.cells[c].rach;
        let txs = self.cells[c].ra_pending.remove(&now).unwrap_or_default();
        let mut sent = Vec::with_capacity(txs.len());
        for &(ue, preamble, power) in &txs {
            let Some(a) = self.ues[ue].attempt.as_mut() else { continue };
            a.messages += 1;
            let attempt_no = a.ra.map_or(1, |s| s.attempt_no);
            let dims = a.dims;
            self.metrics.incr(Metric::RaPreambles, dims);
            self.record_attempt(ue, RecordKind::Preamble { preamble, attempt_no, power_dbm: power });
            sent.push(PreambleTx { ue: self.ues[ue].profile.ue_id, preamble, power });
        }
        let outcomes = rach_round(&sent, rach).expect("preamble indices are drawn in range");
        let index = |id: UeId| id.0 as usize - 1;
        let mut groups: BTreeMap<u16, Vec<UeId>> = BTreeMap::new();
        let extra = rach.mode.messages() - 2;
        let lat = &rach.msg_latencies;
        for o in &outcomes {
            match o.result {
                PreambleResult::NotDetected => self.ra_failed(index(o.ue), now + rach.mode.no_response_latency(lat)),
                PreambleResult::Detected { .. } => groups.entry(o.preamble).or_default().push(o.ue),
            }
        }
        for (preamble, contenders) in groups {
            let draw = if contenders.len() > 1 {
                self.metrics.incr(Metric::RaCollisions, Dims::default());
                let n = contenders.len() as u32;
                self.record(None, Some(c), None, None, RecordKind::RaCollision { preamble, contenders: n });
                self.cells[c].contention.uniform()
            } else {
                0.0
            };
            let res = contention_resolution(&contenders, rach, draw).expect("group is non-empty");
            let w = index(res.winner);
            if let Some(a) = self.ues[w].attempt.as_mut() {
                a.messages += extra;
            }
            let epoch = self.ues[w].epoch;
            self.schedule(now + rach.mode.request_latency(lat), Event::AdmissionEval { ue: w, epoch });
            for l in res.losers {
                let l = index(l);
                if let Some(a) = self.ues[l].attempt.as_mut() {
                    a.messages += extra;
                }
                self.ra_failed(l, now + res.latency);
            }
        }
    }

    /// Handles a failed RA attempt detected at `detected`: either schedules
    /// a retry after back-off or gives up.
    fn ra_failed(&mut self, ue: usize, detected: SimTime) {
        let sc = self.sc;
        let c = self.ues[ue].cell;
        let rach = &sc.cells[c].rach;
        let Some(mut state) = self.ues[ue].attempt.as_ref().and_then(|a| a.ra) else { return };
        if sc.randomize_beam {
            state.same_beam_as_previous = self.cells[c].beam.uniform() < 0.5;
        }
        let draw = self.cells[c].backoff.uniform();
        match next_attempt_params(&state, rach, draw) {
            Err(_) => self.finish(ue, Metric::RaFailure),
            Ok(params) => {
                let preamble = self.cells[c].preamble.below(rach.n_preambles as u64) as u16;
                state.advance(params, preamble);
                let a = self.ues[ue].attempt.as_mut().expect("checked above");
                a.ra = Some(state);
                let dims = a.dims;
                self.metrics.observe_duration(Metric::RaBackoff, dims, params.backoff);
                self.record_attempt(ue, RecordKind::RaRetry { backoff: params.backoff });
                let epoch = self.ues[ue].epoch;
                self.schedule(detected + params.backoff, Event::RaRetry { ue, epoch });
            }
        }
    }

    // -- admission ---------------------------------------------------------

    fn build_flows(&mut self, ue: usize) -> Vec<QosFlowRequest> {
        let pop = &self.sc.populations[self.ues[ue].pop];
        let u = &mut self.ues[ue];
        pop.flows
            .iter()
            .map(|f| {
                let flow_id = FlowId::compose(u.profile.ue_id, u.next_flow);
                u.next_flow = u.next_flow.wrapping_add(1);
                QosFlowRequest { flow_id, arp: f.arp, resource_type: f.resource_type, snssai: f.snssai, demand: f.demand }
            })
            .collect()
    }

    fn serving_plmn(&self, ue: usize) -> PlmnId {
        let p = &self.ues[ue].profile;
        let plmns = &self.sc.cells[self.ues[ue].cell].access.plmn_ids;
        plmns.iter().copied().find(|x| p.accepts_plmn(x)).unwrap_or(p.home_plmn)
    }

    fn on_admission_eval(&mut self, ue: usize, epoch: u64) {
        let sc = self.sc;
        let c = self.ues[ue].cell;
        let kind = match self.ues[ue].profile.rrc_state {
            RrcState::Inactive { .. } => AdmissionKind::Resume,
            _ => AdmissionKind::InitialSetup,
        };
        let cause = self.ues[ue].attempt.as_ref().map(|a| a.cause);
        let flows = self.build_flows(ue);
        let req = AdmissionRequest { kind, cause, flows, ue_id: self.ues[ue].profile.ue_id, serving_plmn: self.serving_plmn(ue) };
        let now = self.now();
        let decision = self.cells[c].admission.admit_request(&req, &sc.cells[c].admission, now);
        let dims = self.ues[ue].attempt.as_ref().map(|a| a.dims).unwrap_or_default();
        self.log_decision(ue, c, dims, &decision);
        match decision {
            AdmissionDecision::Queue { .. } => {
                self.metrics.incr(Metric::Queued, dims);
                self.pending.insert(pending_key(c, &req), Pending::Connection { ue, epoch });
                let at = self.now() + sc.cells[c].admission.queue_timeout + SimDuration::from_micros(1);
                self.schedule(at, Event::QueueCheck { cell: c, slice: req.queue_slice() });
            }
            other => self.conclude_connection(ue, c, other),
        }
    }

    /// Sends the final RRC response for a connection whose admission is
    /// decided.
    fn conclude_connection(&mut self, ue: usize, c: usize, decision: AdmissionDecision) {
        let rach = &self.sc.cells[c].rach;
        let at = self.now() + rach.mode.response_latency(&rach.msg_latencies);
        let result = match decision {
            AdmissionDecision::Admit => AccessResult::Connected,
            AdmissionDecision::PreemptAndAdmit { .. } => {
                self.handle_evictions(c);
                AccessResult::Connected
            }
            AdmissionDecision::Reject { wait_time, reason } => {
                if reason == RejectReason::UnknownSlice {
                    self.metrics.incr(Metric::AdmissionConfigErrors, Dims::default());
                }
                AccessResult::Rejected(wait_time)
            }
            AdmissionDecision::Queue { .. } => unreachable!("queued requests are not concluded"),
        };
        let epoch = self.ues[ue].epoch;
        self.schedule(at, Event::AccessResult { ue, epoch, result });
    }

    fn log_decision(&mut self, ue: usize, c: usize, dims: Dims, decision: &AdmissionDecision) {
        let victims = match decision {
            AdmissionDecision::PreemptAndAdmit { victims } => victims.len() as u32,
            _ => 0,
        };
        let kind = RecordKind::Admission { decision: label_of(decision), victims };
        self.record(Some(ue), Some(c), dims.slice, dims.ac, kind);
    }

    fn on_access_result(&mut self, ue: usize, result: AccessResult) {
        let now = self.now();
        let Some(a) = self.ues[ue].attempt.as_mut() else { return };
        a.messages += 1;
        let (dims, start, messages) = (a.dims, a.start, a.messages);
        match result {
            AccessResult::Connected => {
                let u = &mut self.ues[ue];
                let event = match u.profile.rrc_state {
                    RrcState::Inactive { .. } => RrcEvent::ResumeComplete,
                    _ => RrcEvent::SetupComplete,
                };
                u.profile.rrc_state = u.profile.rrc_state.apply(event).expect("idle or inactive UE connects");
                self.record_attempt(ue, RecordKind::Connected);
                self.metrics.observe(Metric::RaMessages, dims, messages as u64);
                self.metrics.observe_duration(Metric::AccessLatency, dims, now.since(start));
                self.finish(ue, Metric::AccessSuccess);
                let p = self.ues[ue].pop;
                let hold = self.pops[p].holding.exponential(1.0 / self.sc.populations[p].holding_time.as_secs_f64());
                let epoch = self.ues[ue].epoch;
                self.schedule(now + SimDuration::from_secs_f64(hold), Event::Release { ue, epoch });
            }
            AccessResult::Rejected(wait) => {
                if let Some(w) = wait {
                    apply_wait_time(&mut self.ues[ue].profile, w, now);
                    self.record_attempt(ue, RecordKind::WaitTimeApplied { until: now + w });
                }
                self.finish(ue, Metric::Rejected);
            }
        }
    }

    fn on_release(&mut self, ue: usize) {
        let sc = self.sc;
        let c = self.ues[ue].cell;
        let ue_id = self.ues[ue].profile.ue_id;
        if self.cells[c].admission.ue_flows(ue_id).next().is_some() {
            match self.cells[c].admission.release_connection(ReleaseTarget::Ue(ue_id), ReleaseReason::Normal) {
                Ok(released) => {
                    let affected = self.affected_slices(c, &released);
                    let n = released.len() as u32;
                    let slice = released.first().map(|f| f.snssai);
                    self.record(Some(ue), Some(c), slice, None, RecordKind::Released { flows: n });
                    self.drive_queue(c, &affected);
                }
                Err(_) => self.metrics.incr(Metric::ReleaseWarnings, Dims::default()),
            }
        } else {
            self.record(Some(ue), Some(c), None, None, RecordKind::Released { flows: 0 });
        }
        let suspend_at = match sc.populations[self.ues[ue].pop].release_to {
            ReleaseTo::Idle => None,
            ReleaseTo::Inactive => Some(sc.cells[c].id),
        };
        let u = &mut self.ues[ue];
        u.profile.rrc_state = u.profile.rrc_state.apply(RrcEvent::Release { suspend_at }).expect("connected UE releases");
        u.epoch += 1;
    }

    /// Slices whose queued requests may fit after `released` was freed.
    fn affected_slices(&self, c: usize, released: &[crate::admission::AdmittedFlow]) -> BTreeSet<Option<Snssai>> {
        let mut out: BTreeSet<Option<Snssai>> = released.iter().filter(|f| f.units() > 0).map(|f| Some(f.snssai)).collect();
        if released.iter().any(|f| f.shared_units > 0) {
            out.extend(self.sc.cells[c].pools.slices.iter().filter(|s| s.uses_shared).map(|s| Some(s.snssai)));
        }
        out
    }

    fn handle_evictions(&mut self, c: usize) {
        let evicted = self.cells[c].admission.drain_evicted();
        for f in evicted {
            let ue = f.ue_id.0 as usize - 1;
            let dims = Dims {
                ai: Some(self.ues[ue].profile.effective_identities().primary().value()),
                ac: None,
                slice: Some(f.snssai),
                cause: None,
            };
            self.metrics.incr(Metric::Preemptions, dims);
            self.record(Some(ue), Some(c), Some(f.snssai), None, RecordKind::Preempted { flow: f.flow_id });
            let kind = self.sc.populations[self.ues[ue].pop].kind;
            if kind == RequestKind::Connection && self.cells[c].admission.ue_flows(f.ue_id).next().is_none() {
                // Lost its last flow before or after completing setup.
                if self.ues[ue].attempt.is_some() {
                    self.finish(ue, Metric::Rejected);
                }
                let u = &mut self.ues[ue];
                if u.profile.rrc_state.is_connected() {
                    u.profile.rrc_state = RrcState::Connected
                        .apply(RrcEvent::Release { suspend_at: None })
                        .expect("connected UE releases");
                }
                u.epoch += 1;
            }
        }
    }

    fn drive_queue(&mut self, c: usize, slices: &BTreeSet<Option<Snssai>>) {
        let sc = self.sc;
        let now = self.now();
        let outcomes = self.cells[c].admission.process_queue_where(&sc.cells[c].admission, now, |q| slices.contains(&q.slice()));
        for o in outcomes {
            self.on_queue_outcome(c, o);
        }
    }

    fn on_queue_outcome(&mut self, c: usize, o: QueueOutcome) {
        let Some(p) = self.pending.remove(&pending_key(c, &o.request)) else { return };
        let ue = match p {
            Pending::Connection { ue, .. } | Pending::Flow { ue, .. } => ue,
        };
        let dims = match &p {
            Pending::Connection { ue, .. } => self.ues[*ue].attempt.as_ref().map(|a| a.dims).unwrap_or_default(),
            Pending::Flow { dims, .. } => *dims,
        };
        self.metrics.observe_duration(Metric::QueueWait, dims, o.waited);
        self.record(Some(ue), Some(c), dims.slice, dims.ac, RecordKind::QueueExit { waited: o.waited });
        self.log_decision(ue, c, dims, &o.decision);
        match p {
            Pending::Connection { ue, epoch } => {
                if self.live(ue, epoch) {
                    self.conclude_connection(ue, c, o.decision);
                }
            }
            Pending::Flow { ue, start, dims } => {
                if let AdmissionDecision::PreemptAndAdmit { .. } = o.decision {
                    self.handle_evictions(c);
                }
                if o.decision.is_admitted() {
                    let ids: Vec<FlowId> = o.request.flows.iter().map(|f| f.flow_id).collect();
                    self.flow_admitted(ue, start, dims, &ids);
                } else {
                    self.finish_flow(ue, dims, Metric::Rejected);
                }
            }
        }
    }

    // -- QoS flow populations ----------------------------------------------

    fn start_flow_setup(&mut self, ue: usize, cause: EstablishmentCause) {
        let sc = self.sc;
        let (dims, _) = self.attempt_dims(ue, cause);
        if !self.ues[ue].profile.rrc_state.is_connected() {
            self.metrics.incr(Metric::ArrivalsSuppressed, dims);
            return;
        }
        let now = self.now();
        let c = self.ues[ue].cell;
        self.metrics.incr(Metric::AttemptsGenerated, dims);
        self.record(Some(ue), Some(c), dims.slice, dims.ac, RecordKind::AttemptStart { cause, ai: dims.ai.unwrap_or(0) });
        let flows = self.build_flows(ue);
        let req = AdmissionRequest {
            kind: AdmissionKind::QosFlowSetup,
            cause: Some(cause),
            flows,
            ue_id: self.ues[ue].profile.ue_id,
            serving_plmn: self.serving_plmn(ue),
        };
        let decision = self.cells[c].admission.admit_request(&req, &sc.cells[c].admission, now);
        self.log_decision(ue, c, dims, &decision);
        match decision {
            AdmissionDecision::Admit | AdmissionDecision::PreemptAndAdmit { .. } => {
                self.handle_evictions(c);
                let ids: Vec<FlowId> = req.flows.iter().map(|f| f.flow_id).collect();
                self.flow_admitted(ue, now, dims, &ids);
            }
            AdmissionDecision::Queue { .. } => {
                self.metrics.incr(Metric::Queued, dims);
                self.pending.insert(pending_key(c, &req), Pending::Flow { ue, start: now, dims });
                let at = now + sc.cells[c].admission.queue_timeout + SimDuration::from_micros(1);
                self.schedule(at, Event::QueueCheck { cell: c, slice: req.queue_slice() });
            }
            AdmissionDecision::Reject { reason, .. } => {
                if reason == RejectReason::UnknownSlice {
                    self.metrics.incr(Metric::AdmissionConfigErrors, Dims::default());
                }
                self.finish_flow(ue, dims, Metric::Rejected);
            }
        }
    }

    fn flow_admitted(&mut self, ue: usize, start: SimTime, dims: Dims, flows: &[FlowId]) {
        let now = self.now();
        self.metrics.observe_duration(Metric::AccessLatency, dims, now.since(start));
        self.finish_flow(ue, dims, Metric::AccessSuccess);
        let p = self.ues[ue].pop;
        let hold = self.pops[p].holding.exponential(1.0 / self.sc.populations[p].holding_time.as_secs_f64());
        let at = now + SimDuration::from_secs_f64(hold);
        for &flow in flows {
            self.schedule(at, Event::FlowRelease { ue, flow });
        }
    }

    fn finish_flow(&mut self, ue: usize, dims: Dims, outcome: Metric) {
        self.metrics.incr(outcome, dims);
        let c = self.ues[ue].cell;
        self.record(Some(ue), Some(c), dims.slice, dims.ac, RecordKind::Outcome { outcome });
    }

    fn on_flow_release(&mut self, ue: usize, flow: FlowId) {
        let c = self.ues[ue].cell;
        if self.cells[c].admission.flow(flow).is_none() {
            // Pre-empted earlier.
            return;
        }
        if let Ok(released) = self.cells[c].admission.release_connection(ReleaseTarget::Flow(flow), ReleaseReason::Normal) {
            let affected = self.affected_slices(c, &released);
            let slice = released.first().map(|f| f.snssai);
            self.record(Some(ue), Some(c), slice, None, RecordKind::FlowReleased { flow });
            self.drive_queue(c, &affected);
        }
    }

    // -- paging ------------------------------------------------------------

    fn on_paging_arrival(&mut self, p: usize) {
        let sc = self.sc;
        let pop = &sc.populations[p];
        let TrafficModel::PagingLoad { rate, priority_mix } = &pop.traffic else { return };
        let now = self.now();
        let gap = SimDuration::from_secs_f64(self.pops[p].traffic.exponential(*rate));
        self.schedule(now + gap, Event::PagingArrival { pop: p });
        let ue = self.pops[p].first_ue + self.pops[p].paging.below(pop.count as u64) as usize;
        let priority = self.pops[p].paging.weighted(priority_mix.iter().copied()) as u8 + 1;
        self.metrics.incr(Metric::PagingRequests, Dims::default());
        let origin = match self.ues[ue].profile.rrc_state {
            RrcState::Connected => {
                self.metrics.incr(Metric::PagingConnected, Dims::default());
                return;
            }
            RrcState::Idle => PagingOrigin::Cn,
            RrcState::Inactive { .. } => PagingOrigin::Ran,
        };
        let req = PagingRequest { id: self.next_page_id, target_ue: self.ues[ue].profile.ue_id, priority, origin, enqueue_time: now };
        self.next_page_id += 1;
        let Ok(targets) = route_paging(&req, Some(&self.ues[ue].profile), &self.topology) else { return };
        for t in targets {
            let Some(cell) = sc.cells.iter().position(|c| c.id == t.cell) else { continue };
            let at = now + t.delay;
            let req = PagingRequest { enqueue_time: at, ..req };
            if t.delay.is_zero() {
                self.cells[cell].paging_queue.push(req);
            } else {
                self.schedule(at, Event::PagingEnqueue { cell, req });
            }
        }
    }

    fn on_paging_cycle(&mut self, c: usize) {
        let sc = self.sc;
        let cfg = &sc.cells[c].paging;
        let now = self.now();
        let queue = core::mem::take(&mut self.cells[c].paging_queue);
        let timeout = cfg.discard_timeout();
        let sel = paging_control_filter(queue, cfg.budget as usize, now, timeout);
        let summary = PagingCycleSummary {
            paged: sel.to_page.len() as u32,
            max_paged_priority: sel.to_page.iter().map(|r| r.priority).max(),
            deferred: sel.deferred.len() as u32,
            min_deferred_priority: sel.deferred.iter().map(|r| r.priority).min(),
            dropped: sel.dropped.len() as u32,
            min_drop_age: sel.dropped.iter().map(|r| now.since(r.enqueue_time)).min(),
            discard_timeout: timeout,
        };
        if summary.paged + summary.deferred + summary.dropped > 0 {
            self.record(None, Some(c), None, None, RecordKind::PagingCycle(summary));
        }
        if summary.paged > 0 {
            self.metrics.add(Metric::PagingDelivered, Dims::default(), summary.paged as u64);
        }
        if summary.dropped > 0 {
            self.metrics.add(Metric::PagingDropped, Dims::default(), summary.dropped as u64);
        }
        for r in &sel.to_page {
            let ue = r.target_ue.0 as usize - 1;
            self.record(Some(ue), Some(c), None, Some(0), RecordKind::Paged { priority: r.priority });
            let pop = &sc.populations[self.ues[ue].pop];
            if pop.respond_to_paging && pop.kind == RequestKind::Connection {
                self.start_access(ue, EstablishmentCause::MtAccess);
            }
        }
        self.cells[c].paging_queue = sel.deferred;
        self.schedule(now + cfg.cycle, Event::PagingCycle { cell: c });
    }

    // -- wrap-up -----------------------------------------------------------

    fn run_audit(&mut self) {
        let now = self.now();
        for (i, cell) in self.cells.iter().enumerate() {
            if let Err(violations) = cell.admission.audit() {
                for v in violations {
                    self.audit.push(format!("t={now} cell={}: {v:?}", self.sc.cells[i].id));
                }
            }
        }
    }

    fn into_output(mut self) -> RunOutput {
        for ue in 0..self.ues.len() {
            if self.ues[ue].attempt.is_some() {
                self.finish(ue, Metric::Unresolved);
            }
        }
        let flows: Vec<(usize, Dims)> = self
            .pending
            .values()
            .filter_map(|p| match p {
                Pending::Flow { ue, dims, .. } => Some((*ue, *dims)),
                Pending::Connection { .. } => None,
            })
            .collect();
        for (ue, dims) in flows {
            self.finish_flow(ue, dims, Metric::Unresolved);
        }
        if self.opts.audit_every.is_some() {
            self.run_audit();
        }
        let report = MetricsReport {
            scenario: self.sc.name.clone(),
            seed: self.seed,
            duration: self.sc.duration,
            events_processed: self.events,
            rows: self.metrics.rows(),
            log_digest: self.log.digest(),
            audit_violations: self.audit,
        };
        RunOutput { report, log: self.log }
    }
}

fn pending_key(c: usize, req: &AdmissionRequest) -> PendingKey {
    (c, req.ue_id, req.flows.first().map(|f| f.flow_id))
}

fn label_of(decision: &AdmissionDecision) -> AdmissionLabel {
    match decision {
        AdmissionDecision::Admit => AdmissionLabel::Admit,
        AdmissionDecision::Queue { position } => AdmissionLabel::Queue { position: *position as u32 },
        AdmissionDecision::Reject { wait_time, reason } => AdmissionLabel::Reject { reason: *reason, wait_time: *wait_time },
        AdmissionDecision::PreemptAndAdmit { .. } => AdmissionLabel::Preempt,
    }
}
