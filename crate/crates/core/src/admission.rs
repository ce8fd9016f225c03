//! Admission control: the last gate before a connection or QoS flow gets
//! resources. Requests are admitted, pre-empt lower-priority flows, wait in
//! a queue, or are rejected (optionally with a waitTime).
//!
//! Resources are abstract integer units held in per-slice pools. A slice
//! consumes its dedicated units first and may overflow into a cell-level
//! shared pool when configured to. Every admitted flow remembers how many
//! units it took from each, so releases return exactly what was taken.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::model::{ArpProfile, EstablishmentCause, FlowId, PlmnId, QosFlowRequest, ResourceType, Snssai, UeId};
use crate::time::{SimDuration, SimTime};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SliceConfig {
    pub snssai: Snssai,
    pub dedicated_capacity: u32,
    #[cfg_attr(feature = "serde", serde(default))]
    pub uses_shared: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct PoolConfig {
    pub shared_capacity: u32,
    pub slices: Vec<SliceConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum PreemptionScope {
    /// Release only the selected QoS flows.
    #[default]
    Flow,
    /// Release the victim UE's whole context; every flow of the UE must be
    /// evictable.
    UeContext,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PlmnQuota {
    pub plmn: PlmnId,
    pub max_units: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct AdmissionPolicy {
    pub preemption: bool,
    pub preemption_scope: PreemptionScope,
    pub queueing: bool,
    /// Queue slots per slice.
    pub queue_capacity: u32,
    pub queue_timeout: SimDuration,
    /// waitTime attached to rejected setup/resume requests; zero disables it.
    pub wait_time: SimDuration,
    /// Queue delay-critical GBR requests ahead of others at equal ARP.
    pub delay_critical_first: bool,
    pub plmn_quotas: Vec<PlmnQuota>,
}

impl Default for AdmissionPolicy {
    fn default() -> Self {
        AdmissionPolicy {
            preemption: true,
            preemption_scope: PreemptionScope::Flow,
            queueing: false,
            queue_capacity: 32,
            queue_timeout: SimDuration::from_secs(2),
            wait_time: SimDuration::from_secs(4),
            delay_critical_first: false,
            plmn_quotas: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// Pools
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlicePool {
    pub snssai: Snssai,
    pub dedicated_capacity: u32,
    pub uses_shared: bool,
    pub used_dedicated: u32,
    pub used_shared: u32,
}

impl SlicePool {
    pub fn used(&self) -> u32 {
        self.used_dedicated + self.used_shared
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SharedPool {
    pub capacity: u32,
    pub used: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResourcePools {
    pub shared: SharedPool,
    pub slices: Vec<SlicePool>,
}

impl ResourcePools {
    pub fn new(cfg: &PoolConfig) -> Self {
        ResourcePools {
            shared: SharedPool { capacity: cfg.shared_capacity, used: 0 },
            slices: cfg
                .slices
                .iter()
                .map(|s| SlicePool {
                    snssai: s.snssai,
                    dedicated_capacity: s.dedicated_capacity,
                    uses_shared: s.uses_shared,
                    used_dedicated: 0,
                    used_shared: 0,
                })
                .collect(),
        }
    }

    pub fn slice(&self, snssai: &Snssai) -> Option<&SlicePool> {
        self.slices.iter().find(|p| p.snssai == *snssai)
    }

    fn slice_mut(&mut self, snssai: &Snssai) -> Option<&mut SlicePool> {
        self.slices.iter_mut().find(|p| p.snssai == *snssai)
    }

    /// Units a new flow of `snssai` could take right now.
    pub fn free_for(&self, snssai: &Snssai) -> Option<u32> {
        let pool = self.slice(snssai)?;
        let dedicated = pool.dedicated_capacity - pool.used_dedicated;
        let shared = if pool.uses_shared { self.shared.capacity - self.shared.used } else { 0 };
        Some(dedicated + shared)
    }

    /// Takes `demand` units, dedicated first. Caller checks `free_for`.
    fn reserve(&mut self, snssai: &Snssai, demand: u32) -> (u32, u32) {
        let shared_free = self.shared.capacity - self.shared.used;
        let pool = self.slice_mut(snssai).expect("reserve on known slice");
        let dedicated = demand.min(pool.dedicated_capacity - pool.used_dedicated);
        let shared = demand - dedicated;
        assert!(shared == 0 || (pool.uses_shared && shared <= shared_free), "reserve beyond free units");
        pool.used_dedicated += dedicated;
        pool.used_shared += shared;
        self.shared.used += shared;
        (dedicated, shared)
    }

    fn give_back(&mut self, snssai: &Snssai, dedicated: u32, shared: u32) {
        self.shared.used -= shared;
        let pool = self.slice_mut(snssai).expect("release on known slice");
        pool.used_shared -= shared;
        pool.used_dedicated -= dedicated;
    }
}

// ---------------------------------------------------------------------------
// Requests and decisions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdmissionKind {
    InitialSetup,
    Resume,
    HandoverIn,
    QosFlowSetup,
}

impl AdmissionKind {
    /// Only setup and resume rejections may carry a waitTime.
    pub const fn carries_wait_time(self) -> bool {
        matches!(self, AdmissionKind::InitialSetup | AdmissionKind::Resume)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionRequest {
    pub kind: AdmissionKind,
    pub cause: Option<EstablishmentCause>,
    pub flows: Vec<QosFlowRequest>,
    pub ue_id: UeId,
    pub serving_plmn: PlmnId,
}

impl AdmissionRequest {
    /// Best (numerically lowest) ARP level among the request's flows.
    pub fn priority_level(&self) -> u8 {
        self.flows.iter().map(|f| f.arp.priority_level).min().unwrap_or(15)
    }

    fn reserved_demand(&self) -> u32 {
        self.flows.iter().map(QosFlowRequest::reserved_demand).sum()
    }

    /// The slice whose queue holds this request.
    pub fn queue_slice(&self) -> Option<Snssai> {
        self.flows.iter().find(|f| f.reserved_demand() > 0).or(self.flows.first()).map(|f| f.snssai)
    }

    fn is_delay_critical(&self) -> bool {
        self.flows.iter().any(|f| f.resource_type == ResourceType::DelayCriticalGbr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    NoResources,
    UnknownSlice,
    PlmnQuota,
    QueueFull,
    QueueTimeout,
    DuplicateFlow,
}

impl RejectReason {
    pub const fn as_str(self) -> &'static str {
        match self {
            RejectReason::NoResources => "no_resources",
            RejectReason::UnknownSlice => "unknown_slice",
            RejectReason::PlmnQuota => "plmn_quota",
            RejectReason::QueueFull => "queue_full",
            RejectReason::QueueTimeout => "queue_timeout",
            RejectReason::DuplicateFlow => "duplicate_flow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdmissionDecision {
    Admit,
    /// Queued; `position` is 0-based within the request's slice queue.
    Queue { position: usize },
    Reject { wait_time: Option<SimDuration>, reason: RejectReason },
    PreemptAndAdmit { victims: Vec<FlowId> },
}

impl AdmissionDecision {
    pub fn is_admitted(&self) -> bool {
        matches!(self, AdmissionDecision::Admit | AdmissionDecision::PreemptAndAdmit { .. })
    }
}

/// Outcome of evaluating a request against the current state, before the
/// queueing policy is applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdmissionPlan {
    Admit,
    Preempt { victims: Vec<EvictionUnit> },
    NoFit(RejectReason),
    Refuse(RejectReason),
}

/// Flows released together when a victim is chosen: one flow, or all flows
/// of one UE under context pre-emption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvictionUnit {
    pub flows: Vec<FlowId>,
    /// ARP of the incoming flow that selected this unit.
    pub evicted_by: ArpProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmittedFlow {
    pub flow_id: FlowId,
    pub ue_id: UeId,
    pub arp: ArpProfile,
    pub resource_type: ResourceType,
    pub snssai: Snssai,
    pub plmn: PlmnId,
    pub dedicated_units: u32,
    pub shared_units: u32,
    pub admitted_seq: u64,
    pub admitted_at: SimTime,
}

impl AdmittedFlow {
    pub fn units(&self) -> u32 {
        self.dedicated_units + self.shared_units
    }

    /// Units that evicting this flow frees for a new flow of `slice`.
    fn contribution(&self, slice: &SlicePool) -> u32 {
        let own = if self.snssai == slice.snssai { self.dedicated_units } else { 0 };
        let shared = if slice.uses_shared { self.shared_units } else { 0 };
        own + shared
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReleaseReason {
    Normal,
    Preempted,
    InactivityToInactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReleaseTarget {
    Flow(FlowId),
    Ue(UeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("release target {0:?} is not admitted")]
pub struct UnknownTarget(pub ReleaseTarget);

#[derive(Debug, Clone, PartialEq)]
pub struct QueuedRequest {
    pub id: u64,
    pub request: AdmissionRequest,
    pub enqueued_at: SimTime,
    seq: u64,
    priority: u8,
    delay_critical: bool,
    slice: Option<Snssai>,
}

impl QueuedRequest {
    pub fn slice(&self) -> Option<Snssai> {
        self.slice
    }

    fn key(&self, dc_first: bool) -> (u8, bool, SimTime, u64) {
        (self.priority, dc_first && !self.delay_critical, self.enqueued_at, self.seq)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueOutcome {
    pub entry_id: u64,
    pub request: AdmissionRequest,
    pub decision: AdmissionDecision,
    pub waited: SimDuration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditViolation {
    DedicatedMismatch { slice: Snssai, recorded: u32, summed: u32 },
    SharedSliceMismatch { slice: Snssai, recorded: u32, summed: u32 },
    SharedMismatch { recorded: u32, summed: u32 },
    OverCapacity { slice: Snssai },
    SharedOverCapacity,
    FlowUnits { flow: FlowId },
    PlmnUsage { plmn: PlmnId },
    EvictionRule { victim: FlowId },
}

// ---------------------------------------------------------------------------
// Cell admission state
// ---------------------------------------------------------------------------

/// Admission-side state of one cell: pools, admitted flows, and the queue.
#[derive(Debug, Clone, Default)]
pub struct CellState {
    pub pools: ResourcePools,
    flows: BTreeMap<FlowId, AdmittedFlow>,
    queue: Vec<QueuedRequest>,
    plmn_used: BTreeMap<PlmnId, u32>,
    next_seq: u64,
    eviction_violations: Vec<FlowId>,
    evicted: Vec<AdmittedFlow>,
}

impl CellState {
    pub fn new(cfg: &PoolConfig) -> Self {
        CellState { pools: ResourcePools::new(cfg), ..Default::default() }
    }

    pub fn pools(&self) -> &ResourcePools {
        &self.pools
    }

    pub fn flows(&self) -> impl Iterator<Item = &AdmittedFlow> {
        self.flows.values()
    }

    pub fn flow(&self, id: FlowId) -> Option<&AdmittedFlow> {
        self.flows.get(&id)
    }

    pub fn queue(&self) -> &[QueuedRequest] {
        &self.queue
    }

    pub fn ue_flows(&self, ue: UeId) -> impl Iterator<Item = &AdmittedFlow> {
        self.flows.range(FlowId::compose(ue, 0)..=FlowId::compose(ue, u32::MAX)).map(|(_, f)| f)
    }

    /// Evaluates `req` without side effects.
    pub fn evaluate(&self, req: &AdmissionRequest, policy: &AdmissionPolicy) -> AdmissionPlan {
        for f in &req.flows {
            if self.pools.slice(&f.snssai).is_none() {
                return AdmissionPlan::Refuse(RejectReason::UnknownSlice);
            }
            if self.flows.contains_key(&f.flow_id) {
                return AdmissionPlan::Refuse(RejectReason::DuplicateFlow);
            }
        }
        if let Some(q) = policy.plmn_quotas.iter().find(|q| q.plmn == req.serving_plmn) {
            let used = self.plmn_used.get(&req.serving_plmn).copied().unwrap_or(0);
            if used + req.reserved_demand() > q.max_units {
                return AdmissionPlan::NoFit(RejectReason::PlmnQuota);
            }
        }

        let mut pools = self.pools.clone();
        let mut evicted: BTreeSet<FlowId> = BTreeSet::new();
        let mut victims = Vec::new();
        for flow in &req.flows {
            let demand = flow.reserved_demand();
            if demand == 0 {
                continue;
            }
            let free = pools.free_for(&flow.snssai).unwrap_or(0);
            if free >= demand {
                pools.reserve(&flow.snssai, demand);
                continue;
            }
            if !policy.preemption || !flow.arp.preemption_capability {
                return AdmissionPlan::NoFit(RejectReason::NoResources);
            }
            let slice = *pools.slice(&flow.snssai).expect("slice checked above");
            let candidates = self.eviction_candidates(&flow.arp, &slice, &evicted, policy.preemption_scope);
            let Some(chosen) = select_victims(&candidates, demand - free) else {
                return AdmissionPlan::NoFit(RejectReason::NoResources);
            };
            for idx in chosen {
                let unit = &candidates[idx];
                for id in &unit.flows {
                    let v = &self.flows[id];
                    pools.give_back(&v.snssai, v.dedicated_units, v.shared_units);
                    evicted.insert(*id);
                }
                victims.push(EvictionUnit { flows: unit.flows.clone(), evicted_by: flow.arp });
            }
            pools.reserve(&flow.snssai, demand);
        }
        if victims.is_empty() {
            AdmissionPlan::Admit
        } else {
            AdmissionPlan::Preempt { victims }
        }
    }

    fn eviction_candidates(
        &self,
        incoming: &ArpProfile,
        slice: &SlicePool,
        evicted: &BTreeSet<FlowId>,
        scope: PreemptionScope,
    ) -> Vec<Candidate> {
        let live = self.flows.values().filter(|f| !evicted.contains(&f.flow_id));
        let mut out: Vec<Candidate> = match scope {
            PreemptionScope::Flow => live
                .filter(|f| incoming.may_preempt(&f.arp))
                .map(|f| Candidate {
                    flows: alloc::vec![f.flow_id],
                    cost: f.units(),
                    contribution: f.contribution(slice),
                    level: f.arp.priority_level,
                    seq: f.admitted_seq,
                })
                .collect(),
            PreemptionScope::UeContext => {
                let mut by_ue: BTreeMap<UeId, (Candidate, bool)> = BTreeMap::new();
                for f in live {
                    let (c, ok) = by_ue.entry(f.ue_id).or_insert_with(|| {
                        (Candidate { flows: Vec::new(), cost: 0, contribution: 0, level: 15, seq: 0 }, true)
                    });
                    c.flows.push(f.flow_id);
                    c.cost += f.units();
                    c.contribution += f.contribution(slice);
                    c.level = c.level.min(f.arp.priority_level);
                    c.seq = c.seq.max(f.admitted_seq);
                    *ok &= incoming.may_preempt(&f.arp);
                }
                by_ue.into_values().filter(|(_, ok)| *ok).map(|(c, _)| c).collect()
            }
        };
        out.retain(|c| c.contribution > 0);
        out.sort_by(|a, b| b.level.cmp(&a.level).then(b.seq.cmp(&a.seq)).then(b.flows.cmp(&a.flows)));
        out
    }

    /// Evaluates `req` and applies the outcome: admits (after releasing any
    /// victims), queues, or rejects.
    pub fn admit_request(&mut self, req: &AdmissionRequest, policy: &AdmissionPolicy, now: SimTime) -> AdmissionDecision {
        match self.evaluate(req, policy) {
            AdmissionPlan::Admit => {
                self.commit(req, &[], now);
                AdmissionDecision::Admit
            }
            AdmissionPlan::Preempt { victims } => {
                let released = self.commit(req, &victims, now);
                AdmissionDecision::PreemptAndAdmit { victims: released }
            }
            AdmissionPlan::Refuse(reason) => AdmissionDecision::Reject { wait_time: None, reason },
            AdmissionPlan::NoFit(reason) => {
                let slice = req.queue_slice();
                let depth = self.queue.iter().filter(|q| q.slice == slice).count();
                if policy.queueing && depth < policy.queue_capacity as usize {
                    let id = self.bump_seq();
                    let entry = QueuedRequest {
                        id,
                        request: req.clone(),
                        enqueued_at: now,
                        seq: id,
                        priority: req.priority_level(),
                        delay_critical: req.is_delay_critical(),
                        slice,
                    };
                    let key = entry.key(policy.delay_critical_first);
                    let at = self.queue.partition_point(|q| q.key(policy.delay_critical_first) < key);
                    self.queue.insert(at, entry);
                    let position = self.queue[..at].iter().filter(|q| q.slice == slice).count();
                    AdmissionDecision::Queue { position }
                } else {
                    let reason = if policy.queueing { RejectReason::QueueFull } else { reason };
                    AdmissionDecision::Reject { wait_time: wait_time_for(req.kind, policy), reason }
                }
            }
        }
    }

    fn bump_seq(&mut self) -> u64 {
        self.next_seq += 1;
        self.next_seq
    }

    /// Releases `victims`, then reserves every flow of `req`. Returns the ids
    /// of released flows.
    fn commit(&mut self, req: &AdmissionRequest, victims: &[EvictionUnit], now: SimTime) -> Vec<FlowId> {
        let mut released = Vec::new();
        for unit in victims {
            for id in &unit.flows {
                let victim = self.flows[id];
                let by = unit.evicted_by;
                let lawful = by.preemption_capability
                    && victim.arp.preemption_vulnerability
                    && by.priority_level < victim.arp.priority_level;
                if !lawful {
                    self.eviction_violations.push(*id);
                }
                if let Some(f) = self.remove_flow(*id) {
                    self.evicted.push(f);
                }
                released.push(*id);
            }
        }
        for f in &req.flows {
            let (dedicated, shared) = match f.reserved_demand() {
                0 => (0, 0),
                d => self.pools.reserve(&f.snssai, d),
            };
            *self.plmn_used.entry(req.serving_plmn).or_insert(0) += dedicated + shared;
            let admitted_seq = self.bump_seq();
            self.flows.insert(
                f.flow_id,
                AdmittedFlow {
                    flow_id: f.flow_id,
                    ue_id: req.ue_id,
                    arp: f.arp,
                    resource_type: f.resource_type,
                    snssai: f.snssai,
                    plmn: req.serving_plmn,
                    dedicated_units: dedicated,
                    shared_units: shared,
                    admitted_seq,
                    admitted_at: now,
                },
            );
        }
        released
    }

    fn remove_flow(&mut self, id: FlowId) -> Option<AdmittedFlow> {
        let f = self.flows.remove(&id)?;
        self.pools.give_back(&f.snssai, f.dedicated_units, f.shared_units);
        if let Some(u) = self.plmn_used.get_mut(&f.plmn) {
            *u -= f.units();
        }
        Some(f)
    }

    /// Releases one flow or a whole UE context and returns what was freed.
    /// The reason is informational; bookkeeping is identical.
    pub fn release_connection(
        &mut self,
        target: ReleaseTarget,
        _reason: ReleaseReason,
    ) -> Result<Vec<AdmittedFlow>, UnknownTarget> {
        let ids: Vec<FlowId> = match target {
            ReleaseTarget::Flow(id) => self.flows.contains_key(&id).then_some(alloc::vec![id]).unwrap_or_default(),
            ReleaseTarget::Ue(ue) => self.ue_flows(ue).map(|f| f.flow_id).collect(),
        };
        if ids.is_empty() {
            return Err(UnknownTarget(target));
        }
        Ok(ids.into_iter().filter_map(|id| self.remove_flow(id)).collect())
    }

    /// Flows evicted by pre-emption since the last call.
    pub fn drain_evicted(&mut self) -> Vec<AdmittedFlow> {
        core::mem::take(&mut self.evicted)
    }

    /// Drops queued requests of `ue` without a decision.
    pub fn withdraw_queued(&mut self, ue: UeId) -> usize {
        let before = self.queue.len();
        self.queue.retain(|q| q.request.ue_id != ue);
        before - self.queue.len()
    }

    /// Re-evaluates queued requests in (ARP, enqueue time) order. Requests
    /// waiting longer than the queue timeout are rejected first.
    pub fn process_queue(&mut self, policy: &AdmissionPolicy, now: SimTime) -> Vec<QueueOutcome> {
        self.process_queue_where(policy, now, |_| true)
    }

    /// As `process_queue`, restricted to entries matching `filter`; the
    /// others are left untouched.
    pub fn process_queue_where(
        &mut self,
        policy: &AdmissionPolicy,
        now: SimTime,
        filter: impl Fn(&QueuedRequest) -> bool,
    ) -> Vec<QueueOutcome> {
        let mut out = Vec::new();
        let mut kept = Vec::with_capacity(self.queue.len());
        let mut untouched = Vec::new();
        for q in core::mem::take(&mut self.queue) {
            if !filter(&q) {
                untouched.push(q);
            } else if now.since(q.enqueued_at) > policy.queue_timeout {
                out.push(QueueOutcome {
                    entry_id: q.id,
                    decision: AdmissionDecision::Reject {
                        wait_time: wait_time_for(q.request.kind, policy),
                        reason: RejectReason::QueueTimeout,
                    },
                    waited: now.since(q.enqueued_at),
                    request: q.request,
                });
            } else {
                kept.push(q);
            }
        }
        for q in kept {
            let decision = match self.evaluate(&q.request, policy) {
                AdmissionPlan::Admit => {
                    self.commit(&q.request, &[], now);
                    Some(AdmissionDecision::Admit)
                }
                AdmissionPlan::Preempt { victims } => {
                    let released = self.commit(&q.request, &victims, now);
                    Some(AdmissionDecision::PreemptAndAdmit { victims: released })
                }
                AdmissionPlan::Refuse(reason) => Some(AdmissionDecision::Reject { wait_time: None, reason }),
                AdmissionPlan::NoFit(_) => None,
            };
            match decision {
                Some(decision) => out.push(QueueOutcome {
                    entry_id: q.id,
                    waited: now.since(q.enqueued_at),
                    request: q.request,
                    decision,
                }),
                None => self.queue.push(q),
            }
        }
        if !untouched.is_empty() {
            self.queue.extend(untouched);
            let dc = policy.delay_critical_first;
            self.queue.sort_by_key(|q| q.key(dc));
        }
        out
    }

    /// Recomputes all pool counters from the admitted-flow table and checks
    /// every eviction made so far.
    pub fn audit(&self) -> Result<(), Vec<AuditViolation>> {
        let mut v: Vec<AuditViolation> =
            self.eviction_violations.iter().map(|id| AuditViolation::EvictionRule { victim: *id }).collect();
        let mut shared_total = 0;
        for pool in &self.pools.slices {
            let (mut ded, mut shr) = (0, 0);
            for f in self.flows.values().filter(|f| f.snssai == pool.snssai) {
                ded += f.dedicated_units;
                shr += f.shared_units;
            }
            shared_total += shr;
            if ded != pool.used_dedicated {
                v.push(AuditViolation::DedicatedMismatch { slice: pool.snssai, recorded: pool.used_dedicated, summed: ded });
            }
            if shr != pool.used_shared {
                v.push(AuditViolation::SharedSliceMismatch { slice: pool.snssai, recorded: pool.used_shared, summed: shr });
            }
            if pool.used_dedicated > pool.dedicated_capacity || (!pool.uses_shared && pool.used_shared > 0) {
                v.push(AuditViolation::OverCapacity { slice: pool.snssai });
            }
        }
        if shared_total != self.pools.shared.used {
            v.push(AuditViolation::SharedMismatch { recorded: self.pools.shared.used, summed: shared_total });
        }
        if self.pools.shared.used > self.pools.shared.capacity {
            v.push(AuditViolation::SharedOverCapacity);
        }
        for f in self.flows.values() {
            if f.resource_type == ResourceType::NonGbr && f.units() > 0 {
                v.push(AuditViolation::FlowUnits { flow: f.flow_id });
            }
        }
        let mut by_plmn: BTreeMap<PlmnId, u32> = BTreeMap::new();
        for f in self.flows.values() {
            *by_plmn.entry(f.plmn).or_insert(0) += f.units();
        }
        for (plmn, used) in &self.plmn_used {
            if by_plmn.get(plmn).copied().unwrap_or(0) != *used {
                v.push(AuditViolation::PlmnUsage { plmn: *plmn });
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }
}

fn wait_time_for(kind: AdmissionKind, policy: &AdmissionPolicy) -> Option<SimDuration> {
    if kind.carries_wait_time() && !policy.wait_time.is_zero() {
        Some(policy.wait_time)
    } else {
        None
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    flows: Vec<FlowId>,
    cost: u32,
    contribution: u32,
    level: u8,
    seq: u64,
}

/// Chooses the cheapest set of candidates whose contributions cover
/// `deficit`. Candidates arrive in eviction-preference order; among equally
/// cheap sets the one that includes the most preferred candidates wins.
fn select_victims(candidates: &[Candidate], deficit: u32) -> Option<Vec<usize>> {
    const INF: u64 = u64::MAX;
    let n = candidates.len();
    let d = deficit as usize;
    // suffix[i][r]: min cost using candidates i.. to free at least r units.
    let width = d + 1;
    let mut suffix = alloc::vec![INF; (n + 1) * width];
    suffix[n * width] = 0;
    for i in (0..n).rev() {
        let c = &candidates[i];
        for r in 0..=d {
            let skip = suffix[(i + 1) * width + r];
            let rest = suffix[(i + 1) * width + r.saturating_sub(c.contribution as usize)];
            let take = if rest == INF { INF } else { rest + c.cost as u64 };
            suffix[i * width + r] = skip.min(take);
        }
    }
    if suffix[d] == INF {
        return None;
    }
    let mut chosen = Vec::new();
    let mut r = d;
    for (i, c) in candidates.iter().enumerate() {
        if r == 0 {
            break;
        }
        let after = r.saturating_sub(c.contribution as usize);
        let rest = suffix[(i + 1) * width + after];
        if rest != INF && rest + c.cost as u64 == suffix[i * width + r] {
            chosen.push(i);
            r = after;
        }
    }
    Some(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const A: Snssai = Snssai::new(1, None);
    const B: Snssai = Snssai::new(2, None);

    fn plmn() -> PlmnId {
        PlmnId::new(1, 1, false).unwrap()
    }

    fn pools(ded_a: u32, ded_b: u32, shared: u32) -> PoolConfig {
        PoolConfig {
            shared_capacity: shared,
            slices: vec![
                SliceConfig { snssai: A, dedicated_capacity: ded_a, uses_shared: shared > 0 },
                SliceConfig { snssai: B, dedicated_capacity: ded_b, uses_shared: shared > 0 },
            ],
        }
    }

    fn flow(ue: u32, local: u32, level: u8, cap: bool, vul: bool, slice: Snssai, demand: u32) -> QosFlowRequest {
        QosFlowRequest {
            flow_id: FlowId::compose(UeId(ue), local),
            arp: ArpProfile::new(level, cap, vul).unwrap(),
            resource_type: ResourceType::Gbr,
            snssai: slice,
            demand,
        }
    }

    fn req(kind: AdmissionKind, flows: Vec<QosFlowRequest>) -> AdmissionRequest {
        AdmissionRequest {
            kind,
            cause: Some(EstablishmentCause::MoData),
            ue_id: flows.first().map(|f| f.flow_id.ue()).unwrap_or(UeId(0)),
            flows,
            serving_plmn: plmn(),
        }
    }

    fn setup(flows: Vec<QosFlowRequest>) -> AdmissionRequest {
        req(AdmissionKind::InitialSetup, flows)
    }

    #[test]
    fn non_gbr_admitted_without_units() {
        let mut cell = CellState::new(&pools(0, 0, 0));
        let f = QosFlowRequest { resource_type: ResourceType::NonGbr, ..flow(1, 0, 9, false, false, A, 5) };
        assert_eq!(cell.admit_request(&setup(vec![f]), &AdmissionPolicy::default(), SimTime::ZERO), AdmissionDecision::Admit);
        assert_eq!(cell.pools.slice(&A).unwrap().used(), 0);
        assert!(cell.audit().is_ok());
    }

    #[test]
    fn preempts_low_priority_vulnerable_flow() {
        let policy = AdmissionPolicy::default();
        let mut cell = CellState::new(&pools(10, 10, 0));
        assert!(cell.admit_request(&setup(vec![flow(1, 0, 15, false, true, A, 10)]), &policy, SimTime::ZERO).is_admitted());
        let d = cell.admit_request(&setup(vec![flow(2, 0, 1, true, false, A, 6)]), &policy, SimTime::ZERO);
        assert_eq!(d, AdmissionDecision::PreemptAndAdmit { victims: vec![FlowId::compose(UeId(1), 0)] });
        assert_eq!(cell.pools.slice(&A).unwrap().used(), 6);
        assert!(cell.audit().is_ok());
    }

    #[test]
    fn rejects_when_no_lawful_victim() {
        let policy = AdmissionPolicy::default();
        let mut cell = CellState::new(&pools(10, 10, 0));
        cell.admit_request(&setup(vec![flow(1, 0, 5, false, true, A, 5)]), &policy, SimTime::ZERO);
        cell.admit_request(&setup(vec![flow(2, 0, 9, false, false, A, 5)]), &policy, SimTime::ZERO);
        let d = cell.admit_request(&setup(vec![flow(3, 0, 5, true, false, A, 3)]), &policy, SimTime::ZERO);
        assert_eq!(
            d,
            AdmissionDecision::Reject { wait_time: Some(SimDuration::from_secs(4)), reason: RejectReason::NoResources }
        );
        let ho = cell.admit_request(&req(AdmissionKind::HandoverIn, vec![flow(4, 0, 5, true, false, A, 3)]), &policy, SimTime::ZERO);
        assert_eq!(ho, AdmissionDecision::Reject { wait_time: None, reason: RejectReason::NoResources });
    }

    #[test]
    fn unknown_slice_rejected_without_wait_time() {
        let mut cell = CellState::new(&pools(10, 10, 0));
        let d = cell.admit_request(
            &setup(vec![flow(1, 0, 5, false, false, Snssai::new(9, None), 1)]),
            &AdmissionPolicy::default(),
            SimTime::ZERO,
        );
        assert_eq!(d, AdmissionDecision::Reject { wait_time: None, reason: RejectReason::UnknownSlice });
    }

    #[test]
    fn victim_choice_minimises_evicted_demand_then_prefers_lowest_priority() {
        let policy = AdmissionPolicy::default();
        let mut cell = CellState::new(&pools(12, 0, 0));
        cell.admit_request(&setup(vec![flow(1, 0, 10, false, true, A, 5)]), &policy, SimTime::ZERO);
        cell.admit_request(&setup(vec![flow(2, 0, 12, false, true, A, 3)]), &policy, SimTime::ZERO);
        cell.admit_request(&setup(vec![flow(3, 0, 11, false, true, A, 3)]), &policy, SimTime::ZERO);
        // Need 3 units: either 3-unit flow suffices; ARP 12 goes first.
        let d = cell.admit_request(&setup(vec![flow(9, 0, 2, true, false, A, 4)]), &policy, SimTime::ZERO);
        assert_eq!(d, AdmissionDecision::PreemptAndAdmit { victims: vec![FlowId::compose(UeId(2), 0)] });
    }

    #[test]
    fn ue_context_preemption_releases_all_flows() {
        let policy = AdmissionPolicy { preemption_scope: PreemptionScope::UeContext, ..Default::default() };
        let mut cell = CellState::new(&pools(9, 0, 0));
        let victim = setup(vec![
            flow(1, 0, 14, false, true, A, 3),
            flow(1, 1, 14, false, true, A, 3),
            flow(1, 2, 14, false, true, A, 3),
        ]);
        assert!(cell.admit_request(&victim, &policy, SimTime::ZERO).is_admitted());
        let d = cell.admit_request(&setup(vec![flow(2, 0, 1, true, false, A, 2)]), &policy, SimTime::ZERO);
        let AdmissionDecision::PreemptAndAdmit { victims } = d else { panic!("expected pre-emption, got {d:?}") };
        assert_eq!(victims.len(), 3);
        assert_eq!(cell.ue_flows(UeId(1)).count(), 0);
        assert_eq!(cell.pools.slice(&A).unwrap().used(), 2);
        assert!(cell.audit().is_ok());
    }

    #[test]
    fn ue_context_skips_ue_with_protected_flow() {
        let policy = AdmissionPolicy { preemption_scope: PreemptionScope::UeContext, ..Default::default() };
        let mut cell = CellState::new(&pools(6, 0, 0));
        cell.admit_request(
            &setup(vec![flow(1, 0, 14, false, true, A, 3), flow(1, 1, 14, false, false, A, 3)]),
            &policy,
            SimTime::ZERO,
        );
        let d = cell.admit_request(&setup(vec![flow(2, 0, 1, true, false, A, 2)]), &policy, SimTime::ZERO);
        assert!(matches!(d, AdmissionDecision::Reject { .. }));
    }

    #[test]
    fn release_conserves_units() {
        let policy = AdmissionPolicy::default();
        let mut cell = CellState::new(&pools(4, 0, 6));
        cell.admit_request(&setup(vec![flow(1, 0, 5, false, false, A, 3)]), &policy, SimTime::ZERO);
        cell.admit_request(&setup(vec![flow(2, 0, 5, false, false, A, 5)]), &policy, SimTime::ZERO);
        let total = |c: &CellState| {
            let s = c.pools.slice(&A).unwrap();
            (s.used_dedicated, s.used_shared, c.pools.shared.used)
        };
        assert_eq!(total(&cell), (4, 4, 4));
        let released = cell.release_connection(ReleaseTarget::Flow(FlowId::compose(UeId(2), 0)), ReleaseReason::Normal).unwrap();
        assert_eq!((released[0].dedicated_units, released[0].shared_units), (1, 4));
        assert_eq!(total(&cell), (3, 0, 0));
        assert!(cell.audit().is_ok());
        assert_eq!(
            cell.release_connection(ReleaseTarget::Ue(UeId(42)), ReleaseReason::Normal),
            Err(UnknownTarget(ReleaseTarget::Ue(UeId(42))))
        );
    }

    #[test]
    fn shared_units_help_other_slices() {
        let policy = AdmissionPolicy::default();
        let mut cell = CellState::new(&pools(2, 2, 4));
        cell.admit_request(&setup(vec![flow(1, 0, 14, false, true, A, 6)]), &policy, SimTime::ZERO);
        assert_eq!(cell.pools.free_for(&B), Some(2));
        let d = cell.admit_request(&setup(vec![flow(2, 0, 1, true, false, B, 5)]), &policy, SimTime::ZERO);
        assert_eq!(d, AdmissionDecision::PreemptAndAdmit { victims: vec![FlowId::compose(UeId(1), 0)] });
        assert!(cell.audit().is_ok());
    }

    #[test]
    fn queueing_orders_by_arp_then_time() {
        let policy = AdmissionPolicy { queueing: true, preemption: false, ..Default::default() };
        let mut cell = CellState::new(&pools(4, 0, 0));
        cell.admit_request(&setup(vec![flow(1, 0, 5, false, false, A, 4)]), &policy, SimTime::ZERO);
        let d9 = cell.admit_request(&setup(vec![flow(2, 0, 9, false, false, A, 2)]), &policy, SimTime::from_millis(1));
        let d3 = cell.admit_request(&setup(vec![flow(3, 0, 3, false, false, A, 2)]), &policy, SimTime::from_millis(2));
        assert_eq!(d9, AdmissionDecision::Queue { position: 0 });
        assert_eq!(d3, AdmissionDecision::Queue { position: 0 });
        assert_eq!(cell.queue()[0].request.ue_id, UeId(3));

        assert!(cell.process_queue(&policy, SimTime::from_millis(3)).is_empty());
        cell.release_connection(ReleaseTarget::Ue(UeId(1)), ReleaseReason::Normal).unwrap();
        let out = cell.process_queue(&policy, SimTime::from_millis(4));
        let order: Vec<_> = out.iter().map(|o| o.request.ue_id).collect();
        assert_eq!(order, [UeId(3), UeId(2)]);
        assert!(out.iter().all(|o| o.decision == AdmissionDecision::Admit));
        assert!(cell.audit().is_ok());
    }

    #[test]
    fn queue_timeout_rejects_with_wait_time() {
        let policy = AdmissionPolicy { queueing: true, preemption: false, ..Default::default() };
        let mut cell = CellState::new(&pools(1, 0, 0));
        cell.admit_request(&setup(vec![flow(1, 0, 5, false, false, A, 1)]), &policy, SimTime::ZERO);
        cell.admit_request(&setup(vec![flow(2, 0, 5, false, false, A, 1)]), &policy, SimTime::ZERO);
        assert!(cell.process_queue(&policy, SimTime::from_secs(2)).is_empty());
        let out = cell.process_queue(&policy, SimTime::from_micros(2_000_001));
        assert_eq!(
            out[0].decision,
            AdmissionDecision::Reject { wait_time: Some(SimDuration::from_secs(4)), reason: RejectReason::QueueTimeout }
        );
        assert!(cell.queue().is_empty());
    }

    #[test]
    fn queue_capacity_is_per_slice() {
        let policy = AdmissionPolicy { queueing: true, preemption: false, queue_capacity: 1, ..Default::default() };
        let mut cell = CellState::new(&pools(0, 0, 0));
        let qa = cell.admit_request(&setup(vec![flow(1, 0, 5, false, false, A, 1)]), &policy, SimTime::ZERO);
        let qa2 = cell.admit_request(&setup(vec![flow(2, 0, 5, false, false, A, 1)]), &policy, SimTime::ZERO);
        let qb = cell.admit_request(&setup(vec![flow(3, 0, 5, false, false, B, 1)]), &policy, SimTime::ZERO);
        assert_eq!(qa, AdmissionDecision::Queue { position: 0 });
        assert!(matches!(qa2, AdmissionDecision::Reject { reason: RejectReason::QueueFull, .. }));
        assert_eq!(qb, AdmissionDecision::Queue { position: 0 });
    }

    #[test]
    fn plmn_quota_limits_units() {
        let policy = AdmissionPolicy { plmn_quotas: vec![PlmnQuota { plmn: plmn(), max_units: 3 }], ..Default::default() };
        let mut cell = CellState::new(&pools(10, 0, 0));
        assert!(cell.admit_request(&setup(vec![flow(1, 0, 5, false, false, A, 3)]), &policy, SimTime::ZERO).is_admitted());
        let d = cell.admit_request(&setup(vec![flow(2, 0, 1, true, false, A, 1)]), &policy, SimTime::ZERO);
        assert!(matches!(d, AdmissionDecision::Reject { reason: RejectReason::PlmnQuota, .. }));
        assert!(cell.audit().is_ok());
    }

    #[test]
    fn delay_critical_first_option() {
        let policy = AdmissionPolicy { queueing: true, preemption: false, delay_critical_first: true, ..Default::default() };
        let mut cell = CellState::new(&pools(0, 0, 0));
        cell.admit_request(&setup(vec![flow(1, 0, 5, false, false, A, 1)]), &policy, SimTime::ZERO);
        let dc = QosFlowRequest { resource_type: ResourceType::DelayCriticalGbr, ..flow(2, 0, 5, false, false, A, 1) };
        let d = cell.admit_request(&setup(vec![dc]), &policy, SimTime::from_millis(1));
        assert_eq!(d, AdmissionDecision::Queue { position: 0 });
    }

    #[test]
    fn multi_flow_request_is_atomic() {
        let policy = AdmissionPolicy { preemption: false, ..Default::default() };
        let mut cell = CellState::new(&pools(4, 1, 0));
        let d = cell.admit_request(&setup(vec![flow(1, 0, 5, false, false, A, 4), flow(1, 1, 5, false, false, B, 2)]), &policy, SimTime::ZERO);
        assert!(matches!(d, AdmissionDecision::Reject { .. }));
        assert_eq!(cell.flows().count(), 0);
        assert_eq!(cell.pools.slice(&A).unwrap().used(), 0);
    }
}
