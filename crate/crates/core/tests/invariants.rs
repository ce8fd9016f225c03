use std::collections::BTreeMap;

use nracc_core::admission::{
    AdmissionDecision, AdmissionKind, AdmissionPolicy, AdmissionRequest, CellState, PoolConfig, ReleaseReason,
    ReleaseTarget, SliceConfig,
};
use nracc_core::engine::queue::EventQueue;
use nracc_core::engine::{self, Metric, RecordKind, RunOptions};
use nracc_core::model::{
    AccessCategory, AccessIdentitySet, ArpProfile, CellId, FlowId, PlmnId, QosFlowRequest, ResourceType, Snssai,
    UeId, UeProfile,
};
use nracc_core::preventive::{
    paging_control_filter, uac_check, PagingOrigin, PagingRequest, UacBarringEntry, UacConfig, UacDecision, UacDraw,
};
use nracc_core::scenario::{
    CellConfig, FlowTemplate, PopulationConfig, RequestKind, ScenarioConfig, TrafficModel,
};
use nracc_core::time::{SimDuration, SimTime};
use proptest::prelude::*;

const A: Snssai = Snssai::new(1, Some(1));
const B: Snssai = Snssai::new(1, Some(2));

fn plmn() -> PlmnId {
    PlmnId::new(1, 1, false).unwrap()
}

fn uac_entry() -> impl Strategy<Value = UacBarringEntry> {
    (1u8..64, 0.0f64..=1.0, 1u64..10_000_000, prop::sample::subsequence(vec![1u8, 2, 11, 12, 13, 14, 15], 0..=7))
        .prop_map(|(ac, factor, us, ais)| UacBarringEntry {
            category: AccessCategory::new(ac).unwrap(),
            barring_factor: factor,
            barring_time: SimDuration::from_micros(us),
            allowed_identities: ais.iter().map(|&a| nracc_core::model::AccessIdentity::new(a).unwrap()).collect(),
        })
}

fn uac_config() -> impl Strategy<Value = UacConfig> {
    (prop::collection::vec(uac_entry(), 0..12), any::<bool>()).prop_map(|(mut entries, jitter)| {
        entries.sort_by_key(|e| e.category.value());
        entries.dedup_by_key(|e| e.category.value());
        UacConfig { entries, jitter }
    })
}

proptest! {
    #[test]
    fn access_category_zero_is_never_barred(
        cfg in uac_config(),
        ais in prop::collection::vec(0u8..16, 0..4),
        factor in 0.0f64..1.0,
        jitter in 0.0f64..1.0,
        wait in prop::option::of(0u64..20_000_000),
        now in 0u64..10_000_000,
    ) {
        prop_assert!(cfg.validate().is_ok());
        let mut profile = UeProfile::regular(UeId(1), plmn()).with_identities(&ais);
        profile.wait_time_until = wait.map(SimTime::from_micros);
        let d = uac_check(
            AccessCategory::MT_ACCESS,
            profile.effective_identities(),
            &cfg,
            UacDraw::with_jitter(factor, jitter),
            SimTime::from_micros(now),
            &profile,
        );
        prop_assert_eq!(d, UacDecision::Allowed);
    }

    #[test]
    fn barred_hold_stays_within_jitter_range(entry in uac_entry(), jitter in 0.0f64..=1.0, now in 0u64..1_000_000) {
        let entry = UacBarringEntry { allowed_identities: AccessIdentitySet::EMPTY, ..entry };
        let cfg = UacConfig { entries: vec![entry], jitter: true };
        let profile = UeProfile::regular(UeId(1), plmn());
        let now = SimTime::from_micros(now);
        // Factor draw of 1.0 is never below the barring factor unless it is 1.
        let d = uac_check(entry.category, profile.effective_identities(), &cfg, UacDraw::with_jitter(1.0, jitter), now, &profile);
        if entry.barring_factor < 1.0 {
            let UacDecision::Barred { until, .. } = d else { panic!("expected barring, got {d:?}") };
            let hold = until.since(now).as_micros() as f64;
            let t = entry.barring_time.as_micros() as f64;
            prop_assert!(hold >= (0.7 * t).floor() && hold <= (1.3 * t).ceil());
        }
    }
}

// -- admission --------------------------------------------------------------

#[derive(Debug, Clone)]
enum Op {
    Request { kind: AdmissionKind, flows: Vec<(u8, bool, bool, u8, bool, u32)> },
    ReleaseFlow(usize),
    ReleaseUe(usize),
    ProcessQueue(u64),
}

fn op() -> impl Strategy<Value = Op> {
    let flow = (1u8..16, any::<bool>(), any::<bool>(), 0u8..3, any::<bool>(), 0u32..6);
    let kind = prop::sample::select(vec![
        AdmissionKind::InitialSetup,
        AdmissionKind::Resume,
        AdmissionKind::HandoverIn,
        AdmissionKind::QosFlowSetup,
    ]);
    prop_oneof![
        4 => (kind, prop::collection::vec(flow, 1..4)).prop_map(|(kind, flows)| Op::Request { kind, flows }),
        2 => any::<prop::sample::Index>().prop_map(|i| Op::ReleaseFlow(i.index(1 << 16))),
        1 => any::<prop::sample::Index>().prop_map(|i| Op::ReleaseUe(i.index(1 << 16))),
        1 => (0u64..400_000).prop_map(Op::ProcessQueue),
    ]
}

fn policy() -> impl Strategy<Value = AdmissionPolicy> {
    (any::<bool>(), any::<bool>(), any::<bool>(), 0u32..4, any::<bool>()).prop_map(|(pre, ctx, queue, cap, dc)| {
        AdmissionPolicy {
            preemption: pre,
            preemption_scope: if ctx {
                nracc_core::admission::PreemptionScope::UeContext
            } else {
                nracc_core::admission::PreemptionScope::Flow
            },
            queueing: queue,
            queue_capacity: cap,
            queue_timeout: SimDuration::from_millis(250),
            delay_critical_first: dc,
            ..AdmissionPolicy::default()
        }
    })
}

fn pools() -> impl Strategy<Value = PoolConfig> {
    (0u32..12, 0u32..10, any::<bool>(), 0u32..10, any::<bool>()).prop_map(|(shared, da, sa, db, sb)| PoolConfig {
        shared_capacity: shared,
        slices: vec![
            SliceConfig { snssai: A, dedicated_capacity: da, uses_shared: sa },
            SliceConfig { snssai: B, dedicated_capacity: db, uses_shared: sb },
        ],
    })
}

/// Recomputes every counter from the flow table.
fn check_conservation(state: &CellState, cfg: &PoolConfig) -> Result<(), TestCaseError> {
    let pools = state.pools();
    let shared: u32 = state.flows().map(|f| f.shared_units).sum();
    prop_assert_eq!(pools.shared.used, shared);
    prop_assert!(shared <= cfg.shared_capacity);
    for s in &cfg.slices {
        let p = pools.slice(&s.snssai).unwrap();
        let ded: u32 = state.flows().filter(|f| f.snssai == s.snssai).map(|f| f.dedicated_units).sum();
        let shr: u32 = state.flows().filter(|f| f.snssai == s.snssai).map(|f| f.shared_units).sum();
        prop_assert_eq!(p.used_dedicated, ded);
        prop_assert_eq!(p.used_shared, shr);
        prop_assert!(ded <= s.dedicated_capacity);
        prop_assert!(shr == 0 || s.uses_shared);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn admission_state_stays_consistent(cfg in pools(), policy in policy(), ops in prop::collection::vec(op(), 1..60)) {
        let mut state = CellState::new(&cfg);
        let mut next_ue = 1u32;
        let mut now = SimTime::ZERO;
        for op in ops {
            now += SimDuration::from_millis(10);
            match op {
                Op::Request { kind, flows } => {
                    let ue = UeId(next_ue);
                    next_ue += 1;
                    let flows: Vec<QosFlowRequest> = flows
                        .into_iter()
                        .enumerate()
                        .map(|(i, (level, cap, vul, rt, in_a, demand))| QosFlowRequest {
                            flow_id: FlowId::compose(ue, i as u32),
                            arp: ArpProfile { priority_level: level, preemption_capability: cap, preemption_vulnerability: vul },
                            resource_type: [ResourceType::Gbr, ResourceType::DelayCriticalGbr, ResourceType::NonGbr][rt as usize],
                            snssai: if in_a { A } else { B },
                            demand,
                        })
                        .collect();
                    let req = AdmissionRequest { kind, cause: None, flows: flows.clone(), ue_id: ue, serving_plmn: plmn() };
                    let before: BTreeMap<FlowId, ArpProfile> = state.flows().map(|f| (f.flow_id, f.arp)).collect();
                    let decision = state.admit_request(&req, &policy, now);
                    match &decision {
                        AdmissionDecision::Reject { wait_time, .. } => {
                            prop_assert!(wait_time.is_none() || kind.carries_wait_time());
                            prop_assert!(flows.iter().all(|f| state.flow(f.flow_id).is_none()));
                        }
                        AdmissionDecision::PreemptAndAdmit { victims } => {
                            prop_assert!(!victims.is_empty());
                            for v in victims {
                                let arp = before[v];
                                prop_assert!(flows.iter().any(|f| f.arp.may_preempt(&arp)), "unlawful victim {v:?}");
                                prop_assert!(state.flow(*v).is_none());
                            }
                        }
                        _ => {}
                    }
                    if decision.is_admitted() {
                        for f in &flows {
                            let a = state.flow(f.flow_id).expect("admitted flow present");
                            let want = if f.resource_type == ResourceType::NonGbr { 0 } else { f.demand };
                            prop_assert_eq!(a.units(), want);
                        }
                    }
                    state.drain_evicted();
                }
                Op::ReleaseFlow(i) => {
                    let ids: Vec<FlowId> = state.flows().map(|f| f.flow_id).collect();
                    if !ids.is_empty() {
                        let id = ids[i % ids.len()];
                        let units = state.flow(id).unwrap().units();
                        let used_before: u32 = state.flows().map(|f| f.units()).sum();
                        state.release_connection(ReleaseTarget::Flow(id), ReleaseReason::Normal).unwrap();
                        let used_after: u32 = state.flows().map(|f| f.units()).sum();
                        prop_assert_eq!(used_before - used_after, units);
                    }
                    prop_assert!(state.release_connection(ReleaseTarget::Flow(FlowId(u64::MAX)), ReleaseReason::Normal).is_err());
                }
                Op::ReleaseUe(i) => {
                    let ues: Vec<UeId> = state.flows().map(|f| f.ue_id).collect();
                    if !ues.is_empty() {
                        let ue = ues[i % ues.len()];
                        let n = state.ue_flows(ue).count();
                        let released = state.release_connection(ReleaseTarget::Ue(ue), ReleaseReason::Normal).unwrap();
                        prop_assert_eq!(released.len(), n);
                        prop_assert_eq!(state.ue_flows(ue).count(), 0);
                    }
                }
                Op::ProcessQueue(dt) => {
                    now += SimDuration::from_micros(dt);
                    for o in state.process_queue(&policy, now) {
                        if let AdmissionDecision::Reject { wait_time: Some(_), .. } = o.decision {
                            prop_assert!(o.request.kind.carries_wait_time());
                        }
                    }
                    state.drain_evicted();
                }
            }
            check_conservation(&state, &cfg)?;
            prop_assert!(state.audit().is_ok(), "{:?}", state.audit());
            for q in state.queue() {
                let n = state.queue().iter().filter(|o| o.slice() == q.slice()).count();
                prop_assert!(n <= policy.queue_capacity as usize);
            }
        }
    }

    #[test]
    fn queue_serves_best_arp_then_oldest(levels in prop::collection::vec(1u8..16, 1..12), cap in 1u32..8) {
        let cfg = PoolConfig { shared_capacity: 0, slices: vec![SliceConfig { snssai: A, dedicated_capacity: cap, uses_shared: false }] };
        let policy = AdmissionPolicy { queueing: true, queue_capacity: 64, preemption: false, ..AdmissionPolicy::default() };
        let mut state = CellState::new(&cfg);
        let gbr = |ue: u32, level: u8, demand: u32| QosFlowRequest {
            flow_id: FlowId::compose(UeId(ue), 0),
            arp: ArpProfile { priority_level: level, preemption_capability: false, preemption_vulnerability: false },
            resource_type: ResourceType::Gbr,
            snssai: A,
            demand,
        };
        let req = |f: QosFlowRequest| AdmissionRequest { kind: AdmissionKind::QosFlowSetup, cause: None, flows: vec![f], ue_id: f.flow_id.ue(), serving_plmn: plmn() };
        prop_assert_eq!(state.admit_request(&req(gbr(1000, 15, cap)), &policy, SimTime::ZERO), AdmissionDecision::Admit);
        for (i, &level) in levels.iter().enumerate() {
            let d = state.admit_request(&req(gbr(i as u32 + 1, level, 1)), &policy, SimTime::from_millis(i as u64));
            prop_assert!(matches!(d, AdmissionDecision::Queue { .. }), "{d:?}");
        }
        state.release_connection(ReleaseTarget::Ue(UeId(1000)), ReleaseReason::Normal).unwrap();
        let out = state.process_queue(&policy, SimTime::from_millis(100));
        let served: Vec<(u8, u32)> = out.iter().map(|o| (o.request.flows[0].arp.priority_level, o.request.ue_id.0)).collect();
        let mut expected: Vec<(u8, u32)> = levels.iter().enumerate().map(|(i, &l)| (l, i as u32 + 1)).collect();
        expected.sort();
        expected.truncate(cap as usize);
        prop_assert_eq!(served, expected);
        prop_assert!(out.iter().all(|o| o.decision == AdmissionDecision::Admit));
    }
}

// -- paging and event queue -------------------------------------------------

proptest! {
    #[test]
    fn paging_filter_partitions_by_priority(
        reqs in prop::collection::vec((1u8..9, 0u64..3_000_000, any::<bool>()), 0..60),
        budget in 0usize..20,
        timeout_ms in 1u64..2_000,
    ) {
        let now = SimTime::from_secs(3);
        let timeout = SimDuration::from_millis(timeout_ms);
        let queue: Vec<PagingRequest> = reqs
            .iter()
            .enumerate()
            .map(|(i, &(priority, t, cn))| PagingRequest {
                id: i as u64,
                target_ue: UeId(i as u32 + 1),
                priority,
                origin: if cn { PagingOrigin::Cn } else { PagingOrigin::Ran },
                enqueue_time: SimTime::from_micros(t),
            })
            .collect();
        let sel = paging_control_filter(queue.clone(), budget, now, timeout);
        prop_assert_eq!(sel.to_page.len(), budget.min(queue.len()));
        let mut ids: Vec<u64> = sel.to_page.iter().chain(&sel.deferred).chain(&sel.dropped).map(|r| r.id).collect();
        ids.sort();
        prop_assert_eq!(ids, (0..queue.len() as u64).collect::<Vec<_>>());
        let worst_paged = sel.to_page.iter().map(|r| r.priority).max();
        let best_left = sel.deferred.iter().chain(&sel.dropped).map(|r| r.priority).min();
        if let (Some(w), Some(b)) = (worst_paged, best_left) {
            prop_assert!(w <= b);
        }
        prop_assert!(sel.dropped.iter().all(|r| now.since(r.enqueue_time) > timeout));
        prop_assert!(sel.deferred.iter().all(|r| now.since(r.enqueue_time) <= timeout));
    }

    #[test]
    fn event_queue_pops_in_time_then_insertion_order(ops in prop::collection::vec(prop::option::of(0u64..1_000), 1..200)) {
        let mut q = EventQueue::default();
        let mut last: Option<(SimTime, u64)> = None;
        let mut label = 0u32;
        for op in ops {
            match op {
                Some(dt) => {
                    let at = q.now() + SimDuration::from_micros(dt);
                    q.schedule(at, label);
                    label += 1;
                }
                None => {
                    if let Some((t, seq, _)) = q.pop() {
                        prop_assert!(last.is_none_or(|l| (t, seq) > l));
                        prop_assert_eq!(q.now(), t);
                        last = Some((t, seq));
                    }
                }
            }
        }
        while let Some((t, seq, _)) = q.pop() {
            prop_assert!(last.is_none_or(|l| (t, seq) > l));
            last = Some((t, seq));
        }
    }
}

// -- whole runs -------------------------------------------------------------

fn small_scenario() -> impl Strategy<Value = ScenarioConfig> {
    let pop = (
        1u32..60,
        prop_oneof![
            (0.05f64..3.0).prop_map(|rate| TrafficModel::Poisson { rate, start: SimTime::ZERO }),
            (0u64..3_000_000, 0u64..2_000_000).prop_map(|(t, j)| TrafficModel::Burst {
                activation_time: SimTime::from_micros(t),
                jitter: SimDuration::from_micros(j)
            }),
            (1.0f64..40.0).prop_map(|rate| TrafficModel::PagingLoad { rate, priority_mix: vec![0.25, 0.25, 0.5] }),
        ],
        any::<bool>(),
        (1u8..16, any::<bool>(), any::<bool>(), 1u32..4, any::<bool>()),
        any::<bool>(),
    );
    (
        any::<u64>(),
        0.0f64..=1.0,
        2u16..64,
        1u32..6,
        0u32..12,
        any::<bool>(),
        any::<bool>(),
        prop::collection::vec(pop, 1..4),
    )
        .prop_map(|(seed, factor, preambles, max_attempts, capacity, queueing, two_step, pops)| {
            let mut cell = CellConfig::new(1);
            cell.uac = UacConfig::with_entries([UacBarringEntry {
                category: AccessCategory::MO_DATA,
                barring_factor: factor,
                barring_time: SimDuration::from_millis(500),
                allowed_identities: AccessIdentitySet::EMPTY,
            }])
            .unwrap();
            cell.rach.n_preambles = preambles;
            cell.rach.max_attempts = max_attempts;
            if two_step {
                cell.rach.mode = nracc_core::random_access::RaMode::TwoStep;
                cell.rach.small_cell = true;
            }
            cell.pools = PoolConfig {
                shared_capacity: capacity,
                slices: vec![
                    SliceConfig { snssai: A, dedicated_capacity: 2, uses_shared: true },
                    SliceConfig { snssai: B, dedicated_capacity: 2, uses_shared: true },
                ],
            };
            cell.admission.queueing = queueing;
            cell.admission.queue_timeout = SimDuration::from_millis(200);
            let populations = pops
                .into_iter()
                .enumerate()
                .map(|(i, (count, traffic, qos, (level, cap, vul, demand, in_a), respond))| {
                    let mut p = PopulationConfig::new(&format!("pop{i}"), count, 1, traffic);
                    let snssai = if in_a { A } else { B };
                    p.kind = if qos { RequestKind::QosFlow } else { RequestKind::Connection };
                    p.template.subscribed_slices = vec![snssai];
                    p.flows = vec![FlowTemplate {
                        arp: ArpProfile { priority_level: level, preemption_capability: cap, preemption_vulnerability: vul },
                        resource_type: ResourceType::Gbr,
                        snssai,
                        demand,
                    }];
                    p.holding_time = SimDuration::from_millis(700);
                    p.respond_to_paging = respond;
                    p
                })
                .collect();
            ScenarioConfig {
                name: "prop".into(),
                description: String::new(),
                duration: SimDuration::from_secs(6),
                seed,
                inter_gnb_delay: SimDuration::from_millis(5),
                randomize_beam: false,
                cells: vec![cell],
                populations,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn every_attempt_has_exactly_one_outcome(sc in small_scenario()) {
        let out = engine::run_with(&sc, sc.seed, RunOptions { retain_log: true, audit_every: Some(1) }).unwrap();
        let r = &out.report;
        prop_assert!(r.audit_violations.is_empty(), "{:?}", r.audit_violations);
        let mut dims: Vec<_> = r.rows.iter().map(|row| row.dims).collect();
        dims.dedup();
        for d in dims {
            let attempts = r.total_where(Metric::AttemptsGenerated, |x| *x == d);
            let outcomes: u64 = Metric::OUTCOMES.iter().map(|m| r.total_where(*m, |x| *x == d)).sum();
            prop_assert_eq!(attempts, outcomes, "dims {:?}", d);
        }
        // Log-side check: one outcome record per attempt record.
        let starts = out.log.records().iter().filter(|x| matches!(x.kind, RecordKind::AttemptStart { .. })).count();
        let ends = out.log.records().iter().filter(|x| matches!(x.kind, RecordKind::Outcome { .. })).count();
        prop_assert_eq!(starts, ends);
        // The clock never runs backwards.
        prop_assert!(out.log.records().windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn runs_are_reproducible(sc in small_scenario()) {
        let a = engine::run(&sc, sc.seed).unwrap().report;
        let b = engine::run(&sc, sc.seed).unwrap().report;
        prop_assert_eq!(&a, &b);
    }

    #[test]
    fn paging_load_does_not_perturb_backoff_draws(seed in any::<u64>(), rate in 1.0f64..50.0) {
        let mut base = ScenarioConfig {
            name: "independence".into(),
            description: String::new(),
            duration: SimDuration::from_secs(5),
            seed,
            inter_gnb_delay: SimDuration::from_millis(5),
            randomize_beam: false,
            cells: vec![CellConfig::new(1)],
            populations: vec![PopulationConfig::new(
                "burst",
                300,
                1,
                TrafficModel::Burst { activation_time: SimTime::from_secs(1), jitter: SimDuration::from_millis(50) },
            )],
        };
        base.cells[0].rach.n_preambles = 16;
        let mut paged = base.clone();
        paged.populations.push(PopulationConfig::new(
            "paged",
            500,
            1,
            TrafficModel::PagingLoad { rate, priority_mix: vec![0.5, 0.5] },
        ));
        let opts = RunOptions { retain_log: true, audit_every: None };
        let a = engine::run_with(&base, seed, opts).unwrap();
        let b = engine::run_with(&paged, seed, opts).unwrap();
        let backoff = |r: &nracc_core::engine::EventRecord| matches!(r.kind, RecordKind::RaRetry { .. });
        prop_assert!(a.log.records().iter().any(backoff));
        prop_assert_eq!(a.log.digest_where(backoff), b.log.digest_where(backoff));
        prop_assert!(b.report.total(Metric::PagingRequests) > 0);
        prop_assert_eq!(a.log.digest_where(|r| r.cell == Some(CellId(1)) && r.ue.is_some_and(|u| u.0 <= 300)),
            b.log.digest_where(|r| r.cell == Some(CellId(1)) && r.ue.is_some_and(|u| u.0 <= 300)));
    }
}
