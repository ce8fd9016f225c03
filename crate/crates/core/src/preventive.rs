//! Preventive access control: everything that can stop an attempt before a
//! preamble is sent. Cell barring and reservation, the unified access
//! control check, waitTime hold-off, and network-side paging control.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::model::{
    AccessCategory, AccessIdentity, AccessIdentitySet, CellId, GnbId, NpnId, PlmnId, RrcState, Tac, UeId, UeProfile,
};
use crate::time::{SimDuration, SimTime};

// ---------------------------------------------------------------------------
// Cell barring and reservation
// ---------------------------------------------------------------------------

fn default_barred_retry() -> SimDuration {
    SimDuration::from_secs(300)
}

#[cfg(feature = "serde")]
fn default_plmn_ids() -> Vec<PlmnId> {
    alloc::vec![crate::scenario::DEFAULT_PLMN]
}

/// Barring and reservation flags broadcast in MIB/SIB1.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct CellAccessInfo {
    pub cell_barred: bool,
    pub reserved_for_operator_use: bool,
    pub reserved_for_other_use: bool,
    pub reserved_for_future_use: bool,
    pub npn_ids: Vec<NpnId>,
    /// Defaults to the scenario PLMN when read from a file.
    #[cfg_attr(feature = "serde", serde(default = "default_plmn_ids"))]
    pub plmn_ids: Vec<PlmnId>,
    pub barred_retry_interval: SimDuration,
}

impl Default for CellAccessInfo {
    fn default() -> Self {
        CellAccessInfo {
            cell_barred: false,
            reserved_for_operator_use: false,
            reserved_for_other_use: false,
            reserved_for_future_use: false,
            npn_ids: Vec::new(),
            plmn_ids: Vec::new(),
            barred_retry_interval: default_barred_retry(),
        }
    }
}

/// Why a cell could not be selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotSelectableReason {
    Barred,
    ReservedForOperator,
    ReservedForNpn,
    ReservedForFuture,
    PlmnMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selectability {
    Selectable,
    NotSelectable { retry_after: SimDuration, reason: NotSelectableReason },
}

impl Selectability {
    pub fn is_selectable(self) -> bool {
        matches!(self, Selectability::Selectable)
    }
}

/// Decides whether `profile` may camp on a cell advertising `cell`.
///
/// A barred cell is unusable even for emergency calls. Reservation for
/// operator use admits AI 11/15 holders; reservation for other use admits
/// authorized NPN subscribers; reservation for future use admits nobody.
pub fn cell_selection_check(profile: &UeProfile, cell: &CellAccessInfo, _is_emergency: bool) -> Selectability {
    let refuse = |reason| Selectability::NotSelectable { retry_after: cell.barred_retry_interval, reason };
    if cell.cell_barred {
        return refuse(NotSelectableReason::Barred);
    }
    if cell.reserved_for_future_use {
        return refuse(NotSelectableReason::ReservedForFuture);
    }
    if cell.reserved_for_operator_use {
        let operator_ais = AccessIdentitySet::from_iter([AccessIdentity::PLMN_USE, AccessIdentity::PLMN_STAFF]);
        return if profile.effective_identities().intersection(operator_ais).is_empty() {
            refuse(NotSelectableReason::ReservedForOperator)
        } else {
            Selectability::Selectable
        };
    }
    if cell.reserved_for_other_use {
        return if profile.npn_authorized.iter().any(|n| cell.npn_ids.contains(n)) {
            Selectability::Selectable
        } else {
            refuse(NotSelectableReason::ReservedForNpn)
        };
    }
    if cell.plmn_ids.iter().any(|p| profile.accepts_plmn(p)) {
        Selectability::Selectable
    } else {
        refuse(NotSelectableReason::PlmnMismatch)
    }
}

// ---------------------------------------------------------------------------
// Unified access control
// ---------------------------------------------------------------------------

/// SIB1 barring information for one Access Category.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct UacBarringEntry {
    pub category: AccessCategory,
    /// Probability that an attempt without an allowed identity passes.
    pub barring_factor: f64,
    pub barring_time: SimDuration,
    /// High-priority identities whose barring indicator allows access.
    #[cfg_attr(feature = "serde", serde(default))]
    pub allowed_identities: AccessIdentitySet,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UacConfigError {
    #[error("access category 0 cannot carry a barring entry")]
    CategoryZero,
    #[error("duplicate entry for access category {0}")]
    Duplicate(u8),
    #[error("barring_factor {0} outside [0, 1]")]
    FactorRange(f64),
    #[error("barring_time must be > 0")]
    ZeroTime,
    #[error("barring indicator set for non-high-priority identities {0:?}")]
    BitmapIdentities(AccessIdentitySet),
}

impl UacBarringEntry {
    pub fn validate(&self) -> Result<(), UacConfigError> {
        if self.category.value() == 0 {
            return Err(UacConfigError::CategoryZero);
        }
        if !(0.0..=1.0).contains(&self.barring_factor) {
            return Err(UacConfigError::FactorRange(self.barring_factor));
        }
        if self.barring_time.is_zero() {
            return Err(UacConfigError::ZeroTime);
        }
        if !self.allowed_identities.is_subset(AccessIdentitySet::high_priority()) {
            let stray = AccessIdentitySet::from_bits(
                self.allowed_identities.bits() & !AccessIdentitySet::high_priority().bits(),
            );
            return Err(UacConfigError::BitmapIdentities(stray));
        }
        Ok(())
    }
}

/// Per-cell UAC configuration. Categories without an entry are not barred.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct UacConfig {
    pub entries: Vec<UacBarringEntry>,
    /// Draw the barred duration from [0.7, 1.3] x barring_time instead of
    /// using barring_time exactly.
    pub jitter: bool,
}

impl UacConfig {
    pub fn with_entries(entries: impl IntoIterator<Item = UacBarringEntry>) -> Result<Self, UacConfigError> {
        let cfg = UacConfig { entries: entries.into_iter().collect(), jitter: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), UacConfigError> {
        let mut seen = 0u64;
        for e in &self.entries {
            e.validate()?;
            let bit = 1u64 << e.category.value();
            if seen & bit != 0 {
                return Err(UacConfigError::Duplicate(e.category.value()));
            }
            seen |= bit;
        }
        Ok(())
    }

    /// Entry for `ac`; never consulted for category 0.
    pub fn entry(&self, ac: AccessCategory) -> Option<&UacBarringEntry> {
        if ac == AccessCategory::MT_ACCESS {
            return None;
        }
        self.entries.iter().find(|e| e.category == ac)
    }
}

/// Uniform draws consumed by one UAC evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UacDraw {
    pub factor: f64,
    /// Only read when the configuration enables jitter.
    pub jitter: f64,
}

impl UacDraw {
    pub const fn new(factor: f64) -> Self {
        UacDraw { factor, jitter: 0.5 }
    }

    pub const fn with_jitter(factor: f64, jitter: f64) -> Self {
        UacDraw { factor, jitter }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarringCause {
    WaitTime,
    BarringFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UacDecision {
    Allowed,
    Barred { until: SimTime, cause: BarringCause },
}

impl UacDecision {
    pub fn is_allowed(self) -> bool {
        matches!(self, UacDecision::Allowed)
    }
}

/// Evaluates an attempt with category `ac` and identities `ais` against the
/// cell's UAC configuration.
///
/// Order: a running waitTime bars everything but categories 0 and 2;
/// category 0 always passes; a category without entry passes; any
/// high-priority identity with its indicator set passes without a draw;
/// otherwise the attempt passes when `draw.factor < barring_factor`.
pub fn uac_check(
    ac: AccessCategory,
    ais: AccessIdentitySet,
    config: &UacConfig,
    draw: UacDraw,
    now: SimTime,
    profile: &UeProfile,
) -> UacDecision {
    if let Some(until) = profile.wait_time_until {
        if now < until && !ac.survives_wait_time() {
            return UacDecision::Barred { until, cause: BarringCause::WaitTime };
        }
    }
    if ac == AccessCategory::MT_ACCESS {
        return UacDecision::Allowed;
    }
    let Some(entry) = config.entry(ac) else {
        return UacDecision::Allowed;
    };
    let prioritized = ais.intersection(AccessIdentitySet::high_priority());
    if !prioritized.intersection(entry.allowed_identities).is_empty() {
        return UacDecision::Allowed;
    }
    if draw.factor < entry.barring_factor {
        return UacDecision::Allowed;
    }
    let hold = if config.jitter {
        let scale = 0.7 + 0.6 * draw.jitter.clamp(0.0, 1.0);
        SimDuration::from_micros(libm::round(entry.barring_time.as_micros() as f64 * scale) as u64)
    } else {
        entry.barring_time
    };
    UacDecision::Barred { until: now + hold, cause: BarringCause::BarringFactor }
}

/// Records a waitTime received in RRC Reject or RRC Release.
pub fn apply_wait_time(profile: &mut UeProfile, wait_time: SimDuration, now: SimTime) {
    profile.wait_time_until = Some(now + wait_time);
}

// ---------------------------------------------------------------------------
// Paging control
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PagingOrigin {
    /// Core network paging for an Idle UE.
    Cn,
    /// RAN paging for an Inactive UE.
    Ran,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PagingRequest {
    pub id: u64,
    pub target_ue: UeId,
    /// 1 is the highest priority.
    pub priority: u8,
    pub origin: PagingOrigin,
    pub enqueue_time: SimTime,
}

impl PagingRequest {
    fn order_key(&self) -> (u8, SimTime, UeId, u64) {
        (self.priority, self.enqueue_time, self.target_ue, self.id)
    }
}

fn default_paging_budget() -> u32 {
    16
}
fn default_paging_cycle() -> SimDuration {
    SimDuration::from_millis(320)
}
fn default_discard_cycles() -> u32 {
    5
}
fn default_priority_levels() -> u8 {
    8
}

/// Per-cell paging control settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct PagingConfig {
    /// Pages sent per cycle.
    pub budget: u32,
    pub cycle: SimDuration,
    /// Requests deferred longer than this many cycles are dropped.
    pub discard_cycles: u32,
    pub priority_levels: u8,
}

impl Default for PagingConfig {
    fn default() -> Self {
        PagingConfig {
            budget: default_paging_budget(),
            cycle: default_paging_cycle(),
            discard_cycles: default_discard_cycles(),
            priority_levels: default_priority_levels(),
        }
    }
}

impl PagingConfig {
    pub fn discard_timeout(&self) -> SimDuration {
        self.cycle.saturating_mul(self.discard_cycles as u64)
    }
}

/// Result of one paging-control cycle. The three lists partition the input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PagingSelection {
    pub to_page: Vec<PagingRequest>,
    pub deferred: Vec<PagingRequest>,
    pub dropped: Vec<PagingRequest>,
}

/// Selects up to `budget` requests by (priority, enqueue time, UE id); the
/// rest are deferred, except those already waiting longer than
/// `discard_timeout`, which are dropped.
pub fn paging_control_filter(
    mut queue: Vec<PagingRequest>,
    budget: usize,
    now: SimTime,
    discard_timeout: SimDuration,
) -> PagingSelection {
    queue.sort_by_key(PagingRequest::order_key);
    let rest = queue.split_off(budget.min(queue.len()));
    let (dropped, deferred) = rest.into_iter().partition(|r| now.since(r.enqueue_time) > discard_timeout);
    PagingSelection { to_page: queue, deferred, dropped }
}

/// Static radio topology used for paging routing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    pub cells: Vec<CellSite>,
    pub inter_gnb_delay: SimDuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSite {
    pub cell: CellId,
    pub gnb: GnbId,
    pub tac: Tac,
}

impl Topology {
    pub fn site(&self, cell: CellId) -> Option<&CellSite> {
        self.cells.iter().find(|s| s.cell == cell)
    }
}

/// A cell to page in, and the delay before the page reaches that cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PagingTarget {
    pub cell: CellId,
    pub delay: SimDuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PagingRouteError {
    #[error("unknown UE {0}")]
    UnknownUe(UeId),
    #[error("UE {0} is connected and cannot be paged")]
    Connected(UeId),
    #[error("paging origin {origin:?} does not match UE {ue} state")]
    OriginMismatch { ue: UeId, origin: PagingOrigin },
    #[error("anchor cell {0} missing from topology")]
    UnknownAnchor(CellId),
}

/// Cells in which `request` must be paged.
///
/// Idle UEs are paged by the CN across their tracking areas. Inactive UEs
/// are paged by the anchor gNB across their RNA; RNA cells on other gNBs
/// receive the page after the inter-gNB delay.
pub fn route_paging(
    request: &PagingRequest,
    ue: Option<&UeProfile>,
    topology: &Topology,
) -> Result<Vec<PagingTarget>, PagingRouteError> {
    let ue = ue.ok_or(PagingRouteError::UnknownUe(request.target_ue))?;
    match (ue.rrc_state, request.origin) {
        (RrcState::Connected, _) => Err(PagingRouteError::Connected(ue.ue_id)),
        (RrcState::Idle, PagingOrigin::Cn) => Ok(topology
            .cells
            .iter()
            .filter(|s| ue.tracking_areas.contains(&s.tac))
            .map(|s| PagingTarget { cell: s.cell, delay: SimDuration::ZERO })
            .collect()),
        (RrcState::Inactive { anchor }, PagingOrigin::Ran) => {
            let anchor_gnb = topology.site(anchor).ok_or(PagingRouteError::UnknownAnchor(anchor))?.gnb;
            let rna: &[CellId] = if ue.rna.is_empty() { core::slice::from_ref(&anchor) } else { &ue.rna };
            Ok(rna
                .iter()
                .filter_map(|c| topology.site(*c))
                .map(|s| PagingTarget {
                    cell: s.cell,
                    delay: if s.gnb == anchor_gnb { SimDuration::ZERO } else { topology.inter_gnb_delay },
                })
                .collect())
        }
        (_, origin) => Err(PagingRouteError::OriginMismatch { ue: ue.ue_id, origin }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn plmn() -> PlmnId {
        PlmnId::new(1, 1, false).unwrap()
    }

    fn profile() -> UeProfile {
        UeProfile::regular(UeId(1), plmn())
    }

    fn open_cell() -> CellAccessInfo {
        CellAccessInfo { plmn_ids: vec![plmn()], ..Default::default() }
    }

    fn entry(ac: u8, factor: f64, time_s: u64, allowed: &[u8]) -> UacBarringEntry {
        UacBarringEntry {
            category: AccessCategory::new(ac).unwrap(),
            barring_factor: factor,
            barring_time: SimDuration::from_secs(time_s),
            allowed_identities: allowed.iter().map(|v| AccessIdentity::new(*v).unwrap()).collect(),
        }
    }

    fn ais(v: &[u8]) -> AccessIdentitySet {
        v.iter().map(|v| AccessIdentity::new(*v).unwrap()).collect()
    }

    #[test]
    fn barred_cell_refuses_even_emergency() {
        let cell = CellAccessInfo { cell_barred: true, ..open_cell() };
        assert_eq!(
            cell_selection_check(&profile(), &cell, true),
            Selectability::NotSelectable {
                retry_after: SimDuration::from_secs(300),
                reason: NotSelectableReason::Barred
            }
        );
    }

    #[test]
    fn operator_reserved_cell() {
        let cell = CellAccessInfo { reserved_for_operator_use: true, ..open_cell() };
        assert!(cell_selection_check(&profile().with_identities(&[11]), &cell, false).is_selectable());
        assert!(cell_selection_check(&profile().with_identities(&[15]), &cell, false).is_selectable());
        assert!(!cell_selection_check(&profile(), &cell, false).is_selectable());
        let mut roaming = profile().with_identities(&[11]);
        roaming.in_home_plmn = false;
        assert!(!cell_selection_check(&roaming, &cell, false).is_selectable());
    }

    #[test]
    fn npn_reserved_cell() {
        let cell = CellAccessInfo { reserved_for_other_use: true, npn_ids: vec![NpnId(9)], ..open_cell() };
        assert!(!cell_selection_check(&profile(), &cell, false).is_selectable());
        let mut p = profile();
        p.npn_authorized = vec![NpnId(9)];
        assert!(cell_selection_check(&p, &cell, false).is_selectable());
        p.npn_authorized = vec![NpnId(8)];
        assert!(!cell_selection_check(&p, &cell, false).is_selectable());
    }

    #[test]
    fn future_reserved_and_plmn() {
        let cell = CellAccessInfo { reserved_for_future_use: true, ..open_cell() };
        assert!(!cell_selection_check(&profile().with_identities(&[11, 15]), &cell, true).is_selectable());
        assert!(cell_selection_check(&profile(), &open_cell(), false).is_selectable());
        let other = CellAccessInfo { plmn_ids: vec![PlmnId::new(2, 2, false).unwrap()], ..Default::default() };
        assert!(!cell_selection_check(&profile(), &other, false).is_selectable());
        let mut p = profile();
        p.equivalent_plmns.push(PlmnId::new(2, 2, false).unwrap());
        assert!(cell_selection_check(&p, &other, false).is_selectable());
    }

    #[test]
    fn uac_examples() {
        let now = SimTime::from_secs(10);
        let p = profile();
        let cfg = UacConfig::with_entries([entry(7, 0.0, 4, &[2])]).unwrap();
        assert_eq!(
            uac_check(AccessCategory::MT_ACCESS, ais(&[0]), &cfg, UacDraw::new(0.99), now, &p),
            UacDecision::Allowed
        );
        assert_eq!(
            uac_check(AccessCategory::MO_DATA, ais(&[0]), &cfg, UacDraw::new(0.99), now, &p),
            UacDecision::Barred { until: SimTime::from_secs(14), cause: BarringCause::BarringFactor }
        );
        assert_eq!(
            uac_check(AccessCategory::MO_DATA, ais(&[0, 2]), &cfg, UacDraw::new(0.99), now, &p),
            UacDecision::Allowed
        );
        // AI 1 holder, but only AI 2 is allowed by the bitmap.
        assert!(!uac_check(AccessCategory::MO_DATA, ais(&[0, 1]), &cfg, UacDraw::new(0.99), now, &p).is_allowed());
        // No entry for category 5.
        assert!(uac_check(AccessCategory::MO_VIDEO, ais(&[0]), &cfg, UacDraw::new(0.99), now, &p).is_allowed());
    }

    #[test]
    fn uac_factor_boundary() {
        let now = SimTime::ZERO;
        let cfg = UacConfig::with_entries([entry(7, 0.5, 4, &[])]).unwrap();
        let check = |d| uac_check(AccessCategory::MO_DATA, ais(&[0]), &cfg, UacDraw::new(d), now, &profile());
        assert!(check(0.4999).is_allowed());
        assert!(!check(0.5).is_allowed());
        let full = UacConfig::with_entries([entry(7, 1.0, 4, &[])]).unwrap();
        assert!(uac_check(AccessCategory::MO_DATA, ais(&[0]), &full, UacDraw::new(0.999_999), now, &profile())
            .is_allowed());
    }

    #[test]
    fn uac_jitter_stays_in_window() {
        let mut cfg = UacConfig::with_entries([entry(7, 0.0, 10, &[])]).unwrap();
        cfg.jitter = true;
        for (j, expect_ms) in [(0.0, 7_000), (0.5, 10_000), (1.0, 13_000)] {
            let d = uac_check(AccessCategory::MO_DATA, ais(&[0]), &cfg, UacDraw::with_jitter(0.9, j), SimTime::ZERO, &profile());
            assert_eq!(d, UacDecision::Barred { until: SimTime::from_millis(expect_ms), cause: BarringCause::BarringFactor });
        }
    }

    #[test]
    fn wait_time_rules() {
        let mut p = profile();
        apply_wait_time(&mut p, SimDuration::from_secs(16), SimTime::from_secs(100));
        let cfg = UacConfig::default();
        let at = |ac: u8, t: u64| {
            uac_check(AccessCategory::new(ac).unwrap(), ais(&[0]), &cfg, UacDraw::new(0.0), SimTime::from_secs(t), &p)
        };
        assert_eq!(at(7, 110), UacDecision::Barred { until: SimTime::from_secs(116), cause: BarringCause::WaitTime });
        assert_eq!(at(2, 110), UacDecision::Allowed);
        assert_eq!(at(0, 110), UacDecision::Allowed);
        assert_eq!(at(7, 116), UacDecision::Allowed);
        assert_eq!(at(7, 117), UacDecision::Allowed);
        // Emergency during waitTime still faces its own barring entry.
        let barred2 = UacConfig::with_entries([entry(2, 0.0, 4, &[])]).unwrap();
        let d = uac_check(AccessCategory::EMERGENCY, ais(&[0]), &barred2, UacDraw::new(0.5), SimTime::from_secs(110), &p);
        assert_eq!(d, UacDecision::Barred { until: SimTime::from_secs(114), cause: BarringCause::BarringFactor });
    }

    #[test]
    fn uac_config_validation() {
        assert_eq!(UacConfig::with_entries([entry(0, 0.5, 4, &[])]), Err(UacConfigError::CategoryZero));
        assert!(matches!(UacConfig::with_entries([entry(7, 1.5, 4, &[])]), Err(UacConfigError::FactorRange(_))));
        assert_eq!(UacConfig::with_entries([entry(7, 0.5, 0, &[])]), Err(UacConfigError::ZeroTime));
        assert!(matches!(
            UacConfig::with_entries([entry(7, 0.5, 4, &[0, 3])]),
            Err(UacConfigError::BitmapIdentities(_))
        ));
        assert_eq!(
            UacConfig::with_entries([entry(7, 0.5, 4, &[]), entry(7, 0.1, 4, &[])]),
            Err(UacConfigError::Duplicate(7))
        );
    }

    fn req(id: u64, prio: u8, t_ms: u64) -> PagingRequest {
        PagingRequest {
            id,
            target_ue: UeId(id as u32),
            priority: prio,
            origin: PagingOrigin::Cn,
            enqueue_time: SimTime::from_millis(t_ms),
        }
    }

    #[test]
    fn paging_filter_examples() {
        let timeout = SimDuration::from_secs(10);
        let now = SimTime::from_secs(1);
        let sel = paging_control_filter(vec![req(1, 3, 0), req(2, 3, 1), req(3, 3, 2)], 3, now, timeout);
        assert_eq!(sel.to_page.len(), 3);
        assert!(sel.deferred.is_empty());

        let sel = paging_control_filter(vec![req(1, 5, 0), req(2, 1, 5)], 1, now, timeout);
        assert_eq!(sel.to_page, vec![req(2, 1, 5)]);
        assert_eq!(sel.deferred, vec![req(1, 5, 0)]);

        let sel = paging_control_filter(vec![req(2, 2, 5), req(1, 2, 1)], 1, now, timeout);
        assert_eq!(sel.to_page, vec![req(1, 2, 1)]);
    }

    #[test]
    fn paging_filter_drops_only_past_timeout() {
        let timeout = SimDuration::from_millis(1600);
        let now = SimTime::from_millis(2000);
        let sel = paging_control_filter(vec![req(1, 1, 1000), req(2, 4, 400), req(3, 4, 399)], 1, now, timeout);
        assert_eq!(sel.to_page, vec![req(1, 1, 1000)]);
        assert_eq!(sel.deferred, vec![req(2, 4, 400)]);
        assert_eq!(sel.dropped, vec![req(3, 4, 399)]);
        // A stale request that fits the budget is still paged.
        let sel = paging_control_filter(vec![req(3, 1, 0)], 1, now, timeout);
        assert_eq!(sel.to_page.len(), 1);
    }

    fn topology() -> Topology {
        Topology {
            cells: vec![
                CellSite { cell: CellId(1), gnb: GnbId(1), tac: Tac(10) },
                CellSite { cell: CellId(2), gnb: GnbId(1), tac: Tac(10) },
                CellSite { cell: CellId(3), gnb: GnbId(2), tac: Tac(10) },
                CellSite { cell: CellId(4), gnb: GnbId(2), tac: Tac(20) },
            ],
            inter_gnb_delay: SimDuration::from_millis(5),
        }
    }

    #[test]
    fn idle_ue_paged_across_tracking_area() {
        let mut p = profile();
        p.tracking_areas = vec![Tac(10)];
        let r = req(1, 1, 0);
        let cells: Vec<_> = route_paging(&r, Some(&p), &topology()).unwrap().iter().map(|t| t.cell).collect();
        assert_eq!(cells, vec![CellId(1), CellId(2), CellId(3)]);
    }

    #[test]
    fn inactive_ue_paged_across_rna() {
        let mut p = profile();
        p.rrc_state = RrcState::Inactive { anchor: CellId(2) };
        p.rna = vec![CellId(2)];
        let r = PagingRequest { origin: PagingOrigin::Ran, ..req(1, 1, 0) };
        assert_eq!(
            route_paging(&r, Some(&p), &topology()).unwrap(),
            vec![PagingTarget { cell: CellId(2), delay: SimDuration::ZERO }]
        );
        p.rna = vec![CellId(2), CellId(3), CellId(4)];
        let targets = route_paging(&r, Some(&p), &topology()).unwrap();
        assert_eq!(
            targets,
            vec![
                PagingTarget { cell: CellId(2), delay: SimDuration::ZERO },
                PagingTarget { cell: CellId(3), delay: SimDuration::from_millis(5) },
                PagingTarget { cell: CellId(4), delay: SimDuration::from_millis(5) },
            ]
        );
    }

    #[test]
    fn paging_route_errors() {
        let r = req(1, 1, 0);
        assert_eq!(route_paging(&r, None, &topology()), Err(PagingRouteError::UnknownUe(UeId(1))));
        let mut p = profile();
        p.rrc_state = RrcState::Connected;
        assert_eq!(route_paging(&r, Some(&p), &topology()), Err(PagingRouteError::Connected(UeId(1))));
        p.rrc_state = RrcState::Inactive { anchor: CellId(1) };
        assert!(matches!(route_paging(&r, Some(&p), &topology()), Err(PagingRouteError::OriginMismatch { .. })));
    }
}
