//! Domain types shared across the access-control pipeline, and the mapping
//! from an access attempt to its Access Category and Access Identity set.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::time::SimTime;

macro_rules! id_newtype {
    ($(#[$m:meta])* $name:ident($inner:ty)) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        #[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }
    };
}

id_newtype!(UeId(u32));
id_newtype!(CellId(u32));
id_newtype!(GnbId(u32));
id_newtype!(
    /// Tracking area code.
    Tac(u32)
);
id_newtype!(
    /// Non-public network identifier broadcast by reserved cells.
    NpnId(u32)
);
id_newtype!(FlowId(u64));

impl FlowId {
    /// Flow ids are namespaced by UE so that one UE's traffic never shifts
    /// another UE's identifiers.
    pub const fn compose(ue: UeId, local: u32) -> FlowId {
        FlowId(((ue.0 as u64) << 32) | local as u64)
    }

    pub const fn ue(self) -> UeId {
        UeId((self.0 >> 32) as u32)
    }
}

/// Errors raised by constructors and validators of model types.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("access identity {0} out of range 0..=15")]
    AccessIdentityRange(u8),
    #[error("access category {0} out of range 0..=63")]
    AccessCategoryRange(u8),
    #[error("MCC must have exactly 3 digits")]
    MccDigits,
    #[error("MNC must have 2 or 3 digits")]
    MncDigits,
    #[error("ARP priority level {0} out of range 1..=15")]
    ArpLevel(u8),
    #[error("{0:?} flow requires demand > 0")]
    ZeroGbrDemand(ResourceType),
    #[error("a UE may subscribe to at most 8 slices, got {0}")]
    TooManySlices(usize),
    #[error("slice differentiator {0:#x} exceeds 24 bits")]
    SdRange(u32),
    #[error("invalid RRC transition from {from:?} on {event:?}")]
    RrcTransition { from: RrcState, event: RrcEvent },
}

// ---------------------------------------------------------------------------
// RRC state machine
// ---------------------------------------------------------------------------

/// UE radio resource control state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrcState {
    Idle,
    /// Context kept in the RAN at `anchor`.
    Inactive { anchor: CellId },
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrcEvent {
    /// Initial access completed: barring passed, RA won, admission admitted.
    SetupComplete,
    ResumeComplete,
    /// Explicit RRC Release. `suspend_at` moves the UE to Inactive with that
    /// anchor; `None` releases to Idle.
    Release { suspend_at: Option<CellId> },
}

impl RrcState {
    pub fn apply(self, event: RrcEvent) -> Result<RrcState, ModelError> {
        use RrcEvent::*;
        use RrcState::*;
        match (self, event) {
            (Idle, SetupComplete) => Ok(Connected),
            (Inactive { .. }, ResumeComplete) => Ok(Connected),
            (Connected, Release { suspend_at: Some(anchor) }) => Ok(Inactive { anchor }),
            (Connected, Release { suspend_at: None }) | (Inactive { .. }, Release { suspend_at: None }) => Ok(Idle),
            (from, event) => Err(ModelError::RrcTransition { from, event }),
        }
    }

    pub fn is_connected(self) -> bool {
        matches!(self, RrcState::Connected)
    }
}

// ---------------------------------------------------------------------------
// Access identities and categories
// ---------------------------------------------------------------------------

/// Access Identity, 0..=15.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct AccessIdentity(u8);

impl AccessIdentity {
    pub const REGULAR: AccessIdentity = AccessIdentity(0);
    pub const MPS: AccessIdentity = AccessIdentity(1);
    pub const MCS: AccessIdentity = AccessIdentity(2);
    pub const DISASTER_CONDITION: AccessIdentity = AccessIdentity(3);
    pub const PLMN_USE: AccessIdentity = AccessIdentity(11);
    pub const SECURITY_SERVICES: AccessIdentity = AccessIdentity(12);
    pub const PUBLIC_UTILITIES: AccessIdentity = AccessIdentity(13);
    pub const EMERGENCY_SERVICES: AccessIdentity = AccessIdentity(14);
    pub const PLMN_STAFF: AccessIdentity = AccessIdentity(15);

    /// The identities that carry a per-AI barring indicator in UAC entries.
    pub const HIGH_PRIORITY: [AccessIdentity; 7] = [
        Self::MPS,
        Self::MCS,
        Self::PLMN_USE,
        Self::SECURITY_SERVICES,
        Self::PUBLIC_UTILITIES,
        Self::EMERGENCY_SERVICES,
        Self::PLMN_STAFF,
    ];

    pub const fn new(v: u8) -> Result<Self, ModelError> {
        if v <= 15 {
            Ok(AccessIdentity(v))
        } else {
            Err(ModelError::AccessIdentityRange(v))
        }
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    pub const fn is_reserved(self) -> bool {
        self.0 >= 4 && self.0 <= 10
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "regular",
            1 => "mps",
            2 => "mcs",
            3 => "disaster-condition",
            4..=10 => "reserved",
            11 => "plmn-use",
            12 => "security-services",
            13 => "public-utilities",
            14 => "emergency-services",
            _ => "plmn-staff",
        }
    }
}

impl fmt::Display for AccessIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of access identities stored as a 16-bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AccessIdentitySet(u16);

impl AccessIdentitySet {
    pub const EMPTY: AccessIdentitySet = AccessIdentitySet(0);

    pub fn high_priority() -> Self {
        AccessIdentity::HIGH_PRIORITY.iter().copied().collect()
    }

    pub const fn bits(self) -> u16 {
        self.0
    }

    pub const fn from_bits(bits: u16) -> Self {
        AccessIdentitySet(bits)
    }

    pub fn insert(&mut self, ai: AccessIdentity) {
        self.0 |= 1 << ai.0;
    }

    pub fn remove(&mut self, ai: AccessIdentity) {
        self.0 &= !(1 << ai.0);
    }

    pub const fn contains(self, ai: AccessIdentity) -> bool {
        self.0 & (1 << ai.0) != 0
    }

    pub const fn intersection(self, other: Self) -> Self {
        AccessIdentitySet(self.0 & other.0)
    }

    pub const fn union(self, other: Self) -> Self {
        AccessIdentitySet(self.0 | other.0)
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn iter(self) -> impl Iterator<Item = AccessIdentity> {
        (0u8..16).filter(move |i| self.0 & (1 << i) != 0).map(AccessIdentity)
    }

    /// The identity used to key metrics: the lowest non-zero identity, or 0.
    pub fn primary(self) -> AccessIdentity {
        self.iter().find(|ai| ai.0 != 0).unwrap_or(AccessIdentity::REGULAR)
    }
}

impl FromIterator<AccessIdentity> for AccessIdentitySet {
    fn from_iter<I: IntoIterator<Item = AccessIdentity>>(iter: I) -> Self {
        let mut s = AccessIdentitySet::EMPTY;
        for ai in iter {
            s.insert(ai);
        }
        s
    }
}

impl fmt::Debug for AccessIdentitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|a| a.0)).finish()
    }
}

#[cfg(feature = "serde")]
impl Serialize for AccessIdentitySet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for AccessIdentitySet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|v| AccessIdentity::new(v).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Access Category, 0..=63.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize), serde(transparent))]
pub struct AccessCategory(u8);

impl AccessCategory {
    pub const MT_ACCESS: AccessCategory = AccessCategory(0);
    pub const DELAY_TOLERANT: AccessCategory = AccessCategory(1);
    pub const EMERGENCY: AccessCategory = AccessCategory(2);
    pub const MO_NAS_SIGNALLING: AccessCategory = AccessCategory(3);
    pub const MO_VOICE: AccessCategory = AccessCategory(4);
    pub const MO_VIDEO: AccessCategory = AccessCategory(5);
    pub const MO_SMS: AccessCategory = AccessCategory(6);
    pub const MO_DATA: AccessCategory = AccessCategory(7);
    pub const MO_RRC_SIGNALLING: AccessCategory = AccessCategory(8);
    pub const MO_IMS_REGISTRATION: AccessCategory = AccessCategory(9);
    pub const MO_EXCEPTION_DATA: AccessCategory = AccessCategory(10);

    pub const fn new(v: u8) -> Result<Self, ModelError> {
        if v <= 63 {
            Ok(AccessCategory(v))
        } else {
            Err(ModelError::AccessCategoryRange(v))
        }
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    pub const fn is_standardized(self) -> bool {
        self.0 < 32
    }

    pub const fn is_operator_defined(self) -> bool {
        self.0 >= 32
    }

    /// Categories still honoured while a waitTime is running.
    pub const fn survives_wait_time(self) -> bool {
        self.0 == 0 || self.0 == 2
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for AccessCategory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        AccessCategory::new(u8::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for AccessCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// ---------------------------------------------------------------------------
// PLMN, slices, QoS
// ---------------------------------------------------------------------------

/// PLMN identity: 3-digit MCC plus 2- or 3-digit MNC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlmnId {
    mcc: u16,
    mnc: u16,
    mnc_three_digits: bool,
}

impl PlmnId {
    pub const fn new(mcc: u16, mnc: u16, mnc_three_digits: bool) -> Result<Self, ModelError> {
        if mcc > 999 {
            return Err(ModelError::MccDigits);
        }
        if (mnc_three_digits && mnc > 999) || (!mnc_three_digits && mnc > 99) {
            return Err(ModelError::MncDigits);
        }
        Ok(PlmnId { mcc, mnc, mnc_three_digits })
    }

    pub const fn mcc(self) -> u16 {
        self.mcc
    }

    pub const fn mnc(self) -> u16 {
        self.mnc
    }
}

impl fmt::Display for PlmnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mnc_three_digits {
            write!(f, "{:03}-{:03}", self.mcc, self.mnc)
        } else {
            write!(f, "{:03}-{:02}", self.mcc, self.mnc)
        }
    }
}

impl FromStr for PlmnId {
    type Err = ModelError;

    /// Parses `"MCC-MNC"`, e.g. `"001-01"` or `"310-410"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (mcc, mnc) = s.split_once('-').ok_or(ModelError::MccDigits)?;
        let digits = |x: &str| !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit());
        if mcc.len() != 3 || !digits(mcc) {
            return Err(ModelError::MccDigits);
        }
        if !(mnc.len() == 2 || mnc.len() == 3) || !digits(mnc) {
            return Err(ModelError::MncDigits);
        }
        PlmnId::new(
            mcc.parse().map_err(|_| ModelError::MccDigits)?,
            mnc.parse().map_err(|_| ModelError::MncDigits)?,
            mnc.len() == 3,
        )
    }
}

#[cfg(feature = "serde")]
impl Serialize for PlmnId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for PlmnId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = alloc::string::String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Network slice identifier: mandatory slice/service type plus optional
/// 24-bit differentiator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Snssai {
    pub sst: u8,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub sd: Option<u32>,
}

impl Snssai {
    pub const fn new(sst: u8, sd: Option<u32>) -> Self {
        Snssai { sst, sd }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self.sd {
            Some(sd) if sd > 0xFF_FFFF => Err(ModelError::SdRange(sd)),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Snssai {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sd {
            Some(sd) => write!(f, "{}:{:06x}", self.sst, sd),
            None => write!(f, "{}", self.sst),
        }
    }
}

/// Allocation and retention priority of a QoS flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ArpProfile {
    /// 1 is the highest priority, 15 the lowest.
    pub priority_level: u8,
    #[cfg_attr(feature = "serde", serde(default))]
    pub preemption_capability: bool,
    #[cfg_attr(feature = "serde", serde(default))]
    pub preemption_vulnerability: bool,
}

impl ArpProfile {
    pub const fn new(priority_level: u8, capability: bool, vulnerability: bool) -> Result<Self, ModelError> {
        if priority_level == 0 || priority_level > 15 {
            return Err(ModelError::ArpLevel(priority_level));
        }
        Ok(ArpProfile {
            priority_level,
            preemption_capability: capability,
            preemption_vulnerability: vulnerability,
        })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        ArpProfile::new(self.priority_level, false, false).map(|_| ())
    }

    /// Whether `self` may pre-empt an existing flow with profile `victim`.
    pub const fn may_preempt(&self, victim: &ArpProfile) -> bool {
        self.preemption_capability
            && victim.preemption_vulnerability
            && victim.priority_level > self.priority_level
    }
}

/// 5QI resource type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum ResourceType {
    Gbr,
    DelayCriticalGbr,
    NonGbr,
}

impl ResourceType {
    /// GBR flavours hold reserved units for their lifetime.
    pub const fn reserves_units(self) -> bool {
        !matches!(self, ResourceType::NonGbr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QosFlowRequest {
    pub flow_id: FlowId,
    pub arp: ArpProfile,
    pub resource_type: ResourceType,
    pub snssai: Snssai,
    pub demand: u32,
}

impl QosFlowRequest {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.arp.validate()?;
        self.snssai.validate()?;
        if self.resource_type.reserves_units() && self.demand == 0 {
            return Err(ModelError::ZeroGbrDemand(self.resource_type));
        }
        Ok(())
    }

    /// Units this flow must hold while admitted.
    pub const fn reserved_demand(&self) -> u32 {
        if self.resource_type.reserves_units() {
            self.demand
        } else {
            0
        }
    }
}

// ---------------------------------------------------------------------------
// Establishment causes and attempt mapping
// ---------------------------------------------------------------------------

/// RRC establishment cause carried in MSG3/MSGA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum EstablishmentCause {
    Emergency,
    HighPriorityAccess,
    MtAccess,
    MoSignalling,
    MoData,
    MoVoiceCall,
    MoVideoCall,
    MoSms,
    MpsPriorityAccess,
    McsPriorityAccess,
}

impl EstablishmentCause {
    pub const ALL: [EstablishmentCause; 10] = [
        EstablishmentCause::Emergency,
        EstablishmentCause::HighPriorityAccess,
        EstablishmentCause::MtAccess,
        EstablishmentCause::MoSignalling,
        EstablishmentCause::MoData,
        EstablishmentCause::MoVoiceCall,
        EstablishmentCause::MoVideoCall,
        EstablishmentCause::MoSms,
        EstablishmentCause::MpsPriorityAccess,
        EstablishmentCause::McsPriorityAccess,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            EstablishmentCause::Emergency => "emergency",
            EstablishmentCause::HighPriorityAccess => "high_priority_access",
            EstablishmentCause::MtAccess => "mt_access",
            EstablishmentCause::MoSignalling => "mo_signalling",
            EstablishmentCause::MoData => "mo_data",
            EstablishmentCause::MoVoiceCall => "mo_voice_call",
            EstablishmentCause::MoVideoCall => "mo_video_call",
            EstablishmentCause::MoSms => "mo_sms",
            EstablishmentCause::MpsPriorityAccess => "mps_priority_access",
            EstablishmentCause::McsPriorityAccess => "mcs_priority_access",
        }
    }
}

impl fmt::Display for EstablishmentCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-attempt flags set by the traffic generator; categories that cannot be
/// inferred from the cause alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct AttemptTraits {
    pub delay_tolerant: bool,
    pub exception_data: bool,
    /// Signalling originates at NAS level (category 3) rather than RRC (8).
    pub nas_signalling: bool,
    pub ims_registration: bool,
    /// Operator-defined category (32..=63) provisioned for this service.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub operator_category: Option<AccessCategory>,
}

/// Subscription-side view of a UE.
#[derive(Debug, Clone, PartialEq)]
pub struct UeProfile {
    pub ue_id: UeId,
    pub access_identities: AccessIdentitySet,
    pub home_plmn: PlmnId,
    pub equivalent_plmns: Vec<PlmnId>,
    pub in_home_country: bool,
    pub in_home_plmn: bool,
    /// Core network granted AI 1/2 applicability while roaming.
    pub priority_ai_granted_abroad: bool,
    pub npn_authorized: Vec<NpnId>,
    pub subscribed_slices: Vec<Snssai>,
    pub rrc_state: RrcState,
    pub serving_cell: Option<CellId>,
    pub wait_time_until: Option<SimTime>,
    pub tracking_areas: Vec<Tac>,
    /// RAN notification area used while Inactive.
    pub rna: Vec<CellId>,
}

impl UeProfile {
    /// A regular home-network UE with AI 0 only, idle, no slices.
    pub fn regular(ue_id: UeId, home_plmn: PlmnId) -> Self {
        UeProfile {
            ue_id,
            access_identities: AccessIdentitySet::from_iter([AccessIdentity::REGULAR]),
            home_plmn,
            equivalent_plmns: Vec::new(),
            in_home_country: true,
            in_home_plmn: true,
            priority_ai_granted_abroad: false,
            npn_authorized: Vec::new(),
            subscribed_slices: Vec::new(),
            rrc_state: RrcState::Idle,
            serving_cell: None,
            wait_time_until: None,
            tracking_areas: Vec::new(),
            rna: Vec::new(),
        }
    }

    pub fn with_identities(mut self, ais: &[u8]) -> Self {
        for &v in ais {
            if let Ok(ai) = AccessIdentity::new(v) {
                self.access_identities.insert(ai);
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.subscribed_slices.len() > 8 {
            return Err(ModelError::TooManySlices(self.subscribed_slices.len()));
        }
        self.subscribed_slices.iter().try_for_each(Snssai::validate)
    }

    fn is_applicable(&self, ai: AccessIdentity) -> bool {
        match ai.value() {
            0 | 3 => true,
            1 | 2 => self.in_home_country || self.priority_ai_granted_abroad,
            4..=10 => false,
            11 | 15 => self.in_home_plmn,
            _ => self.in_home_country,
        }
    }

    /// Provisioned identities that apply right now, always including AI 0.
    pub fn effective_identities(&self) -> AccessIdentitySet {
        let mut set: AccessIdentitySet = self
            .access_identities
            .iter()
            .filter(|ai| self.is_applicable(*ai))
            .collect();
        set.insert(AccessIdentity::REGULAR);
        set
    }

    pub fn accepts_plmn(&self, plmn: &PlmnId) -> bool {
        self.home_plmn == *plmn || self.equivalent_plmns.contains(plmn)
    }
}

/// Category and identity set an attempt is evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessInfo {
    pub category: AccessCategory,
    pub identities: AccessIdentitySet,
}

/// Maps an attempt to its Access Category and effective Access Identities.
///
/// Mobile-terminated and emergency attempts keep categories 0 and 2 even when
/// an operator category or generator flag is set. The `*PriorityAccess`
/// causes describe who is connecting rather than the service, and map to
/// MO-data.
pub fn derive_access_info(cause: EstablishmentCause, traits: &AttemptTraits, profile: &UeProfile) -> AccessInfo {
    use EstablishmentCause::*;
    let category = match cause {
        MtAccess => AccessCategory::MT_ACCESS,
        Emergency => AccessCategory::EMERGENCY,
        _ => {
            if let Some(op) = traits.operator_category.filter(|c| c.is_operator_defined()) {
                op
            } else if traits.exception_data {
                AccessCategory::MO_EXCEPTION_DATA
            } else if traits.delay_tolerant {
                AccessCategory::DELAY_TOLERANT
            } else {
                match cause {
                    MoVoiceCall => AccessCategory::MO_VOICE,
                    MoVideoCall => AccessCategory::MO_VIDEO,
                    MoSms => AccessCategory::MO_SMS,
                    MoSignalling if traits.nas_signalling => AccessCategory::MO_NAS_SIGNALLING,
                    MoSignalling if traits.ims_registration => AccessCategory::MO_IMS_REGISTRATION,
                    MoSignalling => AccessCategory::MO_RRC_SIGNALLING,
                    _ => AccessCategory::MO_DATA,
                }
            }
        }
    };
    AccessInfo { category, identities: profile.effective_identities() }
}
