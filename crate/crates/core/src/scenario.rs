//! Scenario description consumed by the engine, plus its validation.
//!
//! Every field has a documented default so that small hand-written files
//! stay small. `validate` reports all constraint violations at once, each
//! tagged with the key path of the offending field.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::admission::{AdmissionPolicy, PoolConfig};
use crate::model::{
    AccessIdentitySet, ArpProfile, AttemptTraits, CellId, EstablishmentCause, GnbId, NpnId, PlmnId, ResourceType,
    Snssai, Tac,
};
use crate::preventive::{CellAccessInfo, PagingConfig, UacConfig};
use crate::random_access::RachConfig;
use crate::time::{SimDuration, SimTime};

pub const DEFAULT_PLMN: PlmnId = match PlmnId::new(1, 1, false) {
    Ok(p) => p,
    Err(_) => panic!("valid test PLMN"),
};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct ScenarioConfig {
    pub name: String,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "String::is_empty"))]
    pub description: String,
    pub duration: SimDuration,
    #[cfg_attr(feature = "serde", serde(default = "default_seed"))]
    pub seed: u64,
    /// Delay for RAN paging forwarded to cells of another gNB.
    #[cfg_attr(feature = "serde", serde(default = "default_inter_gnb_delay"))]
    pub inter_gnb_delay: SimDuration,
    /// Let retries land on a different beam, which resets power ramping.
    #[cfg_attr(feature = "serde", serde(default))]
    pub randomize_beam: bool,
    pub cells: Vec<CellConfig>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub populations: Vec<PopulationConfig>,
}

#[cfg_attr(not(feature = "serde"), allow(dead_code))]
fn default_seed() -> u64 {
    1
}

#[cfg_attr(not(feature = "serde"), allow(dead_code))]
fn default_inter_gnb_delay() -> SimDuration {
    SimDuration::from_millis(5)
}

#[cfg_attr(not(feature = "serde"), allow(dead_code))]
fn default_access() -> CellAccessInfo {
    CellAccessInfo { plmn_ids: vec![DEFAULT_PLMN], ..Default::default() }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct CellConfig {
    pub id: CellId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub gnb: GnbId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub tac: Tac,
    #[cfg_attr(feature = "serde", serde(default = "default_access"))]
    pub access: CellAccessInfo,
    #[cfg_attr(feature = "serde", serde(default))]
    pub rach: RachConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub uac: UacConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub pools: PoolConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub admission: AdmissionPolicy,
    #[cfg_attr(feature = "serde", serde(default))]
    pub paging: PagingConfig,
}

impl CellConfig {
    /// A plain cell broadcasting the default PLMN with stock settings.
    pub fn new(id: u32) -> Self {
        CellConfig {
            id: CellId(id),
            gnb: GnbId(id),
            tac: Tac(1),
            access: default_access(),
            rach: RachConfig::default(),
            uac: UacConfig::default(),
            pools: PoolConfig::default(),
            admission: AdmissionPolicy::default(),
            paging: PagingConfig::default(),
        }
    }
}

/// How a population's arrivals reach the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum RequestKind {
    /// Full access: cell selection, UAC, random access, then admission of an
    /// initial setup or resume.
    #[default]
    Connection,
    /// UEs stay connected; each arrival is a QoS flow setup sent straight to
    /// admission control.
    QosFlow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum InitialState {
    #[default]
    Idle,
    Inactive,
    Connected,
}

/// RRC state a UE returns to when its connection is released.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum ReleaseTo {
    #[default]
    Idle,
    Inactive,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default, deny_unknown_fields))]
pub struct UeTemplate {
    pub access_identities: AccessIdentitySet,
    pub home_plmn: PlmnId,
    pub equivalent_plmns: Vec<PlmnId>,
    pub in_home_country: bool,
    pub in_home_plmn: bool,
    pub priority_ai_granted_abroad: bool,
    pub npn_authorized: Vec<NpnId>,
    pub subscribed_slices: Vec<Snssai>,
    pub initial_state: InitialState,
    /// dB between UE and gNB; received preamble power is tx power minus this.
    pub path_loss: f64,
    /// Defaults to the serving cell's tracking area.
    pub tracking_areas: Vec<Tac>,
    pub rna: Vec<CellId>,
}

impl Default for UeTemplate {
    fn default() -> Self {
        UeTemplate {
            access_identities: AccessIdentitySet::default(),
            home_plmn: DEFAULT_PLMN,
            equivalent_plmns: Vec::new(),
            in_home_country: true,
            in_home_plmn: true,
            priority_ai_granted_abroad: false,
            npn_authorized: Vec::new(),
            subscribed_slices: Vec::new(),
            initial_state: InitialState::Idle,
            path_loss: 90.0,
            tracking_areas: Vec::new(),
            rna: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct FlowTemplate {
    pub arp: ArpProfile,
    pub resource_type: ResourceType,
    pub snssai: Snssai,
    #[cfg_attr(feature = "serde", serde(default))]
    pub demand: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct CauseWeight {
    pub cause: EstablishmentCause,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct ScriptedAttempt {
    pub at: SimTime,
    pub ue_index: u32,
    pub cause: EstablishmentCause,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum TrafficModel {
    /// Independent Poisson arrivals per UE, `rate` per second.
    Poisson {
        rate: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        start: SimTime,
    },
    /// One attempt per UE, uniformly placed in
    /// `[activation_time, activation_time + jitter]`.
    Burst { activation_time: SimTime, jitter: SimDuration },
    /// Mobile-terminated paging arrivals for the population, `rate` per
    /// second in total. `priority_mix[i]` weights paging priority `i + 1`.
    PagingLoad { rate: f64, priority_mix: Vec<f64> },
    /// Attempts at fixed times.
    Scripted { attempts: Vec<ScriptedAttempt> },
    /// No arrivals; the population only exists to be paged or pre-empted.
    Silent,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct PopulationConfig {
    pub name: String,
    pub count: u32,
    pub cell: CellId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub kind: RequestKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub template: UeTemplate,
    pub traffic: TrafficModel,
    #[cfg_attr(feature = "serde", serde(default = "default_cause_mix"))]
    pub cause_mix: Vec<CauseWeight>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub traits: AttemptTraits,
    /// Flows requested on each admission. Empty means signalling only.
    #[cfg_attr(feature = "serde", serde(default))]
    pub flows: Vec<FlowTemplate>,
    /// Mean of the exponential connection (or flow) holding time.
    #[cfg_attr(feature = "serde", serde(default = "default_holding_time"))]
    pub holding_time: SimDuration,
    #[cfg_attr(feature = "serde", serde(default))]
    pub release_to: ReleaseTo,
    /// Use the cell's prioritized RA parameters for UEs holding AI 1 or 2.
    #[cfg_attr(feature = "serde", serde(default))]
    pub prioritized_ra: bool,
    /// Paged UEs start a mobile-terminated access.
    #[cfg_attr(feature = "serde", serde(default))]
    pub respond_to_paging: bool,
}

fn default_cause_mix() -> Vec<CauseWeight> {
    vec![CauseWeight { cause: EstablishmentCause::MoData, weight: 1.0 }]
}

fn default_holding_time() -> SimDuration {
    SimDuration::from_secs(10)
}

impl PopulationConfig {
    pub fn new(name: &str, count: u32, cell: u32, traffic: TrafficModel) -> Self {
        PopulationConfig {
            name: name.to_string(),
            count,
            cell: CellId(cell),
            kind: RequestKind::Connection,
            template: UeTemplate::default(),
            traffic,
            cause_mix: default_cause_mix(),
            traits: AttemptTraits::default(),
            flows: Vec::new(),
            holding_time: default_holding_time(),
            release_to: ReleaseTo::Idle,
            prioritized_ra: false,
            respond_to_paging: false,
        }
    }
}

/// One constraint violation, located by key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Errors(Vec<ValidationError>);

impl Errors {
    fn push(&mut self, path: impl Into<String>, message: impl ToString) {
        self.0.push(ValidationError { path: path.into(), message: message.to_string() });
    }

    fn check(&mut self, ok: bool, path: impl Into<String>, message: impl ToString) {
        if !ok {
            self.push(path, message);
        }
    }
}

const MIX_TOLERANCE: f64 = 1e-9;

fn check_mix(errs: &mut Errors, path: String, weights: impl Iterator<Item = f64>) {
    let mut sum = 0.0;
    let mut any = false;
    for w in weights {
        any = true;
        if !(w >= 0.0 && w.is_finite()) {
            errs.push(path.clone(), format!("weight {w} must be finite and >= 0"));
        }
        sum += w;
    }
    if any && (sum - 1.0).abs() > MIX_TOLERANCE {
        errs.push(path, format!("weights sum to {sum}, expected 1"));
    } else if !any {
        errs.push(path, "must list at least one entry");
    }
}

impl ScenarioConfig {
    pub fn cell(&self, id: CellId) -> Option<&CellConfig> {
        self.cells.iter().find(|c| c.id == id)
    }

    pub fn total_ues(&self) -> u64 {
        self.populations.iter().map(|p| p.count as u64).sum()
    }

    /// Checks every constraint and returns all violations.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut errs = Errors(Vec::new());
        errs.check(!self.name.is_empty(), "name", "must not be empty");
        errs.check(!self.duration.is_zero(), "duration", "must be > 0");
        errs.check(!self.cells.is_empty(), "cells", "at least one cell is required");

        for (i, cell) in self.cells.iter().enumerate() {
            let at = |k: &str| format!("cells[{i}].{k}");
            if self.cells[..i].iter().any(|c| c.id == cell.id) {
                errs.push(at("id"), format!("duplicate cell id {}", cell.id));
            }
            errs.check(!cell.access.plmn_ids.is_empty(), at("access.plmn_ids"), "must list at least one PLMN");
            if let Err(e) = cell.rach.validate() {
                errs.push(at("rach"), e);
            }
            for (j, entry) in cell.uac.entries.iter().enumerate() {
                let key = format!("cells[{i}].uac.entries[{j}]");
                if let Err(e) = entry.validate() {
                    let field = match e {
                        crate::preventive::UacConfigError::FactorRange(_) => ".barring_factor",
                        crate::preventive::UacConfigError::ZeroTime => ".barring_time",
                        crate::preventive::UacConfigError::BitmapIdentities(_) => ".allowed_identities",
                        _ => ".category",
                    };
                    errs.push(format!("{key}{field}"), e);
                }
                if cell.uac.entries[..j].iter().any(|o| o.category == entry.category) {
                    errs.push(format!("{key}.category"), format!("duplicate entry for access category {}", entry.category));
                }
            }
            for (j, slice) in cell.pools.slices.iter().enumerate() {
                let key = format!("cells[{i}].pools.slices[{j}].snssai");
                if let Err(e) = slice.snssai.validate() {
                    errs.push(key.clone(), e);
                }
                if cell.pools.slices[..j].iter().any(|s| s.snssai == slice.snssai) {
                    errs.push(key, format!("duplicate slice {}", slice.snssai));
                }
            }
            let adm = &cell.admission;
            if adm.queueing {
                errs.check(!adm.queue_timeout.is_zero(), at("admission.queue_timeout"), "must be > 0 when queueing");
            }
            errs.check(cell.paging.budget > 0, at("paging.budget"), "must be > 0");
            errs.check(!cell.paging.cycle.is_zero(), at("paging.cycle"), "must be > 0");
            errs.check(
                (1..=8).contains(&cell.paging.priority_levels),
                at("paging.priority_levels"),
                "must be in 1..=8",
            );
        }

        for (i, pop) in self.populations.iter().enumerate() {
            let at = |k: &str| format!("populations[{i}].{k}");
            errs.check(!pop.name.is_empty(), at("name"), "must not be empty");
            if self.populations[..i].iter().any(|p| p.name == pop.name) {
                errs.push(at("name"), format!("duplicate population `{}`", pop.name));
            }
            let cell = self.cell(pop.cell);
            if cell.is_none() {
                errs.push(at("cell"), format!("unknown cell {}", pop.cell));
            }
            let known_slice = |s: &Snssai| self.cells.iter().any(|c| c.pools.slices.iter().any(|p| p.snssai == *s));
            let t = &pop.template;
            errs.check(t.subscribed_slices.len() <= 8, at("template.subscribed_slices"), "at most 8 slices");
            for (j, s) in t.subscribed_slices.iter().enumerate() {
                errs.check(
                    known_slice(s),
                    format!("populations[{i}].template.subscribed_slices[{j}]"),
                    format!("slice {s} has no pool in any cell"),
                );
            }
            errs.check(t.path_loss.is_finite(), at("template.path_loss"), "must be finite");
            for (j, c) in t.rna.iter().enumerate() {
                errs.check(
                    self.cell(*c).is_some(),
                    format!("populations[{i}].template.rna[{j}]"),
                    format!("unknown cell {c}"),
                );
            }
            check_mix(&mut errs, at("cause_mix"), pop.cause_mix.iter().map(|c| c.weight));
            for (j, f) in pop.flows.iter().enumerate() {
                let key = format!("populations[{i}].flows[{j}]");
                if let Err(e) = f.arp.validate() {
                    errs.push(format!("{key}.arp.priority_level"), e);
                }
                if f.resource_type.reserves_units() && f.demand == 0 {
                    errs.push(format!("{key}.demand"), "GBR flows need demand > 0");
                }
                errs.check(known_slice(&f.snssai), format!("{key}.snssai"), format!("slice {} has no pool in any cell", f.snssai));
            }
            if pop.kind == RequestKind::QosFlow {
                errs.check(!pop.flows.is_empty(), at("flows"), "qos_flow populations need at least one flow");
            }
            match &pop.traffic {
                TrafficModel::Poisson { rate, .. } => {
                    errs.check(rate.is_finite() && *rate >= 0.0, at("traffic.rate"), "must be finite and >= 0");
                }
                TrafficModel::Burst { .. } => {
                    errs.check(pop.count > 0, at("count"), "burst traffic needs a non-empty population");
                }
                TrafficModel::PagingLoad { rate, priority_mix } => {
                    errs.check(rate.is_finite() && *rate >= 0.0, at("traffic.rate"), "must be finite and >= 0");
                    check_mix(&mut errs, at("traffic.priority_mix"), priority_mix.iter().copied());
                    if let Some(c) = cell {
                        errs.check(
                            priority_mix.len() <= c.paging.priority_levels as usize,
                            at("traffic.priority_mix"),
                            format!("more levels than the cell's {} paging priorities", c.paging.priority_levels),
                        );
                    }
                    errs.check(pop.count > 0 || *rate == 0.0, at("count"), "paging load needs UEs to page");
                }
                TrafficModel::Scripted { attempts } => {
                    for (j, a) in attempts.iter().enumerate() {
                        errs.check(
                            a.ue_index < pop.count,
                            format!("populations[{i}].traffic.attempts[{j}].ue_index"),
                            format!("must be < count ({})", pop.count),
                        );
                    }
                }
                TrafficModel::Silent => {}
            }
        }

        if errs.0.is_empty() {
            Ok(())
        } else {
            Err(errs.0)
        }
    }
}
