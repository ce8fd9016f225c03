//! Scenarios shipped with the binary.

use std::path::Path;

use toml::Table;

use crate::config::{self, ConfigError};

pub struct Builtin {
    pub name: &'static str,
    pub source: &'static str,
}

pub const BUILTINS: [Builtin; 5] = [
    Builtin { name: "mc_surge", source: include_str!("../scenarios/mc_surge.toml") },
    Builtin { name: "npn_reservation", source: include_str!("../scenarios/npn_reservation.toml") },
    Builtin { name: "massive_iot_burst", source: include_str!("../scenarios/massive_iot_burst.toml") },
    Builtin { name: "slice_contention", source: include_str!("../scenarios/slice_contention.toml") },
    Builtin { name: "paging_storm", source: include_str!("../scenarios/paging_storm.toml") },
];

pub fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// First comment paragraph of the scenario file.
pub fn summary(b: &Builtin) -> String {
    b.source
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim())
        .take_while(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Loads `spec` as a file path if it exists, otherwise as a builtin name.
pub fn load_table(spec: &str) -> Result<Table, ConfigError> {
    let path = Path::new(spec);
    if path.exists() {
        return config::read_table(path);
    }
    match builtin(spec) {
        Some(b) => config::parse_table(b.source),
        None => config::read_table(path),
    }
}
