use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CASE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusType {
    #[serde(alias = "SLACK", alias = "ref", alias = "REF")]
    Slack,
    #[serde(alias = "PV")]
    Pv,
    #[serde(alias = "PQ")]
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: usize,
    #[serde(rename = "type")]
    pub kind: BusType,
    /// Voltage magnitude setpoint (slack and PV buses), pu.
    #[serde(default = "unity")]
    pub v_setpoint: f64,
    #[serde(default)]
    pub p_load: f64,
    #[serde(default)]
    pub q_load: f64,
}

fn unity() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance, split equally between the ends.
    #[serde(default)]
    pub b: f64,
}

impl Branch {
    pub fn impedance_magnitude(&self) -> f64 {
        self.r.hypot(self.x)
    }
}

/// Classical machine data. Generator ids are 1-based positions in the case file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub bus: usize,
    /// Inertia constant on system base, s.
    pub h: f64,
    /// Damping, pu torque per pu speed.
    #[serde(default)]
    pub d: f64,
    /// Transient reactance x'd, pu.
    pub xd_prime: f64,
    /// Active dispatch, pu. Ignored at the slack bus.
    #[serde(default)]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemCase {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub base_mva: f64,
    pub frequency_hz: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

/// Reads and validates a case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<SystemCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SystemCase::from_json(&text)
}

impl SystemCase {
    pub fn from_json(text: &str) -> Result<Self> {
        let case: SystemCase = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        case.validate()?;
        Ok(case)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serialization is infallible")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CASE_FORMAT_VERSION {
            return Err(Error::Semantic(format!(
                "unsupported case version {} (expected {CASE_FORMAT_VERSION})",
                self.version
            )));
        }
        if !(self.base_mva > 0.0) || !(self.frequency_hz > 0.0) {
            return Err(Error::Semantic(
                "base_mva and frequency_hz must be positive".into(),
            ));
        }
        let mut ids = HashSet::new();
        for bus in &self.buses {
            if !ids.insert(bus.id) {
                return Err(Error::Semantic(format!("duplicate bus id {}", bus.id)));
            }
            if !(bus.v_setpoint > 0.0) || !bus.p_load.is_finite() || !bus.q_load.is_finite() {
                return Err(Error::Semantic(format!("bus {}: invalid voltage or load", bus.id)));
            }
        }
        let slacks = self
            .buses
            .iter()
            .filter(|b| b.kind == BusType::Slack)
            .count();
        if slacks != 1 {
            return Err(Error::Semantic(format!(
                "expected exactly one slack bus, found {slacks}"
            )));
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !ids.contains(&end) {
                    return Err(Error::Semantic(format!(
                        "branch {} references unknown bus {end}",
                        k + 1
                    )));
                }
            }
            if br.from == br.to {
                return Err(Error::Semantic(format!("branch {} is a self-loop", k + 1)));
            }
            if !(br.impedance_magnitude() > 0.0) || !br.b.is_finite() {
                return Err(Error::Semantic(format!(
                    "branch {} has zero or invalid series impedance",
                    k + 1
                )));
            }
        }
        let mut gen_buses = HashSet::new();
        for (k, g) in self.generators.iter().enumerate() {
            let id = k + 1;
            if !ids.contains(&g.bus) {
                return Err(Error::Semantic(format!(
                    "generator {id} references unknown bus {}",
                    g.bus
                )));
            }
            if !gen_buses.insert(g.bus) {
                return Err(Error::Semantic(format!(
                    "bus {} hosts more than one generator",
                    g.bus
                )));
            }
            if !(g.h > 0.0) {
                return Err(Error::Semantic(format!("generator {id}: H must be positive")));
            }
            if !(g.xd_prime > 0.0) {
                return Err(Error::Semantic(format!("generator {id}: x'd must be positive")));
            }
            if !(g.d >= 0.0) || !g.p.is_finite() {
                return Err(Error::Semantic(format!(
                    "generator {id}: D must be non-negative and P finite"
                )));
            }
        }
        Ok(())
    }

    /// Position of `id` in `buses`.
    pub fn bus_index(&self, id: usize) -> Result<usize> {
        self.buses
            .iter()
            .position(|b| b.id == id)
            .ok_or(Error::UnknownBus(id))
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusType::Slack)
            .expect("validated case has a slack bus")
    }

    /// Generator position hosted at bus `id`, if any.
    pub fn generator_at(&self, id: usize) -> Option<usize> {
        self.generators.iter().position(|g| g.bus == id)
    }

    pub fn n_gen(&self) -> usize {
        self.generators.len()
    }

    /// Synchronous speed, rad/s.
    pub fn omega_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency_hz
    }

    /// Bus ids of all generator terminals in generator order.
    pub fn generator_buses(&self) -> Vec<usize> {
        self.generators.iter().map(|g| g.bus).collect()
    }
}
