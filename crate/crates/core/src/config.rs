//! Scenario configuration: TOML sections covering geometry, MAC, trickle,
//! energy accounting, traffic, the attacker, and detection. Every key has a
//! default; a scenario file only states what it overrides.

use serde::Deserialize;
use thiserror::Error;

use crate::adversary::{AttackerConfig, AttackerPlacement};
use crate::detection::DetectionConfig;
use crate::message::MessageSizes;
use crate::node::Mode;
use crate::time::SimTime;
use crate::topology::TopologyParams;
use crate::trickle::TrickleConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid scenario file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub duration_s: f64,
    pub mode: Mode,
    pub traffic_start_s: f64,
    pub traffic_period_s: f64,
    pub data_bytes: u32,
    /// Nodes power on at a uniform offset in [0, this].
    pub poweron_max_s: f64,
    /// Unjoined nodes solicit DIOs at this period.
    pub dis_interval_s: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            duration_s: 1800.0,
            mode: Mode::NonStoring,
            traffic_start_s: 60.0,
            traffic_period_s: 60.0,
            data_bytes: 50,
            poweron_max_s: 10.0,
            dis_interval_s: 15.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub nodes: usize,
    pub area_side_m: f64,
    pub tx_range_m: f64,
    pub interference_range_m: f64,
    pub seed: u64,
    pub connect_retries: u32,
    /// Load coordinates from a topology table instead of generating.
    pub file: Option<String>,
}

impl Default for TopologySection {
    fn default() -> Self {
        TopologySection {
            nodes: 20,
            area_side_m: 150.0,
            tx_range_m: 40.0,
            interference_range_m: 80.0,
            seed: 1,
            connect_retries: 1000,
            file: None,
        }
    }
}

impl TopologySection {
    pub fn params(&self) -> TopologyParams {
        TopologyParams {
            area_side_m: self.area_side_m,
            tx_range_m: self.tx_range_m,
            interference_range_m: self.interference_range_m,
            connect_retries: self.connect_retries,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedsSection {
    pub scenario: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        SeedsSection { scenario: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrickleSection {
    pub imin_s: f64,
    pub doublings: u32,
    pub redundancy: u32,
}

impl Default for TrickleSection {
    fn default() -> Self {
        TrickleSection {
            imin_s: 4.0,
            doublings: 8,
            redundancy: 10,
        }
    }
}

impl TrickleSection {
    pub fn config(&self) -> TrickleConfig {
        TrickleConfig {
            imin: SimTime::from_secs_f64(self.imin_s),
            doublings: self.doublings,
            redundancy: self.redundancy,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacSection {
    pub bitrate_bps: u64,
    pub backoff_min_s: f64,
    pub backoff_max_s: f64,
    pub max_retries: u32,
    /// Per-reception success probability (1.0 = lossless links).
    pub success_prob: f64,
}

impl Default for MacSection {
    fn default() -> Self {
        MacSection {
            bitrate_bps: 250_000,
            backoff_min_s: 0.0005,
            backoff_max_s: 0.005,
            max_retries: 3,
            success_prob: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BytesSection {
    pub dio: u32,
    pub dis: u32,
    pub dao: u32,
}

impl Default for BytesSection {
    fn default() -> Self {
        let s = MessageSizes::default();
        BytesSection {
            dio: s.dio,
            dis: s.dis,
            dao: s.dao,
        }
    }
}

impl BytesSection {
    pub fn sizes(&self) -> MessageSizes {
        MessageSizes {
            dio: self.dio,
            dis: self.dis,
            dao: self.dao,
        }
    }
}

/// Radio energy accounting; defaults are calibrated to a CC2420-class
/// transceiver. Idle draw is charged for the whole run.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub tx_mj_per_byte: f64,
    pub rx_mj_per_byte: f64,
    pub idle_mw: f64,
}

impl Default for EnergySection {
    fn default() -> Self {
        EnergySection {
            tx_mj_per_byte: 0.000576,
            rx_mj_per_byte: 0.000634,
            idle_mw: 0.054,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    /// DAOs go out after a uniform delay in [0, this] (aggregation wait).
    pub dao_delay_max_s: f64,
    /// Periodic DAO refresh; 0 disables it.
    pub dao_refresh_period_s: f64,
    /// Root-initiated DTSN increments (legitimate network-wide DAO refresh);
    /// 0 disables them.
    pub root_dtsn_refresh_period_s: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            dao_delay_max_s: 4.0,
            dao_refresh_period_s: 0.0,
            root_dtsn_refresh_period_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackerSection {
    pub enabled: bool,
    /// Pin the attacker to a node id; unset selects per `placement`.
    pub node: Option<u16>,
    pub placement: AttackerPlacement,
    pub increment_period_s: f64,
    pub start_time_s: f64,
    pub drop_descendant_daos: bool,
}

impl Default for AttackerSection {
    fn default() -> Self {
        let d = AttackerConfig::default();
        AttackerSection {
            enabled: false,
            node: None,
            placement: d.placement,
            increment_period_s: d.increment_period.as_secs_f64(),
            start_time_s: d.start_time.as_secs_f64(),
            drop_descendant_daos: d.drop_descendant_daos,
        }
    }
}

impl AttackerSection {
    pub fn config(&self) -> AttackerConfig {
        AttackerConfig {
            node: self.node.map(crate::topology::NodeId),
            placement: self.placement,
            increment_period: SimTime::from_secs_f64(self.increment_period_s),
            start_time: SimTime::from_secs_f64(self.start_time_s),
            drop_descendant_daos: self.drop_descendant_daos,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub sim: SimSection,
    pub topology: TopologySection,
    pub seeds: SeedsSection,
    pub trickle: TrickleSection,
    pub mac: MacSection,
    pub bytes: BytesSection,
    pub energy: EnergySection,
    pub protocol: ProtocolSection,
    pub attacker: AttackerSection,
    pub detection: DetectionConfig,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sim.duration_s <= 0.0 {
            return Err(invalid("sim.duration_s must be positive"));
        }
        if self.sim.traffic_period_s <= 0.0 {
            return Err(invalid("sim.traffic_period_s must be positive"));
        }
        if self.topology.nodes < 2 {
            return Err(invalid("topology.nodes must be at least 2"));
        }
        if self.topology.nodes > u16::MAX as usize {
            return Err(invalid("topology.nodes exceeds the node id range"));
        }
        if self.topology.tx_range_m <= 0.0 {
            return Err(invalid("topology.tx_range_m must be positive"));
        }
        if self.topology.tx_range_m > self.topology.interference_range_m {
            return Err(invalid(
                "topology.tx_range_m must not exceed topology.interference_range_m",
            ));
        }
        if self.trickle.imin_s <= 0.0 {
            return Err(invalid("trickle.imin_s must be positive"));
        }
        if self.mac.bitrate_bps == 0 {
            return Err(invalid("mac.bitrate_bps must be positive"));
        }
        if self.mac.backoff_min_s <= 0.0 || self.mac.backoff_max_s < self.mac.backoff_min_s {
            return Err(invalid(
                "mac backoff range must satisfy 0 < backoff_min_s <= backoff_max_s",
            ));
        }
        if !(0.0..=1.0).contains(&self.mac.success_prob) {
            return Err(invalid("mac.success_prob must be within [0, 1]"));
        }
        if self.energy.tx_mj_per_byte < 0.0
            || self.energy.rx_mj_per_byte < 0.0
            || self.energy.idle_mw < 0.0
        {
            return Err(invalid("energy parameters must be non-negative"));
        }
        if self.protocol.dao_delay_max_s < 0.0 {
            return Err(invalid("protocol.dao_delay_max_s must be non-negative"));
        }
        if self.attacker.enabled {
            if self.attacker.increment_period_s <= 0.0 {
                return Err(invalid("attacker.increment_period_s must be positive"));
            }
            if let Some(node) = self.attacker.node {
                if node == 0 {
                    return Err(invalid("attacker.node cannot be the root"));
                }
                if node as usize >= self.topology.nodes {
                    return Err(invalid(format!(
                        "attacker.node {node} out of range for {} nodes",
                        self.topology.nodes
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> SimTime {
        SimTime::from_secs_f64(self.sim.duration_s)
    }

    pub fn dao_delay_max(&self) -> SimTime {
        SimTime::from_secs_f64(self.protocol.dao_delay_max_s)
    }
}

// serde impls for types defined alongside their modules

impl<'de> Deserialize<'de> for Mode {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let s = String::deserialize(deserializer)?;
        Mode::parse(&s).ok_or_else(|| {
            serde::de::Error::custom(format!("mode must be \"storing\" or \"non-storing\", got {s:?}"))
        })
    }
}
