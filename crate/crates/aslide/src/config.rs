//! Network configuration, validation, and the plain-text config file format.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Node identifier. Id 0 is always the sender, id `n - 1` the receiver, and
/// ids `1..n-1` the internal routing nodes.
pub type NodeId = u32;

pub const SENDER: NodeId = 0;

/// Communication model the schedule is executed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Awakened endpoints exchange messages within the honoring round, so
    /// height information is never stale.
    SemiAsync,
    /// Requests sit in the adversary's buffer until the edge is honored
    /// again; decisions run on recorded heights.
    FullyAsync,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::SemiAsync => write!(f, "semi-async"),
            Mode::FullyAsync => write!(f, "fully-async"),
        }
    }
}

/// Which packet-movement rules drive the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Slide,
    SlidePlus,
    OfflinePlan,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolKind::Slide => write!(f, "slide"),
            ProtocolKind::SlidePlus => write!(f, "slide-plus"),
            ProtocolKind::OfflinePlan => write!(f, "offline-plan"),
        }
    }
}

/// Schedule source named in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    Random,
    Cyclic,
    Greedy,
    Replay,
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryKind::Random => write!(f, "random"),
            AdversaryKind::Cyclic => write!(f, "cyclic"),
            AdversaryKind::Greedy => write!(f, "greedy"),
            AdversaryKind::Replay => write!(f, "replay"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    TooFewNodes(u32),
    ShareNotIntegral { n: u32, capacity: u64 },
    CapacityTooSmall { required: u64, capacity: u64, why: &'static str },
    Unsupported { protocol: ProtocolKind, mode: Mode },
    Parse { line: usize, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::TooFewNodes(n) => write!(f, "n = {n} too small; at least 4 nodes required"),
            ConfigError::ShareNotIntegral { n, capacity } => {
                write!(f, "C/n not integer (C = {capacity}, n = {n})")
            }
            ConfigError::CapacityTooSmall { required, capacity, why } => {
                write!(f, "C = {capacity} too small: {why} requires C >= {required}")
            }
            ConfigError::Unsupported { protocol, mode } => {
                write!(f, "protocol {protocol} is not defined for the {mode} model")
            }
            ConfigError::Parse { line, reason } => write!(f, "config line {line}: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Global parameters every movement rule is phrased in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Node count, sender and receiver included.
    pub n: u32,
    /// Per-node memory capacity in packets.
    pub capacity: u64,
    pub mode: Mode,
    pub protocol: ProtocolKind,
}

impl NetworkConfig {
    pub fn new(n: u32, capacity: u64, mode: Mode, protocol: ProtocolKind) -> NetworkConfig {
        NetworkConfig { n, capacity, mode, protocol }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 4 {
            return Err(ConfigError::TooFewNodes(self.n));
        }
        if self.capacity == 0 || !self.capacity.is_multiple_of(self.n as u64) {
            return Err(ConfigError::ShareNotIntegral { n: self.n, capacity: self.capacity });
        }
        let n = self.n as u64;
        match (self.protocol, self.mode) {
            (ProtocolKind::Slide, Mode::SemiAsync) => {
                if self.capacity < 2 * n {
                    return Err(ConfigError::CapacityTooSmall {
                        required: 2 * n,
                        capacity: self.capacity,
                        why: "slide",
                    });
                }
            }
            (ProtocolKind::SlidePlus, Mode::FullyAsync) => {
                if self.capacity < 8 * n * n {
                    return Err(ConfigError::CapacityTooSmall {
                        required: 8 * n * n,
                        capacity: self.capacity,
                        why: "slide-plus",
                    });
                }
            }
            (ProtocolKind::OfflinePlan, _) => {}
            (protocol, mode) => return Err(ConfigError::Unsupported { protocol, mode }),
        }
        Ok(())
    }

    /// The height-differential unit C/n.
    pub fn share(&self) -> u64 {
        self.capacity / self.n as u64
    }

    pub fn receiver(&self) -> NodeId {
        self.n - 1
    }

    pub fn internal_count(&self) -> usize {
        self.n as usize - 2
    }

    pub fn internal_ids(&self) -> impl Iterator<Item = NodeId> {
        1..self.n - 1
    }

    pub fn is_internal(&self, v: NodeId) -> bool {
        v != SENDER && v != self.receiver()
    }

    /// Height piggybacked on every sender request: C + C/n - 1.
    pub fn sender_height(&self) -> i64 {
        (self.capacity + self.share() - 1) as i64
    }

    /// Height piggybacked on every receiver request: -C/n.
    pub fn receiver_height(&self) -> i64 {
        -(self.share() as i64)
    }

    /// Movement threshold for slide: C/n.
    pub fn slide_threshold(&self) -> i64 {
        self.share() as i64
    }

    /// Movement threshold for slide-plus: C/n - 2n.
    pub fn plus_threshold(&self) -> i64 {
        self.share() as i64 - 2 * self.n as i64
    }
}

/// A full experiment description as read from a `key = value` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub net: NetworkConfig,
    pub adversary: AdversaryKind,
    pub seed: u64,
    pub rounds: u64,
}

/// Parses the `key = value` config format. Keys: n, C, mode, protocol,
/// adversary, seed, rounds. Blank lines and `#` comments are ignored; mode
/// defaults to the protocol's native model when omitted.
pub fn parse_run_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut n: Option<u32> = None;
    let mut capacity: Option<u64> = None;
    let mut mode: Option<Mode> = None;
    let mut protocol: Option<ProtocolKind> = None;
    let mut adversary = AdversaryKind::Random;
    let mut seed = 0u64;
    let mut rounds = 0u64;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            reason: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |reason: String| ConfigError::Parse { line: line_no, reason };
        match key {
            "n" => n = Some(value.parse().map_err(|_| bad(format!("bad n `{value}`")))?),
            "C" => capacity = Some(value.parse().map_err(|_| bad(format!("bad C `{value}`")))?),
            "mode" => {
                mode = Some(match value {
                    "semi-async" => Mode::SemiAsync,
                    "fully-async" => Mode::FullyAsync,
                    other => return Err(bad(format!("unknown mode `{other}`"))),
                })
            }
            "protocol" => {
                protocol = Some(match value {
                    "slide" => ProtocolKind::Slide,
                    "slide-plus" => ProtocolKind::SlidePlus,
                    "offline-plan" => ProtocolKind::OfflinePlan,
                    other => return Err(bad(format!("unknown protocol `{other}`"))),
                })
            }
            "adversary" => {
                adversary = match value {
                    "random" => AdversaryKind::Random,
                    "cyclic" => AdversaryKind::Cyclic,
                    "greedy" => AdversaryKind::Greedy,
                    "replay" => AdversaryKind::Replay,
                    other => return Err(bad(format!("unknown adversary `{other}`"))),
                }
            }
            "seed" => seed = value.parse().map_err(|_| bad(format!("bad seed `{value}`")))?,
            "rounds" => rounds = value.parse().map_err(|_| bad(format!("bad rounds `{value}`")))?,
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }

    let protocol = protocol.ok_or(ConfigError::Parse { line: 0, reason: "missing protocol".into() })?;
    let mode = mode.unwrap_or(match protocol {
        ProtocolKind::Slide => Mode::SemiAsync,
        ProtocolKind::SlidePlus => Mode::FullyAsync,
        ProtocolKind::OfflinePlan => Mode::SemiAsync,
    });
    let net = NetworkConfig {
        n: n.ok_or(ConfigError::Parse { line: 0, reason: "missing n".into() })?,
        capacity: capacity.ok_or(ConfigError::Parse { line: 0, reason: "missing C".into() })?,
        mode,
        protocol,
    };
    Ok(RunConfig { net, adversary, seed, rounds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_slide_semi_async() {
        let cfg = NetworkConfig::new(8, 64, Mode::SemiAsync, ProtocolKind::Slide);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.share(), 8);
        assert_eq!(cfg.sender_height(), 71);
        assert_eq!(cfg.receiver_height(), -8);
    }

    #[test]
    fn accepts_slide_plus_fully_async() {
        let cfg = NetworkConfig::new(4, 128, Mode::FullyAsync, ProtocolKind::SlidePlus);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.plus_threshold(), 24);
    }

    #[test]
    fn rejects_non_integral_share() {
        let cfg = NetworkConfig::new(8, 100, Mode::SemiAsync, ProtocolKind::Slide);
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("C/n not integer"), "{err}");
    }

    #[test]
    fn rejects_small_networks_and_capacities() {
        let cfg = NetworkConfig::new(3, 24, Mode::SemiAsync, ProtocolKind::Slide);
        assert_eq!(cfg.validate(), Err(ConfigError::TooFewNodes(3)));
        let cfg = NetworkConfig::new(8, 8, Mode::SemiAsync, ProtocolKind::Slide);
        assert!(matches!(cfg.validate(), Err(ConfigError::CapacityTooSmall { required: 16, .. })));
        let cfg = NetworkConfig::new(4, 64, Mode::FullyAsync, ProtocolKind::SlidePlus);
        assert!(matches!(cfg.validate(), Err(ConfigError::CapacityTooSmall { required: 128, .. })));
    }

    #[test]
    fn rejects_protocol_outside_its_model() {
        let cfg = NetworkConfig::new(8, 64, Mode::FullyAsync, ProtocolKind::Slide);
        assert!(matches!(cfg.validate(), Err(ConfigError::Unsupported { .. })));
        let cfg = NetworkConfig::new(4, 128, Mode::SemiAsync, ProtocolKind::SlidePlus);
        assert!(matches!(cfg.validate(), Err(ConfigError::Unsupported { .. })));
    }

    #[test]
    fn parses_config_file() {
        let text = "# experiment\nn = 8\nC = 64\nprotocol = slide\nadversary = cyclic\nseed = 7\nrounds = 448\n";
        let rc = parse_run_config(text).unwrap();
        assert_eq!(rc.net.n, 8);
        assert_eq!(rc.net.mode, Mode::SemiAsync);
        assert_eq!(rc.adversary, AdversaryKind::Cyclic);
        assert_eq!(rc.rounds, 448);
        assert!(parse_run_config("n = x\n").is_err());
        assert!(parse_run_config("n = 8\nC = 64\n").is_err());
    }
}
