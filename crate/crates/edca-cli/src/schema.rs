//! TOML configuration and scenario schemas.
//!
//! All durations are microseconds, PHY rates are Mbps (numerically equal to
//! bits/µs, so no conversion factor is applied). See `docs/config-schema.md`
//! for the full field reference.

use std::path::Path;

use edca_core::{AcClass, NetworkConfig, ProtocolTimings};
use serde::Deserialize;

use crate::error::AppError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingsSection {
    pub sigma: Option<f64>,
    pub sifs: Option<f64>,
    pub difs: Option<f64>,
    pub eifs: Option<f64>,
    pub t_rts: Option<f64>,
    pub t_cts: Option<f64>,
    pub t_ack: Option<f64>,
    pub t_phyhdr: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalSection {
    pub packet_bits: f64,
    pub retry_limit: Option<u32>,
    pub beacon_us: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSection {
    pub name: String,
    pub n: u32,
    pub per: f64,
    pub rate_mbps: f64,
    #[serde(default = "default_burst")]
    pub burst: u32,
    pub aifsn: u32,
    pub deadline_us: f64,
    #[serde(default = "default_cw_min")]
    pub cw_min: f64,
}

fn default_burst() -> u32 {
    1
}

fn default_cw_min() -> f64 {
    31.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub timings: Option<TimingsSection>,
    pub global: GlobalSection,
    pub classes: Vec<ClassSection>,
}

/// Parsed network config plus the class names used in reports and CSV
/// headers.
#[derive(Debug, Clone)]
pub struct NamedConfig {
    pub network: NetworkConfig,
    pub names: Vec<String>,
}

impl NamedConfig {
    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

pub fn parse_config(text: &str) -> Result<NamedConfig, AppError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
    let mut timings = ProtocolTimings::ieee80211a();
    if let Some(t) = &file.timings {
        if let Some(v) = t.sigma {
            timings.sigma = v;
        }
        if let Some(v) = t.sifs {
            timings.sifs = v;
        }
        if let Some(v) = t.difs {
            timings.difs = v;
        }
        if let Some(v) = t.t_rts {
            timings.t_rts = v;
        }
        if let Some(v) = t.t_cts {
            timings.t_cts = v;
        }
        if let Some(v) = t.t_ack {
            timings.t_ack = v;
        }
        if let Some(v) = t.t_phyhdr {
            timings.t_phyhdr = v;
        }
        // EIFS tracks its constituents unless pinned explicitly
        timings.eifs = t.eifs.unwrap_or(timings.t_ack + timings.sifs + timings.difs);
    }
    let classes: Vec<AcClass> = file
        .classes
        .iter()
        .map(|c| AcClass {
            n: c.n,
            per: c.per,
            rate: c.rate_mbps,
            burst: c.burst,
            aifsn: c.aifsn,
            deadline: c.deadline_us,
            cw_min: c.cw_min,
        })
        .collect();
    let names: Vec<String> = file.classes.iter().map(|c| c.name.clone()).collect();
    {
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(AppError::Config(format!("duplicate class name `{n}`")));
            }
        }
    }
    let network = NetworkConfig {
        timings,
        classes,
        packet_bits: file.global.packet_bits,
        retry_limit: file.global.retry_limit.unwrap_or(edca_core::config::DEFAULT_RETRY_LIMIT),
        beacon: file.global.beacon_us.unwrap_or(edca_core::config::DEFAULT_BEACON_US),
    };
    network.validate().map_err(|e| AppError::Config(e.to_string()))?;
    Ok(NamedConfig { network, names })
}

pub fn load_config(path: &Path) -> Result<NamedConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSection {
    pub at_us: f64,
    /// Class name the event applies to.
    pub class: String,
    /// New station count for that class.
    pub n: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    /// Weight on each deviation state in Q (default 1).
    pub q_state: Option<f64>,
    /// Weight on each integrator state in Q (default 50).
    pub q_int: Option<f64>,
    /// Control penalty R diagonal (default 1e-4).
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum SweepScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// "per" or "deadline".
    pub parameter: String,
    pub class: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub scale: SweepScale,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub duration_us: Option<f64>,
    pub seed: Option<u64>,
    pub controller: Option<ControllerSection>,
    #[serde(default)]
    pub events: Vec<EventSection>,
    pub sweep: Option<SweepSection>,
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, AppError> {
    let s: ScenarioFile = toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
    if s.sweep.is_some() && !s.events.is_empty() {
        return Err(AppError::Config(
            "a scenario may define events or a sweep, not both".into(),
        ));
    }
    let mut last = f64::NEG_INFINITY;
    for e in &s.events {
        if e.at_us <= last {
            return Err(AppError::Config("event times must be strictly increasing".into()));
        }
        last = e.at_us;
    }
    if let Some(sw) = &s.sweep {
        if sw.steps < 1 {
            return Err(AppError::Config("sweep.steps must be at least 1".into()));
        }
        if sw.scale == SweepScale::Log && (sw.start <= 0.0 || sw.stop <= 0.0) {
            return Err(AppError::Config("log sweeps need positive bounds".into()));
        }
        match sw.parameter.as_str() {
            "per" | "deadline" => {}
            other => {
                return Err(AppError::Config(format!(
                    "unknown sweep parameter `{other}` (expected `per` or `deadline`)"
                )))
            }
        }
    }
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

impl SweepSection {
    /// Grid points, inclusive of both endpoints.
    pub fn grid(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|i| {
                let f = i as f64 / (self.steps - 1) as f64;
                match self.scale {
                    SweepScale::Linear => self.start + f * (self.stop - self.start),
                    SweepScale::Log => {
                        (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                    }
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[global]
packet_bits = 8000.0

[[classes]]
name = "BK"
n = 1
per = 1e-6
rate_mbps = 54.0
aifsn = 7
deadline_us = 400000.0

[[classes]]
name = "VO"
n = 1
per = 1e-6
rate_mbps = 54.0
aifsn = 2
deadline_us = 200000.0
cw_min = 15.0
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = parse_config(BASE).unwrap();
        assert_eq!(cfg.names, vec!["BK", "VO"]);
        assert_eq!(cfg.network.classes[0].cw_min, 31.0);
        assert_eq!(cfg.network.classes[0].burst, 1);
        assert_eq!(cfg.network.retry_limit, 5);
        assert!((cfg.network.timings.eifs - 88.67).abs() < 1e-9);
        assert_eq!(cfg.class_index("VO"), Some(1));
    }

    #[test]
    fn missing_field_names_the_field() {
        let broken = BASE.replace("rate_mbps = 54.0\naifsn = 7", "aifsn = 7");
        let err = parse_config(&broken).unwrap_err();
        assert!(err.to_string().contains("rate_mbps"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let err = parse_config(&format!("{BASE}\n[sweep]\nfoo = 1\n")).unwrap_err();
        assert!(err.to_string().contains("sweep"), "{err}");
    }

    #[test]
    fn duplicate_class_name_rejected() {
        let dup = BASE.replace("name = \"VO\"", "name = \"BK\"");
        assert!(parse_config(&dup).is_err());
    }

    #[test]
    fn scenario_events_and_sweep_exclusive() {
        let s = r#"
[[events]]
at_us = 1000.0
class = "VO"
n = 0

[sweep]
parameter = "per"
class = "VO"
start = 1e-6
stop = 0.1
steps = 5
scale = "log"
"#;
        assert!(parse_scenario(s).is_err());
    }

    #[test]
    fn scenario_event_order_enforced() {
        let s = r#"
[[events]]
at_us = 2000.0
class = "VO"
n = 0

[[events]]
at_us = 1000.0
class = "BK"
n = 2
"#;
        assert!(parse_scenario(s).is_err());
    }

    #[test]
    fn sweep_grids() {
        let sw = SweepSection {
            parameter: "per".into(),
            class: "VI".into(),
            start: 1e-6,
            stop: 0.1,
            steps: 6,
            scale: SweepScale::Log,
        };
        let g = sw.grid();
        assert_eq!(g.len(), 6);
        assert!((g[0] - 1e-6).abs() < 1e-12);
        assert!((g[5] - 0.1).abs() < 1e-9);
        assert!((g[1] / g[0] - g[2] / g[1]).abs() < 1e-6);
    }
}
