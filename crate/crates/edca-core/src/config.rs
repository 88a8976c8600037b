//! Network and protocol parameter types shared by every module.
//!
//! All durations are in microseconds, payloads in bits and PHY rates in
//! bits per microsecond (numerically equal to Mbps).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// PHY/MAC timing constants (802.11a OFDM values in the default).
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTimings {
    /// Physical slot duration sigma.
    pub sigma: f64,
    pub sifs: f64,
    pub difs: f64,
    /// Extended inter-frame space; must equal `t_ack + sifs + difs`.
    pub eifs: f64,
    pub t_rts: f64,
    pub t_cts: f64,
    pub t_ack: f64,
    pub t_phyhdr: f64,
}

impl ProtocolTimings {
    /// 802.11a values: sigma 9, SIFS 16, DIFS 34, RTS 46.67, CTS/ACK 38.67,
    /// PHY header 20 (all microseconds).
    pub fn ieee80211a() -> Self {
        let sifs = 16.0;
        let difs = 34.0;
        let t_ack = 38.67;
        Self {
            sigma: 9.0,
            sifs,
            difs,
            eifs: t_ack + sifs + difs,
            t_rts: 46.67,
            t_cts: 38.67,
            t_ack,
            t_phyhdr: 20.0,
        }
    }

    /// Duration of a collided attempt: RTS followed by EIFS deferral.
    #[inline]
    pub fn t_col(&self) -> f64 {
        self.t_rts + self.eifs
    }

    /// Per-packet in-burst overhead: PHY header, two SIFS and the ACK.
    #[inline]
    pub fn per_packet_overhead(&self) -> f64 {
        self.t_phyhdr + 2.0 * self.sifs + self.t_ack
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("sigma", self.sigma),
            ("sifs", self.sifs),
            ("difs", self.difs),
            ("eifs", self.eifs),
            ("t_rts", self.t_rts),
            ("t_cts", self.t_cts),
            ("t_ack", self.t_ack),
            ("t_phyhdr", self.t_phyhdr),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::NonPositiveDuration { field: name });
            }
        }
        let expected = self.t_ack + self.sifs + self.difs;
        if crate::math::abs(self.eifs - expected) > 1e-6 {
            return Err(ConfigError::InconsistentEifs {
                eifs: self.eifs,
                expected,
            });
        }
        Ok(())
    }
}

/// Per-AC parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AcClass {
    /// Number of saturated stations carrying this AC.
    pub n: u32,
    /// Packet error rate, in [0,1).
    pub per: f64,
    /// PHY rate in bits per microsecond (== Mbps).
    pub rate: f64,
    /// TXOP burst size M (packets per won contention).
    pub burst: u32,
    /// AIFSN slot count t_i; AIFS_i = SIFS + t_i * sigma.
    pub aifsn: u32,
    /// Average-delay deadline d_i in microseconds.
    pub deadline: f64,
    /// Minimum contention window (real-valued; hardware rounds).
    pub cw_min: f64,
}

impl AcClass {
    #[inline]
    pub fn aifs(&self, t: &ProtocolTimings) -> f64 {
        t.sifs + self.aifsn as f64 * t.sigma
    }

    /// Burst-level overhead: RTS/CTS handshake plus this class's AIFS.
    #[inline]
    pub fn burst_overhead(&self, t: &ProtocolTimings) -> f64 {
        t.t_rts + t.sifs + t.t_cts + self.aifs(t)
    }

    pub fn validate(&self, idx: usize) -> Result<(), ConfigError> {
        if !(0.0..1.0).contains(&self.per) {
            return Err(ConfigError::FieldOutOfRange { class: idx, field: "per" });
        }
        if !(self.rate > 0.0) {
            return Err(ConfigError::FieldOutOfRange { class: idx, field: "rate" });
        }
        if self.burst < 1 {
            return Err(ConfigError::FieldOutOfRange { class: idx, field: "burst" });
        }
        if self.aifsn < 1 {
            return Err(ConfigError::FieldOutOfRange { class: idx, field: "aifsn" });
        }
        if !(self.deadline > 0.0) {
            return Err(ConfigError::FieldOutOfRange { class: idx, field: "deadline" });
        }
        if !(self.cw_min >= 1.0) {
            return Err(ConfigError::FieldOutOfRange { class: idx, field: "cw_min" });
        }
        Ok(())
    }
}

/// Whole-WLAN configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub timings: ProtocolTimings,
    pub classes: Vec<AcClass>,
    /// Fixed packet payload L in bits (same for every AC).
    pub packet_bits: f64,
    /// Retry limit m; CW_max = 2^m * CW_min.
    pub retry_limit: u32,
    /// Beacon interval in microseconds (control sampling period).
    pub beacon: f64,
}

pub const DEFAULT_BEACON_US: f64 = 100_000.0;
pub const DEFAULT_RETRY_LIMIT: u32 = 5;

impl NetworkConfig {
    #[inline]
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Indices of classes with at least one station.
    pub fn active(&self) -> Vec<usize> {
        (0..self.classes.len()).filter(|&i| self.classes[i].n >= 1).collect()
    }

    /// Minimum AIFSN among populated classes.
    pub fn t_min(&self) -> u32 {
        self.classes
            .iter()
            .filter(|c| c.n >= 1)
            .map(|c| c.aifsn)
            .min()
            .unwrap_or(1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.timings.validate()?;
        if self.classes.is_empty() {
            return Err(ConfigError::NoClasses);
        }
        if !self.classes.iter().any(|c| c.n >= 1) {
            return Err(ConfigError::NoStations);
        }
        for (i, c) in self.classes.iter().enumerate() {
            c.validate(i)?;
        }
        if !(self.packet_bits > 0.0) {
            return Err(ConfigError::FieldOutOfRange { class: usize::MAX, field: "packet_bits" });
        }
        if !(self.beacon > 0.0) {
            return Err(ConfigError::FieldOutOfRange { class: usize::MAX, field: "beacon" });
        }
        Ok(())
    }

    /// Copy of the config with the given per-class minimum contention windows.
    pub fn with_cw_min(&self, cw_min: &[f64]) -> NetworkConfig {
        let mut cfg = self.clone();
        for (c, &w) in cfg.classes.iter_mut().zip(cw_min) {
            c.cw_min = w;
        }
        cfg
    }

    pub fn cw_min_vec(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.cw_min).collect()
    }
}

/// Per-AC attempt probabilities tau.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptVector(pub Vec<f64>);

impl AttemptVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, cfg: &NetworkConfig) -> Result<(), ConfigError> {
        if self.0.len() != cfg.n_classes() {
            return Err(ConfigError::LengthMismatch {
                expected: cfg.n_classes(),
                got: self.0.len(),
            });
        }
        for (i, &t) in self.0.iter().enumerate() {
            if !(0.0..1.0).contains(&t) {
                return Err(ConfigError::FieldOutOfRange { class: i, field: "tau" });
            }
        }
        Ok(())
    }
}

/// Slot-event probabilities derived from an attempt vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotProbabilities {
    /// P^I: probability of an idle MAC slot.
    pub p_idle: f64,
    /// P_i^T: probability a given station of AC i makes a TXOP transmission.
    pub p_tx: Vec<f64>,
    /// P_i^C: conditional collision probability.
    pub p_coll_cond: Vec<f64>,
    /// P_i^E: probability a TXOP burst is terminated by channel noise.
    pub p_err: Vec<f64>,
    /// P_i^F: attempt failure probability (collision or noise).
    pub p_fail: Vec<f64>,
    /// P_i^B: backoff-suspension probability over the AIFS handicap window.
    pub p_block: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    NonPositiveDuration { field: &'static str },
    InconsistentEifs { eifs: f64, expected: f64 },
    NoClasses,
    NoStations,
    FieldOutOfRange { class: usize, field: &'static str },
    LengthMismatch { expected: usize, got: usize },
    /// Free-form parse/validation message from config ingestion.
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::NonPositiveDuration { field } => {
                write!(f, "timing field `{field}` must be a positive duration")
            }
            ConfigError::InconsistentEifs { eifs, expected } => {
                write!(f, "eifs = {eifs} but t_ack + sifs + difs = {expected}")
            }
            ConfigError::NoClasses => write!(f, "at least one access category is required"),
            ConfigError::NoStations => write!(f, "at least one class must have n >= 1"),
            ConfigError::FieldOutOfRange { class, field } => {
                if *class == usize::MAX {
                    write!(f, "field `{field}` out of range")
                } else {
                    write!(f, "class {class}: field `{field}` out of range")
                }
            }
            ConfigError::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} entries, got {got}")
            }
            ConfigError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn single_class(n: u32, per: f64, cw_min: f64) -> NetworkConfig {
        NetworkConfig {
            timings: ProtocolTimings::ieee80211a(),
            classes: vec![AcClass {
                n,
                per,
                rate: 54.0,
                burst: 1,
                aifsn: 2,
                deadline: 400_000.0,
                cw_min,
            }],
            packet_bits: 8000.0,
            retry_limit: DEFAULT_RETRY_LIMIT,
            beacon: DEFAULT_BEACON_US,
        }
    }

    #[test]
    fn default_timings_are_consistent() {
        let t = ProtocolTimings::ieee80211a();
        t.validate().unwrap();
        assert!((t.eifs - 88.67).abs() < 1e-9);
        assert!((t.t_col() - 135.34).abs() < 1e-9);
        assert!((t.per_packet_overhead() - 90.67).abs() < 1e-9);
    }

    #[test]
    fn aifs_reproducible() {
        let t = ProtocolTimings::ieee80211a();
        let cfg = single_class(1, 0.0, 15.0);
        assert_eq!(cfg.classes[0].aifs(&t), 16.0 + 2.0 * 9.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = single_class(1, 0.0, 15.0);
        cfg.classes[0].per = 1.0;
        assert!(matches!(cfg.validate(), Err(ConfigError::FieldOutOfRange { field: "per", .. })));

        let mut cfg = single_class(0, 0.0, 15.0);
        cfg.classes[0].n = 0;
        assert!(matches!(cfg.validate(), Err(ConfigError::NoStations)));

        let mut cfg = single_class(1, 0.0, 15.0);
        cfg.timings.eifs = 50.0;
        assert!(matches!(cfg.validate(), Err(ConfigError::InconsistentEifs { .. })));
    }

    #[test]
    fn t_min_skips_empty_classes() {
        let mut cfg = single_class(1, 0.0, 15.0);
        cfg.classes.push(AcClass { n: 0, aifsn: 1, ..cfg.classes[0].clone() });
        assert_eq!(cfg.t_min(), 2);
    }
}
