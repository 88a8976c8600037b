//! Slot-level Monte Carlo simulator of saturated EDCA: AIFS differentiation,
//! binary exponential backoff with retry limit, RTS/CTS, TXOP bursting and
//! i.i.d. packet errors.
//!
//! One loop iteration is one generic MAC slot: a PHY idle slot, a TXOP
//! transmission or a collision. Eligible stations (those whose AIFS handicap
//! has elapsed since the last busy period) either transmit when their backoff
//! counter is zero or count the slot down, whatever the slot turns out to be.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::NetworkConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    NoStations,
    NonPositiveDuration,
    CwLengthMismatch { expected: usize, got: usize },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::NoStations => write!(f, "simulation requires at least one station"),
            SimError::NonPositiveDuration => write!(f, "duration must be positive"),
            SimError::CwLengthMismatch { expected, got } => {
                write!(f, "cw_min has {got} entries, config has {expected} classes")
            }
        }
    }
}

/// Per-AC counters accumulated by the simulator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcStats {
    pub delivered_packets: u64,
    pub delivered_bits: f64,
    pub successful_txops: u64,
    pub collisions: u64,
    pub error_terminated_bursts: u64,
    /// Packets dropped at the retry limit (neither N^0 nor N^1).
    pub drops: u64,
    /// Delivered with retry bit 0 (N^0) / 1 (N^1).
    pub retry0: u64,
    pub retry1: u64,
    pub attempts: u64,
    /// Station-slots observed: one per generic MAC slot per station of this
    /// AC (blocked slots included, matching the attempt-probability model).
    pub station_slots: u64,
    /// Head-of-line packet resolutions (delivered or dropped).
    pub cycles: u64,
    /// Packets put on the air (including the failed ones).
    pub packets_transmitted: u64,
    /// Collision plus own-burst time, excluding countdown/blocking.
    pub retx_time: f64,
}

impl AcStats {
    pub fn measured_tau(&self) -> f64 {
        if self.station_slots == 0 {
            0.0
        } else {
            self.attempts as f64 / self.station_slots as f64
        }
    }

    /// Retransmission-only per-packet delay, the empirical analogue of the
    /// analytical expression: mean cycle time over mean packets per burst.
    pub fn mean_packet_delay(&self) -> f64 {
        let bursts = self.successful_txops + self.error_terminated_bursts;
        if self.cycles == 0 || bursts == 0 || self.packets_transmitted == 0 {
            return 0.0;
        }
        let cycle_time = self.retx_time / self.cycles as f64;
        let pkts_per_burst = self.packets_transmitted as f64 / bursts as f64;
        cycle_time / pkts_per_burst
    }

    /// Empirical conditional collision probability (per attempt).
    pub fn measured_collision_prob(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.collisions as f64 / self.attempts as f64
        }
    }
}

/// End-of-run record.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub per_ac: Vec<AcStats>,
    pub simulated_time: f64,
    pub idle_slots: u64,
    pub idle_time: f64,
    pub collision_time: f64,
    pub txop_time: f64,
}

impl SimResult {
    pub fn idle_slot_fraction(&self) -> f64 {
        self.idle_time / self.simulated_time
    }

    /// Per-station throughput in bits per microsecond.
    pub fn throughput(&self, cfg: &NetworkConfig) -> Vec<f64> {
        self.per_ac
            .iter()
            .zip(&cfg.classes)
            .map(|(s, c)| {
                if c.n == 0 || self.simulated_time <= 0.0 {
                    0.0
                } else {
                    s.delivered_bits / (c.n as f64 * self.simulated_time)
                }
            })
            .collect()
    }
}

/// Retry-bit failure estimate N^1/(N^0+N^1); `None` where nothing was
/// delivered.
pub fn estimate_pfail(result: &SimResult) -> Vec<Option<f64>> {
    result
        .per_ac
        .iter()
        .map(|s| {
            let total = s.retry0 + s.retry1;
            if total == 0 {
                None
            } else {
                Some(s.retry1 as f64 / total as f64)
            }
        })
        .collect()
}

/// Per-beacon measurement emitted by [`Plant::run_window`].
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMeasurement {
    /// Retry-bit p^F estimate for the window.
    pub pfail: Vec<Option<f64>>,
    /// Per-station throughput over the window, bits per microsecond.
    pub throughput: Vec<f64>,
    pub delivered_packets: Vec<u64>,
    /// Window deltas of the retry-bit counters N^0, N^1.
    pub retry0: Vec<u64>,
    pub retry1: Vec<u64>,
    pub window_start: f64,
    pub window_end: f64,
}

struct Station {
    ac: usize,
    backoff: u32,
    stage: u32,
    pending_retry: bool,
    rng: ChaCha8Rng,
}

/// Persistent simulator state; survives across beacon windows so the
/// controller acts on a continuously running WLAN.
pub struct Plant {
    cfg: NetworkConfig,
    /// Integer CW_min actually applied per class.
    applied_cw: Vec<u32>,
    stations: Vec<Station>,
    now: f64,
    /// Contention-slot index since the last busy period.
    slots_since_busy: u32,
    t_min: u32,
    stats: Vec<AcStats>,
    idle_slots: u64,
    idle_time: f64,
    collision_time: f64,
    txop_time: f64,
}

fn draw_uniform(rng: &mut ChaCha8Rng, bound: u32) -> u32 {
    debug_assert!(bound >= 1);
    if bound == 1 {
        return 0;
    }
    // rejection sampling to keep the draw unbiased
    let zone = u32::MAX - (u32::MAX % bound);
    loop {
        let v = rng.next_u32();
        if v < zone {
            return v % bound;
        }
    }
}

fn draw_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// CW quantisation: the controller emits reals, hardware uses integers.
pub fn quantize_cw(cw: f64) -> u32 {
    let rounded = libm::round(cw);
    if rounded < 1.0 {
        1
    } else if rounded > u32::MAX as f64 {
        u32::MAX
    } else {
        rounded as u32
    }
}

impl Plant {
    /// Build a fresh plant. Station RNGs are independent ChaCha8 streams of
    /// the run seed (stream = station index), so runs are reproducible and
    /// stations are decorrelated.
    pub fn new(cfg: &NetworkConfig, cw_min: &[f64], seed: u64) -> Result<Plant, SimError> {
        if cw_min.len() != cfg.n_classes() {
            return Err(SimError::CwLengthMismatch {
                expected: cfg.n_classes(),
                got: cw_min.len(),
            });
        }
        if cfg.classes.iter().all(|c| c.n == 0) {
            return Err(SimError::NoStations);
        }
        let applied_cw: Vec<u32> = cw_min.iter().map(|&c| quantize_cw(c)).collect();
        let mut stations = Vec::new();
        let mut seed_bytes = [0u8; 32];
        seed_bytes[..8].copy_from_slice(&seed.to_le_bytes());
        for (ac, c) in cfg.classes.iter().enumerate() {
            for _ in 0..c.n {
                let mut rng = ChaCha8Rng::from_seed(seed_bytes);
                rng.set_stream(stations.len() as u64 + 1);
                let backoff = draw_uniform(&mut rng, applied_cw[ac]);
                stations.push(Station { ac, backoff, stage: 0, pending_retry: false, rng });
            }
        }
        Ok(Plant {
            applied_cw,
            t_min: cfg.t_min(),
            stations,
            now: 0.0,
            slots_since_busy: 0,
            stats: vec![AcStats::default(); cfg.n_classes()],
            idle_slots: 0,
            idle_time: 0.0,
            collision_time: 0.0,
            txop_time: 0.0,
            cfg: cfg.clone(),
        })
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Replace the per-class CW_min (takes effect at the next contention).
    pub fn set_cw_min(&mut self, cw_min: &[f64]) {
        for (slot, &c) in self.applied_cw.iter_mut().zip(cw_min) {
            *slot = quantize_cw(c);
        }
    }

    fn redraw(&mut self, sidx: usize) {
        let st = &mut self.stations[sidx];
        let cw = self.applied_cw[st.ac] << st.stage;
        st.backoff = draw_uniform(&mut st.rng, cw.max(1));
    }

    /// Advance by exactly one generic MAC slot. The AIFS handicap and busy
    /// periods suspend the backoff *counter* (per-station idle-slot counting
    /// after busy periods); a station whose counter has reached zero
    /// transmits in the next slot unconditionally. Attempt rates are
    /// measured against all slots.
    fn step_slot(&mut self) {
        self.slots_since_busy += 1;
        let c = self.slots_since_busy;

        let mut transmitters: Vec<usize> = Vec::new();
        for (idx, st) in self.stations.iter().enumerate() {
            self.stats[st.ac].station_slots += 1;
            if st.backoff == 0 {
                transmitters.push(idx);
            }
        }

        match transmitters.len() {
            0 => {
                // idle slot: eligible stations count down
                for st in self.stations.iter_mut() {
                    let handicap = self.cfg.classes[st.ac].aifsn - self.t_min;
                    if c > handicap && st.backoff > 0 {
                        st.backoff -= 1;
                    }
                }
                self.now += self.cfg.timings.sigma;
                self.idle_slots += 1;
                self.idle_time += self.cfg.timings.sigma;
            }
            1 => {
                self.transmit_burst(transmitters[0]);
                self.slots_since_busy = 0;
            }
            _ => {
                let t_col = self.cfg.timings.t_col();
                self.now += t_col;
                self.collision_time += t_col;
                for &sidx in &transmitters {
                    let ac = self.stations[sidx].ac;
                    self.stats[ac].attempts += 1;
                    self.stats[ac].collisions += 1;
                    self.stats[ac].retx_time += t_col;
                    self.stations[sidx].pending_retry = true;
                    self.fail_attempt(sidx);
                }
                self.slots_since_busy = 0;
            }
        }
    }

    /// Collision or error-terminated burst: double CW up to stage m, then
    /// drop the head packet and reset.
    fn fail_attempt(&mut self, sidx: usize) {
        let m = self.cfg.retry_limit;
        if self.stations[sidx].stage >= m {
            let ac = self.stations[sidx].ac;
            self.stats[ac].drops += 1;
            self.stats[ac].cycles += 1;
            self.stations[sidx].stage = 0;
            self.stations[sidx].pending_retry = false;
        } else {
            self.stations[sidx].stage += 1;
        }
        self.redraw(sidx);
    }

    /// A lone winner sends up to M packets; the first in-burst channel error
    /// terminates the burst and the failed packet re-contends.
    fn transmit_burst(&mut self, sidx: usize) {
        let ac = self.stations[sidx].ac;
        let cls = self.cfg.classes[ac].clone();
        let t = &self.cfg.timings;
        let per_packet = self.cfg.packet_bits / cls.rate + t.per_packet_overhead();
        let overhead = cls.burst_overhead(t);

        self.stats[ac].attempts += 1;
        let mut sent = 0u32;
        let mut errored = false;
        while sent < cls.burst {
            sent += 1;
            if draw_f64(&mut self.stations[sidx].rng) < cls.per {
                errored = true;
                break;
            }
            // delivered: first packet of the cycle carries the retry bit
            let retry = if sent == 1 { self.stations[sidx].pending_retry } else { false };
            self.stats[ac].delivered_packets += 1;
            self.stats[ac].delivered_bits += self.cfg.packet_bits;
            if retry {
                self.stats[ac].retry1 += 1;
            } else {
                self.stats[ac].retry0 += 1;
            }
        }
        let duration = sent as f64 * per_packet + overhead;
        self.now += duration;
        self.txop_time += duration;
        self.stats[ac].packets_transmitted += sent as u64;
        self.stats[ac].retx_time += duration;

        if errored {
            self.stats[ac].error_terminated_bursts += 1;
            if sent > 1 {
                // head packet was delivered before the error; the failed
                // packet starts a fresh cycle
                self.stats[ac].cycles += 1;
                self.stations[sidx].stage = 0;
                self.stations[sidx].pending_retry = false;
            }
            self.stations[sidx].pending_retry = true;
            self.fail_attempt(sidx);
        } else {
            self.stats[ac].successful_txops += 1;
            self.stats[ac].cycles += 1;
            self.stations[sidx].stage = 0;
            self.stations[sidx].pending_retry = false;
            self.redraw(sidx);
        }
    }

    /// Advance until simulated time reaches `target` (the slot in flight at
    /// the boundary completes).
    pub fn advance_to(&mut self, target: f64) {
        while self.now < target {
            self.step_slot();
        }
    }

    fn snapshot(&self) -> SimResult {
        SimResult {
            per_ac: self.stats.clone(),
            simulated_time: self.now,
            idle_slots: self.idle_slots,
            idle_time: self.idle_time,
            collision_time: self.collision_time,
            txop_time: self.txop_time,
        }
    }

    /// Advance exactly one beacon interval under the given CW_min and return
    /// the per-window measurement. State persists across windows.
    pub fn run_window(&mut self, cw_min: &[f64]) -> WindowMeasurement {
        self.set_cw_min(cw_min);
        let start = self.now;
        let before = self.stats.clone();
        let end = start + self.cfg.beacon;
        self.advance_to(end);
        let elapsed = self.now - start;

        let mut pfail = Vec::with_capacity(self.stats.len());
        let mut thr = Vec::with_capacity(self.stats.len());
        let mut delivered = Vec::with_capacity(self.stats.len());
        let mut retry0 = Vec::with_capacity(self.stats.len());
        let mut retry1 = Vec::with_capacity(self.stats.len());
        for (i, (a, b)) in self.stats.iter().zip(&before).enumerate() {
            let r0 = a.retry0 - b.retry0;
            let r1 = a.retry1 - b.retry1;
            pfail.push(if r0 + r1 == 0 { None } else { Some(r1 as f64 / (r0 + r1) as f64) });
            retry0.push(r0);
            retry1.push(r1);
            let n = self.cfg.classes[i].n;
            thr.push(if n == 0 {
                0.0
            } else {
                (a.delivered_bits - b.delivered_bits) / (n as f64 * elapsed)
            });
            delivered.push(a.delivered_packets - b.delivered_packets);
        }
        WindowMeasurement {
            pfail,
            throughput: thr,
            delivered_packets: delivered,
            retry0,
            retry1,
            window_start: start,
            window_end: self.now,
        }
    }
}

/// One-shot run: simulate `duration` microseconds at the given CW_min.
pub fn run(
    cfg: &NetworkConfig,
    cw_min: &[f64],
    duration: f64,
    seed: u64,
) -> Result<SimResult, SimError> {
    if !(duration > 0.0) {
        return Err(SimError::NonPositiveDuration);
    }
    let mut plant = Plant::new(cfg, cw_min, seed)?;
    plant.advance_to(duration);
    Ok(plant.snapshot())
}
