//! The coupled tau <-> CW_min relationship: damped Picard iteration for the
//! forward map and the exact algebraic inverse.

use alloc::vec::Vec;
use core::fmt;

use crate::analytics::slot_probabilities;
use crate::config::{AttemptVector, NetworkConfig, SlotProbabilities};
use crate::math::{abs, geometric_sum};

const DAMPING: f64 = 0.5;
const MAX_ITERS: usize = 10_000;
const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum FixedPointError {
    NonConvergence { iterations: usize, residual: f64 },
    /// The requested attempt vector maps to CW_min < 1.
    OutOfRange { class: usize, cw_min: f64 },
}

impl fmt::Display for FixedPointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixedPointError::NonConvergence { iterations, residual } => write!(
                f,
                "tau fixed point did not converge after {iterations} iterations (residual {residual:e})"
            ),
            FixedPointError::OutOfRange { class, cw_min } => write!(
                f,
                "class {class}: tau too aggressive, implied cw_min = {cw_min} < 1"
            ),
        }
    }
}

/// Coefficient of CW_min in the attempt-probability closed form, written with
/// truncated geometric sums so it stays finite at P^F = 1/2 and P^F = 1.
fn cw_coefficient(p_fail: f64, p_block: f64, retry_limit: u32) -> f64 {
    geometric_sum(2.0 * p_fail, retry_limit)
        / (2.0 * (1.0 - p_block) * geometric_sum(p_fail, retry_limit))
}

/// One-class update: attempt probability implied by its CW_min given the
/// current slot probabilities.
fn tau_update(cw_min: f64, p_fail: f64, p_block: f64, retry_limit: u32) -> f64 {
    1.0 / (1.0 - 1.0 / (2.0 * (1.0 - p_block)) + cw_min * cw_coefficient(p_fail, p_block, retry_limit))
}

fn apply_map(cfg: &NetworkConfig, tau: &AttemptVector) -> Vec<f64> {
    let probs = slot_probabilities(cfg, tau);
    cfg.classes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.n == 0 {
                0.0
            } else {
                tau_update(c.cw_min, probs.p_fail[i], probs.p_block[i], cfg.retry_limit)
            }
        })
        .collect()
}

/// Joint fixed point of the attempt-probability system for the configured
/// per-class CW_min values.
pub fn tau_from_cwmin(cfg: &NetworkConfig) -> Result<AttemptVector, FixedPointError> {
    let mut tau = AttemptVector(
        cfg.classes
            .iter()
            .map(|c| if c.n == 0 { 0.0 } else { 2.0 / (c.cw_min + 1.0) })
            .collect(),
    );
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let mapped = apply_map(cfg, &tau);
        residual = tau
            .0
            .iter()
            .zip(&mapped)
            .map(|(a, b)| abs(a - b))
            .fold(0.0, f64::max);
        if residual < RESIDUAL_TOL {
            return Ok(tau);
        }
        for (t, m) in tau.0.iter_mut().zip(&mapped) {
            *t = (1.0 - DAMPING) * *t + DAMPING * m;
        }
    }
    Err(FixedPointError::NonConvergence { iterations: MAX_ITERS, residual })
}

/// Exact algebraic inverse: the CW_min values for which `tau` is the fixed
/// point. `P^F` and `P^B` are explicit in tau so no iteration is needed.
pub fn cwmin_from_tau(cfg: &NetworkConfig, tau: &AttemptVector) -> Result<Vec<f64>, FixedPointError> {
    let probs: SlotProbabilities = slot_probabilities(cfg, tau);
    let mut out = Vec::with_capacity(cfg.n_classes());
    for (i, c) in cfg.classes.iter().enumerate() {
        if c.n == 0 {
            out.push(c.cw_min);
            continue;
        }
        let x = cw_coefficient(probs.p_fail[i], probs.p_block[i], cfg.retry_limit);
        let cw = (1.0 / tau.0[i] - 1.0 + 1.0 / (2.0 * (1.0 - probs.p_block[i]))) / x;
        if !(cw >= 1.0) {
            return Err(FixedPointError::OutOfRange { class: i, cw_min: cw });
        }
        out.push(cw);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AcClass, ProtocolTimings, DEFAULT_BEACON_US};
    use alloc::vec;
    use alloc::vec::Vec;

    fn single(cw_min: f64) -> NetworkConfig {
        NetworkConfig {
            timings: ProtocolTimings::ieee80211a(),
            classes: vec![AcClass {
                n: 1,
                per: 0.0,
                rate: 54.0,
                burst: 1,
                aifsn: 2,
                deadline: 400_000.0,
                cw_min,
            }],
            packet_bits: 8000.0,
            retry_limit: 5,
            beacon: DEFAULT_BEACON_US,
        }
    }

    #[test]
    fn collapses_to_closed_form_without_failures() {
        // Lone error-free station: P^F = P^B = 0, tau = 2/(CW_min + 1).
        let tau = tau_from_cwmin(&single(15.0)).unwrap();
        assert!((tau.0[0] - 0.125).abs() < 1e-10);
        let tau = tau_from_cwmin(&single(31.0)).unwrap();
        assert!((tau.0[0] - 0.0625).abs() < 1e-10);
    }

    #[test]
    fn inverse_of_trivial_form() {
        let cfg = single(15.0);
        let cw = cwmin_from_tau(&cfg, &AttemptVector(vec![0.125])).unwrap();
        assert!((cw[0] - 15.0).abs() < 1e-10);
    }

    #[test]
    fn coefficient_finite_at_half() {
        // (1-(2x)^{m+1})/(1-2x) evaluated as a geometric sum at x = 1/2.
        let m = 5;
        let x = cw_coefficient(0.5, 0.0, m);
        assert!((x - (m + 1) as f64 / (2.0 * geometric_sum(0.5, m))).abs() < 1e-12);
        assert!(x.is_finite());
    }

    #[test]
    fn aggressive_tau_rejected() {
        // with several contenders at tau near 1, P^F -> 1 and the implied
        // CW_min drops below 1
        let cfg = four_ac();
        assert!(matches!(
            cwmin_from_tau(&cfg, &AttemptVector(vec![0.999; 4])),
            Err(FixedPointError::OutOfRange { .. })
        ));
    }

    fn four_ac() -> NetworkConfig {
        let class = |per: f64, aifsn: u32, cw_min: f64| AcClass {
            n: 1,
            per,
            rate: 54.0,
            burst: 1,
            aifsn,
            deadline: 400_000.0,
            cw_min,
        };
        NetworkConfig {
            timings: ProtocolTimings::ieee80211a(),
            classes: vec![
                class(1e-6, 7, 63.0),
                class(1e-6, 3, 31.0),
                class(1e-3, 2, 31.0),
                class(1e-6, 2, 15.0),
            ],
            packet_bits: 8000.0,
            retry_limit: 5,
            beacon: DEFAULT_BEACON_US,
        }
    }

    /// Independent oracle: solve the same coupled system by per-coordinate
    /// bisection on tau_i (Gauss-Seidel over classes), never calling the
    /// Picard iteration under test.
    fn bisection_oracle(cfg: &NetworkConfig) -> Vec<f64> {
        let mut tau = vec![0.05; cfg.n_classes()];
        for _ in 0..300 {
            for i in 0..cfg.n_classes() {
                if cfg.classes[i].n == 0 {
                    tau[i] = 0.0;
                    continue;
                }
                let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let mut probe = tau.clone();
                    probe[i] = mid;
                    let probs = slot_probabilities(cfg, &AttemptVector(probe));
                    let implied = tau_update(
                        cfg.classes[i].cw_min,
                        probs.p_fail[i],
                        probs.p_block[i],
                        cfg.retry_limit,
                    );
                    // g(mid) = mid - implied is increasing in mid
                    if mid > implied {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                tau[i] = 0.5 * (lo + hi);
            }
        }
        tau
    }

    #[test]
    fn four_ac_fixed_point_matches_bisection_oracle() {
        let cfg = four_ac();
        let tau = tau_from_cwmin(&cfg).unwrap();
        let oracle = bisection_oracle(&cfg);
        for (a, b) in tau.0.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let cfg = four_ac();
        let tau = tau_from_cwmin(&cfg).unwrap();
        let cw = cwmin_from_tau(&cfg, &tau).unwrap();
        for (w, c) in cw.iter().zip(&cfg.classes) {
            assert!((w - c.cw_min).abs() < 1e-7, "{w} vs {}", c.cw_min);
        }
    }

    #[test]
    fn tau_decreases_with_cw_min() {
        let mut last = f64::INFINITY;
        for cw in [7.0, 15.0, 31.0, 63.0, 127.0] {
            let mut cfg = four_ac();
            cfg.classes[2].cw_min = cw;
            let tau = tau_from_cwmin(&cfg).unwrap();
            assert!(tau.0[2] < last);
            last = tau.0[2];
        }
    }
}
