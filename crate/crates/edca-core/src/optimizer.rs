//! Delay-constrained proportional fairness: maximise sum n_i log s_i(tau)
//! subject to D_i(tau) <= d_i, solved in log-odds coordinates by dual
//! projected subgradient with an inner gradient ascent, followed by a
//! Newton polish on the identified active set.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::analytics::{airtimes, average_delay, slot_probabilities, throughput};
use crate::config::{AttemptVector, NetworkConfig};
use crate::fixed_point::{cwmin_from_tau, FixedPointError};
use crate::math::{abs, ln, logit, sigmoid, sqrt};
use crate::matrix::Matrix;

/// Finite-difference step for gradients in eta-space.
const FD_STEP: f64 = 1e-6;
/// Diminishing subgradient schedule alpha_k = A / (B + k).
const SUBGRAD_A: f64 = 0.1;
const SUBGRAD_B: f64 = 10.0;
const OUTER_CAP: usize = 5_000;
const INNER_CAP: usize = 2_000;
const INNER_GRAD_TOL: f64 = 1e-7;
const MULTIPLIER_MOVE_TOL: f64 = 1e-6;
const VIOLATION_TOL: f64 = 1e-6;
/// Feasibility probe resolution per dimension.
const PROBE_POINTS: usize = 17;
const RESTARTS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// No point on the coarse tau grid satisfies all delay constraints.
    Infeasible { probed: usize },
    NonConvergence { violation: f64, kkt_residual: f64 },
    /// Utility undefined: a populated class has zero throughput.
    DomainError { class: usize },
    FixedPoint(FixedPointError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Infeasible { probed } => {
                write!(f, "no feasible attempt vector among {probed} probe points")
            }
            SolveError::NonConvergence { violation, kkt_residual } => write!(
                f,
                "dual iteration stalled (constraint violation {violation:e}, kkt {kkt_residual:e})"
            ),
            SolveError::DomainError { class } => {
                write!(f, "log-utility undefined: class {class} has zero throughput")
            }
            SolveError::FixedPoint(e) => write!(f, "{e}"),
        }
    }
}

impl From<FixedPointError> for SolveError {
    fn from(e: FixedPointError) -> Self {
        SolveError::FixedPoint(e)
    }
}

/// Optimal operating point and its certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub tau_star: AttemptVector,
    pub cw_min_star: Vec<f64>,
    pub p_fail_star: Vec<f64>,
    /// Per-station throughput, bits per microsecond.
    pub throughputs: Vec<f64>,
    /// Average per-packet delay, microseconds.
    pub delays: Vec<f64>,
    /// Flow total air-times.
    pub airtimes: Vec<f64>,
    pub utility: f64,
    /// Lagrange multipliers of the delay constraints (per microsecond).
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
}

/// Proportional-fair utility: sum over populated classes of n_i log s_i.
pub fn utility(cfg: &NetworkConfig, tau: &AttemptVector) -> Result<f64, SolveError> {
    let s = throughput(cfg, tau);
    let mut u = 0.0;
    for (i, c) in cfg.classes.iter().enumerate() {
        if c.n >= 1 {
            if !(s[i] > 0.0) {
                return Err(SolveError::DomainError { class: i });
            }
            u += c.n as f64 * ln(s[i]);
        }
    }
    Ok(u)
}

/// The optimisation problem restricted to populated classes, in eta-space.
struct Problem<'a> {
    cfg: &'a NetworkConfig,
    active: Vec<usize>,
    /// Deadlines of the active classes, microseconds.
    deadlines: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(cfg: &'a NetworkConfig) -> Self {
        let active = cfg.active();
        let deadlines = active.iter().map(|&i| cfg.classes[i].deadline).collect();
        Self { cfg, active, deadlines }
    }

    fn tau_of(&self, eta: &[f64]) -> AttemptVector {
        let mut tau = vec![0.0; self.cfg.n_classes()];
        for (k, &i) in self.active.iter().enumerate() {
            tau[i] = sigmoid(eta[k]);
        }
        AttemptVector(tau)
    }

    fn utility_at(&self, eta: &[f64]) -> f64 {
        let tau = self.tau_of(eta);
        let s = throughput(self.cfg, &tau);
        self.active
            .iter()
            .map(|&i| self.cfg.classes[i].n as f64 * ln(s[i]))
            .sum()
    }

    /// Delays of the active classes.
    fn delays_at(&self, eta: &[f64]) -> Vec<f64> {
        let tau = self.tau_of(eta);
        let d = average_delay(self.cfg, &tau);
        self.active.iter().map(|&i| d[i]).collect()
    }

    /// Lagrangian with relative-scaled multipliers: U - sum lam_k D_k / d_k.
    fn lagrangian(&self, eta: &[f64], lam: &[f64]) -> f64 {
        let mut v = self.utility_at(eta);
        let d = self.delays_at(eta);
        for k in 0..lam.len() {
            v -= lam[k] * d[k] / self.deadlines[k];
        }
        v
    }

    fn grad<F: Fn(&[f64]) -> f64>(&self, f: F, eta: &[f64], h: f64) -> Vec<f64> {
        let mut g = vec![0.0; eta.len()];
        let mut probe = eta.to_vec();
        for k in 0..eta.len() {
            probe[k] = eta[k] + h;
            let fp = f(&probe);
            probe[k] = eta[k] - h;
            let fm = f(&probe);
            probe[k] = eta[k];
            g[k] = (fp - fm) / (2.0 * h);
        }
        g
    }

    /// Maximise the Lagrangian over eta by gradient ascent with backtracking.
    fn inner_ascent(&self, eta: &mut Vec<f64>, lam: &[f64]) {
        for _ in 0..INNER_CAP {
            let g = self.grad(|e| self.lagrangian(e, lam), eta, FD_STEP);
            let gnorm = sqrt(g.iter().map(|v| v * v).sum());
            if gnorm < INNER_GRAD_TOL {
                return;
            }
            let f0 = self.lagrangian(eta, lam);
            let mut step = 1.0;
            let mut improved = false;
            while step > 1e-14 {
                let trial: Vec<f64> =
                    eta.iter().zip(&g).map(|(e, gi)| e + step * gi).collect();
                if self.lagrangian(&trial, lam) > f0 + 1e-4 * step * gnorm * gnorm {
                    *eta = trial;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                return;
            }
        }
    }

    /// Relative constraint violations D_k/d_k - 1.
    fn violations(&self, eta: &[f64]) -> Vec<f64> {
        self.delays_at(eta)
            .iter()
            .zip(&self.deadlines)
            .map(|(d, dl)| d / dl - 1.0)
            .collect()
    }

    /// Newton refinement of the KKT system on a fixed active set:
    /// grad_eta [U - sum lam D] = 0 and D_j = d_j for active j.
    fn newton_polish(&self, eta: &mut Vec<f64>, lam: &mut Vec<f64>, active_set: &[usize]) -> bool {
        let n = eta.len();
        let k = active_set.len();
        let dim = n + k;
        let residual = |eta: &[f64], lam_a: &[f64]| -> Vec<f64> {
            let mut full_lam = vec![0.0; n];
            for (idx, &j) in active_set.iter().enumerate() {
                full_lam[j] = lam_a[idx];
            }
            let g = self.grad(|e| self.lagrangian(e, &full_lam), eta, FD_STEP);
            let d = self.delays_at(eta);
            let mut r: Vec<f64> = g;
            for &j in active_set {
                r.push(d[j] / self.deadlines[j] - 1.0);
            }
            r
        };
        let mut lam_a: Vec<f64> = active_set.iter().map(|&j| lam[j]).collect();
        for _ in 0..40 {
            let r0 = residual(eta, &lam_a);
            let rnorm = r0.iter().fold(0.0f64, |a, v| a.max(abs(*v)));
            if rnorm < 1e-11 {
                break;
            }
            // Jacobian of the residual by forward differences.
            let mut jac = Matrix::zeros(dim, dim);
            let h = 1e-6;
            for col in 0..dim {
                let mut e2 = eta.clone();
                let mut l2 = lam_a.clone();
                if col < n {
                    e2[col] += h;
                } else {
                    l2[col - n] += h;
                }
                let r1 = residual(&e2, &l2);
                for row in 0..dim {
                    jac[(row, col)] = (r1[row] - r0[row]) / h;
                }
            }
            let Some(jinv) = jac.inverse() else { return false };
            let step = jinv.apply(&r0);
            let mut damp = 1.0;
            loop {
                let trial_eta: Vec<f64> =
                    eta.iter().enumerate().map(|(i, e)| e - damp * step[i]).collect();
                let trial_lam: Vec<f64> =
                    lam_a.iter().enumerate().map(|(i, l)| l - damp * step[n + i]).collect();
                let r1 = residual(&trial_eta, &trial_lam);
                let n1 = r1.iter().fold(0.0f64, |a, v| a.max(abs(*v)));
                if n1 < rnorm || damp < 1e-4 {
                    *eta = trial_eta;
                    lam_a = trial_lam;
                    break;
                }
                damp *= 0.5;
            }
        }
        if lam_a.iter().any(|&l| l < -1e-9) {
            return false;
        }
        for (idx, &j) in active_set.iter().enumerate() {
            lam[j] = lam_a[idx].max(0.0);
        }
        true
    }
}

/// One dual-subgradient run from the given start; returns (eta, lam_rel).
fn dual_loop(prob: &Problem<'_>, mut eta: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = eta.len();
    let mut lam = vec![0.0; n];
    prob.inner_ascent(&mut eta, &lam);
    for k in 0..OUTER_CAP {
        let viol = prob.violations(&eta);
        let alpha = SUBGRAD_A / (SUBGRAD_B + k as f64);
        let mut movement = 0.0f64;
        for j in 0..n {
            let next = (lam[j] + alpha * viol[j]).max(0.0);
            movement = movement.max(abs(next - lam[j]));
            lam[j] = next;
        }
        let max_viol = viol.iter().fold(0.0f64, |a, v| a.max(*v));
        if movement < MULTIPLIER_MOVE_TOL && max_viol < VIOLATION_TOL {
            break;
        }
        prob.inner_ascent(&mut eta, &lam);
    }
    // Identify the active set and polish it to machine precision.
    let viol = prob.violations(&eta);
    let active_set: Vec<usize> =
        (0..n).filter(|&j| lam[j] > 1e-10 || viol[j] > -1e-9).collect();
    let mut eta_p = eta.clone();
    let mut lam_p = lam.clone();
    if prob.newton_polish(&mut eta_p, &mut lam_p, &active_set) {
        let ok = prob
            .violations(&eta_p)
            .iter()
            .all(|&v| v <= VIOLATION_TOL);
        if ok {
            return (eta_p, lam_p);
        }
    }
    (eta, lam)
}

fn xorshift(state: &mut u64) -> f64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

/// Stationarity, dual-feasibility and complementary-slackness residual of a
/// candidate operating point.
pub fn kkt_residual(cfg: &NetworkConfig, point: &OperatingPoint) -> f64 {
    let prob = Problem::new(cfg);
    let eta: Vec<f64> = prob.active.iter().map(|&i| logit(point.tau_star.0[i])).collect();
    // multipliers are stored per microsecond; the eta-space Lagrangian is
    // U - sum lam_us * D.
    let lam_us: Vec<f64> = prob.active.iter().map(|&i| point.multipliers[i]).collect();
    let stationarity = {
        let g = prob.grad(
            |e| {
                let mut v = prob.utility_at(e);
                for (k, d) in prob.delays_at(e).iter().enumerate() {
                    v -= lam_us[k] * d;
                }
                v
            },
            &eta,
            FD_STEP,
        );
        sqrt(g.iter().map(|v| v * v).sum())
    };
    let dual_feas = lam_us.iter().fold(0.0f64, |a, &l| a.max(-l));
    let comp_slack = prob
        .active
        .iter()
        .enumerate()
        .map(|(k, &i)| abs(lam_us[k] * (prob.deadlines[k] - point.delays[i]) / prob.deadlines[k]))
        .fold(0.0f64, f64::max);
    stationarity.max(dual_feas).max(comp_slack)
}

/// Solve the proportional-fairness problem for the given network.
pub fn solve(cfg: &NetworkConfig) -> Result<OperatingPoint, SolveError> {
    let prob = Problem::new(cfg);
    let n = prob.active.len();

    // Coarse feasibility probe before any dual iteration.
    let mut feasible_found = false;
    let mut probed = 0usize;
    let mut grid_idx = vec![0usize; n];
    'grid: loop {
        let eta: Vec<f64> = grid_idx
            .iter()
            .map(|&j| logit((j + 1) as f64 / (PROBE_POINTS + 1) as f64))
            .collect();
        probed += 1;
        if prob.violations(&eta).iter().all(|&v| v <= 0.0) {
            feasible_found = true;
            break 'grid;
        }
        let mut dim = 0;
        loop {
            if dim == n {
                break 'grid;
            }
            grid_idx[dim] += 1;
            if grid_idx[dim] < PROBE_POINTS {
                break;
            }
            grid_idx[dim] = 0;
            dim += 1;
        }
    }
    if !feasible_found {
        return Err(SolveError::Infeasible { probed });
    }

    // Multi-start dual loops; deterministic restart seeds; best utility wins,
    // ties broken by lowest restart index (strict `>` below).
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for restart in 0..RESTARTS {
        let eta0: Vec<f64> = match restart {
            0 => vec![logit(0.1); n],
            1 => prob
                .active
                .iter()
                .map(|&i| logit((2.0 / (cfg.classes[i].cw_min + 1.0)).clamp(1e-4, 0.5)))
                .collect(),
            _ => {
                let mut state = 0x5DEECE66D ^ (restart as u64).wrapping_mul(0x9E3779B97F4A7C15);
                (0..n).map(|_| logit(0.02 + 0.28 * xorshift(&mut state))).collect()
            }
        };
        let (eta, lam) = dual_loop(&prob, eta0);
        let feasible = prob.violations(&eta).iter().all(|&v| v <= VIOLATION_TOL);
        if !feasible {
            continue;
        }
        let u = prob.utility_at(&eta);
        if best.as_ref().map_or(true, |(bu, _, _)| u > *bu) {
            best = Some((u, eta, lam));
        }
    }
    let Some((_, eta, lam_rel)) = best else {
        return Err(SolveError::NonConvergence { violation: f64::NAN, kkt_residual: f64::NAN });
    };

    let tau_star = prob.tau_of(&eta);
    let probs = slot_probabilities(cfg, &tau_star);
    let throughputs = throughput(cfg, &tau_star);
    let delays = average_delay(cfg, &tau_star);
    let air = airtimes(cfg, &tau_star);
    let cw_min_star = cwmin_from_tau(cfg, &tau_star)?;
    let u = utility(cfg, &tau_star)?;

    let mut multipliers = vec![0.0; cfg.n_classes()];
    for (k, &i) in prob.active.iter().enumerate() {
        multipliers[i] = lam_rel[k] / prob.deadlines[k];
    }

    let mut point = OperatingPoint {
        tau_star,
        cw_min_star,
        p_fail_star: probs.p_fail,
        throughputs,
        delays,
        airtimes: air.total,
        utility: u,
        multipliers,
        kkt_residual: 0.0,
    };
    point.kkt_residual = kkt_residual(cfg, &point);
    Ok(point)
}
