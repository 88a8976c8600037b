//! Linearisation of the p^F <-> CW_min map and the LQI (linear-quadratic
//! plus integrator) feedback synthesis that tracks the optimal failure
//! probability by tuning per-AC minimum contention windows.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::analytics::slot_probabilities;
use crate::config::NetworkConfig;
use crate::dare::{solve_dare, DareError};
use crate::fixed_point::{tau_from_cwmin, FixedPointError};
use crate::matrix::Matrix;

/// Hardware range of the minimum contention window.
pub const CW_MIN_FLOOR: f64 = 1.0;
pub const CW_MIN_CEIL: f64 = 1023.0;

#[derive(Debug, Clone, PartialEq)]
pub enum LqiError {
    /// Zero input map: CW_min cannot move the failure probability.
    Uncontrollable,
    Dare(DareError),
    FixedPoint(FixedPointError),
}

impl fmt::Display for LqiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LqiError::Uncontrollable => write!(f, "H = 0: failure probability is insensitive to CW_min"),
            LqiError::Dare(e) => write!(f, "{e}"),
            LqiError::FixedPoint(e) => write!(f, "{e}"),
        }
    }
}

impl From<DareError> for LqiError {
    fn from(e: DareError) -> Self {
        LqiError::Dare(e)
    }
}

impl From<FixedPointError> for LqiError {
    fn from(e: FixedPointError) -> Self {
        LqiError::FixedPoint(e)
    }
}

/// Failure probabilities implied by a CW_min assignment through the tau
/// fixed point; this is the noise-free analytical plant.
pub fn analytic_pfail(cfg: &NetworkConfig, cw_min: &[f64]) -> Result<Vec<f64>, FixedPointError> {
    let cfg = cfg.with_cw_min(cw_min);
    let tau = tau_from_cwmin(&cfg)?;
    Ok(slot_probabilities(&cfg, &tau).p_fail)
}

/// Affine model of the plant around an operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// H[i][j] = d p^F_j / d CW_min^i at the operating point.
    pub h: Matrix,
    /// State-space input matrix, B = -H^T.
    pub b: Matrix,
    /// Output matrix (identity).
    pub c: Matrix,
    pub operating_cw: Vec<f64>,
    pub operating_pfail: Vec<f64>,
}

/// Central-difference Jacobian of the composed map
/// CW_min -> tau fixed point -> p^F.
pub fn jacobian(cfg: &NetworkConfig, cw_star: &[f64]) -> Result<LinearModel, LqiError> {
    let n = cw_star.len();
    let mut h_mat = Matrix::zeros(n, n);
    for i in 0..n {
        let h = (1e-4 * cw_star[i]).max(0.01);
        let mut hi = cw_star.to_vec();
        let mut lo = cw_star.to_vec();
        hi[i] += h;
        lo[i] -= h;
        let p_hi = analytic_pfail(cfg, &hi)?;
        let p_lo = analytic_pfail(cfg, &lo)?;
        for j in 0..n {
            h_mat[(i, j)] = (p_hi[j] - p_lo[j]) / (2.0 * h);
        }
    }
    let b = h_mat.transpose().scale(-1.0);
    Ok(LinearModel {
        h: h_mat,
        b,
        c: Matrix::identity(n),
        operating_cw: cw_star.to_vec(),
        operating_pfail: analytic_pfail(cfg, cw_star)?,
    })
}

/// Default weights: unit state penalty, heavier integrator penalty, cheap
/// control. Tuning defaults, exposed so the harness can override them.
pub fn default_weights(n: usize) -> (Matrix, Matrix) {
    let mut q = Matrix::identity(2 * n);
    for i in n..2 * n {
        q[(i, i)] = 50.0;
    }
    (q, Matrix::scaled_identity(n, 1e-4))
}

/// LQI regulator state: gain, weights, integrator and reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    /// N x 2N feedback gain for z = [x; s].
    pub k_gain: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    /// Discrete integrator state s(k).
    pub integrator: Vec<f64>,
    /// Sampling period in seconds (beacon interval).
    pub t_s: f64,
    /// Reference failure probabilities p^F*.
    pub reference: Vec<f64>,
    pub operating_cw: Vec<f64>,
    prev_error: Vec<f64>,
    last_measured: Vec<f64>,
    saturated: Vec<bool>,
}

/// Synthesise the LQI gain for the augmented system z = [x; s] with
/// x(k+1) = B u(k) (the plant is memoryless at the beacon timescale) and
/// s(k+1) = s(k) + T_s e(k).
///
/// `t_s` is the sampling period in seconds. The model's B = -H^T is defined
/// with a negated input, so the physical plant sees -u;
/// [`ControllerState::step`] applies the deviation with the matching sign.
pub fn lqi_gain(model: &LinearModel, q: Matrix, r: Matrix, t_s: f64) -> Result<ControllerState, LqiError> {
    let n = model.b.rows;
    if model.h.max_abs() == 0.0 {
        return Err(LqiError::Uncontrollable);
    }
    let mut a_aug = Matrix::zeros(2 * n, 2 * n);
    a_aug.set_block(n, 0, &model.c.scale(-t_s));
    a_aug.set_block(n, n, &Matrix::identity(n));
    let mut b_aug = Matrix::zeros(2 * n, n);
    b_aug.set_block(0, 0, &model.b);

    let p = solve_dare(&a_aug, &b_aug, &q, &r)?;
    let bt = b_aug.transpose();
    let btp = &bt * &p;
    let inner = (&r + &(&btp * &b_aug)).inverse().ok_or(DareError::SingularInnerTerm)?;
    let k_gain = &(&inner * &btp) * &a_aug;

    Ok(ControllerState {
        k_gain,
        q,
        r,
        integrator: vec![0.0; n],
        t_s,
        reference: model.operating_pfail.clone(),
        operating_cw: model.operating_cw.clone(),
        prev_error: vec![0.0; n],
        last_measured: model.operating_pfail.clone(),
        saturated: vec![false; n],
    })
}

impl ControllerState {
    /// Closed-loop spectral radius of the design model under this gain.
    pub fn design_spectral_radius(&self, model: &LinearModel) -> f64 {
        let n = model.b.rows;
        let mut a_aug = Matrix::zeros(2 * n, 2 * n);
        a_aug.set_block(n, 0, &model.c.scale(-self.t_s));
        a_aug.set_block(n, n, &Matrix::identity(n));
        let mut b_aug = Matrix::zeros(2 * n, n);
        b_aug.set_block(0, 0, &model.b);
        (&a_aug - &(&b_aug * &self.k_gain)).spectral_radius()
    }

    /// One beacon-interval update: consume the measured failure probabilities
    /// (absent entries hold the previous value) and emit the next CW_min.
    ///
    /// Integrates the previous error first (s(k) = s(k-1) + T_s e(k-1)),
    /// skipping channels that saturated the CW range on the last step.
    pub fn step(&mut self, measured_pfail: &[Option<f64>]) -> Vec<f64> {
        let n = self.reference.len();
        let mut y = self.last_measured.clone();
        for (i, m) in measured_pfail.iter().enumerate() {
            if let Some(v) = m {
                y[i] = v.clamp(0.0, 1.0);
            }
        }
        self.last_measured = y.clone();

        for i in 0..n {
            if !self.saturated[i] {
                self.integrator[i] += self.t_s * self.prev_error[i];
            }
        }
        let mut z = Vec::with_capacity(2 * n);
        for i in 0..n {
            z.push(y[i] - self.reference[i]);
        }
        z.extend_from_slice(&self.integrator);
        let du = self.k_gain.apply(&z);

        let mut cw = Vec::with_capacity(n);
        for i in 0..n {
            self.prev_error[i] = self.reference[i] - y[i];
            // input enters the plant negated relative to B = -H^T
            let raw = self.operating_cw[i] + du[i];
            let clamped = raw.clamp(CW_MIN_FLOOR, CW_MIN_CEIL);
            self.saturated[i] = clamped != raw;
            cw.push(clamped);
        }
        cw
    }

    /// Reset integrator and memory, e.g. after a membership change.
    pub fn reset(&mut self) {
        for v in &mut self.integrator {
            *v = 0.0;
        }
        for v in &mut self.prev_error {
            *v = 0.0;
        }
        self.last_measured = self.reference.clone();
        for v in &mut self.saturated {
            *v = false;
        }
    }
}
