//! Discrete algebraic Riccati equation solver.

use core::fmt;

use crate::matrix::Matrix;

const MAX_ITERS: usize = 100_000;
const STEP_TOL: f64 = 1e-13;
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum DareError {
    DimensionError,
    SingularInnerTerm,
    NonConvergence { residual: f64 },
}

impl fmt::Display for DareError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DareError::DimensionError => write!(f, "inconsistent matrix dimensions"),
            DareError::SingularInnerTerm => write!(f, "R + B'PB is singular"),
            DareError::NonConvergence { residual } => {
                write!(f, "Riccati iteration stalled at residual {residual:e}")
            }
        }
    }
}

/// Residual of the DARE at a candidate solution:
/// max-abs of A'PA - A'PB (R + B'PB)^{-1} B'PA + Q - P.
pub fn dare_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<f64, DareError> {
    Ok((&riccati_map(a, b, q, r, p)? - p).max_abs())
}

fn riccati_map(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix, DareError> {
    let at = a.transpose();
    let bt = b.transpose();
    let btp = &bt * p;
    let inner = (r + &(&btp * b)).inverse().ok_or(DareError::SingularInnerTerm)?;
    let atpa = &(&at * p) * a;
    let atpb = &(&at * p) * b;
    let correction = &(&atpb * &inner) * &(&btp * a);
    Ok(&(&atpa - &correction) + q)
}

/// Fixed-point Riccati iteration from P0 = Q. Returns the stabilising
/// solution for stabilisable/detectable instances.
pub fn solve_dare(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix, DareError> {
    let n = a.rows;
    if a.cols != n || b.rows != n || q.rows != n || q.cols != n || r.rows != b.cols || r.cols != b.cols {
        return Err(DareError::DimensionError);
    }
    let mut p = q.clone();
    for _ in 0..MAX_ITERS {
        let next = riccati_map(a, b, q, r, &p)?;
        let step = (&next - &p).max_abs();
        p = next;
        if step < STEP_TOL {
            // enforce exact symmetry (iteration preserves it up to roundoff)
            let sym = (&p + &p.transpose()).scale(0.5);
            let residual = dare_residual(a, b, q, r, &sym)?;
            if residual < RESIDUAL_TOL {
                return Ok(sym);
            }
            return Err(DareError::NonConvergence { residual });
        }
    }
    let residual = dare_residual(a, b, q, r, &p)?;
    Err(DareError::NonConvergence { residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_golden_ratio() {
        // A = B = Q = R = 1: P solves P^2 - P - 1 = 0, P = (1+sqrt 5)/2.
        let one = Matrix::identity(1);
        let p = solve_dare(&one, &one, &one, &one).unwrap();
        assert!((p[(0, 0)] - 1.618_033_988_7).abs() < 1e-9);
    }

    #[test]
    fn no_control_no_dynamics() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(2, 2);
        let q = Matrix::diagonal(&[3.0, 4.0]);
        let r = Matrix::identity(2);
        let p = solve_dare(&a, &b, &q, &r).unwrap();
        assert!((&p - &q).max_abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = Matrix::identity(2);
        let b = Matrix::zeros(3, 2);
        let q = Matrix::identity(2);
        let r = Matrix::identity(2);
        assert!(matches!(solve_dare(&a, &b, &q, &r), Err(DareError::DimensionError)));
    }

    #[test]
    fn random_spd_instances_have_small_residual() {
        // Deterministic pseudo-random SPD Q, R and a stable A.
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..5 {
            let n = 4;
            let mut g = Matrix::zeros(n, n);
            let mut h = Matrix::zeros(n, n);
            let mut a = Matrix::zeros(n, n);
            let mut b = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] = next();
                    h[(i, j)] = next();
                    a[(i, j)] = 0.3 * next();
                    b[(i, j)] = next();
                }
            }
            let q = &(&g * &g.transpose()) + &Matrix::scaled_identity(n, 0.1);
            let r = &(&h * &h.transpose()) + &Matrix::scaled_identity(n, 0.1);
            let p = solve_dare(&a, &b, &q, &r).unwrap();
            assert!(dare_residual(&a, &b, &q, &r, &p).unwrap() < 1e-9);
            assert!((&p - &p.transpose()).max_abs() < 1e-12);
        }
    }
}
