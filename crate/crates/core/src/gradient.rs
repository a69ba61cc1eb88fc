//! Gradient of the penalized objective `f_η(K) = β + η·tr(P∞)` with
//! respect to the gain, from one Riccati solve and one Lyapunov solve:
//!
//! ```text
//! AcᵀP + P Ac + C1ᵀC1 + P B1B1ᵀP / β = 0
//! A1 L0 + L0 A1ᵀ + η I = 0,         A1 = Ac + B1B1ᵀP / β
//! ∇K f_η = 2 (BᵀP + DᵀC + DᵀD K) L0
//! ```
//!
//! β is held fixed; the caller supplies it from a norm evaluation.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::lti::{closed_loop, Gain, Plant};
use crate::matrix_equations::{solve_care_hinf, solve_lyapunov};

/// Relative inflation applied to β before the Riccati solve. At β = ‖G‖∞²
/// exactly the Hamiltonian has imaginary-axis eigenvalues and no
/// stabilizing solution exists.
pub const DEFAULT_DELTA_BETA: f64 = 1e-3;

pub const DEFAULT_ETA: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct GradientWorkspace {
    pub p_inf: Array2<f64>,
    pub l0: Array2<f64>,
    pub a1: Array2<f64>,
    pub grad: Array2<f64>,
    pub beta_used: f64,
    pub eta: f64,
    /// `β_used + η·tr(P∞)`.
    pub f_eta: f64,
}

pub fn gradient_f_eta(
    plant: &Plant,
    gain: &Gain,
    beta: f64,
    eta: f64,
    delta_beta: f64,
) -> Result<GradientWorkspace> {
    if !(eta > 0.0) {
        return Err(Error::Config(format!("eta must be positive, got {eta}")));
    }
    if !(delta_beta >= 0.0) {
        return Err(Error::Config(format!(
            "delta_beta must be non-negative, got {delta_beta}"
        )));
    }
    let cl = closed_loop(plant, gain)?;
    let beta_used = beta * (1.0 + delta_beta);
    // NoStabilizingSolution here means delta_beta is too small for the
    // accuracy of beta.
    let are = solve_care_hinf(&cl, beta_used)?;

    let n = plant.n();
    let lyap = solve_lyapunov(&are.a1, &(Array2::eye(n) * eta))?;

    let k = gain.matrix();
    let b_t = plant.b().t();
    let d_t = plant.d().t();
    let inner = b_t.dot(&are.p_inf) + d_t.dot(plant.c()) + d_t.dot(plant.d()).dot(k);
    let grad = inner.dot(&lyap.l0) * 2.0;
    let f_eta = beta_used + eta * are.p_inf.diag().sum();

    Ok(GradientWorkspace {
        p_inf: are.p_inf,
        l0: lyap.l0,
        a1: are.a1,
        grad,
        beta_used,
        eta,
        f_eta,
    })
}
