//! H∞ norm of a stable closed loop by bisection on the Hamiltonian
//! imaginary-axis test, plus a frequency-grid lower bound used as an
//! independent check.
//!
//! For `γ > 0` the Hamiltonian
//!
//! ```text
//! H(γ) = [  Ac        B1 B1ᵀ / γ² ]
//!        [ -C1ᵀ C1   -Acᵀ         ]
//! ```
//!
//! has an eigenvalue on the imaginary axis iff `γ ≤ ‖G‖∞` (for Hurwitz `Ac`).

use ndarray::{concatenate, Array2, Axis};

use crate::error::{Error, Result};
use crate::linalg::eigenvalues;
use crate::lti::{is_hurwitz_default, sigma_max_response, ClosedLoop};
use crate::par::Execution;

/// Relative tolerance of the imaginary-axis decision. Shared by the norm
/// bisection and the stabilizing Riccati solver so that both give up at the
/// same β.
pub const IMAG_AXIS_REL_TOL: f64 = 1e-8;

/// Default relative bisection tolerance on γ.
pub const DEFAULT_TOL_BIS: f64 = 1e-6;

const PROBE_COUNT: usize = 32;
const PROBE_DECADES: (f64, f64) = (-4.0, 4.0);
const MAX_DOUBLINGS: usize = 60;
const MAX_BISECTIONS: usize = 200;

/// Result of a norm evaluation. `gamma` is the upper end of the final
/// bracket, i.e. a level at which the Hamiltonian test certified that no
/// imaginary-axis eigenvalue remains.
#[derive(Debug, Clone, PartialEq)]
pub struct HinfEvaluation {
    pub gamma: f64,
    pub beta: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    /// Frequencies used to seed the lower end of the bracket.
    pub frequencies_probed: Option<Vec<f64>>,
}

/// `[[Ac, B1B1ᵀ/β], [-C1ᵀC1, -Acᵀ]]`.
pub fn hamiltonian(cl: &ClosedLoop, beta: f64) -> Result<Array2<f64>> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Config(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let top = concatenate(
        Axis(1),
        &[cl.ac.view(), (cl.b1.dot(&cl.b1.t()) / beta).view()],
    )
    .map_err(|e| Error::linalg("concatenate", e))?;
    let bottom = concatenate(
        Axis(1),
        &[
            (-cl.c1.t().dot(&cl.c1)).view(),
            (-cl.ac.t().to_owned()).view(),
        ],
    )
    .map_err(|e| Error::linalg("concatenate", e))?;
    concatenate(Axis(0), &[top.view(), bottom.view()]).map_err(|e| Error::linalg("concatenate", e))
}

/// True iff some eigenvalue of `h` has `|Re λ| ≤ tol_im · (1 + |λ|)`.
pub fn has_imaginary_axis_eig(h: &Array2<f64>, tol_im: f64) -> Result<bool> {
    Ok(eigenvalues(h)?
        .iter()
        .any(|l| l.re.abs() <= tol_im * (1.0 + l.norm())))
}

fn crosses_axis(cl: &ClosedLoop, gamma: f64) -> Result<bool> {
    has_imaginary_axis_eig(&hamiltonian(cl, gamma * gamma)?, IMAG_AXIS_REL_TOL)
}

/// `count` logarithmically spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

fn probe_frequencies(cl: &ClosedLoop) -> Result<Vec<f64>> {
    let radius = eigenvalues(&cl.ac)?
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let (lo, hi) = PROBE_DECADES;
    let mut freqs = vec![0.0];
    freqs.extend(log_grid(
        radius * 10f64.powf(lo),
        radius * 10f64.powf(hi),
        PROBE_COUNT,
    ));
    Ok(freqs)
}

/// H∞ norm of a Hurwitz closed loop, to relative accuracy `tol_bis`.
pub fn hinf_norm(cl: &ClosedLoop, tol_bis: f64) -> Result<HinfEvaluation> {
    if !(tol_bis > 0.0) {
        return Err(Error::Config(format!(
            "tol_bis must be positive, got {tol_bis}"
        )));
    }
    if !is_hurwitz_default(&cl.ac)? {
        return Err(Error::UnstableClosedLoop);
    }

    let probes = probe_frequencies(cl)?;
    let mut lower = 0.0f64;
    for &w in &probes {
        lower = lower.max(sigma_max_response(cl, w)?);
    }
    if lower == 0.0 {
        // G vanishes at every probe, which for a rational G of this order
        // means G ≡ 0.
        return Ok(HinfEvaluation {
            gamma: 0.0,
            beta: 0.0,
            lower: 0.0,
            upper: 0.0,
            iterations: 0,
            frequencies_probed: Some(probes),
        });
    }

    let mut upper = lower;
    let mut doublings = 0;
    loop {
        upper *= 2.0;
        doublings += 1;
        if !crosses_axis(cl, upper)? {
            break;
        }
        if doublings >= MAX_DOUBLINGS {
            return Err(Error::NonConvergence {
                lower,
                upper,
                iterations: doublings,
            });
        }
    }

    let mut iterations = 0;
    while upper - lower > tol_bis * lower {
        if iterations >= MAX_BISECTIONS {
            return Err(Error::NonConvergence {
                lower,
                upper,
                iterations,
            });
        }
        let mid = 0.5 * (lower + upper);
        if crosses_axis(cl, mid)? {
            lower = mid;
        } else {
            upper = mid;
        }
        iterations += 1;
    }

    Ok(HinfEvaluation {
        gamma: upper,
        beta: upper * upper,
        lower,
        upper,
        iterations,
        frequencies_probed: Some(probes),
    })
}

/// Norm evaluation over many closed loops, in input order.
pub fn hinf_norm_batch(
    cls: &[ClosedLoop],
    tol_bis: f64,
    exec: Execution,
) -> Vec<Result<HinfEvaluation>> {
    exec.map(cls, |cl| hinf_norm(cl, tol_bis))
}

/// `max_ω σ_max(G(jω))` over `grid`: a lower bound on the H∞ norm.
pub fn hinf_norm_grid_oracle(cl: &ClosedLoop, grid: &[f64], exec: Execution) -> Result<f64> {
    exec.map(grid, |&w| sigma_max_response(cl, w))
        .into_iter()
        .try_fold(0.0f64, |acc, s| Ok(acc.max(s?)))
}
