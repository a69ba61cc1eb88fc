//! Continuous Lyapunov and algebraic Riccati solvers.
//!
//! * [`solve_lyapunov`]: `A L + L Aᵀ + Q = 0` by complex Schur
//!   (Bartels–Stewart) substitution.
//! * [`solve_care_hinf`]: stabilizing solution of the bounded-real equation
//!   `AcᵀP + P Ac + C1ᵀC1 + P B1B1ᵀP / β = 0`.
//! * [`solve_care_lqr`]: `AᵀP + PA + Q - P B R⁻¹ Bᵀ P = 0`.
//!
//! Both Riccati solvers take the stable invariant subspace of the
//! associated Hamiltonian from an ordered real Schur form and recover
//! `P = X21 X11⁻¹`. Everything is O(n³).

use ndarray::{s, Array2};
use ndarray_linalg::{Eigh, Inverse, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hinf::{hamiltonian, has_imaginary_axis_eig, IMAG_AXIS_REL_TOL};
use crate::linalg::{
    complex_schur, complexify, fro_norm, real_schur_stable_first, solve_with_rcond, symmetrize,
};
use crate::lti::{check_stabilizable, is_hurwitz_default, ClosedLoop, Gain, PBH_RANK_TOL};

/// Residual tolerance relative to the natural scale of each equation.
pub const RESIDUAL_REL_TOL: f64 = 1e-8;

/// Eigenvalues of `P` in `[-PSD_REL_TOL·(1+‖P‖), 0)` are clamped to zero.
pub const PSD_REL_TOL: f64 = 1e-8;

/// Below this reciprocal condition number `X11` is treated as singular.
const SUBSPACE_RCOND_MIN: f64 = 1e-13;

/// Relative threshold on `|λi + conj(λj)|` for a solvable Lyapunov equation.
const LYAPUNOV_SEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub l0: Array2<f64>,
    pub residual_norm: f64,
}

#[derive(Debug, Clone)]
pub struct AreSolution {
    pub p_inf: Array2<f64>,
    /// `Ac + B1 B1ᵀ P / β`, Hurwitz for the stabilizing solution.
    pub a1: Array2<f64>,
    pub beta: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone)]
pub struct LqrSolution {
    pub p: Array2<f64>,
    pub gain: Gain,
    pub residual_norm: f64,
}

fn square(name: &str, m: &Array2<f64>, n: usize) -> Result<()> {
    if m.dim() != (n, n) {
        return Err(Error::Dimension(format!(
            "{name} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Solves `A L + L Aᵀ + Q = 0` for symmetric `Q`.
pub fn solve_lyapunov(a: &Array2<f64>, q: &Array2<f64>) -> Result<LyapunovSolution> {
    let n = a.nrows();
    square("A", a, n)?;
    square("Q", q, n)?;

    // A = U T Uᴴ; with Y = Uᴴ L U and F = Uᴴ Q U the equation becomes
    // T Y + Y Tᴴ = -F, solved column by column from the last.
    let (t, u) = complex_schur(&complexify(a))?;
    let uh = u.t().mapv(|z| z.conj());
    let f = uh.dot(&complexify(q)).dot(&u);

    let sep_tol = LYAPUNOV_SEP_TOL * (1.0 + fro_norm(a));
    let mut y = Array2::<Complex64>::zeros((n, n));
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for j in (0..n).rev() {
        let tjj = t[[j, j]].conj();
        for i in 0..n {
            let mut acc = -f[[i, j]];
            for k in (j + 1)..n {
                acc -= t[[j, k]].conj() * y[[i, k]];
            }
            rhs[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for l in (i + 1)..n {
                acc -= t[[i, l]] * y[[l, j]];
            }
            let pivot = t[[i, i]] + tjj;
            if pivot.norm() <= sep_tol {
                return Err(Error::IllPosedLyapunov(t[[i, i]], t[[j, j]]));
            }
            y[[i, j]] = acc / pivot;
        }
    }

    let l0 = symmetrize(&u.dot(&y).dot(&uh).mapv(|z| z.re));
    let residual = a.dot(&l0) + l0.dot(&a.t()) + q;
    let residual_norm = fro_norm(&residual);
    let bound = RESIDUAL_REL_TOL * (1.0 + fro_norm(&l0)) * (1.0 + fro_norm(a));
    if !(residual_norm <= bound) {
        return Err(Error::Residual {
            equation: "Lyapunov",
            residual: residual_norm,
            bound,
        });
    }
    Ok(LyapunovSolution { l0, residual_norm })
}

/// `P = X21 X11⁻¹` from the stable invariant subspace of a 2n×2n
/// Hamiltonian, symmetrized.
fn stable_subspace_solution(h: &Array2<f64>, beta: f64) -> Result<Array2<f64>> {
    let n = h.nrows() / 2;
    let schur = real_schur_stable_first(h)?;
    if schur.stable_dim != n {
        return Err(Error::NoStabilizingSolution { beta });
    }
    let x11 = schur.z.slice(s![..n, ..n]);
    let x21 = schur.z.slice(s![n.., ..n]);
    // P X11 = X21  <=>  X11ᵀ Pᵀ = X21ᵀ
    let (pt, rcond) = solve_with_rcond(&x11.t().to_owned(), &x21.t().to_owned())?;
    if !(rcond > SUBSPACE_RCOND_MIN) {
        return Err(Error::SubspaceExtraction { rcond });
    }
    Ok(symmetrize(&pt.t().to_owned()))
}

/// Clamps tiny negative eigenvalues of a symmetric `P` to zero, or fails if
/// `P` is clearly indefinite.
fn clamp_psd(p: Array2<f64>) -> Result<Array2<f64>> {
    if p.nrows() == 0 {
        return Ok(p);
    }
    let (w, v) = p.eigh(UPLO::Lower).map_err(|e| Error::linalg("syevd", e))?;
    let tol = PSD_REL_TOL * (1.0 + fro_norm(&p));
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return Ok(p);
    }
    if min < -tol {
        return Err(Error::NotStabilizing(format!(
            "P has eigenvalue {min:e} below -{tol:e}"
        )));
    }
    let w = w.mapv(|x| x.max(0.0));
    let scaled = &v * &w;
    Ok(symmetrize(&scaled.dot(&v.t())))
}

/// `‖AcᵀP + P Ac + C1ᵀC1 + P B1B1ᵀP / β‖_F`.
pub fn are_residual(cl: &ClosedLoop, beta: f64, p: &Array2<f64>) -> Result<f64> {
    square("P", p, cl.n())?;
    let pb = p.dot(&cl.b1);
    let r = cl.ac.t().dot(p) + p.dot(&cl.ac) + cl.c1.t().dot(&cl.c1) + pb.dot(&pb.t()) / beta;
    Ok(fro_norm(&r))
}

/// Stabilizing solution of the H∞ Riccati equation at level `β`. Fails when
/// `β` does not exceed the squared closed-loop norm by a numerically
/// detectable margin.
pub fn solve_care_hinf(cl: &ClosedLoop, beta: f64) -> Result<AreSolution> {
    let h = hamiltonian(cl, beta)?;
    if has_imaginary_axis_eig(&h, IMAG_AXIS_REL_TOL)? {
        return Err(Error::NoStabilizingSolution { beta });
    }
    let p = clamp_psd(stable_subspace_solution(&h, beta)?)?;
    let bbt = cl.b1.dot(&cl.b1.t());
    let a1 = &cl.ac + &(bbt.dot(&p) / beta);
    if !is_hurwitz_default(&a1)? {
        return Err(Error::NotStabilizing("Ac + B1B1ᵀP/β is not Hurwitz".into()));
    }
    let residual_norm = are_residual(cl, beta, &p)?;
    let np = fro_norm(&p);
    let scale = 1.0
        + 2.0 * fro_norm(&cl.ac) * np
        + fro_norm(&cl.c1.t().dot(&cl.c1))
        + np * np * fro_norm(&bbt) / beta;
    let bound = RESIDUAL_REL_TOL * scale;
    if !(residual_norm <= bound) {
        return Err(Error::Residual {
            equation: "H-infinity Riccati",
            residual: residual_norm,
            bound,
        });
    }
    Ok(AreSolution {
        p_inf: p,
        a1,
        beta,
        residual_norm,
    })
}

/// LQR Riccati equation and the optimal gain `K = -R⁻¹BᵀP` (so `u = Kx`).
pub fn solve_care_lqr(
    a: &Array2<f64>,
    b: &Array2<f64>,
    q: &Array2<f64>,
    r: &Array2<f64>,
) -> Result<LqrSolution> {
    let n = a.nrows();
    square("A", a, n)?;
    square("Q", q, n)?;
    let m = b.ncols();
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "B must have {n} rows, got {}",
            b.nrows()
        )));
    }
    square("R", r, m)?;
    if !check_stabilizable(a, b, PBH_RANK_TOL)? {
        return Err(Error::NotStabilizable);
    }
    let r_inv = r.inv().map_err(|e| Error::linalg("getri", e))?;
    let g = b.dot(&r_inv).dot(&b.t());

    let mut h = Array2::zeros((2 * n, 2 * n));
    h.slice_mut(s![..n, ..n]).assign(a);
    h.slice_mut(s![..n, n..]).assign(&-&g);
    h.slice_mut(s![n.., ..n]).assign(&-q);
    h.slice_mut(s![n.., n..]).assign(&-&a.t());
    if has_imaginary_axis_eig(&h, IMAG_AXIS_REL_TOL)? {
        return Err(Error::NotStabilizing(
            "LQR Hamiltonian has imaginary-axis eigenvalues; (A, Q) is not detectable".into(),
        ));
    }
    let p = clamp_psd(stable_subspace_solution(&h, f64::NAN)?)?;
    let k = -r_inv.dot(&b.t()).dot(&p);
    if !is_hurwitz_default(&(a + &b.dot(&k)))? {
        return Err(Error::NotStabilizing("A + B K is not Hurwitz".into()));
    }
    let residual = a.t().dot(&p) + p.dot(a) + q - p.dot(&g).dot(&p);
    let residual_norm = fro_norm(&residual);
    let np = fro_norm(&p);
    let bound =
        RESIDUAL_REL_TOL * (1.0 + 2.0 * fro_norm(a) * np + fro_norm(q) + np * np * fro_norm(&g));
    if !(residual_norm <= bound) {
        return Err(Error::Residual {
            equation: "LQR Riccati",
            residual: residual_norm,
            bound,
        });
    }
    Ok(LqrSolution {
        p,
        gain: Gain::new(k)?,
        residual_norm,
    })
}
