//! Plant and closed-loop data model, assumption checks, and the
//! frequency-response primitives everything else is built on.

use ndarray::{concatenate, Array2, Axis};
use ndarray_linalg::{FactorizeInto, ReciprocalConditionNum, Solve};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    complexify, eigenvalues, ensure_finite, fro_norm, has_full_row_rank, singular_values,
};

/// Relative Hurwitz margin: `Re(λ) < -HURWITZ_REL_TOL · (1 + ‖M‖_F)`.
pub const HURWITZ_REL_TOL: f64 = 1e-9;

/// Singular values below `PBH_RANK_TOL · σ_max` count as zero in the PBH test.
pub const PBH_RANK_TOL: f64 = 1e-10;

/// Linear time-invariant plant
///
/// ```text
/// ẋ = A x + B u + B1 w
/// z = C x + D u
/// ```
///
/// with state feedback `u = K x`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: Array2<f64>,
    b: Array2<f64>,
    b1: Array2<f64>,
    c: Array2<f64>,
    d: Array2<f64>,
}

impl Plant {
    /// Validates shapes and finiteness. The stabilizability and
    /// detectability assumptions are only logged here; synthesis enforces
    /// them.
    pub fn new(
        a: Array2<f64>,
        b: Array2<f64>,
        b1: Array2<f64>,
        c: Array2<f64>,
        d: Array2<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let rows_match = |name: &str, m: &Array2<f64>| {
            if m.nrows() != n {
                Err(Error::Dimension(format!(
                    "(A, {name}): {name} has {} rows but A is {n}x{n}",
                    m.nrows()
                )))
            } else {
                Ok(())
            }
        };
        rows_match("B", &b)?;
        rows_match("B1", &b1)?;
        if c.ncols() != n {
            return Err(Error::Dimension(format!(
                "(A, C): C has {} columns but A is {n}x{n}",
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() {
            return Err(Error::Dimension(format!(
                "(C, D): D has {} rows but C has {}",
                d.nrows(),
                c.nrows()
            )));
        }
        if d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "(B, D): D has {} columns but B has {}",
                d.ncols(),
                b.ncols()
            )));
        }
        if b.ncols() == 0 || b1.ncols() == 0 || c.nrows() == 0 {
            return Err(Error::Dimension(
                "B, B1 and C must have at least one column/row".into(),
            ));
        }
        for (name, m) in [("A", &a), ("B", &b), ("B1", &b1), ("C", &c), ("D", &d)] {
            ensure_finite(name, m)?;
        }

        let plant = Plant { a, b, b1, c, d };
        plant.warn_on_assumptions();
        Ok(plant)
    }

    fn warn_on_assumptions(&self) {
        match check_stabilizable(&self.a, &self.b, PBH_RANK_TOL) {
            Ok(false) => log::warn!("(A, B) is not stabilizable; synthesis will refuse this plant"),
            Err(e) => log::warn!("stabilizability check failed: {e}"),
            Ok(true) => {}
        }
        if let Ok(false) = check_stabilizable(&self.a, &self.b1, PBH_RANK_TOL) {
            log::warn!("(A, B1) is not stabilizable");
        }
        match check_detectable(&self.a, &self.c, PBH_RANK_TOL) {
            Ok(false) => log::warn!("(A, C) is not detectable; synthesis will refuse this plant"),
            Err(e) => log::warn!("detectability check failed: {e}"),
            Ok(true) => {}
        }
    }

    /// Hard check of the synthesis assumptions on `(A, B)` and `(A, C)`.
    pub fn check_assumptions(&self) -> Result<()> {
        if !check_stabilizable(&self.a, &self.b, PBH_RANK_TOL)? {
            return Err(Error::NotStabilizable);
        }
        if !check_detectable(&self.a, &self.c, PBH_RANK_TOL)? {
            return Err(Error::NotDetectable);
        }
        if !check_stabilizable(&self.a, &self.b1, PBH_RANK_TOL)? {
            log::warn!("(A, B1) is not stabilizable; continuing");
        }
        Ok(())
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }
    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }
    pub fn b1(&self) -> &Array2<f64> {
        &self.b1
    }
    pub fn c(&self) -> &Array2<f64> {
        &self.c
    }
    pub fn d(&self) -> &Array2<f64> {
        &self.d
    }

    /// Number of states.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Number of control inputs.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    /// Number of disturbance inputs.
    pub fn m1(&self) -> usize {
        self.b1.ncols()
    }
    /// Number of performance outputs.
    pub fn r(&self) -> usize {
        self.c.nrows()
    }
}

/// State-feedback gain `K` (m×n), `u = K x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gain(Array2<f64>);

impl Gain {
    pub fn new(k: Array2<f64>) -> Result<Self> {
        ensure_finite("K", &k)?;
        Ok(Gain(k))
    }

    pub fn zeros(plant: &Plant) -> Self {
        Gain(Array2::zeros((plant.m(), plant.n())))
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        fro_norm(&self.0)
    }

    /// `K - step · direction`, the update used by the descent loop.
    pub fn step(&self, step: f64, direction: &Array2<f64>) -> Gain {
        Gain(&self.0 - &(direction * step))
    }

    fn check_against(&self, plant: &Plant) -> Result<()> {
        if self.0.dim() != (plant.m(), plant.n()) {
            return Err(Error::Dimension(format!(
                "(plant, K): K is {}x{} but the plant needs {}x{}",
                self.0.nrows(),
                self.0.ncols(),
                plant.m(),
                plant.n()
            )));
        }
        Ok(())
    }
}

/// Closed-loop matrices `Ac = A + BK`, `C1 = C + DK`, together with the
/// disturbance input `B1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub ac: Array2<f64>,
    pub b1: Array2<f64>,
    pub c1: Array2<f64>,
}

impl ClosedLoop {
    /// Builds a closed loop directly from its matrices, for analysis of
    /// systems that did not come from a [`Plant`].
    pub fn from_parts(ac: Array2<f64>, b1: Array2<f64>, c1: Array2<f64>) -> Result<Self> {
        let n = ac.nrows();
        if ac.ncols() != n || b1.nrows() != n || c1.ncols() != n {
            return Err(Error::Dimension(format!(
                "closed loop: Ac {:?}, B1 {:?}, C1 {:?} are inconsistent",
                ac.dim(),
                b1.dim(),
                c1.dim()
            )));
        }
        for (name, m) in [("Ac", &ac), ("B1", &b1), ("C1", &c1)] {
            ensure_finite(name, m)?;
        }
        Ok(ClosedLoop { ac, b1, c1 })
    }

    pub fn n(&self) -> usize {
        self.ac.nrows()
    }
}

pub fn closed_loop(plant: &Plant, gain: &Gain) -> Result<ClosedLoop> {
    gain.check_against(plant)?;
    let k = gain.matrix();
    Ok(ClosedLoop {
        ac: &plant.a + &plant.b.dot(k),
        b1: plant.b1.clone(),
        c1: &plant.c + &plant.d.dot(k),
    })
}

/// Default Hurwitz margin for `m`.
pub fn hurwitz_tolerance(m: &Array2<f64>) -> f64 {
    HURWITZ_REL_TOL * (1.0 + fro_norm(m))
}

/// True iff every eigenvalue of `m` satisfies `Re(λ) < -tol_re`.
pub fn is_hurwitz(m: &Array2<f64>, tol_re: f64) -> Result<bool> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "Hurwitz test needs a square matrix, got {:?}",
            m.dim()
        )));
    }
    ensure_finite("M", m)?;
    Ok(eigenvalues(m)?.iter().all(|l| l.re < -tol_re))
}

/// [`is_hurwitz`] with the scale-relative default margin.
pub fn is_hurwitz_default(m: &Array2<f64>) -> Result<bool> {
    is_hurwitz(m, hurwitz_tolerance(m))
}

/// PBH test: for every eigenvalue of `A` not certified stable, `[A - λI, B]`
/// must have full row rank.
pub fn check_stabilizable(a: &Array2<f64>, b: &Array2<f64>, tol_rank: f64) -> Result<bool> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::Dimension(format!(
            "stabilizability: A {:?} and B {:?} are inconsistent",
            a.dim(),
            b.dim()
        )));
    }
    let tol_re = hurwitz_tolerance(a);
    let ac = complexify(a);
    let bc = complexify(b);
    for lambda in eigenvalues(a)?.iter().filter(|l| l.re >= -tol_re) {
        let mut shifted = ac.clone();
        for i in 0..n {
            shifted[[i, i]] -= *lambda;
        }
        let block = concatenate(Axis(1), &[shifted.view(), bc.view()])
            .map_err(|e| Error::linalg("concatenate", e))?;
        if !has_full_row_rank(&block, tol_rank)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Dual of [`check_stabilizable`]: `(A, C)` detectable iff `(Aᵀ, Cᵀ)` stabilizable.
pub fn check_detectable(a: &Array2<f64>, c: &Array2<f64>, tol_rank: f64) -> Result<bool> {
    check_stabilizable(&a.t().to_owned(), &c.t().to_owned(), tol_rank)
}

/// Resolvent solves with reciprocal condition below this are treated as a
/// pole on the frequency axis.
const RESOLVENT_RCOND_MIN: f64 = 1e-14;

/// `σ_max(C1 (jωI - Ac)⁻¹ B1)`.
pub fn sigma_max_response(cl: &ClosedLoop, omega: f64) -> Result<f64> {
    let n = cl.n();
    let mut m = complexify(&cl.ac).mapv(|x| -x);
    for i in 0..n {
        m[[i, i]] += Complex64::new(0.0, omega);
    }
    let lu = m
        .factorize_into()
        .map_err(|_| Error::PoleAtFrequency { omega })?;
    let rcond = lu.rcond().map_err(|e| Error::linalg("gecon", e))?;
    if !(rcond > RESOLVENT_RCOND_MIN) {
        return Err(Error::PoleAtFrequency { omega });
    }
    let b1 = complexify(&cl.b1);
    let mut x = Array2::<Complex64>::zeros(b1.dim());
    for (j, col) in b1.columns().into_iter().enumerate() {
        let sol = lu
            .solve(&col.to_owned())
            .map_err(|e| Error::linalg("getrs", e))?;
        x.column_mut(j).assign(&sol);
    }
    let g = complexify(&cl.c1).dot(&x);
    let sv = singular_values(&g)?;
    Ok(sv.first().copied().unwrap_or(0.0))
}
