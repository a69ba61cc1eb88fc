//! Reference computations that share no code path with the library
//! solvers: dense Kronecker systems for Lyapunov equations, Newton
//! iteration for the H∞ Riccati equation, and frequency sweeps.

#![allow(dead_code)]

use hinfgrad::hinf::log_grid;
use hinfgrad::lti::sigma_max_response;
use hinfgrad::ClosedLoop;
use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

pub fn fro(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `A X + X Aᵀ + Q = 0` as `(I ⊗ A + A ⊗ I) vec X = -vec Q`.
pub fn kron_lyapunov(a: &Array2<f64>, q: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut big = Array2::<f64>::zeros((n * n, n * n));
    // Column-major vec: X[i, j] sits at j * n + i.
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for k in 0..n {
                big[[row, j * n + k]] += a[[i, k]];
                big[[row, k * n + i]] += a[[j, k]];
            }
        }
    }
    let rhs = Array1::from_shape_fn(n * n, |idx| -q[[idx % n, idx / n]]);
    let x = big
        .solve_into(rhs)
        .expect("Kronecker system is nonsingular");
    let x = Array2::from_shape_fn((n, n), |(i, j)| x[j * n + i]);
    (&x + &x.t()) * 0.5
}

/// Stabilizing solution of `AcᵀP + P Ac + C1ᵀC1 + P B1B1ᵀP / β = 0` by the
/// monotone Newton iteration from `P = 0`; each step is a Kronecker solve.
pub fn newton_are(cl: &ClosedLoop, beta: f64) -> Array2<f64> {
    let n = cl.n();
    let s = cl.b1.dot(&cl.b1.t()) / beta;
    let q = cl.c1.t().dot(&cl.c1);
    let mut p = Array2::<f64>::zeros((n, n));
    for _ in 0..500 {
        let a_k = &cl.ac + &s.dot(&p);
        let rhs = &q - &p.dot(&s).dot(&p);
        let next = kron_lyapunov(&a_k.t().to_owned(), &rhs);
        let change = fro(&(&next - &p));
        p = next;
        if change <= 1e-15 * (1.0 + fro(&p)) {
            break;
        }
    }
    p
}

/// Largest σ_max over `{0} ∪ grid`, then refined by golden-section search
/// around the best grid point.
pub fn refined_peak(cl: &ClosedLoop, grid: &[f64]) -> f64 {
    let sigma = |w: f64| sigma_max_response(cl, w).expect("no pole on the axis");
    let mut pts = vec![0.0];
    pts.extend_from_slice(grid);
    let (best_i, best) =
        pts.iter()
            .map(|&w| sigma(w))
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, s)| if s > acc.1 { (i, s) } else { acc },
            );
    let lo = if best_i == 0 { 0.0 } else { pts[best_i - 1] };
    let hi = if best_i + 1 < pts.len() {
        pts[best_i + 1]
    } else {
        pts[best_i]
    };
    let (mut a, mut b) = (lo, hi);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut peak = best;
    for _ in 0..100 {
        let x1 = b - r * (b - a);
        let x2 = a + r * (b - a);
        let (f1, f2) = (sigma(x1), sigma(x2));
        peak = peak.max(f1).max(f2);
        if f1 > f2 {
            b = x2;
        } else {
            a = x1;
        }
    }
    peak
}

pub fn default_sweep() -> Vec<f64> {
    log_grid(1e-4, 1e4, 4000)
}
