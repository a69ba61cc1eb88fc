//! Reference plants and seeded random system generators used by tests,
//! benchmarks and the CLI.

use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::eigenvalues;
use crate::lti::{ClosedLoop, Gain, Plant};

/// `ẋ = -x + u + w`, `z = [x; u]`. Its open-loop H∞ norm is 1.
pub fn scalar_plant() -> Plant {
    Plant::new(
        array![[-1.0]],
        array![[1.0]],
        array![[1.0]],
        array![[1.0], [0.0]],
        array![[0.0], [1.0]],
    )
    .expect("valid scalar plant")
}

/// Two-state, two-input plant with `B1 = I`, `C = [I; 0]`, `D = [0; I]`.
pub fn example1_plant() -> Plant {
    Plant::new(
        array![[0.2229, 0.5637], [0.8708, 0.9984]],
        array![[0.5254, 0.6644], [0.3872, 0.9145]],
        Array2::eye(2),
        array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]],
        array![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
    )
    .expect("valid example plant")
}

/// Published robust design for an uncertain version of [`example1_plant`].
/// On the nominal plant its closed-loop γ is about 2.6947, peaking at ω = 0.
pub fn example1_reference_gain() -> Gain {
    Gain::new(-array![[0.9643, 2.1060], [0.2088, 5.6843]]).expect("finite gain")
}

/// Gain reached by gradient descent from the LQR start; closed-loop
/// γ ≈ 2.6736.
pub fn example1_descent_gain() -> Gain {
    Gain::new(-array![[0.8426, 0.9893], [0.0551, 2.5743]]).expect("finite gain")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| {
        scale * rng.sample::<f64, _>(StandardNormal)
    })
}

/// Random Hurwitz matrix: a Gaussian matrix shifted so its rightmost
/// eigenvalue sits at `-margin`, with `margin` drawn from `[0.1, 1)`.
pub fn random_hurwitz(rng: &mut impl Rng, n: usize) -> Array2<f64> {
    let mut a = gaussian(rng, n, n, 1.0 / (n as f64).sqrt());
    let rightmost = eigenvalues(&a)
        .expect("eigenvalues of a finite matrix")
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = rng.random_range(0.1..1.0);
    for i in 0..n {
        a[[i, i]] -= rightmost + margin;
    }
    a
}

/// Random open-loop stable plant with Gaussian input/output maps. The
/// output stacks a state channel and a control channel, `C = [C0; 0]`,
/// `D = [0; I]`, so the gain is penalised as in the usual H∞ setup.
pub fn random_stable_plant(rng: &mut impl Rng, n: usize, m: usize, m1: usize, p: usize) -> Plant {
    let a = random_hurwitz(rng, n);
    let b = gaussian(rng, n, m, 1.0);
    let b1 = gaussian(rng, n, m1, 1.0);
    let mut c = Array2::zeros((p + m, n));
    c.slice_mut(ndarray::s![..p, ..])
        .assign(&gaussian(rng, p, n, 1.0));
    let mut d = Array2::zeros((p + m, m));
    d.slice_mut(ndarray::s![p.., ..]).assign(&Array2::eye(m));
    Plant::new(a, b, b1, c, d).expect("generated plant is well formed")
}

/// Random plant with dimensions drawn from `n ∈ [1, max_n]`,
/// `m, m1, p ∈ [1, min(n, 3)]`.
pub fn random_stable_plant_upto(rng: &mut impl Rng, max_n: usize) -> Plant {
    let n = rng.random_range(1..=max_n);
    let cap = n.min(3);
    let m = rng.random_range(1..=cap);
    let m1 = rng.random_range(1..=cap);
    let p = rng.random_range(1..=cap);
    random_stable_plant(rng, n, m, m1, p)
}

/// Random Hurwitz closed loop with `n` states and up to three channels.
pub fn random_closed_loop(rng: &mut impl Rng, n: usize) -> ClosedLoop {
    let ac = random_hurwitz(rng, n);
    let m1 = rng.random_range(1..=n.min(3));
    let r = rng.random_range(1..=n.min(3));
    let b1 = gaussian(rng, n, m1, 1.0);
    let c1 = gaussian(rng, r, n, 1.0);
    ClosedLoop::from_parts(ac, b1, c1).expect("generated closed loop is well formed")
}

/// Damped chain of `masses` point masses anchored to a wall at one end,
/// with random masses, springs and dampers. State is `[q; q̇]` so
/// `n = 2 · masses`. The control force acts on the free end, the
/// disturbance on the first mass, and the performance output is the
/// free-end displacement plus the control effort.
pub fn chained_mass(rng: &mut impl Rng, masses: usize) -> Plant {
    assert!(masses > 0, "chain needs at least one mass");
    let n = 2 * masses;
    let mass: Vec<f64> = (0..masses).map(|_| rng.random_range(0.5..1.5)).collect();
    let spring: Vec<f64> = (0..masses).map(|_| rng.random_range(0.5..1.5)).collect();
    let damper: Vec<f64> = (0..masses).map(|_| rng.random_range(0.05..0.2)).collect();

    // Element i connects mass i to mass i-1 (or the wall for i = 0).
    let mut stiff = Array2::<f64>::zeros((masses, masses));
    let mut damp = Array2::<f64>::zeros((masses, masses));
    for i in 0..masses {
        stiff[[i, i]] += spring[i];
        damp[[i, i]] += damper[i];
        if i > 0 {
            stiff[[i - 1, i - 1]] += spring[i];
            stiff[[i, i - 1]] -= spring[i];
            stiff[[i - 1, i]] -= spring[i];
            damp[[i - 1, i - 1]] += damper[i];
            damp[[i, i - 1]] -= damper[i];
            damp[[i - 1, i]] -= damper[i];
        }
    }

    let mut a = Array2::<f64>::zeros((n, n));
    for i in 0..masses {
        a[[i, masses + i]] = 1.0;
        for j in 0..masses {
            a[[masses + i, j]] = -stiff[[i, j]] / mass[i];
            a[[masses + i, masses + j]] = -damp[[i, j]] / mass[i];
        }
    }
    let mut b = Array2::<f64>::zeros((n, 1));
    b[[n - 1, 0]] = 1.0 / mass[masses - 1];
    let mut b1 = Array2::<f64>::zeros((n, 1));
    b1[[masses, 0]] = 1.0 / mass[0];
    let mut c = Array2::<f64>::zeros((2, n));
    c[[0, masses - 1]] = 1.0;
    let d = array![[0.0], [1.0]];
    Plant::new(a, b, b1, c, d).expect("chain plant is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::is_hurwitz_default;

    #[test]
    fn generators_are_stable_and_deterministic() {
        let mut r = rng(7);
        for n in 1..=8 {
            assert!(is_hurwitz_default(&random_hurwitz(&mut r, n)).unwrap());
        }
        let p1 = random_stable_plant(&mut rng(3), 4, 2, 1, 2);
        let p2 = random_stable_plant(&mut rng(3), 4, 2, 1, 2);
        assert_eq!(p1, p2);
        assert_eq!((p1.r(), p1.d().ncols()), (4, 2));
    }

    #[test]
    fn chained_mass_is_stable() {
        let p = chained_mass(&mut rng(1), 10);
        assert_eq!(p.n(), 20);
        assert!(is_hurwitz_default(p.a()).unwrap());
        p.check_assumptions().unwrap();
    }
}
