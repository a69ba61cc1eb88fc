//! Gradient descent on `f(K) = ‖G_K‖∞²` with the penalized-Riccati gradient
//! as search direction and a backtracking rule whose sufficient-decrease
//! parameter shrinks whenever the step underflows.

use std::time::{Duration, Instant};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::gradient::{gradient_f_eta, GradientWorkspace, DEFAULT_DELTA_BETA, DEFAULT_ETA};
use crate::hinf::{hinf_norm, DEFAULT_TOL_BIS};
use crate::linalg::fro_norm;
use crate::lti::{closed_loop, is_hurwitz_default, Gain, Plant};
use crate::matrix_equations::solve_care_lqr;

/// What happens to the line-search parameter α between outer iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaMode {
    /// Carry the (possibly shrunk) α into the next line search.
    #[default]
    Persist,
    /// Restart every line search from `alpha0`.
    Reset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    /// Stop once consecutive objective values differ by at most this.
    pub eps: f64,
    pub alpha0: f64,
    /// Step contraction factor.
    pub zeta: f64,
    pub eta: f64,
    pub delta_beta: f64,
    /// Below this the step resets to 1 and α is divided by `alpha_shrink`.
    pub s_min: f64,
    pub alpha_shrink: f64,
    pub max_outer_iters: usize,
    /// Cap on objective evaluations inside one line search.
    pub max_armijo_iters: usize,
    pub tol_bis: f64,
    pub alpha_mode: AlphaMode,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            eps: 1e-5,
            alpha0: 0.3,
            zeta: 0.5,
            eta: DEFAULT_ETA,
            delta_beta: DEFAULT_DELTA_BETA,
            s_min: 1e-15,
            alpha_shrink: 5.0,
            max_outer_iters: 500,
            max_armijo_iters: 200,
            tol_bis: DEFAULT_TOL_BIS,
            alpha_mode: AlphaMode::Persist,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps", self.eps),
            ("alpha0", self.alpha0),
            ("zeta", self.zeta),
            ("eta", self.eta),
            ("s_min", self.s_min),
            ("alpha_shrink", self.alpha_shrink),
            ("tol_bis", self.tol_bis),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.delta_beta >= 0.0) {
            return Err(Error::Config(format!(
                "delta_beta must be non-negative, got {}",
                self.delta_beta
            )));
        }
        if self.zeta >= 1.0 {
            return Err(Error::Config(format!(
                "zeta must be below 1, got {}",
                self.zeta
            )));
        }
        if self.alpha_shrink <= 1.0 {
            return Err(Error::Config(format!(
                "alpha_shrink must exceed 1, got {}",
                self.alpha_shrink
            )));
        }
        if self.s_min >= 1.0 {
            return Err(Error::Config(format!(
                "s_min must be below 1, got {}",
                self.s_min
            )));
        }
        if self.max_outer_iters == 0 || self.max_armijo_iters == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// One accepted iterate. Index 0 is the initial gain, recorded with zero
/// step and gradient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub index: usize,
    pub gain: Gain,
    pub beta: f64,
    pub gamma: f64,
    /// Step that produced this iterate.
    pub step: f64,
    /// α in force after the line search that produced this iterate.
    pub alpha: f64,
    /// Norm of the search direction that produced this iterate.
    pub grad_norm: f64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
    LineSearchExhausted,
    /// The Riccati or Lyapunov solve failed at the current iterate, even
    /// with an enlarged β margin.
    GradientFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterationCap => "iteration_cap",
            Termination::LineSearchExhausted => "line_search_exhausted",
            Termination::GradientFailure => "gradient_failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub k_star: Gain,
    pub gamma_star: f64,
    pub beta_star: f64,
    pub gamma0: f64,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
    pub wall_time: Duration,
}

/// `f(K) = β_K`. An unstable closed loop is reported as
/// [`Error::UnstableClosedLoop`].
pub fn evaluate_f(plant: &Plant, gain: &Gain, tol_bis: f64) -> Result<f64> {
    Ok(hinf_norm(&closed_loop(plant, gain)?, tol_bis)?.beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub step: f64,
    pub alpha: f64,
    /// Objective at the accepted trial point.
    pub f_trial: f64,
    pub evaluations: usize,
}

/// Backtracking search over `K - s·m`, for any objective. `objective`
/// returning [`Error::UnstableClosedLoop`] counts as a failed test; other
/// errors abort the search.
pub fn armijo_search<F>(
    mut objective: F,
    k: &Gain,
    f_k: f64,
    direction: &Array2<f64>,
    alpha_in: f64,
    cfg: &SynthesisConfig,
) -> Result<LineSearchOutcome>
where
    F: FnMut(&Gain) -> Result<f64>,
{
    let m2 = direction.iter().map(|x| x * x).sum::<f64>();
    let mut alpha = alpha_in;
    let mut step = 1.0;
    for evaluations in 1..=cfg.max_armijo_iters {
        let f_trial = match objective(&k.step(step, direction)) {
            Ok(f) => f,
            Err(Error::UnstableClosedLoop) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if f_trial < f_k - alpha * step * m2 {
            return Ok(LineSearchOutcome {
                step,
                alpha,
                f_trial,
                evaluations,
            });
        }
        step *= cfg.zeta;
        if step < cfg.s_min {
            step = 1.0;
            alpha /= cfg.alpha_shrink;
        }
    }
    Err(Error::LineSearchExhausted { step, alpha })
}

/// The line search on the H∞ objective of `plant`.
pub fn modified_armijo(
    plant: &Plant,
    k: &Gain,
    f_k: f64,
    direction: &Array2<f64>,
    alpha_in: f64,
    cfg: &SynthesisConfig,
) -> Result<LineSearchOutcome> {
    armijo_search(
        |g| evaluate_f(plant, g, cfg.tol_bis),
        k,
        f_k,
        direction,
        alpha_in,
        cfg,
    )
}

/// LQR gain with identity weights, the usual starting point.
pub fn lqr_initial_gain(plant: &Plant) -> Result<Gain> {
    let sol = solve_care_lqr(
        plant.a(),
        plant.b(),
        &Array2::eye(plant.n()),
        &Array2::eye(plant.m()),
    )?;
    Ok(sol.gain)
}

const GRADIENT_RETRIES: usize = 3;

fn gradient_with_margin(
    plant: &Plant,
    k: &Gain,
    beta: f64,
    cfg: &SynthesisConfig,
) -> Result<GradientWorkspace> {
    let mut delta = cfg.delta_beta;
    let mut attempt = 0;
    loop {
        match gradient_f_eta(plant, k, beta, cfg.eta, delta) {
            Ok(ws) => return Ok(ws),
            Err(
                e @ (Error::NoStabilizingSolution { .. }
                | Error::SubspaceExtraction { .. }
                | Error::NotStabilizing(_)
                | Error::Residual { .. }),
            ) if attempt < GRADIENT_RETRIES => {
                let next = if delta > 0.0 {
                    delta * 10.0
                } else {
                    DEFAULT_DELTA_BETA
                };
                log::debug!("gradient failed ({e}); retrying with delta_beta = {next:e}");
                delta = next;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs gradient descent from the stabilizing gain `k0`.
pub fn synthesize(plant: &Plant, k0: &Gain, cfg: &SynthesisConfig) -> Result<SynthesisResult> {
    cfg.validate()?;
    plant.check_assumptions()?;
    let started = Instant::now();
    let cl0 = closed_loop(plant, k0)?;
    if !is_hurwitz_default(&cl0.ac)? {
        return Err(Error::UnstableClosedLoop);
    }
    let mut f = evaluate_f(plant, k0, cfg.tol_bis)?;
    let gamma0 = f.sqrt();
    let mut k = k0.clone();
    let mut alpha = cfg.alpha0;
    let mut trace = vec![IterationRecord {
        index: 0,
        gain: k0.clone(),
        beta: f,
        gamma: gamma0,
        step: 0.0,
        alpha,
        grad_norm: 0.0,
        wall_time: started.elapsed(),
    }];
    let mut termination = Termination::IterationCap;

    for j in 0..cfg.max_outer_iters {
        let t = Instant::now();
        let ws = match gradient_with_margin(plant, &k, f, cfg) {
            Ok(ws) => ws,
            Err(e) => {
                log::warn!("iteration {j}: gradient failed: {e}");
                termination = Termination::GradientFailure;
                break;
            }
        };
        let grad_norm = fro_norm(&ws.grad);
        if !grad_norm.is_finite() {
            termination = Termination::GradientFailure;
            break;
        }
        if grad_norm == 0.0 {
            termination = Termination::Converged;
            break;
        }
        let outcome = match modified_armijo(plant, &k, f, &ws.grad, alpha, cfg) {
            Ok(o) => o,
            Err(Error::LineSearchExhausted { .. }) => {
                termination = Termination::LineSearchExhausted;
                break;
            }
            Err(e) => return Err(e),
        };
        alpha = match cfg.alpha_mode {
            AlphaMode::Persist => outcome.alpha,
            AlphaMode::Reset => cfg.alpha0,
        };
        let f_next = outcome.f_trial;
        k = k.step(outcome.step, &ws.grad);
        trace.push(IterationRecord {
            index: j + 1,
            gain: k.clone(),
            beta: f_next,
            gamma: f_next.sqrt(),
            step: outcome.step,
            alpha: outcome.alpha,
            grad_norm,
            wall_time: t.elapsed(),
        });
        let change = (f_next - f).abs();
        f = f_next;
        if change <= cfg.eps {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(SynthesisResult {
        k_star: k,
        gamma_star: f.sqrt(),
        beta_star: f,
        gamma0,
        trace,
        termination,
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use approx::assert_relative_eq;
    use ndarray::array;

    /// ‖G‖∞² of the scalar plant under gain K < 1; the peak is at ω = 0.
    fn scalar_f(k: f64) -> f64 {
        (1.0 + k * k) / ((1.0 - k) * (1.0 - k))
    }

    fn gain(k: f64) -> Gain {
        Gain::new(array![[k]]).unwrap()
    }

    #[test]
    fn evaluate_f_scalar() {
        let p = synthetic::scalar_plant();
        assert_relative_eq!(
            evaluate_f(&p, &gain(0.0), 1e-9).unwrap(),
            1.0,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            evaluate_f(&p, &gain(0.5), 1e-9).unwrap(),
            scalar_f(0.5),
            max_relative = 1e-8
        );
        assert!(matches!(
            evaluate_f(&p, &gain(2.0), 1e-9),
            Err(Error::UnstableClosedLoop)
        ));
    }

    #[test]
    fn armijo_immediate_acceptance() {
        // f(k) = k², from k = 1 along m = f'(1)/4: s = 1 reaches 0.25.
        let cfg = SynthesisConfig::default();
        let out = armijo_search(
            |g| Ok(g.matrix()[[0, 0]].powi(2)),
            &gain(1.0),
            1.0,
            &array![[0.5]],
            0.3,
            &cfg,
        )
        .unwrap();
        assert_eq!((out.step, out.alpha, out.evaluations), (1.0, 0.3, 1));
    }

    #[test]
    fn armijo_one_halving_on_scalar_plant() {
        // m = 1.5: s = 1 gives K = -1.5 with f = 0.52 ≥ 1 - 0.3·2.25;
        // s = 0.5 gives K = -0.75 with f ≈ 0.5102 < 1 - 0.3·0.5·2.25.
        assert!(scalar_f(-1.5) >= 1.0 - 0.3 * 2.25);
        assert!(scalar_f(-0.75) < 1.0 - 0.3 * 0.5 * 2.25);
        let p = synthetic::scalar_plant();
        let cfg = SynthesisConfig::default();
        let f0 = evaluate_f(&p, &gain(0.0), cfg.tol_bis).unwrap();
        let out = modified_armijo(&p, &gain(0.0), f0, &array![[1.5]], 0.3, &cfg).unwrap();
        assert_eq!(out.step, 0.5);
        assert_eq!(out.alpha, 0.3);
        assert_relative_eq!(out.f_trial, scalar_f(-0.75), max_relative = 1e-5);
    }

    #[test]
    fn armijo_alpha_reset() {
        // f(k) = 0.1 (k + 1)² at k = 0 with m = 1: every s fails at α = 0.3
        // (needs s < (2 - 3)/1) but s = 1 passes at α = 0.06 (s < 1.4).
        let cfg = SynthesisConfig::default();
        let mut calls = 0;
        let out = armijo_search(
            |g| {
                calls += 1;
                Ok(0.1 * (g.matrix()[[0, 0]] + 1.0).powi(2))
            },
            &gain(0.0),
            0.1,
            &array![[1.0]],
            0.3,
            &cfg,
        )
        .unwrap();
        assert_eq!(out.step, 1.0);
        assert_relative_eq!(out.alpha, 0.06, max_relative = 1e-15);
        // s = 1, 0.5, ..., 0.5^49 fail; 0.5^50 < 1e-15 triggers the reset.
        assert_eq!(calls, 51);
    }

    #[test]
    fn armijo_treats_instability_as_failure() {
        // m = -3 moves the scalar gain to K = 3 (unstable) at s = 1.
        let p = synthetic::scalar_plant();
        let cfg = SynthesisConfig::default();
        let out = modified_armijo(&p, &gain(0.0), 1.0, &array![[-3.0]], 0.3, &cfg);
        // Moving towards larger K only increases f, so the search must
        // eventually give up rather than crash.
        assert!(matches!(out, Err(Error::LineSearchExhausted { .. })));
    }

    #[test]
    fn scalar_synthesis_descends() {
        let p = synthetic::scalar_plant();
        let res = synthesize(&p, &gain(0.0), &SynthesisConfig::default()).unwrap();
        assert_eq!(res.termination, Termination::Converged);
        assert!(res.trace.len() < 101);
        for w in res.trace.windows(2) {
            assert!(w[1].beta < w[0].beta);
        }
        // The optimum of (1 + k²)/(1 - k)² is 0.5 at k = -1.
        assert!(res.beta_star < 0.6, "beta* = {}", res.beta_star);
        let last = &res.trace[res.trace.len() - 1];
        let prev = &res.trace[res.trace.len() - 2];
        assert!((prev.beta - last.beta).abs() <= 1e-5);
    }

    #[test]
    fn no_control_authority_stops_immediately() {
        let plant = Plant::new(
            array![[-1.0, 0.5], [0.0, -2.0]],
            Array2::zeros((2, 1)),
            array![[1.0], [1.0]],
            array![[1.0, 0.0]],
            Array2::zeros((1, 1)),
        )
        .unwrap();
        let k0 = Gain::zeros(&plant);
        let res = synthesize(&plant, &k0, &SynthesisConfig::default()).unwrap();
        assert_eq!(res.termination, Termination::Converged);
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.gamma_star, res.gamma0);
    }

    #[test]
    fn unstable_start_rejected() {
        let p = synthetic::scalar_plant();
        assert!(matches!(
            synthesize(&p, &gain(2.0), &SynthesisConfig::default()),
            Err(Error::UnstableClosedLoop)
        ));
    }

    #[test]
    fn lqr_initial_gains() {
        let p = Plant::new(
            array![[1.0]],
            array![[1.0]],
            array![[1.0]],
            array![[1.0]],
            array![[0.0]],
        )
        .unwrap();
        assert_relative_eq!(
            lqr_initial_gain(&p).unwrap().matrix()[[0, 0]],
            -(1.0 + 2f64.sqrt()),
            max_relative = 1e-12
        );
        let p = Plant::new(
            array![[-1.0]],
            array![[1.0]],
            array![[1.0]],
            array![[1.0]],
            array![[0.0]],
        )
        .unwrap();
        assert_relative_eq!(
            lqr_initial_gain(&p).unwrap().matrix()[[0, 0]],
            1.0 - 2f64.sqrt(),
            max_relative = 1e-12
        );
        let ex = synthetic::example1_plant();
        let k0 = lqr_initial_gain(&ex).unwrap();
        assert!(is_hurwitz_default(&closed_loop(&ex, &k0).unwrap().ac).unwrap());
        assert!(evaluate_f(&ex, &k0, 1e-6).unwrap().is_finite());
    }

    #[test]
    fn config_validation() {
        assert!(SynthesisConfig::default().validate().is_ok());
        let bad = SynthesisConfig {
            zeta: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SynthesisConfig {
            alpha_shrink: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SynthesisConfig {
            eps: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
