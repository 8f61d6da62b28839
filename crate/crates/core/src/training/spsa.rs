//! Simultaneous perturbation stochastic approximation.
//!
//! Each step draws a Rademacher direction `Δ`, evaluates the objective at
//! `p ± c_k Δ`, and moves along the two-point gradient estimate:
//!
//! ```text
//! c_k = c / (k + 1)^γ        a_k = a / (k + 1 + A)^α
//! g   = (f(p + c_k Δ) - f(p - c_k Δ)) / (2 c_k) · Δ⁻¹
//! p  <- p - a_k · scale ⊙ g
//! ```
//!
//! The perturbation direction and the seeds handed to the objective are
//! derived from `(seed, k)`, so a run resumed from step `k` replays exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ParamGroup, ParameterSet};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub alpha: f64,
    pub gamma_exp: f64,
    pub max_iters: usize,
    /// Root of the per-step seeds. Set by the caller, not read from config files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            c: 0.1,
            big_a: 10.0,
            alpha: 0.602,
            gamma_exp: 0.101,
            max_iters: 100,
            seed: 0,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !(self.a > 0.0 && self.c > 0.0 && self.big_a >= 0.0) {
            return Err(Error::Config(format!(
                "SPSA gains must be positive (a={}, c={}, A={})",
                self.a, self.c, self.big_a
            )));
        }
        if !unit(self.alpha) || !unit(self.gamma_exp) {
            return Err(Error::Config(format!(
                "SPSA exponents must lie in (0, 1] (alpha={}, gamma_exp={})",
                self.alpha, self.gamma_exp
            )));
        }
        Ok(())
    }

    pub fn step_size(&self, k: usize) -> f64 {
        self.a / (k as f64 + 1.0 + self.big_a).powf(self.alpha)
    }

    pub fn perturbation(&self, k: usize) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma_exp)
    }

    fn step_seed(&self, k: usize) -> u64 {
        seed::derive_index(seed::derive(self.seed, "spsa-step"), k as u64)
    }
}

/// Per-group learning-rate multipliers. A zero multiplier freezes the group:
/// it is neither perturbed nor updated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrScale {
    pub gamma: f64,
    pub theta: f64,
    pub phi: f64,
}

impl LrScale {
    pub const ONES: LrScale = LrScale {
        gamma: 1.0,
        theta: 1.0,
        phi: 1.0,
    };

    pub fn get(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Gamma => self.gamma,
            ParamGroup::Theta => self.theta,
            ParamGroup::Phi => self.phi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub params: ParameterSet,
    pub iter: usize,
    pub loss_history: Vec<f64>,
    pub lr_scale: LrScale,
}

impl TrainState {
    pub fn new(params: ParameterSet, lr_scale: LrScale) -> Result<Self> {
        params.validate()?;
        if ParamGroup::ALL.iter().any(|&g| !(lr_scale.get(g) >= 0.0)) {
            return Err(Error::Config(format!("learning-rate scales must be >= 0: {lr_scale:?}")));
        }
        Ok(Self {
            params,
            iter: 0,
            loss_history: Vec::new(),
            lr_scale,
        })
    }

    fn active_groups(&self) -> Vec<ParamGroup> {
        ParamGroup::ALL
            .into_iter()
            .filter(|&g| self.lr_scale.get(g) > 0.0 && !self.params.group(g).is_empty())
            .collect()
    }

    fn flatten(&self, groups: &[ParamGroup]) -> (Vec<f64>, Vec<f64>) {
        let mut values = Vec::new();
        let mut scales = Vec::new();
        for &g in groups {
            values.extend_from_slice(self.params.group(g));
            scales.extend(std::iter::repeat_n(self.lr_scale.get(g), g.len()));
        }
        (values, scales)
    }

    fn with_flat(&self, groups: &[ParamGroup], flat: &[f64]) -> ParameterSet {
        let mut params = self.params.clone();
        let mut offset = 0;
        for &g in groups {
            params.group_mut(g).copy_from_slice(&flat[offset..offset + g.len()]);
            offset += g.len();
        }
        params
    }
}

/// `m` independent ±1 draws.
pub fn rademacher<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Two-point SPSA gradient estimate of `f` at `x` along `delta`.
/// Returns the estimate together with `f(x + cΔ)` and `f(x - cΔ)`.
pub fn gradient_estimate<F>(x: &[f64], delta: &[f64], ck: f64, mut f: F) -> Result<(Vec<f64>, f64, f64)>
where
    F: FnMut(&[f64], bool) -> Result<f64>,
{
    let shifted = |sign: f64| -> Vec<f64> {
        x.iter().zip(delta).map(|(xi, di)| xi + sign * ck * di).collect()
    };
    let plus = f(&shifted(1.0), true)?;
    let minus = f(&shifted(-1.0), false)?;
    if !plus.is_finite() || !minus.is_finite() {
        return Err(Error::Numeric(format!(
            "objective returned non-finite values ({plus}, {minus})"
        )));
    }
    let diff = (plus - minus) / (2.0 * ck);
    Ok((delta.iter().map(|d| diff / d).collect(), plus, minus))
}

/// One SPSA update of `state`. The objective receives the perturbed
/// parameters and a seed for any sampling it performs; the recorded loss is
/// the mean of the two evaluations.
pub fn spsa_step<F>(state: &mut TrainState, mut objective: F, config: &SpsaConfig) -> Result<()>
where
    F: FnMut(&ParameterSet, u64) -> Result<f64>,
{
    let groups = state.active_groups();
    let (mut x, scales) = state.flatten(&groups);
    let loss = step_flat(&mut x, &scales, state.iter, config, |p, s| {
        objective(&state.with_flat(&groups, p), s)
    })?;
    state.params = state.with_flat(&groups, &x);
    state.iter += 1;
    state.loss_history.push(loss);
    Ok(())
}

/// SPSA step `k` on a plain vector with unit learning-rate scales.
/// Returns the mean of the two objective evaluations.
pub fn spsa_step_flat<F>(x: &mut [f64], k: usize, config: &SpsaConfig, objective: F) -> Result<f64>
where
    F: FnMut(&[f64], u64) -> Result<f64>,
{
    let scales = vec![1.0; x.len()];
    step_flat(x, &scales, k, config, objective)
}

fn step_flat<F>(x: &mut [f64], scales: &[f64], k: usize, config: &SpsaConfig, mut objective: F) -> Result<f64>
where
    F: FnMut(&[f64], u64) -> Result<f64>,
{
    let step_seed = config.step_seed(k);
    let delta = rademacher(&mut seed::rng(seed::derive(step_seed, "delta")), x.len());
    let ck = config.perturbation(k);
    let (grad, plus, minus) = gradient_estimate(x, &delta, ck, |p, is_plus| {
        objective(p, seed::derive(step_seed, if is_plus { "plus" } else { "minus" }))
    })
    .map_err(|e| match e {
        Error::Numeric(msg) => Error::Numeric(format!("SPSA step {k}: {msg}")),
        other => other,
    })?;
    let ak = config.step_size(k);
    for ((xi, gi), si) in x.iter_mut().zip(&grad).zip(scales) {
        *xi -= ak * si * gi;
    }
    Ok(0.5 * (plus + minus))
}

/// True once the mean absolute change of the last `window` recorded losses
/// falls below `tolerance`.
pub fn has_converged(history: &[f64], window: usize, tolerance: f64) -> bool {
    if window == 0 || history.len() <= window {
        return false;
    }
    let tail = &history[history.len() - window - 1..];
    let mean = tail.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / window as f64;
    mean < tolerance
}
