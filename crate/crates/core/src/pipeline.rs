//! The restoration loop.
//!
//! Starting from an initial state `u_0` built from the raw depth, every
//! iteration evaluates the Perona-Malik divergence of the current state
//! (optionally smoothed by a continuous-convolution kernel), the reaction
//! term `lambda * (u_0 - u_n)`, and applies one fractional step whose order
//! comes from the configured schedule.

use crate::contconv::{continuous_convolve, DiracKernel};
use crate::diffusion::{diffusion_term, reaction_term, ConductanceSpec};
use crate::error::{Error, Result};
use crate::field::{compute_metrics, DepthField, Metrics, DEFAULT_THRESHOLDS};
use crate::filters;
use crate::fractional::{fractional_step, FractionalState};

/// Constants of the adaptive order rule
/// `alpha = clamp(base * (1 + gain * tanh(update / scale)), min, max)`
/// where `scale = scale_fraction * dynamic range of u_0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveAlpha {
    pub base: f64,
    pub gain: f64,
    pub scale_fraction: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for AdaptiveAlpha {
    fn default() -> Self {
        Self { base: 0.5, gain: 0.5, scale_fraction: 0.01, min: 0.05, max: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AlphaSchedule {
    Constant(f64),
    /// One order per iteration.
    List(Vec<f64>),
    /// Order driven by the size of the previous update.
    Adaptive(AdaptiveAlpha),
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        AlphaSchedule::Constant(0.5)
    }
}

/// Builder for the initial state `u_0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum InitBuilder {
    #[default]
    Identity,
    Median { radius: usize },
    Gaussian { sigma: f64 },
    Bilateral { sigma_s: f64, sigma_r: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NanPolicy {
    /// Abort with [`Error::Diverged`].
    #[default]
    Error,
    /// Return the last finite state and the trace up to that point.
    ClampAndStop,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestorationConfig {
    pub iterations: usize,
    pub alpha: AlphaSchedule,
    pub lambda: f64,
    pub tau: f64,
    pub conductance: ConductanceSpec,
    pub init: InitBuilder,
    /// Applied to the divergence term before the step.
    pub smoothing_kernel: Option<DiracKernel>,
    pub history_window: Option<usize>,
    pub nan_policy: NanPolicy,
}

impl Default for RestorationConfig {
    fn default() -> Self {
        Self {
            iterations: 6,
            alpha: AlphaSchedule::default(),
            lambda: 0.01,
            tau: 0.125,
            conductance: ConductanceSpec::default(),
            init: InitBuilder::Identity,
            smoothing_kernel: None,
            history_window: None,
            nan_policy: NanPolicy::Error,
        }
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("fractional order must lie in (0, 1], got {alpha}")))
    }
}

impl RestorationConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self { alpha: AlphaSchedule::Constant(alpha), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::param("iterations must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::param(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        match &self.alpha {
            AlphaSchedule::Constant(a) => check_order(*a)?,
            AlphaSchedule::List(list) => {
                if list.len() < self.iterations {
                    return Err(Error::param(format!(
                        "alpha list has {} entries but {} iterations are configured",
                        list.len(),
                        self.iterations
                    )));
                }
                list.iter().try_for_each(|a| check_order(*a))?;
            }
            AlphaSchedule::Adaptive(rule) => {
                check_order(rule.base)?;
                check_order(rule.min)?;
                check_order(rule.max)?;
                if rule.min > rule.max || !(rule.scale_fraction > 0.0) || !rule.gain.is_finite() {
                    return Err(Error::param("adaptive alpha needs min <= max, a positive scale and a finite gain"));
                }
            }
        }
        self.conductance.validate()?;
        match self.init {
            InitBuilder::Median { radius: 0 } => return Err(Error::param("median radius must be at least 1")),
            InitBuilder::Gaussian { sigma } if !(sigma >= 0.0) => {
                return Err(Error::param(format!("gaussian sigma must be non-negative, got {sigma}")))
            }
            InitBuilder::Bilateral { sigma_s, sigma_r } if !(sigma_s > 0.0 && sigma_r > 0.0) => {
                return Err(Error::param("bilateral sigmas must be positive"))
            }
            _ => {}
        }
        if self.history_window == Some(0) {
            return Err(Error::param("history window must be at least 1"));
        }
        Ok(())
    }
}

/// Per-iteration diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub alpha: f64,
    /// `max |u_{n+1} - u_n|`
    pub max_update: f64,
    pub mean: f64,
    /// Metrics against the ground truth, when one was supplied.
    pub metrics: Option<Metrics>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RestorationTrace {
    pub records: Vec<IterationRecord>,
    /// Iteration at which non-finite values stopped the run under
    /// [`NanPolicy::ClampAndStop`].
    pub halted_at: Option<usize>,
}

impl RestorationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_max_update(&self) -> Option<f64> {
        self.records.last().map(|r| r.max_update)
    }
}

pub fn build_initial_state(raw: &DepthField, builder: &InitBuilder) -> Result<DepthField> {
    match *builder {
        InitBuilder::Identity => Ok(raw.clone()),
        InitBuilder::Median { radius } => filters::median(raw, radius),
        InitBuilder::Gaussian { sigma } => filters::gaussian(raw, sigma),
        InitBuilder::Bilateral { sigma_s, sigma_r } => filters::bilateral(raw, sigma_s, sigma_r),
    }
}

/// Fractional order for iteration `iter`. `prev_update_norm` is the largest
/// absolute update of the previous iteration (0 before the first) and
/// `dynamic_range` that of `u_0`; both only matter for the adaptive rule.
pub fn alpha_for_iteration(config: &RestorationConfig, iter: usize, prev_update_norm: f64, dynamic_range: f64) -> Result<f64> {
    match &config.alpha {
        AlphaSchedule::Constant(a) => Ok(*a),
        AlphaSchedule::List(list) => list.get(iter).copied().ok_or_else(|| {
            Error::param(format!("alpha list has {} entries, iteration {iter} requested", list.len()))
        }),
        AlphaSchedule::Adaptive(rule) => {
            let scale = rule.scale_fraction * dynamic_range;
            let drive = if prev_update_norm == 0.0 {
                0.0
            } else if scale > 0.0 {
                (prev_update_norm / scale).tanh()
            } else {
                1.0
            };
            Ok((rule.base * (1.0 + rule.gain * drive)).clamp(rule.min, rule.max))
        }
    }
}

/// Runs the full restoration of `raw`. When `gt` is given every trace record
/// carries metrics against it at the default thresholds.
pub fn run_restoration(
    raw: &DepthField,
    config: &RestorationConfig,
    gt: Option<&DepthField>,
) -> Result<(DepthField, RestorationTrace)> {
    config.validate()?;
    if let Some(gt) = gt {
        raw.same_shape(gt)?;
    }
    let u0 = build_initial_state(raw, &config.init)?;
    let range = u0.dynamic_range();
    let first_alpha = alpha_for_iteration(config, 0, 0.0, range)?;
    let mut state = FractionalState::new(first_alpha, config.tau)?.with_window(config.history_window)?;
    let mut trace = RestorationTrace::default();
    let mut u = u0.clone();
    let mut prev_update = 0.0;

    for iter in 0..config.iterations {
        let alpha = alpha_for_iteration(config, iter, prev_update, range)?;
        state.set_alpha(alpha)?;
        let next = match advance(&u, &u0, config, &state) {
            Ok(next) => next,
            Err(Error::NonFinite { .. }) => match config.nan_policy {
                NanPolicy::Error => return Err(Error::Diverged { iteration: iter }),
                NanPolicy::ClampAndStop => {
                    trace.halted_at = Some(iter);
                    return Ok((u, trace));
                }
            },
            Err(e) => return Err(e),
        };
        let diff = next.zip_with(&u, |a, b| a - b)?;
        prev_update = diff.data().iter().fold(0.0, |m, d| d.abs().max(m));
        state.push_difference(diff)?;
        let metrics = gt.map(|gt| compute_metrics(&next, gt, &DEFAULT_THRESHOLDS)).transpose()?;
        trace.records.push(IterationRecord { alpha, max_update: prev_update, mean: next.mean(), metrics });
        u = next;
    }
    Ok((u, trace))
}

fn advance(u: &DepthField, u0: &DepthField, config: &RestorationConfig, state: &FractionalState) -> Result<DepthField> {
    let mut div = diffusion_term(u, &config.conductance)?;
    if let Some(kernel) = &config.smoothing_kernel {
        div = continuous_convolve(&div, kernel)?;
    }
    let react = reaction_term(u0, u, config.lambda)?;
    fractional_step(u, &div, &react, state)
}
