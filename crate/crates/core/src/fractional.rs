//! Caputo-derivative machinery for the fractional time evolution.
//!
//! The L1 discretisation of the Caputo derivative of order `alpha` with unit
//! time step yields weights `a_k = (k+1)^(1-alpha) - k^(1-alpha)` and the
//! explicit update
//!
//! ```text
//! u_{n+1} = u_n + tau * S * (div + react) - sum_{k=1..n} a_k (u_{n+1-k} - u_{n-k})
//! ```
//!
//! with `S = Gamma(2 - alpha) / a_0^alpha`. `tau = 1` is the unscaled update;
//! smaller values keep the explicit four-neighbour stencil inside its
//! stability bound.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::DepthField;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// The Gamma function for `x > 0`.
///
/// Small positive integers are returned exactly as factorials; everything
/// else goes through the Lanczos approximation (g = 7, 9 terms) with the
/// reflection formula below 1/2.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::param(format!("gamma is only defined here for finite x > 0, got {x}")));
    }
    if x.fract() == 0.0 && x <= 20.0 {
        return Ok((1..x as u64).map(|k| k as f64).product());
    }
    Ok(lanczos(x))
}

fn lanczos(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * lanczos(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("fractional order must lie in (0, 1], got {alpha}")))
    }
}

/// L1 weights `a_0 ..= a_n` for order `alpha`.
pub fn caputo_weights(alpha: f64, n: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let p = 1.0 - alpha;
    // a_0 is pinned to 1: for alpha = 1 the formula would evaluate 0^0.
    Ok((0..=n)
        .map(|k| if k == 0 { 1.0 } else { ((k + 1) as f64).powf(p) - (k as f64).powf(p) })
        .collect())
}

/// Order, weights, step scaling and the stored state differences of a
/// fractional evolution.
///
/// `history()[k]` holds `u_{k+1} - u_k`, oldest first. With a window `W`
/// only the `W` most recent differences are kept, which drops every memory
/// term with `k > W`.
#[derive(Clone, Debug)]
pub struct FractionalState {
    alpha: f64,
    weights: Vec<f64>,
    s_factor: f64,
    history: VecDeque<DepthField>,
    tau: f64,
    window: Option<usize>,
}

impl FractionalState {
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::param(format!("step scale tau must lie in (0, 1], got {tau}")));
        }
        let weights = caputo_weights(alpha, 0)?;
        let s_factor = s_factor(alpha, weights[0])?;
        Ok(Self { alpha, weights, s_factor, history: VecDeque::new(), tau, window: None })
    }

    /// Assembles a state from explicit parts. The weights are taken as given,
    /// so a short weight array surfaces later in [`memory_correction`].
    pub fn from_parts(alpha: f64, weights: Vec<f64>, tau: f64, history: Vec<DepthField>) -> Result<Self> {
        let mut state = Self::new(alpha, tau)?;
        if let Some(first) = history.first() {
            for d in &history[1..] {
                first.same_shape(d)?;
            }
        }
        let a0 = *weights.first().ok_or_else(|| Error::param("weight array is empty"))?;
        state.s_factor = s_factor(alpha, a0)?;
        state.weights = weights;
        state.history = history.into();
        Ok(state)
    }

    pub fn with_window(mut self, window: Option<usize>) -> Result<Self> {
        if window == Some(0) {
            return Err(Error::param("history window must be at least 1"));
        }
        self.window = window;
        self.truncate();
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn s_factor(&self) -> f64 {
        self.s_factor
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = &DepthField> {
        self.history.iter()
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Switches the order used by subsequent steps. The stored history is kept.
    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        self.weights = caputo_weights(alpha, self.history.len())?;
        self.alpha = alpha;
        self.s_factor = s_factor(alpha, self.weights[0])?;
        Ok(())
    }

    /// Records `u_{n+1} - u_n` after a step.
    pub fn push_difference(&mut self, diff: DepthField) -> Result<()> {
        if let Some(last) = self.history.back() {
            last.same_shape(&diff)?;
        }
        self.history.push_back(diff);
        self.truncate();
        self.weights = caputo_weights(self.alpha, self.history.len())?;
        Ok(())
    }

    fn truncate(&mut self) {
        if let Some(w) = self.window {
            while self.history.len() > w {
                self.history.pop_front();
            }
        }
    }
}

fn s_factor(alpha: f64, a0: f64) -> Result<f64> {
    Ok(gamma(2.0 - alpha)? / a0.powf(alpha))
}

/// `sum_{k=1..n} a_k * history[n-k]` with `n` the history length; the zero
/// field (shaped like `template`) when the history is empty.
pub fn memory_correction(state: &FractionalState, template: &DepthField) -> Result<DepthField> {
    let n = state.history.len();
    if state.weights.len() < n + 1 {
        return Err(Error::WeightsTooShort { weights: state.weights.len(), history: n });
    }
    let mut acc = vec![0.0; template.len()];
    for (k, diff) in (1..=n).zip(state.history.iter().rev()) {
        template.same_shape(diff)?;
        let a = state.weights[k];
        for (out, d) in acc.iter_mut().zip(diff.data()) {
            *out += a * d;
        }
    }
    template.derived(acc)
}

/// One explicit fractional update:
/// `u_n + tau * S * (div_term + react_term) - memory_correction(state)`.
///
/// The caller records `u_{n+1} - u_n` in the state afterwards. A non-finite
/// result is an error.
pub fn fractional_step(
    u_n: &DepthField,
    div_term: &DepthField,
    react_term: &DepthField,
    state: &FractionalState,
) -> Result<DepthField> {
    u_n.same_shape(div_term)?;
    u_n.same_shape(react_term)?;
    let memory = memory_correction(state, u_n)?;
    let scale = state.tau * state.s_factor;
    let next = u_n
        .data()
        .iter()
        .zip(div_term.data())
        .zip(react_term.data())
        .zip(memory.data())
        .map(|(((&u, &d), &r), &m)| u + scale * (d + r) - m)
        .collect();
    u_n.derived(next)
}
