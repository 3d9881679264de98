//! Perona-Malik divergence term and the reaction term of the evolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{directional_differences, DepthField, NEIGHBOURS};

/// Contrast parameter used when none is configured, in mm.
pub const DEFAULT_KAPPA: f64 = 30.0;

/// Scale that turns a median absolute deviation into a Gaussian sigma.
const MAD_SCALE: f64 = 1.4826;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conductance {
    /// `exp(-(s/kappa)^2)`
    #[serde(alias = "exp")]
    Exponential,
    /// `1 / (1 + (s/kappa)^2)`
    #[default]
    Rational,
    /// `1`, which turns the divergence term into the discrete Laplacian.
    #[serde(alias = "const")]
    Constant,
}

/// Diffusivity function and its contrast parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConductanceSpec {
    pub variant: Conductance,
    /// Contrast parameter in mm.
    pub kappa: f64,
    /// Estimate `kappa` from each field; `kappa` is the fallback for fields
    /// without any nonzero difference.
    pub auto_kappa: bool,
}

impl Default for ConductanceSpec {
    fn default() -> Self {
        Self { variant: Conductance::Rational, kappa: DEFAULT_KAPPA, auto_kappa: false }
    }
}

impl ConductanceSpec {
    pub fn new(variant: Conductance, kappa: f64) -> Self {
        Self { variant, kappa, auto_kappa: false }
    }

    pub fn auto(variant: Conductance) -> Self {
        Self { variant, kappa: DEFAULT_KAPPA, auto_kappa: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::param(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }

    /// The contrast parameter to use for `u`.
    pub fn resolve_kappa(&self, u: &DepthField) -> f64 {
        if self.auto_kappa {
            estimate_kappa(u).unwrap_or(self.kappa)
        } else {
            self.kappa
        }
    }
}

#[inline]
fn eval(variant: Conductance, s: f64, kappa: f64) -> f64 {
    let r = s / kappa;
    let g = match variant {
        Conductance::Exponential => (-r * r).exp(),
        Conductance::Rational => 1.0 / (1.0 + r * r),
        Conductance::Constant => return 1.0,
    };
    // keep the value strictly positive when it underflows
    g.max(f64::MIN_POSITIVE)
}

/// Conductance `g(s)` for a gradient magnitude `s >= 0`. The result lies in
/// `(0, 1]`.
pub fn conductance(s: f64, spec: &ConductanceSpec) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::param(format!("gradient magnitude must be non-negative, got {s}")));
    }
    spec.validate()?;
    Ok(eval(spec.variant, s, spec.kappa))
}

/// Four-neighbour Perona-Malik divergence: `sum_d g(|D_d u|) * D_d u` over the
/// compass directions, with edge replication at the boundary.
///
/// Each pairwise flux is antisymmetric, so the grid sum of the result is zero
/// up to rounding.
pub fn diffusion_term(u: &DepthField, spec: &ConductanceSpec) -> Result<DepthField> {
    spec.validate()?;
    let kappa = spec.resolve_kappa(u);
    let (w, h) = u.shape();
    let mut out = Vec::with_capacity(u.len());
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = u.get_clamped(x, y);
            let mut acc = 0.0;
            for (dx, dy) in NEIGHBOURS {
                let d = u.get_clamped(x + dx, y + dy) - c;
                acc += eval(spec.variant, d.abs(), kappa) * d;
            }
            out.push(acc);
        }
    }
    u.derived(out)
}

/// Reaction term `lambda * (u0 - u_n)`.
pub fn reaction_term(u0: &DepthField, u_n: &DepthField, lambda: f64) -> Result<DepthField> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("lambda must be non-negative, got {lambda}")));
    }
    u0.zip_with(u_n, |a, b| lambda * (a - b))
}

/// Robust contrast estimate: `1.4826 * median` of the absolute nonzero
/// differences between horizontally and vertically adjacent pixels.
pub fn estimate_kappa(u: &DepthField) -> Result<f64> {
    let diffs = directional_differences(u)?;
    // east and south cover every adjacent pair exactly once
    let mut mags: Vec<f64> = diffs
        .east
        .data()
        .iter()
        .chain(diffs.south.data())
        .map(|d| d.abs())
        .filter(|&d| d > 0.0)
        .collect();
    if mags.is_empty() {
        return Err(Error::DegenerateKappa);
    }
    mags.sort_by(f64::total_cmp);
    let mid = mags.len() / 2;
    let median = if mags.len() % 2 == 1 { mags[mid] } else { 0.5 * (mags[mid - 1] + mags[mid]) };
    Ok(MAD_SCALE * median)
}
