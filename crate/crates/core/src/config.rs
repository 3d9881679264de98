//! Configuration shared by the command line and TOML config files.
//!
//! A config file has the sections `[restoration]`, `[scene]`,
//! `[degradation]`, `[eval]`, `[sweep]` and `[io]`; keys are the field names
//! of the corresponding command-line flags with `_` in place of `-`. Unknown
//! keys are rejected. Command-line flags override file keys, which override
//! the built-in defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::Deserialize;

use crate::contconv::DiracKernel;
use crate::diffusion::{Conductance, ConductanceSpec, DEFAULT_KAPPA};
use crate::error::{Error, Result};
use crate::field::DEFAULT_THRESHOLDS;
use crate::pipeline::{AdaptiveAlpha, AlphaSchedule, InitBuilder, NanPolicy, RestorationConfig};
use crate::synth::{DegradationSpec, SceneKind, SceneSpec};

/// A value that may be a number, a list of numbers or a word, as written in
/// a config file. On the command line lists are comma separated.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FlexValue {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

impl FromStr for FlexValue {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(FlexValue::Text(s.to_string()))
    }
}

impl FlexValue {
    /// Interprets the value as a list of numbers.
    pub fn numbers(&self, key: &str) -> Result<Vec<f64>> {
        match self {
            FlexValue::Number(v) => Ok(vec![*v]),
            FlexValue::List(v) => Ok(v.clone()),
            FlexValue::Text(s) => s
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("{key}: `{t}` is not a number"))))
                .collect(),
        }
    }

    fn word(&self) -> Option<&str> {
        match self {
            FlexValue::Text(s) => Some(s.trim()),
            _ => None,
        }
    }
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+ $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )+
    };
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RestorationSection {
    /// Number of iterations [default: 6]
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Fractional order in (0, 1], a comma-separated per-iteration list, or `adaptive` [default: 0.5]
    #[arg(long)]
    pub alpha: Option<FlexValue>,
    /// Base order of the adaptive rule [default: 0.5]
    #[arg(long)]
    pub alpha_base: Option<f64>,
    /// Gain of the adaptive rule [default: 0.5]
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_gain: Option<f64>,
    /// Update scale of the adaptive rule as a fraction of the dynamic range [default: 0.01]
    #[arg(long)]
    pub alpha_scale: Option<f64>,
    /// Reaction weight [default: 0.01]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Step scale in (0, 1] [default: 0.125]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Conductance: exp, rational or const [default: rational]
    #[arg(long)]
    pub conductance: Option<String>,
    /// Contrast parameter in mm, or `auto` [default: 30]
    #[arg(long)]
    pub kappa: Option<FlexValue>,
    /// Initial state builder: identity, median, gaussian or bilateral [default: identity]
    #[arg(long)]
    pub init: Option<String>,
    /// Median radius in pixels [default: 1]
    #[arg(long)]
    pub init_radius: Option<usize>,
    /// Gaussian sigma, or bilateral spatial sigma, in pixels [default: 1]
    #[arg(long)]
    pub init_sigma: Option<f64>,
    /// Bilateral range sigma in mm [default: 30]
    #[arg(long)]
    pub init_sigma_r: Option<f64>,
    /// Continuous-convolution smoothing of the diffusion term: none, mean:R or tent:R [default: none]
    #[arg(long)]
    pub smoothing: Option<String>,
    /// Keep only this many past differences in the memory term [default: unlimited]
    #[arg(long)]
    pub history_window: Option<usize>,
    /// What to do on non-finite values: error or clamp [default: error]
    #[arg(long)]
    pub nan_policy: Option<String>,
}

impl RestorationSection {
    pub fn overlay(&mut self, top: &Self) {
        overlay!(
            self, top, iterations, alpha, alpha_base, alpha_gain, alpha_scale, lambda, tau, conductance, kappa, init,
            init_radius, init_sigma, init_sigma_r, smoothing, history_window, nan_policy
        );
    }

    pub fn adaptive_rule(&self) -> AdaptiveAlpha {
        let d = AdaptiveAlpha::default();
        AdaptiveAlpha {
            base: self.alpha_base.unwrap_or(d.base),
            gain: self.alpha_gain.unwrap_or(d.gain),
            scale_fraction: self.alpha_scale.unwrap_or(d.scale_fraction),
            ..d
        }
    }

    pub fn to_config(&self) -> Result<RestorationConfig> {
        let d = RestorationConfig::default();
        let alpha = match &self.alpha {
            None => d.alpha.clone(),
            Some(v) if v.word() == Some("adaptive") => AlphaSchedule::Adaptive(self.adaptive_rule()),
            Some(v) => match v.numbers("alpha")?.as_slice() {
                [a] => AlphaSchedule::Constant(*a),
                list => AlphaSchedule::List(list.to_vec()),
            },
        };
        let variant = match self.conductance.as_deref() {
            None => Conductance::default(),
            Some("exp" | "exponential") => Conductance::Exponential,
            Some("rational") => Conductance::Rational,
            Some("const" | "constant") => Conductance::Constant,
            Some(other) => return Err(Error::Config(format!("unknown conductance `{other}`"))),
        };
        let conductance = match &self.kappa {
            None => ConductanceSpec::new(variant, DEFAULT_KAPPA),
            Some(v) if v.word() == Some("auto") => ConductanceSpec::auto(variant),
            Some(v) => match v.numbers("kappa")?.as_slice() {
                [k] => ConductanceSpec::new(variant, *k),
                _ => return Err(Error::Config("kappa takes a single value or `auto`".into())),
            },
        };
        let sigma = self.init_sigma.unwrap_or(1.0);
        let init = match self.init.as_deref() {
            None | Some("identity") => InitBuilder::Identity,
            Some("median") => InitBuilder::Median { radius: self.init_radius.unwrap_or(1) },
            Some("gaussian") => InitBuilder::Gaussian { sigma },
            Some("bilateral") => InitBuilder::Bilateral { sigma_s: sigma, sigma_r: self.init_sigma_r.unwrap_or(30.0) },
            Some(other) => return Err(Error::Config(format!("unknown init builder `{other}`"))),
        };
        let nan_policy = match self.nan_policy.as_deref() {
            None | Some("error") => NanPolicy::Error,
            Some("clamp" | "clamp_and_stop") => NanPolicy::ClampAndStop,
            Some(other) => return Err(Error::Config(format!("unknown nan policy `{other}`"))),
        };
        let config = RestorationConfig {
            iterations: self.iterations.unwrap_or(d.iterations),
            alpha,
            lambda: self.lambda.unwrap_or(d.lambda),
            tau: self.tau.unwrap_or(d.tau),
            conductance,
            init,
            smoothing_kernel: parse_smoothing(self.smoothing.as_deref())?,
            history_window: self.history_window,
            nan_policy,
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_smoothing(spec: Option<&str>) -> Result<Option<DiracKernel>> {
    let Some(spec) = spec else { return Ok(None) };
    if spec == "none" {
        return Ok(None);
    }
    let (kind, radius) = spec.split_once(':').unwrap_or((spec, "1"));
    let radius: usize = radius.parse().map_err(|_| Error::Config(format!("invalid smoothing radius in `{spec}`")))?;
    match kind {
        "mean" | "box" => DiracKernel::mean_filter(radius).map(Some),
        "tent" => DiracKernel::tent(radius).map(Some),
        _ => Err(Error::Config(format!("unknown smoothing kernel `{spec}`"))),
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSection {
    /// Scene kind: plane, step, slope, spheres or stairs [default: plane]
    #[arg(long = "scene")]
    pub kind: Option<String>,
    /// Scene width in pixels [default: 64]
    #[arg(long)]
    pub width: Option<usize>,
    /// Scene height in pixels [default: 64]
    #[arg(long)]
    pub height: Option<usize>,
    /// Nearest depth in mm, must be positive [default: 500]
    #[arg(long, allow_hyphen_values = true)]
    pub depth_min: Option<f64>,
    /// Farthest depth in mm; a plane sits halfway between the two [default: 1500]
    #[arg(long, allow_hyphen_values = true)]
    pub depth_max: Option<f64>,
    /// Seed of the scene and, unless --noise-seed is given, of the noise [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SceneSection {
    pub fn overlay(&mut self, top: &Self) {
        overlay!(self, top, kind, width, height, depth_min, depth_max, seed);
    }

    pub fn to_spec(&self) -> Result<SceneSpec> {
        let d = SceneSpec::default();
        let kind = match self.kind.as_deref() {
            None => d.kind,
            Some("plane") => SceneKind::Plane,
            Some("step") => SceneKind::Step,
            Some("slope") => SceneKind::Slope,
            Some("spheres") => SceneKind::Spheres,
            Some("stairs") => SceneKind::Stairs,
            Some(other) => return Err(Error::Config(format!("unknown scene kind `{other}`"))),
        };
        let spec = SceneSpec {
            kind,
            width: self.width.unwrap_or(d.width),
            height: self.height.unwrap_or(d.height),
            depth_min: self.depth_min.unwrap_or(d.depth_min),
            depth_max: self.depth_max.unwrap_or(d.depth_max),
            seed: self.seed.unwrap_or(d.seed),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DegradationSection {
    /// Noise sigma at full signal in mm [default: 10]
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Signal attenuation in (0, 1] [default: 1]
    #[arg(long)]
    pub attenuation: Option<f64>,
    /// Blur sigma in pixels [default: 0]
    #[arg(long)]
    pub blur_sigma: Option<f64>,
    /// Depth bias in mm [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub bias: Option<f64>,
    /// Noise seed [default: the scene seed]
    #[arg(id = "noise_seed", long = "noise-seed")]
    pub seed: Option<u64>,
}

impl DegradationSection {
    pub fn overlay(&mut self, top: &Self) {
        overlay!(self, top, noise_sigma, attenuation, blur_sigma, bias, seed);
    }

    pub fn to_spec(&self, scene_seed: u64) -> Result<DegradationSpec> {
        let d = DegradationSpec::default();
        let spec = DegradationSpec {
            noise_sigma: self.noise_sigma.unwrap_or(d.noise_sigma),
            attenuation: self.attenuation.unwrap_or(d.attenuation),
            blur_sigma: self.blur_sigma.unwrap_or(d.blur_sigma),
            bias: self.bias.unwrap_or(d.bias),
            seed: self.seed.unwrap_or(scene_seed),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Ratio thresholds, comma separated [default: 1.02,1.05,1.10]
    #[arg(long)]
    pub thresholds: Option<FlexValue>,
}

impl EvalSection {
    pub fn overlay(&mut self, top: &Self) {
        overlay!(self, top, thresholds);
    }

    pub fn thresholds(&self) -> Result<Vec<f64>> {
        let ths = match &self.thresholds {
            None => DEFAULT_THRESHOLDS.to_vec(),
            Some(v) => v.numbers("thresholds")?,
        };
        if ths.is_empty() || ths.iter().any(|t| !(t.is_finite() && *t >= 1.0)) {
            return Err(Error::Config("thresholds must be finite ratios >= 1".into()));
        }
        Ok(ths)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub alphas: Option<FlexValue>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub raw: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// Everything a config file may contain.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub restoration: RestorationSection,
    pub scene: SceneSection,
    pub degradation: DegradationSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub io: IoSection,
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The file at `path`, or an empty config when there is none.
    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file_parses() {
        let cfg = CliConfig::parse(
            r#"
            [restoration]
            iterations = 4
            alpha = "adaptive"
            alpha_base = 0.4
            lambda = 0.02
            conductance = "exp"
            kappa = "auto"
            init = "median"
            init_radius = 2
            smoothing = "tent:1"
            history_window = 3
            nan_policy = "clamp"

            [scene]
            kind = "step"
            depth_min = 800.0
            depth_max = 1200.0

            [degradation]
            noise_sigma = 5.0
            seed = 7

            [eval]
            thresholds = [1.01, 1.25]

            [sweep]
            alphas = [0.2, 0.4]
            "#,
        )
        .unwrap();
        let r = cfg.restoration.to_config().unwrap();
        assert_eq!(r.iterations, 4);
        assert!(matches!(r.alpha, AlphaSchedule::Adaptive(AdaptiveAlpha { base, .. }) if base == 0.4));
        assert!(r.conductance.auto_kappa);
        assert_eq!(r.conductance.variant, Conductance::Exponential);
        assert_eq!(r.init, InitBuilder::Median { radius: 2 });
        assert_eq!(r.smoothing_kernel.as_ref().unwrap().order(), 2);
        assert_eq!(r.nan_policy, NanPolicy::ClampAndStop);
        assert_eq!(cfg.scene.to_spec().unwrap().kind, SceneKind::Step);
        assert_eq!(cfg.degradation.to_spec(1).unwrap().seed, 7);
        assert_eq!(cfg.eval.thresholds().unwrap(), vec![1.01, 1.25]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(CliConfig::parse("[restoration]\niteration = 3\n").is_err());
        assert!(CliConfig::parse("[nonsense]\nx = 1\n").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut base = CliConfig::parse("[restoration]\niterations = 3\nalpha = 0.7\n").unwrap().restoration;
        let flags = RestorationSection { iterations: Some(9), ..Default::default() };
        base.overlay(&flags);
        let r = base.to_config().unwrap();
        assert_eq!(r.iterations, 9);
        assert_eq!(r.alpha, AlphaSchedule::Constant(0.7));
    }

    #[test]
    fn defaults_and_bad_values() {
        assert_eq!(RestorationSection::default().to_config().unwrap(), RestorationConfig::default());
        let bad = RestorationSection { iterations: Some(0), ..Default::default() };
        assert!(bad.to_config().is_err());
        let bad = RestorationSection { conductance: Some("linear".into()), ..Default::default() };
        assert!(bad.to_config().is_err());
        let list = RestorationSection { alpha: Some(FlexValue::Text("0.3,0.5".into())), iterations: Some(2), ..Default::default() };
        assert_eq!(list.to_config().unwrap().alpha, AlphaSchedule::List(vec![0.3, 0.5]));
        let scene = SceneSection { depth_min: Some(0.0), ..Default::default() };
        assert!(scene.to_spec().is_err());
    }
}
