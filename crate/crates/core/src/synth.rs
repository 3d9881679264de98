//! Synthetic depth scenes, a simple under-display ToF degradation proxy and
//! the benchmark harness.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`) seeded with the spec's
//! 64-bit seed, and Gaussian variates use the Box-Muller transform on two
//! uniforms from that stream, so outputs are reproducible across platforms.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{compute_metrics, DepthField, Metrics};
use crate::filters;
use crate::io::{format_g6, threshold_label};
use crate::pipeline::{run_restoration, AlphaSchedule, InitBuilder, RestorationConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    /// Constant depth at the middle of the range.
    #[default]
    Plane,
    /// Two depth levels split by a vertical edge.
    Step,
    /// Linear ramp spanning the range.
    Slope,
    /// Spherical caps in front of a back wall.
    Spheres,
    /// Gently sloped treads along one axis.
    Stairs,
}

impl SceneKind {
    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Plane => "plane",
            SceneKind::Step => "step",
            SceneKind::Slope => "slope",
            SceneKind::Spheres => "spheres",
            SceneKind::Stairs => "stairs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub width: usize,
    pub height: usize,
    pub depth_min: f64,
    pub depth_max: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self { kind: SceneKind::Plane, width: 64, height: 64, depth_min: 500.0, depth_max: 1500.0, seed: 42 }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::InvalidDimensions { width: self.width, height: self.height });
        }
        if !(self.depth_min > 0.0 && self.depth_max.is_finite()) {
            return Err(Error::param(format!("depth_min must be positive, got {}", self.depth_min)));
        }
        // a plane only needs one depth, every other scene needs a real range
        let ordered = if self.kind == SceneKind::Plane {
            self.depth_max >= self.depth_min
        } else {
            self.depth_max > self.depth_min
        };
        if !ordered {
            return Err(Error::param(format!(
                "depth_max ({}) must exceed depth_min ({}) for a {} scene",
                self.depth_max,
                self.depth_min,
                self.kind.name()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegradationSpec {
    /// Noise sigma at full signal, mm.
    pub noise_sigma: f64,
    /// Signal transmission in `(0, 1]`; noise scales with `1/sqrt(attenuation)`.
    pub attenuation: f64,
    /// Blur sigma in pixels standing in for multi-path mixing.
    pub blur_sigma: f64,
    /// Constant depth offset, mm.
    pub bias: f64,
    pub seed: u64,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        Self { noise_sigma: 10.0, attenuation: 1.0, blur_sigma: 0.0, bias: 0.0, seed: 42 }
    }
}

impl DegradationSpec {
    pub fn identity() -> Self {
        Self { noise_sigma: 0.0, attenuation: 1.0, blur_sigma: 0.0, bias: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.attenuation > 0.0 && self.attenuation <= 1.0) {
            return Err(Error::param(format!("attenuation must lie in (0, 1], got {}", self.attenuation)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::param(format!("noise_sigma must be non-negative, got {}", self.noise_sigma)));
        }
        if !(self.blur_sigma >= 0.0 && self.blur_sigma.is_finite()) {
            return Err(Error::param(format!("blur_sigma must be non-negative, got {}", self.blur_sigma)));
        }
        if !self.bias.is_finite() {
            return Err(Error::param("bias must be finite"));
        }
        Ok(())
    }

    pub fn effective_sigma(&self) -> f64 {
        self.noise_sigma / self.attenuation.sqrt()
    }
}

/// Standard normal variates by the Box-Muller transform.
struct BoxMuller {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl BoxMuller {
    fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        self.spare = Some(r * (TAU * u2).sin());
        r * (TAU * u2).cos()
    }
}

pub fn generate_scene(spec: &SceneSpec) -> Result<DepthField> {
    spec.validate()?;
    let SceneSpec { width: w, height: h, depth_min: lo, depth_max: hi, .. } = *spec;
    let range = hi - lo;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let field = match spec.kind {
        SceneKind::Plane => {
            let d = 0.5 * (lo + hi);
            DepthField::constant(w, h, d)?
        }
        SceneKind::Step => {
            let first = (w / 4).max(1);
            let last = (3 * w / 4).clamp(first, w - 1);
            let split = rng.gen_range(first..=last);
            DepthField::from_fn(w, h, |x, _| if x < split { lo } else { hi })?
        }
        SceneKind::Slope => {
            let a: f64 = rng.gen_range(0.2..1.0);
            let b: f64 = rng.gen_range(0.2..1.0);
            let span = a * (w - 1) as f64 + b * (h - 1) as f64;
            DepthField::from_fn(w, h, |x, y| lo + range * (a * x as f64 + b * y as f64) / span)?
        }
        SceneKind::Spheres => {
            let count = rng.gen_range(3..=5);
            let side = w.min(h) as f64;
            let caps: Vec<(f64, f64, f64, f64, f64)> = (0..count)
                .map(|_| {
                    let cx = rng.gen_range(0.0..w as f64);
                    let cy = rng.gen_range(0.0..h as f64);
                    let r = rng.gen_range(0.1..0.3) * side;
                    let base = rng.gen_range(lo + 0.3 * range..=hi - 0.1 * range);
                    let bulge = (0.3 * range).min(base - lo);
                    (cx, cy, r.max(1.0), base, bulge)
                })
                .collect();
            DepthField::from_fn(w, h, |x, y| {
                let mut d = hi;
                for &(cx, cy, r, base, bulge) in &caps {
                    let rho2 = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (r * r);
                    if rho2 < 1.0 {
                        d = d.min(base - bulge * (1.0 - rho2).sqrt());
                    }
                }
                d.clamp(lo, hi)
            })?
        }
        SceneKind::Stairs => {
            let steps = rng.gen_range(4..=8usize);
            let along_x = rng.gen_bool(0.5);
            let extent = if along_x { w } else { h } as f64;
            DepthField::from_fn(w, h, |x, y| {
                let t = if along_x { x } else { y } as f64 / extent * steps as f64;
                let idx = t.floor().min((steps - 1) as f64);
                let frac = t - idx;
                (lo + range * (idx + 0.5 * frac) / (steps as f64 - 0.5)).clamp(lo, hi)
            })?
        }
    };
    Ok(field)
}

/// Gaussian blur by `blur_sigma`, then `+ bias`, then i.i.d. Gaussian noise of
/// standard deviation `noise_sigma / sqrt(attenuation)` in row-major order.
pub fn degrade(gt: &DepthField, spec: &DegradationSpec) -> Result<DepthField> {
    spec.validate()?;
    let blurred = filters::gaussian(gt, spec.blur_sigma)?;
    let sigma = spec.effective_sigma();
    if sigma == 0.0 {
        return blurred.map(|v| v + spec.bias);
    }
    let mut normal = BoxMuller::new(spec.seed);
    let data = blurred.data().iter().map(|&v| v + spec.bias + sigma * normal.next()).collect();
    DepthField::new(gt.width(), gt.height(), data)
}

/// One cell of a benchmark: a scene, a degradation and a configuration.
#[derive(Clone, Debug)]
pub struct BenchmarkRow {
    pub scene: SceneSpec,
    pub degradation: DegradationSpec,
    pub config: RestorationConfig,
    /// Metrics of the degraded input against ground truth.
    pub raw: Metrics,
    /// Metrics of the restored output against ground truth.
    pub restored: Metrics,
}

/// Evaluates every combination of scene, degradation and configuration.
/// Rows come out in scene-major order.
pub fn run_benchmark(
    scenes: &[SceneSpec],
    degradations: &[DegradationSpec],
    configs: &[RestorationConfig],
    thresholds: &[f64],
) -> Result<Vec<BenchmarkRow>> {
    if scenes.is_empty() || degradations.is_empty() || configs.is_empty() {
        return Err(Error::param("benchmark needs at least one scene, degradation and configuration"));
    }
    let cells: Vec<_> = scenes
        .iter()
        .flat_map(|s| degradations.iter().flat_map(move |d| configs.iter().map(move |c| (s, d, c))))
        .collect();
    cells
        .into_par_iter()
        .map(|(scene, degradation, config)| {
            let gt = generate_scene(scene)?;
            let raw = degrade(&gt, degradation)?;
            let (restored, _) = run_restoration(&raw, config, None)?;
            Ok(BenchmarkRow {
                scene: *scene,
                degradation: *degradation,
                config: config.clone(),
                raw: compute_metrics(&raw, &gt, thresholds)?,
                restored: compute_metrics(&restored, &gt, thresholds)?,
            })
        })
        .collect()
}

/// Label of an order schedule: the constant itself, `list` or `adaptive`.
pub fn alpha_label(schedule: &AlphaSchedule) -> String {
    match schedule {
        AlphaSchedule::Constant(a) => format_g6(*a),
        AlphaSchedule::List(_) => "list".into(),
        AlphaSchedule::Adaptive(_) => "adaptive".into(),
    }
}

fn init_label(init: &InitBuilder) -> String {
    match *init {
        InitBuilder::Identity => "identity".into(),
        InitBuilder::Median { radius } => format!("median:{radius}"),
        InitBuilder::Gaussian { sigma } => format!("gaussian:{}", format_g6(sigma)),
        InitBuilder::Bilateral { sigma_s, sigma_r } => {
            format!("bilateral:{}:{}", format_g6(sigma_s), format_g6(sigma_r))
        }
    }
}

/// Flat CSV of a benchmark with every spec parameter as a column.
pub fn benchmark_csv(rows: &[BenchmarkRow], thresholds: &[f64]) -> String {
    let mut header: Vec<String> = [
        "scene", "width", "height", "depth_min", "depth_max", "scene_seed", "noise_sigma", "attenuation",
        "blur_sigma", "bias", "degradation_seed", "alpha", "iterations", "lambda", "tau", "conductance", "kappa",
        "init", "raw_mae", "raw_rmse",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(thresholds.iter().map(|t| format!("raw_{}", threshold_label(*t))));
    header.extend(["mae".to_string(), "rmse".to_string()]);
    header.extend(thresholds.iter().map(|t| threshold_label(*t)));

    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let (s, d, c) = (&row.scene, &row.degradation, &row.config);
        let kappa = if c.conductance.auto_kappa { "auto".to_string() } else { format_g6(c.conductance.kappa) };
        let mut cols = vec![
            s.kind.name().to_string(),
            s.width.to_string(),
            s.height.to_string(),
            format_g6(s.depth_min),
            format_g6(s.depth_max),
            s.seed.to_string(),
            format_g6(d.noise_sigma),
            format_g6(d.attenuation),
            format_g6(d.blur_sigma),
            format_g6(d.bias),
            d.seed.to_string(),
            alpha_label(&c.alpha),
            c.iterations.to_string(),
            format_g6(c.lambda),
            format_g6(c.tau),
            format!("{:?}", c.conductance.variant).to_lowercase(),
            kappa,
            init_label(&c.init),
            format_g6(row.raw.mae),
            format_g6(row.raw.rmse),
        ];
        cols.extend(row.raw.rho.iter().map(|(_, p)| format_g6(*p)));
        cols.push(format_g6(row.restored.mae));
        cols.push(format_g6(row.restored.rmse));
        cols.extend(row.restored.rho.iter().map(|(_, p)| format_g6(*p)));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_THRESHOLDS;

    fn spec(kind: SceneKind) -> SceneSpec {
        SceneSpec { kind, width: 40, height: 30, depth_min: 800.0, depth_max: 1600.0, seed: 9 }
    }

    #[test]
    fn plane_and_step() {
        let p = SceneSpec { depth_min: 1000.0, depth_max: 1000.0, ..spec(SceneKind::Plane) };
        assert!(generate_scene(&p).unwrap().data().iter().all(|&v| v == 1000.0));
        let s = generate_scene(&spec(SceneKind::Step)).unwrap();
        let mut levels: Vec<f64> = s.data().to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        assert_eq!(levels, vec![800.0, 1600.0]);
    }

    #[test]
    fn slope_is_linear() {
        let s = generate_scene(&spec(SceneKind::Slope)).unwrap();
        let dx = s.get(1, 0) - s.get(0, 0);
        let dy = s.get(0, 1) - s.get(0, 0);
        for y in 0..30 {
            for x in 0..40 {
                let want = s.get(0, 0) + dx * x as f64 + dy * y as f64;
                assert!((s.get(x, y) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scenes_are_bounded_and_deterministic() {
        for kind in [SceneKind::Plane, SceneKind::Step, SceneKind::Slope, SceneKind::Spheres, SceneKind::Stairs] {
            let sp = spec(kind);
            let a = generate_scene(&sp).unwrap();
            let b = generate_scene(&sp).unwrap();
            assert_eq!(a, b);
            assert!(a.data().iter().all(|&v| (800.0..=1600.0).contains(&v)), "{kind:?}");
        }
        let spheres = generate_scene(&spec(SceneKind::Spheres)).unwrap();
        assert!(spheres.min() < 1600.0);
        let stairs = generate_scene(&spec(SceneKind::Stairs)).unwrap();
        assert!(stairs.dynamic_range() > 400.0);
    }

    #[test]
    fn scene_validation() {
        assert!(generate_scene(&SceneSpec { width: 0, ..spec(SceneKind::Plane) }).is_err());
        assert!(generate_scene(&SceneSpec { depth_min: 0.0, ..spec(SceneKind::Plane) }).is_err());
        assert!(generate_scene(&SceneSpec { depth_max: 800.0, ..spec(SceneKind::Step) }).is_err());
    }

    #[test]
    fn degrade_identity_and_determinism() {
        let gt = generate_scene(&spec(SceneKind::Spheres)).unwrap();
        assert_eq!(degrade(&gt, &DegradationSpec::identity()).unwrap(), gt);
        let d = DegradationSpec { blur_sigma: 1.0, bias: 3.0, ..Default::default() };
        assert_eq!(degrade(&gt, &d).unwrap(), degrade(&gt, &d).unwrap());
        let other = DegradationSpec { seed: 43, ..d };
        assert_ne!(degrade(&gt, &d).unwrap(), degrade(&gt, &other).unwrap());
        assert!(degrade(&gt, &DegradationSpec { attenuation: 0.0, ..d }).is_err());
        assert!(degrade(&gt, &DegradationSpec { noise_sigma: -1.0, ..d }).is_err());
    }

    #[test]
    fn noise_scales_with_attenuation() {
        let gt = DepthField::constant(256, 256, 1000.0).unwrap();
        for (sigma, att) in [(10.0, 0.25), (10.0, 1.0), (4.0, 0.5)] {
            let d = DegradationSpec { noise_sigma: sigma, attenuation: att, ..Default::default() };
            let out = degrade(&gt, &d).unwrap();
            let res: Vec<f64> = out.data().iter().map(|v| v - 1000.0).collect();
            let mean = res.iter().sum::<f64>() / res.len() as f64;
            let var = res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (res.len() - 1) as f64;
            let want = sigma / att.sqrt();
            assert!((var.sqrt() - want).abs() / want < 0.05);
        }
    }

    #[test]
    fn benchmark_cardinality_and_fixed_point() {
        let flat = SceneSpec { kind: SceneKind::Plane, ..spec(SceneKind::Plane) };
        let rows = run_benchmark(&[flat], &[DegradationSpec::identity()], &[RestorationConfig::default()], &DEFAULT_THRESHOLDS)
            .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].restored.mae, 0.0);

        let rows = run_benchmark(
            &[spec(SceneKind::Step), spec(SceneKind::Slope)],
            &[DegradationSpec::default()],
            &[RestorationConfig::default()],
            &DEFAULT_THRESHOLDS,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        let csv = benchmark_csv(&rows, &DEFAULT_THRESHOLDS);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().next().unwrap().ends_with("mae,rmse,rho_1.02,rho_1.05,rho_1.10"));
        assert!(run_benchmark(&[], &[DegradationSpec::default()], &[RestorationConfig::default()], &DEFAULT_THRESHOLDS).is_err());
    }
}
