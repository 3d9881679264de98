//! Fixed fractional orders against the adaptive schedule on a noisy step.

use fracrd::field::DEFAULT_THRESHOLDS;
use fracrd::pipeline::{AdaptiveAlpha, AlphaSchedule, RestorationConfig};
use fracrd::synth::{benchmark_csv, run_benchmark, DegradationSpec, SceneKind, SceneSpec};

fn main() -> fracrd::Result<()> {
    let scene = SceneSpec { kind: SceneKind::Step, ..SceneSpec::default() };
    let mut configs: Vec<RestorationConfig> = (1..=10).map(|i| RestorationConfig::with_alpha(i as f64 / 10.0)).collect();
    configs.push(RestorationConfig { alpha: AlphaSchedule::Adaptive(AdaptiveAlpha::default()), ..Default::default() });
    let rows = run_benchmark(&[scene], &[DegradationSpec::default()], &configs, &DEFAULT_THRESHOLDS)?;
    print!("{}", benchmark_csv(&rows, &DEFAULT_THRESHOLDS));
    Ok(())
}
