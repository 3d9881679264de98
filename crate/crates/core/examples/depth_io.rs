//! Writes a scene as PFM and 16-bit PGM, reads both back and reports the
//! round-trip error.

use fracrd::io::{pgm16_step, read_depth, write_depth, DepthFormat};
use fracrd::synth::{generate_scene, SceneKind, SceneSpec};

fn main() -> fracrd::Result<()> {
    let scene = generate_scene(&SceneSpec { kind: SceneKind::Spheres, ..SceneSpec::default() })?;
    let dir = std::env::temp_dir();
    for (name, format) in [("fracrd_demo.pfm", DepthFormat::Pfm), ("fracrd_demo.pgm", DepthFormat::Pgm16)] {
        let path = dir.join(name);
        write_depth(&path, &scene, format)?;
        let (back, sniffed) = read_depth(&path)?;
        println!("{} ({sniffed:?}): max error {:.6} mm", path.display(), back.max_abs_diff(&scene)?);
    }
    println!("one PGM16 step over this range: {:.6} mm", pgm16_step(scene.min(), scene.max()));
    Ok(())
}
