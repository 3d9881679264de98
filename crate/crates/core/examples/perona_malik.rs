//! One explicit Perona-Malik step on a noisy edge with each conductance.

use fracrd::diffusion::{diffusion_term, Conductance, ConductanceSpec};
use fracrd::DepthField;

fn main() -> fracrd::Result<()> {
    // a 100 mm edge with a small ripple on each side
    let u = DepthField::from_fn(8, 8, |x, y| {
        let base = if x < 4 { 1000.0 } else { 1100.0 };
        base + if (x + y) % 2 == 0 { 2.0 } else { -2.0 }
    })?;
    for variant in [Conductance::Rational, Conductance::Exponential, Conductance::Constant] {
        let spec = ConductanceSpec::new(variant, 30.0);
        let div = diffusion_term(&u, &spec)?;
        let stepped = u.zip_with(&div, |a, d| a + 0.25 * d)?;
        println!(
            "{variant:?}: ripple pixel {:.3} -> {:.3}, edge pixel {:.3} -> {:.3}",
            u.get(1, 3),
            stepped.get(1, 3),
            u.get(3, 3),
            stepped.get(3, 3)
        );
    }
    let auto = ConductanceSpec::auto(Conductance::Rational);
    println!("auto kappa for this field: {:.3} mm", auto.resolve_kappa(&u));
    Ok(())
}
