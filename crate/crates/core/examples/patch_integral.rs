//! Linear decomposition of a patch integral around its anchor pixel.

use fracrd::contconv::{approx_patch_integral, patch_coefficients};
use fracrd::DepthField;

fn main() -> fracrd::Result<()> {
    let u = DepthField::from_fn(10, 10, |x, y| 900.0 + (x * x + 3 * y) as f64)?;
    let (x0, y0, m, n, dz) = (2, 3, 4, 2, 0.5);
    let c = patch_coefficients(&u, x0, y0, m, n, dz)?;
    let riemann: f64 = (y0..=y0 + n).flat_map(|y| (x0..=x0 + m).map(move |x| (x, y))).map(|(x, y)| u.get(x, y) * dz).sum();
    println!("A = {}  B = {}", c.a, c.b);
    println!("A*u(x0,y0) + B = {}", approx_patch_integral(&c, u.get(x0, y0)));
    println!("Riemann sum    = {riemann}");
    Ok(())
}
