//! Box and tent filtering through sparse impulses on a repeated integral,
//! compared with the direct sum at one pixel.

use fracrd::contconv::{continuous_convolve, repeated_integral, DiracKernel};
use fracrd::DepthField;

fn main() -> fracrd::Result<()> {
    let u = DepthField::from_fn(32, 32, |x, y| ((x * 7 + y * 13) % 11) as f64)?;

    let boxk = DiracKernel::mean_filter(2)?;
    println!("mean filter r=2, order {}: {:?}", boxk.order(), boxk.impulses());
    let tent = DiracKernel::tent(1)?;
    println!("tent r=1, order {}: {} impulses", tent.order(), tent.impulses().len());

    let fast = continuous_convolve(&u, &boxk)?;
    let (x, y) = (16, 16);
    let mut direct = 0.0;
    for dy in -2..=2isize {
        for dx in -2..=2isize {
            direct += u.get((x as isize + dx) as usize, (y as isize + dy) as usize) / 25.0;
        }
    }
    println!("box at ({x},{y}): impulses {:.12}  direct {:.12}", fast.get(x, y), direct);

    let sat = repeated_integral(&u, 1)?;
    println!("summed-area table corner = grid sum: {} = {}", sat.get(31, 31), u.sum());
    Ok(())
}
