//! Classical smoothing filters with edge-replicated borders.
//!
//! Weighted filters are evaluated as `centre + sum w_i (u_i - centre) / sum w_i`,
//! which leaves constant regions bit-for-bit unchanged.

use crate::error::{Error, Result};
use crate::field::DepthField;

/// Median over the `(2r+1) x (2r+1)` window.
pub fn median(u: &DepthField, radius: usize) -> Result<DepthField> {
    if radius == 0 {
        return Err(Error::param("median radius must be at least 1"));
    }
    let r = radius as isize;
    let mut window = Vec::with_capacity((2 * radius + 1).pow(2));
    DepthField::from_fn(u.width(), u.height(), |x, y| {
        window.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                window.push(u.get_clamped(x as isize + dx, y as isize + dy));
            }
        }
        let mid = window.len() / 2;
        *window.select_nth_unstable_by(mid, f64::total_cmp).1
    })
}

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-0.5 * d * d / (sigma * sigma)).exp()
        })
        .collect()
}

/// Separable Gaussian blur truncated at three sigma. `sigma == 0` is the
/// identity.
pub fn gaussian(u: &DepthField, sigma: f64) -> Result<DepthField> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("gaussian sigma must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(u.clone());
    }
    let taps = gaussian_taps(sigma);
    let norm: f64 = taps.iter().sum();
    let r = (taps.len() / 2) as isize;
    let pass = |src: &DepthField, horizontal: bool| {
        DepthField::from_fn(src.width(), src.height(), |x, y| {
            let (x, y) = (x as isize, y as isize);
            let c = src.get_clamped(x, y);
            let mut acc = 0.0;
            for (k, w) in taps.iter().enumerate() {
                let o = k as isize - r;
                let v = if horizontal { src.get_clamped(x + o, y) } else { src.get_clamped(x, y + o) };
                acc += w * (v - c);
            }
            c + acc / norm
        })
    };
    pass(&pass(u, true)?, false)
}

/// Bilateral filter with spatial sigma `sigma_s` (pixels) and range sigma
/// `sigma_r` (mm), window radius `ceil(3 * sigma_s)`.
pub fn bilateral(u: &DepthField, sigma_s: f64, sigma_r: f64) -> Result<DepthField> {
    if !(sigma_s > 0.0 && sigma_s.is_finite() && sigma_r > 0.0 && sigma_r.is_finite()) {
        return Err(Error::param(format!(
            "bilateral sigmas must be positive, got spatial {sigma_s} and range {sigma_r}"
        )));
    }
    let r = (3.0 * sigma_s).ceil() as isize;
    let (is2, ir2) = (0.5 / (sigma_s * sigma_s), 0.5 / (sigma_r * sigma_r));
    DepthField::from_fn(u.width(), u.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        let c = u.get_clamped(x, y);
        let (mut acc, mut norm) = (0.0, 0.0);
        for dy in -r..=r {
            for dx in -r..=r {
                let d = u.get_clamped(x + dx, y + dy) - c;
                let w = (-((dx * dx + dy * dy) as f64) * is2 - d * d * ir2).exp();
                acc += w * d;
                norm += w;
            }
        }
        c + acc / norm
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_removes_single_outlier() {
        let u = DepthField::from_fn(7, 6, |x, y| if (x, y) == (3, 2) { 5000.0 } else { 1000.0 }).unwrap();
        let m = median(&u, 1).unwrap();
        assert!(m.data().iter().all(|&v| v == 1000.0));
        assert!(median(&u, 0).is_err());
    }

    #[test]
    fn median_matches_sorted_window() {
        let u = DepthField::from_fn(5, 5, |x, y| ((x * 7 + y * 13) % 11) as f64).unwrap();
        let m = median(&u, 1).unwrap();
        for y in 0..5i64 {
            for x in 0..5i64 {
                let mut w = Vec::new();
                for j in y - 1..=y + 1 {
                    for i in x - 1..=x + 1 {
                        w.push(u.get(i.clamp(0, 4) as usize, j.clamp(0, 4) as usize));
                    }
                }
                w.sort_by(f64::total_cmp);
                assert_eq!(m.get(x as usize, y as usize), w[4]);
            }
        }
    }

    #[test]
    fn gaussian_degenerate_and_constant() {
        let u = DepthField::from_fn(4, 4, |x, y| (x * y) as f64 + 0.1).unwrap();
        assert_eq!(gaussian(&u, 0.0).unwrap(), u);
        assert!(gaussian(&u, -1.0).is_err());
        let c = DepthField::constant(6, 6, 987.654_321).unwrap();
        assert_eq!(gaussian(&c, 1.7).unwrap(), c);
        assert_eq!(bilateral(&c, 1.5, 20.0).unwrap(), c);
    }

    #[test]
    fn gaussian_preserves_linear_ramp_in_interior() {
        let u = DepthField::from_fn(20, 5, |x, _| 3.0 * x as f64).unwrap();
        let g = gaussian(&u, 1.0).unwrap();
        for x in 3..17 {
            assert!((g.get(x, 2) - u.get(x, 2)).abs() < 1e-9);
        }
    }

    #[test]
    fn bilateral_keeps_strong_edges() {
        let u = DepthField::from_fn(10, 4, |x, _| if x < 5 { 1000.0 } else { 2000.0 }).unwrap();
        let b = bilateral(&u, 1.0, 10.0).unwrap();
        assert!(b.max_abs_diff(&u).unwrap() < 1e-6);
        assert!(bilateral(&u, 0.0, 10.0).is_err());
        assert!(bilateral(&u, 1.0, -1.0).is_err());
    }
}
