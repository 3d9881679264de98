//! Continuous convolution through repeated integration.
//!
//! Convolving `u` with a kernel `K` equals convolving the `n`-fold repeated
//! integral of `u` with the `n`-th derivative of `K`. When that derivative is
//! a sparse set of Dirac impulses, the convolution reduces to a handful of
//! samples of the integral field per pixel. Order 1 is the summed-area-table
//! box filter; order 2 covers piecewise-linear (tent) kernels.
//!
//! Integrals use zero extension outside the domain, so results agree with
//! dense convolution wherever the kernel support lies inside the domain.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::DepthField;

/// Highest supported integration order per axis.
pub const MAX_ORDER: usize = 2;

/// A weighted Dirac impulse at a (possibly fractional) pixel offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Impulse {
    pub dx: f64,
    pub dy: f64,
    pub w: f64,
}

impl Impulse {
    pub fn new(dx: f64, dy: f64, w: f64) -> Self {
        Self { dx, dy, w }
    }
}

/// The `order`-th per-axis derivative of a kernel, as a sparse impulse set.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracKernel {
    impulses: Vec<Impulse>,
    order: usize,
}

impl DiracKernel {
    pub fn new(impulses: Vec<Impulse>, order: usize) -> Result<Self> {
        if impulses.is_empty() {
            return Err(Error::param("a Dirac kernel needs at least one impulse"));
        }
        if order > MAX_ORDER {
            return Err(Error::param(format!("kernel order must be 0, 1 or 2, got {order}")));
        }
        if impulses.iter().any(|i| !(i.dx.is_finite() && i.dy.is_finite() && i.w.is_finite())) {
            return Err(Error::param("impulse offsets and weights must be finite"));
        }
        Ok(Self { impulses, order })
    }

    /// The single centred unit impulse at order 0.
    pub fn identity() -> Self {
        Self { impulses: vec![Impulse::new(0.0, 0.0, 1.0)], order: 0 }
    }

    /// Impulse form of a dense kernel applied as `out(p) = sum_o K(o) u(p + o)`.
    ///
    /// `weights` is a `kw x kh` row-major grid whose element `(cx, cy)` sits at
    /// offset zero. The impulses are the `order`-th backward difference of the
    /// kernel along each axis; cancelled positions are dropped.
    pub fn from_dense(weights: &[f64], kw: usize, kh: usize, cx: usize, cy: usize, order: usize) -> Result<Self> {
        if kw == 0 || kh == 0 || weights.len() != kw * kh || cx >= kw || cy >= kh {
            return Err(Error::param("dense kernel dimensions or centre are inconsistent"));
        }
        if order > MAX_ORDER {
            return Err(Error::param(format!("kernel order must be 0, 1 or 2, got {order}")));
        }
        let diff = binomial_difference(order);
        let mut acc: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for j in 0..kh {
            for i in 0..kw {
                let k = weights[j * kw + i];
                if k == 0.0 {
                    continue;
                }
                let (ox, oy) = (i as i64 - cx as i64, j as i64 - cy as i64);
                for (mx, cxw) in diff.iter().enumerate() {
                    for (my, cyw) in diff.iter().enumerate() {
                        *acc.entry((oy - my as i64, ox - mx as i64)).or_insert(0.0) += k * cxw * cyw;
                    }
                }
            }
        }
        let impulses = acc
            .into_iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|((dy, dx), w)| Impulse::new(dx as f64, dy as f64, w))
            .collect();
        Self::new(impulses, order)
    }

    /// Normalised `(2r+1) x (2r+1)` mean filter at order 1: four impulses.
    pub fn mean_filter(radius: usize) -> Result<Self> {
        let side = 2 * radius + 1;
        let w = 1.0 / (side * side) as f64;
        Self::from_dense(&vec![w; side * side], side, side, radius, radius, 1)
    }

    /// Normalised separable tent of half-width `radius + 1` at order 2.
    pub fn tent(radius: usize) -> Result<Self> {
        let side = 2 * radius + 1;
        let profile: Vec<f64> = (0..side).map(|i| (radius + 1 - i.abs_diff(radius)) as f64).collect();
        let norm: f64 = profile.iter().sum::<f64>().powi(2);
        let dense: Vec<f64> = (0..side * side).map(|k| profile[k / side] * profile[k % side] / norm).collect();
        Self::from_dense(&dense, side, side, radius, radius, 2)
    }

    pub fn impulses(&self) -> &[Impulse] {
        &self.impulses
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// Coefficients of `(1 - z)^order`, the backward difference of that order.
fn binomial_difference(order: usize) -> Vec<f64> {
    match order {
        0 => vec![1.0],
        1 => vec![1.0, -1.0],
        _ => vec![1.0, -2.0, 1.0],
    }
}

/// Applies `order` rounds of cumulative summation along x then y. Order 1 is
/// the inclusive summed-area table.
pub fn repeated_integral(u: &DepthField, order: usize) -> Result<DepthField> {
    if order > MAX_ORDER {
        return Err(Error::param(format!("integration order must be 0, 1 or 2, got {order}")));
    }
    let (w, h) = u.shape();
    let mut data = u.data().to_vec();
    for _ in 0..order {
        for row in data.chunks_mut(w) {
            running_sum(row.iter_mut());
        }
        for x in 0..w {
            running_sum(data.iter_mut().skip(x).step_by(w).take(h));
        }
    }
    u.derived(data)
}

/// In-place compensated (Neumaier) prefix sum.
fn running_sum<'a>(values: impl Iterator<Item = &'a mut f64>) {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + *v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + *v;
        } else {
            comp += (*v - t) + sum;
        }
        sum = t;
        *v = sum + comp;
    }
}

/// Bilinear sample with zero extension outside the grid.
#[inline]
fn sample(field: &DepthField, x: f64, y: f64) -> f64 {
    let (w, h) = (field.width() as i64, field.height() as i64);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let at = |xi: i64, yi: i64| {
        if xi < 0 || yi < 0 || xi >= w || yi >= h {
            0.0
        } else {
            field.get(xi as usize, yi as usize)
        }
    };
    let mut v = at(x0, y0) * (1.0 - fx) * (1.0 - fy);
    if fx != 0.0 {
        v += at(x0 + 1, y0) * fx * (1.0 - fy);
    }
    if fy != 0.0 {
        v += at(x0, y0 + 1) * (1.0 - fx) * fy;
        if fx != 0.0 {
            v += at(x0 + 1, y0 + 1) * fx * fy;
        }
    }
    v
}

/// `out(p) = sum_i w_i * integral(p + (dx_i, dy_i))`, sampled bilinearly.
pub fn dirac_convolve(integral_field: &DepthField, kernel: &DiracKernel) -> Result<DepthField> {
    let (w, h) = integral_field.shape();
    let mut out = Vec::with_capacity(integral_field.len());
    for y in 0..h {
        for x in 0..w {
            let v = kernel
                .impulses
                .iter()
                .map(|imp| imp.w * sample(integral_field, x as f64 + imp.dx, y as f64 + imp.dy))
                .sum();
            out.push(v);
        }
    }
    integral_field.derived(out)
}

/// Convolution of `u` with the kernel whose derivative `kernel` describes.
pub fn continuous_convolve(u: &DepthField, kernel: &DiracKernel) -> Result<DepthField> {
    dirac_convolve(&repeated_integral(u, kernel.order)?, kernel)
}

/// Linear decomposition of a patch integral around its anchor pixel:
/// `integral ~= a * u(x0, y0) + b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchCoefficients {
    /// `(m + 1) * (n + 1) * dz`
    pub a: f64,
    /// `dz * sum_{i,j} (u(x_i, y_j) - u(x0, y0))`
    pub b: f64,
    pub m: usize,
    pub n: usize,
    pub dz: f64,
}

/// Coefficients for the `(m+1) x (n+1)` patch whose top-left pixel is
/// `(x0, y0)`; `m` extends along x and `n` along y.
pub fn patch_coefficients(u: &DepthField, x0: usize, y0: usize, m: usize, n: usize, dz: f64) -> Result<PatchCoefficients> {
    if x0 + m >= u.width() || y0 + n >= u.height() {
        return Err(Error::PatchOutOfBounds { x0, y0, m, n, width: u.width(), height: u.height() });
    }
    if !(dz > 0.0 && dz.is_finite()) {
        return Err(Error::param(format!("cell area must be positive, got {dz}")));
    }
    let anchor = u.get(x0, y0);
    let mut offsets = 0.0;
    for y in y0..=y0 + n {
        for x in x0..=x0 + m {
            offsets += u.get(x, y) - anchor;
        }
    }
    Ok(PatchCoefficients { a: ((m + 1) * (n + 1)) as f64 * dz, b: offsets * dz, m, n, dz })
}

pub fn approx_patch_integral(coeffs: &PatchCoefficients, u00: f64) -> f64 {
    coeffs.a * u00 + coeffs.b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(w: usize, h: usize, seed: u64) -> DepthField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DepthField::from_fn(w, h, |_, _| rng.gen_range(0.0..1.0)).unwrap()
    }

    #[test]
    fn integral_examples() {
        let f = DepthField::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(repeated_integral(&f, 0).unwrap(), f);
        assert_eq!(repeated_integral(&f, 1).unwrap().data(), &[1.0, 3.0, 4.0, 10.0]);
        // second round of prefix sums over [[1,3],[4,10]]
        assert_eq!(repeated_integral(&f, 2).unwrap().data(), &[1.0, 4.0, 5.0, 18.0]);
        let z = DepthField::zeros(4, 3).unwrap();
        for order in 0..=2 {
            assert!(repeated_integral(&z, order).unwrap().data().iter().all(|&v| v == 0.0));
        }
        assert!(repeated_integral(&f, 3).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(DiracKernel::new(vec![], 1).is_err());
        assert!(DiracKernel::new(vec![Impulse::new(0.0, 0.0, 1.0)], 3).is_err());
        assert!(DiracKernel::new(vec![Impulse::new(f64::NAN, 0.0, 1.0)], 0).is_err());
    }

    #[test]
    fn box_impulses_are_the_sat_corners() {
        let k = DiracKernel::from_dense(&[1.0; 9], 3, 3, 1, 1, 1).unwrap();
        let mut got: Vec<_> = k.impulses().iter().map(|i| (i.dx as i64, i.dy as i64, i.w)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, vec![(-2, -2, 1.0), (-2, 1, -1.0), (1, -2, -1.0), (1, 1, 1.0)]);
    }

    #[test]
    fn tent_impulses_are_outer_second_difference() {
        let k = DiracKernel::tent(1).unwrap();
        assert_eq!(k.impulses().len(), 9);
        let per_axis = [(1, 1.0), (-1, -2.0), (-3, 1.0)];
        for &(dx, wx) in &per_axis {
            for &(dy, wy) in &per_axis {
                let imp = k.impulses().iter().find(|i| i.dx == dx as f64 && i.dy == dy as f64).unwrap();
                assert!((imp.w - wx * wy / 16.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identity_and_half_pixel_sampling() {
        let f = random_field(6, 5, 1);
        assert_eq!(dirac_convolve(&f, &DiracKernel::identity()).unwrap(), f);
        assert_eq!(continuous_convolve(&f, &DiracKernel::identity()).unwrap(), f);

        let ramp = DepthField::from_fn(6, 3, |x, _| 2.0 * x as f64).unwrap();
        let half = DiracKernel::new(vec![Impulse::new(0.5, 0.0, 1.0)], 0).unwrap();
        let out = dirac_convolve(&ramp, &half).unwrap();
        for x in 0..5 {
            assert!((out.get(x, 1) - (2.0 * x as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn sat_corner_box_matches_dense_box_sum() {
        let f = random_field(10, 9, 2);
        let sat = repeated_integral(&f, 1).unwrap();
        let k = DiracKernel::new(
            vec![
                Impulse::new(1.0, 1.0, 1.0),
                Impulse::new(1.0, -2.0, -1.0),
                Impulse::new(-2.0, 1.0, -1.0),
                Impulse::new(-2.0, -2.0, 1.0),
            ],
            1,
        )
        .unwrap();
        let out = dirac_convolve(&sat, &k).unwrap();
        for y in 1..8 {
            for x in 1..9 {
                let mut want = 0.0;
                for j in y - 1..=y + 1 {
                    for i in x - 1..=x + 1 {
                        want += f.get(i, j);
                    }
                }
                assert!((out.get(x, y) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_filter_is_box_over_nine() {
        let f = random_field(12, 12, 4);
        let out = continuous_convolve(&f, &DiracKernel::mean_filter(1).unwrap()).unwrap();
        for y in 1..11 {
            for x in 1..11 {
                let mut want = 0.0;
                for j in y - 1..=y + 1 {
                    for i in x - 1..=x + 1 {
                        want += f.get(i, j);
                    }
                }
                assert!((out.get(x, y) * 9.0 - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn patch_examples() {
        let f = DepthField::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let c = patch_coefficients(&f, 0, 0, 1, 1, 1.0).unwrap();
        assert_eq!((c.a, c.b), (4.0, 6.0));
        assert_eq!(approx_patch_integral(&c, 1.0), 10.0);

        let flat = DepthField::constant(5, 5, 42.0).unwrap();
        let c = patch_coefficients(&flat, 1, 2, 3, 2, 0.5).unwrap();
        assert_eq!(c.a, 4.0 * 3.0 * 0.5);
        assert_eq!(c.b, 0.0);

        let unit = PatchCoefficients { a: 1.0, b: 0.0, m: 0, n: 0, dz: 1.0 };
        assert_eq!(approx_patch_integral(&unit, 3.25), 3.25);

        assert!(matches!(patch_coefficients(&f, 1, 0, 1, 0, 1.0), Err(Error::PatchOutOfBounds { .. })));
        assert!(patch_coefficients(&f, 0, 0, 1, 1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn convolution_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, order in 0usize..=2) {
            let u = random_field(9, 8, seed);
            let v = random_field(9, 8, seed ^ 0xabcdef);
            let kernel = match order {
                0 => DiracKernel::new(vec![Impulse::new(0.3, -0.7, 0.5), Impulse::new(-1.0, 0.0, 0.5)], 0).unwrap(),
                1 => DiracKernel::mean_filter(1).unwrap(),
                _ => DiracKernel::tent(1).unwrap(),
            };
            let mix = u.zip_with(&v, |p, q| a * p + b * q).unwrap();
            let lhs = continuous_convolve(&mix, &kernel).unwrap();
            let cu = continuous_convolve(&u, &kernel).unwrap();
            let cv = continuous_convolve(&v, &kernel).unwrap();
            let rhs = cu.zip_with(&cv, |p, q| a * p + b * q).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
        }

        #[test]
        fn patch_decomposition_is_exact(seed in any::<u64>(), m in 0usize..=8, n in 0usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = DepthField::from_fn(12, 12, |_, _| rng.gen_range(100.0..3000.0)).unwrap();
            let (x0, y0) = (rng.gen_range(0..12 - m), rng.gen_range(0..12 - n));
            let c = patch_coefficients(&u, x0, y0, m, n, 1.0).unwrap();
            prop_assert_eq!(c.a, ((m + 1) * (n + 1)) as f64);
            let mut riemann = 0.0;
            for y in y0..=y0 + n {
                for x in x0..=x0 + m {
                    riemann += u.get(x, y);
                }
            }
            let approx = approx_patch_integral(&c, u.get(x0, y0));
            prop_assert!((approx - riemann).abs() <= 1e-12 * riemann.abs());
        }
    }
}
