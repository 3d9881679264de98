//! Depth grids, boundary handling, nearest-neighbour stencils and metrics.

use crate::error::{Error, Result};

/// Thresholds used for the ratio accuracy metric unless the caller supplies
/// its own.
pub const DEFAULT_THRESHOLDS: [f64; 3] = [1.02, 1.05, 1.10];

/// A 2D grid of depths in millimetres, stored row-major.
///
/// Every value is finite and both dimensions are at least 2. An optional
/// validity mask excludes pixels from metric computation; it never affects
/// the numerical operators.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthField {
    width: usize,
    height: usize,
    data: Vec<f64>,
    valid_mask: Option<Vec<bool>>,
}

impl DepthField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(Error::LengthMismatch { len: data.len(), width, height });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { width, height, data, valid_mask: None })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::constant(width, height, 0.0)
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Same-shape field from data produced by an operator on a valid field.
    /// Non-finite values are reported with their index.
    pub(crate) fn derived(&self, data: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(data.len(), self.data.len());
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { width: self.width, height: self.height, data, valid_mask: None })
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.data.len() {
            return Err(Error::LengthMismatch { len: mask.len(), width: self.width, height: self.height });
        }
        self.valid_mask = Some(mask);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn valid_mask(&self) -> Option<&[bool]> {
        self.valid_mask.as_deref()
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid_mask.as_ref().map_or(true, |m| m[y * self.width + x])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Value at `(x, y)` with coordinates clamped to the domain, i.e. edge
    /// replication.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn same_shape(&self, other: &DepthField) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch { left: self.shape(), right: other.shape() });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.derived(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &DepthField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_shape(other)?;
        self.derived(self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dynamic_range(&self) -> f64 {
        self.max() - self.min()
    }

    /// Largest absolute elementwise difference between two same-shape fields.
    pub fn max_abs_diff(&self, other: &DepthField) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Removes `margin` pixels from every side.
    pub fn crop(&self, margin: usize) -> Result<Self> {
        let w = self.width.saturating_sub(2 * margin);
        let h = self.height.saturating_sub(2 * margin);
        Self::from_fn(w, h, |x, y| self.get(x + margin, y + margin))
    }
}

/// Pads `field` by `margin` pixels on every side, replicating the nearest edge
/// pixel. This is the discrete zero-flux (Neumann) boundary condition.
pub fn pad_neumann(field: &DepthField, margin: usize) -> Result<DepthField> {
    if margin == 0 {
        return Err(Error::param("padding margin must be at least 1"));
    }
    let m = margin as isize;
    DepthField::from_fn(field.width + 2 * margin, field.height + 2 * margin, |x, y| {
        field.get_clamped(x as isize - m, y as isize - m)
    })
}

/// Nearest-neighbour differences `u(neighbour) - u(p)` in the four compass
/// directions. North is the row above (smaller `y`).
#[derive(Clone, Debug, PartialEq)]
pub struct Differences {
    pub north: DepthField,
    pub south: DepthField,
    pub east: DepthField,
    pub west: DepthField,
}

impl Differences {
    pub fn iter(&self) -> impl Iterator<Item = &DepthField> {
        [&self.north, &self.south, &self.east, &self.west].into_iter()
    }
}

/// Offsets `(dx, dy)` of the four neighbours in the order north, south, east, west.
pub(crate) const NEIGHBOURS: [(isize, isize); 4] = [(0, -1), (0, 1), (1, 0), (-1, 0)];

/// Directional differences under edge replication, so differences that point
/// out of the domain are zero.
pub fn directional_differences(field: &DepthField) -> Result<Differences> {
    let dir = |dx: isize, dy: isize| {
        DepthField::from_fn(field.width, field.height, |x, y| {
            let (x, y) = (x as isize, y as isize);
            field.get_clamped(x + dx, y + dy) - field.get_clamped(x, y)
        })
    };
    let [n, s, e, w] = NEIGHBOURS;
    Ok(Differences {
        north: dir(n.0, n.1)?,
        south: dir(s.0, s.1)?,
        east: dir(e.0, e.1)?,
        west: dir(w.0, w.1)?,
    })
}

/// Evaluation metrics of a prediction against ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    /// Mean absolute error, mm.
    pub mae: f64,
    /// Root mean squared error, mm.
    pub rmse: f64,
    /// `(threshold, percentage)` pairs in the order the thresholds were given.
    pub rho: Vec<(f64, f64)>,
}

impl Metrics {
    pub fn rho_at(&self, threshold: f64) -> Option<f64> {
        self.rho.iter().find(|(t, _)| *t == threshold).map(|&(_, p)| p)
    }
}

/// MAE, RMSE and the ratio accuracy `rho(th)`: the percentage of pixels with
/// `max(pred/gt, gt/pred) <= th`.
///
/// A pixel takes part only if it is valid in both masks. Non-positive
/// predictions never satisfy a ratio threshold.
pub fn compute_metrics(pred: &DepthField, gt: &DepthField, thresholds: &[f64]) -> Result<Metrics> {
    pred.same_shape(gt)?;
    if let Some(th) = thresholds.iter().find(|t| !(t.is_finite() && **t >= 1.0)) {
        return Err(Error::param(format!("ratio threshold {th} must be finite and >= 1")));
    }
    let mut count = 0usize;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut hits = vec![0usize; thresholds.len()];
    for y in 0..gt.height {
        for x in 0..gt.width {
            if !(gt.is_valid(x, y) && pred.is_valid(x, y)) {
                continue;
            }
            let (p, g) = (pred.get(x, y), gt.get(x, y));
            if g <= 0.0 {
                return Err(Error::NonPositiveGroundTruth { x, y });
            }
            let err = p - g;
            abs_sum += err.abs();
            sq_sum += err * err;
            count += 1;
            if p > 0.0 {
                let ratio = (p / g).max(g / p);
                for (hit, th) in hits.iter_mut().zip(thresholds) {
                    if ratio <= *th {
                        *hit += 1;
                    }
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    let n = count as f64;
    Ok(Metrics {
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
        rho: thresholds.iter().zip(hits).map(|(&t, h)| (t, 100.0 * h as f64 / n)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(w: usize, h: usize, seed: u64, lo: f64, hi: f64) -> DepthField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DepthField::from_fn(w, h, |_, _| rng.gen_range(lo..hi)).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(DepthField::new(1, 4, vec![0.0; 4]), Err(Error::InvalidDimensions { .. })));
        assert!(matches!(DepthField::new(2, 2, vec![0.0; 3]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(
            DepthField::new(2, 2, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(DepthField::new(2, 2, vec![0.0, f64::INFINITY, 0.0, 0.0]).is_err());
    }

    #[test]
    fn pad_two_by_two() {
        let f = DepthField::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = pad_neumann(&f, 1).unwrap();
        assert_eq!(p.shape(), (4, 4));
        #[rustfmt::skip]
        let expected = [
            1.0, 1.0, 2.0, 2.0,
            1.0, 1.0, 2.0, 2.0,
            3.0, 3.0, 4.0, 4.0,
            3.0, 3.0, 4.0, 4.0,
        ];
        assert_eq!(p.data(), &expected);
        assert!(pad_neumann(&f, 0).is_err());
    }

    #[test]
    fn pad_constant_stays_constant() {
        let f = DepthField::constant(3, 5, 7.5).unwrap();
        let p = pad_neumann(&f, 3).unwrap();
        assert!(p.data().iter().all(|&v| v == 7.5));
    }

    #[test]
    fn pad_ramp_matches_index_clamp() {
        let f = DepthField::from_fn(3, 3, |x, y| (x + 10 * y) as f64).unwrap();
        let p = pad_neumann(&f, 2).unwrap();
        for py in 0..7 {
            for px in 0..7 {
                let sx = (px as i64 - 2).max(0).min(2) as usize;
                let sy = (py as i64 - 2).max(0).min(2) as usize;
                assert_eq!(p.get(px, py), f.data()[sy * 3 + sx]);
            }
        }
    }

    #[test]
    fn differences_constant_and_ramp() {
        let c = DepthField::constant(4, 3, 2.0).unwrap();
        let d = directional_differences(&c).unwrap();
        assert!(d.iter().all(|f| f.data().iter().all(|&v| v == 0.0)));

        let r = DepthField::from_fn(5, 4, |x, _| x as f64).unwrap();
        let d = directional_differences(&r).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                let east = if x == 4 { 0.0 } else { 1.0 };
                let west = if x == 0 { 0.0 } else { -1.0 };
                assert_eq!(d.east.get(x, y), east);
                assert_eq!(d.west.get(x, y), west);
                assert_eq!(d.north.get(x, y), 0.0);
                assert_eq!(d.south.get(x, y), 0.0);
            }
        }
    }

    #[test]
    fn differences_match_double_loop() {
        let f = random_field(8, 8, 3, -5.0, 5.0);
        let d = directional_differences(&f).unwrap();
        let v = f.data();
        for y in 0..8usize {
            for x in 0..8usize {
                let c = v[y * 8 + x];
                let n = if y == 0 { c } else { v[(y - 1) * 8 + x] };
                let s = if y == 7 { c } else { v[(y + 1) * 8 + x] };
                let e = if x == 7 { c } else { v[y * 8 + x + 1] };
                let w = if x == 0 { c } else { v[y * 8 + x - 1] };
                assert_eq!(d.north.get(x, y), n - c);
                assert_eq!(d.south.get(x, y), s - c);
                assert_eq!(d.east.get(x, y), e - c);
                assert_eq!(d.west.get(x, y), w - c);
            }
        }
    }

    #[test]
    fn metrics_identity_and_offset() {
        let gt = DepthField::constant(4, 4, 1000.0).unwrap();
        let m = compute_metrics(&gt, &gt, &DEFAULT_THRESHOLDS).unwrap();
        assert_eq!((m.mae, m.rmse), (0.0, 0.0));
        assert!(m.rho.iter().all(|&(_, p)| p == 100.0));

        let pred = DepthField::constant(4, 4, 1005.0).unwrap();
        let m = compute_metrics(&pred, &gt, &DEFAULT_THRESHOLDS).unwrap();
        assert_eq!(m.mae, 5.0);
        assert_eq!(m.rmse, 5.0);
        assert_eq!(m.rho_at(1.02), Some(100.0));
        assert_eq!(m.rho_at(1.10), Some(100.0));
    }

    #[test]
    fn metrics_match_scalar_loop() {
        let gt = random_field(16, 16, 11, 500.0, 2000.0);
        let pred = random_field(16, 16, 12, 500.0, 2000.0);
        let m = compute_metrics(&pred, &gt, &DEFAULT_THRESHOLDS).unwrap();
        let (mut a, mut s) = (0.0f64, 0.0f64);
        let mut hits = [0u32; 3];
        for i in 0..256 {
            let (p, g) = (pred.data()[i], gt.data()[i]);
            a += (p - g).abs();
            s += (p - g) * (p - g);
            let r = if p > g { p / g } else { g / p };
            for (k, th) in DEFAULT_THRESHOLDS.iter().enumerate() {
                if r <= *th {
                    hits[k] += 1;
                }
            }
        }
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
        assert!(rel(m.mae, a / 256.0) < 1e-12);
        assert!(rel(m.rmse, (s / 256.0).sqrt()) < 1e-12);
        for k in 0..3 {
            assert_eq!(m.rho[k].1, 100.0 * hits[k] as f64 / 256.0);
        }
    }

    #[test]
    fn metrics_errors_and_mask() {
        let gt = DepthField::constant(3, 3, 100.0).unwrap();
        let other = DepthField::constant(3, 4, 100.0).unwrap();
        assert!(matches!(compute_metrics(&gt, &other, &DEFAULT_THRESHOLDS), Err(Error::ShapeMismatch { .. })));

        let mut data = vec![100.0; 9];
        data[4] = 0.0;
        let bad = DepthField::new(3, 3, data.clone()).unwrap();
        assert!(matches!(
            compute_metrics(&gt, &bad, &DEFAULT_THRESHOLDS),
            Err(Error::NonPositiveGroundTruth { x: 1, y: 1 })
        ));
        // masking the zero pixel makes the pair evaluable
        let mut mask = vec![true; 9];
        mask[4] = false;
        let masked = DepthField::new(3, 3, data).unwrap().with_mask(mask).unwrap();
        let m = compute_metrics(&gt, &masked, &DEFAULT_THRESHOLDS).unwrap();
        assert_eq!(m.mae, 0.0);

        let none = gt.clone().with_mask(vec![false; 9]).unwrap();
        assert!(matches!(compute_metrics(&gt, &none, &DEFAULT_THRESHOLDS), Err(Error::EmptyMask)));
    }

    proptest! {
        #[test]
        fn pad_then_crop_is_identity(w in 2usize..7, h in 2usize..7, margin in 1usize..4, seed in any::<u64>()) {
            let f = random_field(w, h, seed, -100.0, 100.0);
            let back = pad_neumann(&f, margin).unwrap().crop(margin).unwrap();
            prop_assert_eq!(back, f);
        }

        #[test]
        fn differences_sum_to_padded_laplacian(w in 2usize..9, h in 2usize..9, seed in any::<u64>()) {
            let f = random_field(w, h, seed, -10.0, 10.0);
            let d = directional_differences(&f).unwrap();
            let p = pad_neumann(&f, 1).unwrap();
            for y in 0..h {
                for x in 0..w {
                    let c = p.get(x + 1, y + 1);
                    let lap = (p.get(x + 1, y) - c) + (p.get(x + 1, y + 2) - c)
                        + (p.get(x + 2, y + 1) - c) + (p.get(x, y + 1) - c);
                    let sum = d.north.get(x, y) + d.south.get(x, y) + d.east.get(x, y) + d.west.get(x, y);
                    prop_assert_eq!(sum, lap);
                }
            }
        }

        #[test]
        fn metric_symmetry_and_shift(seed in any::<u64>(), shift in -50.0f64..50.0) {
            let a = random_field(6, 5, seed, 200.0, 400.0);
            let b = random_field(6, 5, seed ^ 0x9e37, 200.0, 400.0);
            let ab = compute_metrics(&a, &b, &DEFAULT_THRESHOLDS).unwrap();
            let ba = compute_metrics(&b, &a, &DEFAULT_THRESHOLDS).unwrap();
            prop_assert!((ab.mae - ba.mae).abs() <= 1e-12 * ab.mae.max(1.0));
            prop_assert_eq!(&ab.rho, &ba.rho);
            let a2 = a.map(|v| v + shift).unwrap();
            let b2 = b.map(|v| v + shift).unwrap();
            let shifted = compute_metrics(&a2, &b2, &DEFAULT_THRESHOLDS).unwrap();
            prop_assert!((shifted.mae - ab.mae).abs() < 1e-9);
            prop_assert!((shifted.rmse - ab.rmse).abs() < 1e-9);
        }

        #[test]
        fn rho_is_monotone(seed in any::<u64>()) {
            let a = random_field(7, 7, seed, 900.0, 1100.0);
            let b = random_field(7, 7, seed.wrapping_add(1), 900.0, 1100.0);
            let ths = [1.0, 1.01, 1.02, 1.05, 1.1, 1.2, 2.0];
            let m = compute_metrics(&a, &b, &ths).unwrap();
            for pair in m.rho.windows(2) {
                prop_assert!(pair[0].1 <= pair[1].1);
            }
            prop_assert!(m.rho.iter().all(|&(_, p)| (0.0..=100.0).contains(&p)));
            prop_assert!(m.mae >= 0.0 && m.rmse >= 0.0);
        }
    }
}
