//! Dense row-major tensors and the small set of array plumbing the rest of
//! the crate is built on.
//!
//! Conventions, used everywhere without further comment:
//!
//! * [`Tensor2`] is a `height x width` plane stored row-major.
//! * [`Tensor3`] is `channels x height x width`, channel-major, each channel
//!   row-major. Volumes with a disparity axis reuse `Tensor3` with the
//!   disparity index in the channel slot.
//! * Values are whatever [`Scalar`] the caller picked; every reduction
//!   (sums, dot products, energies, means) accumulates in `f64`.
//! * Types are immutable after construction and all operations are pure
//!   functions returning fresh tensors.

use crate::error::{MochaError, Result};
use crate::scalar::Scalar;

/// Smallest multiple of `m` that is >= `n`. `m` must be nonzero.
pub(crate) fn next_multiple(n: usize, m: usize) -> usize {
    n.div_ceil(m) * m
}

/// Two-dimensional plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor2<T> {
    /// Wraps `data` as an `height x width` plane.
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(MochaError::Dimension(format!(
                "plane {height}x{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, T::zero())
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    /// Builds a plane by evaluating `f(y, x)` at every cell.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> T {
        debug_assert!(y < self.height && x < self.width);
        self.data[y * self.width + x]
    }

    #[inline]
    pub(crate) fn set(&mut self, y: usize, x: usize, v: T) {
        debug_assert!(y < self.height && x < self.width);
        self.data[y * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise product with an equally shaped plane.
    pub fn mul_elem(&self, other: &Self) -> Result<Self> {
        if self.height != other.height || self.width != other.width {
            return Err(MochaError::Dimension(format!(
                "elementwise product of {}x{} with {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .collect();
        Ok(Self {
            height: self.height,
            width: self.width,
            data,
        })
    }

    /// Grows the plane to `new_h x new_w` by replicating the last row and
    /// column (edge padding on the bottom and right).
    pub fn pad_edge(&self, new_h: usize, new_w: usize) -> Result<Self> {
        if new_h < self.height || new_w < self.width {
            return Err(MochaError::Dimension(format!(
                "pad_edge target {new_h}x{new_w} smaller than source {}x{}",
                self.height, self.width
            )));
        }
        if self.height == 0 || self.width == 0 {
            return Err(MochaError::Dimension("cannot pad an empty plane".into()));
        }
        let out = Self::from_fn(new_h, new_w, |y, x| {
            self.get(y.min(self.height - 1), x.min(self.width - 1))
        });
        Ok(out)
    }

    /// Keeps the top-left `new_h x new_w` corner.
    pub fn crop(&self, new_h: usize, new_w: usize) -> Result<Self> {
        if new_h > self.height || new_w > self.width {
            return Err(MochaError::Dimension(format!(
                "crop target {new_h}x{new_w} larger than source {}x{}",
                self.height, self.width
            )));
        }
        Ok(Self::from_fn(new_h, new_w, |y, x| self.get(y, x)))
    }

    /// Sum of squared values, accumulated in `f64`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.to_acc() * v.to_acc()).sum()
    }

    /// Largest absolute value, 0 for an empty plane.
    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.to_acc().abs())
            .fold(0.0, f64::max)
    }

    /// Resamples to `new_h x new_w` with bilinear interpolation.
    ///
    /// Source coordinates are sampled at `(i + 0.5) * scale - 0.5`, clamped to
    /// the valid range, so corners stay aligned with cell centers.
    pub fn resize_bilinear(&self, new_h: usize, new_w: usize) -> Result<Self> {
        if self.height == 0 || self.width == 0 || new_h == 0 || new_w == 0 {
            return Err(MochaError::Dimension("resize of an empty plane".into()));
        }
        let sy = self.height as f64 / new_h as f64;
        let sx = self.width as f64 / new_w as f64;
        let out = Self::from_fn(new_h, new_w, |y, x| {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
            let y0 = fy.floor() as usize;
            let x0 = fx.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let x1 = (x0 + 1).min(self.width - 1);
            let wy = fy - y0 as f64;
            let wx = fx - x0 as f64;
            let v = self.get(y0, x0).to_acc() * (1.0 - wy) * (1.0 - wx)
                + self.get(y0, x1).to_acc() * (1.0 - wy) * wx
                + self.get(y1, x0).to_acc() * wy * (1.0 - wx)
                + self.get(y1, x1).to_acc() * wy * wx;
            T::from_acc(v)
        });
        Ok(out)
    }
}

/// Three-dimensional tensor, `channels x height x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor3<T> {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(MochaError::Dimension(format!(
                "tensor {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, T::zero())
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: T) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    /// Stacks equally shaped planes into a tensor, one plane per channel.
    pub fn from_planes(planes: &[Tensor2<T>]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| MochaError::Dimension("from_planes needs at least one plane".into()))?;
        let (h, w) = (first.height(), first.width());
        let mut data = Vec::with_capacity(planes.len() * h * w);
        for p in planes {
            if p.height() != h || p.width() != w {
                return Err(MochaError::Dimension(format!(
                    "plane {}x{} does not match {}x{}",
                    p.height(),
                    p.width(),
                    h,
                    w
                )));
            }
            data.extend_from_slice(p.data());
        }
        Ok(Self {
            channels: planes.len(),
            height: h,
            width: w,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> T {
        debug_assert!(c < self.channels && y < self.height && x < self.width);
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub(crate) fn set(&mut self, c: usize, y: usize, x: usize, v: T) {
        debug_assert!(c < self.channels && y < self.height && x < self.width);
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// Borrow of one channel's contiguous row-major plane.
    pub fn channel_data(&self, c: usize) -> &[T] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    /// Copy of one channel as a standalone plane.
    pub fn channel_plane(&self, c: usize) -> Tensor2<T> {
        Tensor2 {
            height: self.height,
            width: self.width,
            data: self.channel_data(c).to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Concatenates tensors along the channel axis.
    pub fn concat_channels(parts: &[&Tensor3<T>]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| {
            MochaError::Dimension("concat_channels needs at least one tensor".into())
        })?;
        let (h, w) = (first.height, first.width);
        let mut channels = 0;
        let mut data = Vec::new();
        for t in parts {
            if t.height != h || t.width != w {
                return Err(MochaError::Dimension(format!(
                    "concat_channels: {}x{} does not match {}x{}",
                    t.height, t.width, h, w
                )));
            }
            channels += t.channels;
            data.extend_from_slice(&t.data);
        }
        Ok(Self {
            channels,
            height: h,
            width: w,
            data,
        })
    }

    /// Edge-pads every channel on the bottom and right.
    pub fn pad_edge_spatial(&self, new_h: usize, new_w: usize) -> Result<Self> {
        let planes: Vec<Tensor2<T>> = (0..self.channels)
            .map(|c| self.channel_plane(c).pad_edge(new_h, new_w))
            .collect::<Result<_>>()?;
        Self::from_planes(&planes)
    }

    /// Keeps the top-left `new_h x new_w` corner of every channel.
    pub fn crop_spatial(&self, new_h: usize, new_w: usize) -> Result<Self> {
        let planes: Vec<Tensor2<T>> = (0..self.channels)
            .map(|c| self.channel_plane(c).crop(new_h, new_w))
            .collect::<Result<_>>()?;
        Self::from_planes(&planes)
    }

    /// Bilinear resize of every channel; see [`Tensor2::resize_bilinear`].
    pub fn resize_bilinear(&self, new_h: usize, new_w: usize) -> Result<Self> {
        let planes: Vec<Tensor2<T>> = (0..self.channels)
            .map(|c| self.channel_plane(c).resize_bilinear(new_h, new_w))
            .collect::<Result<_>>()?;
        Self::from_planes(&planes)
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.to_acc().abs())
            .fold(0.0, f64::max)
    }
}

/// Elementwise product of two equally shaped tensors.
pub fn hadamard<T: Scalar>(a: &Tensor3<T>, b: &Tensor3<T>) -> Result<Tensor3<T>> {
    if a.channels != b.channels || a.height != b.height || a.width != b.width {
        return Err(MochaError::Dimension(format!(
            "hadamard of {}x{}x{} with {}x{}x{}",
            a.channels, a.height, a.width, b.channels, b.height, b.width
        )));
    }
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| x * y)
        .collect();
    Ok(Tensor3 {
        channels: a.channels,
        height: a.height,
        width: a.width,
        data,
    })
}

/// Elementwise product with a single plane broadcast over all channels.
pub fn hadamard_plane<T: Scalar>(a: &Tensor3<T>, plane: &Tensor2<T>) -> Result<Tensor3<T>> {
    if a.height != plane.height() || a.width != plane.width() {
        return Err(MochaError::Dimension(format!(
            "hadamard broadcast of {}x{}x{} with plane {}x{}",
            a.channels,
            a.height,
            a.width,
            plane.height(),
            plane.width()
        )));
    }
    let mut out = a.clone();
    let hw = a.height * a.width;
    for c in 0..a.channels {
        for (i, v) in out.data[c * hw..(c + 1) * hw].iter_mut().enumerate() {
            *v = *v * plane.data()[i];
        }
    }
    Ok(out)
}

/// Disparity plane with a per-pixel validity mask.
///
/// `values` always holds a number for every pixel; `valid` marks which of
/// them mean anything. Evaluations and visualizations skip invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap<T> {
    values: Tensor2<T>,
    valid: Vec<bool>,
}

impl<T: Scalar> DisparityMap<T> {
    pub fn new(values: Tensor2<T>, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != values.height() * values.width() {
            return Err(MochaError::Dimension(format!(
                "validity mask has {} entries for a {}x{} map",
                valid.len(),
                values.height(),
                values.width()
            )));
        }
        Ok(Self { values, valid })
    }

    /// Map whose every pixel is valid.
    pub fn all_valid(values: Tensor2<T>) -> Self {
        let n = values.height() * values.width();
        Self {
            values,
            valid: vec![true; n],
        }
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn values(&self) -> &Tensor2<T> {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> T {
        self.values.get(y, x)
    }

    #[inline]
    pub fn is_valid(&self, y: usize, x: usize) -> bool {
        self.valid[y * self.width() + x]
    }

    /// Clamps every value into `[lo, hi]`, keeping the mask.
    pub fn clamp(&self, lo: T, hi: T) -> Self {
        Self {
            values: self.values.map(|v| v.max(lo).min(hi)),
            valid: self.valid.clone(),
        }
    }

    /// Applies `f` to the values, keeping the mask.
    pub fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.map(f),
            valid: self.valid.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_length() {
        assert!(Tensor2::<f32>::new(2, 3, vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor2::<f32>::new(2, 3, vec![0.0; 5]),
            Err(MochaError::Dimension(_))
        ));
        assert!(matches!(
            Tensor3::<f32>::new(2, 2, 2, vec![0.0; 7]),
            Err(MochaError::Dimension(_))
        ));
    }

    #[test]
    fn hadamard_with_ones_is_identity() {
        let a = Tensor3::<f32>::from_fn(2, 3, 4, |c, y, x| (c + y * 4 + x) as f32 * 0.5 - 1.0);
        let ones = Tensor3::<f32>::filled(2, 3, 4, 1.0);
        assert_eq!(hadamard(&a, &ones).unwrap(), a);
    }

    #[test]
    fn hadamard_halves_times_twos_is_ones() {
        let a = Tensor3::<f32>::filled(2, 2, 2, 2.0);
        let b = Tensor3::<f32>::filled(2, 2, 2, 0.5);
        let p = hadamard(&a, &b).unwrap();
        assert!(p.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn hadamard_commutes_and_associates() {
        let a = Tensor3::<f32>::from_fn(1, 2, 2, |_, y, x| (y * 2 + x) as f32 + 0.25);
        let b = Tensor3::<f32>::from_fn(1, 2, 2, |_, y, x| (x) as f32 - 0.5 * y as f32);
        let c = Tensor3::<f32>::filled(1, 2, 2, -1.5);
        let ab = hadamard(&a, &b).unwrap();
        let ba = hadamard(&b, &a).unwrap();
        assert_eq!(ab, ba);
        let ab_c = hadamard(&ab, &c).unwrap();
        let a_bc = hadamard(&a, &hadamard(&b, &c).unwrap()).unwrap();
        assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn hadamard_rejects_shape_mismatch() {
        let a = Tensor3::<f32>::zeros(1, 2, 2);
        let b = Tensor3::<f32>::zeros(1, 2, 3);
        assert!(matches!(hadamard(&a, &b), Err(MochaError::Dimension(_))));
    }

    #[test]
    fn broadcast_plane_multiplies_every_channel() {
        let a = Tensor3::<f32>::from_fn(2, 2, 2, |c, _, _| (c + 1) as f32);
        let plane = Tensor2::<f32>::from_fn(2, 2, |y, x| (y * 2 + x) as f32);
        let p = hadamard_plane(&a, &plane).unwrap();
        assert_eq!(p.get(0, 1, 1), 3.0);
        assert_eq!(p.get(1, 1, 1), 6.0);
        assert_eq!(p.get(1, 0, 0), 0.0);
    }

    #[test]
    fn pad_edge_replicates_last_row_and_column() {
        let t = Tensor2::<f32>::from_fn(2, 2, |y, x| (y * 2 + x) as f32);
        let p = t.pad_edge(3, 4).unwrap();
        assert_eq!(p.get(2, 0), 2.0);
        assert_eq!(p.get(2, 3), 3.0);
        assert_eq!(p.get(0, 3), 1.0);
        assert_eq!(p.crop(2, 2).unwrap(), t);
    }

    #[test]
    fn resize_bilinear_preserves_constants() {
        let t = Tensor2::<f32>::filled(3, 5, 2.5);
        let r = t.resize_bilinear(6, 10).unwrap();
        assert!(r.data().iter().all(|&v| v == 2.5));
        let r = t.resize_bilinear(2, 3).unwrap();
        assert!(r.data().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn resize_round_trip_on_identity_size_is_exact() {
        let t = Tensor2::<f32>::from_fn(4, 6, |y, x| (y * 6 + x) as f32 * 0.1);
        assert_eq!(t.resize_bilinear(4, 6).unwrap(), t);
    }

    #[test]
    fn energy_accumulates_in_f64() {
        let t = Tensor2::<f32>::filled(1, 3, 2.0);
        assert_eq!(t.energy(), 12.0);
    }

    #[test]
    fn disparity_map_clamp_keeps_mask() {
        let values = Tensor2::<f32>::from_fn(1, 4, |_, x| x as f32 * 100.0 - 150.0);
        let d = DisparityMap::new(values, vec![true, false, true, false]).unwrap();
        let c = d.clamp(0.0, 192.0);
        assert_eq!(c.get(0, 0), 0.0);
        assert_eq!(c.get(0, 3), 150.0);
        assert_eq!(c.valid(), &[true, false, true, false]);
    }

    #[test]
    fn next_multiple_rounds_up() {
        assert_eq!(next_multiple(4, 3), 6);
        assert_eq!(next_multiple(6, 3), 6);
        assert_eq!(next_multiple(1, 16), 16);
        assert_eq!(next_multiple(97, 16), 112);
    }
}
