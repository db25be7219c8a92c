//! Small seeded convolution kernels, activations, and pooling.
//!
//! These are fixed-function numeric kernels, not a training framework: weights
//! are produced once from a [`SeededGenerator`] stream and never change. All
//! accumulation is in `f64`; each output cell is summed in a fixed order, so
//! results do not depend on the parallel schedule.

use rayon::prelude::*;

use crate::error::{MochaError, Result};
use crate::rng::SeededGenerator;
use crate::scalar::Scalar;
use crate::tensor::Tensor3;

/// Dense 2-D convolution weights, layout `[out][in][ky][kx]`, plus bias.
#[derive(Debug, Clone)]
pub struct ConvWeights<T> {
    out_channels: usize,
    in_channels: usize,
    kernel: usize,
    weights: Vec<T>,
    bias: Vec<T>,
}

impl<T: Scalar> ConvWeights<T> {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel: usize,
        weights: Vec<T>,
        bias: Vec<T>,
    ) -> Result<Self> {
        if kernel % 2 == 0 || kernel == 0 {
            return Err(MochaError::Config(format!(
                "convolution kernel must be odd, got {kernel}"
            )));
        }
        if weights.len() != out_channels * in_channels * kernel * kernel {
            return Err(MochaError::Dimension(format!(
                "conv weights: expected {} values, got {}",
                out_channels * in_channels * kernel * kernel,
                weights.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(MochaError::Dimension(format!(
                "conv bias: expected {} values, got {}",
                out_channels,
                bias.len()
            )));
        }
        Ok(Self {
            out_channels,
            in_channels,
            kernel,
            weights,
            bias,
        })
    }

    /// Fan-in scaled uniform init in `[-sqrt(6/fan_in), sqrt(6/fan_in))`,
    /// zero bias.
    pub fn seeded(
        gen: &mut SeededGenerator,
        out_channels: usize,
        in_channels: usize,
        kernel: usize,
    ) -> Result<Self> {
        let fan_in = (in_channels * kernel * kernel) as f64;
        let bound = (6.0 / fan_in).sqrt();
        let weights = gen.uniform_vec(out_channels * in_channels * kernel * kernel, bound);
        let bias = vec![T::zero(); out_channels];
        Self::new(out_channels, in_channels, kernel, weights, bias)
    }

    pub fn zeros(out_channels: usize, in_channels: usize, kernel: usize) -> Result<Self> {
        Self::new(
            out_channels,
            in_channels,
            kernel,
            vec![T::zero(); out_channels * in_channels * kernel * kernel],
            vec![T::zero(); out_channels],
        )
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn is_all_zero(&self) -> bool {
        self.weights.iter().all(|w| w.is_zero()) && self.bias.iter().all(|b| b.is_zero())
    }

    /// Same-padded convolution with the given stride. Zero padding of
    /// `kernel / 2` on every side; output spatial size is `ceil(dim / stride)`.
    pub fn apply(&self, input: &Tensor3<T>, stride: usize) -> Result<Tensor3<T>> {
        if input.channels() != self.in_channels {
            return Err(MochaError::Dimension(format!(
                "conv expects {} input channels, got {}",
                self.in_channels,
                input.channels()
            )));
        }
        if stride == 0 {
            return Err(MochaError::Config("conv stride must be >= 1".into()));
        }
        let k = self.kernel;
        let pad = k / 2;
        let (h, w) = (input.height(), input.width());
        let out_h = h.div_ceil(stride);
        let out_w = w.div_ceil(stride);
        let oc_n = self.out_channels;

        // Tap-major weight copy `[in][ky][kx][out]` so the inner loop over
        // output channels is contiguous.
        let mut tap_major = vec![0.0f64; self.weights.len()];
        for oc in 0..oc_n {
            for ic in 0..self.in_channels {
                for ky in 0..k {
                    for kx in 0..k {
                        let src = ((oc * self.in_channels + ic) * k + ky) * k + kx;
                        let dst = ((ic * k + ky) * k + kx) * oc_n + oc;
                        tap_major[dst] = self.weights[src].to_acc();
                    }
                }
            }
        }
        let bias: Vec<f64> = self.bias.iter().map(|b| b.to_acc()).collect();

        // Each output row is computed independently in `[oc][x]` order and
        // scattered into the channel-major result afterwards.
        let rows: Vec<Vec<T>> = (0..out_h)
            .into_par_iter()
            .map(|oy| {
                let mut row = vec![T::zero(); oc_n * out_w];
                let mut acc = vec![0.0f64; oc_n];
                for ox in 0..out_w {
                    acc.copy_from_slice(&bias);
                    let base_y = (oy * stride) as isize - pad as isize;
                    let base_x = (ox * stride) as isize - pad as isize;
                    for ic in 0..self.in_channels {
                        for ky in 0..k {
                            let iy = base_y + ky as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..k {
                                let ix = base_x + kx as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let v = input.get(ic, iy as usize, ix as usize).to_acc();
                                let taps = &tap_major
                                    [((ic * k + ky) * k + kx) * oc_n..((ic * k + ky) * k + kx + 1) * oc_n];
                                for (a, t) in acc.iter_mut().zip(taps) {
                                    *a += t * v;
                                }
                            }
                        }
                    }
                    for (oc, a) in acc.iter().enumerate() {
                        row[oc * out_w + ox] = T::from_acc(*a);
                    }
                }
                row
            })
            .collect();

        let mut out = Tensor3::zeros(oc_n, out_h, out_w);
        for (oy, row) in rows.iter().enumerate() {
            for oc in 0..oc_n {
                for ox in 0..out_w {
                    out.set(oc, oy, ox, row[oc * out_w + ox]);
                }
            }
        }
        Ok(out)
    }
}

/// 3x3x3 convolution over all three axes of a tensor, zero padded, one
/// scalar kernel (single feature channel in and out).
#[derive(Debug, Clone)]
pub struct Kernel3x3x3<T> {
    taps: [T; 27],
    bias: T,
}

impl<T: Scalar> Kernel3x3x3<T> {
    pub fn new(taps: [T; 27], bias: T) -> Self {
        Self { taps, bias }
    }

    /// Fan-in scaled uniform init (fan-in 27), zero bias.
    pub fn seeded(gen: &mut SeededGenerator) -> Self {
        let bound = (6.0 / 27.0f64).sqrt();
        let v: Vec<T> = gen.uniform_vec(27, bound);
        let mut taps = [T::zero(); 27];
        taps.copy_from_slice(&v);
        Self {
            taps,
            bias: T::zero(),
        }
    }

    pub fn apply(&self, input: &Tensor3<T>) -> Tensor3<T> {
        let (d, h, w) = (input.channels(), input.height(), input.width());
        let mut out = Tensor3::zeros(d, h, w);
        for z in 0..d {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = self.bias.to_acc();
                    for dz in 0..3usize {
                        let iz = z as isize + dz as isize - 1;
                        if iz < 0 || iz >= d as isize {
                            continue;
                        }
                        for dy in 0..3usize {
                            let iy = y as isize + dy as isize - 1;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for dx in 0..3usize {
                                let ix = x as isize + dx as isize - 1;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let t = self.taps[(dz * 3 + dy) * 3 + dx].to_acc();
                                acc += t * input.get(iz as usize, iy as usize, ix as usize).to_acc();
                            }
                        }
                    }
                    out.set(z, y, x, T::from_acc(acc));
                }
            }
        }
        out
    }
}

pub fn relu<T: Scalar>(t: &Tensor3<T>) -> Tensor3<T> {
    t.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub fn sigmoid<T: Scalar>(t: &Tensor3<T>) -> Tensor3<T> {
    t.map(|v| T::from_acc(1.0 / (1.0 + (-v.to_acc()).exp())))
}

pub fn tanh<T: Scalar>(t: &Tensor3<T>) -> Tensor3<T> {
    t.map(|v| T::from_acc(v.to_acc().tanh()))
}

/// 2x2 average pooling with stride 2. Odd trailing rows/columns are pooled
/// over the cells that exist.
pub fn avgpool2<T: Scalar>(t: &Tensor3<T>) -> Tensor3<T> {
    let out_h = t.height().div_ceil(2);
    let out_w = t.width().div_ceil(2);
    Tensor3::from_fn(t.channels(), out_h, out_w, |c, y, x| {
        let mut acc = 0.0f64;
        let mut n = 0usize;
        for dy in 0..2 {
            for dx in 0..2 {
                let iy = y * 2 + dy;
                let ix = x * 2 + dx;
                if iy < t.height() && ix < t.width() {
                    acc += t.get(c, iy, ix).to_acc();
                    n += 1;
                }
            }
        }
        T::from_acc(acc / n as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_passes_input_through() {
        let mut w = vec![0.0f32; 2 * 2 * 9];
        // out 0 <- in 0 center tap, out 1 <- in 1 center tap
        w[0 * 2 * 9 + 0 * 9 + 4] = 1.0;
        w[1 * 2 * 9 + 1 * 9 + 4] = 1.0;
        let conv = ConvWeights::new(2, 2, 3, w, vec![0.0; 2]).unwrap();
        let input = Tensor3::<f32>::from_fn(2, 4, 5, |c, y, x| (c * 100 + y * 5 + x) as f32);
        let out = conv.apply(&input, 1).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn stride_two_halves_rounding_up() {
        let conv = ConvWeights::<f32>::zeros(1, 1, 3).unwrap();
        let input = Tensor3::<f32>::zeros(1, 7, 10);
        let out = conv.apply(&input, 2).unwrap();
        assert_eq!((out.height(), out.width()), (4, 5));
    }

    #[test]
    fn bias_reaches_every_cell() {
        let conv = ConvWeights::new(1, 1, 3, vec![0.0f32; 9], vec![0.75]).unwrap();
        let out = conv.apply(&Tensor3::<f32>::zeros(1, 3, 3), 1).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.75));
    }

    #[test]
    fn zero_padding_shrinks_border_sums() {
        // All-ones kernel over an all-ones input counts the taps in frame.
        let conv = ConvWeights::new(1, 1, 3, vec![1.0f32; 9], vec![0.0]).unwrap();
        let out = conv.apply(&Tensor3::<f32>::filled(1, 3, 3, 1.0), 1).unwrap();
        assert_eq!(out.get(0, 1, 1), 9.0);
        assert_eq!(out.get(0, 0, 0), 4.0);
        assert_eq!(out.get(0, 0, 1), 6.0);
    }

    #[test]
    fn conv_is_deterministic_across_thread_counts() {
        let mut gen = SeededGenerator::new(11);
        let conv = ConvWeights::<f32>::seeded(&mut gen, 8, 5, 3).unwrap();
        let input = crate::rng::seeded_normal(&mut gen, 5, 9, 13, 1.0).unwrap();
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = pool1.install(|| conv.apply(&input, 2)).unwrap();
        let b = pool4.install(|| conv.apply(&input, 2)).unwrap();
        let bits = |t: &Tensor3<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn kernel3d_center_tap_is_identity() {
        let mut taps = [0.0f32; 27];
        taps[13] = 1.0; // (dz, dy, dx) = (1, 1, 1)
        let k = Kernel3x3x3::new(taps, 0.0);
        let input = Tensor3::<f32>::from_fn(3, 4, 5, |c, y, x| (c + 2 * y + 3 * x) as f32 - 5.0);
        assert_eq!(k.apply(&input), input);
    }

    #[test]
    fn activations_hit_known_points() {
        let t = Tensor3::<f32>::new(1, 1, 3, vec![-2.0, 0.0, 3.0]).unwrap();
        assert_eq!(relu(&t).data(), &[0.0, 0.0, 3.0]);
        let s = sigmoid(&t);
        assert_eq!(s.data()[1], 0.5);
        assert!(s.data()[0] > 0.0 && s.data()[0] < 0.5);
        assert!(s.data()[2] > 0.5 && s.data()[2] < 1.0);
        assert_eq!(tanh(&t).data()[1], 0.0);
    }

    #[test]
    fn avgpool_handles_odd_edges() {
        let t = Tensor3::<f32>::from_fn(1, 3, 3, |_, y, x| (y * 3 + x) as f32);
        let p = avgpool2(&t);
        assert_eq!((p.height(), p.width()), (2, 2));
        assert_eq!(p.get(0, 0, 0), (0.0 + 1.0 + 3.0 + 4.0) / 4.0);
        assert_eq!(p.get(0, 0, 1), (2.0 + 5.0) / 2.0);
        assert_eq!(p.get(0, 1, 1), 8.0);
    }
}
