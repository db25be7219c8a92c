//! Iterative disparity refinement with a three-scale convolutional LSTM.
//!
//! Each iteration walks the scale ladder coarse to fine: a persistent LSTM
//! runs at sixteenth resolution on its context features, its hidden and
//! cell states are upsampled x2 bilinearly and serve as the previous state
//! of the eighth-resolution step, and that state is upsampled again into
//! the quarter-resolution step. Only the finest step sees the cost volume:
//! its input stacks the quarter-resolution context, correlation values
//! sampled around the current disparity, and the disparity itself. A 1x1
//! head on the finest hidden state predicts an additive disparity delta.
//!
//! The structure gives checkable guarantees independent of the (seeded)
//! weights: gates stay strictly inside (0, 1), candidate cells inside
//! (-1, 1), the cell inf-norm grows by at most 1 per step, and disparities
//! accumulate exactly as the sum of the predicted deltas.

use crate::conv::ConvWeights;
use crate::error::{MochaError, Result};
use crate::features::FeatureSet;
use crate::rng::SeededGenerator;
use crate::scalar::Scalar;
use crate::tensor::{DisparityMap, Tensor2, Tensor3};
use crate::volume::corr_lookup;

/// Shape knobs of the update operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateConfig {
    /// Hidden/cell channels at every scale.
    pub hidden: usize,
    /// Correlation lookup radius; the finest step sees `2 * radius + 1`
    /// correlation channels.
    pub lookup_radius: usize,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            lookup_radius: 4,
        }
    }
}

impl UpdateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(MochaError::Config("hidden channels must be >= 1".into()));
        }
        Ok(())
    }
}

/// The four gate convolutions of one scale, each 3x3 over the concatenated
/// `[hidden, input]` channels.
#[derive(Debug, Clone)]
pub struct GateWeights<T> {
    pub forget: ConvWeights<T>,
    pub input: ConvWeights<T>,
    pub cell: ConvWeights<T>,
    pub output: ConvWeights<T>,
}

impl<T: Scalar> GateWeights<T> {
    fn seeded(gen: &SeededGenerator, hidden: usize, x_channels: usize) -> Result<Self> {
        let make = |label: &str| -> Result<ConvWeights<T>> {
            ConvWeights::seeded(&mut gen.child(label), hidden, hidden + x_channels, 3)
        };
        Ok(Self {
            forget: make("forget")?,
            input: make("input")?,
            cell: make("cell")?,
            output: make("output")?,
        })
    }

    fn zeros(hidden: usize, x_channels: usize) -> Result<Self> {
        let make = || ConvWeights::zeros(hidden, hidden + x_channels, 3);
        Ok(Self {
            forget: make()?,
            input: make()?,
            cell: make()?,
            output: make()?,
        })
    }

    fn x_channels(&self, hidden: usize) -> usize {
        self.forget.in_channels() - hidden
    }
}

/// All weights of the refinement operator.
#[derive(Debug, Clone)]
pub struct UpdateWeights<T> {
    /// Sixteenth-resolution gates.
    pub scale1: GateWeights<T>,
    /// Eighth-resolution gates.
    pub scale2: GateWeights<T>,
    /// Quarter-resolution gates.
    pub scale3: GateWeights<T>,
    /// 1x1 disparity head on the finest hidden state.
    pub head: ConvWeights<T>,
    hidden: usize,
    lookup_radius: usize,
}

impl<T: Scalar> UpdateWeights<T> {
    /// Draws all gate and head weights from labeled child streams of `gen`.
    /// `ctx_channels` are the context channel counts at scales 1/16, 1/8,
    /// and 1/4 (the finest input additionally receives the correlation
    /// lookup channels and the current disparity).
    pub fn seeded(
        gen: &SeededGenerator,
        cfg: &UpdateConfig,
        ctx_channels: [usize; 3],
    ) -> Result<Self> {
        cfg.validate()?;
        let x3 = Self::finest_x_channels(ctx_channels[2], cfg.lookup_radius);
        Ok(Self {
            scale1: GateWeights::seeded(&gen.child("up.s1"), cfg.hidden, ctx_channels[0])?,
            scale2: GateWeights::seeded(&gen.child("up.s2"), cfg.hidden, ctx_channels[1])?,
            scale3: GateWeights::seeded(&gen.child("up.s3"), cfg.hidden, x3)?,
            head: ConvWeights::seeded(&mut gen.child("up.head"), 1, cfg.hidden, 1)?,
            hidden: cfg.hidden,
            lookup_radius: cfg.lookup_radius,
        })
    }

    /// All-zero weights: every step leaves the disparity untouched.
    pub fn zeros(cfg: &UpdateConfig, ctx_channels: [usize; 3]) -> Result<Self> {
        cfg.validate()?;
        let x3 = Self::finest_x_channels(ctx_channels[2], cfg.lookup_radius);
        Ok(Self {
            scale1: GateWeights::zeros(cfg.hidden, ctx_channels[0])?,
            scale2: GateWeights::zeros(cfg.hidden, ctx_channels[1])?,
            scale3: GateWeights::zeros(cfg.hidden, x3)?,
            head: ConvWeights::zeros(1, cfg.hidden, 1)?,
            hidden: cfg.hidden,
            lookup_radius: cfg.lookup_radius,
        })
    }

    fn finest_x_channels(ctx4: usize, radius: usize) -> usize {
        ctx4 + (2 * radius + 1) + 1
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn lookup_radius(&self) -> usize {
        self.lookup_radius
    }
}

/// Hidden and cell state of one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmScaleState<T> {
    pub h: Tensor3<T>,
    pub c: Tensor3<T>,
}

impl<T: Scalar> LstmScaleState<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            h: Tensor3::zeros(channels, height, width),
            c: Tensor3::zeros(channels, height, width),
        }
    }

    fn resized(&self, height: usize, width: usize) -> Result<Self> {
        Ok(Self {
            h: self.h.resize_bilinear(height, width)?,
            c: self.c.resize_bilinear(height, width)?,
        })
    }
}

/// Measured ranges of one LSTM step, used by the invariant checks.
///
/// Gate and candidate stats are taken from the f64 activations before
/// storage rounding; the cell norms are inf-norms of the stored tensors, so
/// successive steps' `before`/`after` values line up. Expected invariants:
/// gates strictly inside (0, 1), candidates strictly inside (-1, 1), and
/// `cell_norm_after <= cell_norm_before + 1` up to storage rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateStats {
    /// Smallest forget/input/output gate activation of the step.
    pub gate_min: f64,
    /// Largest forget/input/output gate activation of the step.
    pub gate_max: f64,
    /// Largest absolute candidate-cell value (tanh output).
    pub candidate_max_abs: f64,
    /// Cell inf-norm before the step.
    pub cell_norm_before: f64,
    /// Cell inf-norm after the step.
    pub cell_norm_after: f64,
}

impl GateStats {
    /// Tolerance for the cell-norm growth bound: the exact-arithmetic bound
    /// is `before + 1`; storing cells at `f32` can round the measured norms
    /// by a relative `2^-24`.
    pub fn cell_bound_tolerance(&self) -> f64 {
        1e-6 * (1.0 + self.cell_norm_before)
    }
}

/// One LSTM step: gates from sigmoid convolutions over `[h, x]`, candidate
/// cell from a tanh convolution, then `c = f * c_prev + i * cand` and
/// `h = o * tanh(c)`.
pub fn lstm_step<T: Scalar>(
    prev: &LstmScaleState<T>,
    x: &Tensor3<T>,
    w: &GateWeights<T>,
) -> Result<(LstmScaleState<T>, GateStats)> {
    if prev.h.height() != x.height() || prev.h.width() != x.width() {
        return Err(MochaError::Dimension(format!(
            "state {}x{} vs input {}x{}",
            prev.h.height(),
            prev.h.width(),
            x.height(),
            x.width()
        )));
    }
    let stacked = Tensor3::concat_channels(&[&prev.h, x])?;
    let f_lin = w.forget.apply(&stacked, 1)?;
    let i_lin = w.input.apply(&stacked, 1)?;
    let o_lin = w.output.apply(&stacked, 1)?;
    let c_lin = w.cell.apply(&stacked, 1)?;

    // Activations and the cell update run in f64 and are rounded to storage
    // precision once, so the range stats describe the computed values, not
    // rounding artifacts.
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let n = prev.c.data().len();
    let mut gate_min = f64::INFINITY;
    let mut gate_max = f64::NEG_INFINITY;
    let mut candidate_max_abs = 0.0f64;
    let mut c_data = Vec::with_capacity(n);
    let mut h_data = Vec::with_capacity(n);
    for idx in 0..n {
        let f = sig(f_lin.data()[idx].to_acc());
        let i = sig(i_lin.data()[idx].to_acc());
        let o = sig(o_lin.data()[idx].to_acc());
        let cand = c_lin.data()[idx].to_acc().tanh();
        gate_min = gate_min.min(f.min(i).min(o));
        gate_max = gate_max.max(f.max(i).max(o));
        candidate_max_abs = candidate_max_abs.max(cand.abs());
        let c_val = f * prev.c.data()[idx].to_acc() + i * cand;
        c_data.push(T::from_acc(c_val));
        h_data.push(T::from_acc(o * c_val.tanh()));
    }
    let c = Tensor3::new(prev.c.channels(), prev.c.height(), prev.c.width(), c_data)?;
    let h = Tensor3::new(c.channels(), c.height(), c.width(), h_data)?;

    let stats = GateStats {
        gate_min,
        gate_max,
        candidate_max_abs,
        cell_norm_before: prev.c.max_abs(),
        cell_norm_after: c.max_abs(),
    };
    Ok((LstmScaleState { h, c }, stats))
}

/// Applies the 1x1 head to the finest hidden state, yielding the additive
/// disparity delta.
pub fn predict_delta<T: Scalar>(h: &Tensor3<T>, head: &ConvWeights<T>) -> Result<Tensor2<T>> {
    let out = head.apply(h, 1)?;
    if out.channels() != 1 {
        return Err(MochaError::Dimension(format!(
            "disparity head must emit one channel, emitted {}",
            out.channels()
        )));
    }
    Ok(out.channel_plane(0))
}

/// Everything the invariant checks need from a refinement run: the stats of
/// every LSTM step (three per iteration, coarse to fine) and every
/// predicted delta plane.
#[derive(Debug, Clone)]
pub struct RefinementTrace<T> {
    pub steps: Vec<GateStats>,
    pub deltas: Vec<Tensor2<T>>,
}

/// Runs `iters` refinement iterations from `d0`, returning every
/// intermediate disparity `[d_1 .. d_iters]` and the trace.
///
/// The coarse state persists across iterations; between scales the hidden
/// and cell tensors are upsampled x2 bilinearly and become the previous
/// state of the finer step.
pub fn run_refinement<T: Scalar>(
    combined: &Tensor3<T>,
    ctx: &FeatureSet<T>,
    d0: &DisparityMap<T>,
    iters: usize,
    w: &UpdateWeights<T>,
) -> Result<(Vec<DisparityMap<T>>, RefinementTrace<T>)> {
    if iters == 0 {
        return Err(MochaError::Config("iteration count must be >= 1".into()));
    }
    let (h4, w4) = (ctx.context4.height(), ctx.context4.width());
    if d0.height() != h4 || d0.width() != w4 {
        return Err(MochaError::Dimension(format!(
            "initial disparity {}x{} vs quarter-scale context {h4}x{w4}",
            d0.height(),
            d0.width()
        )));
    }
    if combined.height() != h4 || combined.width() != w4 {
        return Err(MochaError::Dimension(format!(
            "cost volume {}x{} vs quarter-scale context {h4}x{w4}",
            combined.height(),
            combined.width()
        )));
    }
    for (tensor, gates, name) in [
        (&ctx.context16, &w.scale1, "sixteenth"),
        (&ctx.context8, &w.scale2, "eighth"),
    ] {
        let want = gates.x_channels(w.hidden);
        if tensor.channels() != want {
            return Err(MochaError::Dimension(format!(
                "{name}-scale context has {} channels, weights expect {want}",
                tensor.channels()
            )));
        }
    }
    let want3 =
        UpdateWeights::<T>::finest_x_channels(ctx.context4.channels(), w.lookup_radius);
    if w.scale3.x_channels(w.hidden) != want3 {
        return Err(MochaError::Dimension(format!(
            "quarter-scale weights expect {} input channels, pipeline provides {want3}",
            w.scale3.x_channels(w.hidden)
        )));
    }

    let mut coarse = LstmScaleState::<T>::zeros(
        w.hidden,
        ctx.context16.height(),
        ctx.context16.width(),
    );
    let mut d = d0.clone();
    let mut outputs = Vec::with_capacity(iters);
    let mut trace = RefinementTrace {
        steps: Vec::with_capacity(iters * 3),
        deltas: Vec::with_capacity(iters),
    };

    for _ in 0..iters {
        let (next_coarse, s1) = lstm_step(&coarse, &ctx.context16, &w.scale1)?;
        coarse = next_coarse;
        trace.steps.push(s1);

        let prev2 = coarse.resized(ctx.context8.height(), ctx.context8.width())?;
        let (mid, s2) = lstm_step(&prev2, &ctx.context8, &w.scale2)?;
        trace.steps.push(s2);

        let prev3 = mid.resized(h4, w4)?;
        let looked = corr_lookup(combined, d.values(), w.lookup_radius)?;
        let d_plane = Tensor3::from_planes(std::slice::from_ref(d.values()))?;
        let x3 = Tensor3::concat_channels(&[&ctx.context4, &looked, &d_plane])?;
        let (fine, s3) = lstm_step(&prev3, &x3, &w.scale3)?;
        trace.steps.push(s3);

        let delta = predict_delta(&fine.h, &w.head)?;
        let values = Tensor2::from_fn(h4, w4, |y, x| d.get(y, x) + delta.get(y, x));
        d = DisparityMap::new(values, d.valid().to_vec())?;
        trace.deltas.push(delta);
        outputs.push(d.clone());
    }
    Ok((outputs, trace))
}
