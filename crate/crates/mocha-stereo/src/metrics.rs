//! Disparity evaluation metrics and the training-style sequence loss, used
//! here purely as measurements on produced disparity sequences.
//!
//! All reductions run over the pixels where both the estimate and the
//! ground truth are valid; an empty intersection is an error rather than a
//! silent zero. Sparse ground truth (zeros marking missing pixels) is
//! handled by invalidating non-positive values up front.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{MochaError, Result};
use crate::scalar::Scalar;
use crate::tensor::DisparityMap;

fn joint_mask<T: Scalar>(d: &DisparityMap<T>, gt: &DisparityMap<T>) -> Result<Vec<bool>> {
    if d.height() != gt.height() || d.width() != gt.width() {
        return Err(MochaError::Dimension(format!(
            "estimate {}x{} vs ground truth {}x{}",
            d.height(),
            d.width(),
            gt.height(),
            gt.width()
        )));
    }
    let mask: Vec<bool> = d
        .valid()
        .iter()
        .zip(gt.valid())
        .map(|(a, b)| *a && *b)
        .collect();
    if mask.iter().any(|m| *m) {
        Ok(mask)
    } else {
        Err(MochaError::Evaluation(
            "no pixel is valid in both maps".into(),
        ))
    }
}

fn masked_mean<T: Scalar>(
    d: &DisparityMap<T>,
    gt: &DisparityMap<T>,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    let mask = joint_mask(d, gt)?;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for (i, keep) in mask.iter().enumerate() {
        if *keep {
            let (y, x) = (i / d.width(), i % d.width());
            sum += f(d.get(y, x).to_acc() - gt.get(y, x).to_acc());
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Mean absolute disparity error over jointly valid pixels.
pub fn epe<T: Scalar>(d: &DisparityMap<T>, gt: &DisparityMap<T>) -> Result<f64> {
    masked_mean(d, gt, f64::abs)
}

/// Percentage of jointly valid pixels whose absolute error strictly
/// exceeds `delta`.
pub fn bad_ratio<T: Scalar>(
    d: &DisparityMap<T>,
    gt: &DisparityMap<T>,
    delta: f64,
) -> Result<f64> {
    masked_mean(d, gt, |e| if e.abs() > delta { 100.0 } else { 0.0 })
}

/// The smooth-L1 penalty: `0.5 x^2` inside the unit interval, `|x| - 0.5`
/// outside.
pub fn smooth_l1(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * x * x
    } else {
        a - 0.5
    }
}

/// Masked mean of [`smooth_l1`] over the error map.
pub fn smooth_l1_mean<T: Scalar>(d: &DisparityMap<T>, gt: &DisparityMap<T>) -> Result<f64> {
    masked_mean(d, gt, smooth_l1)
}

/// Default decay of the sequence loss.
pub const SEQUENCE_GAMMA: f64 = 0.9;

/// Sequence loss of a refinement run: the smooth-L1 mean of the initial
/// disparity plus the decayed absolute means of every iterate,
/// `sum_k gamma^(n-k) * mean|d_k - gt|`, so later iterations weigh more.
pub fn sequence_loss<T: Scalar>(
    d0: &DisparityMap<T>,
    iterates: &[DisparityMap<T>],
    gt: &DisparityMap<T>,
    gamma: f64,
) -> Result<f64> {
    if iterates.is_empty() {
        return Err(MochaError::Config(
            "sequence loss needs at least one iterate".into(),
        ));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(MochaError::Config(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let mut loss = smooth_l1_mean(d0, gt)?;
    let n = iterates.len();
    for (k, d) in iterates.iter().enumerate() {
        loss += gamma.powi((n - 1 - k) as i32) * epe(d, gt)?;
    }
    Ok(loss)
}

/// Marks non-positive ground-truth pixels invalid (sparse ground truth
/// stores missing disparities as zeros).
pub fn mask_nonpositive<T: Scalar>(gt: &DisparityMap<T>) -> DisparityMap<T> {
    let valid: Vec<bool> = gt
        .valid()
        .iter()
        .zip(gt.values().data())
        .map(|(v, value)| *v && value.to_acc() > 0.0)
        .collect();
    DisparityMap::new(gt.values().clone(), valid).expect("mask length matches by construction")
}

/// Evaluation summary serialized by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// Mean absolute error in pixels.
    pub epe: f64,
    /// Outlier percentage per threshold, keyed by the formatted threshold.
    pub bad: BTreeMap<String, f64>,
    /// Number of jointly valid pixels.
    pub valid: usize,
    /// Sequence loss, when a refinement sequence was evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
}

/// Formats a threshold as a JSON map key: integral values keep one decimal
/// ("1.0"), others print as-is.
pub fn threshold_key(delta: f64) -> String {
    if delta.fract() == 0.0 {
        format!("{delta:.1}")
    } else {
        format!("{delta}")
    }
}

/// Builds the full report for one estimate against ground truth.
pub fn evaluate<T: Scalar>(
    d: &DisparityMap<T>,
    gt: &DisparityMap<T>,
    thresholds: &[f64],
    loss: Option<f64>,
) -> Result<EvalReport> {
    let mask = joint_mask(d, gt)?;
    let mut bad = BTreeMap::new();
    for t in thresholds {
        bad.insert(threshold_key(*t), bad_ratio(d, gt, *t)?);
    }
    Ok(EvalReport {
        epe: epe(d, gt)?,
        bad,
        valid: mask.iter().filter(|m| **m).count(),
        loss,
    })
}
