//! End-to-end orchestration: a rectified image pair in, a refined
//! full-resolution disparity map out.
//!
//! The stages run in a fixed order: pad both images so the encoder's
//! stride ladder divides cleanly, encode them with shared seeded weights,
//! gate the matching features with motif attention, build the grouped and
//! motif correlation volumes, combine them, read an initial disparity by
//! soft-argmin, refine it iteratively at quarter resolution, upsample x4
//! (scaling values by 4, since disparity is measured in pixels), crop the
//! padding away, and optionally sharpen against the photometric
//! reconstruction error at full resolution.
//!
//! Every weight in the run derives from one seed through labeled child
//! streams, so a (seed, inputs, config) triple fully determines the output
//! bit for bit, at any thread count.

use serde::{Deserialize, Serialize};

use crate::error::{MochaError, Result};
use crate::features::{encode_toy, EncoderConfig, FeatureSet};
use crate::motif::{mcga_apply, mcga_apply_observed, GraphObserver, McgaConfig, Normalization};
use crate::remp::{recon_error, remp_refine, CameraRig, RempWeights, WarpMode};
use crate::rng::SeededGenerator;
use crate::scalar::Scalar;
use crate::tensor::{next_multiple, DisparityMap, Tensor3};
use crate::update::{run_refinement, UpdateConfig, UpdateWeights};
use crate::volume::{combine, group_corr, init_disparity, motif_corr, GroupedVolume, VolumeConv};

/// Channel count of the quarter-resolution features; the group count must
/// divide it.
const MATCH_CHANNELS: usize = 32;

/// Full pipeline configuration. Serialized as JSON with exactly these
/// field names; missing fields take the defaults, unknown fields are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed for every weight stream. `None` falls back to 0; the
    /// CLI fills it from `--seed` or `MOCHA_SEED` first.
    pub seed: Option<u64>,
    /// Channel groups of the attention and correlation stages.
    pub n_groups: usize,
    /// Motif window side length (the supported value is 3).
    pub window: usize,
    /// Vote-weight normalization of the motif extraction.
    pub normalization: Normalization,
    /// Wavelet decomposition depth of the attention stage.
    pub wavelet_levels: usize,
    /// Largest representable disparity at full resolution, in pixels.
    pub max_disparity: usize,
    /// Refinement iterations.
    pub iterations: usize,
    /// Decay of the sequence-loss evaluator.
    pub gamma: f64,
    /// Direction the right image is sampled in: -1 looks leftward.
    pub disparity_sign: i8,
    /// Correlation lookup radius of the refinement operator.
    pub lookup_radius: usize,
    /// Toggle: motif correlation volume (off replaces it with ones).
    pub mcg: bool,
    /// Toggle: wavelet decomposition inside motif attention.
    pub wavelet: bool,
    /// Toggle: full-resolution reconstruction-error refinement.
    pub remp: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: None,
            n_groups: 8,
            window: 3,
            normalization: Normalization::TotalChannels,
            wavelet_levels: 2,
            max_disparity: 192,
            iterations: 22,
            gamma: 0.9,
            disparity_sign: -1,
            lookup_radius: 4,
            mcg: true,
            wavelet: true,
            remp: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_groups == 0 || MATCH_CHANNELS % self.n_groups != 0 {
            return Err(MochaError::Config(format!(
                "n_groups must divide the {MATCH_CHANNELS} matching channels, got {}",
                self.n_groups
            )));
        }
        if MATCH_CHANNELS / self.n_groups < 2 {
            return Err(MochaError::Config(format!(
                "{} groups leave fewer than two channels per group",
                self.n_groups
            )));
        }
        self.mcga_config().validate()?;
        if self.max_disparity == 0 {
            return Err(MochaError::Config("max_disparity must be >= 1".into()));
        }
        if self.iterations == 0 {
            return Err(MochaError::Config("iterations must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(MochaError::Config(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if self.disparity_sign != -1 && self.disparity_sign != 1 {
            return Err(MochaError::Config(format!(
                "disparity_sign must be -1 or +1, got {}",
                self.disparity_sign
            )));
        }
        Ok(())
    }

    pub fn resolved_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Disparity count of the quarter-resolution volume: the full-range
    /// count divided by 4, rounded up to a multiple of 8.
    pub fn volume_depth(&self) -> usize {
        next_multiple(self.max_disparity.div_ceil(4), 8)
    }

    fn mcga_config(&self) -> McgaConfig {
        McgaConfig {
            n_groups: self.n_groups,
            window: self.window,
            normalization: self.normalization,
            levels: self.wavelet_levels,
            self_exclusion: true,
            wavelet: self.wavelet,
        }
    }
}

/// Hooks for inspecting the motif graphs built during a match. The
/// observers see every graph of the respective view's attention pass.
pub struct DumpOptions<'a, T> {
    pub left_graphs: Option<&'a mut dyn GraphObserver<T>>,
    pub right_graphs: Option<&'a mut dyn GraphObserver<T>>,
}

impl<T> Default for DumpOptions<'_, T> {
    fn default() -> Self {
        Self {
            left_graphs: None,
            right_graphs: None,
        }
    }
}

/// Everything a match produces beyond the final map, kept for dumps and
/// evaluation.
#[derive(Debug, Clone)]
pub struct MatchOutput<T> {
    /// Final full-resolution disparity, clamped to `[0, max_disparity]`.
    pub disparity: DisparityMap<T>,
    /// Soft-argmin initialization at quarter resolution.
    pub init: DisparityMap<T>,
    /// Every refinement iterate at quarter resolution.
    pub iterates: Vec<DisparityMap<T>>,
    /// Combined cost volume at quarter resolution (depth in the channel
    /// slot).
    pub combined: Tensor3<T>,
}

fn check_pair<T: Scalar>(left: &Tensor3<T>, right: &Tensor3<T>) -> Result<()> {
    if left.channels() != 3 || right.channels() != 3 {
        return Err(MochaError::Dimension(format!(
            "stereo pair must be 3-channel, got {} and {}",
            left.channels(),
            right.channels()
        )));
    }
    if left.height() != right.height() || left.width() != right.width() {
        return Err(MochaError::Dimension(format!(
            "left {}x{} vs right {}x{}",
            left.height(),
            left.width(),
            right.height(),
            right.width()
        )));
    }
    if left.height() == 0 || left.width() == 0 {
        return Err(MochaError::Dimension("empty images".into()));
    }
    Ok(())
}

/// Runs the full pipeline on a rectified pair.
pub fn match_pair<T: Scalar>(
    left: &Tensor3<T>,
    right: &Tensor3<T>,
    cfg: &PipelineConfig,
) -> Result<MatchOutput<T>> {
    match_pair_with(left, right, cfg, DumpOptions::default())
}

/// [`match_pair`] with graph-inspection hooks.
pub fn match_pair_with<T: Scalar>(
    left: &Tensor3<T>,
    right: &Tensor3<T>,
    cfg: &PipelineConfig,
    mut dumps: DumpOptions<'_, T>,
) -> Result<MatchOutput<T>> {
    cfg.validate()?;
    check_pair(left, right)?;
    let (orig_h, orig_w) = (left.height(), left.width());

    // Pad so every stride-2 stage divides cleanly; crop again at the end.
    let pad_h = next_multiple(orig_h.max(32), 16);
    let pad_w = next_multiple(orig_w.max(32), 16);
    let left_p = left.pad_edge_spatial(pad_h, pad_w)?;
    let right_p = right.pad_edge_spatial(pad_h, pad_w)?;

    let root = SeededGenerator::new(cfg.resolved_seed());
    let enc_cfg = EncoderConfig {
        seed: root.child("encoder").seed(),
        c4: MATCH_CHANNELS,
        c8: MATCH_CHANNELS,
        c16: MATCH_CHANNELS,
    };
    let f_l = encode_toy(&left_p, &enc_cfg)?;
    let f_r = encode_toy(&right_p, &enc_cfg)?;

    let depth = cfg.volume_depth();
    let grouped = group_corr(
        &f_l.match_features,
        &f_r.match_features,
        depth,
        cfg.n_groups,
        cfg.disparity_sign,
    )?;

    let motif_volume = if cfg.mcg {
        let attention = cfg.mcga_config();
        let gate = |f: &FeatureSet<T>,
                    observer: Option<&mut dyn GraphObserver<T>>|
         -> Result<Tensor3<T>> {
            match observer {
                Some(obs) => mcga_apply_observed(&f.match_features, &attention, obs),
                None => mcga_apply(&f.match_features, &attention),
            }
        };
        let fmc_l = gate(&f_l, dumps.left_graphs.take())?;
        let fmc_r = gate(&f_r, dumps.right_graphs.take())?;
        let conv = VolumeConv::seeded(&mut root.child("volume.conv"));
        motif_corr(&fmc_l, &fmc_r, depth, cfg.n_groups, cfg.disparity_sign, &conv)?
    } else {
        GroupedVolume::new(
            depth,
            grouped.height(),
            grouped.width(),
            cfg.n_groups,
            vec![T::one(); depth * grouped.height() * grouped.width() * cfg.n_groups],
        )?
    };

    let combined = combine(&grouped, &motif_volume)?;
    let init = init_disparity(&combined, &VolumeConv::seeded(&mut root.child("init.conv")))?;

    let update_cfg = UpdateConfig {
        lookup_radius: cfg.lookup_radius,
        ..UpdateConfig::default()
    };
    let weights = UpdateWeights::seeded(
        &root.child("update"),
        &update_cfg,
        [
            f_l.context16.channels(),
            f_l.context8.channels(),
            f_l.context4.channels(),
        ],
    )?;
    let (iterates, _trace) = run_refinement(&combined, &f_l, &init, cfg.iterations, &weights)?;

    // Upsample x4 (values scale with resolution), crop the padding, clamp.
    let max_d = T::from_acc(cfg.max_disparity as f64);
    let last = iterates.last().expect("at least one iteration");
    let up = last
        .values()
        .map(|v| v * T::from_acc(4.0))
        .resize_bilinear(pad_h, pad_w)?
        .crop(orig_h, orig_w)?;
    let d_up = DisparityMap::all_valid(up).clamp(T::zero(), max_d);

    let disparity = if cfg.remp {
        // Rectified warping ignores the rig scale; nominal geometry.
        let rig = CameraRig::rectified(
            orig_w.max(1) as f64,
            1.0,
            (orig_w as f64 - 1.0) / 2.0,
            (orig_h as f64 - 1.0) / 2.0,
        );
        let err = recon_error(left, right, &d_up, &rig, WarpMode::Rectified)?;
        let remp_weights = RempWeights::seeded(&root.child("remp"), 3)?;
        remp_refine(&d_up, &err, &remp_weights)?.clamp(T::zero(), max_d)
    } else {
        d_up
    };

    Ok(MatchOutput {
        disparity,
        init,
        iterates,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_normal;

    fn noise_pair(h: usize, w: usize, seed: u64) -> (Tensor3<f32>, Tensor3<f32>) {
        let l = seeded_normal(&mut SeededGenerator::new(seed), 3, h, w, 0.5).unwrap();
        let r = seeded_normal(&mut SeededGenerator::new(seed + 1), 3, h, w, 0.5).unwrap();
        (l, r)
    }

    fn fast_config() -> PipelineConfig {
        PipelineConfig {
            max_disparity: 16,
            iterations: 2,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn config_defaults_and_json_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.n_groups, 8);
        assert_eq!(cfg.window, 3);
        assert_eq!(cfg.wavelet_levels, 2);
        assert_eq!(cfg.max_disparity, 192);
        assert_eq!(cfg.iterations, 22);
        assert_eq!(cfg.gamma, 0.9);
        assert_eq!(cfg.disparity_sign, -1);
        assert_eq!(cfg.lookup_radius, 4);
        assert!(cfg.mcg && cfg.wavelet && cfg.remp);
        assert_eq!(cfg.volume_depth(), 48);

        let json = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);

        let partial: PipelineConfig =
            serde_json::from_str(r#"{"seed": 7, "iterations": 3, "mcg": false}"#).unwrap();
        assert_eq!(partial.seed, Some(7));
        assert_eq!(partial.iterations, 3);
        assert!(!partial.mcg);
        assert_eq!(partial.n_groups, 8);

        assert!(serde_json::from_str::<PipelineConfig>(r#"{"iters": 3}"#).is_err());
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let bad = |f: fn(&mut PipelineConfig)| {
            let mut cfg = PipelineConfig::default();
            f(&mut cfg);
            cfg.validate()
        };
        assert!(matches!(
            bad(|c| c.n_groups = 5),
            Err(MochaError::Config(_))
        ));
        assert!(matches!(
            bad(|c| c.n_groups = 32),
            Err(MochaError::Config(_))
        ));
        assert!(matches!(bad(|c| c.window = 5), Err(MochaError::Config(_))));
        assert!(matches!(
            bad(|c| c.disparity_sign = 0),
            Err(MochaError::Config(_))
        ));
        assert!(matches!(bad(|c| c.gamma = 1.5), Err(MochaError::Config(_))));
        assert!(matches!(
            bad(|c| c.iterations = 0),
            Err(MochaError::Config(_))
        ));
        assert!(matches!(
            bad(|c| c.wavelet_levels = 0),
            Err(MochaError::Config(_))
        ));
        assert!(PipelineConfig::default().validate().is_ok());
    }

    #[test]
    fn volume_depth_rounds_up_to_multiples_of_eight() {
        let depth = |max_d: usize| PipelineConfig {
            max_disparity: max_d,
            ..PipelineConfig::default()
        }
        .volume_depth();
        assert_eq!(depth(192), 48);
        assert_eq!(depth(100), 32);
        assert_eq!(depth(1), 8);
        assert_eq!(depth(33), 16);
    }

    #[test]
    fn smoke_run_produces_finite_in_range_disparity() {
        let (l, r) = noise_pair(32, 48, 50);
        let cfg = fast_config();
        let out = match_pair(&l, &r, &cfg).unwrap();
        assert_eq!(out.disparity.height(), 32);
        assert_eq!(out.disparity.width(), 48);
        assert_eq!(out.iterates.len(), 2);
        assert_eq!(out.combined.channels(), cfg.volume_depth());
        for v in out.disparity.values().data() {
            assert!(v.is_finite());
            assert!(*v >= 0.0 && *v <= cfg.max_disparity as f32);
        }
    }

    #[test]
    fn padding_crops_back_to_odd_input_sizes() {
        let (l, r) = noise_pair(40, 52, 51);
        let out = match_pair(&l, &r, &fast_config()).unwrap();
        assert_eq!(out.disparity.height(), 40);
        assert_eq!(out.disparity.width(), 52);
    }

    #[test]
    fn reruns_are_bit_identical_and_seeds_matter() {
        let (l, r) = noise_pair(32, 48, 52);
        let mut cfg = fast_config();
        cfg.seed = Some(9);
        let bits = |o: &MatchOutput<f32>| -> Vec<u32> {
            o.disparity.values().data().iter().map(|v| v.to_bits()).collect()
        };
        let a = match_pair(&l, &r, &cfg).unwrap();
        let b = match_pair(&l, &r, &cfg).unwrap();
        assert_eq!(bits(&a), bits(&b));
        cfg.seed = Some(10);
        let c = match_pair(&l, &r, &cfg).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn mcg_toggle_changes_the_combined_volume() {
        let (l, r) = noise_pair(32, 48, 53);
        let cfg_on = fast_config();
        let cfg_off = PipelineConfig {
            mcg: false,
            ..fast_config()
        };
        let on = match_pair(&l, &r, &cfg_on).unwrap();
        let off = match_pair(&l, &r, &cfg_off).unwrap();
        let max_diff = on
            .combined
            .data()
            .iter()
            .zip(off.combined.data())
            .map(|(a, b)| (a - b).abs() as f64)
            .fold(0.0, f64::max);
        assert!(max_diff > 0.0);
    }

    #[test]
    fn remp_toggle_changes_the_output() {
        let (l, r) = noise_pair(32, 48, 54);
        let with = match_pair(&l, &r, &fast_config()).unwrap();
        let without = match_pair(
            &l,
            &r,
            &PipelineConfig {
                remp: false,
                ..fast_config()
            },
        )
        .unwrap();
        assert_ne!(
            with.disparity.values().data(),
            without.disparity.values().data()
        );
    }

    #[test]
    fn graph_observers_see_both_views() {
        struct Counter(usize);
        impl GraphObserver<f32> for Counter {
            fn observe(&mut self, _subband: &str, _graph: &crate::motif::MotifGraph<f32>) {
                self.0 += 1;
            }
        }
        let (l, r) = noise_pair(32, 48, 55);
        let mut left = Counter(0);
        let mut right = Counter(0);
        match_pair_with(
            &l,
            &r,
            &fast_config(),
            DumpOptions {
                left_graphs: Some(&mut left),
                right_graphs: Some(&mut right),
            },
        )
        .unwrap();
        assert!(left.0 > 0);
        assert_eq!(left.0, right.0);
    }

    #[test]
    fn mismatched_pairs_are_rejected() {
        let (l, _) = noise_pair(32, 48, 56);
        let (_, r) = noise_pair(32, 32, 57);
        assert!(matches!(
            match_pair(&l, &r, &fast_config()),
            Err(MochaError::Dimension(_))
        ));
        let gray = Tensor3::<f32>::zeros(1, 32, 48);
        assert!(matches!(
            match_pair(&gray, &gray, &fast_config()),
            Err(MochaError::Dimension(_))
        ));
    }
}
