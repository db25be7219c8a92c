//! Deterministic stereo matching built around motif correlation graphs.
//!
//! The crate implements the forward path of a stereo matcher whose attention
//! stage is fully inspectable: feature channels are decomposed with an
//! orthonormal Haar wavelet, recurring 3x3 patterns ("motifs") are mined per
//! channel group with nearest-neighbor vote graphs, and the reconstructed
//! motif planes gate the features that feed a grouped correlation volume.
//! Disparity is initialized by soft-argmin over the combined volume, refined
//! by a seeded multi-scale LSTM update operator, and sharpened at full
//! resolution with a reconstruction-error module.
//!
//! Nothing here is trained. Every weight comes from a documented seeded
//! stream, so identical inputs and seeds give bit-identical outputs on any
//! platform and any thread count. That makes the pipeline a test bed for the
//! structural properties of the architecture rather than an accuracy claim.
//!
//! All dense math is generic over the [`Scalar`] precision (`f32` or `f64`).
//! The pipeline itself runs in `f32`; the aliases below fix that choice once.

mod conv;
mod error;
mod features;
mod formats;
mod metrics;
mod motif;
mod pipeline;
mod remp;
mod rng;
mod scalar;
mod selftest;
mod tensor;
mod update;
mod volume;
mod wavelet;

pub use conv::{avgpool2, relu, sigmoid, tanh, ConvWeights, Kernel3x3x3};
pub use error::{MochaError, Result};
pub use features::{encode_toy, load_features, save_features, EncoderConfig, FeatureSet};
pub use formats::{
    colorize_disparity, read_pfm, read_pnm, write_pfm, write_pnm, PnmImage,
};
pub use metrics::{
    bad_ratio, epe, evaluate, mask_nonpositive, sequence_loss, smooth_l1, smooth_l1_mean,
    threshold_key, EvalReport, SEQUENCE_GAMMA,
};
pub use motif::{
    build_graph, euclidean_distance, extract_motif, graph_to_dot, graph_to_json, mcga_apply,
    mcga_apply_observed, motif_pair_1d, stitch_motifs, tile_patches, GraphObserver, McgaConfig,
    MotifGraph, Normalization, PatchSequence, TileGrid,
};
pub use pipeline::{match_pair, match_pair_with, DumpOptions, MatchOutput, PipelineConfig};
pub use remp::{
    plane_homography, recon_error, remp_refine, remp_refine_traced, CameraRig, ReconError,
    RempBranches, RempWeights, WarpMode,
};
pub use rng::{seeded_normal, seeded_uniform, SeededGenerator};
pub use scalar::Scalar;
pub use selftest::{
    run_selftest, run_selftest_with, synthetic_shifted_pair, SelftestReport, SuiteResult,
    SUITE_NAMES,
};
pub use tensor::{hadamard, hadamard_plane, DisparityMap, Tensor2, Tensor3};
pub use update::{
    lstm_step, predict_delta, run_refinement, GateStats, GateWeights, LstmScaleState,
    RefinementTrace, UpdateConfig, UpdateWeights,
};
pub use volume::{
    combine, corr_lookup, group_corr, init_disparity, motif_corr, read_volume, write_volume,
    GroupedVolume, VolumeConv, VolumeData,
};
pub use wavelet::{dwt2, dwt3, idwt2, SubbandId, SubbandKind, WaveletLevel, WaveletPyramid};

/// Single-precision plane, the pipeline's working type.
pub type Tensor2f = Tensor2<f32>;
/// Single-precision channel tensor.
pub type Tensor3f = Tensor3<f32>;
/// Single-precision disparity map.
pub type DisparityMapf = DisparityMap<f32>;
/// Double-precision plane, used by oracles and cross-checks.
pub type Tensor2d = Tensor2<f64>;
/// Double-precision channel tensor.
pub type Tensor3d = Tensor3<f64>;
