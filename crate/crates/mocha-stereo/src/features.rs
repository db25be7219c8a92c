//! Seeded toy feature encoder and feature-set serialization.
//!
//! The encoder is a fixed stack of seeded convolutions that turns a
//! 3-channel image into the four tensors the rest of the pipeline consumes:
//! matching features at quarter resolution plus context features at quarter,
//! eighth, and sixteenth resolution. Weights are drawn from labeled child
//! streams of one seed, so the left and right images of a pair are encoded
//! by the very same filters and the whole stage is reproducible bit for bit.

use crate::conv::{relu, ConvWeights};
use crate::error::{MochaError, Result};
use crate::rng::SeededGenerator;
use crate::scalar::Scalar;
use crate::tensor::Tensor3;

/// Encoder shape parameters. The channel counts are per scale; the
/// quarter-resolution count must stay divisible by the group count chosen
/// downstream (the default 32 serves the default 8 groups).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub seed: u64,
    /// Channels of the quarter-resolution matching and context features.
    pub c4: usize,
    /// Channels of the eighth-resolution context features.
    pub c8: usize,
    /// Channels of the sixteenth-resolution context features.
    pub c16: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            c4: 32,
            c8: 32,
            c16: 32,
        }
    }
}

impl EncoderConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c4 == 0 || self.c8 == 0 || self.c16 == 0 {
            return Err(MochaError::Config(
                "encoder channel counts must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Everything the matcher needs from one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet<T> {
    /// Quarter-resolution matching features (linear head, may be negative).
    pub match_features: Tensor3<T>,
    /// Quarter-resolution context features.
    pub context4: Tensor3<T>,
    /// Eighth-resolution context features.
    pub context8: Tensor3<T>,
    /// Sixteenth-resolution context features.
    pub context16: Tensor3<T>,
}

const STEM_CHANNELS: usize = 16;

/// Encodes a 3-channel image with the seeded toy encoder.
///
/// The image height and width must be at least 32 and divisible by 16 so
/// every stride-2 stage halves cleanly; pad with edge replication first if
/// needed. Stages, all 3x3: stem stride 2 (3 -> 16, relu), stride 2
/// (16 -> c4, relu), then a linear matching head (c4 -> c4) and a relu
/// context head (c4 -> c4) at quarter resolution, stride 2 (c4 -> c8, relu)
/// at eighth, stride 2 (c8 -> c16, relu) at sixteenth.
pub fn encode_toy<T: Scalar>(image: &Tensor3<T>, cfg: &EncoderConfig) -> Result<FeatureSet<T>> {
    cfg.validate()?;
    if image.channels() != 3 {
        return Err(MochaError::Dimension(format!(
            "encoder expects a 3-channel image, got {} channels",
            image.channels()
        )));
    }
    let (h, w) = (image.height(), image.width());
    if h < 32 || w < 32 || h % 16 != 0 || w % 16 != 0 {
        return Err(MochaError::Dimension(format!(
            "image {h}x{w} unsupported: sides must be >= 32 and divisible by 16 \
             (pad with edge replication first)"
        )));
    }

    let root = SeededGenerator::new(cfg.seed);
    let conv = |label: &str, out_c: usize, in_c: usize| -> Result<ConvWeights<T>> {
        ConvWeights::seeded(&mut root.child(label), out_c, in_c, 3)
    };

    let stem = relu(&conv("enc.stem", STEM_CHANNELS, 3)?.apply(image, 2)?);
    let quarter = relu(&conv("enc.s2", cfg.c4, STEM_CHANNELS)?.apply(&stem, 2)?);
    let match_features = conv("enc.match", cfg.c4, cfg.c4)?.apply(&quarter, 1)?;
    let context4 = relu(&conv("enc.ctx4", cfg.c4, cfg.c4)?.apply(&quarter, 1)?);
    let context8 = relu(&conv("enc.s3", cfg.c8, cfg.c4)?.apply(&context4, 2)?);
    let context16 = relu(&conv("enc.s4", cfg.c16, cfg.c8)?.apply(&context8, 2)?);

    Ok(FeatureSet {
        match_features,
        context4,
        context8,
        context16,
    })
}

const FEATURE_MAGIC: [u8; 4] = *b"MCFV";
const FEATURE_VERSION: u16 = 1;
/// Resolution divisor of each record, in file order.
const RECORD_DIVISORS: [u8; 4] = [4, 4, 8, 16];

/// Serializes a feature set: magic `MCFV`, `u16` version, `u8` record count,
/// then per record a `u8` resolution divisor, `u32` channels/height/width,
/// and the values as little-endian `f32`. Records are fixed: matching,
/// quarter context, eighth context, sixteenth context.
pub fn save_features<T: Scalar>(fs: &FeatureSet<T>) -> Vec<u8> {
    let records = [
        &fs.match_features,
        &fs.context4,
        &fs.context8,
        &fs.context16,
    ];
    let mut out = Vec::new();
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.push(records.len() as u8);
    for (t, divisor) in records.iter().zip(RECORD_DIVISORS) {
        out.push(divisor);
        for dim in [t.channels(), t.height(), t.width()] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&(v.to_acc() as f32).to_le_bytes());
        }
    }
    out
}

/// Parses [`save_features`] output.
pub fn load_features<T: Scalar>(bytes: &[u8]) -> Result<FeatureSet<T>> {
    let mut at = 0usize;
    let take = |at: &mut usize, n: usize| -> Result<&[u8]> {
        if *at + n > bytes.len() {
            return Err(MochaError::format_at(
                bytes.len(),
                format!("feature file truncated, needed {} more bytes", *at + n - bytes.len()),
            ));
        }
        let s = &bytes[*at..*at + n];
        *at += n;
        Ok(s)
    };

    if take(&mut at, 4)? != FEATURE_MAGIC {
        return Err(MochaError::format_at(0, "bad feature magic"));
    }
    let version = u16::from_le_bytes(take(&mut at, 2)?.try_into().unwrap());
    if version != FEATURE_VERSION {
        return Err(MochaError::format_at(
            4,
            format!("unsupported feature version {version}"),
        ));
    }
    let count = take(&mut at, 1)?[0];
    if count as usize != RECORD_DIVISORS.len() {
        return Err(MochaError::format_at(
            6,
            format!("expected {} feature records, got {count}", RECORD_DIVISORS.len()),
        ));
    }

    let mut tensors = Vec::with_capacity(RECORD_DIVISORS.len());
    for expected_divisor in RECORD_DIVISORS {
        let header_at = at;
        let divisor = take(&mut at, 1)?[0];
        if divisor != expected_divisor {
            return Err(MochaError::format_at(
                header_at,
                format!("expected resolution divisor {expected_divisor}, got {divisor}"),
            ));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            *d = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
        }
        let count = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .and_then(|v| v.checked_mul(4))
            .ok_or_else(|| MochaError::format_at(header_at, "feature dimensions overflow"))?;
        let payload = take(&mut at, count)?;
        let data: Vec<T> = payload
            .chunks_exact(4)
            .map(|c| T::from_acc(f32::from_le_bytes(c.try_into().unwrap()) as f64))
            .collect();
        tensors.push(Tensor3::new(dims[0], dims[1], dims[2], data)?);
    }
    if at != bytes.len() {
        return Err(MochaError::format_at(at, "trailing bytes after feature records"));
    }

    let mut it = tensors.into_iter();
    Ok(FeatureSet {
        match_features: it.next().unwrap(),
        context4: it.next().unwrap(),
        context8: it.next().unwrap(),
        context16: it.next().unwrap(),
    })
}
