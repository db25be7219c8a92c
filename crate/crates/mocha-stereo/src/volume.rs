//! Grouped correlation volumes, their combination, and disparity readout.
//!
//! Features are split into channel groups. For every candidate disparity `d`
//! the left feature at `(h, w)` is compared with the right feature at
//! `(h, w + sign * d)`; `sign = -1` (the default elsewhere) looks leftwards,
//! `sign = +1` rightwards. Comparisons average the per-channel products over
//! the group, and target columns outside the frame contribute zero.
//!
//! Two volumes are built: a plain grouped correlation and a motif-channel
//! correlation whose features pass through a small shared 3x3x3 convolution
//! first. Their elementwise product, summed over groups, is the combined
//! cost volume that seeds ([`init_disparity`]) and feeds ([`corr_lookup`])
//! the iterative refinement.

use rayon::prelude::*;

use crate::conv::Kernel3x3x3;
use crate::error::{MochaError, Result};
use crate::rng::SeededGenerator;
use crate::scalar::Scalar;
use crate::tensor::{DisparityMap, Tensor2, Tensor3};

/// Correlation volume with a group axis: `depth x height x width x groups`,
/// stored with the group index innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedVolume<T> {
    depth: usize,
    height: usize,
    width: usize,
    groups: usize,
    data: Vec<T>,
}

impl<T: Scalar> GroupedVolume<T> {
    pub fn new(
        depth: usize,
        height: usize,
        width: usize,
        groups: usize,
        data: Vec<T>,
    ) -> Result<Self> {
        if data.len() != depth * height * width * groups {
            return Err(MochaError::Dimension(format!(
                "volume {depth}x{height}x{width}x{groups} needs {} values, got {}",
                depth * height * width * groups,
                data.len()
            )));
        }
        Ok(Self {
            depth,
            height,
            width,
            groups,
            data,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, d: usize, h: usize, w: usize, g: usize) -> T {
        debug_assert!(d < self.depth && h < self.height && w < self.width && g < self.groups);
        self.data[((d * self.height + h) * self.width + w) * self.groups + g]
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.to_acc().abs())
            .fold(0.0, f64::max)
    }
}

/// The shared small volume convolution: either a seeded 3x3x3 kernel or an
/// identity bypass for oracle tests.
#[derive(Debug, Clone)]
pub enum VolumeConv<T> {
    Identity,
    Kernel(Kernel3x3x3<T>),
}

impl<T: Scalar> VolumeConv<T> {
    pub fn seeded(gen: &mut SeededGenerator) -> Self {
        VolumeConv::Kernel(Kernel3x3x3::seeded(gen))
    }

    pub fn apply(&self, t: &Tensor3<T>) -> Tensor3<T> {
        match self {
            VolumeConv::Identity => t.clone(),
            VolumeConv::Kernel(k) => k.apply(t),
        }
    }
}

fn check_corr_inputs<T: Scalar>(
    f_l: &Tensor3<T>,
    f_r: &Tensor3<T>,
    max_disparity: usize,
    groups: usize,
    sign: i8,
) -> Result<usize> {
    if f_l.channels() != f_r.channels()
        || f_l.height() != f_r.height()
        || f_l.width() != f_r.width()
    {
        return Err(MochaError::Dimension(format!(
            "left features {}x{}x{} vs right {}x{}x{}",
            f_l.channels(),
            f_l.height(),
            f_l.width(),
            f_r.channels(),
            f_r.height(),
            f_r.width()
        )));
    }
    if max_disparity == 0 {
        return Err(MochaError::Config("disparity count must be >= 1".into()));
    }
    if groups == 0 || f_l.channels() % groups != 0 {
        return Err(MochaError::Config(format!(
            "{} channels cannot form {} equal groups",
            f_l.channels(),
            groups
        )));
    }
    if sign != 1 && sign != -1 {
        return Err(MochaError::Config(format!(
            "disparity sign must be -1 or +1, got {sign}"
        )));
    }
    Ok(f_l.channels() / groups)
}

/// Grouped correlation volume of two feature tensors.
///
/// `out(d, h, w, g)` is the mean over the group's channels of
/// `f_l[c, h, w] * f_r[c, h, w + sign * d]`, zero when the right column
/// falls outside the frame.
pub fn group_corr<T: Scalar>(
    f_l: &Tensor3<T>,
    f_r: &Tensor3<T>,
    max_disparity: usize,
    groups: usize,
    sign: i8,
) -> Result<GroupedVolume<T>> {
    let group_size = check_corr_inputs(f_l, f_r, max_disparity, groups, sign)?;
    let (h, w) = (f_l.height(), f_l.width());
    let slice_len = h * w * groups;

    let slices: Vec<Vec<T>> = (0..max_disparity)
        .into_par_iter()
        .map(|d| {
            let mut slice = vec![T::zero(); slice_len];
            for y in 0..h {
                for x in 0..w {
                    let tx = x as isize + sign as isize * d as isize;
                    if tx < 0 || tx >= w as isize {
                        continue; // out of frame, leave zero
                    }
                    let tx = tx as usize;
                    for g in 0..groups {
                        let mut acc = 0.0f64;
                        for c in g * group_size..(g + 1) * group_size {
                            acc += f_l.get(c, y, x).to_acc() * f_r.get(c, y, tx).to_acc();
                        }
                        slice[(y * w + x) * groups + g] = T::from_acc(acc / group_size as f64);
                    }
                }
            }
            slice
        })
        .collect();

    let mut data = Vec::with_capacity(max_disparity * slice_len);
    for s in slices {
        data.extend(s);
    }
    GroupedVolume::new(max_disparity, h, w, groups, data)
}

/// Motif-channel correlation volume: each group's channel block passes
/// through the shared [`VolumeConv`] (zero padded over channel, height, and
/// width) before the grouped correlation.
pub fn motif_corr<T: Scalar>(
    fmc_l: &Tensor3<T>,
    fmc_r: &Tensor3<T>,
    max_disparity: usize,
    groups: usize,
    sign: i8,
    conv: &VolumeConv<T>,
) -> Result<GroupedVolume<T>> {
    let group_size = check_corr_inputs(fmc_l, fmc_r, max_disparity, groups, sign)?;
    let transform = |f: &Tensor3<T>| -> Result<Tensor3<T>> {
        let mut planes = Vec::with_capacity(f.channels());
        for g in 0..groups {
            let block_planes: Vec<Tensor2<T>> = (g * group_size..(g + 1) * group_size)
                .map(|c| f.channel_plane(c))
                .collect();
            let block = Tensor3::from_planes(&block_planes)?;
            let transformed = conv.apply(&block);
            for c in 0..group_size {
                planes.push(transformed.channel_plane(c));
            }
        }
        Tensor3::from_planes(&planes)
    };
    group_corr(
        &transform(fmc_l)?,
        &transform(fmc_r)?,
        max_disparity,
        groups,
        sign,
    )
}

/// Combined cost volume: the per-group product of the two volumes, summed
/// over groups, yielding `depth x height x width` (depth in the channel
/// slot of the returned tensor).
pub fn combine<T: Scalar>(cg: &GroupedVolume<T>, cc: &GroupedVolume<T>) -> Result<Tensor3<T>> {
    if cg.depth != cc.depth
        || cg.height != cc.height
        || cg.width != cc.width
        || cg.groups != cc.groups
    {
        return Err(MochaError::Dimension(format!(
            "combining {}x{}x{}x{} with {}x{}x{}x{}",
            cg.depth, cg.height, cg.width, cg.groups, cc.depth, cc.height, cc.width, cc.groups
        )));
    }
    let cells = cg.depth * cg.height * cg.width;
    let mut data = Vec::with_capacity(cells);
    for cell in 0..cells {
        let base = cell * cg.groups;
        let mut acc = 0.0f64;
        for g in 0..cg.groups {
            acc += cg.data[base + g].to_acc() * cc.data[base + g].to_acc();
        }
        data.push(T::from_acc(acc));
    }
    Tensor3::new(cg.depth, cg.height, cg.width, data)
}

/// Soft-argmin readout of a combined volume.
///
/// The volume passes through `conv`, then each pixel's scores over the
/// disparity axis go through a max-shifted softmax and the expectation
/// `sum(d * p_d)` becomes the initial disparity. Every pixel is valid.
pub fn init_disparity<T: Scalar>(
    combined: &Tensor3<T>,
    conv: &VolumeConv<T>,
) -> Result<DisparityMap<T>> {
    if combined.channels() == 0 || combined.height() == 0 || combined.width() == 0 {
        return Err(MochaError::Dimension("empty cost volume".into()));
    }
    let logits = conv.apply(combined);
    let depth = logits.channels();
    let values = Tensor2::from_fn(logits.height(), logits.width(), |y, x| {
        let mut max = f64::NEG_INFINITY;
        for d in 0..depth {
            max = max.max(logits.get(d, y, x).to_acc());
        }
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for d in 0..depth {
            let e = (logits.get(d, y, x).to_acc() - max).exp();
            num += d as f64 * e;
            den += e;
        }
        T::from_acc(num / den)
    });
    Ok(DisparityMap::all_valid(values))
}

/// Samples `2 * radius + 1` correlation values around each pixel's current
/// disparity, linearly interpolating along the disparity axis and clamping
/// to the volume's depth range.
pub fn corr_lookup<T: Scalar>(
    combined: &Tensor3<T>,
    d: &Tensor2<T>,
    radius: usize,
) -> Result<Tensor3<T>> {
    if combined.height() != d.height() || combined.width() != d.width() {
        return Err(MochaError::Dimension(format!(
            "volume {}x{} vs disparity {}x{}",
            combined.height(),
            combined.width(),
            d.height(),
            d.width()
        )));
    }
    if combined.channels() == 0 {
        return Err(MochaError::Dimension("empty cost volume".into()));
    }
    let depth = combined.channels();
    let out = Tensor3::from_fn(2 * radius + 1, d.height(), d.width(), |ch, y, x| {
        let offset = ch as f64 - radius as f64;
        let pos = (d.get(y, x).to_acc() + offset).clamp(0.0, (depth - 1) as f64);
        let d0 = pos.floor() as usize;
        let d1 = (d0 + 1).min(depth - 1);
        let frac = pos - d0 as f64;
        let v = combined.get(d0, y, x).to_acc() * (1.0 - frac)
            + combined.get(d1, y, x).to_acc() * frac;
        T::from_acc(v)
    });
    Ok(out)
}

/// Serialized volume payload: either grouped or combined.
#[derive(Debug, Clone, PartialEq)]
pub enum VolumeData<T> {
    Grouped(GroupedVolume<T>),
    Combined(Tensor3<T>),
}

const VOLUME_MAGIC: [u8; 4] = *b"MCVV";
const VOLUME_VERSION: u32 = 1;
const FLAG_GROUPED: u32 = 1;

/// Serializes a volume: eight little-endian `u32` header words (magic,
/// version, depth, height, width, groups, flags, reserved) followed by the
/// values as little-endian `f32`.
pub fn write_volume<T: Scalar>(v: &VolumeData<T>) -> Vec<u8> {
    let (d, h, w, g, flags, data): (usize, usize, usize, usize, u32, &[T]) = match v {
        VolumeData::Grouped(gv) => (
            gv.depth,
            gv.height,
            gv.width,
            gv.groups,
            FLAG_GROUPED,
            &gv.data,
        ),
        VolumeData::Combined(t) => (t.channels(), t.height(), t.width(), 1, 0, t.data()),
    };
    let mut out = Vec::with_capacity(32 + data.len() * 4);
    out.extend_from_slice(&u32::from_le_bytes(VOLUME_MAGIC).to_le_bytes());
    for word in [
        VOLUME_VERSION,
        d as u32,
        h as u32,
        w as u32,
        g as u32,
        flags,
        0,
    ] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&(v.to_acc() as f32).to_le_bytes());
    }
    out
}

/// Parses [`write_volume`] output.
pub fn read_volume<T: Scalar>(bytes: &[u8]) -> Result<VolumeData<T>> {
    if bytes.len() < 32 {
        return Err(MochaError::format_at(
            bytes.len(),
            "volume header needs 32 bytes",
        ));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap());
    if bytes[0..4] != VOLUME_MAGIC {
        return Err(MochaError::format_at(0, "bad volume magic"));
    }
    if word(1) != VOLUME_VERSION {
        return Err(MochaError::format_at(4, format!("unsupported version {}", word(1))));
    }
    let (d, h, w, g) = (
        word(2) as usize,
        word(3) as usize,
        word(4) as usize,
        word(5) as usize,
    );
    let flags = word(6);
    let count = d
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .and_then(|v| v.checked_mul(g))
        .ok_or_else(|| MochaError::format_at(8, "volume dimensions overflow"))?;
    let need = 32 + count * 4;
    if bytes.len() != need {
        return Err(MochaError::format_at(
            bytes.len().min(need),
            format!("expected {need} bytes total, got {}", bytes.len()),
        ));
    }
    let mut data = Vec::with_capacity(count);
    for i in 0..count {
        let at = 32 + i * 4;
        let v = f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        data.push(T::from_acc(v as f64));
    }
    if flags & FLAG_GROUPED != 0 {
        Ok(VolumeData::Grouped(GroupedVolume::new(d, h, w, g, data)?))
    } else {
        if g != 1 {
            return Err(MochaError::format_at(20, "combined volume must record one group"));
        }
        Ok(VolumeData::Combined(Tensor3::new(d, h, w, data)?))
    }
}
