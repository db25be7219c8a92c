//! Orthonormal Haar wavelet analysis for the motif attention stage.
//!
//! One analysis level maps each non-overlapping 2x2 block
//! `[[a, b], [c, d]]` (`a` top-left, `b` top-right) to four coefficients:
//!
//! ```text
//! LL = (a + b + c + d) / 2      approximation
//! HL = (a - b + c - d) / 2      horizontal-frequency detail
//! LH = (a + b - c - d) / 2      vertical-frequency detail
//! HH = (a - b - c + d) / 2      diagonal detail
//! ```
//!
//! The four basis vectors are orthonormal, so ordinary (even-sized) transforms
//! preserve energy exactly and the inverse is the transpose:
//!
//! ```text
//! a = (LL + HL + LH + HH) / 2       b = (LL - HL + LH - HH) / 2
//! c = (LL + HL - LH - HH) / 2       d = (LL - HL - LH + HH) / 2
//! ```
//!
//! Deeper levels recurse on `LL` only. A plane with an odd height or width is
//! edge-padded on the bottom/right to even size before each level; the
//! original size of every level is recorded and the inverse crops back, so
//! round trips reproduce the input for any size.

use crate::error::{MochaError, Result};
use crate::scalar::Scalar;
use crate::tensor::{next_multiple, Tensor2, Tensor3};

/// Which subband of which level, e.g. `HL` at level 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubbandId {
    pub kind: SubbandKind,
    /// 1-based analysis level.
    pub level: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubbandKind {
    Ll,
    Lh,
    Hl,
    Hh,
}

impl std::fmt::Display for SubbandId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            SubbandKind::Ll => "LL",
            SubbandKind::Lh => "LH",
            SubbandKind::Hl => "HL",
            SubbandKind::Hh => "HH",
        };
        write!(f, "{kind}{}", self.level)
    }
}

/// Detail subbands of one analysis level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletLevel<T> {
    pub lh: Tensor2<T>,
    pub hl: Tensor2<T>,
    pub hh: Tensor2<T>,
}

/// Multi-level decomposition of a single plane.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid<T> {
    /// Detail subbands, level 1 (finest) first.
    levels: Vec<WaveletLevel<T>>,
    /// Approximation left after the last level.
    ll: Tensor2<T>,
    /// Pre-padding input size of each level, finest first.
    level_dims: Vec<(usize, usize)>,
}

impl<T: Scalar> WaveletPyramid<T> {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[WaveletLevel<T>] {
        &self.levels
    }

    pub fn ll(&self) -> &Tensor2<T> {
        &self.ll
    }

    pub fn original_height(&self) -> usize {
        self.level_dims[0].0
    }

    pub fn original_width(&self) -> usize {
        self.level_dims[0].1
    }

    /// Subband identifiers in the fixed traversal order: per level `LH`,
    /// `HL`, `HH` from level 1 up, then the final `LL`.
    pub fn subband_ids(&self) -> Vec<SubbandId> {
        let n = self.levels.len() as u8;
        let mut ids = Vec::with_capacity(self.levels.len() * 3 + 1);
        for level in 1..=n {
            ids.push(SubbandId { kind: SubbandKind::Lh, level });
            ids.push(SubbandId { kind: SubbandKind::Hl, level });
            ids.push(SubbandId { kind: SubbandKind::Hh, level });
        }
        ids.push(SubbandId { kind: SubbandKind::Ll, level: n });
        ids
    }

    /// The plane holding `id`, if the pyramid has it.
    pub fn subband(&self, id: SubbandId) -> Option<&Tensor2<T>> {
        let idx = id.level.checked_sub(1)? as usize;
        match id.kind {
            SubbandKind::Ll => {
                (id.level as usize == self.levels.len()).then_some(&self.ll)
            }
            SubbandKind::Lh => self.levels.get(idx).map(|l| &l.lh),
            SubbandKind::Hl => self.levels.get(idx).map(|l| &l.hl),
            SubbandKind::Hh => self.levels.get(idx).map(|l| &l.hh),
        }
    }

    /// Builds a pyramid with identical structure whose subband planes are
    /// `f(id, plane)`. Every produced plane must keep its source shape.
    pub fn map_subbands(
        &self,
        mut f: impl FnMut(SubbandId, &Tensor2<T>) -> Result<Tensor2<T>>,
    ) -> Result<WaveletPyramid<T>> {
        let mut apply = |id: SubbandId, src: &Tensor2<T>| -> Result<Tensor2<T>> {
            let out = f(id, src)?;
            if out.height() != src.height() || out.width() != src.width() {
                return Err(MochaError::Structure(format!(
                    "subband {id} replacement is {}x{}, expected {}x{}",
                    out.height(),
                    out.width(),
                    src.height(),
                    src.width()
                )));
            }
            Ok(out)
        };
        let n = self.levels.len() as u8;
        let mut levels = Vec::with_capacity(self.levels.len());
        for (i, lvl) in self.levels.iter().enumerate() {
            let level = (i + 1) as u8;
            levels.push(WaveletLevel {
                lh: apply(SubbandId { kind: SubbandKind::Lh, level }, &lvl.lh)?,
                hl: apply(SubbandId { kind: SubbandKind::Hl, level }, &lvl.hl)?,
                hh: apply(SubbandId { kind: SubbandKind::Hh, level }, &lvl.hh)?,
            });
        }
        let ll = apply(SubbandId { kind: SubbandKind::Ll, level: n }, &self.ll)?;
        Ok(WaveletPyramid {
            levels,
            ll,
            level_dims: self.level_dims.clone(),
        })
    }

    /// Total energy of all stored coefficients.
    pub fn energy(&self) -> f64 {
        let details: f64 = self
            .levels
            .iter()
            .map(|l| l.lh.energy() + l.hl.energy() + l.hh.energy())
            .sum();
        details + self.ll.energy()
    }
}

fn forward_level<T: Scalar>(x: &Tensor2<T>) -> Result<(Tensor2<T>, WaveletLevel<T>)> {
    let padded = x.pad_edge(next_multiple(x.height(), 2), next_multiple(x.width(), 2))?;
    let sh = padded.height() / 2;
    let sw = padded.width() / 2;
    let mut ll = Tensor2::zeros(sh, sw);
    let mut hl = Tensor2::zeros(sh, sw);
    let mut lh = Tensor2::zeros(sh, sw);
    let mut hh = Tensor2::zeros(sh, sw);
    for y in 0..sh {
        for x_ in 0..sw {
            let a = padded.get(2 * y, 2 * x_).to_acc();
            let b = padded.get(2 * y, 2 * x_ + 1).to_acc();
            let c = padded.get(2 * y + 1, 2 * x_).to_acc();
            let d = padded.get(2 * y + 1, 2 * x_ + 1).to_acc();
            ll.set(y, x_, T::from_acc((a + b + c + d) * 0.5));
            hl.set(y, x_, T::from_acc((a - b + c - d) * 0.5));
            lh.set(y, x_, T::from_acc((a + b - c - d) * 0.5));
            hh.set(y, x_, T::from_acc((a - b - c + d) * 0.5));
        }
    }
    Ok((ll, WaveletLevel { lh, hl, hh }))
}

fn inverse_level<T: Scalar>(
    ll: &Tensor2<T>,
    level: &WaveletLevel<T>,
    out_h: usize,
    out_w: usize,
) -> Result<Tensor2<T>> {
    let (sh, sw) = (ll.height(), ll.width());
    for (name, p) in [("LH", &level.lh), ("HL", &level.hl), ("HH", &level.hh)] {
        if p.height() != sh || p.width() != sw {
            return Err(MochaError::Structure(format!(
                "{name} subband is {}x{}, expected {}x{}",
                p.height(),
                p.width(),
                sh,
                sw
            )));
        }
    }
    if out_h > 2 * sh || out_w > 2 * sw || 2 * sh > out_h + 1 || 2 * sw > out_w + 1 {
        return Err(MochaError::Structure(format!(
            "cannot reconstruct {out_h}x{out_w} from {sh}x{sw} subbands"
        )));
    }
    let mut full = Tensor2::zeros(2 * sh, 2 * sw);
    for y in 0..sh {
        for x in 0..sw {
            let ll_v = ll.get(y, x).to_acc();
            let hl_v = level.hl.get(y, x).to_acc();
            let lh_v = level.lh.get(y, x).to_acc();
            let hh_v = level.hh.get(y, x).to_acc();
            full.set(2 * y, 2 * x, T::from_acc((ll_v + hl_v + lh_v + hh_v) * 0.5));
            full.set(2 * y, 2 * x + 1, T::from_acc((ll_v - hl_v + lh_v - hh_v) * 0.5));
            full.set(2 * y + 1, 2 * x, T::from_acc((ll_v + hl_v - lh_v - hh_v) * 0.5));
            full.set(
                2 * y + 1,
                2 * x + 1,
                T::from_acc((ll_v - hl_v - lh_v + hh_v) * 0.5),
            );
        }
    }
    full.crop(out_h, out_w)
}

/// Analyzes `x` into a pyramid with the given number of levels (>= 1).
pub fn dwt2<T: Scalar>(x: &Tensor2<T>, levels: usize) -> Result<WaveletPyramid<T>> {
    if levels == 0 {
        return Err(MochaError::Config("wavelet levels must be >= 1".into()));
    }
    if x.height() == 0 || x.width() == 0 {
        return Err(MochaError::Dimension("cannot transform an empty plane".into()));
    }
    let mut level_dims = Vec::with_capacity(levels);
    let mut detail = Vec::with_capacity(levels);
    let mut current = x.clone();
    for _ in 0..levels {
        level_dims.push((current.height(), current.width()));
        let (ll, lvl) = forward_level(&current)?;
        detail.push(lvl);
        current = ll;
    }
    Ok(WaveletPyramid {
        levels: detail,
        ll: current,
        level_dims,
    })
}

/// Inverts [`dwt2`], reproducing the original plane size.
pub fn idwt2<T: Scalar>(p: &WaveletPyramid<T>) -> Result<Tensor2<T>> {
    if p.levels.is_empty() || p.level_dims.len() != p.levels.len() {
        return Err(MochaError::Structure(
            "pyramid must carry one recorded size per level".into(),
        ));
    }
    let mut current = p.ll.clone();
    for (lvl, &(h, w)) in p.levels.iter().zip(&p.level_dims).rev() {
        current = inverse_level(&current, lvl, h, w)?;
    }
    Ok(current)
}

/// Per-channel analysis of a tensor; one pyramid per channel.
pub fn dwt3<T: Scalar>(t: &Tensor3<T>, levels: usize) -> Result<Vec<WaveletPyramid<T>>> {
    (0..t.channels())
        .map(|c| dwt2(&t.channel_plane(c), levels))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn by_hand_plane() -> Tensor2<f32> {
        Tensor2::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn single_block_coefficients_by_hand() {
        let p = dwt2(&by_hand_plane(), 1).unwrap();
        assert_eq!(p.ll().data(), &[5.0]);
        assert_eq!(p.levels()[0].hl.data(), &[-1.0]);
        assert_eq!(p.levels()[0].lh.data(), &[-2.0]);
        assert_eq!(p.levels()[0].hh.data(), &[0.0]);
    }

    #[test]
    fn constant_plane_has_zero_details_and_scaled_ll() {
        let v = -1.75f32;
        let t = Tensor2::filled(8, 8, v);
        let p = dwt2(&t, 1).unwrap();
        assert!(p.ll().data().iter().all(|&x| x == 2.0 * v));
        assert!(p.levels()[0].lh.data().iter().all(|&x| x == 0.0));
        assert!(p.levels()[0].hl.data().iter().all(|&x| x == 0.0));
        assert!(p.levels()[0].hh.data().iter().all(|&x| x == 0.0));

        let p2 = dwt2(&t, 2).unwrap();
        assert!(p2.ll().data().iter().all(|&x| x == 4.0 * v));
    }

    fn demo_plane(h: usize, w: usize) -> Tensor2<f32> {
        Tensor2::from_fn(h, w, |y, x| {
            ((y * 31 + x * 17) % 13) as f32 * 0.5 - 3.0 + (x as f32) * 0.01
        })
    }

    #[test]
    fn round_trip_even_dims() {
        let t = demo_plane(16, 24);
        let r = idwt2(&dwt2(&t, 2).unwrap()).unwrap();
        let err: f64 = t
            .data()
            .iter()
            .zip(r.data())
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "round trip error {err}");
    }

    #[test]
    fn round_trip_odd_dims_after_padding() {
        for (h, w) in [(5, 7), (1, 9), (11, 1), (3, 3), (17, 19)] {
            let t = demo_plane(h, w);
            let r = idwt2(&dwt2(&t, 2).unwrap()).unwrap();
            assert_eq!((r.height(), r.width()), (h, w));
            let err: f64 = t
                .data()
                .iter()
                .zip(r.data())
                .map(|(&a, &b)| (a as f64 - b as f64).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-5, "round trip error {err} at {h}x{w}");
        }
    }

    #[test]
    fn energy_is_preserved_without_padding() {
        for levels in 1..=2usize {
            let t = demo_plane(16, 32); // divisible by 2^levels, no padding
            let p = dwt2(&t, levels).unwrap();
            let ratio = p.energy() / t.energy();
            assert!(
                (ratio - 1.0).abs() < 1e-6,
                "energy ratio {ratio} at {levels} levels"
            );
        }
    }

    #[test]
    fn transform_is_linear() {
        let x = demo_plane(12, 10);
        let y = Tensor2::from_fn(12, 10, |r, c| ((r * 7 + c * 3) % 5) as f32 - 2.0);
        let a = 1.5f32;
        let combo = Tensor2::from_fn(12, 10, |r, c| a * x.get(r, c) + y.get(r, c));
        let px = dwt2(&x, 2).unwrap();
        let py = dwt2(&y, 2).unwrap();
        let pc = dwt2(&combo, 2).unwrap();
        for id in pc.subband_ids() {
            let lhs = pc.subband(id).unwrap();
            let rhs_x = px.subband(id).unwrap();
            let rhs_y = py.subband(id).unwrap();
            for i in 0..lhs.data().len() {
                let want = a as f64 * rhs_x.data()[i] as f64 + rhs_y.data()[i] as f64;
                let got = lhs.data()[i] as f64;
                assert!((want - got).abs() < 1e-4, "{id}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn subband_order_is_fixed() {
        let p = dwt2(&demo_plane(8, 8), 2).unwrap();
        let ids: Vec<String> = p.subband_ids().iter().map(|i| i.to_string()).collect();
        assert_eq!(ids, ["LH1", "HL1", "HH1", "LH2", "HL2", "HH2", "LL2"]);
        for id in p.subband_ids() {
            assert!(p.subband(id).is_some());
        }
    }

    #[test]
    fn hl_tracks_horizontal_frequency() {
        // Stripes that alternate along x land in HL; stripes along y in LH.
        let vertical_stripes = Tensor2::from_fn(4, 4, |_, x| if x % 2 == 0 { 1.0f32 } else { -1.0 });
        let p = dwt2(&vertical_stripes, 1).unwrap();
        assert!(p.levels()[0].hl.data().iter().all(|&v| v == 2.0));
        assert!(p.levels()[0].lh.data().iter().all(|&v| v == 0.0));

        let horizontal_stripes =
            Tensor2::from_fn(4, 4, |y, _| if y % 2 == 0 { 1.0f32 } else { -1.0 });
        let p = dwt2(&horizontal_stripes, 1).unwrap();
        assert!(p.levels()[0].lh.data().iter().all(|&v| v == 2.0));
        assert!(p.levels()[0].hl.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_levels_is_a_config_error() {
        assert!(matches!(
            dwt2(&by_hand_plane(), 0),
            Err(MochaError::Config(_))
        ));
    }

    #[test]
    fn tampered_pyramid_is_a_structure_error() {
        let p = dwt2(&demo_plane(8, 8), 1).unwrap();
        let bad = WaveletPyramid {
            levels: vec![WaveletLevel {
                lh: Tensor2::zeros(3, 4),
                hl: p.levels()[0].hl.clone(),
                hh: p.levels()[0].hh.clone(),
            }],
            ll: p.ll().clone(),
            level_dims: vec![(8, 8)],
        };
        assert!(matches!(idwt2(&bad), Err(MochaError::Structure(_))));
    }

    #[test]
    fn map_subbands_rejects_shape_changes() {
        let p = dwt2(&demo_plane(8, 8), 1).unwrap();
        let r = p.map_subbands(|_, _| Ok(Tensor2::zeros(1, 1)));
        assert!(matches!(r, Err(MochaError::Structure(_))));
    }

    #[test]
    fn dwt3_transforms_each_channel_independently() {
        let t = Tensor3::from_fn(3, 6, 6, |c, y, x| (c * 36 + y * 6 + x) as f32 * 0.1);
        let ps = dwt3(&t, 2).unwrap();
        assert_eq!(ps.len(), 3);
        for (c, p) in ps.iter().enumerate() {
            assert_eq!(p, &dwt2(&t.channel_plane(c), 2).unwrap());
        }
    }
}
