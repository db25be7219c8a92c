//! Full-resolution refinement from photometric reconstruction error.
//!
//! The upsampled disparity is converted into a warp of the right image onto
//! the left; where the two images disagree, the reconstruction error map is
//! nonzero. A small seeded encoder-decoder digests the stacked disparity and
//! error, and three branches split its output by frequency: a low-frequency
//! extractor (pooled convolution, sigmoid), a low-frequency motif confidence
//! gate (motif attention, sigmoid), and the high-frequency residue gated by
//! that confidence. A final convolution turns the recombination into a
//! single-channel penalty subtracted from the disparity.
//!
//! Warping supports two routes: the rectified shortcut (horizontal shift by
//! the disparity) and the general plane-induced homography built from the
//! camera rig, evaluated per pixel with the plane depth implied by that
//! pixel's disparity. Under a rectified rig both routes agree; keeping both
//! makes the geometric claim testable instead of assumed.

use nalgebra::{Matrix3, Vector3};

use crate::conv::{avgpool2, relu, sigmoid, ConvWeights};
use crate::error::{MochaError, Result};
use crate::motif::{mcga_apply, McgaConfig, Normalization};
use crate::rng::SeededGenerator;
use crate::scalar::Scalar;
use crate::tensor::{hadamard, DisparityMap, Tensor2, Tensor3};

/// Stereo camera geometry. The translation is the position of the right
/// camera expressed in the left camera frame, so a standard rectified rig
/// carries `t = (baseline, 0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    pub k_l: Matrix3<f64>,
    pub k_r: Matrix3<f64>,
    pub r: Matrix3<f64>,
    pub t: Vector3<f64>,
    /// Unit normal of the scene plane inducing the homography.
    pub n_plane: Vector3<f64>,
    /// Focal length in pixels, used to convert disparity to depth.
    pub focal: f64,
    /// Baseline in meters.
    pub baseline: f64,
}

impl CameraRig {
    /// A rectified rig: identical upper-triangular intrinsics, identity
    /// rotation, right camera `baseline` meters along +x, fronto-parallel
    /// plane normal.
    pub fn rectified(focal: f64, baseline: f64, cx: f64, cy: f64) -> Self {
        let k = Matrix3::new(focal, 0.0, cx, 0.0, focal, cy, 0.0, 0.0, 1.0);
        Self {
            k_l: k,
            k_r: k,
            r: Matrix3::identity(),
            t: Vector3::new(baseline, 0.0, 0.0),
            n_plane: Vector3::new(0.0, 0.0, 1.0),
            focal,
            baseline,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("left", &self.k_l), ("right", &self.k_r)] {
            let upper = k[(1, 0)] == 0.0 && k[(2, 0)] == 0.0 && k[(2, 1)] == 0.0;
            let positive = k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0 && k[(2, 2)] > 0.0;
            if !upper || !positive {
                return Err(MochaError::Config(format!(
                    "{name} intrinsics must be upper triangular with positive diagonal"
                )));
            }
        }
        if (self.n_plane.norm() - 1.0).abs() > 1e-9 {
            return Err(MochaError::Config("plane normal must be unit length".into()));
        }
        if !(self.baseline > 0.0) {
            return Err(MochaError::Config("baseline must be positive".into()));
        }
        Ok(())
    }
}

fn homography_inv_depth(rig: &CameraRig, inv_depth: f64) -> Result<Matrix3<f64>> {
    let k_r_inv = rig
        .k_r
        .try_inverse()
        .ok_or_else(|| MochaError::Matrix("right intrinsics are singular".into()))?;
    let inner = rig.r - rig.t * rig.n_plane.transpose() * inv_depth;
    Ok(rig.k_l * inner * k_r_inv)
}

/// Homography induced by the scene plane at `depth` meters:
/// `K_l (R - T N^T / depth) K_r^-1`.
pub fn plane_homography(rig: &CameraRig, depth: f64) -> Result<Matrix3<f64>> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(MochaError::Domain(format!(
            "plane depth must be positive and finite, got {depth}"
        )));
    }
    homography_inv_depth(rig, 1.0 / depth)
}

/// Which warp route computes the reconstruction error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpMode {
    /// Horizontal shift by the disparity. Valid for rectified imagery.
    Rectified,
    /// Per-pixel plane homography with depth `focal * baseline / d`.
    Homography,
}

/// Per-channel reconstruction error with a per-pixel validity mask; error
/// values are zero wherever the mask is false.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconError<T> {
    planes: Tensor3<T>,
    valid: Vec<bool>,
}

impl<T: Scalar> ReconError<T> {
    pub fn planes(&self) -> &Tensor3<T> {
        &self.planes
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, y: usize, x: usize) -> bool {
        self.valid[y * self.planes.width() + x]
    }

    /// Mean absolute error over valid pixels, or `None` if none are valid.
    pub fn mean_abs_valid(&self) -> Option<f64> {
        let (c, w) = (self.planes.channels(), self.planes.width());
        let mut sum = 0.0f64;
        let mut count = 0usize;
        for y in 0..self.planes.height() {
            for x in 0..w {
                if self.valid[y * w + x] {
                    for ch in 0..c {
                        sum += self.planes.get(ch, y, x).to_acc().abs();
                        count += 1;
                    }
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

fn sample_bilinear<T: Scalar>(img: &Tensor3<T>, c: usize, y: f64, x: f64) -> f64 {
    let (h, w) = (img.height(), img.width());
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let y0 = y.floor() as usize;
    let x0 = x.floor() as usize;
    let y1 = (y0 + 1).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let fy = y - y0 as f64;
    let fx = x - x0 as f64;
    let v00 = img.get(c, y0, x0).to_acc();
    let v01 = img.get(c, y0, x1).to_acc();
    let v10 = img.get(c, y1, x0).to_acc();
    let v11 = img.get(c, y1, x1).to_acc();
    (v00 * (1.0 - fx) + v01 * fx) * (1.0 - fy) + (v10 * (1.0 - fx) + v11 * fx) * fy
}

/// Reconstruction error `E(c, h, w) = I_r(warp(h, w)) - I_l(c, h, w)`.
///
/// Samples whose source coordinate leaves the frame are masked invalid and
/// carry zero error, as are pixels whose disparity is invalid (or, on the
/// homography route, negative).
pub fn recon_error<T: Scalar>(
    i_l: &Tensor3<T>,
    i_r: &Tensor3<T>,
    d: &DisparityMap<T>,
    rig: &CameraRig,
    mode: WarpMode,
) -> Result<ReconError<T>> {
    if i_l.channels() != i_r.channels()
        || i_l.height() != i_r.height()
        || i_l.width() != i_r.width()
    {
        return Err(MochaError::Dimension(format!(
            "left image {}x{}x{} vs right {}x{}x{}",
            i_l.channels(),
            i_l.height(),
            i_l.width(),
            i_r.channels(),
            i_r.height(),
            i_r.width()
        )));
    }
    if d.height() != i_l.height() || d.width() != i_l.width() {
        return Err(MochaError::Dimension(format!(
            "disparity {}x{} vs image {}x{}",
            d.height(),
            d.width(),
            i_l.height(),
            i_l.width()
        )));
    }
    rig.validate()?;

    let (c, h, w) = (i_l.channels(), i_l.height(), i_l.width());
    let mut planes = Tensor3::<T>::zeros(c, h, w);
    let mut valid = vec![false; h * w];
    let max_x = (w - 1) as f64;
    let max_y = (h - 1) as f64;

    for y in 0..h {
        for x in 0..w {
            if !d.is_valid(y, x) {
                continue;
            }
            let disp = d.get(y, x).to_acc();
            let (src_x, src_y) = match mode {
                WarpMode::Rectified => (x as f64 - disp, y as f64),
                WarpMode::Homography => {
                    if disp < 0.0 {
                        continue;
                    }
                    // depth = focal * baseline / disp; folding the division
                    // into the inverse depth keeps disp = 0 finite.
                    let inv_depth = disp / (rig.focal * rig.baseline);
                    let hm = homography_inv_depth(rig, inv_depth)?;
                    let p = hm * Vector3::new(x as f64, y as f64, 1.0);
                    if p.z.abs() < 1e-12 {
                        continue;
                    }
                    (p.x / p.z, p.y / p.z)
                }
            };
            if src_x < 0.0 || src_x > max_x || src_y < 0.0 || src_y > max_y {
                continue;
            }
            valid[y * w + x] = true;
            for ch in 0..c {
                let warped = sample_bilinear(i_r, ch, src_y, src_x);
                planes.set(ch, y, x, T::from_acc(warped - i_l.get(ch, y, x).to_acc()));
            }
        }
    }
    Ok(ReconError { planes, valid })
}

/// Seeded weights of the refinement head.
#[derive(Debug, Clone)]
pub struct RempWeights<T> {
    enc0: ConvWeights<T>,
    enc1: ConvWeights<T>,
    enc2: ConvWeights<T>,
    dec1: ConvWeights<T>,
    dec0: ConvWeights<T>,
    lfe_a: ConvWeights<T>,
    lfe_b: ConvWeights<T>,
    head: ConvWeights<T>,
    lmc_cfg: McgaConfig,
}

/// Channel width of the encoder-decoder output the branches operate on.
const BODY_CHANNELS: usize = 8;

impl<T: Scalar> RempWeights<T> {
    /// Draws all weights from labeled child streams of `gen`.
    /// `image_channels` is the channel count of the reconstruction error
    /// (the refinement input adds one disparity channel on top).
    pub fn seeded(gen: &SeededGenerator, image_channels: usize) -> Result<Self> {
        let input = image_channels + 1;
        let conv = |label: &str, out_c: usize, in_c: usize| -> Result<ConvWeights<T>> {
            ConvWeights::seeded(&mut gen.child(label), out_c, in_c, 3)
        };
        Ok(Self {
            enc0: conv("remp.enc0", BODY_CHANNELS, input)?,
            enc1: conv("remp.enc1", 16, BODY_CHANNELS)?,
            enc2: conv("remp.enc2", 32, 16)?,
            dec1: conv("remp.dec1", 16, 48)?,
            dec0: conv("remp.dec0", BODY_CHANNELS, 24)?,
            lfe_a: conv("remp.lfe_a", BODY_CHANNELS, BODY_CHANNELS)?,
            lfe_b: conv("remp.lfe_b", BODY_CHANNELS, BODY_CHANNELS)?,
            head: conv("remp.head", 1, BODY_CHANNELS)?,
            lmc_cfg: Self::lmc_config(),
        })
    }

    /// Replaces the penalty head with zeros; refinement then returns the
    /// input disparity unchanged.
    pub fn with_zero_head(mut self) -> Self {
        self.head = ConvWeights::zeros(1, BODY_CHANNELS, 3).expect("fixed head shape");
        self
    }

    /// Motif attention settings of the confidence branch: the body's eight
    /// channels in four groups of two, convex vote weighting, two wavelet
    /// levels.
    fn lmc_config() -> McgaConfig {
        McgaConfig {
            n_groups: 4,
            normalization: Normalization::ConvexVotes,
            ..McgaConfig::default()
        }
    }
}

/// The intermediate branch tensors of one refinement, exposed so range
/// properties can be checked.
#[derive(Debug, Clone)]
pub struct RempBranches<T> {
    /// Low-frequency extraction, sigmoid output in (0, 1).
    pub lfe: Tensor3<T>,
    /// Low-frequency motif confidence, sigmoid output in (0, 1).
    pub lmc: Tensor3<T>,
    /// High-frequency residue `body * lmc`.
    pub hfe: Tensor3<T>,
    /// Single-channel penalty subtracted from the disparity.
    pub penalty: Tensor2<T>,
}

/// Refines an upsampled disparity map against its reconstruction error and
/// also returns the branch tensors.
pub fn remp_refine_traced<T: Scalar>(
    d_up: &DisparityMap<T>,
    e: &ReconError<T>,
    w: &RempWeights<T>,
) -> Result<(DisparityMap<T>, RempBranches<T>)> {
    let planes = e.planes();
    if d_up.height() != planes.height() || d_up.width() != planes.width() {
        return Err(MochaError::Dimension(format!(
            "disparity {}x{} vs reconstruction error {}x{}",
            d_up.height(),
            d_up.width(),
            planes.height(),
            planes.width()
        )));
    }

    let d_plane = Tensor3::from_planes(std::slice::from_ref(d_up.values()))?;
    let input = Tensor3::concat_channels(&[&d_plane, planes])?;

    // Two-down/two-up encoder-decoder with skip connections.
    let e0 = relu(&w.enc0.apply(&input, 1)?);
    let e1 = relu(&w.enc1.apply(&e0, 2)?);
    let e2 = relu(&w.enc2.apply(&e1, 2)?);
    let up1 = e2.resize_bilinear(e1.height(), e1.width())?;
    let d1 = relu(&w.dec1.apply(&Tensor3::concat_channels(&[&up1, &e1])?, 1)?);
    let up0 = d1.resize_bilinear(e0.height(), e0.width())?;
    let body = relu(&w.dec0.apply(&Tensor3::concat_channels(&[&up0, &e0])?, 1)?);

    // Low-frequency branch: pool, convolve twice, gate, upsample back.
    let pooled = avgpool2(&body);
    let lfe_small = sigmoid(&w.lfe_b.apply(&relu(&w.lfe_a.apply(&pooled, 1)?), 1)?);
    let lfe = lfe_small.resize_bilinear(body.height(), body.width())?;

    // Motif confidence branch and the high-frequency residue it gates.
    let lmc = sigmoid(&mcga_apply(&body, &w.lmc_cfg)?);
    let hfe = hadamard(&body, &lmc)?;

    let ones_minus_lmc = lmc.map(|v| T::one() - v);
    let low = hadamard(&lfe, &ones_minus_lmc)?;
    let mixed = Tensor3::from_fn(low.channels(), low.height(), low.width(), |c, y, x| {
        low.get(c, y, x) + hfe.get(c, y, x)
    });
    let penalty = w.head.apply(&mixed, 1)?.channel_plane(0);

    let values = Tensor2::from_fn(d_up.height(), d_up.width(), |y, x| {
        d_up.get(y, x) - penalty.get(y, x)
    });
    let refined = DisparityMap::new(values, d_up.valid().to_vec())?;
    Ok((
        refined,
        RempBranches {
            lfe,
            lmc,
            hfe,
            penalty,
        },
    ))
}

/// Refines an upsampled disparity map against its reconstruction error:
/// `d = d_up - penalty` with the penalty produced by the branch head.
pub fn remp_refine<T: Scalar>(
    d_up: &DisparityMap<T>,
    e: &ReconError<T>,
    w: &RempWeights<T>,
) -> Result<DisparityMap<T>> {
    Ok(remp_refine_traced(d_up, e, w)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_normal;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn equal_intrinsics_and_no_motion_give_identity() {
        let mut rig = CameraRig::rectified(50.0, 0.25, 31.5, 23.5);
        rig.t = Vector3::zeros();
        let h = plane_homography(&rig, 2.0).unwrap();
        let i = Matrix3::identity();
        for r in 0..3 {
            for c in 0..3 {
                assert!(close(h[(r, c)], i[(r, c)], 1e-12), "({r},{c})");
            }
        }
    }

    #[test]
    fn rectified_rig_maps_u_to_u_minus_d() {
        let (focal, baseline) = (64.0, 0.5);
        let rig = CameraRig::rectified(focal, baseline, 40.0, 30.0);
        for disp in [0.5f64, 3.5, 17.0] {
            let depth = focal * baseline / disp;
            let h = plane_homography(&rig, depth).unwrap();
            for (u, v) in [(0.0f64, 0.0f64), (13.0, 7.0), (79.0, 59.0)] {
                let p = h * Vector3::new(u, v, 1.0);
                assert!(close(p.x / p.z, u - disp, 1e-9), "disp {disp} u {u}");
                assert!(close(p.y / p.z, v, 1e-9));
            }
        }
    }

    #[test]
    fn far_plane_limit_drops_the_translation_term() {
        let mut rig = CameraRig::rectified(32.0, 0.2, 15.5, 11.5);
        rig.r = Matrix3::new(0.8, -0.6, 0.0, 0.6, 0.8, 0.0, 0.0, 0.0, 1.0);
        let h = plane_homography(&rig, 1e12).unwrap();
        let want = rig.k_l * rig.r * rig.k_r.try_inverse().unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!(close(h[(r, c)], want[(r, c)], 1e-9), "({r},{c})");
            }
        }
    }

    #[test]
    fn bad_depth_and_singular_intrinsics_error() {
        let rig = CameraRig::rectified(32.0, 0.2, 15.5, 11.5);
        assert!(matches!(
            plane_homography(&rig, 0.0),
            Err(MochaError::Domain(_))
        ));
        assert!(matches!(
            plane_homography(&rig, -1.0),
            Err(MochaError::Domain(_))
        ));
        let mut bad = rig;
        bad.k_r[(0, 0)] = 0.0;
        assert!(matches!(
            homography_inv_depth(&bad, 0.1),
            Err(MochaError::Matrix(_))
        ));
    }

    /// Analytic image whose bilinear samples at integer coordinates are the
    /// stored values; shifting the argument builds exact stereo pairs.
    fn texture(c: usize, y: usize, x: isize) -> f32 {
        let x = x as f64;
        let y = y as f64;
        let c = c as f64;
        (0.3 * x + 0.2 * y + 0.1 * c + 0.05 * x * y + 0.01 * x * x) as f32
    }

    fn shifted_pair(c: usize, h: usize, w: usize, disp: usize) -> (Tensor3<f32>, Tensor3<f32>) {
        let left = Tensor3::from_fn(c, h, w, |c, y, x| texture(c, y, x as isize));
        let right = Tensor3::from_fn(c, h, w, |c, y, x| texture(c, y, x as isize + disp as isize));
        (left, right)
    }

    #[test]
    fn identical_images_at_zero_disparity_have_zero_error() {
        let img = seeded_normal::<f32>(&mut SeededGenerator::new(3), 3, 6, 8, 1.0).unwrap();
        let d = DisparityMap::all_valid(Tensor2::zeros(6, 8));
        let rig = CameraRig::rectified(16.0, 0.3, 3.5, 2.5);
        for mode in [WarpMode::Rectified, WarpMode::Homography] {
            let e = recon_error(&img, &img, &d, &rig, mode).unwrap();
            assert!(e.valid().iter().all(|v| *v), "{mode:?}");
            assert!(e.planes().data().iter().all(|v| *v == 0.0), "{mode:?}");
        }
    }

    #[test]
    fn integer_shift_pairs_reconstruct_exactly_in_the_interior() {
        for disp in [1usize, 2, 4] {
            let (h, w) = (10usize, 16usize);
            let (left, right) = shifted_pair(2, h, w, disp);
            let d = DisparityMap::all_valid(Tensor2::filled(h, w, disp as f32));
            let rig = CameraRig::rectified(20.0, 0.4, 7.5, 4.5);
            let e = recon_error(&left, &right, &d, &rig, WarpMode::Rectified).unwrap();
            for y in 0..h {
                for x in 0..w {
                    assert_eq!(e.is_valid(y, x), x >= disp, "disp {disp} ({y},{x})");
                    if x >= disp {
                        for c in 0..2 {
                            assert!(
                                (e.planes().get(c, y, x) as f64).abs() <= 1e-6,
                                "disp {disp} ({c},{y},{x})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn all_out_of_frame_disparity_masks_everything() {
        let (left, right) = shifted_pair(1, 4, 6, 1);
        let d = DisparityMap::all_valid(Tensor2::filled(4, 6, 6.0));
        let rig = CameraRig::rectified(20.0, 0.4, 2.5, 1.5);
        let e = recon_error(&left, &right, &d, &rig, WarpMode::Rectified).unwrap();
        assert!(e.valid().iter().all(|v| !*v));
        assert!(e.planes().data().iter().all(|v| *v == 0.0));
        assert!(e.mean_abs_valid().is_none());
    }

    #[test]
    fn homography_route_matches_rectified_route_on_a_rectified_rig() {
        let (h, w) = (12usize, 20usize);
        let (left, right) = shifted_pair(3, h, w, 3);
        let values = Tensor2::from_fn(h, w, |y, x| 2.0 + 0.1 * ((y + x) % 5) as f32);
        let d = DisparityMap::all_valid(values);
        let rig = CameraRig::rectified(25.0, 0.6, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        let a = recon_error(&left, &right, &d, &rig, WarpMode::Rectified).unwrap();
        let b = recon_error(&left, &right, &d, &rig, WarpMode::Homography).unwrap();
        assert_eq!(a.valid(), b.valid());
        for (x, y) in a.planes().data().iter().zip(b.planes().data()) {
            assert!((*x as f64 - *y as f64).abs() <= 1e-4);
        }
    }

    #[test]
    fn invalid_input_pixels_stay_invalid() {
        let (left, right) = shifted_pair(1, 4, 6, 1);
        let mut valid = vec![true; 24];
        valid[7] = false;
        let d = DisparityMap::new(Tensor2::filled(4, 6, 1.0), valid).unwrap();
        let rig = CameraRig::rectified(20.0, 0.4, 2.5, 1.5);
        let e = recon_error(&left, &right, &d, &rig, WarpMode::Rectified).unwrap();
        assert!(!e.is_valid(1, 1));
        assert_eq!(e.planes().get(0, 1, 1), 0.0);
    }

    fn small_refine_setup() -> (DisparityMap<f32>, ReconError<f32>) {
        let (h, w) = (12usize, 18usize);
        let (left, right) = shifted_pair(3, h, w, 2);
        let d = DisparityMap::all_valid(Tensor2::from_fn(h, w, |y, x| {
            2.0 + 0.05 * (x as f32) - 0.03 * (y as f32)
        }));
        let rig = CameraRig::rectified(20.0, 0.4, 8.5, 5.5);
        let e = recon_error(&left, &right, &d, &rig, WarpMode::Rectified).unwrap();
        (d, e)
    }

    #[test]
    fn zero_head_returns_the_input_exactly() {
        let (d, e) = small_refine_setup();
        let w = RempWeights::<f32>::seeded(&SeededGenerator::new(11), 3)
            .unwrap()
            .with_zero_head();
        let refined = remp_refine(&d, &e, &w).unwrap();
        let bits = |m: &DisparityMap<f32>| -> Vec<u32> {
            m.values().data().iter().map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(&refined), bits(&d));
        assert_eq!(refined.valid(), d.valid());
    }

    #[test]
    fn branch_gates_stay_in_range_and_runs_repeat_bitwise() {
        let (d, e) = small_refine_setup();
        let w = RempWeights::<f32>::seeded(&SeededGenerator::new(12), 3).unwrap();
        let (a, branches) = remp_refine_traced(&d, &e, &w).unwrap();
        for v in branches.lfe.data().iter().chain(branches.lmc.data()) {
            assert!(*v > 0.0 && *v < 1.0);
        }
        assert!(branches.hfe.data().iter().all(|v| v.is_finite()));
        assert!(branches.penalty.data().iter().any(|v| *v != 0.0));
        let (b, _) = remp_refine_traced(&d, &e, &w).unwrap();
        assert_eq!(
            a.values().data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values().data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (_, e) = small_refine_setup();
        let w = RempWeights::<f32>::seeded(&SeededGenerator::new(13), 3).unwrap();
        let small = DisparityMap::all_valid(Tensor2::<f32>::zeros(4, 4));
        assert!(matches!(
            remp_refine(&small, &e, &w),
            Err(MochaError::Dimension(_))
        ));
    }
}
