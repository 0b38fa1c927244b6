//! FFT-backed convolution, cross-correlation and auto-correlation with
//! explicit layout and padding conventions.
//!
//! Conventions, shared by every caller in the crate:
//! - correlation: (a ⋆ b)(ξ) = Σ_x a(x)·b(x+ξ), i.e. F{a⋆b} = conj(F{a})·F{b};
//! - convolution: (a * b)(ξ) = Σ_x a(x)·b(ξ-x), i.e. F{a*b} = F{a}·F{b};
//! - fft-native layout puts the zero shift at index (0,0,0), with negative
//!   shifts wrapping to the top of each axis.
//!
//! Linear padding targets the smallest FFT-friendly size (products of
//! 2, 3, 5, 7) that is at least 2n-1 per axis, so a signal sampled on n
//! points gets the full 2n-1 translation-space it needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft3_real, ifft3_real};
use crate::volume::Volume;

/// Padding mode for spectral operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PadMode {
    /// Zero-pad to an FFT-friendly size >= 2n-1 per axis before transforming.
    Linear,
    /// Operate cyclically on the native grid.
    Circular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadPolicy {
    pub mode: PadMode,
}

impl PadPolicy {
    pub fn linear() -> Self {
        PadPolicy {
            mode: PadMode::Linear,
        }
    }

    pub fn circular() -> Self {
        PadPolicy {
            mode: PadMode::Circular,
        }
    }

    /// Grid the policy transforms on, given input dims.
    pub fn padded_dims(&self, dims: [usize; 3]) -> [usize; 3] {
        match self.mode {
            PadMode::Circular => dims,
            PadMode::Linear => [
                good_fft_size(2 * dims[0] - 1),
                good_fft_size(2 * dims[1] - 1),
                good_fft_size(2 * dims[2] - 1),
            ],
        }
    }
}

impl Default for PadPolicy {
    fn default() -> Self {
        PadPolicy::linear()
    }
}

impl std::str::FromStr for PadPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(PadPolicy::linear()),
            "circular" => Ok(PadPolicy::circular()),
            other => Err(Error::InvalidArgument {
                message: format!("unknown pad policy {other:?}, expected linear|circular"),
            }),
        }
    }
}

/// Smallest integer >= n whose prime factors are all in {2, 3, 5, 7}.
pub fn good_fft_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2usize, 3, 5, 7] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Memory layout of a shift-space volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    FftNative,
    Centered,
}

impl Layout {
    pub fn as_str(&self) -> &'static str {
        match self {
            Layout::FftNative => "fft-native",
            Layout::Centered => "centered",
        }
    }
}

/// A volume living in shift-space, with a declared zero-shift position.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrVolume {
    pub volume: Volume,
    pub layout: Layout,
    pub zero_shift_index: [usize; 3],
}

impl AutocorrVolume {
    pub fn new_native(volume: Volume) -> Self {
        AutocorrVolume {
            volume,
            layout: Layout::FftNative,
            zero_shift_index: [0, 0, 0],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.volume.dims()
    }

    /// Cyclic half-size roll putting the zero shift at the grid center.
    pub fn to_centered(&self) -> AutocorrVolume {
        match self.layout {
            Layout::Centered => self.clone(),
            Layout::FftNative => {
                let d = self.dims();
                let c = [d[0] / 2, d[1] / 2, d[2] / 2];
                let shift = [
                    c[0] as i64 - self.zero_shift_index[0] as i64,
                    c[1] as i64 - self.zero_shift_index[1] as i64,
                    c[2] as i64 - self.zero_shift_index[2] as i64,
                ];
                AutocorrVolume {
                    volume: self.volume.shift_circular(shift),
                    layout: Layout::Centered,
                    zero_shift_index: c,
                }
            }
        }
    }

    /// Inverse of `to_centered`: zero shift back at index (0,0,0).
    pub fn to_native(&self) -> AutocorrVolume {
        match self.layout {
            Layout::FftNative => self.clone(),
            Layout::Centered => {
                let shift = [
                    -(self.zero_shift_index[0] as i64),
                    -(self.zero_shift_index[1] as i64),
                    -(self.zero_shift_index[2] as i64),
                ];
                AutocorrVolume {
                    volume: self.volume.shift_circular(shift),
                    layout: Layout::FftNative,
                    zero_shift_index: [0, 0, 0],
                }
            }
        }
    }

    /// Largest relative deviation from evenness, max |χ(ξ)-χ(-ξ)| / max |χ|.
    pub fn evenness_error(&self) -> f64 {
        let native = self.to_native();
        let v = &native.volume;
        let flipped = v.flip();
        let peak = v
            .data()
            .iter()
            .map(|&x| (x as f64).abs())
            .fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        v.data()
            .iter()
            .zip(flipped.data().iter())
            .map(|(&a, &b)| ((a - b) as f64).abs())
            .fold(0.0, f64::max)
            / peak
    }
}

fn check_dims(a: &Volume, b: &Volume) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimsMismatch {
            a: a.dims(),
            b: b.dims(),
        });
    }
    Ok(())
}

/// FFT convolution. Circular mode computes the cyclic convolution on the
/// native grid. Linear mode zero-pads internally and returns the central
/// ("same"-size) crop back to the input dims, with the kernel origin taken
/// at floor((n-1)/2) per axis.
pub fn fft_convolve(a: &Volume, b: &Volume, policy: &PadPolicy) -> Result<Volume> {
    check_dims(a, b)?;
    let dims = a.dims();
    match policy.mode {
        PadMode::Circular => {
            let fa = fft3_real(&a.to_f64(), dims);
            let mut fb = fft3_real(&b.to_f64(), dims);
            for (x, y) in fb.iter_mut().zip(fa.iter()) {
                *x *= *y;
            }
            let out = ifft3_real(fb, dims);
            Ok(Volume::from_parts(
                dims,
                a.voxel_size(),
                out.into_iter().map(|v| v as f32).collect(),
            ))
        }
        PadMode::Linear => {
            let m = policy.padded_dims(dims);
            // Corner-embed so the full 2n-1 linear support fits without wrap.
            let pa = embed_corner(a, m);
            let pb = embed_corner(b, m);
            let fa = fft3_real(&pa, m);
            let mut fb = fft3_real(&pb, m);
            for (x, y) in fb.iter_mut().zip(fa.iter()) {
                *x *= *y;
            }
            let full = ifft3_real(fb, m);
            // Same-size crop with kernel center floor((n-1)/2).
            let c = [(dims[0] - 1) / 2, (dims[1] - 1) / 2, (dims[2] - 1) / 2];
            let mut out = vec![0.0f32; dims[0] * dims[1] * dims[2]];
            for z in 0..dims[2] {
                for y in 0..dims[1] {
                    for x in 0..dims[0] {
                        let src = (x + c[0]) + m[0] * ((y + c[1]) + m[1] * (z + c[2]));
                        out[x + dims[0] * (y + dims[1] * z)] = full[src] as f32;
                    }
                }
            }
            Ok(Volume::from_parts(dims, a.voxel_size(), out))
        }
    }
}

/// FFT cross-correlation, out(ξ) = Σ_x a(x)·b(x+ξ), fft-native layout.
/// Circular mode stays on the native grid; linear mode returns the full
/// padded translation-space.
pub fn fft_crosscorrelate(a: &Volume, b: &Volume, policy: &PadPolicy) -> Result<Volume> {
    check_dims(a, b)?;
    let dims = a.dims();
    let (da, db, m) = match policy.mode {
        PadMode::Circular => (a.to_f64(), b.to_f64(), dims),
        PadMode::Linear => {
            let m = policy.padded_dims(dims);
            (embed_corner(a, m), embed_corner(b, m), m)
        }
    };
    let fa = fft3_real(&da, m);
    let mut fb = fft3_real(&db, m);
    for (x, y) in fb.iter_mut().zip(fa.iter()) {
        *x *= y.conj();
    }
    let out = ifft3_real(fb, m);
    Ok(Volume::from_parts(
        m,
        a.voxel_size(),
        out.into_iter().map(|v| v as f32).collect(),
    ))
}

/// Auto-correlation through the power spectrum: A{a} = IFFT(|F{a}|²).
/// Evenness and the ξ=0 maximum hold by construction; the linear policy
/// zero-pads first so the full translation-space is represented.
pub fn autocorrelate(a: &Volume, policy: &PadPolicy) -> AutocorrVolume {
    let dims = a.dims();
    let (da, m) = match policy.mode {
        PadMode::Circular => (a.to_f64(), dims),
        PadMode::Linear => {
            let m = policy.padded_dims(dims);
            (embed_corner(a, m), m)
        }
    };
    let mut fa = fft3_real(&da, m);
    for v in fa.iter_mut() {
        *v = (v.norm_sqr()).into();
    }
    let out = ifft3_real(fa, m);
    AutocorrVolume::new_native(Volume::from_parts(
        m,
        a.voxel_size(),
        out.into_iter().map(|v| v as f32).collect(),
    ))
}

/// Embedding position is irrelevant for correlations; the corner keeps the
/// crop arithmetic for linear convolution simple.
fn embed_corner(v: &Volume, target: [usize; 3]) -> Vec<f64> {
    let dims = v.dims();
    let mut out = vec![0.0f64; target[0] * target[1] * target[2]];
    let data = v.data();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                out[x + target[0] * (y + target[1] * z)] =
                    data[x + dims[0] * (y + dims[1] * z)] as f64;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand::Rng as _;
    use rand_chacha::ChaCha8Rng;

    fn random_volume(dims: [usize; 3], seed: u64) -> Volume {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dims[0] * dims[1] * dims[2];
        let data: Vec<f32> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        Volume::new(dims, [1.0; 3], data).unwrap()
    }

    /// O(n²) circular convolution oracle.
    fn direct_convolve_circ(a: &Volume, b: &Volume) -> Vec<f64> {
        let [nx, ny, nz] = a.dims();
        let mut out = vec![0.0f64; nx * ny * nz];
        for kz in 0..nz {
            for ky in 0..ny {
                for kx in 0..nx {
                    let mut acc = 0.0f64;
                    for z in 0..nz {
                        for y in 0..ny {
                            for x in 0..nx {
                                let bx = (kx + nx - x % nx) % nx;
                                let by = (ky + ny - y % ny) % ny;
                                let bz = (kz + nz - z % nz) % nz;
                                acc += a.at(x, y, z) as f64 * b.at(bx, by, bz) as f64;
                            }
                        }
                    }
                    out[kx + nx * (ky + ny * kz)] = acc;
                }
            }
        }
        out
    }

    /// O(n²) circular cross-correlation oracle, Σ_x a(x)·b(x+ξ).
    fn direct_crosscorr_circ(a: &Volume, b: &Volume) -> Vec<f64> {
        let [nx, ny, nz] = a.dims();
        let mut out = vec![0.0f64; nx * ny * nz];
        for kz in 0..nz {
            for ky in 0..ny {
                for kx in 0..nx {
                    let mut acc = 0.0f64;
                    for z in 0..nz {
                        for y in 0..ny {
                            for x in 0..nx {
                                acc += a.at(x, y, z) as f64
                                    * b.at((x + kx) % nx, (y + ky) % ny, (z + kz) % nz) as f64;
                            }
                        }
                    }
                    out[kx + nx * (ky + ny * kz)] = acc;
                }
            }
        }
        out
    }

    fn rel_linf(got: &[f32], want: &[f64]) -> f64 {
        let peak = want.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1e-300);
        got.iter()
            .zip(want.iter())
            .map(|(&g, &w)| (g as f64 - w).abs())
            .fold(0.0f64, f64::max)
            / peak
    }

    #[test]
    fn good_fft_size_picks_smallest_smooth() {
        assert_eq!(good_fft_size(1), 1);
        assert_eq!(good_fft_size(11), 12);
        assert_eq!(good_fft_size(31), 32);
        assert_eq!(good_fft_size(63), 63);
        assert_eq!(good_fft_size(47), 48);
        assert_eq!(good_fft_size(97), 98);
    }

    #[test]
    fn linear_policy_reaches_translation_space() {
        let p = PadPolicy::linear();
        for n in 1..40 {
            let d = p.padded_dims([n, n, n]);
            assert!(d[0] >= 2 * n - 1);
        }
    }

    #[test]
    fn convolve_with_delta_is_identity() {
        let a = random_volume([4, 4, 4], 0);
        let mut delta = Volume::zeros([4, 4, 4], [1.0; 3]);
        delta.set(0, 0, 0, 1.0);
        let out = fft_convolve(&a, &delta, &PadPolicy::circular()).unwrap();
        for (x, y) in out.data().iter().zip(a.data().iter()) {
            assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn convolve_constant_scales_by_kernel_sum() {
        let c = Volume::new([4, 4, 4], [1.0; 3], vec![2.5; 64]).unwrap();
        let k = random_volume([4, 4, 4], 1);
        let ks = k.sum();
        let out = fft_convolve(&c, &k, &PadPolicy::circular()).unwrap();
        for &v in out.data() {
            assert!((v as f64 - 2.5 * ks).abs() < 1e-4);
        }
    }

    #[test]
    fn convolve_matches_direct_sum() {
        let a = random_volume([4, 4, 4], 2);
        let b = random_volume([4, 4, 4], 3);
        let out = fft_convolve(&a, &b, &PadPolicy::circular()).unwrap();
        let want = direct_convolve_circ(&a, &b);
        assert!(rel_linf(out.data(), &want) <= 1e-5);
    }

    #[test]
    fn linear_convolve_matches_same_mode_oracle() {
        let dims = [5, 4, 3];
        let a = random_volume(dims, 12);
        let b = random_volume(dims, 13);
        let out = fft_convolve(&a, &b, &PadPolicy::linear()).unwrap();
        assert_eq!(out.dims(), dims);
        // direct same-mode linear convolution, kernel origin floor((n-1)/2)
        let c = [(dims[0] - 1) / 2, (dims[1] - 1) / 2, (dims[2] - 1) / 2];
        let mut want = vec![0.0f64; a.len()];
        for kz in 0..dims[2] {
            for ky in 0..dims[1] {
                for kx in 0..dims[0] {
                    let mut acc = 0.0;
                    for z in 0..dims[2] {
                        for y in 0..dims[1] {
                            for x in 0..dims[0] {
                                let bx = kx as i64 + c[0] as i64 - x as i64;
                                let by = ky as i64 + c[1] as i64 - y as i64;
                                let bz = kz as i64 + c[2] as i64 - z as i64;
                                if bx >= 0
                                    && (bx as usize) < dims[0]
                                    && by >= 0
                                    && (by as usize) < dims[1]
                                    && bz >= 0
                                    && (bz as usize) < dims[2]
                                {
                                    acc += a.at(x, y, z) as f64
                                        * b.at(bx as usize, by as usize, bz as usize) as f64;
                                }
                            }
                        }
                    }
                    want[kx + dims[0] * (ky + dims[1] * kz)] = acc;
                }
            }
        }
        assert!(rel_linf(out.data(), &want) <= 1e-5);
    }

    #[test]
    fn crosscorr_delta_pair_peaks_at_zero() {
        let mut a = Volume::zeros([4, 4, 4], [1.0; 3]);
        a.set(2, 1, 3, 1.0);
        let out = fft_crosscorrelate(&a, &a, &PadPolicy::circular()).unwrap();
        assert!((out.at(0, 0, 0) - 1.0).abs() < 1e-6);
        assert!((out.sum() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn crosscorr_locates_circular_shift() {
        let a = random_volume([6, 6, 6], 4);
        let s = [2i64, -1, 3];
        let b = a.shift_circular(s);
        let out = fft_crosscorrelate(&a, &b, &PadPolicy::circular()).unwrap();
        let peak = out.argmax();
        assert_eq!(
            peak,
            [
                s[0].rem_euclid(6) as usize,
                s[1].rem_euclid(6) as usize,
                s[2].rem_euclid(6) as usize
            ]
        );
    }

    #[test]
    fn crosscorr_matches_direct_sum() {
        let a = random_volume([4, 4, 4], 5);
        let b = random_volume([4, 4, 4], 6);
        let out = fft_crosscorrelate(&a, &b, &PadPolicy::circular()).unwrap();
        let want = direct_crosscorr_circ(&a, &b);
        assert!(rel_linf(out.data(), &want) <= 1e-5);
    }

    #[test]
    fn autocorr_of_two_point_signal_hand_computed() {
        // [5,0,3] embedded on the x axis; linear padding gives the full
        // translation-space, so χ(0)=34, χ(±1)=0, χ(±2)=15.
        let v = Volume::new([3, 1, 1], [1.0; 3], vec![5.0, 0.0, 3.0]).unwrap();
        let ac = autocorrelate(&v, &PadPolicy::linear());
        let m = ac.dims();
        assert!(m[0] >= 5);
        let chi = &ac.volume;
        let get = |xi: i64| chi.at(xi.rem_euclid(m[0] as i64) as usize, 0, 0) as f64;
        assert!((get(0) - 34.0).abs() < 1e-4);
        assert!(get(1).abs() < 1e-4);
        assert!(get(-1).abs() < 1e-4);
        assert!((get(2) - 15.0).abs() < 1e-4);
        assert!((get(-2) - 15.0).abs() < 1e-4);
    }

    #[test]
    fn autocorr_of_delta_is_delta_at_zero_shift() {
        let mut v = Volume::zeros([4, 4, 4], [1.0; 3]);
        v.set(1, 2, 3, 1.0);
        let ac = autocorrelate(&v, &PadPolicy::circular());
        assert!((ac.volume.at(0, 0, 0) - 1.0).abs() < 1e-6);
        assert!((ac.volume.sum() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn autocorr_agrees_with_crosscorr_and_direct_sum() {
        let a = random_volume([5, 5, 5], 7);
        let ac = autocorrelate(&a, &PadPolicy::circular());
        let cc = fft_crosscorrelate(&a, &a, &PadPolicy::circular()).unwrap();
        let want = direct_crosscorr_circ(&a, &a);
        assert!(rel_linf(ac.volume.data(), &want) <= 1e-5);
        assert!(rel_linf(cc.data(), &want) <= 1e-5);
    }

    #[test]
    fn crosscorr_equals_flip_convolution() {
        let a = random_volume([5, 5, 5], 8);
        let b = random_volume([5, 5, 5], 9);
        let cc = fft_crosscorrelate(&a, &b, &PadPolicy::circular()).unwrap();
        let fc = fft_convolve(&a.flip(), &b, &PadPolicy::circular()).unwrap();
        let peak = cc.max_value() as f64;
        for (x, y) in cc.data().iter().zip(fc.data().iter()) {
            assert!(((x - y) as f64).abs() <= 1e-5 * peak);
        }
    }

    #[test]
    fn parseval_sum_identity() {
        let a = random_volume([6, 5, 4], 10);
        let ac = autocorrelate(&a, &PadPolicy::linear());
        let want = a.sum() * a.sum();
        assert!((ac.volume.sum() - want).abs() <= 1e-5 * want);
    }

    #[test]
    fn centered_roundtrip_and_delta_position() {
        let mut v = Volume::zeros([4, 4, 4], [1.0; 3]);
        v.set(2, 2, 2, 1.0);
        let ac = autocorrelate(&v, &PadPolicy::circular());
        let cent = ac.to_centered();
        assert_eq!(cent.zero_shift_index, [2, 2, 2]);
        assert!((cent.volume.at(2, 2, 2) - 1.0).abs() < 1e-6);
        let back = cent.to_native();
        assert_eq!(back.volume, ac.volume);
        assert_eq!(back.zero_shift_index, [0, 0, 0]);
    }

    #[test]
    fn dims_mismatch_is_rejected() {
        let a = random_volume([4, 4, 4], 11);
        let b = random_volume([5, 4, 4], 11);
        assert!(matches!(
            fft_convolve(&a, &b, &PadPolicy::circular()),
            Err(Error::DimsMismatch { .. })
        ));
        assert!(matches!(
            fft_crosscorrelate(&a, &b, &PadPolicy::circular()),
            Err(Error::DimsMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn autocorr_is_even_with_max_at_zero(seed in 0u64..10_000) {
            let a = random_volume([5, 5, 5], seed);
            for policy in [PadPolicy::circular(), PadPolicy::linear()] {
                let ac = autocorrelate(&a, &policy);
                prop_assert!(ac.evenness_error() <= 1e-5);
                prop_assert!(ac.to_centered().evenness_error() <= 1e-5);
                prop_assert_eq!(ac.volume.argmax(), [0, 0, 0]);
            }
        }
    }
}
