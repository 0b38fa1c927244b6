//! Quantitative comparison of reconstructions against ground truth.
//!
//! De-autocorrelation is unique at best up to translation and point
//! reflection, so comparisons first absorb those ambiguities: volumes are
//! registered by cross-correlation peak (optionally also as a flipped
//! candidate) before any voxelwise metric is taken.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::register_pair;
use crate::volume::{Axis, Volume};

/// Samples along a line with optional resolution statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileReport {
    /// (position along the line in µm, interpolated intensity)
    pub samples: Vec<(f64, f64)>,
    /// Full width at half maximum, present for single-peak profiles.
    pub fwhm: Option<f64>,
    /// (max − min between the two peaks)/max, present for two-peak profiles.
    pub dip_contrast: Option<f64>,
}

fn zncc_at(a: &Volume, b: &Volume) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let mut cov = 0.0f64;
    let mut va = 0.0f64;
    let mut vb = 0.0f64;
    for (&x, &y) in a.data().iter().zip(b.data().iter()) {
        let dx = x as f64 - ma;
        let dy = y as f64 - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        return Err(Error::ZeroVariance {
            context: "ncc input has no contrast".into(),
        });
    }
    Ok(cov / (va * vb).sqrt())
}

/// Registers `b` against `a` (integer cross-correlation peak) and returns
/// the aligned copy together with its zero-normalized cross-correlation.
/// With `allow_flip`, the point-reflected candidate competes too.
pub fn align_to(a: &Volume, b: &Volume, allow_flip: bool) -> Result<(Volume, f64)> {
    if a.dims() != b.dims() {
        return Err(Error::DimsMismatch {
            a: a.dims(),
            b: b.dims(),
        });
    }
    let mut candidates = vec![b.clone()];
    if allow_flip {
        candidates.push(b.flip());
    }
    let mut best: Option<(Volume, f64)> = None;
    for cand in candidates {
        let disp = register_pair(a, &cand)?;
        let aligned = cand.shift_circular([-disp.m[0], -disp.m[1], -disp.m[2]]);
        let score = zncc_at(a, &aligned)?;
        if best.as_ref().map_or(true, |(_, s)| score > *s) {
            best = Some((aligned, score));
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Zero-normalized cross-correlation after absorbing translation (and
/// optionally reflection); in [-1, 1].
pub fn ncc_after_alignment(a: &Volume, b: &Volume, allow_flip: bool) -> Result<f64> {
    align_to(a, b, allow_flip).map(|(_, s)| s)
}

/// Mean squared difference, 64-bit accumulation.
pub fn mse(a: &Volume, b: &Volume) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimsMismatch {
            a: a.dims(),
            b: b.dims(),
        });
    }
    let mut acc = 0.0f64;
    for (&x, &y) in a.data().iter().zip(b.data().iter()) {
        let d = x as f64 - y as f64;
        acc += d * d;
    }
    Ok(acc / a.len() as f64)
}

fn trilinear_sample(v: &Volume, p: [f64; 3]) -> f64 {
    let dims = v.dims();
    let mut acc = 0.0f64;
    let base = [p[0].floor(), p[1].floor(), p[2].floor()];
    let frac = [p[0] - base[0], p[1] - base[1], p[2] - base[2]];
    for dz in 0..2usize {
        let z = base[2] as i64 + dz as i64;
        if z < 0 || z >= dims[2] as i64 {
            continue;
        }
        let wz = if dz == 0 { 1.0 - frac[2] } else { frac[2] };
        for dy in 0..2usize {
            let y = base[1] as i64 + dy as i64;
            if y < 0 || y >= dims[1] as i64 {
                continue;
            }
            let wy = if dy == 0 { 1.0 - frac[1] } else { frac[1] };
            for dx in 0..2usize {
                let x = base[0] as i64 + dx as i64;
                if x < 0 || x >= dims[0] as i64 {
                    continue;
                }
                let wx = if dx == 0 { 1.0 - frac[0] } else { frac[0] };
                acc += wz * wy * wx * v.at(x as usize, y as usize, z as usize) as f64;
            }
        }
    }
    acc
}

/// Trilinear line profile between two points given in µm (voxel i sits at
/// i·voxel_size per axis). FWHM by interpolated half-max crossings for
/// single-peak profiles; dip contrast for two-peak profiles.
pub fn line_profile(
    v: &Volume,
    p0_um: [f64; 3],
    p1_um: [f64; 3],
    samples: usize,
) -> Result<ProfileReport> {
    let dims = v.dims();
    let vs = v.voxel_size();
    let extent = [
        (dims[0] - 1) as f64 * vs[0],
        (dims[1] - 1) as f64 * vs[1],
        (dims[2] - 1) as f64 * vs[2],
    ];
    for p in [p0_um, p1_um] {
        for a in 0..3 {
            if p[a] < -1e-9 || p[a] > extent[a] + 1e-9 {
                return Err(Error::ProfileOutOfBounds { point: p, extent });
            }
        }
    }
    if samples < 2 {
        return Err(Error::InvalidArgument {
            message: "need at least 2 profile samples".into(),
        });
    }
    let length = ((p1_um[0] - p0_um[0]).powi(2)
        + (p1_um[1] - p0_um[1]).powi(2)
        + (p1_um[2] - p0_um[2]).powi(2))
    .sqrt();
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let p = [
            (p0_um[0] + t * (p1_um[0] - p0_um[0])) / vs[0],
            (p0_um[1] + t * (p1_um[1] - p0_um[1])) / vs[1],
            (p0_um[2] + t * (p1_um[2] - p0_um[2])) / vs[2],
        ];
        rows.push((t * length, trilinear_sample(v, p)));
    }
    let (fwhm, dip_contrast) = analyze_profile(&rows);
    Ok(ProfileReport {
        samples: rows,
        fwhm,
        dip_contrast,
    })
}

/// Peaks are local maxima at >= 10% of the global maximum; two or more of
/// them switch the report from FWHM to dip contrast.
fn analyze_profile(rows: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    let n = rows.len();
    let max = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    // flat up to interpolation rounding noise
    if !(max - min > 1e-9 * max.abs()) || max <= 0.0 {
        return (None, None);
    }
    let threshold = 0.1 * max;
    let mut peaks: Vec<usize> = Vec::new();
    for i in 0..n {
        let v = rows[i].1;
        if v < threshold {
            continue;
        }
        let left = if i == 0 { f64::NEG_INFINITY } else { rows[i - 1].1 };
        let right = if i == n - 1 {
            f64::NEG_INFINITY
        } else {
            rows[i + 1].1
        };
        // plateau-tolerant: strictly above the left neighbour, not below the right
        if v > left && v >= right {
            peaks.push(i);
        }
    }
    if peaks.len() >= 2 {
        // two strongest peaks, dip between them
        peaks.sort_by(|&a, &b| rows[b].1.total_cmp(&rows[a].1));
        let (mut i, mut j) = (peaks[0], peaks[1]);
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        let dip = rows[i..=j].iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        return (None, Some((max - dip) / max));
    }
    // single peak: interpolated half-max crossings
    let peak_idx = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap();
    let half = max / 2.0;
    let crossing = |from: usize, dir: i64| -> Option<f64> {
        let mut i = from as i64;
        loop {
            let next = i + dir;
            if next < 0 || next >= n as i64 {
                return None;
            }
            let a = rows[i as usize];
            let b = rows[next as usize];
            if b.1 <= half {
                let f = if (a.1 - b.1).abs() < 1e-300 {
                    0.0
                } else {
                    (a.1 - half) / (a.1 - b.1)
                };
                return Some(a.0 + f * (b.0 - a.0));
            }
            i = next;
        }
    };
    let left = crossing(peak_idx, -1);
    let right = crossing(peak_idx, 1);
    match (left, right) {
        (Some(l), Some(r)) => ((Some((r - l).abs())), None),
        _ => (None, None),
    }
}

/// Solves p(t)=half for the parabola through (t0, a), (t0+1, b), (t0+2, c),
/// preferring a root inside [lo, hi]; falls back to the linear chord
/// between the two samples bracketing the crossing.
fn quad_half_crossing(t0: f64, a: f64, b: f64, c: f64, half: f64, lo: f64, hi: f64) -> f64 {
    // p(t0 + t) = A t² + B t + a
    let qa = (c - 2.0 * b + a) / 2.0;
    let qb = b - a - qa;
    let qc = a - half;
    let mut best: Option<f64> = None;
    if qa.abs() > 1e-300 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            for root in [(-qb + s) / (2.0 * qa), (-qb - s) / (2.0 * qa)] {
                let t = t0 + root;
                if t >= lo - 1e-9 && t <= hi + 1e-9 {
                    best = Some(match best {
                        Some(prev) if (prev - lo) <= (t - lo) => prev,
                        _ => t,
                    });
                }
            }
        }
    } else if qb.abs() > 1e-300 {
        let t = t0 - qc / qb;
        if t >= lo - 1e-9 && t <= hi + 1e-9 {
            best = Some(t);
        }
    }
    best.unwrap_or_else(|| {
        // linear chord between the bracketing samples
        let (x0, v0, v1) = if t0 >= lo { (t0, a, b) } else { (t0 + 1.0, b, c) };
        if (v0 - v1).abs() < 1e-300 {
            x0
        } else {
            x0 + (v0 - half) / (v0 - v1)
        }
    })
}

/// FWHM of the axis profile through the global maximum, in µm, using exact
/// voxel samples and quadratic interpolation of the half-max crossings.
pub fn fwhm_through_peak(v: &Volume, axis: Axis) -> Option<f64> {
    let [px, py, pz] = v.argmax();
    let dims = v.dims();
    let vs = v.voxel_size();
    let (n, step) = match axis {
        Axis::X => (dims[0], vs[0]),
        Axis::Y => (dims[1], vs[1]),
        Axis::Z => (dims[2], vs[2]),
    };
    let vals: Vec<f64> = (0..n)
        .map(|i| match axis {
            Axis::X => v.at(i, py, pz) as f64,
            Axis::Y => v.at(px, i, pz) as f64,
            Axis::Z => v.at(px, py, i) as f64,
        })
        .collect();
    let peak_idx = (0..n).max_by(|&a, &b| vals[a].total_cmp(&vals[b]))?;
    let peak = vals[peak_idx];
    if !(peak > 0.0) {
        return None;
    }
    let half = peak / 2.0;
    // rightward: first sample pair straddling the half level
    let right = (peak_idx..n.saturating_sub(1))
        .find(|&k| vals[k] >= half && vals[k + 1] < half)
        .map(|k| {
            let (a, b, c, t0) = if k + 2 < n {
                (vals[k], vals[k + 1], vals[k + 2], k as f64)
            } else {
                (vals[k - 1], vals[k], vals[k + 1], (k - 1) as f64)
            };
            quad_half_crossing(t0, a, b, c, half, k as f64, (k + 1) as f64)
        })?;
    // leftward: same search in the mirrored coordinate u = k - t
    let left = (1..=peak_idx)
        .rev()
        .find(|&k| vals[k] >= half && vals[k - 1] < half)
        .map(|k| {
            let u = if k >= 2 {
                quad_half_crossing(0.0, vals[k], vals[k - 1], vals[k - 2], half, 0.0, 1.0)
            } else {
                quad_half_crossing(-1.0, vals[k + 1], vals[k], vals[k - 1], half, 0.0, 1.0)
            };
            k as f64 - u
        })?;
    Some((right - left) * step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psf::{rasterize_psf, PsfModel};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_volume(dims: [usize; 3], seed: u64) -> Volume {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dims[0] * dims[1] * dims[2];
        let data: Vec<f32> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        Volume::new(dims, [1.0; 3], data).unwrap()
    }

    #[test]
    fn ncc_identity_shift_and_flip() {
        let a = random_volume([8, 8, 8], 1);
        assert!((ncc_after_alignment(&a, &a, false).unwrap() - 1.0).abs() < 1e-9);
        let shifted = a.shift_circular([3, -2, 1]);
        assert!((ncc_after_alignment(&a, &shifted, false).unwrap() - 1.0).abs() < 1e-6);
        let flipped = a.flip();
        assert!((ncc_after_alignment(&a, &flipped, true).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ncc_symmetric_and_scale_invariant() {
        let a = random_volume([8, 8, 8], 2);
        let b = random_volume([8, 8, 8], 3);
        let ab = ncc_after_alignment(&a, &b, false).unwrap();
        let ba = ncc_after_alignment(&b, &a, false).unwrap();
        assert!((ab - ba).abs() < 1e-6);
        let scaled = b.scaled(4.0);
        let asb = ncc_after_alignment(&a, &scaled, false).unwrap();
        assert!((ab - asb).abs() < 1e-6);
    }

    #[test]
    fn ncc_rejects_constant_input() {
        let a = random_volume([6, 6, 6], 4);
        let c = Volume::new([6, 6, 6], [1.0; 3], vec![2.0; 216]).unwrap();
        assert!(matches!(
            ncc_after_alignment(&a, &c, false),
            Err(Error::ZeroVariance { .. })
        ));
    }

    #[test]
    fn mse_basics_and_loop_oracle() {
        let a = random_volume([5, 5, 5], 5);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let zero = Volume::zeros([5, 5, 5], [1.0; 3]);
        let one = Volume::new([5, 5, 5], [1.0; 3], vec![1.0; 125]).unwrap();
        assert!((mse(&zero, &one).unwrap() - 1.0).abs() < 1e-12);

        let b = random_volume([5, 5, 5], 6);
        let mut want = 0.0f64;
        for (x, y) in a.data().iter().zip(b.data().iter()) {
            want += (*x as f64 - *y as f64).powi(2);
        }
        want /= 125.0;
        assert!((mse(&a, &b).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn gaussian_profile_fwhm_matches_analytic() {
        let sigma = 2.0;
        let m = PsfModel::new([sigma, 1.0, 1.0]).unwrap();
        let v = rasterize_psf(&m, [31, 15, 15]).unwrap();
        let r = line_profile(&v, [0.0, 7.0, 7.0], [30.0, 7.0, 7.0], 301).unwrap();
        let want = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        let got = r.fwhm.expect("single peak");
        assert!((got - want).abs() <= 0.05 * want, "fwhm {got} vs {want}");
        assert!(r.dip_contrast.is_none());
    }

    #[test]
    fn constant_profile_has_no_stats() {
        let c = Volume::new([9, 9, 9], [1.0; 3], vec![3.0; 729]).unwrap();
        let r = line_profile(&c, [0.0, 4.0, 4.0], [8.0, 4.0, 4.0], 81).unwrap();
        assert!(r.fwhm.is_none() && r.dip_contrast.is_none());
    }

    #[test]
    fn two_sharp_beads_have_full_dip_contrast() {
        let mut v = Volume::zeros([17, 9, 9], [1.0; 3]);
        v.set(5, 4, 4, 1.0);
        v.set(11, 4, 4, 1.0);
        let r = line_profile(&v, [0.0, 4.0, 4.0], [16.0, 4.0, 4.0], 17).unwrap();
        assert_eq!(r.dip_contrast, Some(1.0));
        assert!(r.fwhm.is_none());
    }

    #[test]
    fn profile_respects_voxel_size() {
        let m = PsfModel::new([2.0, 1.0, 1.0]).unwrap();
        let mut v = rasterize_psf(&m, [31, 15, 15]).unwrap();
        v.set_voxel_size([0.5, 0.5, 0.5]).unwrap();
        let r = line_profile(&v, [0.0, 3.5, 3.5], [15.0, 3.5, 3.5], 301).unwrap();
        let want = 2.0 * (2.0 * 2f64.ln()).sqrt() * 2.0 * 0.5; // voxels -> um
        let got = r.fwhm.unwrap();
        assert!((got - want).abs() <= 0.05 * want);
    }

    #[test]
    fn out_of_bounds_endpoint_rejected() {
        let v = random_volume([8, 8, 8], 7);
        assert!(matches!(
            line_profile(&v, [0.0, 0.0, 0.0], [9.5, 0.0, 0.0], 10),
            Err(Error::ProfileOutOfBounds { .. })
        ));
    }
}
