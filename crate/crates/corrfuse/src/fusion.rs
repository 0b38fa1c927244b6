//! View preprocessing and the two fusion routes: averaging in shift-space
//! (no registration at all) and the registered direct average used as a
//! baseline.

use crate::error::{Error, Result};
use crate::spectral::{autocorrelate, fft_crosscorrelate, AutocorrVolume, PadPolicy};
use crate::volume::{Region, ViewStack, Volume};

/// Integer voxel displacement between two volumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Displacement {
    pub m: [i64; 3],
}

/// Holds the products of a fusion run.
#[derive(Debug, Clone)]
pub struct FusedDataset {
    /// χ̄, the absolute averaged auto-correlation.
    pub chi_bar: AutocorrVolume,
    /// Registered direct average, when the baseline was requested.
    pub o_bar_direct: Option<Volume>,
    /// Averaged PSF auto-correlation, when a PSF model is known.
    pub h_bar: Option<AutocorrVolume>,
    pub n_views: usize,
    pub angles: Vec<f64>,
}

/// Background subtraction (mean of the dark region) followed by rotation
/// by −φ back to the reference orientation. Refuses to run twice.
pub fn preprocess_view(raw: &ViewStack, dark: Option<&Region>) -> Result<ViewStack> {
    if raw.preprocessed {
        return Err(Error::AlreadyPreprocessed {
            angle_deg: raw.angle_deg,
        });
    }
    let cleaned = match dark {
        Some(region) => raw.volume.subtract_background(region)?,
        None => raw.volume.clone(),
    };
    Ok(ViewStack {
        volume: cleaned.rotate_about_vertical(-raw.angle_deg),
        angle_deg: raw.angle_deg,
        preprocessed: true,
    })
}

fn check_views(views: &[ViewStack]) -> Result<()> {
    if views.is_empty() {
        return Err(Error::EmptyViewList);
    }
    for v in views {
        if !v.preprocessed {
            return Err(Error::NotPreprocessed {
                angle_deg: v.angle_deg,
            });
        }
        if v.volume.dims() != views[0].volume.dims() {
            return Err(Error::DimsMismatch {
                a: views[0].volume.dims(),
                b: v.volume.dims(),
            });
        }
    }
    Ok(())
}

/// χ̄ = |mean_i A{o^{φ_i}}|, accumulated in f64 in view order. No
/// registration happens here — that is the whole point.
pub fn fuse_autocorrelations(views: &[ViewStack], policy: &PadPolicy) -> Result<AutocorrVolume> {
    check_views(views)?;
    let mut acc: Vec<f64> = Vec::new();
    let mut out_dims = [0usize; 3];
    for v in views {
        let a = autocorrelate(&v.volume, policy);
        if acc.is_empty() {
            out_dims = a.dims();
            acc = vec![0.0; a.volume.len()];
        }
        for (s, &x) in acc.iter_mut().zip(a.volume.data().iter()) {
            *s += x as f64;
        }
    }
    let n = views.len() as f64;
    let data: Vec<f32> = acc.iter().map(|&s| (s / n).abs() as f32).collect();
    let vol = Volume::new(out_dims, views[0].volume.voxel_size(), data)?;
    Ok(AutocorrVolume::new_native(vol))
}

fn signed_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Integer displacement from the cross-correlation peak, reported relative
/// to ξ=0 with components folded into ±n/2. Exact-value ties resolve to the
/// smallest lexicographic (mx, my, mz).
pub fn register_pair(reference: &Volume, moving: &Volume) -> Result<Displacement> {
    for (v, name) in [(reference, "reference"), (moving, "moving")] {
        if v.data().iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroInput {
                context: format!("register_pair {name} volume is all zeros"),
            });
        }
    }
    let xc = fft_crosscorrelate(reference, moving, &PadPolicy::circular())?;
    let dims = xc.dims();
    let mut best_val = f32::NEG_INFINITY;
    let mut best = [0i64; 3];
    for (idx, &v) in xc.data().iter().enumerate() {
        if v < best_val {
            continue;
        }
        let [x, y, z] = xc.unravel(idx);
        let cand = [
            signed_index(x, dims[0]),
            signed_index(y, dims[1]),
            signed_index(z, dims[2]),
        ];
        if v > best_val || cand < best {
            best_val = v;
            best = cand;
        }
    }
    Ok(Displacement { m: best })
}

/// Registered direct average ō: every view is translated by −m_i onto the
/// reference (the 0° view when present, the first view otherwise) and the
/// stack is averaged in fixed order.
pub fn fuse_direct(views: &[ViewStack]) -> Result<Volume> {
    fuse_direct_with_displacements(views).map(|(v, _)| v)
}

/// Same as [`fuse_direct`] but also reports the per-view displacements.
pub fn fuse_direct_with_displacements(
    views: &[ViewStack],
) -> Result<(Volume, Vec<Displacement>)> {
    check_views(views)?;
    let ref_idx = views
        .iter()
        .position(|v| v.angle_deg == 0.0)
        .unwrap_or(0);
    let reference = &views[ref_idx].volume;
    let mut acc = vec![0.0f64; reference.len()];
    let mut displacements = Vec::with_capacity(views.len());
    for v in views {
        let disp = register_pair(reference, &v.volume)?;
        let aligned = v
            .volume
            .shift_circular([-disp.m[0], -disp.m[1], -disp.m[2]]);
        for (s, &x) in acc.iter_mut().zip(aligned.data().iter()) {
            *s += x as f64;
        }
        displacements.push(disp);
    }
    let n = views.len() as f64;
    let data: Vec<f32> = acc.iter().map(|&s| (s / n) as f32).collect();
    Ok((
        Volume::new(reference.dims(), reference.voxel_size(), data)?,
        displacements,
    ))
}
