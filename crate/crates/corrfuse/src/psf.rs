//! Parametric anisotropic Gaussian PSFs: rasterization, per-view rotation,
//! auto-correlation-space averages, and the effective-PSF inversion.
//!
//! The model PSF is elongated along z (the scanning axis). A view acquired
//! at angle φ and rotated back to the reference frame carries the 0° PSF
//! rotated by -φ; that orientation convention lives here and nowhere else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{solve, Method, SolverOptions};
use crate::spectral::{autocorrelate, AutocorrVolume, PadPolicy};
use crate::volume::Volume;

/// Anisotropic Gaussian PSF description, sigmas in voxels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfModel {
    pub sigma: [f64; 3],
}

impl PsfModel {
    pub fn new(sigma: [f64; 3]) -> Result<Self> {
        if sigma.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidSigma { sigma });
        }
        Ok(PsfModel { sigma })
    }
}

/// Abramowitz & Stegun 7.1.26, |error| < 1.5e-7; plenty for the truncation
/// guard.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn truncated_mass(sigma: [f64; 3], dims: [usize; 3]) -> f64 {
    let mut retained = 1.0;
    for a in 0..3 {
        let half_extent = dims[a] as f64 / 2.0;
        retained *= erf(half_extent / (sigma[a] * std::f64::consts::SQRT_2));
    }
    1.0 - retained
}

/// Separable Gaussian centered at the grid center ((n-1)/2 per axis),
/// normalized to sum exactly 1. Errors when the grid truncates more than
/// 1e-6 of the analytic mass.
pub fn rasterize_psf(m: &PsfModel, dims: [usize; 3]) -> Result<Volume> {
    PsfModel::new(m.sigma)?;
    let truncated = truncated_mass(m.sigma, dims);
    if truncated > 1e-6 {
        return Err(Error::PsfDimsTooSmall {
            dims,
            sigma: m.sigma,
            truncated,
        });
    }
    let profiles: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            let c = (dims[a] as f64 - 1.0) / 2.0;
            (0..dims[a])
                .map(|i| {
                    let d = i as f64 - c;
                    (-0.5 * (d / m.sigma[a]).powi(2)).exp()
                })
                .collect()
        })
        .collect();
    Ok(separable_normalized(dims, &profiles))
}

/// Same Gaussian but arranged fft-native (peak at index 0, tails wrapping),
/// for cyclic blurring without any net displacement. Useful wherever a
/// convolution kernel must not move the content.
pub fn rasterize_psf_native(m: &PsfModel, dims: [usize; 3]) -> Result<Volume> {
    PsfModel::new(m.sigma)?;
    let truncated = truncated_mass(m.sigma, dims);
    if truncated > 1e-6 {
        return Err(Error::PsfDimsTooSmall {
            dims,
            sigma: m.sigma,
            truncated,
        });
    }
    let profiles: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            let n = dims[a] as i64;
            (0..n)
                .map(|i| {
                    let d = if i <= n / 2 { i } else { i - n } as f64;
                    (-0.5 * (d / m.sigma[a]).powi(2)).exp()
                })
                .collect()
        })
        .collect();
    Ok(separable_normalized(dims, &profiles))
}

fn separable_normalized(dims: [usize; 3], profiles: &[Vec<f64>]) -> Volume {
    let mut data = vec![0.0f32; dims[0] * dims[1] * dims[2]];
    let mut sum = 0.0f64;
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            let gyz = profiles[1][y] * profiles[2][z];
            for x in 0..dims[0] {
                let v = profiles[0][x] * gyz;
                sum += v;
                data[x + dims[0] * (y + dims[1] * z)] = v as f32;
            }
        }
    }
    let inv = (1.0 / sum) as f32;
    for v in data.iter_mut() {
        *v *= inv;
    }
    Volume::from_parts(dims, [1.0; 3], data)
}

/// PSF carried by a view acquired at `angle_deg` after rotation back to the
/// reference frame: the 0° PSF rotated by -angle, renormalized to sum 1.
pub fn psf_for_view(m: &PsfModel, angle_deg: f64, dims: [usize; 3]) -> Result<Volume> {
    let base = rasterize_psf(m, dims)?;
    if angle_deg.rem_euclid(360.0) == 0.0 {
        return Ok(base);
    }
    let mut rotated = base.rotate_about_vertical(-angle_deg);
    let sum = rotated.sum();
    if sum <= 0.0 {
        return Err(Error::ZeroInput {
            context: "rotated PSF sums to zero".into(),
        });
    }
    let inv = (1.0 / sum) as f32;
    for v in rotated.data_mut().iter_mut() {
        *v *= inv;
    }
    Ok(rotated)
}

/// The direct-space average PSF h̄ = (1/N) Σ_i h^{φ_i}; the blur acting on
/// the aligned-and-averaged fusion.
pub fn average_direct_psf(m: &PsfModel, angles_deg: &[f64], dims: [usize; 3]) -> Result<Volume> {
    if angles_deg.is_empty() {
        return Err(Error::EmptyViewList);
    }
    let mut acc = vec![0.0f64; dims[0] * dims[1] * dims[2]];
    for &angle in angles_deg {
        let h = psf_for_view(m, angle, dims)?;
        for (a, &v) in acc.iter_mut().zip(h.data().iter()) {
            *a += v as f64;
        }
    }
    let inv = 1.0 / angles_deg.len() as f64;
    let data: Vec<f32> = acc.iter().map(|&v| (v * inv) as f32).collect();
    Ok(Volume::from_parts(dims, [1.0; 3], data))
}

/// The shift-space average PSF H̄ = (1/N) Σ_i A{h^{φ_i}}; the blur acting on
/// the averaged auto-correlation.
pub fn average_autocorr_psf(
    m: &PsfModel,
    angles_deg: &[f64],
    dims: [usize; 3],
    policy: &PadPolicy,
) -> Result<AutocorrVolume> {
    if angles_deg.is_empty() {
        return Err(Error::EmptyViewList);
    }
    let padded = policy.padded_dims(dims);
    let mut acc = vec![0.0f64; padded[0] * padded[1] * padded[2]];
    for &angle in angles_deg {
        let h = psf_for_view(m, angle, dims)?;
        let ac = autocorrelate(&h, policy);
        for (a, &v) in acc.iter_mut().zip(ac.volume.data().iter()) {
            *a += v as f64;
        }
    }
    let inv = 1.0 / angles_deg.len() as f64;
    let data: Vec<f32> = acc.iter().map(|&v| (v * inv) as f32).collect();
    Ok(AutocorrVolume::new_native(Volume::from_parts(
        padded,
        [1.0; 3],
        data,
    )))
}

/// Effective object-domain PSF implied by averaging auto-correlations:
/// h_eff = A⁻¹{H̄}, recovered by Schulz-Snyder inversion initialized from
/// the 0° PSF, normalized to sum 1. Lives on the H̄ grid.
pub fn effective_psf(
    m: &PsfModel,
    h_bar: &AutocorrVolume,
    opts: &SolverOptions,
) -> Result<Volume> {
    let dims = h_bar.dims();
    let init = rasterize_psf(m, dims)?;
    let state = solve(h_bar, &init, Method::Ss, None, opts)?;
    let sum = state.estimate.sum();
    if sum <= 0.0 {
        return Err(Error::ZeroInput {
            context: "effective PSF estimate sums to zero".into(),
        });
    }
    Ok(state.estimate.scaled((1.0 / sum) as f32))
}
