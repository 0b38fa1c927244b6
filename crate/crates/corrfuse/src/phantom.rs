//! Synthetic ground-truth objects and the forward model that turns one
//! truth into a multi-view dataset: rotate → blur → sub-voxel shift → noise.
//!
//! All geometry is confined to the central half of the grid so circular
//! arithmetic never wraps content across a border.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft3_real, ifft3_real};
use crate::psf::{rasterize_psf_native, PsfModel};
use crate::spectral::{fft_convolve, PadPolicy};
use crate::volume::{save_volume, ViewStack, Volume};

/// Solid ball; `radius < 0.5` degenerates to a trilinear point splat.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bead {
    pub center: [f64; 3],
    pub radius: f64,
    pub intensity: f32,
}

/// Hollow ball of the given wall thickness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Shell {
    pub center: [f64; 3],
    pub radius: f64,
    pub thickness: f64,
    pub intensity: f32,
}

/// Piecewise-linear filament of constant radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tube {
    pub waypoints: Vec<[f64; 3]>,
    pub radius: f64,
    pub intensity: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomKind {
    Beads,
    Spheres,
    Shells,
    Tubes,
}

impl FromStr for PhantomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beads" => Ok(PhantomKind::Beads),
            "spheres" => Ok(PhantomKind::Spheres),
            "shells" => Ok(PhantomKind::Shells),
            "tubes" => Ok(PhantomKind::Tubes),
            other => Err(Error::InvalidArgument {
                message: format!(
                    "unknown phantom kind '{other}' (expected beads|spheres|shells|tubes)"
                ),
            }),
        }
    }
}

/// Explicit scene description; `make_phantom` rasterizes it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Phantom {
    pub kind: PhantomKind,
    pub dims: [usize; 3],
    pub seed: u64,
    pub beads: Vec<Bead>,
    pub shells: Vec<Shell>,
    pub tubes: Vec<Tube>,
}

impl Phantom {
    /// Seeded random scene of the requested kind, kept inside the central
    /// half of the grid.
    pub fn random(kind: PhantomKind, dims: [usize; 3], seed: u64) -> Result<Phantom> {
        let lo = [
            dims[0] as f64 / 4.0,
            dims[1] as f64 / 4.0,
            dims[2] as f64 / 4.0,
        ];
        let hi = [
            3.0 * dims[0] as f64 / 4.0,
            3.0 * dims[1] as f64 / 4.0,
            3.0 * dims[2] as f64 / 4.0,
        ];
        let span = (hi[0] - lo[0]).min(hi[1] - lo[1]).min(hi[2] - lo[2]);
        if span < 4.0 {
            return Err(Error::InvalidDims {
                dims,
                message: "grid too small for a random phantom".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Phantom {
            kind,
            dims,
            seed,
            beads: Vec::new(),
            shells: Vec::new(),
            tubes: Vec::new(),
        };
        let point = |rng: &mut ChaCha8Rng, margin: f64| {
            [
                rng.gen_range(lo[0] + margin..hi[0] - margin),
                rng.gen_range(lo[1] + margin..hi[1] - margin),
                rng.gen_range(lo[2] + margin..hi[2] - margin),
            ]
        };
        match kind {
            PhantomKind::Beads => {
                for _ in 0..6 {
                    p.beads.push(Bead {
                        center: point(&mut rng, 0.5),
                        radius: 0.0,
                        intensity: rng.gen_range(0.5..2.0),
                    });
                }
            }
            PhantomKind::Spheres => {
                let rmax = (span / 5.0).max(1.5);
                for _ in 0..4 {
                    let r = rng.gen_range(1.5..rmax.max(1.6));
                    p.beads.push(Bead {
                        center: point(&mut rng, r),
                        radius: r,
                        intensity: rng.gen_range(0.5..1.5),
                    });
                }
            }
            PhantomKind::Shells => {
                let rmax = (span / 4.0).max(2.5);
                for _ in 0..2 {
                    let r = rng.gen_range(2.5..rmax.max(2.6));
                    p.shells.push(Shell {
                        center: point(&mut rng, r + 1.0),
                        radius: r,
                        thickness: rng.gen_range(1.0..2.0),
                        intensity: rng.gen_range(0.5..1.5),
                    });
                }
            }
            PhantomKind::Tubes => {
                let r = 1.2;
                for _ in 0..2 {
                    let n = rng.gen_range(3..5usize);
                    let waypoints = (0..n).map(|_| point(&mut rng, r + 0.5)).collect();
                    p.tubes.push(Tube {
                        waypoints,
                        radius: r,
                        intensity: rng.gen_range(0.5..1.5),
                    });
                }
            }
        }
        Ok(p)
    }
}

fn check_inside_central_half(
    center: [f64; 3],
    reach: f64,
    dims: [usize; 3],
    what: &str,
) -> Result<()> {
    for a in 0..3 {
        let lo = dims[a] as f64 / 4.0;
        let hi = 3.0 * dims[a] as f64 / 4.0;
        if center[a] - reach < lo - 1e-9 || center[a] + reach > hi + 1e-9 {
            return Err(Error::PhantomOutOfBounds {
                message: format!(
                    "{what} at {center:?} with reach {reach} leaves the central half of {dims:?}"
                ),
            });
        }
    }
    Ok(())
}

fn splat_point(v: &mut Volume, center: [f64; 3], intensity: f32) {
    let dims = v.dims();
    let base = [center[0].floor(), center[1].floor(), center[2].floor()];
    let frac = [
        center[0] - base[0],
        center[1] - base[1],
        center[2] - base[2],
    ];
    for dz in 0..2usize {
        let z = base[2] as i64 + dz as i64;
        let wz = if dz == 0 { 1.0 - frac[2] } else { frac[2] };
        for dy in 0..2usize {
            let y = base[1] as i64 + dy as i64;
            let wy = if dy == 0 { 1.0 - frac[1] } else { frac[1] };
            for dx in 0..2usize {
                let x = base[0] as i64 + dx as i64;
                let wx = if dx == 0 { 1.0 - frac[0] } else { frac[0] };
                let w = (wz * wy * wx) as f32;
                if w == 0.0 {
                    continue;
                }
                if x >= 0
                    && y >= 0
                    && z >= 0
                    && (x as usize) < dims[0]
                    && (y as usize) < dims[1]
                    && (z as usize) < dims[2]
                {
                    let idx = v.index(x as usize, y as usize, z as usize);
                    v.data_mut()[idx] += intensity * w;
                }
            }
        }
    }
}

const SUPERSAMPLE: usize = 4;

/// Coverage fraction of a voxel by the region `inside(p)`, with a cheap
/// distance-band shortcut supplied by the caller.
fn coverage(center: [f64; 3], inside: &dyn Fn([f64; 3]) -> bool) -> f64 {
    let mut hits = 0usize;
    let s = SUPERSAMPLE as f64;
    for iz in 0..SUPERSAMPLE {
        for iy in 0..SUPERSAMPLE {
            for ix in 0..SUPERSAMPLE {
                let p = [
                    center[0] - 0.5 + (ix as f64 + 0.5) / s,
                    center[1] - 0.5 + (iy as f64 + 0.5) / s,
                    center[2] - 0.5 + (iz as f64 + 0.5) / s,
                ];
                if inside(p) {
                    hits += 1;
                }
            }
        }
    }
    hits as f64 / (s * s * s)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn dist_to_segment(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]])
}

/// Paints a region described by a signed distance to its boundary:
/// `signed(p) < 0` inside. Voxels further than ±0.9 from the boundary skip
/// supersampling.
fn paint_region(
    v: &mut Volume,
    bbox_lo: [f64; 3],
    bbox_hi: [f64; 3],
    intensity: f32,
    signed: &dyn Fn([f64; 3]) -> f64,
) {
    let dims = v.dims();
    let lo = [
        (bbox_lo[0].floor().max(0.0)) as usize,
        (bbox_lo[1].floor().max(0.0)) as usize,
        (bbox_lo[2].floor().max(0.0)) as usize,
    ];
    let hi = [
        (bbox_hi[0].ceil() as usize).min(dims[0] - 1),
        (bbox_hi[1].ceil() as usize).min(dims[1] - 1),
        (bbox_hi[2].ceil() as usize).min(dims[2] - 1),
    ];
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let c = [x as f64, y as f64, z as f64];
                let d = signed(c);
                let frac = if d <= -0.9 {
                    1.0
                } else if d >= 0.9 {
                    0.0
                } else {
                    coverage(c, &|p| signed(p) < 0.0)
                };
                if frac > 0.0 {
                    let idx = v.index(x, y, z);
                    v.data_mut()[idx] += intensity * frac as f32;
                }
            }
        }
    }
}

/// Rasterizes a phantom description into a non-negative volume with
/// anti-aliased (supersampled) boundaries. Voxel i is centered at
/// coordinate i per axis, voxel size 1 µm.
pub fn make_phantom(spec: &Phantom) -> Result<Volume> {
    let dims = spec.dims;
    if dims.iter().any(|&d| d < 4) {
        return Err(Error::InvalidDims {
            dims,
            message: "phantom grid needs at least 4 voxels per axis".into(),
        });
    }
    let mut v = Volume::zeros(dims, [1.0; 3]);
    for b in &spec.beads {
        check_inside_central_half(b.center, b.radius, dims, "bead")?;
        if b.radius < 0.5 {
            splat_point(&mut v, b.center, b.intensity);
        } else {
            let r = b.radius;
            paint_region(
                &mut v,
                [b.center[0] - r, b.center[1] - r, b.center[2] - r],
                [b.center[0] + r, b.center[1] + r, b.center[2] + r],
                b.intensity,
                &|p| dist(p, b.center) - r,
            );
        }
    }
    for s in &spec.shells {
        let reach = s.radius + s.thickness / 2.0;
        check_inside_central_half(s.center, reach, dims, "shell")?;
        paint_region(
            &mut v,
            [
                s.center[0] - reach,
                s.center[1] - reach,
                s.center[2] - reach,
            ],
            [
                s.center[0] + reach,
                s.center[1] + reach,
                s.center[2] + reach,
            ],
            s.intensity,
            &|p| (dist(p, s.center) - s.radius).abs() - s.thickness / 2.0,
        );
    }
    for t in &spec.tubes {
        if t.waypoints.len() < 2 {
            return Err(Error::PhantomOutOfBounds {
                message: "tube needs at least 2 waypoints".into(),
            });
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for w in &t.waypoints {
            check_inside_central_half(*w, t.radius, dims, "tube waypoint")?;
            for a in 0..3 {
                lo[a] = lo[a].min(w[a] - t.radius);
                hi[a] = hi[a].max(w[a] + t.radius);
            }
        }
        let segs: Vec<([f64; 3], [f64; 3])> = t
            .waypoints
            .windows(2)
            .map(|w| (w[0], w[1]))
            .collect();
        let radius = t.radius;
        paint_region(&mut v, lo, hi, t.intensity, &|p| {
            segs.iter()
                .map(|(a, b)| dist_to_segment(p, *a, *b))
                .fold(f64::INFINITY, f64::min)
                - radius
        });
    }
    Ok(v)
}

/// Acquisition parameters shared by all views of one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub angles_deg: Vec<f64>,
    pub psf: PsfModel,
    /// Per-axis bound on the random real-valued view shifts, in voxels.
    pub shift_max: f64,
    /// Additive Gaussian noise σ relative to the clean view's peak.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl AcquisitionSpec {
    pub fn new(
        angles_deg: Vec<f64>,
        psf: PsfModel,
        shift_max: f64,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::EmptyViewList);
        }
        if !(shift_max >= 0.0 && shift_max.is_finite()) {
            return Err(Error::InvalidAcquisition {
                message: format!("shift_max {shift_max} must be finite and >= 0"),
            });
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::InvalidAcquisition {
                message: format!("noise sigma {noise_sigma} must be finite and >= 0"),
            });
        }
        Ok(AcquisitionSpec {
            angles_deg,
            psf,
            shift_max,
            noise_sigma,
            seed,
        })
    }

    /// Twelve views in 30° steps, the default acquisition geometry.
    pub fn default_angles() -> Vec<f64> {
        (0..12).map(|i| 30.0 * i as f64).collect()
    }
}

/// Exact sub-voxel translation by a Fourier phase ramp; content moves by
/// +shift voxels (circularly). Exact for band-limited volumes.
pub fn fourier_shift(v: &Volume, shift: [f64; 3]) -> Volume {
    let dims = v.dims();
    let mut hat = fft3_real(&v.to_f64(), dims);
    let freq = |i: usize, n: usize| -> f64 {
        if i <= n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    };
    for z in 0..dims[2] {
        let pz = freq(z, dims[2]) * shift[2] / dims[2] as f64;
        for y in 0..dims[1] {
            let py = freq(y, dims[1]) * shift[1] / dims[1] as f64;
            for x in 0..dims[0] {
                let px = freq(x, dims[0]) * shift[0] / dims[0] as f64;
                let phase = -2.0 * std::f64::consts::PI * (px + py + pz);
                let idx = x + dims[0] * (y + dims[1] * z);
                hat[idx] *= Complex::from_polar(1.0, phase);
            }
        }
    }
    let out = ifft3_real(hat, dims);
    Volume::from_parts(
        dims,
        v.voxel_size(),
        out.into_iter().map(|x| x as f32).collect(),
    )
}

fn view_seed(master: u64, index: usize) -> u64 {
    master
        .wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// One synthetic measurement: rotate the truth by +angle, blur with the
/// 0°-frame PSF, translate by a real-valued shift, then add seeded noise.
/// Negatives are clamped only when noise is actually injected, so the
/// noise-free model stays exactly linear.
pub fn forward_view(
    truth: &Volume,
    angle_deg: f64,
    shift: [f64; 3],
    spec: &AcquisitionSpec,
    noise_seed: u64,
) -> Result<ViewStack> {
    let dims = truth.dims();
    for a in 0..3 {
        if shift[a].abs() > dims[a] as f64 / 8.0 {
            return Err(Error::InvalidAcquisition {
                message: format!("shift {shift:?} exceeds dims/8 of {dims:?}"),
            });
        }
    }
    let rotated = truth.rotate_about_vertical(angle_deg);
    let kernel = rasterize_psf_native(&spec.psf, dims)?;
    let blurred = fft_convolve(&rotated, &kernel, &PadPolicy::circular())?;
    let mut view = fourier_shift(&blurred, shift);
    if spec.noise_sigma > 0.0 {
        let sigma = spec.noise_sigma * view.max_value() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let normal = rand_distr::Normal::new(0.0, sigma).expect("sigma finite");
        for x in view.data_mut() {
            *x = (*x + rng.sample::<f64, _>(normal) as f32).max(0.0);
        }
    }
    Ok(ViewStack::new(view, angle_deg))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewEntry {
    pub file: String,
    pub angle_deg: f64,
    pub shift: [f64; 3],
}

/// Everything needed to reproduce and consume a dataset directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dims: [usize; 3],
    pub voxel_size_um: [f64; 3],
    pub angles_deg: Vec<f64>,
    pub psf_sigma: [f64; 3],
    pub shift_max: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub truth_file: String,
    pub views: Vec<ViewEntry>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<DatasetManifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Sidecar {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Simulates every view of `spec`, drawing independent uniform shifts in
/// [−shift_max, shift_max]³ per view, and writes the dataset to `outdir`:
/// `truth.raw`, `view_XXX.raw` (each with its JSON sidecar) and
/// `manifest.json`. Fully deterministic in the master seed.
pub fn make_dataset(
    truth: &Volume,
    spec: &AcquisitionSpec,
    outdir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    let outdir = outdir.as_ref();
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    save_volume(truth, outdir.join("truth.raw"))?;
    let mut views = Vec::with_capacity(spec.angles_deg.len());
    for (i, &angle) in spec.angles_deg.iter().enumerate() {
        let seed = view_seed(spec.seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = if spec.shift_max > 0.0 {
            [
                rng.gen_range(-spec.shift_max..=spec.shift_max),
                rng.gen_range(-spec.shift_max..=spec.shift_max),
                rng.gen_range(-spec.shift_max..=spec.shift_max),
            ]
        } else {
            [0.0; 3]
        };
        // independent stream for the noise so shift draws never perturb it
        let view = forward_view(truth, angle, shift, spec, seed ^ 0x5DEE_CE66_D1CE_4A53)?;
        let file = format!("view_{i:03}.raw");
        save_volume(&view.volume, outdir.join(&file))?;
        views.push(ViewEntry {
            file,
            angle_deg: angle,
            shift,
        });
    }
    let manifest = DatasetManifest {
        dims: truth.dims(),
        voxel_size_um: truth.voxel_size(),
        angles_deg: spec.angles_deg.clone(),
        psf_sigma: spec.psf.sigma,
        shift_max: spec.shift_max,
        noise_sigma: spec.noise_sigma,
        seed: spec.seed,
        truth_file: "truth.raw".into(),
        views,
    };
    manifest.save(outdir.join("manifest.json"))?;
    Ok(manifest)
}

/// Reads a dataset directory written by [`make_dataset`] back into raw
/// view stacks (not yet preprocessed).
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(DatasetManifest, Vec<ViewStack>)> {
    let dir = dir.as_ref();
    let manifest = DatasetManifest::load(dir.join("manifest.json"))?;
    let mut views = Vec::with_capacity(manifest.views.len());
    for entry in &manifest.views {
        let vol = crate::volume::load_volume(dir.join(&entry.file))?;
        views.push(ViewStack::new(vol, entry.angle_deg));
    }
    Ok((manifest, views))
}

/// Convenience used by the CLI and examples: dataset file path helper.
pub fn dataset_path(dir: impl AsRef<Path>, file: &str) -> PathBuf {
    dir.as_ref().join(file)
}
