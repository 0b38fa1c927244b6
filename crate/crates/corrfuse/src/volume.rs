//! Dense 3D volume type, its geometry conventions, file I/O, and the
//! geometric/radiometric primitives everything else builds on.
//!
//! Layout convention: x-fastest linear storage, `idx = x + nx*(y + ny*z)`.
//! Axes follow the acquisition convention x-lateral, y-transverse (vertical),
//! z-longitudinal (scanning). Storage is 32-bit float; reductions accumulate
//! in 64-bit.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 3D scalar grid with voxel-size metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    voxel_size: [f64; 3],
    data: Vec<f32>,
}

/// Axis selector for projections and profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument {
                message: format!("unknown axis {other:?}, expected x|y|z"),
            }),
        }
    }
}

/// Axis-aligned voxel box, used to select dark regions for background
/// subtraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub origin: [usize; 3],
    pub extent: [usize; 3],
}

impl Region {
    pub fn new(origin: [usize; 3], extent: [usize; 3]) -> Self {
        Region { origin, extent }
    }

    pub fn is_empty(&self) -> bool {
        self.extent.iter().any(|&e| e == 0)
    }

    fn check_contained(&self, dims: [usize; 3]) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyRegion);
        }
        for a in 0..3 {
            if self.origin[a] + self.extent[a] > dims[a] {
                return Err(Error::RegionOutOfBounds {
                    origin: self.origin,
                    extent: self.extent,
                    dims,
                });
            }
        }
        Ok(())
    }
}

/// A single acquisition: a volume plus its rotation angle about the vertical
/// (y) axis and its preprocessing state.
#[derive(Debug, Clone)]
pub struct ViewStack {
    pub volume: Volume,
    pub angle_deg: f64,
    pub preprocessed: bool,
}

impl ViewStack {
    /// Wraps a raw acquisition. The angle is normalized into [0, 360).
    pub fn new(volume: Volume, angle_deg: f64) -> Self {
        ViewStack {
            volume,
            angle_deg: angle_deg.rem_euclid(360.0),
            preprocessed: false,
        }
    }
}

/// 2D image produced by projections; row-major, `idx = u + width*v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2d {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    dims: [usize; 3],
    voxel_size_um: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    layout: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zero_shift_index: Option<[usize; 3]>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

impl Volume {
    /// Builds a volume, validating the type invariants: data length matches
    /// the dims product, all values finite, voxel size strictly positive.
    pub fn new(dims: [usize; 3], voxel_size: [f64; 3], data: Vec<f32>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidDims {
                dims,
                message: "voxel counts must be positive".into(),
            });
        }
        let n = dims[0] * dims[1] * dims[2];
        if data.len() != n {
            return Err(Error::InvalidDims {
                dims,
                message: format!("data length {} != dims product {}", data.len(), n),
            });
        }
        if voxel_size.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidVoxelSize { voxel_size });
        }
        let bad = data.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            return Err(Error::NonFinite {
                count: bad,
                total: n,
            });
        }
        Ok(Volume {
            dims,
            voxel_size,
            data,
        })
    }

    pub fn zeros(dims: [usize; 3], voxel_size: [f64; 3]) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        Volume {
            dims,
            voxel_size,
            data: vec![0.0; n],
        }
    }

    /// Internal constructor for data already known to be finite.
    pub(crate) fn from_parts(dims: [usize; 3], voxel_size: [f64; 3], data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), dims[0] * dims[1] * dims[2]);
        Volume {
            dims,
            voxel_size,
            data,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        self.voxel_size
    }

    pub fn set_voxel_size(&mut self, voxel_size: [f64; 3]) -> Result<()> {
        if voxel_size.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidVoxelSize { voxel_size });
        }
        self.voxel_size = voxel_size;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: f32) {
        let i = self.index(x, y, z);
        self.data[i] = v;
    }

    /// Sum over all voxels, 64-bit accumulation.
    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn min_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    /// Linear index of the largest voxel; first occurrence wins.
    pub fn argmax(&self) -> [usize; 3] {
        let mut best = 0usize;
        let mut best_v = f32::NEG_INFINITY;
        for (i, &v) in self.data.iter().enumerate() {
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        self.unravel(best)
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn scaled(&self, factor: f32) -> Volume {
        let data = self.data.iter().map(|&v| v * factor).collect();
        Volume::from_parts(self.dims, self.voxel_size, data)
    }

    /// Copy with negatives clipped to zero. Sub-voxel resampling and
    /// background subtraction both leave small negative lobes; the solvers
    /// require non-negative inputs.
    pub fn clamped_non_negative(&self) -> Volume {
        let data = self.data.iter().map(|&v| v.max(0.0)).collect();
        Volume::from_parts(self.dims, self.voxel_size, data)
    }

    /// Copies the data as f64 for spectral work.
    pub(crate) fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    /// Centers the original data in a zero field. The placement offset is
    /// floor((target - orig)/2) per axis; the total sum is preserved exactly
    /// because only zeros are added.
    pub fn pad_to(&self, target: [usize; 3]) -> Result<Volume> {
        for a in 0..3 {
            if target[a] < self.dims[a] {
                return Err(Error::PadTargetTooSmall {
                    target,
                    source_dims: self.dims,
                });
            }
        }
        let off = [
            (target[0] - self.dims[0]) / 2,
            (target[1] - self.dims[1]) / 2,
            (target[2] - self.dims[2]) / 2,
        ];
        let mut out = Volume::zeros(target, self.voxel_size);
        for z in 0..self.dims[2] {
            for y in 0..self.dims[1] {
                let src = self.index(0, y, z);
                let dst = out.index(off[0], y + off[1], z + off[2]);
                out.data[dst..dst + self.dims[0]]
                    .copy_from_slice(&self.data[src..src + self.dims[0]]);
            }
        }
        Ok(out)
    }

    /// Central crop, the exact inverse of `pad_to` for matching dims.
    pub fn crop_center(&self, target: [usize; 3]) -> Result<Volume> {
        for a in 0..3 {
            if target[a] > self.dims[a] {
                return Err(Error::CropTargetTooLarge {
                    target,
                    source_dims: self.dims,
                });
            }
        }
        let off = [
            (self.dims[0] - target[0]) / 2,
            (self.dims[1] - target[1]) / 2,
            (self.dims[2] - target[2]) / 2,
        ];
        let mut out = Volume::zeros(target, self.voxel_size);
        for z in 0..target[2] {
            for y in 0..target[1] {
                let src = self.index(off[0], y + off[1], z + off[2]);
                let dst = out.index(0, y, z);
                out.data[dst..dst + target[0]].copy_from_slice(&self.data[src..src + target[0]]);
            }
        }
        Ok(out)
    }

    /// Circular coordinate reversal: out[i,j,k] = v[-i mod nx, -j mod ny, -k mod nz].
    /// An involution; the voxel at the origin stays put.
    pub fn flip(&self) -> Volume {
        let [nx, ny, nz] = self.dims;
        let mut out = Volume::zeros(self.dims, self.voxel_size);
        for z in 0..nz {
            let sz = (nz - z) % nz;
            for y in 0..ny {
                let sy = (ny - y) % ny;
                for x in 0..nx {
                    let sx = (nx - x) % nx;
                    out.data[x + nx * (y + ny * z)] = self.data[sx + nx * (sy + ny * sz)];
                }
            }
        }
        out
    }

    /// Circular translation: content moves by +shift, out[x] = v[x - shift].
    pub fn shift_circular(&self, shift: [i64; 3]) -> Volume {
        let [nx, ny, nz] = self.dims;
        let s = [
            shift[0].rem_euclid(nx as i64) as usize,
            shift[1].rem_euclid(ny as i64) as usize,
            shift[2].rem_euclid(nz as i64) as usize,
        ];
        let mut out = Volume::zeros(self.dims, self.voxel_size);
        for z in 0..nz {
            let sz = (z + nz - s[2]) % nz;
            for y in 0..ny {
                let sy = (y + ny - s[1]) % ny;
                for x in 0..nx {
                    let sx = (x + nx - s[0]) % nx;
                    out.data[x + nx * (y + ny * z)] = self.data[sx + nx * (sy + ny * sz)];
                }
            }
        }
        out
    }

    /// Rotation about the vertical (y) axis through the grid center
    /// ((nx-1)/2, ., (nz-1)/2), trilinear resampling with zero fill.
    /// Multiples of 90 degrees are exact index permutations (90/270 need
    /// nx == nz to stay on-grid).
    pub fn rotate_about_vertical(&self, angle_deg: f64) -> Volume {
        let [nx, ny, nz] = self.dims;
        let a = angle_deg.rem_euclid(360.0);

        // Exact branches.
        let quarter = (a / 90.0).round() as i64;
        if (a - quarter as f64 * 90.0).abs() < 1e-9 {
            match quarter.rem_euclid(4) {
                0 => return self.clone(),
                2 => {
                    let mut out = Volume::zeros(self.dims, self.voxel_size);
                    for z in 0..nz {
                        for y in 0..ny {
                            for x in 0..nx {
                                out.data[x + nx * (y + ny * z)] =
                                    self.data[(nx - 1 - x) + nx * (y + ny * (nz - 1 - z))];
                            }
                        }
                    }
                    return out;
                }
                q @ (1 | 3) if nx == nz => {
                    let mut out = Volume::zeros(self.dims, self.voxel_size);
                    for z in 0..nz {
                        for y in 0..ny {
                            for x in 0..nx {
                                let (sx, sz) = if q == 1 {
                                    (z, nx - 1 - x)
                                } else {
                                    (nz - 1 - z, x)
                                };
                                out.data[x + nx * (y + ny * z)] =
                                    self.data[sx + nx * (y + ny * sz)];
                            }
                        }
                    }
                    return out;
                }
                _ => {}
            }
        }

        let theta = a.to_radians();
        let (sin, cos) = theta.sin_cos();
        let cx = (nx as f64 - 1.0) / 2.0;
        let cz = (nz as f64 - 1.0) / 2.0;
        let mut out = Volume::zeros(self.dims, self.voxel_size);
        for z in 0..nz {
            let dz = z as f64 - cz;
            for x in 0..nx {
                let dx = x as f64 - cx;
                // Pull-back through the inverse rotation.
                let xs = cx + cos * dx + sin * dz;
                let zs = cz - sin * dx + cos * dz;
                let x0 = xs.floor();
                let z0 = zs.floor();
                let fx = xs - x0;
                let fz = zs - z0;
                let x0 = x0 as i64;
                let z0 = z0 as i64;
                for y in 0..ny {
                    let mut acc = 0.0f64;
                    for (dzi, wz) in [(0i64, 1.0 - fz), (1, fz)] {
                        let zi = z0 + dzi;
                        if zi < 0 || zi >= nz as i64 || wz == 0.0 {
                            continue;
                        }
                        for (dxi, wx) in [(0i64, 1.0 - fx), (1, fx)] {
                            let xi = x0 + dxi;
                            if xi < 0 || xi >= nx as i64 || wx == 0.0 {
                                continue;
                            }
                            acc += wz
                                * wx
                                * self.data[xi as usize + nx * (y + ny * zi as usize)] as f64;
                        }
                    }
                    out.data[x + nx * (y + ny * z)] = acc as f32;
                }
            }
        }
        out
    }

    /// Subtracts the mean of the dark region from every voxel. Negatives are
    /// kept; the fusion pipeline later takes the absolute value of the
    /// averaged auto-correlation.
    pub fn subtract_background(&self, dark: &Region) -> Result<Volume> {
        dark.check_contained(self.dims)?;
        let mut acc = 0.0f64;
        for z in dark.origin[2]..dark.origin[2] + dark.extent[2] {
            for y in dark.origin[1]..dark.origin[1] + dark.extent[1] {
                for x in dark.origin[0]..dark.origin[0] + dark.extent[0] {
                    acc += self.at(x, y, z) as f64;
                }
            }
        }
        let mean = acc / (dark.extent[0] * dark.extent[1] * dark.extent[2]) as f64;
        let data = self.data.iter().map(|&v| (v as f64 - mean) as f32).collect();
        Ok(Volume::from_parts(self.dims, self.voxel_size, data))
    }

    /// Per-pixel maximum intensity projection along the chosen axis.
    pub fn mip(&self, axis: Axis) -> Image2d {
        let [nx, ny, nz] = self.dims;
        let (width, height) = match axis {
            Axis::X => (ny, nz),
            Axis::Y => (nx, nz),
            Axis::Z => (nx, ny),
        };
        let mut data = vec![f32::NEG_INFINITY; width * height];
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let v = self.data[x + nx * (y + ny * z)];
                    let (u, w) = match axis {
                        Axis::X => (y, z),
                        Axis::Y => (x, z),
                        Axis::Z => (x, y),
                    };
                    let i = u + width * w;
                    if v > data[i] {
                        data[i] = v;
                    }
                }
            }
        }
        Image2d {
            width,
            height,
            data,
        }
    }
}

/// Loads a raw little-endian f32 volume described by its JSON sidecar.
pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let sc_path = sidecar_path(path);
    let sc_text = fs::read_to_string(&sc_path).map_err(|e| Error::io(&sc_path, e))?;
    let sc: Sidecar = serde_json::from_str(&sc_text).map_err(|e| Error::Sidecar {
        path: sc_path.clone(),
        message: e.to_string(),
    })?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let n = sc.dims[0] * sc.dims[1] * sc.dims[2];
    let expected = (n as u64) * 4;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            dims: sc.dims,
            expected,
            actual: bytes.len() as u64,
        });
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Volume::new(sc.dims, sc.voxel_size_um, data)
}

/// Saves a volume as raw little-endian f32 plus a JSON sidecar, such that
/// `load_volume` inverts it bit-exactly.
pub fn save_volume(v: &Volume, path: impl AsRef<Path>) -> Result<()> {
    save_volume_with(v, path, None, None)
}

pub(crate) fn save_volume_with(
    v: &Volume,
    path: impl AsRef<Path>,
    layout: Option<String>,
    zero_shift_index: Option<[usize; 3]>,
) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut bytes = Vec::with_capacity(v.data.len() * 4);
    for &val in &v.data {
        bytes.extend_from_slice(&val.to_le_bytes());
    }
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    let sc = Sidecar {
        dims: v.dims,
        voxel_size_um: v.voxel_size,
        layout,
        zero_shift_index,
    };
    let sc_path = sidecar_path(path);
    let text = serde_json::to_string_pretty(&sc).expect("sidecar serializes");
    fs::write(&sc_path, text).map_err(|e| Error::io(&sc_path, e))?;
    Ok(())
}

pub(crate) fn load_sidecar_layout(path: &Path) -> Result<(Option<String>, Option<[usize; 3]>)> {
    let sc_path = sidecar_path(path);
    let sc_text = fs::read_to_string(&sc_path).map_err(|e| Error::io(&sc_path, e))?;
    let sc: Sidecar = serde_json::from_str(&sc_text).map_err(|e| Error::Sidecar {
        path: sc_path.clone(),
        message: e.to_string(),
    })?;
    Ok((sc.layout, sc.zero_shift_index))
}

#[derive(Debug, Serialize)]
struct MipSidecar {
    width: usize,
    height: usize,
    scale_min: f32,
    scale_max: f32,
}

/// Writes a 16-bit big-endian binary PGM (P5) with linear min-max scaling;
/// the scaling is recorded in a JSON sidecar next to the image.
pub fn write_mip_pgm(img: &Image2d, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let lo = img.data.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = img.data.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let span = if hi > lo { (hi - lo) as f64 } else { 1.0 };
    let mut out = Vec::with_capacity(img.data.len() * 2 + 32);
    write!(out, "P5\n{} {}\n65535\n", img.width, img.height)
        .map_err(|e| Error::io(path, e))?;
    for &v in &img.data {
        let s = (((v - lo) as f64 / span) * 65535.0).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&s.to_be_bytes());
    }
    fs::write(path, &out).map_err(|e| Error::io(path, e))?;
    let sc = MipSidecar {
        width: img.width,
        height: img.height,
        scale_min: lo,
        scale_max: hi,
    };
    let sc_path = sidecar_path(path);
    fs::write(&sc_path, serde_json::to_string_pretty(&sc).expect("serializes"))
        .map_err(|e| Error::io(&sc_path, e))?;
    Ok(())
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
        let data: Vec<f32> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        Volume::new(dims, [1.0; 3], data).unwrap()
    }

    #[test]
    fn load_rejects_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.raw");
        std::fs::write(&path, vec![0u8; 255 * 4]).unwrap();
        std::fs::write(
            path.with_extension("json"),
            r#"{"dims":[4,4,4],"voxel_size_um":[1,1,1]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_volume(&path),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn load_rejects_missing_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.raw");
        std::fs::write(&path, vec![0u8; 16]).unwrap();
        assert!(matches!(load_volume(&path), Err(Error::Io { .. })));
    }

    #[test]
    fn load_rejects_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.raw");
        let mut bytes = vec![];
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        std::fs::write(
            path.with_extension("json"),
            r#"{"dims":[2,1,1],"voxel_size_um":[1,1,1]}"#,
        )
        .unwrap();
        assert!(matches!(load_volume(&path), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn zero_volume_loads_as_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.raw");
        let v = Volume::zeros([16, 16, 16], [1.0; 3]);
        save_volume(&v, &path).unwrap();
        let raw = std::fs::read(&path).unwrap();
        assert_eq!(raw.len(), 16 * 16 * 16 * 4);
        assert!(raw.iter().all(|&b| b == 0));
        let back = load_volume(&path).unwrap();
        assert_eq!(back.data(), v.data());
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.raw");
        let v = random_volume([8, 8, 8], 42);
        save_volume(&v, &path).unwrap();
        let back = load_volume(&path).unwrap();
        assert_eq!(back.data(), v.data());
        assert_eq!(back.dims(), v.dims());
        assert_eq!(back.voxel_size(), v.voxel_size());
    }

    #[test]
    fn sidecar_records_dims_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.raw");
        let v = Volume::zeros([2, 3, 4], [1.0, 2.0, 0.5]);
        save_volume(&v, &path).unwrap();
        let text = std::fs::read_to_string(path.with_extension("json")).unwrap();
        let sc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(sc["dims"], serde_json::json!([2, 3, 4]));
    }

    #[test]
    fn pad_identity_and_centering() {
        let v = random_volume([3, 3, 3], 1);
        assert_eq!(v.pad_to([3, 3, 3]).unwrap(), v);

        let mut single = Volume::zeros([1, 1, 1], [1.0; 3]);
        single.set(0, 0, 0, 7.0);
        let padded = single.pad_to([5, 5, 5]).unwrap();
        assert_eq!(padded.at(2, 2, 2), 7.0);
        assert_eq!(padded.sum(), 7.0);
    }

    #[test]
    fn pad_preserves_sum() {
        let v = random_volume([6, 6, 6], 2);
        let p = v.pad_to([11, 9, 13]).unwrap();
        assert!((p.sum() - v.sum()).abs() < 1e-9);
    }

    #[test]
    fn pad_rejects_smaller_target() {
        let v = random_volume([4, 4, 4], 3);
        assert!(matches!(
            v.pad_to([3, 4, 4]),
            Err(Error::PadTargetTooSmall { .. })
        ));
    }

    #[test]
    fn crop_inverts_pad() {
        let v = random_volume([5, 5, 5], 4);
        for t in [[5, 5, 5], [9, 9, 9], [8, 10, 9]] {
            let back = v.pad_to(t).unwrap().crop_center([5, 5, 5]).unwrap();
            assert_eq!(back, v);
        }
    }

    #[test]
    fn crop_picks_central_block() {
        let v = random_volume([4, 4, 4], 5);
        let c = v.crop_center([2, 2, 2]).unwrap();
        for z in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    assert_eq!(c.at(x, y, z), v.at(x + 1, y + 1, z + 1));
                }
            }
        }
        assert!(matches!(
            v.crop_center([5, 2, 2]),
            Err(Error::CropTargetTooLarge { .. })
        ));
    }

    #[test]
    fn flip_moves_delta_circularly() {
        let mut v = Volume::zeros([4, 4, 4], [1.0; 3]);
        v.set(1, 0, 0, 1.0);
        let f = v.flip();
        assert_eq!(f.at(3, 0, 0), 1.0);
        assert_eq!(f.sum(), 1.0);

        let mut origin = Volume::zeros([4, 4, 4], [1.0; 3]);
        origin.set(0, 0, 0, 2.0);
        assert_eq!(origin.flip(), origin);
    }

    #[test]
    fn rotate_zero_is_identity() {
        let v = random_volume([6, 6, 6], 7);
        assert_eq!(v.rotate_about_vertical(0.0), v);
    }

    #[test]
    fn rotate_90_permutes_delta_exactly() {
        let mut v = Volume::zeros([5, 4, 5], [1.0; 3]);
        v.set(1, 2, 3, 1.0);
        let r = v.rotate_about_vertical(90.0);
        // out(x,y,z) = in(z, y, n-1-x): the delta lands where that map hits it.
        assert_eq!(r.sum(), 1.0);
        let pos = r.argmax();
        // solve z_src = 1, n-1-x = 3 -> x = 1... find by brute force instead:
        let mut found = None;
        for z in 0..5 {
            for y in 0..4 {
                for x in 0..5 {
                    if r.at(x, y, z) == 1.0 {
                        found = Some([x, y, z]);
                    }
                }
            }
        }
        assert_eq!(Some(pos), found);
        // Four quarter turns come back exactly.
        let mut w = v.clone();
        for _ in 0..4 {
            w = w.rotate_about_vertical(90.0);
        }
        assert_eq!(w, v);
    }

    #[test]
    fn rotate_forward_backward_on_smooth_blob() {
        let dims = [24, 8, 24];
        let mut v = Volume::zeros(dims, [1.0; 3]);
        let (cx, cz) = (11.5f64, 11.5f64);
        for z in 0..24 {
            for y in 0..8 {
                for x in 0..24 {
                    let r2 = (x as f64 - cx).powi(2) / 9.0 + (z as f64 - cz).powi(2) / 9.0;
                    v.set(x, y, z, (-0.5 * r2).exp() as f32);
                }
            }
        }
        let back = v
            .rotate_about_vertical(37.0)
            .rotate_about_vertical(-37.0);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (a, b) in v.data().iter().zip(back.data().iter()) {
            num += ((a - b) as f64).powi(2);
            den += (*a as f64).powi(2);
        }
        let rel = (num / den).sqrt();
        // two trilinear resamplings each smear by up to half a voxel
        assert!(rel <= 0.04, "relative L2 error {rel}");
    }

    #[test]
    fn background_subtraction_zeroes_constant() {
        let v = Volume::new([4, 4, 4], [1.0; 3], vec![5.0; 64]).unwrap();
        let out = v
            .subtract_background(&Region::new([0, 0, 0], [2, 2, 2]))
            .unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn background_subtraction_zero_dark_is_identity() {
        let mut v = Volume::zeros([4, 4, 4], [1.0; 3]);
        v.set(3, 3, 3, 9.0);
        let out = v
            .subtract_background(&Region::new([0, 0, 0], [2, 2, 2]))
            .unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn background_subtraction_dark_mean_is_zero() {
        let v = random_volume([6, 6, 6], 8);
        let dark = Region::new([1, 2, 0], [3, 2, 4]);
        let out = v.subtract_background(&dark).unwrap();
        let mut acc = 0.0f64;
        for z in 0..4 {
            for y in 2..4 {
                for x in 1..4 {
                    acc += out.at(x, y, z) as f64;
                }
            }
        }
        let mean = acc / 24.0;
        assert!(mean.abs() <= 1e-6 * v.max_value() as f64);
    }

    #[test]
    fn background_subtraction_rejects_bad_region() {
        let v = random_volume([4, 4, 4], 9);
        assert!(matches!(
            v.subtract_background(&Region::new([0, 0, 0], [0, 2, 2])),
            Err(Error::EmptyRegion)
        ));
        assert!(matches!(
            v.subtract_background(&Region::new([3, 3, 3], [2, 2, 2])),
            Err(Error::RegionOutOfBounds { .. })
        ));
    }

    #[test]
    fn mip_matches_brute_force() {
        let v = random_volume([6, 6, 6], 10);
        let img = v.mip(Axis::Z);
        for y in 0..6 {
            for x in 0..6 {
                let mut best = f32::NEG_INFINITY;
                for z in 0..6 {
                    best = best.max(v.at(x, y, z));
                }
                assert_eq!(img.data[x + 6 * y], best);
            }
        }
    }

    #[test]
    fn mip_single_peak_and_constant() {
        let mut v = Volume::zeros([4, 4, 4], [1.0; 3]);
        v.set(2, 1, 3, 9.0);
        let img = v.mip(Axis::X);
        assert_eq!(img.data.iter().filter(|&&p| p == 9.0).count(), 1);

        let c = Volume::new([3, 3, 3], [1.0; 3], vec![4.0; 27]).unwrap();
        assert!(c.mip(Axis::Y).data.iter().all(|&p| p == 4.0));
    }

    #[test]
    fn mip_pgm_export_writes_header_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let v = random_volume([5, 4, 3], 11);
        write_mip_pgm(&v.mip(Axis::Z), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n5 4\n65535\n"));
        assert_eq!(bytes.len(), 13 + 5 * 4 * 2);
        assert!(path.with_extension("json").exists());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn flip_is_involution(seed in 0u64..1000) {
            let v = random_volume([5, 5, 5], seed);
            prop_assert_eq!(v.flip().flip(), v);
        }

        #[test]
        fn pad_then_crop_roundtrips(seed in 0u64..1000, tx in 6usize..12, ty in 6usize..12, tz in 6usize..12) {
            let v = random_volume([6, 6, 6], seed);
            let back = v.pad_to([tx, ty, tz]).unwrap().crop_center([6, 6, 6]).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn shift_roundtrips(seed in 0u64..1000, sx in -7i64..7, sy in -7i64..7, sz in -7i64..7) {
            let v = random_volume([5, 6, 7], seed);
            let back = v.shift_circular([sx, sy, sz]).shift_circular([-sx, -sy, -sz]);
            prop_assert_eq!(back, v);
        }
    }
}
