//! Internal 3D FFT engine: complex-to-complex transforms over the crate's
//! x-fastest volume layout, with a process-wide plan cache.
//!
//! All spectral math in the crate runs through here in 64-bit complex,
//! regardless of the 32-bit storage of [`crate::Volume`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

static PLAN_CACHE: Lazy<Mutex<HashMap<(usize, bool), Plan>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(len: usize, inverse: bool) -> Plan {
    let mut cache = PLAN_CACHE.lock().unwrap();
    cache
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            planner.plan_fft(
                len,
                if inverse {
                    FftDirection::Inverse
                } else {
                    FftDirection::Forward
                },
            )
        })
        .clone()
}

/// In-place 3D FFT over `data` laid out x-fastest with the given dims.
/// The inverse transform includes the 1/N normalization.
pub(crate) fn fft3(data: &mut [Complex<f64>], dims: [usize; 3], inverse: bool) {
    let [nx, ny, nz] = dims;
    assert_eq!(data.len(), nx * ny * nz);

    // x axis: lines are contiguous.
    let fx = plan(nx, inverse);
    let mut scratch = vec![Complex::default(); fx.get_inplace_scratch_len()];
    for line in data.chunks_exact_mut(nx) {
        fx.process_with_scratch(line, &mut scratch);
    }

    // y axis: gather strided lines per z-plane.
    let fy = plan(ny, inverse);
    scratch.resize(fy.get_inplace_scratch_len(), Complex::default());
    let mut line = vec![Complex::default(); ny];
    for plane in data.chunks_exact_mut(nx * ny) {
        for x in 0..nx {
            for y in 0..ny {
                line[y] = plane[x + nx * y];
            }
            fy.process_with_scratch(&mut line, &mut scratch);
            for y in 0..ny {
                plane[x + nx * y] = line[y];
            }
        }
    }

    // z axis: stride nx*ny.
    let fz = plan(nz, inverse);
    scratch.resize(fz.get_inplace_scratch_len(), Complex::default());
    let mut zline = vec![Complex::default(); nz];
    let plane = nx * ny;
    for y in 0..ny {
        for x in 0..nx {
            let base = x + nx * y;
            for z in 0..nz {
                zline[z] = data[base + plane * z];
            }
            fz.process_with_scratch(&mut zline, &mut scratch);
            for z in 0..nz {
                data[base + plane * z] = zline[z];
            }
        }
    }

    if inverse {
        let norm = 1.0 / (nx * ny * nz) as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }
}

/// Forward transform of a real field.
pub(crate) fn fft3_real(data: &[f64], dims: [usize; 3]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft3(&mut buf, dims, false);
    buf
}

/// Inverse transform, keeping the real part only.
pub(crate) fn ifft3_real(mut spectrum: Vec<Complex<f64>>, dims: [usize; 3]) -> Vec<f64> {
    fft3(&mut spectrum, dims, true);
    spectrum.into_iter().map(|c| c.re).collect()
}
