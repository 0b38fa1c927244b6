//! Fixed-point Bayesian de-autocorrelation: Schulz-Snyder iterations (scheme
//! I) and the Anchor-Update protocol with simultaneous deconvolution (scheme
//! II), plus the I-divergence objective and convergence telemetry.
//!
//! Both updates are multiplicative, so non-negative estimates stay
//! non-negative. The iteration loop keeps the estimate in f64; the 32-bit
//! `Volume` appears only at the public boundaries.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft3, fft3_real};
use crate::spectral::{AutocorrVolume, PadPolicy};
use crate::volume::Volume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ss,
    Au,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ss" | "SS" => Ok(Method::Ss),
            "au" | "AU" => Ok(Method::Au),
            other => Err(Error::InvalidArgument {
                message: format!("unknown method {other:?}, expected ss|au"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Fixed iteration budget; the only tuning parameter of either method.
    pub iterations: usize,
    /// Denominator floor as a fraction of the denominator maximum.
    pub epsilon: f64,
    /// Iterations between telemetry rows.
    pub log_every: usize,
    /// Padding convention the measured auto-correlation was built with. The
    /// iteration itself operates cyclically on the measurement grid, where
    /// linear padding has already made cyclic and linear operators agree.
    pub pad: PadPolicy,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            iterations: 5000,
            epsilon: 1e-12,
            log_every: 100,
            pad: PadPolicy::linear(),
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-6) {
            return Err(Error::InvalidSolverOptions {
                message: format!("epsilon {} outside (0, 1e-6]", self.epsilon),
            });
        }
        if self.log_every == 0 {
            return Err(Error::InvalidSolverOptions {
                message: "log_every must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// One telemetry row: iteration, I-divergence of the model against the
/// measurement, and total flux of the estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub idiv: f64,
    pub flux: f64,
}

/// Current object estimate plus iteration counter and convergence trace.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub estimate: Volume,
    pub t: usize,
    pub trace: Vec<TraceRow>,
}

impl SolverState {
    pub fn new(estimate: Volume) -> Self {
        SolverState {
            estimate,
            t: 0,
            trace: Vec::new(),
        }
    }
}

/// Csiszár I-divergence Σ [m·ln(m/p) − m + p] over voxels, with
/// 0·ln(0/p) = 0 and (m>0, p=0) → +infinity.
pub fn i_divergence(measured: &AutocorrVolume, model: &AutocorrVolume) -> Result<f64> {
    if measured.dims() != model.dims() {
        return Err(Error::DimsMismatch {
            a: measured.dims(),
            b: model.dims(),
        });
    }
    let m64: Vec<f64> = measured.volume.data().iter().map(|&v| v as f64).collect();
    let p64: Vec<f64> = model.volume.data().iter().map(|&v| v as f64).collect();
    Ok(i_divergence_raw(&m64, &p64))
}

pub(crate) fn i_divergence_raw(measured: &[f64], model: &[f64]) -> f64 {
    let mut acc = 0.0f64;
    for (&m, &p) in measured.iter().zip(model.iter()) {
        if m > 0.0 {
            if p <= 0.0 {
                return f64::INFINITY;
            }
            acc += m * (m / p).ln() - m + p;
        } else {
            acc += p.max(0.0);
        }
    }
    acc
}

/// Target flux of a converged estimate: Σχ = (Σo)² for auto-correlations.
pub fn target_flux(chi: &AutocorrVolume) -> f64 {
    chi.volume.sum().max(0.0).sqrt()
}

/// f64 working set shared by the iteration loop and the single-step entry
/// points.
struct Core {
    dims: [usize; 3],
    chi: Vec<f64>,
    /// Spectrum of the anchor H for AU, cached once.
    anchor_hat: Option<Vec<Complex<f64>>>,
}

impl Core {
    fn new(chi: &AutocorrVolume, anchor: Option<&AutocorrVolume>) -> Result<Self> {
        let native = chi.to_native();
        let dims = native.dims();
        // Negative lobes from FFT rounding would poison the objective; the
        // pipeline's absolute-value step means they carry no signal.
        let chi64: Vec<f64> = native
            .volume
            .data()
            .iter()
            .map(|&v| (v as f64).max(0.0))
            .collect();
        let anchor_hat = match anchor {
            None => None,
            Some(h) => {
                let hn = h.to_native();
                if hn.dims() != dims {
                    return Err(Error::DimsMismatch {
                        a: dims,
                        b: hn.dims(),
                    });
                }
                if hn.volume.sum() <= 0.0 {
                    return Err(Error::ZeroInput {
                        context: "anchor auto-correlation sums to zero".into(),
                    });
                }
                let h64: Vec<f64> = hn.volume.data().iter().map(|&v| (v as f64).max(0.0)).collect();
                Some(fft3_real(&h64, dims))
            }
        };
        Ok(Core {
            dims,
            chi: chi64,
            anchor_hat,
        })
    }

    /// One Schulz-Snyder update in place. Returns the I-divergence of the
    /// pre-update model against the measurement.
    ///
    /// o' = o · (1/(2Σo)) · [ (χ/(o⋆o)) * o + (χ/(o⋆o)) ⋆ o ],
    /// with an epsilon-floored voxelwise division. The ratio is an even
    /// field, so the two terms coincide in exact arithmetic and their sum is
    /// a single inverse transform of 2·Re(F{ratio})·F{o}.
    fn ss_step(&self, o: &mut [f64], epsilon: f64) -> Result<f64> {
        let n = o.len();
        let sum_o: f64 = o.iter().sum();
        if sum_o <= 0.0 {
            return Err(Error::ZeroInput {
                context: "solver estimate sums to zero".into(),
            });
        }
        let o_hat = fft3_real(o, self.dims);
        // model p = o ⋆ o
        let mut p_hat: Vec<Complex<f64>> =
            o_hat.iter().map(|c| Complex::new(c.norm_sqr(), 0.0)).collect();
        fft3(&mut p_hat, self.dims, true);
        let mut ratio = vec![0.0f64; n];
        let mut p_max = 0.0f64;
        for c in p_hat.iter() {
            if c.re > p_max {
                p_max = c.re;
            }
        }
        let floor = (epsilon * p_max).max(f64::MIN_POSITIVE);
        let mut idiv = 0.0f64;
        for i in 0..n {
            // The objective uses the same floored denominator as the update,
            // so FFT rounding noise in empty regions cannot inject infinities.
            let p = p_hat[i].re.max(floor);
            let m = self.chi[i];
            if m > 0.0 {
                idiv += m * (m / p).ln() - m + p;
            } else {
                idiv += p_hat[i].re.max(0.0);
            }
            ratio[i] = m / p;
        }
        let mut num_hat = fft3_real(&ratio, self.dims);
        for (r, oh) in num_hat.iter_mut().zip(o_hat.iter()) {
            *r = Complex::new(2.0 * r.re, 0.0) * oh;
        }
        fft3(&mut num_hat, self.dims, true);
        let scale = 1.0 / (2.0 * sum_o);
        for i in 0..n {
            o[i] = (o[i] * num_hat[i].re * scale).max(0.0);
        }
        Ok(idiv)
    }

    /// One Anchor-Update step in place. Returns the I-divergence of the
    /// pre-update model.
    ///
    /// K = o ⋆ H (recomputed every iteration);
    /// o' = o · (1/ΣK) · [ (χ/(o*K)) * K̃ ].
    fn au_step(&self, o: &mut [f64], epsilon: f64) -> Result<f64> {
        let h_hat = self.anchor_hat.as_ref().ok_or(Error::MissingAnchor)?;
        let n = o.len();
        let o_hat = fft3_real(o, self.dims);
        // F{K} = conj(F{o}) · F{H}; ΣK is its DC term.
        let k_hat: Vec<Complex<f64>> = o_hat
            .iter()
            .zip(h_hat.iter())
            .map(|(oc, hc)| oc.conj() * hc)
            .collect();
        let sum_k = k_hat[0].re;
        if sum_k <= 0.0 {
            return Err(Error::ZeroInput {
                context: "anchor kernel K sums to zero".into(),
            });
        }
        // model = o * K
        let mut model_hat: Vec<Complex<f64>> = o_hat
            .iter()
            .zip(k_hat.iter())
            .map(|(oc, kc)| oc * kc)
            .collect();
        fft3(&mut model_hat, self.dims, true);
        let mut p_max = 0.0f64;
        for c in model_hat.iter() {
            if c.re > p_max {
                p_max = c.re;
            }
        }
        let floor = (epsilon * p_max).max(f64::MIN_POSITIVE);
        let mut ratio = vec![0.0f64; n];
        let mut idiv = 0.0f64;
        for i in 0..n {
            let p = model_hat[i].re.max(floor);
            let m = self.chi[i];
            if m > 0.0 {
                idiv += m * (m / p).ln() - m + p;
            } else {
                idiv += model_hat[i].re.max(0.0);
            }
            ratio[i] = m / p;
        }
        // (ratio * K̃): F{K̃} = conj(F{K}) for real K.
        let mut num_hat = fft3_real(&ratio, self.dims);
        for (r, kc) in num_hat.iter_mut().zip(k_hat.iter()) {
            *r *= kc.conj();
        }
        fft3(&mut num_hat, self.dims, true);
        let scale = 1.0 / sum_k;
        for i in 0..n {
            o[i] = (o[i] * num_hat[i].re * scale).max(0.0);
        }
        Ok(idiv)
    }

    fn model_idiv(&self, o: &[f64], method: Method, epsilon: f64) -> Result<f64> {
        let o_hat = fft3_real(o, self.dims);
        let mut model_hat: Vec<Complex<f64>> = match method {
            Method::Ss => o_hat
                .iter()
                .map(|c| Complex::new(c.norm_sqr(), 0.0))
                .collect(),
            Method::Au => {
                let h_hat = self.anchor_hat.as_ref().ok_or(Error::MissingAnchor)?;
                o_hat
                    .iter()
                    .zip(h_hat.iter())
                    .map(|(oc, hc)| oc * (oc.conj() * hc))
                    .collect()
            }
        };
        fft3(&mut model_hat, self.dims, true);
        let p_max = model_hat.iter().map(|c| c.re).fold(0.0, f64::max);
        let floor = (epsilon * p_max).max(f64::MIN_POSITIVE);
        // floor only where the measurement is positive; elsewhere it would
        // just inflate the Σp term
        let model: Vec<f64> = model_hat
            .iter()
            .zip(self.chi.iter())
            .map(|(c, &m)| if m > 0.0 { c.re.max(floor) } else { c.re.max(0.0) })
            .collect();
        Ok(i_divergence_raw(&self.chi, &model))
    }
}

fn check_estimate(state: &SolverState, dims: [usize; 3]) -> Result<Vec<f64>> {
    if state.estimate.dims() != dims {
        return Err(Error::DimsMismatch {
            a: state.estimate.dims(),
            b: dims,
        });
    }
    if state.estimate.data().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument {
            message: "solver estimate must be non-negative".into(),
        });
    }
    Ok(state.estimate.to_f64())
}

fn finish_step(
    mut state: SolverState,
    o: Vec<f64>,
    idiv: f64,
    flux_before: f64,
) -> Result<SolverState> {
    if o.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverDiverged { iteration: state.t });
    }
    let data: Vec<f32> = o.iter().map(|&v| v as f32).collect();
    state.trace.push(TraceRow {
        t: state.t,
        idiv,
        flux: flux_before,
    });
    state.estimate = Volume::from_parts(
        state.estimate.dims(),
        state.estimate.voxel_size(),
        data,
    );
    state.t += 1;
    Ok(state)
}

/// One Schulz-Snyder step. The measurement grid and the estimate grid must
/// match (pad the estimate to the χ dims first).
pub fn ss_step(
    state: SolverState,
    chi: &AutocorrVolume,
    opts: &SolverOptions,
) -> Result<SolverState> {
    opts.validate()?;
    let core = Core::new(chi, None)?;
    let mut o = check_estimate(&state, core.dims)?;
    let flux: f64 = o.iter().sum();
    let idiv = core.ss_step(&mut o, opts.epsilon)?;
    finish_step(state, o, idiv, flux)
}

/// One Anchor-Update step against the fixed anchor `h_acorr` (= A{h}).
pub fn au_step(
    state: SolverState,
    chi: &AutocorrVolume,
    h_acorr: &AutocorrVolume,
    opts: &SolverOptions,
) -> Result<SolverState> {
    opts.validate()?;
    let core = Core::new(chi, Some(h_acorr))?;
    let mut o = check_estimate(&state, core.dims)?;
    let flux: f64 = o.iter().sum();
    let idiv = core.au_step(&mut o, opts.epsilon)?;
    finish_step(state, o, idiv, flux)
}

/// Runs the chosen method for `opts.iterations` steps starting from `init`
/// (padded to the measurement grid if smaller), recording a trace row every
/// `log_every` iterations plus a final row.
pub fn solve(
    chi: &AutocorrVolume,
    init: &Volume,
    method: Method,
    h_acorr: Option<&AutocorrVolume>,
    opts: &SolverOptions,
) -> Result<SolverState> {
    opts.validate()?;
    if method == Method::Au && h_acorr.is_none() {
        return Err(Error::MissingAnchor);
    }
    let core = Core::new(chi, if method == Method::Au { h_acorr } else { None })?;
    if init.data().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument {
            message: "initial estimate must be non-negative".into(),
        });
    }
    if init.sum() <= 0.0 {
        return Err(Error::ZeroInput {
            context: "initial estimate sums to zero".into(),
        });
    }
    let padded = if init.dims() == core.dims {
        init.clone()
    } else {
        init.pad_to(core.dims)?
    };
    let mut o = padded.to_f64();
    if opts.iterations == 0 {
        return Ok(SolverState {
            estimate: padded,
            t: 0,
            trace: Vec::new(),
        });
    }
    // Both updates map the estimate flux f to Σχ/(f·ΣH), a period-2
    // oscillation unless f already sits at the fixed point; starting there
    // keeps the flux constant and the objective monotone.
    let sum_chi: f64 = core.chi.iter().sum();
    let sum_h = core
        .anchor_hat
        .as_ref()
        .map(|h| h[0].re)
        .unwrap_or(1.0);
    if sum_chi > 0.0 && sum_h > 0.0 {
        let target = (sum_chi / sum_h).sqrt();
        let scale = target / o.iter().sum::<f64>();
        for v in o.iter_mut() {
            *v *= scale;
        }
    }
    let mut trace = Vec::new();
    for t in 0..opts.iterations {
        let flux: f64 = o.iter().sum();
        let idiv = match method {
            Method::Ss => core.ss_step(&mut o, opts.epsilon)?,
            Method::Au => core.au_step(&mut o, opts.epsilon)?,
        };
        if t % opts.log_every == 0 {
            trace.push(TraceRow { t, idiv, flux });
        }
        if o.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverDiverged { iteration: t });
        }
    }
    // Final row describes the returned state.
    let flux: f64 = o.iter().sum();
    if opts.iterations > 0 {
        let idiv = core.model_idiv(&o, method, opts.epsilon)?;
        trace.push(TraceRow {
            t: opts.iterations,
            idiv,
            flux,
        });
    }
    let data: Vec<f32> = o.iter().map(|&v| v as f32).collect();
    Ok(SolverState {
        estimate: Volume::from_parts(core.dims, padded.voxel_size(), data),
        t: opts.iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{autocorrelate, fft_convolve, fft_crosscorrelate, PadPolicy};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn blob_volume(dims: [usize; 3], seed: u64) -> Volume {
        // Strictly positive random values on a central block, zero outside.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = Volume::zeros(dims, [1.0; 3]);
        for z in dims[2] / 4..3 * dims[2] / 4 {
            for y in dims[1] / 4..3 * dims[1] / 4 {
                for x in dims[0] / 4..3 * dims[0] / 4 {
                    v.set(x, y, z, rng.gen_range(0.5..2.0));
                }
            }
        }
        v
    }

    #[test]
    fn idiv_zero_for_identical_fields() {
        let v = blob_volume([6, 6, 6], 0);
        let a = autocorrelate(&v, &PadPolicy::circular());
        assert_eq!(i_divergence(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn idiv_closed_form_single_voxel() {
        let mut m = Volume::zeros([4, 4, 4], [1.0; 3]);
        let mut p = Volume::zeros([4, 4, 4], [1.0; 3]);
        m.set(0, 0, 0, 2.0);
        p.set(0, 0, 0, 1.0);
        let got = i_divergence(
            &AutocorrVolume::new_native(m),
            &AutocorrVolume::new_native(p),
        )
        .unwrap();
        let want = 2.0 * 2f64.ln() - 1.0;
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn idiv_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 64;
        let m: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
        let mut want = 0.0;
        for i in 0..n {
            if m[i] > 0.0 {
                want += m[i] * (m[i] / p[i]).ln() - m[i] + p[i];
            } else {
                want += p[i];
            }
        }
        assert!((i_divergence_raw(&m, &p) - want).abs() < 1e-10);
    }

    #[test]
    fn idiv_infinite_when_model_vanishes_under_mass() {
        let m = vec![0.0, 1.0];
        let p = vec![1.0, 0.0];
        assert!(i_divergence_raw(&m, &p).is_infinite());
    }

    fn max_rel_change(a: &Volume, b: &Volume) -> f64 {
        let peak = a.max_value() as f64;
        a.data()
            .iter()
            .zip(b.data().iter())
            .map(|(&x, &y)| ((x - y) as f64).abs())
            .fold(0.0, f64::max)
            / peak
    }

    #[test]
    fn ss_fixed_point_on_consistent_state() {
        for seed in 0..3 {
            let o = blob_volume([8, 8, 8], seed);
            let big = o.pad_to([16, 16, 16]).unwrap();
            let chi = autocorrelate(&big, &PadPolicy::circular());
            let next = ss_step(SolverState::new(big.clone()), &chi, &SolverOptions::default())
                .unwrap();
            assert!(max_rel_change(&big, &next.estimate) <= 1e-6);
        }
    }

    #[test]
    fn ss_delta_is_invariant_point() {
        let mut delta = Volume::zeros([8, 8, 8], [1.0; 3]);
        delta.set(4, 4, 4, 1.0);
        let chi = autocorrelate(&delta, &PadPolicy::circular());
        let next = ss_step(SolverState::new(delta.clone()), &chi, &SolverOptions::default())
            .unwrap();
        assert!(max_rel_change(&delta, &next.estimate) <= 1e-6);
    }

    #[test]
    fn ss_two_point_phantom_converges() {
        // o = [5,0,3] embedded in a padded 1D grid; init [4,1,3].
        let m = 8usize;
        let mut truth = Volume::zeros([m, 1, 1], [1.0; 3]);
        truth.set(0, 0, 0, 5.0);
        truth.set(2, 0, 0, 3.0);
        let chi = autocorrelate(&truth, &PadPolicy::circular());

        let mut init = Volume::zeros([m, 1, 1], [1.0; 3]);
        init.set(0, 0, 0, 4.0);
        init.set(1, 0, 0, 1.0);
        init.set(2, 0, 0, 3.0);
        let opts = SolverOptions {
            iterations: 200,
            log_every: 1,
            ..Default::default()
        };
        let state = solve(&chi, &init, Method::Ss, None, &opts).unwrap();
        let first = state.trace.first().unwrap().idiv;
        let last = state.trace.last().unwrap().idiv;
        assert!(last < first, "idiv {first} -> {last}");
        // support pattern: two dominant voxels separated by 2 (up to
        // translation/reflection of the whole signal).
        let est = &state.estimate;
        let mut vals: Vec<(f32, usize)> = est
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        vals.sort_by(|a, b| b.0.total_cmp(&a.0));
        let d = (vals[0].1 as i64 - vals[1].1 as i64).rem_euclid(m as i64);
        assert!(d == 2 || d == m as i64 - 2, "top-two separation {d}");
    }

    #[test]
    fn ss_monotone_idiv_on_inconsistent_data() {
        // χ from a different object than the init: the objective must still
        // decrease monotonically.
        let truth = blob_volume([8, 8, 8], 11).pad_to([16, 16, 16]).unwrap();
        let chi = autocorrelate(&truth, &PadPolicy::circular());
        let init = blob_volume([8, 8, 8], 12);
        let opts = SolverOptions {
            iterations: 150,
            log_every: 1,
            ..Default::default()
        };
        let state = solve(&chi, &init, Method::Ss, None, &opts).unwrap();
        for w in state.trace.windows(2) {
            assert!(
                w[1].idiv <= w[0].idiv * (1.0 + 1e-9) + 1e-12,
                "idiv rose at t={}: {} -> {}",
                w[0].t,
                w[0].idiv,
                w[1].idiv
            );
        }
    }

    #[test]
    fn au_fixed_point_with_delta_anchor() {
        for seed in 0..3 {
            let o = blob_volume([8, 8, 8], seed + 20).pad_to([16, 16, 16]).unwrap();
            let chi = autocorrelate(&o, &PadPolicy::circular());
            let mut delta = Volume::zeros([16, 16, 16], [1.0; 3]);
            delta.set(0, 0, 0, 1.0);
            let anchor = AutocorrVolume::new_native(delta);
            let next = au_step(
                SolverState::new(o.clone()),
                &chi,
                &anchor,
                &SolverOptions::default(),
            )
            .unwrap();
            assert!(max_rel_change(&o, &next.estimate) <= 1e-6);
        }
    }

    #[test]
    fn au_fixed_point_on_consistent_blurred_state() {
        let o = blob_volume([8, 8, 8], 31).pad_to([16, 16, 16]).unwrap();
        // H = A{h} for a small non-trivial kernel.
        let mut h = Volume::zeros([16, 16, 16], [1.0; 3]);
        h.set(0, 0, 0, 0.5);
        h.set(1, 0, 0, 0.3);
        h.set(0, 1, 0, 0.2);
        let anchor = autocorrelate(&h, &PadPolicy::circular());
        // χ = (o ⋆ o) * H = o * K with K = o ⋆ H.
        let oo = fft_crosscorrelate(&o, &o, &PadPolicy::circular()).unwrap();
        let chi_vol = fft_convolve(&oo, &anchor.volume, &PadPolicy::circular()).unwrap();
        let chi = AutocorrVolume::new_native(chi_vol);
        let next = au_step(
            SolverState::new(o.clone()),
            &chi,
            &anchor,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(max_rel_change(&o, &next.estimate) <= 1e-6);
    }

    #[test]
    fn solve_zero_iterations_returns_init() {
        let o = blob_volume([8, 8, 8], 40);
        let chi = autocorrelate(&o, &PadPolicy::circular());
        let opts = SolverOptions {
            iterations: 0,
            ..Default::default()
        };
        let state = solve(&chi, &o, Method::Ss, None, &opts).unwrap();
        assert_eq!(state.estimate.data(), o.data());
        assert!(state.trace.is_empty());
    }

    #[test]
    fn solve_stays_at_truth() {
        // Integer two-point phantom: χ is exactly representable in f32, so
        // the objective at the truth stays at numerical zero.
        let mut truth = Volume::zeros([8, 1, 1], [1.0; 3]);
        truth.set(0, 0, 0, 5.0);
        truth.set(2, 0, 0, 3.0);
        let chi = autocorrelate(&truth, &PadPolicy::circular());
        let opts = SolverOptions {
            iterations: 30,
            log_every: 1,
            ..Default::default()
        };
        let state = solve(&chi, &truth, Method::Ss, None, &opts).unwrap();
        for row in &state.trace {
            assert!(row.idiv <= 1e-10, "idiv {} at t={}", row.idiv, row.t);
        }
        for (a, b) in state.estimate.data().iter().zip(truth.data().iter()) {
            assert!((a - b).abs() <= 1e-5);
        }
    }

    #[test]
    fn solve_rejects_bad_inputs() {
        let o = blob_volume([8, 8, 8], 42);
        let chi = autocorrelate(&o, &PadPolicy::circular());
        let zero = Volume::zeros([8, 8, 8], [1.0; 3]);
        assert!(matches!(
            solve(&chi, &zero, Method::Ss, None, &SolverOptions::default()),
            Err(Error::ZeroInput { .. })
        ));
        assert!(matches!(
            solve(&chi, &o, Method::Au, None, &SolverOptions::default()),
            Err(Error::MissingAnchor)
        ));
        let bad_opts = SolverOptions {
            epsilon: 1e-3,
            ..Default::default()
        };
        assert!(matches!(
            solve(&chi, &o, Method::Ss, None, &bad_opts),
            Err(Error::InvalidSolverOptions { .. })
        ));
    }

    #[test]
    fn estimates_stay_non_negative() {
        let truth = blob_volume([8, 8, 8], 43).pad_to([16, 16, 16]).unwrap();
        let chi = autocorrelate(&truth, &PadPolicy::circular());
        let init = blob_volume([8, 8, 8], 44);
        let opts = SolverOptions {
            iterations: 50,
            ..Default::default()
        };
        let state = solve(&chi, &init, Method::Ss, None, &opts).unwrap();
        assert!(state.estimate.data().iter().all(|&v| v >= 0.0));
    }
}
