//! Multi-view volumetric fusion in auto-correlation space.
//!
//! Instead of registering views of a rotated sample, each view is mapped to
//! its auto-correlation — which is blind to translation — the
//! auto-correlations are averaged, and the average is inverted back to an
//! inherently aligned, sharpened object by Schulz-Snyder or Anchor-Update
//! fixed-point iterations.
//!
//! The pipeline in one breath:
//!
//! ```text
//! views ──preprocess──▶ rotate back ──A{·}──▶ χ̄ = |mean| ──solve──▶ object
//! ```
//!
//! See the `examples/` directory for one runnable program per capability,
//! or the `corrfuse` binary for the batch pipeline.

pub mod cli;
pub mod error;
mod fft;
pub mod fusion;
pub mod metrics;
pub mod phantom;
pub mod psf;
pub mod solvers;
pub mod spectral;
pub mod volume;

pub use error::{Error, Result};
pub use fusion::{
    fuse_autocorrelations, fuse_direct, fuse_direct_with_displacements, preprocess_view,
    register_pair, Displacement, FusedDataset,
};
pub use metrics::{align_to, fwhm_through_peak, line_profile, mse, ncc_after_alignment, ProfileReport};
pub use phantom::{
    forward_view, fourier_shift, load_dataset, make_dataset, make_phantom, AcquisitionSpec, Bead,
    DatasetManifest, Phantom, PhantomKind, Shell, Tube, ViewEntry,
};
pub use psf::{
    average_autocorr_psf, average_direct_psf, effective_psf, psf_for_view, rasterize_psf,
    rasterize_psf_native, PsfModel,
};
pub use solvers::{
    au_step, i_divergence, solve, ss_step, target_flux, Method, SolverOptions, SolverState,
    TraceRow,
};
pub use spectral::{
    autocorrelate, fft_convolve, fft_crosscorrelate, good_fft_size, AutocorrVolume, Layout,
    PadMode, PadPolicy,
};
pub use volume::{
    load_volume, save_volume, write_mip_pgm, Axis, Image2d, Region, ViewStack, Volume,
};
