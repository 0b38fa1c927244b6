//! Batch front-end: simulate → fuse → reconstruct → metrics as separate
//! subcommands, each leaving a `run.json` provenance record next to its
//! outputs so any artifact can be traced back to its exact inputs.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O error, 4 data/contract
//! violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fusion::{
    fuse_autocorrelations, fuse_direct_with_displacements, preprocess_view, Displacement,
};
use crate::metrics::{align_to, line_profile, mse};
use crate::phantom::{
    load_dataset, make_dataset, make_phantom, AcquisitionSpec, Phantom, PhantomKind,
};
use crate::psf::{average_autocorr_psf, average_direct_psf, effective_psf, PsfModel};
use crate::solvers::{solve, Method, SolverOptions, SolverState};
use crate::spectral::{AutocorrVolume, Layout, PadPolicy};
use crate::volume::{
    load_sidecar_layout, load_volume, save_volume, save_volume_with, write_mip_pgm, Axis, Region,
    Volume,
};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 2;
const EXIT_IO: i32 = 3;
const EXIT_DATA: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "corrfuse",
    version,
    about = "Multi-view volumetric fusion in auto-correlation space",
    after_help = "Exit codes: 0 success, 2 usage error, 3 I/O error, 4 data/contract violation.\n\
                  Execution is sequential regardless of --threads; outputs are bit-identical for any value."
)]
struct Cli {
    /// Thread cap (accepted for interface stability; execution is sequential)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic multi-view dataset with known ground truth
    Simulate(SimulateArgs),
    /// Average per-view auto-correlations into the fused measurement
    Fuse(FuseArgs),
    /// Classical register-then-average baseline
    Baseline(BaselineArgs),
    /// Invert a fused auto-correlation back to an object estimate
    Reconstruct(ReconstructArgs),
    /// Compare a reconstruction against a reference volume
    Metrics(MetricsArgs),
    /// Emit the direct, auto-correlation and effective PSFs
    Psf(PsfArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Phantom kind: beads|spheres|shells|tubes
    #[arg(long, default_value = "spheres")]
    phantom: String,
    /// Cubic grid side length in voxels
    #[arg(long, default_value_t = 64)]
    dims: usize,
    /// Comma-separated view angles in degrees (default: 12 steps of 30)
    #[arg(long)]
    angles: Option<String>,
    /// PSF sigmas "sx,sy,sz" in voxels
    #[arg(long, default_value = "1,1,3")]
    sigma: String,
    /// Per-axis bound on random real-valued view shifts, voxels
    #[arg(long, default_value_t = 2.0)]
    shift_max: f64,
    /// Additive Gaussian noise sigma relative to each view's peak
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FuseArgs {
    /// Dataset directory containing manifest.json
    #[arg(long)]
    views: PathBuf,
    /// Override the manifest angles (comma-separated degrees)
    #[arg(long)]
    angles: Option<String>,
    /// Dark region "x0,y0,z0,dx,dy,dz" for background subtraction
    #[arg(long)]
    dark: Option<String>,
    /// Padding policy: linear|circular
    #[arg(long, default_value = "linear")]
    pad: String,
    /// Also emit the registered direct average and displacement table
    #[arg(long, action = ArgAction::SetTrue)]
    baseline: bool,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    /// Dataset directory containing manifest.json
    #[arg(long)]
    views: PathBuf,
    /// Dark region "x0,y0,z0,dx,dy,dz" for background subtraction
    #[arg(long)]
    dark: Option<String>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    /// Fused auto-correlation volume (chi_bar.raw)
    #[arg(long)]
    chi: PathBuf,
    /// Initial estimate: a volume path, "auto" (seeded from χ), or "random"
    #[arg(long, default_value = "auto")]
    init: String,
    /// Seed for --init random
    #[arg(long, default_value_t = 0)]
    init_seed: u64,
    /// Inversion method: ss|au
    #[arg(long, default_value = "ss")]
    method: String,
    /// PSF auto-correlation anchor volume (required for au)
    #[arg(long)]
    psf_acorr: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    #[arg(long, default_value_t = 100)]
    log_every: usize,
    /// Output volume path; the trace CSV lands next to it
    #[arg(long)]
    out: PathBuf,
    /// Also write a maximum-intensity projection along this axis (x|y|z)
    #[arg(long)]
    mip: Option<String>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Volume under test
    #[arg(long)]
    recon: PathBuf,
    /// Reference volume (ground truth)
    #[arg(long)]
    truth: PathBuf,
    /// Do not consider the point-reflected candidate during alignment
    #[arg(long, action = ArgAction::SetTrue)]
    no_flip: bool,
    /// Line profile "x0,y0,z0:x1,y1,z1:count" (µm), sampled on the aligned volume
    #[arg(long)]
    profile: Option<String>,
    /// Output directory for metrics.json (and profile.csv)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PsfArgs {
    /// PSF sigmas "sx,sy,sz" in voxels
    #[arg(long, default_value = "1,1,3")]
    sigma: String,
    /// Cubic grid side length in voxels
    #[arg(long, default_value_t = 33)]
    dims: usize,
    /// Comma-separated view angles in degrees (default: 12 steps of 30)
    #[arg(long)]
    angles: Option<String>,
    /// Padding policy: linear|circular
    #[arg(long, default_value = "linear")]
    pad: String,
    /// Iteration budget for the effective-PSF inversion
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

/// Provenance record written next to every subcommand's outputs.
#[derive(Debug, Serialize)]
struct RunRecord {
    subcommand: String,
    args: Vec<String>,
    inputs: Vec<InputHash>,
    version: String,
    wall_time_s: f64,
}

#[derive(Debug, Serialize)]
struct InputHash {
    path: String,
    sha256: String,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(format!("{:x}", h.finalize()))
}

fn hash_inputs(paths: &[PathBuf]) -> Result<Vec<InputHash>> {
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        out.push(InputHash {
            path: p.display().to_string(),
            sha256: sha256_file(p)?,
        });
    }
    Ok(out)
}

fn write_run_record(
    dir: &Path,
    subcommand: &str,
    args: &[String],
    inputs: Vec<InputHash>,
    started: Instant,
) -> Result<()> {
    let record = RunRecord {
        subcommand: subcommand.into(),
        args: args.to_vec(),
        inputs,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let path = dir.join("run.json");
    let text = serde_json::to_string_pretty(&record).expect("record serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| Error::InvalidArgument {
                message: format!("bad {what} component {t:?}"),
            })
        })
        .collect()
}

fn parse_sigma(text: &str) -> Result<[f64; 3]> {
    let v = parse_f64_list(text, "sigma")?;
    if v.len() != 3 {
        return Err(Error::InvalidArgument {
            message: format!("sigma needs 3 components, got {}", v.len()),
        });
    }
    Ok([v[0], v[1], v[2]])
}

fn parse_angles(text: Option<&str>) -> Result<Vec<f64>> {
    match text {
        Some(t) => parse_f64_list(t, "angle"),
        None => Ok(AcquisitionSpec::default_angles()),
    }
}

fn parse_dark(text: &str) -> Result<Region> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| Error::InvalidArgument {
                message: format!("bad dark-region component {t:?}"),
            })
        })
        .collect::<Result<_>>()?;
    if parts.len() != 6 {
        return Err(Error::InvalidArgument {
            message: format!("dark region needs 6 components, got {}", parts.len()),
        });
    }
    Ok(Region::new(
        [parts[0], parts[1], parts[2]],
        [parts[3], parts[4], parts[5]],
    ))
}

fn parse_profile(text: &str) -> Result<([f64; 3], [f64; 3], usize)> {
    let segs: Vec<&str> = text.split(':').collect();
    if segs.len() != 3 {
        return Err(Error::InvalidArgument {
            message: "profile spec must be x0,y0,z0:x1,y1,z1:count".into(),
        });
    }
    let p0 = parse_f64_list(segs[0], "profile point")?;
    let p1 = parse_f64_list(segs[1], "profile point")?;
    if p0.len() != 3 || p1.len() != 3 {
        return Err(Error::InvalidArgument {
            message: "profile points need 3 components each".into(),
        });
    }
    let count = segs[2].trim().parse::<usize>().map_err(|_| Error::InvalidArgument {
        message: format!("bad profile sample count {:?}", segs[2]),
    })?;
    Ok(([p0[0], p0[1], p0[2]], [p1[0], p1[1], p1[2]], count))
}

fn load_autocorr(path: &Path) -> Result<AutocorrVolume> {
    let volume = load_volume(path)?;
    let (layout, zero_shift_index) = load_sidecar_layout(path)?;
    let ac = match layout.as_deref() {
        None | Some("fft-native") => AutocorrVolume {
            zero_shift_index: zero_shift_index.unwrap_or([0, 0, 0]),
            volume,
            layout: Layout::FftNative,
        },
        Some("centered") => {
            let d = volume.dims();
            AutocorrVolume {
                zero_shift_index: zero_shift_index
                    .unwrap_or([d[0] / 2, d[1] / 2, d[2] / 2]),
                volume,
                layout: Layout::Centered,
            }
        }
        Some(other) => {
            return Err(Error::Sidecar {
                path: path.to_path_buf(),
                message: format!("unknown layout {other:?}"),
            })
        }
    };
    Ok(ac.to_native())
}

fn save_autocorr(ac: &AutocorrVolume, path: &Path) -> Result<()> {
    save_volume_with(
        &ac.volume,
        path,
        Some(ac.layout.as_str().to_string()),
        Some(ac.zero_shift_index),
    )
}

fn write_trace_csv(path: &Path, state: &SolverState) -> Result<()> {
    let mut text = String::from("t,idiv,flux\n");
    for row in &state.trace {
        text.push_str(&format!("{},{},{}\n", row.t, row.idiv, row.flux));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn preprocessed_views(
    dir: &Path,
    angles_override: Option<&str>,
    dark: Option<&Region>,
) -> Result<Vec<crate::volume::ViewStack>> {
    let (_, mut raw) = load_dataset(dir)?;
    if let Some(text) = angles_override {
        let angles = parse_f64_list(text, "angle")?;
        if angles.len() != raw.len() {
            return Err(Error::InvalidArgument {
                message: format!(
                    "{} angles given for {} views",
                    angles.len(),
                    raw.len()
                ),
            });
        }
        for (v, &a) in raw.iter_mut().zip(angles.iter()) {
            v.angle_deg = a.rem_euclid(360.0);
        }
    }
    raw.iter().map(|v| preprocess_view(v, dark)).collect()
}

fn dataset_input_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest = crate::phantom::DatasetManifest::load(dir.join("manifest.json"))?;
    let mut paths = vec![dir.join("manifest.json")];
    for v in &manifest.views {
        paths.push(dir.join(&v.file));
    }
    Ok(paths)
}

#[derive(Debug, Serialize)]
struct FuseRecord {
    angles_deg: Vec<f64>,
    pad: String,
    n_views: usize,
    displacements: Option<Vec<[i64; 3]>>,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let kind: PhantomKind = a.phantom.parse()?;
    let angles = parse_angles(a.angles.as_deref())?;
    let sigma = parse_sigma(&a.sigma)?;
    let dims = [a.dims, a.dims, a.dims];
    let truth = make_phantom(&Phantom::random(kind, dims, a.seed)?)?;
    let spec = AcquisitionSpec::new(angles, PsfModel::new(sigma)?, a.shift_max, a.noise, a.seed)?;
    make_dataset(&truth, &spec, &a.out)?;
    Ok(())
}

fn cmd_fuse(a: &FuseArgs) -> Result<()> {
    let policy: PadPolicy = a.pad.parse()?;
    let dark = a.dark.as_deref().map(parse_dark).transpose()?;
    let views = preprocessed_views(&a.views, a.angles.as_deref(), dark.as_ref())?;
    let chi_bar = fuse_autocorrelations(&views, &policy)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    save_autocorr(&chi_bar, &a.out.join("chi_bar.raw"))?;
    let displacements = if a.baseline {
        let (o_bar, disps) = fuse_direct_with_displacements(&views)?;
        save_volume(&o_bar, a.out.join("o_bar.raw"))?;
        Some(disps.iter().map(|d: &Displacement| d.m).collect())
    } else {
        None
    };
    let record = FuseRecord {
        angles_deg: views.iter().map(|v| v.angle_deg).collect(),
        pad: a.pad.clone(),
        n_views: views.len(),
        displacements,
    };
    let path = a.out.join("fuse.json");
    fs::write(&path, serde_json::to_string_pretty(&record).expect("serializes"))
        .map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn cmd_baseline(a: &BaselineArgs) -> Result<()> {
    let dark = a.dark.as_deref().map(parse_dark).transpose()?;
    let views = preprocessed_views(&a.views, None, dark.as_ref())?;
    let (o_bar, disps) = fuse_direct_with_displacements(&views)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    save_volume(&o_bar, a.out.join("o_bar.raw"))?;
    let record = FuseRecord {
        angles_deg: views.iter().map(|v| v.angle_deg).collect(),
        pad: "n/a".into(),
        n_views: views.len(),
        displacements: Some(disps.iter().map(|d| d.m).collect()),
    };
    let path = a.out.join("baseline.json");
    fs::write(&path, serde_json::to_string_pretty(&record).expect("serializes"))
        .map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn build_init(a: &ReconstructArgs, chi: &AutocorrVolume) -> Result<Volume> {
    let dims = chi.dims();
    let flux = crate::solvers::target_flux(chi);
    match a.init.as_str() {
        "auto" => {
            // a flat field is a stationary point of the multiplicative
            // updates, so seed from the measurement itself instead
            let init = chi.volume.clamped_non_negative();
            let sum = init.sum();
            if sum <= 0.0 {
                return Err(Error::ZeroInput {
                    context: "auto init: measurement sums to zero".into(),
                });
            }
            Ok(init.scaled((flux / sum) as f32))
        }
        "random" => {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.init_seed);
            let n = dims[0] * dims[1] * dims[2];
            let mut data: Vec<f32> = (0..n).map(|_| rng.gen_range(0.0f32..1.0)).collect();
            let sum: f64 = data.iter().map(|&v| v as f64).sum();
            let scale = (flux / sum) as f32;
            for v in data.iter_mut() {
                *v *= scale;
            }
            Ok(Volume::new(dims, chi.volume.voxel_size(), data)?)
        }
        path => Ok(load_volume(path)?.clamped_non_negative()),
    }
}

fn cmd_reconstruct(a: &ReconstructArgs) -> Result<Vec<PathBuf>> {
    let method: Method = a.method.parse()?;
    let chi = load_autocorr(&a.chi)?;
    let anchor = match (&a.psf_acorr, method) {
        (Some(p), _) => Some(load_autocorr(p)?),
        (None, Method::Au) => return Err(Error::MissingAnchor),
        (None, Method::Ss) => None,
    };
    let init = build_init(a, &chi)?;
    let opts = SolverOptions {
        iterations: a.iters,
        log_every: a.log_every,
        ..SolverOptions::default()
    };
    let state = solve(&chi, &init, method, anchor.as_ref(), &opts)?;
    save_volume(&state.estimate, &a.out)?;
    let stem = a
        .out
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "recon".into());
    let dir = a.out.parent().map(Path::to_path_buf).unwrap_or_default();
    write_trace_csv(&dir.join(format!("{stem}_trace.csv")), &state)?;
    if let Some(axis_text) = &a.mip {
        let axis: Axis = axis_text.parse()?;
        let img = state.estimate.mip(axis);
        write_mip_pgm(&img, dir.join(format!("{stem}_mip_{axis_text}.pgm")))?;
    }
    let mut inputs = vec![a.chi.clone()];
    if let Some(p) = &a.psf_acorr {
        inputs.push(p.clone());
    }
    if !matches!(a.init.as_str(), "auto" | "random") {
        inputs.push(PathBuf::from(&a.init));
    }
    Ok(inputs)
}

#[derive(Debug, Serialize)]
struct MetricsRecord {
    ncc: f64,
    mse_aligned: f64,
    fwhm_um: Option<f64>,
    dip_contrast: Option<f64>,
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let truth = load_volume(&a.truth)?;
    let recon = load_volume(&a.recon)?;
    let allow_flip = !a.no_flip;
    let (aligned, ncc) = align_to(&truth, &recon, allow_flip)?;
    let mse_aligned = mse(&truth, &aligned)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut record = MetricsRecord {
        ncc,
        mse_aligned,
        fwhm_um: None,
        dip_contrast: None,
    };
    if let Some(spec) = &a.profile {
        let (p0, p1, count) = parse_profile(spec)?;
        let report = line_profile(&aligned, p0, p1, count)?;
        record.fwhm_um = report.fwhm;
        record.dip_contrast = report.dip_contrast;
        let mut csv = String::from("position_um,intensity\n");
        for (pos, val) in &report.samples {
            csv.push_str(&format!("{pos},{val}\n"));
        }
        let path = a.out.join("profile.csv");
        fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    }
    let path = a.out.join("metrics.json");
    fs::write(&path, serde_json::to_string_pretty(&record).expect("serializes"))
        .map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn profile_csv_rows(v: &Volume, name: &str, out: &mut String) {
    for (axis, label) in [(Axis::X, "x"), (Axis::Y, "y"), (Axis::Z, "z")] {
        let [px, py, pz] = v.argmax();
        let dims = v.dims();
        let n = match axis {
            Axis::X => dims[0],
            Axis::Y => dims[1],
            Axis::Z => dims[2],
        };
        for i in 0..n {
            let val = match axis {
                Axis::X => v.at(i, py, pz),
                Axis::Y => v.at(px, i, pz),
                Axis::Z => v.at(px, py, i),
            };
            out.push_str(&format!("{name},{label},{i},{val}\n"));
        }
    }
}

fn cmd_psf(a: &PsfArgs) -> Result<()> {
    let sigma = parse_sigma(&a.sigma)?;
    let angles = parse_angles(a.angles.as_deref())?;
    let policy: PadPolicy = a.pad.parse()?;
    let dims = [a.dims, a.dims, a.dims];
    let model = PsfModel::new(sigma)?;
    let h_bar = average_direct_psf(&model, &angles, dims)?;
    let h_acorr = average_autocorr_psf(&model, &angles, dims, &policy)?;
    let opts = SolverOptions {
        iterations: a.iters,
        ..SolverOptions::default()
    };
    let h_eff = effective_psf(&model, &h_acorr, &opts)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    save_volume(&h_bar, a.out.join("h_bar.raw"))?;
    save_autocorr(&h_acorr, &a.out.join("h_acorr_bar.raw"))?;
    save_volume(&h_eff, a.out.join("h_eff.raw"))?;
    let mut csv = String::from("volume,axis,index,intensity\n");
    profile_csv_rows(&h_bar, "h_bar", &mut csv);
    profile_csv_rows(&h_acorr.to_centered().volume, "h_acorr_bar", &mut csv);
    profile_csv_rows(&h_eff, "h_eff", &mut csv);
    let path = a.out.join("profiles.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Sidecar { .. } | Error::SizeMismatch { .. } => EXIT_IO,
        _ => EXIT_DATA,
    }
}

/// Runs the CLI on explicit argv (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            // help/version go to stdout, diagnostics to stderr
            let _ = e.print();
            return code;
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be >= 1");
        return EXIT_USAGE;
    }
    let started = Instant::now();
    let result: Result<(PathBuf, &str, Vec<PathBuf>)> = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a).map(|_| (a.out.clone(), "simulate", vec![])),
        Command::Fuse(a) => {
            let inputs = dataset_input_paths(&a.views).unwrap_or_default();
            cmd_fuse(a).map(|_| (a.out.clone(), "fuse", inputs))
        }
        Command::Baseline(a) => {
            let inputs = dataset_input_paths(&a.views).unwrap_or_default();
            cmd_baseline(a).map(|_| (a.out.clone(), "baseline", inputs))
        }
        Command::Reconstruct(a) => {
            let dir = a.out.parent().map(Path::to_path_buf).unwrap_or_default();
            cmd_reconstruct(a).map(|inputs| (dir, "reconstruct", inputs))
        }
        Command::Metrics(a) => {
            cmd_metrics(a).map(|_| (a.out.clone(), "metrics", vec![a.recon.clone(), a.truth.clone()]))
        }
        Command::Psf(a) => cmd_psf(a).map(|_| (a.out.clone(), "psf", vec![])),
    };
    match result {
        Ok((dir, subcommand, inputs)) => {
            let hashed = match hash_inputs(&inputs) {
                Ok(h) => h,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit_code_for(&e);
                }
            };
            if let Err(e) = write_run_record(&dir, subcommand, &args, hashed, started) {
                eprintln!("error: {e}");
                return exit_code_for(&e);
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dark_and_profile_and_sigma() {
        let r = parse_dark("1,2,3,4,5,6").unwrap();
        assert_eq!(r.origin, [1, 2, 3]);
        assert_eq!(r.extent, [4, 5, 6]);
        assert!(parse_dark("1,2,3").is_err());
        let (p0, p1, n) = parse_profile("0,1,2:3,4,5:50").unwrap();
        assert_eq!(p0, [0.0, 1.0, 2.0]);
        assert_eq!(p1, [3.0, 4.0, 5.0]);
        assert_eq!(n, 50);
        assert!(parse_profile("0,1,2:3,4,5").is_err());
        assert_eq!(parse_sigma("1, 1 ,3").unwrap(), [1.0, 1.0, 3.0]);
        assert!(parse_sigma("1,1").is_err());
    }

    #[test]
    fn default_angles_are_twelve_thirty_degree_steps() {
        let angles = parse_angles(None).unwrap();
        assert_eq!(angles.len(), 12);
        assert_eq!(angles[1] - angles[0], 30.0);
    }

    #[test]
    fn help_and_usage_exit_codes() {
        assert_eq!(run(["corrfuse", "--help"]), 0);
        assert_eq!(run(["corrfuse", "frobnicate"]), 2);
        assert_eq!(run(["corrfuse"]), 2);
    }
}
