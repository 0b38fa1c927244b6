use corrfuse::{
    average_autocorr_psf, average_direct_psf, effective_psf, fwhm_through_peak, AcquisitionSpec,
    Axis, PadPolicy, PsfModel, SolverOptions,
};
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dims = [33, 15, 33];
    let model = PsfModel::new([1.0, 1.0, 3.0])?;
    let angles = AcquisitionSpec::default_angles();
    let h_bar = average_direct_psf(&model, &angles, dims)?;
    let h_acorr = average_autocorr_psf(&model, &angles, dims, &PadPolicy::linear())?;
    for iters in [20000usize, 80000] {
        let opts = SolverOptions { iterations: iters, ..SolverOptions::default() };
        let h_eff = effective_psf(&model, &h_acorr, &opts)?;
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let direct = fwhm_through_peak(&h_bar, axis).unwrap_or(f64::NAN);
            let eff = fwhm_through_peak(&h_eff, axis).unwrap_or(f64::NAN);
            println!("iters {iters} axis {axis:?}: direct {direct:.3} eff {eff:.3}");
        }
    }
    Ok(())
}
