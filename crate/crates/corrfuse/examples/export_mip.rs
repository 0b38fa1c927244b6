//! Render maximum-intensity projections of a phantom to 16-bit PGM images.
//!
//!     cargo run --release --example export_mip -- [outdir]

use corrfuse::{make_phantom, write_mip_pgm, Axis, Phantom, PhantomKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let outdir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/example_mips".into());
    std::fs::create_dir_all(&outdir)?;

    let v = make_phantom(&Phantom::random(PhantomKind::Tubes, [48, 48, 48], 2)?)?;
    for (axis, name) in [(Axis::X, "x"), (Axis::Y, "y"), (Axis::Z, "z")] {
        let img = v.mip(axis);
        let path = format!("{outdir}/tubes_mip_{name}.pgm");
        write_mip_pgm(&img, &path)?;
        println!("wrote {path} ({}x{})", img.width, img.height);
    }
    Ok(())
}
