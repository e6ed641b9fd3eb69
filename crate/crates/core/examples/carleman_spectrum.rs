//! Eigenvalues of the discretised A_α along a refinement ladder: everything
//! sits in [0, π_α] and fills it as R grows.
//!
//!     cargo run --release --example carleman_spectrum -- 0

use hankel_lab::discretize::assemble_a;
use hankel_lab::kernels::FamilyParams;
use hankel_lab::linalg::sym_eigenvalues;
use hankel_lab::specfun::{pi_alpha, Alpha};
use hankel_lab::spectra::{analyze, predict};
use hankel_lab::verify::DEFAULT_LADDER;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let alpha = Alpha::new(a)?;
    let pred = predict(alpha, FamilyParams::MODEL);
    println!("predicted {:?}", pred.intervals);
    for step in DEFAULT_LADDER {
        let m = assemble_a(alpha, &step.grid()?)?;
        let eigs = sym_eigenvalues(m.entries())?;
        let r = analyze(&eigs, &pred, pred.default_delta(), pred.default_margin())?;
        println!(
            "{step}: min {:+.3e}  max/pi_alpha {:.6}  outliers {}  max gap {:.4}  hausdorff {:.4}",
            eigs[0],
            eigs[eigs.len() - 1] / pi_alpha(alpha),
            r.outliers.len(),
            r.fill_max_gap,
            r.hausdorff
        );
    }
    Ok(())
}
