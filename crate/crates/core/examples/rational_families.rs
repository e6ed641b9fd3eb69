//! Rational kernel/weight families: predicted spectral intervals against the
//! eigenvalues of wH(a)w at the finest ladder step, and the trace-norm of
//! what is left after subtracting the two model blocks.
//!
//!     cargo run --release --example rational_families -- 0.5

use hankel_lab::discretize::{assemble_model_hankel, assemble_wha};
use hankel_lab::kernels::{rational_test_family, ModelKernel};
use hankel_lab::linalg::{nuclear_norm, sym_eigenvalues, symmetrised};
use hankel_lab::specfun::Alpha;
use hankel_lab::spectra::{analyze, predict};
use hankel_lab::verify::{decomposition_residual, family_tag, DEFAULT_FAMILIES, DEFAULT_LADDER};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let alpha = Alpha::new(a)?;
    let step = DEFAULT_LADDER[DEFAULT_LADDER.len() - 1];
    let g = step.grid()?;
    let phi0 = assemble_model_hankel(ModelKernel::Phi0, alpha, &g)?;
    let phi_inf = assemble_model_hankel(ModelKernel::PhiInf, alpha, &g)?;
    for p in DEFAULT_FAMILIES {
        let (ka, kw) = rational_test_family(alpha, p);
        let m = assemble_wha(&ka, &kw, &g)?;
        let eigs = sym_eigenvalues(&symmetrised(m.entries()))?;
        let pred = predict(alpha, p);
        let r = analyze(&eigs, &pred, pred.default_delta(), pred.default_margin())?;
        let ends: Vec<String> = pred.intervals.iter().map(|iv| format!("[{:.4}, {:.4}]x{}", iv.lo, iv.hi, iv.multiplicity)).collect();
        let t = decomposition_residual(alpha, p, &g, &phi0, &phi_inf)?;
        println!(
            "{:<22} {}  eig range [{:.4}, {:.4}]  outliers {:?}  gap {:.4}  |T|_1 {:.4}",
            family_tag(&p),
            ends.join(" "),
            eigs[0],
            eigs[eigs.len() - 1],
            r.outliers,
            r.fill_max_gap,
            nuclear_norm(&t)?
        );
    }
    Ok(())
}
