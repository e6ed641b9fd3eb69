//! The half-line blocks of L_α after the substitution t = e^{±y} are Hankel
//! matrices with Schwartz kernels ψ±; their singular values collapse
//! faster than any power.

use std::sync::Arc;

use hankel_lab::discretize::{assemble_l, log_pushforward_hankel, masks, project, transform_block, Side};
use hankel_lab::linalg::{singular_values, sym_eigenvalues};
use hankel_lab::quadrature::make_grid;
use hankel_lab::specfun::Alpha;
use hankel_lab::spectra::schatten_diagnostic;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Arc::new(make_grid(8.0, 400)?);
    for a in [0.0, 0.5] {
        let alpha = Alpha::new(a)?;
        let l = assemble_l(alpha, &g)?;
        let (zero, inf) = masks(&g);
        for (side, m) in [(Side::Infinity, &inf), (Side::Zero, &zero)] {
            let block = project(&l, m, m)?;
            let moved = transform_block(&block, side)?;
            let direct = log_pushforward_hankel(side, alpha, &g)?;
            let entry = moved.entries().sub(direct.entries())?.max_abs();
            let e1 = sym_eigenvalues(block.entries())?;
            let e2 = sym_eigenvalues(direct.entries())?;
            let eig = e1.iter().zip(&e2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let sv = singular_values(block.entries())?;
            let rec = schatten_diagnostic(&sv.values, sv.floor)?;
            println!(
                "alpha {a} side {side:?}: entry diff {entry:.1e}  eig diff {eig:.1e}  sigma10/sigma1 {:.2e}  {:?}",
                sv.values[9] / sv.values[0],
                rec.verdict
            );
        }
    }
    Ok(())
}
