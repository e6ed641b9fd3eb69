//! The inversion t ↦ 1/t at matrix level: A is persymmetric, so its two
//! half-line blocks are exactly similar. L is not invariant.

use hankel_lab::discretize::{assemble_a, assemble_l, inversion_conjugate, masks, project};
use hankel_lab::linalg::sym_eigenvalues;
use hankel_lab::quadrature::make_grid;
use hankel_lab::specfun::Alpha;
use std::sync::Arc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Arc::new(make_grid(8.0, 400)?);
    for a in [-0.25, 0.0, 0.5, 1.0] {
        let alpha = Alpha::new(a)?;
        let am = assemble_a(alpha, &g)?;
        let (zero, inf) = masks(&g);
        let e0 = sym_eigenvalues(project(&am, &zero, &zero)?.entries())?;
        let ei = sym_eigenvalues(project(&am, &inf, &inf)?.entries())?;
        let diff = e0.iter().zip(&ei).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let fixed = inversion_conjugate(&am).entries().sub(am.entries())?.max_abs() / am.entries().max_abs();
        let l = assemble_l(alpha, &g)?;
        let moved = inversion_conjugate(&l).entries().sub(l.entries())?.max_abs() / l.entries().max_abs();
        println!("alpha {a:>5}: block eig diff {diff:.2e}  |UAU* - A| {fixed:.2e}  |ULU* - L| {moved:.2e}");
    }
    Ok(())
}
