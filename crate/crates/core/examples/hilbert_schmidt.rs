//! ‖uL_α‖²_HS = 2^{−1−2α} ∫|u|²dt/t, checked for a few u; for u ≡ 1 the
//! right side diverges and the Frobenius norm keeps growing with R.

use std::sync::Arc;

use hankel_lab::discretize::assemble_l;
use hankel_lab::linalg::frobenius_norm;
use hankel_lab::quadrature::make_grid;
use hankel_lab::specfun::Alpha;
use hankel_lab::verify::{hs_battery, hs_pair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for a in [0.0, 0.5, -0.25] {
        let alpha = Alpha::new(a)?;
        let g = Arc::new(make_grid(8.0, 600)?);
        for (name, u) in hs_battery() {
            let (lhs, rhs) = hs_pair(alpha, u, &g)?;
            println!("alpha {a:>5} {name:<18} {lhs:.6} vs {rhs:.6}  rel {:.2e}", (lhs - rhs).abs() / rhs);
        }
    }
    let alpha = Alpha::new(0.0)?;
    for r in [4.0, 6.0, 8.0, 10.0] {
        let g = Arc::new(make_grid(r, (75.0 * r) as usize)?);
        let f = frobenius_norm(assemble_l(alpha, &g)?.entries());
        println!("u = 1, R = {r:>4}: |L|_F = {f:.4}  |L|_F^2 / R = {:.4}", f * f / r);
    }
    Ok(())
}
