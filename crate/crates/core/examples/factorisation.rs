//! A_α = L_α² at matrix level. Squaring the truncated L matrix loses the part
//! of the intermediate integral outside the window, so that residual levels
//! off; widening the intermediate grid recovers the identity.
//!
//!     cargo run --release --example factorisation -- 0.5

use hankel_lab::discretize::{assemble_a, assemble_l, compose_padded, Intermediate};
use hankel_lab::kernels::kernel_l;
use hankel_lab::linalg::op_norm;
use hankel_lab::specfun::Alpha;
use hankel_lab::verify::{composition_pad, DEFAULT_LADDER};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let alpha = Alpha::new(a)?;
    let pad = composition_pad(alpha);
    println!("pad = {pad}");
    for step in DEFAULT_LADDER {
        let g = step.grid()?;
        let am = assemble_a(alpha, &g)?;
        let l = assemble_l(alpha, &g)?;
        let norm = op_norm(am.entries())?;
        let sq = l.entries().matmul(l.entries())?;
        let truncated = op_norm(&sq.sub(am.entries())?)? / norm;
        let lk = kernel_l(alpha);
        let p = compose_padded(&lk, &lk, &g, pad, Intermediate::All)?;
        let padded = op_norm(&p.entries().sub(am.entries())?)? / norm;
        println!("{step}: truncated {truncated:.4e}  padded {padded:.4e}");
    }
    Ok(())
}
