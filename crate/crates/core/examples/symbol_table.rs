//! The Mellin symbol of A_α two ways: through Gamma functions and by direct
//! quadrature of the homogeneous kernel.
//!
//!     cargo run --release --example symbol_table -- 0.5

use std::f64::consts::PI;

use hankel_lab::specfun::{mellin_symbol, pi_alpha, symbol_by_quadrature, Alpha};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let alpha = Alpha::new(a)?;
    println!("alpha = {a}, pi_alpha = {:.17}", pi_alpha(alpha));
    println!("{:>6} {:>22} {:>22} {:>10}", "xi", "gamma", "quadrature", "diff");
    let mut worst = 0.0f64;
    for k in -50..=50 {
        let xi = k as f64 / 10.0;
        let g = mellin_symbol(alpha, xi);
        let q = symbol_by_quadrature(alpha, xi)?;
        worst = worst.max((g - q.value).abs());
        if k % 5 == 0 {
            println!("{xi:>6.1} {g:>22.16e} {:>22.16e} {:>10.2e}", q.value, (g - q.value).abs());
        }
    }
    println!("max |gamma - quadrature| = {worst:.3e}");
    if a == 0.0 {
        // the Carleman symbol in closed form
        let d = (-50..=50)
            .map(|k| k as f64 / 10.0)
            .map(|xi| (mellin_symbol(alpha, xi) - PI / (PI * xi).cosh()).abs())
            .fold(0.0, f64::max);
        println!("max |sigma - pi/cosh(pi xi)| = {d:.3e}");
    }
    Ok(())
}
