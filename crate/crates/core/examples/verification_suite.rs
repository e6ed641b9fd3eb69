//! Run the verification suite and print every metric series.
//!
//!     cargo run --release --example verification_suite -- 0.5

use std::time::Instant;

use hankel_lab::specfun::Alpha;
use hankel_lab::verify::{run_suite, SuiteConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let cfg = SuiteConfig::new(Alpha::new(alpha)?);
    let start = Instant::now();
    let report = run_suite(&cfg)?;
    for check in &report.checks {
        println!("{} [{:?}]", check.name, check.verdict);
        if let Some(e) = &check.error {
            println!("  error: {e}");
        }
        for m in &check.metrics {
            let vals: Vec<String> = m.values.iter().map(|v| format!("{v:.4e}")).collect();
            let mark = if m.passed { " " } else { "x" };
            println!("  {mark} {:<40} {}", m.name, vals.join("  "));
        }
        for n in &check.notes {
            println!("  note: {n}");
        }
    }
    println!("verdict {:?} in {:.1?}", report.verdict, start.elapsed());
    Ok(())
}
