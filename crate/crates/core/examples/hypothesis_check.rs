//! The asymptotic hypotheses on kernel and weight, sampled numerically, and
//! the half-plane integral of |k̂| behind the trace-class criterion.

use hankel_lab::kernels::{
    half_plane_diagnostic, hypothesis_check, oscillating_kernel, power_weight, rational_test_family, FamilyParams,
    WeightSpec, HALF_PLANE_LEVELS,
};
use hankel_lab::specfun::Alpha;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = Alpha::new(0.0)?;
    let (rational, rw) = rational_test_family(alpha, FamilyParams::new(2.0, 1.0, 1.0, 2.0));
    let slow = WeightSpec::new(alpha, "slow", 1.0, 1.0, |t: f64| 1.0 + 1.0 / (1.0 + t.ln().abs()).sqrt());
    let cases = [
        ("rational(2,1,1,2)", &rational, &rw),
        ("oscillating kernel", &oscillating_kernel(alpha), &power_weight(alpha)),
        ("slowly settling weight", &rational, &slow),
    ];
    for (name, k, w) in cases {
        let r = hypothesis_check(k, w);
        let failed: Vec<&str> = r.failed_checks().map(|c| c.name.as_str()).collect();
        println!("{name}: passed {}  failed {failed:?}", r.passed);
    }
    for (name, k) in [("rational(2,1)", &rational), ("oscillating", &oscillating_kernel(alpha))] {
        let d = half_plane_diagnostic(k, HALF_PLANE_LEVELS)?;
        let vals: Vec<String> = d.rectangles.iter().map(|r| format!("{:.4}", r.integral)).collect();
        println!("{name}: integral of |k^| on nested rectangles {}  decreasing increments {}", vals.join(" "), d.increments_decrease);
    }
    Ok(())
}
