use std::sync::Arc;

use proptest::prelude::*;

use hankel_lab::cli::format_g17;
use hankel_lab::discretize::{assemble_a, assemble_model_hankel, inversion_conjugate, masks, project};
use hankel_lab::kernels::{FamilyParams, ModelKernel};
use hankel_lab::linalg::sym_eigenvalues;
use hankel_lab::quadrature::make_grid;
use hankel_lab::specfun::{mellin_symbol, phi0, phi_inf, pi_alpha, Alpha};
use hankel_lab::spectra::predict;

fn alpha() -> impl Strategy<Value = f64> {
    -0.45f64..2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g17_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = format_g17(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn grid_is_mirror_symmetric(r in 0.5f64..12.0, half in 1usize..200) {
        let g = make_grid(r, 2 * half).unwrap();
        for i in 0..g.len() {
            prop_assert_eq!(g.log_nodes()[i], -g.log_nodes()[g.mirror(i)]);
        }
        prop_assert!(g.nodes()[half - 1] < 1.0 && g.nodes()[half] > 1.0);
    }

    #[test]
    fn symbol_is_even_and_peaks_at_zero(a in alpha(), xi in -6.0f64..6.0) {
        let al = Alpha::new(a).unwrap();
        let s = mellin_symbol(al, xi);
        prop_assert!((s - mellin_symbol(al, -xi)).abs() <= 1e-14 * s.max(1e-300));
        prop_assert!(s > 0.0 && s <= pi_alpha(al) * (1.0 + 1e-14));
    }

    #[test]
    fn phi_split_is_the_power(a in alpha(), t in 1e-6f64..200.0) {
        let al = Alpha::new(a).unwrap();
        let sum = phi0(al, t).unwrap() + phi_inf(al, t).unwrap();
        let power = t.powf(-al.order());
        prop_assert!((sum - power).abs() <= 1e-12 * power);
    }

    #[test]
    fn model_matrix_is_inversion_invariant(a in alpha(), half in 2usize..40, r in 1.0f64..8.0) {
        let al = Alpha::new(a).unwrap();
        let g = Arc::new(make_grid(r, 2 * half).unwrap());
        let m = assemble_a(al, &g).unwrap();
        let d = inversion_conjugate(&m).entries().sub(m.entries()).unwrap().max_abs();
        prop_assert!(d <= 1e-13 * m.entries().max_abs());
        let twice = inversion_conjugate(&inversion_conjugate(&m));
        prop_assert_eq!(twice.entries(), m.entries());
    }

    #[test]
    fn half_line_blocks_share_eigenvalues(a in alpha(), half in 2usize..40, r in 1.0f64..8.0) {
        let al = Alpha::new(a).unwrap();
        let g = Arc::new(make_grid(r, 2 * half).unwrap());
        let m = assemble_a(al, &g).unwrap();
        let (z, i) = masks(&g);
        let e0 = sym_eigenvalues(project(&m, &z, &z).unwrap().entries()).unwrap();
        let ei = sym_eigenvalues(project(&m, &i, &i).unwrap().entries()).unwrap();
        let scale = m.entries().max_abs();
        for (x, y) in e0.iter().zip(&ei) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn model_hankel_matrices_are_positive_semidefinite(a in alpha(), half in 2usize..30, r in 1.0f64..6.0) {
        // (st)^α φ(s+t) is an integral of e^{-xs} e^{-xt} over x, a Gram kernel
        let al = Alpha::new(a).unwrap();
        let g = Arc::new(make_grid(r, 2 * half).unwrap());
        for which in [ModelKernel::Phi0, ModelKernel::PhiInf] {
            let m = assemble_model_hankel(which, al, &g).unwrap();
            let e = sym_eigenvalues(m.entries()).unwrap();
            prop_assert!(e[0] >= -1e-13 * e[e.len() - 1], "{:?}: {}", which, e[0]);
        }
    }

    #[test]
    fn prediction_depends_on_weights_through_squares(
        a in alpha(), a0 in -3.0f64..3.0, ai in -3.0f64..3.0, b0 in -2.0f64..2.0, bi in -2.0f64..2.0
    ) {
        let al = Alpha::new(a).unwrap();
        let p = predict(al, FamilyParams::new(a0, ai, b0, bi));
        let q = predict(al, FamilyParams::new(a0, ai, -b0, -bi));
        prop_assert_eq!(&p, &q);
        for iv in &p.intervals {
            prop_assert!(iv.lo <= 0.0 && iv.hi >= 0.0 && iv.lo < iv.hi);
        }
    }
}
