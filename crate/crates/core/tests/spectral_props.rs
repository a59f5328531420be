use std::f64::consts::PI;

use proptest::prelude::*;
use smagbox::spectral::{
    dealias, gradient, inner_product, l2_norm_sq, leray_project, spectral_l2_norm_sq, Grid,
    VectorField,
};

/// Sum of a few random Fourier modes per component, mean removed.
fn random_field(grid: &Grid, coeffs: &[(i64, i64, i64, f64, f64)]) -> VectorField {
    let mut u = VectorField::from_fn(grid, |x, y, z| {
        let mut v = [0.0; 3];
        for (n, &(a, b, c, re, im)) in coeffs.iter().enumerate() {
            let phase = a as f64 * x + b as f64 * y + c as f64 * z;
            v[n % 3] += re * phase.cos() + im * phase.sin();
        }
        v
    });
    u.remove_mean();
    u
}

fn coeff() -> impl Strategy<Value = (i64, i64, i64, f64, f64)> {
    (-4i64..=4, -4i64..=4, -4i64..=4, -1.0..1.0f64, -1.0..1.0f64)
}

fn field() -> impl Strategy<Value = Vec<(i64, i64, i64, f64, f64)>> {
    prop::collection::vec(coeff(), 3..12)
}

fn rel_diff(a: &VectorField, b: &VectorField) -> f64 {
    let d = a.axpy(-1.0, b).unwrap();
    let scale = l2_norm_sq(a).max(l2_norm_sq(b)).sqrt();
    if scale == 0.0 {
        0.0
    } else {
        l2_norm_sq(&d).sqrt() / scale
    }
}

fn grid() -> Grid {
    Grid::new(16, 2.0 * PI).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leray_is_idempotent(c in field()) {
        let g = grid();
        let p = leray_project(&random_field(&g, &c));
        prop_assert!(rel_diff(&leray_project(&p), &p) <= 1e-12);
    }

    #[test]
    fn leray_is_self_adjoint(a in field(), b in field()) {
        let g = grid();
        let (a, b) = (random_field(&g, &a), random_field(&g, &b));
        let lhs = inner_product(&leray_project(&a), &b).unwrap();
        let rhs = inner_product(&a, &leray_project(&b)).unwrap();
        let scale = (l2_norm_sq(&a) * l2_norm_sq(&b)).sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn parseval_matches_quadrature(c in field()) {
        let g = grid();
        let u = random_field(&g, &c);
        let real = l2_norm_sq(&u);
        let spec = spectral_l2_norm_sq(&u.to_spectral());
        prop_assert!((real - spec).abs() <= 1e-10 * real.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn operations_preserve_zero_mean(c in field()) {
        let g = grid();
        let u = random_field(&g, &c);
        let mag = u.max_abs().max(f64::MIN_POSITIVE);
        let p = leray_project(&u);
        let d = dealias(&u.to_spectral()).to_real();
        let grad = gradient(&u);
        for comp in 0..3 {
            prop_assert!(p.mean(comp).abs() <= 1e-14 * mag);
            prop_assert!(d.mean(comp).abs() <= 1e-14 * mag);
        }
        let gmag = grad.max_abs().max(f64::MIN_POSITIVE);
        for comp in 0..9 {
            prop_assert!(grad.mean(comp).abs() <= 1e-14 * gmag);
        }
    }

    #[test]
    fn gradient_is_exact_on_single_modes(m in 1i64..=7, axis in 0usize..3, amp in 0.1..5.0f64) {
        let g = grid();
        let k = m as f64;
        let u = VectorField::from_fn(&g, |x, y, z| {
            let s = amp * ([x, y, z][axis] * k).sin();
            [s, 0.0, 0.0]
        });
        let grad = gradient(&u);
        let expected = VectorField::from_fn(&g, |x, y, z| {
            let d = amp * k * ([x, y, z][axis] * k).cos();
            let mut v = [0.0; 3];
            v[axis] = d;
            v
        });
        let mut err = 0.0f64;
        for idx in 0..g.len() {
            for j in 0..3 {
                err = err.max((grad.component(j)[idx] - expected.component(j)[idx]).abs());
            }
        }
        prop_assert!(err <= 1e-12 * amp * k);
    }
}
