use nalgebra::DMatrix;
use num_complex::Complex64;
use phasekit::symmetry::{dft_contour, normalize, plane_rotation, Contour, ContourSpectrum};
use proptest::prelude::*;

fn contour(n: usize) -> impl Strategy<Value = Contour> {
    (4usize..24).prop_flat_map(move |m| {
        prop::collection::vec(-5.0..5.0f64, m * n).prop_map(move |pts| Contour::new(m, n, pts).unwrap())
    })
}

/// Smooth closed curve with random harmonic amplitudes, so the first harmonic
/// is well away from degeneracy.
fn smooth_contour(n: usize) -> impl Strategy<Value = Contour> {
    (8usize..40, prop::collection::vec(-1.0..1.0f64, n * 6)).prop_map(move |(m, amp)| {
        let mut pts = Vec::with_capacity(m * n);
        for p in 0..m {
            let a = std::f64::consts::TAU * p as f64 / m as f64;
            for d in 0..n {
                let c = &amp[d * 6..(d + 1) * 6];
                pts.push(
                    (2.0 + c[0]) * a.cos() + (1.0 + c[1]) * ((d + 1) as f64 * 0.7 + a).sin()
                        + c[2] * (2.0 * a).cos()
                        + c[3] * (2.0 * a).sin()
                        + c[4] * (3.0 * a).cos()
                        + c[5],
                );
            }
        }
        Contour::new(m, n, pts).unwrap()
    })
}

fn rel_diff(a: &ContourSpectrum, b: &ContourSpectrum) -> f64 {
    let scale = a.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dft_is_linear(pair in (4usize..20).prop_flat_map(|m| (
        prop::collection::vec(-5.0..5.0f64, m * 3),
        prop::collection::vec(-5.0..5.0f64, m * 3),
        Just(m),
    )), alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
        let (x, y, m) = pair;
        let cx = Contour::new(m, 3, x.clone()).unwrap();
        let cy = Contour::new(m, 3, y.clone()).unwrap();
        let comb: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = dft_contour(&Contour::new(m, 3, comb).unwrap());
        let (sx, sy) = (dft_contour(&cx), dft_contour(&cy));
        for (i, l) in lhs.coeffs().iter().enumerate() {
            let r: Complex64 = sx.coeffs()[i] * alpha + sy.coeffs()[i] * beta;
            prop_assert!((l - r).norm() < 1e-10, "{l} vs {r}");
        }
    }

    #[test]
    fn parseval_and_centroid(c in contour(3)) {
        let s = dft_contour(&c);
        let m = c.m() as f64;
        let energy: f64 = c.points().iter().map(|v| v * v).sum();
        let spec_energy: f64 = s.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>() / m;
        prop_assert!((energy - spec_energy).abs() <= 1e-9 * energy.max(1e-12));
        for d in 0..3 {
            let centroid: f64 = (0..c.m()).map(|p| c.point(p)[d]).sum::<f64>() / m;
            prop_assert!((s.get(0, d).re - m * centroid).abs() < 1e-12 * (1.0 + (m * centroid).abs()));
            prop_assert!(s.get(0, d).im.abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_invariant_under_similarity(
        c in smooth_contour(3),
        shift in prop::collection::vec(-10.0..10.0f64, 3),
        scale in 0.1..10.0f64,
        angles in prop::collection::vec(-3.1..3.1f64, 2),
    ) {
        let r = &plane_rotation(3, 1, angles[0]).unwrap() * &plane_rotation(3, 2, angles[1]).unwrap();
        let moved = c.transformed(&r, scale, &shift).unwrap();
        let a = normalize(&dft_contour(&c), None).unwrap();
        let b = normalize(&dft_contour(&moved), None).unwrap();
        prop_assert!(rel_diff(&a, &b) < 1e-9, "{}", rel_diff(&a, &b));
        let again = normalize(&a, None).unwrap();
        prop_assert!(rel_diff(&a, &again) < 1e-10);
    }

    #[test]
    fn normalization_invariant_in_four_dimensions(
        c in smooth_contour(4),
        scale in 0.1..10.0f64,
        angles in prop::collection::vec(-3.1..3.1f64, 3),
    ) {
        let mut r = DMatrix::identity(4, 4);
        for (k, &a) in angles.iter().enumerate() {
            r = &r * &plane_rotation(4, k + 1, a).unwrap();
        }
        let moved = c.transformed(&r, scale, &[1.0, -2.0, 3.0, 0.5]).unwrap();
        let a = normalize(&dft_contour(&c), None).unwrap();
        let b = normalize(&dft_contour(&moved), None).unwrap();
        prop_assert!(rel_diff(&a, &b) < 1e-9, "{}", rel_diff(&a, &b));
    }
}
