use nalgebra::DMatrix;
use phasekit::embedding::{embed, NeighborIndex};
use phasekit::identify::{build_state_sequence, fit_model, fit_percent, BasisTerm, FitOptions, ModelMode, TimeBasis};
use phasekit::lyapunov::{benettin_spectrum, rosenstein_curve, BenettinConfig, BenettinSource, CurveOptions};
use phasekit::refsys::{catalog, default_initial_state, generate, ReferenceSystem, SystemKind};
use phasekit::series::TimeSeries;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn benettin_linear_map_independent_of_renorm(
        moduli in prop::collection::vec(0.2..3.0f64, 1..5),
        signs in prop::collection::vec(any::<bool>(), 5),
    ) {
        let n = moduli.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = if signs[i] { moduli[i] } else { -moduli[i] };
        }
        let sys = ReferenceSystem::linear(SystemKind::Map, a).unwrap();
        let mut expect: Vec<f64> = moduli.iter().map(|m| m.ln()).collect();
        expect.sort_by(|x, y| y.total_cmp(x));
        for interval in [1, 5, 10] {
            let src = BenettinSource::Exact { sys: &sys, x0: vec![0.1; n], dt: 1.0, substeps: 1 };
            let cfg = BenettinConfig { renorm_interval: interval, ..BenettinConfig::new(n, 200) };
            let spec = benettin_spectrum(&src, &cfg).unwrap();
            for (got, want) in spec.exponents.iter().zip(&expect) {
                prop_assert!((got - want).abs() < 1e-8, "interval {interval}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn fit_percent_affine_invariant(
        y in prop::collection::vec(-10.0..10.0f64, 3..50),
        noise in prop::collection::vec(-1.0..1.0f64, 50),
        scale in 0.01..100.0f64,
        shift in -100.0..100.0f64,
    ) {
        let yhat: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
        if let Ok(f) = fit_percent(&y, &yhat) {
            let ys: Vec<f64> = y.iter().map(|v| scale * v + shift).collect();
            let hs: Vec<f64> = yhat.iter().map(|v| scale * v + shift).collect();
            let g = fit_percent(&ys, &hs).unwrap();
            prop_assert!((f - g).abs() < 1e-8 * f.abs().max(1.0), "{f} vs {g}");
        }
    }
}

/// Block-diagonal map with eigenvalues `r_i exp(+-i w_i)`.
fn rotation_blocks(n: usize, radii: &[f64], freqs: &[f64]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut i = 0;
    let mut b = 0;
    while i + 1 < n {
        let (r, w) = (radii[b], freqs[b]);
        a[(i, i)] = r * w.cos();
        a[(i, i + 1)] = -r * w.sin();
        a[(i + 1, i)] = r * w.sin();
        a[(i + 1, i + 1)] = r * w.cos();
        i += 2;
        b += 1;
    }
    if i < n {
        a[(i, i)] = radii[b];
    }
    a
}

fn sorted_eigs(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let mut e: Vec<(f64, f64)> = m.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect();
    e.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_systems_recovered_exactly(
        n in 1usize..=6,
        radii in prop::collection::vec(0.985..0.999f64, 3),
        freqs in prop::collection::vec(0.15..1.2f64, 3),
        c in prop::collection::vec(0.5..1.5f64, 6),
    ) {
        let a = rotation_blocks(n, &radii, &freqs);
        let mut x = nalgebra::DVector::from_element(n, 1.0);
        let mut y = Vec::new();
        for _ in 0..600 {
            y.push((0..n).map(|i| c[i] * x[i]).sum::<f64>());
            x = &a * x;
        }
        let s = TimeSeries::from_scalar("lin", 1.0, y).unwrap();
        let e = embed(&s, n + 1, 1).unwrap();
        let seq = build_state_sequence(&e, n).unwrap();
        // PCA centering turns x -> Ax into an affine map, so a constant term is needed.
        let basis = TimeBasis::new(vec![BasisTerm::Power { p: 0 }]).unwrap();
        let model = fit_model(&seq, &basis, &s, ModelMode::Discrete, &FitOptions::default()).unwrap();
        prop_assert!(model.fit[0] >= 99.9, "fit {:?}", model.fit);
        let b = DMatrix::from_fn(n, n, |i, j| model.dynamics[i][j]);
        // Fitted dynamics live in PCA coordinates, so compare the similarity invariants.
        for (p, q) in sorted_eigs(&a).iter().zip(sorted_eigs(&b)) {
            prop_assert!((p.0 - q.0).abs() < 1e-6 && (p.1 - q.1).abs() < 1e-6, "{p:?} vs {q:?}");
        }
    }
}

#[test]
fn rosenstein_independent_of_thread_count() {
    let sys = catalog("henon").unwrap();
    let traj = generate(&sys, &default_initial_state("henon").unwrap(), 1.0, 1, 1000, 3000).unwrap();
    let s = traj.observe("x", &[0]).unwrap();
    let e = embed(&s, 2, 1).unwrap();
    let idx = NeighborIndex::new(&e);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| rosenstein_curve(&idx, 12, &CurveOptions::default()).unwrap())
    };
    let one = run(1);
    let many = run(4);
    assert_eq!(one.values, many.values);
    assert_eq!(one.slope.to_bits(), many.slope.to_bits());
}

#[test]
fn rk4_is_fourth_order() {
    let sys = ReferenceSystem::linear(SystemKind::Flow, vec![1.0]).unwrap();
    let err = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let t = generate(&sys, &[1.0], dt, 1, 0, steps + 1).unwrap();
        (t.state(steps)[0] - 1f64.exp()).abs()
    };
    let ratio = err(0.1) / err(0.05);
    assert!((12.0..=20.0).contains(&ratio), "{ratio}");
}
