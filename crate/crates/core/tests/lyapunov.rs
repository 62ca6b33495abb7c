use gsp_srukf::analysis::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn stable_system(n: usize, vals: &[f64], radius: f64) -> ErrorDynamics {
    let raw = DMatrix::from_fn(n, n, |i, j| vals[i * 8 + j]);
    let rho = spectral_radius(&raw).max(1e-3);
    let a = raw * (radius / rho);
    let g = DMatrix::from_fn(n, n, |i, j| vals[64 + i * 8 + j]);
    ErrorDynamics {
        a_mat: a,
        b_mat: &g * g.transpose(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solution_is_symmetric_psd_and_the_iteration_limit(n in 1usize..=8, vals in prop::collection::vec(-1.0f64..1.0, 128), r in 0.0f64..0.9) {
        let d = stable_system(n, &vals, r);
        let delta = solve_lyapunov(&d).unwrap();
        prop_assert!((&delta - delta.transpose()).amax() <= 1e-12 * (1.0 + delta.amax()));
        prop_assert!(delta.clone().symmetric_eigen().eigenvalues.min() >= -1e-10 * (1.0 + delta.amax()));
        prop_assert!(lyapunov_residual(&d, &delta) <= 1e-8 * (1.0 + d.b_mat.amax()));
        let fixed = lyapunov_fixed_point(&d, 1e-15, 100_000).unwrap();
        prop_assert!((&delta - fixed).amax() <= 1e-8 * (1.0 + delta.amax()));
    }

    #[test]
    fn spectral_radius_agrees_between_methods(vals in prop::collection::vec(-1.0f64..1.0, 128)) {
        // Large enough to take the iterative path.
        let n = 70;
        let a = DMatrix::from_fn(n, n, |i, j| vals[(i * 31 + j * 7) % 128] / n as f64 + if i == j { 0.5 } else { 0.0 });
        let eig = a.clone().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!((spectral_radius(&a) - eig).abs() <= 1e-8 * eig.max(1.0));
    }
}
