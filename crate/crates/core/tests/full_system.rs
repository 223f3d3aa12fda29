//! Properties of the full-size free-space system (4642 x 234).

use helm_control::propagator::{assemble, condition_report_with, RowWeights};
use helm_control::regsolve::{normal_equation_residual, svd_solve_with, tikhonov_solve, Spectrum};
use helm_control::scenario::bundled;

#[test]
fn free_space_system_properties() {
    let sc = bundled("freespace_null").unwrap();
    let kernel = sc.kernel().unwrap();
    for weights in [RowWeights::default(), sc.config.solver.row_weights] {
        let sys = assemble(&kernel, &sc.basis, &sc.regions, &sc.targets, weights).unwrap();
        assert_eq!(sys.a.shape(), (4642, 234));
        let spectrum = Spectrum::new(&sys.a, &sys.b).unwrap();
        let report = condition_report_with(&sys, &spectrum);
        assert!(report.sigma_min / report.sigma_max < 1e-6);
        assert!(report.effective_rank < 234);

        let s2 = spectrum.sigma_max().powi(2);
        let grid: Vec<f64> = (-12..=2).map(|e| s2 * 10f64.powi(e)).collect();
        let res: Vec<f64> = grid.iter().map(|&a| spectrum.residual_norm(a)).collect();
        let norms: Vec<f64> = grid.iter().map(|&a| spectrum.solution_norm(a)).collect();
        for i in 1..grid.len() {
            assert!(res[i] >= res[i - 1] * (1.0 - 1e-12), "residual not monotone at {}", grid[i]);
            assert!(norms[i] <= norms[i - 1] * (1.0 + 1e-12), "norm not monotone at {}", grid[i]);
        }

        for e in [-6, -8] {
            let alpha = s2 * 10f64.powi(e);
            let tik = tikhonov_solve(&sys.a, &sys.b, alpha).unwrap();
            let svd = svd_solve_with(&spectrum, &sys.a, &sys.b, alpha);
            let diff = (&tik.w - &svd.w).norm() / svd.w.norm();
            assert!(diff <= 1e-8, "alpha = 1e{e} sigma_max^2: {diff:e}");
            let ne = normal_equation_residual(&sys.a, &sys.b, &tik.w, alpha).norm();
            assert!(ne <= 1e-10 * sys.a.ad_mul(&sys.b).norm(), "normal-equation residual {ne:e}");
            assert!((tik.residual_norm - spectrum.residual_norm(alpha)).abs() <= 1e-8 * tik.residual_norm);
        }
    }
}
