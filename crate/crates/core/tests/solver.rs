mod common;

use unfitted::assembly::{assemble, NitscheParams};
use unfitted::problems::{Geometry, Problem};
use unfitted::solver::{solve, SolverMethod};

#[test]
fn cg_and_direct_agree_on_experiment_systems() {
    for (geometry, k, level) in [(Geometry::Ring, 1, 2), (Geometry::Ring, 2, 2), (Geometry::Ring, 3, 1), (Geometry::Ellipse, 2, 0)] {
        let problem = Problem::new(geometry);
        let d = common::Discrete::problem(&problem, level, k);
        let params = NitscheParams::standard(k, 10.0, 0.2);
        let s = assemble(&d.cut, &d.deformation, &params, &|x| problem.f(x), &|x| problem.u_d(x)).unwrap();
        let direct = solve(&s.matrix, &s.rhs, 1e-12, SolverMethod::Direct).unwrap();
        let cg = solve(&s.matrix, &s.rhs, 1e-12, SolverMethod::Cg).unwrap();
        let diff = direct.solution.iter().zip(&cg.solution).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{geometry} k={k} L={level}: max difference {diff:e}");
        for r in [&direct, &cg] {
            let ax = s.matrix.mul_vec(&r.solution);
            let res = ax.iter().zip(&s.rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                / s.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
            assert!(res <= 1e-12 || (geometry, k) != (Geometry::Ring, 2), "{res:e}");
            assert!((res - r.residual).abs() < 1e-14);
        }
    }
}
