//! `u − Δu = f` with exact solution `sin(πx₁) sin(πx₂)`, solved at three
//! resolutions.

use std::f64::consts::PI;

use gammalab::anisotropy::{CoefficientField, Mat};
use gammalab::functionals::Integrand;
use gammalab::grid::{lp_norm, BoundaryMode, Grid, ScalarField};
use gammalab::solve::{solve_default, DirichletProblem};

fn main() -> gammalab::Result<()> {
    let mut prev: Option<f64> = None;
    for res in [32, 64, 128] {
        let grid = Grid::unit(2, res)?;
        let exact = ScalarField::from_fn(&grid, BoundaryMode::Free, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
        let f = exact.scaled(1.0 + 2.0 * PI * PI);
        let prob = DirichletProblem::new(
            CoefficientField::constant(Mat::identity(2)),
            Integrand::identity(2, 2),
            1.0,
            f,
        )?;
        let rep = solve_default(&prob)?;
        let err = lp_norm(&rep.solution.sub(&exact)?, 2.0);
        let ratio = prev.map(|p| format!("  ratio {:.2}", p / err)).unwrap_or_default();
        println!(
            "res {res:>3}: {} CG steps, residual {:.1e}, L2 error {err:.3e}{ratio}",
            rep.iterations, rep.residual
        );
        prev = Some(err);
    }
    Ok(())
}
