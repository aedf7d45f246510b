//! Solutions and momenta of `μu + L^h u = g` converge as `h → ∞`.

use gammalab::anisotropy::{builtin_family, FamilySpec};
use gammalab::functionals::{momentum, Integrand};
use gammalab::grid::{lp_norm, BoundaryMode, Grid, ScalarField, VecField};
use gammalab::solve::{solve_default, DirichletProblem};

fn main() -> gammalab::Result<()> {
    let grid = Grid::new(vec![-1.0, 0.0], vec![1.0, 1.0], vec![64, 64])?;
    let fam = builtin_family(&FamilySpec::named("grushin_lift"))?;
    let a = Integrand::identity(2, 3);
    let g = ScalarField::from_fn(&grid, BoundaryMode::Free, |x| 10.0 * (3.0 * x[1]).sin());
    let phi = VecField::from_components(&[
        ScalarField::from_fn(&grid, BoundaryMode::Free, |x| x[0]),
        ScalarField::from_fn(&grid, BoundaryMode::Free, |x| x[1]),
    ])?;

    let solve = |c| -> gammalab::Result<ScalarField> {
        let prob = DirichletProblem::new(c, a.clone(), 1.0, g.clone())?;
        Ok(solve_default(&prob)?.solution)
    };
    let u_inf = solve(fam.limit().clone())?;
    let m_inf = momentum(&a, &u_inf, &phi, fam.limit())?;
    for h in [1, 2, 4, 8, 16, 32] {
        let c = fam.at(h);
        let u = solve(c.clone())?;
        let m = momentum(&a, &u, &phi, &c)?;
        println!(
            "h = {h:>2}: |u_h - u|/|u| = {:.3e}  momentum {m:.6} (limit {m_inf:.6})",
            lp_norm(&u.sub(&u_inf)?, 2.0) / lp_norm(&u_inf, 2.0)
        );
    }
    Ok(())
}
