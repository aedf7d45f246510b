//! Minimum values of `F_h^{φ_h} + G` for the lifted Grushin family converge
//! to the limit minimum.

use gammalab::anisotropy::{builtin_family, FamilySpec};
use gammalab::functionals::{Integrand, Perturbation};
use gammalab::grid::{BoundaryMode, Grid, ScalarField};
use gammalab::solve::{minimize_total, DirichletProblem};

fn minimum(
    coeff: gammalab::anisotropy::CoefficientField,
    phi: ScalarField,
    pert: &Perturbation,
) -> gammalab::Result<f64> {
    let zero = ScalarField::zeros(phi.grid(), BoundaryMode::Free);
    let prob = DirichletProblem::new(coeff, Integrand::identity(2, 3), 0.0, zero)?.with_datum(phi)?;
    Ok(minimize_total(&prob, pert)?.1)
}

fn main() -> gammalab::Result<()> {
    let grid = Grid::new(vec![-1.0, 0.0], vec![1.0, 1.0], vec![64, 64])?;
    let fam = builtin_family(&FamilySpec::named("grushin_lift"))?;
    let g = ScalarField::from_fn(&grid, BoundaryMode::Free, |x| 10.0 * (1.5 * x[0]).sin() * (3.0 * x[1]).sin());
    let pert = Perturbation::new(1.0, g, 2.0)?;
    let phi = ScalarField::from_fn(&grid, BoundaryMode::Free, |x| 0.1 + 0.05 * (x[0] + x[1]));

    let limit = minimum(fam.limit().clone(), phi.clone(), &pert)?;
    println!("limit minimum {limit:.8}");
    for h in [1, 2, 4, 8, 16, 32] {
        let m = minimum(fam.at(h), phi.scaled(1.0 + 1.0 / h as f64), &pert)?;
        println!("h = {h:>2}: m_h = {m:.8}  rel. error {:.3e}", (m - limit).abs() / limit.abs());
    }
    Ok(())
}
