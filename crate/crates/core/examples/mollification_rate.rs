//! Commutator `X^h(J_h ∗ u) − X(J_h ∗ u)` against `σ(h)` and its fitted rate.

use gammalab::anisotropy::{builtin_family, FamilySpec};
use gammalab::experiments::fit_loglog;
use gammalab::grid::{BoundaryMode, Grid, ScalarField};
use gammalab::mollify::commutator;

fn main() -> gammalab::Result<()> {
    let grid = Grid::unit(2, 64)?;
    let fam = builtin_family(&FamilySpec::named("degenerate_2d"))?;
    let u = ScalarField::from_fn(&grid, BoundaryMode::Free, |x| (2.0 * x[0]).sin() * (3.0 * x[1]).sin());
    let (mut sig, mut norms) = (Vec::new(), Vec::new());
    for h in [2, 3, 4, 6, 8, 12, 16] {
        let c = commutator(&u, &fam, h, 2.0)?;
        println!(
            "h = {h:>2}  sigma = {:.4}  commutator = {:.4e}  bound = {:.4e}",
            c.sigma,
            c.norm,
            c.bound(2)
        );
        sig.push(c.sigma);
        norms.push(c.norm);
    }
    println!("fitted slope {:.3} (theory 2)", fit_loglog(&sig, &norms)?);
    Ok(())
}
