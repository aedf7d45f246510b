//! `u_h = sin(h x₂)` on `(−π,π)²`: constant norms, vanishing pairings.

use std::f64::consts::PI;

use gammalab::anisotropy::{builtin_family, FamilySpec};
use gammalab::grid::{inner, lp_norm, x_gradient, BoundaryMode, Grid, ScalarField};

fn main() -> gammalab::Result<()> {
    let grid = Grid::new(vec![-PI, -PI], vec![PI, PI], vec![256, 256])?;
    let fam = builtin_family(&FamilySpec::named("degenerate_2d"))?;
    let w = ScalarField::from_fn(&grid, BoundaryMode::Free, |x| x[1]);
    println!("pi*sqrt(2) = {:.6}", PI * 2f64.sqrt());
    println!("{:>3} {:>10} {:>10} {:>12}", "h", "|u_h|", "|X^h u_h|", "|<u_h, x2>|");
    for h in 1..=8u32 {
        let u = ScalarField::from_fn(&grid, BoundaryMode::Free, |x| (h as f64 * x[1]).sin());
        let xu = x_gradient(&u, &fam.at(h))?;
        println!(
            "{h:>3} {:>10.6} {:>10.6} {:>12.4e}",
            lp_norm(&u, 2.0),
            lp_norm(&xu, 2.0),
            inner(&u, &w)?.abs()
        );
    }
    Ok(())
}
