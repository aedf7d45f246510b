//! Rayleigh quotients of `(∂₁, h⁻¹∂₂)` on the unit square against
//! `π²(1 + h⁻²)`, plus a p ≠ 2 upper bound from descent.

use std::f64::consts::PI;

use gammalab::anisotropy::{builtin_family, FamilySpec};
use gammalab::grid::Grid;
use gammalab::solve::{rayleigh_quotient, RayleighOptions};

fn main() -> gammalab::Result<()> {
    let grid = Grid::unit(2, 64)?;
    let fam = builtin_family(&FamilySpec::named("degenerate_2d"))?;
    let opts = RayleighOptions::default();
    for h in [1, 2, 4, 8, 16] {
        let r = rayleigh_quotient(&fam.at(h), &grid, 2.0, &opts)?;
        let oracle = PI * PI * (1.0 + 1.0 / (h * h) as f64);
        println!("h = {h:>2}: R_h = {:.6}  pi^2(1+h^-2) = {oracle:.6}  ({} steps)", r.value, r.iterations);
    }
    let lim = rayleigh_quotient(fam.limit(), &grid, 2.0, &opts)?;
    println!("limit:   R   = {:.6}  pi^2 = {:.6}", lim.value, PI * PI);

    let r3 = rayleigh_quotient(&fam.at(4), &Grid::unit(2, 32)?, 3.0, &opts)?;
    println!("p = 3, h = 4: R_h <= {:.5} (upper bound: {})", r3.value, r3.upper_bound);
    Ok(())
}
