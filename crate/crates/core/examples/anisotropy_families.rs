//! Lists the built-in moving families with their tags, modulus and
//! classification on a unit grid.

use gammalab::anisotropy::{builtin_family, FamilySpec, Mat, BUILTIN_FAMILIES};
use gammalab::grid::Grid;

fn main() -> gammalab::Result<()> {
    for name in BUILTIN_FAMILIES {
        let mut spec = FamilySpec::named(name);
        match *name {
            "euclidean" => spec.n = Some(2),
            "constant_matrix" => spec.matrix = Some(Mat::from_rows(&[[1.0, 0.5], [0.0, 2.0]])),
            _ => {}
        }
        let fam = builtin_family(&spec)?;
        let n = fam.dim_n();
        let grid = Grid::new(vec![-1.0; n], vec![1.0; n], vec![16; n])?;
        let class = fam.classify(&grid, &[1, 2, 4, 8])?;
        let sig: Vec<String> = [1, 4, 16, 64].iter().map(|&h| format!("{:.3}", fam.sigma(h, &grid))).collect();
        println!(
            "{name:<16} n={n} m={}  tags {:?}  stacked={} lip<={:.2}  sigma(1,4,16,64) = {}",
            fam.dim_m(),
            fam.class_tags(),
            class.s1_shape,
            class.s2_lip_bound,
            sig.join(" ")
        );
    }
    Ok(())
}
