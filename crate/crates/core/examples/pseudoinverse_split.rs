//! Splits a direction into its row-space and kernel parts for a degenerate
//! Grushin matrix, and checks the Moore-Penrose identities.

use gammalab::anisotropy::{decompose, penrose_residuals, pseudoinverse, svd};
use gammalab::anisotropy::{grushin_field, Mat};

fn main() {
    let c = grushin_field().at(&[0.0, 0.3]);
    let p = pseudoinverse(&c);
    println!("C   = {:?}", c.to_rows());
    println!("C_P = {:?}", p.to_rows());
    println!("rank {}  Penrose residuals {:?}", svd(&c).rank(), penrose_residuals(&c, &p));

    let xi = [0.7, -1.2];
    let (v, n) = decompose(&xi, &c);
    println!("xi = {xi:?} -> xi_V = {v:?}, xi_N = {n:?}");
    println!("C xi_N = {:?}", &c.mul_vec(&n)[..2]);

    let wide = Mat::from_rows(&[[1.0, 2.0, 0.0], [0.0, 1.0, -1.0]]);
    println!("2x3 Penrose residuals {:?}", penrose_residuals(&wide, &pseudoinverse(&wide)));
}
