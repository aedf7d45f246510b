//! Discrete Rayleigh quotients `inf ‖Xu‖_p^p / ‖u‖_p^p` over `W₀`.

use std::f64::consts::PI;

use super::cg::dot;
use super::{grad_adjoint, grad_zero, pinned_mask, Operator, DEFAULT_TOL, ITER_PER_UNKNOWN};
use crate::anisotropy::{CoefficientField, Mat};
use crate::error::{Error, Result};
use crate::grid::{BoundaryMode, Grid, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighOptions {
    /// Relative change that ends the iteration; `None` picks 1e-8 for `p = 2`
    /// and 1e-6 otherwise.
    pub tol: Option<f64>,
    /// Outer iterations (inverse power steps or descent steps).
    pub max_iter: usize,
    /// Relative residual of the inner conjugate-gradient solves.
    pub cg_tol: f64,
}

impl Default for RayleighOptions {
    fn default() -> Self {
        RayleighOptions {
            tol: None,
            max_iter: 20_000,
            cg_tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RayleighEstimate {
    pub value: f64,
    pub iterations: usize,
    /// Set for `p ≠ 2`, where descent only certifies an upper bound.
    pub upper_bound: bool,
    /// The final iterate, normalized to unit `L^p` norm.
    pub eigenfunction: ScalarField,
}

/// `Πᵢ sin(π(xᵢ − loᵢ)/(hiᵢ − loᵢ))`, zero on the lower faces.
pub fn start_vector(grid: &Grid) -> ScalarField {
    let (lo, hi) = (grid.lo().to_vec(), grid.hi().to_vec());
    ScalarField::dirichlet_from_fn(grid, |x| {
        x.iter()
            .enumerate()
            .map(|(i, xi)| (PI * (xi - lo[i]) / (hi[i] - lo[i])).sin())
            .product()
    })
}

pub fn rayleigh_quotient(
    c: &CoefficientField,
    grid: &Grid,
    p: f64,
    opts: &RayleighOptions,
) -> Result<RayleighEstimate> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::contract(format!("Rayleigh quotients need 1 < p < ∞, got {p}")));
    }
    if c.dim_n() != grid.dim() {
        return Err(Error::contract(format!(
            "coefficient field lives in R^{} but the grid is {}-dimensional",
            c.dim_n(),
            grid.dim()
        )));
    }
    if p == 2.0 {
        inverse_iteration(c, grid, opts)
    } else {
        descent(c, grid, p, opts)
    }
}

fn inverse_iteration(c: &CoefficientField, grid: &Grid, opts: &RayleighOptions) -> Result<RayleighEstimate> {
    let tol = opts.tol.unwrap_or(1e-8);
    let m = c.dim_m();
    let identity = CoefficientField::new(grid.dim(), m, move |_| Mat::identity(m));
    let op = Operator::new(grid, c, &identity, 0.0);
    let budget = ITER_PER_UNKNOWN * super::unknowns(grid);

    let mut x = start_vector(grid).into_values();
    let mut lx = vec![0.0; x.len()];
    let quotient = |v: &[f64], lv: &mut [f64]| {
        op.apply(v, lv);
        dot(v, lv) / dot(v, v)
    };
    normalize(&mut x, 2.0);
    let mut lambda = quotient(&x, &mut lx);
    if !(lambda > 0.0) {
        return Err(Error::contract("the operator is singular on the zero-boundary space"));
    }
    let mut y = vec![0.0; x.len()];
    for it in 1..=opts.max_iter {
        // warm start: for an eigenvector y = x / λ
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi = xi / lambda;
        }
        op.solve(&x, &mut y, opts.cg_tol, budget)?;
        normalize(&mut y, 2.0);
        std::mem::swap(&mut x, &mut y);
        let next = quotient(&x, &mut lx);
        let change = (next - lambda).abs() / next.abs();
        lambda = next;
        if change < tol {
            return Ok(RayleighEstimate {
                value: lambda,
                iterations: it,
                upper_bound: false,
                eigenfunction: ScalarField::new(grid.clone(), x, BoundaryMode::ZeroDirichlet)?,
            });
        }
        if it == opts.max_iter {
            return Err(Error::Iteration {
                iterations: it,
                residual: change,
            });
        }
    }
    Err(Error::Iteration {
        iterations: 0,
        residual: f64::INFINITY,
    })
}

/// Rescales `v` to unit discrete `L^p` norm (cell volume left out).
fn normalize(v: &mut [f64], p: f64) {
    let s: f64 = v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

struct PQuotient<'a> {
    grid: &'a Grid,
    c: Vec<Mat>,
    p: f64,
    pinned: Vec<bool>,
}

impl PQuotient<'_> {
    /// `(Σ|C Du|^p, Σ|u|^p)` and the per-node `C Du`.
    fn parts(&self, u: &[f64], du: &mut [f64], xu: &mut Vec<[f64; 3]>) -> (f64, f64) {
        grad_zero(self.grid, u, du);
        let n = self.grid.dim();
        xu.clear();
        let mut num = 0.0;
        for (k, cm) in self.c.iter().enumerate() {
            let e = cm.mul_vec(&du[k * n..(k + 1) * n]);
            num += e.iter().map(|v| v * v).sum::<f64>().sqrt().powf(self.p);
            xu.push(e);
        }
        let den = u.iter().map(|v| v.abs().powf(self.p)).sum();
        (num, den)
    }

    fn value(&self, u: &[f64]) -> f64 {
        let mut du = vec![0.0; u.len() * self.grid.dim()];
        let mut xu = Vec::with_capacity(u.len());
        let (num, den) = self.parts(u, &mut du, &mut xu);
        num / den
    }

    /// Gradient of `N/M` with respect to the node values.
    fn gradient(&self, u: &[f64], out: &mut [f64]) -> f64 {
        let n = self.grid.dim();
        let mut du = vec![0.0; u.len() * n];
        let mut xu = Vec::with_capacity(u.len());
        let (num, den) = self.parts(u, &mut du, &mut xu);
        let q = num / den;
        let p = self.p;
        // Cᵀ (p |e|^{p−2} e), reusing du
        for (k, (cm, e)) in self.c.iter().zip(&xu).enumerate() {
            let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            let w = if norm > 0.0 { p * norm.powf(p - 2.0) } else { 0.0 };
            let scaled: Vec<f64> = e[..cm.rows()].iter().map(|v| w * v).collect();
            let t = cm.tr_mul_vec(&scaled);
            du[k * n..(k + 1) * n].copy_from_slice(&t[..n]);
        }
        grad_adjoint(self.grid, &du, out);
        for ((o, ui), pin) in out.iter_mut().zip(u).zip(&self.pinned) {
            *o = if *pin {
                0.0
            } else {
                let gm = p * ui.abs().powf(p - 1.0) * ui.signum();
                (*o - q * gm) / den
            };
        }
        q
    }
}

/// Normalized descent with Armijo backtracking. The step direction is the
/// gradient in the metric of `I + L₂` (`L₂` the `p = 2` operator of `C`), which
/// keeps the step count independent of the grid. Also valid for `p = 2`.
pub(crate) fn descent(
    c: &CoefficientField,
    grid: &Grid,
    p: f64,
    opts: &RayleighOptions,
) -> Result<RayleighEstimate> {
    let tol = opts.tol.unwrap_or(1e-6);
    let pq = PQuotient {
        grid,
        c: c.sample(grid),
        p,
        pinned: pinned_mask(grid),
    };
    let m = c.dim_m();
    let identity = CoefficientField::new(grid.dim(), m, move |_| Mat::identity(m));
    let metric = Operator::new(grid, c, &identity, 1.0);
    let budget = ITER_PER_UNKNOWN * super::unknowns(grid);

    let mut u = start_vector(grid).into_values();
    normalize(&mut u, p);
    let mut g = vec![0.0; u.len()];
    let mut d = vec![0.0; u.len()];
    let mut q = pq.gradient(&u, &mut g);
    let mut t = 1.0;
    let mut trial = vec![0.0; u.len()];
    for it in 1..=opts.max_iter {
        if dot(&g, &g) == 0.0 {
            return finish(grid, u, q, it, p);
        }
        d.iter_mut().for_each(|v| *v = 0.0);
        metric.solve(&g, &mut d, 1e-8, budget)?;
        let slope = dot(&g, &d);
        let accepted = loop {
            for ((w, ui), di) in trial.iter_mut().zip(&u).zip(&d) {
                *w = ui - t * di;
            }
            normalize(&mut trial, p);
            let qt = pq.value(&trial);
            if qt <= q - 1e-4 * t * slope {
                break Some(qt);
            }
            t *= 0.5;
            if t < 1e-300 {
                break None;
            }
        };
        let Some(qt) = accepted else {
            return finish(grid, u, q, it, p);
        };
        std::mem::swap(&mut u, &mut trial);
        let change = (q - qt) / qt;
        q = pq.gradient(&u, &mut g);
        t *= 2.0;
        if change < tol {
            return finish(grid, u, q, it, p);
        }
    }
    Err(Error::Iteration {
        iterations: opts.max_iter,
        residual: q,
    })
}

fn finish(grid: &Grid, mut u: Vec<f64>, q: f64, iterations: usize, p: f64) -> Result<RayleighEstimate> {
    // unit L^p norm including the cell volume
    let s = grid.cell_volume().powf(1.0 / p);
    u.iter_mut().for_each(|v| *v /= s);
    Ok(RayleighEstimate {
        value: q,
        iterations,
        upper_bound: p != 2.0,
        eigenfunction: ScalarField::new(grid.clone(), u, BoundaryMode::ZeroDirichlet)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::{builtin_family, FamilySpec};
    use crate::grid::{lp_norm_pow, x_gradient};

    fn one_d() -> CoefficientField {
        CoefficientField::constant(Mat::identity(1))
    }

    #[test]
    fn interval_dirichlet_eigenvalue() {
        let g = Grid::unit(1, 256).unwrap();
        let r = rayleigh_quotient(&one_d(), &g, 2.0, &Default::default()).unwrap();
        assert!(!r.upper_bound);
        assert!((r.value / (PI * PI) - 1.0).abs() < 0.01);
        // the discrete eigenvalue of the three-point Laplacian
        let d = 4.0 * 256.0f64.powi(2) * (PI / 512.0).sin().powi(2);
        assert!((r.value - d).abs() < 1e-8 * d);
    }

    #[test]
    fn degenerate_family_separates() {
        let g = Grid::unit(2, 64).unwrap();
        let fam = builtin_family(&FamilySpec::named("degenerate_2d")).unwrap();
        let r4 = rayleigh_quotient(&fam.at(4), &g, 2.0, &Default::default()).unwrap();
        let exact = PI * PI * (1.0 + 1.0 / 16.0);
        assert!((r4.value - exact).abs() / exact < 0.02);
        let rl = rayleigh_quotient(fam.limit(), &g, 2.0, &Default::default()).unwrap();
        assert!((rl.value - PI * PI).abs() / (PI * PI) < 0.02);
        assert!(rl.value <= r4.value);
    }

    #[test]
    fn eigenfunction_attains_quotient() {
        let g = Grid::unit(2, 24).unwrap();
        let c = crate::anisotropy::grushin_field();
        let r = rayleigh_quotient(&c, &g, 2.0, &Default::default()).unwrap();
        let u = &r.eigenfunction;
        let q = lp_norm_pow(&x_gradient(u, &c).unwrap(), 2.0) / lp_norm_pow(u, 2.0);
        assert!((q - r.value).abs() < 1e-9 * r.value);
    }

    #[test]
    fn descent_agrees_at_p2() {
        let g = Grid::unit(1, 64).unwrap();
        let exact = rayleigh_quotient(&one_d(), &g, 2.0, &Default::default()).unwrap();
        let d = descent(&one_d(), &g, 2.0, &Default::default()).unwrap();
        assert!(d.value >= exact.value * (1.0 - 1e-12));
        assert!(d.value <= exact.value * 1.01);
    }

    #[test]
    fn p_laplacian_interval() {
        // first eigenvalue of the p-Laplacian on (0,1): (p−1)(2π/(p sin(π/p)))^p
        let g = Grid::unit(1, 128).unwrap();
        for p in [1.5, 3.0] {
            let r = rayleigh_quotient(&one_d(), &g, p, &Default::default()).unwrap();
            let exact = (p - 1.0) * (2.0 * PI / (p * (PI / p).sin())).powf(p);
            assert!(r.upper_bound);
            assert!((r.value - exact).abs() / exact < 0.005, "p={p}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn bad_inputs() {
        let g = Grid::unit(2, 8).unwrap();
        let zero = CoefficientField::constant(Mat::zeros(2, 2));
        assert!(rayleigh_quotient(&zero, &g, 2.0, &Default::default()).is_err());
        assert!(rayleigh_quotient(&one_d(), &g, 2.0, &Default::default()).is_err());
        assert!(rayleigh_quotient(&zero, &g, 1.0, &Default::default()).is_err());
    }
}
