//! Discrete Dirichlet problems `μu + L u = g`, `u ∈ φ + W₀`, with
//! `L u = −div(Cᵀ A C Du)` assembled matrix-free from forward differences.
//!
//! The zero-boundary space `W₀` consists of fields vanishing on the lower-face
//! nodes with zero ghost values past the upper faces. The operator is the exact
//! adjoint of the forward-difference chain, so `⟨L v, w⟩` equals the quadrature
//! of `⟨A X v, X w⟩` for all `v, w ∈ W₀`.

mod cg;
mod rayleigh;

use std::sync::Arc;

use rayon::prelude::*;

use crate::anisotropy::{CoefficientField, Mat};
use crate::error::{Error, Result};
use crate::functionals::{evaluate, Integrand, Perturbation};
use crate::grid::{gradient, inner, lp_norm_pow, x_gradient, BoundaryMode, Grid, ScalarField};

pub use cg::{pcg, CgOutcome};
pub use rayleigh::{rayleigh_quotient, start_vector, RayleighEstimate, RayleighOptions};

/// Default relative residual for conjugate gradients.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default iteration budget: this many iterations per unknown.
pub const ITER_PER_UNKNOWN: usize = 10;

/// Forward differences of a zero-boundary vector; `n` entries per node.
pub(crate) fn grad_zero(grid: &Grid, v: &[f64], out: &mut [f64]) {
    let n = grid.dim();
    let res = grid.res();
    let h = grid.spacing();
    out.par_chunks_mut(n).enumerate().for_each(|(k, o)| {
        for a in 0..n {
            let s = grid.stride(a);
            let i = (k / s) % res[a];
            let next = if i + 1 < res[a] { v[k + s] } else { 0.0 };
            o[a] = (next - v[k]) / h[a];
        }
    });
}

/// Adjoint of [`grad_zero`] with respect to plain node sums.
pub(crate) fn grad_adjoint(grid: &Grid, q: &[f64], out: &mut [f64]) {
    let n = grid.dim();
    let res = grid.res();
    let h = grid.spacing();
    out.par_iter_mut().enumerate().for_each(|(j, o)| {
        let mut acc = 0.0;
        for a in 0..n {
            let s = grid.stride(a);
            let i = (j / s) % res[a];
            let prev = if i >= 1 { q[(j - s) * n + a] } else { 0.0 };
            acc += (prev - q[j * n + a]) / h[a];
        }
        *o = acc;
    });
}

/// Nodes not on a lower face.
pub fn unknowns(grid: &Grid) -> usize {
    grid.res().iter().map(|r| r - 1).product()
}

pub(crate) fn pinned_mask(grid: &Grid) -> Vec<bool> {
    (0..grid.node_count()).map(|k| grid.is_boundary_node(k)).collect()
}

/// `v ↦ μ v + Dᵀ(K D v)` on `W₀`, with `K = Cᵀ A C` sampled per node.
pub(crate) struct Operator {
    grid: Grid,
    k: Vec<Mat>,
    mu: f64,
    pinned: Vec<bool>,
}

impl Operator {
    pub(crate) fn new(grid: &Grid, c: &CoefficientField, a: &CoefficientField, mu: f64) -> Self {
        let k = c
            .sample(grid)
            .iter()
            .zip(a.sample(grid))
            .map(|(cm, am)| cm.transpose() * (am * *cm))
            .collect();
        Operator {
            grid: grid.clone(),
            k,
            mu,
            pinned: pinned_mask(grid),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.k.len()
    }

    /// `q_k = K_k (D v)_k`; `dv` holds `D v` on input.
    fn flux(&self, dv: &mut [f64]) {
        let n = self.grid.dim();
        dv.par_chunks_mut(n).zip(&self.k).for_each(|(d, km)| {
            let y = km.mul_vec(d);
            d.copy_from_slice(&y[..n]);
        });
    }

    pub(crate) fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.grid.dim();
        let mut q = vec![0.0; n * v.len()];
        grad_zero(&self.grid, v, &mut q);
        self.flux(&mut q);
        grad_adjoint(&self.grid, &q, out);
        for ((o, vi), pin) in out.iter_mut().zip(v).zip(&self.pinned) {
            *o = if *pin { 0.0 } else { *o + self.mu * vi };
        }
    }

    /// `Dᵀ(K Dφ)` for a field with its own ghost values.
    fn apply_datum(&self, phi: &ScalarField) -> Vec<f64> {
        let mut q = gradient(phi).values().to_vec();
        self.flux(&mut q);
        let mut out = vec![0.0; self.len()];
        grad_adjoint(&self.grid, &q, &mut out);
        out
    }

    pub(crate) fn diagonal(&self) -> Vec<f64> {
        let n = self.grid.dim();
        let h = self.grid.spacing();
        let res = self.grid.res();
        (0..self.len())
            .map(|j| {
                if self.pinned[j] {
                    return 1.0;
                }
                // node j enters D v at j with weight −1/h_a on every axis ...
                let km = &self.k[j];
                let mut d = self.mu;
                for a in 0..n {
                    for b in 0..n {
                        d += km[(a, b)] / (h[a] * h[b]);
                    }
                }
                // ... and at j − e_a with weight +1/h_a on axis a only
                for a in 0..n {
                    let s = self.grid.stride(a);
                    if (j / s) % res[a] >= 1 {
                        d += self.k[j - s][(a, a)] / (h[a] * h[a]);
                    }
                }
                d
            })
            .collect()
    }

    pub(crate) fn solve(&self, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
        let diag = self.diagonal();
        let apply = |v: &[f64], o: &mut [f64]| self.apply(v, o);
        let mut total = 0;
        let mut out = pcg(apply, &diag, b, x, tol, max_iter)?;
        total += out.iterations;
        // the recurrence residual can drift below the true one; restart if so
        for _ in 0..3 {
            if out.residual <= tol {
                break;
            }
            out = pcg(apply, &diag, b, x, tol, max_iter.saturating_sub(total))?;
            total += out.iterations;
        }
        if out.residual > tol {
            return Err(Error::Iteration {
                iterations: total,
                residual: out.residual,
            });
        }
        Ok(CgOutcome {
            iterations: total,
            residual: out.residual,
        })
    }
}

/// `μu + L u = g` in `Ω`, `u = φ` on the boundary.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    coeff: CoefficientField,
    integrand: Integrand,
    mu: f64,
    g: ScalarField,
    phi: ScalarField,
    p: f64,
    certificate: Option<f64>,
}

impl DirichletProblem {
    /// A homogeneous problem (`φ = 0`) for the quadratic integrand `a`.
    pub fn new(coeff: CoefficientField, a: Integrand, mu: f64, g: ScalarField) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::config(format!("mu must be >= 0, got {mu}")));
        }
        let grid = g.grid();
        let Some(am) = a.matrix() else {
            return Err(Error::contract("Dirichlet problems need a quadratic integrand"));
        };
        if coeff.dim_n() != grid.dim() {
            return Err(Error::contract(format!(
                "coefficient field lives in R^{} but the grid is {}-dimensional",
                coeff.dim_n(),
                grid.dim()
            )));
        }
        if am.dim_m() != coeff.dim_m() {
            return Err(Error::contract(format!(
                "{0}x{0} quadratic form for {1} vector fields",
                am.dim_m(),
                coeff.dim_m()
            )));
        }
        a.validate_on(grid)?;
        let phi = ScalarField::zeros(grid, BoundaryMode::Free);
        Ok(DirichletProblem {
            coeff,
            integrand: a,
            mu,
            g: g.with_mode(BoundaryMode::Free),
            phi,
            p: 2.0,
            certificate: None,
        })
    }

    /// Sets the boundary datum; it is continued past the upper faces in free mode.
    pub fn with_datum(mut self, phi: ScalarField) -> Result<Self> {
        self.g.grid().check_same(phi.grid(), "boundary datum")?;
        self.phi = phi.with_mode(BoundaryMode::Free);
        Ok(self)
    }

    /// Attaches a positive lower bound for the Rayleigh quotient, which makes
    /// `μ = 0` problems admissible.
    pub fn with_certificate(mut self, rayleigh_lower_bound: f64) -> Result<Self> {
        if !(rayleigh_lower_bound > 0.0) {
            return Err(Error::contract(format!(
                "a positivity certificate must be > 0, got {rayleigh_lower_bound}"
            )));
        }
        self.certificate = Some(rayleigh_lower_bound);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        self.g.grid()
    }

    pub fn coeff(&self) -> &CoefficientField {
        &self.coeff
    }

    pub fn integrand(&self) -> &Integrand {
        &self.integrand
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn certificate(&self) -> Option<f64> {
        self.certificate
    }

    fn has_datum(&self) -> bool {
        self.phi.values().iter().any(|v| *v != 0.0)
    }

    /// Boundary mode of fields in the affine space `φ + W₀`.
    pub fn affine_mode(&self) -> BoundaryMode {
        if self.has_datum() {
            BoundaryMode::Datum(Arc::new(self.phi.clone()))
        } else {
            BoundaryMode::ZeroDirichlet
        }
    }

    /// `φ + v` for a zero-boundary `v`.
    pub fn lift(&self, v: &ScalarField) -> Result<ScalarField> {
        let u = self.phi.add(v)?;
        Ok(u.with_mode(self.affine_mode()))
    }

    /// `μ/2 ‖u‖² + ½ ∫⟨A Xu, Xu⟩ − ∫ g u`.
    pub fn energy(&self, u: &ScalarField) -> Result<f64> {
        let quad = evaluate(&self.integrand, u, &self.coeff)?;
        Ok(0.5 * self.mu * lp_norm_pow(u, 2.0) + 0.5 * quad - inner(&self.g, u)?)
    }

    fn operator(&self) -> Operator {
        let a = self.integrand.matrix().expect("checked in new");
        Operator::new(self.grid(), &self.coeff, a, self.mu)
    }

    fn check_solvable(&self) -> Result<()> {
        if self.p != 2.0 {
            return Err(Error::contract("linear solves need p = 2"));
        }
        if self.mu == 0.0 && self.certificate.is_none() {
            return Err(Error::contract(
                "mu = 0 needs a positivity certificate (a Rayleigh lower bound)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: ScalarField,
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
}

/// `v ↦ μv + L v` for a zero-boundary `v`.
pub fn apply_operator(prob: &DirichletProblem, v: &ScalarField) -> Result<ScalarField> {
    prob.grid().check_same(v.grid(), "operator argument")?;
    if *v.mode() != BoundaryMode::ZeroDirichlet || !v.vanishes_on_boundary() {
        return Err(Error::contract("the operator acts on zero-boundary fields"));
    }
    let op = prob.operator();
    let mut out = vec![0.0; op.len()];
    op.apply(v.values(), &mut out);
    ScalarField::new(prob.grid().clone(), out, BoundaryMode::ZeroDirichlet)
}

/// Solves with the default tolerance and iteration budget.
pub fn solve_default(prob: &DirichletProblem) -> Result<SolveReport> {
    solve_dirichlet(prob, DEFAULT_TOL, ITER_PER_UNKNOWN * unknowns(prob.grid()))
}

pub fn solve_dirichlet(prob: &DirichletProblem, tol: f64, max_iter: usize) -> Result<SolveReport> {
    prob.check_solvable()?;
    let op = prob.operator();
    let mut b: Vec<f64> = prob.g.values().to_vec();
    if prob.has_datum() {
        let lphi = op.apply_datum(&prob.phi);
        for ((bi, li), pi) in b.iter_mut().zip(&lphi).zip(prob.phi.values()) {
            *bi -= li + prob.mu * pi;
        }
    }
    for (bi, pin) in b.iter_mut().zip(&op.pinned) {
        if *pin {
            *bi = 0.0;
        }
    }
    let mut v = vec![0.0; op.len()];
    let out = op.solve(&b, &mut v, tol, max_iter)?;
    let v = ScalarField::new(prob.grid().clone(), v, BoundaryMode::ZeroDirichlet)?;
    let solution = prob.lift(&v)?;
    let energy = prob.energy(&solution)?;
    Ok(SolveReport {
        solution,
        iterations: out.iterations,
        residual: out.residual,
        energy,
    })
}

/// Minimizes `F^φ(u) + G(u)` over `φ + W₀`, where `F^φ(u) = ∫⟨A Xu, Xu⟩` plus the
/// problem's own `μ/2‖u‖² − ∫gu`.
///
/// The Euler-Lagrange equation is the Dirichlet problem with `2A`, `μ + μ_G` and
/// `g + g_G`. Returns the solve report and the attained minimum.
pub fn minimize_total(prob: &DirichletProblem, pert: &Perturbation) -> Result<(SolveReport, f64)> {
    if pert.p() != 2.0 {
        return Err(Error::contract("minimize_total needs a perturbation with p = 2"));
    }
    prob.grid().check_same(pert.g().grid(), "perturbation source")?;
    let mut combined = DirichletProblem::new(
        prob.coeff.clone(),
        prob.integrand.scaled(2.0)?,
        prob.mu + pert.mu(),
        prob.g.add(pert.g())?,
    )?
    .with_datum(prob.phi.clone())?;
    combined.certificate = prob.certificate;
    let report = solve_default(&combined)?;
    let value = report.energy;
    Ok((report, value))
}

/// `F^φ(u) + G(u)` as minimized by [`minimize_total`].
pub fn total_objective(prob: &DirichletProblem, pert: &Perturbation, u: &ScalarField) -> Result<f64> {
    let quad = evaluate(&prob.integrand, u, &prob.coeff)?;
    let own = 0.5 * prob.mu * lp_norm_pow(u, 2.0) - inner(&prob.g, u)?;
    Ok(quad + own + pert.value(u)?)
}

/// Slack used by the Poincaré checks.
pub const POINCARE_SLACK: f64 = 1e-10;

/// `‖u‖_p^p ≤ (2/R) ‖Xu‖_p^p` for a zero-boundary `u`.
pub fn poincare_check(u: &ScalarField, c: &CoefficientField, p: f64, r: f64) -> Result<bool> {
    if !(r > 0.0) {
        return Err(Error::contract(format!("Rayleigh constant must be > 0, got {r}")));
    }
    if *u.mode() != BoundaryMode::ZeroDirichlet || !u.vanishes_on_boundary() {
        return Err(Error::contract("poincare_check needs a zero-boundary field"));
    }
    let lhs = lp_norm_pow(u, p);
    let rhs = 2.0 / r * lp_norm_pow(&x_gradient(u, c)?, p);
    Ok(lhs <= rhs + POINCARE_SLACK)
}

/// `‖u‖^p ≤ 2^{2p−1}/R (‖Xu‖^p + ‖Xφ‖^p) + 2^{p−1}‖φ‖^p` for `u ∈ φ + W₀`.
///
/// `Xu` is taken with `u`'s own boundary mode, `Xφ` with `φ`'s.
pub fn affine_poincare_check(
    u: &ScalarField,
    phi: &ScalarField,
    c: &CoefficientField,
    p: f64,
    r: f64,
) -> Result<bool> {
    if !(r > 0.0) {
        return Err(Error::contract(format!("Rayleigh constant must be > 0, got {r}")));
    }
    let diff = u.sub(phi)?;
    if !diff.vanishes_on_boundary() {
        return Err(Error::contract("u does not match the datum on the boundary"));
    }
    let k = 2f64.powf(2.0 * p - 1.0) / r;
    let rhs = k * (lp_norm_pow(&x_gradient(u, c)?, p) + lp_norm_pow(&x_gradient(phi, c)?, p))
        + 2f64.powf(p - 1.0) * lp_norm_pow(phi, p);
    Ok(lp_norm_pow(u, p) <= rhs + POINCARE_SLACK)
}
