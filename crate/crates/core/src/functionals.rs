//! Integrands, quadratic forms, momenta and the perturbation `G`.
//!
//! All integrals are node sums times the cell volume, matching
//! [`lp_norm_pow`](crate::grid::lp_norm_pow).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::anisotropy::matrix::sym_eigenvalues;
use crate::anisotropy::{CoefficientField, Mat};
use crate::error::{Error, Result};
use crate::grid::{inner, lp_norm_pow, x_gradient_sampled, Grid, ScalarField, VecField};

/// Slack used by the growth and ellipticity checks.
pub const GROWTH_SLACK: f64 = 1e-10;

type DensityFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum IntegrandKind {
    /// `f(x, η) = ⟨A(x)η, η⟩` with `λ|η|² ≤ ⟨A η, η⟩ ≤ Λ|η|²`.
    Quadratic {
        a: CoefficientField,
        lambda: f64,
        big_lambda: f64,
    },
    /// `d₁|η|^p ≤ f(x, η) ≤ a(x) + d₂|η|^p`.
    General {
        f: Arc<DensityFn>,
        a: ScalarField,
        d1: f64,
        d2: f64,
    },
}

#[derive(Clone)]
pub struct Integrand {
    kind: IntegrandKind,
    p: f64,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            IntegrandKind::Quadratic { a, lambda, big_lambda } => f
                .debug_struct("Quadratic")
                .field("m", &a.dim_m())
                .field("lambda", lambda)
                .field("big_lambda", big_lambda)
                .finish(),
            IntegrandKind::General { d1, d2, .. } => f
                .debug_struct("General")
                .field("p", &self.p)
                .field("d1", d1)
                .field("d2", d2)
                .finish(),
        }
    }
}

impl Integrand {
    /// A quadratic form on `R^m`; `a` must be an m×m field.
    /// `a` maps `x ∈ Rⁿ` to an m×m matrix; it is stored as an `(n, m)` coefficient field.
    pub fn quadratic(a: CoefficientField, lambda: f64, big_lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && big_lambda >= lambda) {
            return Err(Error::config(format!(
                "ellipticity bounds need 0 < lambda <= Lambda, got {lambda}, {big_lambda}"
            )));
        }
        Ok(Integrand {
            kind: IntegrandKind::Quadratic {
                a,
                lambda,
                big_lambda,
            },
            p: 2.0,
        })
    }

    /// `A ≡ I_m`, so the energy is the Dirichlet energy `∫|Xu|²`.
    pub fn identity(n: usize, m: usize) -> Self {
        Integrand::quadratic(CoefficientField::new(n, m, move |_| Mat::identity(m)), 1.0, 1.0)
            .expect("identity bounds")
    }

    pub fn general<F>(p: f64, f: F, a: ScalarField, d1: f64, d2: f64) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        check_exponent(p)?;
        if !(d1 > 0.0 && d2 >= d1) {
            return Err(Error::config(format!(
                "growth constants need 0 < d1 <= d2, got {d1}, {d2}"
            )));
        }
        if a.values().iter().any(|v| *v < 0.0) {
            return Err(Error::config("the growth datum `a` must be nonnegative"));
        }
        Ok(Integrand {
            kind: IntegrandKind::General {
                f: Arc::new(f),
                a,
                d1,
                d2,
            },
            p,
        })
    }

    /// `f(x, η) = c |η|^p`, with `a = 0` and `d₁ = d₂ = c`.
    pub fn power(grid: &Grid, p: f64, c: f64) -> Result<Self> {
        Integrand::general(
            p,
            move |_, eta| c * eta.iter().map(|v| v * v).sum::<f64>().sqrt().powf(p),
            ScalarField::zeros(grid, Default::default()),
            c,
            c,
        )
    }

    pub fn kind(&self) -> &IntegrandKind {
        &self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(d₁, d₂)`; for quadratic forms these are `(λ, Λ)`.
    pub fn growth_constants(&self) -> (f64, f64) {
        match &self.kind {
            IntegrandKind::Quadratic {
                lambda, big_lambda, ..
            } => (*lambda, *big_lambda),
            IntegrandKind::General { d1, d2, .. } => (*d1, *d2),
        }
    }

    /// The quadratic coefficient field, if any.
    pub fn matrix(&self) -> Option<&CoefficientField> {
        match &self.kind {
            IntegrandKind::Quadratic { a, .. } => Some(a),
            IntegrandKind::General { .. } => None,
        }
    }

    /// A copy with `A` multiplied by `s` (and the bounds with it).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        match &self.kind {
            IntegrandKind::Quadratic {
                a,
                lambda,
                big_lambda,
            } => {
                let a = a.clone();
                let field = CoefficientField::new(a.dim_n(), a.dim_m(), move |x| a.at(x).scale(s));
                Integrand::quadratic(field, lambda * s, big_lambda * s)
            }
            IntegrandKind::General { f, a, d1, d2 } => {
                let f = f.clone();
                Integrand::general(self.p, move |x, e| s * f(x, e), a.scaled(s), d1 * s, d2 * s)
            }
        }
    }

    /// `f(x, η)`.
    pub fn density(&self, x: &[f64], eta: &[f64]) -> f64 {
        match &self.kind {
            IntegrandKind::Quadratic { a, .. } => quad_form(&a.at(x), eta, eta),
            IntegrandKind::General { f, .. } => f(x, eta),
        }
    }

    fn a_at(&self, k: usize) -> f64 {
        match &self.kind {
            IntegrandKind::Quadratic { .. } => 0.0,
            IntegrandKind::General { a, .. } => a.values()[k],
        }
    }

    /// Checks the pointwise sandwich at `x` for the vector `η = C(x)ξ`,
    /// and for quadratic forms that `A(x)` is symmetric.
    pub fn sandwich_holds(&self, x: &[f64], eta: &[f64], a_value: f64) -> bool {
        let (d1, d2) = self.growth_constants();
        let norm_p = eta.iter().map(|v| v * v).sum::<f64>().sqrt().powf(self.p);
        if let IntegrandKind::Quadratic { a, .. } = &self.kind {
            if !a.at(x).is_symmetric(1e-12) {
                return false;
            }
        }
        let f = self.density(x, eta);
        let slack = GROWTH_SLACK * (1.0 + f.abs());
        d1 * norm_p <= f + slack && f <= a_value + d2 * norm_p + slack
    }

    /// Symmetry and eigenvalue bounds of `A` at every node of `grid`.
    pub fn validate_on(&self, grid: &Grid) -> Result<()> {
        let IntegrandKind::Quadratic {
            a,
            lambda,
            big_lambda,
        } = &self.kind
        else {
            return Ok(());
        };
        let m = a.dim_m();
        for (k, mat) in a.sample(grid).iter().enumerate() {
            if mat.rows() != m || mat.cols() != m {
                return Err(Error::contract(format!(
                    "quadratic integrand returned a {}x{} matrix, expected {m}x{m}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            if !mat.is_symmetric(1e-12) {
                return Err(Error::config(format!(
                    "quadratic integrand is not symmetric at node {k}"
                )));
            }
            let ev = sym_eigenvalues(mat);
            let tol = 1e-10 * big_lambda.max(1.0);
            if ev[0] > big_lambda + tol || ev[m - 1] < lambda - tol {
                return Err(Error::config(format!(
                    "eigenvalues of A at node {k} leave [{lambda}, {big_lambda}]"
                )));
            }
        }
        Ok(())
    }

    fn check_against(&self, u: &ScalarField, c: &CoefficientField) -> Result<()> {
        if c.dim_n() != u.grid().dim() {
            return Err(Error::contract(format!(
                "coefficient field lives in R^{} but the grid is {}-dimensional",
                c.dim_n(),
                u.grid().dim()
            )));
        }
        match &self.kind {
            IntegrandKind::Quadratic { a, .. } if a.dim_m() != c.dim_m() => Err(Error::contract(
                format!("{0}x{0} quadratic form for {1} vector fields", a.dim_m(), c.dim_m()),
            )),
            IntegrandKind::General { a, .. } => u.grid().check_same(a.grid(), "growth datum"),
            _ => Ok(()),
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::config(format!("exponent must satisfy 1 < p < ∞, got {p}")));
    }
    Ok(())
}

#[inline]
fn quad_form(a: &Mat, x: &[f64], y: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    ax.iter().zip(y).map(|(p, q)| p * q).sum()
}

/// `∫ f(x, X u(x)) dx`.
pub fn evaluate(f: &Integrand, u: &ScalarField, c: &CoefficientField) -> Result<f64> {
    f.check_against(u, c)?;
    let grid = u.grid();
    let xu = x_gradient_sampled(u, &c.sample(grid));
    let mut acc = 0.0;
    match &f.kind {
        IntegrandKind::Quadratic { a, .. } => {
            for (k, am) in a.sample(grid).iter().enumerate() {
                let e = xu.at(k);
                acc += quad_form(am, e, e);
            }
        }
        IntegrandKind::General { f: dens, .. } => {
            let n = grid.dim();
            let mut x = [0.0; 3];
            for k in 0..grid.node_count() {
                grid.coords_into(k, &mut x);
                acc += dens(&x[..n], xu.at(k));
            }
        }
    }
    Ok(acc * grid.cell_volume())
}

/// `d₁‖Xu‖_p^p ≤ F(u) ≤ ∫a + d₂‖Xu‖_p^p`, up to [`GROWTH_SLACK`].
pub fn growth_check(f: &Integrand, u: &ScalarField, c: &CoefficientField) -> Result<bool> {
    let value = evaluate(f, u, c)?;
    let xu = x_gradient_sampled(u, &c.sample(u.grid()));
    let norm = lp_norm_pow(&xu, f.p);
    let (d1, d2) = f.growth_constants();
    let int_a = match &f.kind {
        IntegrandKind::General { a, .. } => a.values().iter().sum::<f64>() * u.grid().cell_volume(),
        IntegrandKind::Quadratic { .. } => 0.0,
    };
    let slack = GROWTH_SLACK * (1.0 + value.abs());
    Ok(d1 * norm <= value + slack && value <= int_a + d2 * norm + slack)
}

/// Pointwise sandwich at every node for the vector `C(x)ξ(x)`.
pub fn sandwich_on_grid(f: &Integrand, xi: &VecField, c: &CoefficientField) -> Result<bool> {
    let grid = xi.grid();
    if xi.comps() != grid.dim() || c.dim_n() != grid.dim() {
        return Err(Error::contract("sandwich needs an n-component field ξ"));
    }
    let samples = c.sample(grid);
    let n = grid.dim();
    let mut x = [0.0; 3];
    for (k, cm) in samples.iter().enumerate() {
        grid.coords_into(k, &mut x);
        let eta = cm.mul_vec(xi.at(k));
        if !f.sandwich_holds(&x[..n], &eta[..cm.rows()], f.a_at(k)) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn quadratic_parts<'a>(
    f: &'a Integrand,
    u: &ScalarField,
    phi: &VecField,
    c: &CoefficientField,
) -> Result<(&'a CoefficientField, VecField, Vec<Mat>)> {
    let IntegrandKind::Quadratic { a, .. } = &f.kind else {
        return Err(Error::contract("momenta are defined for quadratic integrands only"));
    };
    f.check_against(u, c)?;
    u.grid().check_same(phi.grid(), "momentum test field")?;
    if phi.comps() != u.grid().dim() {
        return Err(Error::contract(format!(
            "momentum test field has {} components, expected {}",
            phi.comps(),
            u.grid().dim()
        )));
    }
    let cs = c.sample(u.grid());
    let xu = x_gradient_sampled(u, &cs);
    Ok((a, xu, cs))
}

/// Sums `⟨A(x) v₁, v₂⟩` with `v₁, v₂` built from `Xu` and `CΦ` at each node.
fn pair_sum<F>(a: &CoefficientField, xu: &VecField, phi: &VecField, cs: &[Mat], pick: F) -> f64
where
    F: Fn(&[f64], &[f64]) -> ([f64; 3], [f64; 3]),
{
    let grid = xu.grid();
    let m = xu.comps();
    let mut acc = 0.0;
    for (k, am) in a.sample(grid).iter().enumerate() {
        let cphi = cs[k].mul_vec(phi.at(k));
        let (v1, v2) = pick(xu.at(k), &cphi[..m]);
        acc += quad_form(am, &v1[..m], &v2[..m]);
    }
    acc * grid.cell_volume()
}

fn pad(v: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    out[..v.len()].copy_from_slice(v);
    out
}

/// `∫ ⟨A(Xu + CΦ), Xu + CΦ⟩`.
pub fn perturbed_energy(
    f: &Integrand,
    u: &ScalarField,
    phi: &VecField,
    c: &CoefficientField,
) -> Result<f64> {
    let (a, xu, cs) = quadratic_parts(f, u, phi, c)?;
    Ok(pair_sum(a, &xu, phi, &cs, |e, p| {
        let mut s = pad(e);
        for (si, pi) in s.iter_mut().zip(p) {
            *si += pi;
        }
        (s, s)
    }))
}

/// `∫ ⟨A Xu, CΦ⟩`.
pub fn momentum(f: &Integrand, u: &ScalarField, phi: &VecField, c: &CoefficientField) -> Result<f64> {
    let (a, xu, cs) = quadratic_parts(f, u, phi, c)?;
    Ok(pair_sum(a, &xu, phi, &cs, |e, p| (pad(e), pad(p))))
}

/// `∫ ⟨A CΦ, CΦ⟩`.
pub fn flux_energy(f: &Integrand, phi: &VecField, c: &CoefficientField) -> Result<f64> {
    let u = ScalarField::zeros(phi.grid(), Default::default());
    let (a, xu, cs) = quadratic_parts(f, &u, phi, c)?;
    Ok(pair_sum(a, &xu, phi, &cs, |_, p| (pad(p), pad(p))))
}

/// `G(u) = (μ/p)∫|u|^p − ∫ g u`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    mu: f64,
    g: ScalarField,
    p: f64,
}

/// Constants of `−δ₁(ε) − ε∫|u|^p ≤ G(u) ≤ δ₂(ε) + δ₃(ε)∫|u|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungConstants {
    pub epsilon: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl Perturbation {
    pub fn new(mu: f64, g: ScalarField, p: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::config(format!("perturbation mu must be >= 0, got {mu}")));
        }
        check_exponent(p)?;
        Ok(Perturbation { mu, g, p })
    }

    pub fn zero(grid: &Grid, p: f64) -> Self {
        Perturbation::new(0.0, ScalarField::zeros(grid, Default::default()), p).expect("valid")
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn value(&self, u: &ScalarField) -> Result<f64> {
        perturbation_value(self, u)
    }

    /// Young's inequality `|gu| ≤ ε|u|^p + |g|^q/(q(pε)^{q/p})` with `q = p/(p−1)`
    /// gives `δ₁(ε) = ‖g‖_q^q/(q(pε)^{q/p})`; taking `ε = 1` on the upper side
    /// gives `δ₂ = ‖g‖_q^q/(q p^{q/p})` and `δ₃ = μ/p + 1`.
    pub fn young_constants(&self, epsilon: f64) -> YoungConstants {
        let p = self.p;
        let q = p / (p - 1.0);
        let gq = lp_norm_pow(&self.g, q);
        YoungConstants {
            epsilon,
            delta1: gq / (q * (p * epsilon).powf(q / p)),
            delta2: gq / (q * p.powf(q / p)),
            delta3: self.mu / p + 1.0,
        }
    }
}

/// `(μ/p)‖u‖_p^p − ⟨g, u⟩`.
pub fn perturbation_value(g: &Perturbation, u: &ScalarField) -> Result<f64> {
    let pairing = inner(&g.g, u)?;
    let power = if g.mu == 0.0 {
        0.0
    } else {
        g.mu / g.p * lp_norm_pow(u, g.p)
    };
    Ok(power - pairing)
}

/// Quadratic integrand presets accepted in experiment configs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandSpec {
    /// `A = I`.
    #[default]
    Identity,
    /// A fixed symmetric matrix.
    Constant { matrix: Mat },
    /// `A(x) = diag(base) · (1 + amplitude · sin(2π frequency x₁))`.
    Diagonal {
        base: Vec<f64>,
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
    },
    /// `A(x) = R(θ) diag(eigenvalues) R(θ)ᵀ`, rotating the first two axes by
    /// `θ = 2π turns x₁`.
    Rotation {
        eigenvalues: Vec<f64>,
        #[serde(default = "one")]
        turns: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl IntegrandSpec {
    /// Builds the integrand for `m` vector fields on `Rⁿ`.
    pub fn build(&self, n: usize, m: usize) -> Result<Integrand> {
        match self {
            IntegrandSpec::Identity => Ok(Integrand::identity(n, m)),
            IntegrandSpec::Constant { matrix } => {
                if matrix.rows() != m || matrix.cols() != m {
                    return Err(Error::config(format!(
                        "constant integrand must be {m}x{m}, got {}x{}",
                        matrix.rows(),
                        matrix.cols()
                    )));
                }
                if !matrix.is_symmetric(1e-12) {
                    return Err(Error::config("constant integrand matrix is not symmetric"));
                }
                let ev = sym_eigenvalues(matrix);
                let mat = *matrix;
                Integrand::quadratic(CoefficientField::new(n, m, move |_| mat), ev[m - 1], ev[0])
            }
            IntegrandSpec::Diagonal {
                base,
                amplitude,
                frequency,
            } => {
                if base.len() != m || base.iter().any(|b| *b <= 0.0) {
                    return Err(Error::config(format!(
                        "diagonal integrand needs {m} positive base entries"
                    )));
                }
                if amplitude.abs() >= 1.0 {
                    return Err(Error::config("diagonal integrand needs |amplitude| < 1"));
                }
                let lo = base.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = base.iter().cloned().fold(0.0, f64::max);
                let (amp, freq) = (*amplitude, *frequency);
                let base = base.clone();
                let field = CoefficientField::new(n, m, move |x| {
                    let s = 1.0 + amp * (2.0 * PI * freq * x[0]).sin();
                    let d: Vec<f64> = base.iter().map(|b| b * s).collect();
                    Mat::diag(&d)
                });
                Integrand::quadratic(field, lo * (1.0 - amp.abs()), hi * (1.0 + amp.abs()))
            }
            IntegrandSpec::Rotation { eigenvalues, turns } => {
                if m < 2 || eigenvalues.len() != m || eigenvalues.iter().any(|e| *e <= 0.0) {
                    return Err(Error::config(format!(
                        "rotation integrand needs m >= 2 and {m} positive eigenvalues"
                    )));
                }
                let lo = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = eigenvalues.iter().cloned().fold(0.0, f64::max);
                let d = Mat::diag(eigenvalues);
                let turns = *turns;
                let field = CoefficientField::new(n, m, move |x| {
                    let (s, c) = (2.0 * PI * turns * x[0]).sin_cos();
                    let mut r = Mat::identity(m);
                    r[(0, 0)] = c;
                    r[(0, 1)] = -s;
                    r[(1, 0)] = s;
                    r[(1, 1)] = c;
                    let mut a = r * d * r.transpose();
                    // exact symmetry despite rounding
                    for i in 0..m {
                        for j in 0..i {
                            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                            a[(i, j)] = v;
                            a[(j, i)] = v;
                        }
                    }
                    a
                });
                Integrand::quadratic(field, lo, hi)
            }
        }
    }
}
