//! Bump mollifiers, discrete convolution and rate-coupled approximation.
//!
//! The mollifier used at step `h` has radius `σ(h)`, the modulus of the
//! family (see [`MovingFamily::sigma`]). Coupling the radius to the speed at
//! which `C^h → C` is what makes `X^h(J_h ∗ u) − X(J_h ∗ u)` vanish.

use rayon::prelude::*;

use crate::anisotropy::MovingFamily;
use crate::error::{Error, Result};
use crate::grid::{gradient, lp_norm, x_gradient_sampled, BoundaryMode, Grid, ScalarField};

/// Lattice points per unit radius used to fix the reference normalization.
pub const REFERENCE_RES: usize = 64;

/// Kernels must span at least this many grid spacings.
pub const MIN_RADIUS_IN_SPACINGS: f64 = 3.0;

/// `exp(−1/(1 − r²))` on `[0, 1)`, zero beyond.
#[inline]
pub fn bump_profile(r: f64) -> f64 {
    if r < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// A radially symmetric kernel `x ↦ c · profile(|x| / radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    dim: usize,
    radius: f64,
    normalization: f64,
}

impl Mollifier {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.radial(r2.sqrt())
    }

    #[inline]
    fn radial(&self, r: f64) -> f64 {
        self.normalization * bump_profile(r / self.radius)
    }

    pub fn center_value(&self) -> f64 {
        self.radial(0.0)
    }

    /// Mass on the reference lattice of spacing `radius / REFERENCE_RES`.
    pub fn reference_mass(&self) -> f64 {
        self.normalization * unit_lattice_sum(self.dim) * self.radius.powi(self.dim as i32)
    }

    /// Largest `|DJ|`, measured by central differences along a ray.
    pub fn max_gradient(&self) -> f64 {
        let samples = 4000;
        let step = self.radius / samples as f64;
        let eps = step * 1e-3;
        (1..samples)
            .map(|i| {
                let r = i as f64 * step;
                ((self.radial(r + eps) - self.radial(r - eps)) / (2.0 * eps)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `Σ profile(|k| / REFERENCE_RES) · REFERENCE_RES⁻ⁿ` over the integer lattice.
fn unit_lattice_sum(dim: usize) -> f64 {
    let m = REFERENCE_RES as i64;
    let d = 1.0 / REFERENCE_RES as f64;
    let axis: Vec<f64> = (-m..=m).map(|k| k as f64 * d).collect();
    let mut acc = 0.0;
    match dim {
        1 => {
            for &a in &axis {
                acc += bump_profile(a.abs());
            }
        }
        2 => {
            for &a in &axis {
                for &b in &axis {
                    acc += bump_profile((a * a + b * b).sqrt());
                }
            }
        }
        _ => {
            for &a in &axis {
                for &b in &axis {
                    for &c in &axis {
                        acc += bump_profile((a * a + b * b + c * c).sqrt());
                    }
                }
            }
        }
    }
    acc * d.powi(dim as i32)
}

/// The unit bump on `Rⁿ`, normalized to unit mass on its reference lattice.
pub fn bump_kernel(n: usize) -> Result<Mollifier> {
    if !(1..=3).contains(&n) {
        return Err(Error::contract(format!("mollifier dimension must be 1..=3, got {n}")));
    }
    Ok(Mollifier {
        dim: n,
        radius: 1.0,
        normalization: 1.0 / unit_lattice_sum(n),
    })
}

/// `J_σ(x) = σ⁻ⁿ J(x/σ)`.
pub fn scaled_kernel(j: &Mollifier, sigma: f64) -> Result<Mollifier> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::contract(format!("mollifier scale must be positive, got {sigma}")));
    }
    Ok(Mollifier {
        dim: j.dim,
        radius: j.radius * sigma,
        normalization: j.normalization / sigma.powi(j.dim as i32),
    })
}

/// A mollifier sampled on a grid's lattice and renormalized to unit mass.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    /// per-axis offsets, `dim` entries per kernel point
    offsets: Vec<isize>,
    weights: Vec<f64>,
    dim: usize,
}

impl DiscreteKernel {
    pub fn on_grid(j: &Mollifier, grid: &Grid) -> Result<Self> {
        let n = grid.dim();
        if j.dim() != n {
            return Err(Error::contract(format!(
                "{}-dimensional kernel on a {}-dimensional grid",
                j.dim(),
                n
            )));
        }
        let required = MIN_RADIUS_IN_SPACINGS * grid.max_spacing();
        if j.radius() < required {
            return Err(Error::Resolution {
                what: "mollifier radius",
                value: j.radius(),
                required,
            });
        }
        let h = grid.spacing();
        let reach: Vec<isize> = h.iter().map(|d| (j.radius() / d).ceil() as isize).collect();
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0isize; n];
        let mut x = [0.0; 3];
        // odometer over the bounding box of the support
        for (a, r) in reach.iter().enumerate() {
            idx[a] = -r;
        }
        'outer: loop {
            for a in 0..n {
                x[a] = idx[a] as f64 * h[a];
            }
            let w = j.value(&x[..n]);
            if w > 0.0 {
                offsets.extend_from_slice(&idx);
                weights.push(w);
            }
            let mut a = n;
            loop {
                if a == 0 {
                    break 'outer;
                }
                a -= 1;
                if idx[a] < reach[a] {
                    idx[a] += 1;
                    break;
                }
                idx[a] = -reach[a];
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(DiscreteKernel {
            offsets,
            weights,
            dim: n,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offset(&self, i: usize) -> &[isize] {
        &self.offsets[i * self.dim..(i + 1) * self.dim]
    }
}

/// `J ∗ u` at every node, with `u` extended by zero outside the box.
///
/// The result keeps the boundary mode of `u`.
pub fn convolve(u: &ScalarField, j: &Mollifier) -> Result<ScalarField> {
    let grid = u.grid();
    let kernel = DiscreteKernel::on_grid(j, grid)?;
    Ok(convolve_with(u, &kernel))
}

pub fn convolve_with(u: &ScalarField, kernel: &DiscreteKernel) -> ScalarField {
    let grid = u.grid();
    let n = grid.dim();
    let res: Vec<isize> = grid.res().iter().map(|&r| r as isize).collect();
    let strides: Vec<isize> = (0..n).map(|a| grid.stride(a) as isize).collect();
    let vals = u.values();
    let out: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map(|k| {
            let idx = grid.multi_index(k);
            let mut acc = 0.0;
            'points: for (i, w) in kernel.weights.iter().enumerate() {
                let off = kernel.offset(i);
                let mut flat = 0isize;
                for a in 0..n {
                    let t = idx[a] as isize - off[a];
                    if t < 0 || t >= res[a] {
                        continue 'points;
                    }
                    flat += t * strides[a];
                }
                acc += w * vals[flat as usize];
            }
            acc
        })
        .collect();
    ScalarField::new(grid.clone(), out, u.mode().clone()).expect("same grid")
}

fn step_kernel(family: &MovingFamily, h: u32, grid: &Grid) -> Result<(f64, Mollifier)> {
    let sigma = family.sigma(h, grid);
    let j = scaled_kernel(&bump_kernel(grid.dim())?, sigma)?;
    Ok((sigma, j))
}

/// The recovery candidate `u_h = J_{σ(h)} ∗ u`, returned in free mode.
pub fn meyers_serrin_step(u: &ScalarField, family: &MovingFamily, h: u32) -> Result<ScalarField> {
    check_family_dim(family, u.grid())?;
    let (_, j) = step_kernel(family, h, u.grid())?;
    Ok(convolve(u, &j)?.with_mode(BoundaryMode::Free))
}

/// Smooth cutoff: 0 within `margin` of the boundary, 1 beyond `2·margin`.
pub fn cutoff(grid: &Grid, margin: f64) -> ScalarField {
    let vals = (0..grid.node_count())
        .map(|k| smooth_step((grid.distance_to_boundary(k) - margin) / margin))
        .collect();
    ScalarField::new(grid.clone(), vals, BoundaryMode::ZeroDirichlet).expect("node count")
}

/// `C^∞` transition from 0 (t ≤ 0) to 1 (t ≥ 1) built from `exp(−1/t)`.
pub fn smooth_step(t: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let (a, b) = (f(t), f(1.0 - t));
        a / (a + b)
    }
}

/// `v_h = J_{σ(h)} ∗ (ψ (u − φ))`, compactly supported inside the box.
pub fn affine_approx_step(
    u: &ScalarField,
    phi: &ScalarField,
    family: &MovingFamily,
    h: u32,
    cutoff_margin: f64,
) -> Result<ScalarField> {
    let grid = u.grid();
    check_family_dim(family, grid)?;
    let (sigma, j) = step_kernel(family, h, grid)?;
    let required = sigma + 2.0 * grid.max_spacing();
    if cutoff_margin < required {
        return Err(Error::Resolution {
            what: "cutoff margin",
            value: cutoff_margin,
            required,
        });
    }
    let psi = cutoff(grid, cutoff_margin);
    let diff = u.sub(phi)?;
    let cut: Vec<f64> = diff.values().iter().zip(psi.values()).map(|(a, b)| a * b).collect();
    let cut = ScalarField::new(grid.clone(), cut, BoundaryMode::ZeroDirichlet)?;
    convolve(&cut, &j)
}

/// Pieces of the commutator measurement at one `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commutator {
    pub sigma: f64,
    /// `‖X^h(J_h ∗ u) − X(J_h ∗ u)‖_p`
    pub norm: f64,
    /// `‖D(J_h ∗ u)‖_p`
    pub gradient_norm: f64,
}

impl Commutator {
    /// `σ^{n+2} ‖D(J_h ∗ u)‖_p`, which dominates `norm`.
    pub fn bound(&self, n: usize) -> f64 {
        self.sigma.powi(n as i32 + 2) * self.gradient_norm
    }
}

pub fn commutator(u: &ScalarField, family: &MovingFamily, h: u32, p: f64) -> Result<Commutator> {
    let grid = u.grid();
    check_family_dim(family, grid)?;
    let (sigma, j) = step_kernel(family, h, grid)?;
    let smooth = convolve(u, &j)?.with_mode(BoundaryMode::Free);
    let moving = x_gradient_sampled(&smooth, &family.at(h).sample(grid));
    let fixed = x_gradient_sampled(&smooth, &family.limit().sample(grid));
    Ok(Commutator {
        sigma,
        norm: lp_norm(&moving.sub(&fixed)?, p),
        gradient_norm: lp_norm(&gradient(&smooth), p),
    })
}

/// `‖X^h(J_h ∗ u) − X(J_h ∗ u)‖_{L^p}`.
pub fn commutator_norm(u: &ScalarField, family: &MovingFamily, h: u32, p: f64) -> Result<f64> {
    commutator(u, family, h, p).map(|c| c.norm)
}

fn check_family_dim(family: &MovingFamily, grid: &Grid) -> Result<()> {
    if family.dim_n() != grid.dim() {
        return Err(Error::contract(format!(
            "family `{}` lives in R^{} but the grid is {}-dimensional",
            family.name(),
            family.dim_n(),
            grid.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::{builtin_family, FamilySpec};
    use crate::grid::x_gradient;

    #[test]
    fn profile_and_support() {
        let j = bump_kernel(2).unwrap();
        assert!((j.center_value() - (-1f64).exp() * j.normalization()).abs() < 1e-15);
        assert_eq!(j.value(&[1.0, 0.0]), 0.0);
        assert_eq!(j.value(&[0.8, 0.8]), 0.0);
        for n in 1..=3 {
            let j = bump_kernel(n).unwrap();
            assert!((j.reference_mass() - 1.0).abs() < 1e-12, "n={n}");
        }
        assert!(bump_kernel(4).is_err());
    }

    #[test]
    fn scaling() {
        let j = bump_kernel(2).unwrap();
        assert_eq!(scaled_kernel(&j, 1.0).unwrap(), j);
        let half = scaled_kernel(&j, 0.5).unwrap();
        assert!((half.center_value() / j.center_value() - 4.0).abs() < 1e-12);
        assert_eq!(half.radius(), 0.5);
        assert!((half.reference_mass() - 1.0).abs() < 1e-12);
        assert!(scaled_kernel(&j, 0.0).is_err());
    }

    #[test]
    fn gradient_bound_scales_with_sigma() {
        for n in 1..=3 {
            let j = bump_kernel(n).unwrap();
            let c = j.max_gradient();
            for s in [0.5, 0.25] {
                let g = scaled_kernel(&j, s).unwrap().max_gradient();
                let bound = c / s.powi(n as i32 + 1);
                assert!(g <= bound * (1.0 + 1e-6), "n={n} s={s}: {g} > {bound}");
            }
        }
    }

    #[test]
    fn discrete_mass_is_one() {
        let g = Grid::unit(2, 64).unwrap();
        for s in [0.05, 0.1, 0.3] {
            let j = scaled_kernel(&bump_kernel(2).unwrap(), s).unwrap();
            let k = DiscreteKernel::on_grid(&j, &g).unwrap();
            assert!((k.mass() - 1.0).abs() < 1e-12);
            assert!(k.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn under_resolved_kernel_is_rejected() {
        let g = Grid::unit(2, 16).unwrap();
        let j = scaled_kernel(&bump_kernel(2).unwrap(), 0.1).unwrap();
        let u = ScalarField::zeros(&g, BoundaryMode::Free);
        match convolve(&u, &j) {
            Err(Error::Resolution { required, .. }) => assert!((required - 3.0 / 16.0).abs() < 1e-15),
            other => panic!("expected a resolution error, got {other:?}"),
        }
    }

    #[test]
    fn constants_zero_and_linear() {
        let g = Grid::unit(2, 64).unwrap();
        let j = scaled_kernel(&bump_kernel(2).unwrap(), 0.1).unwrap();
        let one = ScalarField::constant(&g, 1.0, BoundaryMode::Free);
        let lin = ScalarField::from_fn(&g, BoundaryMode::Free, |x| x[0]);
        let c1 = convolve(&one, &j).unwrap();
        let cl = convolve(&lin, &j).unwrap();
        let c0 = convolve(&ScalarField::zeros(&g, BoundaryMode::Free), &j).unwrap();
        assert_eq!(c0.max_abs(), 0.0);
        for k in 0..g.node_count() {
            if g.distance_to_boundary(k) > 0.1 + 1e-9 {
                assert!((c1.values()[k] - 1.0).abs() < 1e-12);
                assert!((cl.values()[k] - g.coords(k)[0]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn convolution_is_linear() {
        let g = Grid::unit(2, 32).unwrap();
        let j = scaled_kernel(&bump_kernel(2).unwrap(), 0.15).unwrap();
        let u = ScalarField::from_fn(&g, BoundaryMode::Free, |x| (7.0 * x[0]).sin() + x[1]);
        let v = ScalarField::from_fn(&g, BoundaryMode::Free, |x| (x[0] * x[1]).exp());
        let lhs = convolve(&u.lin_comb(2.5, -1.5, &v).unwrap(), &j).unwrap();
        let rhs = convolve(&u, &j)
            .unwrap()
            .lin_comb(2.5, -1.5, &convolve(&v, &j).unwrap())
            .unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn static_family_has_no_commutator() {
        let g = Grid::unit(2, 32).unwrap();
        let fam = builtin_family(&FamilySpec::named("grushin")).unwrap();
        let u = ScalarField::from_fn(&g, BoundaryMode::Free, |x| (3.0 * x[0]).sin() * x[1]);
        let uh = meyers_serrin_step(&u, &fam, 4).unwrap();
        let a = x_gradient(&uh, &fam.at(4)).unwrap();
        let b = x_gradient(&uh, fam.limit()).unwrap();
        assert_eq!(a, b);
        assert_eq!(commutator_norm(&u, &fam, 4, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn meyers_serrin_gate() {
        // σ(h) = h^{-1/4} for degenerate_2d; 3Δx = 3/16 is crossed at h = 796
        let g = Grid::unit(2, 16).unwrap();
        let fam = builtin_family(&FamilySpec::named("degenerate_2d")).unwrap();
        let u = ScalarField::from_fn(&g, BoundaryMode::Free, |x| x[0] * x[1]);
        assert!(meyers_serrin_step(&u, &fam, 700).is_ok());
        assert!(matches!(
            meyers_serrin_step(&u, &fam, 900),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn affine_step_support_and_identity() {
        let g = Grid::unit(2, 64).unwrap();
        let mut spec = FamilySpec::named("degenerate_2d");
        spec.sigma_power = Some(1.0);
        let fam = builtin_family(&spec).unwrap();
        let u = ScalarField::from_fn(&g, BoundaryMode::Free, |x| 1.0 + x[0] * x[1]);
        let phi = ScalarField::from_fn(&g, BoundaryMode::Free, |x| 1.0 + 0.5 * x[0]);
        let h = 10; // σ = 0.1
        let margin = 0.1 + 2.0 / 64.0;
        let v = affine_approx_step(&u, &u, &fam, h, margin).unwrap();
        assert_eq!(v.max_abs(), 0.0);

        let v = affine_approx_step(&u, &phi, &fam, h, margin).unwrap();
        assert!(v.max_abs() > 0.0);
        for k in 0..g.node_count() {
            if g.distance_to_boundary(k) < margin - 0.1 {
                assert_eq!(v.values()[k], 0.0);
            }
        }
        assert!(matches!(
            affine_approx_step(&u, &phi, &fam, h, 0.1),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(-0.5), 0.0);
        assert_eq!(smooth_step(1.5), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        assert!(smooth_step(0.3) < smooth_step(0.31));
    }
}
