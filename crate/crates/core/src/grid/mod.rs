//! Uniform box grids and the fields sampled on them.
//!
//! A grid with `res[a]` cells along axis `a` stores one node per cell, at
//! `lo + index · spacing` for `index = 0, …, res[a] − 1`. The nodes on the
//! lower faces lie on `∂Ω`; the upper faces are represented by ghost values
//! one step beyond the last stored node. Node order is row-major (last axis
//! fastest).
//!
//! Derivatives are forward differences and integrals are node sums times the
//! cell volume. Energies assembled from these two pieces are sums of squares,
//! which is what the solvers rely on.

pub mod io;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::anisotropy::{CoefficientField, Mat};
use crate::error::{Error, Result};

/// Tensor-product grid on `[lo, hi] ⊂ Rⁿ`, `n ≤ 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

/// Serialized shape of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub res: Vec<usize>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Grid> {
        Grid::new(s.lo, s.hi, s.res)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> GridSpec {
        GridSpec {
            lo: g.lo,
            hi: g.hi,
            res: g.res,
        }
    }
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, res: Vec<usize>) -> Result<Self> {
        let n = lo.len();
        if !(1..=3).contains(&n) || hi.len() != n || res.len() != n {
            return Err(Error::contract(format!(
                "grid needs matching lo/hi/res of length 1..=3 (got {}, {}, {})",
                lo.len(),
                hi.len(),
                res.len()
            )));
        }
        if let Some(r) = res.iter().find(|&&r| r < 4) {
            return Err(Error::contract(format!("grid resolution {r} is below 4 cells")));
        }
        let spacing: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .zip(&res)
            .map(|((l, h), &r)| (h - l) / r as f64)
            .collect();
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::contract(format!(
                "grid box must satisfy lo < hi (lo {lo:?}, hi {hi:?})"
            )));
        }
        let mut strides = vec![1; n];
        for a in (0..n.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * res[a + 1];
        }
        Ok(Grid {
            lo,
            hi,
            res,
            spacing,
            strides,
        })
    }

    /// `[0, 1]ⁿ` with `res` cells per axis.
    pub fn unit(n: usize, res: usize) -> Result<Self> {
        Grid::new(vec![0.0; n], vec![1.0; n], vec![res; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn node_count(&self) -> usize {
        self.res.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    #[inline]
    pub fn multi_index(&self, k: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rest = k;
        for a in 0..self.dim() {
            idx[a] = rest / self.strides[a];
            rest %= self.strides[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Writes the coordinates of node `k` into the first `dim()` slots of `x`.
    #[inline]
    pub fn coords_into(&self, k: usize, x: &mut [f64; 3]) {
        let idx = self.multi_index(k);
        for a in 0..self.dim() {
            x[a] = self.lo[a] + idx[a] as f64 * self.spacing[a];
        }
    }

    pub fn coords(&self, k: usize) -> Vec<f64> {
        let mut x = [0.0; 3];
        self.coords_into(k, &mut x);
        x[..self.dim()].to_vec()
    }

    /// True for nodes on a lower face of the box, which lie on `∂Ω`.
    #[inline]
    pub fn is_boundary_node(&self, k: usize) -> bool {
        let idx = self.multi_index(k);
        idx[..self.dim()].contains(&0)
    }

    /// Distance from node `k` to the boundary of the box (upper faces at `hi`).
    pub fn distance_to_boundary(&self, k: usize) -> f64 {
        let mut x = [0.0; 3];
        self.coords_into(k, &mut x);
        (0..self.dim())
            .map(|a| (x[a] - self.lo[a]).min(self.hi[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::contract(format!("{what}: fields live on different grids")));
        }
        Ok(())
    }
}

/// How a scalar field is continued past the upper faces of the box.
#[derive(Clone, Default)]
pub enum BoundaryMode {
    /// Zero outside the box. Together with zero values on the lower-face nodes
    /// this is the discrete zero-trace space.
    ZeroDirichlet,
    /// The last node value is repeated, giving a zero one-sided difference.
    #[default]
    Free,
    /// Ghost values are taken from a datum field, so `u − datum` behaves as a
    /// zero-Dirichlet field. Used for affine problems `u ∈ φ + W₀`.
    Datum(Arc<ScalarField>),
}

impl BoundaryMode {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryMode::ZeroDirichlet => "zero_dirichlet",
            BoundaryMode::Free => "free",
            BoundaryMode::Datum(_) => "datum",
        }
    }
}

impl fmt::Debug for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for BoundaryMode {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (BoundaryMode::ZeroDirichlet, BoundaryMode::ZeroDirichlet) => true,
            (BoundaryMode::Free, BoundaryMode::Free) => true,
            (BoundaryMode::Datum(a), BoundaryMode::Datum(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

/// One real value per grid node.
#[derive(Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    mode: BoundaryMode,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>, mode: BoundaryMode) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::contract(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let BoundaryMode::Datum(d) = &mode {
            grid.check_same(d.grid(), "boundary datum")?;
        }
        Ok(ScalarField { grid, values, mode })
    }

    pub fn zeros(grid: &Grid, mode: BoundaryMode) -> Self {
        ScalarField {
            values: vec![0.0; grid.node_count()],
            grid: grid.clone(),
            mode,
        }
    }

    pub fn constant(grid: &Grid, value: f64, mode: BoundaryMode) -> Self {
        ScalarField {
            values: vec![value; grid.node_count()],
            grid: grid.clone(),
            mode,
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &Grid, mode: BoundaryMode, f: F) -> Self {
        let n = grid.dim();
        let mut x = [0.0; 3];
        let values = (0..grid.node_count())
            .map(|k| {
                grid.coords_into(k, &mut x);
                f(&x[..n])
            })
            .collect();
        ScalarField {
            grid: grid.clone(),
            values,
            mode,
        }
    }

    /// A zero-Dirichlet field sampled from `f`, with the lower-face nodes set to 0.
    pub fn dirichlet_from_fn<F: Fn(&[f64]) -> f64>(grid: &Grid, f: F) -> Self {
        let mut u = ScalarField::from_fn(grid, BoundaryMode::ZeroDirichlet, f);
        u.pin_boundary();
        u
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mode(&self) -> &BoundaryMode {
        &self.mode
    }

    pub fn with_mode(mut self, mode: BoundaryMode) -> Self {
        self.mode = mode;
        self
    }

    /// Sets the lower-face node values to zero.
    pub fn pin_boundary(&mut self) {
        for k in 0..self.values.len() {
            if self.grid.is_boundary_node(k) {
                self.values[k] = 0.0;
            }
        }
    }

    /// True when every lower-face node value is exactly zero.
    pub fn vanishes_on_boundary(&self) -> bool {
        (0..self.values.len()).all(|k| !self.grid.is_boundary_node(k) || self.values[k] == 0.0)
    }

    /// Value one step past node `k` along `axis`, for nodes on the last layer.
    #[inline]
    pub fn ghost(&self, k: usize, _axis: usize) -> f64 {
        match &self.mode {
            BoundaryMode::ZeroDirichlet => 0.0,
            BoundaryMode::Free => self.values[k],
            BoundaryMode::Datum(d) => d.ghost(k, _axis),
        }
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            mode: self.mode.clone(),
        }
    }

    /// `a·self + b·other`, keeping the boundary mode of `self`.
    pub fn lin_comb(&self, a: f64, b: f64, other: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(&other.grid, "linear combination")?;
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| a * u + b * v)
                .collect(),
            mode: self.mode.clone(),
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.lin_comb(1.0, -1.0, other)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.lin_comb(1.0, 1.0, other)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("res", &self.grid.res)
            .field("mode", &self.mode)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

/// `comps` real values per grid node, stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VecField {
    grid: Grid,
    comps: usize,
    values: Vec<f64>,
}

impl VecField {
    pub fn new(grid: Grid, comps: usize, values: Vec<f64>) -> Result<Self> {
        if comps == 0 || values.len() != comps * grid.node_count() {
            return Err(Error::contract(format!(
                "{} values cannot hold {} components on {} nodes",
                values.len(),
                comps,
                grid.node_count()
            )));
        }
        Ok(VecField {
            grid,
            comps,
            values,
        })
    }

    pub fn zeros(grid: &Grid, comps: usize) -> Self {
        VecField {
            grid: grid.clone(),
            comps,
            values: vec![0.0; comps * grid.node_count()],
        }
    }

    /// Builds a field from one scalar field per component.
    pub fn from_components(parts: &[ScalarField]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::contract("a vector field needs at least one component"))?;
        let grid = first.grid().clone();
        for p in parts {
            grid.check_same(p.grid(), "vector field components")?;
        }
        let comps = parts.len();
        let mut values = vec![0.0; comps * grid.node_count()];
        for (c, p) in parts.iter().enumerate() {
            for (k, v) in p.values().iter().enumerate() {
                values[k * comps + c] = *v;
            }
        }
        VecField::new(grid, comps, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.comps..(k + 1) * self.comps]
    }

    pub fn component(&self, c: usize) -> ScalarField {
        let values = (0..self.grid.node_count())
            .map(|k| self.values[k * self.comps + c])
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
            mode: BoundaryMode::Free,
        }
    }

    pub fn sub(&self, other: &VecField) -> Result<VecField> {
        self.grid.check_same(&other.grid, "vector difference")?;
        if self.comps != other.comps {
            return Err(Error::contract("vector fields have different component counts"));
        }
        Ok(VecField {
            grid: self.grid.clone(),
            comps: self.comps,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// Node-wise `C(x)·v(x)` for an n-component field.
    pub fn apply_matrix(&self, c: &CoefficientField) -> Result<VecField> {
        if c.dim_n() != self.grid.dim() || self.comps != c.dim_n() {
            return Err(Error::contract(format!(
                "cannot apply a {}x{} coefficient field to a {}-component field in R^{}",
                c.dim_m(),
                c.dim_n(),
                self.comps,
                self.grid.dim()
            )));
        }
        let samples = c.sample(&self.grid);
        Ok(apply_samples(&self.grid, &samples, self))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn apply_samples(grid: &Grid, samples: &[Mat], v: &VecField) -> VecField {
    let m = samples.first().map_or(1, Mat::rows);
    let mut out = vec![0.0; m * grid.node_count()];
    for (k, c) in samples.iter().enumerate() {
        let y = c.mul_vec(v.at(k));
        out[k * m..(k + 1) * m].copy_from_slice(&y[..m]);
    }
    VecField {
        grid: grid.clone(),
        comps: m,
        values: out,
    }
}

/// Forward-difference Euclidean gradient; n components per node.
pub fn gradient(u: &ScalarField) -> VecField {
    let g = u.grid();
    let n = g.dim();
    let mut out = vec![0.0; n * g.node_count()];
    let vals = u.values();
    for k in 0..g.node_count() {
        let idx = g.multi_index(k);
        for a in 0..n {
            let next = if idx[a] + 1 < g.res[a] {
                vals[k + g.strides[a]]
            } else {
                u.ghost(k, a)
            };
            out[k * n + a] = (next - vals[k]) / g.spacing[a];
        }
    }
    VecField {
        grid: g.clone(),
        comps: n,
        values: out,
    }
}

/// `X u = C(x) D u(x)` at every node.
pub fn x_gradient(u: &ScalarField, c: &CoefficientField) -> Result<VecField> {
    if c.dim_n() != u.grid().dim() {
        return Err(Error::contract(format!(
            "coefficient field lives in R^{} but the grid is {}-dimensional",
            c.dim_n(),
            u.grid().dim()
        )));
    }
    let samples = c.sample(u.grid());
    Ok(x_gradient_sampled(u, &samples))
}

/// [`x_gradient`] with `C` already sampled at the nodes.
pub fn x_gradient_sampled(u: &ScalarField, samples: &[Mat]) -> VecField {
    let du = gradient(u);
    apply_samples(u.grid(), samples, &du)
}

/// Anything with a per-node magnitude that can be integrated.
pub trait NodeField {
    fn grid(&self) -> &Grid;
    fn magnitude(&self, k: usize) -> f64;
}

impl NodeField for ScalarField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    #[inline]
    fn magnitude(&self, k: usize) -> f64 {
        self.values[k].abs()
    }
}

impl NodeField for VecField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    #[inline]
    fn magnitude(&self, k: usize) -> f64 {
        self.at(k).iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `∫ |v|^p`, by node sums times the cell volume. Summation runs in node order.
pub fn lp_norm_pow<F: NodeField>(v: &F, p: f64) -> f64 {
    assert!(p.is_finite() && p >= 1.0, "exponent must be finite and at least 1, got {p}");
    let g = v.grid();
    let mut acc = 0.0;
    if p == 2.0 {
        for k in 0..g.node_count() {
            let m = v.magnitude(k);
            acc += m * m;
        }
    } else {
        for k in 0..g.node_count() {
            acc += v.magnitude(k).powf(p);
        }
    }
    acc * g.cell_volume()
}

/// `(∫ |v|^p)^{1/p}`.
pub fn lp_norm<F: NodeField>(v: &F, p: f64) -> f64 {
    lp_norm_pow(v, p).powf(1.0 / p)
}

/// `∫ u w`.
pub fn inner(u: &ScalarField, w: &ScalarField) -> Result<f64> {
    u.grid().check_same(w.grid(), "inner product")?;
    let s: f64 = u.values().iter().zip(w.values()).map(|(a, b)| a * b).sum();
    Ok(s * u.grid().cell_volume())
}
