//! Vector-field families given by coefficient matrices.
//!
//! A family `X = (X_1, …, X_m)` on a box in `Rⁿ` is stored as the map
//! `x ↦ C(x)`, an m×n matrix whose row `j` holds the coefficients of `X_j`
//! in the coordinate derivatives. A [`MovingFamily`] pairs a generator
//! `h ↦ C^h` with its uniform limit `C`.

pub mod matrix;
pub mod pinv;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub use matrix::Mat;
pub use pinv::{decompose, penrose_residuals, pseudoinverse, svd, Svd};

type CoeffFn = dyn Fn(&[f64]) -> Mat + Send + Sync;
type GeneratorFn = dyn Fn(u32) -> CoefficientField + Send + Sync;
type SigmaFn = dyn Fn(u32) -> f64 + Send + Sync;

/// Tolerance used when comparing matrix entries for the stacked-rows shape.
const SHAPE_TOL: f64 = 1e-12;

/// A Lipschitz map `x ↦ C(x) ∈ M(m, n)`.
#[derive(Clone)]
pub struct CoefficientField {
    dim_n: usize,
    dim_m: usize,
    eval: Arc<CoeffFn>,
    lipschitz_hint: Option<f64>,
    domain: Option<(Vec<f64>, Vec<f64>)>,
}

impl CoefficientField {
    pub fn new<F>(dim_n: usize, dim_m: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Mat + Send + Sync + 'static,
    {
        assert!((1..=3).contains(&dim_n) && (1..=3).contains(&dim_m));
        CoefficientField {
            dim_n,
            dim_m,
            eval: Arc::new(eval),
            lipschitz_hint: None,
            domain: None,
        }
    }

    pub fn constant(c: Mat) -> Self {
        CoefficientField::new(c.cols(), c.rows(), move |_| c).with_lipschitz_hint(0.0)
    }

    pub fn with_lipschitz_hint(mut self, hint: f64) -> Self {
        self.lipschitz_hint = Some(hint);
        self
    }

    /// Restricts evaluation through [`CoefficientField::eval`] to a closed box.
    pub fn with_domain(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), self.dim_n);
        assert_eq!(hi.len(), self.dim_n);
        self.domain = Some((lo, hi));
        self
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn dim_m(&self) -> usize {
        self.dim_m
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    /// Evaluates `C(x)` without any domain check. Used in node loops.
    #[inline]
    pub fn at(&self, x: &[f64]) -> Mat {
        (self.eval)(x)
    }

    /// Evaluates `C(x)`, rejecting points outside the declared box.
    pub fn eval(&self, x: &[f64]) -> Result<Mat> {
        if x.len() != self.dim_n {
            return Err(Error::contract(format!(
                "point has {} coordinates, field lives in R^{}",
                x.len(),
                self.dim_n
            )));
        }
        if let Some((lo, hi)) = &self.domain {
            let inside = x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&xi, (&l, &h))| xi >= l - 1e-12 && xi <= h + 1e-12);
            if !inside {
                return Err(Error::Domain {
                    point: x.to_vec(),
                    lo: lo.clone(),
                    hi: hi.clone(),
                });
            }
        }
        Ok(self.at(x))
    }

    /// `C` sampled at every node of `grid`, in node order.
    pub fn sample(&self, grid: &Grid) -> Vec<Mat> {
        assert_eq!(grid.dim(), self.dim_n, "grid and field dimensions differ");
        let mut x = [0.0; 3];
        (0..grid.node_count())
            .map(|k| {
                grid.coords_into(k, &mut x);
                self.at(&x[..self.dim_n])
            })
            .collect()
    }

    /// Largest entrywise difference quotient between adjacent grid nodes.
    /// A lower bound for the Lipschitz constant, good enough for reporting.
    pub fn lipschitz_estimate(&self, grid: &Grid) -> f64 {
        let samples = self.sample(grid);
        let mut best = 0.0f64;
        for k in 0..grid.node_count() {
            let idx = grid.multi_index(k);
            for axis in 0..grid.dim() {
                if idx[axis] + 1 >= grid.res()[axis] {
                    continue;
                }
                let nb = k + grid.stride(axis);
                let d = (samples[nb] - samples[k]).max_abs() / grid.spacing()[axis];
                best = best.max(d);
            }
        }
        best
    }
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("dim_n", &self.dim_n)
            .field("dim_m", &self.dim_m)
            .field("lipschitz_hint", &self.lipschitz_hint)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// Standalone form of [`CoefficientField::eval`].
pub fn eval_coeff(field: &CoefficientField, x: &[f64]) -> Result<Mat> {
    field.eval(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassTag {
    /// `C^h` stacks the limit's rows above extra rows that vanish in the limit.
    S1,
    /// Uniformly bounded Lipschitz constants along the sequence.
    S2,
}

/// A sequence `h ↦ C^h` converging uniformly to `limit`.
#[derive(Clone)]
pub struct MovingFamily {
    name: String,
    limit: CoefficientField,
    generator: Arc<GeneratorFn>,
    class_tags: Vec<ClassTag>,
    sigma_override: Option<Arc<SigmaFn>>,
}

impl MovingFamily {
    pub fn new<G>(name: impl Into<String>, limit: CoefficientField, generator: G) -> Self
    where
        G: Fn(u32) -> CoefficientField + Send + Sync + 'static,
    {
        MovingFamily {
            name: name.into(),
            limit,
            generator: Arc::new(generator),
            class_tags: Vec::new(),
            sigma_override: None,
        }
    }

    /// A family with `C^h = C` for every h.
    pub fn fixed(name: impl Into<String>, field: CoefficientField) -> Self {
        let f = field.clone();
        MovingFamily::new(name, field, move |_| f.clone()).with_tags(&[ClassTag::S1, ClassTag::S2])
    }

    pub fn with_tags(mut self, tags: &[ClassTag]) -> Self {
        self.class_tags = tags.to_vec();
        self.class_tags.sort();
        self.class_tags.dedup();
        self
    }

    pub fn with_sigma<S>(mut self, sigma: S) -> Self
    where
        S: Fn(u32) -> f64 + Send + Sync + 'static,
    {
        self.sigma_override = Some(Arc::new(sigma));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn limit(&self) -> &CoefficientField {
        &self.limit
    }

    pub fn at(&self, h: u32) -> CoefficientField {
        let f = (self.generator)(h);
        debug_assert_eq!(f.dim_n(), self.limit.dim_n());
        debug_assert_eq!(f.dim_m(), self.limit.dim_m());
        f
    }

    pub fn class_tags(&self) -> &[ClassTag] {
        &self.class_tags
    }

    pub fn has_tag(&self, tag: ClassTag) -> bool {
        self.class_tags.contains(&tag)
    }

    pub fn dim_n(&self) -> usize {
        self.limit.dim_n()
    }

    pub fn dim_m(&self) -> usize {
        self.limit.dim_m()
    }

    /// `max_x ‖C^h(x) − C(x)‖_op` over the nodes of `grid`.
    pub fn sup_opnorm_diff(&self, h: u32, grid: &Grid) -> f64 {
        let ch = self.at(h).sample(grid);
        let c = self.limit.sample(grid);
        ch.iter()
            .zip(&c)
            .map(|(a, b)| (*a - *b).op_norm())
            .fold(0.0, f64::max)
    }

    /// The mollification modulus `σ(h)`.
    ///
    /// Uses the override when one is declared; otherwise the smallest value with
    /// `sup ‖C^h − C‖_op ≤ σ(h)^{n+2}`, falling back to `1/h` when the sup is zero.
    pub fn sigma(&self, h: u32, grid: &Grid) -> f64 {
        if let Some(s) = &self.sigma_override {
            return s(h);
        }
        let sup = self.sup_opnorm_diff(h, grid);
        if sup == 0.0 {
            1.0 / h as f64
        } else {
            sup.powf(1.0 / (self.dim_n() as f64 + 2.0))
        }
    }

    /// Checks the stacked-rows shape and reports the largest Lipschitz estimate
    /// over the probed values of `h`.
    pub fn classify(&self, grid: &Grid, h_probe: &[u32]) -> Result<Classification> {
        if h_probe.is_empty() {
            return Err(Error::contract("classify needs at least one probe value"));
        }
        let limit = self.limit.sample(grid);
        let m = self.dim_m();
        // rows from `split` on are identically zero in the limit
        let split = limit
            .iter()
            .map(|c| {
                (0..m)
                    .rev()
                    .find(|&j| c.row(j).iter().any(|v| v.abs() > SHAPE_TOL))
                    .map_or(0, |j| j + 1)
            })
            .max()
            .unwrap_or(0);

        let mut s1_shape = true;
        let mut s2_lip_bound = 0.0f64;
        for &h in h_probe {
            let field = self.at(h);
            let ch = field.sample(grid);
            if s1_shape {
                s1_shape = ch.iter().zip(&limit).all(|(a, b)| {
                    (0..split).all(|j| {
                        a.row(j)
                            .iter()
                            .zip(b.row(j))
                            .all(|(x, y)| (x - y).abs() <= SHAPE_TOL)
                    })
                });
            }
            s2_lip_bound = s2_lip_bound.max(field.lipschitz_estimate(grid));
        }
        Ok(Classification {
            s1_shape,
            s2_lip_bound,
        })
    }
}

impl fmt::Debug for MovingFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MovingFamily")
            .field("name", &self.name)
            .field("limit", &self.limit)
            .field("class_tags", &self.class_tags)
            .field("sigma_override", &self.sigma_override.is_some())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub s1_shape: bool,
    pub s2_lip_bound: f64,
}

/// Names accepted by [`builtin_family`].
pub const BUILTIN_FAMILIES: &[&str] = &[
    "euclidean",
    "grushin",
    "heisenberg",
    "heisenberg_lift",
    "grushin_lift",
    "degenerate_2d",
    "s1_not_s2",
    "constant_matrix",
];

/// Parameters of a built-in family, as they appear in experiment configs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    /// Ambient dimension for `euclidean`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Matrix for `constant_matrix`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Mat>,
    /// Declares `σ(h) = h^{-sigma_power}` instead of the computed modulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_power: Option<f64>,
}

impl FamilySpec {
    pub fn named(name: &str) -> Self {
        FamilySpec {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<MovingFamily> {
        builtin_family(self)
    }
}

/// Builds one of the families listed in [`BUILTIN_FAMILIES`].
pub fn builtin_family(spec: &FamilySpec) -> Result<MovingFamily> {
    use ClassTag::{S1, S2};

    let family = match spec.name.as_str() {
        "euclidean" => {
            let n = spec.n.unwrap_or(2);
            if !(1..=3).contains(&n) {
                return Err(Error::config(format!("euclidean needs n in 1..=3, got {n}")));
            }
            MovingFamily::fixed("euclidean", CoefficientField::constant(Mat::identity(n)))
        }
        "grushin" => MovingFamily::fixed("grushin", grushin_field()),
        "heisenberg" => MovingFamily::fixed("heisenberg", heisenberg_field()),
        "constant_matrix" => {
            let c = spec
                .matrix
                .ok_or_else(|| Error::config("constant_matrix needs a `matrix` parameter"))?;
            MovingFamily::fixed("constant_matrix", CoefficientField::constant(c))
        }
        "heisenberg_lift" => {
            // (∂₁ + x₂∂₃, ∂₂ − x₁∂₃, (1/h)∂₃)
            let limit = CoefficientField::new(3, 3, |x| {
                Mat::from_rows(&[[1.0, 0.0, x[1]], [0.0, 1.0, -x[0]], [0.0, 0.0, 0.0]])
            })
            .with_lipschitz_hint(1.0);
            MovingFamily::new("heisenberg_lift", limit, |h| {
                let t = 1.0 / h as f64;
                CoefficientField::new(3, 3, move |x| {
                    Mat::from_rows(&[[1.0, 0.0, x[1]], [0.0, 1.0, -x[0]], [0.0, 0.0, t]])
                })
                .with_lipschitz_hint(1.0)
            })
            .with_tags(&[S1, S2])
        }
        "grushin_lift" => {
            // (∂₁, x₁∂₂, (1/h)∂₂)
            let limit = CoefficientField::new(2, 3, |x| {
                Mat::from_rows(&[[1.0, 0.0], [0.0, x[0]], [0.0, 0.0]])
            })
            .with_lipschitz_hint(1.0);
            MovingFamily::new("grushin_lift", limit, |h| {
                let t = 1.0 / h as f64;
                CoefficientField::new(2, 3, move |x| {
                    Mat::from_rows(&[[1.0, 0.0], [0.0, x[0]], [0.0, t]])
                })
                .with_lipschitz_hint(1.0)
            })
            .with_tags(&[S1, S2])
        }
        "degenerate_2d" => {
            // (∂₁, (1/h)∂₂) → (∂₁, 0)
            let limit = CoefficientField::constant(Mat::diag(&[1.0, 0.0]));
            MovingFamily::new("degenerate_2d", limit, |h| {
                CoefficientField::constant(Mat::diag(&[1.0, 1.0 / h as f64]))
            })
            .with_tags(&[S1, S2])
        }
        "s1_not_s2" => {
            // (∂₁, f_h(x₂)∂₂) with f_h the clipped ramp of slope h and height 1/h
            let limit = CoefficientField::constant(Mat::diag(&[1.0, 0.0]));
            MovingFamily::new("s1_not_s2", limit, |h| {
                let hf = h as f64;
                CoefficientField::new(2, 2, move |x| Mat::diag(&[1.0, clipped_ramp(hf, x[1])]))
                    .with_lipschitz_hint(hf)
            })
            .with_tags(&[S1])
        }
        other => {
            return Err(Error::config(format!(
                "unknown family `{other}`; expected one of {}",
                BUILTIN_FAMILIES.join(", ")
            )))
        }
    };

    Ok(match spec.sigma_power {
        Some(power) if power > 0.0 => family.with_sigma(move |h| (h as f64).powf(-power)),
        Some(power) => {
            return Err(Error::config(format!(
                "sigma_power must be positive, got {power}"
            )))
        }
        None => family,
    })
}

/// `f_h(t) = −1/h` below `−1/h²`, `h t` in between, `1/h` above `1/h²`.
pub fn clipped_ramp(h: f64, t: f64) -> f64 {
    let edge = 1.0 / (h * h);
    if t <= -edge {
        -1.0 / h
    } else if t >= edge {
        1.0 / h
    } else {
        h * t
    }
}

/// `(∂₁, x₁∂₂)` on `R²`.
pub fn grushin_field() -> CoefficientField {
    CoefficientField::new(2, 2, |x| Mat::from_rows(&[[1.0, 0.0], [0.0, x[0]]])).with_lipschitz_hint(1.0)
}

/// `(∂₁ + x₂∂₃, ∂₂ − x₁∂₃)` on `R³`.
pub fn heisenberg_field() -> CoefficientField {
    CoefficientField::new(3, 2, |x| {
        Mat::from_rows(&[[1.0, 0.0, x[1]], [0.0, 1.0, -x[0]]])
    })
    .with_lipschitz_hint(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(name: &str) -> MovingFamily {
        builtin_family(&FamilySpec::named(name)).unwrap()
    }

    fn close(a: &Mat, rows: &[&[f64]]) -> bool {
        let b = Mat::from_rows(rows);
        (*a - b).max_abs() < 1e-15
    }

    #[test]
    fn builtin_values() {
        let e = fam("euclidean").limit().eval(&[0.3, 0.7]).unwrap();
        assert!(close(&e, &[&[1.0, 0.0], &[0.0, 1.0]]));

        let g = fam("grushin").limit().eval(&[0.5, 0.3]).unwrap();
        assert!(close(&g, &[&[1.0, 0.0], &[0.0, 0.5]]));

        let hz = fam("heisenberg").limit().eval(&[1.0, 2.0, 0.0]).unwrap();
        assert!(close(&hz, &[&[1.0, 0.0, 2.0], &[0.0, 1.0, -1.0]]));
    }

    #[test]
    fn moving_family_values() {
        let d = fam("degenerate_2d").at(4).eval(&[0.1, 0.9]).unwrap();
        assert!(close(&d, &[&[1.0, 0.0], &[0.0, 0.25]]));

        let limit = fam("grushin_lift").limit().eval(&[0.4, 0.2]).unwrap();
        assert_eq!(limit.row(2), &[0.0, 0.0]);

        let s = fam("s1_not_s2").at(3).eval(&[0.0, 1.0 / 18.0]).unwrap();
        assert!((s[(1, 1)] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn class_tags() {
        assert!(fam("grushin_lift").has_tag(ClassTag::S1));
        assert!(fam("heisenberg_lift").has_tag(ClassTag::S1));
        let d = fam("degenerate_2d");
        assert!(d.has_tag(ClassTag::S1) && d.has_tag(ClassTag::S2));
        assert_eq!(fam("s1_not_s2").class_tags(), &[ClassTag::S1]);
    }

    #[test]
    fn unknown_name_is_config_error() {
        let err = builtin_family(&FamilySpec::named("carnot")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = builtin_family(&FamilySpec::named("constant_matrix")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn domain_error_outside_box() {
        let f = grushin_field().with_domain(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert!(f.eval(&[0.5, 0.5]).is_ok());
        assert!(f.eval(&[1.0, 1.0]).is_ok());
        assert!(matches!(f.eval(&[1.5, 0.5]), Err(Error::Domain { .. })));
        assert!(matches!(f.eval(&[0.5]), Err(Error::Contract(_))));
    }

    #[test]
    fn sup_and_sigma() {
        let unit = Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![16, 16]).unwrap();
        let d = fam("degenerate_2d");
        assert!((d.sup_opnorm_diff(5, &unit) - 0.2).abs() < 1e-15);
        assert!((d.sigma(16, &unit) - 0.5).abs() < 1e-15);

        let g = fam("grushin_lift");
        assert!((g.sup_opnorm_diff(10, &unit) - 0.1).abs() < 1e-15);

        let fixed = fam("grushin");
        assert_eq!(fixed.sup_opnorm_diff(3, &unit), 0.0);
        assert_eq!(fixed.sigma(8, &unit), 0.125);

        let mut spec = FamilySpec::named("degenerate_2d");
        spec.sigma_power = Some(0.125);
        let o = builtin_family(&spec).unwrap();
        assert!((o.sigma(256, &unit) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn classify_shapes() {
        let unit = Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![8, 8]).unwrap();
        let c = fam("grushin_lift").classify(&unit, &[1, 2, 4]).unwrap();
        assert!(c.s1_shape);

        let c = fam("degenerate_2d").classify(&unit, &[1, 4, 16]).unwrap();
        assert!(c.s1_shape);
        assert_eq!(c.s2_lip_bound, 0.0);

        // a family that moves a limit row is not stacked
        let moving = MovingFamily::new(
            "tilted",
            CoefficientField::constant(Mat::identity(2)),
            |h| CoefficientField::constant(Mat::diag(&[1.0 + 1.0 / h as f64, 1.0])),
        );
        assert!(!moving.classify(&unit, &[1, 2]).unwrap().s1_shape);
        assert!(moving.classify(&unit, &[]).is_err());
    }

    #[test]
    fn ramp_lipschitz_grows_with_h() {
        // x₂ spacing must resolve the 2/h² wide ramp
        let g = Grid::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![4, 8192]).unwrap();
        let f = fam("s1_not_s2");
        let lips: Vec<f64> = [2u32, 8, 32]
            .iter()
            .map(|&h| f.classify(&g, &[h]).unwrap().s2_lip_bound)
            .collect();
        for (l, h) in lips.iter().zip([2.0, 8.0, 32.0]) {
            assert!((l / h - 1.0).abs() < 0.05, "lip {l} at h {h}");
        }
    }
}
