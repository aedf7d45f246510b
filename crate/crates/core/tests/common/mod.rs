#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gammalab::anisotropy::{builtin_family, penrose_residuals, pseudoinverse, CoefficientField, FamilySpec, Mat};
use gammalab::functionals::{growth_check, Integrand, IntegrandSpec};
use gammalab::grid::{inner, lp_norm, BoundaryMode, Grid, ScalarField};
use gammalab::solve::{apply_operator, poincare_check, rayleigh_quotient, DirichletProblem, RayleighOptions};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    Mat::from_rows(&data)
}

pub fn random_field(rng: &mut ChaCha8Rng, grid: &Grid, mode: BoundaryMode) -> ScalarField {
    let values = (0..grid.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ScalarField::new(grid.clone(), values, mode).unwrap()
}

/// Random values in the interior, zero on the lower faces, zero ghosts.
pub fn random_zero_field(rng: &mut ChaCha8Rng, grid: &Grid) -> ScalarField {
    let mut u = random_field(rng, grid, BoundaryMode::ZeroDirichlet);
    u.pin_boundary();
    u
}

/// Dense `Σ_k D_kᵀ C(x_k)ᵀ C(x_k) D_k` on the zero-boundary unknowns, with
/// `D_k` the forward-difference gradient at node `k`. Written out index by
/// index so it shares no code with the matrix-free operator.
pub fn dense_stiffness(grid: &Grid, c: &CoefficientField) -> DMatrix<f64> {
    let n = grid.dim();
    let res = grid.res().to_vec();
    let dx = grid.spacing().to_vec();
    // unknowns are the nodes with every index ≥ 1
    let inner_res: Vec<usize> = res.iter().map(|r| r - 1).collect();
    let count: usize = inner_res.iter().product();
    let unknown_of = |idx: &[usize]| -> Option<usize> {
        let mut k = 0;
        for a in 0..n {
            if idx[a] == 0 || idx[a] >= res[a] {
                return None;
            }
            k = k * inner_res[a] + (idx[a] - 1);
        }
        Some(k)
    };
    let mut l = DMatrix::<f64>::zeros(count, count);
    let total: usize = res.iter().product();
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut rem = flat;
        for a in (0..n).rev() {
            idx[a] = rem % res[a];
            rem /= res[a];
        }
        let x: Vec<f64> = (0..n).map(|a| grid.lo()[a] + idx[a] as f64 * dx[a]).collect();
        let cm = c.at(&x);
        let m = cm.rows();
        // row j of C D at this node, as sparse (unknown, weight) pairs
        for j in 0..m {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for a in 0..n {
                let cja = cm.row(j)[a];
                if cja == 0.0 {
                    continue;
                }
                let mut up = idx.clone();
                up[a] += 1;
                if let Some(k) = unknown_of(&up) {
                    row.push((k, cja / dx[a]));
                }
                if let Some(k) = unknown_of(&idx) {
                    row.push((k, -cja / dx[a]));
                }
            }
            for &(p, wp) in &row {
                for &(q, wq) in &row {
                    l[(p, q)] += wp * wq;
                }
            }
        }
    }
    l
}

pub fn dense_smallest_eigenvalue(grid: &Grid, c: &CoefficientField) -> f64 {
    let eig = SymmetricEigen::new(dense_stiffness(grid, c));
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `(4/Δ²) sin²(πΔ/2)`: smallest eigenvalue of the 1-D forward-difference
/// Laplacian on `(0,1)` with spacing `Δ`.
pub fn discrete_sine_eigenvalue(dx: f64) -> f64 {
    let s = (std::f64::consts::PI * dx / 2.0).sin();
    4.0 * s * s / (dx * dx)
}

fn max_pair(tol: f64, what: &str, got: f64) -> Result<(), String> {
    if got <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {got:.3e} > {tol:.0e}"))
    }
}

/// The four Moore-Penrose identities on random matrices of sizes 1×2, 2×2, 2×3.
pub fn penrose_sweep(seed: u64, count: usize) -> Result<f64, String> {
    let mut r = rng(seed);
    let shapes = [(1, 2), (2, 2), (2, 3)];
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let (rows, cols) = shapes[i % shapes.len()];
        let m = random_matrix(&mut r, rows, cols);
        let res = penrose_residuals(&m, &pseudoinverse(&m));
        worst = res.iter().cloned().fold(worst, f64::max);
    }
    max_pair(1e-10, "Moore-Penrose residual", worst).map(|_| worst)
}

pub fn quadratic_integrands(n: usize, m: usize) -> Vec<Integrand> {
    let mut specs = vec![
        IntegrandSpec::Identity,
        IntegrandSpec::Diagonal {
            base: (1..=m).map(|i| i as f64).collect(),
            amplitude: 0.4,
            frequency: 2.0,
        },
    ];
    if m >= 2 {
        specs.push(IntegrandSpec::Rotation {
            eigenvalues: (0..m).map(|i| 0.5 + 1.5 * i as f64).collect(),
            turns: 1.0,
        });
    }
    specs.iter().map(|s| s.build(n, m).unwrap()).collect()
}

/// Growth sandwich `d₁‖Xu‖^p ≤ F(u) ≤ ∫a + d₂‖Xu‖^p` on random fields, cycling
/// through built-in families and quadratic integrands.
pub fn growth_sweep(seed: u64, count: usize) -> Result<(), String> {
    let mut r = rng(seed);
    let grid = Grid::new(vec![-1.0, 0.0], vec![1.0, 1.0], vec![12, 10]).unwrap();
    let cases: Vec<(CoefficientField, Integrand)> = ["grushin_lift", "degenerate_2d", "s1_not_s2", "heisenberg"]
        .iter()
        .filter_map(|name| builtin_family(&FamilySpec::named(name)).ok())
        .filter(|f| f.dim_n() == 2)
        .flat_map(|f| {
            let c = f.at(3);
            quadratic_integrands(2, c.dim_m())
                .into_iter()
                .map(move |a| (c.clone(), a))
        })
        .collect();
    for i in 0..count {
        let (c, a) = &cases[i % cases.len()];
        let u = random_field(&mut r, &grid, BoundaryMode::Free);
        if !growth_check(a, &u, c).map_err(|e| e.to_string())? {
            return Err(format!("growth sandwich fails on field {i}"));
        }
    }
    Ok(())
}

/// `⟨Av, w⟩ = ⟨v, Aw⟩` and `⟨Av, v⟩ ≥ 0` for random zero-boundary pairs.
pub fn operator_sweep(seed: u64, count: usize) -> Result<f64, String> {
    let mut r = rng(seed);
    let grid = Grid::new(vec![-1.0, 0.0], vec![1.0, 1.0], vec![10, 9]).unwrap();
    let zero = ScalarField::zeros(&grid, BoundaryMode::Free);
    let families = ["grushin_lift", "degenerate_2d", "s1_not_s2", "euclidean"];
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let name = families[i % families.len()];
        let mut spec = FamilySpec::named(name);
        if name == "euclidean" {
            spec.n = Some(2);
        }
        let fam = builtin_family(&spec).map_err(|e| e.to_string())?;
        let h = [1, 2, 4, 8][(i / families.len()) % 4];
        let c = fam.at(h);
        let a = &quadratic_integrands(2, c.dim_m())[i % 2];
        let mu = if i % 3 == 0 { 0.0 } else { 0.5 };
        let prob = DirichletProblem::new(c, a.clone(), mu, zero.clone()).map_err(|e| e.to_string())?;
        let v = random_zero_field(&mut r, &grid);
        let w = random_zero_field(&mut r, &grid);
        let av = apply_operator(&prob, &v).map_err(|e| e.to_string())?;
        let aw = apply_operator(&prob, &w).map_err(|e| e.to_string())?;
        let avw = inner(&av, &w).unwrap();
        let vaw = inner(&v, &aw).unwrap();
        let scale = lp_norm(&av, 2.0) * lp_norm(&w, 2.0) + lp_norm(&aw, 2.0) * lp_norm(&v, 2.0);
        let asym = (avw - vaw).abs() / scale.max(1.0);
        worst = worst.max(asym);
        max_pair(1e-11, "operator asymmetry", asym)?;
        let avv = inner(&av, &v).unwrap();
        if avv < -1e-11 * scale.max(1.0) {
            return Err(format!("negative form ⟨Av,v⟩ = {avv:.3e}"));
        }
    }
    Ok(worst)
}

/// `‖u‖² ≤ (2/R̂)‖X^h u‖²` for every probed `h`, with `R̂ = min_h R_h`.
pub fn poincare_sweep(seed: u64, count: usize) -> Result<f64, String> {
    let mut r = rng(seed);
    let grid = Grid::new(vec![-1.0, 0.0], vec![1.0, 1.0], vec![16, 16]).unwrap();
    let fam = builtin_family(&FamilySpec::named("grushin_lift")).map_err(|e| e.to_string())?;
    let hs = [1u32, 2, 4, 8];
    let opts = RayleighOptions::default();
    let mut r_hat = f64::INFINITY;
    for &h in &hs {
        let est = rayleigh_quotient(&fam.at(h), &grid, 2.0, &opts).map_err(|e| e.to_string())?;
        r_hat = r_hat.min(est.value);
    }
    for i in 0..count {
        let u = random_zero_field(&mut r, &grid);
        for &h in &hs {
            if !poincare_check(&u, &fam.at(h), 2.0, r_hat).map_err(|e| e.to_string())? {
                return Err(format!("Poincaré inequality fails for field {i} at h = {h}"));
            }
        }
    }
    Ok(r_hat)
}

/// Homogeneity and the triangle inequality of `lp_norm` for `p ∈ {1.5, 2, 3}`.
pub fn norm_sweep(seed: u64, count: usize) -> Result<f64, String> {
    let mut r = rng(seed);
    let grid = Grid::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 1.0], vec![6, 5, 4]).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let p = [1.5, 2.0, 3.0][i % 3];
        let u = random_field(&mut r, &grid, BoundaryMode::Free);
        let v = random_field(&mut r, &grid, BoundaryMode::Free);
        let c: f64 = r.gen_range(-5.0..5.0);
        let nu = lp_norm(&u, p);
        let homog = (lp_norm(&u.scaled(c), p) - c.abs() * nu).abs() / (c.abs() * nu).max(1.0);
        worst = worst.max(homog);
        max_pair(1e-12, "homogeneity defect", homog)?;
        let sum = lp_norm(&u.add(&v).unwrap(), p);
        let bound = nu + lp_norm(&v, p);
        if sum > bound + 1e-12 {
            return Err(format!("triangle inequality: {sum} > {bound}"));
        }
    }
    Ok(worst)
}
