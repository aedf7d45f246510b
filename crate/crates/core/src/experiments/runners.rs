//! One function per experiment.

use rayon::prelude::*;

use super::report::{fit_rate, ConvergenceReport, Metadata, RateAxis, ReportRow};
use super::{sample_vector, ExperimentConfig, FieldPreset, Setup};
use crate::error::Result;
use crate::functionals::{momentum, Perturbation};
use crate::grid::{inner, lp_norm, lp_norm_pow, x_gradient, BoundaryMode, ScalarField};
use crate::mollify::{affine_approx_step, commutator, meyers_serrin_step};
use crate::solve::{
    minimize_total, rayleigh_quotient, solve_dirichlet, DirichletProblem, RayleighOptions, ITER_PER_UNKNOWN,
};

fn metadata(cfg: &ExperimentConfig, s: &Setup) -> Metadata {
    let id = cfg.experiment;
    let mut m = Metadata::new(id.code(), id.name(), id.theorem());
    m.scalars.insert("s2_lipschitz_bound".into(), s.validation.classification.s2_lip_bound);
    m.scalars.insert(
        "s1_shape".into(),
        if s.validation.classification.s1_shape { 1.0 } else { 0.0 },
    );
    if let Some(h) = s.validation.truncated_at {
        m.notes.push(format!(
            "default schedule truncated before h = {h}: sigma(h) falls below the resolvability gate"
        ));
    }
    m
}

fn rayleigh_opts(cfg: &ExperimentConfig) -> RayleighOptions {
    RayleighOptions {
        tol: cfg.tolerances.rayleigh,
        cg_tol: cfg.tolerances.cg,
        ..Default::default()
    }
}

/// Per-row results: the row plus named auxiliary values.
type RowOut = (ReportRow, Vec<(&'static str, f64)>);

fn assemble(report: &mut ConvergenceReport, rows: Vec<RowOut>) {
    for (row, extra) in rows {
        report.rows.push(row);
        for (k, v) in extra {
            report.push_series(k, v);
        }
    }
}

pub(crate) fn rayleigh_convergence(cfg: &ExperimentConfig, s: &Setup) -> Result<ConvergenceReport> {
    let opts = rayleigh_opts(cfg);
    let mut report = ConvergenceReport::new(metadata(cfg, s));
    let limit = rayleigh_quotient(s.family.limit(), &s.grid, cfg.p, &opts)?;
    let rows = s
        .validation
        .h_values
        .par_iter()
        .map(|&h| {
            let r = rayleigh_quotient(&s.family.at(h), &s.grid, cfg.p, &opts)?;
            Ok((
                ReportRow::compare(h, r.value, limit.value),
                vec![("iterations", r.iterations as f64)],
            ))
        })
        .collect::<Result<Vec<RowOut>>>()?;
    assemble(&mut report, rows);
    let min = report.rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let m = &mut report.metadata;
    m.scalars.insert("limit_value".into(), limit.value);
    m.scalars.insert("min_rayleigh_over_h".into(), min);
    if cfg.p != 2.0 {
        m.notes.push("p != 2: all quotients are upper bounds obtained by descent".into());
    }
    Ok(report)
}

/// `(∫ sin²(h x₂))^{1/2}` over the box.
fn sine_norm(lo: &[f64], hi: &[f64], h: f64) -> f64 {
    let (a, b) = (lo[1], hi[1]);
    let line = (b - a) / 2.0 - ((2.0 * h * b).sin() - (2.0 * h * a).sin()) / (4.0 * h);
    ((hi[0] - lo[0]) * line).sqrt()
}

pub(crate) fn noncompactness(cfg: &ExperimentConfig, s: &Setup) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport::new(metadata(cfg, s));
    let tests = if cfg.test_fields.is_empty() {
        vec![
            FieldPreset::Constant { value: 1.0 },
            FieldPreset::SinProduct {
                frequencies: vec![1.0, 1.0],
                amplitude: 1.0,
            },
            FieldPreset::Linear {
                coeffs: vec![0.0, 1.0],
                offset: 0.0,
            },
        ]
    } else {
        cfg.test_fields.clone()
    };
    let ws = tests.iter().map(|t| t.sample(&s.grid)).collect::<Result<Vec<_>>>()?;
    const KEYS: [&str; 8] = [
        "inner_abs_0",
        "inner_abs_1",
        "inner_abs_2",
        "inner_abs_3",
        "inner_abs_4",
        "inner_abs_5",
        "inner_abs_6",
        "inner_abs_7",
    ];
    if ws.len() > KEYS.len() {
        return Err(crate::Error::config(format!("E2 takes at most {} test fields", KEYS.len())));
    }
    let g = &s.grid;
    let rows = s
        .validation
        .h_values
        .par_iter()
        .map(|&h| {
            let hf = h as f64;
            let u = ScalarField::from_fn(g, BoundaryMode::Free, |x| (hf * x[1]).sin());
            let norm = lp_norm(&u, 2.0);
            let xnorm = lp_norm(&x_gradient(&u, &s.family.at(h))?, 2.0);
            let mut extra = vec![("x_norm", xnorm)];
            for (i, w) in ws.iter().enumerate() {
                extra.push((KEYS[i], inner(&u, w)?.abs()));
            }
            Ok((ReportRow::compare(h, norm, sine_norm(g.lo(), g.hi(), hf)), extra))
        })
        .collect::<Result<Vec<RowOut>>>()?;
    assemble(&mut report, rows);
    for (i, t) in tests.iter().enumerate() {
        report
            .metadata
            .notes
            .push(format!("{}: |<u_h, w>| for w = {t:?}", KEYS[i]));
    }
    Ok(report)
}

fn smooth_u(cfg: &ExperimentConfig, s: &Setup) -> Result<ScalarField> {
    let preset = cfg.test_fields.first().cloned().unwrap_or(FieldPreset::SinProduct {
        frequencies: vec![2.0; s.grid.dim()],
        amplitude: 1.0,
    });
    preset.sample(&s.grid)
}

pub(crate) fn mollification_rate(cfg: &ExperimentConfig, s: &Setup) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport::new(metadata(cfg, s));
    report.metadata.rate_axis = RateAxis::Sigma;
    let u = smooth_u(cfg, s)?;
    let n = s.grid.dim();
    let rows = s
        .validation
        .h_values
        .par_iter()
        .map(|&h| {
            let c = commutator(&u, &s.family, h, cfg.p)?;
            Ok((
                ReportRow::compare(h, c.norm, 0.0),
                vec![
                    ("sigma", c.sigma),
                    ("bound", c.bound(n)),
                    ("smoothed_gradient_norm", c.gradient_norm),
                ],
            ))
        })
        .collect::<Result<Vec<RowOut>>>()?;
    assemble(&mut report, rows);
    let theory = (n as f64 * (cfg.p - 1.0) + cfg.p) / cfg.p;
    report.metadata.scalars.insert("theory_rate".into(), theory);
    match fit_rate(&report) {
        Ok(rate) => report.fitted_rate = Some(rate),
        Err(e) => report.metadata.notes.push(format!("no fitted rate: {e}")),
    }
    Ok(report)
}

/// Attaches a Rayleigh certificate when the problem has no zeroth-order term.
fn certify(prob: DirichletProblem, shift: f64, cfg: &ExperimentConfig) -> Result<DirichletProblem> {
    if shift > 0.0 {
        return Ok(prob);
    }
    let r = rayleigh_quotient(prob.coeff(), prob.grid(), 2.0, &rayleigh_opts(cfg))?;
    prob.with_certificate(r.value)
}

pub(crate) fn minima_convergence(cfg: &ExperimentConfig, s: &Setup) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport::new(metadata(cfg, s));
    let spec = cfg.perturbation.as_ref().expect("checked in setup");
    let g = &s.grid;
    let pert = Perturbation::new(spec.mu, spec.g.sample(g)?, 2.0)?;
    let zero = ScalarField::zeros(g, BoundaryMode::Free);
    let datum = |h: Option<u32>| match &cfg.boundary_data {
        Some(b) => b.datum(g, h),
        None => Ok(zero.clone()),
    };
    let minimize = |coeff, phi: ScalarField| -> Result<(f64, ScalarField)> {
        let prob = DirichletProblem::new(coeff, s.integrand.clone(), 0.0, zero.clone())?.with_datum(phi)?;
        let prob = certify(prob, pert.mu(), cfg)?;
        let (rep, value) = minimize_total(&prob, &pert)?;
        Ok((value, rep.solution))
    };
    let (m_inf, u_inf) = minimize(s.family.limit().clone(), datum(None)?)?;
    let rows = s
        .validation
        .h_values
        .par_iter()
        .map(|&h| {
            let (m_h, u_h) = minimize(s.family.at(h), datum(Some(h))?)?;
            let dist = lp_norm(&u_h.sub(&u_inf)?, 2.0);
            Ok((ReportRow::compare(h, m_h, m_inf), vec![("minimizer_distance", dist)]))
        })
        .collect::<Result<Vec<RowOut>>>()?;
    assemble(&mut report, rows);
    let y = pert.young_constants(1.0);
    let sc = &mut report.metadata.scalars;
    sc.insert("young_epsilon".into(), y.epsilon);
    sc.insert("young_delta1".into(), y.delta1);
    sc.insert("young_delta2".into(), y.delta2);
    sc.insert("young_delta3".into(), y.delta3);
    sc.insert("limit_minimizer_norm".into(), lp_norm(&u_inf, 2.0));
    Ok(report)
}

pub(crate) fn h_convergence(cfg: &ExperimentConfig, s: &Setup) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport::new(metadata(cfg, s));
    let spec = cfg.perturbation.as_ref().expect("checked in setup");
    let g = &s.grid;
    let src = spec.g.sample(g)?;
    let phi_mom = sample_vector(cfg.phi_field.as_deref().expect("checked in setup"), g)?;
    let zero = ScalarField::zeros(g, BoundaryMode::Free);
    let datum = |h: Option<u32>| match &cfg.boundary_data {
        Some(b) => b.datum(g, h),
        None => Ok(zero.clone()),
    };
    let budget = ITER_PER_UNKNOWN * crate::solve::unknowns(g);
    let solve = |coeff: crate::anisotropy::CoefficientField, phi: ScalarField| {
        let prob = DirichletProblem::new(coeff.clone(), s.integrand.clone(), spec.mu, src.clone())?
            .with_datum(phi)?;
        let prob = certify(prob, spec.mu, cfg)?;
        let rep = solve_dirichlet(&prob, cfg.tolerances.cg, budget)?;
        let mom = momentum(&s.integrand, &rep.solution, &phi_mom, &coeff)?;
        Ok::<_, crate::Error>((rep, mom))
    };
    let (limit, mom_inf) = solve(s.family.limit().clone(), datum(None)?)?;
    let u_inf = limit.solution;
    let norm_inf = lp_norm(&u_inf, 2.0);
    let rows = s
        .validation
        .h_values
        .par_iter()
        .map(|&h| {
            let (rep, mom) = solve(s.family.at(h), datum(Some(h))?)?;
            let u_h = &rep.solution;
            let dist = lp_norm(&u_h.sub(&u_inf)?, 2.0);
            let mom_row = ReportRow::compare(h, mom, mom_inf);
            Ok((
                ReportRow::with_error(h, lp_norm(u_h, 2.0), norm_inf, dist),
                vec![
                    ("momentum", mom),
                    ("momentum_abs_error", mom_row.abs_error),
                    ("momentum_rel_error", mom_row.rel_error),
                    ("iterations", rep.iterations as f64),
                    ("residual", rep.residual),
                ],
            ))
        })
        .collect::<Result<Vec<RowOut>>>()?;
    assemble(&mut report, rows);
    report.metadata.scalars.insert("limit_momentum".into(), mom_inf);
    report
        .metadata
        .notes
        .push("rows: value = ||u_h||_2, reference = ||u_inf||_2, abs_error = ||u_h - u_inf||_2".into());
    Ok(report)
}

pub(crate) fn recovery_sequence(cfg: &ExperimentConfig, s: &Setup) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport::new(metadata(cfg, s));
    report.metadata.rate_axis = RateAxis::Sigma;
    let g = &s.grid;
    let p = cfg.p;
    let u = smooth_u(cfg, s)?;
    let target = lp_norm_pow(&x_gradient(&u, s.family.limit())?, p);
    let phi = match &cfg.boundary_data {
        Some(b) => Some(b.datum(g, None)?),
        None => None,
    };
    let rows = s
        .validation
        .h_values
        .iter()
        .zip(&s.validation.sigma)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(&h, &sigma)| {
            let u_h = match &phi {
                None => meyers_serrin_step(&u, &s.family, h)?,
                Some(phi) => {
                    let margin = sigma + 2.0 * g.max_spacing();
                    let v = affine_approx_step(&u, phi, &s.family, h, margin)?;
                    phi.add(&v)?
                }
            };
            let energy = lp_norm_pow(&x_gradient(&u_h, &s.family.at(h))?, p);
            let dist = lp_norm(&u_h.sub(&u)?, p);
            Ok((
                ReportRow::compare(h, energy, target),
                vec![("sigma", sigma), ("lp_distance", dist)],
            ))
        })
        .collect::<Result<Vec<RowOut>>>()?;
    assemble(&mut report, rows);
    if phi.is_some() {
        report
            .metadata
            .notes
            .push("affine recovery: u_h = phi + J_h * (psi_h (u - phi)), cutoff margin sigma(h) + 2 dx".into());
    }
    match fit_rate(&report) {
        Ok(rate) => report.fitted_rate = Some(rate),
        Err(e) => report.metadata.notes.push(format!("no fitted rate: {e}")),
    }
    Ok(report)
}
