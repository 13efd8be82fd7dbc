//! Refinement studies on structured meshes.

use crate::dls::{solve_dls, DiscontinuousSpace, DlsProblem};
use crate::error::{Error, Result};
use crate::field::{ScalarDifference, VectorDifference};
use crate::flux::{solve_flux, BoundaryData, FluxProblem};
use crate::linalg::CgOptions;
use crate::mesh::{build_structured_triangle_mesh, Mesh};
use crate::norms::{
    dls_scalar_norm_squared, dls_vector_norm_squared, flux_errors, pressure_errors,
    ConvergenceReport, ErrorQuadrature, LevelResult,
};
use crate::penalty::PenaltyMode;
use crate::pressure::{build_lagrange_space, solve_pressure, PressureProblem};
use crate::problems::ManufacturedProblem;
use crate::reconstruction::{build_reconstruction_with, default_patch_size, PatchOrdering};

/// Mesh resolution of the first level; level k uses `BASE_LEVEL * 2^k`.
pub const BASE_LEVEL: usize = 10;

pub fn level_sizes(levels: usize) -> Vec<usize> {
    (0..levels).map(|k| BASE_LEVEL << k).collect()
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub problem: ManufacturedProblem,
    pub m: usize,
    /// One report per entry; empty for a flux-only study.
    pub pressure_degrees: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Defaults to the reference size for `m`.
    pub patch_size: Option<usize>,
    pub patch_ordering: PatchOrdering,
    pub penalty: PenaltyMode,
    pub cg: CgOptions,
}

impl StudyConfig {
    pub fn new(problem: ManufacturedProblem, m: usize, sizes: Vec<usize>) -> Self {
        StudyConfig {
            problem,
            m,
            pressure_degrees: Vec::new(),
            sizes,
            patch_size: None,
            patch_ordering: PatchOrdering::default(),
            penalty: PenaltyMode::default(),
            cg: CgOptions::default(),
        }
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
            .unwrap_or_else(|| default_patch_size(self.m, 2))
    }
}

/// Flux and pressure errors of one mesh.
pub fn run_level(config: &StudyConfig, mesh: &Mesh, n: usize) -> Result<Vec<LevelResult>> {
    let p = &config.problem;
    let op = build_reconstruction_with(mesh, config.m, config.patch_size(), config.patch_ordering)?;
    let problem = FluxProblem {
        mesh,
        reconstruction: &op,
        source: &p.f,
        boundary: BoundaryData::Dirichlet {
            g: &p.u,
            grad_g: Some(&p.grad_u),
        },
        penalty: config.penalty,
    };
    let flux = solve_flux(&problem, config.cg)?;
    let flux_err = flux_errors(
        mesh,
        &flux.field,
        p,
        config.penalty,
        &ErrorQuadrature::for_problem(config.m, p),
    );
    let base = LevelResult {
        n,
        h: mesh.h_max,
        dofs_flux: flux.num_dofs(),
        dofs_pressure: None,
        flux: flux_err,
        pressure: None,
    };
    if config.pressure_degrees.is_empty() {
        return Ok(vec![base]);
    }
    config
        .pressure_degrees
        .iter()
        .map(|&m_u| {
            let space = build_lagrange_space(mesh, m_u)?;
            let pressure = solve_pressure(
                &PressureProblem {
                    mesh,
                    space: &space,
                    flux: &flux.field,
                    flux_degree: config.m,
                    boundary: &p.u,
                    penalty: config.penalty,
                },
                config.cg,
            )?;
            let quad = ErrorQuadrature::for_problem(config.m.max(m_u), p);
            Ok(LevelResult {
                dofs_pressure: Some(space.num_dofs()),
                pressure: Some(pressure_errors(
                    mesh,
                    &pressure.field,
                    p,
                    config.penalty,
                    &quad,
                )),
                ..base.clone()
            })
        })
        .collect()
}

/// One report per pressure degree (a single flux-only report when none).
pub fn run_convergence(config: &StudyConfig) -> Result<Vec<ConvergenceReport>> {
    if config.sizes.len() < 2 {
        return Err(Error::InvalidArgument(
            "a convergence study needs at least two levels".into(),
        ));
    }
    let degrees: Vec<Option<usize>> = if config.pressure_degrees.is_empty() {
        vec![None]
    } else {
        config.pressure_degrees.iter().map(|&d| Some(d)).collect()
    };
    let mut reports: Vec<ConvergenceReport> = degrees
        .iter()
        .map(|&d| ConvergenceReport {
            problem: config.problem.name.to_string(),
            m: config.m,
            pressure_degree: d,
            levels: Vec::new(),
        })
        .collect();
    for &n in &config.sizes {
        let mesh = build_structured_triangle_mesh(n, config.problem.domain)?;
        for (report, level) in reports.iter_mut().zip(run_level(config, &mesh, n)?) {
            log::info!(
                "{} m={} n={n}: flux {:?} pressure {:?}",
                report.problem,
                report.m,
                level.flux,
                level.pressure
            );
            report.levels.push(level);
        }
    }
    Ok(reports)
}

/// Errors of the coupled discontinuous solve in its own broken norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlsLevel {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub scalar_error: f64,
    pub flux_error: f64,
    pub iterations: usize,
}

impl DlsLevel {
    pub fn combined(&self) -> f64 {
        self.scalar_error + self.flux_error
    }
}

pub fn run_dls_level(config: &StudyConfig, mesh: &Mesh, n: usize) -> Result<DlsLevel> {
    let p = &config.problem;
    let space = DiscontinuousSpace::new(mesh, config.m);
    let sol = solve_dls(
        &DlsProblem {
            mesh,
            space: &space,
            source: &p.f,
            boundary: &p.u,
            penalty: config.penalty,
        },
        config.cg,
    )?;
    let quad = ErrorQuadrature::for_problem(config.m, p);
    let (u, q) = (p.exact_pressure(), p.exact_flux());
    let (uh, qh) = (sol.pressure(), sol.flux());
    Ok(DlsLevel {
        n,
        h: mesh.h_max,
        dofs: sol.num_dofs(),
        scalar_error: dls_scalar_norm_squared(
            mesh,
            &ScalarDifference(&u, &uh),
            config.penalty,
            &quad,
        )
        .sqrt(),
        flux_error: dls_vector_norm_squared(
            mesh,
            &VectorDifference(&q, &qh),
            config.penalty,
            &quad,
        )
        .sqrt(),
        iterations: sol.iterations,
    })
}

/// Flux DOFs and flux error in the broken norm ||.||_p of both methods on
/// one mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub n: usize,
    pub h: f64,
    pub sequential_dofs: usize,
    pub sequential_error: f64,
    pub dls_dofs: usize,
    pub dls_error: f64,
    pub dls_scalar_error: f64,
}

pub fn run_comparison(config: &StudyConfig) -> Result<Vec<ComparisonRow>> {
    let p = &config.problem;
    config
        .sizes
        .iter()
        .map(|&n| {
            let mesh = build_structured_triangle_mesh(n, p.domain)?;
            let op = build_reconstruction_with(
                &mesh,
                config.m,
                config.patch_size(),
                config.patch_ordering,
            )?;
            let flux = solve_flux(
                &FluxProblem {
                    mesh: &mesh,
                    reconstruction: &op,
                    source: &p.f,
                    boundary: BoundaryData::Dirichlet {
                        g: &p.u,
                        grad_g: Some(&p.grad_u),
                    },
                    penalty: config.penalty,
                },
                config.cg,
            )?;
            let quad = ErrorQuadrature::for_problem(config.m, p);
            let exact = p.exact_flux();
            let sequential_error = dls_vector_norm_squared(
                &mesh,
                &VectorDifference(&exact, &flux.field),
                config.penalty,
                &quad,
            )
            .sqrt();
            let dls = run_dls_level(config, &mesh, n)?;
            Ok(ComparisonRow {
                n,
                h: mesh.h_max,
                sequential_dofs: flux.num_dofs(),
                sequential_error,
                dls_dofs: dls.dofs,
                dls_error: dls.flux_error,
                dls_scalar_error: dls.scalar_error,
            })
        })
        .collect()
}

pub const COMPARISON_CSV_HEADER: &str = "method,level,h,dofs,err_p";

/// Two series, sequential first, one row per level each.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{COMPARISON_CSV_HEADER}\n");
    for (method, pick) in [
        (
            "sequential",
            (|r: &ComparisonRow| (r.sequential_dofs, r.sequential_error))
                as fn(&ComparisonRow) -> (usize, f64),
        ),
        ("dls", |r| (r.dls_dofs, r.dls_error)),
    ] {
        for (i, r) in rows.iter().enumerate() {
            let (d, e) = pick(r);
            out.push_str(&format!("{method},{i},{:.6e},{d},{e:.6e}\n", r.h));
        }
    }
    out
}

/// DOFs needed for `target` error, by linear interpolation of log(dofs)
/// against log(error) between the bracketing levels.
pub fn dofs_at_error(series: &[(usize, f64)], target: f64) -> Option<f64> {
    series.windows(2).find_map(|w| {
        let ((d0, e0), (d1, e1)) = (w[0], w[1]);
        let (lo, hi) = (e0.min(e1), e0.max(e1));
        if target < lo || target > hi || e0 == e1 {
            return None;
        }
        let t = (target.ln() - e0.ln()) / (e1.ln() - e0.ln());
        Some(((d0 as f64).ln() + t * ((d1 as f64).ln() - (d0 as f64).ln())).exp())
    })
}

/// Slope of log(error) against log(dofs) between the last two entries.
pub fn dof_slope(series: &[(usize, f64)]) -> Option<f64> {
    let [.., (d0, e0), (d1, e1)] = series else {
        return None;
    };
    Some((e1.ln() - e0.ln()) / ((*d1 as f64).ln() - (*d0 as f64).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example1, quadratic};

    #[test]
    fn schedule() {
        assert_eq!(level_sizes(4), vec![10, 20, 40, 80]);
    }

    #[test]
    fn log_interpolation() {
        let series = [(100, 1.0), (400, 0.25), (1600, 0.0625)];
        assert!((dofs_at_error(&series, 0.5).unwrap() - 200.0).abs() < 1e-9);
        assert!((dofs_at_error(&series, 0.25).unwrap() - 400.0).abs() < 1e-9);
        assert_eq!(dofs_at_error(&series, 2.0), None);
        assert!((dof_slope(&series).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn comparison_dof_ratio() {
        let mut config = StudyConfig::new(example1(), 1, vec![4, 8]);
        config.patch_size = Some(7);
        let rows = run_comparison(&config).unwrap();
        for r in &rows {
            assert_eq!(9 * r.sequential_dofs, 2 * r.dls_dofs);
        }
        let csv = comparison_csv(&rows);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(3).unwrap().starts_with("dls,0,"));
    }

    #[test]
    fn one_level_rejected() {
        assert!(run_convergence(&StudyConfig::new(example1(), 1, vec![10])).is_err());
    }

    #[test]
    fn quadratic_solution_is_exact_for_every_pairing() {
        let mut config = StudyConfig::new(quadratic(), 1, vec![4, 8]);
        config.pressure_degrees = vec![1, 2];
        let reports = run_convergence(&config).unwrap();
        assert_eq!(reports.len(), 2);
        for level in &reports[1].levels {
            assert!(level.flux.l2 < 1e-7);
            assert!(level.pressure.unwrap().l2 < 1e-7);
        }
        assert_eq!(reports[0].levels[0].dofs_pressure, Some(25));
        assert_eq!(reports[1].levels[1].dofs_pressure, Some(17 * 17));
        assert_eq!(reports[1].levels[1].dofs_flux, 2 * 128);
    }
}
