//! Error norms and convergence orders.

use rayon::prelude::*;

use crate::field::{ScalarDifference, ScalarField, VectorDifference, VectorField};
use crate::mesh::Mesh;
use crate::penalty::PenaltyMode;
use crate::problems::ManufacturedProblem;
use crate::quadrature::{
    edge_quadrature, map_to_segment, polygon_quadrature_with, triangle_quadrature, Point,
    QuadratureRule,
};

/// Midpoint refinement levels on elements touching a singular point.
pub const SINGULAR_REFINEMENT: usize = 3;

/// Quadrature used for error integrals.
#[derive(Debug, Clone)]
pub struct ErrorQuadrature {
    volume: QuadratureRule,
    edge: QuadratureRule,
    singular_point: Option<Point>,
}

impl ErrorQuadrature {
    /// Exactness `2m + 6`, refined around `singular_point`.
    pub fn new(m: usize, singular_point: Option<Point>) -> Self {
        let degree = (2 * m + 6).min(crate::quadrature::MAX_TRIANGLE_DEGREE);
        ErrorQuadrature {
            volume: triangle_quadrature(degree).expect("degree within table"),
            edge: edge_quadrature(degree),
            singular_point,
        }
    }

    pub fn for_problem(m: usize, problem: &ManufacturedProblem) -> Self {
        Self::new(m, problem.singular_point)
    }

    pub fn element_rule(&self, mesh: &Mesh, k: usize) -> QuadratureRule {
        let refine = match self.singular_point {
            Some(p) if mesh.contains(k, p, 1e-12) => SINGULAR_REFINEMENT,
            _ => 0,
        };
        polygon_quadrature_with(&mesh.vertices(k), &self.volume, refine)
    }

    pub fn face_rule(&self, mesh: &Mesh, f: usize) -> QuadratureRule {
        let (a, b) = mesh.face_endpoints(f);
        map_to_segment(&self.edge, a, b)
    }
}

fn sum_elements<F: Fn(usize) -> f64 + Sync>(mesh: &Mesh, f: F) -> f64 {
    let parts: Vec<f64> = (0..mesh.num_elements()).into_par_iter().map(&f).collect();
    parts.iter().sum()
}

pub fn vector_l2_squared(
    mesh: &Mesh,
    q: &(impl VectorField + ?Sized),
    quad: &ErrorQuadrature,
) -> f64 {
    sum_elements(mesh, |k| {
        quad.element_rule(mesh, k).integrate(|x| {
            let v = q.value(k, x);
            v[0] * v[0] + v[1] * v[1]
        })
    })
}

pub fn divergence_l2_squared(
    mesh: &Mesh,
    q: &(impl VectorField + ?Sized),
    quad: &ErrorQuadrature,
) -> f64 {
    sum_elements(mesh, |k| {
        quad.element_rule(mesh, k)
            .integrate(|x| q.divergence(k, x).powi(2))
    })
}

/// |||q|||_p^2: divergence, interior full jumps and boundary tangential
/// traces.
pub fn flux_energy_squared(
    mesh: &Mesh,
    q: &(impl VectorField + ?Sized),
    penalty: PenaltyMode,
    quad: &ErrorQuadrature,
) -> f64 {
    let volume = divergence_l2_squared(mesh, q, quad);
    let faces: f64 = mesh
        .faces
        .iter()
        .enumerate()
        .map(|(f, face)| {
            let rule = quad.face_rule(mesh, f);
            let w = penalty.weight(mesh, f);
            let n = face.normal;
            w * match face.neighbor {
                Some(nb) => rule.integrate(|x| {
                    let (a, b) = (q.value(face.owner, x), q.value(nb, x));
                    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
                }),
                None => rule.integrate(|x| {
                    let v = q.value(face.owner, x);
                    (v[0] * n[1] - v[1] * n[0]).powi(2)
                }),
            }
        })
        .sum();
    volume + faces
}

pub fn scalar_l2_squared(
    mesh: &Mesh,
    v: &(impl ScalarField + ?Sized),
    quad: &ErrorQuadrature,
) -> f64 {
    sum_elements(mesh, |k| {
        quad.element_rule(mesh, k)
            .integrate(|x| v.value(k, x).powi(2))
    })
}

pub fn gradient_l2_squared(
    mesh: &Mesh,
    v: &(impl ScalarField + ?Sized),
    quad: &ErrorQuadrature,
) -> f64 {
    sum_elements(mesh, |k| {
        quad.element_rule(mesh, k).integrate(|x| {
            let g = v.gradient(k, x);
            g[0] * g[0] + g[1] * g[1]
        })
    })
}

/// |||v|||_u^2: gradient plus boundary trace.
pub fn pressure_energy_squared(
    mesh: &Mesh,
    v: &(impl ScalarField + ?Sized),
    penalty: PenaltyMode,
    quad: &ErrorQuadrature,
) -> f64 {
    let boundary: f64 = mesh
        .boundary_faces()
        .map(|(f, face)| {
            penalty.weight(mesh, f)
                * quad
                    .face_rule(mesh, f)
                    .integrate(|x| v.value(face.owner, x).powi(2))
        })
        .sum();
    gradient_l2_squared(mesh, v, quad) + boundary
}

/// Broken norm ||v||_u^2 with scalar jumps on every face (the trace itself
/// on the boundary).
pub fn dls_scalar_norm_squared(
    mesh: &Mesh,
    v: &(impl ScalarField + ?Sized),
    penalty: PenaltyMode,
    quad: &ErrorQuadrature,
) -> f64 {
    let faces: f64 = mesh
        .faces
        .iter()
        .enumerate()
        .map(|(f, face)| {
            let rule = quad.face_rule(mesh, f);
            penalty.weight(mesh, f)
                * match face.neighbor {
                    Some(nb) => {
                        rule.integrate(|x| (v.value(face.owner, x) - v.value(nb, x)).powi(2))
                    }
                    None => rule.integrate(|x| v.value(face.owner, x).powi(2)),
                }
        })
        .sum();
    gradient_l2_squared(mesh, v, quad) + faces
}

/// Broken norm ||q||_p^2 with divergence, L^2 and interior normal jumps.
pub fn dls_vector_norm_squared(
    mesh: &Mesh,
    q: &(impl VectorField + ?Sized),
    penalty: PenaltyMode,
    quad: &ErrorQuadrature,
) -> f64 {
    let faces: f64 = mesh
        .interior_faces()
        .map(|(f, face)| {
            let n = face.normal;
            let nb = face.neighbor.expect("interior");
            penalty.weight(mesh, f)
                * quad.face_rule(mesh, f).integrate(|x| {
                    let (a, b) = (q.value(face.owner, x), q.value(nb, x));
                    ((a[0] - b[0]) * n[0] + (a[1] - b[1]) * n[1]).powi(2)
                })
        })
        .sum();
    divergence_l2_squared(mesh, q, quad) + vector_l2_squared(mesh, q, quad) + faces
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxErrors {
    pub l2: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureErrors {
    pub l2: f64,
    pub energy: f64,
}

pub fn flux_errors(
    mesh: &Mesh,
    p_h: &(impl VectorField + ?Sized),
    problem: &ManufacturedProblem,
    penalty: PenaltyMode,
    quad: &ErrorQuadrature,
) -> FluxErrors {
    let exact = problem.exact_flux();
    let e = VectorDifference(&exact, p_h);
    FluxErrors {
        l2: vector_l2_squared(mesh, &e, quad).sqrt(),
        energy: flux_energy_squared(mesh, &e, penalty, quad).sqrt(),
    }
}

pub fn pressure_errors(
    mesh: &Mesh,
    u_h: &(impl ScalarField + ?Sized),
    problem: &ManufacturedProblem,
    penalty: PenaltyMode,
    quad: &ErrorQuadrature,
) -> PressureErrors {
    let exact = problem.exact_pressure();
    let e = ScalarDifference(&exact, u_h);
    PressureErrors {
        l2: scalar_l2_squared(mesh, &e, quad).sqrt(),
        energy: pressure_energy_squared(mesh, &e, penalty, quad).sqrt(),
    }
}

/// Observed orders log(e_{i-1}/e_i) / log(h_{i-1}/h_i) between consecutive
/// levels; `None` where an error vanishes.
pub fn convergence_order(errors: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(errors.len(), hs.len(), "one mesh size per error");
    errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| {
            if e[0] > 0.0 && e[1] > 0.0 {
                Some((e[0] / e[1]).ln() / (h[0] / h[1]).ln())
            } else {
                None
            }
        })
        .collect()
}

/// Errors per refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub n: usize,
    pub h: f64,
    pub dofs_flux: usize,
    pub dofs_pressure: Option<usize>,
    pub flux: FluxErrors,
    pub pressure: Option<PressureErrors>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub problem: String,
    pub m: usize,
    pub pressure_degree: Option<usize>,
    pub levels: Vec<LevelResult>,
}

impl ConvergenceReport {
    fn hs(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.h).collect()
    }

    fn orders_of(&self, f: impl Fn(&LevelResult) -> f64) -> Vec<Option<f64>> {
        let e: Vec<f64> = self.levels.iter().map(f).collect();
        convergence_order(&e, &self.hs())
    }

    pub fn flux_l2_orders(&self) -> Vec<Option<f64>> {
        self.orders_of(|l| l.flux.l2)
    }

    pub fn flux_energy_orders(&self) -> Vec<Option<f64>> {
        self.orders_of(|l| l.flux.energy)
    }

    pub fn pressure_l2_orders(&self) -> Vec<Option<f64>> {
        self.orders_of(|l| l.pressure.map_or(0.0, |p| p.l2))
    }

    pub fn pressure_energy_orders(&self) -> Vec<Option<f64>> {
        self.orders_of(|l| l.pressure.map_or(0.0, |p| p.energy))
    }

    pub const CSV_HEADER: &'static str =
        "level,h,dofs_flux,dofs_pressure,err_p_l2,ord,err_p_energy,ord,err_u_l2,ord,err_u_energy,ord";

    pub fn to_csv(&self) -> String {
        let cols = [
            self.flux_l2_orders(),
            self.flux_energy_orders(),
            self.pressure_l2_orders(),
            self.pressure_energy_orders(),
        ];
        let ord = |col: &Vec<Option<f64>>, i: usize| match i.checked_sub(1).and_then(|j| col[j]) {
            Some(o) => format!("{o:.2}"),
            None => String::new(),
        };
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (i, l) in self.levels.iter().enumerate() {
            let (pl2, pen) = match l.pressure {
                Some(p) => (format!("{:.6e}", p.l2), format!("{:.6e}", p.energy)),
                None => (String::new(), String::new()),
            };
            let (pl2_ord, pen_ord) = if l.pressure.is_some() {
                (ord(&cols[2], i), ord(&cols[3], i))
            } else {
                (String::new(), String::new())
            };
            out.push_str(&format!(
                "{},{:.6e},{},{},{:.6e},{},{:.6e},{},{},{},{},{}\n",
                i,
                l.h,
                l.dofs_flux,
                l.dofs_pressure.map(|d| d.to_string()).unwrap_or_default(),
                l.flux.l2,
                ord(&cols[0], i),
                l.flux.energy,
                ord(&cols[1], i),
                pl2,
                pl2_ord,
                pen,
                pen_ord,
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{GlobalVectorField, ScaledVectorField, ZeroScalarField, ZeroVectorField};
    use crate::mesh::{build_structured_triangle_mesh, Domain};

    #[test]
    fn orders() {
        let o = convergence_order(&[0.1, 0.025], &[0.1, 0.05]);
        assert!((o[0].unwrap() - 2.0).abs() < 1e-14);
        let o = convergence_order(&[1.1553, 0.33347], &[0.1, 0.05]);
        assert!((o[0].unwrap() - 1.79).abs() < 0.005);
        let o = convergence_order(&[0.3, 0.3, 0.0], &[0.1, 0.05, 0.025]);
        assert_eq!(o[0], Some(0.0));
        assert_eq!(o[1], None);
    }

    #[test]
    fn zero_fields_have_zero_norms() {
        let mesh = build_structured_triangle_mesh(3, Domain::UnitSquare).unwrap();
        let q = ErrorQuadrature::new(1, None);
        assert_eq!(
            flux_energy_squared(&mesh, &ZeroVectorField, PenaltyMode::GlobalH, &q),
            0.0
        );
        assert_eq!(vector_l2_squared(&mesh, &ZeroVectorField, &q), 0.0);
        assert_eq!(
            pressure_energy_squared(&mesh, &ZeroScalarField, PenaltyMode::GlobalH, &q),
            0.0
        );
        assert_eq!(
            dls_vector_norm_squared(&mesh, &ZeroVectorField, PenaltyMode::GlobalH, &q),
            0.0
        );
    }

    struct OneElement(usize);

    impl VectorField for OneElement {
        fn value(&self, e: usize, _: Point) -> [f64; 2] {
            if e == self.0 {
                [1.0, 0.0]
            } else {
                [0.0, 0.0]
            }
        }

        fn divergence(&self, _: usize, _: Point) -> f64 {
            0.0
        }
    }

    #[test]
    fn piecewise_constant_jump_field() {
        let mesh = build_structured_triangle_mesh(1, Domain::UnitSquare).unwrap();
        let q = ErrorQuadrature::new(1, None);
        let h = mesh.h_max;
        // element 0 = (0,0),(1,0),(1,1): shared diagonal of length sqrt 2,
        // boundary edges y = 0 (n = (0,-1)) and x = 1 (n = (1,0))
        let e2 = flux_energy_squared(&mesh, &OneElement(0), PenaltyMode::GlobalH, &q);
        let shared = 2f64.sqrt() / h;
        let bottom = 1.0 / h; // (q1 n2 - q2 n1)^2 = 1 on y = 0
        let right = 0.0;
        assert!((e2 - (shared + bottom + right)).abs() < 1e-14, "{e2}");
    }

    #[test]
    fn norms_are_absolutely_homogeneous() {
        let mesh = build_structured_triangle_mesh(4, Domain::UnitSquare).unwrap();
        let q = ErrorQuadrature::new(2, None);
        let field = GlobalVectorField {
            value: |x: Point| [x[0].sin(), x[0] * x[1]],
            divergence: |x: Point| x[0].cos() + x[0],
        };
        let base = flux_energy_squared(&mesh, &field, PenaltyMode::GlobalH, &q).sqrt();
        let scaled = flux_energy_squared(
            &mesh,
            &ScaledVectorField(-3.5, &field),
            PenaltyMode::GlobalH,
            &q,
        )
        .sqrt();
        assert!((scaled - 3.5 * base).abs() < 1e-12 * scaled);
        let d = dls_vector_norm_squared(&mesh, &field, PenaltyMode::FaceH, &q).sqrt();
        let ds = dls_vector_norm_squared(
            &mesh,
            &ScaledVectorField(-3.5, &field),
            PenaltyMode::FaceH,
            &q,
        )
        .sqrt();
        assert!((ds - 3.5 * d).abs() < 1e-12 * ds);
    }

    #[test]
    fn smooth_compatible_field_has_no_face_contributions() {
        // grad of u = x(1-x)y(1-y) vanishes tangentially on the boundary
        let mesh = build_structured_triangle_mesh(5, Domain::UnitSquare).unwrap();
        let q = ErrorQuadrature::new(2, None);
        let field = GlobalVectorField {
            value: |x: Point| {
                [
                    (1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]),
                    x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1]),
                ]
            },
            divergence: |x: Point| -2.0 * x[1] * (1.0 - x[1]) - 2.0 * x[0] * (1.0 - x[0]),
        };
        let total = flux_energy_squared(&mesh, &field, PenaltyMode::GlobalH, &q);
        let volume = divergence_l2_squared(&mesh, &field, &q);
        assert!((total - volume).abs() < 1e-14 * volume);
    }

    #[test]
    fn singular_elements_get_refined_rules() {
        let mesh = build_structured_triangle_mesh(4, Domain::LShape).unwrap();
        let q = ErrorQuadrature::new(1, Some([0.0, 0.0]));
        let sizes: Vec<usize> = (0..mesh.num_elements())
            .map(|k| q.element_rule(&mesh, k).len())
            .collect();
        let base = *sizes.iter().min().unwrap();
        let refined = sizes.iter().filter(|s| **s == base * 64).count();
        // the origin is a vertex of the six triangles around the re-entrant corner
        assert!(refined >= 3, "{refined}");
    }
}
