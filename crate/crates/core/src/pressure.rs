//! Continuous Lagrange pressure recovery from a computed flux.
//!
//! Minimizes sum_K ||grad v - p_h||^2 + sum_{e on boundary} 1/h ||v - g||^2
//! over the C0 space of degree `m_u` on a triangle mesh.

use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::flux::ScalarData;
use crate::linalg::{assemble_blocks, cg_solve, CgOptions, SparseSymmetricMatrix};
use crate::mesh::Mesh;
use crate::penalty::PenaltyMode;
use crate::poly::{monomial_exponents, Powers};
use crate::quadrature::{
    edge_quadrature, map_to_segment, map_to_triangle, triangle_quadrature, Point,
    MAX_TRIANGLE_DEGREE,
};

pub const MAX_PRESSURE_DEGREE: usize = 3;

/// Nodal basis on the reference triangle (0,0), (1,0), (0,1).
#[derive(Debug, Clone)]
struct ReferenceElement {
    degree: usize,
    exponents: Vec<(u32, u32)>,
    /// Column i holds the monomial coefficients of shape function i.
    coefficients: DMatrix<f64>,
}

/// Local node order: vertices, then the nodes of edge i (vertex i to i + 1)
/// in that direction, then the interior.
fn reference_nodes(m: usize) -> Vec<Point> {
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut nodes = corners.to_vec();
    let s = m as f64;
    for i in 0..3 {
        let (a, b) = (corners[i], corners[(i + 1) % 3]);
        for j in 1..m {
            let t = j as f64 / s;
            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    for j in 1..m {
        for i in 1..m - j {
            nodes.push([i as f64 / s, j as f64 / s]);
        }
    }
    nodes
}

impl ReferenceElement {
    fn new(degree: usize) -> Self {
        let exponents = monomial_exponents(degree);
        let nodes = reference_nodes(degree);
        let n = exponents.len();
        let v = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = exponents[j];
            Powers::new(nodes[i], degree).monomial(a, b)
        });
        let coefficients = v.try_inverse().expect("equispaced nodes are unisolvent");
        ReferenceElement {
            degree,
            exponents,
            coefficients,
        }
    }

    fn dim(&self) -> usize {
        self.exponents.len()
    }

    fn eval(&self, xi: Point, values: &mut [f64], grads: &mut [[f64; 2]]) {
        let p = Powers::new(xi, self.degree);
        values.iter_mut().for_each(|v| *v = 0.0);
        grads.iter_mut().for_each(|g| *g = [0.0; 2]);
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            let m = p.monomial(a, b);
            let g = p.grad_monomial(a, b);
            for i in 0..self.dim() {
                let c = self.coefficients[(j, i)];
                values[i] += c * m;
                grads[i][0] += c * g[0];
                grads[i][1] += c * g[1];
            }
        }
    }
}

/// x = origin + J xi.
#[derive(Debug, Clone, Copy)]
struct AffineMap {
    origin: Point,
    inverse: Matrix2<f64>,
}

impl AffineMap {
    fn new(a: Point, b: Point, c: Point) -> Self {
        let j = Matrix2::new(b[0] - a[0], c[0] - a[0], b[1] - a[1], c[1] - a[1]);
        AffineMap {
            origin: a,
            inverse: j.try_inverse().expect("mesh rejects degenerate elements"),
        }
    }

    fn to_reference(&self, x: Point) -> Point {
        let d = nalgebra::Vector2::new(x[0] - self.origin[0], x[1] - self.origin[1]);
        let xi = self.inverse * d;
        [xi[0], xi[1]]
    }

    /// J^-T g.
    fn pull_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let m = &self.inverse;
        [
            m[(0, 0)] * g[0] + m[(1, 0)] * g[1],
            m[(0, 1)] * g[0] + m[(1, 1)] * g[1],
        ]
    }
}

#[derive(Debug, Clone)]
pub struct LagrangeSpace {
    reference: ReferenceElement,
    maps: Vec<AffineMap>,
    element_dofs: Vec<Vec<usize>>,
    nodes: Vec<Point>,
    boundary_dofs: Vec<usize>,
}

/// Numbers vertices (in node order), then edge nodes by face id, then
/// interior nodes by element id.
pub fn build_lagrange_space(mesh: &Mesh, m_u: usize) -> Result<LagrangeSpace> {
    if !(1..=MAX_PRESSURE_DEGREE).contains(&m_u) {
        return Err(Error::InvalidArgument(format!(
            "pressure degree must be in 1..={MAX_PRESSURE_DEGREE}, got {m_u}"
        )));
    }
    if let Some((k, e)) = mesh.elements.iter().enumerate().find(|(_, e)| e.len() != 3) {
        return Err(Error::NotSimplicial(k, e.len()));
    }
    let mut vertex_dof = vec![usize::MAX; mesh.nodes.len()];
    for e in &mesh.elements {
        for &v in e {
            vertex_dof[v] = 0;
        }
    }
    let mut nodes = Vec::new();
    for (v, d) in vertex_dof.iter_mut().enumerate() {
        if *d == 0 {
            *d = nodes.len();
            nodes.push(mesh.nodes[v]);
        }
    }
    let per_edge = m_u - 1;
    let edge_base = nodes.len();
    for face in &mesh.faces {
        let (a, b) = (mesh.nodes[face.vertices[0]], mesh.nodes[face.vertices[1]]);
        for j in 1..m_u {
            let t = j as f64 / m_u as f64;
            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    let reference = ReferenceElement::new(m_u);
    let ref_nodes = reference_nodes(m_u);
    let per_interior = reference.dim() - 3 - 3 * per_edge;
    let mut element_dofs = Vec::with_capacity(mesh.num_elements());
    let mut maps = Vec::with_capacity(mesh.num_elements());
    for (k, e) in mesh.elements.iter().enumerate() {
        let x: Vec<Point> = e.iter().map(|&v| mesh.nodes[v]).collect();
        let map = AffineMap::new(x[0], x[1], x[2]);
        let mut dofs: Vec<usize> = e.iter().map(|&v| vertex_dof[v]).collect();
        for i in 0..3 {
            let f = mesh.element_faces[k][i];
            let base = edge_base + f * per_edge;
            let forward = mesh.faces[f].vertices[0] == e[i];
            for j in 0..per_edge {
                dofs.push(if forward {
                    base + j
                } else {
                    base + per_edge - 1 - j
                });
            }
        }
        for j in 0..per_interior {
            let xi = ref_nodes[3 + 3 * per_edge + j];
            dofs.push(nodes.len());
            nodes.push([
                x[0][0] + xi[0] * (x[1][0] - x[0][0]) + xi[1] * (x[2][0] - x[0][0]),
                x[0][1] + xi[0] * (x[1][1] - x[0][1]) + xi[1] * (x[2][1] - x[0][1]),
            ]);
        }
        element_dofs.push(dofs);
        maps.push(map);
    }
    let mut boundary_dofs: Vec<usize> = mesh
        .boundary_faces()
        .flat_map(|(f, face)| {
            let ends = face.vertices.map(|v| vertex_dof[v]);
            ends.into_iter()
                .chain(edge_base + f * per_edge..edge_base + (f + 1) * per_edge)
        })
        .collect();
    boundary_dofs.sort_unstable();
    boundary_dofs.dedup();
    Ok(LagrangeSpace {
        reference,
        maps,
        element_dofs,
        nodes,
        boundary_dofs,
    })
}

impl LagrangeSpace {
    pub fn degree(&self) -> usize {
        self.reference.degree
    }

    pub fn num_dofs(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.element_dofs.len()
    }

    /// Global DOFs of element `k` in local node order.
    pub fn element_dofs(&self, k: usize) -> &[usize] {
        &self.element_dofs[k]
    }

    /// Coordinates of the nodal point of each global DOF.
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn local_dim(&self) -> usize {
        self.reference.dim()
    }

    /// Shape function values and gradients of element `k` at `x`.
    pub fn eval_basis(&self, k: usize, x: Point, values: &mut [f64], grads: &mut [[f64; 2]]) {
        let map = &self.maps[k];
        self.reference.eval(map.to_reference(x), values, grads);
        for g in grads.iter_mut() {
            *g = map.pull_gradient(*g);
        }
    }

    pub fn interpolate(&self, u: impl Fn(Point) -> f64) -> LagrangeField {
        LagrangeField {
            space: self.clone(),
            coefficients: self.nodes.iter().map(|&x| u(x)).collect(),
        }
    }

    pub fn field(&self, coefficients: Vec<f64>) -> LagrangeField {
        assert_eq!(coefficients.len(), self.num_dofs());
        LagrangeField {
            space: self.clone(),
            coefficients,
        }
    }
}

/// A finite element function of a `LagrangeSpace`.
#[derive(Debug, Clone)]
pub struct LagrangeField {
    space: LagrangeSpace,
    pub coefficients: Vec<f64>,
}

impl LagrangeField {
    pub fn space(&self) -> &LagrangeSpace {
        &self.space
    }
}

impl ScalarField for LagrangeField {
    fn value(&self, element: usize, x: Point) -> f64 {
        let n = self.space.local_dim();
        let (mut v, mut g) = (vec![0.0; n], vec![[0.0; 2]; n]);
        self.space.eval_basis(element, x, &mut v, &mut g);
        self.space.element_dofs[element]
            .iter()
            .zip(&v)
            .map(|(&d, v)| self.coefficients[d] * v)
            .sum()
    }

    fn gradient(&self, element: usize, x: Point) -> [f64; 2] {
        let n = self.space.local_dim();
        let (mut v, mut g) = (vec![0.0; n], vec![[0.0; 2]; n]);
        self.space.eval_basis(element, x, &mut v, &mut g);
        let mut out = [0.0; 2];
        for (&d, g) in self.space.element_dofs[element].iter().zip(&g) {
            out[0] += self.coefficients[d] * g[0];
            out[1] += self.coefficients[d] * g[1];
        }
        out
    }
}

pub struct PressureProblem<'a> {
    pub mesh: &'a Mesh,
    pub space: &'a LagrangeSpace,
    /// The computed flux, a polynomial of degree `flux_degree` per element.
    pub flux: &'a (dyn VectorField + 'a),
    pub flux_degree: usize,
    /// Dirichlet data u = g.
    pub boundary: ScalarData<'a>,
    pub penalty: PenaltyMode,
}

impl PressureProblem<'_> {
    pub fn volume_degree(&self) -> usize {
        let m_u = self.space.degree();
        ((m_u - 1) + self.flux_degree + 2).max(2 * (m_u - 1))
    }

    pub fn face_degree(&self) -> usize {
        2 * self.space.degree() + 2
    }
}

pub fn assemble_pressure_system(
    problem: &PressureProblem,
) -> Result<(SparseSymmetricMatrix, Vec<f64>)> {
    let mesh = problem.mesh;
    let space = problem.space;
    let boundary: Vec<usize> = mesh.boundary_faces().map(|(f, _)| f).collect();
    let ne = mesh.num_elements();
    let cliques: Vec<Vec<usize>> = (0..ne)
        .map(|k| space.element_dofs[k].clone())
        .chain(
            boundary
                .iter()
                .map(|&f| space.element_dofs[mesh.faces[f].owner].clone()),
        )
        .collect();
    let vol_ref = triangle_quadrature(problem.volume_degree().min(MAX_TRIANGLE_DEGREE))?;
    let edge_ref = edge_quadrature(problem.face_degree());
    let n = space.local_dim();
    assemble_blocks(space.num_dofs(), 1, &cliques, |i| {
        let mut local = DMatrix::zeros(n, n);
        let mut rhs = vec![0.0; n];
        let (mut v, mut g) = (vec![0.0; n], vec![[0.0; 2]; n]);
        if i < ne {
            let x = mesh.vertices(i);
            for (pt, w) in map_to_triangle(&vol_ref, x[0], x[1], x[2]).iter() {
                space.eval_basis(i, pt, &mut v, &mut g);
                let p = problem.flux.value(i, pt);
                for a in 0..n {
                    rhs[a] += w * (g[a][0] * p[0] + g[a][1] * p[1]);
                    for b in 0..n {
                        local[(a, b)] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    }
                }
            }
        } else {
            let f = boundary[i - ne];
            let k = mesh.faces[f].owner;
            let (a0, b0) = mesh.face_endpoints(f);
            let weight = problem.penalty.weight(mesh, f);
            for (pt, w) in map_to_segment(&edge_ref, a0, b0).iter() {
                space.eval_basis(k, pt, &mut v, &mut g);
                let s = w * weight;
                let gv = (problem.boundary)(pt);
                for a in 0..n {
                    rhs[a] += s * v[a] * gv;
                    for b in 0..n {
                        local[(a, b)] += s * v[a] * v[b];
                    }
                }
            }
        }
        (local, rhs)
    })
}

#[derive(Debug, Clone)]
pub struct PressureSolution {
    pub field: LagrangeField,
    /// The pressure functional at the solution.
    pub functional: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl PressureSolution {
    pub fn num_dofs(&self) -> usize {
        self.field.coefficients.len()
    }
}

pub fn solve_pressure(problem: &PressureProblem, options: CgOptions) -> Result<PressureSolution> {
    let (a, b) = assemble_pressure_system(problem)?;
    let out = cg_solve(&a, &b, options)?;
    log::info!(
        "pressure: {} dofs, {} iterations, residual {:.2e}",
        a.dim(),
        out.iterations,
        out.residual
    );
    let field = problem.space.field(out.x);
    let functional = pressure_functional_value(problem, &field);
    Ok(PressureSolution {
        field,
        functional,
        iterations: out.iterations,
        residual: out.residual,
    })
}

/// sum_K ||grad v - p_h||^2 + sum_e 1/h ||v - g||^2 by quadrature.
pub fn pressure_functional_value(
    problem: &PressureProblem,
    v: &(impl ScalarField + ?Sized),
) -> f64 {
    let mesh = problem.mesh;
    let degree = (2 * problem.space.degree().max(problem.flux_degree) + 2).min(MAX_TRIANGLE_DEGREE);
    let vol_ref = triangle_quadrature(degree).expect("degree within table");
    let parts: Vec<f64> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let x = mesh.vertices(k);
            map_to_triangle(&vol_ref, x[0], x[1], x[2]).integrate(|pt| {
                let (g, p) = (v.gradient(k, pt), problem.flux.value(k, pt));
                (g[0] - p[0]).powi(2) + (g[1] - p[1]).powi(2)
            })
        })
        .collect();
    let edge_ref = edge_quadrature(degree);
    let boundary: f64 = mesh
        .boundary_faces()
        .map(|(f, face)| {
            let (a, b) = mesh.face_endpoints(f);
            problem.penalty.weight(mesh, f)
                * map_to_segment(&edge_ref, a, b)
                    .integrate(|pt| (v.value(face.owner, pt) - (problem.boundary)(pt)).powi(2))
        })
        .sum();
    parts.iter().sum::<f64>() + boundary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{GlobalVectorField, ZeroVectorField};
    use crate::mesh::{build_structured_triangle_mesh, Domain};
    use crate::norms::{pressure_energy_squared, ErrorQuadrature};
    use crate::problems::example1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(n: usize) -> Mesh {
        build_structured_triangle_mesh(n, Domain::UnitSquare).unwrap()
    }

    #[test]
    fn dof_counts() {
        assert_eq!(build_lagrange_space(&square(1), 1).unwrap().num_dofs(), 4);
        assert_eq!(build_lagrange_space(&square(1), 2).unwrap().num_dofs(), 9);
        for n in [2, 5, 8] {
            let mesh = square(n);
            assert_eq!(
                build_lagrange_space(&mesh, 1).unwrap().num_dofs(),
                (n + 1) * (n + 1)
            );
            assert_eq!(
                build_lagrange_space(&mesh, 2).unwrap().num_dofs(),
                (2 * n + 1) * (2 * n + 1)
            );
            assert_eq!(
                build_lagrange_space(&mesh, 3).unwrap().num_dofs(),
                (3 * n + 1) * (3 * n + 1)
            );
        }
        let space = build_lagrange_space(&square(3), 3).unwrap();
        assert_eq!(space.boundary_dofs().len(), 4 * 9);
    }

    #[test]
    fn rejects_polygons_and_bad_degree() {
        let quad = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        assert!(matches!(
            build_lagrange_space(&quad, 1),
            Err(Error::NotSimplicial(0, 4))
        ));
        assert!(build_lagrange_space(&square(1), 0).is_err());
        assert!(build_lagrange_space(&square(1), 4).is_err());
    }

    #[test]
    fn shape_functions_are_nodal() {
        let mesh = square(2).permuted(&[3, 1, 4, 0, 7, 2, 6, 5]).unwrap();
        for m in 1..=3 {
            let space = build_lagrange_space(&mesh, m).unwrap();
            let n = space.local_dim();
            let (mut v, mut g) = (vec![0.0; n], vec![[0.0; 2]; n]);
            for k in 0..mesh.num_elements() {
                for (i, &d) in space.element_dofs(k).iter().enumerate() {
                    space.eval_basis(k, space.nodes()[d], &mut v, &mut g);
                    for (j, vj) in v.iter().enumerate() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((vj - want).abs() < 1e-12, "m={m} k={k} i={i} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn random_fields_are_continuous() {
        let mesh = square(4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=3 {
            let space = build_lagrange_space(&mesh, m).unwrap();
            let u = space.field(
                (0..space.num_dofs())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
            );
            for (f, face) in mesh.interior_faces() {
                let (a, b) = mesh.face_endpoints(f);
                for _ in 0..5 {
                    let t: f64 = rng.random();
                    let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let jump = u.value(face.owner, x) - u.value(face.neighbor.unwrap(), x);
                    assert!(jump.abs() < 1e-10, "m={m} face {f}: {jump}");
                }
            }
        }
    }

    fn flux_field() -> GlobalVectorField<fn(Point) -> [f64; 2], fn(Point) -> f64> {
        GlobalVectorField {
            value: |x| [x[1] * x[1] - x[0], 1.0 + x[0] * x[1]],
            divergence: |x| -1.0 + x[0],
        }
    }

    #[test]
    fn assembly_matches_form_oracle() {
        let mesh = square(2);
        let q = flux_field();
        let g = |x: Point| x[0] - 2.0 * x[1] * x[1];
        let quad = ErrorQuadrature::new(6, None);
        for m in 1..=3 {
            let space = build_lagrange_space(&mesh, m).unwrap();
            let problem = PressureProblem {
                mesh: &mesh,
                space: &space,
                flux: &q,
                flux_degree: 2,
                boundary: &g,
                penalty: PenaltyMode::GlobalH,
            };
            let (a, b) = assemble_pressure_system(&problem).unwrap();
            let n = space.num_dofs();
            let unit = |i: usize| {
                let mut c = vec![0.0; n];
                c[i] = 1.0;
                space.field(c)
            };
            let h = 1.0 / mesh.h_max;
            for i in 0..n {
                let phi = unit(i);
                // l(phi) = int grad phi . q + 1/h int_boundary phi g
                let mut l = 0.0;
                for k in 0..mesh.num_elements() {
                    l += quad.element_rule(&mesh, k).integrate(|x| {
                        let (gp, qv) = (phi.gradient(k, x), q.value(k, x));
                        gp[0] * qv[0] + gp[1] * qv[1]
                    });
                }
                for (f, face) in mesh.boundary_faces() {
                    l += h * quad
                        .face_rule(&mesh, f)
                        .integrate(|x| phi.value(face.owner, x) * g(x));
                }
                assert!((l - b[i]).abs() < 1e-12, "m={m} rhs {i}");
                for j in 0..n {
                    let psi = unit(j);
                    let mut v = 0.0;
                    for k in 0..mesh.num_elements() {
                        v += quad.element_rule(&mesh, k).integrate(|x| {
                            let (p, s) = (phi.gradient(k, x), psi.gradient(k, x));
                            p[0] * s[0] + p[1] * s[1]
                        });
                    }
                    for (f, face) in mesh.boundary_faces() {
                        v += h * quad
                            .face_rule(&mesh, f)
                            .integrate(|x| phi.value(face.owner, x) * psi.value(face.owner, x));
                    }
                    assert!((v - a.get(i, j)).abs() < 1e-12, "m={m} a[{i},{j}]");
                }
            }
        }
    }

    #[test]
    fn quadratic_form_is_energy_norm() {
        let mesh = square(5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let quad = ErrorQuadrature::new(3, None);
        for m in 1..=3 {
            let space = build_lagrange_space(&mesh, m).unwrap();
            let problem = PressureProblem {
                mesh: &mesh,
                space: &space,
                flux: &ZeroVectorField,
                flux_degree: 1,
                boundary: &|_| 0.0,
                penalty: PenaltyMode::GlobalH,
            };
            let (a, b) = assemble_pressure_system(&problem).unwrap();
            assert!(b.iter().all(|v| *v == 0.0));
            for _ in 0..3 {
                let c: Vec<f64> = (0..space.num_dofs())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                let e = pressure_energy_squared(
                    &mesh,
                    &space.field(c.clone()),
                    PenaltyMode::GlobalH,
                    &quad,
                );
                let qf = a.quadratic_form(&c);
                assert!((qf - e).abs() < 1e-10 * e, "{qf} vs {e}");
            }
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let mesh = square(3);
        let space = build_lagrange_space(&mesh, 2).unwrap();
        let problem = PressureProblem {
            mesh: &mesh,
            space: &space,
            flux: &ZeroVectorField,
            flux_degree: 1,
            boundary: &|_| 0.0,
            penalty: PenaltyMode::GlobalH,
        };
        let sol = solve_pressure(&problem, CgOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.field.coefficients.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_pressure_reproduced() {
        let mesh = square(4)
            .permuted(&(0..32).rev().collect::<Vec<_>>())
            .unwrap();
        let exact = GlobalVectorField {
            value: |_| [1.0, 2.0],
            divergence: |_| 0.0,
        };
        let u = |x: Point| x[0] + 2.0 * x[1];
        for m in 1..=3 {
            let space = build_lagrange_space(&mesh, m).unwrap();
            let problem = PressureProblem {
                mesh: &mesh,
                space: &space,
                flux: &exact,
                flux_degree: 0,
                boundary: &u,
                penalty: PenaltyMode::GlobalH,
            };
            let sol = solve_pressure(&problem, CgOptions::default()).unwrap();
            for (c, x) in sol.field.coefficients.iter().zip(space.nodes()) {
                assert!((c - u(*x)).abs() < 1e-8, "m={m}");
            }
            assert!(sol.functional < 1e-14);
        }
    }

    #[test]
    fn solution_minimizes_over_the_interpolant() {
        let p = example1();
        let mesh = square(6);
        let flux = p.exact_flux();
        for m in 1..=2 {
            let space = build_lagrange_space(&mesh, m).unwrap();
            let problem = PressureProblem {
                mesh: &mesh,
                space: &space,
                flux: &flux,
                flux_degree: 6,
                boundary: &p.u,
                penalty: PenaltyMode::GlobalH,
            };
            let sol = solve_pressure(&problem, CgOptions::default()).unwrap();
            let interp = space.interpolate(p.u);
            assert!(sol.functional <= pressure_functional_value(&problem, &interp) * (1.0 + 1e-6));
        }
    }
}
