//! Coupled discontinuous least-squares baseline.
//!
//! Both u and p are sought in broken P_m spaces and the functional
//!
//! ||div p + f||^2 + ||grad u - p||^2 + sum_e 1/h (||[u]||^2 + ||[p (x) n]||^2)
//!     + sum_{e on boundary} 1/h ||u - g||^2
//!
//! is minimized in one solve.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::flux::ScalarData;
use crate::linalg::{assemble_blocks, cg_solve, CgOptions, Preconditioner, SparseSymmetricMatrix};
use crate::mesh::Mesh;
use crate::penalty::PenaltyMode;
use crate::poly::{monomial_exponents, LocalFrame, Powers};
use crate::quadrature::{
    edge_quadrature, map_to_segment, polygon_quadrature, triangle_quadrature, Point, QuadratureRule,
};

/// Broken P_m space; per element the scalar block comes first, then the two
/// flux components.
#[derive(Debug, Clone)]
pub struct DiscontinuousSpace {
    degree: usize,
    exponents: Vec<(u32, u32)>,
    frames: Vec<LocalFrame>,
}

impl DiscontinuousSpace {
    pub fn new(mesh: &Mesh, degree: usize) -> Self {
        let frames = (0..mesh.num_elements())
            .map(|k| LocalFrame {
                center: mesh.barycenters[k],
                scale: mesh.diameters[k],
            })
            .collect();
        DiscontinuousSpace {
            degree,
            exponents: monomial_exponents(degree),
            frames,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_elements(&self) -> usize {
        self.frames.len()
    }

    /// dim P_m.
    pub fn scalar_dim(&self) -> usize {
        self.exponents.len()
    }

    /// Unknowns per element, scalar plus vector.
    pub fn block(&self) -> usize {
        3 * self.scalar_dim()
    }

    pub fn num_dofs(&self) -> usize {
        self.num_elements() * self.block()
    }

    /// Monomial values and physical gradients on element `k`.
    pub fn eval(&self, k: usize, x: Point, values: &mut [f64], grads: &mut [[f64; 2]]) {
        let frame = &self.frames[k];
        let p = Powers::new(frame.to_local(x), self.degree);
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            values[j] = p.monomial(a, b);
            let g = p.grad_monomial(a, b);
            grads[j] = [g[0] / frame.scale, g[1] / frame.scale];
        }
    }
}

/// Pointwise quantities of one unknown: u, grad u, p, div p.
#[derive(Debug, Clone, Copy, Default)]
struct Trace {
    u: f64,
    grad_u: [f64; 2],
    p: [f64; 2],
    div_p: f64,
}

fn traces(
    space: &DiscontinuousSpace,
    k: usize,
    x: Point,
    values: &mut [f64],
    grads: &mut [[f64; 2]],
    out: &mut [Trace],
) {
    space.eval(k, x, values, grads);
    let n = space.scalar_dim();
    for j in 0..n {
        out[j] = Trace {
            u: values[j],
            grad_u: grads[j],
            ..Trace::default()
        };
        out[n + j] = Trace {
            p: [values[j], 0.0],
            div_p: grads[j][0],
            ..Trace::default()
        };
        out[2 * n + j] = Trace {
            p: [0.0, values[j]],
            div_p: grads[j][1],
            ..Trace::default()
        };
    }
}

pub struct DlsProblem<'a> {
    pub mesh: &'a Mesh,
    pub space: &'a DiscontinuousSpace,
    pub source: ScalarData<'a>,
    /// Dirichlet data u = g.
    pub boundary: ScalarData<'a>,
    pub penalty: PenaltyMode,
}

impl DlsProblem<'_> {
    pub fn volume_degree(&self) -> usize {
        2 * self.space.degree() + 4
    }

    pub fn face_degree(&self) -> usize {
        2 * self.space.degree() + 2
    }
}

enum Item {
    Volume(usize),
    Face(usize),
}

fn volume_rule(mesh: &Mesh, k: usize, reference: &QuadratureRule, degree: usize) -> QuadratureRule {
    let v = mesh.vertices(k);
    if v.len() == 3 {
        crate::quadrature::map_to_triangle(reference, v[0], v[1], v[2])
    } else {
        polygon_quadrature(&v, degree).expect("degree checked at assembly start")
    }
}

pub fn assemble_dls_system(problem: &DlsProblem) -> Result<(SparseSymmetricMatrix, Vec<f64>)> {
    let mesh = problem.mesh;
    let space = problem.space;
    let items: Vec<Item> = (0..mesh.num_elements())
        .map(Item::Volume)
        .chain((0..mesh.faces.len()).map(Item::Face))
        .collect();
    let cliques: Vec<Vec<usize>> = items
        .iter()
        .map(|it| match *it {
            Item::Volume(k) => vec![k],
            Item::Face(f) => mesh.faces[f].incident_elements().collect(),
        })
        .collect();
    let vol_ref = triangle_quadrature(problem.volume_degree())?;
    let edge_ref = edge_quadrature(problem.face_degree());
    let nb = space.block();
    let ns = space.scalar_dim();
    assemble_blocks(mesh.num_elements(), nb, &cliques, |i| {
        let (mut values, mut grads) = (vec![0.0; ns], vec![[0.0; 2]; ns]);
        match items[i] {
            Item::Volume(k) => {
                let mut t = vec![Trace::default(); nb];
                let mut local = DMatrix::zeros(nb, nb);
                let mut rhs = vec![0.0; nb];
                for (x, w) in volume_rule(mesh, k, &vol_ref, problem.volume_degree()).iter() {
                    traces(space, k, x, &mut values, &mut grads, &mut t);
                    let f = (problem.source)(x);
                    let r: Vec<[f64; 3]> = t
                        .iter()
                        .map(|t| [t.div_p, t.grad_u[0] - t.p[0], t.grad_u[1] - t.p[1]])
                        .collect();
                    for a in 0..nb {
                        rhs[a] -= w * f * r[a][0];
                        for b in 0..nb {
                            local[(a, b)] +=
                                w * (r[a][0] * r[b][0] + r[a][1] * r[b][1] + r[a][2] * r[b][2]);
                        }
                    }
                }
                (local, rhs)
            }
            Item::Face(f) => {
                let face = &mesh.faces[f];
                let weight = problem.penalty.weight(mesh, f);
                let (a0, b0) = mesh.face_endpoints(f);
                let rule = map_to_segment(&edge_ref, a0, b0);
                match face.neighbor {
                    None => {
                        let mut t = vec![Trace::default(); nb];
                        let mut local = DMatrix::zeros(nb, nb);
                        let mut rhs = vec![0.0; nb];
                        for (x, w) in rule.iter() {
                            traces(space, face.owner, x, &mut values, &mut grads, &mut t);
                            let s = w * weight;
                            let g = (problem.boundary)(x);
                            for a in 0..ns {
                                rhs[a] += s * g * t[a].u;
                                for b in 0..ns {
                                    local[(a, b)] += s * t[a].u * t[b].u;
                                }
                            }
                        }
                        (local, rhs)
                    }
                    Some(nbr) => {
                        let mut tp = vec![Trace::default(); nb];
                        let mut tm = vec![Trace::default(); nb];
                        let mut local = DMatrix::zeros(2 * nb, 2 * nb);
                        let mut jump = vec![[0.0; 3]; 2 * nb];
                        for (x, w) in rule.iter() {
                            traces(space, face.owner, x, &mut values, &mut grads, &mut tp);
                            traces(space, nbr, x, &mut values, &mut grads, &mut tm);
                            for a in 0..nb {
                                jump[a] = [tp[a].u, tp[a].p[0], tp[a].p[1]];
                                jump[nb + a] = [-tm[a].u, -tm[a].p[0], -tm[a].p[1]];
                            }
                            let s = w * weight;
                            for a in 0..2 * nb {
                                for b in 0..2 * nb {
                                    local[(a, b)] += s
                                        * (jump[a][0] * jump[b][0]
                                            + jump[a][1] * jump[b][1]
                                            + jump[a][2] * jump[b][2]);
                                }
                            }
                        }
                        (local, vec![0.0; 2 * nb])
                    }
                }
            }
        }
    })
}

#[derive(Debug, Clone)]
pub struct DlsSolution {
    pub space: DiscontinuousSpace,
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl DlsSolution {
    pub fn num_dofs(&self) -> usize {
        self.coefficients.len()
    }

    pub fn pressure(&self) -> DlsPressure<'_> {
        DlsPressure(self)
    }

    pub fn flux(&self) -> DlsFlux<'_> {
        DlsFlux(self)
    }

    fn element(&self, k: usize) -> &[f64] {
        let nb = self.space.block();
        &self.coefficients[k * nb..(k + 1) * nb]
    }
}

/// The scalar component u_h.
pub struct DlsPressure<'a>(&'a DlsSolution);

/// The vector component p_h.
pub struct DlsFlux<'a>(&'a DlsSolution);

fn evaluate(sol: &DlsSolution, k: usize, x: Point) -> Trace {
    let space = &sol.space;
    let ns = space.scalar_dim();
    let (mut values, mut grads) = (vec![0.0; ns], vec![[0.0; 2]; ns]);
    let mut t = vec![Trace::default(); space.block()];
    traces(space, k, x, &mut values, &mut grads, &mut t);
    let mut out = Trace::default();
    for (c, t) in sol.element(k).iter().zip(&t) {
        out.u += c * t.u;
        out.grad_u[0] += c * t.grad_u[0];
        out.grad_u[1] += c * t.grad_u[1];
        out.p[0] += c * t.p[0];
        out.p[1] += c * t.p[1];
        out.div_p += c * t.div_p;
    }
    out
}

impl ScalarField for DlsPressure<'_> {
    fn value(&self, element: usize, x: Point) -> f64 {
        evaluate(self.0, element, x).u
    }

    fn gradient(&self, element: usize, x: Point) -> [f64; 2] {
        evaluate(self.0, element, x).grad_u
    }
}

impl VectorField for DlsFlux<'_> {
    fn value(&self, element: usize, x: Point) -> [f64; 2] {
        evaluate(self.0, element, x).p
    }

    fn divergence(&self, element: usize, x: Point) -> f64 {
        evaluate(self.0, element, x).div_p
    }
}

/// Solves with CG; unless told otherwise the element blocks precondition.
pub fn solve_dls(problem: &DlsProblem, options: CgOptions) -> Result<DlsSolution> {
    let (a, b) = assemble_dls_system(problem)?;
    let options = match options.preconditioner {
        Preconditioner::Jacobi => CgOptions {
            preconditioner: Preconditioner::BlockJacobi(problem.space.block()),
            ..options
        },
        Preconditioner::BlockJacobi(_) => options,
    };
    let out = cg_solve(&a, &b, options)?;
    log::info!(
        "dls: {} dofs, {} nonzeros, {} iterations, residual {:.2e}",
        a.dim(),
        a.nnz(),
        out.iterations,
        out.residual
    );
    Ok(DlsSolution {
        space: problem.space.clone(),
        coefficients: out.x,
        iterations: out.iterations,
        residual: out.residual,
    })
}

/// The least-squares functional of a candidate pair by quadrature.
pub fn dls_functional_value(
    problem: &DlsProblem,
    u: &(impl ScalarField + ?Sized),
    q: &(impl VectorField + ?Sized),
) -> f64 {
    let mesh = problem.mesh;
    let deg = problem.volume_degree();
    let volume: f64 = (0..mesh.num_elements())
        .map(|k| {
            let rule = polygon_quadrature(&mesh.vertices(k), deg).expect("supported degree");
            rule.integrate(|x| {
                let (g, p) = (u.gradient(k, x), q.value(k, x));
                (q.divergence(k, x) + (problem.source)(x)).powi(2)
                    + (g[0] - p[0]).powi(2)
                    + (g[1] - p[1]).powi(2)
            })
        })
        .sum();
    let edge_ref = edge_quadrature(problem.face_degree());
    let faces: f64 = mesh
        .faces
        .iter()
        .enumerate()
        .map(|(f, face)| {
            let (a, b) = mesh.face_endpoints(f);
            let rule = map_to_segment(&edge_ref, a, b);
            let k = face.owner;
            problem.penalty.weight(mesh, f)
                * match face.neighbor {
                    None => rule.integrate(|x| (u.value(k, x) - (problem.boundary)(x)).powi(2)),
                    Some(nb) => rule.integrate(|x| {
                        let (p1, p2) = (q.value(k, x), q.value(nb, x));
                        (u.value(k, x) - u.value(nb, x)).powi(2)
                            + (p1[0] - p2[0]).powi(2)
                            + (p1[1] - p2[1]).powi(2)
                    }),
                }
        })
        .sum();
    volume + faces
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;
    use crate::mesh::{build_structured_triangle_mesh, Domain};
    use crate::norms::ErrorQuadrature;

    fn four_triangles() -> Mesh {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.4, 0.6]];
        Mesh::new(
            nodes,
            vec![vec![0, 1, 4], vec![1, 2, 4], vec![2, 3, 4], vec![3, 0, 4]],
        )
        .unwrap()
    }

    fn unit(space: &DiscontinuousSpace, i: usize) -> DlsSolution {
        let mut c = vec![0.0; space.num_dofs()];
        c[i] = 1.0;
        DlsSolution {
            space: space.clone(),
            coefficients: c,
            iterations: 0,
            residual: 0.0,
        }
    }

    #[test]
    fn dof_count() {
        let mesh = build_structured_triangle_mesh(10, Domain::UnitSquare).unwrap();
        assert_eq!(mesh.num_elements(), 200);
        assert_eq!(DiscontinuousSpace::new(&mesh, 2).num_dofs(), 3600);
        assert_eq!(DiscontinuousSpace::new(&mesh, 1).num_dofs(), 200 * 9);
    }

    #[test]
    fn assembly_matches_form_oracle() {
        let mesh = four_triangles();
        let f = |x: Point| 1.0 + x[0] * x[1];
        let g = |x: Point| x[0] - x[1] * x[1];
        let quad = ErrorQuadrature::new(4, None);
        for m in 1..=2 {
            let space = DiscontinuousSpace::new(&mesh, m);
            let problem = DlsProblem {
                mesh: &mesh,
                space: &space,
                source: &f,
                boundary: &g,
                penalty: PenaltyMode::GlobalH,
            };
            let (a, b) = assemble_dls_system(&problem).unwrap();
            let w = 1.0 / mesh.h_max;
            let n = space.num_dofs();
            let basis: Vec<DlsSolution> = (0..n).map(|i| unit(&space, i)).collect();
            for i in 0..n {
                let (ui, pi) = (basis[i].pressure(), basis[i].flux());
                let mut l = 0.0;
                for k in 0..mesh.num_elements() {
                    l -= quad
                        .element_rule(&mesh, k)
                        .integrate(|x| f(x) * pi.divergence(k, x));
                }
                for (e, face) in mesh.boundary_faces() {
                    l += w * quad
                        .face_rule(&mesh, e)
                        .integrate(|x| g(x) * ui.value(face.owner, x));
                }
                assert!((l - b[i]).abs() < 1e-12, "m={m} rhs {i}: {l} vs {}", b[i]);
                for j in 0..n {
                    let (uj, pj) = (basis[j].pressure(), basis[j].flux());
                    let mut v = 0.0;
                    for k in 0..mesh.num_elements() {
                        v += quad.element_rule(&mesh, k).integrate(|x| {
                            let (gi, gj) = (ui.gradient(k, x), uj.gradient(k, x));
                            let (qi, qj) = (pi.value(k, x), pj.value(k, x));
                            pi.divergence(k, x) * pj.divergence(k, x)
                                + (gi[0] - qi[0]) * (gj[0] - qj[0])
                                + (gi[1] - qi[1]) * (gj[1] - qj[1])
                        });
                    }
                    for (e, face) in mesh.faces.iter().enumerate() {
                        let rule = quad.face_rule(&mesh, e);
                        v += w * match face.neighbor {
                            None => rule
                                .integrate(|x| ui.value(face.owner, x) * uj.value(face.owner, x)),
                            Some(nb) => rule.integrate(|x| {
                                let k = face.owner;
                                let ju = (ui.value(k, x) - ui.value(nb, x))
                                    * (uj.value(k, x) - uj.value(nb, x));
                                let (a1, a2) = (pi.value(k, x), pi.value(nb, x));
                                let (b1, b2) = (pj.value(k, x), pj.value(nb, x));
                                ju + (a1[0] - a2[0]) * (b1[0] - b2[0])
                                    + (a1[1] - a2[1]) * (b1[1] - b2[1])
                            }),
                        };
                    }
                    assert!(
                        (v - a.get(i, j)).abs() < 1e-12,
                        "m={m} a[{i},{j}]: {v} vs {}",
                        a.get(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn coercive_on_small_meshes() {
        for mesh in [
            four_triangles(),
            build_structured_triangle_mesh(3, Domain::UnitSquare).unwrap(),
        ] {
            for m in 1..=3 {
                let space = DiscontinuousSpace::new(&mesh, m);
                let problem = DlsProblem {
                    mesh: &mesh,
                    space: &space,
                    source: &|_| 0.0,
                    boundary: &|_| 0.0,
                    penalty: PenaltyMode::GlobalH,
                };
                let (a, b) = assemble_dls_system(&problem).unwrap();
                assert!(b.iter().all(|v| *v == 0.0));
                let eig = symmetric_eigenvalues(&a.to_dense()).unwrap();
                assert!(eig[0] > 1e-10 * eig[eig.len() - 1], "m={m}: {}", eig[0]);
            }
        }
    }

    #[test]
    fn linear_pair_reproduced() {
        let mesh = build_structured_triangle_mesh(4, Domain::UnitSquare).unwrap();
        let u = |x: Point| x[0] + x[1];
        for m in 1..=2 {
            let space = DiscontinuousSpace::new(&mesh, m);
            let problem = DlsProblem {
                mesh: &mesh,
                space: &space,
                source: &|_| 0.0,
                boundary: &u,
                penalty: PenaltyMode::GlobalH,
            };
            let sol = solve_dls(&problem, CgOptions::default()).unwrap();
            for k in 0..mesh.num_elements() {
                let x = mesh.barycenters[k];
                assert!((sol.pressure().value(k, x) - u(x)).abs() < 1e-8);
                let p = sol.flux().value(k, x);
                assert!((p[0] - 1.0).abs() < 1e-8 && (p[1] - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let mesh = four_triangles();
        let space = DiscontinuousSpace::new(&mesh, 2);
        let problem = DlsProblem {
            mesh: &mesh,
            space: &space,
            source: &|_| 0.0,
            boundary: &|_| 0.0,
            penalty: PenaltyMode::GlobalH,
        };
        let sol = solve_dls(&problem, CgOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.coefficients.iter().all(|v| *v == 0.0));
    }
}
