//! Flux solve: minimize the least-squares functional
//!
//! ```text
//! J(q) = sum_K ||div q + f||^2_K + sum_{interior e} w_e ||[q (x) n]||^2_e
//!      + sum_{boundary e} w_e ||q x n - grad g x n||^2_e
//! ```
//!
//! over the reconstructed space, with one 2-vector unknown per element.
//! In two dimensions `q x n = q1 n2 - q2 n1` and `|[q (x) n]| = |q+ - q-|`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::Result;
use crate::field::VectorField;
use crate::linalg::{assemble_blocks, cg_solve, CgOptions, SparseSymmetricMatrix};
use crate::mesh::Mesh;
use crate::penalty::PenaltyMode;
use crate::quadrature::{
    edge_quadrature, gauss_legendre, map_to_segment, polygon_quadrature, Point,
};
use crate::reconstruction::{PiecewiseIrrotationalField, ReconstructionOperator};

pub type ScalarData<'a> = &'a (dyn Fn(Point) -> f64 + Sync);
pub type VectorData<'a> = &'a (dyn Fn(Point) -> [f64; 2] + Sync);

#[derive(Clone, Copy)]
pub enum BoundaryData<'a> {
    /// u = g; without `grad_g` the tangential derivative is taken from a
    /// polynomial fit of g along each boundary face.
    Dirichlet {
        g: ScalarData<'a>,
        grad_g: Option<VectorData<'a>>,
    },
    /// grad u . n = g_n.
    Neumann { g_n: ScalarData<'a> },
}

#[derive(Clone, Copy)]
pub struct FluxProblem<'a> {
    pub mesh: &'a Mesh,
    pub reconstruction: &'a ReconstructionOperator,
    pub source: ScalarData<'a>,
    pub boundary: BoundaryData<'a>,
    pub penalty: PenaltyMode,
}

impl FluxProblem<'_> {
    pub fn degree(&self) -> usize {
        self.reconstruction.degree()
    }

    pub fn volume_degree(&self) -> usize {
        2 * self.degree() + 4
    }

    pub fn face_degree(&self) -> usize {
        2 * self.degree() + 2
    }

    /// The boundary datum matched by `q x n` (Dirichlet) or `q . n`
    /// (Neumann) at `x` on a face with outward normal `n`.
    fn boundary_target(&self, x: Point, n: Point, face_ends: (Point, Point)) -> f64 {
        match self.boundary {
            BoundaryData::Dirichlet {
                grad_g: Some(dg), ..
            } => {
                let d = dg(x);
                d[0] * n[1] - d[1] * n[0]
            }
            BoundaryData::Dirichlet { g, grad_g: None } => {
                tangential_derivative(g, face_ends, [n[1], -n[0]], self.degree() + 1, x)
            }
            BoundaryData::Neumann { g_n } => g_n(x),
        }
    }

    fn boundary_trace(&self, value: [f64; 2], n: Point) -> f64 {
        match self.boundary {
            BoundaryData::Dirichlet { .. } => value[0] * n[1] - value[1] * n[0],
            BoundaryData::Neumann { .. } => value[0] * n[0] + value[1] * n[1],
        }
    }
}

/// d g / d t at `x` from the degree-`degree` interpolant of g at Gauss
/// points of the face, where t is the unit tangent.
pub fn tangential_derivative(
    g: ScalarData<'_>,
    ends: (Point, Point),
    t: Point,
    degree: usize,
    x: Point,
) -> f64 {
    let (a, b) = ends;
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let half = 0.5 * crate::mesh::dist(a, b);
    let (nodes, _) = gauss_legendre(degree + 1);
    // nodes in s in [-1, 1] along t
    let s: Vec<f64> = nodes.iter().map(|v| 2.0 * v - 1.0).collect();
    let vals: Vec<f64> = s
        .iter()
        .map(|&si| g([mid[0] + half * si * t[0], mid[1] + half * si * t[1]]))
        .collect();
    let v = DMatrix::from_fn(s.len(), s.len(), |i, j| s[i].powi(j as i32));
    let c = v
        .lu()
        .solve(&nalgebra::DVector::from_vec(vals))
        .expect("distinct Gauss nodes");
    let sx = ((x[0] - mid[0]) * t[0] + (x[1] - mid[1]) * t[1]) / half;
    let mut d = 0.0;
    for j in 1..s.len() {
        d += j as f64 * c[j] * sx.powi(j as i32 - 1);
    }
    d / half
}

/// Values and divergences of the reconstructed basis functions of the dofs
/// in the patch of `k`, at `x`, in patch-dof order (member, component).
pub(crate) fn patch_dof_values(
    op: &ReconstructionOperator,
    k: usize,
    x: Point,
) -> (Vec<[f64; 2]>, Vec<f64>) {
    let e = op.element(k);
    let basis = op.basis();
    let nb = basis.dim();
    let mut phi = vec![[0.0; 2]; nb];
    let mut div = vec![0.0; nb];
    basis.eval_with_divergence(e.frame.to_local(x), &mut phi, &mut div);
    let nd = e.matrix.ncols();
    let mut values = vec![[0.0; 2]; nd];
    let mut divs = vec![0.0; nd];
    for a in 0..nd {
        let col = e.matrix.column(a);
        let mut v = [0.0; 2];
        let mut d = 0.0;
        for b in 0..nb {
            v[0] += col[b] * phi[b][0];
            v[1] += col[b] * phi[b][1];
            d += col[b] * div[b];
        }
        values[a] = v;
        divs[a] = d / e.frame.scale;
    }
    (values, divs)
}

enum Contribution {
    Volume(usize),
    Interior(usize),
    Boundary(usize),
}

fn contributions(mesh: &Mesh) -> Vec<Contribution> {
    let mut out: Vec<Contribution> = (0..mesh.num_elements()).map(Contribution::Volume).collect();
    for (f, face) in mesh.faces.iter().enumerate() {
        out.push(if face.is_boundary() {
            Contribution::Boundary(f)
        } else {
            Contribution::Interior(f)
        });
    }
    out
}

/// Union of two patches with the positions of each patch in the union.
fn patch_union(a: &[usize], b: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut union = a.to_vec();
    let pos_a: Vec<usize> = (0..a.len()).collect();
    let mut pos_b = Vec::with_capacity(b.len());
    for &m in b {
        match union.iter().position(|&u| u == m) {
            Some(p) => pos_b.push(p),
            None => {
                pos_b.push(union.len());
                union.push(m);
            }
        }
    }
    (union, pos_a, pos_b)
}

fn expand(pos: &[usize]) -> Vec<usize> {
    pos.iter().flat_map(|&p| [2 * p, 2 * p + 1]).collect()
}

/// Sparse matrix and right-hand side of the flux normal equations.
pub fn assemble_flux_system(problem: &FluxProblem) -> Result<(SparseSymmetricMatrix, Vec<f64>)> {
    let mesh = problem.mesh;
    let op = problem.reconstruction;
    let items = contributions(mesh);
    let cliques: Vec<Vec<usize>> = items
        .iter()
        .map(|c| match *c {
            Contribution::Volume(k) => op.element(k).patch.members.clone(),
            Contribution::Boundary(f) => op.element(mesh.faces[f].owner).patch.members.clone(),
            Contribution::Interior(f) => {
                let face = &mesh.faces[f];
                let a = &op.element(face.owner).patch.members;
                let b = &op.element(face.neighbor.expect("interior")).patch.members;
                patch_union(a, b).0
            }
        })
        .collect();
    let vol_ref = crate::quadrature::triangle_quadrature(problem.volume_degree())?;
    let edge_ref = edge_quadrature(problem.face_degree());
    assemble_blocks(mesh.num_elements(), 2, &cliques, |i| match items[i] {
        Contribution::Volume(k) => volume_block(problem, k, &vol_ref),
        Contribution::Interior(f) => interior_block(problem, f, &edge_ref),
        Contribution::Boundary(f) => boundary_block(problem, f, &edge_ref),
    })
}

fn volume_rule(
    mesh: &Mesh,
    k: usize,
    reference: &crate::quadrature::QuadratureRule,
    degree: usize,
) -> crate::quadrature::QuadratureRule {
    let verts = mesh.vertices(k);
    if verts.len() == 3 {
        crate::quadrature::map_to_triangle(reference, verts[0], verts[1], verts[2])
    } else {
        polygon_quadrature(&verts, degree).expect("degree checked at assembly start")
    }
}

fn volume_block(
    problem: &FluxProblem,
    k: usize,
    reference: &crate::quadrature::QuadratureRule,
) -> (DMatrix<f64>, Vec<f64>) {
    let op = problem.reconstruction;
    let e = op.element(k);
    let basis = op.basis();
    let nb = basis.dim();
    let rule = volume_rule(problem.mesh, k, reference, problem.volume_degree());
    // work in the n_b coefficient space, then map through M_K
    let mut gram = DMatrix::zeros(nb, nb);
    let mut load = nalgebra::DVector::zeros(nb);
    let mut phi = vec![[0.0; 2]; nb];
    let mut div = vec![0.0; nb];
    for (x, w) in rule.iter() {
        basis.eval_with_divergence(e.frame.to_local(x), &mut phi, &mut div);
        let f = (problem.source)(x);
        for a in 0..nb {
            let da = div[a] / e.frame.scale;
            load[a] -= w * f * da;
            for b in 0..=a {
                gram[(a, b)] += w * da * div[b] / e.frame.scale;
            }
        }
    }
    for a in 0..nb {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let mt = e.matrix.transpose();
    let local = &mt * &gram * &e.matrix;
    let rhs = &mt * load;
    (local, rhs.as_slice().to_vec())
}

fn interior_block(
    problem: &FluxProblem,
    f: usize,
    reference: &crate::quadrature::QuadratureRule,
) -> (DMatrix<f64>, Vec<f64>) {
    let mesh = problem.mesh;
    let op = problem.reconstruction;
    let face = &mesh.faces[f];
    let (kp, km) = (face.owner, face.neighbor.expect("interior face"));
    let (union, pos_a, pos_b) =
        patch_union(&op.element(kp).patch.members, &op.element(km).patch.members);
    let (ia, ib) = (expand(&pos_a), expand(&pos_b));
    let size = 2 * union.len();
    let (a, b) = mesh.face_endpoints(f);
    let rule = map_to_segment(reference, a, b);
    let weight = problem.penalty.weight(mesh, f);
    let mut local = DMatrix::zeros(size, size);
    let mut jump = vec![[0.0; 2]; size];
    for (x, w) in rule.iter() {
        jump.iter_mut().for_each(|j| *j = [0.0; 2]);
        let (vp, _) = patch_dof_values(op, kp, x);
        let (vm, _) = patch_dof_values(op, km, x);
        for (d, v) in ia.iter().zip(&vp) {
            jump[*d][0] += v[0];
            jump[*d][1] += v[1];
        }
        for (d, v) in ib.iter().zip(&vm) {
            jump[*d][0] -= v[0];
            jump[*d][1] -= v[1];
        }
        let s = w * weight;
        for r in 0..size {
            if jump[r] == [0.0; 2] {
                continue;
            }
            for c in 0..size {
                local[(r, c)] += s * (jump[r][0] * jump[c][0] + jump[r][1] * jump[c][1]);
            }
        }
    }
    (local, vec![0.0; size])
}

fn boundary_block(
    problem: &FluxProblem,
    f: usize,
    reference: &crate::quadrature::QuadratureRule,
) -> (DMatrix<f64>, Vec<f64>) {
    let mesh = problem.mesh;
    let op = problem.reconstruction;
    let face = &mesh.faces[f];
    let k = face.owner;
    let n = face.normal;
    let ends = mesh.face_endpoints(f);
    let rule = map_to_segment(reference, ends.0, ends.1);
    let weight = problem.penalty.weight(mesh, f);
    let size = 2 * op.element(k).patch.len();
    let mut local = DMatrix::zeros(size, size);
    let mut rhs = vec![0.0; size];
    for (x, w) in rule.iter() {
        let (v, _) = patch_dof_values(op, k, x);
        let t: Vec<f64> = v.iter().map(|v| problem.boundary_trace(*v, n)).collect();
        let target = problem.boundary_target(x, n, ends);
        let s = w * weight;
        for r in 0..size {
            rhs[r] += s * t[r] * target;
            for c in 0..size {
                local[(r, c)] += s * t[r] * t[c];
            }
        }
    }
    (local, rhs)
}

#[derive(Debug, Clone)]
pub struct FluxSolution {
    /// Flux values at the sampling nodes, two per element.
    pub samples: Vec<f64>,
    pub field: PiecewiseIrrotationalField,
    pub functional: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl FluxSolution {
    pub fn num_dofs(&self) -> usize {
        self.samples.len()
    }
}

pub fn solve_flux(problem: &FluxProblem, options: CgOptions) -> Result<FluxSolution> {
    let (a, b) = assemble_flux_system(problem)?;
    let out = cg_solve(&a, &b, options)?;
    log::info!(
        "flux: {} dofs, {} nonzeros, {} iterations, residual {:.2e}",
        a.dim(),
        a.nnz(),
        out.iterations,
        out.residual
    );
    let field = problem.reconstruction.reconstruct_field(&out.x);
    let functional = flux_functional_value(problem, &field);
    Ok(FluxSolution {
        samples: out.x,
        field,
        functional,
        iterations: out.iterations,
        residual: out.residual,
    })
}

/// The least-squares functional evaluated by quadrature for any candidate.
pub fn flux_functional_value(problem: &FluxProblem, q: &(impl VectorField + ?Sized)) -> f64 {
    let mesh = problem.mesh;
    let deg = problem.volume_degree();
    let volume: f64 = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let rule = polygon_quadrature(&mesh.vertices(k), deg).expect("supported degree");
            rule.integrate(|x| (q.divergence(k, x) + (problem.source)(x)).powi(2))
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let edge_ref = edge_quadrature(problem.face_degree());
    let faces: f64 = mesh
        .faces
        .iter()
        .enumerate()
        .map(|(f, face)| {
            let ends = mesh.face_endpoints(f);
            let rule = map_to_segment(&edge_ref, ends.0, ends.1);
            let w = problem.penalty.weight(mesh, f);
            w * match face.neighbor {
                Some(nb) => rule.integrate(|x| {
                    let (p, m) = (q.value(face.owner, x), q.value(nb, x));
                    (p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2)
                }),
                None => rule.integrate(|x| {
                    let v = q.value(face.owner, x);
                    (problem.boundary_trace(v, face.normal)
                        - problem.boundary_target(x, face.normal, ends))
                    .powi(2)
                }),
            }
        })
        .sum();
    volume + faces
}

/// Gram matrix of the reconstructed basis in L^2, for norm comparisons.
pub fn assemble_flux_mass_matrix(
    mesh: &Mesh,
    op: &ReconstructionOperator,
) -> Result<SparseSymmetricMatrix> {
    let cliques: Vec<Vec<usize>> = (0..mesh.num_elements())
        .map(|k| op.element(k).patch.members.clone())
        .collect();
    let degree = 2 * op.degree() + 2;
    let reference = crate::quadrature::triangle_quadrature(degree)?;
    let (m, _) = assemble_blocks(mesh.num_elements(), 2, &cliques, |k| {
        let e = op.element(k);
        let basis = op.basis();
        let nb = basis.dim();
        let rule = volume_rule(mesh, k, &reference, degree);
        let mut gram = DMatrix::zeros(nb, nb);
        for (x, w) in rule.iter() {
            let phi = basis.eval(e.frame.to_local(x));
            for a in 0..nb {
                for b in 0..nb {
                    gram[(a, b)] += w * (phi[a][0] * phi[b][0] + phi[a][1] * phi[b][1]);
                }
            }
        }
        let local = e.matrix.transpose() * gram * &e.matrix;
        let n = local.nrows();
        (local, vec![0.0; n])
    })?;
    Ok(m)
}
