use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::mesh::Mesh;
use crate::poly::LocalFrame;
use crate::quadrature::Point;

use super::basis::{curl_coefficients, IrrotationalBasis};
use super::patch::{build_patch_with, ElementPatch, PatchOrdering};

/// Singular value ratio below which a collocation matrix counts as rank
/// deficient.
pub const UNISOLVENCE_THRESHOLD: f64 = 1e-10;

/// Patch regrowth attempts (each adds two members) before giving up.
pub const UNISOLVENCE_RETRIES: usize = 5;

/// Rows (x, y) per sampling node, columns in basis order, evaluated in the
/// given local frame.
pub fn collocation_matrix(
    nodes: &[Point],
    basis: &IrrotationalBasis,
    frame: LocalFrame,
) -> DMatrix<f64> {
    let n_b = basis.dim();
    let mut a = DMatrix::zeros(2 * nodes.len(), n_b);
    let mut vals = vec![[0.0; 2]; n_b];
    for (i, &x) in nodes.iter().enumerate() {
        basis.eval_into(frame.to_local(x), &mut vals);
        for (j, v) in vals.iter().enumerate() {
            a[(2 * i, j)] = v[0];
            a[(2 * i + 1, j)] = v[1];
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unisolvence {
    Ok { ratio: f64 },
    RankDeficient { ratio: f64 },
}

impl Unisolvence {
    pub fn is_ok(&self) -> bool {
        matches!(self, Unisolvence::Ok { .. })
    }

    /// sigma_min / sigma_max (0 when there are fewer rows than columns).
    pub fn ratio(&self) -> f64 {
        match *self {
            Unisolvence::Ok { ratio } | Unisolvence::RankDeficient { ratio } => ratio,
        }
    }
}

pub fn check_unisolvence(a: &DMatrix<f64>) -> Unisolvence {
    if a.nrows() < a.ncols() {
        return Unisolvence::RankDeficient { ratio: 0.0 };
    }
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if ratio > UNISOLVENCE_THRESHOLD {
        Unisolvence::Ok { ratio }
    } else {
        Unisolvence::RankDeficient { ratio }
    }
}

/// Least-squares solution operator of a full-column-rank matrix, via SVD.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let tol = svd.singular_values.max() * UNISOLVENCE_THRESHOLD;
    svd.pseudo_inverse(tol).expect("SVD computed with U and V")
}

#[derive(Debug, Clone)]
pub struct ElementReconstruction {
    pub patch: ElementPatch,
    pub frame: LocalFrame,
    /// n_b x 2 #S(K); column 2j + i weighs component i at member j.
    pub matrix: DMatrix<f64>,
    pub conditioning: f64,
}

/// Per-element least-squares reconstruction onto the irrotational space.
#[derive(Debug, Clone)]
pub struct ReconstructionOperator {
    basis: IrrotationalBasis,
    elements: Vec<ElementReconstruction>,
}

pub fn build_reconstruction(
    mesh: &Mesh,
    m: usize,
    target_size: usize,
) -> Result<ReconstructionOperator> {
    build_reconstruction_with(mesh, m, target_size, PatchOrdering::default())
}

pub fn build_reconstruction_with(
    mesh: &Mesh,
    m: usize,
    target_size: usize,
    ordering: PatchOrdering,
) -> Result<ReconstructionOperator> {
    let basis = IrrotationalBasis::new(m);
    let elements = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| build_element(mesh, &basis, k, target_size, ordering))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReconstructionOperator { basis, elements })
}

fn build_element(
    mesh: &Mesh,
    basis: &IrrotationalBasis,
    k: usize,
    target_size: usize,
    ordering: PatchOrdering,
) -> Result<ElementReconstruction> {
    let frame = LocalFrame {
        center: mesh.barycenters[k],
        scale: mesh.diameters[k],
    };
    let mut size = target_size;
    for attempt in 0..=UNISOLVENCE_RETRIES {
        let patch = build_patch_with(mesh, k, size, ordering);
        let a = collocation_matrix(&patch.sampling_nodes, basis, frame);
        let status = check_unisolvence(&a);
        if status.is_ok() {
            return Ok(ElementReconstruction {
                matrix: pseudo_inverse(&a),
                patch,
                frame,
                conditioning: status.ratio(),
            });
        }
        if attempt < UNISOLVENCE_RETRIES {
            log::debug!(
                "element {k}: patch of {} not unisolvent, growing",
                patch.len()
            );
        }
        size += 2;
    }
    Err(Error::NotUnisolvent {
        element: k,
        attempts: UNISOLVENCE_RETRIES + 1,
        size: size - 2,
    })
}

impl ReconstructionOperator {
    pub fn basis(&self) -> &IrrotationalBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Global unknowns: two per element.
    pub fn num_dofs(&self) -> usize {
        2 * self.elements.len()
    }

    pub fn element(&self, k: usize) -> &ElementReconstruction {
        &self.elements[k]
    }

    pub fn elements(&self) -> &[ElementReconstruction] {
        &self.elements
    }

    /// Coefficients of R_K applied to `samples` (two values per element).
    pub fn element_coefficients(&self, k: usize, samples: &[f64]) -> Vec<f64> {
        let e = &self.elements[k];
        let mut local = Vec::with_capacity(2 * e.patch.len());
        for &j in &e.patch.members {
            local.push(samples[2 * j]);
            local.push(samples[2 * j + 1]);
        }
        let c = &e.matrix * nalgebra::DVector::from_vec(local);
        c.as_slice().to_vec()
    }

    pub fn reconstruct_field(&self, samples: &[f64]) -> PiecewiseIrrotationalField {
        assert_eq!(samples.len(), self.num_dofs(), "one 2-vector per element");
        let coefficients = (0..self.num_elements())
            .into_par_iter()
            .flat_map_iter(|k| self.element_coefficients(k, samples))
            .collect();
        PiecewiseIrrotationalField {
            basis: self.basis.clone(),
            frames: self.elements.iter().map(|e| e.frame).collect(),
            coefficients,
        }
    }

    /// Reconstruction of the unit sample vector of dof `dof` (a basis
    /// function of the reconstructed space).
    pub fn basis_function(&self, dof: usize) -> PiecewiseIrrotationalField {
        let mut s = vec![0.0; self.num_dofs()];
        s[dof] = 1.0;
        self.reconstruct_field(&s)
    }
}

/// Values of `f` at the element barycenters, two entries per element.
pub fn sample_at_barycenters<F: Fn(Point) -> [f64; 2]>(mesh: &Mesh, f: F) -> Vec<f64> {
    mesh.barycenters.iter().flat_map(|&c| f(c)).collect()
}

/// A piecewise irrotational polynomial field: one gradient-of-potential
/// expansion per element in that element's local frame.
#[derive(Debug, Clone)]
pub struct PiecewiseIrrotationalField {
    basis: IrrotationalBasis,
    frames: Vec<LocalFrame>,
    coefficients: Vec<f64>,
}

impl PiecewiseIrrotationalField {
    pub fn coefficients(&self, k: usize) -> &[f64] {
        let n = self.basis.dim();
        &self.coefficients[k * n..(k + 1) * n]
    }

    pub fn basis(&self) -> &IrrotationalBasis {
        &self.basis
    }

    pub fn frame(&self, k: usize) -> LocalFrame {
        self.frames[k]
    }

    /// Largest |coefficient| of the curl polynomial on element `k`.
    pub fn max_curl_coefficient(&self, k: usize) -> f64 {
        let components = self.basis.components(self.coefficients(k));
        curl_coefficients(&components)
            .values()
            .fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl VectorField for PiecewiseIrrotationalField {
    fn value(&self, element: usize, x: Point) -> [f64; 2] {
        let xi = self.frames[element].to_local(x);
        let vals = self.basis.eval(xi);
        let c = self.coefficients(element);
        let mut out = [0.0; 2];
        for (v, ci) in vals.iter().zip(c) {
            out[0] += ci * v[0];
            out[1] += ci * v[1];
        }
        out
    }

    fn divergence(&self, element: usize, x: Point) -> f64 {
        let frame = self.frames[element];
        let n = self.basis.dim();
        let mut vals = vec![[0.0; 2]; n];
        let mut div = vec![0.0; n];
        self.basis
            .eval_with_divergence(frame.to_local(x), &mut vals, &mut div);
        let c = self.coefficients(element);
        div.iter().zip(c).map(|(d, ci)| d * ci).sum::<f64>() / frame.scale
    }
}
