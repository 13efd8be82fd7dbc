use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::Mesh;
use crate::poly::{monomial_exponents, LocalFrame, Powers};
use crate::quadrature::{polygon_subtriangles, Point};

use super::patch::ElementPatch;

const SAMPLES: usize = 200;
const LATTICE_ORDER: usize = 8;
const SEED: u64 = 0x5eed;

/// Sampled lower bound of the patch stability constant: the largest ratio
/// of sup over the patch to sup over the sampling nodes among random
/// polynomials of degree `m`.
pub fn estimate_lambda(mesh: &Mesh, patch: &ElementPatch, m: usize) -> f64 {
    let frame = LocalFrame {
        center: mesh.barycenters[patch.owner],
        scale: mesh.diameters[patch.owner],
    };
    let lattice: Vec<Point> = patch
        .members
        .iter()
        .flat_map(|&k| element_lattice(&mesh.vertices(k)))
        .chain(patch.sampling_nodes.iter().copied())
        .map(|x| frame.to_local(x))
        .collect();
    let nodes: Vec<Point> = patch
        .sampling_nodes
        .iter()
        .map(|&x| frame.to_local(x))
        .collect();
    lambda_from_points(&lattice, &nodes, m)
}

/// Ratio estimate for explicit point sets (already in local coordinates).
pub fn lambda_from_points(lattice: &[Point], nodes: &[Point], m: usize) -> f64 {
    let exps = monomial_exponents(m);
    let tabulate = |pts: &[Point]| -> Vec<Vec<f64>> {
        pts.iter()
            .map(|&x| {
                let p = Powers::new(x, m);
                exps.iter().map(|&(a, b)| p.monomial(a, b)).collect()
            })
            .collect()
    };
    let on_lattice = tabulate(lattice);
    let on_nodes = tabulate(nodes);
    let sup = |table: &[Vec<f64>], c: &[f64]| {
        table
            .iter()
            .map(|row| row.iter().zip(c).map(|(r, ci)| r * ci).sum::<f64>().abs())
            .fold(0.0, f64::max)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut best: f64 = 1.0;
    let mut c = vec![0.0; exps.len()];
    for _ in 0..SAMPLES {
        for ci in c.iter_mut() {
            *ci = rng.random_range(-1.0..=1.0);
        }
        let on_i = sup(&on_nodes, &c);
        if on_i > 0.0 {
            best = best.max(sup(&on_lattice, &c) / on_i);
        }
    }
    best
}

fn element_lattice(vertices: &[Point]) -> Vec<Point> {
    let n = LATTICE_ORDER;
    let mut out = Vec::new();
    for [a, b, c] in polygon_subtriangles(vertices) {
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
                let r = 1.0 - s - t;
                out.push([
                    r * a[0] + s * b[0] + t * c[0],
                    r * a[1] + s * b[1] + t * c[1],
                ]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_triangle_mesh, Domain};
    use crate::reconstruction::{build_patch, default_patch_size};

    #[test]
    fn at_least_one() {
        let mesh = build_structured_triangle_mesh(4, Domain::UnitSquare).unwrap();
        let p = build_patch(&mesh, 5, 1);
        assert!(estimate_lambda(&mesh, &p, 0) == 1.0);
        assert!(estimate_lambda(&mesh, &p, 1) >= 1.0);
    }

    #[test]
    fn scale_invariant() {
        let mesh = build_structured_triangle_mesh(5, Domain::UnitSquare).unwrap();
        let big = Mesh::new(
            mesh.nodes
                .iter()
                .map(|x| [10.0 * x[0], 10.0 * x[1]])
                .collect(),
            mesh.elements.clone(),
        )
        .unwrap();
        for k in [0, 17, 49] {
            let a = estimate_lambda(&mesh, &build_patch(&mesh, k, 10), 2);
            let b = estimate_lambda(&big, &build_patch(&big, k, 10), 2);
            assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn bounded_under_refinement() {
        for m in 1..=3 {
            let size = default_patch_size(m, 2);
            for n in [10, 20, 40] {
                let mesh = build_structured_triangle_mesh(n, Domain::UnitSquare).unwrap();
                let worst = (0..mesh.num_elements())
                    .step_by(7)
                    .map(|k| estimate_lambda(&mesh, &build_patch(&mesh, k, size), m))
                    .fold(0.0, f64::max);
                assert!(worst < 50.0, "m={m} n={n}: {worst}");
            }
        }
    }
}
