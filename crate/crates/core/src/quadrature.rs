//! Quadrature on the unit interval, the reference triangle, physical
//! triangles, edges and polygons.
//!
//! Triangle rules are collapsed tensor products of Gauss–Legendre rules
//! (Duffy map), which keeps every rule positive and interior and makes any
//! exactness degree cheap to generate.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Highest triangle exactness degree served.
pub const MAX_TRIANGLE_DEGREE: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn integrate<F: FnMut(Point) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre nodes and weights on [0, 1] with `n` points.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th root on [-1, 1], then Newton.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map to [0, 1]; roots come in ± pairs
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Gauss rule on the reference edge [0, 1], stored as points (s, 0).
pub fn edge_quadrature(exactness_degree: usize) -> QuadratureRule {
    let n = exactness_degree / 2 + 1;
    let (s, w) = gauss_legendre(n);
    QuadratureRule {
        points: s.into_iter().map(|s| [s, 0.0]).collect(),
        weights: w,
        exactness_degree,
    }
}

/// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
pub fn triangle_quadrature(exactness_degree: usize) -> Result<QuadratureRule> {
    if exactness_degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::UnsupportedDegree {
            domain: "triangle",
            degree: exactness_degree,
        });
    }
    // x = u, y = (1 - u) v, jacobian (1 - u): degree q + 1 in u, q in v.
    let nu = (exactness_degree + 2).div_ceil(2).max(1);
    let nv = exactness_degree / 2 + 1;
    let (u, wu) = gauss_legendre(nu);
    let (v, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (&ui, &wui) in u.iter().zip(&wu) {
        for (&vj, &wvj) in v.iter().zip(&wv) {
            points.push([ui, (1.0 - ui) * vj]);
            weights.push(wui * wvj * (1.0 - ui));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness_degree,
    })
}

pub fn signed_triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Maps a reference-triangle rule onto the physical triangle `(a, b, c)`.
pub fn map_to_triangle(reference: &QuadratureRule, a: Point, b: Point, c: Point) -> QuadratureRule {
    let jac = 2.0 * signed_triangle_area(a, b, c).abs();
    let mut points = Vec::with_capacity(reference.len());
    let mut weights = Vec::with_capacity(reference.len());
    for ([s, t], w) in reference.iter() {
        points.push([
            a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]),
            a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]),
        ]);
        weights.push(w * jac);
    }
    QuadratureRule {
        points,
        weights,
        exactness_degree: reference.exactness_degree,
    }
}

/// Maps a reference-edge rule onto the segment from `a` to `b`.
pub fn map_to_segment(reference: &QuadratureRule, a: Point, b: Point) -> QuadratureRule {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    QuadratureRule {
        points: reference
            .points
            .iter()
            .map(|&[s, _]| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
            .collect(),
        weights: reference.weights.iter().map(|w| w * len).collect(),
        exactness_degree: reference.exactness_degree,
    }
}

/// Area-weighted centroid of a polygon, by a fan from the first vertex.
pub fn polygon_centroid(vertices: &[Point]) -> Option<Point> {
    let a = vertices[0];
    let mut area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for w in vertices[1..].windows(2) {
        let t = signed_triangle_area(a, w[0], w[1]);
        area += t;
        cx += t * (a[0] + w[0][0] + w[1][0]) / 3.0;
        cy += t * (a[1] + w[0][1] + w[1][1]) / 3.0;
    }
    if area.abs() <= f64::EPSILON * polygon_extent(vertices).powi(2) {
        return None;
    }
    Some([cx / area, cy / area])
}

fn polygon_extent(vertices: &[Point]) -> f64 {
    let mut ext: f64 = 0.0;
    for p in vertices {
        for q in vertices {
            ext = ext.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs());
        }
    }
    ext
}

/// Sub-triangles used to integrate over a polygon: the triangle itself for
/// three vertices, otherwise the fan around the centroid.
pub fn polygon_subtriangles(vertices: &[Point]) -> Vec<[Point; 3]> {
    if vertices.len() == 3 {
        return vec![[vertices[0], vertices[1], vertices[2]]];
    }
    let c = polygon_centroid(vertices).unwrap_or(vertices[0]);
    let k = vertices.len();
    (0..k)
        .map(|i| [c, vertices[i], vertices[(i + 1) % k]])
        .collect()
}

/// Physical rule on a polygon given by its (counterclockwise) vertices.
pub fn polygon_quadrature(vertices: &[Point], exactness_degree: usize) -> Result<QuadratureRule> {
    let reference = triangle_quadrature(exactness_degree)?;
    Ok(polygon_quadrature_with(vertices, &reference, 0))
}

/// Same as [`polygon_quadrature`] with a precomputed reference rule and
/// `refine` levels of uniform midpoint subdivision of each sub-triangle.
pub fn polygon_quadrature_with(
    vertices: &[Point],
    reference: &QuadratureRule,
    refine: usize,
) -> QuadratureRule {
    let mut tris = polygon_subtriangles(vertices);
    for _ in 0..refine {
        tris = tris.into_iter().flat_map(split_triangle).collect();
    }
    let mut rule = QuadratureRule {
        points: Vec::with_capacity(tris.len() * reference.len()),
        weights: Vec::with_capacity(tris.len() * reference.len()),
        exactness_degree: reference.exactness_degree,
    };
    for [a, b, c] in tris {
        let mapped = map_to_triangle(reference, a, b, c);
        rule.points.extend(mapped.points);
        rule.weights.extend(mapped.weights);
    }
    rule
}

fn split_triangle([a, b, c]: [Point; 3]) -> [[Point; 3]; 4] {
    let mid = |p: Point, q: Point| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
}

#[cfg(test)]
mod tests {
    use super::*;

    // int over reference triangle of x^a y^b = a! b! / (a + b + 2)!
    fn exact_triangle_monomial(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn degree_one_triangle_integrates_area() {
        let rule = triangle_quadrature(1).unwrap();
        let area: f64 = rule.weights.iter().sum();
        assert!((area - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_point_edge_rule_is_cubic_exact() {
        let rule = edge_quadrature(3);
        assert_eq!(rule.len(), 2);
        let v = rule.integrate(|[x, _]| x.powi(3));
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_exact_to_two_n_minus_one() {
        for n in 1..=15 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) as i32 {
                let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
                let exact = 1.0 / (k as f64 + 1.0);
                assert!((v - exact).abs() <= 1e-13 * exact.max(1.0), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn triangle_rules_exact_on_all_monomials() {
        for q in 0..=MAX_TRIANGLE_DEGREE {
            let rule = triangle_quadrature(q).unwrap();
            for a in 0..=q as u32 {
                for b in 0..=(q as u32 - a) {
                    let v = rule.integrate(|[x, y]| x.powi(a as i32) * y.powi(b as i32));
                    let exact = exact_triangle_monomial(a, b);
                    assert!(
                        ((v - exact) / exact).abs() <= 1e-12,
                        "q={q} a={a} b={b}: {v} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn unsupported_triangle_degree() {
        assert!(matches!(
            triangle_quadrature(21),
            Err(Error::UnsupportedDegree { degree: 21, .. })
        ));
    }

    #[test]
    fn hexagon_rule_matches_refined_oracle() {
        let hex: Vec<Point> = (0..6)
            .map(|i| {
                let t = std::f64::consts::PI / 3.0 * i as f64 + 0.1;
                [0.3 + t.cos(), -0.2 + t.sin()]
            })
            .collect();
        let f = |[x, y]: Point| x * x * y * y;
        let rule = polygon_quadrature(&hex, 4).unwrap();
        let v = rule.integrate(f);
        // oracle: same integrand on a 4-level refined sub-triangulation
        let reference = triangle_quadrature(4).unwrap();
        let fine = polygon_quadrature_with(&hex, &reference, 4);
        let oracle = fine.integrate(f);
        assert!(((v - oracle) / oracle).abs() < 1e-12);
        let area: f64 = rule.weights.iter().sum();
        let exact_area = 1.5 * 3f64.sqrt();
        assert!((area - exact_area).abs() < 1e-12);
    }

    #[test]
    fn centroid_of_reference_triangle_and_square() {
        let c = polygon_centroid(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15 && (c[1] - 1.0 / 3.0).abs() < 1e-15);
        let c = polygon_centroid(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
        assert!(polygon_centroid(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_none());
    }
}
