use std::collections::BTreeMap;

use crate::poly::Powers;
use crate::quadrature::Point;

/// Scalar potential `coeff * x^a * y^b`; the basis field is its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub coeff: f64,
    pub a: u32,
    pub b: u32,
}

impl Potential {
    pub fn degree(&self) -> u32 {
        self.a + self.b
    }
}

/// Basis of the curl-free vector polynomials of degree <= m in two
/// dimensions, stored as gradients of scalar monomials of degree 1..=m+1.
///
/// Pure powers carry a 1/k factor so that the first fields read
/// (1,0), (0,1), (x,0), (0,y), (y,x).
#[derive(Debug, Clone, PartialEq)]
pub struct IrrotationalBasis {
    degree: usize,
    potentials: Vec<Potential>,
}

/// One component of a vector polynomial as a map (a, b) -> coefficient.
pub type SparsePoly = BTreeMap<(u32, u32), f64>;

impl IrrotationalBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "irrotational basis needs degree >= 1");
        let mut potentials = Vec::new();
        for k in 1..=(degree as u32 + 1) {
            let exps: Vec<(u32, u32)> = if k == 2 {
                vec![(2, 0), (0, 2), (1, 1)]
            } else {
                (0..=k).rev().map(|a| (a, k - a)).collect()
            };
            for (a, b) in exps {
                let coeff = if a == 0 || b == 0 {
                    1.0 / k as f64
                } else {
                    1.0
                };
                potentials.push(Potential { coeff, a, b });
            }
        }
        IrrotationalBasis { degree, potentials }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// (m + 2)(m + 3)/2 - 1 fields.
    pub fn dim(&self) -> usize {
        self.potentials.len()
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    /// Field values at local point `xi` written into `out` (length dim).
    pub fn eval_into(&self, xi: Point, out: &mut [[f64; 2]]) {
        let p = Powers::new(xi, self.degree + 1);
        for (o, pot) in out.iter_mut().zip(&self.potentials) {
            let g = p.grad_monomial(pot.a, pot.b);
            *o = [pot.coeff * g[0], pot.coeff * g[1]];
        }
    }

    pub fn eval(&self, xi: Point) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.dim()];
        self.eval_into(xi, &mut out);
        out
    }

    /// Values together with the local divergence (the Laplacian of each
    /// potential).
    pub fn eval_with_divergence(&self, xi: Point, values: &mut [[f64; 2]], divergence: &mut [f64]) {
        let p = Powers::new(xi, self.degree + 1);
        for ((v, d), pot) in values
            .iter_mut()
            .zip(divergence.iter_mut())
            .zip(&self.potentials)
        {
            let g = p.grad_monomial(pot.a, pot.b);
            *v = [pot.coeff * g[0], pot.coeff * g[1]];
            let (a, b) = (pot.a, pot.b);
            let mut lap = 0.0;
            if a >= 2 {
                lap += (a * (a - 1)) as f64 * p.x(a - 2) * p.y(b);
            }
            if b >= 2 {
                lap += (b * (b - 1)) as f64 * p.x(a) * p.y(b - 2);
            }
            *d = pot.coeff * lap;
        }
    }

    /// Component polynomials of sum_i c_i * field_i.
    pub fn components(&self, coefficients: &[f64]) -> [SparsePoly; 2] {
        let mut q1 = SparsePoly::new();
        let mut q2 = SparsePoly::new();
        for (c, pot) in coefficients.iter().zip(&self.potentials) {
            let (a, b) = (pot.a, pot.b);
            if a > 0 {
                *q1.entry((a - 1, b)).or_default() += c * pot.coeff * a as f64;
            }
            if b > 0 {
                *q2.entry((a, b - 1)).or_default() += c * pot.coeff * b as f64;
            }
        }
        [q1, q2]
    }
}

/// Coefficients of d q2/dx - d q1/dy.
pub fn curl_coefficients(components: &[SparsePoly; 2]) -> SparsePoly {
    let mut curl = SparsePoly::new();
    for (&(a, b), &c) in &components[1] {
        if a > 0 {
            *curl.entry((a - 1, b)).or_default() += c * a as f64;
        }
    }
    for (&(a, b), &c) in &components[0] {
        if b > 0 {
            *curl.entry((a, b - 1)).or_default() -= c * b as f64;
        }
    }
    curl
}

/// Dimension of the irrotational space for degree `m` in dimension `d`:
/// dim P_{m+1} minus the constants.
pub fn irrotational_dim(m: usize, d: usize) -> usize {
    match d {
        2 => (m + 2) * (m + 3) / 2 - 1,
        3 => (m + 2) * (m + 3) * (m + 4) / 6 - 1,
        _ => panic!("dimension {d} not supported"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_one_fields_match_listing() {
        let basis = IrrotationalBasis::new(1);
        assert_eq!(basis.dim(), 5);
        let (x, y) = (0.3, -0.7);
        let v = basis.eval([x, y]);
        let expected = [[1.0, 0.0], [0.0, 1.0], [x, 0.0], [0.0, y], [y, x]];
        for (a, b) in v.iter().zip(&expected) {
            assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn degree_two_appends_four_fields() {
        let b1 = IrrotationalBasis::new(1);
        let b2 = IrrotationalBasis::new(2);
        assert_eq!(b2.dim(), 9);
        assert_eq!(&b2.potentials()[..5], b1.potentials());
        let (x, y) = (0.4, 1.3);
        let v = b2.eval([x, y]);
        let expected = [
            [x * x, 0.0],
            [2.0 * x * y, x * x],
            [y * y, 2.0 * x * y],
            [0.0, y * y],
        ];
        for (a, b) in v[5..].iter().zip(&expected) {
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
        }
        assert_eq!(IrrotationalBasis::new(3).dim(), 14);
    }

    #[test]
    fn dimension_formula() {
        for m in 1..=5 {
            assert_eq!(IrrotationalBasis::new(m).dim(), irrotational_dim(m, 2));
        }
        assert_eq!(irrotational_dim(1, 3), 9);
    }

    #[test]
    fn every_field_is_curl_free() {
        let basis = IrrotationalBasis::new(4);
        for i in 0..basis.dim() {
            let mut c = vec![0.0; basis.dim()];
            c[i] = 1.0;
            let curl = curl_coefficients(&basis.components(&c));
            assert!(curl.values().all(|v| *v == 0.0), "field {i}");
        }
    }

    #[test]
    fn divergence_matches_finite_differences() {
        let basis = IrrotationalBasis::new(3);
        let xi = [0.21, -0.37];
        let n = basis.dim();
        let mut v = vec![[0.0; 2]; n];
        let mut d = vec![0.0; n];
        basis.eval_with_divergence(xi, &mut v, &mut d);
        let eps = 1e-6;
        let px = basis.eval([xi[0] + eps, xi[1]]);
        let mx = basis.eval([xi[0] - eps, xi[1]]);
        let py = basis.eval([xi[0], xi[1] + eps]);
        let my = basis.eval([xi[0], xi[1] - eps]);
        for i in 0..n {
            let fd = (px[i][0] - mx[i][0] + py[i][1] - my[i][1]) / (2.0 * eps);
            assert!((fd - d[i]).abs() < 1e-8, "{i}: {fd} vs {}", d[i]);
        }
    }
}
