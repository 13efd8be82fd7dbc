//! Manufactured Poisson problems with closed-form solution, flux and source.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{GlobalScalarField, GlobalVectorField};
use crate::mesh::Domain;
use crate::quadrature::Point;

pub type ScalarFn = fn(Point) -> f64;
pub type VectorFn = fn(Point) -> [f64; 2];

/// -Laplace(u) = f with u = g on the whole boundary.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedProblem {
    pub name: &'static str,
    pub domain: Domain,
    pub u: ScalarFn,
    pub grad_u: VectorFn,
    pub f: ScalarFn,
    /// Point where derivatives of u blow up, if inside the closed domain.
    pub singular_point: Option<Point>,
    pub regularity: &'static str,
}

impl ManufacturedProblem {
    pub fn exact_flux(&self) -> GlobalVectorField<VectorFn, impl Fn(Point) -> f64 + Sync> {
        let f = self.f;
        GlobalVectorField {
            value: self.grad_u,
            divergence: move |x| -f(x),
        }
    }

    pub fn exact_pressure(&self) -> GlobalScalarField<ScalarFn, VectorFn> {
        GlobalScalarField {
            value: self.u,
            gradient: self.grad_u,
        }
    }
}

pub const PROBLEM_NAMES: [&str; 3] = ["ex1", "ex3", "ex4"];

pub fn problem_by_name(name: &str) -> Result<ManufacturedProblem> {
    match name {
        "ex1" => Ok(example1()),
        "ex3" => Ok(example3()),
        "ex4" => Ok(example4()),
        _ => Err(Error::UnknownProblem {
            name: name.to_string(),
            available: PROBLEM_NAMES.join(", "),
        }),
    }
}

/// u = sin(2 pi x) sin(4 pi y) on the unit square.
pub fn example1() -> ManufacturedProblem {
    fn u(x: Point) -> f64 {
        (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).sin()
    }
    fn grad(x: Point) -> [f64; 2] {
        let (a, b) = (2.0 * PI * x[0], 4.0 * PI * x[1]);
        [2.0 * PI * a.cos() * b.sin(), 4.0 * PI * a.sin() * b.cos()]
    }
    fn f(x: Point) -> f64 {
        20.0 * PI * PI * u(x)
    }
    ManufacturedProblem {
        name: "ex1",
        domain: Domain::UnitSquare,
        u,
        grad_u: grad,
        f,
        singular_point: None,
        regularity: "analytic",
    }
}

const EX3_CENTER: Point = [-0.05, -0.05];
const EX3_R0: f64 = 0.7;
const EX3_ALPHA: f64 = 10.0;

fn ex3_radius(x: Point) -> (f64, f64, f64) {
    let (dx, dy) = (x[0] - EX3_CENTER[0], x[1] - EX3_CENTER[1]);
    ((dx * dx + dy * dy).sqrt(), dx, dy)
}

/// Circular wave front u = atan(alpha (r - r0)) centered just outside the
/// unit square.
pub fn example3() -> ManufacturedProblem {
    fn u(x: Point) -> f64 {
        let (r, _, _) = ex3_radius(x);
        (EX3_ALPHA * (r - EX3_R0)).atan()
    }
    fn u_r(r: f64) -> f64 {
        let s = EX3_ALPHA * (r - EX3_R0);
        EX3_ALPHA / (1.0 + s * s)
    }
    fn grad(x: Point) -> [f64; 2] {
        let (r, dx, dy) = ex3_radius(x);
        let ur = u_r(r);
        [ur * dx / r, ur * dy / r]
    }
    fn f(x: Point) -> f64 {
        let (r, _, _) = ex3_radius(x);
        let s = EX3_ALPHA * (r - EX3_R0);
        let u_rr = -2.0 * EX3_ALPHA.powi(3) * (r - EX3_R0) / (1.0 + s * s).powi(2);
        -(u_rr + u_r(r) / r)
    }
    ManufacturedProblem {
        name: "ex3",
        domain: Domain::UnitSquare,
        u,
        grad_u: grad,
        f,
        singular_point: None,
        regularity: "analytic on the closed square; steep front at r = 0.7",
    }
}

const EX4_ALPHA: f64 = 5.0 / 3.0;

/// Polar angle in [0, 2 pi).
pub fn polar_angle(x: Point) -> f64 {
    let t = x[1].atan2(x[0]);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

/// Gradient of the corner solution r^(5/3) sin(5 theta / 3); the flag is set
/// at the origin, where zero is returned.
pub fn example4_gradient(x: Point) -> ([f64; 2], bool) {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if r == 0.0 {
        return ([0.0, 0.0], true);
    }
    let t = polar_angle(x);
    let c = EX4_ALPHA * r.powf(EX4_ALPHA - 1.0);
    let s = (EX4_ALPHA - 1.0) * t;
    ([c * s.sin(), c * s.cos()], false)
}

/// Harmonic corner singularity u = r^(5/3) sin(5 theta / 3) on the L-shape.
pub fn example4() -> ManufacturedProblem {
    fn u(x: Point) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        r.powf(EX4_ALPHA) * (EX4_ALPHA * polar_angle(x)).sin()
    }
    fn grad(x: Point) -> [f64; 2] {
        example4_gradient(x).0
    }
    fn f(_: Point) -> f64 {
        0.0
    }
    ManufacturedProblem {
        name: "ex4",
        domain: Domain::LShape,
        u,
        grad_u: grad,
        f,
        singular_point: Some([0.0, 0.0]),
        regularity: "H^(8/3 - eps): gradient singular at the re-entrant corner",
    }
}

/// u = x^2 + y^2, whose flux is linear and curl-free.
pub fn quadratic() -> ManufacturedProblem {
    ManufacturedProblem {
        name: "quadratic",
        domain: Domain::UnitSquare,
        u: |x| x[0] * x[0] + x[1] * x[1],
        grad_u: |x| [2.0 * x[0], 2.0 * x[1]],
        f: |_| -4.0,
        singular_point: None,
        regularity: "polynomial",
    }
}

/// u = x + 2y.
pub fn linear() -> ManufacturedProblem {
    ManufacturedProblem {
        name: "linear",
        domain: Domain::UnitSquare,
        u: |x| x[0] + 2.0 * x[1],
        grad_u: |_| [1.0, 2.0],
        f: |_| 0.0,
        singular_point: None,
        regularity: "polynomial",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(domain: Domain, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < n {
            let p: Point = match domain {
                Domain::UnitSquare => [rng.random_range(0.02..0.98), rng.random_range(0.02..0.98)],
                Domain::LShape => [rng.random_range(-0.98..0.98), rng.random_range(-0.98..0.98)],
            };
            let corner = domain == Domain::LShape
                && (p[0] > -0.05 && p[1] < 0.05 || p.iter().all(|c| c.abs() < 0.1));
            if !corner {
                out.push(p);
            }
        }
        out
    }

    fn fd_gradient(u: ScalarFn, x: Point, h: f64) -> [f64; 2] {
        [
            (u([x[0] + h, x[1]]) - u([x[0] - h, x[1]])) / (2.0 * h),
            (u([x[0], x[1] + h]) - u([x[0], x[1] - h])) / (2.0 * h),
        ]
    }

    fn fd_laplacian(u: ScalarFn, x: Point, h: f64) -> f64 {
        (u([x[0] + h, x[1]]) + u([x[0] - h, x[1]]) + u([x[0], x[1] + h]) + u([x[0], x[1] - h])
            - 4.0 * u(x))
            / (h * h)
    }

    #[test]
    fn gradients_match_finite_differences() {
        for p in [example1(), example3(), example4(), quadratic(), linear()] {
            for x in random_points(p.domain, 100, 3) {
                let g = (p.grad_u)(x);
                let fd = fd_gradient(p.u, x, 1e-6);
                let scale = 1.0 + g[0].abs().max(g[1].abs());
                assert!(
                    (g[0] - fd[0]).abs() < 1e-6 * scale && (g[1] - fd[1]).abs() < 1e-6 * scale,
                    "{} at {x:?}",
                    p.name
                );
            }
        }
    }

    #[test]
    fn laplacian_with_fourth_order_stencil() {
        for p in [example1(), example3(), example4()] {
            for x in random_points(p.domain, 50, 4) {
                let h = 1e-3;
                let u = p.u;
                let d2 = |e: [f64; 2]| {
                    let at = |s: f64| u([x[0] + s * e[0], x[1] + s * e[1]]);
                    (-at(2.0 * h) + 16.0 * at(h) - 30.0 * at(0.0) + 16.0 * at(-h) - at(-2.0 * h))
                        / (12.0 * h * h)
                };
                let lap = d2([1.0, 0.0]) + d2([0.0, 1.0]);
                let f = (p.f)(x);
                assert!(
                    (lap + f).abs() < 1e-4 * (1.0 + f.abs()),
                    "{}: {lap} vs {f}",
                    p.name
                );
            }
        }
    }

    #[test]
    fn example1_values() {
        let p = example1();
        assert!(((p.u)([0.25, 0.125]) - 1.0).abs() < 1e-15);
        assert!(((p.f)([0.25, 0.125]) - 20.0 * PI * PI).abs() < 1e-12);
        for y in [0.0, 0.3, 0.77] {
            assert!((p.u)([0.0, y]).abs() < 1e-15);
        }
    }

    #[test]
    fn example3_front_and_gradient() {
        let p = example3();
        let on_front = [EX3_CENTER[0] + EX3_R0 * 0.6, EX3_CENTER[1] + EX3_R0 * 0.8];
        assert!((p.u)(on_front).abs() < 1e-14);
        for x in random_points(Domain::UnitSquare, 100, 5) {
            let g = (p.grad_u)(x);
            let fd = fd_gradient(p.u, x, 1e-6);
            assert!((g[0] - fd[0]).abs() < 1e-5 && (g[1] - fd[1]).abs() < 1e-5);
            let lap = fd_laplacian(p.u, x, 1e-4);
            assert!((lap + (p.f)(x)).abs() < 1e-3 * (1.0 + (p.f)(x).abs()));
        }
    }

    #[test]
    fn example4_values() {
        let p = example4();
        assert!(((p.u)([0.0, 1.0]) - 0.5).abs() < 1e-14);
        assert_eq!((p.f)([0.3, 0.4]), 0.0);
        assert_eq!(example4_gradient([0.0, 0.0]), ([0.0, 0.0], true));
        // near the corner |grad u| = (5/3) r^(2/3)
        let r = 1e-3;
        for t in [0.3, 1.7, 4.0] {
            let x = [r * f64::cos(t), r * f64::sin(t)];
            let (g, flag) = example4_gradient(x);
            assert!(!flag);
            let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
            assert!((norm - EX4_ALPHA * r.powf(2.0 / 3.0)).abs() < 1e-12);
            let fd = fd_gradient(p.u, x, 1e-8);
            assert!(
                (g[0] - fd[0]).abs() < 1e-5 && (g[1] - fd[1]).abs() < 1e-5,
                "{g:?} vs {fd:?}"
            );
        }
        // boundary value on the slit side theta = 3 pi / 2 is sin(5 pi / 2) r^(5/3)
        assert!(((p.u)([0.0, -1.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn registry() {
        assert_eq!(problem_by_name("ex3").unwrap().name, "ex3");
        match problem_by_name("ex2") {
            Err(Error::UnknownProblem { available, .. }) => assert_eq!(available, "ex1, ex3, ex4"),
            other => panic!("{other:?}"),
        }
    }
}
