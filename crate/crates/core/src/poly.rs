//! Small helpers for bivariate monomials in element-local coordinates.

use crate::quadrature::Point;

/// Exponents (a, b) of x^a y^b with a + b <= `max_degree`, graded by total
/// degree and by descending power of x within a degree.
pub fn monomial_exponents(max_degree: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for k in 0..=max_degree as u32 {
        for a in (0..=k).rev() {
            out.push((a, k - a));
        }
    }
    out
}

pub fn num_monomials(max_degree: usize) -> usize {
    (max_degree + 1) * (max_degree + 2) / 2
}

/// Power tables x^0..x^degree and y^0..y^degree.
#[derive(Debug, Clone)]
pub struct Powers {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Powers {
    pub fn new(p: Point, degree: usize) -> Self {
        let mut x = Vec::with_capacity(degree + 1);
        let mut y = Vec::with_capacity(degree + 1);
        x.push(1.0);
        y.push(1.0);
        for k in 1..=degree {
            x.push(x[k - 1] * p[0]);
            y.push(y[k - 1] * p[1]);
        }
        Powers { x, y }
    }

    #[inline]
    pub fn x(&self, k: u32) -> f64 {
        self.x[k as usize]
    }

    #[inline]
    pub fn y(&self, k: u32) -> f64 {
        self.y[k as usize]
    }

    #[inline]
    pub fn monomial(&self, a: u32, b: u32) -> f64 {
        self.x[a as usize] * self.y[b as usize]
    }

    /// d/dx and d/dy of x^a y^b.
    #[inline]
    pub fn grad_monomial(&self, a: u32, b: u32) -> [f64; 2] {
        let dx = if a > 0 {
            a as f64 * self.x(a - 1) * self.y(b)
        } else {
            0.0
        };
        let dy = if b > 0 {
            b as f64 * self.x(a) * self.y(b - 1)
        } else {
            0.0
        };
        [dx, dy]
    }
}

/// Coordinates relative to a center, divided by a length scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub center: Point,
    pub scale: f64,
}

impl LocalFrame {
    pub const IDENTITY: LocalFrame = LocalFrame {
        center: [0.0, 0.0],
        scale: 1.0,
    };

    #[inline]
    pub fn to_local(&self, x: Point) -> Point {
        [
            (x[0] - self.center[0]) / self.scale,
            (x[1] - self.center[1]) / self.scale,
        ]
    }
}
