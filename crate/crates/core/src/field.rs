//! Element-wise evaluation interfaces shared by solutions and exact data.
//!
//! Discrete fields are discontinuous across faces, so evaluation always
//! names the element whose restriction is wanted.

use crate::quadrature::Point;

pub trait VectorField: Sync {
    fn value(&self, element: usize, x: Point) -> [f64; 2];
    fn divergence(&self, element: usize, x: Point) -> f64;
}

pub trait ScalarField: Sync {
    fn value(&self, element: usize, x: Point) -> f64;
    fn gradient(&self, element: usize, x: Point) -> [f64; 2];
}

/// Element-independent vector field given by closures.
pub struct GlobalVectorField<V, D> {
    pub value: V,
    pub divergence: D,
}

impl<V, D> VectorField for GlobalVectorField<V, D>
where
    V: Fn(Point) -> [f64; 2] + Sync,
    D: Fn(Point) -> f64 + Sync,
{
    fn value(&self, _element: usize, x: Point) -> [f64; 2] {
        (self.value)(x)
    }

    fn divergence(&self, _element: usize, x: Point) -> f64 {
        (self.divergence)(x)
    }
}

/// Element-independent scalar field given by closures.
pub struct GlobalScalarField<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> ScalarField for GlobalScalarField<V, G>
where
    V: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> [f64; 2] + Sync,
{
    fn value(&self, _element: usize, x: Point) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, _element: usize, x: Point) -> [f64; 2] {
        (self.gradient)(x)
    }
}

pub struct ZeroVectorField;

impl VectorField for ZeroVectorField {
    fn value(&self, _: usize, _: Point) -> [f64; 2] {
        [0.0; 2]
    }

    fn divergence(&self, _: usize, _: Point) -> f64 {
        0.0
    }
}

pub struct ZeroScalarField;

impl ScalarField for ZeroScalarField {
    fn value(&self, _: usize, _: Point) -> f64 {
        0.0
    }

    fn gradient(&self, _: usize, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
}

/// `scale * field`.
pub struct ScaledVectorField<'a, F: ?Sized>(pub f64, pub &'a F);

impl<F: VectorField + ?Sized> VectorField for ScaledVectorField<'_, F> {
    fn value(&self, element: usize, x: Point) -> [f64; 2] {
        let v = self.1.value(element, x);
        [self.0 * v[0], self.0 * v[1]]
    }

    fn divergence(&self, element: usize, x: Point) -> f64 {
        self.0 * self.1.divergence(element, x)
    }
}

/// `a - b` restricted elementwise.
pub struct VectorDifference<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: VectorField + ?Sized, B: VectorField + ?Sized> VectorField for VectorDifference<'_, A, B> {
    fn value(&self, element: usize, x: Point) -> [f64; 2] {
        let (a, b) = (self.0.value(element, x), self.1.value(element, x));
        [a[0] - b[0], a[1] - b[1]]
    }

    fn divergence(&self, element: usize, x: Point) -> f64 {
        self.0.divergence(element, x) - self.1.divergence(element, x)
    }
}

pub struct ScalarDifference<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: ScalarField + ?Sized, B: ScalarField + ?Sized> ScalarField for ScalarDifference<'_, A, B> {
    fn value(&self, element: usize, x: Point) -> f64 {
        self.0.value(element, x) - self.1.value(element, x)
    }

    fn gradient(&self, element: usize, x: Point) -> [f64; 2] {
        let (a, b) = (self.0.gradient(element, x), self.1.gradient(element, x));
        [a[0] - b[0], a[1] - b[1]]
    }
}
