use num_traits::{Float, FloatConst, FromPrimitive};

/// Scalar type the solvers are generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
pub(crate) fn cast<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("literal representable in scalar type")
}
