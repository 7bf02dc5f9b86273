//! Scalar-generic numerical building blocks shared by the physics modules.

pub mod extrapolate;
pub mod quadrature;

use num_traits::{Float, FromPrimitive};
use std::fmt::Debug;

/// Real scalar usable by the generic numerics (`f32` or `f64`).
pub trait Real: Float + FromPrimitive + Debug + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}
