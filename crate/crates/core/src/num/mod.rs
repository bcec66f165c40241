//! Dense numeric kernel with reverse-mode gradients.
//!
//! Values are row-major tensors (mostly matrices; a vector is a `1 × n`
//! row). A [`Graph`] records operations as they are applied and
//! back-propagates a scalar loss into a [`Gradients`] buffer keyed by
//! parameter; [`ParamStore`] owns the trainable tensors and Adam state.

mod check;
mod graph;
mod params;
mod tensor;

pub use check::{grad_check, GradCheck};
pub use graph::{Graph, Var};
pub use params::{Gradients, ParamId, ParamStore};
pub use tensor::Tensor;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

/// Floating point element type of tensors.
pub trait Scalar:
    Float + FromPrimitive + Debug + Default + Send + Sync + AddAssign + SubAssign + MulAssign + Sum + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
