//! Scalar abstraction for the floating-point layers.
//!
//! Everything that touches eigenvalues, gradients or the variational solver is
//! generic over [`Real`]; the integer lattice layer works in exact arithmetic
//! and never sees this trait.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type usable by the numeric layers: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Relative tolerance used by eigen-solvers when the caller does not supply one.
    const DEFAULT_TOL: f64;
    /// Gradient-norm tolerance for the growth-indicator solver.
    const SOLVER_TOL: f64;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn is_finite_val(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Real for f64 {
    const DEFAULT_TOL: f64 = 1e-12;
    const SOLVER_TOL: f64 = 1e-10;
}

impl Real for f32 {
    const DEFAULT_TOL: f64 = 1e-5;
    const SOLVER_TOL: f64 = 1e-4;
}
