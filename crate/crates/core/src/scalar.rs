//! Floating-point bound shared by the cost model and the fidelity model.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used for heuristic costs and fidelities.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Serialize + DeserializeOwned + Send + Sync + 'static
{
    fn of_f64(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    fn of_u64(v: u64) -> Self {
        Self::from_u64(v).expect("u64 is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
