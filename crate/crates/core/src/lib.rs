pub mod analysis;
pub mod basis;
pub mod constants;
pub mod error;
pub mod extract;
pub mod laurent;
pub mod matrix;
pub mod pipeline;
pub mod verify;

pub use basis::{Basis, BasisAlgebra, EndoVec, PowerStrategy, RowVector};
pub use constants::Constants;
pub use error::{Error, Result};
pub use laurent::{LaurentPoly, Monomial, MulKernel};
pub use pipeline::{lg_as, LGResult, Pipeline, ResultCache};
