#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod matrix;
pub mod oracle;
pub mod reference;
pub mod transform;

pub use error::{EppError, Result};
pub use matrix::{ComplexMatrix, ComplexOrthogonal, Sign};
pub use oracle::{extract_s_matrix, integrate_radial, verify_epp, RadialGrid, ScatterReport, Seed, VerifyTolerances};
pub use reference::ChannelModel;
pub use transform::{validate_spec, EppTransform, TransformSpec};
