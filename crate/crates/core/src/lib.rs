//! Exact extremality, eutaxy, perfection and design analysis for positive
//! definite quadratic forms, with Epstein zeta tools.

pub mod catalog;
pub mod designs;
pub mod enumerate;
pub mod error;
pub mod expm;
pub mod extremality;
pub mod form;
pub mod invariants;
pub mod linalg;
pub mod lp;
pub mod modular;
pub mod rat;
pub mod spaces;
pub mod zeta;

pub use designs::{DesignVerdict, Strength};
pub use enumerate::{EnumOptions, IntVector, Layer};
pub use error::{Error, Result};
pub use extremality::{ExtremalityClass, ExtremalityReport};
pub use form::{deform_eval, Deformation, QForm, SymEndo};
pub use invariants::{GroupGenSet, InvarianceVerdict};
pub use linalg::RatMatrix;
pub use rat::Rat;
pub use spaces::{SpaceDescriptor, SpaceKind};
pub use zeta::{ZetaResult, ZetaVerdict};
