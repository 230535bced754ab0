//! Two-layer networks with smooth activations: constructive synthesis from
//! Taylor polynomials and splines, gradient training, and unit analysis.

pub mod activation;
pub mod analyzer;
pub mod error;
pub mod expr;
pub mod fd;
pub mod grad;
pub mod func;
pub mod linalg;
pub mod par;
pub mod poly;
pub mod polyspline;
pub mod quad;
pub mod terms;

pub use error::{Error, Result};
pub mod net;
pub mod wronskian;

pub use activation::ActivationKind;
pub use net::{TwoLayerNet, Unit};
pub mod synth;
pub mod trainer;
