//! Coding for multiplicative matrix channels `Y = A X` over finite chain rings.
//!
//! Layers, bottom up: [`shapes`], [`field`] (residue and extension fields),
//! [`ring`] (chain rings), [`linalg`] (Smith form and solvers),
//! [`rank_metric`] (Gabidulin codes), [`composite`] (multilevel codes with
//! multistage decoding) and [`channel`] (transfer models, capacity and
//! simulation).

pub mod channel;
pub mod composite;
pub mod error;
pub mod field;
pub mod linalg;
pub mod rank_metric;
pub mod ring;
pub mod rng;
pub mod shapes;

pub use channel::{ChannelConfig, TransferModel};
pub use composite::{ComponentCode, CompositeCode, GabidulinComponent};
pub use error::{DecodeFailure, Error, Result};
pub use field::{ExtElem, ExtField, FieldElem, FieldMatrix, Fq};
pub use linalg::{RingMatrix, SmithDecomposition};
pub use rank_metric::GabidulinCode;
pub use ring::{ChainRing, ChainRingSpec, RingElem, RingFamily};
pub use shapes::SShape;
