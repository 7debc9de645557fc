//! Strategic model checking of homogeneous multi-agent systems whose
//! transitions are guarded by Presburger constraints on action counts.

pub mod engine;
pub mod frontend;
pub mod logic;
pub mod model;
pub mod normalform;
pub mod oracle;
pub mod stateset;

pub use hdmas_presburger as presburger;
pub use stateset::StateSet;
