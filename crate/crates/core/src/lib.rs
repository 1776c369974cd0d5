//! Compile probabilistic action descriptions into POMDPs.
//!
//! The pipeline is `lang` (parse, ground, expand) → `translate` (timed ground
//! program) → `engine` (exact stable-model inference) → `builder` (the POMDP)
//! → `io` / `solver` / `sim`.
//!
//! ```
//! use pbcp::{builder, corpus, lang};
//!
//! let d = lang::load(corpus::TIGER).unwrap();
//! let m = builder::build_naive(&d, 0.9).unwrap();
//! assert_eq!((m.states.len(), m.actions.len(), m.observations.len()), (6, 5, 16));
//! ```

pub mod builder;
pub mod corpus;
pub mod engine;
pub mod io;
pub mod lang;
pub mod prob;
pub mod sim;
pub mod solver;
pub mod translate;

#[cfg(doctest)]
mod book;

pub use builder::PomdpModel;
pub use engine::{Interpretation, WeightedModel};
pub use lang::ActionDescription;
pub use prob::Prob;
pub use translate::GroundProgram;

