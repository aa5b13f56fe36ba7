//! Finite approximations of idempotent ultrafilters on ℕ.
//!
//! The crate builds filters of the form `FFS((x_i))` (sets containing a tail
//! finite-sum set of a generator sequence), decides membership within a
//! finite horizon, refines filters with an exact iterated Hindman solver and
//! runs an oracle-elimination pass that replaces an idempotent-ultrafilter
//! oracle in a small program language by an explicitly constructed filter.

pub mod axioms;
pub mod catalog;
pub mod cli;
pub mod eliminate;
pub mod error;
pub mod eval;
pub mod expr;
pub mod filter;
pub mod hindman;
pub mod parse;
pub mod sets;
pub mod summable;

pub use error::Error;
pub use expr::{Goal, NumExpr, Pred, Program, ProgramTerm, SetExpr};
pub use filter::{FfsFilter, Verdict};
pub use sets::{AscendingSeq, BlockSum, BoundedSet, Horizon};
