//! Verification library for descent theory over finite locales.
//!
//! The library works with finite posets, finite frames of open sets, and
//! truncated simplicial sets, and provides executable checks for the facts
//! connecting them: whether a poset-indexed diagram of opens is an atlas,
//! whether a labeled simplicial object is a hypercover, and whether a
//! set-valued sheaf satisfies descent along a diagram. Everything is
//! brute-force checkable at desk scale; every checker that can fail
//! produces a concrete counterexample certificate.
//!
//! All values are immutable after construction and every operation is a
//! pure function, so the whole API is safe to use from multiple threads.

pub mod corpus;
pub mod descent;
pub mod hypercover;
pub mod lifting;
pub mod nerve;
pub mod order;
pub mod semirep;
pub mod simplicial;
