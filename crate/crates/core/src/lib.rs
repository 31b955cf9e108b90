//! Decision procedures and order-theoretic structure for free Heyting
//! algebras over finitely many propositional variables.
//!
//! The library decides intuitionistic entailment, decomposes formulas into
//! join-irreducible components, classifies join-irreducibles into strata,
//! and constructs witness formulas inside a universal Kripke model built
//! level by level.

pub mod bits;
pub mod budget;
pub mod dejongh;
pub mod formula;
pub mod prover;
pub mod semantics;
pub mod structure;
pub mod universal;
