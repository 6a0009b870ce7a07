//! Exact computation of injectively stabilized tensor products `A ⊗̃ B` of
//! finitely presented modules over ℤ and ℤ/m, their asymptotic towers, and the
//! comparison maps to Tor and to Vogel chains.

pub mod chase;
pub mod gen;
pub mod injective;
pub mod linalg;
pub mod module;
pub mod resolution;
pub mod stable;
pub mod vogel;
