//! Numerical laboratory for the solvability of coercive elliptic equations
//! `Δu = f(u) ± g(|∇u|)` (and Pucci-operator generalizations) on all of ℝᴺ.
//!
//! The library answers one question — does a given problem admit a positive
//! entire solution? — along two independent routes:
//!
//! * **Integral criteria** ([`criteria`]): improper-integral convergence tests
//!   on `f`, `g` and derived maps (the Keller–Osserman integral, its gradient
//!   analogue, and the `Γ⁻¹∘F` / `g⁻¹∘f` calibrations for the minus sign),
//!   decided symbolically on the power-log grammar and by tail heuristics
//!   otherwise.
//! * **Constructive evidence**: radial shooting of the associated singular
//!   Cauchy problems with blow-up detection ([`shoot`]), and an explosive
//!   supersolution construction for the minus-sign nonexistence mechanism
//!   ([`supersol`]).
//!
//! [`classify`] combines the criteria into Existence / Nonexistence /
//! Undetermined verdicts with the clauses that fired, and cross-validates
//! them against the constructive route. [`cli`] exposes everything as a
//! command-line tool with deterministic JSON/CSV outputs.

pub mod classify;
pub mod cli;
pub mod config;
pub mod criteria;
pub mod nonlin;
pub mod report;
pub mod shoot;
pub mod supersol;


pub use nonlin::NonlinearitySpec;

