//! Growth analysis for weighted sums over dyadic scales.
//!
//! A [`Problem`] is a sum of a product of power-law factors over integer exponents
//! `k` of dyadic variables `2^k`, restricted by comparability constraints and indexed by
//! one parameter `N`. [`verdict`] decides whether the sum stays bounded as `N` grows,
//! using exact elimination in log space and a truncated numeric evaluation as a cross-check.
//!
//! ```
//! use dyadsum::dsl::parse_problem;
//! use dyadsum::verdict::{verdict, Classification, EngineConfig};
//!
//! let p = parse_problem("param N\nvar A B\nsum A\nwhere A <~ B\nwhere B ~ N\n").unwrap();
//! let v = verdict(&p, &EngineConfig::default()).unwrap();
//! assert_eq!(v.classification, Classification::Unbounded);
//! assert_eq!(v.exponent_text(), "1");
//! ```

pub mod cases;
pub mod constraints;
pub mod dsl;
pub mod expr;
pub mod numeric;
pub mod problem;
pub mod rational;
pub mod reducer;
pub mod repl;
pub mod report;
pub mod verdict;

pub use constraints::{Constraint, LinearIneq, LogRegion, Relation, SlackConfig};
pub use expr::{DyadicVar, Exponent, Factor, Monomial, Summand, VarRole};
pub use problem::Problem;
pub use rational::Rational;
pub use verdict::{verdict, Classification, Engine, EngineConfig, GrowthVerdict};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dyadic-sums.md")]
    mod dyadic_sums {}
    #[doc = include_str!("../../../book/src/constraints.md")]
    mod constraints {}
    #[doc = include_str!("../../../book/src/splitting.md")]
    mod splitting {}
    #[doc = include_str!("../../../book/src/elimination.md")]
    mod elimination {}
    #[doc = include_str!("../../../book/src/numeric.md")]
    mod numeric {}
    #[doc = include_str!("../../../book/src/verdicts.md")]
    mod verdicts {}
    #[doc = include_str!("../../../book/src/problem-files.md")]
    mod problem_files {}
    #[doc = include_str!("../../../book/src/refinement.md")]
    mod refinement {}
    #[doc = include_str!("../../../book/src/estimates.md")]
    mod estimates {}
}
