//! Kashiwara-Vergne machinery for quadratic Lie algebras.
//!
//! Two engines live side by side:
//!
//! * an exact symbolic engine over arbitrary-precision rationals: the free Lie
//!   algebra on two generators in the Lyndon basis ([`free_lie`]), the
//!   Campbell-Hausdorff series, formal traces of ad-words as necklaces
//!   ([`cyclic`]) and a degreewise solver for the KV equations ([`kv`]);
//! * a numerical engine for concrete matrix Lie algebras ([`matrix_lie`],
//!   [`linalg`]) that builds the product Kirillov Poisson structure, the
//!   gauge 2-form, the Moser vector field and its flow, and extracts the
//!   pair `(A, B)` pointwise ([`poisson`], [`flow`]).
//!
//! [`report`] runs seeded sample sweeps and assembles the JSON reports used by
//! the `kvgeom` command-line tool.

pub mod assoc;
pub mod bch_cache;
pub mod cli;
pub mod cyclic;
pub mod error;
pub mod flow;
pub mod free_lie;
pub mod kv;
pub mod linalg;
pub mod matrix_lie;
pub mod poisson;
pub mod quadrature;
pub mod rational;
pub mod report;
pub mod word;

pub use error::{KvError, Result};
pub use free_lie::{bch, BchOrder, Generator, LieSeries};
pub use matrix_lie::{PointV, QuadraticLieAlgebra};
pub use rational::Rational;
pub use word::Word;
/// Re-exported so downstream crates build vectors against the same version.
pub use nalgebra;
