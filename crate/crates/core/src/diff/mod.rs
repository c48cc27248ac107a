//! Reverse-accumulation gradients over scalar computations.
//!
//! Numeric code in this crate is written once against the [`Real`] trait and
//! runs on plain `f64`, on tape variables ([`Var`]) for reverse-mode
//! gradients, or on forward-mode [`Dual`] numbers. All three share the same
//! `f64` primitive implementations, so tape values are bit-identical to direct
//! evaluation.
//!
//! ```
//! use contpid::diff::{Real, Tape};
//!
//! let tape = Tape::new();
//! let x = tape.var(0.3);
//! let y = x.tanh() * 2.0;
//! let grads = tape.backward(y);
//! let t = 0.3f64.tanh();
//! assert!((grads.wrt(x) - 2.0 * (1.0 - t * t)).abs() < 1e-15);
//! ```

mod dual;
mod real;
mod tape;

pub use dual::Dual;
pub use real::Real;
pub use tape::{gradient_of, Adjoints, Tape, Var};
