//! Counting conjunctive queries over DL-Lite knowledge bases.
//!
//! A certain answer under count semantics pairs a binding of the answer
//! variables with the largest number of matches that every model of the
//! knowledge base is guaranteed to produce. The crate offers several engines
//! for that number: evaluation over the restricted chase, a rewriting into an
//! aggregate query language run directly over the ABox, a merge-minimisation
//! search for positive dialects, and a bounded brute-force oracle.
//!
//! ```
//! use litecount::{certain, cq::ConjunctiveQuery, kb::KB};
//!
//! let kb = KB::parse(
//!     "A sub >=2 P1\nexists P1- sub >=3 P2\n",
//!     "A(a)\nP1(a,b)\nP2(b,d)\nP2(b,e)\n",
//! ).unwrap();
//! let q = ConjunctiveQuery::parse("q(x) :- A(x), P1(x,y1), P2(y1,y2).").unwrap();
//! let answers = certain::certcount_rewrite(&kb, &q).unwrap();
//! assert_eq!(answers[0].count, 6);
//! ```

pub mod certain;
pub mod cq;
pub mod error;
pub mod focount;
mod index;
pub mod interp;
pub mod kb;
pub mod random;
pub mod reductions;
pub mod rewrite;

pub use error::{Error, Result};
