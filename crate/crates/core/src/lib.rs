//! Symbolic regression toolkit: random formula corpora, constant-aware
//! sequence encoding, a compact set-encoder/sequence-decoder network trained
//! from scratch, sampling-based inference with gradient refinement of
//! constants, and a benchmark harness.

pub mod benchmarks;
pub mod corpus;
pub mod encoding;
pub mod metrics;
pub mod eval;
pub mod expr;
pub mod generator;
pub mod normalize;
pub mod points;
pub mod refine;
pub mod util;
pub mod vocab;

pub use encoding::{decode_constant, decode_preorder, encode_constant, encode_preorder};
pub use expr::Expr;
pub use normalize::{complexity, normalize};
pub use points::{accept, sample_points, PointSet, SamplingPolicy};
pub use vocab::{EncodingMode, Vocabulary};
