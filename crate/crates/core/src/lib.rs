//! Stream-decodable error-correcting codes.
//!
//! A stream code is decoded by reading the corrupted codeword once, left to right, with
//! bounded state. This crate provides the field and code toolkit, two locally decodable codes,
//! two stream codecs built on them (a repetition scheme for messages and a tensor-power scheme
//! for linear functions), an adversarial channel, and an experiment layer.

pub mod channel;
pub mod codec_repeat;
pub mod codec_tensor;
pub mod codes;
pub mod curves;
pub mod experiment;
pub mod gf;
pub mod ldc_binary;
pub mod ldc_large;
pub mod profile;
pub mod stream;

pub use channel::{corrupt, AttackStrategy, Corruption, ErrorBudget};
pub use codec_repeat::{RepeatCodec, RepeatError, RepeatParams, RepeatRun, Threshold};
pub use codec_tensor::{LinearFunctional, TensorCodec, TensorError, TensorParams, TensorRun};
pub use codes::{CodeError, CodeKind, LinearCode, Symbol};
pub use experiment::{run_experiment, verify_code_tables, Report, TablesReport};
pub use gf::{FieldSpec, Poly};
pub use ldc_binary::{BinaryLdc, BinaryLdcParams, Confidence, LdcError, Target};
pub use ldc_large::{ConfidenceDist, LargeLdc, LargeLdcParams, QueryLists};
pub use profile::{Profile, ProfileError};
pub use stream::{MemoryLedger, OutputTape, StreamError, StreamFile, SymbolStream};
