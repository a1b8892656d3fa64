//! Diversity-based prioritization of metamorphic relations for fairness
//! testing of chat models.
//!
//! The pipeline: annotate a prompt corpus with sensitive attributes
//! ([`corpus`]), derive source/follow-up pairs for each relation ([`mr`]),
//! score how different the follow-ups are ([`diversity`], built on
//! [`analyzers`]), rank the relations ([`prioritizer`]), run the pairs against
//! a model through a record/replay cassette ([`executor`]) and measure how
//! quickly each ordering finds faults ([`evaluation`]).

pub mod analyzers;
pub mod corpus;
pub mod diversity;
pub mod error;
pub mod evaluation;
pub mod executor;
pub mod hashing;
pub mod mr;
pub mod prioritizer;
pub mod text;

pub use corpus::{load_corpus, save_corpus, AttributeSpan, Category, SensitiveAttributeTable, SourceTestCase};
pub use diversity::{DiversityBreakdown, FinalDiversityScore, PairDiversity};
pub use error::{Error, Result};
pub use evaluation::EvalReport;
pub use executor::{Cassette, CassetteMode, DecodingConfig};
pub use mr::{apply_mr, derive_pairs, MrEngine, MrId, TestPair};
pub use prioritizer::{Ordering, OutcomeMatrix, Strategy};
