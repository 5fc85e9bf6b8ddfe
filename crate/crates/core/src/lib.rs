//! Evaluation harness for fact-checking with text-generation models.
//!
//! The crate covers the whole pipeline: building a labeled claim sample from
//! a fact-check feed ([`corpus`]), fetching and extracting article text
//! ([`fetch`]), composing prompts from modular templates ([`prompt`]), talking
//! to generation endpoints ([`llm`]), retrieving evidence ([`retrieval`]),
//! running one-action ReAct episodes ([`agent`]), turning raw model output
//! into verdicts ([`verdict`]), scoring runs ([`eval`]) and orchestrating
//! resumable task runs ([`runner`]).

pub mod agent;
pub mod corpus;
pub mod eval;
pub mod fetch;
mod limit;
pub mod llm;
pub mod prompt;
pub mod retrieval;
pub mod runner;
pub mod seed;
pub mod testkit;
pub mod verdict;

pub use corpus::{ClaimRecord, VerdictLabel};
pub use eval::EvalReport;
pub use llm::{GenerationParams, GenerationResult};
pub use prompt::{Approach, PromptSpec, RenderedPrompt, Task};
pub use retrieval::{Evidence, EvidenceFormat, SearchResult, SourceKind};
pub use verdict::{FaultReason, VerdictResponse};
