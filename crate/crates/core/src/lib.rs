//! Acceptance-test artifact generation for convention-following Flutter
//! code bases.
//!
//! The pipeline takes an issue record and a change set, analyses the Dart
//! source tree statically, and emits three artifact kinds: Gherkin feature
//! files, page-object classes and UI test classes. Generative steps go
//! through a [`llm::Provider`], which ships with a deterministic stub and a
//! record/replay harness so runs are reproducible.

pub mod dart;
pub mod depgraph;
pub mod diagnostics;
pub mod gherkin;
pub mod ingest;
pub mod llm;
pub mod navmap;
pub mod pageobject;
pub mod pipeline;
pub mod template;
pub mod uitest;

pub use diagnostics::{Diagnostic, Severity};
