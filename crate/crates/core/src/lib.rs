//! A knowledge base of semantically typed statements: reference schemas,
//! a term hub, versioned statements, crosswalks to external formats,
//! questions as statements and human-readable renderings.

pub mod crosswalk;
pub mod display;
pub mod error;
pub mod fixtures;
pub mod kb;
pub mod model;
pub mod persist;
pub mod query;
pub mod schema;
pub mod store;
pub mod terms;

pub use error::{Error, ErrorClass, Result};
pub use kb::{KbConfig, KbState, KnowledgeBase, StatementRequest};
pub use model::{Datatype, LiteralValue, Resource, ResourceKind, Upri, Value};
