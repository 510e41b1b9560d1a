//! Forwarders for asynchronous multiparty sessions: annotated linear-logic types,
//! forwarder checking and synthesis, multiparty compatibility, and composition by cut elimination.

pub mod checker;
pub mod compat;
pub mod contexts;
pub mod cutelim;
pub mod mcut;
pub mod syntax;
