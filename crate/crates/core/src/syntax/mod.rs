//! Types, process terms, the surface grammar and its printer.

pub mod decl;
mod lexer;
mod parser;
mod print;
mod process;
mod types;

use thiserror::Error;

pub use parser::{parse_cll_context, parse_context, parse_process, parse_type, Parser};
pub use print::{print_cll_context, print_process, print_type};
pub use process::{MCutTerm, Process};
pub use types::{fresh_name, Conn, Endpoint, Path, Targets, Type};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl Parser {
    fn current_line(&self) -> usize {
        self.error(&[]).line
    }
}
