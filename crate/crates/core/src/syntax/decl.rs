//! Declaration files: named types and processes plus jobs for the command line.

use std::fmt::{self, Display, Formatter};

use super::lexer::Tok;
use super::parser::Parser;
use super::process::Process;
use super::types::{Endpoint, Type};
use super::ParseError;
use crate::contexts::{CllContext, TypingContext};
use crate::syntax::print::print_cll_context;

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Type(String, Type),
    Proc(String, Process),
    /// Forwarder judgement.
    Check(Process, TypingContext),
    /// CP judgement.
    Cll(Process, CllContext),
    Synth(TypingContext),
    Annotate(CllContext),
    Compat(CllContext),
    Cut(CutJob),
    Sim(StateDecl),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutJob {
    pub x: Endpoint,
    pub left: Process,
    pub left_ctx: TypingContext,
    pub y: Endpoint,
    pub right: Process,
    pub right_ctx: TypingContext,
}

/// Textual form of a multiparty composition state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDecl {
    pub fwd: Process,
    pub fwd_ctx: TypingContext,
    pub parts: Vec<(Endpoint, Process, CllContext)>,
    pub pending: Vec<(Endpoint, Process, CllContext)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Located {
    pub line: usize,
    pub decl: Decl,
}

#[derive(Clone, Debug, Default)]
pub struct DeclarationFile {
    pub decls: Vec<Located>,
}

impl DeclarationFile {
    pub fn parse(src: &str) -> Result<DeclarationFile, ParseError> {
        let mut p = Parser::new(src)?;
        let mut decls = Vec::new();
        while *p.peek() != Tok::Eof {
            let line = p.line();
            let decl = p.decl()?;
            p.expect_sym(";")?;
            decls.push(Located { line, decl });
        }
        Ok(DeclarationFile { decls })
    }
}

impl Parser {
    pub fn line(&self) -> usize {
        self.current_line()
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        let word = self.ident()?;
        match word.as_str() {
            "type" => {
                let name = self.ident()?;
                if self.types.contains_key(&name) {
                    return Err(self.error(&["a fresh type name"]));
                }
                self.expect_sym("=")?;
                let t = self.ty()?;
                self.types.insert(name.clone(), t.clone());
                Ok(Decl::Type(name, t))
            }
            "proc" => {
                let name = self.ident()?;
                if self.procs.contains_key(&name) {
                    return Err(self.error(&["a fresh process name"]));
                }
                self.expect_sym("=")?;
                let proc = self.process()?;
                self.procs.insert(name.clone(), proc.clone());
                Ok(Decl::Proc(name, proc))
            }
            "check" => {
                let proc = self.process()?;
                self.expect_sym("|-")?;
                Ok(Decl::Check(proc, self.context()?))
            }
            "cll" => {
                let proc = self.process()?;
                self.expect_sym("|-")?;
                Ok(Decl::Cll(proc, self.cll_context()?))
            }
            "synth" => Ok(Decl::Synth(self.context()?)),
            "annotate" => Ok(Decl::Annotate(self.cll_context()?)),
            "compat" => Ok(Decl::Compat(self.cll_context()?)),
            "cut" => {
                let x = self.endpoint()?;
                self.expect_word("in")?;
                let left = self.process()?;
                self.expect_sym("|-")?;
                let left_ctx = self.context()?;
                self.expect_word("with")?;
                let y = self.endpoint()?;
                self.expect_word("in")?;
                let right = self.process()?;
                self.expect_sym("|-")?;
                let right_ctx = self.context()?;
                Ok(Decl::Cut(CutJob {
                    x,
                    left,
                    left_ctx,
                    y,
                    right,
                    right_ctx,
                }))
            }
            "sim" => Ok(Decl::Sim(self.state()?)),
            _ => Err(self.error(&[
                "`type`",
                "`proc`",
                "`check`",
                "`cll`",
                "`synth`",
                "`annotate`",
                "`compat`",
                "`cut`",
                "`sim`",
            ])),
        }
    }

    /// `{ fwd F |- ctx; part x = R |- ctx; pending y = P |- ctx; }`
    pub fn state(&mut self) -> Result<StateDecl, ParseError> {
        self.expect_sym("{")?;
        self.expect_word("fwd")?;
        let fwd = self.process()?;
        self.expect_sym("|-")?;
        let fwd_ctx = self.context()?;
        self.expect_sym(";")?;
        let mut parts = Vec::new();
        let mut pending = Vec::new();
        while !self.eat_sym("}") {
            let kind = self.ident()?;
            let e = self.endpoint()?;
            self.expect_sym("=")?;
            let proc = self.process()?;
            self.expect_sym("|-")?;
            let ctx = self.cll_context()?;
            self.expect_sym(";")?;
            match kind.as_str() {
                "part" => parts.push((e, proc, ctx)),
                "pending" => pending.push((e, proc, ctx)),
                _ => return Err(self.error(&["`part`", "`pending`"])),
            }
        }
        Ok(StateDecl {
            fwd,
            fwd_ctx,
            parts,
            pending,
        })
    }
}

pub fn parse_state(src: &str) -> Result<StateDecl, ParseError> {
    let mut p = Parser::new(src)?;
    let s = p.state()?;
    p.finish()?;
    Ok(s)
}

impl Display for StateDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "{{")?;
        writeln!(f, "  fwd {} |- {};", self.fwd, self.fwd_ctx)?;
        for (e, p, ctx) in &self.parts {
            writeln!(f, "  part {e} = {p} |- {};", print_cll_context(ctx))?;
        }
        for (e, p, ctx) in &self.pending {
            writeln!(f, "  pending {e} = {p} |- {};", print_cll_context(ctx))?;
        }
        write!(f, "}}")
    }
}

impl Display for Decl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Decl::Type(n, t) => write!(f, "type {n} = {t}"),
            Decl::Proc(n, p) => write!(f, "proc {n} = {p}"),
            Decl::Check(p, g) => write!(f, "check {p} |- {g}"),
            Decl::Cll(p, d) => write!(f, "cll {p} |- {}", print_cll_context(d)),
            Decl::Synth(g) => write!(f, "synth {g}"),
            Decl::Annotate(d) => write!(f, "annotate {}", print_cll_context(d)),
            Decl::Compat(d) => write!(f, "compat {}", print_cll_context(d)),
            Decl::Cut(j) => write!(
                f,
                "cut {} in {} |- {} with {} in {} |- {}",
                j.x, j.left, j.left_ctx, j.y, j.right, j.right_ctx
            ),
            Decl::Sim(s) => write!(f, "sim {s}"),
        }
    }
}

impl Display for DeclarationFile {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for d in &self.decls {
            writeln!(f, "{};", d.decl)?;
        }
        Ok(())
    }
}
