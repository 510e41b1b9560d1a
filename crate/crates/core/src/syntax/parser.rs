use std::collections::BTreeMap;

use super::lexer::{lex, Tok, Token};
use super::process::{MCutTerm, Process};
use super::types::{Endpoint, Targets, Type};
use super::ParseError;
use crate::contexts::{CllContext, ContextEntry, Queue, QueueItem, Typing, TypingContext};

const KEYWORDS: &[&str] = &["close", "wait", "inl", "inr", "case", "nu", "mcut", "bot"];

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub types: BTreeMap<String, Type>,
    pub procs: BTreeMap<String, Process>,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            types: BTreeMap::new(),
            procs: BTreeMap::new(),
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, expected: &[&str]) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    pub fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == w)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{s}`")]))
        }
    }

    pub fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.at_word(w) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{w}`")]))
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    pub fn endpoint(&mut self) -> Result<Endpoint, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Endpoint::new(&s))
            }
            _ => Err(self.error(&["endpoint"])),
        }
    }

    pub fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn targets(&mut self) -> Result<Targets, ParseError> {
        let mut out = Targets::new();
        if !self.eat_sym("{") {
            return Ok(out);
        }
        if self.eat_sym("}") {
            return Ok(out);
        }
        loop {
            out.insert(self.endpoint()?);
            if self.eat_sym("}") {
                return Ok(out);
            }
            if !self.eat_sym(",") {
                return Err(self.error(&["`,`", "`}`"]));
            }
        }
    }

    fn target(&mut self) -> Result<Option<Endpoint>, ParseError> {
        let save = self.pos;
        let t = self.targets()?;
        if t.len() > 1 {
            self.pos = save;
            return Err(self.error(&["a single target"]));
        }
        Ok(t.into_iter().next())
    }

    pub fn ty(&mut self) -> Result<Type, ParseError> {
        let left = self.unary()?;
        let b = |t: Type| Box::new(t);
        if self.eat_sym("*") {
            let t = self.targets()?;
            Ok(Type::Tensor(b(left), b(self.ty()?), t))
        } else if self.eat_sym("|") {
            let t = self.target()?;
            Ok(Type::Par(b(left), b(self.ty()?), t))
        } else if self.eat_sym("+") {
            let t = self.target()?;
            Ok(Type::Plus(b(left), b(self.ty()?), t))
        } else if self.eat_sym("&") {
            let t = self.targets()?;
            Ok(Type::With(b(left), b(self.ty()?), t))
        } else {
            Ok(left)
        }
    }

    fn unary(&mut self) -> Result<Type, ParseError> {
        if self.eat_sym("!") {
            let t = self.targets()?;
            return Ok(Type::OfCourse(Box::new(self.unary()?), t));
        }
        if self.eat_sym("?") {
            let t = self.target()?;
            return Ok(Type::WhyNot(Box::new(self.unary()?), t));
        }
        if self.eat_sym("~") {
            let a = self.ident()?;
            return Ok(Type::dual_atom(&a));
        }
        if self.eat_sym("1") {
            return Ok(Type::One(self.targets()?));
        }
        if self.eat_sym("(") {
            let t = self.ty()?;
            self.expect_sym(")")?;
            return Ok(t);
        }
        if self.eat_sym("@") {
            let name = self.ident()?;
            return self.types.get(&name).cloned().ok_or_else(|| self.error(&["a defined type name"]));
        }
        match self.peek().clone() {
            Tok::Ident(s) if s == "bot" => {
                self.bump();
                Ok(Type::Bot(self.target()?))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Type::atom(&s))
            }
            _ => Err(self.error(&["type"])),
        }
    }

    pub fn process(&mut self) -> Result<Process, ParseError> {
        let b = |p: Process| Box::new(p);
        if self.eat_sym("(") {
            if self.at_word("nu") {
                self.bump();
                let x = self.endpoint()?;
                let y = self.endpoint()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                self.expect_sym(")")?;
                self.expect_sym("(")?;
                let left = self.process()?;
                self.expect_sym("|")?;
                let right = self.process()?;
                self.expect_sym(")")?;
                return Ok(Process::Cut {
                    x,
                    y,
                    ty,
                    left: b(left),
                    right: b(right),
                });
            }
            let p = self.process()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        if self.eat_sym("@") {
            let name = self.ident()?;
            return self
                .procs
                .get(&name)
                .cloned()
                .ok_or_else(|| self.error(&["a defined process name"]));
        }
        if self.eat_sym("!") {
            let x = self.endpoint()?;
            self.expect_sym("(")?;
            let y = self.endpoint()?;
            self.expect_sym(")")?;
            self.expect_sym(".")?;
            return Ok(Process::Server(x, y, b(self.process()?)));
        }
        if self.eat_sym("?") {
            let x = self.endpoint()?;
            self.expect_sym("[")?;
            let y = self.endpoint()?;
            self.expect_sym("]")?;
            self.expect_sym(".")?;
            return Ok(Process::Client(x, y, b(self.process()?)));
        }
        let word = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return Err(self.error(&["process"])),
        };
        match word.as_str() {
            "close" => {
                self.bump();
                Ok(Process::Close(self.endpoint()?))
            }
            "wait" | "inl" | "inr" => {
                self.bump();
                let x = self.endpoint()?;
                self.expect_sym(";")?;
                let p = b(self.process()?);
                Ok(match word.as_str() {
                    "wait" => Process::Wait(x, p),
                    "inl" => Process::Inl(x, p),
                    _ => Process::Inr(x, p),
                })
            }
            "case" => {
                self.bump();
                let x = self.endpoint()?;
                self.expect_sym("{")?;
                self.expect_word("inl")?;
                self.expect_sym(":")?;
                let l = self.process()?;
                self.expect_sym(";")?;
                self.expect_word("inr")?;
                self.expect_sym(":")?;
                let r = self.process()?;
                self.expect_sym("}")?;
                Ok(Process::Case(x, b(l), b(r)))
            }
            "mcut" => {
                self.bump();
                self.mcut()
            }
            _ => {
                let x = self.endpoint()?;
                if self.eat_sym("<->") {
                    return Ok(Process::Link(x, self.endpoint()?));
                }
                if self.eat_sym("[") {
                    let y = self.endpoint()?;
                    self.expect_sym("]")?;
                    self.expect_sym(".")?;
                    self.expect_sym("(")?;
                    let p = self.process()?;
                    self.expect_sym("|")?;
                    let q = self.process()?;
                    self.expect_sym(")")?;
                    return Ok(Process::Send(x, y, b(p), b(q)));
                }
                if self.eat_sym("(") {
                    let y = self.endpoint()?;
                    self.expect_sym(")")?;
                    self.expect_sym(".")?;
                    return Ok(Process::Recv(x, y, b(self.process()?)));
                }
                Err(self.error(&["`<->`", "`[`", "`(`"]))
            }
        }
    }

    // mcut [x1, x2] (F) [y <| P, ...] (R1 | R2)
    fn mcut(&mut self) -> Result<Process, ParseError> {
        self.expect_sym("[")?;
        let mut bound = Vec::new();
        while !self.eat_sym("]") {
            bound.push(self.endpoint()?);
            if !self.at_sym("]") {
                self.expect_sym(",")?;
            }
        }
        self.expect_sym("(")?;
        let fwd = self.process()?;
        self.expect_sym(")")?;
        self.expect_sym("[")?;
        let mut pending = Vec::new();
        while !self.eat_sym("]") {
            let y = self.endpoint()?;
            self.expect_sym("<|")?;
            pending.push((y, self.process()?));
            if !self.at_sym("]") {
                self.expect_sym(",")?;
            }
        }
        self.expect_sym("(")?;
        let mut parts = Vec::new();
        if !self.eat_sym(")") {
            loop {
                parts.push(self.process()?);
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym("|")?;
            }
        }
        Ok(Process::MCut(Box::new(MCutTerm {
            bound,
            fwd,
            pending,
            parts,
        })))
    }

    fn queue_item(&mut self) -> Result<QueueItem, ParseError> {
        self.expect_sym("[")?;
        self.expect_word("to")?;
        self.expect_sym("=")?;
        let target = self.endpoint()?;
        let item = if self.at_word("msg") {
            self.bump();
            let mut payload = Vec::new();
            loop {
                let v = self.endpoint()?;
                self.expect_sym(":")?;
                payload.push((v, self.ty()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
            QueueItem::Msg { target, payload }
        } else if self.eat_sym("*") {
            QueueItem::Star(target)
        } else if self.eat_sym("?") {
            QueueItem::Query(target)
        } else if self.at_word("L") {
            self.bump();
            QueueItem::Left(target)
        } else if self.at_word("R") {
            self.bump();
            QueueItem::Right(target)
        } else {
            return Err(self.error(&["`msg`", "`*`", "`L`", "`R`", "`?`"]));
        };
        self.expect_sym("]")?;
        Ok(item)
    }

    fn at_context_end(&self) -> bool {
        matches!(self.peek(), Tok::Eof) || self.at_sym(";") || self.at_sym(")") || self.at_sym("}")
    }

    pub fn context(&mut self) -> Result<TypingContext, ParseError> {
        let mut entries = Vec::new();
        if self.at_context_end() {
            return Ok(TypingContext { entries });
        }
        loop {
            let endpoint = self.endpoint()?;
            self.expect_sym(":")?;
            let typing = if self.eat_sym(".") {
                Typing::Terminated
            } else {
                Typing::Active(self.ty()?)
            };
            let mut items = Vec::new();
            while self.at_sym("[") {
                items.push(self.queue_item()?);
            }
            entries.push(ContextEntry {
                endpoint,
                queue: Queue::new(items),
                typing,
            });
            if !self.eat_sym(",") {
                return Ok(TypingContext { entries });
            }
        }
    }

    pub fn cll_context(&mut self) -> Result<CllContext, ParseError> {
        let mut out = Vec::new();
        if self.at_context_end() {
            return Ok(out);
        }
        loop {
            let e = self.endpoint()?;
            self.expect_sym(":")?;
            out.push((e, self.ty()?));
            if !self.eat_sym(",") {
                return Ok(out);
            }
        }
    }
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.process()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_context(src: &str) -> Result<TypingContext, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.context()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_cll_context(src: &str) -> Result<CllContext, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.cll_context()?;
    p.finish()?;
    Ok(t)
}
