use std::fmt::{self, Display, Formatter, Write};

use super::process::Process;
use super::types::{Endpoint, Targets, Type};
use crate::contexts::{ContextEntry, QueueItem, Typing, TypingContext};

fn write_set(f: &mut Formatter<'_>, t: &Targets) -> fmt::Result {
    if t.is_empty() {
        return Ok(());
    }
    f.write_char('{')?;
    for (i, e) in t.iter().enumerate() {
        if i > 0 {
            f.write_char(',')?;
        }
        write!(f, "{e}")?;
    }
    f.write_char('}')
}

fn write_one(f: &mut Formatter<'_>, t: &Option<Endpoint>) -> fmt::Result {
    match t {
        Some(e) => write!(f, "{{{e}}}"),
        None => Ok(()),
    }
}

fn is_binary(t: &Type) -> bool {
    matches!(t, Type::Tensor(..) | Type::Par(..) | Type::Plus(..) | Type::With(..))
}

fn write_operand(f: &mut Formatter<'_>, t: &Type) -> fmt::Result {
    if is_binary(t) {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}

impl Display for Type {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Type::Atom(a) => write!(f, "{a}"),
            Type::DualAtom(a) => write!(f, "~{a}"),
            Type::One(t) => {
                f.write_char('1')?;
                write_set(f, t)
            }
            Type::Bot(t) => {
                f.write_str("bot")?;
                write_one(f, t)
            }
            Type::Tensor(a, b, t) => {
                write_operand(f, a)?;
                f.write_str(" *")?;
                write_set(f, t)?;
                write!(f, " {b}")
            }
            Type::Par(a, b, t) => {
                write_operand(f, a)?;
                f.write_str(" |")?;
                write_one(f, t)?;
                write!(f, " {b}")
            }
            Type::Plus(a, b, t) => {
                write_operand(f, a)?;
                f.write_str(" +")?;
                write_one(f, t)?;
                write!(f, " {b}")
            }
            Type::With(a, b, t) => {
                write_operand(f, a)?;
                f.write_str(" &")?;
                write_set(f, t)?;
                write!(f, " {b}")
            }
            Type::OfCourse(a, t) => {
                f.write_char('!')?;
                write_set(f, t)?;
                if !t.is_empty() {
                    f.write_char(' ')?;
                }
                write_operand(f, a)
            }
            Type::WhyNot(a, t) => {
                f.write_char('?')?;
                write_one(f, t)?;
                if t.is_some() {
                    f.write_char(' ')?;
                }
                write_operand(f, a)
            }
        }
    }
}

impl Display for Process {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Process::Link(x, y) => write!(f, "{x}<->{y}"),
            Process::Close(x) => write!(f, "close {x}"),
            Process::Wait(x, p) => write!(f, "wait {x}; {p}"),
            Process::Send(x, y, p, q) => write!(f, "{x}[{y}].({p} | {q})"),
            Process::Recv(x, y, p) => write!(f, "{x}({y}). {p}"),
            Process::Inl(x, p) => write!(f, "inl {x}; {p}"),
            Process::Inr(x, p) => write!(f, "inr {x}; {p}"),
            Process::Case(x, p, q) => write!(f, "case {x} {{inl: {p}; inr: {q}}}"),
            Process::Server(x, y, p) => write!(f, "!{x}({y}). {p}"),
            Process::Client(x, y, p) => write!(f, "?{x}[{y}]. {p}"),
            Process::Cut { x, y, ty, left, right } => write!(f, "(nu {x} {y} : {ty})({left} | {right})"),
            Process::MCut(m) => {
                f.write_str("mcut [")?;
                for (i, b) in m.bound.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{b}")?;
                }
                write!(f, "] ({}) [", m.fwd)?;
                for (i, (y, p)) in m.pending.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{y} <| {p}")?;
                }
                f.write_str("] (")?;
                for (i, p) in m.parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_char(')')
            }
        }
    }
}

impl Display for QueueItem {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            QueueItem::Msg { target, payload } => {
                write!(f, "[to={target} msg ")?;
                for (i, (v, t)) in payload.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}: {t}")?;
                }
                f.write_char(']')
            }
            QueueItem::Star(t) => write!(f, "[to={t} *]"),
            QueueItem::Query(t) => write!(f, "[to={t} ?]"),
            QueueItem::Left(t) => write!(f, "[to={t} L]"),
            QueueItem::Right(t) => write!(f, "[to={t} R]"),
        }
    }
}

impl Display for ContextEntry {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} : ", self.endpoint)?;
        match &self.typing {
            Typing::Active(t) => write!(f, "{t}")?,
            Typing::Terminated => f.write_char('.')?,
        }
        for item in &self.queue.items {
            write!(f, " {item}")?;
        }
        Ok(())
    }
}

impl Display for TypingContext {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

pub fn print_type(t: &Type) -> String {
    t.to_string()
}

pub fn print_process(p: &Process) -> String {
    p.to_string()
}

pub fn print_cll_context(ctx: &[(Endpoint, Type)]) -> String {
    ctx.iter().map(|(e, t)| format!("{e} : {t}")).collect::<Vec<_>>().join(", ")
}
