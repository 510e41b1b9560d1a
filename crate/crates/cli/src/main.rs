//! `fwd`: batch front end over declaration files.

use std::io::{IsTerminal, Read};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use forwarders::checker::{check_cll, check_forwarder, synth_forwarder, synth_with_annotations, Action, Rule};
use forwarders::compat::Explorer;
use forwarders::contexts::{config_from_context, translate_config, CllContext};
use forwarders::cutelim::{reduce_cut, CutRedex, Judged};
use forwarders::mcut::{mcutq_step, run_mcut, Branch, MCutConfig, StepOutcome};
use forwarders::syntax::decl::{Decl, DeclarationFile};

const GRAMMAR: &str = "\
Declaration files hold `;`-terminated declarations; `//` starts a comment.

  type N = T;                          named type, referenced later as @N
  proc N = P;                          named process, referenced later as @N
  check P |- G;                        forwarder judgement (annotated context)
  cll P |- D;                          CP judgement (plain context)
  synth G;                             synthesize a forwarder for an annotated context
  annotate D;                          search annotations of D for a forwarder
  compat D;                            multiparty compatibility of D
  cut x in P |- G with y in Q |- H;    eliminate a cut between two forwarders
  sim { fwd F |- G; part x = R |- D; ... pending y = P |- D; };

Types     a  ~a  1{u,..}  bot{u}  A *{u,..} B  A |{u} B  A +{u} B  A &{u,..} B  !{u,..}A  ?{u}A
Processes x<->y  close x  wait x; P  x[y].(P | Q)  x(y). P  inl x; P  inr x; P
          case x {inl: P; inr: Q}  !x(y). P  ?x[y]. P  (nu x y : A)(P | Q)
Contexts  x : A [to=u msg v : T] [to=u *] [to=u L] [to=u R] [to=u ?],  z : . [to=u *]
";

#[derive(Parser)]
#[command(name = "fwd", version, about = "Check, synthesize and compose forwarders for multiparty sessions")]
struct Cli {
    /// One JSON record per line instead of text
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every declaration in canonical form
    Fmt { file: PathBuf },
    /// Check `check` and `cll` judgements
    Check { file: PathBuf },
    /// Run `synth` and `annotate` declarations
    Synth { file: PathBuf },
    /// Decide `compat` declarations; failures come with a stuck path
    Compat { file: PathBuf },
    /// Eliminate `cut` declarations
    Cut {
        file: PathBuf,
        /// Reduce towards every admissible conclusion, not only the first
        #[arg(long)]
        all_gammas: bool,
        /// Step bound for each reduction (default grows with the size of the cut)
        #[arg(long)]
        fuel: Option<usize>,
    },
    /// Run `sim` declarations to completion
    Sim {
        file: PathBuf,
        /// Take one step of the single state in the file and print the resulting state file
        #[arg(long)]
        step: bool,
        /// Step bound for each composition (default grows with the size of the state)
        #[arg(long)]
        fuel: Option<usize>,
    },
}

/// The result of one declaration.
struct Record {
    line: usize,
    kind: &'static str,
    ok: bool,
    text: Vec<String>,
    data: Value,
}

impl Record {
    fn new(line: usize, kind: &'static str, ok: bool) -> Record {
        Record {
            line,
            kind,
            ok,
            text: Vec::new(),
            data: json!({}),
        }
    }

    fn with(mut self, key: &str, v: Value) -> Record {
        self.data[key] = v;
        self
    }

    fn say(mut self, s: impl Into<String>) -> Record {
        self.text.push(s.into());
        self
    }
}

struct Style {
    color: bool,
}

impl Style {
    fn from_env() -> Style {
        let color = match std::env::var("FWD_COLOR").as_deref() {
            Ok("0") => false,
            Ok("1") => true,
            _ => std::io::stdout().is_terminal(),
        };
        Style { color }
    }

    fn verdict(&self, ok: bool) -> String {
        let (word, code) = if ok { ("ok  ", "32") } else { ("FAIL", "31") };
        if self.color {
            format!("\x1b[{code}m{word}\x1b[0m")
        } else {
            word.to_string()
        }
    }
}

fn read(file: &PathBuf) -> Result<String> {
    if file.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading standard input")?;
        return Ok(s);
    }
    std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))
}

fn load(file: &PathBuf) -> Result<DeclarationFile> {
    let src = read(file)?;
    DeclarationFile::parse(&src).map_err(|e| anyhow::anyhow!("{}:{e}", file.display()))
}

fn tags(rules: &[Rule]) -> String {
    rules.iter().map(|r| r.tag()).collect::<Vec<_>>().join(" ")
}

fn show_action(a: &Action) -> String {
    match a {
        Action::Link(x, y) => format!("{x}<->{y}"),
        Action::Close(x) => format!("close {x}"),
        Action::Wait(x) => format!("wait {x}"),
        Action::Recv(x, y) => format!("{x}({y})"),
        Action::Send(x, y) => format!("{x}[{y}]"),
        Action::Inl(x) => format!("inl {x}"),
        Action::Inr(x) => format!("inr {x}"),
        Action::Case(x) => format!("case {x}"),
        Action::Server(x, y) => format!("!{x}({y})"),
        Action::Client(x, y) => format!("?{x}[{y}]"),
    }
}

fn check_decl(line: usize, d: &Decl) -> Option<Record> {
    Some(match d {
        Decl::Check(p, g) => match check_forwarder(p, g) {
            Ok(der) => {
                let rules = der.rule_sequence();
                Record::new(line, "check", true)
                    .say(format!("rules {}", tags(&rules)))
                    .with("rules", json!(tags(&rules)))
            }
            Err(e) => Record::new(line, "check", false)
                .say(e.to_string())
                .with("error", json!(e.to_string())),
        },
        Decl::Cll(p, ctx) => match check_cll(p, ctx) {
            Ok(der) => {
                let rules = der.rule_sequence();
                Record::new(line, "cll", true)
                    .say(format!("rules {}", tags(&rules)))
                    .with("rules", json!(tags(&rules)))
            }
            Err(e) => Record::new(line, "cll", false)
                .say(e.to_string())
                .with("error", json!(e.to_string())),
        },
        _ => return None,
    })
}

fn synth_decl(line: usize, d: &Decl) -> Option<Record> {
    Some(match d {
        Decl::Synth(g) => match synth_forwarder(g) {
            Some(p) => Record::new(line, "synth", true)
                .say(format!("{p}"))
                .with("process", json!(p.to_string())),
            None => Record::new(line, "synth", false).say("no forwarder"),
        },
        Decl::Annotate(ctx) => match synth_with_annotations(ctx) {
            Some((g, p)) => Record::new(line, "annotate", true)
                .say(format!("context {g}"))
                .say(format!("process {p}"))
                .with("context", json!(g.to_string()))
                .with("process", json!(p.to_string())),
            None => Record::new(line, "annotate", false).say("no annotation admits a forwarder"),
        },
        _ => return None,
    })
}

fn compat_decl(line: usize, d: &Decl) -> Option<Record> {
    let Decl::Compat(ctx) = d else { return None };
    let mut ex = Explorer::new();
    if let Some(c) = ex.first_executable_annotation(ctx) {
        let shown = translate_config(&c)
            .map(|g| g.to_string())
            .unwrap_or_else(|_| format!("{:?}", c.delta));
        return Some(
            Record::new(line, "compat", true)
                .say(format!("annotation {shown}"))
                .with("annotation", json!(shown)),
        );
    }
    let dual: CllContext = ctx.iter().map(|(e, t)| (e.clone(), t.dual())).collect();
    let mut rec = Record::new(line, "compat", false);
    let first = forwarders::checker::annotations(&dual).next();
    match first.map(|g| config_from_context(&g)).and_then(|c| ex.stuck_path(&c)) {
        Some((path, end)) => {
            let steps: Vec<String> = path.iter().map(|l| l.to_string()).collect();
            let end = translate_config(&end)
                .map(|g| g.to_string())
                .unwrap_or_else(|_| format!("{:?}", end.delta));
            rec = rec.say(format!("stuck after [{}]", steps.join("; "))).say(format!("at {end}"));
            rec = rec.with("path", json!(steps)).with("stuck_at", json!(end));
        }
        None => rec = rec.say("no annotation"),
    }
    Some(rec)
}

fn cut_decl(line: usize, d: &Decl, all: bool, fuel: Option<usize>) -> Option<Record> {
    let Decl::Cut(job) = d else { return None };
    let fail = |why: String| Record::new(line, "cut", false).say(why.clone()).with("error", json!(why));
    for (p, g) in [(&job.left, &job.left_ctx), (&job.right, &job.right_ctx)] {
        if let Err(e) = check_forwarder(p, g) {
            return Some(fail(format!("{p}: {e}")));
        }
    }
    let redex = CutRedex {
        x: job.x.clone(),
        left: Judged::new(job.left.clone(), job.left_ctx.clone()),
        y: job.y.clone(),
        right: Judged::new(job.right.clone(), job.right_ctx.clone()),
    };
    let gammas = match redex.conclusions() {
        Ok(g) if !g.is_empty() => g,
        Ok(_) => return Some(fail("the cut has no conclusion".into())),
        Err(e) => return Some(fail(e.to_string())),
    };
    let mut rec = Record::new(line, "cut", true).say(format!("rank {}, {} conclusion(s)", redex.rank(), gammas.len()));
    let mut runs = Vec::new();
    for g in gammas.iter().take(if all { gammas.len() } else { 1 }) {
        rec = rec.say(format!("conclusion {g}"));
        match reduce_cut(&redex, g, fuel) {
            Ok(r) => {
                let steps: Vec<String> = r.trace.iter().map(|s| s.to_string()).collect();
                for s in &steps {
                    rec = rec.say(format!("  {s}"));
                }
                rec = rec.say(format!("  result {}", r.process));
                runs.push(json!({"conclusion": g.to_string(), "trace": steps, "result": r.process.to_string()}));
            }
            Err(e) => {
                rec.ok = false;
                rec = rec.say(format!("  {e}"));
                runs.push(json!({"conclusion": g.to_string(), "error": e.to_string()}));
            }
        }
    }
    Some(
        rec.with("rank", json!(redex.rank()))
            .with("conclusions", json!(gammas.len()))
            .with("runs", json!(runs)),
    )
}

fn sim_decl(line: usize, d: &Decl, fuel: Option<usize>) -> Option<Record> {
    let Decl::Sim(state) = d else { return None };
    let c = match MCutConfig::from_state(state) {
        Ok(c) => c,
        Err(e) => {
            return Some(
                Record::new(line, "sim", false)
                    .say(e.to_string())
                    .with("error", json!(e.to_string())),
            )
        }
    };
    Some(match run_mcut(&c, fuel) {
        Ok(r) => {
            let steps: Vec<String> = r.trace.iter().map(|s| s.to_string()).collect();
            let mut rec = Record::new(line, "sim", true);
            for s in &steps {
                rec = rec.say(s.clone());
            }
            rec.say(format!("result {}", r.process))
                .with("trace", json!(steps))
                .with("result", json!(r.process.to_string()))
        }
        Err(e) => Record::new(line, "sim", false)
            .say(e.to_string())
            .with("error", json!(e.to_string())),
    })
}

/// One step of the single state in the file; the text output is itself a declaration file.
fn sim_step(file: &DeclarationFile, json_out: bool) -> Result<bool> {
    let states: Vec<_> = file
        .decls
        .iter()
        .filter_map(|l| if let Decl::Sim(s) = &l.decl { Some(s) } else { None })
        .collect();
    let [state] = states.as_slice() else {
        bail!("`--step` needs exactly one `sim` declaration, found {}", states.len())
    };
    let c = match MCutConfig::from_state(state) {
        Ok(c) => c,
        Err(e) => {
            emit_step(json_out, false, &[], json!({"error": e.to_string()}), &[format!("// {e}")]);
            return Ok(false);
        }
    };
    let (trace, outcome) = match mcutq_step(&c, None) {
        Ok(r) => r,
        Err(e) => {
            emit_step(json_out, false, &[], json!({"error": e.to_string()}), &[format!("// {e}")]);
            return Ok(false);
        }
    };
    let steps: Vec<String> = trace.iter().map(|s| s.to_string()).collect();
    let mut lines: Vec<String> = steps.iter().map(|s| format!("// {s}")).collect();
    let data = match outcome {
        StepOutcome::Next(next) => {
            lines.push(format!("sim {};", next.to_state()));
            json!({"outcome": "next", "states": [next.to_state().to_string()]})
        }
        StepOutcome::Final(p) => {
            lines.push(format!("// final {p}"));
            json!({"outcome": "final", "result": p.to_string()})
        }
        StepOutcome::Commuted(action, branches) => {
            lines.push(format!("// under {}", show_action(&action)));
            let mut states = Vec::new();
            let mut plain = Vec::new();
            for b in branches {
                match b {
                    Branch::Config(inner) => {
                        lines.push(format!("sim {};", inner.to_state()));
                        states.push(inner.to_state().to_string());
                    }
                    Branch::Plain(p) => {
                        lines.push(format!("// beside {p}"));
                        plain.push(p.to_string());
                    }
                }
            }
            json!({"outcome": "commuted", "action": show_action(&action), "states": states, "beside": plain})
        }
    };
    emit_step(json_out, true, &steps, data, &lines);
    Ok(true)
}

fn emit_step(json_out: bool, ok: bool, steps: &[String], mut data: Value, lines: &[String]) {
    if json_out {
        data["kind"] = json!("sim-step");
        data["ok"] = json!(ok);
        data["trace"] = json!(steps);
        println!("{data}");
    } else {
        for l in lines {
            println!("{l}");
        }
    }
}

fn emit(records: &[Record], json_out: bool, style: &Style) {
    for r in records {
        if json_out {
            let mut v = r.data.clone();
            v["line"] = json!(r.line);
            v["kind"] = json!(r.kind);
            v["ok"] = json!(r.ok);
            println!("{v}");
        } else {
            println!("{} {} (line {})", style.verdict(r.ok), r.kind, r.line);
            for t in &r.text {
                println!("    {t}");
            }
        }
    }
}

/// Turns one located declaration into a record, or skips it.
type Job = Box<dyn Fn(usize, &Decl) -> Option<Record>>;

fn run(cli: Cli) -> Result<bool> {
    let style = Style::from_env();
    let (file, job): (&PathBuf, Job) = match &cli.command {
        Command::Fmt { file } => {
            let f = load(file)?;
            if cli.json {
                for l in &f.decls {
                    println!("{}", json!({"line": l.line, "decl": l.decl.to_string()}));
                }
            } else {
                print!("{f}");
            }
            return Ok(true);
        }
        Command::Sim { file, step: true, .. } => return sim_step(&load(file)?, cli.json),
        Command::Check { file } => (file, Box::new(check_decl)),
        Command::Synth { file } => (file, Box::new(synth_decl)),
        Command::Compat { file } => (file, Box::new(compat_decl)),
        Command::Cut { file, all_gammas, fuel } => {
            let (all, fuel) = (*all_gammas, *fuel);
            (file, Box::new(move |l, d| cut_decl(l, d, all, fuel)))
        }
        Command::Sim { file, fuel, .. } => {
            let fuel = *fuel;
            (file, Box::new(move |l, d| sim_decl(l, d, fuel)))
        }
    };
    let f = load(file)?;
    let records: Vec<Record> = f.decls.iter().filter_map(|l| job(l.line, &l.decl)).collect();
    if records.is_empty() {
        bail!("{}: no declarations for this command", file.display());
    }
    emit(&records, cli.json, &style);
    Ok(records.iter().all(|r| r.ok))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("\n{GRAMMAR}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fwd: {e:#}");
            ExitCode::from(2)
        }
    }
}
