//! Command-line front end for hybridkr knowledge bases.
//!
//! Commands chain left to right in one-shot mode:
//!
//! ```text
//! hybridkr load story.kb tell "(rel rama rules ayodhya)" ask "(yesno rama rules ayodhya)"
//! ```
//!
//! `repl` reads the same commands one per line from standard input.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use hybridkr::{
    dsl, explain, export_dot, result_facts, validate_script, Answer, Confidence, HybridKb, NodeId,
    Observation, TellOutcome, Verdict,
};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_KB: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hybridkr", version, about = "Load, query and extend hybrid knowledge bases")]
struct Cli {
    /// Set a configuration key, e.g. `--set confidence.decay=0.8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// TOML file with configuration keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// load FILE | save FILE | tell FORM | ask QUERY | gapfill SCRIPT EVENT... |
    /// export-dot FILE | repl | instantiate SCRIPT ROLE=NODE... | complete EPISODE |
    /// explain | set KEY VALUE | validate | stats | history
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "COMMAND")]
    commands: Vec<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Kb(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Kb(_) => EXIT_KB,
        }
    }
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn kb_err(m: impl Into<String>) -> CliError {
    CliError::Kb(m.into())
}

fn diagnostics(d: &[dsl::Diagnostic]) -> CliError {
    kb_err(d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Load(PathBuf),
    Save(PathBuf),
    Tell(String),
    Ask(String),
    GapFill { script: String, events: Vec<String> },
    ExportDot(PathBuf),
    Repl,
    Instantiate { script: String, bindings: Vec<String> },
    Complete(String),
    Explain,
    Set { key: String, value: String },
    Validate,
    Stats,
    History,
    Help,
    Quit,
}

const COMMANDS: [&str; 16] = [
    "load", "save", "tell", "ask", "gapfill", "export-dot", "repl", "instantiate", "complete",
    "explain", "set", "validate", "stats", "history", "help", "quit",
];

/// Parses one command from the front of `args`, returning it and the number
/// of arguments it used. Variadic commands stop at the next command name.
pub fn parse_command(args: &[String]) -> Result<(Command, usize), CliError> {
    let name = args.first().ok_or_else(|| usage("missing command"))?;
    let one = |what: &str| {
        args.get(1)
            .cloned()
            .ok_or_else(|| usage(format!("`{name}` needs {what}")))
    };
    let rest = || {
        args[1..]
            .iter()
            .take_while(|a| !COMMANDS.contains(&a.as_str()))
            .cloned()
            .collect::<Vec<_>>()
    };
    Ok(match name.as_str() {
        "load" => (Command::Load(one("a file")?.into()), 2),
        "save" => (Command::Save(one("a file")?.into()), 2),
        "export-dot" => (Command::ExportDot(one("a file")?.into()), 2),
        "tell" => (Command::Tell(one("a form")?), 2),
        "ask" => (Command::Ask(one("a query form")?), 2),
        "complete" => (Command::Complete(one("an episode id")?), 2),
        "gapfill" | "instantiate" => {
            let mut all = rest();
            if all.is_empty() {
                return Err(usage(format!("`{name}` needs a script name")));
            }
            let script = all.remove(0);
            let used = all.len() + 2;
            if name == "gapfill" {
                if all.is_empty() {
                    return Err(usage("`gapfill` needs at least one event"));
                }
                (Command::GapFill { script, events: all }, used)
            } else {
                (Command::Instantiate { script, bindings: all }, used)
            }
        }
        "set" => {
            let a = one("KEY VALUE or KEY=VALUE")?;
            match a.split_once('=') {
                Some((k, v)) => (Command::Set { key: k.into(), value: v.into() }, 2),
                None => {
                    let v = args
                        .get(2)
                        .cloned()
                        .ok_or_else(|| usage("`set` needs KEY VALUE or KEY=VALUE"))?;
                    (Command::Set { key: a, value: v }, 3)
                }
            }
        }
        "repl" => (Command::Repl, 1),
        "explain" => (Command::Explain, 1),
        "validate" => (Command::Validate, 1),
        "stats" => (Command::Stats, 1),
        "history" => (Command::History, 1),
        "help" => (Command::Help, 1),
        "quit" | "exit" => (Command::Quit, 1),
        other => return Err(usage(format!("unknown command `{other}`"))),
    })
}

/// Splits a REPL line into words. Parenthesised forms stay whole and a
/// double-quoted word loses its quotes.
pub fn split_line(line: &str) -> Result<Vec<String>, CliError> {
    let mut words = Vec::new();
    let mut cur = String::new();
    let mut depth = 0usize;
    let mut chars = line.chars().peekable();
    let mut quoted_word = false;
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                let keep = depth > 0;
                if keep {
                    cur.push(c);
                } else {
                    quoted_word = true;
                }
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => {
                            let next = chars.next().ok_or_else(|| usage("unterminated string"))?;
                            if keep {
                                cur.push('\\');
                            }
                            cur.push(next);
                        }
                        Some(ch) => cur.push(ch),
                        None => return Err(usage("unterminated string")),
                    }
                }
                if keep {
                    cur.push('"');
                }
            }
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| usage("unbalanced `)`"))?;
                cur.push(c);
            }
            ';' if depth == 0 => break,
            c if c.is_whitespace() && depth == 0 => {
                if !cur.is_empty() || quoted_word {
                    words.push(std::mem::take(&mut cur));
                    quoted_word = false;
                }
            }
            c => cur.push(c),
        }
    }
    if depth > 0 {
        return Err(usage("unbalanced `(`"));
    }
    if !cur.is_empty() || quoted_word {
        words.push(cur);
    }
    Ok(words)
}

/// The mutable state behind both one-shot and REPL use.
#[derive(Debug, Clone, Default)]
pub struct Session {
    pub kb: HybridKb,
    pub conf: Confidence,
    pub history: Vec<String>,
    last_answer: Option<Answer>,
    loaded: bool,
}

fn fmt_conf(c: Option<f64>) -> String {
    c.map_or_else(String::new, |c| format!(" {c:.2}"))
}

/// Renders an answer as `<verdict> <confidence>` with indented trace lines.
pub fn format_answer(a: &Answer) -> String {
    let mut out = String::new();
    match &a.verdict {
        Verdict::Yes | Verdict::No => {
            let v = if a.verdict == Verdict::Yes { "yes" } else { "no" };
            out.push_str(&format!("{v}{}\n", fmt_conf(a.confidence)));
            for step in &a.trace {
                out.push_str(&format!("  {step}\n"));
            }
        }
        Verdict::Unknown => out.push_str("unknown\n"),
        Verdict::Bindings(found) => {
            out.push_str(&format!("bindings{}\n", fmt_conf(a.confidence)));
            for b in found {
                out.push_str(&format!("  {} {:.2}\n", b.node, b.confidence));
                for step in &b.trace {
                    out.push_str(&format!("    {step}\n"));
                }
            }
        }
    }
    out
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| usage(format!("cannot write output: {e}")))
}

impl Session {
    pub fn new(conf: Confidence) -> Self {
        Session {
            conf,
            ..Session::default()
        }
    }

    /// Whether a knowledge base has been loaded or built in this session.
    pub fn is_loaded(&self) -> bool {
        self.loaded
    }

    pub fn execute(
        &mut self,
        cmd: &Command,
        out: &mut dyn Write,
        err: &mut dyn Write,
    ) -> Result<(), CliError> {
        match cmd {
            Command::Load(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| kb_err(format!("cannot read {}: {e}", path.display())))?;
                let loaded = dsl::load(&text).map_err(|d| diagnostics(&d))?;
                for w in &loaded.warnings {
                    let _ = writeln!(err, "{}: {w}", path.display());
                }
                self.kb = loaded.kb;
                self.loaded = true;
                self.last_answer = None;
            }
            Command::Save(path) => write_file(path, &dsl::serialize(&self.kb))?,
            Command::ExportDot(path) => write_file(path, &export_dot(&self.kb))?,
            Command::Tell(text) => {
                let form = dsl::parse_one(text).map_err(|d| diagnostics(&d))?;
                match self.kb.tell(form.assertion) {
                    TellOutcome::Rejected(e) => return Err(kb_err(format!("rejected: {e}"))),
                    ok => write_out(out, &format!("{ok}\n"))?,
                }
            }
            Command::Ask(text) => {
                let q = dsl::parse_query(text).map_err(|d| diagnostics(&d))?;
                let a = self.kb.ask(&q, &self.conf).map_err(|e| kb_err(e.to_string()))?;
                write_out(out, &format_answer(&a))?;
                self.last_answer = Some(a);
            }
            Command::GapFill { script, events } => {
                let obs = events
                    .iter()
                    .map(|e| dsl::parse_observation(e).map_err(|d| diagnostics(&d)))
                    .collect::<Result<Vec<Observation>, _>>()?;
                let id = self
                    .kb
                    .gap_fill(script, &obs)
                    .map_err(|e| kb_err(e.to_string()))?;
                write_out(out, &self.describe_episode(&id))?;
            }
            Command::Instantiate { script, bindings } => {
                let mut map = BTreeMap::new();
                for b in bindings {
                    let (role, node) = b
                        .split_once('=')
                        .ok_or_else(|| usage(format!("expected ROLE=NODE, got `{b}`")))?;
                    map.insert(role.to_string(), NodeId::new(node));
                }
                let id = self
                    .kb
                    .instantiate(script, &map)
                    .map_err(|e| kb_err(e.to_string()))?;
                write_out(out, &format!("{id}\n"))?;
            }
            Command::Complete(id) => {
                let ep = self
                    .kb
                    .episode(id)
                    .ok_or_else(|| kb_err(format!("unknown episode `{id}`")))?;
                let facts = self
                    .kb
                    .script(&ep.script)
                    .map(|s| result_facts(s, ep))
                    .transpose()
                    .map_err(|e| kb_err(e.to_string()))?
                    .unwrap_or_default();
                let outcomes = self.kb.complete(id).map_err(|e| kb_err(e.to_string()))?;
                let mut text = format!("completed {id}\n");
                for ((s, p, o), t) in facts.iter().zip(&outcomes) {
                    text.push_str(&format!("  {s} {p} {o}: {t}\n"));
                }
                write_out(out, &text)?;
            }
            Command::Explain => {
                let a = self
                    .last_answer
                    .as_ref()
                    .ok_or_else(|| kb_err("nothing to explain"))?;
                let text = explain(a).map_err(|e| kb_err(e.to_string()))?;
                write_out(out, &text)?;
            }
            Command::Set { key, value } => {
                self.conf.set(key, value).map_err(|e| usage(e.to_string()))?;
            }
            Command::Validate => {
                let problems = self.problems();
                if problems.is_empty() {
                    write_out(out, "ok\n")?;
                } else {
                    return Err(kb_err(problems.join("\n")));
                }
            }
            Command::Stats => {
                let net = self.kb.net();
                let text = format!(
                    "spaces {}\nnodes {}\nlinks {}\nscripts {}\nhybrid-links {}\nepisodes {}\n",
                    net.spaces().count(),
                    net.node_count(),
                    net.link_count(),
                    self.kb.scripts().count(),
                    self.kb.links().count(),
                    self.kb.episodes().count()
                );
                write_out(out, &text)?;
            }
            Command::History => {
                let mut text = String::new();
                for (i, h) in self.history.iter().enumerate() {
                    text.push_str(&format!("{:>4}  {h}\n", i + 1));
                }
                write_out(out, &text)?;
            }
            Command::Help => write_out(out, HELP)?,
            Command::Repl | Command::Quit => {}
        }
        if matches!(cmd, Command::Tell(_)) {
            self.loaded = true;
        }
        Ok(())
    }

    fn describe_episode(&self, id: &str) -> String {
        let Some(ep) = self.kb.episode(id) else {
            return format!("{id}\n");
        };
        let path: Vec<String> = ep.scene_path.iter().map(|n| n.to_string()).collect();
        let mut text = format!("{id} path {}\n", path.join(" "));
        if let Some(script) = self.kb.script(&ep.script) {
            for r in ep.path_refs(script) {
                let (how, c) = if ep.observed.contains(&r) {
                    ("observed", 1.0)
                } else {
                    ("inferred", self.conf.gapfill)
                };
                if let Some(g) = ep.ground(script, r) {
                    text.push_str(&format!("  {how} {g} {c:.2}\n"));
                }
            }
        }
        text
    }

    fn problems(&self) -> Vec<String> {
        let mut found: Vec<String> = self
            .kb
            .net()
            .dangling_space_refs()
            .iter()
            .map(|e| e.to_string())
            .collect();
        for s in self.kb.scripts() {
            for issue in validate_script(s) {
                found.push(format!("script {}: {issue}", s.name));
            }
        }
        for ep in self.kb.episodes() {
            match self.kb.check_binding_consistency(ep) {
                Ok(v) => found.extend(v.iter().map(|v| {
                    format!(
                        "episode {}: role {} bound to {}, which is not a {}",
                        ep.id, v.role, v.instance, v.class
                    )
                })),
                Err(e) => found.push(format!("episode {}: {e}", ep.id)),
            }
        }
        found
    }

    /// Reads commands line by line until end of input or `quit`. Errors are
    /// reported and the loop carries on.
    pub fn repl(
        &mut self,
        input: &mut dyn BufRead,
        out: &mut dyn Write,
        err: &mut dyn Write,
        prompt: bool,
    ) {
        let mut line = String::new();
        loop {
            if prompt {
                let _ = write!(out, "hybridkr> ");
                let _ = out.flush();
            }
            line.clear();
            match input.read_line(&mut line) {
                Ok(0) | Err(_) => break,
                Ok(_) => {}
            }
            let words = match split_line(&line) {
                Ok(w) if w.is_empty() => continue,
                Ok(w) => w,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    continue;
                }
            };
            let cmd = match parse_command(&words) {
                Ok((_, used)) if used < words.len() => {
                    let _ = writeln!(err, "error: unexpected `{}`", words[used]);
                    continue;
                }
                Ok((Command::Repl, _)) => continue,
                Ok((cmd, _)) => cmd,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    continue;
                }
            };
            if cmd == Command::Quit {
                break;
            }
            self.history.push(line.trim().to_string());
            if let Err(e) = self.execute(&cmd, out, err) {
                let _ = writeln!(err, "error: {e}");
            }
        }
    }
}

const HELP: &str = "\
commands:
  load FILE                 replace the knowledge base with FILE
  save FILE                 write the canonical form to FILE
  tell FORM                 assert one form
  ask QUERY                 (yesno S P O) (wh S P ?) (roledetail SCRIPT ROLE) (didhappen SCRIPT ...)
  gapfill SCRIPT EVENT...   EVENT is ACTION, ACTION(OBJECT) or (ACTOR ACTION [OBJECT])
  instantiate SCRIPT ROLE=NODE...
  complete EPISODE
  explain                   trace of the last answer
  set KEY VALUE             confidence.decay or confidence.gapfill
  export-dot FILE
  validate | stats | history | help | quit
";

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| kb_err(format!("cannot write {}: {e}", path.display())))
}

fn flatten(prefix: &str, table: &toml::Table, into: &mut Vec<(String, String)>) -> Result<(), CliError> {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, into)?,
            toml::Value::Float(f) => into.push((key, f.to_string())),
            toml::Value::Integer(i) => into.push((key, i.to_string())),
            toml::Value::String(s) => into.push((key, s.clone())),
            _ => return Err(usage(format!("config key `{key}` must be a number"))),
        }
    }
    Ok(())
}

/// Reads configuration from a TOML file such as
/// `confidence.decay = 0.85`.
pub fn load_config(path: &Path, conf: &mut Confidence) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    flatten("", &table, &mut pairs)?;
    for (k, v) in pairs {
        conf.set(&k, &v)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn configure(cli: &Cli) -> Result<Confidence, CliError> {
    let mut conf = Confidence::default();
    if let Some(path) = &cli.config {
        load_config(path, &mut conf)?;
    }
    for s in &cli.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        conf.set(k, v).map_err(|e| usage(e.to_string()))?;
    }
    Ok(conf)
}

/// Runs the command line `args` (including the program name) and returns
/// the exit code.
pub fn run<I, S>(
    args: I,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
    prompt: bool,
) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let fail = |err: &mut dyn Write, e: CliError| {
        let _ = writeln!(err, "error: {e}");
        if let CliError::Usage(_) = e {
            let _ = writeln!(err, "usage: hybridkr [--set KEY=VALUE] [--config FILE] COMMAND...");
        }
        e.exit_code()
    };
    let conf = match configure(&cli) {
        Ok(c) => c,
        Err(e) => return fail(err, e),
    };
    if cli.commands.is_empty() {
        return fail(err, usage("no command given"));
    }
    let mut session = Session::new(conf);
    let mut rest = cli.commands.as_slice();
    while !rest.is_empty() {
        let (cmd, used) = match parse_command(rest) {
            Ok(c) => c,
            Err(e) => return fail(err, e),
        };
        session.history.push(rest[..used].join(" "));
        rest = &rest[used..];
        let needs_kb = !matches!(
            cmd,
            Command::Load(_) | Command::Repl | Command::Set { .. } | Command::Help | Command::Quit
        );
        if needs_kb && !session.is_loaded() {
            return fail(err, usage(format!("`{}` needs a knowledge base; run `load FILE` first", command_name(&cmd))));
        }
        let result = match cmd {
            Command::Repl => {
                session.repl(input, out, err, prompt);
                Ok(())
            }
            Command::Quit => break,
            cmd => session.execute(&cmd, out, err),
        };
        if let Err(e) = result {
            return fail(err, e);
        }
    }
    EXIT_OK
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Load(_) => "load",
        Command::Save(_) => "save",
        Command::Tell(_) => "tell",
        Command::Ask(_) => "ask",
        Command::GapFill { .. } => "gapfill",
        Command::ExportDot(_) => "export-dot",
        Command::Repl => "repl",
        Command::Instantiate { .. } => "instantiate",
        Command::Complete(_) => "complete",
        Command::Explain => "explain",
        Command::Set { .. } => "set",
        Command::Validate => "validate",
        Command::Stats => "stats",
        Command::History => "history",
        Command::Help => "help",
        Command::Quit => "quit",
    }
}
