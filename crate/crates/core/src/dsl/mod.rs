//! Textual knowledge-base language.
//!
//! Every construct is a parenthesized form with a lowercase head:
//!
//! ```text
//! (space ID [:parent ID] [:kind general] [:agent NODE] [:vars (NODE ...)])
//! (class ID [:label STR] [:space ID])
//! (instance ID CLASS ... [:label STR] [:space ID])
//! (value ID [:label STR] [:space ID])
//! (isa SUB SUPER [:space ID])
//! (has SUB OBJ [:space ID])
//! (rel SUB RELATION OBJ [:space ID])
//! (attr SUB RELATION VALUE [:space ID])
//! (script NAME (track T) (props P ...) (role SYM DESC) (entry S P O) (result S P O)
//!   (scene N NAME (event ACTOR ACTION [OBJ]) (goto N (S P O))))
//! (link SCRIPT (role SYM) | (prop NAME) | (event SCENE INDEX) NODE)
//! (episode ID SCRIPT [:status open|completed] (bind SYM NODE) (observe ACTOR ACTION [OBJ])
//!   (path N ...) (observed (STEP INDEX) ...) (inferred (STEP INDEX) ...))
//! (occurred SCRIPT ACTOR ACTION [OBJ])
//! ```
//!
//! `occurred` reports an event to the running episode of a script and is
//! never written by [`serialize`]. Queries use their own heads, see
//! [`parse_query`].

mod forms;
mod printer;
pub mod reader;

use std::fmt;

use crate::hybrid::HybridKb;
use crate::kbsl::{Assertion, Query, TellOutcome};
use crate::script::Observation;
use crate::semnet::SemNetError;

pub use printer::serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    /// Byte offset into the source.
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, at: Span) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            line: at.line,
            column: at.column,
        }
    }

    pub fn warning(message: impl Into<String>, at: Span) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(message, at)
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

/// A top-level form with its position in the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    pub head: String,
    pub assertion: Assertion,
    pub span: Span,
}

fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Parses source text into forms. All syntax problems are reported; any
/// error means no forms are returned.
pub fn parse(text: &str) -> Result<Vec<Form>, Vec<Diagnostic>> {
    let (sexps, mut diags) = reader::read(text);
    let mut forms = Vec::with_capacity(sexps.len());
    for s in &sexps {
        match forms::convert(s) {
            Ok(form) => forms.push(form),
            Err(mut d) => diags.append(&mut d),
        }
    }
    if has_errors(&diags) {
        Err(diags)
    } else {
        Ok(forms)
    }
}

/// A successfully loaded knowledge base and any warnings raised on the way.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub kb: HybridKb,
    pub warnings: Vec<Diagnostic>,
}

/// Parses and applies `text` to `kb` in order. The first rejected form
/// aborts; `kb` is only replaced on success.
pub fn apply(kb: &mut HybridKb, text: &str) -> Result<Vec<Diagnostic>, Vec<Diagnostic>> {
    let forms = parse(text)?;
    let mut next = kb.clone();
    let mut warnings = Vec::new();
    let mut space_at = std::collections::BTreeMap::new();
    for form in forms {
        if let Assertion::Space(s) = &form.assertion {
            space_at.entry(s.id.clone()).or_insert(form.span);
        }
        let preamble = matches!(&form.assertion, Assertion::Space(s) if s.id.is_root());
        match next.tell(form.assertion) {
            TellOutcome::Accepted => {}
            TellOutcome::Skipped => {
                if !preamble {
                    warnings.push(Diagnostic::warning(
                        format!("`{}` form already known, skipped", form.head),
                        form.span,
                    ));
                }
            }
            TellOutcome::Rejected(e) => {
                return Err(vec![Diagnostic::error(e.to_string(), form.span)]);
            }
        }
    }
    let dangling = next.net().dangling_space_refs();
    if !dangling.is_empty() {
        return Err(dangling
            .into_iter()
            .map(|e| {
                let at = match &e {
                    SemNetError::DanglingSpaceRef { space, .. } => space_at.get(space).copied(),
                    _ => None,
                };
                Diagnostic::error(e.to_string(), at.unwrap_or(Span { line: 1, column: 1, offset: 0 }))
            })
            .collect());
    }
    *kb = next;
    Ok(warnings)
}

/// Builds a fresh knowledge base from source text.
pub fn load(text: &str) -> Result<Loaded, Vec<Diagnostic>> {
    let mut kb = HybridKb::new();
    let warnings = apply(&mut kb, text)?;
    Ok(Loaded { kb, warnings })
}

/// Parses exactly one form, e.g. a `tell` argument.
pub fn parse_one(text: &str) -> Result<Form, Vec<Diagnostic>> {
    let mut forms = parse(text)?;
    match forms.len() {
        1 => Ok(forms.remove(0)),
        n => Err(vec![Diagnostic::error(
            format!("expected exactly one form, found {n}"),
            Span { line: 1, column: 1, offset: 0 },
        )]),
    }
}

/// Parses a query:
///
/// ```text
/// (yesno S P O)          (wh S P ?)   (wh ? P O)
/// (roledetail SCRIPT ROLE)
/// (didhappen SCRIPT ACTION) | (didhappen SCRIPT ACTOR ACTION [OBJ])
/// ```
pub fn parse_query(text: &str) -> Result<Query, Vec<Diagnostic>> {
    let (sexps, diags) = reader::read(text);
    if has_errors(&diags) {
        return Err(diags);
    }
    match sexps.as_slice() {
        [one] => forms::convert_query(one),
        _ => Err(vec![Diagnostic::error(
            "expected exactly one query form",
            sexps.get(1).map_or_else(Span::default, |s| s.span),
        )]),
    }
}

/// Parses an observed event: `action`, `action(object)`, or a form
/// `(ACTOR ACTION [OBJECT])` where `_` leaves a position open.
pub fn parse_observation(text: &str) -> Result<Observation, Vec<Diagnostic>> {
    let text = text.trim();
    if !text.starts_with('(') {
        let (action, object) = match text.split_once('(') {
            Some((a, rest)) => match rest.strip_suffix(')') {
                Some(o) if !o.is_empty() => (a, Some(o)),
                _ => {
                    return Err(vec![Diagnostic::error(
                        format!("malformed event `{text}`"),
                        Span { line: 1, column: 1, offset: 0 },
                    )])
                }
            },
            None => (text, None),
        };
        if action.is_empty() {
            return Err(vec![Diagnostic::error("empty event", Span { line: 1, column: 1, offset: 0 })]);
        }
        return Ok(Observation::new(None, action, object));
    }
    let (sexps, diags) = reader::read(text);
    if has_errors(&diags) {
        return Err(diags);
    }
    match sexps.as_slice() {
        [one] => forms::convert_observation(one, one.list().unwrap_or_default()),
        _ => Err(vec![Diagnostic::error("expected one event form", Span { line: 1, column: 1, offset: 0 })]),
    }
}
