//! Hybrid knowledge representation: a partitioned semantic network for
//! declarative knowledge combined with scripts for stereotyped event
//! sequences, behind a TELL/ASK interface.
//!
//! ```
//! use hybridkr::{dsl, Confidence, Verdict};
//!
//! let kb = dsl::load("(class animal) (class dog) (isa dog animal) (instance rex dog)")
//!     .unwrap()
//!     .kb;
//! let q = dsl::parse_query("(yesno rex is-a animal)").unwrap();
//! let answer = kb.ask(&q, &Confidence::default()).unwrap();
//! assert_eq!(answer.verdict, Verdict::Yes);
//! ```

pub mod dot;
pub mod dsl;
pub mod hybrid;
pub mod kbsl;
pub mod script;
pub mod semnet;

pub use dot::export_dot;
pub use hybrid::{
    BindingViolation, ElementRef, HybridError, HybridKb, HybridLink, HybridRelation, RoleDetail,
    ScriptElementRef,
};
pub use kbsl::{
    explain, replay, Answer, Assertion, Binding, ConfigError, Confidence, ExplainError, KbError,
    Query, QueryError, StepKind, TellOutcome, TraceStep, Verdict,
};
pub use script::{
    gap_fill, gap_fill_with, instantiate, result_facts, validate_script, Episode, EpisodeStatus,
    Event, EventObject, EventRef, GroundEvent, Observation, Pattern, Scene, Script, ScriptError,
    ScriptIssue, Term, Transition,
};
pub use semnet::{
    AttributeRecord, Derivation, Link, LinkLabel, Node, NodeId, NodeKind, SemNet, SemNetError,
    Space, SpaceId, SpaceKind, ROOT_SPACE,
};
