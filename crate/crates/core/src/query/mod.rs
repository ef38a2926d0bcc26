//! The SQL-like surface language: lexer, recovering parser, canonical
//! printer, and validator.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod test_support;
pub mod validate;

use std::ops::Range;

pub use parser::{parse, substitute_params};
pub use printer::print;
pub use validate::{validate, Catalog};

/// A parse or validation finding with a source position.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Range<usize>,
    pub message: String,
    pub hint: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl Diagnostic {
    pub fn error(span: Range<usize>, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            span,
            message: message.into(),
            hint: None,
        }
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Diagnostic {
        self.hint = Some(hint.into());
        self
    }

    /// One-line rendering with 1-based line:column coordinates computed
    /// from `source`.
    pub fn render(&self, source: &str) -> String {
        let upto = &source[..self.span.start.min(source.len())];
        let line = upto.matches('\n').count() + 1;
        let col = upto.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let mut out = format!("{sev}[{line}:{col}]: {}", self.message);
        if let Some(hint) = &self.hint {
            out.push_str(&format!(" ({hint})"));
        }
        out
    }
}

/// Parses and validates in one step.
pub fn compile(
    text: &str,
    catalog: &Catalog,
) -> Result<crate::engine::logical::TypedQuery, Vec<Diagnostic>> {
    let ast = parse(text)?;
    validate(&ast, catalog)
}
