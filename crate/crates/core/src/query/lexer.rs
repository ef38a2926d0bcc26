//! Lexer for the query surface syntax. Total: bad input produces
//! diagnostics, never a panic.

use std::ops::Range;

use super::{Diagnostic, Severity};

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Ident(String),
    Num(f64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Eof,
}

impl TokKind {
    pub fn describe(&self) -> String {
        match self {
            TokKind::Ident(s) => format!("identifier {s:?}"),
            TokKind::Num(n) => format!("number {n}"),
            TokKind::Str(_) => "string literal".to_string(),
            TokKind::LParen => "'('".to_string(),
            TokKind::RParen => "')'".to_string(),
            TokKind::Comma => "','".to_string(),
            TokKind::Dot => "'.'".to_string(),
            TokKind::Lt => "'<'".to_string(),
            TokKind::Le => "'<='".to_string(),
            TokKind::Gt => "'>'".to_string(),
            TokKind::Ge => "'>='".to_string(),
            TokKind::Eq => "'='".to_string(),
            TokKind::Ne => "'!='".to_string(),
            TokKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tok {
    pub kind: TokKind,
    pub span: Range<usize>,
}

pub fn lex(text: &str) -> (Vec<Tok>, Vec<Diagnostic>) {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let start = i;
        let c = text[i..].chars().next().unwrap();
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += c.len_utf8();
            }
            '(' => {
                toks.push(Tok {
                    kind: TokKind::LParen,
                    span: start..i + 1,
                });
                i += 1;
            }
            ')' => {
                toks.push(Tok {
                    kind: TokKind::RParen,
                    span: start..i + 1,
                });
                i += 1;
            }
            ',' => {
                toks.push(Tok {
                    kind: TokKind::Comma,
                    span: start..i + 1,
                });
                i += 1;
            }
            '.' => {
                toks.push(Tok {
                    kind: TokKind::Dot,
                    span: start..i + 1,
                });
                i += 1;
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push(Tok {
                        kind: TokKind::Le,
                        span: start..i + 2,
                    });
                    i += 2;
                } else {
                    toks.push(Tok {
                        kind: TokKind::Lt,
                        span: start..i + 1,
                    });
                    i += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push(Tok {
                        kind: TokKind::Ge,
                        span: start..i + 2,
                    });
                    i += 2;
                } else {
                    toks.push(Tok {
                        kind: TokKind::Gt,
                        span: start..i + 1,
                    });
                    i += 1;
                }
            }
            '=' => {
                toks.push(Tok {
                    kind: TokKind::Eq,
                    span: start..i + 1,
                });
                i += 1;
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push(Tok {
                        kind: TokKind::Ne,
                        span: start..i + 2,
                    });
                    i += 2;
                } else {
                    diags.push(Diagnostic {
                        severity: Severity::Error,
                        span: start..i + 1,
                        message: "unexpected '!'".to_string(),
                        hint: Some("did you mean '!='?".to_string()),
                    });
                    i += 1;
                }
            }
            '\'' => {
                let mut out = String::new();
                let mut j = i + 1;
                let mut closed = false;
                while j < bytes.len() {
                    let ch = text[j..].chars().next().unwrap();
                    if ch == '\'' {
                        if bytes.get(j + 1) == Some(&b'\'') {
                            out.push('\'');
                            j += 2;
                        } else {
                            closed = true;
                            j += 1;
                            break;
                        }
                    } else {
                        out.push(ch);
                        j += ch.len_utf8();
                    }
                }
                if !closed {
                    diags.push(Diagnostic {
                        severity: Severity::Error,
                        span: start..j,
                        message: "unterminated string literal".to_string(),
                        hint: None,
                    });
                }
                toks.push(Tok {
                    kind: TokKind::Str(out),
                    span: start..j,
                });
                i = j;
            }
            '-' | '0'..='9' => {
                let mut j = i;
                if c == '-' {
                    j += 1;
                    if !bytes.get(j).is_some_and(|b| b.is_ascii_digit()) {
                        diags.push(Diagnostic {
                            severity: Severity::Error,
                            span: start..j,
                            message: "expected digits after '-'".to_string(),
                            hint: None,
                        });
                        i = j;
                        continue;
                    }
                }
                while bytes.get(j).is_some_and(|b| b.is_ascii_digit()) {
                    j += 1;
                }
                if bytes.get(j) == Some(&b'.') && bytes.get(j + 1).is_some_and(|b| b.is_ascii_digit())
                {
                    j += 1;
                    while bytes.get(j).is_some_and(|b| b.is_ascii_digit()) {
                        j += 1;
                    }
                }
                let raw = &text[start..j];
                match raw.parse::<f64>() {
                    Ok(n) => toks.push(Tok {
                        kind: TokKind::Num(n),
                        span: start..j,
                    }),
                    Err(_) => diags.push(Diagnostic {
                        severity: Severity::Error,
                        span: start..j,
                        message: format!("invalid number {raw:?}"),
                        hint: None,
                    }),
                }
                i = j;
            }
            c if c.is_alphanumeric() || c == '_' || c == '$' => {
                let mut j = i;
                for ch in text[i..].chars() {
                    if ch.is_alphanumeric() || ch == '_' || ch == '$' || ch == '{' || ch == '}' {
                        j += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                let word = &text[start..j];
                if word.contains('$') {
                    diags.push(Diagnostic {
                        severity: Severity::Error,
                        span: start..j,
                        message: format!("unresolved parameter placeholder {word:?}"),
                        hint: Some("pass --param name=value to substitute it".to_string()),
                    });
                } else {
                    toks.push(Tok {
                        kind: TokKind::Ident(word.to_string()),
                        span: start..j,
                    });
                }
                i = j;
            }
            other => {
                diags.push(Diagnostic {
                    severity: Severity::Error,
                    span: start..start + other.len_utf8(),
                    message: format!("unexpected character {other:?}"),
                    hint: None,
                });
                i += other.len_utf8();
            }
        }
    }
    toks.push(Tok {
        kind: TokKind::Eof,
        span: text.len()..text.len(),
    });
    (toks, diags)
}
