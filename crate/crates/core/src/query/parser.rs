//! Recursive-descent parser with clause-boundary recovery: on a syntax
//! error the parser records a diagnostic and skips to the next clause
//! keyword, so a single run reports every broken clause. Parsing is total
//! and never panics on malformed input.

use super::ast::*;
use super::lexer::{lex, Tok, TokKind};
use super::{Diagnostic, Severity};
use crate::algebra::{Axis, ConsolidateKind};
use crate::region::Region;

pub fn parse(text: &str) -> Result<QueryAst, Vec<Diagnostic>> {
    let (toks, mut diags) = lex(text);
    let mut p = Parser {
        toks,
        pos: 0,
        diags: Vec::new(),
    };
    let ast = p.query(true);
    diags.extend(p.diags);
    diags.sort_by_key(|d| (d.span.start, d.span.end));
    match ast {
        Some(ast) if diags.iter().all(|d| d.severity != Severity::Error) => Ok(ast),
        _ => Err(diags),
    }
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

const CLAUSE_KEYWORDS: [&str; 4] = ["from", "where", "group", "having"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos.min(self.toks.len() - 1)].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokKind::Eof)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&mut self, message: impl Into<String>, hint: Option<String>) {
        let span = self.peek().span.clone();
        self.diags.push(Diagnostic {
            severity: Severity::Error,
            span,
            message: message.into(),
            hint,
        });
    }

    /// Skips tokens until a clause keyword at paren depth zero, or EOF.
    fn synchronize(&mut self) {
        let mut depth = 0i32;
        loop {
            match &self.peek().kind {
                TokKind::Eof => return,
                TokKind::LParen => depth += 1,
                TokKind::RParen => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                }
                TokKind::Ident(s)
                    if depth == 0
                        && CLAUSE_KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)) =>
                {
                    return;
                }
                _ => {}
            }
            self.bump();
        }
    }

    fn expect(&mut self, want: &TokKind, what: &str) -> bool {
        if std::mem::discriminant(&self.peek().kind) == std::mem::discriminant(want) {
            self.bump();
            true
        } else {
            let found = self.peek().kind.describe();
            self.error_here(format!("expected {what}, found {found}"), None);
            false
        }
    }

    fn ident(&mut self, what: &str) -> Option<Spanned<String>> {
        match &self.peek().kind {
            TokKind::Ident(s) => {
                let reserved = [
                    "select", "from", "where", "group", "having", "and", "or", "not", "as",
                ];
                if reserved.iter().any(|k| s.eq_ignore_ascii_case(k)) {
                    let found = self.peek().kind.describe();
                    self.error_here(
                        format!("expected {what}, found reserved {found}"),
                        None,
                    );
                    return None;
                }
                let s = s.clone();
                let span = self.peek().span.clone();
                self.bump();
                Some(Spanned::new(s, span))
            }
            other => {
                let found = other.describe();
                self.error_here(format!("expected {what}, found {found}"), None);
                None
            }
        }
    }

    fn number(&mut self, what: &str) -> Option<f64> {
        match self.peek().kind {
            TokKind::Num(n) => {
                self.bump();
                Some(n)
            }
            _ => {
                let found = self.peek().kind.describe();
                self.error_here(format!("expected {what}, found {found}"), None);
                None
            }
        }
    }

    fn string(&mut self, what: &str) -> Option<String> {
        match &self.peek().kind {
            TokKind::Str(s) => {
                let s = s.clone();
                self.bump();
                Some(s)
            }
            other => {
                let found = other.describe();
                self.error_here(format!("expected {what}, found {found}"), None);
                None
            }
        }
    }

    /// Parses a full query. `top` queries must consume all input.
    fn query(&mut self, top: bool) -> Option<QueryAst> {
        if !self.eat_keyword("select") {
            self.error_here("expected 'select'", None);
            self.synchronize();
        }
        let select = self.select_list();
        if !self.eat_keyword("from") {
            self.error_here("expected 'from'", None);
            self.synchronize();
            self.eat_keyword("from");
        }
        let from = self.from_list();

        let mut where_clause = None;
        if self.eat_keyword("where") {
            where_clause = self.expr();
            if where_clause.is_none() {
                self.synchronize();
            }
        }
        let mut group = None;
        if self.eat_keyword("group") {
            group = self.group_clause();
            if group.is_none() {
                self.synchronize();
            }
        }
        let mut having = None;
        if self.eat_keyword("having") {
            having = self.expr();
            if having.is_none() {
                self.synchronize();
            }
        }
        if top && !self.at_eof() {
            let found = self.peek().kind.describe();
            self.error_here(format!("unexpected trailing input: {found}"), None);
        }
        if select.is_empty() || from.is_empty() {
            return None;
        }
        Some(QueryAst {
            select,
            from,
            where_clause,
            group,
            having,
        })
    }

    fn select_list(&mut self) -> Vec<SelectItem> {
        let mut items = Vec::new();
        loop {
            match self.select_item() {
                Some(item) => items.push(item),
                None => {
                    self.synchronize();
                    break;
                }
            }
            if !matches!(self.peek().kind, TokKind::Comma) {
                break;
            }
            self.bump();
        }
        items
    }

    fn select_item(&mut self) -> Option<SelectItem> {
        let alias = self.ident("a column reference like R1.VisualSpan")?;
        if !self.expect(&TokKind::Dot, "'.'") {
            return None;
        }
        let attr_tok = self.ident("an attribute (VisualSpan, Span, Region, Text, MinimalRegion, MaximalRegion)")?;
        match Attr::parse_ci(&attr_tok.node) {
            Some(attr) => Some(SelectItem { alias, attr }),
            None => {
                self.diags.push(Diagnostic {
                    severity: Severity::Error,
                    span: attr_tok.span,
                    message: format!("unknown attribute {:?}", attr_tok.node),
                    hint: Some(
                        "expected VisualSpan, Span, Region, Text, MinimalRegion or MaximalRegion"
                            .to_string(),
                    ),
                });
                None
            }
        }
    }

    fn from_list(&mut self) -> Vec<FromItem> {
        let mut items = Vec::new();
        loop {
            match self.from_item() {
                Some(item) => items.push(item),
                None => {
                    self.synchronize();
                    break;
                }
            }
            if !matches!(self.peek().kind, TokKind::Comma) {
                break;
            }
            self.bump();
        }
        items
    }

    fn from_item(&mut self) -> Option<FromItem> {
        let source = self.source()?;
        if !self.eat_keyword("as") {
            self.error_here("expected 'as' after source", None);
            return None;
        }
        let alias = self.ident("an alias")?;
        Some(FromItem { source, alias })
    }

    fn source(&mut self) -> Option<Source> {
        if matches!(self.peek().kind, TokKind::LParen) {
            self.bump();
            let sub = self.query(false)?;
            if !self.expect(&TokKind::RParen, "')' closing the subquery") {
                return None;
            }
            return Some(Source::SubQuery(Box::new(sub)));
        }
        let head = self.ident("a source (R, RegEx, Dict, Phrase, A, Consolidate, BlockText, BlockRegion) or a parenthesized subquery")?;
        let name = head.node.to_ascii_lowercase();
        if !self.expect(&TokKind::LParen, "'('") {
            return None;
        }
        let src = match name.as_str() {
            "r" => {
                self.document_arg()?;
                Some(Source::AllSpans)
            }
            "regex" => {
                let pat = self.string("a pattern string")?;
                let span = self.toks[self.pos - 1].span.clone();
                self.expect(&TokKind::Comma, "','");
                self.document_arg()?;
                Some(Source::Regex(Spanned::new(pat, span)))
            }
            "dict" => {
                let name = match &self.peek().kind {
                    TokKind::Str(s) => {
                        let s = s.clone();
                        let span = self.peek().span.clone();
                        self.bump();
                        Spanned::new(s, span)
                    }
                    _ => self.ident("a dictionary name")?,
                };
                self.expect(&TokKind::Comma, "','");
                self.document_arg()?;
                Some(Source::Dict(name))
            }
            "phrase" => {
                let text = self.string("a phrase string")?;
                let span = self.toks[self.pos - 1].span.clone();
                self.expect(&TokKind::Comma, "','");
                self.document_arg()?;
                Some(Source::Phrase(Spanned::new(text, span)))
            }
            "a" => {
                let x_l = self.number("x_l")?;
                self.expect(&TokKind::Comma, "','");
                let y_l = self.number("y_l")?;
                self.expect(&TokKind::Comma, "','");
                let x_h = self.number_or_inf("x_h")?;
                self.expect(&TokKind::Comma, "','");
                let y_h = self.number_or_inf("y_h")?;
                match Region::new(x_l, y_l, x_h, y_h) {
                    Ok(rect) => Some(Source::Virtual(rect)),
                    Err(e) => {
                        self.diags.push(Diagnostic {
                            severity: Severity::Error,
                            span: head.span.clone(),
                            message: format!("invalid virtual region: {e}"),
                            hint: None,
                        });
                        None
                    }
                }
            }
            "consolidate" => {
                let input = self.source()?;
                self.expect(&TokKind::Comma, "','");
                let kind = self.ident("'containment' or 'overlap'")?;
                let kind = match kind.node.to_ascii_lowercase().as_str() {
                    "containment" => ConsolidateKind::Containment,
                    "overlap" => ConsolidateKind::Overlap,
                    _ => {
                        self.diags.push(Diagnostic {
                            severity: Severity::Error,
                            span: kind.span,
                            message: format!("unknown consolidation kind {:?}", kind.node),
                            hint: Some("expected containment or overlap".to_string()),
                        });
                        return None;
                    }
                };
                Some(Source::Consolidate {
                    input: Box::new(input),
                    kind,
                })
            }
            "blocktext" => {
                let input = self.source()?;
                self.expect(&TokKind::Comma, "','");
                let max_gap = self.count_arg("max_gap")?;
                self.expect(&TokKind::Comma, "','");
                let min_count = self.count_arg("min_count")?;
                Some(Source::BlockText {
                    input: Box::new(input),
                    max_gap,
                    min_count,
                })
            }
            "blockregion" => {
                let input = self.source()?;
                self.expect(&TokKind::Comma, "','");
                let x_dist = self.number("x_dist")?;
                self.expect(&TokKind::Comma, "','");
                let y_dist = self.number("y_dist")?;
                self.expect(&TokKind::Comma, "','");
                let min_count = self.count_arg("min_count")?;
                Some(Source::BlockRegion {
                    input: Box::new(input),
                    x_dist,
                    y_dist,
                    min_count,
                })
            }
            _ => {
                self.diags.push(Diagnostic {
                    severity: Severity::Error,
                    span: head.span.clone(),
                    message: format!("unknown source {:?}", head.node),
                    hint: Some(
                        "expected R, RegEx, Dict, Phrase, A, Consolidate, BlockText or BlockRegion"
                            .to_string(),
                    ),
                });
                None
            }
        }?;
        if !self.expect(&TokKind::RParen, "')'") {
            return None;
        }
        Some(src)
    }

    /// The document-collection argument: the identifier `D`.
    fn document_arg(&mut self) -> Option<()> {
        match &self.peek().kind {
            TokKind::Ident(s) if s.eq_ignore_ascii_case("d") => {
                self.bump();
                Some(())
            }
            other => {
                let found = other.describe();
                self.error_here(
                    format!("expected the document collection 'D', found {found}"),
                    None,
                );
                None
            }
        }
    }

    fn count_arg(&mut self, what: &str) -> Option<u64> {
        let n = self.number(what)?;
        if n < 0.0 || n.fract() != 0.0 {
            self.error_here(format!("{what} must be a non-negative integer"), None);
            return None;
        }
        Some(n as u64)
    }

    fn number_or_inf(&mut self, what: &str) -> Option<f64> {
        if self.is_keyword("inf") {
            self.bump();
            return Some(f64::INFINITY);
        }
        self.number(what)
    }

    fn expr(&mut self) -> Option<Expr> {
        let mut terms = vec![self.and_expr()?];
        while self.eat_keyword("or") {
            terms.push(self.and_expr()?);
        }
        Some(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Or(terms)
        })
    }

    fn and_expr(&mut self) -> Option<Expr> {
        let mut terms = vec![self.unary_expr()?];
        while self.eat_keyword("and") {
            terms.push(self.unary_expr()?);
        }
        Some(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::And(terms)
        })
    }

    fn unary_expr(&mut self) -> Option<Expr> {
        if self.eat_keyword("not") {
            if !self.expect(&TokKind::LParen, "'(' after 'not'") {
                return None;
            }
            let inner = self.expr()?;
            if !self.expect(&TokKind::RParen, "')'") {
                return None;
            }
            return Some(Expr::Not(Box::new(inner)));
        }
        if matches!(self.peek().kind, TokKind::LParen) {
            self.bump();
            let inner = self.expr()?;
            if !self.expect(&TokKind::RParen, "')'") {
                return None;
            }
            return Some(inner);
        }
        if matches!(self.peek().kind, TokKind::Num(_)) {
            let lhs = ScalarExpr::Num(self.number("a number")?);
            return self.finish_cmp(lhs);
        }
        // ident: either a predicate call or a scalar function comparison.
        let name = self.ident("a predicate or scalar function")?;
        let lname = name.node.to_ascii_lowercase();
        if (lname == "area" || lname == "count") && matches!(self.peek().kind, TokKind::LParen) {
            self.bump();
            let arg = self.ident("an alias")?;
            if !self.expect(&TokKind::RParen, "')'") {
                return None;
            }
            let lhs = if lname == "area" {
                ScalarExpr::Area(arg)
            } else {
                ScalarExpr::Count(arg)
            };
            return self.finish_cmp(lhs);
        }
        if !self.expect(&TokKind::LParen, "'(' starting the argument list") {
            return None;
        }
        let mut args = Vec::new();
        if !matches!(self.peek().kind, TokKind::RParen) {
            loop {
                args.push(self.pred_arg()?);
                if matches!(self.peek().kind, TokKind::Comma) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        if !self.expect(&TokKind::RParen, "')'") {
            return None;
        }
        Some(Expr::Call(PredCall { name, args }))
    }

    fn finish_cmp(&mut self, lhs: ScalarExpr) -> Option<Expr> {
        let op = match self.peek().kind {
            TokKind::Lt => CmpOp::Lt,
            TokKind::Le => CmpOp::Le,
            TokKind::Gt => CmpOp::Gt,
            TokKind::Ge => CmpOp::Ge,
            TokKind::Eq => CmpOp::Eq,
            TokKind::Ne => CmpOp::Ne,
            _ => {
                let found = self.peek().kind.describe();
                self.error_here(format!("expected a comparison operator, found {found}"), None);
                return None;
            }
        };
        self.bump();
        let rhs = if matches!(self.peek().kind, TokKind::Num(_)) {
            ScalarExpr::Num(self.number("a number")?)
        } else {
            let name = self.ident("a number, Area(alias) or Count(alias)")?;
            let lname = name.node.to_ascii_lowercase();
            if !self.expect(&TokKind::LParen, "'('") {
                return None;
            }
            let arg = self.ident("an alias")?;
            if !self.expect(&TokKind::RParen, "')'") {
                return None;
            }
            match lname.as_str() {
                "area" => ScalarExpr::Area(arg),
                "count" => ScalarExpr::Count(arg),
                _ => {
                    self.diags.push(Diagnostic {
                        severity: Severity::Error,
                        span: name.span,
                        message: format!("unknown scalar function {:?}", name.node),
                        hint: Some("expected Area or Count".to_string()),
                    });
                    return None;
                }
            }
        };
        Some(Expr::Cmp { lhs, op, rhs })
    }

    fn pred_arg(&mut self) -> Option<Arg> {
        match &self.peek().kind {
            TokKind::Str(s) => {
                let s = s.clone();
                self.bump();
                Some(Arg::Str(s))
            }
            TokKind::Num(n) => {
                let n = *n;
                self.bump();
                Some(Arg::Num(n))
            }
            TokKind::Ident(s) if s.eq_ignore_ascii_case("centroid") => {
                self.bump();
                if !self.expect(&TokKind::LParen, "'('") {
                    return None;
                }
                let alias = self.ident("an alias")?;
                if !self.expect(&TokKind::RParen, "')'") {
                    return None;
                }
                Some(Arg::Centroid(alias))
            }
            TokKind::Ident(_) => Some(Arg::Ref(self.ident("an alias")?)),
            other => {
                let found = other.describe();
                self.error_here(format!("expected an argument, found {found}"), None);
                None
            }
        }
    }

    fn group_clause(&mut self) -> Option<GroupClause> {
        let axis = if self.eat_keyword("vertically") {
            Axis::Vertical
        } else if self.eat_keyword("horizontally") {
            Axis::Horizontal
        } else {
            self.error_here("expected 'vertically' or 'horizontally'", None);
            return None;
        };
        if !self.eat_keyword("aligned") {
            self.error_here("expected 'aligned'", None);
            return None;
        }
        if !self.expect(&TokKind::LParen, "'('") {
            return None;
        }
        let over = self.ident("the alias to group")?;
        let mut params = Vec::new();
        while matches!(self.peek().kind, TokKind::Comma) {
            self.bump();
            let key = self.ident("a parameter name")?;
            if !self.expect(&TokKind::Eq, "'='") {
                return None;
            }
            let value = match &self.peek().kind {
                TokKind::Num(n) => {
                    let n = *n;
                    self.bump();
                    GroupParam::Num(n)
                }
                TokKind::Ident(s) if s.eq_ignore_ascii_case("true") => {
                    self.bump();
                    GroupParam::Bool(true)
                }
                TokKind::Ident(s) if s.eq_ignore_ascii_case("false") => {
                    self.bump();
                    GroupParam::Bool(false)
                }
                TokKind::Ident(s) => {
                    let w = s.to_ascii_lowercase();
                    self.bump();
                    GroupParam::Word(w)
                }
                other => {
                    let found = other.describe();
                    self.error_here(format!("expected a parameter value, found {found}"), None);
                    return None;
                }
            };
            params.push((key, value));
        }
        if !self.expect(&TokKind::RParen, "')'") {
            return None;
        }
        if !self.eat_keyword("as") {
            self.error_here("expected 'as' after the group spec", None);
            return None;
        }
        let alias = self.ident("the group alias")?;
        Some(GroupClause {
            axis,
            over,
            params,
            alias,
        })
    }
}

/// Substitutes `${name}` placeholders from `params`. Unresolved
/// placeholders later surface as lexer diagnostics.
pub fn substitute_params(
    text: &str,
    params: &std::collections::BTreeMap<String, String>,
) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        match rest[start + 2..].find('}') {
            Some(end) => {
                let name = &rest[start + 2..start + 2 + end];
                match params.get(name) {
                    Some(value) => out.push_str(value),
                    None => out.push_str(&rest[start..start + 3 + end]),
                }
                rest = &rest[start + 3 + end..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}
