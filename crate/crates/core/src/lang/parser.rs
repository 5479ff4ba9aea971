//! Line-oriented parser for `.dfl` programs.
//!
//! ```text
//! y = read("file.csv")
//! y = x.select[ROWS][COLS]        ROWS: empty | lo:hi | e, e, ...   COLS: empty | "a", "b"
//! y = concat(a, b)  |  y = join(a, b)
//! y = normalize(x)  |  y = other(x)  |  y = <name>(x)
//! train(a, b)       |  test(c)
//! if { ... } else { ... }
//! loop { ... }
//! ```
//!
//! Row expressions are naturals, `sym`, `sym+k`, `sym-k` or `inf`. A `lo:hi`
//! range is half-open. Statements end at a newline or `;`; `#` starts a comment.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{Function, MergeOp, Program, RowExpr, RowSelector, Statement, Stmt, UseKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: variable `{var}` assigned more than once")]
    SsaViolation { line: usize, var: String },
    #[error("line {line}: use of undefined variable `{var}`")]
    Undefined { line: usize, var: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(u64),
    Sym(char),
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const RESERVED: &[&str] = &[
    "read", "concat", "join", "normalize", "train", "test", "if", "else", "loop", "inf",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '$'
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if is_ident_start(c) {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Ident(s), line, col });
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n = s.parse().map_err(|_| ParseError::Syntax {
                    line,
                    col,
                    msg: format!("integer `{s}` out of range"),
                })?;
                out.push(Token { tok: Tok::Int(n), line, col });
                continue;
            }
            if c == '"' {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(ParseError::Syntax {
                                line,
                                col,
                                msg: "unterminated string".into(),
                            })
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') if i + 1 < chars.len() => {
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Token { tok: Tok::Str(s), line, col });
                continue;
            }
            if c == ';' {
                out.push(Token { tok: Tok::Newline, line, col });
                i += 1;
                continue;
            }
            if "=()[]{},.:+-".contains(c) {
                out.push(Token { tok: Tok::Sym(c), line, col });
                i += 1;
                continue;
            }
            return Err(ParseError::Syntax {
                line,
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
        out.push(Token {
            tok: Tok::Newline,
            line,
            col: chars.len() + 1,
        });
    }
    let line = text.lines().count() + 1;
    out.push(Token { tok: Tok::Eof, line, col: 1 });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek().tok == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{c}`, found {}", describe(&self.peek().tok)))
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected variable name, found {}", describe(other))),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn end_of_statement(&mut self) -> Result<(), ParseError> {
        match self.peek().tok {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof | Tok::Sym('}') => Ok(()),
            ref other => self.error(format!("expected end of statement, found {}", describe(other))),
        }
    }

    fn block(&mut self, nested: bool) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_newlines();
            match self.peek().tok {
                Tok::Eof if !nested => return Ok(out),
                Tok::Eof => return self.error("unclosed block, expected `}`"),
                Tok::Sym('}') if nested => return Ok(out),
                _ => {
                    out.push(self.statement()?);
                    self.end_of_statement()?;
                }
            }
        }
    }

    fn braced(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect_sym('{')?;
        let body = self.block(true)?;
        self.expect_sym('}')?;
        Ok(body)
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let line = self.peek().line;
        if self.is_keyword("if") {
            self.bump();
            let then_body = self.braced()?;
            let else_body = if self.is_keyword("else") {
                self.bump();
                self.braced()?
            } else {
                Vec::new()
            };
            return Ok(Stmt::new(line, Statement::Branch { then_body, else_body }));
        }
        if self.is_keyword("loop") {
            self.bump();
            let body = self.braced()?;
            return Ok(Stmt::new(line, Statement::Loop { body }));
        }
        if self.is_keyword("train") || self.is_keyword("test") {
            let kind = if self.is_keyword("train") {
                UseKind::Train
            } else {
                UseKind::Test
            };
            self.bump();
            self.expect_sym('(')?;
            let mut args = BTreeSet::new();
            args.insert(self.ident()?);
            while self.eat_sym(',') {
                args.insert(self.ident()?);
            }
            self.expect_sym(')')?;
            return Ok(Stmt::new(line, Statement::Use { kind, args }));
        }
        let target = self.ident()?;
        self.expect_sym('=')?;
        let head = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            other => return self.error(format!("expected expression, found {}", describe(other))),
        };
        self.bump();
        let node = match head.as_str() {
            "read" => {
                self.expect_sym('(')?;
                let file = match self.bump().tok {
                    Tok::Str(s) => s,
                    other => {
                        self.pos -= 1;
                        return self.error(format!("expected file name string, found {}", describe(&other)));
                    }
                };
                self.expect_sym(')')?;
                Statement::Read { target, file }
            }
            "concat" | "join" => {
                let op = if head == "concat" {
                    MergeOp::Concat
                } else {
                    MergeOp::Join
                };
                self.expect_sym('(')?;
                let left = self.ident()?;
                self.expect_sym(',')?;
                let right = self.ident()?;
                self.expect_sym(')')?;
                Statement::Merge {
                    target,
                    op,
                    left,
                    right,
                }
            }
            _ if self.peek().tok == Tok::Sym('.') => {
                if RESERVED.contains(&head.as_str()) {
                    return self.error(format!("`{head}` is reserved"));
                }
                self.bump();
                match &self.peek().tok {
                    Tok::Ident(s) if s == "select" => {
                        self.bump();
                    }
                    other => return self.error(format!("expected `select`, found {}", describe(other))),
                }
                let rows = self.rows()?;
                let cols = if self.peek().tok == Tok::Sym('[') {
                    self.cols()?
                } else {
                    None
                };
                Statement::Select {
                    target,
                    source: head,
                    rows,
                    cols,
                }
            }
            _ if RESERVED.contains(&head.as_str()) && head != "normalize" => {
                self.pos -= 1;
                return self.error(format!("`{head}` cannot be used as a function here"));
            }
            _ => {
                self.expect_sym('(')?;
                let source = self.ident()?;
                self.expect_sym(')')?;
                let func = if head == "normalize" {
                    Function::Normalize
                } else {
                    Function::Other(head)
                };
                Statement::Apply { target, func, source }
            }
        };
        Ok(Stmt::new(line, node))
    }

    fn row_expr(&mut self) -> Result<RowExpr, ParseError> {
        match self.peek().tok.clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(RowExpr::Const(n))
            }
            Tok::Ident(s) if s == "inf" => {
                self.bump();
                Ok(RowExpr::Inf)
            }
            Tok::Ident(name) => {
                self.bump();
                let sign = match self.peek().tok {
                    Tok::Sym('+') => 1,
                    Tok::Sym('-') => -1,
                    _ => return Ok(RowExpr::Sym { name, offset: 0 }),
                };
                self.bump();
                match self.bump().tok {
                    Tok::Int(k) => Ok(RowExpr::Sym {
                        name,
                        offset: sign * k as i64,
                    }),
                    _ => {
                        self.pos -= 1;
                        self.error("expected integer offset")
                    }
                }
            }
            other => self.error(format!("expected row expression, found {}", describe(&other))),
        }
    }

    fn rows(&mut self) -> Result<Option<RowSelector>, ParseError> {
        self.expect_sym('[')?;
        if self.eat_sym(']') {
            return Ok(None);
        }
        let sel = if self.eat_sym(':') {
            let hi = if self.peek().tok == Tok::Sym(']') {
                RowExpr::Inf
            } else {
                self.row_expr()?
            };
            RowSelector::Range {
                lo: RowExpr::Const(0),
                hi,
            }
        } else {
            let first = self.row_expr()?;
            if self.eat_sym(':') {
                let hi = if self.peek().tok == Tok::Sym(']') {
                    RowExpr::Inf
                } else {
                    self.row_expr()?
                };
                if first == RowExpr::Inf {
                    return self.error("range cannot start at `inf`");
                }
                RowSelector::Range { lo: first, hi }
            } else {
                let mut list = vec![first];
                while self.eat_sym(',') {
                    list.push(self.row_expr()?);
                }
                if list.contains(&RowExpr::Inf) {
                    return self.error("`inf` is not a row index");
                }
                RowSelector::List(list)
            }
        };
        if let RowSelector::Range { lo, hi } = &sel {
            if lo.le(hi) == Some(false) {
                return self.error(format!("empty row range {lo}:{hi}"));
            }
        }
        self.expect_sym(']')?;
        Ok(Some(sel))
    }

    fn cols(&mut self) -> Result<Option<BTreeSet<String>>, ParseError> {
        self.expect_sym('[')?;
        if self.eat_sym(']') {
            return Ok(None);
        }
        let mut cols = BTreeSet::new();
        loop {
            match self.bump().tok {
                Tok::Str(s) => {
                    cols.insert(s);
                }
                other => {
                    self.pos -= 1;
                    return self.error(format!("expected column name string, found {}", describe(&other)));
                }
            }
            if !self.eat_sym(',') {
                break;
            }
        }
        self.expect_sym(']')?;
        Ok(Some(cols))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Str(s) => format!("string \"{s}\""),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::Newline => "end of line".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Checks the single-assignment discipline and that every read variable is
/// defined. Branch arms may each assign the same name; loop bodies may
/// reassign names carried from before the loop.
fn check_ssa(
    stmts: &[Stmt],
    defined: &mut BTreeSet<String>,
    carried: &BTreeSet<String>,
) -> Result<(), ParseError> {
    let mut local = BTreeSet::new();
    for s in stmts {
        for r in s.node.reads() {
            if !defined.contains(r) {
                return Err(ParseError::Undefined {
                    line: s.line,
                    var: r.to_string(),
                });
            }
        }
        match &s.node {
            Statement::Branch { then_body, else_body } => {
                let mut d1 = defined.clone();
                check_ssa(then_body, &mut d1, carried)?;
                let mut d2 = defined.clone();
                check_ssa(else_body, &mut d2, carried)?;
                for v in d1.union(&d2) {
                    if !defined.contains(v) {
                        local.insert(v.clone());
                    }
                }
                defined.extend(d1);
                defined.extend(d2);
            }
            Statement::Loop { body } => {
                let mut inner_carried = carried.clone();
                inner_carried.extend(defined.iter().cloned());
                let mut d = defined.clone();
                check_ssa(body, &mut d, &inner_carried)?;
                defined.extend(d);
            }
            node => {
                if let Some(t) = node.target() {
                    let reassign_ok = carried.contains(t) && !local.contains(t);
                    if (defined.contains(t) && !reassign_ok) || local.contains(t) {
                        return Err(ParseError::SsaViolation {
                            line: s.line,
                            var: t.to_string(),
                        });
                    }
                    local.insert(t.to_string());
                    defined.insert(t.to_string());
                }
            }
        }
    }
    Ok(())
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let statements = p.block(false)?;
    check_ssa(&statements, &mut BTreeSet::new(), &BTreeSet::new())?;
    Ok(Program { statements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_read() {
        let p = parse_program(r#"data = read("data.csv")"#).unwrap();
        assert_eq!(
            p.statements[0].node,
            Statement::Read {
                target: "data".into(),
                file: "data.csv".into()
            }
        );
    }

    #[test]
    fn empty_text_is_empty_program() {
        assert!(parse_program("").unwrap().is_empty());
        assert!(parse_program("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn rejects_double_assignment() {
        let err = parse_program(r#"x = read("f"); x = read("g")"#).unwrap_err();
        assert_eq!(
            err,
            ParseError::SsaViolation {
                line: 1,
                var: "x".into()
            }
        );
    }

    #[test]
    fn rejects_undefined_variable() {
        let err = parse_program("y = normalize(x)").unwrap_err();
        assert!(matches!(err, ParseError::Undefined { line: 1, ref var } if var == "x"));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_program("x = read(\"f\")\ny = x.select[1:][\n").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn select_forms() {
        let p = parse_program(
            "x = read(\"f\")\na = x.select[:split+1]\nb = x.select[split:end-1][\"c\"]\nc = x.select[1, 1, 3][]\nd = x.select[][\"a\", \"b\"]",
        )
        .unwrap();
        match &p.statements[1].node {
            Statement::Select { rows, cols, .. } => {
                assert_eq!(
                    rows,
                    &Some(RowSelector::Range {
                        lo: RowExpr::Const(0),
                        hi: RowExpr::sym("split", 1)
                    })
                );
                assert_eq!(cols, &None);
            }
            other => panic!("{other:?}"),
        }
        match &p.statements[3].node {
            Statement::Select { rows: Some(RowSelector::List(l)), .. } => assert_eq!(l.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn other_functions_keep_their_name() {
        let p = parse_program("x = read(\"f\")\ny = dropna(x)\nz = other(y)").unwrap();
        assert_eq!(
            p.statements[1].node,
            Statement::Apply {
                target: "y".into(),
                func: Function::Other("dropna".into()),
                source: "x".into()
            }
        );
    }

    #[test]
    fn blocks_and_phi_assignments() {
        let src = "x = read(\"f\")\nif {\n  y = normalize(x)\n} else {\n  y = other(x)\n}\nacc = other(x)\nloop {\n  acc = concat(acc, y)\n}\ntrain(acc)";
        let p = parse_program(src).unwrap();
        assert_eq!(p.statements.len(), 5);
    }

    #[test]
    fn rejects_inverted_constant_range() {
        assert!(parse_program("x = read(\"f\")\ny = x.select[4:3]").is_err());
    }
}
