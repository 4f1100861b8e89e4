//! Concrete syntax: lexer, recursive-descent parser, pretty printer, and the
//! program-point annotation transformation.
//!
//! ```text
//! stmts := stmt (';' stmts)?                      right-associative
//! stmt  := 'skip'
//!        | 'if' expr 'then' block 'else' block
//!        | 'while' expr 'do' block
//!        | 'delete' postfix                        postfix must end in '.f'
//!        | postfix '=' expr                        x = e  or  e.f = e
//!        | block                                   grouping
//! block := '{' stmts '}'
//! expr  := postfix (('==' | '&&' | '||') postfix)*  left-associative
//! postfix := primary ('.' ident)*
//! primary := 'true' | 'false' | ident | '{' '}' | '(' expr ')'
//! ```

use std::fmt;

use thiserror::Error;

use crate::ast::{deep, BinOp, Decor, Expr, ExprKind, Ident, Stat, StatKind};
use crate::pp::{PathAtom, ProgramPoint};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub text: String,
    pub path: Option<String>,
}

impl SourceProgram {
    pub fn new(text: impl Into<String>) -> Self {
        SourceProgram {
            text: text.into(),
            path: None,
        }
    }

    pub fn with_path(text: impl Into<String>, path: impl Into<String>) -> Self {
        SourceProgram {
            text: text.into(),
            path: Some(path.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub path: Option<String>,
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{p}:")?;
        }
        write!(
            f,
            "{}:{}: syntax error: expected {}, found {}",
            self.line,
            self.col,
            self.expected.join(" or "),
            self.found
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Skip,
    If,
    Then,
    Else,
    While,
    Do,
    Delete,
    True,
    False,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Dot,
    Assign,
    EqEq,
    AndAnd,
    OrOr,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(x) => return write!(f, "identifier `{x}`"),
            Tok::Skip => "`skip`",
            Tok::If => "`if`",
            Tok::Then => "`then`",
            Tok::Else => "`else`",
            Tok::While => "`while`",
            Tok::Do => "`do`",
            Tok::Delete => "`delete`",
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Semi => "`;`",
            Tok::Dot => "`.`",
            Tok::Assign => "`=`",
            Tok::EqEq => "`==`",
            Tok::AndAnd => "`&&`",
            Tok::OrOr => "`||`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &SourceProgram) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, found: String, expected: &str| ParseError {
        path: src.path.clone(),
        line,
        col,
        expected: vec![expected.to_string()],
        found,
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut bump = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                bump(1, &mut i);
                continue;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            _ => {}
        }
        let two = |a: char| chars.get(i + 1) == Some(&a);
        let tok = match c {
            '{' => {
                bump(1, &mut i);
                Tok::LBrace
            }
            '}' => {
                bump(1, &mut i);
                Tok::RBrace
            }
            '(' => {
                bump(1, &mut i);
                Tok::LParen
            }
            ')' => {
                bump(1, &mut i);
                Tok::RParen
            }
            ';' => {
                bump(1, &mut i);
                Tok::Semi
            }
            '.' => {
                bump(1, &mut i);
                Tok::Dot
            }
            '=' if two('=') => {
                bump(2, &mut i);
                Tok::EqEq
            }
            '=' => {
                bump(1, &mut i);
                Tok::Assign
            }
            '&' if two('&') => {
                bump(2, &mut i);
                Tok::AndAnd
            }
            '|' if two('|') => {
                bump(2, &mut i);
                Tok::OrOr
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                match word.as_str() {
                    "skip" => Tok::Skip,
                    "if" => Tok::If,
                    "then" => Tok::Then,
                    "else" => Tok::Else,
                    "while" => Tok::While,
                    "do" => Tok::Do,
                    "delete" => Tok::Delete,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word),
                }
            }
            other => return Err(err(tl, tc, format!("`{other}`"), "a token")),
        };
        out.push(Spanned {
            tok,
            line: tl,
            col: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    path: &'a Option<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        let i = (self.pos + 1).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            path: self.path.clone(),
            line: s.line,
            col: s.col,
            expected: expected.iter().map(|e| e.to_string()).collect(),
            found: s.tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.error(&[&tok.to_string()]))
        }
    }

    fn ident(&mut self) -> Result<Ident, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.advance();
                Ok(Ident::new(&x))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn stmts(&mut self) -> Result<Stat, ParseError> {
        let mut items = vec![self.stmt()?];
        while *self.peek() == Tok::Semi {
            self.advance();
            items.push(self.stmt()?);
        }
        Ok(Stat::seq_all(items))
    }

    fn block(&mut self) -> Result<Stat, ParseError> {
        self.expect(Tok::LBrace)?;
        let s = self.stmts()?;
        self.expect(Tok::RBrace)?;
        Ok(s)
    }

    fn stmt(&mut self) -> Result<Stat, ParseError> {
        deep(|| self.stmt_inner())
    }

    fn stmt_inner(&mut self) -> Result<Stat, ParseError> {
        match self.peek() {
            Tok::Skip => {
                self.advance();
                Ok(Stat::skip())
            }
            Tok::If => {
                self.advance();
                let c = self.expr()?;
                self.expect(Tok::Then)?;
                let t = self.block()?;
                self.expect(Tok::Else)?;
                let e = self.block()?;
                Ok(Stat::new(StatKind::If(c, Box::new(t), Box::new(e))))
            }
            Tok::While => {
                self.advance();
                let c = self.expr()?;
                self.expect(Tok::Do)?;
                let b = self.block()?;
                Ok(Stat::new(StatKind::While(c, Box::new(b))))
            }
            Tok::Delete => {
                self.advance();
                let target = self.postfix()?;
                match target.kind {
                    ExprKind::Fld(base, f) => Ok(Stat::new(StatKind::Del(*base, f))),
                    _ => Err(self.error(&["`.` field access"])),
                }
            }
            // `{` opens a statement block unless it is the `{}` literal.
            Tok::LBrace if *self.peek2() != Tok::RBrace => self.block(),
            Tok::Ident(_) | Tok::LParen | Tok::LBrace | Tok::True | Tok::False => {
                let lhs = self.postfix()?;
                if *self.peek() != Tok::Assign {
                    return Err(self.error(&["`=`", "`.`"]));
                }
                self.advance();
                let rhs = self.expr()?;
                match lhs.kind {
                    ExprKind::Var(x) => Ok(Stat::new(StatKind::Asg(x, rhs))),
                    ExprKind::Fld(base, f) => Ok(Stat::new(StatKind::FldAsg(*base, f, rhs))),
                    _ => Err(ParseError {
                        expected: vec!["assignable expression".into()],
                        found: "non-assignable expression".into(),
                        ..self.error(&[])
                    }),
                }
            }
            _ => Err(self.error(&["statement"])),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.postfix()?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::AndAnd => BinOp::And,
                Tok::OrOr => BinOp::Or,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.postfix()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::Dot {
            self.advance();
            let f = self.ident()?;
            e = Expr::new(ExprKind::Fld(Box::new(e), f));
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::True => {
                self.advance();
                Ok(Expr::cst(true))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::cst(false))
            }
            Tok::Ident(x) => {
                self.advance();
                Ok(Expr::new(ExprKind::Var(Ident::new(&x))))
            }
            Tok::LBrace => {
                self.advance();
                self.expect(Tok::RBrace)?;
                Ok(Expr::obj())
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}

/// Parses a program into an undecorated statement.
pub fn parse(src: &SourceProgram) -> Result<Stat, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        path: &src.path,
    };
    let s = p.stmts()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["`;`", "end of input"]));
    }
    Ok(s)
}

pub fn parse_str(text: &str) -> Result<Stat, ParseError> {
    parse(&SourceProgram::new(text))
}

pub fn pretty(s: &Stat) -> String {
    let mut out = String::new();
    pretty_stat(s, &mut out);
    out
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    pretty_e(e, &mut out);
    out
}

fn pretty_stat(s: &Stat, out: &mut String) {
    deep(|| pretty_stat_inner(s, out))
}

fn pretty_stat_inner(s: &Stat, out: &mut String) {
    match &s.kind {
        StatKind::Skip => out.push_str("skip"),
        StatKind::Seq(a, b) => {
            // A left-nested sequence needs grouping to survive re-parsing.
            if matches!(a.kind, StatKind::Seq(..)) {
                out.push_str("{ ");
                pretty_stat(a, out);
                out.push_str(" }");
            } else {
                pretty_stat(a, out);
            }
            out.push_str("; ");
            pretty_stat(b, out);
        }
        StatKind::If(c, t, e) => {
            out.push_str("if ");
            pretty_e(c, out);
            out.push_str(" then { ");
            pretty_stat(t, out);
            out.push_str(" } else { ");
            pretty_stat(e, out);
            out.push_str(" }");
        }
        StatKind::While(c, b) => {
            out.push_str("while ");
            pretty_e(c, out);
            out.push_str(" do { ");
            pretty_stat(b, out);
            out.push_str(" }");
        }
        StatKind::Asg(x, e) => {
            out.push_str(x.as_str());
            out.push_str(" = ");
            pretty_e(e, out);
        }
        StatKind::FldAsg(t, f, e) => {
            pretty_base(t, out);
            out.push('.');
            out.push_str(f.as_str());
            out.push_str(" = ");
            pretty_e(e, out);
        }
        StatKind::Del(t, f) => {
            out.push_str("delete ");
            pretty_base(t, out);
            out.push('.');
            out.push_str(f.as_str());
        }
    }
}

fn pretty_base(e: &Expr, out: &mut String) {
    if matches!(e.kind, ExprKind::Bin(..)) {
        out.push('(');
        pretty_e(e, out);
        out.push(')');
    } else {
        pretty_e(e, out);
    }
}

fn pretty_e(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Cst(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Var(x) => out.push_str(x.as_str()),
        ExprKind::ObjNew => out.push_str("{}"),
        ExprKind::Fld(b, f) => {
            pretty_base(b, out);
            out.push('.');
            out.push_str(f.as_str());
        }
        ExprKind::Bin(op, a, b) => {
            pretty_e(a, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            if matches!(b.kind, ExprKind::Bin(..)) {
                out.push('(');
                pretty_e(b, out);
                out.push(')');
            } else {
                pretty_e(b, out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("program is already annotated with program points")]
pub struct AlreadyDecorated;

/// Decorates every sub-term with its before/after program points, starting
/// from context `pp`.
pub fn annotate_pp(pp: &ProgramPoint, s: &Stat) -> Result<Stat, AlreadyDecorated> {
    if !s.is_bare() {
        return Err(AlreadyDecorated);
    }
    Ok(annotate_stat(pp, s))
}

/// Annotation from the root context.
pub fn annotate(s: &Stat) -> Result<Stat, AlreadyDecorated> {
    annotate_pp(&ProgramPoint::root(), s)
}

fn decor(pp: &ProgramPoint, atom: PathAtom) -> Option<Decor> {
    Some(Decor {
        before: pp.clone(),
        after: pp.child(atom),
    })
}

fn annotate_stat(pp: &ProgramPoint, s: &Stat) -> Stat {
    deep(|| annotate_stat_inner(pp, s))
}

fn annotate_stat_inner(pp: &ProgramPoint, s: &Stat) -> Stat {
    let (kind, atom) = match &s.kind {
        StatKind::Skip => (StatKind::Skip, PathAtom::Skip),
        StatKind::Seq(a, b) => (
            StatKind::Seq(
                Box::new(annotate_stat(&pp.child(PathAtom::Seq1), a)),
                Box::new(annotate_stat(&pp.child(PathAtom::Seq2), b)),
            ),
            PathAtom::Seq,
        ),
        StatKind::If(c, t, e) => (
            StatKind::If(
                annotate_expr(&pp.child(PathAtom::IfE), c),
                Box::new(annotate_stat(&pp.child(PathAtom::If1), t)),
                Box::new(annotate_stat(&pp.child(PathAtom::If2), e)),
            ),
            PathAtom::If,
        ),
        StatKind::While(c, b) => (
            StatKind::While(
                annotate_expr(&pp.child(PathAtom::WhileE), c),
                Box::new(annotate_stat(&pp.child(PathAtom::WhileS), b)),
            ),
            PathAtom::While,
        ),
        StatKind::Asg(x, e) => (
            StatKind::Asg(x.clone(), annotate_expr(&pp.child(PathAtom::AsgE), e)),
            PathAtom::Asg,
        ),
        StatKind::FldAsg(t, f, e) => (
            StatKind::FldAsg(
                annotate_expr(&pp.child(PathAtom::FldAsg1), t),
                f.clone(),
                annotate_expr(&pp.child(PathAtom::FldAsg2), e),
            ),
            PathAtom::FldAsg,
        ),
        StatKind::Del(t, f) => (
            StatKind::Del(annotate_expr(&pp.child(PathAtom::DelE), t), f.clone()),
            PathAtom::Del,
        ),
    };
    Stat {
        kind,
        pp: decor(pp, atom),
    }
}

fn annotate_expr(pp: &ProgramPoint, e: &Expr) -> Expr {
    let (kind, atom) = match &e.kind {
        ExprKind::Cst(b) => (ExprKind::Cst(*b), PathAtom::Cst),
        ExprKind::Var(x) => (ExprKind::Var(x.clone()), PathAtom::Var),
        ExprKind::ObjNew => (ExprKind::ObjNew, PathAtom::Obj),
        ExprKind::Bin(op, a, b) => (
            ExprKind::Bin(
                *op,
                Box::new(annotate_expr(&pp.child(PathAtom::Bin1), a)),
                Box::new(annotate_expr(&pp.child(PathAtom::Bin2), b)),
            ),
            PathAtom::Bin,
        ),
        ExprKind::Fld(b, f) => (
            ExprKind::Fld(
                Box::new(annotate_expr(&pp.child(PathAtom::FldE), b)),
                f.clone(),
            ),
            PathAtom::Fld,
        ),
    };
    Expr {
        kind,
        pp: decor(pp, atom),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::RuleName;

    pub(crate) const SEC45: &str = "x = {}; x.f = {}; if false then { y = x.f } else { y = {} }";

    #[test]
    fn parse_skip() {
        assert_eq!(parse_str("skip").unwrap(), Stat::skip());
    }

    #[test]
    fn parse_two_assignments() {
        let s = parse_str("x = true; y = x").unwrap();
        assert_eq!(
            s,
            Stat::seq(
                Stat::asg("x", Expr::cst(true)),
                Stat::asg("y", Expr::var("x"))
            )
        );
    }

    #[test]
    fn parse_branch_alloc() {
        let s = parse_str(SEC45).unwrap();
        let expected = Stat::seq(
            Stat::asg("x", Expr::obj()),
            Stat::seq(
                Stat::fld_asg(Expr::var("x"), "f", Expr::obj()),
                Stat::if_(
                    Expr::cst(false),
                    Stat::asg("y", Expr::fld(Expr::var("x"), "f")),
                    Stat::asg("y", Expr::obj()),
                ),
            ),
        );
        assert_eq!(s, expected);
    }

    #[test]
    fn pretty_examples() {
        assert_eq!(pretty(&Stat::skip()), "skip");
        assert_eq!(pretty(&Stat::seq(Stat::skip(), Stat::skip())), "skip; skip");
        assert_eq!(
            pretty(&Stat::asg("x", Expr::fld(Expr::var("y"), "f"))),
            "x = y.f"
        );
    }

    #[test]
    fn binary_ops_are_left_associative() {
        let s = parse_str("x = a == b && c").unwrap();
        let e = Expr::bin(
            BinOp::And,
            Expr::bin(BinOp::Eq, Expr::var("a"), Expr::var("b")),
            Expr::var("c"),
        );
        assert_eq!(s, Stat::asg("x", e));
        let s2 = parse_str("x = a == (b && c)").unwrap();
        assert_eq!(pretty(&s2), "x = a == (b && c)");
    }

    #[test]
    fn left_nested_sequence_round_trips() {
        let s = Stat::seq(Stat::seq(Stat::skip(), Stat::skip()), Stat::skip());
        let text = pretty(&s);
        assert_eq!(text, "{ skip; skip }; skip");
        assert_eq!(parse_str(&text).unwrap(), s);
    }

    #[test]
    fn object_literal_statement_is_not_a_block() {
        let s = parse_str("{}.f = true").unwrap();
        assert_eq!(s, Stat::fld_asg(Expr::obj(), "f", Expr::cst(true)));
    }

    #[test]
    fn comments_and_whitespace() {
        let s = parse_str("// leading\nskip // trailing\n; skip").unwrap();
        assert_eq!(s, Stat::seq(Stat::skip(), Stat::skip()));
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_str("x = true;\n  y = ").unwrap_err();
        assert_eq!((err.line, err.col), (2, 7));
        assert_eq!(err.expected, vec!["expression".to_string()]);
        assert_eq!(err.found, "end of input");
        let err = parse_str("if x then { skip }").unwrap_err();
        assert_eq!(err.expected, vec!["`else`".to_string()]);
        assert!(parse_str("delete x").is_err());
        assert!(parse_str("true = x").is_err());
        assert!(parse_str("x = $").is_err());
        assert!(parse_str("skip skip").is_err());
        assert!(parse_str("while = true").is_err());
    }

    #[test]
    fn annotate_skip() {
        let s = annotate(&Stat::skip()).unwrap();
        let d = s.pp.unwrap();
        assert_eq!(d.before.to_string(), "·");
        assert_eq!(d.after.to_string(), "Skip");
    }

    #[test]
    fn annotate_branch_alloc_condition() {
        let s = annotate(&parse_str(SEC45).unwrap()).unwrap();
        let cst = s
            .decors()
            .into_iter()
            .find(|(r, _)| *r == RuleName::Cst)
            .map(|(_, d)| d.clone())
            .unwrap();
        assert_eq!(cst.before.to_string(), "Seq2/Seq2/IfE");
        assert_eq!(cst.after.to_string(), "Seq2/Seq2/IfE/Cst");
    }

    #[test]
    fn annotate_rejects_decorated() {
        let s = annotate(&Stat::skip()).unwrap();
        assert_eq!(annotate(&s), Err(AlreadyDecorated));
    }
}
