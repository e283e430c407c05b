//! Recursive descent parser for the `.lince` surface syntax.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::lexer::{tokenize, Tok, Token};
use super::{Atomic, BoolExpr, CmpOp, Decl, Diff, Expr, ExprKind, Func, Program, SourceUnit, Span};

#[derive(Clone, Debug, PartialEq)]
pub enum ParseErrorKind {
    Unexpected {
        expected: Vec<String>,
        found: String,
    },
    Arity {
        func: &'static str,
        expected: usize,
        found: usize,
    },
    UnknownFunction(String),
    InvalidCharacter(String),
    DuplicateVariable(String),
    Declaration(String),
}

/// Syntax error with the byte span it refers to.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
}

impl ParseError {
    pub fn is_arity(&self) -> bool {
        matches!(self.kind, ParseErrorKind::Arity { .. })
    }

    pub fn message(&self) -> String {
        match &self.kind {
            ParseErrorKind::Unexpected { expected, found } => {
                format!("expected {}, found {found}", expected.join(" or "))
            }
            ParseErrorKind::Arity { func, expected, found } => {
                format!("the function '{func}' expects {expected} argument(s) but was given {found}")
            }
            ParseErrorKind::UnknownFunction(name) => format!("unknown function '{name}'"),
            ParseErrorKind::InvalidCharacter(c) => format!("invalid character or literal '{c}'"),
            ParseErrorKind::DuplicateVariable(v) => format!("the variable '{v}' is bound more than once"),
            ParseErrorKind::Declaration(msg) => msg.clone(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message())
    }
}

type PResult<T> = Result<T, ParseError>;

enum TopStmt {
    Program(Program),
    VarList { var: String, values: Vec<f64>, span: Span },
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

/// Parses a complete source file.
pub fn parse(src: &str) -> Result<SourceUnit, ParseError> {
    let tokens = tokenize(src).map_err(|e| ParseError {
        kind: ParseErrorKind::InvalidCharacter(e.found),
        span: e.span,
    })?;
    let mut p = Parser { tokens, pos: 0 };
    let stmts = p.statements(true)?;
    p.expect(Tok::Eof, "end of input")?;
    split_unit(stmts)
}

fn split_unit(stmts: Vec<TopStmt>) -> PResult<SourceUnit> {
    // The declaration block runs up to and including the last listing.
    let decl_end = stmts
        .iter()
        .rposition(|s| matches!(s, TopStmt::VarList { .. }))
        .map_or(0, |i| i + 1);
    let mut decls = Vec::new();
    let mut body = Vec::new();
    let mut last_span = Span::SYNTHETIC;
    for (i, stmt) in stmts.into_iter().enumerate() {
        match stmt {
            TopStmt::VarList { var, values, span } => {
                let dup = decls
                    .iter()
                    .any(|d| matches!(d, Decl::VarList { var: v, .. } if *v == var));
                if dup {
                    return Err(ParseError {
                        kind: ParseErrorKind::Declaration(format!(
                            "the variable '{var}' has more than one listing of initial values"
                        )),
                        span,
                    });
                }
                last_span = span;
                decls.push(Decl::VarList { var, values, span });
            }
            TopStmt::Program(Program::Atom(Atomic::Assign { var, expr, span })) if i < decl_end => {
                decls.push(Decl::Assign { var, expr, span });
            }
            TopStmt::Program(_) if i < decl_end => {
                return Err(ParseError {
                    kind: ParseErrorKind::Declaration(
                        "listings of initial values must precede the program body".into(),
                    ),
                    span: last_span,
                });
            }
            TopStmt::Program(p) => body.push(p),
        }
    }
    if body.is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Declaration("a listing of initial values must be followed by a program body".into()),
            span: last_span,
        });
    }
    Ok(SourceUnit {
        decls,
        body: Program::sequence(body),
    })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            kind: ParseErrorKind::Unexpected {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: self.peek().describe(),
            },
            span: self.span(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            self.unexpected(&[what])
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok((name, span))
            }
            _ => self.unexpected(&["identifier"]),
        }
    }

    // ---- statements ----

    fn statements(&mut self, top: bool) -> PResult<Vec<TopStmt>> {
        let mut out = vec![self.statement(top)?];
        while self.eat(&Tok::Semi) {
            if matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                break;
            }
            out.push(self.statement(top)?);
        }
        Ok(out)
    }

    fn block(&mut self) -> PResult<Program> {
        self.expect(Tok::LBrace, "`{`")?;
        let stmts = self.statements(false)?;
        self.expect(Tok::RBrace, "`}`")?;
        let progs = stmts
            .into_iter()
            .map(|s| match s {
                TopStmt::Program(p) => p,
                TopStmt::VarList { .. } => unreachable!("listings are only parsed at top level"),
            })
            .collect();
        Ok(Program::sequence(progs))
    }

    fn branch(&mut self) -> PResult<Program> {
        if *self.peek() == Tok::LBrace {
            self.block()
        } else {
            match self.statement(false)? {
                TopStmt::Program(p) => Ok(p),
                TopStmt::VarList { .. } => unreachable!(),
            }
        }
    }

    fn statement(&mut self, top: bool) -> PResult<TopStmt> {
        match self.peek() {
            Tok::If => {
                self.bump();
                let cond = self.bool_expr()?;
                self.expect(Tok::Then, "`then`")?;
                let p = self.branch()?;
                self.expect(Tok::Else, "`else`")?;
                let q = self.branch()?;
                Ok(TopStmt::Program(Program::if_then_else(cond, p, q)))
            }
            Tok::While => {
                self.bump();
                let cond = self.bool_expr()?;
                self.expect(Tok::Do, "`do`")?;
                let body = self.block()?;
                Ok(TopStmt::Program(Program::while_do(cond, body)))
            }
            Tok::Ident(_) => match self.peek_at(1) {
                Tok::Assign => self.assignment(top),
                Tok::Prime => self.differential().map(TopStmt::Program),
                _ => {
                    self.bump();
                    self.unexpected(&["`:=`", "`'`"])
                }
            },
            _ => self.unexpected(&["statement"]),
        }
    }

    fn assignment(&mut self, top: bool) -> PResult<TopStmt> {
        let (var, start) = self.ident()?;
        self.expect(Tok::Assign, "`:=`")?;
        if *self.peek() == Tok::LBrace {
            if !top {
                return Err(ParseError {
                    kind: ParseErrorKind::Declaration(
                        "listings of initial values are only allowed at top level".into(),
                    ),
                    span: self.span(),
                });
            }
            self.bump();
            let mut values = Vec::new();
            loop {
                let neg = self.eat(&Tok::Minus);
                match *self.peek() {
                    Tok::Number(v) => {
                        self.bump();
                        values.push(if neg { -v } else { v });
                    }
                    _ => return self.unexpected(&["number"]),
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace, "`}`")?;
            return Ok(TopStmt::VarList {
                var,
                values,
                span: start.merge(self.prev_span()),
            });
        }
        let expr = self.expr()?;
        let span = start.merge(expr.span);
        Ok(TopStmt::Program(Program::Atom(Atomic::Assign { var, expr, span })))
    }

    fn differential(&mut self) -> PResult<Program> {
        let start = self.span();
        let mut eqs: Vec<(String, Expr)> = Vec::new();
        loop {
            let (var, vspan) = self.ident()?;
            if eqs.iter().any(|(v, _)| *v == var) {
                return Err(ParseError {
                    kind: ParseErrorKind::DuplicateVariable(var),
                    span: vspan,
                });
            }
            self.expect(Tok::Prime, "`'`")?;
            self.expect(Tok::Eq, "`=`")?;
            let rhs = self.expr()?;
            eqs.push((var, rhs));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        if *self.peek() != Tok::For {
            return self.unexpected(&["`,`", "`for`"]);
        }
        self.bump();
        let duration = self.expr()?;
        let span = start.merge(duration.span);
        Ok(Program::Atom(Atomic::Diff(Diff { eqs, duration, span })))
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let func = match self.peek() {
                Tok::Plus => Func::Add,
                Tok::Minus => Func::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            let span = lhs.span.merge(rhs.span);
            lhs = Expr::new(ExprKind::Apply(func, vec![lhs, rhs]), span);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let func = match self.peek() {
                Tok::Star => Func::Mul,
                Tok::Slash => Func::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            let span = lhs.span.merge(rhs.span);
            lhs = Expr::new(ExprKind::Apply(func, vec![lhs, rhs]), span);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() != Tok::Minus {
            return self.atom();
        }
        let start = self.bump().span;
        // A minus glued to a literal is a negative literal.
        if let Tok::Number(v) = *self.peek() {
            let end = self.bump().span;
            return Ok(Expr::new(ExprKind::Const(-v), start.merge(end)));
        }
        let operand = self.unary()?;
        let span = start.merge(operand.span);
        Ok(Expr::new(ExprKind::Apply(Func::Neg, vec![operand]), span))
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Number(v) => {
                let span = self.bump().span;
                Ok(Expr::new(ExprKind::Const(v), span))
            }
            Tok::LParen => {
                let start = self.bump().span;
                let mut inner = self.expr()?;
                let end = self.expect(Tok::RParen, "`)`")?;
                inner.span = start.merge(end);
                Ok(inner)
            }
            Tok::Ident(name) => {
                let span = self.bump().span;
                if *self.peek() == Tok::LParen {
                    return self.call(name, span);
                }
                let kind = match name.as_str() {
                    "pi" => ExprKind::Const(core::f64::consts::PI),
                    "euler" => ExprKind::Const(core::f64::consts::E),
                    _ => ExprKind::Var(name),
                };
                Ok(Expr::new(kind, span))
            }
            _ => self.unexpected(&["expression"]),
        }
    }

    fn call(&mut self, name: String, name_span: Span) -> PResult<Expr> {
        let Some(func) = Func::from_call_name(&name) else {
            return Err(ParseError {
                kind: ParseErrorKind::UnknownFunction(name),
                span: name_span,
            });
        };
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.expr()?);
            while self.eat(&Tok::Comma) {
                args.push(self.expr()?);
            }
        }
        let end = self.expect(Tok::RParen, "`)`")?;
        let span = name_span.merge(end);
        if args.len() != func.arity() {
            return Err(ParseError {
                kind: ParseErrorKind::Arity {
                    func: func.name(),
                    expected: func.arity(),
                    found: args.len(),
                },
                span,
            });
        }
        Ok(Expr::new(ExprKind::Apply(func, args), span))
    }

    // ---- boolean conditions ----

    fn bool_expr(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bool_and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.bool_and()?;
            lhs = BoolExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn bool_and(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bool_atom()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.bool_atom()?;
            lhs = BoolExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn bool_atom(&mut self) -> PResult<BoolExpr> {
        match self.peek() {
            Tok::True => {
                self.bump();
                Ok(BoolExpr::True)
            }
            Tok::False => {
                self.bump();
                Ok(BoolExpr::False)
            }
            Tok::Bang => {
                self.bump();
                Ok(BoolExpr::negate(self.bool_atom()?))
            }
            Tok::LParen => {
                // `(` opens either a parenthesised condition or an arithmetic
                // operand of a comparison; try the former first.
                let save = self.pos;
                self.bump();
                if let Ok(inner) = self.bool_expr() {
                    if self.eat(&Tok::RParen) && !self.continues_arithmetic() {
                        return Ok(inner);
                    }
                }
                self.pos = save;
                self.comparison()
            }
            _ => self.comparison(),
        }
    }

    fn continues_arithmetic(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Plus
                | Tok::Minus
                | Tok::Star
                | Tok::Slash
                | Tok::Le
                | Tok::Lt
                | Tok::Ge
                | Tok::Gt
                | Tok::EqEq
                | Tok::Neq
        )
    }

    fn comparison(&mut self) -> PResult<BoolExpr> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Le => None,
            Tok::Lt => Some(CmpOp::Lt),
            Tok::Gt => Some(CmpOp::Gt),
            Tok::Ge => Some(CmpOp::Geq),
            Tok::EqEq => Some(CmpOp::Eq),
            Tok::Neq => Some(CmpOp::Neq),
            _ => return self.unexpected(&["`<=`", "`<`", "`>=`", "`>`", "`==`", "`!=`"]),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(match op {
            None => BoolExpr::Leq(lhs, rhs),
            Some(op) => BoolExpr::Sugar(op, lhs, rhs),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(src: &str) -> Program {
        parse(src).unwrap().body
    }

    fn diff(eqs: Vec<(&str, Expr)>, d: f64) -> Program {
        Program::diff(eqs, Expr::num(d))
    }

    #[test]
    fn accelerate_then_brake() {
        let expected = Program::seq(
            diff(vec![("p", Expr::var("v")), ("v", Expr::num(2.0))], 1.0),
            diff(vec![("p", Expr::var("v")), ("v", Expr::num(-2.0))], 1.0),
        );
        assert_eq!(body("p' = v, v' = 2 for 1 ; p' = v, v' = -2 for 1"), expected);
    }

    #[test]
    fn reciprocal_assignment() {
        let expected = Program::assign("x", Expr::binary(Func::Div, Expr::num(1.0), Expr::var("x")));
        assert_eq!(body("x := 1/x"), expected);
    }

    #[test]
    fn skip_is_not_a_statement() {
        let err = parse("while tt do { skip }").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Unexpected { .. }));
        assert_eq!(err.span.start, 19);
    }

    #[test]
    fn arity_is_checked() {
        let err = parse("x := sqrt(1, 2)").unwrap_err();
        assert!(err.is_arity());
        let err = parse("x := min(1)").unwrap_err();
        assert!(err.is_arity());
    }

    #[test]
    fn unknown_function() {
        let err = parse("x := foo(1)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownFunction("foo".into()));
    }

    #[test]
    fn sequences_are_right_nested() {
        let p = body("x := 1; y := 2; z := 3");
        assert!(p.is_right_nested());
        match p {
            Program::Seq(_, rest) => assert!(matches!(*rest, Program::Seq(..))),
            _ => panic!("expected a sequence"),
        }
    }

    #[test]
    fn declarations_split_off_the_body() {
        let unit = parse("x := {0, 2, 4}; y := 0; vx := {4, 8, 12}; x' = vx for 1").unwrap();
        assert_eq!(unit.decls.len(), 3);
        assert!(matches!(&unit.decls[2], Decl::VarList { values, .. } if values.len() == 3));
        assert!(matches!(unit.body, Program::Atom(Atomic::Diff(_))));
    }

    #[test]
    fn listing_after_body_is_rejected() {
        let err = parse("x' = 1 for 1; y := {1, 2}; y := 1").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Declaration(_)));
        let err = parse("x := {1}").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Declaration(_)));
        let err = parse("x := {1}; x := {2}; y := x").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Declaration(_)));
    }

    #[test]
    fn parenthesised_conditions_and_operands() {
        let p = body("if (x + 1) * 2 <= 3 && (y > 0 || !(z == 1)) then x := 1 else { x := 2 }");
        let Program::If(cond, _, _) = p else {
            panic!("expected if")
        };
        let BoolExpr::And(lhs, rhs) = cond else {
            panic!("expected conjunction")
        };
        assert!(matches!(*lhs, BoolExpr::Leq(..)));
        assert!(matches!(*rhs, BoolExpr::Or(..)));
    }

    #[test]
    fn named_constants_fold() {
        assert_eq!(body("x := pi"), Program::assign("x", Expr::num(core::f64::consts::PI)));
    }

    #[test]
    fn duplicate_differential_variable() {
        let err = parse("x' = 1, x' = 2 for 1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateVariable("x".into()));
    }

    #[test]
    fn spans_point_into_source() {
        let src = "c := 0;\nx := rU/(c)";
        let unit = parse(src).unwrap();
        let Program::Seq(_, second) = &unit.body else {
            panic!("expected a sequence")
        };
        let Program::Atom(Atomic::Assign { expr, .. }) = &**second else {
            panic!("expected an assignment")
        };
        assert_eq!(expr.span.text(src), Some("rU/(c)"));
        assert_eq!(expr.span.line_col(src), Some((2, 6)));
    }

    #[test]
    fn trailing_semicolons_and_comments() {
        let p = body("// header\nx := 1; // one\ny := 2;\n");
        assert!(parse("x := 1; y := 2").unwrap().decls.is_empty());
        assert_eq!(
            p,
            Program::seq(
                Program::assign("x", Expr::num(1.0)),
                Program::assign("y", Expr::num(2.0))
            )
        );
    }
}
