//! Abstract syntax of hybrid programs, together with the lexer, parser,
//! desugarer and pretty-printer for the concrete `.lince` syntax.
//!
//! Every node carries a byte [`Span`] into the source it was parsed from.
//! Spans never take part in structural equality, so a program rebuilt from
//! its pretty-printed text compares equal to the original.

mod desugar;
mod lexer;
mod parser;
mod pretty;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

pub use desugar::desugar;
pub use parser::{parse, ParseError, ParseErrorKind};
pub use pretty::{fmt_number, pretty, pretty_bool, pretty_expr, pretty_unit};

/// Byte range into the parsed source.
#[derive(Clone, Copy, Debug, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// Span of nodes that were built programmatically rather than parsed.
    pub const SYNTHETIC: Span = Span {
        start: usize::MAX,
        end: usize::MAX,
    };

    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn is_synthetic(&self) -> bool {
        self.start == usize::MAX
    }

    pub fn merge(self, other: Span) -> Span {
        if self.is_synthetic() {
            return other;
        }
        if other.is_synthetic() {
            return self;
        }
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    /// Slice of `source` covered by this span, if it is a real span inside it.
    pub fn text<'a>(&self, source: &'a str) -> Option<&'a str> {
        if self.is_synthetic() {
            return None;
        }
        source.get(self.start..self.end)
    }

    /// 1-based line and column (in characters) of the span start.
    pub fn line_col(&self, source: &str) -> Option<(usize, usize)> {
        if self.is_synthetic() || self.start > source.len() {
            return None;
        }
        let before = source.get(..self.start)?;
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        let col = before[line_start..].chars().count() + 1;
        Some((line, col))
    }
}

impl Default for Span {
    fn default() -> Self {
        Span::SYNTHETIC
    }
}

/// Spans never participate in structural equality.
impl PartialEq for Span {
    fn eq(&self, _other: &Span) -> bool {
        true
    }
}

/// Function symbols available in expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Min,
    Max,
    Pow,
}

impl Func {
    pub const NAMED: [Func; 9] = [
        Func::Sqrt,
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Min,
        Func::Max,
        Func::Pow,
    ];

    pub fn arity(self) -> usize {
        match self {
            Func::Neg | Func::Sqrt | Func::Exp | Func::Ln | Func::Sin | Func::Cos | Func::Tan => 1,
            Func::Add | Func::Sub | Func::Mul | Func::Div | Func::Min | Func::Max | Func::Pow => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Add => "+",
            Func::Sub => "-",
            Func::Mul => "*",
            Func::Div => "/",
            Func::Neg => "-",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    /// Looks up a function written in call syntax, e.g. `sqrt(x)`.
    pub fn from_call_name(name: &str) -> Option<Func> {
        Func::NAMED.iter().copied().find(|f| f.name() == name)
    }

    pub fn is_infix(self) -> bool {
        matches!(self, Func::Add | Func::Sub | Func::Mul | Func::Div)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Var(String),
    Const(f64),
    Apply(Func, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn var(name: &str) -> Self {
        Expr::new(ExprKind::Var(name.into()), Span::SYNTHETIC)
    }

    pub fn num(value: f64) -> Self {
        Expr::new(ExprKind::Const(value), Span::SYNTHETIC)
    }

    pub fn apply(func: Func, args: Vec<Expr>) -> Self {
        debug_assert_eq!(func.arity(), args.len());
        Expr::new(ExprKind::Apply(func, args), Span::SYNTHETIC)
    }

    pub fn binary(func: Func, lhs: Expr, rhs: Expr) -> Self {
        Expr::apply(func, alloc::vec![lhs, rhs])
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.kind {
            ExprKind::Const(v) => Some(v),
            _ => None,
        }
    }

    /// Calls `f` on every variable occurrence, left to right.
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match &self.kind {
            ExprKind::Var(name) => f(name),
            ExprKind::Const(_) => {}
            ExprKind::Apply(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
        }
    }

    pub fn any_var(&self, pred: &impl Fn(&str) -> bool) -> bool {
        match &self.kind {
            ExprKind::Var(name) => pred(name),
            ExprKind::Const(_) => false,
            ExprKind::Apply(_, args) => args.iter().any(|a| a.any_var(pred)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_expr(self))
    }
}

/// Comparison operators that only exist in the surface syntax.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Gt,
    Geq,
    Eq,
    Neq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Geq => ">=",
            CmpOp::Eq => "==",
            CmpOp::Neq => "!=",
        }
    }
}

/// Boolean conditions. `Sugar` nodes are removed by [`desugar`]; the other
/// six constructors form the core language.
#[derive(Clone, Debug, PartialEq)]
pub enum BoolExpr {
    True,
    False,
    Leq(Expr, Expr),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
    Sugar(CmpOp, Expr, Expr),
}

impl BoolExpr {
    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(a.into(), b.into())
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Or(a.into(), b.into())
    }

    pub fn negate(a: BoolExpr) -> Self {
        BoolExpr::Not(a.into())
    }

    pub fn is_core(&self) -> bool {
        match self {
            BoolExpr::True | BoolExpr::False | BoolExpr::Leq(..) => true,
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => a.is_core() && b.is_core(),
            BoolExpr::Not(a) => a.is_core(),
            BoolExpr::Sugar(..) => false,
        }
    }

    pub fn for_each_expr<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            BoolExpr::True | BoolExpr::False => {}
            BoolExpr::Leq(a, b) | BoolExpr::Sugar(_, a, b) => {
                f(a);
                f(b);
            }
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.for_each_expr(f);
                b.for_each_expr(f);
            }
            BoolExpr::Not(a) => a.for_each_expr(f),
        }
    }
}

/// A differential statement `x1' = e1, ..., xn' = en for d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Diff {
    pub eqs: Vec<(String, Expr)>,
    pub duration: Expr,
    pub span: Span,
}

impl Diff {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.eqs.iter().map(|(v, _)| v.as_str())
    }

    pub fn binds(&self, name: &str) -> bool {
        self.eqs.iter().any(|(v, _)| v == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Atomic {
    Assign { var: String, expr: Expr, span: Span },
    Diff(Diff),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Program {
    Atom(Atomic),
    Seq(Arc<Program>, Arc<Program>),
    If(BoolExpr, Arc<Program>, Arc<Program>),
    While(BoolExpr, Arc<Program>),
}

impl Program {
    pub fn assign(var: &str, expr: Expr) -> Self {
        Program::Atom(Atomic::Assign {
            var: var.into(),
            expr,
            span: Span::SYNTHETIC,
        })
    }

    pub fn diff(eqs: Vec<(&str, Expr)>, duration: Expr) -> Self {
        Program::Atom(Atomic::Diff(Diff {
            eqs: eqs.into_iter().map(|(v, e)| (v.into(), e)).collect(),
            duration,
            span: Span::SYNTHETIC,
        }))
    }

    pub fn seq(a: Program, b: Program) -> Self {
        Program::Seq(Arc::new(a), Arc::new(b))
    }

    /// Right-nested sequence of the given statements. Panics on an empty list.
    pub fn sequence(mut items: Vec<Program>) -> Self {
        let mut acc = items.pop().expect("empty statement list");
        while let Some(p) = items.pop() {
            acc = Program::seq(p, acc);
        }
        acc
    }

    pub fn if_then_else(b: BoolExpr, p: Program, q: Program) -> Self {
        Program::If(b, Arc::new(p), Arc::new(q))
    }

    pub fn while_do(b: BoolExpr, body: Program) -> Self {
        Program::While(b, Arc::new(body))
    }

    /// Pre-order walk over atomic statements.
    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a Atomic)) {
        match self {
            Program::Atom(a) => f(a),
            Program::Seq(p, q) | Program::If(_, p, q) => {
                p.for_each_atom(f);
                q.for_each_atom(f);
            }
            Program::While(_, p) => p.for_each_atom(f),
        }
    }

    /// True if every `Seq` has a non-`Seq` left child.
    pub fn is_right_nested(&self) -> bool {
        match self {
            Program::Atom(_) => true,
            Program::Seq(p, q) => !matches!(**p, Program::Seq(..)) && p.is_right_nested() && q.is_right_nested(),
            Program::If(_, p, q) => p.is_right_nested() && q.is_right_nested(),
            Program::While(_, p) => p.is_right_nested(),
        }
    }

    /// Number of program nodes (statements and control constructs).
    pub fn size(&self) -> usize {
        match self {
            Program::Atom(_) => 1,
            Program::Seq(p, q) | Program::If(_, p, q) => 1 + p.size() + q.size(),
            Program::While(_, p) => 1 + p.size(),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

/// A top-level declaration preceding the program body.
#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Assign {
        var: String,
        expr: Expr,
        span: Span,
    },
    /// `x := {v1, ..., vk}`: a listing of alternative initial values.
    VarList {
        var: String,
        values: Vec<f64>,
        span: Span,
    },
}

impl Decl {
    pub fn var(&self) -> &str {
        match self {
            Decl::Assign { var, .. } | Decl::VarList { var, .. } => var,
        }
    }
}

/// A parsed source file: leading declarations plus the program body.
///
/// The declaration block is the run of top-level statements up to and
/// including the last listing `x := {...}`; it may interleave scalar
/// assignments. Without listings the whole file is the body.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceUnit {
    pub decls: Vec<Decl>,
    pub body: Program,
}

impl SourceUnit {
    /// Variables in order of first declaration or assignment: declarations
    /// first, then assignment targets and differential variables of the body.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |name: &str| {
            if !out.iter().any(|v| v == name) {
                out.push(name.into());
            }
        };
        for d in &self.decls {
            push(d.var());
        }
        self.body.for_each_atom(&mut |a| match a {
            Atomic::Assign { var, .. } => push(var),
            Atomic::Diff(d) => d.vars().for_each(&mut push),
        });
        out
    }
}
