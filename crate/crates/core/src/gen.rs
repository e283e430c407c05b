//! Random hybrid programs for differential and round-trip testing.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::semantics::Env;
use crate::syntax::{BoolExpr, CmpOp, Expr, Func, Program};

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_depth: usize,
    /// Upper bound on the number of iterations of each generated loop.
    pub max_loop_bound: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 5,
            max_loop_bound: 8,
        }
    }
}

/// A core-language program, a starting environment and query times.
#[derive(Clone, Debug)]
pub struct Case {
    pub program: Program,
    pub env: Env,
    pub times: Vec<f64>,
}

const VARS: [&str; 3] = ["x", "y", "z"];
const SMALL: [f64; 9] = [-2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 2.0, 3.0];

/// Generates terminating programs: every loop runs a counter up to a bound
/// of at most `max_loop_bound`, and durations are positive multiples of 1/8.
pub struct CaseGen<'r, R: Rng> {
    rng: &'r mut R,
    cfg: GenConfig,
    loops: usize,
}

impl<'r, R: Rng> CaseGen<'r, R> {
    pub fn new(rng: &'r mut R, cfg: GenConfig) -> Self {
        CaseGen { rng, cfg, loops: 0 }
    }

    pub fn case(&mut self, n_times: usize) -> Case {
        self.loops = 0;
        let program = self.program(self.cfg.max_depth);
        let mut env = Env::new();
        for v in VARS {
            // Occasionally leave a variable unset to exercise lookup failures.
            if self.rng.gen_bool(0.93) {
                env.set(v, *[-1.0, 0.0, 0.5, 1.0, 2.0].choose(self.rng).unwrap());
            }
        }
        let times = (0..n_times)
            .map(|_| {
                if self.rng.gen_bool(0.5) {
                    self.rng.gen_range(0.0..4.0)
                } else {
                    self.rng.gen_range(0..=32) as f64 / 8.0
                }
            })
            .collect();
        Case { program, env, times }
    }

    fn program(&mut self, depth: usize) -> Program {
        if depth <= 1 {
            return self.atomic();
        }
        match self.rng.gen_range(0..100) {
            0..=34 => self.atomic(),
            35..=64 => {
                let n = self.rng.gen_range(2..=3);
                flat_sequence((0..n).map(|_| self.program(depth - 1)).collect())
            }
            65..=84 => {
                let b = self.cond(2);
                let p = self.program(depth - 1);
                let q = self.program(depth - 1);
                Program::if_then_else(b, p, q)
            }
            _ => self.bounded_loop(depth),
        }
    }

    fn bounded_loop(&mut self, depth: usize) -> Program {
        let counter = format!("i{}", self.loops);
        self.loops += 1;
        let bound = self.rng.gen_range(0..=self.cfg.max_loop_bound) as f64;
        let body = self.program(depth - 1);
        let step = Program::assign(&counter, Expr::binary(Func::Add, Expr::var(&counter), Expr::num(1.0)));
        // counter < bound, written in the core language
        let guard = BoolExpr::negate(BoolExpr::Leq(Expr::num(bound), Expr::var(&counter)));
        Program::sequence(alloc::vec![
            Program::assign(&counter, Expr::num(0.0)),
            Program::while_do(guard, flat_sequence(alloc::vec![body, step])),
        ])
    }

    fn atomic(&mut self) -> Program {
        if self.rng.gen_bool(0.5) {
            let v = *VARS.choose(self.rng).unwrap();
            let e = self.expr(2);
            Program::assign(v, e)
        } else {
            self.diff()
        }
    }

    fn diff(&mut self) -> Program {
        let n = self.rng.gen_range(1..=2);
        let vars: Vec<&str> = VARS.choose_multiple(self.rng, n).copied().collect();
        let eqs = vars
            .iter()
            .map(|v| {
                let rhs = if self.rng.gen_bool(0.03) {
                    Expr::binary(Func::Mul, Expr::var(v), Expr::var(v))
                } else {
                    self.affine_rhs()
                };
                (*v, rhs)
            })
            .collect();
        let duration = Expr::num(self.rng.gen_range(1..=8) as f64 / 8.0);
        Program::diff(eqs, duration)
    }

    /// `c1 * v1 + c2 * v2 + c0`, where a `v` may be any variable; the
    /// coefficient is sometimes itself a variable.
    fn affine_rhs(&mut self) -> Expr {
        let mut e = Expr::num(*SMALL.choose(self.rng).unwrap());
        for _ in 0..self.rng.gen_range(0..=2) {
            let coef = if self.rng.gen_bool(0.2) {
                Expr::var(VARS.choose(self.rng).unwrap())
            } else {
                Expr::num(*[-1.0, -0.5, 0.5, 1.0].choose(self.rng).unwrap())
            };
            let term = Expr::binary(Func::Mul, coef, Expr::var(VARS.choose(self.rng).unwrap()));
            e = Expr::binary(Func::Add, term, e);
        }
        e
    }

    fn expr(&mut self, depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return if self.rng.gen_bool(0.5) {
                Expr::var(VARS.choose(self.rng).unwrap())
            } else {
                Expr::num(*SMALL.choose(self.rng).unwrap())
            };
        }
        let func = match self.rng.gen_range(0..20) {
            0..=4 => Func::Add,
            5..=8 => Func::Sub,
            9..=13 => Func::Mul,
            14..=17 => Func::Div,
            18 => Func::Sqrt,
            _ => Func::Min,
        };
        let args = (0..func.arity()).map(|_| self.expr(depth - 1)).collect();
        Expr::apply(func, args)
    }

    fn cond(&mut self, depth: usize) -> BoolExpr {
        if depth == 0 {
            return BoolExpr::Leq(self.expr(1), self.expr(1));
        }
        match self.rng.gen_range(0..10) {
            0..=4 => BoolExpr::Leq(self.expr(1), self.expr(1)),
            5 => BoolExpr::and(self.cond(depth - 1), self.cond(depth - 1)),
            6 => BoolExpr::or(self.cond(depth - 1), self.cond(depth - 1)),
            7 => BoolExpr::negate(self.cond(depth - 1)),
            8 => BoolExpr::True,
            _ => BoolExpr::False,
        }
    }
}

/// Right-nested sequence with nested sequences spliced in, the shape the
/// parser produces.
fn flat_sequence(items: Vec<Program>) -> Program {
    let mut flat = Vec::new();
    for mut p in items {
        while let Program::Seq(first, rest) = p {
            flat.push((*first).clone());
            p = (*rest).clone();
        }
        flat.push(p);
    }
    Program::sequence(flat)
}

/// Generates arbitrary right-nested surface programs (with sugar, all
/// function symbols and arbitrary finite literals) for round-trip tests.
pub fn surface_program(rng: &mut impl Rng, depth: usize) -> Program {
    if depth <= 1 || rng.gen_bool(0.3) {
        return surface_atomic(rng);
    }
    match rng.gen_range(0..3) {
        0 => {
            let n = rng.gen_range(2..=4);
            flat_sequence((0..n).map(|_| surface_program(rng, depth - 1)).collect())
        }
        1 => {
            let b = surface_cond(rng, 2);
            let p = surface_program(rng, depth - 1);
            let q = surface_program(rng, depth - 1);
            Program::if_then_else(b, p, q)
        }
        _ => {
            let b = surface_cond(rng, 2);
            Program::while_do(b, surface_program(rng, depth - 1))
        }
    }
}

const NAMES: [&str; 6] = ["x", "y", "v", "p1", "speed", "a_b"];

fn surface_atomic(rng: &mut impl Rng) -> Program {
    if rng.gen_bool(0.5) {
        Program::assign(NAMES.choose(rng).unwrap(), surface_expr(rng, 3))
    } else {
        let n = rng.gen_range(1..=3);
        let vars: Vec<&str> = NAMES.choose_multiple(rng, n).copied().collect();
        let eqs = vars.iter().map(|v| (*v, surface_expr(rng, 2))).collect();
        Program::diff(eqs, surface_expr(rng, 2))
    }
}

fn literal(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(-10..=10) as f64,
        1 => rng.gen_range(-1e3..1e3),
        2 => libm::exp10(rng.gen_range(-12.0..20.0)),
        _ => -libm::exp10(rng.gen_range(-12.0..20.0)),
    }
}

fn surface_expr(rng: &mut impl Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.5) {
            Expr::var(NAMES.choose(rng).unwrap())
        } else {
            Expr::num(literal(rng))
        };
    }
    let funcs = [
        Func::Add,
        Func::Sub,
        Func::Mul,
        Func::Div,
        Func::Neg,
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
    let func = *funcs.choose(rng).unwrap();
    let args = (0..func.arity()).map(|_| surface_expr(rng, depth - 1)).collect();
    Expr::apply(func, args)
}

fn surface_cond<R: Rng>(rng: &mut R, depth: usize) -> BoolExpr {
    let cmp = |rng: &mut R| {
        let (l, r) = (surface_expr(rng, 2), surface_expr(rng, 2));
        match rng.gen_range(0..6) {
            0 => BoolExpr::Leq(l, r),
            k => {
                let op = [CmpOp::Lt, CmpOp::Gt, CmpOp::Geq, CmpOp::Eq, CmpOp::Neq][k - 1];
                BoolExpr::Sugar(op, l, r)
            }
        }
    };
    if depth == 0 {
        return cmp(rng);
    }
    match rng.gen_range(0..8) {
        0..=2 => cmp(rng),
        3 => BoolExpr::and(surface_cond(rng, depth - 1), surface_cond(rng, depth - 1)),
        4 => BoolExpr::or(surface_cond(rng, depth - 1), surface_cond(rng, depth - 1)),
        5 => BoolExpr::negate(surface_cond(rng, depth - 1)),
        6 => BoolExpr::True,
        _ => BoolExpr::False,
    }
}
