//! A tiny expression language for energy densities.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' ['-'] number)?
//! base   := number | ident index* | func '(' expr (',' expr)* ')' | '(' expr ')'
//! index  := '[' integer ']'
//! ```
//!
//! Identifiers are `A` (matrix), `x`, `lambda`, `nu` (vectors). Entries are
//! addressed with 0-based indices: `A[i][j]`, `x[i]`. Functions: `abs`, `norm`,
//! `normsq`, `dot`, `sqrt`, `exp`, `sin`, `cos`, `min`, `max`. Norms of
//! matrices are Frobenius norms.

use crate::linalg::Mat;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Which variables an expression may reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityKind {
    /// `W(x, A)`
    Bulk,
    /// `ψ(x, λ, ν)`
    Surface,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { name: String, column: usize },
    #[error("function `{name}` at column {column} expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        column: usize,
        expected: String,
        got: usize,
    },
    #[error("type mismatch at column {column}: {message}")]
    Type { column: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("index {index} out of range for `{var}` of length {len}")]
    IndexOutOfRange {
        var: &'static str,
        index: usize,
        len: usize,
    },
    #[error("variable `{0}` is not bound")]
    Unbound(&'static str),
    #[error("operand shapes differ in `dot`")]
    ShapeMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    A,
    X,
    Lambda,
    Nu,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::A => "A",
            Var::X => "x",
            Var::Lambda => "lambda",
            Var::Nu => "nu",
        }
    }

    fn ty(self) -> Ty {
        match self {
            Var::A => Ty::Matrix,
            _ => Ty::Vector,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Abs,
    Norm,
    NormSq,
    Dot,
    Sqrt,
    Exp,
    Sin,
    Cos,
    Min,
    Max,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "abs" => Func::Abs,
            "norm" => Func::Norm,
            "normsq" => Func::NormSq,
            "dot" => Func::Dot,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Norm => "norm",
            Func::NormSq => "normsq",
            Func::Dot => "dot",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Min => "min",
            Func::Max => "max",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Abstract syntax tree. Numeric literals are non-negative; negation is
/// always an explicit [`Expr::Neg`].
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Index(Var, Vec<usize>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Scalar,
    Vector,
    Matrix,
}

/// Values the evaluator binds to identifiers.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bindings<'a> {
    pub x: Option<&'a [f64]>,
    pub a: Option<&'a Mat>,
    pub lambda: Option<&'a [f64]>,
    pub nu: Option<&'a [f64]>,
}

enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Mat),
}

impl Value {
    fn scalar(self) -> f64 {
        match self {
            Value::Scalar(v) => v,
            // The type checker rules this out.
            _ => unreachable!("non-scalar value in scalar position"),
        }
    }

    fn entries(&self) -> &[f64] {
        match self {
            Value::Scalar(v) => std::slice::from_ref(v),
            Value::Vector(v) => v,
            Value::Matrix(m) => m.as_slice(),
        }
    }
}

impl Expr {
    pub fn eval(&self, env: &Bindings<'_>) -> Result<f64, EvalError> {
        Ok(self.eval_value(env)?.scalar())
    }

    fn eval_value(&self, env: &Bindings<'_>) -> Result<Value, EvalError> {
        Ok(match self {
            Expr::Num(v) => Value::Scalar(*v),
            Expr::Var(var) => match var {
                Var::A => Value::Matrix(env.a.ok_or(EvalError::Unbound("A"))?.clone()),
                _ => Value::Vector(bound_vector(*var, env)?.to_vec()),
            },
            Expr::Index(var, idx) => Value::Scalar(match var {
                Var::A => {
                    let a = env.a.ok_or(EvalError::Unbound("A"))?;
                    let (i, j) = (idx[0], idx[1]);
                    if i >= a.rows() {
                        return Err(EvalError::IndexOutOfRange {
                            var: "A",
                            index: i,
                            len: a.rows(),
                        });
                    }
                    if j >= a.cols() {
                        return Err(EvalError::IndexOutOfRange {
                            var: "A",
                            index: j,
                            len: a.cols(),
                        });
                    }
                    a.get(i, j)
                }
                _ => {
                    let v = bound_vector(*var, env)?;
                    *v.get(idx[0]).ok_or(EvalError::IndexOutOfRange {
                        var: var.name(),
                        index: idx[0],
                        len: v.len(),
                    })?
                }
            }),
            Expr::Neg(e) => Value::Scalar(-e.eval_value(env)?.scalar()),
            Expr::Bin(op, l, r) => {
                let l = l.eval_value(env)?.scalar();
                let r = r.eval_value(env)?.scalar();
                Value::Scalar(match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        l / r
                    }
                })
            }
            Expr::Pow(b, e) => {
                let b = b.eval_value(env)?.scalar();
                Value::Scalar(if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                    b.powi(*e as i32)
                } else {
                    b.powf(*e)
                })
            }
            Expr::Call(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| a.eval_value(env))
                    .collect::<Result<Vec<_>, _>>()?;
                Value::Scalar(apply(*f, vals)?)
            }
        })
    }

    /// Whether the expression references `x`.
    pub fn uses_x(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) | Expr::Index(v, _) => *v == Var::X,
            Expr::Neg(e) | Expr::Pow(e, _) => e.uses_x(),
            Expr::Bin(_, l, r) => l.uses_x() || r.uses_x(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_x),
        }
    }

    /// Smallest `(rows, cols)` of `A` and length of each vector the
    /// expression indexes into; `0` when unindexed.
    pub fn index_extent(&self, var: Var) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Index(v, idx) = e {
                if *v == var {
                    if out.len() < idx.len() {
                        out.resize(idx.len(), 0);
                    }
                    for (o, i) in out.iter_mut().zip(idx) {
                        *o = (*o).max(i + 1);
                    }
                }
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(e) | Expr::Pow(e, _) => e.visit(f),
            Expr::Bin(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }
}

fn bound_vector<'a>(var: Var, env: &Bindings<'a>) -> Result<&'a [f64], EvalError> {
    match var {
        Var::X => env.x.ok_or(EvalError::Unbound("x")),
        Var::Lambda => env.lambda.ok_or(EvalError::Unbound("lambda")),
        Var::Nu => env.nu.ok_or(EvalError::Unbound("nu")),
        Var::A => unreachable!(),
    }
}

fn apply(f: Func, vals: Vec<Value>) -> Result<f64, EvalError> {
    let first = || match &vals[0] {
        Value::Scalar(v) => *v,
        _ => unreachable!(),
    };
    Ok(match f {
        Func::Abs => first().abs(),
        Func::Norm => vals[0].entries().iter().map(|v| v * v).sum::<f64>().sqrt(),
        Func::NormSq => vals[0].entries().iter().map(|v| v * v).sum(),
        Func::Dot => {
            let (a, b) = (vals[0].entries(), vals[1].entries());
            if a.len() != b.len() {
                return Err(EvalError::ShapeMismatch);
            }
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        }
        Func::Sqrt => first().sqrt(),
        Func::Exp => first().exp(),
        Func::Sin => first().sin(),
        Func::Cos => first().cos(),
        Func::Min => vals.iter().map(|v| v.entries()[0]).fold(f64::INFINITY, f64::min),
        Func::Max => vals
            .iter()
            .map(|v| v.entries()[0])
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

// ---------------------------------------------------------------- printing

impl fmt::Display for Expr {
    /// Fully parenthesised form; `parse(print(e)) == e`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Index(v, idx) => {
                f.write_str(v.name())?;
                for i in idx {
                    write!(f, "[{i}]")?;
                }
                Ok(())
            }
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Pow(b, e) => match **b {
                Expr::Num(_) | Expr::Var(_) | Expr::Index(..) | Expr::Call(..) => {
                    write!(f, "{b}^{e:?}")
                }
                _ => write!(f, "({b})^{e:?}"),
            },
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

// ----------------------------------------------------------------- lexing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Token {
    tok: Tok,
    /// 1-based column of the first character.
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| ParseError::Syntax {
                column,
                message: format!("malformed number `{s}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(v),
                column,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else if "+-*/^(),[]".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                column,
            });
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        column: chars.len() + 1,
    });
    Ok(out)
}

// ---------------------------------------------------------------- parsing

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    kind: DensityKind,
}

/// Parses `text` as a density of the given kind and type-checks it to a
/// scalar.
pub fn parse_expr(text: &str, kind: DensityKind) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        kind,
    };
    let (e, ty, col) = p.expr()?;
    if p.peek() != &Tok::End {
        return Err(p.unexpected("end of input"));
    }
    if ty != Ty::Scalar {
        return Err(ParseError::Type {
            column: col,
            message: "density must evaluate to a scalar".into(),
        });
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn column(&self) -> usize {
        self.toks[self.pos].column
    }

    fn bump(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        };
        ParseError::Syntax {
            column: self.column(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == &Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn scalar(ty: Ty, column: usize) -> Result<(), ParseError> {
        if ty == Ty::Scalar {
            Ok(())
        } else {
            Err(ParseError::Type {
                column,
                message: "arithmetic requires scalar operands".into(),
            })
        }
    }

    fn expr(&mut self) -> Result<(Expr, Ty, usize), ParseError> {
        let (mut lhs, ty, col) = self.term()?;
        let mut ty = ty;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => break,
            };
            Self::scalar(ty, col)?;
            self.bump();
            let (rhs, rty, rcol) = self.term()?;
            Self::scalar(rty, rcol)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
            ty = Ty::Scalar;
        }
        Ok((lhs, ty, col))
    }

    fn term(&mut self) -> Result<(Expr, Ty, usize), ParseError> {
        let (mut lhs, mut ty, col) = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => break,
            };
            Self::scalar(ty, col)?;
            self.bump();
            let (rhs, rty, rcol) = self.factor()?;
            Self::scalar(rty, rcol)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
            ty = Ty::Scalar;
        }
        Ok((lhs, ty, col))
    }

    fn factor(&mut self) -> Result<(Expr, Ty, usize), ParseError> {
        let col = self.column();
        if self.peek() == &Tok::Sym('-') {
            self.bump();
            let (e, ty, ecol) = self.factor()?;
            Self::scalar(ty, ecol)?;
            return Ok((Expr::Neg(Box::new(e)), Ty::Scalar, col));
        }
        let (base, ty) = self.base()?;
        if self.peek() == &Tok::Sym('^') {
            Self::scalar(ty, col)?;
            self.bump();
            let neg = if self.peek() == &Tok::Sym('-') {
                self.bump();
                true
            } else {
                false
            };
            let e = match self.peek() {
                Tok::Num(v) => *v,
                _ => return Err(self.unexpected("a number after `^`")),
            };
            self.bump();
            return Ok((
                Expr::Pow(Box::new(base), if neg { -e } else { e }),
                Ty::Scalar,
                col,
            ));
        }
        Ok((base, ty, col))
    }

    fn base(&mut self) -> Result<(Expr, Ty), ParseError> {
        let col = self.column();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok((Expr::Num(v), Ty::Scalar))
            }
            Tok::Sym('(') => {
                self.bump();
                let (e, ty, _) = self.expr()?;
                self.expect(')')?;
                Ok((e, ty))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    self.call(func, &name, col)
                } else {
                    let var = self.variable(&name, col)?;
                    self.indexed(var, col)
                }
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }

    fn variable(&self, name: &str, column: usize) -> Result<Var, ParseError> {
        let var = match (name, self.kind) {
            ("x", _) => Var::X,
            ("A", DensityKind::Bulk) => Var::A,
            ("lambda", DensityKind::Surface) => Var::Lambda,
            ("nu", DensityKind::Surface) => Var::Nu,
            _ => {
                return Err(ParseError::UnknownIdentifier {
                    name: name.to_string(),
                    column,
                })
            }
        };
        Ok(var)
    }

    fn indexed(&mut self, var: Var, col: usize) -> Result<(Expr, Ty), ParseError> {
        let want = match var.ty() {
            Ty::Matrix => 2,
            _ => 1,
        };
        let mut idx = Vec::new();
        while self.peek() == &Tok::Sym('[') {
            self.bump();
            let icol = self.column();
            let i = match self.peek() {
                Tok::Num(v) if v.fract() == 0.0 && *v >= 0.0 => *v as usize,
                _ => {
                    return Err(ParseError::Syntax {
                        column: icol,
                        message: "index must be a non-negative integer".into(),
                    })
                }
            };
            self.bump();
            self.expect(']')?;
            idx.push(i);
        }
        match idx.len() {
            0 => Ok((Expr::Var(var), var.ty())),
            n if n == want => Ok((Expr::Index(var, idx), Ty::Scalar)),
            _ => Err(ParseError::Type {
                column: col,
                message: format!("`{}` takes {want} index(es)", var.name()),
            }),
        }
    }

    fn call(&mut self, func: Func, name: &str, col: usize) -> Result<(Expr, Ty), ParseError> {
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while self.peek() == &Tok::Sym(',') {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(')')?;
        let (expected, ok) = match func {
            Func::Dot => ("2", args.len() == 2),
            Func::Min | Func::Max => ("at least 2", args.len() >= 2),
            _ => ("1", args.len() == 1),
        };
        if !ok {
            return Err(ParseError::Arity {
                name: name.to_string(),
                column: col,
                expected: expected.to_string(),
                got: args.len(),
            });
        }
        let type_err = |column: usize, message: &str| ParseError::Type {
            column,
            message: format!("`{name}`: {message}"),
        };
        match func {
            Func::Norm | Func::NormSq => {}
            Func::Dot => {
                if args[0].1 == Ty::Scalar || args[0].1 != args[1].1 {
                    return Err(type_err(col, "arguments must be two vectors or two matrices"));
                }
            }
            _ => {
                if let Some((_, _, c)) = args.iter().find(|a| a.1 != Ty::Scalar) {
                    return Err(type_err(*c, "expects scalar arguments"));
                }
            }
        }
        Ok((
            Expr::Call(func, args.into_iter().map(|a| a.0).collect()),
            Ty::Scalar,
        ))
    }
}
