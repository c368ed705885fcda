//! Arithmetic expression language used for every scalar field.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' signed)*          left-associative: 2^3^2 = 64
//! signed  := ('-' | '+') signed | atom
//! atom    := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers are the coordinates `x, y` (1D) and `x1, x2, y1, y2` (2D), the
//! functions `sin cos exp abs sqrt min max`, and any univariate definition
//! supplied by the caller, which may be applied to `x` or `y` (for example
//! `(p(x) + p(y)) / 2`).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A parse failure located at a 1-based character column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    ArityMismatch(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error at column {}: {msg}", self.column),
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier `{name}` at column {}", self.column)
            }
            ParseErrorKind::ArityMismatch(msg) => {
                write!(f, "arity mismatch at column {}: {msg}", self.column)
            }
        }
    }
}

impl std::error::Error for ParseError {}

/// Coordinate variables. `X`/`Y` are the scalar coordinate of a 1D point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    X1,
    X2,
    Y1,
    Y2,
}

impl Var {
    fn is_second_point(self) -> bool {
        matches!(self, Var::Y | Var::Y1 | Var::Y2)
    }

    fn swapped(self) -> Var {
        match self {
            Var::X => Var::Y,
            Var::Y => Var::X,
            Var::X1 => Var::Y1,
            Var::Y1 => Var::X1,
            Var::X2 => Var::Y2,
            Var::Y2 => Var::X2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Evaluates at the point pair `(x, y)`; `y` is ignored by univariate trees.
    pub fn eval(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => match v {
                Var::X | Var::X1 => x[0],
                Var::X2 => x[1],
                Var::Y | Var::Y1 => y[0],
                Var::Y2 => y[1],
            },
            Expr::Neg(e) => -e.eval(x, y),
            Expr::Bin(op, a, b) => {
                let a = a.eval(x, y);
                let b = b.eval(x, y);
                apply_bin(*op, a, b)
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(x, y);
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => a.sqrt(),
                    Func::Min => a.min(args[1].eval(x, y)),
                    Func::Max => a.max(args[1].eval(x, y)),
                }
            }
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Visits every variable in the tree.
    pub fn any_var(&self, pred: &mut impl FnMut(Var) -> bool) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => pred(*v),
            Expr::Neg(e) => e.any_var(pred),
            Expr::Bin(_, a, b) => a.any_var(pred) || b.any_var(pred),
            Expr::Call(_, args) => args.iter().any(|a| a.any_var(pred)),
        }
    }

    /// Exchanges the roles of the two points, `e(x, y) -> e(y, x)`.
    pub fn transposed(&self) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(v) => Expr::Var(v.swapped()),
            Expr::Neg(e) => Expr::Neg(Box::new(e.transposed())),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.transposed()), Box::new(b.transposed())),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(Expr::transposed).collect()),
        }
    }

    fn fold(self) -> Expr {
        match self {
            Expr::Neg(e) => match e.fold() {
                Expr::Num(v) => Expr::Num(-v),
                e => Expr::Neg(Box::new(e)),
            },
            Expr::Bin(op, a, b) => match (a.fold(), b.fold()) {
                (Expr::Num(a), Expr::Num(b)) => Expr::Num(apply_bin(op, a, b)),
                (a, b) => Expr::Bin(op, Box::new(a), Box::new(b)),
            },
            Expr::Call(f, args) => {
                let args: Vec<Expr> = args.into_iter().map(Expr::fold).collect();
                if args.iter().all(|a| matches!(a, Expr::Num(_))) {
                    Expr::Num(Expr::Call(f, args).eval(&[0.0; 2], &[0.0; 2]))
                } else {
                    Expr::Call(f, args)
                }
            }
            e => e,
        }
    }
}

fn apply_bin(op: BinOp, a: f64, b: f64) -> f64 {
    match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a / b,
        BinOp::Pow => a.powf(b),
    }
}

/// Named univariate expressions that other expressions may call as `name(x)` / `name(y)`.
pub type Definitions = BTreeMap<String, Expr>;

/// Parses `source`. When `allow_second_point` is false, any use of `y`, `y1`, `y2`
/// (directly or through a definition applied to `y`) is an arity mismatch.
pub fn parse(source: &str, allow_second_point: bool, defs: &Definitions) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0, allow_second_point, defs, end_column: source.chars().count() + 1 };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError {
            column: tok.column,
            kind: ParseErrorKind::Syntax(format!("unexpected `{}`", tok.kind)),
        });
    }
    Ok(expr.fold())
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(v) => write!(f, "{v}"),
            TokenKind::Ident(s) => write!(f, "{s}"),
            TokenKind::Op(c) => write!(f, "{c}"),
            TokenKind::LParen => write!(f, "("),
            TokenKind::RParen => write!(f, ")"),
            TokenKind::Comma => write!(f, ","),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ParseError {
                column,
                kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
            })?;
            tokens.push(Token { kind: TokenKind::Num(value), column });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token { kind: TokenKind::Ident(chars[start..i].iter().collect()), column });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => TokenKind::Op(c),
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            _ => {
                return Err(ParseError { column, kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")) })
            }
        };
        tokens.push(Token { kind, column });
        i += 1;
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    allow_second_point: bool,
    defs: &'a Definitions,
    end_column: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn column(&self) -> usize {
        self.peek().map_or(self.end_column, |t| t.column)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token { kind: TokenKind::Op(c), .. }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ParseError {
                column: t.column,
                kind: ParseErrorKind::Syntax(format!("expected `{kind}`, found `{}`", t.kind)),
            }),
            None => Err(ParseError {
                column: self.end_column,
                kind: ParseErrorKind::Syntax(format!("expected `{kind}`, found end of input")),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Expr::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        while self.eat_op(&['^']).is_some() {
            let rhs = self.signed()?;
            lhs = Expr::Bin(BinOp::Pow, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn signed(&mut self) -> Result<Expr, ParseError> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Expr::Neg(Box::new(self.signed()?))),
            Some(_) => self.signed(),
            None => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let column = self.column();
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError {
                column,
                kind: ParseErrorKind::Syntax("unexpected end of input".into()),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(v)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => self.identifier(name, column),
            other => Err(ParseError { column, kind: ParseErrorKind::Syntax(format!("unexpected `{other}`")) }),
        }
    }

    fn identifier(&mut self, name: String, column: usize) -> Result<Expr, ParseError> {
        let var = match name.as_str() {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "x1" => Some(Var::X1),
            "x2" => Some(Var::X2),
            "y1" => Some(Var::Y1),
            "y2" => Some(Var::Y2),
            _ => None,
        };
        if let Some(var) = var {
            if var.is_second_point() && !self.allow_second_point {
                return Err(ParseError {
                    column,
                    kind: ParseErrorKind::ArityMismatch(format!("`{name}` is not available in a single-point field")),
                });
            }
            return Ok(Expr::Var(var));
        }
        let is_call = matches!(self.peek(), Some(Token { kind: TokenKind::LParen, .. }));
        if let Some(func) = Func::lookup(&name) {
            if !is_call {
                return Err(ParseError {
                    column,
                    kind: ParseErrorKind::Syntax(format!("function `{name}` must be called")),
                });
            }
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while matches!(self.peek(), Some(Token { kind: TokenKind::Comma, .. })) {
                self.pos += 1;
                args.push(self.expr()?);
            }
            self.expect(TokenKind::RParen)?;
            if args.len() != func.arity() {
                return Err(ParseError {
                    column,
                    kind: ParseErrorKind::ArityMismatch(format!(
                        "`{name}` takes {} argument(s), got {}",
                        func.arity(),
                        args.len()
                    )),
                });
            }
            return Ok(Expr::Call(func, args));
        }
        if let Some(def) = self.defs.get(&name) {
            if !is_call {
                return Err(ParseError {
                    column,
                    kind: ParseErrorKind::Syntax(format!("definition `{name}` must be applied to x or y")),
                });
            }
            self.pos += 1;
            let arg_column = self.column();
            let arg = match self.peek() {
                Some(Token { kind: TokenKind::Ident(a), .. }) => a.clone(),
                _ => String::new(),
            };
            let body = match arg.as_str() {
                "x" => def.clone(),
                "y" if self.allow_second_point => def.transposed(),
                "y" => {
                    return Err(ParseError {
                        column: arg_column,
                        kind: ParseErrorKind::ArityMismatch(format!("`{name}(y)` in a single-point field")),
                    })
                }
                _ => {
                    return Err(ParseError {
                        column: arg_column,
                        kind: ParseErrorKind::Syntax(format!("`{name}` must be applied to `x` or `y`")),
                    })
                }
            };
            self.pos += 1;
            self.expect(TokenKind::RParen)?;
            return Ok(body);
        }
        Err(ParseError { column, kind: ParseErrorKind::UnknownIdentifier(name) })
    }
}
