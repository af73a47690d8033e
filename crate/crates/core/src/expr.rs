//! Arithmetic expressions over state and disturbance variables, and boolean
//! predicates over state variables.
//!
//! Variables are written `x1..xn` (state) and `th1..thm` (disturbance) and are
//! stored zero-based. The grammar, from loosest to tightest binding:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' INTEGER)*
//! atom   := NUMBER | VAR | FUNC '(' expr (',' expr)* ')' | '(' expr ')'
//!
//! pred   := conj ('||' conj)*
//! conj   := neg ('&&' neg)*
//! neg    := '!' neg | 'true' | 'false' | expr RELOP expr | '(' pred ')'
//! RELOP  := '<' | '<=' | '>' | '>=' | '==' | '!='
//! ```
//!
//! Functions: `min`, `max` (two arguments), `abs`, `exp`, `sin`, `cos`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{name}` at offset {offset} is out of range (dimension {dim})")]
    IndexOutOfRange { name: String, offset: usize, dim: usize },
    #[error("disturbance variable `{name}` at offset {offset} is not allowed in a set predicate")]
    DisturbanceInPredicate { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::IndexOutOfRange { offset, .. }
            | ParseError::DisturbanceInPredicate { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite value")]
    NonFinite,
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Abs,
    Exp,
    Sin,
    Cos,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "min" => Func::Min,
            "max" => Func::Max,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// Arithmetic expression tree. Variable indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    State(usize),
    Disturbance(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl RelOp {
    fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
        }
    }

    fn apply(self, a: f64, b: f64) -> bool {
        match self {
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
        }
    }
}

/// Boolean combination of comparisons between state expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Const(bool),
    Cmp(Expr, RelOp, Expr),
    Not(Box<Predicate>),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
}

impl Expr {
    /// Parses `text` with `n` state variables and `m` disturbance variables.
    pub fn parse(text: &str, n: usize, m: usize) -> Result<Expr, ParseError> {
        let mut p = Parser::new(text, n, m, false)?;
        let e = p.expr()?;
        p.expect_end()?;
        Ok(e)
    }

    pub fn eval(&self, x: &[f64], th: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::State(i) => *x.get(*i).ok_or(EvalError::Dimension {
                expected: i + 1,
                got: x.len(),
            })?,
            Expr::Disturbance(j) => *th.get(*j).ok_or(EvalError::Dimension {
                expected: j + 1,
                got: th.len(),
            })?,
            Expr::Neg(a) => -a.eval(x, th)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval(x, th)?;
                let b = b.eval(x, th)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(a, k) => {
                let a = a.eval(x, th)?;
                match i32::try_from(*k) {
                    Ok(k) => a.powi(k),
                    Err(_) => a.powf(f64::from(*k)),
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(x, th)?;
                match f {
                    Func::Min => a.min(args[1].eval(x, th)?),
                    Func::Max => a.max(args[1].eval(x, th)?),
                    Func::Abs => a.abs(),
                    Func::Exp => a.exp(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Largest zero-based state index referenced, if any.
    pub fn max_state_index(&self) -> Option<usize> {
        self.fold_vars(&|e| match e {
            Expr::State(i) => Some(*i),
            _ => None,
        })
    }

    pub fn max_disturbance_index(&self) -> Option<usize> {
        self.fold_vars(&|e| match e {
            Expr::Disturbance(j) => Some(*j),
            _ => None,
        })
    }

    fn fold_vars(&self, leaf: &dyn Fn(&Expr) -> Option<usize>) -> Option<usize> {
        match self {
            Expr::Const(_) | Expr::State(_) | Expr::Disturbance(_) => leaf(self),
            Expr::Neg(a) | Expr::Pow(a, _) => a.fold_vars(leaf),
            Expr::Binary(_, a, b) => a.fold_vars(leaf).max(b.fold_vars(leaf)),
            Expr::Call(_, args) => args.iter().filter_map(|a| a.fold_vars(leaf)).max(),
        }
    }
}

impl Predicate {
    /// Parses a set predicate over `n` state variables.
    pub fn parse(text: &str, n: usize) -> Result<Predicate, ParseError> {
        let mut p = Parser::new(text, n, 0, true)?;
        let e = p.pred()?;
        p.expect_end()?;
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> Result<bool, EvalError> {
        Ok(match self {
            Predicate::Const(b) => *b,
            Predicate::Cmp(a, op, b) => op.apply(a.eval(x, &[])?, b.eval(x, &[])?),
            Predicate::Not(a) => !a.eval(x)?,
            Predicate::And(a, b) => a.eval(x)? && b.eval(x)?,
            Predicate::Or(a, b) => a.eval(x)? || b.eval(x)?,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::State(i) => write!(f, "x{}", i + 1),
            Expr::Disturbance(j) => write!(f, "th{}", j + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Const(b) => write!(f, "{b}"),
            Predicate::Cmp(a, op, b) => write!(f, "{a} {} {b}", op.symbol()),
            Predicate::Not(a) => write!(f, "!({a})"),
            Predicate::And(a, b) => write!(f, "({a} && {b})"),
            Predicate::Or(a, b) => write!(f, "({a} || {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Rel(RelOp),
    AndAnd,
    OrOr,
    Bang,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |offset: usize, message: &str| ParseError::Syntax {
        offset,
        message: message.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| syntax(start, "malformed number"))?;
            if !v.is_finite() {
                return Err(syntax(start, "number out of range"));
            }
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        let two = bytes.get(i + 1).copied();
        let (tok, len) = match (c, two) {
            (b'<', Some(b'=')) => (Tok::Rel(RelOp::Le), 2),
            (b'>', Some(b'=')) => (Tok::Rel(RelOp::Ge), 2),
            (b'=', Some(b'=')) => (Tok::Rel(RelOp::Eq), 2),
            (b'!', Some(b'=')) => (Tok::Rel(RelOp::Ne), 2),
            (b'&', Some(b'&')) => (Tok::AndAnd, 2),
            (b'|', Some(b'|')) => (Tok::OrOr, 2),
            (b'<', _) => (Tok::Rel(RelOp::Lt), 1),
            (b'>', _) => (Tok::Rel(RelOp::Gt), 1),
            (b'!', _) => (Tok::Bang, 1),
            (b'+', _) => (Tok::Plus, 1),
            (b'-', _) => (Tok::Minus, 1),
            (b'*', _) => (Tok::Star, 1),
            (b'/', _) => (Tok::Slash, 1),
            (b'^', _) => (Tok::Caret, 1),
            (b'(', _) => (Tok::LParen, 1),
            (b')', _) => (Tok::RParen, 1),
            (b',', _) => (Tok::Comma, 1),
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, &format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += len;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    n: usize,
    m: usize,
    predicate: bool,
}

impl Parser {
    fn new(text: &str, n: usize, m: usize, predicate: bool) -> Result<Self, ParseError> {
        if text.trim().is_empty() {
            return Err(ParseError::Syntax {
                offset: 0,
                message: "empty input".into(),
            });
        }
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            n,
            m,
            predicate,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: &str) -> Result<T, ParseError> {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: format!("{message}, found {found}"),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("expected {what}"))
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::End => Ok(()),
            _ => self.error("expected end of input"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            let k = match self.peek() {
                Tok::Num(v) if v.fract() == 0.0 && *v >= 0.0 && *v <= f64::from(u32::MAX) => *v as u32,
                _ => return self.error("expected a non-negative integer exponent"),
            };
            self.bump();
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let offset = self.offset();
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    if args.len() != func.arity() {
                        return Err(ParseError::Syntax {
                            offset,
                            message: format!(
                                "`{}` takes {} argument(s), got {}",
                                func.name(),
                                func.arity(),
                                args.len()
                            ),
                        });
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::Call(func, args));
                }
                self.variable(&name, offset)
            }
            _ => self.error("expected a number, variable, function or `(`"),
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Expr, ParseError> {
        let (index, dim, is_state) = if let Some(rest) = name.strip_prefix("th") {
            (rest, self.m, false)
        } else if let Some(rest) = name.strip_prefix('x') {
            (rest, self.n, true)
        } else {
            return Err(ParseError::UnknownIdentifier {
                name: name.into(),
                offset,
            });
        };
        let k: usize = match index.parse() {
            Ok(k) if !index.starts_with('+') => k,
            _ => {
                return Err(ParseError::UnknownIdentifier {
                    name: name.into(),
                    offset,
                })
            }
        };
        if !is_state && self.predicate {
            return Err(ParseError::DisturbanceInPredicate {
                name: name.into(),
                offset,
            });
        }
        if k == 0 || k > dim {
            return Err(ParseError::IndexOutOfRange {
                name: name.into(),
                offset,
                dim,
            });
        }
        Ok(if is_state {
            Expr::State(k - 1)
        } else {
            Expr::Disturbance(k - 1)
        })
    }

    fn pred(&mut self) -> Result<Predicate, ParseError> {
        let mut lhs = self.conj()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            let rhs = self.conj()?;
            lhs = Predicate::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Predicate, ParseError> {
        let mut lhs = self.neg()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            let rhs = self.neg()?;
            lhs = Predicate::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn neg(&mut self) -> Result<Predicate, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Predicate::Not(Box::new(self.neg()?)))
            }
            Tok::Ident(name) if name == "true" || name == "false" => {
                let b = name == "true";
                self.bump();
                Ok(Predicate::Const(b))
            }
            _ => self.pred_atom(),
        }
    }

    fn pred_atom(&mut self) -> Result<Predicate, ParseError> {
        let start = self.pos;
        let cmp = self.comparison();
        match cmp {
            Ok(p) => Ok(p),
            Err(cmp_err) => {
                if self.toks[start].0 != Tok::LParen {
                    return Err(cmp_err);
                }
                // `(` may open a parenthesized predicate rather than an expression.
                self.pos = start + 1;
                match self.pred().and_then(|p| {
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(p)
                }) {
                    Ok(p) => Ok(p),
                    Err(e) if e.offset() >= cmp_err.offset() => Err(e),
                    Err(_) => Err(cmp_err),
                }
            }
        }
    }

    fn comparison(&mut self) -> Result<Predicate, ParseError> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Rel(op) => *op,
            _ => return self.error("expected a comparison operator"),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Predicate::Cmp(lhs, op, rhs))
    }
}
