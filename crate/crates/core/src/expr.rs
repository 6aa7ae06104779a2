//! Closed-form field expressions.
//!
//! Grammar (recursive descent, `^` right-associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | var | func '(' expr ')' | '(' expr ')' | '-' base
//! func   := exp | log | sin | cos | sinh | cosh | sqrt
//! var    := x1 … x9 | u | w
//! ```
//!
//! Sphere fields use the ambient coordinates `x1 … x{n+1}`; chart functions
//! use `u` and `w`.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Ambient coordinate `x_i`, 1-based.
    X(u8),
    U,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    const ALL: [(&'static str, Func); 7] = [
        ("exp", Func::Exp),
        ("log", Func::Log),
        ("sin", Func::Sin),
        ("cos", Func::Cos),
        ("sinh", Func::Sinh),
        ("cosh", Func::Cosh),
        ("sqrt", Func::Sqrt),
    ];

    fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, f)| *f == self).map(|(s, _)| *s).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn x(i: u8) -> Node {
        Node::Var(Var::X(i))
    }

    pub fn num(c: f64) -> Node {
        Node::Num(c)
    }

    pub fn call(f: Func, arg: Node) -> Node {
        Node::Call(f, Box::new(arg))
    }

    pub fn add(a: Node, b: Node) -> Node {
        Node::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Node, b: Node) -> Node {
        Node::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Node, b: Node) -> Node {
        Node::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Node, b: Node) -> Node {
        Node::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Node, b: Node) -> Node {
        Node::Pow(Box::new(a), Box::new(b))
    }

    /// Value of a variable-free subtree.
    fn constant_value(&self) -> Option<f64> {
        match self {
            Node::Num(c) => Some(*c),
            Node::Var(_) => None,
            Node::Neg(a) => a.constant_value().map(|v| -v),
            Node::Add(a, b) => Some(a.constant_value()? + b.constant_value()?),
            Node::Sub(a, b) => Some(a.constant_value()? - b.constant_value()?),
            Node::Mul(a, b) => Some(a.constant_value()? * b.constant_value()?),
            Node::Div(a, b) => Some(a.constant_value()? / b.constant_value()?),
            Node::Pow(a, b) => Some(a.constant_value()?.powf(b.constant_value()?)),
            Node::Call(f, a) => a.constant_value().and_then(|v| apply(*f, &v).ok()),
        }
    }

    fn visit_vars(&self, out: &mut Vec<Var>) {
        match self {
            Node::Num(_) => {}
            Node::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Node::Neg(a) | Node::Call(_, a) => a.visit_vars(out),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
        }
    }

    fn eval<T: Real>(&self, env: &Bindings<'_, T>) -> Result<T> {
        Ok(match self {
            Node::Num(c) => env.like.lift(*c),
            Node::Var(v) => env.lookup(*v)?,
            Node::Neg(a) => -a.eval(env)?,
            Node::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Node::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Node::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Node::Div(a, b) => {
                let den = b.eval(env)?;
                if den.value() == 0.0 {
                    return Err(Error::Domain("division by zero".into()));
                }
                a.eval(env)? / den
            }
            Node::Pow(a, b) => {
                let base = a.eval(env)?;
                match b.constant_value() {
                    Some(p) if p.fract() == 0.0 && p.abs() <= 64.0 => {
                        if p < 0.0 && base.value() == 0.0 {
                            return Err(Error::Domain("zero raised to a negative power".into()));
                        }
                        base.powi(p as i32)
                    }
                    Some(p) => {
                        if base.value() <= 0.0 {
                            return Err(Error::Domain(format!(
                                "non-integer power {p} of nonpositive value {}",
                                base.value()
                            )));
                        }
                        base.powf(p)
                    }
                    None => {
                        if base.value() <= 0.0 {
                            return Err(Error::Domain(format!(
                                "variable power of nonpositive value {}",
                                base.value()
                            )));
                        }
                        (b.eval(env)? * base.ln()).exp()
                    }
                }
            }
            Node::Call(f, a) => apply(*f, &a.eval(env)?)?,
        })
    }
}

fn apply<T: Real>(f: Func, a: &T) -> Result<T> {
    let v = a.value();
    Ok(match f {
        Func::Exp => a.exp(),
        Func::Log => {
            if v <= 0.0 {
                return Err(Error::Domain(format!("log of nonpositive value {v}")));
            }
            a.ln()
        }
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Sinh => a.sinh(),
        Func::Cosh => a.cosh(),
        Func::Sqrt => {
            if v < 0.0 {
                return Err(Error::Domain(format!("sqrt of negative value {v}")));
            }
            a.sqrt()
        }
    })
}

struct Bindings<'a, T> {
    x: &'a [T],
    u: Option<T>,
    w: Option<T>,
    like: T,
}

impl<T: Real> Bindings<'_, T> {
    fn lookup(&self, v: Var) -> Result<T> {
        match v {
            Var::X(i) => self
                .x
                .get(i as usize - 1)
                .copied()
                .ok_or_else(|| Error::Domain(format!("variable x{i} is not bound"))),
            Var::U => self.u.ok_or_else(|| Error::Domain("variable u is not bound".into())),
            Var::W => self.w.ok_or_else(|| Error::Domain("variable w is not bound".into())),
        }
    }
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    root: Node,
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self> {
        let root = Parser::new(text).parse()?;
        Ok(Self {
            source: text.to_string(),
            root,
        })
    }

    /// Wraps a programmatically built tree.
    pub fn from_node(root: Node) -> Self {
        let source = root.to_string();
        Self { source, root }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.root.visit_vars(&mut out);
        out
    }

    /// Highest ambient index `i` among the `x_i` used (0 if none).
    pub fn max_ambient_index(&self) -> usize {
        self.variables()
            .iter()
            .filter_map(|v| match v {
                Var::X(i) => Some(*i as usize),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn uses_chart_vars(&self) -> bool {
        self.variables().iter().any(|v| matches!(v, Var::U | Var::W))
    }

    /// Evaluates with `x_i = x[i-1]`.
    pub fn eval_ambient<T: Real>(&self, x: &[T]) -> Result<T> {
        let like = x[0];
        self.root.eval(&Bindings { x, u: None, w: None, like })
    }

    /// Evaluates a chart function of `(u, w)`.
    pub fn eval_chart<T: Real>(&self, u: T, w: T) -> Result<T> {
        self.root.eval(&Bindings {
            x: &[],
            u: Some(u),
            w: Some(w),
            like: u,
        })
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(c) => {
                if *c < 0.0 {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(Var::X(i)) => write!(f, "x{i}"),
            Node::Var(Var::U) => f.write_str("u"),
            Node::Var(Var::W) => f.write_str("w"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Parses a sphere field over `Sⁿ`: only `x1 … x{n+1}` may appear.
pub fn parse_field(text: &str, n: usize) -> Result<Expression> {
    let e = Expression::parse(text)?;
    if e.uses_chart_vars() {
        return Err(Error::InvalidParameters(
            "chart variables u, w are not allowed in a sphere field".into(),
        ));
    }
    let max = e.max_ambient_index();
    if max > n + 1 {
        return Err(Error::InvalidParameters(format!(
            "x{max} is out of range for a field on S^{n} (x1 … x{})",
            n + 1
        )));
    }
    Ok(e)
}

/// Parses a chart function of `(u, w)`.
pub fn parse_chart_function(text: &str) -> Result<Expression> {
    let e = Expression::parse(text)?;
    if e.max_ambient_index() > 0 {
        return Err(Error::InvalidParameters(
            "ambient variables are not allowed in a chart function".into(),
        ));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(c) => format!("number {c}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::End => "end of input".into(),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        }
    }

    fn parse(mut self) -> Result<Node> {
        self.advance()?;
        let node = self.expr()?;
        if self.tok != Tok::End {
            return Err(self.unexpected(&["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"]));
        }
        Ok(node)
    }

    fn unexpected(&self, expected: &[&str]) -> Error {
        Error::Parse {
            offset: self.tok_start,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.tok.describe(),
        }
    }

    fn advance(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let mut q = self.pos + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    while q < bytes.len() && bytes[q].is_ascii_digit() {
                        q += 1;
                    }
                    self.pos = q;
                }
            }
            let text = &self.src[start..self.pos];
            let value = text.parse::<f64>().map_err(|_| Error::Parse {
                offset: start,
                expected: vec!["number".into()],
                found: format!("'{text}'"),
            })?;
            self.tok = Tok::Num(value);
        } else if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
        } else if b"+-*/^()".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Sym(c as char);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap();
            return Err(Error::Parse {
                offset: self.pos,
                expected: vec!["number".into(), "variable".into(), "function".into(), "operator".into()],
                found: format!("'{ch}'"),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Sym('+') => {
                    self.advance()?;
                    lhs = Node::add(lhs, self.term()?);
                }
                Tok::Sym('-') => {
                    self.advance()?;
                    lhs = Node::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            match self.tok {
                Tok::Sym('*') => {
                    self.advance()?;
                    lhs = Node::mul(lhs, self.factor()?);
                }
                Tok::Sym('/') => {
                    self.advance()?;
                    lhs = Node::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        let base = self.base()?;
        if self.tok == Tok::Sym('^') {
            self.advance()?;
            let exponent = self.factor()?;
            return Ok(Node::pow(base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Node> {
        const EXPECTED: [&str; 5] = ["number", "variable", "function", "'('", "'-'"];
        match self.tok.clone() {
            Tok::Num(c) => {
                self.advance()?;
                Ok(Node::Num(c))
            }
            Tok::Sym('-') => {
                self.advance()?;
                Ok(Node::Neg(Box::new(self.base()?)))
            }
            Tok::Sym('(') => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(var) = parse_var(&name) {
                    self.advance()?;
                    return Ok(Node::Var(var));
                }
                if let Some((_, func)) = Func::ALL.iter().find(|(s, _)| *s == name) {
                    self.advance()?;
                    if self.tok != Tok::Sym('(') {
                        return Err(self.unexpected(&["'('"]));
                    }
                    self.advance()?;
                    let arg = self.expr()?;
                    self.expect_close()?;
                    return Ok(Node::call(*func, arg));
                }
                Err(self.unexpected(&EXPECTED))
            }
            _ => Err(self.unexpected(&EXPECTED)),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        if self.tok != Tok::Sym(')') {
            return Err(self.unexpected(&["')'", "'+'", "'-'", "'*'", "'/'", "'^'"]));
        }
        self.advance()
    }
}

fn parse_var(name: &str) -> Option<Var> {
    match name {
        "u" => Some(Var::U),
        "w" => Some(Var::W),
        _ => {
            let rest = name.strip_prefix('x')?;
            if rest.len() == 1 {
                let d = rest.as_bytes()[0];
                if (b'1'..=b'9').contains(&d) {
                    return Some(Var::X(d - b'0'));
                }
            }
            None
        }
    }
}
