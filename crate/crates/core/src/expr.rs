//! Arithmetic expressions over named real variables.
//!
//! Used for user-supplied metric diagonals (variables `x0`, `x1`, ...) and
//! τ-dependent coefficient entries (variable `tau`). Grammar:
//! numbers, variables, `pi`, `e`, binary `+ - * / ^`, unary minus,
//! parentheses and the functions `sin cos tan exp ln sqrt abs sinh cosh tanh`.
//! `^` is right-associative and binds tighter than unary minus.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at column {})", self.msg, self.pos + 1)
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => vars[*i],
            Node::Neg(a) => -a.eval(vars),
            Node::Call(f, a) => f.apply(a.eval(vars)),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(vars), b.eval(vars));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => {
                        // Integer exponents go through powi so that negative
                        // bases behave like repeated multiplication.
                        if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                            a.powi(b as i32)
                        } else {
                            a.powf(b)
                        }
                    }
                }
            }
        }
    }
}

/// A parsed expression bound to an ordered list of variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
    arity: usize,
}

impl Expr {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Expr, ExprError> {
        let mut p = Parser {
            src: source.as_bytes(),
            pos: 0,
            vars,
        };
        let root = p.expr(0)?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr {
            source: source.to_string(),
            root,
            arity: vars.len(),
        })
    }

    /// Constant expression.
    pub fn constant(v: f64) -> Expr {
        Expr {
            source: format!("{v:?}"),
            root: Node::Num(v),
            arity: 0,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates with variables in the order given to [`Expr::parse`].
    pub fn eval(&self, vars: &[f64]) -> f64 {
        assert!(vars.len() >= self.arity, "expression needs {} variables", self.arity);
        self.root.eval(vars)
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn binding(op: u8) -> Option<(u8, u8)> {
        // (left, right) binding powers.
        match op {
            b'+' | b'-' => Some((1, 2)),
            b'*' | b'/' => Some((3, 4)),
            b'^' => Some((8, 7)),
            _ => None,
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node, ExprError> {
        let mut lhs = self.prefix()?;
        while let Some(op) = self.peek() {
            let Some((l, r)) = Self::binding(op) else {
                break;
            };
            if l < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(r)?;
            lhs = Node::Bin(op as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some(b'-') => {
                self.pos += 1;
                // Unary minus binds looser than ^ and tighter than * /.
                Ok(Node::Neg(Box::new(self.expr(5)?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.expr(5)
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr(0)?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign =
                (c == b'+' || c == b'-') && self.pos > start && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Node::Num).map_err(|_| ExprError {
            pos: start,
            msg: format!("invalid number `{text}`"),
        })
    }

    fn ident(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if let Some(i) = self.vars.iter().position(|v| *v == name) {
            return Ok(Node::Var(i));
        }
        match name {
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            _ => {}
        }
        if let Some(f) = Func::lookup(name) {
            if self.peek() != Some(b'(') {
                return Err(self.err("expected `(` after function name"));
            }
            self.pos += 1;
            let arg = self.expr(0)?;
            if self.peek() != Some(b')') {
                return Err(self.err("expected `)`"));
            }
            self.pos += 1;
            return Ok(Node::Call(f, Box::new(arg)));
        }
        Err(ExprError {
            pos: start,
            msg: format!("unknown identifier `{name}`"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, vars: &[&str], vals: &[f64]) -> f64 {
        Expr::parse(src, vars).unwrap().eval(vals)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[], &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[], &[]), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[], &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[], &[]), -4.0);
        assert_eq!(ev("8 / 4 / 2", &[], &[]), 1.0);
        assert_eq!(ev("1 - 2 - 3", &[], &[]), -4.0);
        assert_eq!(ev("2 * -3", &[], &[]), -6.0);
        assert_eq!(ev("1.5e-3 * 2", &[], &[]), 3e-3);
    }

    #[test]
    fn variables_and_functions() {
        let v = ev("-(1 - 2/x1)", &["x0", "x1"], &[0.0, 10.0]);
        assert!((v + 0.8).abs() < 1e-15);
        assert_eq!(ev("1 + tau^2", &["tau"], &[3.0]), 10.0);
        assert!((ev("sin(x0)^2", &["x0"], &[1.0]) - 1f64.sin().powi(2)).abs() < 1e-15);
        assert!((ev("cos(pi)", &[], &[]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors_report_position() {
        let e = Expr::parse("1 + foo", &["x0"]).unwrap_err();
        assert_eq!(e.pos, 4);
        assert!(Expr::parse("(1 + 2", &[]).is_err());
        assert!(Expr::parse("1 2", &[]).is_err());
        assert!(Expr::parse("sin 2", &[]).is_err());
        assert!(Expr::parse("", &[]).is_err());
    }
}
