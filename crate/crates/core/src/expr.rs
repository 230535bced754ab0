//! Small arithmetic expressions in x (and y): `+ - * / ^`, unary minus,
//! sin, cos, exp, numeric constants, `pi` and `e`.

use crate::error::{Error, Result};
use crate::func::{Field, Function1D};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
}

impl Node {
    fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Node::Num(c) => *c,
            Node::Var(i) => v.get(*i).copied().unwrap_or(0.0),
            Node::Neg(a) => -a.eval(v),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow => pow(a, b),
                }
            }
            Node::Call(f, a) => {
                let a = a.eval(v);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                }
            }
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Num(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Call(_, a) => a.max_var(),
            Node::Bin(_, a, b) => a.max_var().max(b.max_var()),
        }
    }
}

// integer exponents go through powi so negative bases work
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() < 1e6 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Parsed expression; dimension is 2 when `y` appears, else 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    text: String,
    dim: usize,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        p.skip_ws();
        if p.pos == p.src.len() {
            return Err(Error::Parse { pos: 0, msg: "empty expression".into() });
        }
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err(format!("unexpected '{}'", p.src[p.pos] as char)));
        }
        let dim = root.max_var().map_or(1, |i| i + 1);
        Ok(Expr { root, text: text.to_string(), dim })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Evaluates at `x`; missing coordinates count as 0.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }

    /// Same expression viewed as a function of `n >= dim` variables.
    pub fn with_dim(mut self, n: usize) -> Result<Self> {
        if n < self.dim || n == 0 {
            return Err(Error::InvalidArgument(format!("expression '{}' needs {} variables, got {n}", self.text, self.dim)));
        }
        self.dim = n;
        Ok(self)
    }
}

impl Function1D for Expr {
    fn value(&self, x: f64) -> f64 {
        self.root.eval(&[x])
    }
}

impl Field for Expr {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: String) -> Error {
        Error::Parse { pos: self.pos, msg }
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => Op::Add,
                Some(b'-') => Op::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => Op::Mul,
                Some(b'/') => Op::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    // right associative; -x^2 parses as -(x^2)
    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.err("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(format!("unexpected '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse::<f64>().map(Node::Num).map_err(|_| Error::Parse { pos: start, msg: format!("bad number '{s}'") })
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let func = match name {
            "x" => return Ok(Node::Var(0)),
            "y" => return Ok(Node::Var(1)),
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            _ => return Err(Error::Parse { pos: start, msg: format!("unknown identifier '{name}'") }),
        };
        if !self.eat(b'(') {
            return Err(self.err(format!("expected '(' after {name}")));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.err("expected ')'".into()));
        }
        Ok(Node::Call(func, Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(s: &str, x: &[f64]) -> f64 {
        Expr::parse(s).unwrap().eval(x)
    }

    #[test]
    fn examples() {
        assert_eq!(at("x^3+3", &[1.0]), 4.0);
        assert_eq!(at("30*(sin(15*x)+1)", &[0.0]), 30.0);
        assert_eq!(at("16*(x^3+y^3)+3", &[0.5, 0.5]), 7.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(at("2+3*4", &[]), 14.0);
        assert_eq!(at("2^3^2", &[]), 512.0);
        assert_eq!(at("-2^2", &[]), -4.0);
        assert_eq!(at("(-2)^3", &[]), -8.0);
        assert_eq!(at("8/2/2", &[]), 2.0);
        assert_eq!(at("1.5e2 - 50", &[]), 100.0);
        assert!((at("cos(pi) + exp(0)", &[])).abs() < 1e-15);
    }

    #[test]
    fn dimension() {
        assert_eq!(Expr::parse("sin(3*(x+y+1))+3").unwrap().dim(), 2);
        assert_eq!(Field::dim(&Expr::parse("3").unwrap()), 1);
        assert!(Expr::parse("x*y").unwrap().with_dim(1).is_err());
    }

    #[test]
    fn errors_carry_position() {
        assert_eq!(Expr::parse("x + foo(1)").unwrap_err(), Error::Parse { pos: 4, msg: "unknown identifier 'foo'".into() });
        assert!(matches!(Expr::parse("(x+1"), Err(Error::Parse { pos: 4, .. })));
        assert!(matches!(Expr::parse("x 2"), Err(Error::Parse { pos: 2, .. })));
        assert!(matches!(Expr::parse("   "), Err(Error::Parse { pos: 0, .. })));
        assert!(matches!(Expr::parse("2*"), Err(Error::Parse { pos: 2, .. })));
    }
}
