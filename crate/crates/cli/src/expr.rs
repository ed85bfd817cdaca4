//! Formulas in spec files.
//!
//! Grammar, loosest binding first: `if(c, a, b)` aside, comparisons `< <= > >= == !=` (1 or 0),
//! `+ -`, `* /`, unary `-`, right-associative `^`. Atoms are numbers, parenthesized expressions,
//! the constants `pi` and `e`, the variables of the context and calls
//! `sin cos tan atan exp ln sqrt abs floor ceil ufloor sign min max if`.
//! `ufloor(x)` is the integer `m` with `m − 1 < x ≤ m`. `x^k` with integral `k` is exact for
//! negative `x`, so `(-1)^n` alternates.

use anyhow::{bail, Result};

#[derive(Clone, Debug)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Clone, Copy, Debug)]
enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Floor,
    Ceil,
    UFloor,
    Sign,
    Min,
    Max,
    If,
}

impl Func {
    fn parse(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tan" => (Func::Tan, 1),
            "atan" => (Func::Atan, 1),
            "exp" => (Func::Exp, 1),
            "ln" | "log" => (Func::Ln, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "floor" => (Func::Floor, 1),
            "ceil" => (Func::Ceil, 1),
            "ufloor" => (Func::UFloor, 1),
            "sign" => (Func::Sign, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "if" => (Func::If, 3),
            _ => return None,
        })
    }
}

/// A compiled formula over a fixed list of variable names.
#[derive(Clone, Debug)]
pub struct Expr {
    root: Node,
    uses: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(&'static str),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let s = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let c = s[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < s.len() && ((s[i] as char).is_ascii_digit() || s[i] == b'.') {
                i += 1;
            }
            if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
                let mut j = i + 1;
                if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                    j += 1;
                }
                if j < s.len() && (s[j] as char).is_ascii_digit() {
                    i = j;
                    while i < s.len() && (s[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            match text.parse::<f64>() {
                Ok(v) => out.push(Tok::Num(v)),
                Err(_) => bail!("bad number {text:?} in {src:?}"),
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < s.len() && ((s[i] as char).is_ascii_alphanumeric() || s[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(src[start..i].to_string()));
        } else {
            let two = src.get(i..i + 2).unwrap_or("");
            let sym = match two {
                "<=" => Some("<="),
                ">=" => Some(">="),
                "==" => Some("=="),
                "!=" => Some("!="),
                "**" => Some("^"),
                _ => None,
            };
            if let Some(sym) = sym {
                out.push(Tok::Sym(sym));
                i += 2;
                continue;
            }
            let sym = match c {
                '+' => "+",
                '-' => "-",
                '*' => "*",
                '/' => "/",
                '^' => "^",
                '(' => "(",
                ')' => ")",
                ',' => ",",
                '<' => "<",
                '>' => ">",
                _ => bail!("unexpected character {c:?} in {src:?}"),
            };
            out.push(Tok::Sym(sym));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a [&'a str],
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<()> {
        if !self.eat(sym) {
            bail!("expected {sym:?} at token {} in {:?}", self.pos, self.src);
        }
        Ok(())
    }

    fn comparison(&mut self) -> Result<Node> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Some(Tok::Sym("<")) => Op::Lt,
            Some(Tok::Sym("<=")) => Op::Le,
            Some(Tok::Sym(">")) => Op::Gt,
            Some(Tok::Sym(">=")) => Op::Ge,
            Some(Tok::Sym("==")) => Op::Eq,
            Some(Tok::Sym("!=")) => Op::Ne,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.sum()?;
        Ok(Node::Bin(op, Box::new(lhs), Box::new(rhs)))
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat("+") {
                Op::Add
            } else if self.eat("-") {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat("*") {
                Op::Mul
            } else if self.eat("/") {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat("-") {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat("+") {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat("^") {
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.peek().cloned();
        self.pos += 1;
        match tok {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::Sym("(")) => {
                let n = self.comparison()?;
                self.expect(")")?;
                Ok(n)
            }
            Some(Tok::Ident(name)) => {
                if let Some(k) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(k));
                }
                match name.as_str() {
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "e" => return Ok(Node::Num(std::f64::consts::E)),
                    _ => {}
                }
                let Some((f, arity)) = Func::parse(&name) else {
                    bail!("unknown name {name:?} in {:?}; variables here: {}", self.src, self.vars.join(", "));
                };
                self.expect("(")?;
                let mut args = vec![self.comparison()?];
                while self.eat(",") {
                    args.push(self.comparison()?);
                }
                self.expect(")")?;
                if args.len() != arity {
                    bail!("{name} takes {arity} argument(s), got {} in {:?}", args.len(), self.src);
                }
                Ok(Node::Call(f, args))
            }
            _ => bail!("unexpected end or token at {} in {:?}", self.pos - 1, self.src),
        }
    }
}

fn mark(n: &Node, uses: &mut [bool]) {
    match n {
        Node::Num(_) => {}
        Node::Var(k) => uses[*k] = true,
        Node::Neg(a) => mark(a, uses),
        Node::Bin(_, a, b) => {
            mark(a, uses);
            mark(b, uses);
        }
        Node::Call(_, args) => args.iter().for_each(|a| mark(a, uses)),
    }
}

fn pow(x: f64, y: f64) -> f64 {
    if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
        x.powi(y as i32)
    } else {
        x.powf(y)
    }
}

fn truth(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn eval(n: &Node, vals: &[f64]) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(k) => vals[*k],
        Node::Neg(a) => -eval(a, vals),
        Node::Bin(op, a, b) => {
            let (x, y) = (eval(a, vals), eval(b, vals));
            match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => x * y,
                Op::Div => x / y,
                Op::Pow => pow(x, y),
                Op::Lt => truth(x < y),
                Op::Le => truth(x <= y),
                Op::Gt => truth(x > y),
                Op::Ge => truth(x >= y),
                Op::Eq => truth(x == y),
                Op::Ne => truth(x != y),
            }
        }
        Node::Call(Func::If, args) => {
            if eval(&args[0], vals) != 0.0 {
                eval(&args[1], vals)
            } else {
                eval(&args[2], vals)
            }
        }
        Node::Call(f, args) => {
            let x = eval(&args[0], vals);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Atan => x.atan(),
                Func::Exp => x.exp(),
                Func::Ln => x.ln(),
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
                Func::Floor => x.floor(),
                Func::Ceil => x.ceil(),
                Func::UFloor => x.ceil(),
                Func::Sign => {
                    if x == 0.0 {
                        0.0
                    } else {
                        x.signum()
                    }
                }
                Func::Min => x.min(eval(&args[1], vals)),
                Func::Max => x.max(eval(&args[1], vals)),
                Func::If => unreachable!(),
            }
        }
    }
}

impl Expr {
    pub fn parse(src: &str, vars: &[&str]) -> Result<Self> {
        let toks = lex(src)?;
        if toks.is_empty() {
            bail!("empty formula");
        }
        let mut p = Parser { toks, pos: 0, vars, src };
        let root = p.comparison()?;
        if p.pos != p.toks.len() {
            bail!("trailing input at token {} in {src:?}", p.pos);
        }
        let mut uses = vec![false; vars.len()];
        mark(&root, &mut uses);
        Ok(Expr { root, uses })
    }

    /// Whether the formula mentions the `k`-th variable.
    pub fn uses(&self, k: usize) -> bool {
        self.uses[k]
    }

    pub fn eval(&self, vals: &[f64]) -> f64 {
        eval(&self.root, vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, vars: &[&str], vals: &[f64]) -> f64 {
        Expr::parse(s, vars).unwrap().eval(vals)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3 ^ 2", &[], &[]), 19.0);
        assert_eq!(ev("-2^2", &[], &[]), -4.0);
        assert_eq!(ev("2^-1", &[], &[]), 0.5);
        assert_eq!(ev("2^3^2", &[], &[]), 512.0);
        assert_eq!(ev("(1 + 2) * 3", &[], &[]), 9.0);
        assert_eq!(ev("1.5e-1 * 2", &[], &[]), 0.3);
    }

    #[test]
    fn alternating_sign_and_variables() {
        assert_eq!(ev("(-1)^n / (n + 1)", &["n"], &[3.0]), -0.25);
        assert_eq!(ev("(-1)^n", &["n"], &[4.0]), 1.0);
        assert_eq!(ev("2^(-n0) * 3^(-n1)", &["n0", "n1"], &[1.0, 2.0]), 1.0 / 18.0);
    }

    #[test]
    fn functions_and_conditionals() {
        assert_eq!(ev("ufloor(2)", &[], &[]), 2.0);
        assert_eq!(ev("ufloor(2.5)", &[], &[]), 3.0);
        assert_eq!(ev("floor(2.5)", &[], &[]), 2.0);
        assert_eq!(ev("if(len == 2, 1, 7)", &["len"], &[1.0]), 7.0);
        assert_eq!(ev("max(1, 2) + min(1, 2)", &[], &[]), 3.0);
        assert!((ev("sin(pi / 2) + ln(e)", &[], &[]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("1 +", &[]).is_err());
        assert!(Expr::parse("foo(1)", &[]).is_err());
        assert!(Expr::parse("x", &["t"]).is_err());
        assert!(Expr::parse("min(1)", &[]).is_err());
        assert!(Expr::parse("(1", &[]).is_err());
        assert!(Expr::parse("1 $ 2", &[]).is_err());
    }

    #[test]
    fn usage() {
        let e = Expr::parse("t * 2", &["n", "t"]).unwrap();
        assert!(!e.uses(0));
        assert!(e.uses(1));
    }
}
