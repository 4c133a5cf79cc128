//! Closed-form data expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | x1 | x2 | x | '(' expr ')' | '|' expr '|'
//!          | piecewise_sign '(' expr ',' expr [',' expr] ')'
//! ```
//!
//! `|x|` is the Euclidean norm of the position; a bare `x` is `x1`.
//! `piecewise_sign(a, b)` is `a` where `x1 > 0`, `b` where `x1 < 0` and
//! their mean at `x1 = 0`; the three-argument form selects on the sign of
//! its first argument.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Norm,
    Abs(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Piecewise {
        selector: Option<Box<Expr>>,
        positive: Box<Expr>,
        negative: Box<Expr>,
    },
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("unexpected {:?} in {text:?}", p.tokens[p.pos])));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let coord = |k: usize| x.get(k).copied().unwrap_or(0.0);
        match self {
            Expr::Const(c) => *c,
            Expr::Coord(k) => coord(*k),
            Expr::Norm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Expr::Abs(e) => e.eval(x).abs(),
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Piecewise {
                selector,
                positive,
                negative,
            } => {
                let s = selector.as_ref().map(|s| s.eval(x)).unwrap_or_else(|| coord(0));
                if s > 0.0 {
                    positive.eval(x)
                } else if s < 0.0 {
                    negative.eval(x)
                } else {
                    0.5 * (positive.eval(x) + negative.eval(x))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
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
            let v = s
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {s:?}")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*^()|,".contains(c) {
            out.push(Token::Sym(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {text:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Token::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected {c:?}, found {:?}", self.peek())))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            if self.eat('+') {
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat('-') {
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while self.eat('*') {
            e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Token::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Token::Sym('|')) => {
                self.pos += 1;
                if self.tokens.get(self.pos) == Some(&Token::Ident("x".into()))
                    && self.tokens.get(self.pos + 1) == Some(&Token::Sym('|'))
                {
                    self.pos += 2;
                    return Ok(Expr::Norm);
                }
                let e = self.expr()?;
                self.expect('|')?;
                Ok(Expr::Abs(Box::new(e)))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" | "x1" => Ok(Expr::Coord(0)),
                    "x2" => Ok(Expr::Coord(1)),
                    "piecewise_sign" => {
                        self.expect('(')?;
                        let mut args = vec![self.expr()?];
                        while self.eat(',') {
                            args.push(self.expr()?);
                        }
                        self.expect(')')?;
                        let mut it = args.into_iter();
                        match it.len() {
                            2 => Ok(Expr::Piecewise {
                                selector: None,
                                positive: Box::new(it.next().unwrap()),
                                negative: Box::new(it.next().unwrap()),
                            }),
                            3 => Ok(Expr::Piecewise {
                                selector: Some(Box::new(it.next().unwrap())),
                                positive: Box::new(it.next().unwrap()),
                                negative: Box::new(it.next().unwrap()),
                            }),
                            n => Err(Error::Parse(format!("piecewise_sign takes 2 or 3 arguments, got {n}"))),
                        }
                    }
                    other => Err(Error::Parse(format!("unknown name {other:?}"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: &[f64]) -> f64 {
        Expr::parse(s).unwrap().eval(x)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("1 + 2 * 3", &[0.0]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[0.0]), 9.0);
        assert_eq!(ev("2 - 3 - 4", &[0.0]), -5.0);
        assert_eq!(ev("-2^2", &[0.0]), -4.0);
        assert_eq!(ev("2^-1", &[0.0]), 0.5);
        assert_eq!(ev("1.5e-1", &[0.0]), 0.15);
    }

    #[test]
    fn coordinates_and_norms() {
        assert_eq!(ev("x1 * x2", &[2.0, 3.0]), 6.0);
        assert_eq!(ev("|x|", &[3.0, 4.0]), 5.0);
        assert_eq!(ev("|x1|^1.5", &[-4.0]), 8.0);
        assert_eq!(ev("|x - 1|", &[-1.0]), 2.0);
        assert_eq!(ev("x", &[0.25, 9.0]), 0.25);
    }

    #[test]
    fn piecewise_by_sign() {
        let e = Expr::parse("piecewise_sign(-1.125, 0.6103515625)").unwrap();
        assert_eq!(e.eval(&[0.5]), -1.125);
        assert_eq!(e.eval(&[-0.5]), 0.6103515625);
        assert_eq!(e.eval(&[0.0]), 0.5 * (-1.125 + 0.6103515625));
        assert_eq!(ev("piecewise_sign(x2, 1, 2)", &[5.0, -1.0]), 2.0);
        assert_eq!(ev("piecewise_sign(|x|^1.5, -|x|^1.25)", &[-1.0]), -1.0);
    }

    #[test]
    fn rejects_malformed_input() {
        for s in ["", "1 +", "(1", "|x", "y", "1 $ 2", "piecewise_sign(1)", "2 3"] {
            assert!(Expr::parse(s).is_err(), "{s}");
        }
    }
}
