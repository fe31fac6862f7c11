//! Small arithmetic expression language for user-supplied `log|a_n|`.
//!
//! Grammar (standard precedence, `^` binds tighter than unary minus and is
//! right-associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'n' | 'pi' | 'e' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func  := 'log' | 'exp' | 'pow'
//! ```
//!
//! The Unicode operators `−`, `×`, `·` and `÷` are accepted as aliases.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Index,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Log(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::validation(format!(
                "formula: unexpected token {:?} at position {}",
                p.tokens[p.pos].1, p.tokens[p.pos].0
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, n: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Index => n,
            Expr::Neg(a) => -a.eval(n),
            Expr::Add(a, b) => a.eval(n) + b.eval(n),
            Expr::Sub(a, b) => a.eval(n) - b.eval(n),
            Expr::Mul(a, b) => a.eval(n) * b.eval(n),
            Expr::Div(a, b) => a.eval(n) / b.eval(n),
            Expr::Pow(a, b) => a.eval(n).powf(b.eval(n)),
            Expr::Log(a) => a.eval(n).ln(),
            Expr::Exp(a) => a.eval(n).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                // exponent part: 1e-3, 2.5E+4
                if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].1.is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                let v: f64 =
                    s.parse().map_err(|_| Error::validation(format!("formula: bad number {s:?} at position {pos}")))?;
                out.push((pos, Tok::Num(v)));
            }
            c if c.is_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                out.push((pos, Tok::Ident(s)));
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push((pos, Tok::Op(c)));
                i += 1;
            }
            '\u{2212}' => {
                out.push((pos, Tok::Op('-')));
                i += 1;
            }
            '\u{00d7}' | '\u{00b7}' => {
                out.push((pos, Tok::Op('*')));
                i += 1;
            }
            '\u{00f7}' => {
                out.push((pos, Tok::Op('/')));
                i += 1;
            }
            '(' => {
                out.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::RParen));
                i += 1;
            }
            ',' => {
                out.push((pos, Tok::Comma));
                i += 1;
            }
            other => {
                return Err(Error::validation(format!("formula: unexpected character {other:?} at position {pos}")));
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(usize::MAX, |(p, _)| *p)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Tok::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::validation(format!("formula: expected {tok:?} at position {}", self.here())))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            lhs = if op == '+' { Expr::Add(lhs.into(), rhs.into()) } else { Expr::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            lhs = if op == '*' { Expr::Mul(lhs.into(), rhs.into()) } else { Expr::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Expr::Neg(self.unary()?.into())),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.unary()?;
            return Ok(Expr::Pow(base.into(), exponent.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.here();
        let tok = self
            .tokens
            .get(self.pos)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| Error::validation("formula: unexpected end of input"))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "n" => Ok(Expr::Index),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "e" => Ok(Expr::Num(std::f64::consts::E)),
                "log" | "exp" | "pow" => {
                    self.expect(Tok::LParen)?;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen)?;
                    let arity = if name == "pow" { 2 } else { 1 };
                    if args.len() != arity {
                        return Err(Error::validation(format!(
                            "formula: {name} takes {arity} argument(s), got {} at position {at}",
                            args.len()
                        )));
                    }
                    let mut it = args.into_iter();
                    let a = Box::new(it.next().unwrap());
                    Ok(match name.as_str() {
                        "log" => Expr::Log(a),
                        "exp" => Expr::Exp(a),
                        _ => Expr::Pow(a, Box::new(it.next().unwrap())),
                    })
                }
                other => Err(Error::validation(format!("formula: unknown identifier {other:?} at position {at}"))),
            },
            other => Err(Error::validation(format!("formula: unexpected token {other:?} at position {at}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(s: &str, n: f64) -> f64 {
        Expr::parse(s).unwrap().eval(n)
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(eval("-2^2", 0.0), -4.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(eval("8 / 4 / 2", 0.0), 1.0);
    }

    #[test]
    fn index_and_functions() {
        assert_eq!(eval("n^0.5", 4.0), 2.0);
        assert_eq!(eval("pow(n, 0.5)", 9.0), 3.0);
        assert!((eval("log(exp(n))", 3.0) - 3.0).abs() < 1e-15);
        assert!((eval("-n*log(2)", 3.0) + 3.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(eval("1e-3 * n", 2.0), 2e-3);
        assert!((eval("e", 0.0) - std::f64::consts::E).abs() < 1e-16);
    }

    #[test]
    fn unicode_operators() {
        assert_eq!(eval("3 × n − 1", 2.0), 5.0);
        assert_eq!(eval("6 ÷ 3", 0.0), 2.0);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "n +", "foo(n)", "log(n, 2)", "pow(n)", "(n", "n $ 2", "1 2"] {
            assert!(matches!(Expr::parse(bad), Err(Error::Validation(_))), "{bad:?} parsed");
        }
    }
}
