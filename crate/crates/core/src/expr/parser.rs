use super::{BinOp, Func, NamedConst, Node, ParseError};

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
    End,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            let Some(&c) = self.bytes.get(self.pos) else {
                out.push((Tok::End, start));
                return Ok(out);
            };
            let tok = match c {
                b'+' => Tok::Plus,
                b'-' => Tok::Minus,
                b'*' => Tok::Star,
                b'/' => Tok::Slash,
                b'^' => Tok::Caret,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                b'0'..=b'9' | b'.' => {
                    out.push((self.number()?, start));
                    continue;
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while self.pos < self.bytes.len()
                        && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    out.push((Tok::Ident(self.src[start..self.pos].to_string()), start));
                    continue;
                }
                _ => {
                    return Err(ParseError::Syntax {
                        pos: start,
                        expected: vec!["number".into(), "identifier".into(), "operator".into()],
                    })
                }
            };
            self.pos += 1;
            out.push((tok, start));
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        let mut count = self.digits();
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += self.digits();
        }
        if count == 0 {
            return Err(ParseError::InvalidNumber {
                pos: start,
                text: self.src[start..self.pos].to_string(),
            });
        }
        // Exponent only when digits follow; otherwise `e` is left for the constant.
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let mut look = self.pos + 1;
            if matches!(self.bytes.get(look), Some(b'+' | b'-')) {
                look += 1;
            }
            if self.bytes.get(look).is_some_and(u8::is_ascii_digit) {
                self.pos = look;
                self.digits();
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Tok::Num)
            .ok_or_else(|| ParseError::InvalidNumber {
                pos: start,
                text: text.to_string(),
            })
    }
}

struct Parser<'v> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    var: &'v str,
}

const ATOM_START: [&str; 4] = ["number", "identifier", "'('", "'-'"];

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Node::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let (_, pos) = self.bump();
                if *self.peek() == Tok::LParen {
                    self.call(name, pos)
                } else if name == self.var {
                    Ok(Node::Var)
                } else if name == "pi" {
                    Ok(Node::Const(NamedConst::Pi))
                } else if name == "e" {
                    Ok(Node::Const(NamedConst::E))
                } else {
                    Err(ParseError::UnknownIdentifier { pos, name })
                }
            }
            _ => self.fail(&ATOM_START),
        }
    }

    fn call(&mut self, name: String, pos: usize) -> Result<Node, ParseError> {
        let func = Func::lookup(&name).ok_or_else(|| ParseError::UnknownFunction {
            pos,
            name: name.clone(),
        })?;
        self.bump(); // '('
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect_rparen()?;
        let (min, max) = func.arity();
        if args.len() < min || max.is_some_and(|mx| args.len() > mx) {
            let expected = match max {
                Some(mx) if mx == min => min.to_string(),
                Some(mx) => format!("{min}..={mx}"),
                None => format!("at least {min}"),
            };
            return Err(ParseError::Arity {
                pos,
                name,
                expected,
                found: args.len(),
            });
        }
        Ok(Node::Call { func, args })
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            _ => self.fail(&["')'", "','", "operator"]),
        }
    }
}

/// Parses `source` as an expression whose only free variable is `var`.
pub fn parse_in(source: &str, var: &str) -> Result<Node, ParseError> {
    let toks = Lexer::new(source).tokens()?;
    let mut p = Parser { toks, at: 0, var };
    let node = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail(&["operator", "end of input"]);
    }
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::super::Expr;
    use super::*;

    fn err(src: &str) -> ParseError {
        Expr::parse(src, "m").unwrap_err()
    }

    #[test]
    fn rejects_malformed_with_positions() {
        assert_eq!(err("").position(), 0);
        assert_eq!(err("1 +").position(), 3);
        assert_eq!(err("(m").position(), 2);
        assert_eq!(err("m )").position(), 2);
        assert_eq!(err("2 $ 3").position(), 2);
        assert!(matches!(err("foo(m)"), ParseError::UnknownFunction { pos: 0, .. }));
        assert!(matches!(err("m + q"), ParseError::UnknownIdentifier { pos: 4, .. }));
        assert!(matches!(err("sin(m, 1)"), ParseError::Arity { pos: 0, found: 2, .. }));
        assert!(matches!(err("max(m)"), ParseError::Arity { .. }));
        assert!(matches!(err("2e"), ParseError::Syntax { pos: 1, .. }));
        assert!(matches!(err("+m"), ParseError::Syntax { pos: 0, .. }));
        assert!(matches!(err("."), ParseError::InvalidNumber { pos: 0, .. }));
        assert!(matches!(err("1e999"), ParseError::InvalidNumber { .. }));
    }

    #[test]
    fn variable_is_scoped() {
        assert!(Expr::parse("u", "m").is_err());
        assert!(Expr::parse("l+1", "l").is_ok());
    }

    #[test]
    fn exponent_vs_constant_e() {
        let e = Expr::parse("2e3", "m").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 2000.0);
        let e = Expr::parse("2*e", "m").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 2.0 * std::f64::consts::E);
        let e = Expr::parse("1.5E-2", "m").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 0.015);
    }
}
