use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable x{index} at byte {offset} is outside a {dim}-dimensional chart")]
    VariableOutOfChart {
        index: usize,
        dim: usize,
        offset: usize,
    },
    #[error("exponent at byte {offset} must be a constant")]
    NonConstantExponent { offset: usize },
}

/// Parses an expression over `x1, x2, ...` with no dimension bound.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    Parser::new(source, None, false).run()
}

/// Parses an expression and rejects variables beyond `dim`.
pub fn parse_in_chart(source: &str, dim: usize) -> Result<Expr, ParseError> {
    Parser::new(source, Some(dim), false).run()
}

/// Parses a curve coordinate function of the parameter `t`, stored as `x1`.
pub fn parse_curve_component(source: &str) -> Result<Expr, ParseError> {
    Parser::new(source, Some(1), true).run()
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Token,
    tok_start: usize,
    dim: Option<usize>,
    allow_t: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, dim: Option<usize>, allow_t: bool) -> Self {
        Parser {
            src,
            pos: 0,
            tok: Token::End,
            tok_start: 0,
            dim,
            allow_t,
        }
    }

    fn run(mut self) -> Result<Expr, ParseError> {
        self.advance()?;
        let e = self.expr()?;
        if self.tok != Token::End {
            return Err(self.syntax(self.tok_start, "unexpected trailing input"));
        }
        Ok(e)
    }

    fn syntax(&self, offset: usize, message: &str) -> ParseError {
        ParseError::Syntax {
            offset,
            message: message.to_string(),
        }
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Token::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        self.tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Token::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b'0'..=b'9' | b'.' => self.number()?,
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Token::Ident(self.src[start..self.pos].to_string())
            }
            _ => {
                let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                return Err(self.syntax(self.pos, &format!("unexpected character `{ch}`")));
            }
        };
        Ok(())
    }

    fn number(&mut self) -> Result<Token, ParseError> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut count = digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            count += digits(&mut p);
        }
        if count == 0 {
            return Err(self.syntax(start, "malformed number"));
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) == 0 {
                return Err(self.syntax(q, "malformed exponent in number"));
            }
            p = q;
        }
        self.pos = p;
        self.src[start..p]
            .parse::<f64>()
            .map(Token::Number)
            .map_err(|_| self.syntax(start, "malformed number"))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Token::Op(c @ ('+' | '-')) = self.tok {
            self.advance()?;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Token::Op(c @ ('*' | '/')) = self.tok {
            self.advance()?;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Token::Op('-') {
            self.advance()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok == Token::Op('^') {
            self.advance()?;
            let at = self.tok_start;
            let exponent = self.unary()?;
            if exponent.literal_value().is_none() {
                return Err(ParseError::NonConstantExponent { offset: at });
            }
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.tok_start;
        match std::mem::replace(&mut self.tok, Token::End) {
            Token::Number(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Token::LParen => {
                self.advance()?;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Token::Ident(name) => {
                self.advance()?;
                if let Some(func) = Func::from_name(&name) {
                    if self.tok != Token::LParen {
                        return Err(self.syntax(self.tok_start, "expected `(` after function name"));
                    }
                    self.advance()?;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                self.identifier(name, start)
            }
            Token::End => Err(self.syntax(start, "unexpected end of input")),
            Token::RParen => Err(self.syntax(start, "unexpected `)`")),
            Token::Op(c) => Err(self.syntax(start, &format!("unexpected operator `{c}`"))),
        }
    }

    fn identifier(&self, name: String, offset: usize) -> Result<Expr, ParseError> {
        if name == "pi" {
            return Ok(Expr::Pi);
        }
        if self.allow_t && name == "t" {
            return Ok(Expr::Var(1));
        }
        let index = name
            .strip_prefix('x')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&k| k >= 1 && !self.allow_t);
        match index {
            Some(index) => match self.dim {
                Some(dim) if index > dim => Err(ParseError::VariableOutOfChart { index, dim, offset }),
                _ => Ok(Expr::Var(index)),
            },
            None => Err(ParseError::UnknownIdentifier { name, offset }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.tok != Token::RParen {
            return Err(self.syntax(self.tok_start, "expected `)`"));
        }
        self.advance()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbalanced_call_reports_offset() {
        assert!(matches!(parse("sin("), Err(ParseError::Syntax { offset: 4, .. })));
    }

    #[test]
    fn unknown_identifiers() {
        assert_eq!(
            parse("2*y + 1"),
            Err(ParseError::UnknownIdentifier {
                name: "y".into(),
                offset: 2
            })
        );
        assert!(matches!(parse("x0"), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("foo(x1)"), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("t"), Err(ParseError::UnknownIdentifier { .. })));
    }

    #[test]
    fn precedence() {
        let p = [2.0, 3.0];
        let v = |s: &str| parse(s).unwrap().eval(&p).unwrap();
        assert_eq!(v("-x1^2"), -4.0);
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("x1 - x2 - 1"), -2.0);
        assert_eq!(v("x2 / x1 * 4"), 6.0);
        assert_eq!(v("x1 + x2 * 2"), 8.0);
        assert_eq!(v("x1^-1"), 0.5);
        assert_eq!(v("--x1"), 2.0);
    }

    #[test]
    fn constant_exponent_required() {
        assert!(matches!(parse("x1^x2"), Err(ParseError::NonConstantExponent { offset: 3 })));
        assert!(parse("x1^(1/3)").is_ok());
        assert!(parse("x1^(2*pi)").is_ok());
    }

    #[test]
    fn chart_dimension_is_enforced() {
        assert!(parse_in_chart("x1 + x2", 2).is_ok());
        assert_eq!(
            parse_in_chart("x1 + x3", 2),
            Err(ParseError::VariableOutOfChart {
                index: 3,
                dim: 2,
                offset: 5
            })
        );
        assert_eq!(parse("x12").unwrap(), Expr::Var(12));
    }

    #[test]
    fn curve_parameter() {
        let e = parse_curve_component("pi/3 + 0*t").unwrap();
        assert!(e.depends_on(1));
        assert!(matches!(
            parse_curve_component("x1"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn malformed_input() {
        for src in ["", "1 +", "(x1", "x1)", "sin x1", "1..2", "3e", "x1 # 2", "*2"] {
            assert!(parse(src).is_err(), "{src:?} should fail");
        }
    }
}
