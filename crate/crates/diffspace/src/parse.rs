//! Text grammar for smooth-map expressions used in configuration files.
//!
//! Infix arithmetic with `+ - * / ^`, parentheses, decimal literals, the
//! constant `pi`, coordinates `x1..xn` (plus `t` as an alias for `x1` in
//! product-with-interval contexts), and named primitives `exp`, `log`, `sin`,
//! `cos`, `sqrt`, `bump`, `bump_plus`. Powers take integer exponents.
//! Errors carry line and column.

use crate::error::{Error, Result};
use crate::smooth::{self, ExprRef, SmoothMap};

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
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let bump_pos = |ch: char, line: &mut usize, col: &mut usize| {
            if ch == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                chars.next();
                bump_pos(c, &mut line, &mut col);
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | ',' => {
                chars.next();
                bump_pos(c, &mut line, &mut col);
                let tok = match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => Tok::Comma,
                };
                out.push(Spanned {
                    tok,
                    line: tline,
                    col: tcol,
                });
            }
            '0'..='9' | '.' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() || d == '.' {
                        s.push(d);
                        chars.next();
                        bump_pos(d, &mut line, &mut col);
                    } else if (d == 'e' || d == 'E') && !s.is_empty() {
                        // exponent; may be followed by a sign
                        let mut clone = chars.clone();
                        clone.next();
                        match clone.peek() {
                            Some(&n) if n.is_ascii_digit() || n == '+' || n == '-' => {
                                s.push(d);
                                chars.next();
                                bump_pos(d, &mut line, &mut col);
                                if n == '+' || n == '-' {
                                    s.push(n);
                                    chars.next();
                                    bump_pos(n, &mut line, &mut col);
                                }
                            }
                            _ => break,
                        }
                    } else {
                        break;
                    }
                }
                let v: f64 = s.parse().map_err(|_| Error::Parse {
                    line: tline,
                    col: tcol,
                    msg: format!("malformed number `{s}`"),
                })?;
                out.push(Spanned {
                    tok: Tok::Num(v),
                    line: tline,
                    col: tcol,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                        bump_pos(d, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                out.push(Spanned {
                    tok: Tok::Ident(s),
                    line: tline,
                    col: tcol,
                });
            }
            other => {
                return Err(Error::Parse {
                    line: tline,
                    col: tcol,
                    msg: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    input_dim: usize,
    src_len_line: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> Error {
        match self.peek().or_else(|| self.toks.last()) {
            Some(t) => Error::Parse {
                line: t.line,
                col: t.col,
                msg: msg.into(),
            },
            None => Error::Parse {
                line: self.src_len_line,
                col: 1,
                msg: format!("{} (at end of input)", msg.into()),
            },
        }
    }

    fn expr(&mut self) -> Result<ExprRef> {
        let mut lhs = self.term()?;
        while let Some(t) = self.peek() {
            match t.tok {
                Tok::Plus => {
                    self.next();
                    lhs = smooth::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.next();
                    lhs = smooth::sub(lhs, self.term()?);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExprRef> {
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            match t.tok {
                Tok::Star => {
                    self.next();
                    lhs = smooth::mul(lhs, self.unary()?);
                }
                Tok::Slash => {
                    self.next();
                    lhs = smooth::div(lhs, self.unary()?);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ExprRef> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Minus) => {
                self.next();
                Ok(smooth::neg(self.unary()?))
            }
            Some(Tok::Plus) => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<ExprRef> {
        let base = self.atom()?;
        if let Some(t) = self.peek() {
            if t.tok == Tok::Caret {
                self.next();
                let neg = if let Some(s) = self.peek() {
                    if s.tok == Tok::Minus {
                        self.next();
                        true
                    } else {
                        false
                    }
                } else {
                    false
                };
                match self.next() {
                    Some(Spanned {
                        tok: Tok::Num(v),
                        line,
                        col,
                    }) => {
                        if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
                            return Err(Error::Parse {
                                line,
                                col,
                                msg: "power exponent must be an integer".into(),
                            });
                        }
                        let k = v as i32 * if neg { -1 } else { 1 };
                        return Ok(smooth::pow(base, k));
                    }
                    _ => return Err(self.err_here("expected integer exponent after `^`")),
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprRef> {
        let t = self
            .next()
            .ok_or_else(|| self.err_here("expected an expression"))?;
        match t.tok {
            Tok::Num(v) => Ok(smooth::cst(v)),
            Tok::LParen => {
                let e = self.expr()?;
                match self.next() {
                    Some(Spanned {
                        tok: Tok::RParen, ..
                    }) => Ok(e),
                    _ => Err(Error::Parse {
                        line: t.line,
                        col: t.col,
                        msg: "unclosed parenthesis".into(),
                    }),
                }
            }
            Tok::Ident(name) => self.ident(name, t.line, t.col),
            other => Err(Error::Parse {
                line: t.line,
                col: t.col,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn ident(&mut self, name: String, line: usize, col: usize) -> Result<ExprRef> {
        // coordinates
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(i) = rest.parse::<usize>() {
                if i == 0 || i > self.input_dim {
                    return Err(Error::Parse {
                        line,
                        col,
                        msg: format!(
                            "coordinate `{name}` out of range for dimension {}",
                            self.input_dim
                        ),
                    });
                }
                return Ok(smooth::coord(i - 1));
            }
        }
        match name.as_str() {
            "t" => {
                if self.input_dim == 0 {
                    return Err(Error::Parse {
                        line,
                        col,
                        msg: "`t` used in a zero-dimensional context".into(),
                    });
                }
                return Ok(smooth::coord(0));
            }
            "pi" => return Ok(smooth::cst(std::f64::consts::PI)),
            _ => {}
        }
        // unary primitives
        let f: fn(ExprRef) -> ExprRef = match name.as_str() {
            "exp" => smooth::exp,
            "log" => smooth::log,
            "sin" => smooth::sin,
            "cos" => smooth::cos,
            "sqrt" => smooth::sqrt,
            "bump" => smooth::bump,
            "bump_plus" => smooth::bump_plus,
            _ => {
                return Err(Error::Parse {
                    line,
                    col,
                    msg: format!("unknown identifier `{name}`"),
                })
            }
        };
        match self.next() {
            Some(Spanned {
                tok: Tok::LParen, ..
            }) => {}
            _ => {
                return Err(Error::Parse {
                    line,
                    col,
                    msg: format!("`{name}` must be called with parentheses"),
                })
            }
        }
        let arg = self.expr()?;
        match self.next() {
            Some(Spanned {
                tok: Tok::RParen, ..
            }) => Ok(f(arg)),
            _ => Err(Error::Parse {
                line,
                col,
                msg: format!("unclosed argument list for `{name}`"),
            }),
        }
    }
}

/// Parse one scalar expression over coordinates `x1..x{input_dim}`.
pub fn parse_expr(src: &str, input_dim: usize) -> Result<ExprRef> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        input_dim,
        src_len_line: src.lines().count().max(1),
    };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(Error::Parse {
            line: t.line,
            col: t.col,
            msg: format!("trailing input starting at {:?}", t.tok),
        });
    }
    Ok(e)
}

/// Parse a scalar smooth map.
pub fn parse_scalar_map(src: &str, input_dim: usize) -> Result<SmoothMap> {
    SmoothMap::scalar(input_dim, parse_expr(src, input_dim)?)
}

/// Parse one expression per component into a map R^input_dim -> R^k.
pub fn parse_map(components: &[String], input_dim: usize) -> Result<SmoothMap> {
    let outputs = components
        .iter()
        .map(|s| parse_expr(s, input_dim))
        .collect::<Result<Vec<_>>>()?;
    SmoothMap::new(input_dim, outputs)
}
