//! Surface syntax for presentations.
//!
//! Grammar (whitespace insignificant, positions are 0-based byte offsets):
//!
//! ```text
//! expr   := factor ('*' factor)*
//! factor := 'Z' ['^' uint] | 'Z/' uint | '1' | '(' atom ('x' atom)* ')'
//! atom   := 'Z' ['^' uint] | 'Z/' uint
//! ```
//!
//! `*` is free product, `x` is direct product, and direct products of more
//! than one atom always take parentheses. `Z^0` denotes the trivial group;
//! `Z/0` and `Z/1` are rejected (write `1` for the trivial group). For
//! graph-of-groups files, [`parse_abelian`] accepts a single abelian group
//! as `atom ('x' atom)*` with optional outer parentheses, or `1`.

use std::fmt;

use thiserror::Error;

use crate::group::{AbelianFactor, GroupError, Presentation};

/// Largest accepted free rank; guards against absurd generator counts.
pub const MAX_RANK: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Scanner {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next non-whitespace byte without consuming it.
    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8, what: &str) -> Result<(), ParseError> {
        if self.eat(b) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&mut self, expected: &str) -> ParseError {
        let found = match self.peek() {
            Some(b) => format!("'{}'", b as char),
            None => "end of input".to_string(),
        };
        ParseError::new(self.pos, format!("expected {expected}, found {found}"))
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn parse_uint(&mut self) -> Result<(u64, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut value: u64 = 0;
        let mut any = false;
        while let Some(b) = self.src.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            any = true;
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| ParseError::new(start, "number too large"))?;
            self.pos += 1;
        }
        if !any {
            return Err(self.unexpected("a number"));
        }
        Ok((value, start))
    }
}

/// `Z`, `Z^n` or `Z/n`, returned as (free rank, cyclic orders).
fn parse_atom(s: &mut Scanner) -> Result<(usize, Vec<u64>), ParseError> {
    s.expect(b'Z', "'Z'")?;
    if s.eat(b'^') {
        let (n, pos) = s.parse_uint()?;
        let rank = usize::try_from(n)
            .ok()
            .filter(|&r| r <= MAX_RANK)
            .ok_or_else(|| ParseError::new(pos, "rank too large"))?;
        Ok((rank, Vec::new()))
    } else if s.eat(b'/') {
        let (d, pos) = s.parse_uint()?;
        if d < 2 {
            return Err(ParseError::new(
                pos,
                "modulus must be at least 2 (write 1 for the trivial group)",
            ));
        }
        Ok((0, vec![d]))
    } else {
        Ok((1, Vec::new()))
    }
}

fn build_factor(
    rank: usize,
    orders: Vec<u64>,
    position: usize,
) -> Result<AbelianFactor, ParseError> {
    AbelianFactor::new(rank, &orders).map_err(|e| match e {
        GroupError::TorsionOverflow => ParseError::new(position, "torsion orders overflow"),
        GroupError::MalformedTorsion(d) => {
            ParseError::new(position, format!("malformed torsion order {d}"))
        }
    })
}

fn parse_factor(s: &mut Scanner) -> Result<AbelianFactor, ParseError> {
    match s.peek() {
        Some(b'Z') => {
            let start = s.pos;
            let (rank, orders) = parse_atom(s)?;
            build_factor(rank, orders, start)
        }
        Some(b'(') => {
            let start = s.pos;
            s.eat(b'(');
            let mut rank = 0usize;
            let mut orders = Vec::new();
            loop {
                let (r, mut o) = parse_atom(s)?;
                rank = rank
                    .checked_add(r)
                    .filter(|&v| v <= MAX_RANK)
                    .ok_or_else(|| ParseError::new(start, "rank too large"))?;
                orders.append(&mut o);
                if !s.eat(b'x') {
                    break;
                }
            }
            s.expect(b')', "')' or 'x'")?;
            build_factor(rank, orders, start)
        }
        Some(b) if b.is_ascii_digit() => {
            let (v, pos) = s.parse_uint()?;
            if v == 1 {
                Ok(AbelianFactor::trivial())
            } else {
                Err(ParseError::new(pos, format!("expected a factor, found {v}")))
            }
        }
        _ => Err(s.unexpected("a factor")),
    }
}

/// Parses a free-product expression into a normalized [`Presentation`].
pub fn parse_group(text: &str) -> Result<Presentation, ParseError> {
    let mut s = Scanner::new(text);
    let mut factors = vec![parse_factor(&mut s)?];
    while s.eat(b'*') {
        factors.push(parse_factor(&mut s)?);
    }
    if !s.at_end() {
        return Err(s.unexpected("'*' or end of input"));
    }
    Ok(Presentation::new(factors))
}

/// Parses a single abelian group (`atom ('x' atom)*`, optionally
/// parenthesized, or `1`); used for graph-of-groups vertex and edge groups.
pub fn parse_abelian(text: &str) -> Result<AbelianFactor, ParseError> {
    let mut s = Scanner::new(text);
    let parenthesized = s.eat(b'(');
    let factor = match s.peek() {
        Some(b) if b.is_ascii_digit() && !parenthesized => {
            let (v, pos) = s.parse_uint()?;
            if v == 1 {
                AbelianFactor::trivial()
            } else {
                return Err(ParseError::new(pos, format!("expected a group, found {v}")));
            }
        }
        _ => {
            let start = s.pos;
            let mut rank = 0usize;
            let mut orders = Vec::new();
            loop {
                let (r, mut o) = parse_atom(&mut s)?;
                rank = rank
                    .checked_add(r)
                    .filter(|&v| v <= MAX_RANK)
                    .ok_or_else(|| ParseError::new(start, "rank too large"))?;
                orders.append(&mut o);
                if !s.eat(b'x') {
                    break;
                }
            }
            build_factor(rank, orders, start)?
        }
    };
    if parenthesized {
        s.expect(b')', "')' or 'x'")?;
    }
    if !s.at_end() {
        return Err(s.unexpected("end of input"));
    }
    Ok(factor)
}

fn format_factor(f: &AbelianFactor, out: &mut String) {
    use fmt::Write;
    let rank_part = |out: &mut String, rank: usize| {
        if rank == 1 {
            out.push('Z');
        } else {
            let _ = write!(out, "Z^{rank}");
        }
    };
    if f.torsion().is_empty() {
        rank_part(out, f.rank());
    } else if f.rank() == 0 && f.torsion().len() == 1 {
        let _ = write!(out, "Z/{}", f.torsion()[0]);
    } else {
        out.push('(');
        let mut first = true;
        if f.rank() > 0 {
            rank_part(out, f.rank());
            first = false;
        }
        for d in f.torsion() {
            if !first {
                out.push_str(" x ");
            }
            let _ = write!(out, "Z/{d}");
            first = false;
        }
        out.push(')');
    }
}

/// Canonical rendering; [`parse_group`] round-trips it to an equal
/// presentation.
pub fn format_group(p: &Presentation) -> String {
    if p.is_trivial_group() {
        return "1".to_string();
    }
    let mut out = String::new();
    for (i, f) in p.factors().iter().enumerate() {
        if i > 0 {
            out.push_str(" * ");
        }
        format_factor(f, &mut out);
    }
    out
}
