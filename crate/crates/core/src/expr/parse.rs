//! Prefix-notation serialization.
//!
//! Format: whitespace-separated tokens, preorder. Operators use their
//! vocabulary names, the univariate variable is `x` (multivariate: `x2`,
//! `x3`, ...), placeholders are the bare token `c` (indices are assigned in
//! preorder on parse), Euler's number is `E`, and any other numeric literal
//! is a decimal constant.

use super::{BinaryOp, Expr, UnaryOp, EULER};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed sequence: unknown token `{token}` at position {pos}")]
    UnknownToken { pos: usize, token: String },
    #[error("malformed sequence: expected a token at position {pos}, input ended")]
    Truncated { pos: usize },
    #[error("malformed sequence: trailing token `{token}` at position {pos}")]
    TrailingTokens { pos: usize, token: String },
    #[error("malformed sequence: empty input")]
    Empty,
}

pub fn parse_prefix(input: &str) -> Result<Expr, ParseError> {
    let tokens: Vec<&str> = input.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut pos = 0;
    let mut next_ph = 1;
    let tree = parse_at(&tokens, &mut pos, &mut next_ph)?;
    if pos != tokens.len() {
        return Err(ParseError::TrailingTokens {
            pos,
            token: tokens[pos].to_string(),
        });
    }
    Ok(tree)
}

fn parse_at(tokens: &[&str], pos: &mut usize, next_ph: &mut u32) -> Result<Expr, ParseError> {
    let Some(&tok) = tokens.get(*pos) else {
        return Err(ParseError::Truncated { pos: *pos });
    };
    *pos += 1;
    if let Some(op) = UnaryOp::from_name(tok) {
        let a = parse_at(tokens, pos, next_ph)?;
        return Ok(Expr::Unary(op, Box::new(a)));
    }
    if let Some(op) = BinaryOp::from_name(tok) {
        let a = parse_at(tokens, pos, next_ph)?;
        let b = parse_at(tokens, pos, next_ph)?;
        return Ok(Expr::Binary(op, Box::new(a), Box::new(b)));
    }
    match tok {
        "c" => {
            let i = *next_ph;
            *next_ph += 1;
            Ok(Expr::Placeholder(i))
        }
        "x" => Ok(Expr::Var(1)),
        "E" => Ok(Expr::Const(EULER)),
        _ => {
            if let Some(rest) = tok.strip_prefix('x') {
                if let Ok(v) = rest.parse::<u32>() {
                    if v >= 1 {
                        return Ok(Expr::Var(v));
                    }
                }
            }
            if let Ok(v) = tok.parse::<f64>() {
                if v.is_finite() {
                    return Ok(Expr::Const(v));
                }
            }
            Err(ParseError::UnknownToken {
                pos: *pos - 1,
                token: tok.to_string(),
            })
        }
    }
}

pub fn to_prefix(e: &Expr) -> String {
    let mut out = String::new();
    write_prefix(e, &mut out);
    out
}

fn write_prefix(e: &Expr, out: &mut String) {
    if !out.is_empty() {
        out.push(' ');
    }
    match e {
        Expr::Const(v) => {
            if *v == EULER {
                out.push('E');
            } else {
                out.push_str(&format!("{v}"));
            }
        }
        Expr::Placeholder(_) => out.push('c'),
        Expr::Var(1) => out.push('x'),
        Expr::Var(v) => out.push_str(&format!("x{v}")),
        Expr::Unary(op, a) => {
            out.push_str(op.name());
            write_prefix(a, out);
        }
        Expr::Binary(op, a, b) => {
            out.push_str(op.name());
            write_prefix(a, out);
            write_prefix(b, out);
        }
    }
}

// ---------------------------------------------------------------------------
