//! Model vocabulary: the token alphabet skeleton decoders emit.
//!
//! 31 symbols: sequence markers SOS/EOS, the unindexed constant placeholder
//! `c`, a single variable symbol `x` (skeletons are univariate), 13 unary and
//! 4 binary operators, the integers -3..=5 (pow exponents), and Euler's `E`.

use super::{BinaryOp, Expr, ParseError, UnaryOp, EULER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Sos,
    Eos,
    /// Constant placeholder, unindexed; parsing assigns preorder indices.
    C,
    /// The univariate variable.
    X,
    Un(UnaryOp),
    Bin(BinaryOp),
    /// Structural integer in -3..=5.
    Int(i8),
    Euler,
}

pub const VOCAB_SIZE: usize = 31;

impl Token {
    /// Dense id in `0..VOCAB_SIZE`, stable across versions (checkpoints
    /// depend on it).
    pub fn id(self) -> usize {
        match self {
            Token::Sos => 0,
            Token::Eos => 1,
            Token::C => 2,
            Token::X => 3,
            Token::Un(op) => 4 + op as usize,
            Token::Bin(op) => 17 + op as usize,
            Token::Int(k) => {
                debug_assert!((-3..=5).contains(&k));
                (21 + (k + 3)) as usize
            }
            Token::Euler => 30,
        }
    }

    pub fn from_id(id: usize) -> Option<Token> {
        match id {
            0 => Some(Token::Sos),
            1 => Some(Token::Eos),
            2 => Some(Token::C),
            3 => Some(Token::X),
            4..=16 => Some(Token::Un(UnaryOp::ALL[id - 4])),
            17..=20 => Some(Token::Bin(BinaryOp::ALL[id - 17])),
            21..=29 => Some(Token::Int(id as i8 - 24)),
            30 => Some(Token::Euler),
            _ => None,
        }
    }

    pub fn as_str(self) -> String {
        match self {
            Token::Sos => "SOS".to_string(),
            Token::Eos => "EOS".to_string(),
            Token::C => "c".to_string(),
            Token::X => "x".to_string(),
            Token::Un(op) => op.name().to_string(),
            Token::Bin(op) => op.name().to_string(),
            Token::Int(k) => k.to_string(),
            Token::Euler => "E".to_string(),
        }
    }
}

/// Serialize a univariate skeleton tree to its preorder token sequence
/// (no SOS/EOS markers).
///
/// Constants must be structural (pow exponents in -3..=5, or Euler's `E`);
/// anything else indicates the tree is not a valid skeleton and panics in
/// debug builds, degrading to the placeholder token otherwise.
pub fn skeleton_to_tokens(tree: &Expr) -> Vec<Token> {
    fn walk(e: &Expr, out: &mut Vec<Token>) {
        match e {
            Expr::Placeholder(_) => out.push(Token::C),
            Expr::Var(_) => out.push(Token::X),
            Expr::Const(v) => {
                if *v == EULER {
                    out.push(Token::Euler);
                } else if v.fract() == 0.0 && (-3.0..=5.0).contains(v) {
                    out.push(Token::Int(*v as i8));
                } else {
                    debug_assert!(false, "non-structural constant {v} in skeleton");
                    out.push(Token::C);
                }
            }
            Expr::Unary(op, a) => {
                out.push(Token::Un(*op));
                walk(a, out);
            }
            Expr::Binary(op, a, b) => {
                out.push(Token::Bin(*op));
                walk(a, out);
                walk(b, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, &mut out);
    out
}

/// Parse a preorder token sequence back into a tree. SOS/EOS markers are not
/// expected here; strip them first. Placeholders get preorder indices.
pub fn tokens_to_tree(tokens: &[Token]) -> Result<Expr, ParseError> {
    fn parse_at(tokens: &[Token], pos: &mut usize, next_ph: &mut u32) -> Result<Expr, ParseError> {
        let Some(&tok) = tokens.get(*pos) else {
            return Err(ParseError::Truncated { pos: *pos });
        };
        *pos += 1;
        match tok {
            Token::C => {
                let i = *next_ph;
                *next_ph += 1;
                Ok(Expr::Placeholder(i))
            }
            Token::X => Ok(Expr::Var(1)),
            Token::Int(k) => Ok(Expr::Const(k as f64)),
            Token::Euler => Ok(Expr::Const(EULER)),
            Token::Un(op) => {
                let a = parse_at(tokens, pos, next_ph)?;
                Ok(Expr::Unary(op, Box::new(a)))
            }
            Token::Bin(op) => {
                let a = parse_at(tokens, pos, next_ph)?;
                let b = parse_at(tokens, pos, next_ph)?;
                Ok(Expr::Binary(op, Box::new(a), Box::new(b)))
            }
            Token::Sos | Token::Eos => Err(ParseError::UnknownToken {
                pos: *pos - 1,
                token: tok.as_str(),
            }),
        }
    }
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut pos = 0;
    let mut next_ph = 1;
    let tree = parse_at(tokens, &mut pos, &mut next_ph)?;
    if pos != tokens.len() {
        return Err(ParseError::TrailingTokens {
            pos,
            token: tokens[pos].as_str(),
        });
    }
    Ok(tree)
}

// ---------------------------------------------------------------------------
