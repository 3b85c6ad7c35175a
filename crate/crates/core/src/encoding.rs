//! Preorder serialization of expressions and the mantissa/exponent constant
//! encoding.
//!
//! A constant `C` is stored as `(c_e, c_m)` with `C = c_m * 10^c_e`,
//! `c_e = ceil(log10 |C|)` and the mantissa carrying the sign, so
//! `|c_m| ∈ (0.1, 1]`.

use crate::expr::{Expr, CONST_MAX_ABS, CONST_MIN_ABS};
use crate::vocab::{EncodingMode, Token, TokenId, Vocabulary, CONST_EXP_MAX, CONST_EXP_MIN};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodedConstant {
    pub exponent: i32,
    pub mantissa: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodeError {
    #[error("constant {0:e} has magnitude outside [1e-10, 1e10]")]
    EncodingRange(f64),
    #[error("operator `{0}` has no vocabulary token; normalize the expression first")]
    NonVocabularyOp(&'static str),
    #[error("integer leaf {0} outside the vocabulary range")]
    IntegerRange(i64),
    #[error("variable index {0} outside the vocabulary")]
    VariableRange(usize),
}

fn pow10(e: i32) -> f64 {
    10f64.powi(e)
}

/// Splits a nonzero constant into exponent and mantissa.
pub fn encode_constant(c: f64) -> Result<EncodedConstant, EncodeError> {
    let mag = c.abs();
    if !c.is_finite() || !(CONST_MIN_ABS..=CONST_MAX_ABS).contains(&mag) {
        return Err(EncodeError::EncodingRange(c));
    }
    let mut exponent = mag.log10().ceil() as i32;
    let mut mantissa = c / pow10(exponent);
    // log10 is inexact near powers of ten; nudge the exponent until the
    // mantissa lands in (0.1, 1]. Two corrections suffice.
    for _ in 0..2 {
        if mantissa.abs() > 1.0 {
            exponent += 1;
        } else if mantissa.abs() <= 0.1 {
            exponent -= 1;
        } else {
            break;
        }
        mantissa = c / pow10(exponent);
    }
    if !(CONST_EXP_MIN..=CONST_EXP_MAX).contains(&exponent) {
        return Err(EncodeError::EncodingRange(c));
    }
    Ok(EncodedConstant { exponent, mantissa })
}

pub fn decode_constant(e: &EncodedConstant) -> f64 {
    e.mantissa * pow10(e.exponent)
}

/// Aligned pair of token ids and per-position constant values. The constant
/// slot is nonzero exactly at constant-token positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub symbols: Vec<TokenId>,
    pub constants: Vec<f64>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Preorder validity: scanning with a pending-operand counter starting at
    /// one must reach zero exactly at the last symbol and never before.
    pub fn arity_scan_valid(&self, vocab: &Vocabulary) -> bool {
        let mut pending: i64 = 1;
        for (i, &id) in self.symbols.iter().enumerate() {
            let Some(delta) = vocab.arity_delta(id) else {
                return false;
            };
            pending += i64::from(delta);
            if pending == 0 {
                return i == self.symbols.len() - 1;
            }
        }
        false
    }

    pub fn symbol_names(&self, vocab: &Vocabulary) -> Vec<String> {
        self.symbols
            .iter()
            .map(|&id| vocab.token(id).map(Token::name).unwrap_or_default())
            .collect()
    }
}

/// Serializes an expression to its preorder token sequence.
pub fn encode_preorder(
    expr: &Expr,
    vocab: &Vocabulary,
    mode: EncodingMode,
) -> Result<TokenSequence, EncodeError> {
    let mut seq = TokenSequence {
        symbols: Vec::with_capacity(expr.node_count()),
        constants: Vec::with_capacity(expr.node_count()),
    };
    encode_node(expr, vocab, mode, &mut seq)?;
    Ok(seq)
}

fn encode_node(
    expr: &Expr,
    vocab: &Vocabulary,
    mode: EncodingMode,
    seq: &mut TokenSequence,
) -> Result<(), EncodeError> {
    let mut push = |token: Token, value: f64| -> Result<(), EncodeError> {
        let id = match token {
            Token::Int(i) => vocab.id(&token).ok_or(EncodeError::IntegerRange(i))?,
            Token::Var(v) => vocab.id(&token).ok_or(EncodeError::VariableRange(v))?,
            ref t => vocab
                .id(t)
                .ok_or(EncodeError::NonVocabularyOp("missing token"))?,
        };
        seq.symbols.push(id);
        seq.constants.push(value);
        Ok(())
    };
    match expr {
        Expr::Binary(op, a, b) => {
            if !op.in_vocab() {
                return Err(EncodeError::NonVocabularyOp(op.token()));
            }
            push(Token::Bin(*op), 0.0)?;
            encode_node(a, vocab, mode, seq)?;
            encode_node(b, vocab, mode, seq)
        }
        Expr::Unary(op, a) => {
            if !op.in_vocab() {
                return Err(EncodeError::NonVocabularyOp(op.token()));
            }
            push(Token::Un(*op), 0.0)?;
            encode_node(a, vocab, mode, seq)
        }
        Expr::Var(v) => push(Token::Var(*v), 0.0),
        Expr::Int(i) => push(Token::Int(*i), 0.0),
        Expr::Const(c) => match mode {
            EncodingMode::Extended => {
                let enc = encode_constant(*c)?;
                push(Token::ConstExp(enc.exponent), enc.mantissa)
            }
            EncodingMode::Base => {
                let mag = c.abs();
                if !c.is_finite() || !(CONST_MIN_ABS..=CONST_MAX_ABS).contains(&mag) {
                    return Err(EncodeError::EncodingRange(*c));
                }
                push(Token::Const, *c)
            }
        },
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("sequence ends before all operands are supplied")]
    Truncated,
    #[error("trailing tokens after position {0}")]
    TrailingTokens(usize),
    #[error("control token inside the expression body at position {0}")]
    ControlToken(usize),
    #[error("token id {0} not in the vocabulary")]
    UnknownToken(TokenId),
    #[error("constant token at position {0} carries a zero value")]
    ZeroConstant(usize),
    #[error("constant token at position {0} decodes to a non-finite value")]
    NonFiniteConstant(usize),
    #[error("symbol and constant arrays have different lengths")]
    LengthMismatch,
}

/// Exact inverse of [`encode_preorder`] on well-formed sequences.
pub fn decode_preorder(
    seq: &TokenSequence,
    vocab: &Vocabulary,
    _mode: EncodingMode,
) -> Result<Expr, DecodeError> {
    if seq.symbols.len() != seq.constants.len() {
        return Err(DecodeError::LengthMismatch);
    }
    let mut pos = 0;
    let expr = decode_node(seq, vocab, &mut pos)?;
    if pos != seq.symbols.len() {
        return Err(DecodeError::TrailingTokens(pos));
    }
    Ok(expr)
}

fn decode_node(seq: &TokenSequence, vocab: &Vocabulary, pos: &mut usize) -> Result<Expr, DecodeError> {
    let i = *pos;
    let &id = seq.symbols.get(i).ok_or(DecodeError::Truncated)?;
    let token = *vocab.token(id).ok_or(DecodeError::UnknownToken(id))?;
    *pos += 1;
    match token {
        Token::Pad | Token::Start | Token::End => Err(DecodeError::ControlToken(i)),
        Token::Int(v) => Ok(Expr::Int(v)),
        Token::Var(v) => Ok(Expr::Var(v)),
        Token::Bin(op) => {
            let a = decode_node(seq, vocab, pos)?;
            let b = decode_node(seq, vocab, pos)?;
            Ok(Expr::binary(op, a, b))
        }
        Token::Un(op) => {
            let a = decode_node(seq, vocab, pos)?;
            Ok(Expr::unary(op, a))
        }
        Token::ConstExp(e) => {
            let m = seq.constants[i];
            if m == 0.0 {
                return Err(DecodeError::ZeroConstant(i));
            }
            let value = decode_constant(&EncodedConstant {
                exponent: e,
                mantissa: m,
            });
            if !value.is_finite() || value == 0.0 {
                return Err(DecodeError::NonFiniteConstant(i));
            }
            Ok(Expr::Const(value))
        }
        Token::Const => {
            let v = seq.constants[i];
            if v == 0.0 {
                return Err(DecodeError::ZeroConstant(i));
            }
            if !v.is_finite() {
                return Err(DecodeError::NonFiniteConstant(i));
            }
            Ok(Expr::Const(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::build::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn worked_example_constants() {
        let e = encode_constant(0.017).unwrap();
        assert_eq!(e.exponent, -1);
        assert!(rel_err(e.mantissa, 0.17) < 1e-12);

        let e = encode_constant(1781.5).unwrap();
        assert_eq!(e.exponent, 4);
        assert!(rel_err(e.mantissa, 0.17815) < 1e-12);

        let e = encode_constant(1.0).unwrap();
        assert_eq!(e.exponent, 0);
        assert_eq!(e.mantissa, 1.0);

        let e = encode_constant(-0.015).unwrap();
        assert_eq!(e.exponent, -1);
        assert!(rel_err(e.mantissa, -0.15).abs() < 1e-12);
        assert!(rel_err(decode_constant(&e), -0.015) < 1e-12);
    }

    #[test]
    fn decode_examples() {
        let d = decode_constant(&EncodedConstant {
            exponent: -1,
            mantissa: 0.17,
        });
        assert!(rel_err(d, 0.017) < 1e-12);
        assert_eq!(
            decode_constant(&EncodedConstant {
                exponent: 0,
                mantissa: 1.0
            }),
            1.0
        );
        let d = decode_constant(&EncodedConstant {
            exponent: 4,
            mantissa: 0.17815,
        });
        assert!(rel_err(d, 1781.5) < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_magnitudes() {
        assert!(matches!(
            encode_constant(1e-11),
            Err(EncodeError::EncodingRange(_))
        ));
        assert!(matches!(
            encode_constant(2e10),
            Err(EncodeError::EncodingRange(_))
        ));
        assert!(matches!(
            encode_constant(0.0),
            Err(EncodeError::EncodingRange(_))
        ));
        assert!(matches!(
            encode_constant(f64::NAN),
            Err(EncodeError::EncodingRange(_))
        ));
        // Boundary magnitudes stay encodable.
        assert!(encode_constant(1e-10).is_ok());
        assert!(encode_constant(1e10).is_ok());
        assert!(encode_constant(-1e10).is_ok());
    }

    #[test]
    fn powers_of_ten_take_the_boundary_mantissa() {
        for k in -10..=10 {
            let c = pow10(k);
            let e = encode_constant(c).unwrap();
            assert_eq!(e.exponent, k, "c = {c}");
            assert_eq!(e.mantissa, 1.0, "c = {c}");
            assert_eq!(decode_constant(&e), c);
        }
    }

    #[test]
    fn worked_example_sequence() {
        let vocab = Vocabulary::extended();
        let expr = add(mul(x(), c(0.017)), c(1781.5));
        let seq = encode_preorder(&expr, &vocab, EncodingMode::Extended).unwrap();
        assert_eq!(
            seq.symbol_names(&vocab),
            vec!["+", "*", "x", "C-1", "C4"]
        );
        assert_eq!(seq.constants[0], 0.0);
        assert_eq!(seq.constants[1], 0.0);
        assert_eq!(seq.constants[2], 0.0);
        assert!(rel_err(seq.constants[3], 0.17) < 1e-12);
        assert!(rel_err(seq.constants[4], 0.17815) < 1e-12);
        assert!(seq.arity_scan_valid(&vocab));

        let back = decode_preorder(&seq, &vocab, EncodingMode::Extended).unwrap();
        match back {
            Expr::Binary(_, _, ref rhs) => match **rhs {
                Expr::Const(v) => assert!(rel_err(v, 1781.5) < 1e-12),
                _ => panic!("expected constant"),
            },
            _ => panic!("expected add"),
        }
    }

    #[test]
    fn single_variable_sequence() {
        let vocab = Vocabulary::extended();
        let seq = encode_preorder(&x(), &vocab, EncodingMode::Extended).unwrap();
        assert_eq!(seq.symbol_names(&vocab), vec!["x"]);
        assert_eq!(seq.constants, vec![0.0]);
    }

    #[test]
    fn integer_leaves_use_integer_tokens() {
        let vocab = Vocabulary::extended();
        let expr = sin(mul(int(3), x()));
        let seq = encode_preorder(&expr, &vocab, EncodingMode::Extended).unwrap();
        assert_eq!(seq.symbol_names(&vocab), vec!["sin", "*", "3", "x"]);
        assert_eq!(seq.constants, vec![0.0; 4]);
    }

    #[test]
    fn base_mode_uses_raw_values() {
        let vocab = Vocabulary::base();
        let expr = add(mul(x(), c(0.017)), c(1781.5));
        let seq = encode_preorder(&expr, &vocab, EncodingMode::Base).unwrap();
        assert_eq!(seq.symbol_names(&vocab), vec!["+", "*", "x", "C", "C"]);
        assert_eq!(seq.constants[3], 0.017);
        assert_eq!(seq.constants[4], 1781.5);
        let back = decode_preorder(&seq, &vocab, EncodingMode::Base).unwrap();
        assert_eq!(back, expr);
    }

    #[test]
    fn malformed_sequences_are_rejected() {
        let vocab = Vocabulary::extended();
        let sin_id = vocab.id_by_name("sin").unwrap();
        let seq = TokenSequence {
            symbols: vec![sin_id],
            constants: vec![0.0],
        };
        assert_eq!(
            decode_preorder(&seq, &vocab, EncodingMode::Extended),
            Err(DecodeError::Truncated)
        );

        let x_id = vocab.id_by_name("x").unwrap();
        let seq = TokenSequence {
            symbols: vec![x_id, x_id],
            constants: vec![0.0, 0.0],
        };
        assert!(matches!(
            decode_preorder(&seq, &vocab, EncodingMode::Extended),
            Err(DecodeError::TrailingTokens(_))
        ));

        let c4 = vocab.id_by_name("C4").unwrap();
        let seq = TokenSequence {
            symbols: vec![c4],
            constants: vec![0.0],
        };
        assert_eq!(
            decode_preorder(&seq, &vocab, EncodingMode::Extended),
            Err(DecodeError::ZeroConstant(0))
        );

        let start = vocab.start_id();
        let seq = TokenSequence {
            symbols: vec![start],
            constants: vec![0.0],
        };
        assert_eq!(
            decode_preorder(&seq, &vocab, EncodingMode::Extended),
            Err(DecodeError::ControlToken(0))
        );
    }
}
