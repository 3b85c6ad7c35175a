//! Model vocabulary: the ordered token list shared by the encoder corpus,
//! the network and the decoders.

use crate::expr::{BinaryOp, UnaryOp, INT_LEAF_MAX, INT_LEAF_MIN};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

pub type TokenId = usize;

/// Exponent tokens cover `C-10 ..= C10`.
pub const CONST_EXP_MIN: i32 = -10;
pub const CONST_EXP_MAX: i32 = 10;

/// How constant leaves are tokenized.
///
/// `Extended` emits one exponent token per constant and regresses the
/// mantissa; `Base` emits a single `C` token and regresses the raw value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum EncodingMode {
    #[default]
    Extended,
    Base,
}

impl EncodingMode {
    pub fn name(self) -> &'static str {
        match self {
            EncodingMode::Extended => "extended",
            EncodingMode::Base => "base",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "extended" => Some(EncodingMode::Extended),
            "base" => Some(EncodingMode::Base),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Pad,
    Start,
    End,
    Int(i64),
    Var(usize),
    Bin(BinaryOp),
    Un(UnaryOp),
    /// Extended-mode constant token carrying the decimal exponent.
    ConstExp(i32),
    /// Base-mode constant token.
    Const,
}

impl Token {
    pub fn name(&self) -> String {
        match self {
            Token::Pad => "pad".into(),
            Token::Start => "start".into(),
            Token::End => "end".into(),
            Token::Int(i) => i.to_string(),
            Token::Var(0) => "x".into(),
            Token::Var(1) => "y".into(),
            Token::Var(i) => format!("x{i}"),
            Token::Bin(op) => op.token().into(),
            Token::Un(op) => op.token().into(),
            Token::ConstExp(e) => format!("C{e}"),
            Token::Const => "C".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Token> {
        match s {
            "pad" => return Some(Token::Pad),
            "start" => return Some(Token::Start),
            "end" => return Some(Token::End),
            "x" => return Some(Token::Var(0)),
            "y" => return Some(Token::Var(1)),
            "C" => return Some(Token::Const),
            _ => {}
        }
        if let Some(op) = BinaryOp::ALL.iter().find(|op| op.token() == s && op.in_vocab()) {
            return Some(Token::Bin(*op));
        }
        if let Some(op) = UnaryOp::VOCAB.iter().find(|op| op.token() == s) {
            return Some(Token::Un(*op));
        }
        if let Some(rest) = s.strip_prefix('C') {
            if let Ok(e) = rest.parse::<i32>() {
                return Some(Token::ConstExp(e));
            }
        }
        if let Ok(i) = s.parse::<i64>() {
            return Some(Token::Int(i));
        }
        None
    }

    /// Change to the pending-operand counter when scanning a preorder
    /// sequence: binary +1, unary 0, leaves -1. Control tokens return `None`.
    pub fn arity_delta(&self) -> Option<i32> {
        match self {
            Token::Pad | Token::Start | Token::End => None,
            Token::Bin(_) => Some(1),
            Token::Un(_) => Some(0),
            Token::Int(_) | Token::Var(_) | Token::ConstExp(_) | Token::Const => Some(-1),
        }
    }
}

const VOCAB_HEADER: &str = "symreg-vocab 1";

/// Ordered token list with a bijective token ↔ id mapping. Ids are stable:
/// they are the line indices of the serialized form.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<Token>,
    by_name: HashMap<String, TokenId>,
    mode: EncodingMode,
    n_vars: usize,
}

impl Vocabulary {
    /// Canonical vocabulary for a given encoding mode with two variables.
    pub fn new(mode: EncodingMode) -> Self {
        Self::with_vars(mode, 2)
    }

    pub fn extended() -> Self {
        Self::new(EncodingMode::Extended)
    }

    pub fn base() -> Self {
        Self::new(EncodingMode::Base)
    }

    pub fn with_vars(mode: EncodingMode, n_vars: usize) -> Self {
        let mut tokens = vec![Token::Pad, Token::Start, Token::End];
        for i in INT_LEAF_MIN..=INT_LEAF_MAX {
            tokens.push(Token::Int(i));
        }
        for v in 0..n_vars {
            tokens.push(Token::Var(v));
        }
        for op in [BinaryOp::Add, BinaryOp::Mul, BinaryOp::Pow] {
            tokens.push(Token::Bin(op));
        }
        for op in UnaryOp::VOCAB {
            tokens.push(Token::Un(op));
        }
        match mode {
            EncodingMode::Extended => {
                for e in CONST_EXP_MIN..=CONST_EXP_MAX {
                    tokens.push(Token::ConstExp(e));
                }
            }
            EncodingMode::Base => tokens.push(Token::Const),
        }
        Self::from_tokens(tokens, mode, n_vars)
    }

    fn from_tokens(tokens: Vec<Token>, mode: EncodingMode, n_vars: usize) -> Self {
        let by_name = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.name(), i))
            .collect();
        Vocabulary {
            tokens,
            by_name,
            mode,
            n_vars,
        }
    }

    pub fn mode(&self) -> EncodingMode {
        self.mode
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: TokenId) -> Option<&Token> {
        self.tokens.get(id)
    }

    pub fn id(&self, token: &Token) -> Option<TokenId> {
        self.by_name.get(&token.name()).copied()
    }

    pub fn id_by_name(&self, name: &str) -> Option<TokenId> {
        self.by_name.get(name).copied()
    }

    pub fn pad_id(&self) -> TokenId {
        0
    }

    pub fn start_id(&self) -> TokenId {
        1
    }

    pub fn end_id(&self) -> TokenId {
        2
    }

    pub fn arity_delta(&self, id: TokenId) -> Option<i32> {
        self.token(id).and_then(Token::arity_delta)
    }

    /// Serialized form: a version header followed by one token per line.
    pub fn write(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "{VOCAB_HEADER}")?;
        for t in &self.tokens {
            writeln!(w, "{}", t.name())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("token names are ascii")
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write(&mut f)
    }

    pub fn read(r: impl Read) -> Result<Self, VocabError> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines.next().ok_or(VocabError::MissingHeader)??;
        if header.trim() != VOCAB_HEADER {
            return Err(VocabError::BadHeader(header));
        }
        let mut tokens = Vec::new();
        for line in lines {
            let line = line?;
            let name = line.trim();
            if name.is_empty() {
                continue;
            }
            tokens.push(Token::parse(name).ok_or_else(|| VocabError::BadToken(name.into()))?);
        }
        let mode = if tokens.contains(&Token::Const) {
            EncodingMode::Base
        } else {
            EncodingMode::Extended
        };
        let n_vars = tokens
            .iter()
            .filter(|t| matches!(t, Token::Var(_)))
            .count();
        Ok(Self::from_tokens(tokens, mode, n_vars))
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        Self::read(std::fs::File::open(path)?)
    }

    /// Hash of the serialized token list; stored in corpora and checkpoints
    /// so readers can detect id remapping.
    pub fn sha256_hex(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("vocabulary file is empty")]
    MissingHeader,
    #[error("unsupported vocabulary header `{0}`")]
    BadHeader(String),
    #[error("unknown vocabulary token `{0}`")]
    BadToken(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
