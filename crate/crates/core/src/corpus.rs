//! Corpus files: line-delimited records with a self-describing header and a
//! completeness footer. Generation is deterministic per record index, so the
//! output is independent of worker count.

use crate::generator::{generate_record, GeneratorConfig};
use crate::points::{Interval, PointSet, RejectReason};
use crate::util::{mix_seed, par_map};
use crate::vocab::Vocabulary;
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const CORPUS_FORMAT: &str = "symreg-corpus";
pub const CORPUS_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub format: String,
    pub version: u32,
    pub vocab_sha256: String,
    pub encoding: String,
    pub dims: usize,
    pub base_seed: u64,
    pub requested: u64,
    pub max_operators: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub index: u64,
    pub dims: usize,
    pub seed: u64,
    pub n_ops: usize,
    pub symbols: Vec<String>,
    pub constants: Vec<f64>,
    pub intervals: Vec<String>,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
}

impl CorpusRecord {
    pub fn point_set(&self) -> PointSet {
        PointSet {
            inputs: self.inputs.iter().flatten().copied().collect(),
            outputs: self.outputs.clone(),
            n_dims: self.dims,
            intervals: self
                .intervals
                .iter()
                .map(|s| Interval::parse(s).unwrap_or(Interval::Full))
                .collect(),
        }
    }

    pub fn token_ids(&self, vocab: &Vocabulary) -> Result<Vec<usize>, CorpusError> {
        self.symbols
            .iter()
            .map(|s| {
                vocab
                    .id_by_name(s)
                    .ok_or_else(|| CorpusError::UnknownToken(s.clone()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusFooter {
    pub complete: bool,
    pub records: u64,
    pub stats: CorpusStats,
}

/// Aggregate statistics over a generation run. Maps are ordered so the
/// serialized form is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub requested: u64,
    pub accepted: u64,
    pub attempts: u64,
    pub rejections: BTreeMap<String, u64>,
    pub operator_counts: BTreeMap<String, u64>,
    pub interval_counts: BTreeMap<String, u64>,
}

impl CorpusStats {
    fn merge(&mut self, other: &CorpusStats) {
        self.accepted += other.accepted;
        self.attempts += other.attempts;
        for (k, v) in &other.rejections {
            *self.rejections.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.operator_counts {
            *self.operator_counts.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.interval_counts {
            *self.interval_counts.entry(k.clone()).or_default() += v;
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("record {index} exhausted the retry budget of {budget}")]
    RetryBudgetExhausted { index: u64, budget: usize },
    #[error("malformed corpus line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("corpus header is missing or invalid")]
    BadHeader,
    #[error("corpus file is incomplete (no completion footer)")]
    Incomplete,
    #[error("token `{0}` is not in the expected vocabulary")]
    UnknownToken(String),
    #[error("corpus was written with vocabulary {file}, expected {expected}")]
    VocabMismatch { file: String, expected: String },
}

/// Deterministic per-record seed.
pub fn record_seed(base_seed: u64, index: u64) -> u64 {
    mix_seed(base_seed, index)
}

fn generate_one(
    cfg: &GeneratorConfig,
    vocab: &Vocabulary,
    base_seed: u64,
    index: u64,
) -> Result<(CorpusRecord, CorpusStats), CorpusError> {
    let seed = record_seed(base_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = CorpusStats::default();
    for _ in 0..cfg.retry_budget {
        stats.attempts += 1;
        match generate_record(cfg, vocab, &mut rng) {
            Ok(sample) => {
                stats.accepted = 1;
                let mut op_counts: BTreeMap<String, u64> = BTreeMap::new();
                sample.expr.visit_preorder(&mut |e| {
                    let name = match e {
                        crate::expr::Expr::Binary(op, _, _) => Some(op.token()),
                        crate::expr::Expr::Unary(op, _) => Some(op.token()),
                        _ => None,
                    };
                    if let Some(name) = name {
                        *op_counts.entry(name.to_string()).or_default() += 1;
                    }
                });
                stats.operator_counts = op_counts;
                for iv in &sample.points.intervals {
                    *stats.interval_counts.entry(iv.code().into()).or_default() += 1;
                }
                let record = CorpusRecord {
                    index,
                    dims: cfg.dims,
                    seed,
                    n_ops: sample.n_ops,
                    symbols: sample.tokens.symbol_names(vocab),
                    constants: sample.tokens.constants.clone(),
                    intervals: sample.points.intervals.iter().map(|i| i.code().into()).collect(),
                    inputs: sample
                        .points
                        .inputs
                        .chunks_exact(cfg.dims)
                        .map(|row| row.to_vec())
                        .collect(),
                    outputs: sample.points.outputs.clone(),
                };
                return Ok((record, stats));
            }
            Err(reason) => {
                *stats.rejections.entry(reason.name().into()).or_default() += 1;
            }
        }
    }
    Err(CorpusError::RetryBudgetExhausted {
        index,
        budget: cfg.retry_budget,
    })
}

/// Writes `n_records` accepted records to `sink`. Record `i` is a pure
/// function of `(config, base_seed, i)`; workers only change wall time.
pub fn generate_corpus_to_writer(
    cfg: &GeneratorConfig,
    n_records: u64,
    base_seed: u64,
    sink: &mut dyn Write,
) -> Result<CorpusStats, CorpusError> {
    assert!(cfg.validate(), "invalid generator configuration");
    let vocab = Vocabulary::extended();
    let header = CorpusHeader {
        format: CORPUS_FORMAT.into(),
        version: CORPUS_VERSION,
        vocab_sha256: vocab.sha256_hex(),
        encoding: "extended".into(),
        dims: cfg.dims,
        base_seed,
        requested: n_records,
        max_operators: cfg.max_operators,
    };
    serde_json::to_writer(&mut *sink, &header).map_err(io::Error::from)?;
    sink.write_all(b"\n")?;

    let mut total = CorpusStats {
        requested: n_records,
        ..CorpusStats::default()
    };
    const CHUNK: u64 = 512;
    let mut start = 0u64;
    while start < n_records {
        let end = (start + CHUNK).min(n_records);
        let indices: Vec<u64> = (start..end).collect();
        let results = par_map(indices, |i| generate_one(cfg, &vocab, base_seed, i));
        for result in results {
            let (record, stats) = result?;
            total.merge(&stats);
            serde_json::to_writer(&mut *sink, &record).map_err(io::Error::from)?;
            sink.write_all(b"\n")?;
        }
        start = end;
    }

    let footer = CorpusFooter {
        complete: true,
        records: n_records,
        stats: total.clone(),
    };
    serde_json::to_writer(&mut *sink, &footer).map_err(io::Error::from)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(total)
}

/// File-backed wrapper around [`generate_corpus_to_writer`]; paths ending in
/// `.gz` are block-compressed.
pub fn generate_corpus(
    cfg: &GeneratorConfig,
    n_records: u64,
    base_seed: u64,
    path: &Path,
) -> Result<CorpusStats, CorpusError> {
    let file = std::fs::File::create(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut w = BufWriter::new(GzEncoder::new(file, Compression::default()));
        let stats = generate_corpus_to_writer(cfg, n_records, base_seed, &mut w)?;
        w.into_inner()
            .map_err(|e| io::Error::other(e.to_string()))?
            .finish()?;
        Ok(stats)
    } else {
        let mut w = BufWriter::new(file);
        generate_corpus_to_writer(cfg, n_records, base_seed, &mut w)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CorpusLine {
    Footer(CorpusFooter),
    Record(Box<CorpusRecord>),
}

/// Fully parsed corpus. Readers reject files without a completion footer:
/// its absence is the partial-file marker left behind by an aborted run.
pub struct Corpus {
    pub header: CorpusHeader,
    pub records: Vec<CorpusRecord>,
    pub footer: CorpusFooter,
}

pub fn read_corpus(r: impl Read) -> Result<Corpus, CorpusError> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let header_line = lines.next().ok_or(CorpusError::BadHeader)??;
    let header: CorpusHeader =
        serde_json::from_str(&header_line).map_err(|_| CorpusError::BadHeader)?;
    if header.format != CORPUS_FORMAT || header.version != CORPUS_VERSION {
        return Err(CorpusError::BadHeader);
    }
    let mut records = Vec::new();
    let mut footer = None;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: lineno + 2,
                message: e.to_string(),
            })?;
        match parsed {
            CorpusLine::Record(r) => records.push(*r),
            CorpusLine::Footer(f) => {
                footer = Some(f);
                break;
            }
        }
    }
    let footer = footer.ok_or(CorpusError::Incomplete)?;
    if !footer.complete || footer.records != records.len() as u64 {
        return Err(CorpusError::Incomplete);
    }
    Ok(Corpus {
        header,
        records,
        footer,
    })
}

pub fn open_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        read_corpus(GzDecoder::new(file))
    } else {
        read_corpus(file)
    }
}

/// Validates a corpus against an expected vocabulary hash.
pub fn check_vocab(corpus: &Corpus, vocab: &Vocabulary) -> Result<(), CorpusError> {
    let expected = vocab.sha256_hex();
    if corpus.header.vocab_sha256 != expected {
        return Err(CorpusError::VocabMismatch {
            file: corpus.header.vocab_sha256.clone(),
            expected,
        });
    }
    Ok(())
}

/// Re-derives per-record filter verdicts for a full-scan audit. Returns the
/// indices of records violating any acceptance rule.
pub fn audit_corpus(corpus: &Corpus) -> Result<Vec<u64>, CorpusError> {
    use crate::encoding::{decode_preorder, TokenSequence};
    use crate::vocab::EncodingMode;
    let vocab = Vocabulary::extended();
    check_vocab(corpus, &vocab)?;
    let mut bad = Vec::new();
    for rec in &corpus.records {
        let ids = rec.token_ids(&vocab)?;
        let seq = TokenSequence {
            symbols: ids,
            constants: rec.constants.clone(),
        };
        let points = rec.point_set();
        let ok = seq.arity_scan_valid(&vocab)
            && points.validate()
            && decode_preorder(&seq, &vocab, EncodingMode::Extended)
                .map(|expr| crate::points::accept(&expr, &points).is_ok())
                .unwrap_or(false);
        if !ok {
            bad.push(rec.index);
        }
    }
    Ok(bad)
}

/// Convenience wrapper mapping reject reasons to their histogram keys.
pub fn reason_key(reason: RejectReason) -> &'static str {
    reason.name()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small_cfg() -> GeneratorConfig {
        let mut cfg = GeneratorConfig::for_dims(1);
        cfg.max_operators = 5;
        cfg
    }

    #[test]
    fn corpus_round_trips_through_a_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let stats = generate_corpus(&small_cfg(), 25, 99, &path).unwrap();
        assert_eq!(stats.accepted, 25);
        assert!(stats.attempts >= 25);

        let corpus = open_corpus(&path).unwrap();
        assert_eq!(corpus.records.len(), 25);
        assert_eq!(corpus.header.dims, 1);
        assert_eq!(corpus.footer.stats.accepted, 25);
        for (i, rec) in corpus.records.iter().enumerate() {
            assert_eq!(rec.index, i as u64);
            assert_eq!(rec.seed, record_seed(99, i as u64));
        }
        assert!(audit_corpus(&corpus).unwrap().is_empty());
    }

    #[test]
    fn gzip_corpora_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.jsonl.gz");
        generate_corpus(&small_cfg(), 10, 7, &path).unwrap();
        let corpus = open_corpus(&path).unwrap();
        assert_eq!(corpus.records.len(), 10);
    }

    #[test]
    fn zero_records_is_a_valid_corpus() {
        let mut buf = Vec::new();
        let stats = generate_corpus_to_writer(&small_cfg(), 0, 1, &mut buf).unwrap();
        assert_eq!(stats.accepted, 0);
        let corpus = read_corpus(&buf[..]).unwrap();
        assert!(corpus.records.is_empty());
        assert!(corpus.footer.complete);
    }

    #[test]
    fn truncated_files_are_flagged_incomplete() {
        let mut buf = Vec::new();
        generate_corpus_to_writer(&small_cfg(), 5, 1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // Drop the footer line.
        let truncated: String = text
            .lines()
            .take(text.lines().count() - 1)
            .map(|l| format!("{l}\n"))
            .collect();
        match read_corpus(truncated.as_bytes()) {
            Err(CorpusError::Incomplete) => {}
            Err(other) => panic!("expected Incomplete, got {other:?}"),
            Ok(_) => panic!("expected Incomplete, got a parsed corpus"),
        }
    }

    #[test]
    fn corpus_bytes_are_a_pure_function_of_the_seed() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        generate_corpus_to_writer(&small_cfg(), 20, 1234, &mut a).unwrap();
        generate_corpus_to_writer(&small_cfg(), 20, 1234, &mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        generate_corpus_to_writer(&small_cfg(), 20, 1235, &mut c).unwrap();
        assert_ne!(a, c);
    }
}
