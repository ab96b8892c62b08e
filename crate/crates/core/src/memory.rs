//! Few-shot exemplar memory: an append-only JSONL log of interaction records,
//! indexed by a text embedding and searched by cosine similarity.
//!
//! The built-in embedder is a hashing bag-of-words: text is split on anything
//! that is not alphanumeric, lowercased, and every token adds one count to
//! bucket `fnv1a64(token) mod D`. The count vector is then L2-normalized (the
//! empty text maps to the zero vector). The hash is fixed, so embeddings are
//! identical across processes.

use std::fs::{File, OpenOptions};
use std::hash::Hasher;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DIMENSION: usize = 256;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("storage failure: {0}")]
    StorageFailure(String),
    #[error("invalid memory record: {0}")]
    InvalidRecord(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Rejected,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    #[serde(rename = "description")]
    pub description_text: String,
    #[serde(rename = "robot")]
    pub robot_id: String,
    #[serde(rename = "command")]
    pub command_id: String,
    pub timestamp: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Cosine similarity; 0 when either side is the zero vector.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        let (na, nb) = (self.norm(), other.norm());
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        dot / (na * nb)
    }
}

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Embedding;
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Bucket index of one (already lowercased) token.
pub fn token_bucket(token: &str, dimension: usize) -> usize {
    let mut h = FnvHasher::default();
    h.write(token.as_bytes());
    (h.finish() % dimension as u64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl Embedder for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Embedding {
        let mut v = vec![0.0; self.dimension];
        for tok in tokenize(text) {
            v[token_bucket(&tok, self.dimension)] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Embedding(v)
    }
}

/// One line of the memory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredLine {
    #[serde(flatten)]
    pub record: MemoryRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding>,
}

#[derive(Debug, Clone)]
struct Indexed {
    record: MemoryRecord,
    embedding: Embedding,
}

/// A retrieval hit.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub record: MemoryRecord,
    pub similarity: f64,
}

pub struct Memory {
    entries: RwLock<Vec<Indexed>>,
    file: Option<Mutex<File>>,
    path: Option<PathBuf>,
    embedder: Arc<dyn Embedder>,
}

impl std::fmt::Debug for Memory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Memory")
            .field("path", &self.path)
            .field("len", &self.len())
            .finish_non_exhaustive()
    }
}

impl Memory {
    /// Memory without a backing file.
    pub fn in_memory(embedder: Arc<dyn Embedder>) -> Self {
        Self {
            entries: RwLock::new(Vec::new()),
            file: None,
            path: None,
            embedder,
        }
    }

    /// Opens (or creates) a memory file and loads its records. A truncated
    /// final line, as left by a crash mid-write, is ignored.
    pub fn open(path: impl AsRef<Path>, embedder: Arc<dyn Embedder>) -> Result<Self, MemoryError> {
        let path = path.as_ref().to_path_buf();
        let io = |e: std::io::Error| MemoryError::StorageFailure(format!("{}: {e}", path.display()));
        let mut entries = Vec::new();
        if path.exists() {
            let mut text = String::new();
            File::open(&path).and_then(|mut f| f.read_to_string(&mut text)).map_err(io)?;
            let mut valid_len = 0;
            let mut rest = text.as_str();
            let mut lineno = 0;
            while !rest.is_empty() {
                lineno += 1;
                let (line, consumed, last) = match rest.find('\n') {
                    Some(i) => (&rest[..i], i + 1, i + 1 == rest.len()),
                    None => (rest, rest.len(), true),
                };
                rest = &rest[consumed..];
                if !line.trim().is_empty() {
                    match serde_json::from_str::<StoredLine>(line) {
                        Ok(stored) => entries.push(index(stored, embedder.as_ref())),
                        Err(e) if last => {
                            tracing::warn!(path = %path.display(), error = %e, "dropping truncated last memory line");
                            break;
                        }
                        Err(e) => {
                            return Err(MemoryError::StorageFailure(format!("{}:{lineno}: {e}", path.display())));
                        }
                    }
                }
                valid_len += consumed;
            }
            if valid_len < text.len() || (!text.is_empty() && !text.ends_with('\n')) {
                // Cut a torn tail, or terminate a complete but unterminated
                // last line, so the next append starts on a fresh line.
                let f = OpenOptions::new().write(true).open(&path).map_err(io)?;
                f.set_len(valid_len as u64).map_err(io)?;
                if valid_len > 0 && !text[..valid_len].ends_with('\n') {
                    OpenOptions::new().append(true).open(&path).and_then(|mut f| f.write_all(b"\n")).map_err(io)?;
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        Ok(Self {
            entries: RwLock::new(entries),
            file: Some(Mutex::new(file)),
            path: Some(path),
            embedder,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("memory lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> Vec<MemoryRecord> {
        self.entries.read().expect("memory lock").iter().map(|e| e.record.clone()).collect()
    }

    pub fn count_outcome(&self, outcome: Outcome) -> usize {
        self.entries
            .read()
            .expect("memory lock")
            .iter()
            .filter(|e| e.record.outcome == outcome)
            .count()
    }

    /// Appends a record to the log and the index. Every outcome is kept for
    /// audit; only successes are ever retrieved.
    pub fn store(&self, record: MemoryRecord) -> Result<(), MemoryError> {
        if record.description_text.is_empty() {
            return Err(MemoryError::InvalidRecord("empty description".into()));
        }
        let embedding = self.embedder.embed(&record.description_text);
        let line = StoredLine {
            record,
            embedding: Some(embedding),
        };
        let mut entries = self.entries.write().expect("memory lock");
        if let Some(file) = &self.file {
            let mut text = serde_json::to_string(&line).map_err(|e| MemoryError::StorageFailure(e.to_string()))?;
            text.push('\n');
            let mut f = file.lock().expect("memory file lock");
            f.write_all(text.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| MemoryError::StorageFailure(e.to_string()))?;
        }
        entries.push(Indexed {
            record: line.record,
            embedding: line.embedding.expect("set above"),
        });
        Ok(())
    }

    /// Up to `k` success records, most similar first. Ties go to the more
    /// recent timestamp, then to the earlier insertion.
    pub fn retrieve_scored(&self, query: &str, k: usize) -> Vec<Scored> {
        let q = self.embedder.embed(query);
        let entries = self.entries.read().expect("memory lock");
        let mut hits: Vec<(usize, f64)> = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.record.outcome == Outcome::Success)
            .map(|(i, e)| (i, q.cosine(&e.embedding)))
            .collect();
        hits.sort_by(|(ia, sa), (ib, sb)| {
            sb.total_cmp(sa)
                .then_with(|| entries[*ib].record.timestamp.total_cmp(&entries[*ia].record.timestamp))
                .then_with(|| ia.cmp(ib))
        });
        hits.into_iter()
            .take(k)
            .map(|(i, similarity)| Scored {
                record: entries[i].record.clone(),
                similarity,
            })
            .collect()
    }

    pub fn retrieve(&self, query: &str, k: usize) -> Vec<MemoryRecord> {
        self.retrieve_scored(query, k).into_iter().map(|s| s.record).collect()
    }

    /// Writes every record (with embeddings) as JSONL.
    pub fn export<W: Write>(&self, mut out: W) -> Result<usize, MemoryError> {
        let entries = self.entries.read().expect("memory lock");
        for e in entries.iter() {
            let line = StoredLine {
                record: e.record.clone(),
                embedding: Some(e.embedding.clone()),
            };
            let text = serde_json::to_string(&line).map_err(|e| MemoryError::StorageFailure(e.to_string()))?;
            writeln!(out, "{text}").map_err(|e| MemoryError::StorageFailure(e.to_string()))?;
        }
        Ok(entries.len())
    }

    /// Stores every record found in a JSONL stream; embeddings in the input
    /// are ignored and recomputed with this memory's embedder.
    pub fn import<R: Read>(&self, input: R) -> Result<usize, MemoryError> {
        let mut n = 0;
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line.map_err(|e| MemoryError::StorageFailure(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let stored: StoredLine =
                serde_json::from_str(&line).map_err(|e| MemoryError::InvalidRecord(format!("line {}: {e}", i + 1)))?;
            self.store(stored.record)?;
            n += 1;
        }
        Ok(n)
    }
}

fn index(stored: StoredLine, embedder: &dyn Embedder) -> Indexed {
    let embedding = match stored.embedding {
        Some(e) if e.dimension() == embedder.dimension() => e,
        _ => embedder.embed(&stored.record.description_text),
    };
    Indexed {
        record: stored.record,
        embedding,
    }
}
