//! Static word vectors in the word2vec layouts: a `count dim` header line
//! followed by either `word v1 .. vdim` text lines or `word<space>` plus
//! `dim` little-endian f32 values per entry.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFormat {
    Text,
    Binary,
}

impl VectorFormat {
    /// `.bin` files are binary, everything else text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("bin") => Self::Binary,
            _ => Self::Text,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct WordVectors {
    dimension: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

/// How a phrase was embedded.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseVector {
    pub vector: Vec<f64>,
    /// Tokens that had no vector and were skipped.
    pub missing: Vec<String>,
}

impl WordVectors {
    pub fn new(dimension: usize) -> Self {
        Self { dimension, ..Self::default() }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// First occurrence of a word wins.
    pub fn insert(&mut self, word: &str, vector: &[f32]) -> bool {
        if vector.len() != self.dimension || self.index.contains_key(word) {
            return false;
        }
        self.index.insert(word.to_owned(), self.index.len());
        self.data.extend_from_slice(vector);
        true
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| &self.data[i * self.dimension..(i + 1) * self.dimension])
    }

    fn lookup(&self, word: &str) -> Option<&[f32]> {
        self.get(word).or_else(|| self.get(&word.to_lowercase()))
    }

    /// Mean of token vectors. A multi-word phrase stored whole (joined with
    /// `_`) is used as is. `None` when no token is known.
    pub fn phrase(&self, phrase: &str) -> Option<PhraseVector> {
        let words: Vec<&str> = phrase.split(|c: char| c.is_whitespace() || c == '-').filter(|w| !w.is_empty()).collect();
        if words.len() > 1 {
            if let Some(v) = self.lookup(&words.join("_")) {
                return Some(PhraseVector { vector: v.iter().map(|&x| x as f64).collect(), missing: Vec::new() });
            }
        }
        let mut sum = vec![0.0f64; self.dimension];
        let mut found = 0usize;
        let mut missing = Vec::new();
        for w in words {
            let w = w.trim_matches(|c: char| !c.is_alphanumeric());
            if w.is_empty() {
                continue;
            }
            match self.lookup(w) {
                Some(v) => {
                    found += 1;
                    sum.iter_mut().zip(v).for_each(|(s, &x)| *s += x as f64);
                }
                None => missing.push(w.to_owned()),
            }
        }
        if found == 0 {
            return None;
        }
        sum.iter_mut().for_each(|s| *s /= found as f64);
        Some(PhraseVector { vector: sum, missing })
    }

    /// Loads at most `limit` entries (all when `None`).
    pub fn load(path: &Path, format: Option<VectorFormat>, limit: Option<usize>) -> Result<Self, EvalError> {
        let bad = |message: String| EvalError::WordVectors { path: path.to_owned(), message };
        let file = File::open(path).map_err(|e| bad(e.to_string()))?;
        let mut reader = BufReader::new(file);
        let mut header = String::new();
        reader.read_line(&mut header).map_err(|e| bad(e.to_string()))?;
        let dims: Vec<usize> = header.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        let [count, dimension] = dims[..] else {
            return Err(bad(format!("expected a `count dimension` header, got {:?}", header.trim())));
        };
        if dimension == 0 {
            return Err(bad("dimension is zero".into()));
        }
        let wanted = limit.map_or(count, |l| l.min(count));
        let mut out = Self::new(dimension);
        match format.unwrap_or_else(|| VectorFormat::from_path(path)) {
            VectorFormat::Text => {
                let mut line = String::new();
                let mut row = Vec::with_capacity(dimension);
                let mut line_no = 1;
                while out.len() < wanted {
                    line.clear();
                    line_no += 1;
                    if reader.read_line(&mut line).map_err(|e| bad(e.to_string()))? == 0 {
                        break;
                    }
                    let mut parts = line.split_whitespace();
                    let Some(word) = parts.next() else { continue };
                    row.clear();
                    for p in parts {
                        row.push(p.parse::<f32>().map_err(|_| bad(format!("line {line_no}: {p:?} is not a number")))?);
                    }
                    if row.len() != dimension {
                        return Err(bad(format!("line {line_no}: {} values, expected {dimension}", row.len())));
                    }
                    out.insert(word, &row);
                }
            }
            VectorFormat::Binary => {
                let mut bytes = vec![0u8; dimension * 4];
                let mut row = vec![0f32; dimension];
                for entry in 0..wanted {
                    let mut word = Vec::new();
                    loop {
                        let mut b = [0u8; 1];
                        match reader.read(&mut b).map_err(|e| bad(e.to_string()))? {
                            0 if word.is_empty() => return Ok(out),
                            0 => return Err(bad(format!("entry {entry}: truncated word"))),
                            _ if b[0] == b' ' => break,
                            _ if b[0] == b'\n' && word.is_empty() => continue,
                            _ => word.push(b[0]),
                        }
                    }
                    reader.read_exact(&mut bytes).map_err(|_| bad(format!("entry {entry}: truncated vector")))?;
                    for (r, c) in row.iter_mut().zip(bytes.chunks_exact(4)) {
                        *r = f32::from_le_bytes(c.try_into().unwrap());
                    }
                    out.insert(&String::from_utf8_lossy(&word), &row);
                }
            }
        }
        Ok(out)
    }
}
