use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::knowledge::PARAMETER_COUNT;

/// A set of directed contradiction pairs `(improving, worsening)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u8, u8)>", into = "Vec<(u8, u8)>")]
pub struct PairSet(BTreeSet<(u8, u8)>);

impl PairSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns whether the pair was new.
    pub fn insert(&mut self, improving: u8, worsening: u8) -> Result<bool, EvalError> {
        let range = 1..=PARAMETER_COUNT;
        if !range.contains(&improving) || !range.contains(&worsening) || improving == worsening {
            return Err(EvalError::InvalidPair(improving, worsening));
        }
        Ok(self.0.insert((improving, worsening)))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u8, u8)>) -> Result<Self, EvalError> {
        let mut set = Self::new();
        for (i, w) in pairs {
            set.insert(i, w)?;
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, pair: (u8, u8)) -> bool {
        self.0.contains(&pair)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, u8)> + '_ {
        self.0.iter().copied()
    }

    /// Every parameter number mentioned on either side.
    pub fn parameters(&self) -> BTreeSet<u8> {
        self.0.iter().flat_map(|&(i, w)| [i, w]).collect()
    }
}

impl TryFrom<Vec<(u8, u8)>> for PairSet {
    type Error = EvalError;
    fn try_from(v: Vec<(u8, u8)>) -> Result<Self, EvalError> {
        Self::from_pairs(v)
    }
}

impl From<PairSet> for Vec<(u8, u8)> {
    fn from(s: PairSet) -> Self {
        s.0.into_iter().collect()
    }
}

impl fmt::Display for PairSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(i, w)| format!("{i}>{w}")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// How a generated pair is compared with a reference pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Same improving and same worsening parameter.
    #[default]
    OrderedPair,
    /// Same two parameters in either direction.
    UnorderedPair,
    /// Scored on the sets of parameters mentioned, ignoring pairing.
    ParameterLevel,
}

impl MatchMode {
    pub const ALL: [MatchMode; 3] = [Self::OrderedPair, Self::UnorderedPair, Self::ParameterLevel];

    pub fn slug(self) -> &'static str {
        match self {
            Self::OrderedPair => "ordered-pair",
            Self::UnorderedPair => "unordered-pair",
            Self::ParameterLevel => "parameter-level",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for MatchMode {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, EvalError> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "ordered" | "orderedpair" => Ok(Self::OrderedPair),
            "unordered" | "unorderedpair" => Ok(Self::UnorderedPair),
            "parameter" | "parameterlevel" => Ok(Self::ParameterLevel),
            _ => Err(EvalError::Precondition(format!("unknown match mode {s:?} (ordered-pair, unordered-pair, parameter-level)"))),
        }
    }
}

/// Numerators and denominators behind recall and precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub recall_hits: usize,
    pub recall_total: usize,
    pub precision_hits: usize,
    pub precision_total: usize,
}

impl MatchCounts {
    pub fn recall(&self) -> Option<f64> {
        (self.recall_total > 0).then(|| self.recall_hits as f64 / self.recall_total as f64)
    }

    pub fn precision(&self) -> Option<f64> {
        (self.precision_total > 0).then(|| self.precision_hits as f64 / self.precision_total as f64)
    }
}

fn flip((i, w): (u8, u8)) -> (u8, u8) {
    (w, i)
}

pub fn match_counts(g: &PairSet, o: &PairSet, mode: MatchMode) -> MatchCounts {
    match mode {
        MatchMode::OrderedPair => {
            let hits = g.0.intersection(&o.0).count();
            MatchCounts { recall_hits: hits, recall_total: o.len(), precision_hits: hits, precision_total: g.len() }
        }
        MatchMode::UnorderedPair => {
            let covered = |p: (u8, u8), s: &PairSet| s.contains(p) || s.contains(flip(p));
            MatchCounts {
                recall_hits: o.iter().filter(|&p| covered(p, g)).count(),
                recall_total: o.len(),
                precision_hits: g.iter().filter(|&p| covered(p, o)).count(),
                precision_total: g.len(),
            }
        }
        MatchMode::ParameterLevel => {
            let (pg, po) = (g.parameters(), o.parameters());
            let hits = pg.intersection(&po).count();
            MatchCounts { recall_hits: hits, recall_total: po.len(), precision_hits: hits, precision_total: pg.len() }
        }
    }
}

/// Generated pairs that count as matches.
pub fn matched(g: &PairSet, o: &PairSet, mode: MatchMode) -> PairSet {
    let po = o.parameters();
    PairSet(
        g.iter()
            .filter(|&p| match mode {
                MatchMode::OrderedPair => o.contains(p),
                MatchMode::UnorderedPair => o.contains(p) || o.contains(flip(p)),
                MatchMode::ParameterLevel => po.contains(&p.0) || po.contains(&p.1),
            })
            .collect(),
    )
}

/// Share of reference contradictions recovered.
pub fn recall(g: &PairSet, o: &PairSet, mode: MatchMode) -> Result<f64, EvalError> {
    match_counts(g, o, mode).recall().ok_or_else(|| EvalError::UndefinedMetric("recall needs at least one reference pair".into()))
}

/// Share of generated contradictions that match a reference.
pub fn precision(g: &PairSet, o: &PairSet, mode: MatchMode) -> Result<f64, EvalError> {
    match_counts(g, o, mode).precision().ok_or_else(|| EvalError::UndefinedMetric("precision needs at least one generated pair".into()))
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(EvalError::Shape { left: a.len(), right: b.len() });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(EvalError::UndefinedMetric("cosine similarity of a zero or non-finite vector".into()));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n - 1); `None` below two values.
pub fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}
