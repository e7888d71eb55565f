//! 2D projection of keyword vectors: PCA (deterministic) or a seeded UMAP.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vectors::{PhraseVector, WordVectors};
use super::EvalError;
use crate::cases::KeywordAnnotation;
use crate::gateway::{Gateway, RequestTag};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    #[default]
    Umap,
    Pca,
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Umap => "umap",
            Self::Pca => "pca",
        })
    }
}

impl FromStr for ProjectionMethod {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s.to_ascii_lowercase().as_str() {
            "umap" => Ok(Self::Umap),
            "pca" => Ok(Self::Pca),
            _ => Err(EvalError::Precondition(format!("unknown projection method {s:?} (umap, pca)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct UmapParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub epochs: usize,
    pub negative_samples: usize,
    pub seed: u64,
}

impl Default for UmapParams {
    fn default() -> Self {
        Self { n_neighbors: 15, min_dist: 0.1, epochs: 300, negative_samples: 5, seed: 42 }
    }
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize, EvalError> {
    if rows.len() < 3 {
        return Err(EvalError::Precondition(format!("projection needs at least 3 points, got {}", rows.len())));
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d || r.is_empty()) {
        return Err(EvalError::Shape { left: d, right: bad.len() });
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(EvalError::Precondition("projection input contains non-finite values".into()));
    }
    Ok(d)
}

/// Scores on the first two principal components. Each component's sign is
/// fixed so its largest-magnitude score is positive.
pub fn pca_2d(rows: &[Vec<f64>]) -> Result<Vec<[f64; 2]>, EvalError> {
    let d = check_rows(rows)?;
    let n = rows.len();
    let mut x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    for j in 0..d {
        let m = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-m);
    }
    // the n x n Gram matrix shares the nonzero spectrum of the covariance
    let gram = &x * x.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut out = vec![[0.0; 2]; n];
    for (k, &c) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[c].max(0.0);
        if lambda <= 1e-12 * eig.eigenvalues.amax().max(1.0) {
            continue;
        }
        let scale = lambda.sqrt();
        let col = eig.eigenvectors.column(c);
        let pivot = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() + 1e-12 { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out[i][k] = sign * col[i] * scale;
        }
    }
    Ok(out)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Curve parameters `a`, `b` for `1 / (1 + a d^2b)` fitted to the
/// min-dist offset exponential: coarse grid, then a finer local grid.
fn fit_ab(min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (1..300).map(|i| i as f64 * 0.01).collect();
    let target = |x: f64| if x < min_dist { 1.0 } else { (-(x - min_dist)).exp() };
    let err = |a: f64, b: f64| xs.iter().map(|&x| (1.0 / (1.0 + a * x.powf(2.0 * b)) - target(x)).powi(2)).sum::<f64>();
    let search = |a_range: (f64, f64), b_range: (f64, f64), step_a: f64, step_b: f64| {
        let (mut best, mut best_err) = ((1.0, 1.0), f64::MAX);
        let steps = |(lo, hi): (f64, f64), step: f64| (0..=((hi - lo) / step).round() as usize).map(move |i| lo + i as f64 * step);
        for a in steps(a_range, step_a) {
            for b in steps(b_range, step_b) {
                let e = err(a, b);
                if a > 0.0 && b > 0.0 && e < best_err {
                    best = (a, b);
                    best_err = e;
                }
            }
        }
        best
    };
    let (a, b) = search((0.1, 4.0), (0.3, 1.5), 0.05, 0.02);
    search((a - 0.05, a + 0.05), (b - 0.02, b + 0.02), 0.005, 0.002)
}

/// Fuzzy k-nearest-neighbour graph as symmetric weighted edges.
fn fuzzy_graph(rows: &[Vec<f64>], k: usize) -> Vec<(usize, usize, f64)> {
    let n = rows.len();
    let mut w = vec![vec![0.0f64; n]; n];
    let target = (k as f64).log2();
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist2(&rows[i], &rows[j]).sqrt(), j)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.truncate(k);
        let rho = d.iter().map(|x| x.0).find(|&x| x > 0.0).unwrap_or(0.0);
        let (mut lo, mut hi, mut sigma) = (0.0f64, f64::INFINITY, 1.0f64);
        for _ in 0..64 {
            let s: f64 = d.iter().map(|&(dj, _)| (-((dj - rho).max(0.0)) / sigma).exp()).sum();
            if (s - target).abs() < 1e-5 {
                break;
            }
            if s > target {
                hi = sigma;
                sigma = (lo + hi) / 2.0;
            } else {
                lo = sigma;
                sigma = if hi.is_finite() { (lo + hi) / 2.0 } else { sigma * 2.0 };
            }
        }
        for &(dj, j) in &d {
            w[i][j] = (-((dj - rho).max(0.0)) / sigma.max(1e-12)).exp();
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (w[i][j], w[j][i]);
            let s = a + b - a * b;
            if s > 0.0 {
                edges.push((i, j, s));
            }
        }
    }
    edges
}

/// Seeded UMAP layout initialised from the PCA scores.
pub fn umap_2d(rows: &[Vec<f64>], params: &UmapParams) -> Result<Vec<[f64; 2]>, EvalError> {
    check_rows(rows)?;
    let n = rows.len();
    let k = params.n_neighbors.clamp(2, n - 1);
    let (a, b) = fit_ab(params.min_dist);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let init = pca_2d(rows)?;
    let extent = init.iter().flat_map(|p| [p[0].abs(), p[1].abs()]).fold(0.0f64, f64::max);
    let scale = if extent > 0.0 { 10.0 / extent } else { 1.0 };
    let mut y: Vec<[f64; 2]> = init.iter().map(|p| [p[0] * scale + rng.gen_range(-1e-4..1e-4), p[1] * scale + rng.gen_range(-1e-4..1e-4)]).collect();

    let edges = fuzzy_graph(rows, k);
    let max_w = edges.iter().map(|e| e.2).fold(0.0f64, f64::max);
    let every: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let mut next_due = every.clone();
    let clip = |g: f64| g.clamp(-4.0, 4.0);

    for epoch in 0..params.epochs {
        let alpha = 1.0 - epoch as f64 / params.epochs as f64;
        for (e, &(i, j, _)) in edges.iter().enumerate() {
            if next_due[e] > (epoch + 1) as f64 {
                continue;
            }
            next_due[e] += every[e];
            for (from, to) in [(i, j), (j, i)] {
                let d2 = (y[from][0] - y[to][0]).powi(2) + (y[from][1] - y[to][1]).powi(2);
                if d2 > 0.0 {
                    let coef = -2.0 * a * b * d2.powf(b - 1.0) / (1.0 + a * d2.powf(b));
                    for c in 0..2 {
                        let g = clip(coef * (y[from][c] - y[to][c]));
                        y[from][c] += g * alpha;
                    }
                }
                for _ in 0..params.negative_samples {
                    let other = rng.gen_range(0..n);
                    if other == from {
                        continue;
                    }
                    let d2 = (y[from][0] - y[other][0]).powi(2) + (y[from][1] - y[other][1]).powi(2);
                    let coef = 2.0 * b / ((0.001 + d2) * (1.0 + a * d2.powf(b)));
                    for c in 0..2 {
                        y[from][c] += clip(coef * (y[from][c] - y[other][c])) * alpha;
                    }
                }
            }
        }
    }
    Ok(y)
}

pub fn project(rows: &[Vec<f64>], method: ProjectionMethod, params: &UmapParams) -> Result<Vec<[f64; 2]>, EvalError> {
    match method {
        ProjectionMethod::Pca => pca_2d(rows),
        ProjectionMethod::Umap => umap_2d(rows, params),
    }
}

/// Share of points whose nearest other point carries the same label.
pub fn nearest_neighbor_purity<L: PartialEq>(points: &[[f64; 2]], labels: &[L]) -> f64 {
    if points.len() < 2 {
        return 1.0;
    }
    let same = (0..points.len())
        .filter(|&i| {
            let nn = (0..points.len()).filter(|&j| j != i).min_by(|&a, &b| dist2(&points[i], &points[a]).total_cmp(&dist2(&points[i], &points[b]))).expect("two points");
            labels[nn] == labels[i]
        })
        .count();
    same as f64 / points.len() as f64
}

/// Source of phrase vectors for keyword projection.
pub trait PhraseEmbedder {
    fn embed_phrases(&self, phrases: &[String]) -> Result<Vec<Option<PhraseVector>>, EvalError>;
}

impl PhraseEmbedder for WordVectors {
    fn embed_phrases(&self, phrases: &[String]) -> Result<Vec<Option<PhraseVector>>, EvalError> {
        Ok(phrases.iter().map(|p| self.phrase(p)).collect())
    }
}

/// Embedding API fallback when no word-vector file is configured.
pub struct GatewayPhrases<'a> {
    pub gateway: &'a Gateway,
    pub tag: RequestTag,
}

impl PhraseEmbedder for GatewayPhrases<'_> {
    fn embed_phrases(&self, phrases: &[String]) -> Result<Vec<Option<PhraseVector>>, EvalError> {
        let batch = self.gateway.embed(phrases, &self.tag)?;
        Ok(batch.vectors.into_iter().map(|vector| Some(PhraseVector { vector, missing: Vec::new() })).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub keyword: String,
    pub source: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordProjection {
    pub method: ProjectionMethod,
    pub points: Vec<ProjectedPoint>,
    pub findings: Vec<String>,
}

/// Embeds each keyword phrase and projects the embeddable ones to 2D.
/// Phrases with no known token are reported and left out.
pub fn project_keywords(keywords: &[KeywordAnnotation], embedder: &dyn PhraseEmbedder, method: ProjectionMethod, params: &UmapParams) -> Result<KeywordProjection, EvalError> {
    if keywords.len() < 3 {
        return Err(EvalError::Precondition(format!("need at least 3 keywords, got {}", keywords.len())));
    }
    let phrases: Vec<String> = keywords.iter().map(|k| k.keyword.clone()).collect();
    let vectors = embedder.embed_phrases(&phrases)?;
    let mut findings = Vec::new();
    let mut kept = Vec::new();
    let mut rows = Vec::new();
    for (k, v) in keywords.iter().zip(vectors) {
        match v {
            Some(v) => {
                if !v.missing.is_empty() {
                    findings.push(format!("{:?}: skipped unknown token(s) {}", k.keyword, v.missing.join(", ")));
                }
                kept.push(k);
                rows.push(v.vector);
            }
            None => findings.push(format!("{:?}: no token has a vector; point omitted", k.keyword)),
        }
    }
    let coords = project(&rows, method, params)?;
    let points = kept.into_iter().zip(coords).map(|(k, [x, y])| ProjectedPoint { keyword: k.keyword.clone(), source: k.source.clone(), x, y }).collect();
    Ok(KeywordProjection { method, points, findings })
}
