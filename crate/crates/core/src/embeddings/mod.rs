//! Joint ingredient/country embedding space and its queries.
//!
//! Ingredients and countries share one token index: ingredient `i` is token
//! `i`, country `c` is token `I + c`. Similarity, neighbor, analogy and
//! authenticity queries all use the input vectors; output vectors only serve
//! training.

pub mod train;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, ArtifactError};
use crate::corpus::{normalize_country, normalize_ingredient, CorpusError, SplitInfo, Vocabulary};
pub use train::{pair_stream, train_embeddings, train_embeddings_with, PairStream, TokenizedRecipe};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("unknown token '{0}'")]
    UnknownToken(String),
    #[error("unknown country '{0}'")]
    UnknownCountry(String),
    #[error("vector of '{0}' is zero; cosine similarity is undefined")]
    ZeroVector(String),
    #[error("query vector has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid embedding configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus yields no training pairs")]
    EmptyCorpus,
    #[error("embedding training diverged in epoch {epoch} (non-finite vectors)")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

pub type Result<T> = std::result::Result<T, EmbeddingError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to `1e-4` of itself.
    pub step_size: f64,
    pub seed: u64,
    /// Exponent applied to context frequencies for the noise distribution.
    pub noise_power: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 100,
            negative_samples: 5,
            epochs: 10,
            step_size: 0.025,
            seed: 42,
            noise_power: 0.75,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.into()));
        if self.dim == 0 {
            return bad("dimension must be positive");
        }
        if self.negative_samples == 0 {
            return bad("at least one negative sample is required");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step size must be positive");
        }
        if !self.noise_power.is_finite() {
            return bad("noise power must be finite");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Ingredient,
    Country,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TokenFilter {
    Ingredients,
    Countries,
    #[default]
    All,
}

impl TokenFilter {
    fn admits(self, kind: TokenKind) -> bool {
        matches!(
            (self, kind),
            (TokenFilter::All, _)
                | (TokenFilter::Ingredients, TokenKind::Ingredient)
                | (TokenFilter::Countries, TokenKind::Country)
        )
    }
}

pub enum Query<'a> {
    Token(&'a str),
    Vector(&'a [f64]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub token: usize,
    pub name: String,
    pub kind: TokenKind,
    pub similarity: f64,
}

/// Neighbors ordered by cosine similarity, highest first.
pub type RankedNeighbors = Vec<Neighbor>;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    vocab: Vocabulary,
    config: EmbeddingConfig,
    /// Row-major `tokens × dim`.
    input: Vec<f64>,
    output: Vec<f64>,
    split: Option<SplitInfo>,
}

const MAGIC: &[u8; 8] = b"CUISEMB\0";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SpaceHeader {
    config: EmbeddingConfig,
    split: Option<SplitInfo>,
    vocabulary_fingerprint: String,
    vocabulary: Vocabulary,
    tokens: usize,
    dim: usize,
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return None;
    }
    Some((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

impl EmbeddingSpace {
    pub(crate) fn initialize(vocab: Vocabulary, config: EmbeddingConfig) -> Self {
        let tokens = vocab.num_ingredients() + vocab.num_countries();
        EmbeddingSpace {
            input: train::init_input(tokens, config.dim, config.seed),
            output: vec![0.0; tokens * config.dim],
            vocab,
            config,
            split: None,
        }
    }

    /// Space with explicit vectors, one row of `config.dim` values per token.
    pub fn from_vectors(vocab: Vocabulary, config: EmbeddingConfig, input: Vec<f64>, output: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let expected = (vocab.num_ingredients() + vocab.num_countries()) * config.dim;
        for v in [&input, &output] {
            if v.len() != expected {
                return Err(EmbeddingError::DimensionMismatch { expected, got: v.len() });
            }
        }
        Ok(EmbeddingSpace {
            vocab,
            config,
            input,
            output,
            split: None,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn num_tokens(&self) -> usize {
        self.vocab.num_ingredients() + self.vocab.num_countries()
    }

    pub fn split(&self) -> Option<SplitInfo> {
        self.split
    }

    pub fn set_split(&mut self, split: Option<SplitInfo>) {
        self.split = split;
    }

    pub fn all_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|v| v.is_finite())
    }

    pub fn kind(&self, token: usize) -> TokenKind {
        if token < self.vocab.num_ingredients() {
            TokenKind::Ingredient
        } else {
            TokenKind::Country
        }
    }

    pub fn name(&self, token: usize) -> &str {
        let i = self.vocab.num_ingredients();
        if token < i {
            self.vocab.ingredient(token)
        } else {
            self.vocab.country(token - i)
        }
    }

    pub fn country_token(&self, country: usize) -> usize {
        self.vocab.num_ingredients() + country
    }

    /// Resolves a token name. Country labels take precedence; the prefixes
    /// `country:` and `ingredient:` force one interpretation.
    pub fn token(&self, name: &str) -> Result<usize> {
        let unknown = || EmbeddingError::UnknownToken(name.to_string());
        if let Some(rest) = name.strip_prefix("country:") {
            return self
                .vocab
                .country_id(rest)
                .map(|c| self.country_token(c))
                .ok_or_else(unknown);
        }
        if let Some(rest) = name.strip_prefix("ingredient:") {
            return self
                .vocab
                .ingredient_id(&normalize_ingredient(rest))
                .ok_or_else(unknown);
        }
        self.vocab
            .country_id(&normalize_country(name))
            .map(|c| self.country_token(c))
            .or_else(|| self.vocab.ingredient_id(&normalize_ingredient(name)))
            .ok_or_else(unknown)
    }

    pub fn country(&self, name: &str) -> Result<usize> {
        let name = name.strip_prefix("country:").unwrap_or(name);
        self.vocab
            .country_id(name)
            .map(|c| self.country_token(c))
            .ok_or_else(|| EmbeddingError::UnknownCountry(name.to_string()))
    }

    pub fn input_vector(&self, token: usize) -> &[f64] {
        let d = self.config.dim;
        &self.input[token * d..(token + 1) * d]
    }

    pub fn output_vector(&self, token: usize) -> &[f64] {
        let d = self.config.dim;
        &self.output[token * d..(token + 1) * d]
    }

    /// Cosine similarity of two tokens' input vectors.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let (ta, tb) = (self.token(a)?, self.token(b)?);
        self.similarity_by_id(ta, tb)
    }

    pub fn similarity_by_id(&self, a: usize, b: usize) -> Result<f64> {
        cosine(self.input_vector(a), self.input_vector(b)).ok_or_else(|| {
            let zero = if self.input_vector(a).iter().all(|&v| v == 0.0) {
                a
            } else {
                b
            };
            EmbeddingError::ZeroVector(self.name(zero).to_string())
        })
    }

    /// Top-`k` tokens by cosine to the query. A token query excludes itself.
    pub fn nearest(&self, query: Query<'_>, k: usize, filter: TokenFilter) -> Result<RankedNeighbors> {
        match query {
            Query::Token(name) => {
                let t = self.token(name)?;
                let v = self.input_vector(t).to_vec();
                self.nearest_to_vector(&v, k, filter, &[t]).map_err(|e| match e {
                    EmbeddingError::ZeroVector(_) => EmbeddingError::ZeroVector(self.name(t).into()),
                    e => e,
                })
            }
            Query::Vector(v) => self.nearest_to_vector(v, k, filter, &[]),
        }
    }

    /// Ranks every admitted token not in `exclude`; ties break by token index.
    /// Tokens with zero vectors rank with similarity 0.
    pub fn nearest_to_vector(
        &self,
        query: &[f64],
        k: usize,
        filter: TokenFilter,
        exclude: &[usize],
    ) -> Result<RankedNeighbors> {
        if query.len() != self.dim() {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim(),
                got: query.len(),
            });
        }
        if query.iter().all(|&v| v == 0.0) {
            return Err(EmbeddingError::ZeroVector("query".into()));
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut scored: Vec<(usize, f64)> = (0..self.num_tokens())
            .filter(|t| filter.admits(self.kind(*t)) && !exclude.contains(t))
            .map(|t| (t, cosine(query, self.input_vector(t)).unwrap_or(0.0)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(t, s)| Neighbor {
                token: t,
                name: self.name(t).to_string(),
                kind: self.kind(t),
                similarity: s,
            })
            .collect())
    }

    /// `v_positive - v_minus + v_plus`.
    pub fn analogy_vector(&self, positive: usize, minus: usize, plus: usize) -> Vec<f64> {
        let (p, m, q) = (
            self.input_vector(positive),
            self.input_vector(minus),
            self.input_vector(plus),
        );
        p.iter().zip(m).zip(q).map(|((p, m), q)| p - m + q).collect()
    }

    /// Ingredients nearest to `positive - minus + plus`, excluding the three
    /// query tokens and every country.
    pub fn analogy(&self, positive: &str, minus: &str, plus: &str, k: usize) -> Result<RankedNeighbors> {
        let (p, m, q) = (self.token(positive)?, self.token(minus)?, self.token(plus)?);
        let v = self.analogy_vector(p, m, q);
        self.nearest_to_vector(&v, k, TokenFilter::Ingredients, &[p, m, q])
    }

    /// Ingredients nearest to a country token: its most characteristic ones.
    pub fn authentic_ingredients(&self, country: &str, k: usize) -> Result<RankedNeighbors> {
        let t = self.country(country)?;
        let v = self.input_vector(t).to_vec();
        self.nearest_to_vector(&v, k, TokenFilter::Ingredients, &[t])
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = SpaceHeader {
            config: self.config.clone(),
            split: self.split,
            vocabulary_fingerprint: self.vocab.fingerprint(),
            vocabulary: self.vocab.clone(),
            tokens: self.num_tokens(),
            dim: self.dim(),
        };
        Ok(artifact::encode(MAGIC, VERSION, &header, &[&self.input, &self.output])?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let c = artifact::decode::<SpaceHeader>(bytes, MAGIC, "embedding", VERSION)?;
        let h = c.header;
        let corrupt = |m: &str| EmbeddingError::Artifact(ArtifactError::Corrupt(m.into()));
        if h.vocabulary.fingerprint() != h.vocabulary_fingerprint {
            return Err(corrupt("vocabulary fingerprint mismatch"));
        }
        if h.dim != h.config.dim || h.tokens != h.vocabulary.num_ingredients() + h.vocabulary.num_countries() {
            return Err(corrupt("inconsistent token table"));
        }
        let [input, output]: [Vec<f64>; 2] = c.blocks.try_into().map_err(|_| corrupt("expected two vector blocks"))?;
        let mut space = EmbeddingSpace::from_vectors(h.vocabulary, h.config, input, output)?;
        space.split = h.split;
        Ok(space)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(artifact::write_file(path.as_ref(), &self.to_bytes()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&artifact::read_file(path.as_ref())?)
    }

    /// One line per token, `name v1 ... vK`, input vectors. Spaces inside
    /// ingredient names become `_`; countries are written as `country:<label>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in 0..self.num_tokens() {
            match self.kind(t) {
                TokenKind::Ingredient => out.push_str(&self.name(t).replace(' ', "_")),
                TokenKind::Country => {
                    out.push_str("country:");
                    out.push_str(self.name(t));
                }
            }
            for v in self.input_vector(t) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| {
            EmbeddingError::Artifact(ArtifactError::Io {
                path: path.to_path_buf(),
                source,
            })
        })
    }
}
