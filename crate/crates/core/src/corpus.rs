//! Recipe ingestion, vocabularies, train/test splitting and indicator vectors.
//!
//! Input files follow the public "What's Cooking" export: a JSON array of
//! `{"id": 10259, "cuisine": "greek", "ingredients": ["romaine lettuce", ...]}`
//! records. Test exports omit `cuisine`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus is not a JSON array of records: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed record #{index}: {reason}")]
    MalformedRecord { index: usize, reason: String },
    #[error("corpus contains no recipes")]
    EmptyCorpus,
    #[error("recipe {0} has no cuisine label")]
    Unlabeled(RecipeId),
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("cannot split a corpus of {0} recipe(s); need at least 2")]
    TooSmall(usize),
    #[error("duplicate {kind} '{name}' in vocabulary")]
    DuplicateToken { kind: &'static str, name: String },
    #[error("no ingredient of the recipe is in the vocabulary (dropped: {})", .dropped.join(", "))]
    Unclassifiable { dropped: Vec<String> },
}

/// Recipe identifier as it appears in the export: usually an integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecipeId {
    Int(i64),
    Text(String),
}

impl fmt::Display for RecipeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecipeId::Int(v) => write!(f, "{v}"),
            RecipeId::Text(s) => f.write_str(s),
        }
    }
}

/// Lowercases, trims and collapses internal whitespace.
pub fn normalize_ingredient(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Country labels use the export's snake-case form (`southern_us`), so
/// "Southern US" and "southern-us" resolve to the same label.
pub fn normalize_country(raw: &str) -> String {
    raw.split(|c: char| c.is_whitespace() || c == '-' || c == '_')
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

/// Human-readable form of a country label: `southern_us` → `Southern Us`.
pub fn display_country(label: &str) -> String {
    label
        .split('_')
        .map(|w| {
            let mut chars = w.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<String>>()
        .join(" ")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub id: RecipeId,
    pub cuisine: Option<String>,
    ingredients: Vec<String>,
}

impl Recipe {
    /// Normalizes and deduplicates ingredients, keeping first-appearance order.
    /// Returns `None` when no non-blank ingredient remains.
    pub fn new<I, S>(id: RecipeId, cuisine: Option<&str>, ingredients: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let ingredients: Vec<String> = ingredients
            .into_iter()
            .map(|s| normalize_ingredient(s.as_ref()))
            .filter(|s| !s.is_empty() && seen.insert(s.clone()))
            .collect();
        if ingredients.is_empty() {
            return None;
        }
        Some(Recipe {
            id,
            cuisine: cuisine.map(normalize_country).filter(|c| !c.is_empty()),
            ingredients,
        })
    }

    /// Unlabeled recipe built from user input.
    pub fn from_ingredients<I, S>(ingredients: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Recipe::new(RecipeId::Text("query".into()), None, ingredients)
    }

    pub fn ingredients(&self) -> &[String] {
        &self.ingredients
    }

    pub fn len(&self) -> usize {
        self.ingredients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ingredients.is_empty()
    }

    pub fn contains(&self, ingredient: &str) -> bool {
        self.ingredients.iter().any(|g| g == ingredient)
    }

    fn label(&self) -> Result<&str, CorpusError> {
        self.cuisine
            .as_deref()
            .ok_or_else(|| CorpusError::Unlabeled(self.id.clone()))
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<RecipeId>,
    cuisine: Option<String>,
    ingredients: Option<Vec<String>>,
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Recipe>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text)
}

pub fn parse_corpus(text: &str) -> Result<Vec<Recipe>, CorpusError> {
    let records: Vec<serde_json::Value> = serde_json::from_str(text)?;
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    records
        .into_iter()
        .enumerate()
        .map(|(index, value)| {
            let malformed = |reason: String| CorpusError::MalformedRecord { index, reason };
            let raw: RawRecord = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
            let id = raw.id.ok_or_else(|| malformed("missing id".into()))?;
            let ingredients = raw
                .ingredients
                .ok_or_else(|| malformed("missing ingredients array".into()))?;
            Recipe::new(id, raw.cuisine.as_deref(), ingredients)
                .ok_or_else(|| malformed("ingredients array is empty".into()))
        })
        .collect()
}

/// Frozen ingredient and country index maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    ingredients: Vec<String>,
    countries: Vec<String>,
    ingredient_index: HashMap<String, usize>,
    country_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    ingredients: Vec<String>,
    countries: Vec<String>,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = CorpusError;

    fn try_from(repr: VocabularyRepr) -> Result<Self, Self::Error> {
        Vocabulary::from_parts(repr.ingredients, repr.countries)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            ingredients: v.ingredients,
            countries: v.countries,
        }
    }
}

fn index_of(names: &[String], kind: &'static str) -> Result<HashMap<String, usize>, CorpusError> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(CorpusError::DuplicateToken {
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(index)
}

impl Vocabulary {
    /// Indices are assigned in first-appearance order. Every recipe must be labeled.
    pub fn build(recipes: &[Recipe]) -> Result<Self, CorpusError> {
        if recipes.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut ingredients = Vec::new();
        let mut countries = Vec::new();
        let mut seen_ingredients = HashSet::new();
        let mut seen_countries = HashSet::new();
        for recipe in recipes {
            let label = recipe.label()?;
            if seen_countries.insert(label.to_string()) {
                countries.push(label.to_string());
            }
            for g in recipe.ingredients() {
                if seen_ingredients.insert(g.clone()) {
                    ingredients.push(g.clone());
                }
            }
        }
        Vocabulary::from_parts(ingredients, countries)
    }

    pub fn from_parts(ingredients: Vec<String>, countries: Vec<String>) -> Result<Self, CorpusError> {
        let ingredient_index = index_of(&ingredients, "ingredient")?;
        let country_index = index_of(&countries, "country")?;
        Ok(Vocabulary {
            ingredients,
            countries,
            ingredient_index,
            country_index,
        })
    }

    pub fn num_ingredients(&self) -> usize {
        self.ingredients.len()
    }

    pub fn num_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn ingredient_id(&self, name: &str) -> Option<usize> {
        self.ingredient_index.get(name).copied()
    }

    /// Accepts display forms too ("Southern US").
    pub fn country_id(&self, name: &str) -> Option<usize> {
        self.country_index
            .get(name)
            .or_else(|| self.country_index.get(&normalize_country(name)))
            .copied()
    }

    pub fn ingredient(&self, id: usize) -> &str {
        &self.ingredients[id]
    }

    pub fn country(&self, id: usize) -> &str {
        &self.countries[id]
    }

    pub fn ingredients(&self) -> &[String] {
        &self.ingredients
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    /// SHA-256 over the ordered token lists; artifacts trained on the same
    /// vocabulary share this value.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for list in [&self.ingredients, &self.countries] {
            hasher.update((list.len() as u64).to_le_bytes());
            for name in list.iter() {
                hasher.update((name.len() as u64).to_le_bytes());
                hasher.update(name.as_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}

/// How a training split was drawn; stored in artifacts so evaluation can
/// reproduce the held-out side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Recipe>,
    pub test: Vec<Recipe>,
    pub seed: u64,
    pub ratio: f64,
}

/// Number of training recipes for a corpus of `n`: `round(ratio * n)`, clamped
/// so that both sides are non-empty.
pub fn train_size(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64).round() as usize).clamp(1, n - 1)
}

/// Seeded uniform shuffle (ChaCha8) followed by a prefix cut at [`train_size`].
pub fn split(recipes: &[Recipe], ratio: f64, seed: u64) -> Result<DatasetSplit, CorpusError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    if recipes.len() < 2 {
        return Err(CorpusError::TooSmall(recipes.len()));
    }
    let mut order: Vec<usize> = (0..recipes.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = train_size(recipes.len(), ratio);
    let pick = |ids: &[usize]| ids.iter().map(|&i| recipes[i].clone()).collect::<Vec<_>>();
    Ok(DatasetSplit {
        train: pick(&order[..cut]),
        test: pick(&order[cut..]),
        seed,
        ratio,
    })
}

impl DatasetSplit {
    pub fn info(&self) -> SplitInfo {
        SplitInfo {
            ratio: self.ratio,
            seed: self.seed,
        }
    }
}

/// Binary ingredient indicator, stored sparsely as sorted active positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorVector {
    len: usize,
    active: Vec<usize>,
}

impl IndicatorVector {
    pub fn new(len: usize, mut active: Vec<usize>) -> Self {
        active.sort_unstable();
        active.dedup();
        assert!(active.last().is_none_or(|&i| i < len), "active index out of range");
        IndicatorVector { len, active }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn ones(&self) -> usize {
        self.active.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.len];
        for &i in &self.active {
            dense[i] = 1.0;
        }
        dense
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vectorized {
    pub indicator: IndicatorVector,
    /// Out-of-vocabulary ingredients that were skipped.
    pub dropped: Vec<String>,
}

pub fn vectorize(recipe: &Recipe, vocab: &Vocabulary) -> Result<Vectorized, CorpusError> {
    vectorize_ingredients(recipe.ingredients(), vocab)
}

pub fn vectorize_ingredients<S: AsRef<str>>(ingredients: &[S], vocab: &Vocabulary) -> Result<Vectorized, CorpusError> {
    let mut active = Vec::with_capacity(ingredients.len());
    let mut dropped = Vec::new();
    for raw in ingredients {
        let name = normalize_ingredient(raw.as_ref());
        match vocab.ingredient_id(&name) {
            Some(id) => active.push(id),
            None if !name.is_empty() && !dropped.contains(&name) => dropped.push(name),
            None => {}
        }
    }
    if active.is_empty() {
        return Err(CorpusError::Unclassifiable { dropped });
    }
    Ok(Vectorized {
        indicator: IndicatorVector::new(vocab.num_ingredients(), active),
        dropped,
    })
}

/// Distinct country labels in first-appearance order, with recipe counts.
pub fn cuisine_counts(recipes: &[Recipe]) -> Vec<(String, usize)> {
    let mut order: Vec<(String, usize)> = Vec::new();
    let mut pos: HashMap<&str, usize> = HashMap::new();
    for r in recipes {
        if let Some(c) = r.cuisine.as_deref() {
            match pos.get(c) {
                Some(&i) => order[i].1 += 1,
                None => {
                    pos.insert(c, order.len());
                    order.push((c.to_string(), 1));
                }
            }
        }
    }
    order
}
