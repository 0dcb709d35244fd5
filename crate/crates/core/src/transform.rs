//! Ingredient substitution toward a target cuisine.
//!
//! Candidates come from embedding analogies: for an ingredient `x` of a
//! recipe currently classified as `source`, the query `v_x − v_source +
//! v_target` asks for "the `target` counterpart of `x`". The classifier then
//! measures what each swap would do to the recipe's cuisine distribution.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierError, CuisineDistribution, MlpModel};
use crate::corpus::{normalize_ingredient, Vocabulary};
use crate::embeddings::{EmbeddingError, EmbeddingSpace, TokenFilter};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("ingredient '{0}' is not in the vocabulary")]
    UnknownIngredient(String),
    #[error("unknown country '{0}'")]
    UnknownCountry(String),
    #[error("ingredient '{0}' is not in the recipe")]
    NotInRecipe(String),
    #[error("ingredient '{0}' is already in the recipe")]
    AlreadyInRecipe(String),
    #[error("no ingredient of the recipe is known to the classifier")]
    Unclassifiable,
    #[error("classifier and embedding space were built from different vocabularies")]
    VocabularyMismatch,
    #[error("nothing to revert")]
    NothingToRevert,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

pub type Result<T> = std::result::Result<T, TransformError>;

/// Default number of analogy candidates per query.
pub const DEFAULT_K: usize = 10;
/// `auto_transform` stops once the target reaches this probability.
pub const AUTO_TARGET_PROBABILITY: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionSuggestion {
    pub original: String,
    pub candidate: String,
    /// Cosine between the candidate and the analogy query.
    pub analogy_similarity: f64,
    pub prob_target_after: f64,
    pub prob_source_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapStep {
    pub replaced: String,
    pub replacement: String,
    /// Distribution of the recipe after this and all earlier swaps.
    pub distribution: CuisineDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformSession {
    pub id: String,
    pub original_ingredients: Vec<String>,
    pub current_ingredients: Vec<String>,
    pub target_country: String,
    /// Argmax of the classifier on the current state.
    pub source_country: String,
    pub initial_distribution: CuisineDistribution,
    pub history: Vec<SwapStep>,
}

impl TransformSession {
    pub fn current_distribution(&self) -> &CuisineDistribution {
        self.history
            .last()
            .map(|s| &s.distribution)
            .unwrap_or(&self.initial_distribution)
    }
}

/// One row of a session export: the recipe after `step` cumulative swaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub step: usize,
    pub replaced: Option<String>,
    pub replacement: Option<String>,
    pub prob_original_source: f64,
    pub prob_target: f64,
    pub distribution: CuisineDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionExport {
    pub id: String,
    pub countries: Vec<String>,
    pub original_source: String,
    pub target: String,
    pub ingredients: Vec<String>,
    pub rows: Vec<ExportRow>,
}

impl SessionExport {
    /// Plain-text table, one line per row.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>3}  {:<24} {:<24} {:>10} {:>10}",
            "#",
            "replaced",
            "replacement",
            format!("P({})", self.original_source),
            format!("P({})", self.target)
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>3}  {:<24} {:<24} {:>10.3} {:>10.3}",
                r.step,
                r.replaced.as_deref().unwrap_or("-"),
                r.replacement.as_deref().unwrap_or("-"),
                r.prob_original_source,
                r.prob_target
            );
        }
        out
    }
}

/// A classifier and an embedding space over the same vocabulary.
#[derive(Clone, Copy)]
pub struct Transformer<'a> {
    model: &'a MlpModel,
    space: &'a EmbeddingSpace,
}

impl<'a> Transformer<'a> {
    pub fn new(model: &'a MlpModel, space: &'a EmbeddingSpace) -> Result<Self> {
        if model.vocab().fingerprint() != space.vocab().fingerprint() {
            return Err(TransformError::VocabularyMismatch);
        }
        Ok(Transformer { model, space })
    }

    pub fn model(&self) -> &'a MlpModel {
        self.model
    }

    pub fn space(&self) -> &'a EmbeddingSpace {
        self.space
    }

    fn vocab(&self) -> &'a Vocabulary {
        self.model.vocab()
    }

    pub fn country_id(&self, name: &str) -> Result<usize> {
        self.vocab()
            .country_id(name)
            .ok_or_else(|| TransformError::UnknownCountry(name.to_string()))
    }

    fn ingredient_id(&self, name: &str) -> Result<usize> {
        self.vocab()
            .ingredient_id(&normalize_ingredient(name))
            .ok_or_else(|| TransformError::UnknownIngredient(name.to_string()))
    }

    fn indices(&self, names: &[String]) -> Vec<usize> {
        let mut idx: Vec<usize> = names.iter().filter_map(|n| self.vocab().ingredient_id(n)).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Distribution of an ingredient list; unknown ingredients are ignored.
    pub fn classify(&self, names: &[String]) -> Result<CuisineDistribution> {
        let idx = self.indices(names);
        if idx.is_empty() {
            return Err(TransformError::Unclassifiable);
        }
        Ok(self.model.predict_indices(&[idx]).remove(0))
    }

    fn position_in(state: &[String], name: &str) -> Result<usize> {
        state
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| TransformError::NotInRecipe(name.to_string()))
    }

    /// Ingredient index sets of `state` with `original` swapped for each candidate.
    fn swapped_sets(&self, state: &[String], original: usize, candidates: &[usize]) -> Vec<Vec<usize>> {
        let base: Vec<usize> = self.indices(state).into_iter().filter(|&i| i != original).collect();
        candidates
            .iter()
            .map(|&c| {
                let mut s = base.clone();
                if let Err(pos) = s.binary_search(&c) {
                    s.insert(pos, c);
                }
                s
            })
            .collect()
    }

    fn annotate(
        &self,
        state: &[String],
        original: usize,
        candidates: &[(usize, f64)],
        target: usize,
        source: usize,
    ) -> Vec<SubstitutionSuggestion> {
        let ids: Vec<usize> = candidates.iter().map(|c| c.0).collect();
        let dists = self.model.predict_indices(&self.swapped_sets(state, original, &ids));
        candidates
            .iter()
            .zip(dists)
            .map(|(&(c, sim), d)| SubstitutionSuggestion {
                original: self.vocab().ingredient(original).to_string(),
                candidate: self.vocab().ingredient(c).to_string(),
                analogy_similarity: sim,
                prob_target_after: d.get(target),
                prob_source_after: d.get(source),
            })
            .collect()
    }

    fn prepare(&self, state: &[String], ingredient: &str, target: &str) -> Result<(usize, usize, usize, Vec<f64>)> {
        let x = self.ingredient_id(ingredient)?;
        Self::position_in(state, self.vocab().ingredient(x))?;
        let target = self.country_id(target)?;
        let source = self.classify(state)?.argmax();
        let query = self
            .space
            .analogy_vector(x, self.space.country_token(source), self.space.country_token(target));
        Ok((x, target, source, query))
    }

    /// Top-`k` ingredients by cosine to `v_x − v_source + v_target`, excluding
    /// `x`, every current ingredient and all countries.
    pub fn suggest_by_analogy(
        &self,
        state: &[String],
        ingredient: &str,
        target: &str,
        k: usize,
    ) -> Result<Vec<SubstitutionSuggestion>> {
        let (x, target, source, query) = self.prepare(state, ingredient, target)?;
        let mut exclude = self.indices(state);
        exclude.push(x);
        let ranked = self
            .space
            .nearest_to_vector(&query, k, TokenFilter::Ingredients, &exclude)?;
        let candidates: Vec<(usize, f64)> = ranked.iter().map(|n| (n.token, n.similarity)).collect();
        Ok(self.annotate(state, x, &candidates, target, source))
    }

    /// Every ingredient not in the recipe ranked by the target probability
    /// after the swap; ties go to the lower index.
    pub fn suggest_by_max_prob(
        &self,
        state: &[String],
        ingredient: &str,
        target: &str,
        k: usize,
    ) -> Result<Vec<SubstitutionSuggestion>> {
        let (x, target, source, query) = self.prepare(state, ingredient, target)?;
        let present = self.indices(state);
        let pool: Vec<usize> = (0..self.vocab().num_ingredients())
            .filter(|i| *i != x && present.binary_search(i).is_err())
            .collect();
        let dists = self.model.predict_indices(&self.swapped_sets(state, x, &pool));
        let mut scored: Vec<(usize, f64)> = pool.iter().copied().zip(dists.iter().map(|d| d.get(target))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        let candidates: Vec<(usize, f64)> = scored
            .iter()
            .map(|&(c, _)| (c, cosine_or_zero(&query, self.space.input_vector(c))))
            .collect();
        Ok(self.annotate(state, x, &candidates, target, source))
    }

    pub fn start_session<S: AsRef<str>>(
        &self,
        id: impl Into<String>,
        ingredients: &[S],
        target: &str,
    ) -> Result<TransformSession> {
        let mut current: Vec<String> = Vec::new();
        for name in ingredients {
            let n = normalize_ingredient(name.as_ref());
            if !n.is_empty() && !current.contains(&n) {
                current.push(n);
            }
        }
        let target = self.vocab().country(self.country_id(target)?).to_string();
        let initial = self.classify(&current)?;
        Ok(TransformSession {
            id: id.into(),
            original_ingredients: current.clone(),
            current_ingredients: current,
            target_country: target,
            source_country: self.vocab().country(initial.argmax()).to_string(),
            initial_distribution: initial,
            history: Vec::new(),
        })
    }

    /// Swaps `replaced` for `replacement` in place and records the new distribution.
    pub fn apply_substitution(&self, session: &mut TransformSession, replaced: &str, replacement: &str) -> Result<()> {
        let replaced = normalize_ingredient(replaced);
        let pos = Self::position_in(&session.current_ingredients, &replaced)?;
        let new = self.vocab().ingredient(self.ingredient_id(replacement)?).to_string();
        if session.current_ingredients.contains(&new) {
            return Err(TransformError::AlreadyInRecipe(new));
        }
        let mut next = session.current_ingredients.clone();
        next[pos] = new.clone();
        let distribution = self.classify(&next)?;
        session.current_ingredients = next;
        session.source_country = self.vocab().country(distribution.argmax()).to_string();
        session.history.push(SwapStep {
            replaced,
            replacement: new,
            distribution,
        });
        Ok(())
    }

    /// Undoes the latest swap.
    pub fn revert(&self, session: &mut TransformSession) -> Result<SwapStep> {
        let step = session.history.pop().ok_or(TransformError::NothingToRevert)?;
        let pos = Self::position_in(&session.current_ingredients, &step.replacement)?;
        session.current_ingredients[pos] = step.replaced.clone();
        let dist = self.classify(&session.current_ingredients)?;
        session.source_country = self.vocab().country(dist.argmax()).to_string();
        Ok(step)
    }

    /// Greedy loop: each step takes the single best analogy suggestion over
    /// all ingredients, if it raises the target probability.
    pub fn auto_transform<S: AsRef<str>>(
        &self,
        id: impl Into<String>,
        ingredients: &[S],
        target: &str,
        max_steps: usize,
    ) -> Result<TransformSession> {
        let mut session = self.start_session(id, ingredients, target)?;
        let t = self.country_id(&session.target_country)?;
        for _ in 0..max_steps {
            let now = session.current_distribution().get(t);
            if now >= AUTO_TARGET_PROBABILITY {
                break;
            }
            let mut best: Option<SubstitutionSuggestion> = None;
            for x in session.current_ingredients.clone() {
                if self.vocab().ingredient_id(&x).is_none() {
                    continue;
                }
                for s in
                    self.suggest_by_analogy(&session.current_ingredients, &x, &session.target_country, DEFAULT_K)?
                {
                    if best.as_ref().is_none_or(|b| s.prob_target_after > b.prob_target_after) {
                        best = Some(s);
                    }
                }
            }
            match best {
                Some(b) if b.prob_target_after > now => {
                    self.apply_substitution(&mut session, &b.original, &b.candidate)?
                }
                _ => break,
            }
        }
        Ok(session)
    }

    pub fn export(&self, session: &TransformSession) -> Result<SessionExport> {
        let source = session.initial_distribution.argmax();
        let target = self.country_id(&session.target_country)?;
        let row = |step, replaced, replacement, d: &CuisineDistribution| ExportRow {
            step,
            replaced,
            replacement,
            prob_original_source: d.get(source),
            prob_target: d.get(target),
            distribution: d.clone(),
        };
        let mut rows = vec![row(0, None, None, &session.initial_distribution)];
        for (i, s) in session.history.iter().enumerate() {
            rows.push(row(
                i + 1,
                Some(s.replaced.clone()),
                Some(s.replacement.clone()),
                &s.distribution,
            ));
        }
        Ok(SessionExport {
            id: session.id.clone(),
            countries: self.vocab().countries().to_vec(),
            original_source: self.vocab().country(source).to_string(),
            target: session.target_country.clone(),
            ingredients: session.original_ingredients.clone(),
            rows,
        })
    }
}

fn cosine_or_zero(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}
