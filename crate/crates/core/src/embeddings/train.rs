//! Skip-gram training over recipes with country tokens.
//!
//! Each recipe contributes every ordered ingredient pair (no window: ingredient
//! lists are unordered) plus, per ingredient, one country→ingredient and one
//! ingredient→country pair. Pairs are fitted with negative sampling against a
//! smoothed unigram noise distribution over the unified token set.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingConfig, EmbeddingError, EmbeddingSpace, Result};
use crate::corpus::{CorpusError, Recipe, Vocabulary};

/// A recipe reduced to token ids: in-vocabulary ingredients and its country.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedRecipe {
    pub country: usize,
    pub ingredients: Vec<usize>,
}

impl TokenizedRecipe {
    pub fn pair_count(&self) -> usize {
        let n = self.ingredients.len();
        n * (n - 1) + 2 * n
    }

    /// `(center, context)` pairs of this recipe.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let c = self.country;
        self.ingredients.iter().enumerate().flat_map(move |(i, &wi)| {
            [(c, wi), (wi, c)].into_iter().chain(
                self.ingredients
                    .iter()
                    .enumerate()
                    .filter(move |&(j, _)| j != i)
                    .map(move |(_, &wj)| (wi, wj)),
            )
        })
    }
}

/// The full training pair stream of a corpus.
#[derive(Clone, Debug)]
pub struct PairStream {
    pub recipes: Vec<TokenizedRecipe>,
    pub num_tokens: usize,
}

impl PairStream {
    pub fn len(&self) -> usize {
        self.recipes.iter().map(TokenizedRecipe::pair_count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.recipes.iter().flat_map(TokenizedRecipe::pairs)
    }

    /// How often each token occurs as the context of a pair.
    pub fn context_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.num_tokens];
        for r in &self.recipes {
            let n = r.ingredients.len() as u64;
            counts[r.country] += n;
            for &w in &r.ingredients {
                // n - 1 ingredient contexts plus one country→ingredient pair.
                counts[w] += n;
            }
        }
        counts
    }
}

/// Tokenizes labeled recipes. Country tokens follow the ingredients in the
/// unified index (country `c` is token `I + c`). Recipes left without any
/// in-vocabulary ingredient contribute nothing and are dropped.
pub fn pair_stream(recipes: &[Recipe], vocab: &Vocabulary) -> Result<PairStream> {
    let offset = vocab.num_ingredients();
    let mut out = Vec::with_capacity(recipes.len());
    for r in recipes {
        let label = r
            .cuisine
            .as_deref()
            .ok_or_else(|| CorpusError::Unlabeled(r.id.clone()))?;
        let country = vocab
            .country_id(label)
            .ok_or_else(|| EmbeddingError::UnknownCountry(label.to_string()))?;
        let ingredients: Vec<usize> = r.ingredients().iter().filter_map(|g| vocab.ingredient_id(g)).collect();
        if !ingredients.is_empty() {
            out.push(TokenizedRecipe {
                country: offset + country,
                ingredients,
            });
        }
    }
    Ok(PairStream {
        recipes: out,
        num_tokens: offset + vocab.num_countries(),
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling objective of one pair:
/// `log σ(v_a·v'_b) + Σ_n log σ(-v_a·v'_n)`.
pub fn pair_objective(center: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    log_sigmoid(dot(center, positive)) + negatives.iter().map(|n| log_sigmoid(-dot(center, n))).sum::<f64>()
}

/// One ascent step on [`pair_objective`] for the pair `(center, context)`.
///
/// Output vectors are updated in turn and the center's input vector last,
/// so every gradient term is evaluated at the pre-step parameters as long
/// as the targets are distinct. Negatives equal to the context are skipped.
#[allow(clippy::too_many_arguments)]
pub fn sgd_pair(
    input: &mut [f64],
    output: &mut [f64],
    dim: usize,
    center: usize,
    context: usize,
    negatives: &[usize],
    step: f64,
    scratch: &mut [f64],
) {
    scratch.fill(0.0);
    let v_center = center * dim..(center + 1) * dim;
    let targets = std::iter::once((context, 1.0)).chain(negatives.iter().filter(|&&n| n != context).map(|&n| (n, 0.0)));
    for (target, label) in targets {
        let out = &mut output[target * dim..(target + 1) * dim];
        let inp = &input[v_center.clone()];
        let g = (label - sigmoid(dot(inp, out))) * step;
        for ((s, o), i) in scratch.iter_mut().zip(out.iter_mut()).zip(inp) {
            *s += g * *o;
            *o += g * i;
        }
    }
    for (i, s) in input[v_center].iter_mut().zip(scratch.iter()) {
        *i += s;
    }
}

pub fn train_embeddings(recipes: &[Recipe], vocab: &Vocabulary, config: &EmbeddingConfig) -> Result<EmbeddingSpace> {
    train_embeddings_with(recipes, vocab, config, |_| {})
}

/// Like [`train_embeddings`], calling `on_epoch(epoch)` after each pass.
pub fn train_embeddings_with(
    recipes: &[Recipe],
    vocab: &Vocabulary,
    config: &EmbeddingConfig,
    mut on_epoch: impl FnMut(usize),
) -> Result<EmbeddingSpace> {
    config.validate()?;
    let stream = pair_stream(recipes, vocab)?;
    if stream.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let dim = config.dim;
    let mut space = EmbeddingSpace::initialize(vocab.clone(), config.clone());
    let weights: Vec<f64> = stream
        .context_counts()
        .iter()
        .map(|&c| (c as f64).powf(config.noise_power))
        .collect();
    let noise = WeightedIndex::new(&weights).map_err(|_| EmbeddingError::EmptyCorpus)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let total = (config.epochs * stream.len()) as f64;
    let mut processed = 0usize;
    let mut order: Vec<usize> = (0..stream.recipes.len()).collect();
    let mut negatives = vec![0usize; config.negative_samples];
    let mut scratch = vec![0.0; dim];

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &r in &order {
            let recipe = &stream.recipes[r];
            let step = config.step_size * (1.0 - processed as f64 / total).max(1e-4);
            for (center, context) in recipe.pairs() {
                for n in negatives.iter_mut() {
                    *n = noise.sample(&mut rng);
                }
                sgd_pair(
                    &mut space.input,
                    &mut space.output,
                    dim,
                    center,
                    context,
                    &negatives,
                    step,
                    &mut scratch,
                );
            }
            processed += recipe.pair_count();
        }
        if !space.all_finite() {
            return Err(EmbeddingError::Diverged { epoch });
        }
        on_epoch(epoch);
    }
    Ok(space)
}

/// Uniform `[-0.5/K, 0.5/K]` input vectors.
pub(super) fn init_input(tokens: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / dim as f64;
    (0..tokens * dim).map(|_| rng.random_range(-half..=half)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RecipeId;

    fn recipe(id: i64, cuisine: &str, ings: &[&str]) -> Recipe {
        Recipe::new(RecipeId::Int(id), Some(cuisine), ings.iter().copied()).unwrap()
    }

    #[test]
    fn three_ingredient_recipe_yields_twelve_pairs() {
        let recipes = vec![recipe(1, "thai", &["a", "b", "c"])];
        let vocab = Vocabulary::build(&recipes).unwrap();
        let stream = pair_stream(&recipes, &vocab).unwrap();
        let pairs: Vec<_> = stream.iter().collect();
        assert_eq!(pairs.len(), 12);
        assert_eq!(stream.len(), 12);
        let country = 3;
        assert_eq!(pairs.iter().filter(|p| p.0 == country).count(), 3);
        assert_eq!(pairs.iter().filter(|p| p.1 == country).count(), 3);
        assert!(pairs.iter().all(|p| p.0 != p.1));
        let mut ingredient_pairs: Vec<_> = pairs.iter().filter(|p| p.0 != country && p.1 != country).collect();
        ingredient_pairs.sort();
        ingredient_pairs.dedup();
        assert_eq!(ingredient_pairs.len(), 6);
    }

    #[test]
    fn single_ingredient_recipe_yields_country_pairs_only() {
        let recipes = vec![recipe(1, "thai", &["a"])];
        let vocab = Vocabulary::build(&recipes).unwrap();
        let pairs: Vec<_> = pair_stream(&recipes, &vocab).unwrap().iter().collect();
        assert_eq!(pairs, [(1, 0), (0, 1)]);
    }

    #[test]
    fn unlabeled_recipes_are_rejected() {
        let vocab = Vocabulary::build(&[recipe(1, "thai", &["a"])]).unwrap();
        let unlabeled = Recipe::from_ingredients(["a"]).unwrap();
        assert!(matches!(
            pair_stream(&[unlabeled], &vocab),
            Err(EmbeddingError::Corpus(CorpusError::Unlabeled(_)))
        ));
    }

    #[test]
    fn context_counts_match_stream() {
        let recipes = vec![recipe(1, "thai", &["a", "b", "c"]), recipe(2, "greek", &["a", "d"])];
        let vocab = Vocabulary::build(&recipes).unwrap();
        let stream = pair_stream(&recipes, &vocab).unwrap();
        let mut brute = vec![0u64; stream.num_tokens];
        for (_, ctx) in stream.iter() {
            brute[ctx] += 1;
        }
        assert_eq!(stream.context_counts(), brute);
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(-800.0).is_finite());
        assert_eq!(log_sigmoid(800.0), 0.0);
    }
}
