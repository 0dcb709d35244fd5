//! Feedforward cuisine classifier: binary ingredient indicator in, softmax
//! distribution over countries out.
//!
//! Two ReLU hidden layers with inverted dropout, trained on mean
//! cross-entropy with mini-batch Adam. Training is single-threaded and fully
//! determined by [`MlpConfig::seed`].

pub mod adam;
pub mod network;

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{self, ArtifactError};
use crate::corpus::{
    normalize_ingredient, vectorize_ingredients, CorpusError, IndicatorVector, Recipe, SplitInfo, Vocabulary,
};
pub use adam::{Adam, AdamParams};
pub use network::{DropoutMasks, Gradients, Network};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("indicator length {got} does not match the model input dimension {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error("training set has no usable recipes")]
    EmptyTrainingSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("unknown country '{0}'")]
    UnknownCountry(String),
    #[error("ingredient '{0}' is not in the vocabulary")]
    UnknownIngredient(String),
    #[error("invalid classifier configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_dims: (usize, usize),
    pub dropout_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamParams,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_dims: (512, 256),
            dropout_rate: 0.2,
            epochs: 200,
            batch_size: 256,
            adam: AdamParams::default(),
            seed: 42,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(ClassifierError::InvalidConfig(msg.into()));
        if self.hidden_dims.0 == 0 || self.hidden_dims.1 == 0 {
            return bad("hidden dimensions must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout rate must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        let a = &self.adam;
        if !(a.step_size > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return bad("Adam parameters out of range");
        }
        Ok(())
    }
}

/// Probability of each country, indexed like the vocabulary's country list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CuisineDistribution(Vec<f64>);

impl CuisineDistribution {
    pub fn new(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        CuisineDistribution(probs)
    }

    pub fn uniform(countries: usize) -> Self {
        CuisineDistribution(vec![1.0 / countries as f64; countries])
    }

    /// A distribution putting all mass on one country.
    pub fn point_mass(countries: usize, country: usize) -> Self {
        let mut probs = vec![0.0; countries];
        probs[country] = 1.0;
        CuisineDistribution(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, country: usize) -> f64 {
        self.0[country]
    }

    /// Most probable country; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        self.ranked()[0].0
    }

    /// `(country index, probability)` sorted by probability descending,
    /// ties by index ascending.
    pub fn ranked(&self) -> Vec<(usize, f64)> {
        let mut ranked: Vec<(usize, f64)> = self.0.iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
    }
}

pub enum ForwardMode<'a> {
    Inference,
    /// Samples fresh dropout masks from the given generator.
    Training(&'a mut ChaCha8Rng),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub distribution: CuisineDistribution,
    pub dropped: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub countries: Vec<String>,
    pub accuracy: f64,
    /// Rows are true countries, columns predicted countries.
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
    /// Test recipes with no in-vocabulary ingredient; they are still
    /// classified from the output bias alone.
    pub fully_out_of_vocabulary: usize,
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "accuracy: {:.4} ({} test recipes)", self.accuracy, self.total)?;
        let width = self.countries.iter().map(String::len).max().unwrap_or(4).max(4);
        write!(f, "{:width$}", "")?;
        for i in 0..self.countries.len() {
            write!(f, " {:>5}", i)?;
        }
        writeln!(f)?;
        for (i, (name, row)) in self.countries.iter().zip(&self.confusion).enumerate() {
            write!(f, "{name:width$}")?;
            for count in row {
                write!(f, " {count:>5}")?;
            }
            writeln!(f, "   [{i}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Training recipes skipped because none of their ingredients or their label was in the vocabulary.
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    vocab: Vocabulary,
    config: MlpConfig,
    network: Network,
    split: Option<SplitInfo>,
}

const MAGIC: &[u8; 8] = b"CUISMLP\0";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    config: MlpConfig,
    split: Option<SplitInfo>,
    vocabulary_fingerprint: String,
    vocabulary: Vocabulary,
    layer_shapes: [(usize, usize); 3],
}

impl MlpModel {
    /// Freshly initialized (untrained) model.
    pub fn initialize(vocab: Vocabulary, config: MlpConfig) -> Result<Self> {
        config.validate()?;
        if vocab.num_ingredients() == 0 || vocab.num_countries() == 0 {
            return Err(ClassifierError::InvalidConfig("empty vocabulary".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let network = Network::new(
            vocab.num_ingredients(),
            config.hidden_dims,
            vocab.num_countries(),
            &mut rng,
        );
        Ok(MlpModel {
            vocab,
            config,
            network,
            split: None,
        })
    }

    pub fn from_network(vocab: Vocabulary, config: MlpConfig, network: Network) -> Result<Self> {
        config.validate()?;
        if network.inputs() != vocab.num_ingredients()
            || network.outputs() != vocab.num_countries()
            || network.hidden() != config.hidden_dims
        {
            return Err(ClassifierError::InvalidConfig(
                "network shape does not match vocabulary and configuration".into(),
            ));
        }
        Ok(MlpModel {
            vocab,
            config,
            network,
            split: None,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn split(&self) -> Option<SplitInfo> {
        self.split
    }

    pub fn set_split(&mut self, split: Option<SplitInfo>) {
        self.split = split;
    }

    pub fn forward(&self, x: &IndicatorVector, mode: ForwardMode<'_>) -> Result<CuisineDistribution> {
        if x.len() != self.network.inputs() {
            return Err(ClassifierError::ShapeMismatch {
                expected: self.network.inputs(),
                got: x.len(),
            });
        }
        let masks = match mode {
            ForwardMode::Inference => None,
            ForwardMode::Training(rng) => Some(DropoutMasks::sample(
                1,
                self.network.hidden(),
                self.config.dropout_rate,
                rng,
            )),
        };
        let cache = self.network.forward(&[x.active()], masks.as_ref());
        Ok(CuisineDistribution(cache.probs.row(0).to_vec()))
    }

    /// Inference over many ingredient-index sets at once.
    pub fn predict_indices(&self, sets: &[Vec<usize>]) -> Vec<CuisineDistribution> {
        const CHUNK: usize = 512;
        let mut out = Vec::with_capacity(sets.len());
        for chunk in sets.chunks(CHUNK) {
            let inputs: Vec<&[usize]> = chunk.iter().map(Vec::as_slice).collect();
            let cache = self.network.forward(&inputs, None);
            out.extend(cache.probs.rows().into_iter().map(|r| CuisineDistribution(r.to_vec())));
        }
        out
    }

    pub fn predict(&self, recipe: &Recipe) -> Result<Prediction> {
        self.predict_ingredients(recipe.ingredients())
    }

    /// Out-of-vocabulary ingredients are dropped and reported; an error is
    /// returned only when nothing remains.
    pub fn predict_ingredients<S: AsRef<str>>(&self, ingredients: &[S]) -> Result<Prediction> {
        let v = vectorize_ingredients(ingredients, &self.vocab)?;
        let distribution = self.forward(&v.indicator, ForwardMode::Inference)?;
        Ok(Prediction {
            distribution,
            dropped: v.dropped,
        })
    }

    /// Full distribution of a single-ingredient recipe, most probable first.
    pub fn probe_ingredient(&self, ingredient: &str) -> Result<Vec<(String, f64)>> {
        let name = normalize_ingredient(ingredient);
        let id = self
            .vocab
            .ingredient_id(&name)
            .ok_or(ClassifierError::UnknownIngredient(name))?;
        let dist = &self.predict_indices(&[vec![id]])[0];
        Ok(dist
            .ranked()
            .into_iter()
            .map(|(c, p)| (self.vocab.country(c).to_string(), p))
            .collect())
    }

    pub fn evaluate(&self, test: &[Recipe]) -> Result<EvaluationReport> {
        if test.is_empty() {
            return Err(ClassifierError::EmptyTestSet);
        }
        let c = self.vocab.num_countries();
        let mut labels = Vec::with_capacity(test.len());
        let mut sets = Vec::with_capacity(test.len());
        let mut fully_oov = 0;
        for recipe in test {
            let label = recipe
                .cuisine
                .as_deref()
                .ok_or_else(|| CorpusError::Unlabeled(recipe.id.clone()))?;
            let label = self
                .vocab
                .country_id(label)
                .ok_or_else(|| ClassifierError::UnknownCountry(label.to_string()))?;
            let set: Vec<usize> = recipe
                .ingredients()
                .iter()
                .filter_map(|g| self.vocab.ingredient_id(g))
                .collect();
            if set.is_empty() {
                fully_oov += 1;
            }
            labels.push(label);
            sets.push(set);
        }
        let mut confusion = vec![vec![0usize; c]; c];
        for (dist, &label) in self.predict_indices(&sets).iter().zip(&labels) {
            confusion[label][dist.argmax()] += 1;
        }
        let correct: usize = (0..c).map(|i| confusion[i][i]).sum();
        Ok(EvaluationReport {
            countries: self.vocab.countries().to_vec(),
            accuracy: correct as f64 / test.len() as f64,
            confusion,
            total: test.len(),
            fully_out_of_vocabulary: fully_oov,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = ModelHeader {
            config: self.config.clone(),
            split: self.split,
            vocabulary_fingerprint: self.vocab.fingerprint(),
            vocabulary: self.vocab.clone(),
            layer_shapes: self.network.layers.each_ref().map(|l| (l.fan_in(), l.fan_out())),
        };
        Ok(artifact::encode(MAGIC, VERSION, &header, &self.network.slices())?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let c = artifact::decode::<ModelHeader>(bytes, MAGIC, "classifier model", VERSION)?;
        let h = c.header;
        let corrupt = |msg: String| ClassifierError::Artifact(ArtifactError::Corrupt(msg));
        if h.vocabulary.fingerprint() != h.vocabulary_fingerprint {
            return Err(corrupt("vocabulary fingerprint mismatch".into()));
        }
        if c.blocks.len() != 6 {
            return Err(corrupt(format!(
                "expected 6 parameter blocks, found {}",
                c.blocks.len()
            )));
        }
        let mut network = Network::zeros(
            h.layer_shapes[0].0,
            (h.layer_shapes[0].1, h.layer_shapes[1].1),
            h.layer_shapes[2].1,
        );
        if network.layers.each_ref().map(|l| (l.fan_in(), l.fan_out())) != h.layer_shapes {
            return Err(corrupt("inconsistent layer shapes".into()));
        }
        for (dst, src) in network.slices_mut().into_iter().zip(&c.blocks) {
            if dst.len() != src.len() {
                return Err(corrupt("parameter block has the wrong length".into()));
            }
            dst.copy_from_slice(src);
        }
        let mut model = MlpModel::from_network(h.vocabulary, h.config, network)?;
        model.split = h.split;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(artifact::write_file(path.as_ref(), &self.to_bytes()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&artifact::read_file(path.as_ref())?)
    }
}

struct Example {
    inputs: Vec<usize>,
    label: usize,
}

fn examples(recipes: &[Recipe], vocab: &Vocabulary) -> Result<(Vec<Example>, usize)> {
    let mut out = Vec::with_capacity(recipes.len());
    let mut skipped = 0;
    for r in recipes {
        let label = r
            .cuisine
            .as_deref()
            .ok_or_else(|| CorpusError::Unlabeled(r.id.clone()))?;
        let Some(label) = vocab.country_id(label) else {
            skipped += 1;
            continue;
        };
        let inputs: Vec<usize> = r.ingredients().iter().filter_map(|g| vocab.ingredient_id(g)).collect();
        if inputs.is_empty() {
            skipped += 1;
            continue;
        }
        out.push(Example { inputs, label });
    }
    Ok((out, skipped))
}

pub fn train_classifier(
    train: &[Recipe],
    vocab: &Vocabulary,
    config: &MlpConfig,
) -> Result<(MlpModel, TrainingReport)> {
    train_classifier_with(train, vocab, config, |_, _| {})
}

/// Like [`train_classifier`], calling `on_epoch(epoch, mean_loss)` after each epoch.
pub fn train_classifier_with(
    train: &[Recipe],
    vocab: &Vocabulary,
    config: &MlpConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<(MlpModel, TrainingReport)> {
    if train.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    let (data, skipped) = examples(train, vocab)?;
    if data.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    let mut model = MlpModel::initialize(vocab.clone(), config.clone())?;
    // Initialization consumed the seed's first stream; batches and dropout
    // draw from a second one so they stay independent of network size.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let net = &mut model.network;
    let mut grads = Gradients::zeros_like(net);
    let mut adam = Adam::new(config.adam, net.slices().map(<[f64]>::len));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let inputs: Vec<&[usize]> = batch.iter().map(|&i| data[i].inputs.as_slice()).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| data[i].label).collect();
            let masks = (config.dropout_rate > 0.0)
                .then(|| DropoutMasks::sample(batch.len(), config.hidden_dims, config.dropout_rate, &mut rng));
            let cache = net.forward(&inputs, masks.as_ref());
            let loss = Network::loss(&cache, &labels);
            if !loss.is_finite() {
                return Err(ClassifierError::Diverged {
                    epoch,
                    batch: batch_no,
                    loss,
                });
            }
            loss_sum += loss * batch.len() as f64;
            grads.clear();
            net.backward(&inputs, &labels, &cache, masks.as_ref(), &mut grads);
            adam.step(net.slices_mut(), grads.slices());
        }
        let mean = loss_sum / data.len() as f64;
        if !net.all_finite() {
            return Err(ClassifierError::Diverged {
                epoch,
                batch: order.len().div_ceil(config.batch_size),
                loss: f64::NAN,
            });
        }
        epoch_losses.push(mean);
        on_epoch(epoch, mean);
    }
    Ok((model, TrainingReport { epoch_losses, skipped }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)` over all parameters.
    pub max_relative_error: f64,
    pub analytic_norm: f64,
    pub loss: f64,
    pub parameters: usize,
}

/// Compares backpropagation with central finite differences for every
/// parameter of `net` on one batch. Dropout, when given, uses the fixed masks.
pub fn gradient_check_network(
    net: &Network,
    inputs: &[&[usize]],
    labels: &[usize],
    masks: Option<&DropoutMasks>,
    epsilon: f64,
) -> GradientCheck {
    let (loss, grads) = net.loss_and_gradients(inputs, labels, masks);
    let analytic: Vec<f64> = grads.slices().iter().flat_map(|s| s.iter().copied()).collect();
    let mut probe = net.clone();
    let mut max_rel = 0.0f64;
    let mut flat = 0;
    for slot in 0..6 {
        for i in 0..probe.slices()[slot].len() {
            let orig = probe.slices()[slot][i];
            probe.slices_mut()[slot][i] = orig + epsilon;
            let plus = Network::loss(&probe.forward(inputs, masks), labels);
            probe.slices_mut()[slot][i] = orig - epsilon;
            let minus = Network::loss(&probe.forward(inputs, masks), labels);
            probe.slices_mut()[slot][i] = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic[flat];
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            max_rel = max_rel.max((a - numeric).abs() / denom);
            flat += 1;
        }
    }
    GradientCheck {
        max_relative_error: max_rel,
        analytic_norm: grads.norm(),
        loss,
        parameters: flat,
    }
}

/// Builds a freshly initialized network for `fixture` (vocabulary taken from
/// the fixture itself) and checks its gradients. With a nonzero dropout rate
/// one mask is drawn from the seed and held fixed for every evaluation.
///
/// Biases are drawn from `U(-0.5, 0.5)` instead of zero: with zero biases a
/// fully dropped or dead layer feeds an exact 0 into the next ReLU, where
/// central differences straddle the kink.
pub fn gradient_check(config: &MlpConfig, fixture: &[Recipe], epsilon: f64) -> Result<GradientCheck> {
    let vocab = Vocabulary::build(fixture)?;
    let mut model = MlpModel::initialize(vocab, config.clone())?;
    let mut bias_rng = ChaCha8Rng::seed_from_u64(config.seed);
    bias_rng.set_stream(3);
    for layer in &mut model.network.layers {
        layer.bias.mapv_inplace(|_| bias_rng.random_range(-0.5..0.5));
    }
    let (data, _) = examples(fixture, &model.vocab)?;
    let inputs: Vec<&[usize]> = data.iter().map(|e| e.inputs.as_slice()).collect();
    let labels: Vec<usize> = data.iter().map(|e| e.label).collect();
    let masks = (config.dropout_rate > 0.0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(2);
        DropoutMasks::sample(inputs.len(), config.hidden_dims, config.dropout_rate, &mut rng)
    });
    Ok(gradient_check_network(
        &model.network,
        &inputs,
        &labels,
        masks.as_ref(),
        epsilon,
    ))
}
