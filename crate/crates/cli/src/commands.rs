use std::path::Path;
use std::time::{Duration, Instant};

use cuisine_core::classifier::{train_classifier_with, AdamParams, MlpConfig, MlpModel};
use cuisine_core::corpus::{load_corpus, split, DatasetSplit, Recipe, Vocabulary};
use cuisine_core::embeddings::{train_embeddings_with, EmbeddingConfig, EmbeddingSpace, Neighbor, Query, TokenFilter};
use cuisine_core::layout::{
    barycentric_position, country_similarity, spectral_circle_layout, write_svg, CircleLayout, EigenSelection,
    LabeledPoint,
};
use cuisine_core::transform::{TransformSession, Transformer};
use cuisine_service::ServerConfig;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::{Command, Filter, PairArgs, SplitArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::TrainClassifier {
            data,
            model,
            split,
            seed,
            epochs,
            batch_size,
            hidden,
            dropout,
            learning_rate,
            out,
        } => {
            let config = MlpConfig {
                hidden_dims: hidden,
                dropout_rate: dropout,
                epochs,
                batch_size,
                adam: AdamParams {
                    step_size: learning_rate,
                    ..AdamParams::default()
                },
                seed,
            };
            train_classifier_cmd(&data, &model, &split, &config, out.as_deref())
        }
        Command::Eval { model, data, all, out } => eval_cmd(&model, &data, all, out.as_deref()),
        Command::Probe {
            model,
            ingredient,
            k,
            out,
        } => probe_cmd(&model, &ingredient, k, out.as_deref()),
        Command::TrainEmbeddings {
            data,
            embeddings,
            model,
            split,
            dim,
            negatives,
            epochs,
            step_size,
            noise_power,
            seed,
            text,
        } => {
            let config = EmbeddingConfig {
                dim,
                negative_samples: negatives,
                epochs,
                step_size,
                seed,
                noise_power,
            };
            train_embeddings_cmd(&data, &embeddings, model.as_deref(), &split, &config, text.as_deref())
        }
        Command::Neighbors {
            embeddings,
            token,
            k,
            filter,
            out,
        } => {
            let space = EmbeddingSpace::load(&embeddings)?;
            let filter = match filter {
                Filter::Ingredients => TokenFilter::Ingredients,
                Filter::Countries => TokenFilter::Countries,
                Filter::All => TokenFilter::All,
            };
            let ranked = space.nearest(Query::Token(&token), k, filter)?;
            print_neighbors(&ranked);
            write_json(out.as_deref(), &ranked)
        }
        Command::Analogy {
            embeddings,
            pos,
            minus,
            plus,
            k,
            out,
        } => {
            let space = EmbeddingSpace::load(&embeddings)?;
            let ranked = space.analogy(&pos, &minus, &plus, k)?;
            say!("{pos} - {minus} + {plus}:");
            print_neighbors(&ranked);
            write_json(out.as_deref(), &ranked)
        }
        Command::Authentic {
            embeddings,
            country,
            k,
            out,
        } => {
            let space = EmbeddingSpace::load(&embeddings)?;
            let countries: Vec<String> = match country {
                Some(c) => vec![c],
                None => space.vocab().countries().to_vec(),
            };
            let mut all = Vec::new();
            for c in countries {
                let ranked = space.authentic_ingredients(&c, k)?;
                let names: Vec<&str> = ranked.iter().map(|n| n.name.as_str()).collect();
                say!("{c}: {}", names.join(", "));
                all.push(AuthenticReport {
                    country: c,
                    ingredients: ranked,
                });
            }
            write_json(out.as_deref(), &all)
        }
        Command::Layout {
            embeddings,
            smallest,
            out,
        } => {
            let space = EmbeddingSpace::load(&embeddings)?;
            let layout = layout_for(&space, smallest)?;
            let eig: Vec<String> = layout.eigenvalues.iter().map(|v| format!("{v:.4}")).collect();
            say!("eigenvalues: {}", eig.join(" "));
            for (c, p) in layout.countries.iter().zip(&layout.positions) {
                say!("{c:<14} {:>9.5} {:>9.5}", p[0], p[1]);
            }
            if let Some(path) = out {
                write_text(&path, &layout.coordinates_json())?;
            }
            Ok(())
        }
        Command::Diagram {
            pair,
            ingredients,
            swaps,
            label,
            smallest,
            svg,
            out,
        } => {
            let (model, space) = load_pair(&pair)?;
            let layout = layout_for(&space, smallest)?;
            let mut points = Vec::new();
            if !ingredients.is_empty() {
                let t = Transformer::new(&model, &space)?;
                let target = space.vocab().country(0).to_string();
                let mut session = t.start_session("diagram", &ingredients, &target)?;
                for (a, b) in &swaps {
                    t.apply_substitution(&mut session, a, b)?;
                }
                points = trail(&session, &layout, &label)?;
            } else if !swaps.is_empty() {
                return Err(CliError::Usage("--swap needs --ingredients".into()));
            }
            write_svg(&layout, &points, &svg)?;
            say!("wrote {} ({} points)", svg.display(), points.len());
            let rows: Vec<PointReport> = points
                .iter()
                .map(|p| PointReport {
                    label: p.label.clone(),
                    x: p.point.x,
                    y: p.point.y,
                })
                .collect();
            write_json(out.as_deref(), &rows)
        }
        Command::Suggest {
            pair,
            ingredients,
            replace,
            target,
            k,
            max_prob,
            out,
        } => {
            let (model, space) = load_pair(&pair)?;
            let t = Transformer::new(&model, &space)?;
            let state = t.start_session("suggest", &ingredients, &target)?.current_ingredients;
            let list = if max_prob {
                t.suggest_by_max_prob(&state, &replace, &target, k)?
            } else {
                t.suggest_by_analogy(&state, &replace, &target, k)?
            };
            let source = t.classify(&state)?.argmax();
            say!(
                "{:<28} {:>10} {:>10} {:>10}",
                "candidate",
                "similarity",
                format!("P({target})"),
                format!("P({})", model.vocab().country(source))
            );
            for s in &list {
                say!(
                    "{:<28} {:>10.4} {:>10.4} {:>10.4}",
                    s.candidate,
                    s.analogy_similarity,
                    s.prob_target_after,
                    s.prob_source_after
                );
            }
            write_json(out.as_deref(), &list)
        }
        Command::Transform {
            pair,
            ingredients,
            target,
            swaps,
            max_steps,
            out,
            svg,
        } => {
            let (model, space) = load_pair(&pair)?;
            let t = Transformer::new(&model, &space)?;
            let session = if swaps.is_empty() {
                t.auto_transform("transform", &ingredients, &target, max_steps)?
            } else {
                let mut s = t.start_session("transform", &ingredients, &target)?;
                for (a, b) in &swaps {
                    t.apply_substitution(&mut s, a, b)?;
                }
                s
            };
            let export = t.export(&session)?;
            say!(@raw "{}", export.to_table());
            if let Some(path) = svg {
                let layout = layout_for(&space, false)?;
                write_svg(&layout, &trail(&session, &layout, "start")?, &path)?;
            }
            write_json(out.as_deref(), &export)
        }
        Command::Serve {
            pair,
            bind,
            port,
            static_dir,
            snapshot,
            snapshot_interval,
        } => {
            let _ = tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .try_init();
            let config = ServerConfig {
                model_path: pair.model,
                embedding_path: pair.embeddings,
                addr: (bind, port).into(),
                static_dir,
                snapshot,
                snapshot_interval: Duration::from_secs(snapshot_interval.max(1)),
            };
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| CliError::Data(e.to_string()))?;
            Ok(runtime.block_on(cuisine_service::serve(config))?)
        }
    }
}

#[derive(Serialize)]
struct AuthenticReport {
    country: String,
    ingredients: Vec<Neighbor>,
}

#[derive(Serialize)]
struct PointReport {
    label: String,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct TrainReport<'a> {
    train_recipes: usize,
    test_recipes: usize,
    ingredients: usize,
    countries: usize,
    training: &'a cuisine_core::classifier::TrainingReport,
    evaluation: &'a cuisine_core::classifier::EvaluationReport,
}

fn write_json<T: Serialize + ?Sized>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => {
            let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
            s.push('\n');
            write_text(p, &s)
        }
        None => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn print_neighbors(ranked: &[Neighbor]) {
    for (i, n) in ranked.iter().enumerate() {
        say!("{:>3}. {:<32} {:>8.4}", i + 1, n.name, n.similarity);
    }
}

/// Training split and the vocabulary of its training side.
fn prepare(data: &Path, ratio: f64, seed: u64) -> Result<(DatasetSplit, Vocabulary)> {
    let recipes = load_corpus(data)?;
    let split = split(&recipes, ratio, seed)?;
    let vocab = Vocabulary::build(&split.train)?;
    Ok((split, vocab))
}

fn train_classifier_cmd(
    data: &Path,
    model_path: &Path,
    split_args: &SplitArgs,
    config: &MlpConfig,
    out: Option<&Path>,
) -> Result<()> {
    let (split, vocab) = prepare(data, split_args.split_ratio, split_args.split_seed)?;
    eprintln!(
        "{} train / {} test recipes, {} ingredients, {} countries",
        split.train.len(),
        split.test.len(),
        vocab.num_ingredients(),
        vocab.num_countries()
    );
    let mut last = Instant::now();
    let (mut model, report) = train_classifier_with(&split.train, &vocab, config, |epoch, loss| {
        eprintln!(
            "epoch {:>4}  loss {loss:.5}  {:.1}s",
            epoch + 1,
            last.elapsed().as_secs_f64()
        );
        last = Instant::now();
    })?;
    model.set_split(Some(split.info()));
    model.save(model_path)?;
    let evaluation = model.evaluate(&split.test)?;
    say!(@raw "{evaluation}");
    write_json(
        out,
        &TrainReport {
            train_recipes: split.train.len(),
            test_recipes: split.test.len(),
            ingredients: vocab.num_ingredients(),
            countries: vocab.num_countries(),
            training: &report,
            evaluation: &evaluation,
        },
    )
}

fn eval_cmd(model_path: &Path, data: &Path, all: bool, out: Option<&Path>) -> Result<()> {
    let model = MlpModel::load(model_path)?;
    let recipes = load_corpus(data)?;
    let test: Vec<Recipe> = match (model.split(), all) {
        (Some(info), false) => split(&recipes, info.ratio, info.seed)?.test,
        _ => recipes,
    };
    let report = model.evaluate(&test)?;
    say!(@raw "{report}");
    write_json(out, &report)
}

fn probe_cmd(model_path: &Path, ingredient: &str, k: Option<usize>, out: Option<&Path>) -> Result<()> {
    let model = MlpModel::load(model_path)?;
    let ranked = model.probe_ingredient(ingredient)?;
    for (c, p) in ranked.iter().take(k.unwrap_or(usize::MAX)) {
        say!("{c:<14} {p:.4}");
    }
    #[derive(Serialize)]
    struct Row<'a> {
        country: &'a str,
        probability: f64,
    }
    let rows: Vec<Row> = ranked
        .iter()
        .map(|(c, p)| Row {
            country: c,
            probability: *p,
        })
        .collect();
    write_json(out, &rows)
}

fn train_embeddings_cmd(
    data: &Path,
    out: &Path,
    model: Option<&Path>,
    split_args: &SplitArgs,
    config: &EmbeddingConfig,
    text: Option<&Path>,
) -> Result<()> {
    let (split, vocab) = match model {
        Some(m) => {
            let model = MlpModel::load(m)?;
            let info = model
                .split()
                .ok_or_else(|| CliError::Data("model artifact records no training split".into()))?;
            let recipes = load_corpus(data)?;
            (split(&recipes, info.ratio, info.seed)?, model.vocab().clone())
        }
        None => prepare(data, split_args.split_ratio, split_args.split_seed)?,
    };
    let mut last = Instant::now();
    let mut space = train_embeddings_with(&split.train, &vocab, config, |epoch| {
        eprintln!("epoch {:>3} done  {:.1}s", epoch + 1, last.elapsed().as_secs_f64());
        last = Instant::now();
    })?;
    space.set_split(Some(split.info()));
    space.save(out)?;
    if let Some(path) = text {
        space.write_text(path)?;
    }
    say!(
        "{} tokens ({} ingredients, {} countries), dimension {}",
        space.num_tokens(),
        vocab.num_ingredients(),
        vocab.num_countries(),
        space.dim()
    );
    Ok(())
}

fn load_pair(pair: &PairArgs) -> Result<(MlpModel, EmbeddingSpace)> {
    Ok((MlpModel::load(&pair.model)?, EmbeddingSpace::load(&pair.embeddings)?))
}

fn layout_for(space: &EmbeddingSpace, smallest: bool) -> Result<CircleLayout> {
    let selection = if smallest {
        EigenSelection::Smallest
    } else {
        EigenSelection::Largest
    };
    Ok(spectral_circle_layout(&country_similarity(space)?, selection)?)
}

fn trail(session: &TransformSession, layout: &CircleLayout, first: &str) -> Result<Vec<LabeledPoint>> {
    let mut points = vec![LabeledPoint {
        label: first.to_string(),
        point: barycentric_position(&session.initial_distribution, layout)?,
    }];
    for s in &session.history {
        points.push(LabeledPoint {
            label: format!("{} → {}", s.replaced, s.replacement),
            point: barycentric_position(&s.distribution, layout)?,
        });
    }
    Ok(points)
}
