//! `cuisine`: train, evaluate, query, draw and serve.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

/// Prints to stdout, ignoring a closed pipe (e.g. `cuisine ... | head`).
macro_rules! say {
    (@raw $($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod error;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "cuisine",
    version,
    about = "Regional cuisine-style analysis and recipe transformation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SplitArgs {
    /// Fraction of recipes used for training; the rest is held out.
    #[arg(long, default_value_t = 0.8)]
    split_ratio: f64,
    /// Seed of the train/test shuffle.
    #[arg(long, default_value_t = 42)]
    split_seed: u64,
}

#[derive(Args, Debug, Clone)]
struct PairArgs {
    /// Classifier artifact.
    #[arg(long, env = "MODEL_PATH")]
    model: PathBuf,
    /// Embedding artifact trained over the same vocabulary.
    #[arg(long, env = "EMBEDDING_PATH")]
    embeddings: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Filter {
    Ingredients,
    Countries,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the cuisine classifier on a labeled recipe file.
    TrainClassifier {
        /// Recipe JSON (array of {id, cuisine, ingredients}).
        #[arg(long)]
        data: PathBuf,
        /// Where to write the model artifact.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        /// Seed for initialization, batching and dropout.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Passes over the training set.
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        /// Mini-batch size.
        #[arg(long, default_value_t = 256)]
        batch_size: usize,
        /// Hidden layer widths, comma-separated.
        #[arg(long, default_value = "512,256", value_parser = parse_pair)]
        hidden: (usize, usize),
        /// Dropout rate on both hidden layers.
        #[arg(long, default_value_t = 0.2)]
        dropout: f64,
        /// Adam step size.
        #[arg(long, default_value_t = 1e-3)]
        learning_rate: f64,
        /// Write the training and held-out evaluation report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a classifier on the held-out side of its training split.
    Eval {
        /// Classifier artifact.
        #[arg(long)]
        model: PathBuf,
        /// The recipe file the model was trained from.
        #[arg(long)]
        data: PathBuf,
        /// Evaluate every recipe in the file instead of the held-out split.
        #[arg(long)]
        all: bool,
        /// Write the evaluation report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a single ingredient.
    Probe {
        /// Classifier artifact.
        #[arg(long)]
        model: PathBuf,
        /// Ingredient name.
        #[arg(long)]
        ingredient: String,
        /// Number of countries to print (all by default).
        #[arg(short, long)]
        k: Option<usize>,
        /// Write the full distribution as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train joint ingredient/country embeddings.
    TrainEmbeddings {
        /// Recipe JSON (array of {id, cuisine, ingredients}).
        #[arg(long)]
        data: PathBuf,
        /// Where to write the embedding artifact.
        #[arg(long)]
        embeddings: PathBuf,
        /// Reuse this classifier's vocabulary and training split.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        split: SplitArgs,
        /// Vector dimension.
        #[arg(long, default_value_t = 100)]
        dim: usize,
        /// Negative samples per positive pair.
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        /// Passes over the pair stream.
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        /// Initial learning rate, decayed linearly.
        #[arg(long, default_value_t = 0.025)]
        step_size: f64,
        /// Exponent of the negative-sampling noise distribution.
        #[arg(long, default_value_t = 0.75)]
        noise_power: f64,
        /// Seed for initialization, ordering and negatives.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also write a text export, one `token v1 ... vK` row per token.
        #[arg(long)]
        text: Option<PathBuf>,
    },
    /// Nearest tokens to a token.
    Neighbors {
        /// Embedding artifact.
        #[arg(long)]
        embeddings: PathBuf,
        /// Ingredient or country; prefix with `country:` or `ingredient:` to disambiguate.
        #[arg(long)]
        token: String,
        /// Number of neighbors.
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        /// Which tokens may appear in the result.
        #[arg(long, value_enum, default_value_t = Filter::All)]
        filter: Filter,
        /// Write the ranking as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ingredients nearest to `pos - minus + plus`.
    Analogy {
        /// Embedding artifact.
        #[arg(long)]
        embeddings: PathBuf,
        /// Positive term, e.g. an ingredient.
        #[arg(long)]
        pos: String,
        /// Subtracted term, e.g. its country.
        #[arg(long)]
        minus: String,
        /// Added term, e.g. the target country.
        #[arg(long)]
        plus: String,
        /// Number of candidates.
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        /// Write the ranking as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Most characteristic ingredients of countries.
    Authentic {
        /// Embedding artifact.
        #[arg(long)]
        embeddings: PathBuf,
        /// Country; every country when omitted.
        #[arg(long)]
        country: Option<String>,
        /// Ingredients per country.
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        /// Write the lists as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral circle layout of the countries.
    Layout {
        /// Embedding artifact.
        #[arg(long)]
        embeddings: PathBuf,
        /// Use the second and third smallest eigenvalues instead of the largest.
        #[arg(long)]
        smallest: bool,
        /// Write `{country: [x, y]}` as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a recipe (and optional swap trail) on the Newton diagram.
    Diagram {
        #[command(flatten)]
        pair: PairArgs,
        /// Recipe ingredients, comma-separated. Without it only the circle is drawn.
        #[arg(long, value_delimiter = ',')]
        ingredients: Vec<String>,
        /// Swaps applied in order, each `replaced=replacement`; every step adds a point.
        #[arg(long = "swap", value_parser = parse_swap)]
        swaps: Vec<(String, String)>,
        /// Caption of the first point.
        #[arg(long, default_value = "recipe")]
        label: String,
        /// Use the second and third smallest eigenvalues for the layout.
        #[arg(long)]
        smallest: bool,
        /// SVG output path.
        #[arg(long)]
        svg: PathBuf,
        /// Write the points as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Substitution candidates for one ingredient of a recipe.
    Suggest {
        #[command(flatten)]
        pair: PairArgs,
        /// Recipe ingredients, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        ingredients: Vec<String>,
        /// Ingredient to replace.
        #[arg(long)]
        replace: String,
        /// Target country.
        #[arg(long)]
        target: String,
        /// Number of candidates.
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        /// Rank every ingredient by target probability instead of by analogy.
        #[arg(long)]
        max_prob: bool,
        /// Write the suggestions as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transform a recipe toward a target country, replaying swaps or greedily.
    Transform {
        #[command(flatten)]
        pair: PairArgs,
        /// Recipe ingredients, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        ingredients: Vec<String>,
        /// Target country.
        #[arg(long)]
        target: String,
        /// Swaps to replay in order, each `replaced=replacement`. Without any,
        /// the best analogy swap is taken greedily.
        #[arg(long = "swap", value_parser = parse_swap)]
        swaps: Vec<(String, String)>,
        /// Step limit of the greedy mode.
        #[arg(long, default_value_t = 10)]
        max_steps: usize,
        /// Write the session export as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Draw the trail as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[command(flatten)]
        pair: PairArgs,
        /// Address to bind.
        #[arg(long, env = "BIND_ADDR", default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Port to listen on.
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        /// Directory with the web bundle, served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Session snapshot file, restored at startup.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Seconds between snapshots.
        #[arg(long, default_value_t = 60)]
        snapshot_interval: u64,
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|e| format!("{a}: {e}"))?,
            b.parse().map_err(|e| format!("{b}: {e}"))?,
        )),
        _ => Err("expected two comma-separated widths".into()),
    }
}

fn parse_swap(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
            Ok((a.trim().to_string(), b.trim().to_string()))
        }
        _ => Err(format!("expected replaced=replacement, got '{s}'")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
