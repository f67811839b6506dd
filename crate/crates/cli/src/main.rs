use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clwe::neighbors::{build_csls_index, evaluate_bli, induce_synthetic_dictionary_with, InduceOptions};
use clwe::pipeline::{self, load_dictionary, LoadedDictionary, Method, PipelineSpec, RetrofitMode};
use clwe::projection::{save_map, AlignedEmbeddings};
use clwe::retrofit::{retrofit, retrofit_combined, BetaScheme, RetrofitConfig};
use clwe::{load_embeddings, save_dictionary, save_embeddings, Error, LoadOptions, RcslsConfig};

#[derive(Parser)]
#[command(name = "clwe", version, about = "Align, retrofit and evaluate cross-lingual word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowercase, truncate and iteratively normalize embedding files.
    Normalize(NormalizeArgs),
    /// Fit a projection on a training dictionary and apply it.
    Align(AlignArgs),
    /// Retrofit aligned embeddings to a dictionary.
    Retrofit(RetrofitArgs),
    /// Write the mutual CSLS nearest neighbors of two aligned spaces.
    Induce(InduceArgs),
    /// Score BLI precision@1 of aligned embeddings against a dictionary.
    Evaluate(EvaluateArgs),
    /// Run every stage and write a summary.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Procrustes,
    Lsq,
    Cca,
    Rcsls,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Procrustes => Method::Procrustes,
            MethodArg::Lsq => Method::LeastSquares,
            MethodArg::Cca => Method::Cca,
            MethodArg::Rcsls => Method::Rcsls,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    None,
    Train,
    #[value(name = "train+synthetic")]
    TrainSynthetic,
}

impl From<ModeArg> for RetrofitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::None => RetrofitMode::None,
            ModeArg::Train => RetrofitMode::Train,
            ModeArg::TrainSynthetic => RetrofitMode::TrainSynthetic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BetaArg {
    InverseDegree,
    Uniform,
}

impl From<BetaArg> for BetaScheme {
    fn from(b: BetaArg) -> Self {
        match b {
            BetaArg::InverseDegree => BetaScheme::InverseDegree,
            BetaArg::Uniform => BetaScheme::Uniform,
        }
    }
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    src_emb: PathBuf,
    #[arg(long)]
    tgt_emb: PathBuf,
    /// Keep only the first N words of each embedding file.
    #[arg(long, default_value_t = 200_000)]
    max_vocab: usize,
}

impl Inputs {
    fn load(&self) -> clwe::Result<AlignedEmbeddings<f64>> {
        let opts = LoadOptions {
            max_vocab: Some(self.max_vocab),
            lowercase: true,
        };
        AlignedEmbeddings::new(load_embeddings(&self.src_emb, &opts)?, load_embeddings(&self.tgt_emb, &opts)?)
    }
}

#[derive(Args)]
struct RetrofitFlags {
    /// Weight of the distance to the original vectors.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = BetaArg::InverseDegree)]
    beta: BetaArg,
    /// Maximum number of coordinate descent sweeps.
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    /// Stop once no row moves more than this; defaults to 1e-5 times the mean row norm.
    #[arg(long)]
    tol: Option<f64>,
    /// Multiplier on the weight of pairs only found in the synthetic dictionary.
    #[arg(long, default_value_t = 1.0)]
    synthetic_weight: f64,
}

impl RetrofitFlags {
    fn config(&self) -> RetrofitConfig {
        RetrofitConfig {
            alpha: self.alpha,
            beta: self.beta.into(),
            iterations: self.iterations,
            convergence_tol: self.tol,
            synthetic_weight: self.synthetic_weight,
        }
    }
}

#[derive(Args)]
struct NormalizeArgs {
    #[arg(long)]
    src_emb: PathBuf,
    #[arg(long)]
    tgt_emb: Option<PathBuf>,
    #[arg(long, default_value_t = 200_000)]
    max_vocab: usize,
    /// Rounds of unit-length scaling followed by centering.
    #[arg(long, default_value_t = 5)]
    norm_rounds: usize,
    /// Directory receiving src.vec (and tgt.vec).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct AlignArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    train_dict: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Procrustes)]
    method: MethodArg,
    /// Fraction of canonical directions kept by CCA.
    #[arg(long, default_value_t = 1.0)]
    cca_dim_ratio: f64,
    /// Neighborhood size of the RCSLS loss.
    #[arg(long, default_value_t = 10)]
    csls_k: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    learning_rate: f64,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RetrofitArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    train_dict: PathBuf,
    /// Extra dictionary, typically written by `induce`.
    #[arg(long)]
    synthetic_dict: Option<PathBuf>,
    #[command(flatten)]
    retrofit: RetrofitFlags,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct InduceArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 10)]
    csls_k: usize,
    /// Only consider the N most frequent words of each side.
    #[arg(long)]
    max_rank: Option<usize>,
    /// Skip pairs whose source or target word appears in this dictionary.
    #[arg(long)]
    exclude_dict: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Gold dictionary.
    #[arg(long, alias = "dict")]
    test_dict: PathBuf,
    #[arg(long, default_value_t = 10)]
    csls_k: usize,
    /// Per-word report TSV.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    src_emb: PathBuf,
    #[arg(long)]
    tgt_emb: PathBuf,
    #[arg(long)]
    train_dict: PathBuf,
    #[arg(long)]
    test_dict: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Procrustes)]
    method: MethodArg,
    #[arg(long = "retrofit", value_enum, default_value_t = ModeArg::None)]
    retrofit_mode: ModeArg,
    #[arg(long, default_value_t = 200_000)]
    max_vocab: usize,
    #[arg(long, default_value_t = 5)]
    norm_rounds: usize,
    #[arg(long, default_value_t = 10)]
    csls_k: usize,
    #[command(flatten)]
    retrofit: RetrofitFlags,
    #[arg(long, default_value_t = 1.0)]
    cca_dim_ratio: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long)]
    max_rank: Option<usize>,
    /// Leave training words out of the synthetic dictionary.
    #[arg(long)]
    exclude_train: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("CLWE_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not configure thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: CLWE_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }
    let result = match cli.command {
        Command::Normalize(a) => normalize(a),
        Command::Align(a) => align(a),
        Command::Retrofit(a) => run_retrofit(a),
        Command::Induce(a) => induce(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Pipeline(a) => run_pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", error_chain(&e));
            ExitCode::from(1)
        }
    }
}

fn error_chain(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut cur: Option<&dyn std::error::Error> = std::error::Error::source(e);
    while let Some(s) = cur {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        cur = s.source();
    }
    msg
}

fn create_dir(dir: &Path) -> clwe::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn normalize(a: NormalizeArgs) -> clwe::Result<()> {
    create_dir(&a.out_dir)?;
    let src = pipeline::preprocess(&a.src_emb, a.max_vocab, a.norm_rounds)?;
    save_embeddings(&src, a.out_dir.join("src.vec"))?;
    if let Some(tgt) = &a.tgt_emb {
        let tgt = pipeline::preprocess(tgt, a.max_vocab, a.norm_rounds)?;
        save_embeddings(&tgt, a.out_dir.join("tgt.vec"))?;
    }
    Ok(())
}

fn align(a: AlignArgs) -> clwe::Result<()> {
    let spaces = a.inputs.load()?;
    let train = load_dictionary(&a.train_dict, &spaces.src, &spaces.tgt)?;
    let rcsls = RcslsConfig {
        k_neighbors: a.csls_k,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        seed: a.seed,
        ..RcslsConfig::default()
    };
    let alignment = pipeline::align(a.method.into(), &spaces.src, &spaces.tgt, &train.dict, &rcsls, a.cca_dim_ratio)?;
    create_dir(&a.out_dir)?;
    save_map(&alignment.src_map, a.out_dir.join("map.txt"))?;
    if let Some(m) = &alignment.tgt_map {
        save_map(m, a.out_dir.join("tgt_map.txt"))?;
    }
    save_embeddings(&alignment.aligned.src, a.out_dir.join("src.vec"))?;
    save_embeddings(&alignment.aligned.tgt, a.out_dir.join("tgt.vec"))
}

fn run_retrofit(a: RetrofitArgs) -> clwe::Result<()> {
    let spaces = a.inputs.load()?;
    let train = load_dictionary(&a.train_dict, &spaces.src, &spaces.tgt)?;
    let cfg = a.retrofit.config();
    let result = match &a.synthetic_dict {
        Some(path) => {
            let synthetic = load_dictionary(path, &spaces.src, &spaces.tgt)?;
            retrofit_combined(&spaces, &train.dict, &synthetic.dict, &cfg)?
        }
        None => retrofit(&spaces, &train.dict, &cfg)?,
    };
    create_dir(&a.out_dir)?;
    result.save_trace(a.out_dir.join("retrofit_trace.tsv"))?;
    save_embeddings(&result.src, a.out_dir.join("src.vec"))?;
    save_embeddings(&result.tgt, a.out_dir.join("tgt.vec"))
}

fn induce(a: InduceArgs) -> clwe::Result<()> {
    let spaces = a.inputs.load()?;
    let exclude = match &a.exclude_dict {
        Some(path) => Some(load_dictionary(path, &spaces.src, &spaces.tgt)?.dict),
        None => None,
    };
    let index = build_csls_index(&spaces.src, &spaces.tgt, a.csls_k)?;
    let opts = InduceOptions {
        max_rank: a.max_rank,
        exclude,
    };
    let dict = induce_synthetic_dictionary_with(&index, &spaces.src, &spaces.tgt, &opts)?;
    save_dictionary(&dict.to_words(spaces.src.vocab(), spaces.tgt.vocab()), &a.output)?;
    println!("pairs\t{}", dict.len());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> clwe::Result<()> {
    let spaces = a.inputs.load()?;
    let LoadedDictionary { dict, oov_sources, .. } = load_dictionary(&a.test_dict, &spaces.src, &spaces.tgt)?;
    let index = build_csls_index(&spaces.src, &spaces.tgt, a.csls_k)?;
    let report = evaluate_bli(&index, &spaces.src, &spaces.tgt, &dict)?.with_oov(oov_sources);
    if let Some(path) = &a.output {
        report.save(path)?;
    }
    println!(
        "p_at_1\t{:.6}\tcorrect\t{}\tevaluated\t{}\toov\t{}",
        report.p_at_1,
        report.correct(),
        report.evaluated_words,
        report.oov_words
    );
    Ok(())
}

fn run_pipeline(a: PipelineArgs) -> clwe::Result<()> {
    let mut spec = PipelineSpec::new(a.src_emb, a.tgt_emb, a.train_dict, a.test_dict, a.out_dir);
    spec.method = a.method.into();
    spec.retrofit_mode = a.retrofit_mode.into();
    spec.max_vocab = a.max_vocab;
    spec.norm_rounds = a.norm_rounds;
    spec.csls_k = a.csls_k;
    spec.seed = a.seed;
    spec.retrofit = a.retrofit.config();
    spec.rcsls = RcslsConfig {
        k_neighbors: a.csls_k,
        epochs: a.epochs,
        ..RcslsConfig::default()
    };
    spec.cca_dim_ratio = a.cca_dim_ratio;
    spec.synthetic_max_rank = a.max_rank;
    spec.synthetic_exclude_train = a.exclude_train;
    let report = pipeline::run_pipeline(&spec)?;
    println!("{}", pipeline::SUMMARY_HEADER);
    for row in &report.rows {
        println!("{row}");
    }
    Ok(())
}
