//! End-to-end runs: preprocess, align, optionally retrofit, and evaluate BLI
//! on the training and test dictionaries.
//!
//! Every stage is also exposed on its own so the command-line tool can run
//! them one at a time with files in between.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dictionary::{count_oov_sources, index_dictionary, parse_dictionary, save_dictionary, IndexedDictionary};
use crate::embeddings::{iterative_normalize, load_embeddings, save_embeddings, unit_normalize, EmbeddingMatrix, LoadOptions};
use crate::error::{Error, Result, StageContext};
use crate::neighbors::{build_csls_index, evaluate_bli, induce_synthetic_dictionary_with, BliReport, InduceOptions};
use crate::projection::{
    apply_projection, fit_cca, fit_least_squares, fit_procrustes, fit_rcsls, save_map, AlignedEmbeddings, LinearMap,
    RcslsConfig,
};
use crate::retrofit::{retrofit, retrofit_combined, RetrofitConfig, RetrofitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Procrustes,
    LeastSquares,
    Cca,
    Rcsls,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Procrustes => "procrustes",
            Method::LeastSquares => "lsq",
            Method::Cca => "cca",
            Method::Rcsls => "rcsls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "procrustes" => Ok(Method::Procrustes),
            "lsq" => Ok(Method::LeastSquares),
            "cca" => Ok(Method::Cca),
            "rcsls" => Ok(Method::Rcsls),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrofitMode {
    None,
    Train,
    TrainSynthetic,
}

impl RetrofitMode {
    pub fn name(self) -> &'static str {
        match self {
            RetrofitMode::None => "none",
            RetrofitMode::Train => "train",
            RetrofitMode::TrainSynthetic => "train+synthetic",
        }
    }
}

impl fmt::Display for RetrofitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RetrofitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(RetrofitMode::None),
            "train" => Ok(RetrofitMode::Train),
            "train+synthetic" => Ok(RetrofitMode::TrainSynthetic),
            other => Err(Error::InvalidArgument(format!("unknown retrofit mode {other:?}"))),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone)]
pub struct PipelineSpec {
    pub src_emb: PathBuf,
    pub tgt_emb: PathBuf,
    pub train_dict: PathBuf,
    pub test_dict: PathBuf,
    pub method: Method,
    pub retrofit_mode: RetrofitMode,
    pub max_vocab: usize,
    pub norm_rounds: usize,
    pub csls_k: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub retrofit: RetrofitConfig,
    pub rcsls: RcslsConfig,
    pub cca_dim_ratio: f64,
    /// Restricts synthetic induction to the most frequent words.
    pub synthetic_max_rank: Option<usize>,
    /// Leave out synthetic pairs that touch a training word.
    pub synthetic_exclude_train: bool,
}

impl PipelineSpec {
    pub fn new(
        src_emb: impl Into<PathBuf>,
        tgt_emb: impl Into<PathBuf>,
        train_dict: impl Into<PathBuf>,
        test_dict: impl Into<PathBuf>,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        PipelineSpec {
            src_emb: src_emb.into(),
            tgt_emb: tgt_emb.into(),
            train_dict: train_dict.into(),
            test_dict: test_dict.into(),
            method: Method::Procrustes,
            retrofit_mode: RetrofitMode::None,
            max_vocab: 200_000,
            norm_rounds: 5,
            csls_k: crate::neighbors::DEFAULT_CSLS_K,
            seed: 0,
            out_dir: out_dir.into(),
            retrofit: RetrofitConfig::default(),
            rcsls: RcslsConfig::default(),
            cca_dim_ratio: 1.0,
            synthetic_max_rank: None,
            synthetic_exclude_train: false,
        }
    }
}

/// One summary line: P@1 on both dictionaries for a method and mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub mode: RetrofitMode,
    pub train_p_at_1: f64,
    pub test_p_at_1: f64,
    pub train_evaluated: usize,
    pub test_evaluated: usize,
    pub seed: u64,
}

pub const SUMMARY_HEADER: &str = "method\tmode\ttrain_p_at_1\ttest_p_at_1\ttrain_evaluated\ttest_evaluated\tseed";

impl fmt::Display for SummaryRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{:.6}\t{:.6}\t{}\t{}\t{}",
            self.method, self.mode, self.train_p_at_1, self.test_p_at_1, self.train_evaluated, self.test_evaluated, self.seed
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// The pre-retrofit row always comes first.
    pub rows: Vec<SummaryRow>,
    pub synthetic_pairs: Option<usize>,
    pub retrofit_sweeps: Option<usize>,
    pub outputs: Vec<PathBuf>,
}

/// Loads an embedding file, lowercases and truncates it, then applies
/// `rounds` of Iterative Normalization (none when `rounds == 0`).
pub fn preprocess(path: &Path, max_vocab: usize, rounds: usize) -> Result<EmbeddingMatrix<f64>> {
    let emb = load_embeddings::<f64>(
        path,
        &LoadOptions {
            max_vocab: Some(max_vocab),
            lowercase: true,
        },
    )?;
    log::info!("loaded {}: {} words x {} dims", path.display(), emb.len(), emb.dim());
    if rounds == 0 {
        return Ok(emb);
    }
    iterative_normalize(&emb, rounds)
}

/// A dictionary indexed against two vocabularies, with what was lost.
#[derive(Debug, Clone)]
pub struct LoadedDictionary {
    pub dict: IndexedDictionary,
    pub dropped_pairs: usize,
    pub oov_sources: usize,
}

pub fn load_dictionary(path: &Path, src: &EmbeddingMatrix<f64>, tgt: &EmbeddingMatrix<f64>) -> Result<LoadedDictionary> {
    let raw = parse_dictionary(path)?.lowercased();
    let (dict, dropped_pairs) = index_dictionary(&raw, src.vocab(), tgt.vocab());
    let oov_sources = count_oov_sources(&raw, src.vocab(), tgt.vocab());
    log::info!(
        "dictionary {}: {} pairs kept, {} dropped, {} OOV source words",
        path.display(),
        dict.len(),
        dropped_pairs,
        oov_sources
    );
    Ok(LoadedDictionary {
        dict,
        dropped_pairs,
        oov_sources,
    })
}

/// Aligned spaces plus the maps that produced them.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub aligned: AlignedEmbeddings<f64>,
    pub src_map: LinearMap<f64>,
    /// Only CCA maps the target side.
    pub tgt_map: Option<LinearMap<f64>>,
}

pub fn align(
    method: Method,
    src: &EmbeddingMatrix<f64>,
    tgt: &EmbeddingMatrix<f64>,
    train: &IndexedDictionary,
    rcsls: &RcslsConfig,
    cca_dim_ratio: f64,
) -> Result<Alignment> {
    let alignment = match method {
        Method::Procrustes | Method::LeastSquares => {
            let map = if method == Method::Procrustes {
                fit_procrustes(src, tgt, train)?
            } else {
                fit_least_squares(src, tgt, train)?
            };
            Alignment {
                aligned: AlignedEmbeddings::new(apply_projection(&map, src)?, tgt.clone())?,
                src_map: map,
                tgt_map: None,
            }
        }
        Method::Cca => {
            let fit = fit_cca(src, tgt, train, cca_dim_ratio)?;
            Alignment {
                aligned: AlignedEmbeddings::new(apply_projection(&fit.src_map, src)?, apply_projection(&fit.tgt_map, tgt)?)?,
                src_map: fit.src_map,
                tgt_map: Some(fit.tgt_map),
            }
        }
        Method::Rcsls => {
            let src = unit_normalize(src)?;
            let tgt = unit_normalize(tgt)?;
            let init = fit_procrustes(&src, &tgt, train)?;
            let map = fit_rcsls(&src, &tgt, train, rcsls, &init)?;
            Alignment {
                aligned: AlignedEmbeddings::new(apply_projection(&map, &src)?, tgt)?,
                src_map: map,
                tgt_map: None,
            }
        }
    };
    log::info!(
        "{method}: aligned {} x {} source, {} x {} target",
        alignment.aligned.src.len(),
        alignment.aligned.src.dim(),
        alignment.aligned.tgt.len(),
        alignment.aligned.tgt.dim()
    );
    Ok(alignment)
}

/// Mutual-CSLS synthetic dictionary over an aligned pair.
pub fn induce(aligned: &AlignedEmbeddings<f64>, csls_k: usize, opts: &InduceOptions) -> Result<IndexedDictionary> {
    let index = build_csls_index(&aligned.src, &aligned.tgt, csls_k)?;
    let dict = induce_synthetic_dictionary_with(&index, &aligned.src, &aligned.tgt, opts)?;
    log::info!("induced {} mutual CSLS pairs", dict.len());
    Ok(dict)
}

/// Train and test BLI reports for one aligned pair, sharing one CSLS index.
pub fn evaluate_pair(
    aligned: &AlignedEmbeddings<f64>,
    train: &LoadedDictionary,
    test: &LoadedDictionary,
    csls_k: usize,
) -> Result<(BliReport, BliReport)> {
    let index = build_csls_index(&aligned.src, &aligned.tgt, csls_k)?;
    let train_report = evaluate_bli(&index, &aligned.src, &aligned.tgt, &train.dict)?.with_oov(train.oov_sources);
    let test_report = evaluate_bli(&index, &aligned.src, &aligned.tgt, &test.dict)?.with_oov(test.oov_sources);
    log::info!("BLI P@1 train {:.4}, test {:.4}", train_report.p_at_1, test_report.p_at_1);
    Ok((train_report, test_report))
}

/// Writes output files and remembers them so a failed run can clean up.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn remove_all(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

/// Runs the whole pipeline and writes its artifacts into `spec.out_dir`.
///
/// On failure every file written by this run is removed again.
pub fn run_pipeline(spec: &PipelineSpec) -> Result<RunReport> {
    fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    let mut out = Outputs {
        dir: spec.out_dir.clone(),
        written: Vec::new(),
    };
    match run_stages(spec, &mut out) {
        Ok(mut report) => {
            report.outputs = out.written;
            Ok(report)
        }
        Err(e) => {
            out.remove_all();
            Err(e)
        }
    }
}

fn run_stages(spec: &PipelineSpec, out: &mut Outputs) -> Result<RunReport> {
    for p in [&spec.src_emb, &spec.tgt_emb, &spec.train_dict, &spec.test_dict] {
        if !p.exists() {
            return Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound))).stage("inputs");
        }
    }
    let src = preprocess(&spec.src_emb, spec.max_vocab, spec.norm_rounds).stage("normalize")?;
    let tgt = preprocess(&spec.tgt_emb, spec.max_vocab, spec.norm_rounds).stage("normalize")?;
    let train = load_dictionary(&spec.train_dict, &src, &tgt).stage("dictionary")?;
    let test = load_dictionary(&spec.test_dict, &src, &tgt).stage("dictionary")?;

    let mut rcsls = spec.rcsls.clone();
    rcsls.seed = spec.seed;
    let alignment = align(spec.method, &src, &tgt, &train.dict, &rcsls, spec.cca_dim_ratio).stage("align")?;
    save_map(&alignment.src_map, out.path("map.txt")).stage("align")?;
    if let Some(m) = &alignment.tgt_map {
        save_map(m, out.path("tgt_map.txt")).stage("align")?;
    }
    save_dictionary(&train.dict.to_words(src.vocab(), tgt.vocab()), out.path("train_dict.tsv")).stage("dictionary")?;
    save_dictionary(&test.dict.to_words(src.vocab(), tgt.vocab()), out.path("test_dict.tsv")).stage("dictionary")?;

    let (train_pre, test_pre) = evaluate_pair(&alignment.aligned, &train, &test, spec.csls_k).stage("evaluate")?;
    let row = |mode, tr: &BliReport, te: &BliReport| SummaryRow {
        method: spec.method,
        mode,
        train_p_at_1: tr.p_at_1,
        test_p_at_1: te.p_at_1,
        train_evaluated: tr.evaluated_words,
        test_evaluated: te.evaluated_words,
        seed: spec.seed,
    };
    let mut rows = vec![row(RetrofitMode::None, &train_pre, &test_pre)];
    let mut synthetic_pairs = None;
    let mut retrofit_sweeps = None;

    let final_embeddings = match spec.retrofit_mode {
        RetrofitMode::None => {
            train_pre.save(out.path("bli_train.tsv")).stage("evaluate")?;
            test_pre.save(out.path("bli_test.tsv")).stage("evaluate")?;
            alignment.aligned
        }
        mode => {
            train_pre.save(out.path("bli_train_pre.tsv")).stage("evaluate")?;
            test_pre.save(out.path("bli_test_pre.tsv")).stage("evaluate")?;
            let result: RetrofitResult<f64> = if mode == RetrofitMode::Train {
                retrofit(&alignment.aligned, &train.dict, &spec.retrofit).stage("retrofit")?
            } else {
                let opts = InduceOptions {
                    max_rank: spec.synthetic_max_rank,
                    exclude: spec.synthetic_exclude_train.then(|| train.dict.clone()),
                };
                let synthetic = induce(&alignment.aligned, spec.csls_k, &opts).stage("induce")?;
                save_dictionary(&synthetic.to_words(src.vocab(), tgt.vocab()), out.path("synthetic_dict.tsv"))
                    .stage("induce")?;
                synthetic_pairs = Some(synthetic.len());
                retrofit_combined(&alignment.aligned, &train.dict, &synthetic, &spec.retrofit).stage("retrofit")?
            };
            result.save_trace(out.path("retrofit_trace.tsv")).stage("retrofit")?;
            retrofit_sweeps = Some(result.sweeps_run);
            let retrofitted = AlignedEmbeddings::new(result.src, result.tgt).stage("retrofit")?;
            let (train_post, test_post) = evaluate_pair(&retrofitted, &train, &test, spec.csls_k).stage("evaluate")?;
            train_post.save(out.path("bli_train.tsv")).stage("evaluate")?;
            test_post.save(out.path("bli_test.tsv")).stage("evaluate")?;
            rows.push(row(mode, &train_post, &test_post));
            retrofitted
        }
    };
    save_embeddings(&final_embeddings.src, out.path("src.vec")).stage("write")?;
    save_embeddings(&final_embeddings.tgt, out.path("tgt.vec")).stage("write")?;
    write_summary(&rows, &out.path("summary.tsv")).stage("write")?;
    Ok(RunReport {
        rows,
        synthetic_pairs,
        retrofit_sweeps,
        outputs: Vec::new(),
    })
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
