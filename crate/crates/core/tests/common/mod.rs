#![allow(dead_code)]

use std::path::{Path, PathBuf};

use clwe::synthetic::{bilingual, BilingualConfig, SyntheticBilingual};
use clwe::{save_dictionary, save_embeddings};

pub struct Files {
    pub src: PathBuf,
    pub tgt: PathBuf,
    pub train: PathBuf,
    pub test: PathBuf,
}

pub fn write_bilingual(dir: &Path, cfg: &BilingualConfig) -> (Files, SyntheticBilingual<f64>) {
    let data = bilingual::<f64>(cfg);
    let files = Files {
        src: dir.join("src.vec"),
        tgt: dir.join("tgt.vec"),
        train: dir.join("train.txt"),
        test: dir.join("test.txt"),
    };
    save_embeddings(&data.src, &files.src).unwrap();
    save_embeddings(&data.tgt, &files.tgt).unwrap();
    save_dictionary(&data.train.to_words(data.src.vocab(), data.tgt.vocab()), &files.train).unwrap();
    save_dictionary(&data.test.to_words(data.src.vocab(), data.tgt.vocab()), &files.test).unwrap();
    (files, data)
}

/// Bilingual data noisy enough that a linear map leaves training errors.
pub fn noisy_config(seed: u64) -> BilingualConfig {
    BilingualConfig {
        words: 2000,
        dim: 20,
        noise: 0.8,
        train_pairs: 200,
        test_pairs: 200,
        seed,
    }
}
