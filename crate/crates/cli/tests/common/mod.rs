#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ubm_core::{read_tensor, write_tensor, LabelMap, ProbMap, Tensor};

pub fn ubm<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_ubm"))
        .args(args)
        .output()
        .expect("the ubm binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn save(dir: &Path, name: &str, tensor: &Tensor) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, write_tensor(tensor)).unwrap();
    path
}

pub fn save_prob(dir: &Path, name: &str, map: &ProbMap) -> PathBuf {
    save(dir, name, &Tensor::from(map))
}

pub fn save_labels(dir: &Path, name: &str, map: &LabelMap) -> PathBuf {
    save(dir, name, &Tensor::from(map))
}

pub fn load(path: &Path) -> Tensor {
    read_tensor(&std::fs::read(path).unwrap()).unwrap()
}

/// Softmax of a deterministic pseudo-random score field.
pub fn smooth_prob(height: usize, width: usize, classes: usize, salt: u64) -> ProbMap {
    let mut state = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let scores: Vec<f64> = (0..height * width * classes)
        .map(|_| 4.0 * next())
        .collect();
    let mut data = Vec::with_capacity(scores.len());
    for row in scores.chunks_exact(classes) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|s| (s - max).exp()).sum();
        data.extend(row.iter().map(|s| ((s - max).exp() / z) as f32));
    }
    ProbMap::new(height, width, classes, data).unwrap()
}
