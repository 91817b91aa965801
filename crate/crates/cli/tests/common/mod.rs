//! Helpers shared by the integration test targets: a tiny synthetic word
//! corpus and a runner for the compiled binary.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Ink predicate for the two synthetic word classes: pattern 0 draws
/// five vertical bars, pattern 1 three horizontal rails. `jitter`
/// shifts the strokes by whole pixels so repeated renderings are near
/// but not exact duplicates of each other.
pub fn ink_at(pattern: u8, jitter: u32, x: u32, y: u32) -> bool {
    match pattern {
        0 => (0..5).any(|i| {
            let x0 = 14 + 20 * i + jitter;
            (x0..x0 + 5).contains(&x) && (10 + jitter..39).contains(&y)
        }),
        _ => (0..3).any(|i| {
            let y0 = 10 + 11 * i + jitter;
            (y0..y0 + 5).contains(&y) && (12..105).contains(&x)
        }),
    }
}

pub const WORD_WIDTH: u32 = 120;
pub const WORD_HEIGHT: u32 = 48;

pub fn render_png(pattern: u8, jitter: u32) -> image::GrayImage {
    image::ImageBuffer::from_fn(WORD_WIDTH, WORD_HEIGHT, |x, y| {
        image::Luma([if ink_at(pattern, jitter, x, y) { 20u8 } else { 235u8 }])
    })
}

pub fn render_gray(pattern: u8, jitter: u32) -> lbpspot_core::GrayImage {
    lbpspot_core::GrayImage::from_fn(WORD_WIDTH, WORD_HEIGHT, |x, y| {
        if ink_at(pattern, jitter, x, y) {
            20
        } else {
            235
        }
    })
    .expect("dimensions are valid")
}

/// Writes six images and a manifest covering both splits (two of the six
/// rows are `train`, the rest `test`). Returns the manifest path.
pub fn write_corpus(dir: &Path) -> PathBuf {
    fs::create_dir_all(dir.join("imgs")).unwrap();
    let mut rows = vec!["# synthetic corpus".to_string(), String::new()];
    for pattern in 0..2u8 {
        let (name, label) = if pattern == 0 {
            ("vert", "alpha")
        } else {
            ("horz", "beta")
        };
        for jitter in 0..3u32 {
            let rel = format!("imgs/{name}_{jitter}.png");
            render_png(pattern, jitter)
                .save(dir.join(&rel))
                .expect("png encodes");
            let split = if jitter == 2 { "train" } else { "test" };
            rows.push(format!("{rel}\t{label}\tp{}\t{split}", jitter % 2));
        }
    }
    let manifest = dir.join("manifest.tsv");
    fs::write(&manifest, rows.join("\n") + "\n").unwrap();
    manifest
}

/// Runs the binary with a scrubbed `LBPSPOT_*` environment so tests do
/// not leak configuration into each other.
pub fn lbpspot(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lbpspot"));
    for (key, _) in std::env::vars() {
        if key.starts_with("LBPSPOT_") {
            cmd.env_remove(&key);
        }
    }
    cmd.args(args).current_dir(dir);
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("binary runs")
}

pub fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

pub fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn machine_value<'a>(out: &'a str, key: &str) -> &'a str {
    let prefix = format!("{key}=");
    out.lines()
        .find_map(|line| line.strip_prefix(prefix.as_str()))
        .unwrap_or_else(|| panic!("missing machine line {key} in:\n{out}"))
}

pub fn machine_f64(out: &str, key: &str) -> f64 {
    machine_value(out, key).parse().expect("parses as f64")
}
