#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn golden(name: &str) -> PathBuf {
    golden_dir().join(name)
}

/// Runs the binary in `dir` with the support-cap variable cleared.
pub fn rowex_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rowex"))
        .args(args)
        .current_dir(dir)
        .env_remove("ROWEX_SUPPORT_CAP")
        .output()
        .expect("binary runs")
}

pub fn rowex(args: &[&str]) -> Output {
    rowex_in(&golden_dir(), args)
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8 output")
}

/// A CLI invocation with frozen output; `@name` arguments are golden input files.
pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    /// Files the command writes into its working directory.
    pub files: &'static [&'static str],
    pub code: i32,
}

pub const CASES: &[Case] = &[
    Case { name: "sim_penny_hier", args: &["simulate", "--model", "@penny.json", "--rows", "2", "--cols", "3", "--seed", "7", "-o", "out.csv", "--emit-latents", "lat.json"], files: &["out.csv", "lat.json"], code: 0 },
    Case { name: "sim_spread_rep", args: &["simulate", "--model", "@penny_spread.json", "--rows", "4", "--cols", "5", "--seed", "11", "--method", "representation", "-o", "out.csv", "--emit-latents", "lat.json"], files: &["out.csv", "lat.json"], code: 0 },
    Case { name: "sim_globe_ragged", args: &["simulate", "--builtin", "globe_cells", "--centers", "1,5", "--row-lengths", "3,0,6", "--seed", "2"], files: &[], code: 0 },
    Case { name: "sim_die_rep", args: &["simulate", "--builtin", "loaded_die", "--faces", "4", "--loaded-faces", "1,4", "--strength", "0.6", "--rows", "3", "--cols", "8", "--seed", "9", "--method", "representation"], files: &[], code: 0 },
    Case { name: "infer_heads", args: &["infer", "--model", "@penny.json", "--data", "@heads.csv"], files: &[], code: 0 },
    Case { name: "infer_ragged", args: &["infer", "--model", "@penny_spread.json", "--data", "@ragged.csv", "-o", "post.json"], files: &["post.json"], code: 0 },
    Case { name: "infer_kernel", args: &["infer", "--model", "@penny.json", "--data", "@ragged.csv", "--row", "2", "--given-mus", "@given_fair.json"], files: &[], code: 0 },
    Case { name: "infer_impossible", args: &["infer", "--model", "@degenerate.json", "--data", "@tails.csv"], files: &[], code: 3 },
    Case { name: "predict_next_heads", args: &["predict", "--model", "@penny.json", "--data", "@heads.csv", "--query", "@next_heads.json"], files: &[], code: 0 },
    Case { name: "check_penny", args: &["check", "--model", "@penny.json", "--seed", "42", "--curve", "curve.csv"], files: &["curve.csv"], code: 0 },
    Case { name: "check_adversarial", args: &["check", "--model", "@penny.json", "--exchangeability", "--adversarial", "--seed", "3"], files: &[], code: 1 },
    Case { name: "distance_prohorov", args: &["distance", "@bern02.json", "@bern05.json"], files: &[], code: 0 },
    Case { name: "distance_generators", args: &["distance", "@point_p.json", "@half_pq.json"], files: &[], code: 0 },
    Case { name: "builtin_globe", args: &["builtin", "globe_cells", "--bands", "4", "--centers", "2"], files: &[], code: 0 },
];

/// Output of one run in a fresh directory: stdout, stderr, then each written file, in order.
pub fn run_case(case: &Case) -> (i32, Vec<(String, Vec<u8>)>) {
    let dir = tempfile::tempdir().unwrap();
    let args: Vec<String> = case
        .args
        .iter()
        .map(|a| match a.strip_prefix('@') {
            Some(f) => golden(f).to_str().unwrap().to_string(),
            None => a.to_string(),
        })
        .collect();
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = rowex_in(dir.path(), &refs);
    let mut parts = vec![("stdout".to_string(), out.stdout.clone()), ("stderr".to_string(), out.stderr.clone())];
    for f in case.files {
        parts.push((f.to_string(), fs::read(dir.path().join(f)).unwrap_or_default()));
    }
    (code(&out), parts)
}

pub fn frozen_path(case: &Case, part: &str) -> std::path::PathBuf {
    golden_dir().join("out").join(format!("{}.{part}", case.name))
}

