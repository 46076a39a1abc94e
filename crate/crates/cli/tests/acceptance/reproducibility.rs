use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::Outcome;

const CONFIG: &str = r#"
[simulation]
subjects = 40
replicates = 2
[model]
k = 2
k_min = 1
k_max = 2
[sampler]
iterations = 300
burn_in = 100
[prediction]
landmark = 0.4
horizons = [0.0, 0.1, 0.3]
"#;

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn run(work: &Path, threads: &str, args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_jlcm"))
        .args(args)
        .arg("--config")
        .arg(work.join("run.toml"))
        .arg("--seed")
        .arg("77")
        .arg("--out")
        .arg(out)
        .env("JLCM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&status.stderr).trim().to_string())
    }
}

pub fn criterion() -> Outcome {
    let work = tempfile::tempdir().unwrap();
    let w = work.path();
    fs::write(w.join("run.toml"), CONFIG).unwrap();
    let fit_dir = w.join("fit-a").display().to_string();
    let commands: [(&str, Vec<&str>); 5] = [
        ("simulate", vec!["simulate"]),
        ("fit", vec!["fit"]),
        ("select", vec!["select"]),
        ("predict", vec!["predict", "--fit", &fit_dir]),
        ("evaluate", vec!["evaluate"]),
    ];
    let mut identical = Vec::new();
    let mut problems = Vec::new();
    for (name, args) in &commands {
        let (a, b) = (w.join(format!("{name}-a")), w.join(format!("{name}-b")));
        if let Err(e) = run(w, "1", args, &a).and_then(|_| run(w, "4", args, &b)) {
            problems.push(format!("{name}: {e}"));
            continue;
        }
        let (ta, tb) = (tree(&a), tree(&b));
        if !ta.is_empty() && ta == tb {
            identical.push(format!("{name} ({} files)", ta.len()));
        } else {
            problems.push(format!("{name}: output trees differ"));
        }
    }
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!("byte-identical across 1 and 4 threads: {}", identical.join(", "))
        } else {
            problems.join("; ")
        },
    )
}
