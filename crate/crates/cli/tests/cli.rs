use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use triz_core::cases::seed_cases;

fn replay_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/replay")
}

fn triz(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triz"))
        .args(args)
        .current_dir(dir)
        .env_remove("TRIZ_CONFIG")
        .env("OPENAI_API_KEY", "")
        .stdin(Stdio::null())
        .output()
        .unwrap()
}

fn replay(dir: &Path, args: &[&str]) -> Output {
    let fixtures = replay_dir();
    let mut all = vec!["--store", "sessions", "--replay", fixtures.to_str().unwrap()];
    all.extend_from_slice(args);
    triz(dir, &all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
fn exit(o: &Output, code: i32) {
    assert_eq!(o.status.code(), Some(code), "stdout:\n{}\nstderr:\n{}", stdout(o), stderr(o));
}

#[test]
fn solve_replays_the_robot_case() {
    let dir = tempfile::tempdir().unwrap();
    let o = replay(dir.path(), &["solve", "--case", "in-pipe-robot", "--select-all", "--out", "result"]);
    exit(&o, 0);
    let out = stdout(&o);
    assert_eq!(out.matches("Solution (few-shot): ").count(), 6, "{out}");
    let session: Vec<_> = std::fs::read_dir(dir.path().join("result")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(session.len(), 2, "{session:?}");
    let json = session.iter().find(|n| n.ends_with(".json")).unwrap();
    let id = json.trim_end_matches(".json");
    let stored = std::fs::read(dir.path().join("sessions").join(json)).unwrap();
    assert_eq!(std::fs::read(dir.path().join("result").join(json)).unwrap(), stored);
    let md = std::fs::read_to_string(dir.path().join("result").join(format!("{id}.md"))).unwrap();
    assert!(md.contains("Segmentation"), "{md}");

    let o = replay(dir.path(), &["sessions", "list"]);
    exit(&o, 0);
    assert!(stdout(&o).contains(id) && stdout(&o).contains("solutions_generated"));
    let o = replay(dir.path(), &["sessions", "show", id]);
    exit(&o, 0);
    assert_eq!(serde_json::from_str::<serde_json::Value>(&stdout(&o)).unwrap(), serde_json::from_slice::<serde_json::Value>(&stored).unwrap());
    exit(&replay(dir.path(), &["sessions", "show", "nope"]), 1);
}

#[test]
fn solve_accepts_explicit_choices() {
    let dir = tempfile::tempdir().unwrap();
    let o = replay(
        dir.path(),
        &["solve", "--case", "in-pipe-robot", "--select", "1,2,3,4,5", "--triz", "36,35,27,37,32", "--strategy-step3", "cot", "--contradiction", "1", "--principles", "1", "--strategy-step4", "few-shot"],
    );
    exit(&o, 0);
    assert_eq!(stdout(&o).matches("Solution (few-shot): ").count(), 3, "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = replay(dir.path(), &["solve", "--case", "in-pipe-robot", "--select-all", "--strategy-step3", "tree-of-thought"]);
    exit(&o, 2);
    assert!(stderr(&o).contains("tree-of-thought"));
    // stdin is not a terminal and nothing says what to select
    let o = replay(dir.path(), &["solve", "--case", "in-pipe-robot"]);
    exit(&o, 2);
    assert!(stderr(&o).contains("--select"));
    exit(&replay(dir.path(), &["solve", "--case", "no-such-case", "--select-all"]), 2);
    exit(&replay(dir.path(), &["solve"]), 2);
    exit(&triz(dir.path(), &["matrix", "lookup", "0", "33"]), 2);
    exit(&replay(dir.path(), &["eval", "run", "--step", "4", "--match-mode", "unordered-pair"]), 2);
    exit(&replay(dir.path(), &["eval", "run", "--aggregation", "median"]), 2);

    std::fs::write(dir.path().join("bad.toml"), "model = 3\n").unwrap();
    let o = triz(dir.path(), &["--config", "bad.toml", "params", "list"]);
    exit(&o, 2);
    std::fs::write(dir.path().join("unknown.toml"), "colour = \"blue\"\n").unwrap();
    exit(&triz(dir.path(), &["--config", "unknown.toml", "params", "list"]), 2);
}

#[test]
fn runtime_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty-fixtures");
    std::fs::create_dir(&empty).unwrap();
    let o = triz(dir.path(), &["--store", "s", "--replay", empty.to_str().unwrap(), "solve", "--case", "in-pipe-robot", "--select-all"]);
    exit(&o, 1);
    assert!(stderr(&o).contains("no transcript"), "{}", stderr(&o));
    // live mode without a key
    let o = triz(dir.path(), &["--store", "s", "solve", "--case", "in-pipe-robot", "--select-all"]);
    exit(&o, 1);
    assert!(stderr(&o).contains("OPENAI_API_KEY"), "{}", stderr(&o));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = "store = \"from-config\"\n\n[defaults]\nstep3 = \"cot\"\nstep4 = \"few-shot\"\n";
    std::fs::write(dir.path().join("triz.toml"), config).unwrap();
    let o = triz(dir.path(), &["--config", "triz.toml", "--replay", replay_dir().to_str().unwrap(), "solve", "--case", "in-pipe-robot", "--select-all", "--principles", "1"]);
    exit(&o, 0);
    let stored: Vec<_> = std::fs::read_dir(dir.path().join("from-config")).unwrap().collect();
    assert_eq!(stored.len(), 1);
    let session: serde_json::Value = serde_json::from_reader(std::fs::File::open(stored[0].as_ref().unwrap().path()).unwrap()).unwrap();
    assert_eq!(session["strategy_choices"]["step3"], "cot");
}

fn report_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap()).map(|e| (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())).collect();
    files.sort();
    files
}

#[test]
fn contradiction_eval_matches_hand_scores_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["eval", "run", "--step", "3", "--models", "gpt-4,gpt-3.5-turbo"];
    let o = replay(dir.path(), &[&args[..], &["--out", "a"]].concat());
    exit(&o, 0);
    let table = stdout(&o);
    for row in ["Recall               0.750         1.000         0.500         0.750", "Precision            0.333         0.500         0.167         0.667", "Recall               0.250         0.250         0.250         0.250"] {
        assert!(table.contains(row), "missing {row:?} in\n{table}");
    }
    exit(&replay(dir.path(), &[&args[..], &["--out", "b"]].concat()), 0);
    let a = report_files(&dir.path().join("a"));
    assert_eq!(a.len(), 2);
    assert_eq!(a, report_files(&dir.path().join("b")));

    let json = dir.path().join("a").join(&a.iter().find(|(n, _)| n.ends_with(".json")).unwrap().0);
    let o = triz(dir.path(), &["eval", "report", json.to_str().unwrap(), "--out", "again"]);
    exit(&o, 0);
    assert!(stdout(&o).contains("Precision            0.333"));
    assert_eq!(report_files(&dir.path().join("again")), a);

    let o = triz(dir.path(), &["eval", "plot", json.to_str().unwrap(), "--out", "plots"]);
    exit(&o, 0);
    let plots: Vec<String> = report_files(&dir.path().join("plots")).into_iter().map(|(n, _)| n).collect();
    assert_eq!(plots, ["parameter-count.json", "parameter-count.svg", "precision.json", "precision.svg", "recall.json", "recall.svg"]);
    let svg = std::fs::read_to_string(dir.path().join("plots/recall.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("CoT"));
}

#[test]
fn eval_options_select_columns_and_matching() {
    let dir = tempfile::tempdir().unwrap();
    let o = replay(dir.path(), &["eval", "run", "--strategies", "cot,few-shot", "--models", "gpt-4", "--out", "x"]);
    exit(&o, 0);
    let header = stdout(&o).lines().find(|l| l.starts_with("gpt-4")).unwrap().to_owned();
    assert_eq!(header.split_whitespace().collect::<Vec<_>>(), ["gpt-4", "CoT", "Few-shot"]);

    let o = replay(dir.path(), &["eval", "run", "--strategies", "few-shot", "--models", "gpt-4", "--match-mode", "unordered-pair", "--out", "x"]);
    exit(&o, 0);
    let table = stdout(&o);
    assert!(table.contains("unordered-pair"));
    assert!(table.contains("Recall               0.750") && table.contains("Precision            0.667"), "{table}");
}

#[test]
fn solution_eval_writes_similarity_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = replay(dir.path(), &["eval", "run", "--step", "4", "--models", "gpt-4", "--out", "s"]);
    exit(&o, 0);
    assert!(stdout(&o).contains("Similarity"), "{}", stdout(&o));
    let files = report_files(&dir.path().join("s"));
    let csv = String::from_utf8(files.iter().find(|(n, _)| n.ends_with(".csv")).unwrap().1.clone()).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.starts_with("solution,")), "{csv}");
}

#[test]
fn knowledge_queries() {
    let dir = tempfile::tempdir().unwrap();
    let o = triz(dir.path(), &["params", "find", "ease of operation"]);
    exit(&o, 0);
    assert!(stdout(&o).starts_with("33. "), "{}", stdout(&o));
    let o = triz(dir.path(), &["matrix", "lookup", "39", "33"]);
    exit(&o, 0);
    let kb = triz_core::knowledge::KnowledgeBase::bundled();
    for p in kb.matrix_lookup(39, 33).unwrap() {
        assert!(stdout(&o).contains(&p.label()), "{}", stdout(&o));
    }
    let o = triz(dir.path(), &["params", "list"]);
    assert_eq!(stdout(&o).lines().count(), 39);
    let o = triz(dir.path(), &["principles", "list"]);
    assert_eq!(stdout(&o).lines().count(), 40);
    let o = triz(dir.path(), &["principles", "show", "35"]);
    exit(&o, 0);
    exit(&triz(dir.path(), &["principles", "show", "41"]), 2);
    exit(&triz(dir.path(), &["params", "find", "zzzz"]), 1);
}

#[test]
fn knowledge_base_files_validate_and_corruption_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    exit(&triz(dir.path(), &["kb", "validate"]), 0);
    exit(&triz(dir.path(), &["kb", "export", "--out", "kb"]), 0);
    exit(&triz(dir.path(), &["kb", "validate", "--dir", "kb"]), 0);
    let files: Vec<_> = std::fs::read_dir(dir.path().join("kb")).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    // drop the last line of every file
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        std::fs::write(f, lines.join("\n")).unwrap();
    }
    let o = triz(dir.path(), &["kb", "validate", "--dir", "kb"]);
    assert_ne!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn case_tools_round_trip_and_report_findings() {
    let dir = tempfile::tempdir().unwrap();
    exit(&triz(dir.path(), &["cases", "seed", "--out", "seed.toml"]), 0);
    exit(&triz(dir.path(), &["cases", "validate", "seed.toml"]), 0);
    exit(&triz(dir.path(), &["cases", "export", "seed.toml", "--out", "each"]), 0);
    exit(&triz(dir.path(), &["cases", "validate", "each"]), 0);
    let o = triz(dir.path(), &["cases", "import", "each", "--out", "back.toml", "--name", "seed", "--few-shot", "submarine,desktop-fan,beverage-can"]);
    exit(&o, 0);
    let back = triz_core::cases::load_collection(&dir.path().join("back.toml")).unwrap();
    let mut seed = seed_cases();
    let mut got = back.clone();
    seed.cases.sort_by(|a, b| a.id.cmp(&b.id));
    got.cases.sort_by(|a, b| a.id.cmp(&b.id));
    assert_eq!(got, seed);

    std::fs::write(dir.path().join("bad.case.toml"), "id = \"bad\"\ntitle = \"Bad\"\ndomain_tag = \"x\"\n[problem]\nscenario = \"s\"\ncurrent_state = \"c\"\npain_point = \"\"\nrequirement = \"r\"\n[[reference_contradictions]]\nimproving = 4\nworsening = 4\n").unwrap();
    let o = triz(dir.path(), &["cases", "validate", "bad.case.toml"]);
    exit(&o, 3);
    assert!(stdout(&o).contains("pain_point") && stdout(&o).contains("[bad]"), "{}", stdout(&o));
    std::fs::write(dir.path().join("broken.toml"), "id = ").unwrap();
    exit(&triz(dir.path(), &["cases", "validate", "broken.toml"]), 3);
}

#[test]
fn keyword_projection_from_word_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let case = seed_cases().get("in-pipe-robot").unwrap().clone();
    let mut words: Vec<String> = case.solution_keywords.iter().flat_map(|k| k.keyword.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>()).collect();
    words.sort();
    words.dedup();
    // two clusters by keyword source
    let mut text = format!("{} 3\n", words.len());
    for (i, w) in words.iter().enumerate() {
        let gt = case.solution_keywords.iter().any(|k| k.source == "ground-truth" && k.keyword.to_lowercase().split_whitespace().any(|t| t == w));
        let base = if gt { 5.0 } else { -5.0 };
        text.push_str(&format!("{w} {} {} {}\n", base + i as f64 * 0.01, base - i as f64 * 0.02, i as f64 * 0.03));
    }
    std::fs::write(dir.path().join("vectors.txt"), text).unwrap();
    for method in ["pca", "umap"] {
        let out = format!("proj-{method}");
        let o = triz(dir.path(), &["eval", "project", "--case", "in-pipe-robot", "--method", method, "--word-vectors", "vectors.txt", "--out", &out]);
        exit(&o, 0);
        let again = triz(dir.path(), &["eval", "project", "--case", "in-pipe-robot", "--method", method, "--word-vectors", "vectors.txt", "--out", &format!("{out}-2")]);
        exit(&again, 0);
        assert_eq!(report_files(&dir.path().join(&out)), report_files(&dir.path().join(format!("{out}-2"))));
    }
    exit(&triz(dir.path(), &["eval", "project", "--case", "submarine", "--word-vectors", "vectors.txt"]), 2);
}
