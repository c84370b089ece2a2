//! Builds a directory of CLI inputs and the argument lists that exercise
//! every subcommand on them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde_json::json;

use super::{fixture, random_probs, rng};

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

fn jsonl(values: impl IntoIterator<Item = serde_json::Value>) -> String {
    let mut out = String::new();
    for v in values {
        writeln!(out, "{v}").unwrap();
    }
    out
}

const CONTEXTS: [(&str, &[&str], &[&str]); 3] = [
    ("c1", &["nuclear", "astrophysics", "."], &["nuclear", "astro", "##physics", "."]),
    ("c2", &["I", "can", "not", "understand", "it"], &["i", "cannot", "understand", "it"]),
    ("c3", &["Accommodation", "was", "scarce"], &["acc", "##ommo", "##dation", "was", "sc", "##arce"]),
];

impl Workspace {
    pub fn new() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        ws.write_all();
        ws
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, content: &str) {
        let path = self.path(name);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, content).unwrap();
    }

    fn write_all(&self) {
        let mut r = rng(2024);
        let mut tokens = Vec::new();
        let (mut student, mut teacher, mut gold) = (Vec::new(), Vec::new(), Vec::new());
        for (id, s, t) in CONTEXTS {
            let toks = |words: &[&str]| -> Vec<serde_json::Value> {
                words
                    .iter()
                    .map(|w| match w.strip_prefix("##") {
                        Some(_) => json!({"text": w, "cont": true}),
                        None => json!({"text": w, "cont": false}),
                    })
                    .collect()
            };
            tokens.push(json!({"id": id, "source": "student", "tokens": toks(s)}));
            tokens.push(json!({"id": id, "source": "teacher", "tokens": toks(t)}));
            let logits = |r: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<f64> {
                (0..n).map(|_| r.random_range(-4.0..4.0)).collect()
            };
            student.push(json!({"id": id, "start": logits(&mut r, s.len()), "end": logits(&mut r, s.len())}));
            teacher.push(json!({"id": id, "start": logits(&mut r, t.len()), "end": logits(&mut r, t.len())}));
            gold.push(json!({"id": id, "start": 1, "end": s.len() - 1}));
        }
        self.write("tokens.jsonl", &jsonl(tokens));
        self.write("student_logits.jsonl", &jsonl(student));
        self.write("teacher_logits.jsonl", &jsonl(teacher));
        self.write("gold.jsonl", &jsonl(gold));

        let ids: Vec<String> = distal_core::qa_data::load_squad(fixture("squad_eval_200.json")).unwrap().ids();
        for cycle in 0..=10 {
            let probs = random_probs(&mut r, &ids);
            let records = ids.iter().map(|id| {
                let cands: Vec<_> = probs[id]
                    .iter()
                    .enumerate()
                    .map(|(i, p)| json!({"text": format!("span {i}"), "prob": p, "start": i, "end": i}))
                    .collect();
                json!({"id": id, "candidates": cands})
            });
            let text = jsonl(records);
            if cycle == 0 {
                self.write("preds.jsonl", &text);
            }
            self.write(&format!("cycles/cycle_{cycle}.jsonl"), &text);
        }
        let embeddings = ids.iter().map(|id| {
            let v: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
            json!({"id": id, "vec": v})
        });
        self.write("embeddings.jsonl", &jsonl(embeddings));

        let (mut a, mut b) = (serde_json::Map::new(), serde_json::Map::new());
        for id in &ids {
            let sa = r.random_bool(0.7) as u8;
            let sb = r.random_bool(0.6) as u8;
            a.insert(id.clone(), json!({"em": sa, "f1": sa as f64 * 0.5 + 0.5 * r.random::<f64>()}));
            b.insert(id.clone(), json!({"em": sb, "f1": sb as f64 * 0.5 + 0.5 * r.random::<f64>()}));
        }
        self.write("system_a.json", &serde_json::Value::Object(a).to_string());
        self.write("system_b.json", &serde_json::Value::Object(b).to_string());
        self.write("config.json", r#"{"seed": 5, "select": {"budget": 12, "top_n": 3}}"#);
    }

    /// One argument list per subcommand (several for some), without `--output`.
    pub fn invocations(&self) -> Vec<(&'static str, Vec<String>)> {
        let p = |name: &str| self.path(name).display().to_string();
        let dataset = fixture("squad_eval_200.json").display().to_string();
        let answers = fixture("squad_eval_200_predictions.json").display().to_string();
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        vec![
            ("align", [s(&["align", "--tokens"]), vec![p("tokens.jsonl")]].concat()),
            (
                "align",
                [
                    s(&["align", "--tokens"]),
                    vec![p("tokens.jsonl")],
                    s(&["--teacher-logits"]),
                    vec![p("teacher_logits.jsonl")],
                ]
                .concat(),
            ),
            (
                "resample",
                [s(&["resample", "--logits"]), vec![p("student_logits.jsonl")], s(&["--target-len", "9"])].concat(),
            ),
            (
                "resample",
                [
                    s(&["resample", "--method", "linear", "--logits"]),
                    vec![p("student_logits.jsonl")],
                    s(&["--like"]),
                    vec![p("teacher_logits.jsonl")],
                ]
                .concat(),
            ),
            (
                "loss",
                [
                    s(&["loss", "--interpolate", "--student"]),
                    vec![p("student_logits.jsonl")],
                    s(&["--teacher"]),
                    vec![p("teacher_logits.jsonl")],
                    s(&["--tokens"]),
                    vec![p("tokens.jsonl")],
                    s(&["--gold"]),
                    vec![p("gold.jsonl")],
                ]
                .concat(),
            ),
            (
                "evaluate",
                [s(&["evaluate", "--dataset"]), vec![dataset.clone()], s(&["--predictions"]), vec![answers]].concat(),
            ),
            (
                "select",
                [
                    s(&["select", "--strategy", "lc_cluster", "--budget", "20", "--seed", "3", "--dataset"]),
                    vec![dataset.clone()],
                    s(&["--preds"]),
                    vec![p("preds.jsonl")],
                    s(&["--embeddings"]),
                    vec![p("embeddings.jsonl")],
                ]
                .concat(),
            ),
            (
                "select",
                [
                    s(&["select", "--strategy", "random", "--dataset"]),
                    vec![dataset.clone()],
                    s(&["--config"]),
                    vec![p("config.json")],
                ]
                .concat(),
            ),
            (
                "simulate",
                [
                    s(&["simulate", "--strategy", "entropy", "--seed", "9", "--dataset"]),
                    vec![dataset],
                    s(&["--preds-dir"]),
                    vec![p("cycles")],
                ]
                .concat(),
            ),
            (
                "bootstrap",
                [
                    s(&["bootstrap", "--B", "2000", "--fraction", "0.5", "--seed", "1", "--system-a"]),
                    vec![p("system_a.json")],
                    s(&["--system-b"]),
                    vec![p("system_b.json")],
                ]
                .concat(),
            ),
        ]
    }
}

pub fn binary() -> &'static Path {
    Path::new(env!("CARGO_BIN_EXE_distal"))
}
