use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_r1-reward-lab"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json_lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const REC_SAMPLE: &str = r#"{"id":"r1","task":"rec","query":"the red cup","gt_box":[10,20,110,220]}"#;

#[test]
fn score_rec_perfect_completion() {
    let d = TempDir::new().unwrap();
    write(d.path(), "s.jsonl", REC_SAMPLE);
    write(
        d.path(),
        "c.jsonl",
        r#"{"id":"r1","completions":["<think>t</think><answer>{\"bbox\": [10, 20, 110, 220]}</answer>","garbage"]}"#,
    );
    let o = run(d.path(), &["score", "--task", "rec", "--samples", "s.jsonl", "--completions", "c.jsonl", "--out", "r.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines = json_lines(&d.path().join("r.jsonl"));
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["accuracy"], 1.0);
    assert_eq!(lines[0]["format"], 1);
    assert_eq!(lines[0]["total"], 2.0);
    assert_eq!(lines[1]["total"], 0.0);
    assert_eq!(lines[1]["diagnostics"]["parse_status"], "missing_tags");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("r.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "score");
    assert_eq!(manifest["inputs"]["samples"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["config"]["task"], "rec");
}

#[test]
fn score_ovd_hacked_and_fixed_rewards() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "s.jsonl",
        r#"{"id":"o1","task":"ovd","targets":["dog","cat"],"gt":[{"bbox_2d":[0,0,10,10],"label":"dog"}]}"#,
    );
    let answer = "<think>t</think><answer>```json\\n[{\\\"bbox_2d\\\":[0,0,10,10],\\\"label\\\":\\\"dog\\\"},{\\\"bbox_2d\\\":[20,20,30,30],\\\"label\\\":\\\"cat\\\"},{\\\"bbox_2d\\\":[40,20,50,30],\\\"label\\\":\\\"cat\\\"},{\\\"bbox_2d\\\":[60,20,70,30],\\\"label\\\":\\\"cat\\\"}]\\n```</answer>";
    write(d.path(), "c.jsonl", &format!(r#"{{"id":"o1","completions":["{answer}"]}}"#));
    for (reward, want) in [("map", 1.0), ("odlength", 0.25)] {
        let o = run(
            d.path(),
            &["score", "--task", "ovd", "--samples", "s.jsonl", "--completions", "c.jsonl", "--reward", reward, "--out", "r.jsonl"],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        let line = &json_lines(&d.path().join("r.jsonl"))[0];
        assert_eq!(line["accuracy"], want, "{reward}");
        assert_eq!(line["l_pred"], 4);
    }
}

#[test]
fn score_rejects_unknown_and_empty_groups() {
    let d = TempDir::new().unwrap();
    write(d.path(), "s.jsonl", REC_SAMPLE);
    write(d.path(), "unknown.jsonl", r#"{"id":"nope","completions":["x"]}"#);
    write(d.path(), "empty.jsonl", r#"{"id":"r1","completions":[]}"#);
    for c in ["unknown.jsonl", "empty.jsonl"] {
        let o = run(d.path(), &["score", "--task", "rec", "--samples", "s.jsonl", "--completions", c, "--out", "r.jsonl"]);
        assert_eq!(o.status.code(), Some(2), "{c}");
        assert!(!d.path().join("r.jsonl").exists());
        assert!(!d.path().join("r.jsonl.manifest.json").exists());
    }
    let o = run(d.path(), &["score", "--task", "ovd", "--samples", "s.jsonl", "--completions", "empty.jsonl", "--out", "r.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
}

fn eval_report(dir: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["eval", "--preds", "p.jsonl", "--gt", "g.jsonl", "--out", "report.json"];
    args.extend_from_slice(extra);
    let o = run(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn eval_perfect_predictions() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "g.jsonl",
        "{\"id\":\"a\",\"task\":\"ovd\",\"targets\":[\"dog\"],\"gt\":[{\"bbox_2d\":[0,0,10,10],\"label\":\"dog\"}]}\n\
         {\"id\":\"b\",\"task\":\"ovd\",\"targets\":[\"cat\"],\"gt\":[{\"bbox_2d\":[5,5,50,50],\"label\":\"cat\"}]}\n",
    );
    write(
        d.path(),
        "p.jsonl",
        "{\"id\":\"a\",\"detections\":[{\"bbox_2d\":[0,0,10,10],\"label\":\"dog\"}]}\n\
         {\"id\":\"b\",\"detections\":[{\"bbox_2d\":[5,5,50,50],\"label\":\"cat\"}]}\n",
    );
    for agg in ["per-image", "pooled"] {
        let r = eval_report(d.path(), &["--aggregate", agg]);
        for m in ["map", "ap50", "gp", "gr", "nms-ap"] {
            assert_eq!(r["metrics"][m]["value"], 1.0, "{agg} {m}");
        }
    }
}

#[test]
fn eval_hacking_fixture_and_greedy_counts() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "g.jsonl",
        r#"{"id":"a","task":"ovd","targets":["dog","cat"],"gt":[{"bbox_2d":[0,0,10,10],"label":"dog"}]}"#,
    );
    write(
        d.path(),
        "p.jsonl",
        r#"{"id":"a","detections":[{"bbox_2d":[0,0,10,10],"label":"dog"},{"bbox_2d":[20,20,30,30],"label":"cat"},{"bbox_2d":[40,20,50,30],"label":"cat"},{"bbox_2d":[60,20,70,30],"label":"cat"}]}"#,
    );
    let r = eval_report(d.path(), &["--metrics", "map"]);
    assert_eq!(r["metrics"]["map"]["value"], 1.0);
    let r = eval_report(d.path(), &["--metrics", "map", "--category-mode", "full"]);
    assert_eq!(r["metrics"]["map"]["value"], 0.5);

    write(
        d.path(),
        "p.jsonl",
        r#"{"id":"a","detections":[{"bbox_2d":[0,0,10,10],"label":"dog"},{"bbox_2d":[0,0,10,10],"label":"dog"}]}"#,
    );
    let r = eval_report(d.path(), &["--metrics", "gp,gr", "--iou", "0.5"]);
    assert_eq!(r["metrics"]["gp"]["value"], 0.5);
    assert_eq!(r["metrics"]["gr"]["value"], 1.0);
}

#[test]
fn eval_rejects_unknown_metric() {
    let d = TempDir::new().unwrap();
    write(d.path(), "g.jsonl", "");
    write(d.path(), "p.jsonl", "");
    let o = run(d.path(), &["eval", "--preds", "p.jsonl", "--gt", "g.jsonl", "--metrics", "map,f1", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.path().join("r.json").exists());
}

fn trace_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn sim_trends_and_determinism() {
    let d = TempDir::new().unwrap();
    let sim = |reward: &str, trace: &str| {
        let o = run(d.path(), &["sim", "--reward", reward, "--steps", "200", "--seed", "42", "--beta", "0", "--trace", trace]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    sim("map", "map.csv");
    sim("map", "map_again.csv");
    sim("odlength", "len.csv");
    let first = std::fs::read(d.path().join("map.csv")).unwrap();
    assert_eq!(first, std::fs::read(d.path().join("map_again.csv")).unwrap());
    let header = std::fs::read_to_string(d.path().join("map.csv")).unwrap();
    assert!(header.starts_with("step,mean_reward,mean_pred_count,mean_completion_chars,mean_negative_emissions,kl_mean\n"));

    let hacked = trace_rows(&d.path().join("map.csv"));
    assert_eq!(hacked.len(), 200);
    assert!(hacked[199][2] > 2.0 * hacked[0][2]);
    assert!(hacked[199][3] > hacked[0][3]);
    let fixed = trace_rows(&d.path().join("len.csv"));
    assert!((fixed[199][2] - 2.0).abs() < 0.4);
    assert!(fixed[199][4] < 0.1);

    let params: Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("map.params.json")).unwrap()).unwrap();
    assert!(params["presence_gate"].is_number());
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("map.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config"]["grpo"]["beta"], 0.0);
}

#[test]
fn sim_rejects_zero_steps() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), &["sim", "--steps", "0", "--trace", "t.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.path().join("t.csv").exists());
}

fn coco_fixture() -> String {
    let mut anns = Vec::new();
    for k in 0..12 {
        anns.push(format!(r#"{{"id":{k},"image_id":1,"category_id":1,"bbox":[{k},0,5,5],"area":25}}"#));
    }
    for k in 12..15 {
        anns.push(format!(r#"{{"id":{k},"image_id":1,"category_id":18,"bbox":[{k},10,5,5]}}"#));
    }
    format!(
        r#"{{"info":{{"description":"fixture"}},"images":[{{"id":1,"width":640,"height":480,"file_name":"a.jpg"}}],"annotations":[{}],"categories":[{{"id":1,"name":"person"}},{{"id":18,"name":"dog"}}]}}"#,
        anns.join(",")
    )
}

#[test]
fn dataset_filter_coco_keeps_only_dog() {
    let d = TempDir::new().unwrap();
    write(d.path(), "instances.json", &coco_fixture());
    let o = run(d.path(), &["dataset", "filter-coco", "--in", "instances.json", "--max-boxes", "10", "--scope", "image", "--out", "filtered.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("filtered.json")).unwrap()).unwrap();
    let anns = v["annotations"].as_array().unwrap();
    assert_eq!(anns.len(), 3);
    assert!(anns.iter().all(|a| a["category_id"] == 18));
    assert_eq!(v["info"]["description"], "fixture");
    assert_eq!(v["images"][0]["file_name"], "a.jpg");
    assert!(d.path().join("filtered.json.manifest.json").exists());
}

#[test]
fn dataset_negatives_deterministic() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "samples.jsonl",
        "{\"id\":\"a\",\"task\":\"ovd\",\"targets\":[\"dog\"],\"gt\":[{\"bbox_2d\":[0,0,5,5],\"label\":\"dog\"}]}\n\
         {\"id\":\"b\",\"task\":\"ovd\",\"targets\":[\"cat\",\"car\"],\"gt\":[{\"bbox_2d\":[0,0,5,5],\"label\":\"cat\"},{\"bbox_2d\":[1,1,5,5],\"label\":\"car\"}]}\n\
         {\"id\":\"c\",\"task\":\"ovd\",\"targets\":[\"bus\"],\"gt\":[{\"bbox_2d\":[0,0,5,5],\"label\":\"bus\"}]}\n",
    );
    for out in ["x.jsonl", "y.jsonl"] {
        let o = run(d.path(), &["dataset", "negatives", "--in", "samples.jsonl", "--seed", "7", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let x = std::fs::read(d.path().join("x.jsonl")).unwrap();
    assert_eq!(x, std::fs::read(d.path().join("y.jsonl")).unwrap());
    let lines = json_lines(&d.path().join("x.jsonl"));
    assert_eq!(lines.len(), 3);
    for l in &lines {
        let n = l["targets"].as_array().unwrap().len();
        assert!(n >= 2);
    }
}

#[test]
fn dataset_reports_missing_and_malformed_input() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), &["dataset", "filter-coco", "--in", "missing.json", "--out", "f.json"]);
    assert_eq!(o.status.code(), Some(2));
    write(d.path(), "bad.jsonl", "{\"id\":\"a\",\"task\":\"ovd\",\"targets\":[],\"gt\":[]}\nnot json\n");
    let o = run(d.path(), &["dataset", "negatives", "--in", "bad.jsonl", "--out", "n.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert!(!d.path().join("n.jsonl").exists());
}

#[test]
fn reruns_reproduce_manifest_and_output() {
    let d = TempDir::new().unwrap();
    write(d.path(), "instances.json", &coco_fixture());
    let go = || {
        let o = run(d.path(), &["dataset", "filter-coco", "--in", "instances.json", "--out", "f.json"]);
        assert!(o.status.success());
        (
            std::fs::read(d.path().join("f.json")).unwrap(),
            std::fs::read(d.path().join("f.json.manifest.json")).unwrap(),
        )
    };
    assert_eq!(go(), go());
}

#[test]
fn thread_env_is_validated() {
    let d = TempDir::new().unwrap();
    let o = bin()
        .current_dir(d.path())
        .env("R1_REWARD_LAB_THREADS", "zero")
        .args(["sim", "--steps", "1", "--trace", "t.csv"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .current_dir(d.path())
        .env("R1_REWARD_LAB_THREADS", "1")
        .args(["sim", "--steps", "3", "--trace", "t.csv"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}
