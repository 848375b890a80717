mod common;

use std::fs;
use std::path::PathBuf;
use std::process::Command;

use aerocontact::cli::{parse_grid, RunConfig, CONFIG_KEYS};
use aerocontact::cloud::{save_cloud, CloudFormat};
use aerocontact::models::load_model;
use aerocontact::synth;

const SMALL: &str = "n_o = 120\nn_t = 30\nn_c = 100\nn_i = 100\nn_q = 200\nsteps = 400\nviewpoint = 0,0,2\n";
const LINK: &str = "0 0 1 1 0 0 0  0 0 0 1 0 0 0\n";

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture { dir: tempfile::tempdir().unwrap() };
        save_cloud(&common::box_demo().cloud, &f.path("box.xyz"), CloudFormat::XyzText).unwrap();
        fs::write(f.path("links.txt"), LINK).unwrap();
        fs::write(f.path("small.cfg"), SMALL).unwrap();
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> (i32, String) {
        let out = Command::new(env!("CARGO_BIN_EXE_aerocontact")).current_dir(self.dir.path()).args(args).output().unwrap();
        (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
    }

    fn learn(&self, out: &str, extra: &[&str]) -> i32 {
        let mut a = vec!["learn", "--cloud", "box.xyz", "--links", "links.txt", "--config", "small.cfg", "--out", out];
        a.extend_from_slice(extra);
        self.run(&a).0
    }
}

#[test]
fn learn_infer_and_heatmap() {
    let f = Fixture::new();
    assert_eq!(f.learn("m.json", &[]), 0);
    let (code, table) = f.run(&["infer", "--model", "m.json", "--cloud", "box.xyz", "--config", "small.cfg", "--out", "c.json", "-k", "3"]);
    assert_eq!(code, 0);
    assert!(table.starts_with("rank"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(f.path("c.json")).unwrap()).unwrap();
    let top = &v["candidates"][0];
    assert_eq!(top["rank"], 1);
    assert_eq!(top["feasible"], true);
    assert_eq!(top["drones"][0]["l"].as_array().unwrap().len(), 7);
    assert!(top["drones"][0]["nearest"].is_u64());

    let grid = "x=-0.1:0.1:10,y=-0.1:0.1:10,z=0";
    let (code, _) = f.run(&["eval-density", "--model", "m.json", "--cloud", "box.xyz", "--config", "small.cfg", "--grid", grid, "--out", "h.txt"]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(f.path("h.txt")).unwrap();
    let rows: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 100);
    // the hottest cell of the heat map is near the demonstrated contact
    let best = rows
        .iter()
        .map(|r| r.split_whitespace().map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .max_by(|a, b| a[4].total_cmp(&b[4]))
        .unwrap();
    assert!((best[1].powi(2) + best[2].powi(2)).sqrt() < 0.05, "{best:?}");

    let far = "x=3:4:3,y=3:4:3,z=2";
    let (code, _) = f.run(&["eval-density", "--model", "m.json", "--cloud", "box.xyz", "--config", "small.cfg", "--grid", far, "--out", "far.txt"]);
    assert_eq!(code, 0);
    for r in fs::read_to_string(f.path("far.txt")).unwrap().lines().skip(1) {
        assert!(r.split_whitespace().last().unwrap().parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn learning_twice_gives_the_same_bytes() {
    let f = Fixture::new();
    assert_eq!(f.learn("a.json", &["--seed", "4"]), 0);
    assert_eq!(f.learn("b.json", &["--seed", "4"]), 0);
    assert_eq!(fs::read(f.path("a.json")).unwrap(), fs::read(f.path("b.json")).unwrap());
}

#[test]
fn inference_twice_gives_the_same_bytes() {
    let f = Fixture::new();
    assert_eq!(f.learn("m.json", &[]), 0);
    for out in ["a.json", "b.json"] {
        let (code, _) = f.run(&["--threads", "2", "infer", "--model", "m.json", "--cloud", "box.xyz", "--config", "small.cfg", "--out", out]);
        assert_eq!(code, 0);
    }
    assert_eq!(fs::read(f.path("a.json")).unwrap(), fs::read(f.path("b.json")).unwrap());
}

#[test]
fn flags_override_the_file() {
    let f = Fixture::new();
    fs::write(f.path("seeded.cfg"), format!("{SMALL}seed = 1\n")).unwrap();
    let a = ["learn", "--cloud", "box.xyz", "--links", "links.txt", "--config", "seeded.cfg", "--out", "m.json", "--seed", "7"];
    assert_eq!(f.run(&a).0, 0);
    assert_eq!(load_model::<f64>(&f.path("m.json")).unwrap().meta.seed, 7);

    let mut cfg = RunConfig::default();
    cfg.apply_file(&f.path("seeded.cfg")).unwrap();
    assert_eq!(cfg.learn.seed, 1);
    assert_eq!(cfg.transfer.n_q, 200);
    cfg.set("seed", "7").unwrap();
    assert_eq!((cfg.learn.seed, cfg.transfer.seed), (7, 7));
}

#[test]
fn every_setting_is_a_flag() {
    let f = Fixture::new();
    let (code, out) = f.run(&["version"]);
    assert_eq!(code, 0);
    for key in CONFIG_KEYS {
        assert!(out.contains(key));
        let flag = format!("--{}", key.replace('_', "-"));
        let help = Command::new(env!("CARGO_BIN_EXE_aerocontact")).args(["infer", "--help"]).output().unwrap();
        assert!(String::from_utf8_lossy(&help.stdout).contains(&flag), "{flag}");
    }
}

#[test]
fn defaults_use_the_standard_counts() {
    let c = RunConfig::default();
    assert_eq!((c.learn.n_o, c.learn.n_t, c.learn.n_c), (500, 50, 500));
    assert_eq!((c.transfer.n_i, c.transfer.n_j, c.transfer.n_q), (500, 5, 1000));
}

#[test]
fn usage_errors_exit_2() {
    let f = Fixture::new();
    assert_eq!(f.run(&["learn", "--cloud", "box.xyz"]).0, 2);
    assert_eq!(f.run(&["frobnicate"]).0, 2);
    fs::write(f.path("none.txt"), "# no drones\n").unwrap();
    let a = ["learn", "--cloud", "box.xyz", "--links", "none.txt", "--config", "small.cfg", "--out", "m.json"];
    assert_eq!(f.run(&a).0, 2);
    assert!(!f.path("m.json").exists());
    assert_eq!(f.learn("m.json", &["--n-q", "many"]), 2);
    assert_eq!(f.learn("m.json", &["--threads", "0"]), 2);
}

#[test]
fn parse_errors_exit_3() {
    let f = Fixture::new();
    fs::write(f.path("bad.xyz"), "0 0 0\n1 2\n").unwrap();
    assert_eq!(f.run(&["learn", "--cloud", "bad.xyz", "--links", "links.txt", "--out", "m.json"]).0, 3);
    assert_eq!(f.run(&["learn", "--cloud", "missing.xyz", "--links", "links.txt", "--out", "m.json"]).0, 3);
    fs::write(f.path("bad.cfg"), "steps = 10\nwhat is this\n").unwrap();
    let a = ["learn", "--cloud", "box.xyz", "--links", "links.txt", "--config", "bad.cfg", "--out", "m.json"];
    assert_eq!(f.run(&a).0, 3);

    assert_eq!(f.learn("m.json", &[]), 0);
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(f.path("m.json")).unwrap()).unwrap();
    v["schema_version"] = serde_json::Value::from(2);
    fs::write(f.path("v2.json"), v.to_string()).unwrap();
    let (code, _) = f.run(&["infer", "--model", "v2.json", "--cloud", "box.xyz", "--config", "small.cfg", "--out", "c.json"]);
    assert_eq!(code, 3);
    assert!(!f.path("c.json").exists());
}

#[test]
fn mismatched_payload_exits_4() {
    let f = Fixture::new();
    assert_eq!(f.learn("m.json", &[]), 0);
    fs::write(f.path("tiny.xyz"), "0 0 0\n0.01 0 0\n0 0.01 0\n0.01 0.01 0\n").unwrap();
    let (code, _) = f.run(&["infer", "--model", "m.json", "--cloud", "tiny.xyz", "--config", "small.cfg", "--out", "c.json"]);
    assert_eq!(code, 4);
}

#[test]
fn nothing_feasible_exits_5() {
    let f = Fixture::new();
    assert_eq!(f.learn("m.json", &[]), 0);
    let (code, _) = f.run(&[
        "infer", "--model", "m.json", "--cloud", "box.xyz", "--config", "small.cfg", "--out", "c.json", "--contact-radius", "1e-12",
    ]);
    assert_eq!(code, 5);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(f.path("c.json")).unwrap()).unwrap();
    assert!(v["candidates"].as_array().unwrap().iter().all(|c| c["feasible"] == false));
}

#[test]
fn ply_clouds_are_accepted() {
    let f = Fixture::new();
    let c = common::visible(synth::box_surface(0.3, 0.3, 0.1, 0.01), 0.1);
    save_cloud(&c, &f.path("box.ply"), CloudFormat::PlyAscii).unwrap();
    let a = ["learn", "--cloud", "box.ply", "--links", "links.txt", "--config", "small.cfg", "--out", "p.json"];
    assert_eq!(f.run(&a).0, 0);
    assert_eq!(f.learn("x.json", &[]), 0);
    assert_eq!(fs::read(f.path("p.json")).unwrap(), fs::read(f.path("x.json")).unwrap());
}

#[test]
fn grid_specs() {
    assert_eq!(parse_grid("x=0:1:10,y=0:1:10,z=0").unwrap().len(), 100);
    assert_eq!(parse_grid("x=0.5").unwrap(), vec![aerocontact::Vec3::new(0.5, 0.0, 0.0)]);
    for bad in ["", "w=1", "x=0:1:0", "x=0:1", "x=a"] {
        assert!(parse_grid(bad).is_err(), "{bad}");
    }
}
