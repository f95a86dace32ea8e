use std::fs;
use std::path::Path;

use fracperc::{RealizationTree, RetentionSpec};
use tempfile::TempDir;

use super::*;
use crate::raster::Raster;

fn config(text: &str, out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_toml(text).unwrap();
    c.run.out_dir = out.to_path_buf();
    c
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn kv<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("missing {key}"))
}

#[test]
fn empty_model_gives_empty_raster() {
    let dir = TempDir::new().unwrap();
    let c = config("[model]\npreset = \"homogeneous\"\np = 0.0\n[run]\ndepth = 3\ntrials = 4\n[task]\nkind = \"simulate\"\n", dir.path());
    run(&c).unwrap();
    assert!(read(dir.path(), "counts.csv").contains("\n1,0\n"));
    let r = Raster::from_ppm(&fs::read(dir.path().join("level3.ppm")).unwrap()).unwrap();
    assert_eq!((r.width, r.height, r.dark_count()), (27, 27, 0));
}

#[test]
fn raster_agrees_with_survival_set() {
    let dir = TempDir::new().unwrap();
    let c = config("[model]\npreset = \"homogeneous\"\np = 0.6\nbase = 2\n[run]\ndepth = 5\nseed = 11\ntrials = 2\n[task]\nkind = \"simulate\"\n", dir.path());
    run(&c).unwrap();
    let r = Raster::from_ppm(&fs::read(dir.path().join("level5.ppm")).unwrap()).unwrap();
    let spec = RetentionSpec::homogeneous(2, 2, 0.6).unwrap();
    let tree = RealizationTree::sample(&spec, 5, 11);
    let kept: Vec<Vec<u64>> = tree.survival_set(5).unwrap().iter().map(|w| w.coords(&spec).unwrap()).collect();
    for u in 0..32 {
        for v in 0..32 {
            let dark = r.is_dark(u as usize, 31 - v as usize);
            assert_eq!(dark, kept.contains(&vec![u, v]), "pixel ({u}, {v})");
        }
    }
    // the saved tree decodes to the same realization
    assert_eq!(tasks::load_tree(&dir.path().join("tree.fpt")).unwrap(), tree);
}

#[test]
fn same_config_twice_is_byte_identical() {
    let text = "[model]\npreset = \"carpet\"\np = 0.8\nq = 0.5\n[run]\ndepth = 4\ntrials = 20\nseed = 3\n[task]\nkind = \"simulate\"\n";
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let mut ca = config(text, a.path());
    let mut cb = config(text, b.path());
    ca.run.threads = 1;
    cb.run.threads = 3;
    let pa = run(&ca).unwrap();
    run(&cb).unwrap();
    for p in pa {
        let name = p.file_name().unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
}

#[test]
fn config_is_echoed() {
    let dir = TempDir::new().unwrap();
    let c = config("[model]\npreset = \"homogeneous\"\np = 0.5\n[run]\ndepth = 2\ntrials = 3\nseed = 77\n[task]\nkind = \"simulate\"\n", dir.path());
    run(&c).unwrap();
    for name in ["counts.csv", "survival.csv", "tree.fpt.toml"] {
        assert!(read(dir.path(), name).contains("# seed = 77\n"), "{name}");
    }
    let ppm = fs::read(dir.path().join("level2.ppm")).unwrap();
    assert!(String::from_utf8_lossy(&ppm[..200.min(ppm.len())]).contains("# seed = 77\n"));
}

#[test]
fn palis_analysis() {
    let dir = TempDir::new().unwrap();
    let c = config("[model]\nprobs = [0.52, 0.5, 0.72]\nbase = 3\n", dir.path());
    run(&c).unwrap();
    let s = read(dir.path(), "analyze.txt");
    let g: f64 = kv(&s, "gamma_product").parse().unwrap();
    assert!((g - 1.0272).abs() < 1e-3);
    assert_eq!(kv(&s, "interval_verdict"), "NoIntervalAS");
    assert_eq!(kv(&s, "measure_verdict"), "PositiveMeasureAS");
    assert_eq!(kv(&s, "quoted_gamma_1_matches"), "false");
    let direct: f64 = kv(&s, "gamma_direct_1").parse().unwrap();
    assert!((direct - 0.9944).abs() < 1e-12);
}

#[test]
fn planar_analysis_reports_stage() {
    let dir = TempDir::new().unwrap();
    let c = config("[model]\npreset = \"homogeneous\"\np = 0.4\n", dir.path());
    run(&c).unwrap();
    let s = read(dir.path(), "analyze.txt");
    assert_eq!(kv(&s, "stage"), "IV-or-higher");
    assert_eq!(kv(&s, "interval_flag"), "true");
}

#[test]
fn every_task_runs() {
    let cases = [
        ("project", "[model]\npreset = \"homogeneous\"\np = 0.5\n[run]\ndepth = 4\ntrials = 10\n[task]\nkind = \"project\"\ninterval = [-0.2, 0.2]\n", vec!["projection.csv", "box_counts.csv", "visible.csv", "persistence.csv", "project.txt"]),
        ("radial", "[model]\npreset = \"homogeneous\"\np = 0.5\n[run]\ndepth = 3\n[task]\nkind = \"project\"\nprojection = \"coradial\"\ncenter = [-1.0, 0.5]\n", vec!["projection.csv", "project.txt"]),
        ("check", "[model]\npreset = \"homogeneous\"\np = 0.75\n[task]\nkind = \"check\"\nsweep_deg = [40.0, 50.0]\n", vec!["check.txt", "cover.txt"]),
        ("slice", "[model]\npreset = \"homogeneous\"\np = 0.34\n[run]\ndepth = 5\ndepths = [2, 3]\ntrials = 3\n[task]\nkind = \"slice\"\nalphas_deg = [30.0]\n", vec!["slice.csv", "slice.txt", "dimension.csv"]),
        ("sumset", "[model]\npreset = \"homogeneous\"\np = 0.6\ndim = 1\n[run]\ndepth = 3\ndepths = [1, 2, 3]\ntrials = 5\n[task]\nkind = \"sumset\"\nfactors = [0.6, 0.6, 0.6]\ninterval = [1.4, 1.6]\n", vec!["sumset.csv", "sumset.txt", "sum_trial.csv"]),
        ("render", "[model]\npreset = \"homogeneous\"\np = 0.7\n[run]\ndepth = 3\n[task]\nkind = \"render\"\nalpha_deg = 30.0\n", vec!["level3.ppm", "projection3.ppm"]),
    ];
    for (label, text, files) in cases {
        let dir = TempDir::new().unwrap();
        run(&config(text, dir.path())).unwrap_or_else(|e| panic!("{label}: {e}"));
        for f in files {
            assert!(dir.path().join(f).exists(), "{label}: {f}");
        }
    }
}

#[test]
fn check_reports_condition_b() {
    let dir = TempDir::new().unwrap();
    let c = config("[model]\npreset = \"homogeneous\"\np = 0.6\nbase = 2\n[task]\nkind = \"check\"\n", dir.path());
    run(&c).unwrap();
    assert_eq!(kv(&read(dir.path(), "check.txt"), "condition_b_holds"), "true");
}

#[test]
fn render_reads_saved_trees() {
    let dir = TempDir::new().unwrap();
    let sim = config("[model]\npreset = \"homogeneous\"\np = 0.6\nbase = 2\n[run]\ndepth = 4\nseed = 5\ntrials = 1\n[task]\nkind = \"simulate\"\n", dir.path());
    run(&sim).unwrap();
    let out = dir.path().join("render");
    let tree = dir.path().join("tree.fpt");
    let status = main_with_args([
        "fracperc".as_ref(),
        "render".as_ref(),
        "--tree".as_ref(),
        tree.as_os_str(),
        "--level".as_ref(),
        "3".as_ref(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    assert_eq!(status, 0);
    let r = Raster::from_ppm(&fs::read(out.join("level3.ppm")).unwrap()).unwrap();
    let t = tasks::load_tree(&tree).unwrap();
    assert_eq!(r.dark_count(), t.count(3).unwrap());
}

#[test]
fn exit_statuses() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[model]\npreset = \"homogeneous\"\np = \"high\"\n").unwrap();
    let out = dir.path().join("o");
    let s = |args: &[&str]| {
        let mut v = vec!["fracperc".to_string()];
        v.extend(args.iter().map(|a| a.to_string()));
        v.extend(["--out".into(), out.to_string_lossy().into_owned()]);
        main_with_args(v)
    };
    assert_eq!(s(&["analyze", "--config", bad.to_str().unwrap()]), 2);
    assert_eq!(s(&["analyze", "--config", "/nonexistent.toml"]), 2);
    assert_eq!(s(&["analyze", "--preset", "homogeneous", "--p", "1.5"]), 2);
    assert_eq!(s(&["frobnicate"]), 2);
    // a planar task on a line model fails at run time
    assert_eq!(s(&["project", "--probs", "0.5,0.5", "--base", "2"]), 1);
    assert_eq!(s(&["analyze", "--preset", "homogeneous", "--p", "0.3", "--base", "2"]), 0);
    assert!(out.join("analyze.txt").exists());
}

#[test]
fn flags_override_config() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "[model]\npreset = \"homogeneous\"\np = 0.5\n[run]\nseed = 1\n").unwrap();
    let cli = Cli::try_parse_from(["fracperc", "slice", "-c", path.to_str().unwrap(), "--seed", "9", "--p", "0.2"]).unwrap();
    let c = cli.resolve().unwrap();
    assert_eq!((c.run.seed, c.model.p, c.task.kind), (9, Some(0.2), TaskKind::Slice));
}

#[test]
fn oversized_samples_are_task_errors() {
    let dir = TempDir::new().unwrap();
    let c = config("[model]\npreset = \"homogeneous\"\np = 1.0\n[run]\ndepth = 16\n[task]\nkind = \"simulate\"\n", dir.path());
    assert_eq!(run(&c).unwrap_err().status(), 1);
}
