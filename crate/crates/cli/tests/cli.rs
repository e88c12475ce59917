use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qsurf::dataset::{fit_normalizer, kfold_split, load_csv, LabelColumn};
use qsurf::harness::{cross_validate, derive_seed, CvOptions};
use qsurf::models::{Hyperparams, ModelKind};

fn qsurf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsurf"))
        .args(args)
        .env("QSURF_THREADS", "2")
        .output()
        .expect("run qsurf")
}

fn ok(args: &[&str]) -> Output {
    let out = qsurf(args);
    assert!(
        out.status.success(),
        "qsurf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["gen-data", "quadratic", "--m", "40", "--seed", "7", "--out", p(&path)];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

#[test]
fn gen_data_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.csv", &[]);
    let b = gen(dir.path(), "b.csv", &[]);
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("x1,x2,y\n"));
    for kind in ["normal", "linear"] {
        let out = ok(&["gen-data", kind, "--m", "5", "--seed", "3"]);
        assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 11);
    }
}

#[test]
fn train_writes_model_and_qp_dump() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.csv", &["--separable"]);
    let model = dir.path().join("model.json");
    ok(&[
        "train", "--model", "ls-l1-u-sqssvm", "--data", p(&data), "--label", "y", "--mu", "65536", "--lambda", "4",
        "--cu", "16", "--eps", "0.05", "--out", p(&model),
    ]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(json["kind"], "ls-l1-u-sqssvm");
    assert_eq!(json["n"], 2);
    assert_eq!(json["w_half"].as_array().unwrap().len(), 3);
    assert!(json["solve_report"]["iterations"].as_u64().unwrap() >= 1);

    let dump = dir.path().join("qp.txt");
    let timings = dir.path().join("timings.csv");
    ok(&[
        "train", "--model", "u-sqssvm", "--data", p(&data), "--mu", "64", "--cu", "1", "--out", p(&model), "--dump-qp",
        p(&dump), "--timings", p(&timings),
    ]);
    assert!(fs::read_to_string(&dump).unwrap().starts_with("# Q "));
    assert!(fs::read_to_string(&timings).unwrap().starts_with("task,model,clock,seconds\n"));
}

#[test]
fn predict_reproduces_cv_fold_score() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = gen(dir.path(), "d.csv", &["--noise", "0.15"]);
    let data = load_csv(&data_path, &LabelColumn::parse("y"), "1").unwrap();
    let kind = ModelKind::USqssvm;
    let h = Hyperparams::new(32.0, 0.0, 2.0, 0.05).unwrap();
    let opts = CvOptions {
        k: 5,
        seed: 9,
        ..CvOptions::default()
    };
    let cv = cross_validate(kind, &data, &h, &opts).unwrap();
    let split = kfold_split(&data, 5, 9).unwrap();

    for fold in [0usize, 3] {
        let f = &split.folds[fold];
        let train = data.subset(&f.train).unwrap();
        let test = data.subset(&f.test).unwrap();
        assert_eq!(cv.folds[fold].norm, fit_normalizer(&train));
        let (train_path, test_path) = (dir.path().join("train.csv"), dir.path().join("test.csv"));
        train.write_csv(fs::File::create(&train_path).unwrap(), "y").unwrap();
        test.write_csv(fs::File::create(&test_path).unwrap(), "y").unwrap();

        // CV draws fold i's Universum with this derived seed
        let seed = derive_seed(derive_seed(9, 1000 + fold as u64), 0).to_string();
        let model = dir.path().join("m.json");
        let preds = dir.path().join("preds.csv");
        ok(&[
            "train", "--model", "u-sqssvm", "--data", p(&train_path), "--mu", "32", "--cu", "2", "--eps", "0.05",
            "--seed", &seed, "--out", p(&model),
        ]);
        ok(&["predict", "--model", p(&model), "--data", p(&test_path), "--label", "y", "--out", p(&preds)]);
        let out = ok(&["accuracy", "--pred", p(&preds), "--data", p(&test_path)]);
        let acc: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
        assert!((acc - cv.fold_accuracies[fold]).abs() <= 1e-6, "fold {fold}: {acc} vs {}", cv.fold_accuracies[fold]);
    }
}

#[test]
fn table_commands_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.csv", &[]);
    for run in ["r1", "r2"] {
        let out = dir.path().join(run);
        ok(&["cv", "--model", "l1-u-sqssvm", "--data", p(&data), "--mu", "16", "--lambda", "0.5", "--cu", "1",
            "--seed", "4", "--out-dir", p(&out)]);
        ok(&["grid", "--model", "l1-sqssvm", "--data", p(&data), "--mu-range", "0:2", "--lambda-range", "-2:0",
            "--lambda-zero", "--k", "3", "--seed", "4", "--out-dir", p(&out)]);
        ok(&["sweep-colormap", "--model", "u-sqssvm", "--data", p(&data), "--mu", "16", "--cu-range", "-1:1",
            "--eps-range", "-4:-3", "--cu-zero", "--k", "3", "--out-dir", p(&out)]);
        ok(&["sweep-urate", "--model", "u-sqssvm", "--data", p(&data), "--mu", "16", "--cu", "1", "--rates",
            "0.1,0.3", "--repeats", "2", "--k", "3", "--out-dir", p(&out)]);
        ok(&["universum", "--data", p(&data), "--fraction", "0.2", "--seed", "1", "--expanded", "--out",
            p(&out.join("universum.csv"))]);
    }
    for file in ["cv_table.csv", "grid_table.csv", "colormap.csv", "urate_curve.csv", "universum.csv"] {
        let a = fs::read(dir.path().join("r1").join(file)).unwrap();
        let b = fs::read(dir.path().join("r2").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
    let grid = fs::read_to_string(dir.path().join("r1/grid_table.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 3 * 4);
    assert!(grid.starts_with("model,mu,lambda,c_u,eps,mean_accuracy,std_accuracy_population,fold1,fold2,fold3\n"));
    let colormap = fs::read_to_string(dir.path().join("r1/colormap.csv")).unwrap();
    assert_eq!(colormap.lines().count(), 1 + 4 * 2);
    assert!(dir.path().join("r1/timings.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.csv", &[]);

    assert_eq!(qsurf(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qsurf(&["cv", "--bogus"]).status.code(), Some(1));
    assert_eq!(qsurf(&["--help"]).status.code(), Some(0));

    let out = qsurf(&["cv", "--model", "sqssvm", "--data", p(&data), "--mu", "0", "--k", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("--mu") && err.contains("--k"), "{err}");

    let missing = dir.path().join("missing.csv");
    assert_eq!(qsurf(&["cv", "--model", "sqssvm", "--data", p(&missing)]).status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x1,x2,y\n1,2,1\n3,oops,-1\n").unwrap();
    let out = qsurf(&["train", "--model", "sqssvm", "--data", p(&bad), "--out", p(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("row 2, column 'x2'"));

    // one IRLS iteration with a tiny tolerance cannot meet the stopping rule,
    // but a model is still written; only a diverged solve exits with 3
    let out = qsurf(&["train", "--model", "ls-l1-u-sqssvm", "--data", p(&data), "--lambda", "1", "--cu", "1",
        "--max-iter", "1", "--irls-tol", "1e-300", "--out", p(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(0));
}
