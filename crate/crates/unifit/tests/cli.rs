//! End-to-end tests of the command-line surface: file formats, round trips,
//! determinism, and the exit-code contract.

use std::path::{Path, PathBuf};

use unifit::cli::{self, read_sample, ModelFile};
use unifit::model::Channel;
use unifit::tensor::{build_tensor_pairs, fidelity, regularize};

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["unifit"];
    argv.extend_from_slice(args);
    cli::run_from(argv)
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Workspace { _dir: dir, root }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

#[test]
fn gen_writes_sample_and_reference() {
    let ws = Workspace::new();
    let csv = ws.file("so3.csv");
    let reference = ws.file("so3.ref");
    let code = run(&[
        "gen", "euler3", "--angles", "0.1,0.4,0.7", "--steps", "50", "--seed", "1", "--flips",
        "--out", &path_str(&csv), "--ref-out", &path_str(&reference),
    ]);
    assert_eq!(code, 0);
    let sample = read_sample(&csv).unwrap();
    assert_eq!(sample.len(), 50);
    assert_eq!(sample.n(), 3);
    assert_eq!(sample.d(), 3);
    let header = std::fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("weight,x0,x1,x2,f0,f1,f2\n"));
    let m = cli::read_matrix(&reference).unwrap();
    assert_eq!(m.shape(), (3, 3));
}

#[test]
fn gen_is_byte_deterministic() {
    let ws = Workspace::new();
    let a = ws.file("a.csv");
    let b = ws.file("b.csv");
    for (out, _) in [(&a, 0), (&b, 1)] {
        let code = run(&[
            "gen", "poly", "--n", "5", "--d", "3", "--points", "40", "--seed", "7", "--out",
            &path_str(out),
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "identical commands produced different bytes"
    );
}

#[test]
fn solve_compare_round_trip() {
    let ws = Workspace::new();
    let csv = ws.file("traj.csv");
    let reference = ws.file("traj.ref");
    let model_path = ws.file("model.json");
    assert_eq!(
        run(&[
            "gen", "ortho", "--dim", "4", "--steps", "200", "--seed", "3", "--flips", "--out",
            &path_str(&csv), "--ref-out", &path_str(&reference),
        ]),
        0
    );
    assert_eq!(
        run(&[
            "solve", "--input", &path_str(&csv), "--channel", "gram", "--runs", "1", "--seed",
            "3", "--out", &path_str(&model_path), "--trace",
        ]),
        0
    );
    let model = ModelFile::read(&model_path).unwrap();
    assert!(model.converged);
    assert_eq!(model.channel, Channel::Gram);
    assert_eq!(model.seed, 3);
    assert_eq!(model.history.len(), model.iterations);

    // Reloading reproduces the stored fidelity from the data.
    let sample = read_sample(&csv).unwrap();
    let (orth, grams) = regularize(&sample).unwrap();
    let s = build_tensor_pairs(&orth);
    let u = model.operator().unwrap();
    let regularized = grams.regularize_operator(&u);
    let f = fidelity(&regularized, &s);
    assert!(
        (f - model.fidelity).abs() <= 1e-12 * model.fidelity.abs().max(1.0),
        "reloaded fidelity {f} vs stored {}",
        model.fidelity
    );

    // Comparison against the generator: sign-invariant and below tolerance.
    assert_eq!(
        run(&[
            "compare", "--model", &path_str(&model_path), "--reference", &path_str(&reference),
        ]),
        0
    );
    // Negating the reference must not change the verdict.
    let m = cli::read_matrix(&reference).unwrap();
    let negated = ws.file("neg.ref");
    cli::write_matrix(&negated, &(-m)).unwrap();
    assert_eq!(
        run(&[
            "compare", "--model", &path_str(&model_path), "--reference", &path_str(&negated),
        ]),
        0
    );
}

#[test]
fn solve_is_byte_deterministic() {
    let ws = Workspace::new();
    let csv = ws.file("sample.csv");
    assert_eq!(
        run(&["gen", "euler3", "--steps", "100", "--seed", "5", "--flips", "--out", &path_str(&csv)]),
        0
    );
    let m1 = ws.file("m1.json");
    let m2 = ws.file("m2.json");
    for out in [&m1, &m2] {
        assert_eq!(
            run(&[
                "solve", "--input", &path_str(&csv), "--runs", "1", "--out", &path_str(out),
            ]),
            0
        );
    }
    assert_eq!(std::fs::read(&m1).unwrap(), std::fs::read(&m2).unwrap());
}

#[test]
fn solve_reports_non_convergence_with_exit_3() {
    let ws = Workspace::new();
    let csv = ws.file("sample.csv");
    assert_eq!(
        run(&["gen", "euler3", "--steps", "60", "--seed", "2", "--flips", "--out", &path_str(&csv)]),
        0
    );
    let model_path = ws.file("model.json");
    // One iteration cannot satisfy the multiplier-stability test.
    let code = run(&[
        "solve", "--input", &path_str(&csv), "--max-iters", "1", "--runs", "1", "--out",
        &path_str(&model_path),
    ]);
    assert_eq!(code, 3);
    let model = ModelFile::read(&model_path).unwrap();
    assert!(!model.converged, "model must record converged=false");
}

#[test]
fn degenerate_data_exits_2() {
    let ws = Workspace::new();
    let csv = ws.file("flat.csv");
    // Every observation on one ray: the Gram matrix cannot be inverted.
    let mut text = String::from("weight,x0,x1,f0\n");
    for _ in 0..10 {
        text.push_str("1.0,1.0,0.0,1.0\n");
    }
    std::fs::write(&csv, text).unwrap();
    let code = run(&[
        "solve", "--input", &path_str(&csv), "--channel", "gram", "--out",
        &path_str(&ws.file("m.json")),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn usage_errors_are_nonzero() {
    assert_ne!(run(&["solve", "--channel", "bogus"]), 0);
    assert_ne!(run(&["gen", "euler3"]), 0); // missing required --steps/--out
    assert_ne!(run(&["nonsense"]), 0);
}

#[test]
fn compare_detects_real_differences() {
    let ws = Workspace::new();
    let csv = ws.file("t.csv");
    let reference = ws.file("t.ref");
    let model_path = ws.file("t.json");
    assert_eq!(
        run(&[
            "gen", "ortho", "--dim", "3", "--steps", "100", "--seed", "9", "--flips", "--out",
            &path_str(&csv), "--ref-out", &path_str(&reference),
        ]),
        0
    );
    assert_eq!(
        run(&["solve", "--input", &path_str(&csv), "--runs", "1", "--out", &path_str(&model_path)]),
        0
    );
    // Perturb the reference beyond tolerance.
    let mut m = cli::read_matrix(&reference).unwrap();
    m[(0, 0)] += 1e-6;
    let bad = ws.file("bad.ref");
    cli::write_matrix(&bad, &m).unwrap();
    assert_eq!(
        run(&["compare", "--model", &path_str(&model_path), "--reference", &path_str(&bad)]),
        1
    );
    // A looser tolerance accepts it.
    assert_eq!(
        run(&[
            "compare", "--model", &path_str(&model_path), "--reference", &path_str(&bad),
            "--tol", "1e-3",
        ]),
        0
    );
}

#[test]
fn sweep_emits_one_row_per_dimension() {
    let ws = Workspace::new();
    let out = ws.file("sweep.csv");
    assert_eq!(
        run(&["sweep", "--n", "2", "--m", "60", "--seed", "1", "--out", &path_str(&out)]),
        0
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,f_orig_over_m,relative_gain,converged");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[2].starts_with("2,"));
}

#[test]
fn interp_emits_query_rows() {
    let ws = Workspace::new();
    let data = ws.file("func.csv");
    assert_eq!(
        run(&["gen", "func", "--power", "2", "--points", "80", "--out", &path_str(&data)]),
        0
    );
    let out = ws.file("interp.csv");
    assert_eq!(
        run(&[
            "interp", "--input", &path_str(&data), "--n", "3", "--d", "3", "--grid", "11",
            "--out", &path_str(&out),
        ]),
        0
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,f_exact,f_rn,f_ls,f_maxp,p_max");
    assert_eq!(lines.len(), 12);
    for line in &lines[1..] {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert!(v.is_finite());
        }
    }
}

#[test]
fn sample_files_round_trip_exactly() {
    let ws = Workspace::new();
    let csv = ws.file("rt.csv");
    assert_eq!(
        run(&["gen", "poly", "--n", "4", "--d", "2", "--points", "25", "--seed", "11", "--out", &path_str(&csv)]),
        0
    );
    let sample = read_sample(&csv).unwrap();
    let copy = ws.file("copy.csv");
    cli::write_sample(&copy, &sample).unwrap();
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&copy).unwrap());
}
