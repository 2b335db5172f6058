use std::fs;
use std::path::Path;
use std::process::Command;

use lowrank_envelope::cli::{self, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
use lowrank_envelope::{io, LinearOp, Matrix};

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Outcome {
    let argv: Vec<String> = std::iter::once("lowrank").chain(args.iter().copied()).map(String::from).collect();
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = cli::run_with(&argv, &mut o, &mut e);
    Outcome {
        code,
        out: String::from_utf8(o).unwrap(),
        err: String::from_utf8(e).unwrap(),
    }
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no `{key}=` line in\n{text}"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Scaled-identity operator and a rank-2 `X₀` with well separated
/// singular values, written to `dir`.
fn identity_inputs(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let op = LinearOp::scaled_identity(0.9, 4, 4).unwrap();
    let x0 = Matrix::from_row_slice(4, 4, &[
        3.0, 0.0, 0.0, 0.0, //
        0.0, 2.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0,
    ]);
    let (op_path, x0_path) = (dir.join("op.txt"), dir.join("x0.txt"));
    io::write_operator(&op_path, &op).unwrap();
    io::write_matrix(&x0_path, &x0).unwrap();
    (op_path, x0_path)
}

#[test]
fn gen_solve_certify_on_a_scaled_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (op, x0) = identity_inputs(dir.path());
    let inst = dir.path().join("inst.txt");
    let sol = dir.path().join("x.txt");

    let g = run(&["gen", "--op", p(&op), "--x0", p(&x0), "--noise-norm", "0", "--out", p(&inst)]);
    assert_eq!(g.code, EXIT_OK, "{}", g.err);
    assert_eq!(value(&g.out, "rank"), "2");
    assert_eq!(value(&g.out, "noise_norm"), "0");

    let s = run(&["solve", "--instance", p(&inst), "--reg", "murank", "--mu", "1", "--out", p(&sol)]);
    assert_eq!(s.code, EXIT_OK, "{}", s.err);
    assert!(s.out.starts_with("# lowrank solve\n"));
    assert_eq!(value(&s.out, "converged"), "true");
    assert_eq!(value(&s.out, "rank"), "2");
    assert!(value(&s.out, "gt_dist").parse::<f64>().unwrap() < 1e-6);
    let x = io::read_matrix(&sol).unwrap();
    assert!((x[(0, 0)] - 3.0).abs() < 1e-6 && (x[(1, 1)] - 2.0).abs() < 1e-6);

    let c = run(&["certify", "--instance", p(&inst), "--x", p(&sol), "--reg", "murank", "--mu", "1"]);
    assert_eq!(c.code, EXIT_OK, "{}", c.err);
    assert_eq!(value(&c.out, "delta_provenance"), "exact");
    assert_eq!(value(&c.out, "verdict"), "certified_global");

    let c = run(&["certify", "--instance", p(&inst), "--x", p(&sol), "--reg", "fixedrank", "--k", "2"]);
    assert_eq!(c.code, EXIT_OK, "{}", c.err);
    assert_eq!(value(&c.out, "verdict"), "certified_global");

    let l = run(&["lrip", "--op", p(&op), "--k", "2"]);
    assert_eq!(l.code, EXIT_OK, "{}", l.err);
    assert!((value(&l.out, "delta").parse::<f64>().unwrap() - 0.19).abs() < 1e-12);
    assert_eq!(value(&l.out, "provenance"), "exact");
}

#[test]
fn gaussian_instance_is_inconclusive_not_certified() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.txt");
    let sol = dir.path().join("x.txt");
    assert_eq!(run(&["gen", "--seed", "5", "--noise-std", "0.01", "--out", p(&inst)]).code, EXIT_OK);
    let s = run(&["solve", "--instance", p(&inst), "--reg", "fixedrank", "--k", "2", "--out", p(&sol)]);
    assert_eq!(s.code, EXIT_OK, "{}", s.err);
    let c = run(&["certify", "--instance", p(&inst), "--x", p(&sol), "--reg", "fixedrank", "--k", "2", "--restarts", "2"]);
    assert_eq!(c.code, EXIT_OK, "{}", c.err);
    assert_eq!(value(&c.out, "delta_provenance"), "lower_bound");
    assert_ne!(value(&c.out, "verdict"), "certified_global");
    assert_ne!(value(&c.out, "verdict"), "certified_unique_lowrank");
    assert!(c.out.contains("noise.sigma_k_bound_fixed_rank"), "{}", c.out);
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (op, x0) = identity_inputs(dir.path());
    let inst = dir.path().join("inst.txt");
    assert_eq!(run(&["gen", "--op", p(&op), "--x0", p(&x0), "--noise-norm", "0", "--out", p(&inst)]).code, EXIT_OK);
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, format!("# defaults\nreg = fixedrank\nk = 1\ninstance = {}\nmax-iter = 500\n", p(&inst))).unwrap();

    let a = run(&["--config", p(&cfg), "solve"]);
    assert_eq!(a.code, EXIT_OK, "{}", a.err);
    assert!(a.out.contains("\nk = 1\n") && a.out.contains("\nmax_iter = 500\n"), "{}", a.out);
    assert_eq!(value(&a.out, "rank"), "1");

    let b = run(&["--config", p(&cfg), "solve", "--k", "2"]);
    assert_eq!(b.code, EXIT_OK, "{}", b.err);
    assert!(b.out.contains("\nk = 2\n"), "{}", b.out);
    assert_eq!(value(&b.out, "rank"), "2");
}

#[test]
fn usage_errors_name_the_offending_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "reg = murank\nfrobnicate = 3\n").unwrap();
    let r = run(&["--config", p(&cfg), "solve"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.err.contains("line 2") && r.err.contains("frobnicate"), "{}", r.err);

    let r = run(&["solve", "--instance", p(&dir.path().join("missing.txt")), "--reg", "murank", "--mu", "1"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.err.contains("--instance"), "{}", r.err);

    let r = run(&["solve", "--reg", "murank", "--mu=-1", "--instance", "x"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.err.contains("--mu"), "{}", r.err);

    let r = run(&["gen", "--noise-std", "0.1", "--noise-norm", "1", "--out", p(&dir.path().join("i.txt"))]);
    assert_eq!(r.code, EXIT_USAGE);

    let r = run(&["sweep-noise", "--preset", "paper-fig1"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.err.contains("--preset"), "{}", r.err);
}

#[test]
fn strict_turns_non_convergence_into_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.txt");
    assert_eq!(run(&["gen", "--noise-std", "0.1", "--out", p(&inst)]).code, EXIT_OK);
    let args = ["solve", "--instance", p(&inst), "--reg", "murank", "--mu", "1", "--max-iter", "2"];
    let lax = run(&args);
    assert_eq!(lax.code, EXIT_OK);
    assert_eq!(value(&lax.out, "converged"), "false");
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).code, EXIT_NUMERICAL);
}

#[test]
fn noise_sweep_writes_csv_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("noise.csv");
    let plot = dir.path().join("noise.dat");
    let r = run(&["sweep-noise", "--max-iter", "3000", "--out", p(&csv), "--plot", p(&plot)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let records = lowrank_envelope::experiments::read_csv(&csv).unwrap();
    assert_eq!(records.len(), 22);
    assert_eq!(value(&r.out, "records"), "22");
    let header = fs::read_to_string(&plot).unwrap();
    assert!(header.lines().next().unwrap().contains("fixedrank.rank"), "{header}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_lowrank");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["--help"]), Some(EXIT_OK));
    assert_eq!(status(&["solve", "--help"]), Some(EXIT_OK));
    assert_eq!(status(&["no-such-command"]), Some(EXIT_USAGE));
    assert_eq!(status(&["lrip", "--k", "0", "--op", "x"]), Some(EXIT_USAGE));
}
