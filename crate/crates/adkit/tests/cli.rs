use std::path::PathBuf;
use std::process::{Command, Output};

const BERNOULLI: &str = "main = Uniform >= Theta[1]\n";

fn adkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adkit")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = adkit(args);
    assert!(
        out.status.success(),
        "{args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    adkit(args).status.code().expect("exit code")
}

/// A file under the target temp dir, unique to this test.
fn temp_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("adkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no `{key}=` in\n{text}"))
}

#[test]
fn eval_prints_the_value() {
    assert_eq!(stdout(&["eval", "-e", "x1*x2 + sin(0)", "-x", "3,4"]), "12\n");
    assert_eq!(stdout(&["eval", "-e", "-x1", "-x", "-2.5"]), "2.5\n");
}

#[test]
fn missing_environment_is_a_usage_error() {
    let out = adkit(&["eval", "-e", "x1", "-x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert!(out.stdout.is_empty());
}

#[test]
fn parse_and_domain_errors_exit_two() {
    let out = adkit(&["eval", "-e", "x1 +* 2", "-x", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert_eq!(code(&["eval", "-e", "log(x1)", "-x", "-1"]), 2);
    assert_eq!(code(&["eval", "-e", "x2", "-x", "1"]), 2);
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&["eval", "-e", "x1", "-x", "1,abc"]), 1);
    assert_eq!(code(&["grad", "-e", "x1", "-x", "1", "--mode", "sideways"]), 1);
    assert_eq!(code(&["no-such-command"]), 1);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn deriv_prints_the_symbolic_derivative() {
    let d = stdout(&["deriv", "-e", "x1*x2", "-v", "1"]);
    assert_eq!(d.lines().count(), 1);
    // The printed derivative is itself an expression with value x2.
    assert_eq!(stdout(&["eval", "-e", d.trim(), "-x", "3,4"]), "4\n");
    assert_eq!(code(&["deriv", "-e", "x1", "-v", "0"]), 1);
}

#[test]
fn grad_rev_prints_every_entry() {
    assert_eq!(stdout(&["grad", "-e", "x1*x2", "-x", "3,4", "--mode", "rev"]), "primal=12\nx1=4\nx2=3\n");
    // Default mode is rev, and zeros are kept.
    assert_eq!(stdout(&["grad", "-e", "x1", "-x", "3,4"]), "primal=3\nx1=1\nx2=0\n");
}

#[test]
fn grad_sparse_modes_omit_zeros() {
    for mode in ["fwd", "rev1", "rev2"] {
        assert_eq!(
            stdout(&["grad", "-e", "x1*x3", "-x", "3,4,5", "--mode", mode]),
            "primal=15\nx1=5\nx3=3\n",
            "{mode}"
        );
    }
}

#[test]
fn grad_output_is_byte_stable() {
    let args = ["grad", "-e", "sin(x1)*exp(x2)/x3 + x1^x2", "-x", "0.3,1.7,2.9", "--mode", "rev"];
    let first = adkit(&args).stdout;
    for _ in 0..3 {
        assert_eq!(adkit(&args).stdout, first);
    }
    let fwd = stdout(&["grad", "-e", args[2], "-x", args[4], "--mode", "fwd"]);
    assert_eq!(fwd.lines().count(), 4);
}

#[test]
fn fit_spll_bernoulli() {
    let program = temp_file("bernoulli.spll", BERNOULLI);
    let data = temp_file("bernoulli.txt", "false,3\ntrue,7\n");
    let out = stdout(&[
        "fit-spll",
        "-p",
        program.to_str().unwrap(),
        "-d",
        data.to_str().unwrap(),
        "--init",
        "0.5",
        "--lr",
        "0.02",
        "--tol",
        "1e-14",
    ]);
    let theta: f64 = field(&out, "theta1").parse().unwrap();
    assert!((theta - 0.3).abs() < 1e-12, "{out}");
    let steps: usize = field(&out, "steps").parse().unwrap();
    assert!((11..=15).contains(&steps), "{out}");
    assert_eq!(field(&out, "converged"), "true");
}

#[test]
fn fit_spll_fixed_iterations_and_errors() {
    let program = temp_file("fixed.spll", BERNOULLI);
    let data = temp_file("fixed.txt", "false\nfalse\nfalse\ntrue\n");
    let p = program.to_str().unwrap();
    let d = data.to_str().unwrap();
    let out = stdout(&["fit-spll", "-p", p, "-d", d, "--init", "0.5", "--lr", "0.02", "--iters", "5", "--mode", "rev1"]);
    assert_eq!(field(&out, "steps"), "5");
    assert_eq!(field(&out, "converged"), "false");
    // One learning step from 0.5 on 3 false / 1 true: θ −= λ·(−3/θ + 1/(1−θ)).
    let one = stdout(&["fit-spll", "-p", p, "-d", d, "--init", "0.5", "--lr", "0.02", "--iters", "1"]);
    assert_eq!(field(&one, "theta1"), "0.58");

    assert_eq!(code(&["fit-spll", "-p", p, "-d", d, "--init", "0.5", "--lr", "0.02", "--iters", "5", "--tol", "1e-3"]), 1);
    assert_eq!(code(&["fit-spll", "-p", p, "-d", d, "--init", "0.5", "--lr", "0"]), 1);
    assert_eq!(code(&["fit-spll", "-p", "/nonexistent/program", "-d", d, "--init", "0.5", "--lr", "0.02"]), 2);
    let bad = temp_file("bad.spll", "main = if Uniform >= then null else null\n");
    assert_eq!(code(&["fit-spll", "-p", bad.to_str().unwrap(), "-d", d, "--init", "0.5", "--lr", "0.02"]), 2);
}

#[test]
fn sample_spll_is_seeded() {
    let program = temp_file("sample.spll", BERNOULLI);
    let p = program.to_str().unwrap();
    let args = ["sample-spll", "-p", p, "--theta", "0.3", "-n", "2000", "--seed", "11"];
    let out = stdout(&args);
    assert_eq!(out, stdout(&args));
    assert_eq!(out.lines().count(), 2000);
    let falses = out.lines().filter(|l| *l == "false").count();
    assert_eq!(falses + out.lines().filter(|l| *l == "true").count(), 2000);
    assert!((falses as f64 / 2000.0 - 0.3).abs() < 0.04, "{falses}");
    assert_ne!(out, stdout(&["sample-spll", "-p", p, "--theta", "0.3", "-n", "2000", "--seed", "12"]));
    assert_eq!(code(&["sample-spll", "-p", p, "--theta", "1.5", "-n", "3"]), 2);
}

#[test]
fn sampled_outcomes_feed_back_into_a_fit() {
    let program = temp_file("roundtrip.spll", BERNOULLI);
    let p = program.to_str().unwrap();
    let outcomes = stdout(&["sample-spll", "-p", p, "--theta", "0.25", "-n", "400", "--seed", "3"]);
    let falses = outcomes.lines().filter(|l| *l == "false").count() as f64;
    let data = temp_file("roundtrip.txt", &outcomes);
    let out = stdout(&["fit-spll", "-p", p, "-d", data.to_str().unwrap(), "--init", "0.5", "--lr", "0.0005"]);
    let theta: f64 = field(&out, "theta1").parse().unwrap();
    assert!((theta - falses / 400.0).abs() < 1e-9, "{out}");
}

#[test]
fn widget_sample_and_fit() {
    let values = stdout(&["sample-widget", "--mu", "0.5", "--sigma2", "0.1", "-n", "300", "--seed", "5"]);
    assert_eq!(values.lines().count(), 300);
    assert_eq!(values, stdout(&["sample-widget", "--mu", "0.5", "--sigma2", "0.1", "-n", "300", "--seed", "5"]));
    let data = temp_file("widgets.txt", &values);
    let d = data.to_str().unwrap();
    let out = stdout(&["fit-widget", "-d", d, "--init-mu", "0", "--init-w", "0", "--lr", "0.002", "--iters", "200"]);
    let mu: f64 = field(&out, "mu").parse().unwrap();
    let sigma2: f64 = field(&out, "sigma2").parse().unwrap();
    let initial: f64 = field(&out, "nll_initial").parse().unwrap();
    let last: f64 = field(&out, "nll").parse().unwrap();
    assert!((0.3..0.7).contains(&mu), "{out}");
    assert!(sigma2 > 0.0);
    assert!(last <= initial);
    assert!(field(&out, "iterations").parse::<usize>().unwrap() <= 200);

    let junk = temp_file("junk.txt", "1.0\nwidget\n");
    assert_eq!(code(&["fit-widget", "-d", junk.to_str().unwrap()]), 2);
    assert_eq!(code(&["fit-widget", "-d", d, "--lr", "-1"]), 1);
}

#[test]
fn vi_demo_reports_estimates_and_exact_values() {
    let out = stdout(&["vi-demo", "--seed", "4", "-n", "5000"]);
    let g: f64 = field(&out, "gradient").parse().unwrap();
    let se: f64 = field(&out, "gradient_se").parse().unwrap();
    assert_eq!(field(&out, "exact_gradient"), "0.7");
    assert!((g - 0.7).abs() < 4.0 * se, "{out}");
    field(&out, "objective");
    assert_eq!(out, stdout(&["vi-demo", "--seed", "4", "-n", "5000"]));
    let shifted = stdout(&["vi-demo", "--seed", "4", "-n", "5000", "-K", "-3", "--theta", "1", "--target", "0.5"]);
    assert_eq!(field(&shifted, "exact_gradient"), "0.5");
    assert_eq!(code(&["vi-demo", "-n", "0"]), 1);
}

#[test]
fn bench_table_and_csv() {
    let table = stdout(&["bench", "-N", "2001", "-V", "20", "-r", "2", "--seed", "3"]);
    for mode in ["fwd", "rev1", "rev2", "rev"] {
        assert!(table.lines().any(|l| l.starts_with(mode)), "{table}");
    }
    assert!(table.contains("checksums agree"), "{table}");

    let csv = stdout(&["bench", "-N", "501", "-V", "8", "-r", "1", "--modes", "fwd,rev", "--csv"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "mode,mean_s,median_s,total_s,checksum");
    assert_eq!(lines.len(), 3);
    let checksum = |l: &str| l.rsplit(',').next().unwrap().parse::<f64>().unwrap();
    assert!((checksum(lines[1]) - checksum(lines[2])).abs() <= 1e-9 * checksum(lines[1]));

    let spll = stdout(&["bench", "--workload", "spll", "-r", "1", "--csv"]);
    assert_eq!(spll.lines().count(), 5);
    assert_eq!(code(&["bench", "-N", "11", "-V", "2", "--modes", "fwd,warp"]), 1);
    assert_eq!(code(&["bench", "-N", "3", "-V", "10"]), 2);
}
