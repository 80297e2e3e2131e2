use std::process::{Command, Output};

use mia_cli::{parse_list, Cli, RunConfig, UserSpec, DEFAULT_SEED};
use mia_core::report::{RowKind, Rows};

fn mia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mia")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn list_grammar() {
    assert_eq!(parse_list("128").unwrap(), vec![128]);
    assert_eq!(parse_list("64,128, 256").unwrap(), vec![64, 128, 256]);
    assert_eq!(parse_list("4:7").unwrap(), vec![4, 5, 6, 7]);
    assert_eq!(parse_list("64:64:256").unwrap(), vec![64, 128, 192, 256]);
    assert_eq!(parse_list("1,8:4:16").unwrap(), vec![1, 8, 12, 16]);
    for bad in ["", "a", "8:4", "1:0:5", "1:2:3:4", "-3"] {
        assert!(parse_list(bad).is_err(), "{bad}");
    }
}

#[test]
fn thresholds_csv() {
    let o = mia(&["thresholds"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "M,convergence_alpha,ddm_alpha,max_k_convergence,max_k_ddm"
    );
    let ks: Vec<(String, String)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[3].to_string(), f[4].to_string())
        })
        .collect();
    let want = [("10", "6"), ("21", "9"), ("43", "12"), ("87", "17")];
    assert_eq!(ks.len(), 4);
    for (got, want) in ks.iter().zip(want) {
        assert_eq!((got.0.as_str(), got.1.as_str()), want);
    }
    let row = text.lines().nth(2).unwrap();
    assert!(row.starts_with("128,5.828427124"));
}

#[test]
fn thresholds_reject_tiny_arrays() {
    let o = mia(&["thresholds", "--m", "4"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sir_rows_and_sentinel() {
    let o = mia(&["sir", "--m", "128", "--k", "1,16", "--n", "1", "--trials", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "M,K,N,sir_exact_db,sir_estimated_db,sir_lower_bound_db,trials,seed"
    );
    assert!(lines[1].starts_with("128,1,1,inf,inf,,50,"));
    let est: f64 = lines[2].split(',').nth(4).unwrap().parse().unwrap();
    assert!((est - 9.31).abs() < 0.01);
}

#[test]
fn bound_fills_lower_bound_column() {
    let o = mia(&["bound", "--k", "4", "--n", "1,2", "--trials", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows = Rows::from_csv(RowKind::Sir, &text).unwrap();
    let Rows::Sir(points) = rows else { unreachable!() };
    assert_eq!(points.len(), 2);
    assert!(points.iter().all(|p| p.sir_lower_bound_db.is_some()));
}

#[test]
fn invalid_terms_are_usage_errors() {
    assert_eq!(mia(&["sir", "--n", "5"]).status.code(), Some(1));
    assert_eq!(mia(&["sir", "--n", "0"]).status.code(), Some(1));
    assert_eq!(mia(&["bound", "--n", "9"]).status.code(), Some(1));
    assert_eq!(mia(&["nonsense"]).status.code(), Some(1));
    assert_eq!(mia(&["ddm", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(mia(&["ddm", "--m", "8", "--k", "9"]).status.code(), Some(1));
    assert_eq!(mia(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_io_error() {
    let o = mia(&["thresholds", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mia(&["thresholds", "--config", "/nonexistent-dir/c.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["table2", "--m", "64,128", "--trials", "300"];
    let a = mia(&args);
    let b = mia(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = mia(&["table2", "--m", "64,128", "--trials", "300", "--workers", "3"]);
    assert_eq!(a.stdout, c.stdout);
    let d = mia(&["table2", "--m", "64,128", "--trials", "300", "--seed", "1"]);
    assert_ne!(a.stdout, d.stdout);
}

#[test]
fn table_one_uses_threshold_users() {
    let o = mia(&["table1", "--m", "64", "--trials", "200"]);
    let text = stdout(&o);
    let rows = Rows::from_csv(RowKind::Convergence, &text).unwrap();
    let Rows::Convergence(r) = rows else { unreachable!() };
    assert_eq!((r[0].antennas, r[0].users, r[0].trials), (64, 10, 200));
    assert_eq!(r[0].seed, DEFAULT_SEED);
}

#[test]
fn rounding_flag_keeps_three_decimals() {
    let o = mia(&["table2", "--m", "128", "--trials", "333", "--paper-rounding"]);
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    let p = row.split(',').nth(4).unwrap();
    assert!(p.split('.').nth(1).map_or(0, str::len) <= 3, "{p}");
}

#[test]
fn json_has_spec_rows_meta() {
    let o = mia(&["ddm", "--m", "64", "--k", "2,6", "--trials", "40", "--format", "json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in [
        "\"spec\"",
        "\"rows\"",
        "\"meta\"",
        "\"wall_time_s\"",
        "\"version\"",
        "\"seed\"",
    ] {
        assert!(text.contains(key), "{key}");
    }
    assert!(text.contains("\"strict_ci_low\""));
}

#[test]
fn file_output_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let args = ["convergence", "--m", "64", "--k", "4", "--trials", "30"];
    let to_stdout = mia(&args);
    let mut with_file = args.to_vec();
    with_file.extend(["--out", path.to_str().unwrap()]);
    assert!(mia(&with_file).status.success());
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "m = [64, 128]\nk = \"2:4\"\ntrials = 77\nseed = 5\nformat = \"json\"\n",
    )
    .unwrap();
    let parse = |extra: &[&str]| {
        let mut args = vec!["mia", "ddm", "--config", path.to_str().unwrap()];
        args.extend(extra);
        RunConfig::resolve(<Cli as clap::Parser>::try_parse_from(args).unwrap()).unwrap()
    };
    let c = parse(&[]);
    assert_eq!(c.antennas, vec![64, 128]);
    assert_eq!(c.users, UserSpec::List(vec![2, 3, 4]));
    assert_eq!((c.trials, c.seed), (77, 5));
    assert_eq!(c.format, mia_cli::OutputFormat::Json);
    let c = parse(&["--trials", "9", "--k", "auto", "--format", "csv"]);
    assert_eq!((c.trials, c.seed), (9, 5));
    assert_eq!(c.users, UserSpec::Auto);
    assert_eq!(c.format, mia_cli::OutputFormat::Csv);

    std::fs::write(&path, "bogus = 1\n").unwrap();
    let o = mia(&["ddm", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn progress_goes_to_stderr() {
    let o = mia(&["ddm", "--m", "64", "--trials", "20"]);
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert!(err.contains("M = 64"));
    assert!(!stdout(&o).contains("M = 64"));
}
