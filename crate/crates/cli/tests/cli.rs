use std::path::PathBuf;
use std::process::{Command, Output};

fn haarlane(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haarlane"))
        .args(args)
        .env("HAARLANE_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn problem(n: usize) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join(format!("../core/examples/ex{n}.problem"))
        .display()
        .to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Row of the error table whose first field is `t`.
fn row(csv: &str, t: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .find(|f| f[0] == t)
        .unwrap_or_else(|| panic!("no row {t} in\n{csv}"))
}

fn linf(csv: &str, var: &str) -> f64 {
    row(csv, &format!("Linf_{var}"))[1].parse().unwrap()
}

#[test]
fn solve_example_one_file() {
    let out = haarlane(&["solve", "--problem", &problem(1), "--level", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,y_computed,z_computed,y_exact,z_exact,y_abserr,z_abserr"
    );
    assert_eq!(csv.lines().count(), 14);
    let r = row(&csv, "0.9");
    assert_eq!((r[1].as_str(), r[2].as_str()), ("1.81", "0.19"));
}

#[test]
fn solve_example_three_file() {
    let csv = stdout(&haarlane(&[
        "solve",
        "--problem",
        &problem(3),
        "--level",
        "4",
    ]));
    assert!((linf(&csv, "y") / 3.67459e-4 - 1.0).abs() < 1e-3);
}

#[test]
fn solve_example_five_file() {
    let csv = stdout(&haarlane(&[
        "solve",
        "--problem",
        &problem(5),
        "--level",
        "3",
    ]));
    let r = row(&csv, "0.5");
    assert_eq!((r[1].as_str(), r[2].as_str()), ("0.264286", "0.0571429"));
}

#[test]
fn builtin_examples() {
    let csv = stdout(&haarlane(&["example", "--id", "4", "--level", "3"]));
    assert!((linf(&csv, "y") / 7.54755e-4 - 1.0).abs() < 1e-3);
    let csv = stdout(&haarlane(&["example", "--id", "2", "--level", "3"]));
    assert!((linf(&csv, "z") / 1.31757e-4 - 1.0).abs() < 1e-3);
    let csv = stdout(&haarlane(&["example", "--id", "1", "--level", "4"]));
    assert!(linf(&csv, "y") <= 1e-12);
}

#[test]
fn convergence_orders() {
    let out = haarlane(&["convergence", "--id", "3", "--levels", "3..4"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "J,linf_y,linf_z,order_y,order_z");
    assert!(lines[1].ends_with(",,"));
    let order: f64 = lines[2].split(',').nth(3).unwrap().parse().unwrap();
    assert!((order - 2.0).abs() < 0.02, "{order}");

    let csv = stdout(&haarlane(&["convergence", "--id", "2", "--levels", "3..4"]));
    let order: f64 = csv
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!((order - (2.76016e-5f64 / 6.87997e-6).log2()).abs() < 1e-3);

    let csv = stdout(&haarlane(&[
        "convergence",
        "--problem",
        &problem(1),
        "--levels",
        "1..3",
    ]));
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",,")));
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        &["example", "--id", "4", "--level", "4"][..],
        &[
            "example",
            "--id",
            "2",
            "--level",
            "3",
            "--precision",
            "full",
        ][..],
        &["convergence", "--id", "2", "--levels", "1..4"][..],
    ] {
        let a = haarlane(args);
        let b = haarlane(args);
        assert_eq!(a.stdout, b.stdout);
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn haar_dump_level_one() {
    let csv = stdout(&haarlane(&["haar-dump", "--level", "1", "--matrix", "P2"]));
    assert_eq!(
        csv,
        "matrix,i,x1,x2,x3,x4\n\
         P2,1,0.0078125,0.0703125,0.1953125,0.3828125\n\
         P2,2,0.0078125,0.0703125,0.1796875,0.2421875\n\
         P2,3,0.0078125,0.0546875,0.0625,0.0625\n\
         P2,4,0,0,0.0078125,0.0546875\n"
    );
    let all = stdout(&haarlane(&["haar-dump", "--level", "2"]));
    assert_eq!(all.lines().count(), 1 + 3 * 8);
}

#[test]
fn exit_codes() {
    assert_eq!(
        haarlane(&["solve", "--problem", "/nonexistent.problem", "--level", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        haarlane(&["example", "--id", "7", "--level", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(haarlane(&["example", "--id", "1"]).status.code(), Some(1));
    assert_eq!(
        haarlane(&["example", "--id", "1", "--level", "2", "--f1", "y +"])
            .status
            .code(),
        Some(1)
    );
    let out = haarlane(&["example", "--id", "3", "--level", "3", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout(&out).lines().count(), 14);
}

#[test]
fn overrides_and_output_file() {
    let dir = std::env::temp_dir().join(format!("haarlane-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ex2.csv");
    let out = haarlane(&[
        "example",
        "--id",
        "2",
        "--level",
        "3",
        "--guess",
        "0.1",
        "--jacobian",
        "fd",
        "--tol",
        "1e-11",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!((linf(&csv, "y") / 2.76016e-5 - 1.0).abs() < 1e-3);
    std::fs::remove_dir_all(&dir).unwrap();

    // with f1 = 0 the first equation has the exact solution y = gamma1
    let csv = stdout(&haarlane(&[
        "example", "--id", "2", "--level", "2", "--f1", "0",
    ]));
    assert_eq!(row(&csv, "0.7")[1], "1");
}

#[test]
fn errors_name_the_stage() {
    let out = haarlane(&["example", "--id", "3", "--level", "2", "--f1", "log(y - 5)"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: solving:"), "{err}");
    assert!(err.contains("collocation point 1"));
}
