use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/worldbank")
}

fn write_config(dir: &Path, first: i32, last: i32, extra: &str) {
    let ind = |name: &str| {
        format!(
            "{{ path = {:?} }}",
            fixtures().join(format!("{name}.csv")).to_string_lossy()
        )
    };
    let text = format!(
        "seed = 42\ncountries = [\"USA\", \"EU\", \"IND\", \"CMR\"]\n\n[window]\nfirst = {first}\nlast = {last}\n\n\
         [aliases]\nEU = \"EUU\"\n\n[indicators]\ngas_pct = {}\nliquid_pct = {}\nsolid_pct = {}\n\
         co2_per_capita = {}\ngdp_per_capita = {}\n{extra}",
        ind("gas_pct"),
        ind("liquid_pct"),
        ind("solid_pct"),
        ind("co2_per_capita"),
        ind("gdp_per_capita"),
    );
    std::fs::write(dir.join("datl.toml"), text).unwrap();
}

fn datl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_datl"))
        .arg("--workdir")
        .arg(dir)
        .args(args)
        .env_remove("DATL_SEED")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ingested(first: i32, last: i32, extra: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), first, last, extra);
    let o = datl(dir.path(), &["ingest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    dir
}

const MISSING: &str = "\n[missing]\ncountries = [\"SYR\", \"POL\", \"IRQ\"]\n";

#[test]
fn help_documents_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let o = datl(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for cmd in [
        "ingest",
        "run-pair",
        "run-matrix",
        "sweep-td",
        "estimate-missing",
        "report",
    ] {
        assert!(stdout(&o).contains(cmd), "{cmd} missing from help");
        let sub = datl(dir.path(), &[cmd, "--help"]);
        assert_eq!(sub.status.code(), Some(0));
        for flag in ["--workdir", "--config", "--jobs", "--run-id", "--seed"] {
            assert!(stdout(&sub).contains(flag), "{cmd} help lacks {flag}");
        }
    }
    let pair = stdout(&datl(dir.path(), &["run-pair", "--help"]));
    for flag in [
        "--source",
        "--target",
        "--regressor",
        "--td",
        "--mixing",
        "--allow-any-fraction",
    ] {
        assert!(pair.contains(flag), "run-pair help lacks {flag}");
    }
}

#[test]
fn ingest_writes_bundle_and_completeness() {
    let dir = ingested(1960, 2014, MISSING);
    let bundle = std::fs::read_to_string(dir.path().join("build/bundle.json")).unwrap();
    assert!(bundle.contains("\"SYR\""));
    let completeness = std::fs::read_to_string(dir.path().join("build/completeness.csv")).unwrap();
    assert!(completeness.starts_with("country,channel,present_years,missing_years,missing_spans\n"));
    assert!(completeness.contains("POL,gdp_per_capita,25,30,1960-1989\n"));
    assert!(completeness.contains("IRQ,gdp_per_capita,39,16,1965-1967 1991-2003\n"));
    assert!(completeness.contains("USA,gas_pct,55,0,\n"));
}

#[test]
fn ingest_names_missing_file_role() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), 1960, 2013, "");
    let text = std::fs::read_to_string(dir.path().join("datl.toml")).unwrap();
    std::fs::write(
        dir.path().join("datl.toml"),
        text.replace("solid_pct.csv", "nope.csv"),
    )
    .unwrap();
    let o = datl(dir.path(), &["ingest"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("solid_pct"), "{}", stderr(&o));
}

#[test]
fn bad_config_and_missing_bundle_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("datl.toml"), "countries = 3\n").unwrap();
    assert_eq!(datl(dir.path(), &["ingest"]).status.code(), Some(1));

    write_config(dir.path(), 1960, 2013, "");
    let o = datl(dir.path(), &["run-matrix"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("datl ingest"));
    assert_eq!(datl(dir.path(), &["frobnicate"]).status.code(), Some(1));
}

#[test]
fn run_pair_prints_summary_and_validates_arguments() {
    let dir = ingested(1960, 2013, "");
    let o = datl(
        dir.path(),
        &[
            "run-pair",
            "--source",
            "CMR",
            "--target",
            "EU",
            "--regressor",
            "grnn",
            "--td",
            "1/3",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.starts_with("CMR-to-EU grnn f=1/3 RMSE="), "{line}");
    assert!(line.contains(" R2=") && line.contains(" RRMSE="));
    assert!(dir
        .path()
        .join("reports/CMR-to-EU-grnn/pairs/CMR-to-EU-grnn.csv")
        .exists());

    let wide = datl(
        dir.path(),
        &[
            "run-pair",
            "--source",
            "CMR",
            "--target",
            "EU",
            "--regressor",
            "grnn",
            "--td",
            "2/3",
        ],
    );
    assert_eq!(wide.status.code(), Some(1));
    assert!(stderr(&wide).contains("--allow-any-fraction"));
    let allowed = datl(
        dir.path(),
        &[
            "run-pair",
            "--source",
            "CMR",
            "--target",
            "EU",
            "--regressor",
            "grnn",
            "--td",
            "2/3",
            "--allow-any-fraction",
        ],
    );
    assert_eq!(allowed.status.code(), Some(0), "{}", stderr(&allowed));

    let unknown = datl(
        dir.path(),
        &[
            "run-pair",
            "--source",
            "FRA",
            "--target",
            "EU",
            "--regressor",
            "grnn",
        ],
    );
    assert_eq!(unknown.status.code(), Some(1));
    assert!(
        stderr(&unknown).contains("CMR, EU, IND, USA"),
        "{}",
        stderr(&unknown)
    );

    let bad_method = datl(
        dir.path(),
        &[
            "run-pair",
            "--source",
            "CMR",
            "--target",
            "EU",
            "--regressor",
            "knn",
        ],
    );
    assert_eq!(bad_method.status.code(), Some(1));
}

#[test]
fn matrix_and_sweep_shapes() {
    let dir = ingested(1960, 2013, "");
    let o = datl(dir.path(), &["--jobs", "2", "run-matrix"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary =
        std::fs::read_to_string(dir.path().join("reports/run-matrix/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 36);

    let o = datl(dir.path(), &["sweep-td", "--run-id", "sweep"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sweep = std::fs::read_to_string(dir.path().join("reports/sweep/td_sweep.csv")).unwrap();
    assert_eq!(
        sweep.lines().next().unwrap(),
        "regressor,No_TD,1/18*TD,1/9*TD,1/6*TD,1/3*TD,1/2*TD"
    );
    assert_eq!(sweep.lines().count(), 4);
}

#[test]
fn sequential_and_parallel_reports_match() {
    let dir = ingested(1960, 2013, "");
    assert_eq!(
        datl(
            dir.path(),
            &["--jobs", "1", "--run-id", "seq", "run-matrix"]
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        datl(
            dir.path(),
            &["--jobs", "3", "--run-id", "par", "run-matrix"]
        )
        .status
        .code(),
        Some(0)
    );
    for name in ["report.json", "summary.csv"] {
        let a = std::fs::read(dir.path().join("reports/seq").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("reports/par").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn seed_environment_overrides_config() {
    let dir = ingested(1960, 2013, "");
    let run = |id: &str, env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_datl"));
        c.arg("--workdir")
            .arg(dir.path())
            .env_remove("SOURCE_DATE_EPOCH")
            .env_remove("DATL_SEED");
        if let Some(v) = env {
            c.env("DATL_SEED", v);
        }
        c.args(["--run-id", id]);
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        c.args([
            "run-pair",
            "--source",
            "USA",
            "--target",
            "IND",
            "--regressor",
            "grnn",
            "--mixing",
            "seeded_random",
        ]);
        let o = c.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let json: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("reports").join(id).join("report.json"))
                .unwrap(),
        )
        .unwrap();
        json["manifest"]["seed"].as_u64().unwrap()
    };
    assert_eq!(run("plain", None, None), 42);
    assert_eq!(run("env", Some("7"), None), 7);
    assert_eq!(run("flag", Some("7"), Some("9")), 9);

    let bad = Command::new(env!("CARGO_BIN_EXE_datl"))
        .arg("--workdir")
        .arg(dir.path())
        .env("DATL_SEED", "seven")
        .args(["run-matrix"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn estimate_missing_and_rerender() {
    let dir = ingested(1960, 2014, MISSING);
    let o = datl(dir.path(), &["estimate-missing", "--country", "SYR"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let root = dir.path().join("reports/estimate-missing/missing/SYR");
    let est = std::fs::read_to_string(root.join("estimates.csv")).unwrap();
    let years: Vec<&str> = est
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        years,
        ["2008", "2009", "2010", "2011", "2012", "2013", "2014"]
    );
    assert_eq!(
        std::fs::read_to_string(root.join("windows.csv")).unwrap(),
        "country,start_year,end_year\nSYR,2008,2014\n"
    );

    std::fs::remove_file(root.join("candidates.csv")).unwrap();
    let o = datl(
        dir.path(),
        &["report", "--dir", "reports/estimate-missing/missing/SYR"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(root.join("candidates.csv").exists());

    let o = datl(dir.path(), &["estimate-missing"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3, "{out}");
}

#[test]
fn partial_failures_exit_two() {
    let extra = "\n[[regressors]]\nmethod = \"grnn\"\nsigmas = [0.5]\n\n[[regressors]]\nmethod = \"elm\"\nc_values = [-1.0]\n";
    let dir = ingested(1960, 2013, extra);
    let o = datl(dir.path(), &["run-matrix"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("failed:"));
    let summary =
        std::fs::read_to_string(dir.path().join("reports/run-matrix/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 24);
}

#[test]
fn invalid_hyperparameter_exits_one() {
    let extra = "\n[[regressors]]\nmethod = \"elm\"\nc_values = [-1.0]\n";
    let dir = ingested(1960, 2013, extra);
    let o = datl(
        dir.path(),
        &[
            "run-pair",
            "--source",
            "USA",
            "--target",
            "IND",
            "--regressor",
            "elm",
        ],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn numeric_failure_exits_three() {
    // four linear features cannot interpolate 72 rows without regularization
    let extra = "\n[[regressors]]\nmethod = \"elm\"\nkernel = \"linear\"\nc_values = [inf]\n";
    let dir = ingested(1960, 2013, extra);
    let o = datl(
        dir.path(),
        &[
            "run-pair",
            "--source",
            "USA",
            "--target",
            "IND",
            "--regressor",
            "elm",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}{}", stdout(&o), stderr(&o));
}
