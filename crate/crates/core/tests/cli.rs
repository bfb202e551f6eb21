use std::collections::BTreeMap;
use std::process::Command;

use wpvol::cache::CacheFile;
use wpvol::cli::{run_command, CommandResult, CACHE_ENV, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE};

fn run_env(args: &[&str], env: &BTreeMap<String, String>) -> CommandResult {
    let argv: Vec<&str> = std::iter::once("wpvol").chain(args.iter().copied()).collect();
    run_command(&argv, env)
}

fn run(args: &[&str]) -> CommandResult {
    run_env(args, &BTreeMap::new())
}

#[test]
fn volume_examples() {
    let r = run(&["volume", "--g", "1", "--n", "2"]);
    assert_eq!((r.code, r.stdout.as_str()), (EXIT_OK, "1/8\n"));
    let r = run(&["volume", "--g", "0", "--n", "2"]);
    assert_eq!(r.code, EXIT_DOMAIN);
    assert!(r.stderr.contains("unstable"));
}

#[test]
fn psi_and_mixed() {
    assert_eq!(run(&["psi", "--g", "2", "--exp", "4"]).stdout, "1/1152\n");
    assert_eq!(run(&["psi", "--g", "0", "--exp", "0,0,0"]).stdout, "1\n");
    assert_eq!(run(&["mixed", "--g", "1", "--n", "1", "--kappa", "1:1"]).stdout, "1/24\n");
    assert_eq!(run(&["mixed", "--g", "0", "--n", "4", "--psi", "1,0,0,0"]).stdout, "1\n");
}

#[test]
fn thm1_exclusion_is_a_domain_error() {
    let r = run(&["bound", "thm1", "--g", "1", "--n", "1"]);
    assert_eq!(r.code, EXIT_DOMAIN);
    assert!(r.stderr.contains("(0,4),(1,1)"), "{}", r.stderr);
    let r = run(&["bound", "thm1", "--g", "1", "--n", "1", "--override-exclusions"]);
    assert_eq!(r.code, EXIT_OK);
    let r = run(&["bound", "thm1", "--g", "0", "--n", "5"]);
    assert!(r.stdout.starts_with("V_(0,6) >= 61\n"), "{}", r.stdout);
    let r = run(&["bound", "thm1", "--g", "1", "--n", "2", "--v", "1/8"]);
    assert!(r.stdout.starts_with("V_(1,3) >= 7/6\n"));
    let r = run(&["bound", "thm1-upper", "--g", "0", "--n", "5", "--v", "61"]);
    assert!(r.stdout.starts_with("V_(0,5) <= 5\n"));
    assert_eq!(run(&["bound", "thm1-upper", "--g", "1", "--n", "0"]).code, EXIT_DOMAIN);
}

#[test]
fn divisor_bounds() {
    let r = run(&["bound", "thm2", "--g", "2"]);
    assert!(r.stdout.starts_with("V_(2,0) >= 1/224\n"));
    let r = run(&["bound", "thm2", "--g", "2", "--mode", "as-printed"]);
    assert!(r.stdout.starts_with("V_(2,0) >= 71/16128\n"));
    let r = run(&["bound", "thm3", "--g", "2", "--p", "11.2", "--q", "1,1"]);
    assert!(r.stdout.starts_with("V_(2,0) > 1/224\n"));
    let r = run(&["bound", "thm3", "--g", "2", "--p", "12", "--q", "1,1"]);
    assert_eq!(r.code, EXIT_DOMAIN);
    assert!(r.stderr.contains("mu_0"));
    assert_eq!(run(&["bound", "thm2", "--g", "1"]).code, EXIT_DOMAIN);
    assert_eq!(run(&["bound", "kodaira", "--g", "22"]).code, EXIT_DOMAIN);
    let r = run(&["bound", "kodaira", "--g", "22", "--override-exclusions", "--budget", "4"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("WARNING"));
}

#[test]
fn verify_subcommands() {
    let r = run(&["verify", "anchors"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.starts_with("anchors: OK"));
    for check in ["thm1", "thm2", "lemma1"] {
        assert_eq!(run(&["verify", check]).code, EXIT_OK, "{check}");
    }
    assert_eq!(run(&["verify", "nonsense"]).code, EXIT_USAGE);
}

#[test]
fn formats_carry_identical_rationals() {
    let text = run(&["volume", "--g", "2", "--n", "1"]).stdout;
    let value = text.trim();
    let csv = run(&["--format", "csv", "volume", "--g", "2", "--n", "1"]).stdout;
    assert_eq!(csv, format!("g,n,value\n2,1,{value}\n"));
    let json = run(&["--format", "json", "volume", "--g", "2", "--n", "1"]).stdout;
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["value"], value);

    let text = run(&["bound", "chain", "--g-max", "3", "--budget", "3"]).stdout;
    let csv = run(&["--format", "csv", "bound", "chain", "--g-max", "3", "--budget", "3"]).stdout;
    let json = run(&["--format", "json", "bound", "chain", "--g-max", "3", "--budget", "3"]).stdout;
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    for cell in doc["cells"].as_array().unwrap() {
        for field in ["exact", "lower", "upper"] {
            let v = cell[field].as_str().unwrap();
            if !v.is_empty() {
                assert!(text.contains(&format!("{field}={v}")));
                assert!(csv.contains(v));
            }
        }
    }
}

#[test]
fn asym_outputs() {
    let r = run(&["asym", "--g-max", "4", "--digits", "6"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("g=2 n=0 kind=exact r=43/17280"));
    assert!(r.stdout.contains("window c_est="));
    let r = run(&["--format", "csv", "asym", "--g-max", "8", "--source", "chain", "--budget", "4"]);
    assert!(r.stdout.contains("\n8,0,lower,"));
}

#[test]
fn output_is_deterministic() {
    let args = ["--format", "json", "bound", "kodaira", "--g", "24", "--budget", "6"];
    assert_eq!(run(&args), run(&args));
}

#[test]
fn cache_path_resolution_and_warm_runs() {
    let dir = tempfile::tempdir().unwrap();
    let env_path = dir.path().join("env.json");
    let flag_path = dir.path().join("flag.json");
    let mut env = BTreeMap::new();
    env.insert(CACHE_ENV.to_string(), env_path.display().to_string());

    let cold = run(&["volume", "--g", "2", "--n", "2"]);
    let first = run_env(&["volume", "--g", "2", "--n", "2"], &env);
    assert!(env_path.exists());
    let warm = run_env(&["volume", "--g", "2", "--n", "2"], &env);
    assert_eq!(cold, first);
    assert_eq!(cold, warm);
    assert!(!CacheFile::load(&env_path).unwrap().is_empty());

    let flag = flag_path.display().to_string();
    run_env(&["--cache-path", &flag, "volume", "--g", "1", "--n", "3"], &env);
    assert!(flag_path.exists());
    let cached = CacheFile::load(&flag_path).unwrap();
    assert!(cached.entries.keys().all(|k| k.g == 1));
}

#[test]
fn cache_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let active = dir.path().join("active.json").display().to_string();
    let out = dir.path().join("out.json").display().to_string();
    run(&["--cache-path", &active, "volume", "--g", "2", "--n", "0"]);
    let r = run(&["--cache-path", &active, "cache", "export", "--path", &out]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(std::fs::read_to_string(&active).unwrap(), std::fs::read_to_string(&out).unwrap());

    let other = dir.path().join("other.json").display().to_string();
    let r = run(&["--cache-path", &other, "cache", "import", "--path", &out]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(CacheFile::load(other.as_ref()).unwrap(), CacheFile::load(out.as_ref()).unwrap());

    let r = run(&["cache", "clear", "--path", &other]);
    assert_eq!(r.code, EXIT_OK);
    assert!(CacheFile::load(other.as_ref()).unwrap().is_empty());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"version\": 1,\n  \"entries\": {\n    \"g=2;psi=4;kappa=\": \"2/4\"\n  }\n}\n").unwrap();
    let r = run(&["--cache-path", &other, "cache", "import", "--path", bad.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_DOMAIN);
    assert!(r.stderr.contains("line 4"), "{}", r.stderr);

    std::fs::write(&bad, "{\"version\": 2, \"entries\": {}}").unwrap();
    let r = run(&["--cache-path", &other, "cache", "import", "--path", bad.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_DOMAIN);
    assert_eq!(run(&["cache", "import", "--path", &out]).code, EXIT_DOMAIN);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_wpvol");
    let out = Command::new(bin).args(["volume", "--g", "1", "--n", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "1/8\n");
    let out = Command::new(bin).args(["volume", "--g", "0", "--n", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(bin).args(["volume", "--bad-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
