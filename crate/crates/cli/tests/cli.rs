use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_govfunc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn govfunc")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_keys(dir: &Path, name: &str, keys: impl IntoIterator<Item = String>) -> PathBuf {
    let p = dir.join(name);
    let mut text = String::new();
    for k in keys {
        text.push_str(&k);
        text.push('\n');
    }
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mphf_over_three_keys() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(dir.path(), "k.txt", ["alpha", "beta", "gamma"].map(String::from));
    let out = dir.path().join("m.bin");
    let b = run(&["build", "--kind", "mphf", "--keys", s(&keys), "--output", s(&out)]);
    assert_eq!(code(&b), 0, "{}", String::from_utf8_lossy(&b.stderr));
    assert!(stdout(&b).contains("bits/key"));

    let q = run(&["query", "--input", s(&out), "--keys", s(&keys)]);
    assert_eq!(code(&q), 0);
    let mut got: Vec<u64> = stdout(&q).lines().map(|l| l.parse().unwrap()).collect();
    got.sort_unstable();
    assert_eq!(got, vec![0, 1, 2]);

    let v = run(&["verify", "--input", s(&out), "--keys", s(&keys)]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).contains("PASS"));
}

#[test]
fn mphf_query_is_a_permutation() {
    let dir = TempDir::new().unwrap();
    let n = 5000;
    let keys = write_keys(dir.path(), "k.txt", (0..n).map(|i| format!("key-{i}")));
    let out = dir.path().join("m.bin");
    assert_eq!(code(&run(&["build", "--kind", "mphf", "--keys", s(&keys), "--output", s(&out)])), 0);
    let q = run(&["query", "--input", s(&out), "--keys", s(&keys)]);
    let mut got: Vec<u64> = stdout(&q).lines().map(|l| l.parse().unwrap()).collect();
    got.sort_unstable();
    assert_eq!(got, (0..n as u64).collect::<Vec<_>>());
}

#[test]
fn sf_of_ordinals_answers_ordinals() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(dir.path(), "k.txt", (0..300).map(|i| format!("w{i}")));
    let values = write_keys(dir.path(), "v.txt", (0..300).map(|i| i.to_string()));
    let out = dir.path().join("s.bin");
    let b = run(&["build", "--kind", "sf", "--keys", s(&keys), "--values", s(&values), "--output", s(&out)]);
    assert_eq!(code(&b), 0);
    let q = run(&["query", "--input", s(&out), "--key", "w123"]);
    assert_eq!(stdout(&q).trim(), "123");
    let v = run(&["verify", "--input", s(&out), "--keys", s(&keys), "--values", s(&values)]);
    assert_eq!(code(&v), 0);
}

#[test]
fn short_values_are_a_flag_error() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(dir.path(), "k.txt", ["a", "b", "c"].map(String::from));
    let values = write_keys(dir.path(), "v.txt", ["1", "2"].map(String::from));
    let out = dir.path().join("s.bin");
    let b = run(&["build", "--kind", "sf", "--keys", s(&keys), "--values", s(&values), "--output", s(&out)]);
    assert_eq!(code(&b), 2);
    assert!(!out.exists());
}

#[test]
fn peel_only_builds_random_keys() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(dir.path(), "k.txt", (0..20_000).map(|i| format!("{:x}", i * 7919)));
    for kind in ["sf", "mphf"] {
        let out = dir.path().join(format!("{kind}.bin"));
        let b = run(&["build", "--kind", kind, "--keys", s(&keys), "--peel-only", "--output", s(&out)]);
        assert_eq!(code(&b), 0, "{}", String::from_utf8_lossy(&b.stderr));
        assert!(stdout(&b).contains("active fraction: 0.0000"));
        assert_eq!(code(&run(&["verify", "--input", s(&out), "--keys", s(&keys)])), 0);
    }
}

#[test]
fn wrong_keys_fail_verification() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(dir.path(), "k.txt", (0..1000).map(|i| format!("a{i}")));
    let other = write_keys(dir.path(), "o.txt", (0..1000).map(|i| format!("b{i}")));
    let out = dir.path().join("m.bin");
    assert_eq!(code(&run(&["build", "--kind", "mphf", "--keys", s(&keys), "--output", s(&out)])), 0);
    let v = run(&["verify", "--input", s(&out), "--keys", s(&other)]);
    assert_eq!(code(&v), 1);
    assert!(stdout(&v).contains("FAIL at key"));
}

#[test]
fn report_bits_match_file_size() {
    let dir = TempDir::new().unwrap();
    let n = 20_000;
    let keys = write_keys(dir.path(), "k.txt", (0..n).map(|i| format!("r{i}")));
    let out = dir.path().join("d.bin");
    assert_eq!(code(&run(&["build", "--kind", "dict", "--bits", "8", "--keys", s(&keys), "--output", s(&out)])), 0);
    let v = run(&["verify", "--input", s(&out), "--keys", s(&keys)]);
    assert_eq!(code(&v), 0);
    let text = stdout(&v);
    let line = text.lines().find(|l| l.starts_with("size:")).unwrap();
    let reported: f64 = line.split(", ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    let actual = fs::metadata(&out).unwrap().len() as f64 * 8.0 / n as f64;
    assert!((reported - actual).abs() <= 0.01 * actual, "{reported} vs {actual}");
}

#[test]
fn malformed_structure_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let junk = dir.path().join("junk.bin");
    fs::write(&junk, b"GOVFUNC1\x01\x09").unwrap();
    let q = run(&["query", "--input", s(&junk), "--key", "x"]);
    assert_eq!(code(&q), 4);
    assert!(String::from_utf8_lossy(&q.stderr).contains("invalid header field kind"));
}

#[test]
fn usage_and_io_errors() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(dir.path(), "k.txt", ["a"].map(String::from));
    let out = dir.path().join("x.bin");
    assert_eq!(code(&run(&["build", "--kind", "dict", "--keys", s(&keys), "--output", s(&out)])), 2);
    assert_eq!(code(&run(&["build", "--kind", "mphf", "--r", "4", "--keys", s(&keys), "--output", s(&out)])), 2);
    assert_eq!(code(&run(&["build", "--kind", "sf", "--r", "5", "--keys", s(&keys), "--output", s(&out)])), 2);
    assert_eq!(code(&run(&["build", "--kind", "sf", "--r", "4", "--peel-only", "--keys", s(&keys), "--output", s(&out)])), 2);
    assert_eq!(code(&run(&["query", "--input", s(&out)])), 2);
    assert_eq!(code(&run(&["build", "--kind", "mphf", "--keys", "/nonexistent/keys", "--output", s(&out)])), 4);
    let dup = write_keys(dir.path(), "dup.txt", ["same", "same"].map(String::from));
    assert_eq!(code(&run(&["build", "--kind", "mphf", "--keys", s(&dup), "--output", s(&out)])), 3);
}

#[test]
fn builds_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(dir.path(), "k.txt", (0..3000).map(|i| format!("d{i}")));
    let mut files = Vec::new();
    for (name, seed) in [("a", None), ("b", None), ("c", Some("beef")), ("d", Some("0xBEEF"))] {
        let out = dir.path().join(name);
        let mut args = vec!["build", "--kind", "sf", "--keys", s(&keys), "--output", s(&out)];
        if let Some(seed) = seed {
            args.extend(["--seed", seed]);
        }
        assert_eq!(code(&run(&args)), 0);
        files.push(fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[2], files[3]);
    assert_ne!(files[0], files[2]);
}

#[test]
fn binary_key_files() {
    let dir = TempDir::new().unwrap();
    let keys: Vec<Vec<u8>> = (0..500u32).map(|i| [b"bin\n".as_slice(), &i.to_le_bytes()].concat()).collect();
    let mut data = Vec::new();
    for k in &keys {
        data.extend_from_slice(&(k.len() as u32).to_le_bytes());
        data.extend_from_slice(k);
    }
    let path = dir.path().join("k.bin");
    fs::write(&path, data).unwrap();
    let out = dir.path().join("m.bin");
    assert_eq!(code(&run(&["build", "--kind", "mphf", "--binary-keys", "--keys", s(&path), "--output", s(&out)])), 0);
    assert_eq!(code(&run(&["verify", "--input", s(&out), "--binary-keys", "--keys", s(&path)])), 0);
    let q = run(&["query", "--input", s(&out), "--binary-keys", "--keys", s(&path)]);
    assert_eq!(stdout(&q).lines().count(), 500);
}

#[test]
fn dict_query_prints_booleans() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(dir.path(), "k.txt", (0..100).map(|i| format!("m{i}")));
    let out = dir.path().join("d.bin");
    assert_eq!(code(&run(&["build", "--kind", "dict", "--bits", "16", "--keys", s(&keys), "--output", s(&out)])), 0);
    let q = run(&["query", "--input", s(&out), "--keys", s(&keys)]);
    assert!(stdout(&q).lines().all(|l| l == "true"));
}

#[test]
fn bench_csv() {
    let dir = TempDir::new().unwrap();
    let keys = write_keys(dir.path(), "k.txt", (0..4000).map(|i| format!("b{i}")));
    let csv = dir.path().join("out.csv");
    let b = run(&[
        "bench", "--kind", "mphf", "--keys", s(&keys), "--chunk-bits-sweep", "8..10", "--runs", "1", "--lookups", "1000", "--csv", s(&csv),
    ]);
    assert_eq!(code(&b), 0, "{}", String::from_utf8_lossy(&b.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,r,chunk_bits,n,bits_per_key,build_ns_per_key,lookup_ns_per_key,mean_attempts,active_fraction,flags");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("mphf,3,8,4000,"));

    let a = run(&["bench", "--kind", "sf", "--keys", s(&keys), "--ablation", "--runs", "1", "--lookups", "100"]);
    assert_eq!(code(&a), 0);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 9);
    assert_eq!(text.lines().next().unwrap(), lines[0]);
}
