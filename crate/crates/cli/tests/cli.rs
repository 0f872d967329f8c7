use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hptree"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_corpus(dir: &Path, name: &str, lines: impl IntoIterator<Item = String>) -> PathBuf {
    let p = dir.join(name);
    let mut text = lines.into_iter().collect::<Vec<_>>().join("\n");
    text.push('\n');
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn members_are_always_found() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", (0..300).map(|i| format!("item-{i}")));
    let tree = dir.path().join("t.hpt1");
    for kind in [&["--kind", "minimal"][..], &["--kind", "depth", "--depth", "16"], &["--kind", "reduced"]] {
        let mut args = vec!["encode", corpus.to_str().unwrap(), "--out", tree.to_str().unwrap()];
        args.extend_from_slice(kind);
        assert!(run(&args).status.success());
        let o = run(&["query", tree.to_str().unwrap(), corpus.to_str().unwrap()]);
        assert!(o.status.success());
        let out = stdout(&o);
        assert_eq!(out.lines().count(), 301);
        assert!(out.lines().skip(1).all(|l| l.ends_with(",PresentOrFalsePositive")), "{out}");
    }
}

#[test]
fn reduced_tree_accepts_anything() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", (0..50).map(|i| format!("m{i}")));
    let others = write_corpus(dir.path(), "o.txt", (0..200).map(|i| format!("other {i}")));
    let tree = dir.path().join("t.hpt1");
    let o = run(&["encode", corpus.to_str().unwrap(), "--kind", "reduced", "--out", tree.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&run(&["query", tree.to_str().unwrap(), others.to_str().unwrap()]));
    assert!(out.lines().skip(1).all(|l| l.ends_with(",PresentOrFalsePositive")));
}

#[test]
fn minimal_rate_of_thousand_lines() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", (0..1000).map(|i| format!("line number {i}")));
    let tree = dir.path().join("t.hpt1");
    let o = run(&["encode", corpus.to_str().unwrap(), "--out", tree.to_str().unwrap()]);
    let report = String::from_utf8(o.stderr).unwrap();
    let bpe: f64 = report
        .split_whitespace()
        .find_map(|f| f.strip_prefix("bits_per_element="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((2.7..=2.9).contains(&bpe), "{report}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write_corpus(dir.path(), "d.txt", ["a", "b", "a"].map(String::from));
    let tree = dir.path().join("t.hpt1");
    let o = run(&["encode", dup.to_str().unwrap(), "--out", tree.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["encode", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let junk = dir.path().join("junk.hpt1");
    std::fs::write(&junk, b"NOPE\x01\x00\x10\x05").unwrap();
    assert_eq!(run(&["decode", junk.to_str().unwrap()]).status.code(), Some(3));
    let good = std::fs::read(fixture("words-minimal.hpt1")).unwrap();
    std::fs::write(&junk, &good[..good.len() - 4]).unwrap();
    assert_eq!(run(&["decode", junk.to_str().unwrap()]).status.code(), Some(3));
    let o = run(&["rate", "--n", "5000000000", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(4));
    let raw = dir.path().join("r.bin");
    std::fs::write(&raw, [1u8, 2, 3]).unwrap();
    let o = run(&["encode", raw.to_str().unwrap(), "--format", "raw-u64"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn decode_summary_and_canonical_copy() {
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("copy.hpt1");
    let o = run(&["decode", fixture("words-depth12.hpt1").to_str().unwrap(), "--out", copy.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..4], &["depth", "60", "12", "16"]);
    assert_eq!(std::fs::read(copy).unwrap(), std::fs::read(fixture("words-depth12.hpt1")).unwrap());
}

#[test]
fn raw_records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("r.bin");
    let bytes: Vec<u8> = (0..100u64).flat_map(|i| (i * 0x9E37_79B9).to_le_bytes()).collect();
    std::fs::write(&raw, bytes).unwrap();
    let tree = dir.path().join("t.hpt1");
    let args = ["--format", "raw-u64", "--key", "0xabc"];
    let mut enc = vec!["encode", raw.to_str().unwrap(), "--out", tree.to_str().unwrap()];
    enc.extend_from_slice(&args);
    assert!(run(&enc).status.success());
    let mut q = vec!["query", tree.to_str().unwrap(), raw.to_str().unwrap()];
    q.extend_from_slice(&args);
    let out = stdout(&run(&q));
    assert_eq!(out.lines().filter(|l| l.ends_with(",PresentOrFalsePositive")).count(), 100);
}

#[test]
fn table_edge_rows() {
    let out = stdout(&run(&["table", "--n", "1", "--depth", "5"]));
    let mut lines = out.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("H"), "0");
    assert_eq!(col("D"), "0");
    assert_eq!(col("F"), "1.000");
    let out = stdout(&run(&["oscillation", "--quantity", "F", "--n-range", "10:5:2"]));
    assert_eq!(out, "n,exact,smooth,residual\n");
}

#[test]
fn rate_and_fpsim_small() {
    let out = stdout(&run(&["rate", "--n", "2", "--trials", "10000"]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let model: f64 = row[6].parse().unwrap();
    assert!((model - 3.0).abs() < 0.1, "{out}");
    let out = stdout(&run(&[
        "fpsim", "--n", "100", "--kind", "depth", "--depth", "10", "--trials", "20", "--probes", "200000",
    ]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let z: f64 = row[9].parse().unwrap();
    assert!(z.abs() < 3.0, "{out}");
}
