use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use num_bigint::BigUint;
use ruas::attacks::{MatrixConfig, VICTIM_IDS};
use ruas::cli::{exit, DeploymentConfig};
use ruas::schemes::SchemeKind;

fn ruas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruas")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn keygen(dir: &Path, args: &[&str]) {
    let out = dir.to_str().unwrap();
    let mut all = vec!["keygen", "--out", out];
    all.extend_from_slice(args);
    assert_eq!(ruas(&all).status.code(), Some(exit::OK));
}

#[test]
fn desk_matrix_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let o = ruas(&["matrix", "--p", "23", "--hash", "stub-identity", "--seed", "1", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::OK));
    assert_eq!(stdout(&o), golden("matrix_p23_seed1.txt"));
    assert_eq!(std::fs::read_to_string(csv).unwrap(), golden("matrix_p23_seed1.csv"));
}

#[test]
fn masquerade_against_hl_reports_seventeen() {
    let o = ruas(&["attack", "--name", "masquerade", "--scheme", "hwang-li", "--p", "23", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(exit::OK));
    let text = stdout(&o);
    assert!(text.contains("recovered pw: 17\n"), "{text}");
    assert!(text.contains("victim pw:    17\n"), "{text}");
}

#[test]
fn attack_exit_code_follows_expectation() {
    // a forgery is expected to fail against IMP, so the failed attempt exits 0
    let o = ruas(&["attack", "--name", "chan-cheng", "--scheme", "imp", "--p", "23", "--hash", "stub-identity"]);
    assert_eq!(o.status.code(), Some(exit::OK), "{}", stdout(&o));
    assert!(stdout(&o).contains("result: failed"));
}

#[test]
fn register_login_verify_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let st = dir.path().join("st");
    keygen(&st, &["--scheme", "hl", "--p", "23", "--hash", "stub-identity", "--seed", "1"]);
    let s = st.to_str().unwrap();
    let card = st.join("alice.card");
    let c = card.to_str().unwrap();
    assert!(ruas(&["register", "--state", s, "--id", "5", "--card", c, "--at", "9"]).status.success());
    assert_eq!(std::fs::read_to_string(&card).unwrap(), "v1|HL|0000000000000005||11\n");

    let req = st.join("req.hex");
    let o = ruas(&["login", "--state", s, "--card", c, "--at", "9", "--request-out", req.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::OK));
    assert_eq!(stdout(&o), "accepted (OK)\n");

    let o = ruas(&["verify", "--state", s, "--request", req.to_str().unwrap(), "--at", "70"]);
    assert_eq!(o.status.code(), Some(exit::NEGATIVE));
    assert_eq!(stdout(&o), "rejected (STALE_TIMESTAMP)\n");
}

#[test]
fn tampered_card_is_bad_proof() {
    let dir = tempfile::tempdir().unwrap();
    let st = dir.path().join("st");
    keygen(&st, &["--scheme", "imp", "--bits", "64", "--seed", "4"]);
    let s = st.to_str().unwrap();
    let card = st.join("u.card");
    let c = card.to_str().unwrap();
    assert!(ruas(&["register", "--state", s, "--id", "77", "--card", c]).status.success());
    assert!(ruas(&["login", "--state", s, "--card", c]).status.success());

    let line = std::fs::read_to_string(&card).unwrap();
    let (head, pw) = line.trim().rsplit_once('|').unwrap();
    let bumped = BigUint::parse_bytes(pw.as_bytes(), 16).unwrap() + 1u32;
    std::fs::write(&card, format!("{head}|{bumped:x}\n")).unwrap();
    let o = ruas(&["login", "--state", s, "--card", c]);
    assert_eq!(o.status.code(), Some(exit::NEGATIVE));
    assert_eq!(stdout(&o), "rejected (BAD_PROOF)\n");
}

#[test]
fn login_against_served_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let st = dir.path().join("st");
    keygen(&st, &["--scheme", "slh", "--bits", "64", "--seed", "2"]);
    let s = st.to_str().unwrap();
    let card = st.join("u.card");
    let c = card.to_str().unwrap();
    assert!(ruas(&["register", "--state", s, "--j", "alice", "--card", c]).status.success());

    let mut server = Command::new(env!("CARGO_BIN_EXE_ruas"))
        .args(["serve", "--state", s, "--listen", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut first = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut first).unwrap();
    let addr = first.trim().strip_prefix("listening on ").unwrap().to_string();

    let o = ruas(&["login", "--state", s, "--card", c, "--endpoint", &addr]);
    let refused = ruas(&["login", "--state", s, "--card", c, "--endpoint", "127.0.0.1:1"]);
    server.kill().unwrap();
    let _ = server.wait();

    assert_eq!(o.status.code(), Some(exit::OK), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(refused.status.code(), Some(exit::TRANSPORT));
}

#[test]
fn usage_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("d.conf");
    std::fs::write(&conf, "p = 23\nseed = 1\n").unwrap();
    let conf = conf.to_str().unwrap();
    let bad_conf = dir.path().join("bad.conf");
    std::fs::write(&bad_conf, "colour = blue\n").unwrap();

    let codes = [
        ruas(&["matrix", "--frobnicate"]).status.code(),
        ruas(&["matrix", "--config", bad_conf.to_str().unwrap()]).status.code(),
        ruas(&["login", "--state", "/nonexistent", "--card", "x"]).status.code(),
        ruas(&["matrix", "--config", conf, "--seed", "2"]).status.code(),
    ];
    assert_eq!(codes, [Some(exit::USAGE), Some(exit::CONFIG), Some(exit::FILE), Some(exit::SEED_CONFLICT)]);
    assert_eq!(ruas(&["matrix", "--config", conf, "--seed", "1", "--hash", "stub-identity"]).status.code(), Some(0));
}

#[test]
fn keygen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    keygen(&a, &["--bits", "64", "--seed", "8"]);
    keygen(&b, &["--bits", "64", "--seed", "8"]);
    for f in ["deployment.conf", "secret"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
}

fn spellings(x: &BigUint) -> [String; 2] {
    [x.to_str_radix(10), x.to_str_radix(16)]
}

fn assert_absent(haystack: &str, secret: &BigUint, what: &str) {
    for s in spellings(secret) {
        assert!(!haystack.to_lowercase().contains(&s), "{what} {s} leaked");
    }
}

#[test]
fn secrets_never_reach_registry_or_reports() {
    let dir = tempfile::tempdir().unwrap();
    for scheme in ["hl", "slh", "imp"] {
        let st = dir.path().join(scheme);
        keygen(&st, &["--scheme", scheme, "--bits", "64", "--seed", "12"]);
        let s = st.to_str().unwrap();
        let secret = std::fs::read_to_string(st.join("secret")).unwrap();
        let xs_hex = secret.lines().next().unwrap().trim_start_matches("xs = 0x");
        let xs = BigUint::parse_bytes(xs_hex.as_bytes(), 16).unwrap();

        let mut pws = Vec::new();
        for id in 1000..1010u64 {
            let card = st.join(format!("{id}.card"));
            let c = card.to_str().unwrap();
            assert!(ruas(&["register", "--state", s, "--id", &id.to_string(), "--card", c]).status.success());
            let line = std::fs::read_to_string(&card).unwrap();
            let pw = line.trim().rsplit('|').next().unwrap().to_string();
            pws.push(BigUint::parse_bytes(pw.as_bytes(), 16).unwrap());
        }
        let registry = std::fs::read_to_string(st.join("registry")).unwrap();
        assert_eq!(registry.lines().count(), 10);
        assert_absent(&registry, &xs, "xs");
        for pw in &pws {
            assert_absent(&registry, pw, "pw");
        }
        assert!(!std::fs::read_to_string(st.join("deployment.conf")).unwrap().contains(xs_hex));
    }

    let csv = dir.path().join("m.csv");
    let o = ruas(&["matrix", "--bits", "64", "--seed", "12", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::OK), "{}", stdout(&o));
    let report = stdout(&o) + &std::fs::read_to_string(csv).unwrap();

    let cfg = DeploymentConfig { prime: ruas::cli::PrimeSpec::Bits(64), seed: 12, ..Default::default() };
    let mcfg = MatrixConfig::new(cfg.params().unwrap(), 12);
    for scheme in SchemeKind::ALL {
        let secret = mcfg.secret_for(scheme);
        assert_absent(&report, secret.xs(), "matrix xs");
        if scheme == SchemeKind::Hl {
            for id in VICTIM_IDS {
                assert_absent(&report, &BigUint::from(id).modpow(secret.xs(), &mcfg.params.p), "victim pw");
            }
        }
    }
}
