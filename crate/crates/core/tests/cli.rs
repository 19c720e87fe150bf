use rexgen::diffengine::ParamStore;
use rexgen::synth::toy_reactions;
use std::path::Path;
use std::process::{Command, Output};

fn rexgen(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_rexgen")).current_dir(dir).args(args).output().unwrap();
    out
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("toy.rxn"), toy_reactions(2, 20).join("\n")).unwrap();
    std::fs::write(p.join("run.cfg"), "# small run\nhidden=8\ndepth=2\nepochs=3\ntrain_fraction=1.0\ndev_fraction=0.0\n").unwrap();

    let common = ["--data", "toy.rxn", "--config", "run.cfg", "--seed", "3"];
    ok(&rexgen(p, &[&["train-center", "--out", "c.ckpt", "--hidden", "10", "--variant", "local"][..], &common].concat()));
    let center = ParamStore::load(&p.join("c.ckpt")).unwrap();
    // the flag overrides the config file
    assert_eq!(center.meta("center.hidden"), Some("10"));
    assert_eq!(center.meta("center.variant"), Some("local"));

    ok(&rexgen(p, &[&["train-ranker", "--model", "c.ckpt", "--out", "r.ckpt", "--variant", "wln"][..], &common].concat()));
    let ranker = ParamStore::load(&p.join("r.ckpt")).unwrap();
    assert_eq!(ranker.meta("ranker.hidden"), Some("8"));
    assert_eq!(ranker.meta("ranker.variant"), Some("wln"));

    let pred = ok(&rexgen(p, &["predict", "--model", "c.ckpt", "--model", "r.ckpt", "--k", "6", "CCBr.NCC"]));
    let first = pred.lines().nth(1).unwrap();
    assert!(first.starts_with("1\t"), "{pred}");
    let again = ok(&rexgen(p, &["predict", "--model", "r.ckpt", "--model", "c.ckpt", "--k", "6", "CCBr.NCC"]));
    assert_eq!(pred, again);

    let kv = ok(&rexgen(p, &["evaluate", "--data", "toy.rxn", "--model", "c.ckpt", "--model", "r.ckpt", "--kv"]));
    for key in ["records=20", "coverage@6=", "p@1=", "p@5=", "mrr=", "latency_p95_ms="] {
        assert!(kv.contains(key), "{kv}");
    }
    let table = ok(&rexgen(p, &["evaluate", "--data", "toy.rxn", "--model", "c.ckpt", "--augment-truth"]));
    assert!(table.contains("P@1 (*)"), "{table}");
}

#[test]
fn bad_invocations_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = rexgen(p, &["train-center", "--data", "missing.rxn"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.rxn"));
    let out = rexgen(p, &["train-center", "--data", "x", "--variant", "wldn"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(p.join("bad.cfg"), "hidden=0\n").unwrap();
    let out = rexgen(p, &["train-center", "--config", "bad.cfg"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("hidden"));
}

#[test]
fn selfcheck_passes() {
    let out = rexgen(Path::new("."), &["selfcheck", "--seed", "2"]);
    let text = ok(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 9, "{text}");
}
