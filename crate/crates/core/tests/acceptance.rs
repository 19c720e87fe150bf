//! Acceptance run: one line per criterion, non-zero exit if any gating
//! criterion fails. Criterion 11 needs a real dataset and only runs when
//! `REXGEN_USPTO15K` names a reaction file.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rexgen::candgen::{enumerate_candidates, GenConfig};
use rexgen::center::CenterVariant;
use rexgen::pipeline::*;
use rexgen::ranker::RankerVariant;
use rexgen::selfcheck::*;
use rexgen::synth::{adjacent_edit_reactions, local_pairs, random_reactants, reagent_dependent_reactions, toy_reactions};
use std::time::Instant;

struct Outcome {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn records(lines: &[String]) -> Vec<ReactionRecord> {
    let ds = parse_dataset(&lines.join("\n"), 150).unwrap();
    assert!(ds.skipped.is_empty(), "fixture lines must parse: {:?}", ds.skipped);
    ds.records
}

fn best(out: &TrainOutcome) -> f64 {
    out.history.iter().map(|s| s.train_metric).fold(0.0, f64::max)
}

fn wl_soundness() -> Outcome {
    let t = Instant::now();
    let s = wl_stats(&wl_corpus(0), 3);
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        id: "1 WL soundness",
        passed: s.iso_pairs > 0 && s.iso_agreed == s.iso_pairs && s.noniso_distinguished * 100 >= s.noniso_pairs * 99 && secs < 10.0,
        detail: format!(
            "isomorphic {}/{} agreed, non-isomorphic {}/{} distinguished, {secs:.2} s",
            s.iso_agreed, s.iso_pairs, s.noniso_distinguished, s.noniso_pairs
        ),
    }
}

fn gradient_fidelity() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut passed = true;
    for target in GradTarget::ALL {
        match gradient_report(target, 11, 6) {
            Ok(r) => {
                passed &= r.checked > 0 && r.max_rel_error < GRAD_TOLERANCE;
                parts.push(format!("{} {:.1e}", target.name(), r.max_rel_error));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("{}: {e}", target.name()));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        id: "2 gradient fidelity",
        passed: passed && secs < 60.0,
        detail: format!("{}, {secs:.1} s", parts.join(", ")),
    }
}

fn equation_forms() -> Outcome {
    let e = equation_form_error(5, 40);
    Outcome {
        id: "3 equation-form equivalence",
        passed: e < FORM_TOLERANCE,
        detail: format!("max abs difference {e:.2e}"),
    }
}

fn enumeration_oracle() -> Outcome {
    let s = enumeration_agreement(21, 20);
    Outcome {
        id: "4 enumeration oracle",
        passed: s.instances == 20 && s.agreed == s.instances,
        detail: format!("{}/{} instances agree{}", s.agreed, s.instances, s.first_mismatch.map(|m| format!("; {m}")).unwrap_or_default()),
    }
}

fn coverage_link_check() -> Outcome {
    let s = coverage_link(8, 300);
    Outcome {
        id: "5 coverage link",
        passed: s.cases > 0 && s.found == s.cases,
        detail: format!("{}/{} covered reactions enumerate the true edits", s.found, s.cases),
    }
}

fn center_overfit() -> Outcome {
    let t = Instant::now();
    let toy = records(&toy_reactions(7, 50));
    let cfg = RunConfig {
        center_variant: CenterVariant::Local,
        hidden: 64,
        depth: 3,
        k: 6,
        epochs: 300,
        stop_at: Some(0.95),
        ..RunConfig::default()
    };
    let local_toy = train_center(&cfg, &toy, &[], &mut |_| {}).unwrap();
    let toy_cov = best(&local_toy);

    let fixture = records(&reagent_dependent_reactions(16));
    let mut rcfg = RunConfig {
        k: 2,
        epochs: 300,
        stop_at: Some(1.0),
        ..cfg
    };
    let local = best(&train_center(&rcfg, &fixture, &[], &mut |_| {}).unwrap());
    rcfg.center_variant = CenterVariant::Global;
    let global = best(&train_center(&rcfg, &fixture, &[], &mut |_| {}).unwrap());
    Outcome {
        id: "6 center overfit",
        passed: toy_cov >= 0.95 && global >= local,
        detail: format!(
            "toy coverage@6 {toy_cov:.2} after {} epochs; reagent fixture coverage@2 global {global:.2} vs local {local:.2}; {:.0} s",
            local_toy.history.len(),
            t.elapsed().as_secs_f64()
        ),
    }
}

fn ranker_overfit() -> Outcome {
    let t = Instant::now();
    let toy = records(&toy_reactions(7, 50));
    let cfg = RunConfig {
        ranker_variant: RankerVariant::Wldn,
        hidden: 32,
        augment_truth: true,
        epochs: 300,
        stop_at: Some(0.9),
        ..RunConfig::default()
    };
    let wldn_toy = train_ranker(&cfg, &toy, &[], CenterSource::Oracle, &mut |_| {}).unwrap();
    let toy_p1 = best(&wldn_toy);

    let adjacent = records(&adjacent_edit_reactions(20));
    let mut acfg = RunConfig {
        epochs: 60,
        stop_at: Some(1.0),
        ..cfg
    };
    let wldn = best(&train_ranker(&acfg, &adjacent, &[], CenterSource::Oracle, &mut |_| {}).unwrap());
    acfg.ranker_variant = RankerVariant::SumPool;
    let wln = best(&train_ranker(&acfg, &adjacent, &[], CenterSource::Oracle, &mut |_| {}).unwrap());
    Outcome {
        id: "7 ranker overfit",
        passed: toy_p1 >= 0.9 && wldn >= wln,
        detail: format!(
            "toy WLDN P@1 {toy_p1:.2} after {} epochs; adjacent-edit fixture P@1 WLDN {wldn:.2} vs WLN {wln:.2}; {:.0} s",
            wldn_toy.history.len(),
            t.elapsed().as_secs_f64()
        ),
    }
}

fn latency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = GenConfig {
        k: 8,
        max_changes: 3,
        ..GenConfig::default()
    };
    let mut times = Vec::new();
    let mut total = 0;
    for _ in 0..40 {
        let comps = rng.gen_range(2..=3);
        let g = random_reactants(&mut rng, 50, comps);
        let pairs = local_pairs(&g, rng.gen_range(0..50), 8);
        let start = Instant::now();
        let list = enumerate_candidates(&g, &pairs, &cfg).unwrap();
        times.push(start.elapsed().as_secs_f64() * 1e3);
        total += list.candidates.len();
    }
    let (median, p95) = rexgen::pipeline::eval::percentiles(&times);
    Outcome {
        id: "8 latency",
        passed: median < 50.0,
        detail: format!("median {median:.2} ms, p95 {p95:.2} ms, {:.0} candidates per reaction", total as f64 / 40.0),
    }
}

fn identities() -> Outcome {
    let e = analytic_identities(9, 20);
    Outcome {
        id: "9 analytic identities",
        passed: e.center_uniform < IDENTITY_TOLERANCE && e.ranking_uniform < IDENTITY_TOLERANCE && e.identity_score < IDENTITY_TOLERANCE,
        detail: format!(
            "center {:.1e}, ranking {:.1e}, identity score {:.1e}",
            e.center_uniform, e.ranking_uniform, e.identity_score
        ),
    }
}

fn determinism() -> Outcome {
    let data = records(&toy_reactions(5, 24));
    let cfg = RunConfig {
        hidden: 16,
        depth: 2,
        epochs: 4,
        augment_truth: true,
        ..RunConfig::default()
    };
    let run = || {
        let c = train_center(&cfg, &data[..20], &data[20..], &mut |_| {}).unwrap();
        let cm = rexgen::pipeline::train::center_model(&cfg);
        let r = train_ranker(&cfg, &data[..20], &data[20..], CenterSource::Model(&cm, &c.store), &mut |_| {}).unwrap();
        let rm = rexgen::pipeline::train::ranker_model(&cfg);
        let report = evaluate(&data, CenterSource::Model(&cm, &c.store), RankerSource::Model(&rm, &r.store), &cfg).unwrap();
        (c.store.to_checkpoint_string(), r.store.to_checkpoint_string(), report.without_timing())
    };
    let (a, b) = (run(), run());
    let same = a.0 == b.0 && a.1 == b.1 && a.2 == b.2;
    Outcome {
        id: "10 determinism",
        passed: same,
        detail: format!(
            "center checkpoints {}, ranker checkpoints {}, reports {}",
            if a.0 == b.0 { "identical" } else { "differ" },
            if a.1 == b.1 { "identical" } else { "differ" },
            if a.2 == b.2 { "identical" } else { "differ" }
        ),
    }
}

/// Global model trained on a real dataset; reports test coverage@8.
fn uspto_stretch() -> Option<String> {
    let path = std::env::var_os("REXGEN_USPTO15K")?;
    let ds = match load_dataset(std::path::Path::new(&path), 150) {
        Ok(ds) => ds,
        Err(e) => return Some(format!("could not load: {e}")),
    };
    let cfg = RunConfig {
        k: 8,
        epochs: std::env::var("REXGEN_USPTO_EPOCHS").ok().and_then(|v| v.parse().ok()).unwrap_or(10),
        patience: Some(3),
        ..RunConfig::default()
    };
    let s = split_records(ds.records, cfg.train_fraction, cfg.dev_fraction);
    let out = match train_center(&cfg, &s.train, &s.dev, &mut |e| eprintln!("  epoch {} coverage {:.3}", e.epoch, e.train_metric)) {
        Ok(o) => o,
        Err(e) => return Some(format!("training failed: {e}")),
    };
    let cm = rexgen::pipeline::train::center_model(&cfg);
    let rep = evaluate(&s.test, CenterSource::Model(&cm, &out.store), RankerSource::Oracle, &cfg).ok()?;
    let cov8 = rep.coverage.iter().find(|c| c.0 == 8).map_or(0.0, |c| c.1);
    Some(format!("test coverage@8 {cov8:.3} on {} reactions (reference level 0.901)", s.test.len()))
}

fn main() {
    let gating: [fn() -> Outcome; 10] = [
        wl_soundness,
        gradient_fidelity,
        equation_forms,
        enumeration_oracle,
        coverage_link_check,
        center_overfit,
        ranker_overfit,
        latency,
        identities,
        determinism,
    ];
    let mut failed = 0;
    for f in gating {
        let o = f();
        let mark = if o.passed { "PASS" } else { "FAIL" };
        println!("[{mark}] {}: {}", o.id, o.detail);
        failed += usize::from(!o.passed);
    }
    match uspto_stretch() {
        Some(d) => println!("[INFO] 11 dataset stretch (not gating): {d}"),
        None => println!("[SKIP] 11 dataset stretch (not gating): set REXGEN_USPTO15K to a reaction file to run"),
    }
    println!("acceptance: {}/10 gating criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
