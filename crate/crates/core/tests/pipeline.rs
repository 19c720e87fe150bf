use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rexgen::center::{CenterModel, CenterVariant};
use rexgen::chemgraph::{apply_edits, BondType, MolGraph};
use rexgen::diffengine::ParamStore;
use rexgen::pipeline::eval::mean_reciprocal_rank;
use rexgen::pipeline::train::gen_config;
use rexgen::pipeline::*;
use rexgen::ranker::{RankerModel, RankerVariant};
use rexgen::synth::{ring_closure_example, substitution_example, toy_reactions};
use std::collections::BTreeSet;
use std::path::Path;

fn fixture() -> Dataset {
    load_dataset(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/fixture20.rxn"), 150).unwrap()
}

fn toy(n: usize) -> Vec<ReactionRecord> {
    parse_dataset(&toy_reactions(3, n).join("\n"), 150).unwrap().records
}

/// Mapped bonds restricted to the maps of the product's largest component.
fn main_component_bonds(g: &MolGraph, keep: &BTreeSet<u32>) -> Vec<(u32, u32, BondType)> {
    let mut v: Vec<_> = g
        .bonds()
        .iter()
        .filter_map(|b| {
            let (x, y) = (g.atom(b.a).map_number?, g.atom(b.b).map_number?);
            (keep.contains(&x) && keep.contains(&y)).then_some((x.min(y), x.max(y), b.order))
        })
        .collect();
    v.sort_unstable();
    v
}

#[test]
fn fixture_file_records_are_consistent() {
    let ds = fixture();
    assert_eq!(ds.records.len(), 18);
    assert_eq!(ds.skipped.iter().map(|s| s.0).collect::<Vec<_>>(), vec![16, 17]);
    for r in &ds.records {
        let comps = r.product.components();
        let main = (0..r.product.n_atoms())
            .max_by_key(|&c| (comps.iter().filter(|&&x| x == comps[c]).count(), std::cmp::Reverse(comps[c])))
            .map(|i| comps[i]);
        let keep: BTreeSet<u32> = (0..r.product.n_atoms())
            .filter(|&i| Some(comps[i]) == main)
            .filter_map(|i| r.product.atom(i).map_number)
            .collect();
        let after = apply_edits(&r.reactants, &r.true_edits).unwrap();
        assert_eq!(main_component_bonds(&after, &keep), main_component_bonds(&r.product, &keep), "line {}", r.line_no);
        assert!(!r.true_edits.is_empty());
    }
}

#[test]
fn substitution_edits_by_map() {
    let r = parse_record(&substitution_example(), 1, 150).unwrap();
    let by_map = r.true_edits.to_maps(&r.reactants);
    assert_eq!(
        by_map,
        vec![(Some(1), Some(2), BondType::None), (Some(1), Some(3), BondType::Single)]
    );
}

#[test]
fn ring_closure_center_by_map() {
    let r = parse_record(&ring_closure_example(), 1, 150).unwrap();
    let pairs: BTreeSet<(u32, u32)> = r
        .true_edits
        .to_maps(&r.reactants)
        .into_iter()
        .map(|(a, b, _)| {
            let (a, b) = (a.unwrap(), b.unwrap());
            (a.min(b), a.max(b))
        })
        .collect();
    assert_eq!(pairs, BTreeSet::from([(27, 28), (7, 27), (8, 27)]));
}

#[test]
fn reagents_join_the_reactant_graph() {
    let ds = fixture();
    let r = ds.records.iter().find(|r| r.raw.contains("[BH4-:5]")).unwrap();
    assert_eq!(r.reactants.n_atoms(), 5);
    assert_eq!(r.reactants.n_components(), 2);
    let boron = r.reactants.atom_by_map(5).unwrap();
    assert!(r.labels.positive().iter().all(|&(u, v)| u != boron && v != boron));
}

#[test]
fn mrr_of_ranks_one_two_four() {
    let m = mean_reciprocal_rank(&[Some(1), Some(2), Some(4)]);
    assert!((m - 0.583_333).abs() < 1e-6);
}

#[test]
fn center_loss_falls_over_first_ten_epochs() {
    let records = toy(50);
    let cfg = RunConfig {
        center_variant: CenterVariant::Local,
        epochs: 10,
        ..RunConfig::default()
    };
    let out = train_center(&cfg, &records, &[], &mut |_| {}).unwrap();
    let losses: Vec<f64> = out.history.iter().map(|s| s.loss).collect();
    assert_eq!(losses.len(), 10);
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
}

fn untrained(seed: u64) -> (CenterModel, ParamStore, RankerModel, ParamStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cm = CenterModel::new(CenterVariant::Global, 12, 2);
    let mut cs = ParamStore::new();
    cm.init(&mut cs, &mut rng);
    let rm = RankerModel::new(RankerVariant::Wldn, 12, 2);
    let mut rs = ParamStore::new();
    rm.init(&mut rs, &mut rng);
    (cm, cs, rm, rs)
}

#[test]
fn oracle_ranker_precision_equals_coverage() {
    let records = toy(30);
    let (cm, cs, _, _) = untrained(1);
    let cfg = RunConfig {
        k: 10,
        ..RunConfig::default()
    };
    let rep = evaluate(&records, CenterSource::Model(&cm, &cs), RankerSource::Oracle, &cfg).unwrap();
    let cov = rep.coverage.iter().find(|c| c.0 == 10).unwrap().1;
    assert_eq!(rep.p_at_1, cov);
}

#[test]
fn report_invariants_and_augmentation() {
    let records = toy(24);
    for seed in 0..3 {
        let (cm, cs, rm, rs) = untrained(seed);
        let mut cfg = RunConfig {
            k: 4,
            ..RunConfig::default()
        };
        let plain = evaluate(&records, CenterSource::Model(&cm, &cs), RankerSource::Model(&rm, &rs), &cfg).unwrap();
        cfg.augment_truth = true;
        let star = evaluate(&records, CenterSource::Model(&cm, &cs), RankerSource::Model(&rm, &rs), &cfg).unwrap();
        for r in [&plain, &star] {
            assert!(r.p_at_1 <= r.p_at_3 && r.p_at_3 <= r.p_at_5 && r.p_at_5 <= 1.0);
            assert!(r.p_at_1 <= r.mrr && r.mrr <= 1.0);
        }
        let cov = plain.coverage.iter().find(|c| c.0 == 4).unwrap().1;
        assert!(plain.p_at_1 <= cov);
        assert!(star.p_at_1 >= plain.p_at_1 && star.p_at_3 >= plain.p_at_3 && star.p_at_5 >= plain.p_at_5);
        assert!(star.mrr >= plain.mrr);
    }
}

#[test]
fn predictions_are_repeatable() {
    let (_, cs, _, rs) = untrained(4);
    let p = Predictor::new(cs, rs, gen_config(&RunConfig::default())).unwrap();
    let a = p.predict("CCCl.NC", 5).unwrap();
    let b = p.predict("CCCl.NC", 5).unwrap();
    assert_eq!(a, b);
    assert!(!a.products.is_empty());
    assert!(a.products.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn nothing_above_threshold_is_reported() {
    let (_, cs, _, rs) = untrained(5);
    let mut p = Predictor::new(cs, rs, gen_config(&RunConfig::default())).unwrap();
    p.min_pair_score = 1.1;
    match p.predict("C(F)(F)(F)F", 5) {
        Err(PredictError::NoCandidates(0)) => {}
        other => panic!("expected an empty candidate report, got {other:?}"),
    }
}

#[test]
fn splits_are_stable_and_roughly_proportional() {
    let records = toy(60);
    let a = split_records(records.clone(), 0.8, 0.1);
    let b = split_records(records, 0.8, 0.1);
    assert_eq!(a, b);
    assert!(a.train.len() > a.dev.len() + a.test.len());
}
