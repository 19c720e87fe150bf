use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rexgen::candgen::{connectivity_ok, enumerate_candidates, valence_ok, GenConfig};
use rexgen::center::{label_pairs, top_k_pairs, ScoreMatrix};
use rexgen::chemgraph::{apply_edits, parse_smiles, write_smiles, Atom, BondType, Edit, EditSet, Element, FeatureOptions, MolGraph, ATOM_FDIM};
use rexgen::diffengine::{Matrix, ParamStore};
use rexgen::oracle::{brute_force_candidates, brute_force_top_k};
use rexgen::synth::{random_molecule, random_reactants};
use rexgen::wliso::{brute_force_isomorphic, wl_equivalent, wl_fingerprint};
use rexgen::wln::{atom_vectors, WlnConfig};
use std::collections::BTreeSet;

fn molecule(seed: u64, n: usize) -> MolGraph {
    random_molecule(&mut ChaCha8Rng::seed_from_u64(seed), n, 0.4)
}

fn bond_list(g: &MolGraph) -> Vec<(usize, usize, BondType)> {
    let mut v: Vec<_> = g.bonds().iter().map(|b| (b.a.min(b.b), b.a.max(b.b), b.order)).collect();
    v.sort_unstable();
    v
}

/// Edits that each change their pair, over `n` atoms.
fn changing_edits(g: &MolGraph, rng: &mut ChaCha8Rng, count: usize) -> EditSet {
    let n = g.n_atoms();
    let mut edits: Vec<Edit> = Vec::new();
    for _ in 0..100 {
        if edits.len() == count {
            break;
        }
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let t = BondType::ALL[rng.gen_range(0..4)];
        if u == v || t == g.bond_type(u, v) || edits.iter().any(|e| e.pair() == (u.min(v), u.max(v))) {
            continue;
        }
        edits.push(Edit::new(u, v, t));
    }
    EditSet::new(edits).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_round_trip_is_isomorphic(seed in any::<u64>(), n in 1usize..=8) {
        let g = molecule(seed, n);
        let back = parse_smiles(&write_smiles(&g)).unwrap();
        prop_assert!(brute_force_isomorphic(&g, &back).unwrap());
    }

    #[test]
    fn large_round_trip_keeps_fingerprint(seed in any::<u64>(), n in 9usize..=40) {
        let g = molecule(seed, n);
        let back = parse_smiles(&write_smiles(&g)).unwrap();
        prop_assert_eq!(wl_fingerprint(&g, 3), wl_fingerprint(&back, 3));
    }

    #[test]
    fn wl_ignores_atom_order(seed in any::<u64>(), n in 1usize..=25) {
        let g = molecule(seed, n);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let p = g.permuted(&perm);
        prop_assert!(wl_equivalent(&g, &p, 4));
        if n <= 8 {
            prop_assert!(brute_force_isomorphic(&g, &p).unwrap());
        }
    }

    #[test]
    fn wln_vectors_follow_permutation(seed in any::<u64>(), n in 2usize..=15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_reactants(&mut rng, n, 2);
        let cfg = WlnConfig::new("p", ATOM_FDIM, 8, 3);
        let mut store = ParamStore::new();
        cfg.init(&mut store, &mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let p = g.permuted(&perm);
        let c = atom_vectors(&store, &cfg, &g, FeatureOptions::default()).unwrap();
        let cp = atom_vectors(&store, &cfg, &p, FeatureOptions::default()).unwrap();
        // atom i of g is atom perm[i] of p
        for i in 0..n {
            for (a, b) in c.row(i).iter().zip(cp.row(perm[i])) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn reverting_edits_restores_bonds(seed in any::<u64>(), n in 3usize..=14, k in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_reactants(&mut rng, n, 2);
        let edits = changing_edits(&g, &mut rng, k);
        let p = apply_edits(&g, &edits).unwrap();
        let back = EditSet::new(edits.edits().iter().map(|e| Edit::new(e.u, e.v, g.bond_type(e.u, e.v)))).unwrap();
        let r = apply_edits(&p, &back).unwrap();
        prop_assert_eq!(bond_list(&r), bond_list(&g));
    }

    #[test]
    fn labels_recover_edits_of_connected_products(seed in any::<u64>(), n in 3usize..=14, k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_reactants(&mut rng, n, 1).with_index_maps();
        let edits = changing_edits(&g, &mut rng, k);
        let p = apply_edits(&g, &edits).unwrap();
        prop_assume!(p.n_components() == 1);
        let (labels, recovered) = label_pairs(&g, &p).unwrap();
        prop_assert_eq!(&recovered, &edits);
        let pos: BTreeSet<(usize, usize)> = labels.positive().iter().copied().collect();
        prop_assert_eq!(pos, edits.pairs().collect::<BTreeSet<_>>());
    }

    #[test]
    fn enumerator_matches_brute_force(seed in any::<u64>(), n in 3usize..=9, k in 1usize..=4, changes in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = random_reactants(&mut rng, n, 2);
        if seed % 3 == 0 {
            g = g.merged(&parse_smiles("c1ccncc1").unwrap());
        }
        let m = g.n_atoms();
        let k = k.min(m * (m - 1) / 2);
        let mut pairs = Vec::new();
        while pairs.len() < k {
            let (u, v) = (rng.gen_range(0..m), rng.gen_range(0..m));
            if u != v && !pairs.contains(&(u.min(v), u.max(v))) {
                pairs.push((u.min(v), u.max(v)));
            }
        }
        let cfg = GenConfig { k, max_changes: changes, cap: usize::MAX, ..GenConfig::default() };
        let fast = enumerate_candidates(&g, &pairs, &cfg).unwrap();
        let set: BTreeSet<EditSet> = fast.candidates.iter().map(|c| c.edits.clone()).collect();
        prop_assert_eq!(set.len(), fast.candidates.len());
        prop_assert_eq!(set, brute_force_candidates(&g, &pairs, &cfg));
        for c in &fast.candidates {
            prop_assert!(c.edits.len() <= changes);
            if valence_ok(&g) {
                prop_assert!(valence_ok(&c.product));
            }
        }
    }

    #[test]
    fn connectivity_matches_graph_components(seed in any::<u64>(), k in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edits = Vec::new();
        while edits.len() < k {
            let (u, v) = (rng.gen_range(0..7usize), rng.gen_range(0..7usize));
            if u != v && !edits.iter().any(|e: &Edit| e.pair() == (u.min(v), u.max(v))) {
                edits.push(Edit::new(u, v, BondType::Single));
            }
        }
        let set = EditSet::new(edits).unwrap();
        let atoms = set.atoms();
        let idx = |a: usize| atoms.binary_search(&a).unwrap();
        let g = MolGraph::new(
            vec![Atom::new(Element::CARBON); atoms.len()],
            set.pairs().map(|(u, v)| (idx(u), idx(v), BondType::Single)).collect::<Vec<_>>(),
        ).unwrap();
        prop_assert_eq!(connectivity_ok(&set), g.n_components() == 1);
    }

    #[test]
    fn top_k_matches_selection(seed in any::<u64>(), k in 0usize..=30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 20;
        // coarse values force ties
        let values: Vec<f64> = (0..n * (n - 1) / 2).map(|_| f64::from(rng.gen_range(0..8u8)) / 8.0).collect();
        let s = ScoreMatrix::new(n, values);
        prop_assert_eq!(top_k_pairs(&s, k), brute_force_top_k(&s, k));
    }

    #[test]
    fn checkpoints_round_trip_bitwise(seed in any::<u64>(), r in 1usize..6, c in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        store.insert_xavier("a.w", r, c, &mut rng);
        let tricky: Vec<f64> = (0..r * c).map(|i| [1e-300, -0.1, 1.0 / 3.0, f64::MIN_POSITIVE, 123456.789][i % 5]).collect();
        store.insert("b", rexgen::diffengine::DTensor::new(Matrix::from_vec(r, c, tricky)));
        store.set_meta("kind", "test");
        let text = store.to_checkpoint_string();
        let back = ParamStore::from_checkpoint_str(&text).unwrap();
        prop_assert_eq!(back.to_checkpoint_string(), text);
        for (name, t) in store.iter() {
            let bits: Vec<u64> = t.value.data().iter().map(|x| x.to_bits()).collect();
            let back_bits: Vec<u64> = back.get(name).unwrap().value.data().iter().map(|x| x.to_bits()).collect();
            prop_assert_eq!(bits, back_bits);
        }
    }
}
