use rexgen::chemgraph::{parse_smiles, MolGraph};
use rexgen::wliso::wl_equivalent;
use rexgen_web::*;

#[test]
fn benzene_has_one_wl_class() {
    let d = describe("c1ccccc1", 3).unwrap();
    assert_eq!(d.n_atoms, 6);
    assert_eq!(d.classes_per_round, vec![1, 1, 1, 1]);
    assert!(d.atoms.iter().all(|a| a.class == 0 && a.aromatic && a.hydrogens == 1));
}

#[test]
fn ethanol_atoms_fall_into_three_classes() {
    let d = describe("CCO", 2).unwrap();
    assert_eq!(d.classes_per_round, vec![2, 3, 3]);
    let other = describe("OCC", 2).unwrap();
    assert_eq!(d.fingerprint, other.fingerprint);
}

#[test]
fn regular_graphs_fool_wl_but_not_the_exact_check() {
    let c = compare("C1CC1.C1CC1", "C1CCCCC1", 3).unwrap();
    assert!(c.wl_equivalent);
    assert_eq!(c.isomorphic, Some(false));
    let c = compare("OCC", "CCO", 3).unwrap();
    assert!(c.wl_equivalent);
    assert_eq!(c.isomorphic, Some(true));
    let big = "C".repeat(12);
    assert_eq!(compare(&big, &big, 3).unwrap().isomorphic, None);
}

#[test]
fn errors_come_back_as_json() {
    let v: serde_json::Value = serde_json::from_str(&describe_json("C1CC", 3)).unwrap();
    assert!(v["error"].as_str().unwrap().contains("ring"));
    let v: serde_json::Value = serde_json::from_str(&predict_json("CC", 0, 3)).unwrap();
    assert!(v["error"].is_string());
}

fn largest_component(g: &MolGraph) -> MolGraph {
    let comps = g.components();
    let size = |c: usize| comps.iter().filter(|&&x| x == c).count();
    let main = (0..g.n_atoms()).map(|i| comps[i]).max_by_key(|&c| size(c)).unwrap();
    let keep: Vec<usize> = (0..g.n_atoms()).filter(|&i| comps[i] == main).collect();
    g.subgraph(&keep)
}

#[test]
fn bundled_models_predict_most_examples() {
    let mut hits = 0;
    for (name, input, product) in EXAMPLES {
        let p = predict(input, 6, 3).unwrap();
        assert!(!p.products.is_empty() && p.products.len() <= 3, "{name}");
        assert!(p.center.len() <= 6);
        let total: f64 = p.products.iter().map(|x| x.probability).sum();
        assert!(total <= 1.0 + 1e-12);
        let top = largest_component(&parse_smiles(&p.products[0].smiles).unwrap());
        let want = parse_smiles(product).unwrap();
        if wl_equivalent(&top, &want, 4) {
            hits += 1;
        } else {
            eprintln!("{name}: predicted {}", p.products[0].smiles);
        }
    }
    assert!(hits >= 4, "{hits}/5 examples predicted");
}

#[test]
fn json_wrappers_round_trip() {
    let v: serde_json::Value = serde_json::from_str(&predict_json(EXAMPLES[0].1, 6, 2)).unwrap();
    assert!(v["products"][0]["edits"][0].as_str().unwrap().contains("->"));
    let ex: serde_json::Value = serde_json::from_str(&examples_json()).unwrap();
    assert_eq!(ex.as_array().unwrap().len(), EXAMPLES.len());
}
