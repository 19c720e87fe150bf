use crate::center::{label_pairs, LabelError, PairLabels};
use crate::chemgraph::{apply_edits, parse_smiles, BondType, EditSet, MolGraph, SmilesError};
use std::collections::BTreeMap;
use std::io;
use std::path::Path;
use thiserror::Error;

/// One accepted reaction line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionRecord {
    /// 1-based line number in the source file.
    pub line_no: usize,
    pub raw: String,
    /// Reactants followed by reagents, as one multi-component graph.
    pub reactants: MolGraph,
    pub product: MolGraph,
    pub labels: PairLabels,
    pub true_edits: EditSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("expected 'reactants>reagents>products', found {0} field(s)")]
    Fields(usize),
    #[error("{side}: {err}")]
    Smiles { side: &'static str, err: SmilesError },
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error("reactants and product have the same bonds")]
    NoChange,
    #[error("{0} reactant atoms exceed the limit of {1}")]
    TooLarge(usize, usize),
    #[error("edits do not reproduce the recorded product")]
    Inconsistent,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {err}")]
    Io { path: String, err: io::Error },
    #[error("{bad} of {total} reaction lines are malformed (first: line {first_line}: {first})")]
    TooManyMalformed {
        bad: usize,
        total: usize,
        first_line: usize,
        first: RecordError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<ReactionRecord>,
    /// `(line number, reason)` for every rejected line.
    pub skipped: Vec<(usize, RecordError)>,
}

/// Default bound on reactant atoms per reaction.
pub const MAX_ATOMS: usize = 150;

/// Mapped bonds `(low map, high map, type)` of a graph, sorted.
fn mapped_bonds(g: &MolGraph) -> Vec<(u32, u32, BondType)> {
    let mut out: Vec<_> = g
        .bonds()
        .iter()
        .filter_map(|b| {
            let (x, y) = (g.atom(b.a).map_number?, g.atom(b.b).map_number?);
            Some((x.min(y), x.max(y), b.order))
        })
        .collect();
    out.sort_unstable();
    out
}

/// Parses and labels one `reactants>reagents>products` line.
pub fn parse_record(line: &str, line_no: usize, max_atoms: usize) -> Result<ReactionRecord, RecordError> {
    let fields: Vec<&str> = line.trim().split('>').collect();
    if fields.len() != 3 {
        return Err(RecordError::Fields(fields.len()));
    }
    let parse = |s: &str, side: &'static str| {
        if s.trim().is_empty() {
            Ok(MolGraph::empty())
        } else {
            parse_smiles(s.trim()).map_err(|err| RecordError::Smiles { side, err })
        }
    };
    let reactants = parse(fields[0], "reactants")?;
    let reagents = parse(fields[1], "reagents")?;
    let product = parse(fields[2], "products")?;
    let reactants = reactants.merged(&reagents);
    if reactants.n_atoms() > max_atoms {
        return Err(RecordError::TooLarge(reactants.n_atoms(), max_atoms));
    }
    let (labels, true_edits) = label_pairs(&reactants, &product)?;
    if true_edits.is_empty() {
        return Err(RecordError::NoChange);
    }
    let after = apply_edits(&reactants, &true_edits).map_err(|_| RecordError::Inconsistent)?;
    let kept: std::collections::HashSet<u32> = labels_main_maps(&product);
    let restricted = |g: &MolGraph| -> Vec<(u32, u32, BondType)> {
        mapped_bonds(g)
            .into_iter()
            .filter(|&(a, b, _)| kept.contains(&a) && kept.contains(&b))
            .collect()
    };
    if restricted(&after) != restricted(&product) {
        return Err(RecordError::Inconsistent);
    }
    Ok(ReactionRecord {
        line_no,
        raw: line.trim().to_string(),
        reactants,
        product,
        labels,
        true_edits,
    })
}

/// Map numbers of the product's largest component.
fn labels_main_maps(product: &MolGraph) -> std::collections::HashSet<u32> {
    let comps = product.components();
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &comps {
        *sizes.entry(c).or_default() += 1;
    }
    let main = sizes.iter().max_by_key(|(&c, &n)| (n, std::cmp::Reverse(c))).map(|(&c, _)| c);
    comps
        .iter()
        .enumerate()
        .filter(|&(_, &c)| Some(c) == main)
        .filter_map(|(i, _)| product.atom(i).map_number)
        .collect()
}

/// Parses a whole file's text. Blank lines and `#` comments are ignored.
/// Fails when more than half of the reaction lines are rejected.
pub fn parse_dataset(text: &str, max_atoms: usize) -> Result<Dataset, DatasetError> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut total = 0;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        total += 1;
        match parse_record(t, i + 1, max_atoms) {
            Ok(r) => records.push(r),
            Err(e) => skipped.push((i + 1, e)),
        }
    }
    if 2 * skipped.len() > total {
        let (first_line, first) = skipped[0].clone();
        return Err(DatasetError::TooManyMalformed {
            bad: skipped.len(),
            total,
            first_line,
            first,
        });
    }
    Ok(Dataset { records, skipped })
}

pub fn load_dataset(path: &Path, max_atoms: usize) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|err| DatasetError::Io {
        path: path.display().to_string(),
        err,
    })?;
    parse_dataset(&text, max_atoms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// Split assignment from a 64-bit FNV-1a hash of the trimmed line: the
/// bucket `(hash % 1000) / 1000` falls in train below `train_fraction`,
/// then dev below `train_fraction + dev_fraction`, else test.
pub fn split_of(raw: &str, train_fraction: f64, dev_fraction: f64) -> Split {
    let h = raw
        .trim()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3));
    let bucket = (h % 1000) as f64 / 1000.0;
    if bucket < train_fraction {
        Split::Train
    } else if bucket < train_fraction + dev_fraction {
        Split::Dev
    } else {
        Split::Test
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<ReactionRecord>,
    pub dev: Vec<ReactionRecord>,
    pub test: Vec<ReactionRecord>,
}

pub fn split_records(records: Vec<ReactionRecord>, train_fraction: f64, dev_fraction: f64) -> Splits {
    let mut out = Splits::default();
    for r in records {
        match split_of(&r.raw, train_fraction, dev_fraction) {
            Split::Train => out.train.push(r),
            Split::Dev => out.dev.push(r),
            Split::Test => out.test.push(r),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_record() {
        let r = parse_record("[CH3:1][Cl:2].[NH2:3][CH3:4]>>[CH3:1][NH:3][CH3:4]", 1, MAX_ATOMS).unwrap();
        let maps: Vec<_> = r
            .true_edits
            .to_maps(&r.reactants)
            .into_iter()
            .map(|(a, b, t)| (a.unwrap(), b.unwrap(), t))
            .collect();
        assert_eq!(maps, vec![(1, 2, BondType::None), (1, 3, BondType::Single)]);
    }

    #[test]
    fn reagents_join_the_reactants() {
        let r = parse_record("[CH3:1][C:2](=[O:3])[CH3:4]>[BH3-]C#N>[CH3:1][CH:2]([OH:3])[CH3:4]", 1, MAX_ATOMS).unwrap();
        assert_eq!(r.true_edits.len(), 1);
        assert_eq!(r.reactants.n_components(), 2);
        assert_eq!(r.reactants.n_atoms(), 7);
    }

    #[test]
    fn bad_lines_are_skipped_or_abort() {
        let text = "# comment\n\n[CH3:1][Cl:2].[NH2:3][CH3:4]>>[CH3:1][NH:3][CH3:4]\nC(C>>C\n[CH3:1][Cl:2].[NH2:3][CH3:4]>>[CH3:1][NH:3][CH3:4]\n";
        let d = parse_dataset(text, MAX_ATOMS).unwrap();
        assert_eq!(d.records.len(), 2);
        assert_eq!(d.skipped.len(), 1);
        assert_eq!(d.skipped[0].0, 4);
        assert!(parse_dataset("C>>C\nxx\n", MAX_ATOMS).is_err());
        assert_eq!(parse_record("C>C", 1, MAX_ATOMS).unwrap_err(), RecordError::Fields(2));
        assert_eq!(
            parse_record("[CH3:1][OH:2]>>[CH3:1][OH:2]", 1, MAX_ATOMS).unwrap_err(),
            RecordError::NoChange
        );
    }

    #[test]
    fn split_is_a_function_of_the_line() {
        let a = split_of("[CH3:1][Cl:2]>>[CH3:1]", 0.8, 0.1);
        assert_eq!(a, split_of("  [CH3:1][Cl:2]>>[CH3:1]  ", 0.8, 0.1));
        assert_eq!(split_of("anything", 1.0, 0.0), Split::Train);
        assert_eq!(split_of("anything", 0.0, 0.0), Split::Test);
    }
}
