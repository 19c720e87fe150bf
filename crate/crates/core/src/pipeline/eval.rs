use super::config::RunConfig;
use super::dataset::ReactionRecord;
use super::train::{center_pairs, gen_config, CenterSource, TrainError};
use crate::candgen::{enumerate_candidates, Candidate};
use crate::center::{coverage, top_k_pairs, CenterInput};
use crate::chemgraph::apply_edits;
use crate::diffengine::ParamStore;
use crate::ranker::{rank_of, RankerModel};
use crate::wliso::wl_equivalent;
use std::fmt::Write as _;
use std::time::Instant;

/// Depth used when products are compared by WL fingerprint.
const MATCH_DEPTH: usize = 4;

#[derive(Clone, Copy)]
pub enum RankerSource<'a> {
    /// Puts the recorded product first whenever it is a candidate.
    Oracle,
    Model(&'a RankerModel, &'a ParamStore),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n_records: usize,
    /// `(K, fraction of records whose whole center is in the top K pairs)`;
    /// empty under oracle centers.
    pub coverage: Vec<(usize, f64)>,
    /// K used for candidate generation.
    pub k: usize,
    pub p_at_1: f64,
    pub p_at_3: f64,
    pub p_at_5: f64,
    pub mrr: f64,
    pub mean_candidates: f64,
    pub n_truncated: usize,
    pub augment_truth: bool,
    pub latency_median_ms: f64,
    pub latency_p95_ms: f64,
}

impl EvalReport {
    /// The same report with timing fields zeroed, for comparisons between
    /// runs.
    pub fn without_timing(&self) -> EvalReport {
        EvalReport {
            latency_median_ms: 0.0,
            latency_p95_ms: 0.0,
            ..self.clone()
        }
    }

    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "records={}", self.n_records);
        for (k, c) in &self.coverage {
            let _ = writeln!(s, "coverage@{k}={c:.6}");
        }
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "augment_truth={}", self.augment_truth);
        let _ = writeln!(s, "p@1={:.6}", self.p_at_1);
        let _ = writeln!(s, "p@3={:.6}", self.p_at_3);
        let _ = writeln!(s, "p@5={:.6}", self.p_at_5);
        let _ = writeln!(s, "mrr={:.6}", self.mrr);
        let _ = writeln!(s, "mean_candidates={:.3}", self.mean_candidates);
        let _ = writeln!(s, "truncated={}", self.n_truncated);
        let _ = writeln!(s, "latency_median_ms={:.3}", self.latency_median_ms);
        let _ = writeln!(s, "latency_p95_ms={:.3}", self.latency_p95_ms);
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24}{:>12}", "metric", "value");
        let _ = writeln!(s, "{}", "-".repeat(36));
        let row = |s: &mut String, name: &str, v: String| {
            let _ = writeln!(s, "{name:<24}{v:>12}");
        };
        row(&mut s, "records", self.n_records.to_string());
        for (k, c) in &self.coverage {
            row(&mut s, &format!("coverage@{k}"), format!("{:.2}%", 100.0 * c));
        }
        let star = if self.augment_truth { " (*)" } else { "" };
        row(&mut s, &format!("P@1{star}"), format!("{:.2}%", 100.0 * self.p_at_1));
        row(&mut s, &format!("P@3{star}"), format!("{:.2}%", 100.0 * self.p_at_3));
        row(&mut s, &format!("P@5{star}"), format!("{:.2}%", 100.0 * self.p_at_5));
        row(&mut s, &format!("MRR{star}"), format!("{:.4}", self.mrr));
        row(&mut s, &format!("candidates (K={})", self.k), format!("{:.1}", self.mean_candidates));
        row(&mut s, "truncated lists", self.n_truncated.to_string());
        row(&mut s, "gen latency median", format!("{:.2} ms", self.latency_median_ms));
        row(&mut s, "gen latency p95", format!("{:.2} ms", self.latency_p95_ms));
        s
    }
}

/// Index of the candidate matching the recorded outcome: equal edit sets,
/// else the first candidate whose product is WL-equivalent.
pub fn find_true_candidate(record: &ReactionRecord, candidates: &[Candidate]) -> Option<usize> {
    if let Some(i) = candidates.iter().position(|c| c.edits == record.true_edits) {
        return Some(i);
    }
    let truth = apply_edits(&record.reactants, &record.true_edits).ok()?;
    candidates.iter().position(|c| wl_equivalent(&c.product, &truth, MATCH_DEPTH))
}

/// Median and 95th percentile (nearest rank).
pub fn percentiles(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    let p95 = v[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1];
    (median, p95)
}

/// Mean reciprocal rank, with `None` (not found) contributing zero.
pub fn mean_reciprocal_rank(ranks: &[Option<usize>]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum::<f64>() / ranks.len() as f64
}

pub fn evaluate(
    records: &[ReactionRecord],
    centers: CenterSource<'_>,
    ranker: RankerSource<'_>,
    cfg: &RunConfig,
) -> Result<EvalReport, TrainError> {
    let gen = gen_config(cfg);
    let ks = cfg.eval_ks();
    let k_max = *ks.iter().max().expect("nonempty");
    let mut covered = vec![0usize; ks.len()];
    let mut ranks: Vec<Option<usize>> = Vec::with_capacity(records.len());
    let mut latencies = Vec::with_capacity(records.len());
    let mut total_candidates = 0usize;
    let mut n_truncated = 0;
    for record in records {
        let pairs = match centers {
            CenterSource::Model(model, store) => {
                let input = CenterInput::new(&record.reactants, model.features);
                let (scores, _) = model.score(store, &input)?;
                let top = top_k_pairs(&scores, k_max);
                for (slot, &k) in ks.iter().enumerate() {
                    let end = k.min(top.len());
                    if coverage(&top[..end], &record.labels) {
                        covered[slot] += 1;
                    }
                }
                top[..gen.k.min(top.len())].to_vec()
            }
            CenterSource::Oracle => center_pairs(centers, record, gen.k)?,
        };
        let start = Instant::now();
        let list = enumerate_candidates(&record.reactants, &pairs, &gen)?;
        latencies.push(start.elapsed().as_secs_f64() * 1e3);
        n_truncated += usize::from(list.truncated);
        let mut candidates = list.candidates;
        let mut target = find_true_candidate(record, &candidates);
        if target.is_none() && cfg.augment_truth {
            let product = apply_edits(&record.reactants, &record.true_edits).expect("recorded edits apply");
            candidates.push(Candidate {
                edits: record.true_edits.clone(),
                product,
                score: None,
            });
            target = Some(candidates.len() - 1);
        }
        total_candidates += candidates.len();
        let rank = match (target, ranker) {
            (None, _) => None,
            (Some(_), RankerSource::Oracle) => Some(1),
            (Some(t), RankerSource::Model(model, store)) => {
                let products: Vec<_> = candidates.iter().map(|c| &c.product).collect();
                let scores = model.score_graphs(store, &record.reactants, &products)?;
                Some(rank_of(&scores, t))
            }
        };
        ranks.push(rank);
    }
    let n = records.len().max(1) as f64;
    let p_at = |k: usize| ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count() as f64 / n;
    let (latency_median_ms, latency_p95_ms) = percentiles(&latencies);
    let coverage = match centers {
        CenterSource::Model(..) => ks.iter().zip(&covered).map(|(&k, &c)| (k, c as f64 / n)).collect(),
        CenterSource::Oracle => Vec::new(),
    };
    Ok(EvalReport {
        n_records: records.len(),
        coverage,
        k: gen.k,
        p_at_1: p_at(1),
        p_at_3: p_at(3),
        p_at_5: p_at(5),
        mrr: mean_reciprocal_rank(&ranks),
        mean_candidates: total_candidates as f64 / n,
        n_truncated,
        augment_truth: cfg.augment_truth,
        latency_median_ms,
        latency_p95_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mrr_definition() {
        let m = mean_reciprocal_rank(&[Some(1), Some(2), Some(4)]);
        assert!((m - 1.75 / 3.0).abs() < 1e-12);
        assert_eq!(mean_reciprocal_rank(&[None]), 0.0);
    }

    #[test]
    fn percentile_cases() {
        assert_eq!(percentiles(&[3.0, 1.0, 2.0]), (2.0, 3.0));
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentiles(&v), (50.5, 95.0));
    }
}
