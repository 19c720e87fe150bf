use super::config::RunConfig;
use super::dataset::ReactionRecord;
use crate::candgen::{enumerate_candidates, CandGenError, Candidate, GenConfig};
use crate::center::{coverage, top_k_pairs, CenterInput, CenterModel, ScoreMatrix, LOSS_FLOOR};
use crate::chemgraph::apply_edits;
use crate::diffengine::{AdamConfig, AdamState, DiffError, ParamStore, Tape};
use crate::ranker::{rank_of, RankError, RankerModel};
use crate::wln::GraphTensors;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no training examples")]
    NoExamples,
    #[error("non-finite gradient in epoch {epoch} (batch starting with line {line}); lower the learning rate")]
    Diverged { epoch: usize, line: usize },
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    CandGen(#[from] CandGenError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Summed training loss over the epoch, measured before each update.
    pub loss: f64,
    /// Coverage@K (center) or P@1 (ranker) on the training set after the
    /// epoch.
    pub train_metric: f64,
    pub dev_metric: Option<f64>,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the selected epoch.
    pub store: ParamStore,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

pub fn gen_config(cfg: &RunConfig) -> GenConfig {
    GenConfig {
        k: cfg.k,
        max_changes: cfg.max_changes.min(cfg.k),
        cap: cfg.candidate_cap,
        ..GenConfig::default()
    }
}

fn adam(cfg: &RunConfig) -> AdamState {
    AdamState::new(AdamConfig {
        lr: cfg.lr,
        decay: cfg.decay,
        ..AdamConfig::default()
    })
}

/// Shared epoch loop. `step` runs forward/backward for one example,
/// accumulates gradients into the store and returns the loss; `metrics`
/// evaluates the current parameters as `(train, dev)`.
fn run_epochs<S, M>(
    cfg: &RunConfig,
    mut store: ParamStore,
    n_examples: usize,
    line_of: impl Fn(usize) -> usize,
    mut step: S,
    mut metrics: M,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<TrainOutcome, TrainError>
where
    S: FnMut(&mut ParamStore, usize) -> Result<f64, TrainError>,
    M: FnMut(&ParamStore) -> Result<(f64, Option<f64>), TrainError>,
{
    if n_examples == 0 {
        return Err(TrainError::NoExamples);
    }
    let mut opt = adam(cfg);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..n_examples).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ParamStore)> = None;
    let mut since_best = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch) {
            store.zero_grads();
            for &i in batch {
                epoch_loss += step(&mut store, i)?;
            }
            store.scale_grads(1.0 / batch.len() as f64);
            if !store.grads_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    line: line_of(batch[0]),
                });
            }
            opt.step(&mut store);
        }
        if !epoch_loss.is_finite() {
            return Err(TrainError::Diverged {
                epoch,
                line: line_of(order[0]),
            });
        }
        let lr = opt.lr;
        if epoch % cfg.decay_every == 0 {
            opt.end_epoch();
        }
        let (train_metric, dev_metric) = metrics(&store)?;
        let stats = EpochStats {
            epoch,
            loss: epoch_loss,
            train_metric,
            dev_metric,
            lr,
        };
        on_epoch(&stats);
        history.push(stats);
        let selector = dev_metric.unwrap_or(train_metric);
        if best.as_ref().is_none_or(|b| selector >= b.0) {
            if best.as_ref().is_none_or(|b| selector > b.0) {
                since_best = 0;
            }
            best = Some((selector, epoch, store.clone()));
        } else {
            since_best += 1;
        }
        if cfg.stop_at.is_some_and(|t| train_metric >= t) {
            break;
        }
        if cfg.patience.is_some_and(|p| since_best >= p) {
            break;
        }
    }
    let (_, best_epoch, store) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        store,
        history,
        best_epoch,
    })
}

pub fn center_model(cfg: &RunConfig) -> CenterModel {
    let mut m = CenterModel::new(cfg.center_variant, cfg.hidden, cfg.depth);
    m.wln.activation = cfg.activation;
    m
}

/// Fraction of records whose whole center lies in the top `k` pairs.
pub fn center_coverage(model: &CenterModel, store: &ParamStore, records: &[ReactionRecord], inputs: &[CenterInput], k: usize) -> Result<f64, DiffError> {
    if records.is_empty() {
        return Ok(0.0);
    }
    let mut hit = 0;
    for (r, input) in records.iter().zip(inputs) {
        let (scores, _) = model.score(store, input)?;
        if coverage(&top_k_pairs(&scores, k), &r.labels) {
            hit += 1;
        }
    }
    Ok(hit as f64 / records.len() as f64)
}

/// Trains a center model with the pairwise loss.
pub fn train_center(
    cfg: &RunConfig,
    train: &[ReactionRecord],
    dev: &[ReactionRecord],
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<TrainOutcome, TrainError> {
    let model = center_model(cfg);
    let mut store = ParamStore::new();
    model.init(&mut store, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
    store.set_meta("seed", cfg.seed);
    let train_inputs: Vec<CenterInput> = train.iter().map(|r| CenterInput::new(&r.reactants, model.features)).collect();
    let dev_inputs: Vec<CenterInput> = dev.iter().map(|r| CenterInput::new(&r.reactants, model.features)).collect();
    let labels: Vec<Vec<f64>> = train.iter().map(|r| r.labels.dense()).collect();
    run_epochs(
        cfg,
        store,
        train.len(),
        |i| train[i].line_no,
        |store, i| {
            let mut tape = Tape::new();
            let out = model.forward(&mut tape, store, &train_inputs[i])?;
            let loss = tape.bce(out.scores, labels[i].clone(), LOSS_FLOOR)?;
            let grads = tape.backward(loss)?;
            tape.accumulate_param_grads(&grads, store);
            Ok(tape.value(loss).item())
        },
        |store| {
            let t = center_coverage(&model, store, train, &train_inputs, cfg.k)?;
            let d = if dev.is_empty() {
                None
            } else {
                Some(center_coverage(&model, store, dev, &dev_inputs, cfg.k)?)
            };
            Ok((t, d))
        },
        on_epoch,
    )
}

/// Where ranker training and evaluation get their reaction centers.
#[derive(Clone, Copy)]
pub enum CenterSource<'a> {
    /// The recorded center pairs.
    Oracle,
    Model(&'a CenterModel, &'a ParamStore),
}

/// One reaction's candidate list prepared for the ranker.
#[derive(Debug, Clone)]
pub struct RankExample {
    pub line_no: usize,
    pub reactants: GraphTensors,
    pub candidates: Vec<Candidate>,
    pub products: Vec<GraphTensors>,
    /// Index of the recorded product, if it is in the list.
    pub target: Option<usize>,
    /// True when the recorded product was appended because generation
    /// missed it.
    pub augmented: bool,
    pub truncated: bool,
}

pub fn center_pairs(source: CenterSource<'_>, record: &ReactionRecord, k: usize) -> Result<Vec<(usize, usize)>, DiffError> {
    match source {
        CenterSource::Oracle => Ok(record.labels.positive().to_vec()),
        CenterSource::Model(model, store) => {
            let input = CenterInput::new(&record.reactants, model.features);
            let (scores, _): (ScoreMatrix, _) = model.score(store, &input)?;
            Ok(top_k_pairs(&scores, k))
        }
    }
}

pub fn rank_example(
    record: &ReactionRecord,
    source: CenterSource<'_>,
    gen: &GenConfig,
    augment_truth: bool,
    ranker: &RankerModel,
) -> Result<RankExample, TrainError> {
    let pairs = center_pairs(source, record, gen.k)?;
    let list = enumerate_candidates(&record.reactants, &pairs, gen)?;
    let mut candidates = list.candidates;
    let mut target = candidates.iter().position(|c| c.edits == record.true_edits);
    let mut augmented = false;
    if target.is_none() && augment_truth {
        let product = apply_edits(&record.reactants, &record.true_edits).expect("recorded edits apply");
        candidates.push(Candidate {
            edits: record.true_edits.clone(),
            product,
            score: None,
        });
        target = Some(candidates.len() - 1);
        augmented = true;
    }
    Ok(RankExample {
        line_no: record.line_no,
        reactants: GraphTensors::new(&record.reactants, ranker.features),
        products: candidates.iter().map(|c| GraphTensors::new(&c.product, ranker.features)).collect(),
        candidates,
        target,
        augmented,
        truncated: list.truncated,
    })
}

pub fn ranker_model(cfg: &RunConfig) -> RankerModel {
    let mut m = RankerModel::new(cfg.ranker_variant, cfg.hidden, cfg.depth);
    m.diff.hidden = cfg.diff_hidden();
    m.embed.activation = cfg.activation;
    m.diff.activation = cfg.activation;
    m
}

/// Fraction of examples whose recorded product ranks first; examples
/// without it count as misses.
pub fn precision_at_1(model: &RankerModel, store: &ParamStore, examples: &[RankExample]) -> Result<f64, DiffError> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut hit = 0;
    for ex in examples {
        let Some(t) = ex.target else { continue };
        let mut tape = Tape::new();
        let s = model.scores(&mut tape, store, &ex.reactants, &ex.products)?;
        if rank_of(tape.value(s).data(), t) == 1 {
            hit += 1;
        }
    }
    Ok(hit as f64 / examples.len() as f64)
}

/// Trains a ranker with the softmax loss over each reaction's candidates.
pub fn train_ranker(
    cfg: &RunConfig,
    train: &[ReactionRecord],
    dev: &[ReactionRecord],
    source: CenterSource<'_>,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<TrainOutcome, TrainError> {
    let model = ranker_model(cfg);
    let gen = gen_config(cfg);
    let mut store = ParamStore::new();
    model.init(&mut store, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
    store.set_meta("seed", cfg.seed);
    let build = |records: &[ReactionRecord], augment: bool| -> Result<Vec<RankExample>, TrainError> {
        records.iter().map(|r| rank_example(r, source, &gen, augment, &model)).collect()
    };
    let train_ex = build(train, cfg.augment_truth)?;
    let dev_ex = build(dev, false)?;
    let usable: Vec<usize> = (0..train_ex.len()).filter(|&i| train_ex[i].target.is_some()).collect();
    run_epochs(
        cfg,
        store,
        usable.len(),
        |i| train_ex[usable[i]].line_no,
        |store, i| {
            let ex = &train_ex[usable[i]];
            let mut tape = Tape::new();
            let loss = model.loss(&mut tape, store, &ex.reactants, &ex.products, ex.target.expect("usable"))?;
            let grads = tape.backward(loss)?;
            tape.accumulate_param_grads(&grads, store);
            Ok(tape.value(loss).item())
        },
        |store| {
            let t = precision_at_1(&model, store, &train_ex)?;
            let d = if dev_ex.is_empty() {
                None
            } else {
                Some(precision_at_1(&model, store, &dev_ex)?)
            };
            Ok((t, d))
        },
        on_epoch,
    )
}
