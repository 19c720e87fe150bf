use super::{DiffError, ParamStore, Tape, Var};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub h: f64,
    /// Coordinates sampled per tensor (all of them if the tensor is smaller).
    pub samples: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            h: 1e-5,
            samples: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCoordinate {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose perturbation crossed a ReLU kink or log clamp, where
    /// the central difference is not a derivative estimate.
    pub skipped_kinks: usize,
    /// Checked coordinates whose derivatives fall under the noise floor and
    /// were therefore compared in absolute terms.
    pub below_noise: usize,
    pub worst: Option<WorstCoordinate>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Derivative scale below which a central difference with step `h` on a
/// function of magnitude `f` cannot be trusted to relative precision. It
/// is used as the least denominator of the relative error, so smaller
/// derivatives are held to an absolute bound of about a hundred roundoff
/// units instead.
pub fn noise_floor(f: f64, h: f64) -> f64 {
    1e6 * f64::EPSILON * f.abs().max(1.0) / h
}

/// Compares reverse-mode gradients of the scalar `f` against central
/// differences for a sample of coordinates of every trainable tensor.
pub fn grad_check<F>(store: &ParamStore, f: F, cfg: GradCheckConfig) -> Result<GradCheckReport, DiffError>
where
    F: Fn(&ParamStore, &mut Tape) -> Result<Var, DiffError>,
{
    let eval = |s: &ParamStore| -> Result<(f64, u64), DiffError> {
        let mut tape = Tape::new();
        let out = f(s, &mut tape)?;
        Ok((tape.value(out).item(), tape.branch_signature()))
    };

    let mut tape = Tape::new();
    let out = f(store, &mut tape)?;
    let base_sig = tape.branch_signature();
    let floor = noise_floor(tape.value(out).item(), cfg.h);
    let grads = tape.backward(out)?;
    let mut analytic = store.clone();
    analytic.zero_grads();
    tape.accumulate_param_grads(&grads, &mut analytic);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped_kinks: 0,
        below_noise: 0,
        worst: None,
    };
    let mut probe = store.clone();
    let names: Vec<String> = store.names().map(str::to_string).collect();
    for name in names {
        let t = store.get(&name).expect("name from store");
        if !t.requires_grad {
            continue;
        }
        let n = t.value.len();
        let coords: Vec<usize> = if n <= cfg.samples {
            (0..n).collect()
        } else {
            let mut v = sample(&mut rng, n, cfg.samples).into_vec();
            v.sort_unstable();
            v
        };
        for idx in coords {
            let w0 = t.value.data()[idx];
            let set = |p: &mut ParamStore, x: f64| p.get_mut(&name).expect("present").value.data_mut()[idx] = x;
            set(&mut probe, w0 + cfg.h);
            let (fp, sp) = eval(&probe)?;
            set(&mut probe, w0 - cfg.h);
            let (fm, sm) = eval(&probe)?;
            set(&mut probe, w0);
            if sp != base_sig || sm != base_sig {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (fp - fm) / (2.0 * cfg.h);
            let a = analytic.get(&name).expect("present").grad.data()[idx];
            if a.abs() + numeric.abs() < floor {
                report.below_noise += 1;
            }
            let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(floor);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some(WorstCoordinate {
                    tensor: name.clone(),
                    index: idx,
                    analytic: a,
                    numeric,
                });
            }
        }
    }
    Ok(report)
}
