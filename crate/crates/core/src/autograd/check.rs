use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::graph::{Graph, NodeId};
use crate::autograd::store::ParamStore;
use crate::error::{Error, Result};

/// Central-difference comparison settings. Gradient checks run in 64-bit;
/// 32-bit arithmetic cannot resolve the difference quotient reliably.
#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    /// Tensors larger than this are spot-checked on a seeded random sample
    /// of at least this many entries.
    pub max_entries_per_tensor: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            tolerance: 1e-4,
            max_entries_per_tensor: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamDeviation {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// An entry whose difference quotient at the base step straddled a
/// non-smooth point (ReLU corner, pool argmax switch, clamp edge) but
/// converged to the analytic gradient once the step shrank. A genuinely
/// wrong gradient never converges, so these do not mask defects.
#[derive(Debug, Clone)]
pub struct KinkEntry {
    pub name: String,
    pub index: usize,
    pub base_rel_error: f64,
    pub refined_rel_error: f64,
    pub refined_step: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest relative error over all resolvable comparisons (kink entries
    /// contribute their refined-step error).
    pub max_rel_error: f64,
    pub entries_checked: usize,
    /// Entries whose relative error exceeded the tolerance at every step.
    pub failures: Vec<ParamDeviation>,
    pub worst: Option<ParamDeviation>,
    /// Entries verified at a refined step after a straddle at the base step.
    pub kinks: Vec<KinkEntry>,
    /// Entries whose analytic/numeric gap sits below the absolute
    /// resolution of the difference quotient (roundoff of the loss value
    /// divided by 2h); their relative error is unmeasurable, not wrong.
    pub noise_limited: Vec<ParamDeviation>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Compare analytic gradients against `(L(p+h) - L(p-h)) / 2h` for every
/// parameter entry (or a seeded sample for large tensors).
///
/// `build_loss` must register the parameters via [`Graph::params_from_store`]
/// (or equivalently one `param` node per store entry, in store order) and
/// return the scalar loss node together with those parameter nodes.
pub fn gradient_check<F>(
    params: &ParamStore<f64>,
    build_loss: F,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &ParamStore<f64>) -> Result<(NodeId, Vec<NodeId>)>,
{
    let mut graph = Graph::new();
    let (loss, param_nodes) = build_loss(&mut graph, params)?;
    if param_nodes.len() != params.len() {
        return Err(Error::Argument(format!(
            "gradient_check: builder returned {} parameter nodes for {} parameters",
            param_nodes.len(),
            params.len()
        )));
    }
    let loss_magnitude = graph.value(loss)[0].abs().max(1.0);
    // accumulated rounding of the two loss evaluations, divided by 2h:
    // differences below this are invisible to the quotient
    let noise_floor = 8.0 * f64::EPSILON * loss_magnitude / (2.0 * cfg.step);
    graph.backward(loss)?;
    let analytic: Vec<_> = param_nodes
        .iter()
        .map(|&id| graph.grad_or_zero(id))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        entries_checked: 0,
        failures: Vec::new(),
        worst: None,
        kinks: Vec::new(),
        noise_limited: Vec::new(),
    };

    let central = |name: &str, idx: usize, step: f64| -> Result<f64> {
        let mut shifted = params.clone();
        shifted.get_mut(name).unwrap()[idx] += step;
        let mut g = Graph::new();
        let (l, _) = build_loss(&mut g, &shifted)?;
        let plus = g.value(l)[0];

        let mut shifted = params.clone();
        shifted.get_mut(name).unwrap()[idx] -= step;
        let mut g = Graph::new();
        let (l, _) = build_loss(&mut g, &shifted)?;
        let minus = g.value(l)[0];
        Ok((plus - minus) / (2.0 * step))
    };

    for (pi, (name, tensor)) in params.iter().enumerate() {
        let n = tensor.len();
        let indices: Vec<usize> = if n <= cfg.max_entries_per_tensor {
            (0..n).collect()
        } else {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            let mut sample = all[..cfg.max_entries_per_tensor].to_vec();
            sample.sort_unstable();
            sample
        };

        for idx in indices {
            let a = analytic[pi][idx];
            let mut numeric = central(name, idx, cfg.step)?;
            let mut err = rel_error(a, numeric);
            report.entries_checked += 1;

            if err > cfg.tolerance && (a - numeric).abs() > noise_floor {
                // a straddled kink resolves under step refinement; a wrong
                // gradient stays wrong at every step
                let base_err = err;
                for divisor in [2.0, 4.0, 8.0, 16.0, 32.0] {
                    let step = cfg.step / divisor;
                    let refined = central(name, idx, step)?;
                    let refined_err = rel_error(a, refined);
                    if refined_err <= cfg.tolerance {
                        report.kinks.push(KinkEntry {
                            name: name.to_string(),
                            index: idx,
                            base_rel_error: base_err,
                            refined_rel_error: refined_err,
                            refined_step: step,
                        });
                        numeric = refined;
                        err = refined_err;
                        break;
                    }
                }
            }

            let dev = ParamDeviation {
                name: name.to_string(),
                index: idx,
                analytic: a,
                numeric,
                rel_error: err,
            };
            if err > cfg.tolerance && (a - numeric).abs() <= noise_floor {
                report.noise_limited.push(dev);
                continue;
            }
            if err > report.max_rel_error {
                report.max_rel_error = err;
            }
            if report.worst.as_ref().is_none_or(|w| err > w.rel_error) {
                report.worst = Some(dev.clone());
            }
            if err > cfg.tolerance {
                report.failures.push(dev);
            }
        }
    }
    Ok(report)
}

/// Register every store entry as a `param` node, in store order.
pub fn params_from_store(graph: &mut Graph<f64>, store: &ParamStore<f64>) -> Vec<NodeId> {
    store.iter().map(|(_, t)| graph.param(t.clone())).collect()
}
