//! Transmitter tap optimization under the unit-energy constraint.
//!
//! Two independent routes to the same optimum: a score-function policy
//! gradient over a Gaussian tap distribution (population sampling, moving
//! baseline, annealed exploration noise) and a projected finite-difference
//! gradient ascent. Agreement between the two is itself a tested property.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::overlap::overlap_unchecked;
use crate::pulse_shaping::TapVector;
use crate::security::{secret_key_rate_from_scalars, LinkParams, SkrReport};

/// Objective value assigned to degenerate (zero or non-finite energy)
/// samples so the stochastic search stays total instead of erroring.
pub const DEGENERATE_OBJECTIVE: f64 = -1e12;

/// Best-SKR improvement below which the policy-gradient search is
/// considered stalled (evaluated over the trailing 20% of the budget).
const STALL_IMPROVEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Reinforce,
    Gradient,
}

/// Policy-gradient hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReinforceParams {
    pub population: usize,
    pub sigma_init: f64,
    pub sigma_decay: f64,
    pub baseline_momentum: f64,
    pub step_size: f64,
}

impl Default for ReinforceParams {
    fn default() -> Self {
        Self {
            population: 64,
            sigma_init: 0.05,
            sigma_decay: 0.9985,
            baseline_momentum: 0.9,
            step_size: 0.05,
        }
    }
}

/// Finite-difference ascent hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GradientParams {
    pub step_size: f64,
    pub fd_epsilon: f64,
    pub tolerance: f64,
}

impl Default for GradientParams {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            fd_epsilon: 1e-6,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub method: Method,
    pub num_taps: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Starting point; when absent the receiver filter truncated to
    /// `num_taps` and renormalized is used.
    pub init: Option<TapVector>,
    pub reinforce: ReinforceParams,
    pub gradient: GradientParams,
}

impl OptimizerConfig {
    pub fn new(method: Method, num_taps: usize, max_iterations: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            method,
            num_taps,
            max_iterations,
            seed,
            init: None,
            reinforce: ReinforceParams::default(),
            gradient: GradientParams::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Error::InvalidParameter { name, reason };
        if self.num_taps == 0 || self.num_taps % 2 == 0 {
            return Err(bad(
                "num_taps",
                format!("must be odd and positive, got {}", self.num_taps),
            ));
        }
        if self.max_iterations == 0 {
            return Err(bad("max_iterations", "must be >= 1".into()));
        }
        let r = &self.reinforce;
        if r.population == 0 {
            return Err(bad("reinforce.population", "must be >= 1".into()));
        }
        if !(r.sigma_init > 0.0) {
            return Err(bad("reinforce.sigma_init", format!("must be > 0, got {}", r.sigma_init)));
        }
        if !(r.sigma_decay > 0.0 && r.sigma_decay <= 1.0) {
            return Err(bad(
                "reinforce.sigma_decay",
                format!("must be in (0, 1], got {}", r.sigma_decay),
            ));
        }
        if !(0.0..1.0).contains(&r.baseline_momentum) {
            return Err(bad(
                "reinforce.baseline_momentum",
                format!("must be in [0, 1), got {}", r.baseline_momentum),
            ));
        }
        if !(r.step_size > 0.0) {
            return Err(bad("reinforce.step_size", format!("must be > 0, got {}", r.step_size)));
        }
        let g = &self.gradient;
        if !(g.step_size > 0.0) {
            return Err(bad("gradient.step_size", format!("must be > 0, got {}", g.step_size)));
        }
        if !(g.fd_epsilon > 0.0) {
            return Err(bad("gradient.fd_epsilon", format!("must be > 0, got {}", g.fd_epsilon)));
        }
        if !(g.tolerance > 0.0) {
            return Err(bad("gradient.tolerance", format!("must be > 0, got {}", g.tolerance)));
        }
        if let Some(init) = &self.init {
            if init.len() != self.num_taps {
                return Err(bad(
                    "init",
                    format!("has {} taps but num_taps is {}", init.len(), self.num_taps),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    /// Gradient norm fell below the configured tolerance.
    GradientConverged,
    /// The iteration budget ran out.
    MaxIterations,
    /// No improvement over the trailing window (or step size exhausted).
    Stalled,
}

/// One trace row: `(iteration, best SKR so far, current mean SKR, sigma)`.
/// For the gradient method `mean_skr` is the current iterate's SKR and
/// `sigma` the current step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub best_skr: f64,
    pub mean_skr: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    pub iterations: Vec<TracePoint>,
    pub final_taps: TapVector,
    pub final_report: SkrReport,
    pub status: ConvergenceStatus,
}

impl OptimizationTrace {
    pub fn final_skr(&self) -> f64 {
        self.final_report.skr_bits_per_symbol
    }
}

/// The raw-tap objective: normalize to unit energy, compute the mode
/// overlap against `rx`, evaluate the key rate. Scale-invariant by
/// construction; zero or non-finite vectors score [`DEGENERATE_OBJECTIVE`]
/// rather than erroring.
pub fn objective(taps: &[f64], rx: &TapVector, params: &LinkParams) -> f64 {
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    if !(energy > 0.0) || !energy.is_finite() {
        return DEGENERATE_OBJECTIVE;
    }
    let scale = energy.sqrt();
    let unit: Vec<f64> = taps.iter().map(|t| t / scale).collect();
    let ov = overlap_unchecked(&unit, rx.taps(), rx.sps());
    match secret_key_rate_from_scalars(ov.c0() * ov.c0(), ov.isi_power(), params) {
        Ok(r) if r.skr_bits_per_symbol.is_finite() => r.skr_bits_per_symbol,
        _ => DEGENERATE_OBJECTIVE,
    }
}

fn resolve_init(cfg: &OptimizerConfig, rx: &TapVector) -> Result<Vec<f64>> {
    let init = match &cfg.init {
        Some(v) => v.normalize_energy()?,
        None => rx.truncate_centered(cfg.num_taps)?,
    };
    if init.len() != cfg.num_taps {
        return Err(Error::InvalidParameter {
            name: "init",
            reason: format!("has {} taps, expected {}", init.len(), cfg.num_taps),
        });
    }
    Ok(init.taps().to_vec())
}

fn normalize_in_place(x: &mut [f64]) -> bool {
    let e: f64 = x.iter().map(|v| v * v).sum();
    if !(e > 0.0) || !e.is_finite() {
        return false;
    }
    let s = e.sqrt();
    for v in x.iter_mut() {
        *v /= s;
    }
    true
}

fn finish(
    iterations: Vec<TracePoint>,
    best_taps: Vec<f64>,
    rx: &TapVector,
    params: &LinkParams,
    status: ConvergenceStatus,
    label: &str,
) -> Result<OptimizationTrace> {
    let mut taps = best_taps;
    normalize_in_place(&mut taps);
    let final_taps = TapVector::new(taps, rx.sps(), label)?.canonicalize_sign();
    let ov = overlap_unchecked(final_taps.taps(), rx.taps(), rx.sps());
    let final_report =
        secret_key_rate_from_scalars(ov.c0() * ov.c0(), ov.isi_power(), params)?;
    Ok(OptimizationTrace {
        iterations,
        final_taps,
        final_report,
        status,
    })
}

/// Policy-gradient search: isotropic Gaussian policy over tap vectors whose
/// mean is updated from the score-function gradient estimate with an
/// exponential-moving-average reward baseline, and whose standard deviation
/// decays geometrically. Deterministic given the seed.
pub fn optimize_reinforce(
    cfg: &OptimizerConfig,
    rx: &TapVector,
    params: &LinkParams,
) -> Result<OptimizationTrace> {
    cfg.validate()?;
    if cfg.method != Method::Reinforce {
        return Err(Error::InvalidParameter {
            name: "method",
            reason: "config selects the gradient method".into(),
        });
    }
    let rp = cfg.reinforce;
    let mut mu = resolve_init(cfg, rx)?;
    let n = mu.len();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut sigma = rp.sigma_init;
    let mut baseline: Option<f64> = None;

    let mut best = objective(&mu, rx, params);
    let mut best_taps = mu.clone();
    let mut last_improvement = 0usize;
    let stall_window = (cfg.max_iterations / 5).max(1);
    let mut trace = Vec::with_capacity(cfg.max_iterations);
    let mut status = ConvergenceStatus::MaxIterations;

    for iter in 0..cfg.max_iterations {
        // draw the whole population first so the RNG stream is independent
        // of evaluation order, then score it in parallel
        let eps: Vec<Vec<f64>> = (0..rp.population)
            .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let samples: Vec<Vec<f64>> = eps
            .iter()
            .map(|e| mu.iter().zip(e).map(|(m, e)| m + sigma * e).collect())
            .collect();
        let rewards: Vec<f64> = samples
            .par_iter()
            .map(|s| objective(s, rx, params))
            .collect();

        let mean_r = rewards.iter().sum::<f64>() / rp.population as f64;
        let b = *baseline.get_or_insert(mean_r);

        // score-function estimate with advantages standardized by the
        // population reward spread, so one step size works across link
        // configurations whose objective scales differ by orders of
        // magnitude; the move length anneals together with σ
        let var_r = rewards
            .iter()
            .map(|r| (r - mean_r) * (r - mean_r))
            .sum::<f64>()
            / rp.population as f64;
        let spread = var_r.sqrt().max(1e-300);
        let mut grad = vec![0.0; n];
        for (e, &r) in eps.iter().zip(&rewards) {
            let w = (r - b) / spread;
            for (g, &ei) in grad.iter_mut().zip(e) {
                *g += w * ei;
            }
        }
        let scale = rp.step_size * (sigma / rp.sigma_init) / rp.population as f64;
        for (m, g) in mu.iter_mut().zip(&grad) {
            *m += scale * g;
        }
        if !normalize_in_place(&mut mu) {
            // degenerate mean: restart from the best point seen
            mu.copy_from_slice(&best_taps);
            normalize_in_place(&mut mu);
        }

        baseline = Some(rp.baseline_momentum * b + (1.0 - rp.baseline_momentum) * mean_r);

        // best-so-far over every evaluated point, including the new mean
        let f_mu = objective(&mu, rx, params);
        for (s, &r) in samples.iter().zip(&rewards).chain(std::iter::once((&mu, &f_mu))) {
            if r > best {
                if r > best + STALL_IMPROVEMENT_TOL {
                    last_improvement = iter;
                }
                best = r;
                best_taps.copy_from_slice(s);
            }
        }

        sigma *= rp.sigma_decay;
        trace.push(TracePoint {
            iteration: iter,
            best_skr: best,
            mean_skr: mean_r,
            sigma,
        });

        if iter.saturating_sub(last_improvement) >= stall_window {
            status = ConvergenceStatus::Stalled;
            break;
        }
    }
    finish(trace, best_taps, rx, params, status, "reinforce-optimized")
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_difference_gradient<F>(f: F, x: &[f64], eps: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut work = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            work[i] = xi + eps;
            let fp = f(&work);
            work[i] = xi - eps;
            let fm = f(&work);
            work[i] = xi;
            (fp - fm) / (2.0 * eps)
        })
        .collect()
}

/// Five-point-stencil gradient, one order higher than central differences;
/// the reference the gradient-correctness check compares against.
pub fn five_point_stencil_gradient<F>(f: F, x: &[f64], eps: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut work = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            let mut eval = |d: f64| {
                work[i] = xi + d;
                let v = f(&work);
                work[i] = xi;
                v
            };
            let f2p = eval(2.0 * eps);
            let fp = eval(eps);
            let fm = eval(-eps);
            let f2m = eval(-2.0 * eps);
            (-f2p + 8.0 * fp - 8.0 * fm + f2m) / (12.0 * eps)
        })
        .collect()
}

/// Projected gradient ascent on an arbitrary objective. `project` is applied
/// after every trial step (`None` leaves the iterate unconstrained). Step
/// size halves on failure to improve and grows modestly on success.
pub(crate) fn gradient_ascent<F, P>(
    f: F,
    x0: &[f64],
    gp: GradientParams,
    max_iterations: usize,
    project: Option<P>,
) -> (Vec<f64>, Vec<TracePoint>, ConvergenceStatus, bool)
where
    F: Fn(&[f64]) -> f64,
    P: Fn(&mut Vec<f64>),
{
    let mut x = x0.to_vec();
    if let Some(p) = &project {
        p(&mut x);
    }
    let mut f_cur = f(&x);
    let mut best = f_cur;
    let mut best_x = x.clone();
    let mut step = gp.step_size;
    let max_step = gp.step_size * 16.0;
    let mut trace = Vec::new();
    let mut status = ConvergenceStatus::MaxIterations;
    let mut nonfinite_failure = false;

    for iter in 0..max_iterations {
        let grad = central_difference_gradient(&f, &x, gp.fd_epsilon);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        trace.push(TracePoint {
            iteration: iter,
            best_skr: best,
            mean_skr: f_cur,
            sigma: step,
        });
        if gnorm < gp.tolerance {
            status = ConvergenceStatus::GradientConverged;
            break;
        }
        let mut accepted = false;
        let mut saw_nonfinite = false;
        while step >= 1e-14 {
            let mut cand: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| xi + step * g).collect();
            if let Some(p) = &project {
                p(&mut cand);
            }
            let f_new = f(&cand);
            if !f_new.is_finite() {
                saw_nonfinite = true;
                step *= 0.5;
                continue;
            }
            if f_new > f_cur {
                x = cand;
                f_cur = f_new;
                if f_cur > best {
                    best = f_cur;
                    best_x = x.clone();
                }
                step = (step * 1.25).min(max_step);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            status = ConvergenceStatus::Stalled;
            nonfinite_failure = saw_nonfinite;
            break;
        }
    }
    (best_x, trace, status, nonfinite_failure)
}

/// Projected finite-difference ascent of the key-rate objective, with taps
/// renormalized to unit energy after every step.
pub fn optimize_gradient(
    cfg: &OptimizerConfig,
    rx: &TapVector,
    params: &LinkParams,
) -> Result<OptimizationTrace> {
    cfg.validate()?;
    if cfg.method != Method::Gradient {
        return Err(Error::InvalidParameter {
            name: "method",
            reason: "config selects the policy-gradient method".into(),
        });
    }
    let x0 = resolve_init(cfg, rx)?;
    let f = |taps: &[f64]| objective(taps, rx, params);
    let project = |x: &mut Vec<f64>| {
        normalize_in_place(x);
    };
    let (best_x, trace, status, nonfinite) =
        gradient_ascent(f, &x0, cfg.gradient, cfg.max_iterations, Some(project));
    let out = finish(trace, best_x, rx, params, status, "gradient-optimized")?;
    if nonfinite {
        return Err(Error::Optimization {
            reason: "line search kept hitting non-finite objective values".into(),
            trace: Box::new(out),
        });
    }
    Ok(out)
}
