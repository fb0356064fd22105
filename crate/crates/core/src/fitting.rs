//! Maximum-likelihood fitting of PMML models.
//!
//! Parameters are mapped to an unconstrained vector (logistic α, log ν,
//! log rates, softmax weights) and minimized with multi-start Nelder-Mead.
//! Erlang shapes stay discrete and are chosen by profiling a shape grid.

use std::cell::Cell;

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use argmin_math::{ArgminAdd, ArgminMul};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::distribution::PmmlDist;
use crate::error::{MmlError, Result};
use crate::phase_type::{make_coxian, make_erlang, make_mixture_erlang, Structure};
use crate::sampling::RandomStream;

/// Phase-type family of the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitStructure {
    Exponential,
    MixtureErlang { shapes: Vec<usize> },
    Coxian { dim: usize },
}

impl FitStructure {
    fn rate_count(&self) -> usize {
        match self {
            FitStructure::Exponential => 1,
            FitStructure::MixtureErlang { shapes } => shapes.len(),
            FitStructure::Coxian { dim } => *dim,
        }
    }

    /// Free logits of the weight simplex (mixture weights or Coxian start).
    fn weight_count(&self) -> usize {
        self.rate_count() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub structure: FitStructure,
    pub fit_alpha: bool,
    pub fit_nu: bool,
    /// Value used when α is pinned, and the starting point otherwise.
    pub alpha: f64,
    /// Value used when ν is pinned, and the starting point otherwise.
    pub nu: f64,
    pub restarts: usize,
    pub max_iterations: u64,
    /// Relative spread of simplex NLL values at which a run stops.
    pub convergence_tol: f64,
    pub shape_grid: Option<Vec<Vec<usize>>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            structure: FitStructure::Exponential,
            fit_alpha: true,
            fit_nu: false,
            alpha: 0.9,
            nu: 1.0,
            restarts: 5,
            max_iterations: 4000,
            convergence_tol: 1e-10,
            shape_grid: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MmlError::InvalidParameter(m));
        if self.restarts < 1 {
            return bad("restarts must be at least 1".into());
        }
        if !(1e-12..=1e-4).contains(&self.convergence_tol) {
            return bad(format!("convergence_tol = {} outside [1e-12, 1e-4]", self.convergence_tol));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1]", self.alpha));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu = {} must be positive", self.nu));
        }
        match &self.structure {
            FitStructure::MixtureErlang { shapes } if shapes.is_empty() || shapes.contains(&0) => {
                return bad(format!("Erlang shapes {shapes:?} must be positive and nonempty"));
            }
            FitStructure::Coxian { dim } if *dim == 0 => return bad("Coxian dimension must be positive".into()),
            _ => {}
        }
        if let Some(grid) = &self.shape_grid {
            if !matches!(self.structure, FitStructure::MixtureErlang { .. }) {
                return bad("shape_grid needs a mixture_erlang structure".into());
            }
            // individual entries are checked per candidate so one bad entry
            // does not abort the sweep
            if grid.is_empty() {
                return bad("shape_grid must not be empty".into());
            }
        }
        Ok(())
    }

    fn free_count(&self) -> usize {
        self.fit_alpha as usize + self.fit_nu as usize + self.structure.rate_count() + self.structure.weight_count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: PmmlDist,
    pub nll: f64,
    /// α̂·ν̂.
    pub tail_index: f64,
    /// (α̂·ν̂)⁻¹, the extreme-value index.
    pub tail_index_reciprocal: f64,
    /// Final NLL of every restart in order; infinite for diverged restarts.
    pub restart_nll: Vec<f64>,
    pub converged: bool,
    pub evaluations: u64,
}

impl FitResult {
    /// Result document with the configuration and seed echoed.
    pub fn to_json(&self, config: &FitConfig, seed: u64) -> Value {
        let trace: Vec<Value> = self
            .restart_nll
            .iter()
            .map(|v| if v.is_finite() { json!(v) } else { Value::Null })
            .collect();
        json!({
            "model": self.model.to_json(),
            "nll": self.nll,
            "tail_index": self.tail_index,
            "tail_index_reciprocal": self.tail_index_reciprocal,
            "restart_nll": trace,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "config": serde_json::to_value(config).unwrap_or(Value::Null),
            "seed": seed,
        })
    }
}

/// −Σ log f(xᵢ). Density failures and non-finite terms give +∞.
pub fn nll(model: &PmmlDist, data: &[f64]) -> Result<f64> {
    check_data(data)?;
    Ok(nll_unchecked(model, data))
}

fn nll_unchecked(model: &PmmlDist, data: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in data {
        match model.ln_pdf(x) {
            Ok(l) if l.is_finite() => s -= l,
            _ => return f64::INFINITY,
        }
    }
    s
}

fn check_data(data: &[f64]) -> Result<()> {
    if data.is_empty() {
        return Err(MmlError::InvalidData("no observations".into()));
    }
    let bad: Vec<usize> = (0..data.len())
        .filter(|&i| !(data[i].is_finite() && data[i] > 0.0))
        .collect();
    if !bad.is_empty() {
        return Err(MmlError::InvalidData(format!(
            "non-positive or non-finite observations at indices {bad:?}"
        )));
    }
    Ok(())
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    // the last weight has its logit pinned at zero
    let m = logits.iter().copied().fold(0.0, f64::max);
    let mut w: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    w.push((-m).exp());
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Maps an unconstrained vector to a model. Every finite vector yields
/// α ∈ (0,1], ν > 0, positive rates and simplex weights.
struct Layout<'a> {
    config: &'a FitConfig,
}

impl Layout<'_> {
    fn decode(&self, v: &[f64]) -> Result<PmmlDist> {
        let c = self.config;
        let mut i = 0;
        let mut next = || {
            i += 1;
            v[i - 1]
        };
        let alpha = if c.fit_alpha { logistic(next()).max(1e-6) } else { c.alpha };
        let nu = if c.fit_nu { next().exp() } else { c.nu };
        let n = c.structure.rate_count();
        let rates: Vec<f64> = (0..n).map(|_| next().exp()).collect();
        let logits: Vec<f64> = (0..n - 1).map(|_| next()).collect();
        let weights = softmax(&logits);
        if rates.iter().chain([&alpha, &nu]).any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(MmlError::InvalidParameter("iterate left the parameter domain".into()));
        }
        let ph = match &c.structure {
            FitStructure::Exponential => make_erlang(1, rates[0])?,
            FitStructure::MixtureErlang { shapes } => make_mixture_erlang(&weights, shapes, &rates)?,
            FitStructure::Coxian { .. } => make_coxian(&weights, &rates)?,
        };
        PmmlDist::from_parts(alpha, ph, nu)
    }

    fn encode(&self, alpha: f64, nu: f64, rates: &[f64], weights: &[f64]) -> Vec<f64> {
        let c = self.config;
        let mut v = Vec::with_capacity(c.free_count());
        if c.fit_alpha {
            v.push(logit(alpha.clamp(1e-4, 1.0 - 1e-4)));
        }
        if c.fit_nu {
            v.push(nu.ln());
        }
        v.extend(rates.iter().map(|r| r.ln()));
        let last = weights[weights.len() - 1].max(1e-12);
        v.extend(weights[..weights.len() - 1].iter().map(|w| (w.max(1e-12) / last).ln()));
        v
    }
}

struct Objective<'a> {
    layout: Layout<'a>,
    data: &'a [f64],
    calls: Cell<u64>,
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, v: &Vec<f64>) -> std::result::Result<f64, ArgminError> {
        self.calls.set(self.calls.get() + 1);
        Ok(match self.layout.decode(v) {
            Ok(m) => nll_unchecked(&m, self.data),
            Err(_) => f64::INFINITY,
        })
    }
}

impl CostFunction for &Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, v: &Vec<f64>) -> std::result::Result<f64, ArgminError> {
        (*self).cost(v)
    }
}

/// Starting point from quantile groups of the data: component k gets the
/// k-th block of order statistics and a rate matching its median on the
/// x^{αν} scale. Restarts other than the first add log-uniform jitter.
fn initial_point(config: &FitConfig, sorted: &[f64], rng: &mut RandomStream, jitter: bool) -> Vec<f64> {
    let layout = Layout { config };
    let mut jit = |w: f64| if jitter { rng.random_range(-w..w) } else { 0.0 };
    let alpha = if config.fit_alpha {
        logistic(logit(config.alpha.clamp(0.05, 0.95)) + jit(1.0))
    } else {
        config.alpha
    };
    let nu = if config.fit_nu { config.nu * jit(0.7).exp() } else { config.nu };
    let power = alpha * nu;
    let n = sorted.len();
    let median = |lo: usize, hi: usize| sorted[(lo + hi) / 2].max(1e-300);
    let (rates, weights): (Vec<f64>, Vec<f64>) = match &config.structure {
        FitStructure::Exponential => (vec![median(0, n - 1).powf(-power) * 2f64.ln()], vec![1.0]),
        FitStructure::MixtureErlang { shapes } => {
            let m = shapes.len();
            (0..m)
                .map(|k| {
                    let (lo, hi) = (k * n / m, ((k + 1) * n / m).max(k * n / m + 1) - 1);
                    let r = shapes[k] as f64 / median(lo, hi.min(n - 1)).powf(power);
                    (r, 1.0 / m as f64)
                })
                .unzip()
        }
        FitStructure::Coxian { dim } => {
            let base = median(0, n - 1).powf(-power) * *dim as f64;
            ((0..*dim).map(|i| base * (1.0 + 0.5 * i as f64)).collect(), vec![1.0 / *dim as f64; *dim])
        }
    };
    let rates: Vec<f64> = rates.iter().map(|r| r * jit(0.7).exp()).collect();
    let mut v = layout.encode(alpha, nu, &rates, &weights);
    let k = usize::from(config.fit_alpha) + usize::from(config.fit_nu) + rates.len();
    for x in v[k..].iter_mut() {
        *x += jit(0.5);
    }
    v
}

struct RunOutcome {
    point: Vec<f64>,
    nll: f64,
    converged: bool,
    evaluations: u64,
    iterations: u64,
}

fn simplex_run(objective: &Objective, start: Vec<f64>, f0: f64, config: &FitConfig, budget: u64) -> Result<RunOutcome> {
    let step = 0.3;
    let mut vertices = vec![start.clone()];
    for i in 0..start.len() {
        let mut e = vec![0.0; start.len()];
        e[i] = 1.0;
        vertices.push(start.add(&e.mul(&step)));
    }
    let tol = config.convergence_tol * f0.abs().max(1.0);
    let solver = NelderMead::new(vertices)
        .with_sd_tolerance(tol)
        .map_err(|e| MmlError::NoConvergence(e.to_string()))?;
    let before = objective.calls.get();
    let res = Executor::new(objective, solver)
        .configure(|s| s.max_iters(budget))
        .run()
        .map_err(|e| MmlError::NoConvergence(e.to_string()))?;
    let state = res.state();
    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    let evaluations = objective.calls.get() - before;
    Ok(RunOutcome {
        point: state.get_best_param().cloned().unwrap_or(start),
        nll: state.get_best_cost(),
        converged,
        evaluations,
        iterations: state.get_iter(),
    })
}

/// One restart: a simplex run followed by fresh-simplex polishing rounds
/// until the NLL stops improving.
fn restart(objective: &Objective, config: &FitConfig, start: Vec<f64>) -> Result<RunOutcome> {
    let f0 = objective.cost(&start).unwrap_or(f64::INFINITY);
    let mut best = RunOutcome { point: start, nll: f0, converged: false, evaluations: 1, iterations: 0 };
    let mut remaining = config.max_iterations;
    for _ in 0..6 {
        if remaining == 0 {
            break;
        }
        let scale = if best.nll.is_finite() { best.nll } else { 1.0 };
        let run = simplex_run(objective, best.point.clone(), scale, config, remaining)?;
        remaining = remaining.saturating_sub(run.iterations.max(1));
        let improved = best.nll - run.nll;
        let evals = best.evaluations + run.evaluations;
        if run.nll < best.nll || !best.nll.is_finite() {
            best = RunOutcome { evaluations: evals, ..run };
        } else {
            best.evaluations = evals;
            best.converged = run.converged;
        }
        if !(improved > config.convergence_tol * best.nll.abs().max(1.0)) {
            break;
        }
    }
    Ok(best)
}

/// Rates of mixture components in increasing order, weights carried along.
fn canonical(model: PmmlDist) -> PmmlDist {
    if let Structure::MixtureErlang { theta, p, lambda } = model.ph().structure() {
        let mut idx: Vec<usize> = (0..lambda.len()).collect();
        idx.sort_by(|&a, &b| lambda[a].total_cmp(&lambda[b]).then(p[a].cmp(&p[b])));
        let t: Vec<f64> = idx.iter().map(|&i| theta[i]).collect();
        let s: Vec<usize> = idx.iter().map(|&i| p[i]).collect();
        let l: Vec<f64> = idx.iter().map(|&i| lambda[i]).collect();
        if let Ok(ph) = make_mixture_erlang(&t, &s, &l) {
            if let Ok(m) = PmmlDist::from_parts(model.alpha(), ph, model.nu()) {
                return m;
            }
        }
    }
    model
}

fn fit_single(data: &[f64], config: &FitConfig, rng: &RandomStream) -> Result<FitResult> {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let objective = Objective { layout: Layout { config }, data, calls: Cell::new(0) };
    let mut outcomes = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let mut stream = rng.split(r as u64);
        let start = initial_point(config, &sorted, &mut stream, r > 0);
        outcomes.push(restart(&objective, config, start)?);
    }
    let restart_nll: Vec<f64> = outcomes.iter().map(|o| o.nll).collect();
    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    // ties resolve to the earliest restart
    let best = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.nll.is_finite())
        .min_by(|a, b| a.1.nll.total_cmp(&b.1.nll).then(a.0.cmp(&b.0)))
        .map(|(_, o)| o)
        .ok_or_else(|| MmlError::NoConvergence(format!("all {} restarts diverged", config.restarts)))?;
    let model = canonical(objective.layout.decode(&best.point)?);
    let tail = model.tail_index();
    Ok(FitResult {
        nll: best.nll,
        tail_index: tail,
        tail_index_reciprocal: 1.0 / tail,
        restart_nll,
        converged: best.converged,
        evaluations,
        model,
    })
}

/// Multi-start maximum-likelihood fit. With a shape grid every candidate is
/// fitted and the lowest NLL wins.
pub fn fit_pmml(data: &[f64], config: &FitConfig, rng: &RandomStream) -> Result<FitResult> {
    config.validate()?;
    check_data(data)?;
    if config.shape_grid.is_some() {
        let ranked = profile_shapes(data, config, rng)?;
        return ranked
            .into_iter()
            .find_map(|c| c.result.ok())
            .ok_or_else(|| MmlError::NoConvergence("no shape candidate could be fitted".into()));
    }
    fit_single(data, config, rng)
}

#[derive(Debug, Clone)]
pub struct ShapeCandidate {
    pub shapes: Vec<usize>,
    pub result: std::result::Result<FitResult, MmlError>,
}

/// Fits every shape vector of the grid (or the configured shapes if there
/// is no grid). Candidates are ranked by NLL; failed candidates keep their
/// error and sort last.
pub fn profile_shapes(data: &[f64], base: &FitConfig, rng: &RandomStream) -> Result<Vec<ShapeCandidate>> {
    base.validate()?;
    check_data(data)?;
    let grid = match (&base.shape_grid, &base.structure) {
        (Some(g), _) => g.clone(),
        (None, FitStructure::MixtureErlang { shapes }) => vec![shapes.clone()],
        _ => return Err(MmlError::InvalidParameter("shape profiling needs Erlang shapes".into())),
    };
    let mut out: Vec<ShapeCandidate> = grid
        .into_iter()
        .map(|shapes| {
            let config = FitConfig {
                structure: FitStructure::MixtureErlang { shapes: shapes.clone() },
                shape_grid: None,
                ..base.clone()
            };
            // every candidate sees the same restart streams
            let result = config.validate().and_then(|_| fit_single(data, &config, rng));
            ShapeCandidate { shapes, result }
        })
        .collect();
    let key = |c: &ShapeCandidate| c.result.as_ref().map(|r| r.nll).unwrap_or(f64::INFINITY);
    out.sort_by(|a, b| key(a).total_cmp(&key(b)));
    Ok(out)
}
