//! Multiplicative-weights construction of an oblivious routing as a uniform
//! convex combination of electrical routings.
//!
//! Each iteration turns the current distribution `p` over edges into
//! conductances, measures (approximate) per-edge loads of the corresponding
//! electrical routing, and penalizes edges whose load is below the target
//! `beta`. The returned scheme averages the `T` electrical routings.

use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::lapsolve::{EdgeWeights, SolverConfig, SolverMode};
use crate::loads::{self, ImpedanceOracle, LoadKind, LoadVector};
use crate::sketch::{SketchOperator, DEFAULT_C_SKETCH};

pub const DEFAULT_EPS: f64 = 0.5;
pub const DEFAULT_ETA: f64 = 0.125;
pub const DEFAULT_MAX_RESTARTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    #[default]
    Linf,
    L1,
}

impl NormMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMode::Linf => "linf",
            NormMode::L1 => "l1",
        }
    }

    /// Which per-edge quantity the mode controls.
    pub fn kind(self) -> LoadKind {
        match self {
            NormMode::Linf => LoadKind::Load,
            NormMode::L1 => LoadKind::Stretch,
        }
    }
}

impl std::str::FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linf" => Ok(NormMode::Linf),
            "l1" => Ok(NormMode::L1),
            other => Err(Error::InvalidParameter(format!(
                "unknown norm mode {other:?} (expected linf or l1)"
            ))),
        }
    }
}

impl std::fmt::Display for NormMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MwuConfig {
    pub eps: f64,
    pub eta: f64,
    /// Initial localization bound; `None` means `ln^2 n`.
    pub alpha_init: Option<f64>,
    pub adaptive: bool,
    pub norm_mode: NormMode,
    pub seed: u64,
    pub solver: SolverConfig,
    pub use_sketch: bool,
    /// Sketch failure probability; `None` means `n^-10`.
    pub sketch_delta: Option<f64>,
    pub c_sketch: f64,
    pub max_restarts: usize,
}

impl Default for MwuConfig {
    fn default() -> Self {
        MwuConfig {
            eps: DEFAULT_EPS,
            eta: DEFAULT_ETA,
            alpha_init: None,
            adaptive: true,
            norm_mode: NormMode::Linf,
            seed: 0,
            solver: SolverConfig::default(),
            use_sketch: true,
            sketch_delta: None,
            c_sketch: DEFAULT_C_SKETCH,
            max_restarts: DEFAULT_MAX_RESTARTS,
        }
    }
}

impl MwuConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.eta > 0.0 && self.eta < 0.5) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1/2), got {}", self.eta)));
        }
        if let Some(a) = self.alpha_init {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidParameter(format!("alpha must be positive, got {a}")));
            }
        }
        if let Some(d) = self.sketch_delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        self.solver.validate()
    }

    pub fn resolved_alpha_init(&self, n: usize) -> f64 {
        self.alpha_init.unwrap_or_else(|| default_alpha(n))
    }

    pub fn resolved_delta(&self, n: usize) -> f64 {
        self.sketch_delta.unwrap_or_else(|| default_delta(n))
    }

    /// Approximation factor handed to the sketch: halved when solves are inexact.
    pub fn sketch_eps(&self) -> f64 {
        match self.solver.mode {
            SolverMode::ExactDense => self.eps,
            SolverMode::Iterative => self.eps / 2.0,
        }
    }
}

/// `ln^2 n`.
pub fn default_alpha(n: usize) -> f64 {
    let l = (n as f64).ln();
    l * l
}

/// `n^-10`, floored so that it stays a positive double.
pub fn default_delta(n: usize) -> f64 {
    (n as f64).powi(-10).clamp(f64::MIN_POSITIVE, 0.5)
}

/// Width `rho = 2 sqrt(2m)`.
pub fn rho(m: usize) -> f64 {
    2.0 * (2.0 * m as f64).sqrt()
}

/// Target `beta = (1 + eps) * 2 alpha`.
pub fn beta(eps: f64, alpha: f64) -> f64 {
    (1.0 + eps) * 2.0 * alpha
}

/// `T = ceil(rho ln m / (eta (1 - eta) alpha))`, at least one.
pub fn iteration_count(m: usize, eta: f64, alpha: f64) -> usize {
    let raw = rho(m) * (m as f64).ln() / (eta * (1.0 - eta) * alpha);
    (raw.ceil() as usize).max(1)
}

/// Largest `alpha` with `beta <= rho`, beyond which `y_e` can exceed one.
pub fn alpha_cap(m: usize, eps: f64) -> f64 {
    rho(m) / (2.0 * (1.0 + eps))
}

/// Conductances for a distribution over edges: `(p_e + 1/m)^-1` for `linf`,
/// `p_e + 1/m` for `l1`.
pub fn weights_from_p(p: &[f64], mode: NormMode) -> Result<EdgeWeights> {
    let m = p.len();
    if m == 0 {
        return Err(Error::InvalidParameter("empty distribution".into()));
    }
    let total: f64 = p.iter().sum();
    if p.iter().any(|&v| !(v >= -1e-9) || !v.is_finite()) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "p is not a probability vector (sum {total})"
        )));
    }
    let inv_m = 1.0 / m as f64;
    let values = p
        .iter()
        .map(|&pe| {
            let s = pe.max(0.0) + inv_m;
            match mode {
                NormMode::Linf => 1.0 / s,
                NormMode::L1 => s,
            }
        })
        .collect();
    EdgeWeights::new(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwuState {
    pub t: usize,
    pub x: Vec<f64>,
    pub potential: f64,
    pub p: Vec<f64>,
    pub last_y: Vec<f64>,
}

impl MwuState {
    pub fn initial(m: usize) -> Self {
        MwuState {
            t: 0,
            x: vec![1.0; m],
            potential: m as f64,
            p: vec![1.0 / m as f64; m],
            last_y: vec![0.0; m],
        }
    }
}

/// Scaled gains `y_e = (beta - apx_e) / rho`.
pub fn gains(apx: &[f64], beta: f64, rho: f64) -> Vec<f64> {
    apx.iter().map(|a| (beta - a) / rho).collect()
}

/// One multiplicative update `x_e <- x_e (1 - eta y_e)`.
pub fn mwu_step(state: &MwuState, apx: &LoadVector, beta: f64, rho: f64, eta: f64) -> Result<MwuState> {
    check_len(state.x.len(), apx.values.len())?;
    let y = gains(&apx.values, beta, rho);
    let mut x = Vec::with_capacity(y.len());
    for (e, (&xe, &ye)) in state.x.iter().zip(&y).enumerate() {
        let next = xe * (1.0 - eta * ye);
        if !(next > 0.0) {
            return Err(Error::WidthViolation { edge: e, value: next });
        }
        x.push(next);
    }
    let potential: f64 = x.iter().sum();
    let p = x.iter().map(|v| v / potential).collect();
    Ok(MwuState {
        t: state.t + 1,
        x,
        potential,
        p,
        last_y: y,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TraceRecord {
    pub t: usize,
    pub potential_before: f64,
    pub potential_after: f64,
    pub max_load: f64,
    /// `sum_e p_e apx_e`.
    pub avg_load: f64,
    /// `sum_e p_e y_e`.
    pub weighted_y: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartReason {
    AverageAboveTarget,
    GainOutOfRange,
    NonpositiveWeight,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RestartEvent {
    pub alpha: f64,
    pub t: usize,
    pub reason: RestartReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub lambda: f64,
    pub weights: EdgeWeights,
}

/// `M* = sum_i lambda_i W_i B L_i^+`.
#[derive(Debug, Clone)]
pub struct RoutingScheme {
    pub graph: Arc<Graph>,
    pub components: Vec<Component>,
    pub norm_mode: NormMode,
    pub alpha_used: f64,
    pub restarts: usize,
    pub restart_log: Vec<RestartEvent>,
    pub trace: Vec<TraceRecord>,
}

impl RoutingScheme {
    /// A single electrical routing with weights `w`.
    pub fn single(graph: Arc<Graph>, weights: EdgeWeights, norm_mode: NormMode) -> Result<Self> {
        check_len(graph.m(), weights.len())?;
        Ok(RoutingScheme {
            graph,
            components: vec![Component { lambda: 1.0, weights }],
            norm_mode,
            alpha_used: 0.0,
            restarts: 0,
            restart_log: Vec::new(),
            trace: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn lambda_sum(&self) -> f64 {
        self.components.iter().map(|c| c.lambda).sum()
    }

    /// Components and header fields agree bit for bit (trace is not compared).
    pub fn same_routing(&self, other: &RoutingScheme) -> bool {
        *self.graph == *other.graph
            && self.norm_mode == other.norm_mode
            && self.alpha_used.to_bits() == other.alpha_used.to_bits()
            && self.components.len() == other.components.len()
            && self.components.iter().zip(&other.components).all(|(a, b)| {
                a.lambda.to_bits() == b.lambda.to_bits()
                    && a.weights
                        .values()
                        .iter()
                        .zip(b.weights.values())
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }
}

/// Measures the per-edge quantity controlled by `cfg.norm_mode` for weights `w`.
pub fn measure(g: &Graph, w: &EdgeWeights, cfg: &MwuConfig, sketch_seed: u64) -> Result<LoadVector> {
    let kind = cfg.norm_mode.kind();
    if cfg.use_sketch {
        let eps = cfg.sketch_eps();
        let sk = SketchOperator::generate(g.m(), cfg.resolved_delta(g.n()), eps, sketch_seed, cfg.c_sketch)?;
        loads::approx(g, w, eps, &sk, &cfg.solver, kind)
    } else {
        Ok(ImpedanceOracle::with_cap(g, w, cfg.solver.oracle_cap)?.evaluate(kind))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sketch seed for iteration `t` of attempt `attempt`.
pub fn iteration_seed(seed: u64, attempt: usize, t: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ attempt as u64) ^ t as u64)
}

enum Attempt {
    Done(Vec<EdgeWeights>, Vec<TraceRecord>),
    Restart(RestartEvent),
}

fn run_attempt(g: &Graph, cfg: &MwuConfig, alpha: f64, attempt: usize) -> Result<Attempt> {
    let m = g.m();
    let rho = rho(m);
    let beta = beta(cfg.eps, alpha);
    let iterations = iteration_count(m, cfg.eta, alpha);
    log::debug!("attempt {attempt}: alpha {alpha}, beta {beta}, rho {rho}, T {iterations}");

    let mut state = MwuState::initial(m);
    let mut weights = Vec::with_capacity(iterations);
    let mut trace = Vec::with_capacity(iterations);
    for t in 1..=iterations {
        let w = weights_from_p(&state.p, cfg.norm_mode)?;
        let apx = measure(g, &w, cfg, iteration_seed(cfg.seed, attempt, t))?;
        let avg = apx.weighted_sum(&state.p);
        let y = gains(&apx.values, beta, rho);
        let (y_min, y_max) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

        if cfg.adaptive {
            let reason = if avg > beta {
                Some(RestartReason::AverageAboveTarget)
            } else if y_min < -1.0 || y_max > 1.0 {
                Some(RestartReason::GainOutOfRange)
            } else if y_max * cfg.eta >= 1.0 {
                Some(RestartReason::NonpositiveWeight)
            } else {
                None
            };
            if let Some(reason) = reason {
                return Ok(Attempt::Restart(RestartEvent { alpha, t, reason }));
            }
        }

        let next = mwu_step(&state, &apx, beta, rho, cfg.eta)?;
        trace.push(TraceRecord {
            t,
            potential_before: state.potential,
            potential_after: next.potential,
            max_load: apx.max(),
            avg_load: avg,
            weighted_y: state.p.iter().zip(&y).map(|(p, y)| p * y).sum(),
            y_min,
            y_max,
        });
        weights.push(w);
        state = next;
    }
    Ok(Attempt::Done(weights, trace))
}

/// Runs the multiplicative-weights loop and returns the averaged scheme.
///
/// In adaptive mode the starting `alpha` is clamped to [`alpha_cap`]; a run
/// whose average load exceeds `beta`, or whose gains leave `[-1, 1]`, is
/// discarded and retried with `alpha` doubled (up to the cap, and with fresh
/// sketch seeds).
pub fn compute_routing(graph: Arc<Graph>, cfg: &MwuConfig) -> Result<RoutingScheme> {
    cfg.validate()?;
    let g = graph.as_ref();
    let m = g.m();
    let cap = alpha_cap(m, cfg.eps);
    let mut alpha = cfg.resolved_alpha_init(g.n());
    if cfg.adaptive && alpha > cap {
        log::info!("alpha {alpha} exceeds width cap {cap}; starting at the cap");
        alpha = cap;
    }

    let mut restart_log = Vec::new();
    for attempt in 0.. {
        match run_attempt(g, cfg, alpha, attempt)? {
            Attempt::Done(weights, trace) => {
                let lambda = 1.0 / weights.len() as f64;
                let components = weights
                    .into_iter()
                    .map(|weights| Component { lambda, weights })
                    .collect();
                return Ok(RoutingScheme {
                    graph,
                    components,
                    norm_mode: cfg.norm_mode,
                    alpha_used: alpha,
                    restarts: restart_log.len(),
                    restart_log,
                    trace,
                });
            }
            Attempt::Restart(event) => {
                log::info!(
                    "restart at iteration {} ({:?}) with alpha {}",
                    event.t,
                    event.reason,
                    event.alpha
                );
                restart_log.push(event);
                if restart_log.len() > cfg.max_restarts {
                    return Err(Error::RestartBudgetExhausted {
                        restarts: cfg.max_restarts,
                        alpha,
                    });
                }
                alpha = (2.0 * alpha).min(cap);
            }
        }
    }
    unreachable!()
}
