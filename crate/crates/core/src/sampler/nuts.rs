//! Multinomial No-U-Turn sampler with doubling tree builds and the
//! generalized (momentum-sum) termination criterion, over a diagonal
//! Euclidean metric.

use ndarray::Array3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::adapt::{find_reasonable_step_size, DualAveraging, MetricAdapt};
use crate::sampler::diagnostics;

/// A log-density with exact gradient, evaluable on the unconstrained scale.
pub trait Target: Sync {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log density.
    /// Must return negative infinity (not an error) for invalid positions.
    fn log_density_grad(&self, position: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    /// Total iterations per chain, including warmup.
    pub iterations: usize,
    pub warmup: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            iterations: 3000,
            warmup: 1000,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 1 {
            return Err(Error::Argument("at least one chain required".into()));
        }
        if self.warmup >= self.iterations {
            return Err(Error::Argument(format!(
                "warmup ({}) must be smaller than iterations ({})",
                self.warmup, self.iterations
            )));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Argument("target_accept must lie in (0,1)".into()));
        }
        if self.max_tree_depth == 0 {
            return Err(Error::Argument("max_tree_depth must be positive".into()));
        }
        Ok(())
    }

    pub fn kept_per_chain(&self) -> usize {
        self.iterations - self.warmup
    }
}

/// Post-warmup draws with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    /// (chains, retained iterations, parameters).
    pub draws: Array3<f64>,
    /// Post-warmup divergent transitions across all chains.
    pub divergence_count: usize,
    /// Rank-normalized split R-hat per parameter (NaN when degenerate).
    pub rhat: Vec<f64>,
    /// Bulk effective sample size per parameter (NaN when degenerate).
    pub ess_bulk: Vec<f64>,
    /// Parameters whose draws were constant across all chains.
    pub degenerate: Vec<bool>,
}

impl PosteriorDraws {
    pub fn n_chains(&self) -> usize {
        self.draws.dim().0
    }

    pub fn n_kept(&self) -> usize {
        self.draws.dim().1
    }

    pub fn dim(&self) -> usize {
        self.draws.dim().2
    }

    pub fn total_draws(&self) -> usize {
        self.n_chains() * self.n_kept()
    }

    /// All draws of one parameter, pooled across chains in chain order.
    pub fn parameter_draws(&self, param: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_draws());
        for c in 0..self.n_chains() {
            for i in 0..self.n_kept() {
                out.push(self.draws[(c, i, param)]);
            }
        }
        out
    }

    pub fn max_rhat(&self) -> f64 {
        self.rhat.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ess(&self) -> f64 {
        self.ess_bulk.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min)
    }
}

/// Diagonal Euclidean metric; `inv_mass` is the estimated posterior
/// variance per coordinate.
#[derive(Debug, Clone)]
pub struct Metric {
    pub inv_mass: Vec<f64>,
}

impl Metric {
    pub fn unit(dim: usize) -> Self {
        Metric { inv_mass: vec![1.0; dim] }
    }

    pub fn sample_momentum<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.inv_mass
            .iter()
            .map(|&im| crate::model::dist::rand_distr_standard_normal(rng) / im.sqrt())
            .collect()
    }

    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p.iter().zip(&self.inv_mass).map(|(&pi, &im)| im * pi * pi).sum::<f64>()
    }
}

/// Position/momentum pair with cached gradient and log density.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

pub(crate) fn hamiltonian(state: &ChainState, metric: &Metric) -> f64 {
    -state.logp + metric.kinetic(&state.p)
}

/// One leapfrog step with signed step size; `None` when the density is
/// rejected at the new position.
pub(crate) fn leapfrog<T: Target + ?Sized>(
    target: &T,
    state: &ChainState,
    eps: f64,
    metric: &Metric,
) -> Option<ChainState> {
    let dim = state.q.len();
    let mut p: Vec<f64> = (0..dim).map(|i| state.p[i] + 0.5 * eps * state.grad[i]).collect();
    let q: Vec<f64> = (0..dim).map(|i| state.q[i] + eps * metric.inv_mass[i] * p[i]).collect();
    let mut grad = vec![0.0; dim];
    let logp = target.log_density_grad(&q, &mut grad);
    if !logp.is_finite() {
        return None;
    }
    for i in 0..dim {
        p[i] += 0.5 * eps * grad[i];
    }
    Some(ChainState { q, p, grad, logp })
}

/// Energy error beyond which a transition is declared divergent.
const DIVERGENCE_THRESHOLD: f64 = 1000.0;

struct Tree {
    /// Backward-most state of the trajectory segment.
    left: ChainState,
    /// Forward-most state.
    right: ChainState,
    proposal: ChainState,
    /// Momentum sum over the segment (generalized U-turn criterion).
    rho: Vec<f64>,
    log_sum_weight: f64,
    sum_accept: f64,
    n_leapfrog: usize,
    divergent: bool,
    turning: bool,
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// U-turn check: the trajectory turns when the momentum sum points away
/// from either end velocity.
fn is_turning(rho: &[f64], p_left: &[f64], p_right: &[f64], metric: &Metric) -> bool {
    let mut dot_left = 0.0;
    let mut dot_right = 0.0;
    for i in 0..rho.len() {
        dot_left += rho[i] * metric.inv_mass[i] * p_left[i];
        dot_right += rho[i] * metric.inv_mass[i] * p_right[i];
    }
    if !dot_left.is_finite() || !dot_right.is_finite() {
        return true;
    }
    dot_left < 0.0 || dot_right < 0.0
}

fn build_leaf<T: Target + ?Sized>(
    target: &T,
    from: &ChainState,
    direction: f64,
    eps: f64,
    h0: f64,
    metric: &Metric,
) -> Tree {
    let (state, h) = match leapfrog(target, from, direction * eps, metric) {
        Some(next) => {
            let h = hamiltonian(&next, metric);
            (next, h)
        }
        None => (from.clone(), f64::INFINITY),
    };
    let energy_error = h - h0;
    let divergent = !energy_error.is_finite() || energy_error > DIVERGENCE_THRESHOLD;
    let log_weight = if divergent { f64::NEG_INFINITY } else { -energy_error };
    let accept = if energy_error.is_finite() { (-energy_error).exp().min(1.0) } else { 0.0 };
    Tree {
        left: state.clone(),
        right: state.clone(),
        rho: state.p.clone(),
        proposal: state,
        log_sum_weight: log_weight,
        sum_accept: accept,
        n_leapfrog: 1,
        divergent,
        turning: false,
    }
}

/// Recursively builds a subtree of `2^depth` leapfrog steps in one
/// direction; multinomial sampling over valid leaves.
#[allow(clippy::too_many_arguments)]
fn build_tree<T: Target + ?Sized, R: Rng>(
    target: &T,
    from: &ChainState,
    depth: usize,
    direction: f64,
    eps: f64,
    h0: f64,
    metric: &Metric,
    rng: &mut R,
) -> Tree {
    if depth == 0 {
        return build_leaf(target, from, direction, eps, h0, metric);
    }

    let mut inner = build_tree(target, from, depth - 1, direction, eps, h0, metric, rng);
    if inner.divergent || inner.turning {
        return inner;
    }

    let edge = if direction > 0.0 { inner.right.clone() } else { inner.left.clone() };
    let outer = build_tree(target, &edge, depth - 1, direction, eps, h0, metric, rng);

    inner.n_leapfrog += outer.n_leapfrog;
    inner.sum_accept += outer.sum_accept;
    inner.divergent |= outer.divergent;
    inner.turning |= outer.turning;
    if inner.divergent || inner.turning {
        return inner;
    }

    // Multinomial selection between the halves.
    let total = log_sum_exp(inner.log_sum_weight, outer.log_sum_weight);
    if total > f64::NEG_INFINITY {
        let accept_outer = (outer.log_sum_weight - total).exp();
        if rng.random::<f64>() < accept_outer {
            inner.proposal = outer.proposal;
        }
    }
    inner.log_sum_weight = total;

    // Junction-aware U-turn checks across the two halves (the merged
    // criterion plus both half-to-junction cross checks).
    let (rho_init, rho_final) = (inner.rho.clone(), outer.rho.clone());
    let (p_init_junction, p_final_junction) = if direction > 0.0 {
        (inner.right.p.clone(), outer.left.p.clone())
    } else {
        (inner.left.p.clone(), outer.right.p.clone())
    };
    for i in 0..inner.rho.len() {
        inner.rho[i] += outer.rho[i];
    }
    if direction > 0.0 {
        inner.right = outer.right;
    } else {
        inner.left = outer.left;
    }

    let full_turn = is_turning(&inner.rho, &inner.left.p, &inner.right.p, metric);
    let rho_cross_a: Vec<f64> =
        rho_init.iter().zip(&p_final_junction).map(|(&a, &b)| a + b).collect();
    let p_start = if direction > 0.0 { &inner.left.p } else { &inner.right.p };
    let turn_a = is_turning(&rho_cross_a, p_start, &p_final_junction, metric);
    let rho_cross_b: Vec<f64> =
        rho_final.iter().zip(&p_init_junction).map(|(&a, &b)| a + b).collect();
    let p_end = if direction > 0.0 { &inner.right.p } else { &inner.left.p };
    let turn_b = is_turning(&rho_cross_b, &p_init_junction, p_end, metric);
    inner.turning = full_turn || turn_a || turn_b;

    inner
}

pub(crate) struct Transition {
    pub state: ChainState,
    pub accept_stat: f64,
    pub divergent: bool,
}

/// One NUTS transition: fresh momentum, doubling trajectory expansion with
/// progressive (biased) sampling across subtrees.
pub(crate) fn nuts_transition<T: Target + ?Sized, R: Rng>(
    target: &T,
    current: &ChainState,
    eps: f64,
    max_depth: usize,
    metric: &Metric,
    rng: &mut R,
) -> Transition {
    let mut state = current.clone();
    state.p = metric.sample_momentum(rng);
    let h0 = hamiltonian(&state, metric);

    let mut tree = Tree {
        left: state.clone(),
        right: state.clone(),
        rho: state.p.clone(),
        proposal: state,
        log_sum_weight: 0.0,
        sum_accept: 0.0,
        n_leapfrog: 0,
        divergent: false,
        turning: false,
    };

    for depth in 0..max_depth {
        let direction: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let edge = if direction > 0.0 { tree.right.clone() } else { tree.left.clone() };
        let subtree = build_tree(target, &edge, depth, direction, eps, h0, metric, rng);

        tree.n_leapfrog += subtree.n_leapfrog;
        tree.sum_accept += subtree.sum_accept;
        if subtree.divergent {
            tree.divergent = true;
            break;
        }
        if subtree.turning {
            break;
        }

        // Progressive sampling biased toward the new subtree.
        let accept_new = (subtree.log_sum_weight - tree.log_sum_weight).exp().min(1.0);
        if rng.random::<f64>() < accept_new {
            tree.proposal = subtree.proposal.clone();
        }
        tree.log_sum_weight = log_sum_exp(tree.log_sum_weight, subtree.log_sum_weight);

        let rho_existing = tree.rho.clone();
        let rho_subtree = subtree.rho.clone();
        let (p_existing_junction, p_subtree_junction) = if direction > 0.0 {
            (tree.right.p.clone(), subtree.left.p.clone())
        } else {
            (tree.left.p.clone(), subtree.right.p.clone())
        };
        for i in 0..tree.rho.len() {
            tree.rho[i] += subtree.rho[i];
        }
        if direction > 0.0 {
            tree.right = subtree.right;
        } else {
            tree.left = subtree.left;
        }

        let full_turn = is_turning(&tree.rho, &tree.left.p, &tree.right.p, metric);
        let cross_a: Vec<f64> =
            rho_existing.iter().zip(&p_subtree_junction).map(|(&a, &b)| a + b).collect();
        let cross_b: Vec<f64> =
            rho_subtree.iter().zip(&p_existing_junction).map(|(&a, &b)| a + b).collect();
        let (turn_a, turn_b) = if direction > 0.0 {
            (
                is_turning(&cross_a, &tree.left.p, &p_subtree_junction, metric),
                is_turning(&cross_b, &p_existing_junction, &tree.right.p, metric),
            )
        } else {
            (
                is_turning(&cross_a, &p_subtree_junction, &tree.right.p, metric),
                is_turning(&cross_b, &tree.left.p, &p_existing_junction, metric),
            )
        };
        if full_turn || turn_a || turn_b {
            break;
        }
    }

    let accept_stat = if tree.n_leapfrog > 0 {
        (tree.sum_accept / tree.n_leapfrog as f64).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Transition {
        state: tree.proposal,
        accept_stat,
        divergent: tree.divergent,
    }
}

struct ChainOutput {
    /// kept x dim, row-major.
    draws: Vec<f64>,
    divergences: usize,
}

fn run_chain<T: Target + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    init: &[f64],
    chain: usize,
) -> Result<ChainOutput> {
    let dim = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Distinct deterministic substream per chain, separate from the
    // init-parameter streams.
    rng.set_stream(1 << 32 | chain as u64);

    let mut grad = vec![0.0; dim];
    let logp = target.log_density_grad(init, &mut grad);
    if !logp.is_finite() {
        return Err(Error::Initialization(format!(
            "chain {chain}: log density is not finite at the initial point"
        )));
    }
    let mut state = ChainState { q: init.to_vec(), p: vec![0.0; dim], grad, logp };

    let mut metric = Metric::unit(dim);
    let eps0 = find_reasonable_step_size(target, &state, &metric, &mut rng);
    let mut da = DualAveraging::new(eps0, config.target_accept);
    let mut madapt = MetricAdapt::new(config.warmup, dim);

    for m in 0..config.warmup {
        let t = nuts_transition(target, &state, da.current(), config.max_tree_depth, &metric, &mut rng);
        state = t.state;
        da.learn(t.accept_stat);
        if let Some(inv_mass) = madapt.update(m, &state.q) {
            metric = Metric { inv_mass };
            let eps = find_reasonable_step_size(target, &state, &metric, &mut rng);
            da = DualAveraging::new(eps, config.target_accept);
        }
    }

    let eps = if config.warmup > 0 { da.adapted() } else { da.current() };
    let kept = config.kept_per_chain();
    let mut draws = Vec::with_capacity(kept * dim);
    let mut divergences = 0usize;
    for _ in 0..kept {
        let t = nuts_transition(target, &state, eps, config.max_tree_depth, &metric, &mut rng);
        state = t.state;
        divergences += usize::from(t.divergent);
        draws.extend_from_slice(&state.q);
    }
    Ok(ChainOutput { draws, divergences })
}

/// Runs multi-chain NUTS. Chains execute in parallel with independent RNG
/// substreams derived from `(seed, chain index)`, so results are
/// bit-identical for a fixed configuration regardless of thread count.
pub fn run_nuts<T: Target + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    inits: &[Vec<f64>],
) -> Result<PosteriorDraws> {
    config.validate()?;
    let dim = target.dim();
    if inits.len() != config.chains {
        return Err(Error::Argument(format!(
            "{} init vectors provided for {} chains",
            inits.len(),
            config.chains
        )));
    }
    if let Some(bad) = inits.iter().position(|v| v.len() != dim) {
        return Err(Error::Argument(format!(
            "init vector {bad} has length {}, expected {dim}",
            inits[bad].len()
        )));
    }

    let outputs: Vec<Result<ChainOutput>> = inits
        .par_iter()
        .enumerate()
        .map(|(c, init)| run_chain(target, config, init, c))
        .collect();

    let kept = config.kept_per_chain();
    let mut draws = Array3::zeros((config.chains, kept, dim));
    let mut divergence_count = 0usize;
    for (c, out) in outputs.into_iter().enumerate() {
        let out = out?;
        divergence_count += out.divergences;
        for i in 0..kept {
            for d in 0..dim {
                draws[(c, i, d)] = out.draws[i * dim + d];
            }
        }
    }

    let (rhat, ess_bulk, degenerate) = if config.chains >= 2 && kept >= 4 {
        (
            diagnostics::split_rhat(&draws)?,
            diagnostics::ess_bulk(&draws)?,
            diagnostics::degenerate_flags(&draws),
        )
    } else {
        (vec![f64::NAN; dim], vec![f64::NAN; dim], vec![false; dim])
    };

    Ok(PosteriorDraws { draws, divergence_count, rhat, ess_bulk, degenerate })
}
