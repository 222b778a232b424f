//! Warmup adaptation: dual-averaging step size and windowed diagonal
//! metric estimation.

use rand::Rng;

use crate::sampler::nuts::{hamiltonian, leapfrog, ChainState, Metric};
use crate::sampler::Target;

/// Nesterov dual averaging of the log step size toward a target acceptance
/// statistic (gamma = 0.05, t0 = 10, kappa = 0.75).
#[derive(Debug, Clone)]
pub struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    counter: f64,
    target_accept: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    pub fn new(initial_step: f64, target_accept: f64) -> Self {
        DualAveraging {
            mu: (10.0 * initial_step).ln(),
            log_eps: initial_step.ln(),
            log_eps_bar: 0.0,
            h_bar: 0.0,
            counter: 0.0,
            target_accept,
        }
    }

    /// Step size to use for the next transition.
    pub fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Averaged step size for the sampling phase.
    pub fn adapted(&self) -> f64 {
        self.log_eps_bar.exp()
    }

    pub fn learn(&mut self, accept_stat: f64) {
        self.counter += 1.0;
        let accept = if accept_stat.is_finite() { accept_stat.clamp(0.0, 1.0) } else { 0.0 };
        let eta = 1.0 / (self.counter + Self::T0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target_accept - accept);
        self.log_eps = self.mu - self.counter.sqrt() / Self::GAMMA * self.h_bar;
        let x_eta = self.counter.powf(-Self::KAPPA);
        self.log_eps_bar = x_eta * self.log_eps + (1.0 - x_eta) * self.log_eps_bar;
    }
}

/// Expanding-window schedule for diagonal metric estimation: a fast initial
/// buffer, doubling variance-collection windows, and a terminal buffer that
/// leaves the step size to settle (75/25/50/... scaled down for short
/// warmups).
#[derive(Debug, Clone)]
pub struct MetricAdapt {
    term_start: usize,
    window_start: usize,
    window_end: usize,
    window_size: usize,
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl MetricAdapt {
    pub fn new(warmup: usize, dim: usize) -> Self {
        let (init_buffer, term_buffer, base_window) = if warmup >= 150 {
            (75, 50, 25)
        } else {
            let init = (0.15 * warmup as f64) as usize;
            let term = (0.10 * warmup as f64) as usize;
            (init, term, warmup.saturating_sub(init + term).max(1))
        };
        let term_start = warmup.saturating_sub(term_buffer);
        let window_end = Self::clamp_window(init_buffer + base_window, base_window, term_start);
        MetricAdapt {
            term_start,
            window_start: init_buffer,
            window_end,
            window_size: base_window,
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    /// If the next (doubled) window would not fit before the terminal
    /// buffer, extend the current one to cover the remainder.
    fn clamp_window(end: usize, size: usize, term_start: usize) -> usize {
        if end + 2 * size > term_start {
            term_start
        } else {
            end
        }
    }

    /// Feeds one warmup draw; returns a freshly estimated inverse mass
    /// diagonal when a window closes.
    pub fn update(&mut self, iter: usize, q: &[f64]) -> Option<Vec<f64>> {
        if self.window_start >= self.window_end || self.window_end > self.term_start {
            return None;
        }
        if iter >= self.window_start && iter < self.window_end {
            self.count += 1;
            let n = self.count as f64;
            for (d, &x) in q.iter().enumerate() {
                let delta = x - self.mean[d];
                self.mean[d] += delta / n;
                self.m2[d] += delta * (x - self.mean[d]);
            }
        }
        if iter + 1 == self.window_end && self.count >= 2 {
            let n = self.count as f64;
            // Regularize toward unit scale like a weak normal prior on the
            // variance (n/(n+5) shrinkage).
            let inv_mass: Vec<f64> = self
                .m2
                .iter()
                .map(|&m2| {
                    let var = m2 / (n - 1.0);
                    (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
                })
                .map(|v| v.max(1e-12))
                .collect();
            self.count = 0;
            self.mean.fill(0.0);
            self.m2.fill(0.0);
            self.window_start = self.window_end;
            self.window_size *= 2;
            self.window_end = Self::clamp_window(
                self.window_start + self.window_size,
                self.window_size,
                self.term_start,
            );
            return Some(inv_mass);
        }
        None
    }
}

/// Doubles or halves the step size until one leapfrog step from `state`
/// crosses 50% acceptance in the joint density.
pub fn find_reasonable_step_size<T: Target + ?Sized, R: Rng>(
    target: &T,
    state: &ChainState,
    metric: &Metric,
    rng: &mut R,
) -> f64 {
    let mut eps = 1.0;
    let mut trial = state.clone();
    trial.p = metric.sample_momentum(rng);
    let h0 = hamiltonian(&trial, metric);

    let log_ratio_at = |eps: f64, from: &ChainState| -> f64 {
        match leapfrog(target, from, eps, metric) {
            Some(next) => {
                let h1 = hamiltonian(&next, metric);
                if h1.is_finite() {
                    h0 - h1
                } else {
                    f64::NEG_INFINITY
                }
            }
            None => f64::NEG_INFINITY,
        }
    };

    let mut log_ratio = log_ratio_at(eps, &trial);
    let half_ln = 0.5f64.ln();
    let direction: f64 = if log_ratio > half_ln { 1.0 } else { -1.0 };
    for _ in 0..100 {
        if direction * log_ratio <= direction * half_ln {
            break;
        }
        eps *= 2f64.powf(direction);
        if !(1e-10..=1e7).contains(&eps) {
            break;
        }
        log_ratio = log_ratio_at(eps, &trial);
    }
    eps.clamp(1e-10, 1e7)
}
