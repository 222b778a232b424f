//! Convergence diagnostics: rank-normalized split R-hat and bulk
//! effective sample size (Vehtari et al. 2021 definitions).

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::stats;

fn check_preconditions(draws: &Array3<f64>) -> Result<()> {
    let (chains, kept, _) = draws.dim();
    if chains < 2 {
        return Err(Error::Argument("diagnostics need at least 2 chains".into()));
    }
    if kept < 4 {
        return Err(Error::Argument("diagnostics need at least 4 draws per chain".into()));
    }
    Ok(())
}

/// True where a parameter is constant across every chain and draw.
pub fn degenerate_flags(draws: &Array3<f64>) -> Vec<bool> {
    let (chains, kept, dim) = draws.dim();
    (0..dim)
        .map(|d| {
            let first = draws[(0, 0, d)];
            (0..chains).all(|c| (0..kept).all(|i| draws[(c, i, d)] == first))
        })
        .collect()
}

/// Splits each chain in half (dropping one trailing draw if odd) and
/// extracts the per-split series of one parameter.
fn split_sequences(draws: &Array3<f64>, param: usize) -> Vec<Vec<f64>> {
    let (chains, kept, _) = draws.dim();
    let half = kept / 2;
    let mut out = Vec::with_capacity(chains * 2);
    for c in 0..chains {
        out.push((0..half).map(|i| draws[(c, i, param)]).collect());
        out.push((half..2 * half).map(|i| draws[(c, i, param)]).collect());
    }
    out
}

/// Replaces values by normal scores of their pooled ranks (average ties).
fn rank_normalize(sequences: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n_per = sequences[0].len();
    let total = sequences.len() * n_per;
    let mut indexed: Vec<(f64, usize, usize)> = Vec::with_capacity(total);
    for (s, seq) in sequences.iter().enumerate() {
        for (i, &v) in seq.iter().enumerate() {
            indexed.push((v, s, i));
        }
    }
    indexed.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN draw in diagnostics"));

    let mut ranks = vec![0.0; total];
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j < total && indexed[j].0 == indexed[i].0 {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for r in ranks.iter_mut().take(j).skip(i) {
            *r = avg;
        }
        i = j;
    }

    let nf = total as f64;
    let mut out = vec![vec![0.0; n_per]; sequences.len()];
    for (idx, &(_, s, i)) in indexed.iter().enumerate() {
        out[s][i] = stats::inv_normal_cdf((ranks[idx] - 0.375) / (nf + 0.25));
    }
    out
}

/// Classic split-R-hat on already-transformed sequences.
fn rhat_of(sequences: &[Vec<f64>]) -> f64 {
    let m = sequences.len() as f64;
    let n = sequences[0].len() as f64;
    let means: Vec<f64> = sequences.iter().map(|s| stats::mean(s)).collect();
    let grand = stats::mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|&mu| (mu - grand) * (mu - grand)).sum::<f64>();
    let w = sequences
        .iter()
        .zip(&means)
        .map(|(s, &mu)| s.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w <= 0.0 {
        return f64::NAN;
    }
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

/// Rank-normalized split R-hat per parameter; NaN for constant parameters.
pub fn split_rhat(draws: &Array3<f64>) -> Result<Vec<f64>> {
    check_preconditions(draws)?;
    let degenerate = degenerate_flags(draws);
    let dim = draws.dim().2;
    Ok((0..dim)
        .map(|d| {
            if degenerate[d] {
                f64::NAN
            } else {
                rhat_of(&rank_normalize(&split_sequences(draws, d)))
            }
        })
        .collect())
}

/// Combined-chain autocorrelation ESS with Geyer initial-positive-sequence
/// truncation (stop summing at the first negative paired sum of
/// autocorrelations). Lags are evaluated lazily.
fn ess_of(sequences: &[Vec<f64>]) -> f64 {
    let m = sequences.len() as f64;
    let n = sequences[0].len();
    let nf = n as f64;
    let means: Vec<f64> = sequences.iter().map(|s| stats::mean(s)).collect();
    let vars: Vec<f64> = sequences
        .iter()
        .zip(&means)
        .map(|(s, &mu)| s.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / (nf - 1.0))
        .collect();
    let w = stats::mean(&vars);
    if w <= 0.0 {
        return f64::NAN;
    }
    let grand = stats::mean(&means);
    let b_over_n = if sequences.len() > 1 {
        means.iter().map(|&mu| (mu - grand) * (mu - grand)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let var_plus = (nf - 1.0) / nf * w + b_over_n;

    // Mean autocovariance at lag t across sequences (biased /n estimator).
    let gamma = |t: usize| -> f64 {
        let mut acc = 0.0;
        for (s, &mu) in sequences.iter().zip(&means) {
            let mut g = 0.0;
            for i in 0..n - t {
                g += (s[i] - mu) * (s[i + t] - mu);
            }
            acc += g / nf;
        }
        acc / m
    };

    let rho = |t: usize| 1.0 - (w - gamma(t)) / var_plus;

    let mut tau = 1.0;
    let mut t = 1;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair < 0.0 {
            break;
        }
        tau += 2.0 * pair;
        t += 2;
    }
    (m * nf / tau).max(0.0)
}

/// Bulk effective sample size per parameter (rank-normalized, split
/// chains); NaN for constant parameters.
pub fn ess_bulk(draws: &Array3<f64>) -> Result<Vec<f64>> {
    check_preconditions(draws)?;
    let degenerate = degenerate_flags(draws);
    let dim = draws.dim().2;
    Ok((0..dim)
        .map(|d| {
            if degenerate[d] {
                f64::NAN
            } else {
                ess_of(&rank_normalize(&split_sequences(draws, d)))
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dist::rand_distr_standard_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn from_chains(chains: Vec<Vec<f64>>) -> Array3<f64> {
        let c = chains.len();
        let n = chains[0].len();
        Array3::from_shape_fn((c, n, 1), |(ci, i, _)| chains[ci][i])
    }

    #[test]
    fn rhat_near_one_for_iid_chains() {
        // Simulation oracle: 100 repetitions of 4 chains x 2000 iid normal
        // draws; rank-normalized split R-hat < 1.01 in at least 99.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut passes = 0;
        for _ in 0..100 {
            let chains: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..2000).map(|_| rand_distr_standard_normal(&mut rng)).collect())
                .collect();
            let rhat = split_rhat(&from_chains(chains)).unwrap()[0];
            if rhat < 1.01 {
                passes += 1;
            }
        }
        assert!(passes >= 99, "{passes}/100 repetitions under 1.01");
    }

    #[test]
    fn rhat_detects_offset_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..500).map(|_| rand_distr_standard_normal(&mut rng)).collect();
        let b: Vec<f64> = (0..500).map(|_| 10.0 + rand_distr_standard_normal(&mut rng)).collect();
        let rhat = split_rhat(&from_chains(vec![a, b])).unwrap()[0];
        assert!(rhat > 1.5, "rhat {rhat} should flag a 10-sd offset");
    }

    #[test]
    fn constant_draws_are_nan_with_flag() {
        let draws = from_chains(vec![vec![2.5; 100], vec![2.5; 100]]);
        assert!(split_rhat(&draws).unwrap()[0].is_nan());
        assert!(ess_bulk(&draws).unwrap()[0].is_nan());
        assert_eq!(degenerate_flags(&draws), vec![true]);
    }

    #[test]
    fn preconditions_enforced() {
        let draws = from_chains(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        assert!(split_rhat(&draws).is_err());
        let draws = from_chains(vec![vec![1.0, 2.0], vec![0.5, 1.5]]);
        assert!(ess_bulk(&draws).is_err());
    }

    #[test]
    fn ess_of_iid_draws_is_near_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2000).map(|_| rand_distr_standard_normal(&mut rng)).collect())
            .collect();
        let ess = ess_bulk(&from_chains(chains)).unwrap()[0];
        let n = 8000.0;
        assert!(
            ess > 0.8 * n && ess < 1.2 * n,
            "iid ESS {ess} outside [0.8, 1.2] x {n}"
        );
    }

    #[test]
    fn ess_of_ar1_matches_analytic_factor() {
        // AR(1) with phi = 0.9 has integrated autocorrelation time
        // (1+phi)/(1-phi) = 19, so ESS should be near n/19 (within 30%).
        let phi: f64 = 0.9;
        let innovation = (1.0 - phi * phi).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x = 0.0;
                (0..2000)
                    .map(|_| {
                        x = phi * x + innovation * rand_distr_standard_normal(&mut rng);
                        x
                    })
                    .collect()
            })
            .collect();
        let ess = ess_bulk(&from_chains(chains)).unwrap()[0];
        let expected = 8000.0 * (1.0 - phi) / (1.0 + phi);
        assert!(
            (ess - expected).abs() / expected < 0.3,
            "AR(1) ESS {ess}, expected about {expected}"
        );
    }
}
