//! Benjamini-Hochberg step-up false discovery rate adjustment.

use crate::error::{Error, Result};

/// Adjusted q-values: `q_(i) = min_{j >= i} p_(j) * m / j` over the sorted
/// p-values (stable sort, so ties share ranks), clipped to [0, 1], returned
/// in the original order.
pub fn bh_adjust(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = p.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Domain(format!("p-value {bad} outside [0,1]")));
    }
    let m = p.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).expect("NaN excluded above"));

    let mut q = vec![0.0; m];
    let mut running_min = 1.0f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let candidate = p[idx] * m as f64 / (rank + 1) as f64;
        running_min = running_min.min(candidate);
        q[idx] = running_min.min(1.0);
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    /// Direct step-up definition, written independently of the production
    /// algorithm: for each p_i, the minimum of p_(j) * m / j over all sorted
    /// positions j at or after i's position.
    pub(crate) fn bh_bruteforce(p: &[f64]) -> Vec<f64> {
        let m = p.len();
        let mut sorted: Vec<(f64, usize)> = p.iter().cloned().zip(0..m).collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut q = vec![0.0; m];
        for (pos, &(pv, orig)) in sorted.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (j, &(pj, _)) in sorted.iter().enumerate().skip(pos) {
                let _ = pv;
                best = best.min(pj * m as f64 / (j + 1) as f64);
            }
            q[orig] = best.min(1.0);
        }
        q
    }

    #[test]
    fn worked_example() {
        let q = bh_adjust(&[0.01, 0.02, 0.04, 0.5]).unwrap();
        assert_abs_diff_eq!(q[0], 0.04, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], 0.04, epsilon = 1e-12);
        assert_abs_diff_eq!(q[2], 0.04 * 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q[3], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ties_share_adjusted_values() {
        let q = bh_adjust(&[0.03; 5]).unwrap();
        for &v in &q {
            assert_abs_diff_eq!(v, 0.03, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_test_unchanged() {
        let q = bh_adjust(&[0.2]).unwrap();
        assert_eq!(q, vec![0.2]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(bh_adjust(&[0.5, 1.2]).is_err());
        assert!(bh_adjust(&[-0.1]).is_err());
        assert!(bh_adjust(&[f64::NAN]).is_err());
    }

    #[test]
    fn matches_bruteforce_on_random_vectors() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let m = rng.random_range(1..40);
            let p: Vec<f64> = (0..m)
                .map(|_| {
                    // Mix continuous values and deliberate ties.
                    if rng.random::<f64>() < 0.2 {
                        0.05 * rng.random_range(0..5) as f64
                    } else {
                        rng.random::<f64>()
                    }
                })
                .collect();
            let fast = bh_adjust(&p).unwrap();
            let slow = bh_bruteforce(&p);
            for (a, b) in fast.iter().zip(&slow) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn monotone_and_dominating() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = rng.random_range(2..30);
            let p: Vec<f64> = (0..m).map(|_| rng.random()).collect();
            let q = bh_adjust(&p).unwrap();
            for i in 0..m {
                assert!(q[i] >= p[i] - 1e-15, "q must dominate p");
                for j in 0..m {
                    if p[i] <= p[j] {
                        assert!(q[i] <= q[j] + 1e-15, "BH must preserve p ordering");
                    }
                }
            }
        }
    }
}
