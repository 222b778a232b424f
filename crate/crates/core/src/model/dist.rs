//! Log-densities, gradients, and samplers for the prior building blocks.

use rand::Rng;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// Check function of quantile regression, `rho_nu(u) = u * (nu - 1{u<0})`.
pub fn al_rho(u: f64, nu: f64) -> f64 {
    u * (nu - f64::from(u < 0.0))
}

/// Derivative of the check function with the subgradient convention
/// `rho'(0) := nu - 1/2` at the kink.
pub fn al_rho_deriv(u: f64, nu: f64) -> f64 {
    if u > 0.0 {
        nu
    } else if u < 0.0 {
        nu - 1.0
    } else {
        nu - 0.5
    }
}

/// Log-density of the asymmetric Laplace distribution in the quantile
/// (check-function) parameterization:
///
/// `log f(x) = log(nu (1-nu) / tau) - rho_nu((x - mu) / tau)`.
///
/// The skewness `nu` in (0,1) equals the probability mass left of `mu`; the
/// `nu = 1/2` slice is a symmetric Laplace with scale `2 tau`.
pub fn al_logpdf(x: f64, mu: f64, tau: f64, nu: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("asymmetric Laplace scale must be positive, got {tau}")));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("asymmetric Laplace skewness must lie in (0,1), got {nu}")));
    }
    Ok(al_logpdf_unchecked(x, mu, tau, nu))
}

pub(crate) fn al_logpdf_unchecked(x: f64, mu: f64, tau: f64, nu: f64) -> f64 {
    (nu * (1.0 - nu) / tau).ln() - al_rho((x - mu) / tau, nu)
}

/// Gradient of [`al_logpdf`] with respect to `(x, tau, nu)` at fixed `mu`.
///
/// Uses `rho'(0) = nu - 1/2` at the kink, which makes the `nu = 1/2`
/// gradient vanish at the mode.
pub(crate) fn al_grad(x: f64, mu: f64, tau: f64, nu: f64) -> (f64, f64, f64) {
    let u = (x - mu) / tau;
    let d_x = -al_rho_deriv(u, nu) / tau;
    // rho is positively homogeneous, so d rho(u)/d tau = -rho(u)/tau.
    let d_tau = (al_rho(u, nu) - 1.0) / tau;
    let d_nu = 1.0 / nu - 1.0 / (1.0 - nu) - u;
    (d_x, d_tau, d_nu)
}

/// Inverse-CDF draw from the asymmetric Laplace with location zero.
pub fn sample_al<R: Rng + ?Sized>(rng: &mut R, tau: f64, nu: f64) -> f64 {
    let u: f64 = rng.random();
    if u < nu {
        tau / (1.0 - nu) * (u / nu).ln()
    } else {
        -tau / nu * ((1.0 - u) / (1.0 - nu)).ln()
    }
}

pub fn normal_logpdf(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
}

/// Half-normal on x >= 0 with the given scale.
pub fn halfnormal_logpdf(x: f64, scale: f64) -> f64 {
    std::f64::consts::LN_2 + normal_logpdf(x, 0.0, scale)
}

pub fn sample_halfnormal<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let z: f64 = rand_distr_standard_normal(rng);
    (z * scale).abs()
}

/// Standard normal draw via Box-Muller on the ChaCha stream; avoids pulling
/// a distributions crate for one transform.
pub(crate) fn rand_distr_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random();
        if u1 > 0.0 {
            let u2: f64 = rng.random();
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

pub fn laplace_logpdf(x: f64, mu: f64, b: f64) -> f64 {
    -(2.0 * b).ln() - (x - mu).abs() / b
}

pub fn laplace_cdf(x: f64, mu: f64, b: f64) -> f64 {
    if x < mu {
        0.5 * ((x - mu) / b).exp()
    } else {
        1.0 - 0.5 * ((mu - x) / b).exp()
    }
}

/// Log normalizing mass of a Laplace restricted to (0, 1).
pub fn laplace_trunc01_ln_mass(mu: f64, b: f64) -> f64 {
    (laplace_cdf(1.0, mu, b) - laplace_cdf(0.0, mu, b)).ln()
}

/// Laplace log-density truncated and renormalized to the unit interval.
pub fn trunc01_laplace_logpdf(x: f64, mu: f64, b: f64) -> f64 {
    if !(0.0..1.0).contains(&x) {
        return f64::NEG_INFINITY;
    }
    laplace_logpdf(x, mu, b) - laplace_trunc01_ln_mass(mu, b)
}

/// d/dx of the truncated Laplace log-density; subgradient 0 at the center.
pub fn trunc01_laplace_dlogpdf(x: f64, mu: f64, b: f64) -> f64 {
    if x > mu {
        -1.0 / b
    } else if x < mu {
        1.0 / b
    } else {
        0.0
    }
}

/// Inverse-CDF draw from the Laplace truncated to (0, 1).
pub fn sample_trunc01_laplace<R: Rng + ?Sized>(rng: &mut R, mu: f64, b: f64) -> f64 {
    let lo = laplace_cdf(0.0, mu, b);
    let hi = laplace_cdf(1.0, mu, b);
    let u = lo + rng.random::<f64>() * (hi - lo);
    if u < 0.5 {
        mu + b * (2.0 * u).ln()
    } else {
        mu - b * (2.0 * (1.0 - u)).ln()
    }
}

pub fn beta_logpdf(x: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::NEG_INFINITY;
    }
    use statrs::function::gamma::ln_gamma;
    let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta
}

pub fn beta_dlogpdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) / x - (b - 1.0) / (1.0 - x)
}

/// Gamma(shape = 1, rate = 1) log-density, the prior used for residual
/// standard deviations in the Gaussian-likelihood variant.
pub fn gamma11_logpdf(x: f64) -> f64 {
    if x < 0.0 {
        f64::NEG_INFINITY
    } else {
        -x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Composite Simpson integration; the quadrature oracle for density
    /// checks is independent of the log-pdf gradient code above.
    pub(crate) fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 0 { n } else { n + 1 };
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn al_peak_value() {
        assert_abs_diff_eq!(
            al_logpdf(0.0, 0.0, 1.0, 0.5).unwrap(),
            0.25f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn al_symmetric_at_half() {
        for &x in &[0.3, 1.7, 4.2] {
            for &tau in &[0.5, 1.0, 2.5] {
                assert_abs_diff_eq!(
                    al_logpdf(x, 0.0, tau, 0.5).unwrap(),
                    al_logpdf(-x, 0.0, tau, 0.5).unwrap(),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn al_normalizes_and_splits_mass() {
        // Quadrature oracle at (mu, tau, nu) = (0, 1, 0.3): total mass 1 and
        // mass nu left of the location, both within 1e-6. Integrate the two
        // half-lines separately so the kink sits on a panel boundary.
        let f = |x: f64| al_logpdf_unchecked(x, 0.0, 1.0, 0.3).exp();
        let left = simpson(f, -200.0, 0.0, 200_000);
        let right = simpson(f, 0.0, 200.0, 200_000);
        assert_abs_diff_eq!(left + right, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(left, 0.3, epsilon = 1e-6);
    }

    #[test]
    fn al_domain_errors() {
        assert!(al_logpdf(0.0, 0.0, 0.0, 0.5).is_err());
        assert!(al_logpdf(0.0, 0.0, -1.0, 0.5).is_err());
        assert!(al_logpdf(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(al_logpdf(0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn al_sampler_mass_split() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let neg = (0..n)
            .filter(|_| sample_al(&mut rng, 1.3, 0.7) <= 0.0)
            .count() as f64;
        // P(X <= 0) = nu.
        assert_abs_diff_eq!(neg / n as f64, 0.7, epsilon = 0.01);
    }

    #[test]
    fn trunc_laplace_normalizes() {
        let f = |x: f64| trunc01_laplace_logpdf(x, 0.5, 0.05).exp();
        let mass = simpson(f, 0.0, 1.0, 100_000);
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn densities_match_statrs() {
        use statrs::distribution::{Beta, Continuous, Gamma, Laplace, Normal};
        let n = Normal::new(1.0, 2.5).unwrap();
        assert_abs_diff_eq!(normal_logpdf(0.3, 1.0, 2.5), n.ln_pdf(0.3), epsilon = 1e-12);
        let l = Laplace::new(0.5, 0.05).unwrap();
        assert_abs_diff_eq!(laplace_logpdf(0.42, 0.5, 0.05), l.ln_pdf(0.42), epsilon = 1e-12);
        let b = Beta::new(5.0, 5.0).unwrap();
        assert_abs_diff_eq!(beta_logpdf(0.31, 5.0, 5.0), b.ln_pdf(0.31), epsilon = 1e-12);
        let g = Gamma::new(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(gamma11_logpdf(0.8), g.ln_pdf(0.8), epsilon = 1e-12);
    }

    #[test]
    fn halfnormal_integrates_to_one() {
        let f = |x: f64| halfnormal_logpdf(x, 1.7).exp();
        assert_abs_diff_eq!(simpson(f, 0.0, 40.0, 40_000), 1.0, epsilon = 1e-9);
    }
}
