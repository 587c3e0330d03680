//! Student-t tail probabilities from first principles.
//!
//! The two-sided p-value uses the identity P(|T| > t) = I_x(ν/2, 1/2) with
//! x = ν/(ν + t²), where I is the regularized incomplete beta function,
//! evaluated by Lentz's continued fraction. Absolute error is well below
//! 1e-10 over the ranges exercised here.

/// ln Γ(z) for z > 0, Lanczos approximation (Numerical Recipes coefficients).
pub fn ln_gamma(z: f64) -> f64 {
    assert!(z > 0.0, "ln_gamma requires z > 0");
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut sum = 1.000000000190015;
    for (i, c) in COEF.iter().enumerate() {
        sum += c / (z + i as f64 + 1.0);
    }
    let tmp = z + 5.5;
    (z + 0.5) * tmp.ln() - tmp + (2.5066282746310005 * sum / z).ln()
}

/// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "inc_beta shape parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // The continued fraction converges fastest for x < (a+1)/(a+b+2);
    // use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - inc_beta(1.0 - x, b, a);
    }

    let ln_front = a * x.ln() + b * (1.0 - x).ln() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b));
    let front = ln_front.exp();

    const TINY: f64 = 1e-30;
    const EPS: f64 = 1e-15;
    let mut c = 1.0;
    let mut d = 0.0;
    let mut f = 1.0;

    let step = |num: f64, c: &mut f64, d: &mut f64| -> f64 {
        *d = 1.0 + num * *d;
        if d.abs() < TINY {
            *d = TINY;
        }
        *d = 1.0 / *d;
        *c = 1.0 + num / *c;
        if c.abs() < TINY {
            *c = TINY;
        }
        *c * *d
    };

    for m in 0..300 {
        let mf = m as f64;
        let odd = -(a + mf) * (a + b + mf) * x / ((a + 2.0 * mf) * (a + 2.0 * mf + 1.0));
        let delta = step(odd, &mut c, &mut d);
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
        let even = (mf + 1.0) * (b - mf - 1.0) * x / ((a + 2.0 * mf + 1.0) * (a + 2.0 * mf + 2.0));
        let delta = step(even, &mut c, &mut d);
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }

    front / (f * a)
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    inc_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-12);
        assert!((ln_gamma(2.0)).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24.0_f64.ln()).abs() < 1e-10); // Γ(5) = 24
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-10);
    }

    #[test]
    fn inc_beta_boundaries() {
        assert_eq!(inc_beta(0.0, 2.0, 3.0), 0.0);
        assert_eq!(inc_beta(1.0, 2.0, 3.0), 1.0);
    }

    #[test]
    fn inc_beta_symmetric_at_half() {
        // I_{0.5}(a, a) = 0.5 for any a
        for a in [0.5, 1.0, 2.5, 7.0] {
            assert!((inc_beta(0.5, a, a) - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn inc_beta_uniform_case_is_identity() {
        // I_x(1, 1) = x
        for x in [0.1, 0.37, 0.5, 0.93] {
            assert!((inc_beta(x, 1.0, 1.0) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn t_tail_known_quantiles() {
        // t with 1 df is Cauchy: P(|T| > 1) = 0.5
        assert!((student_t_two_sided_p(1.0, 1.0) - 0.5).abs() < 1e-10);
        // classic table value: t_{0.975, 8} = 2.306004
        let p = student_t_two_sided_p(2.306004, 8.0);
        assert!((p - 0.05).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn t_tail_edge_cases() {
        assert_eq!(student_t_two_sided_p(0.0, 5.0), 1.0);
        assert_eq!(student_t_two_sided_p(f64::INFINITY, 5.0), 0.0);
        let p_small = student_t_two_sided_p(50.0, 5.0);
        assert!(p_small > 0.0 && p_small < 1e-6);
    }
}
