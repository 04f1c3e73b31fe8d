//! Two-sample tests on per-trial outcomes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("group `{group}` has {n} observations; at least 2 are needed")]
    TooFewObservations { group: char, n: usize },
    #[error("both groups have zero variance; the t statistic is undefined")]
    ZeroVariance,
    #[error("non-finite observation in group `{0}`")]
    NonFinite(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub degrees_of_freedom: f64,
    pub p_two_sided: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTestResult {
    pub z: f64,
    pub p_two_sided: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub n_a: usize,
    pub n_b: usize,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

fn check(xs: &[f64], group: char) -> Result<(), StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFewObservations { group, n: xs.len() });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite(group));
    }
    Ok(())
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of
/// freedom. One zero-variance group is fine; two are an error.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    check(a, 'a')?;
    check(b, 'b')?;
    let (mean_a, var_a) = mean_var(a);
    let (mean_b, var_b) = mean_var(b);
    let (n_a, n_b) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (var_a / n_a, var_b / n_b);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let t = (mean_a - mean_b) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (n_a - 1.0) + sb * sb / (n_b - 1.0));
    Ok(TTestResult {
        t,
        degrees_of_freedom: df,
        p_two_sided: student_t_two_sided(t, df),
        mean_a,
        mean_b,
        n_a: a.len(),
        n_b: b.len(),
    })
}

/// Welch's test on success/failure outcomes coded as 1/0.
pub fn welch_t_test_outcomes(a: &[bool], b: &[bool]) -> Result<TTestResult, StatsError> {
    let code = |xs: &[bool]| xs.iter().map(|&x| f64::from(u8::from(x))).collect::<Vec<_>>();
    welch_t_test(&code(a), &code(b))
}

/// Pooled two-proportion z-test.
pub fn two_proportion_z_test(successes_a: usize, n_a: usize, successes_b: usize, n_b: usize) -> Result<ZTestResult, StatsError> {
    if n_a < 2 {
        return Err(StatsError::TooFewObservations { group: 'a', n: n_a });
    }
    if n_b < 2 {
        return Err(StatsError::TooFewObservations { group: 'b', n: n_b });
    }
    let rate_a = successes_a as f64 / n_a as f64;
    let rate_b = successes_b as f64 / n_b as f64;
    let pooled = (successes_a + successes_b) as f64 / (n_a + n_b) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n_a as f64 + 1.0 / n_b as f64)).sqrt();
    if se == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let z = (rate_a - rate_b) / se;
    Ok(ZTestResult {
        z,
        p_two_sided: statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2),
        rate_a,
        rate_b,
        n_a,
        n_b,
    })
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// I_x(a, b), evaluated by Lentz's continued fraction on whichever side of
/// the mean converges fastest.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 10_000;
    const TOL: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < TOL {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn outcomes(successes: usize, n: usize) -> Vec<bool> {
        (0..n).map(|i| i < successes).collect()
    }

    /// Independent route: textbook formulas, with statrs supplying the t CDF.
    fn reference(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
        let m = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let v = |xs: &[f64]| {
            let mu = m(xs);
            xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64
        };
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let se = (v(a) / na + v(b) / nb).sqrt();
        let t = (m(a) - m(b)) / se;
        let df = (v(a) / na + v(b) / nb).powi(2) / ((v(a) / na).powi(2) / (na - 1.0) + (v(b) / nb).powi(2) / (nb - 1.0));
        let p = 2.0 * StudentsT::new(0.0, 1.0, df).unwrap().sf(t.abs());
        (t, df, p)
    }

    #[test]
    fn matches_scipy_on_frozen_examples() {
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        let r = welch_t_test_outcomes(&outcomes(48, 50), &outcomes(30, 50)).unwrap();
        assert!((r.t - 4.776_017_674_547_091_5).abs() < 1e-9);
        assert!((r.degrees_of_freedom - 64.288_611_544_461_76).abs() < 1e-9);
        assert!((r.p_two_sided - 1.074_244_084_829_414_7e-5).abs() < 1e-12);
        let r = welch_t_test_outcomes(&outcomes(9, 10), &outcomes(3, 10)).unwrap();
        assert!((r.t - 3.286_335_345_030_997_3).abs() < 1e-9);
        assert!((r.p_two_sided - 0.004_811_028_180_854_967_5).abs() < 1e-9);
    }

    #[test]
    fn matches_reference_on_random_bernoulli_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 1000 {
            let na = rng.random_range(2..80);
            let nb = rng.random_range(2..80);
            let (pa, pb): (f64, f64) = (rng.random(), rng.random());
            let a: Vec<f64> = (0..na).map(|_| f64::from(u8::from(rng.random_bool(pa)))).collect();
            let b: Vec<f64> = (0..nb).map(|_| f64::from(u8::from(rng.random_bool(pb)))).collect();
            let ours = match welch_t_test(&a, &b) {
                Ok(r) => r,
                Err(StatsError::ZeroVariance) => continue,
                Err(e) => panic!("{e}"),
            };
            let (t, df, p) = reference(&a, &b);
            if t.is_infinite() {
                continue;
            }
            assert!((ours.t - t).abs() <= 1e-9 * t.abs().max(1.0), "{} vs {t}", ours.t);
            assert!((ours.degrees_of_freedom - df).abs() <= 1e-9 * df.max(1.0));
            assert!((ours.p_two_sided - p).abs() <= 1e-6, "{} vs {p}", ours.p_two_sided);
            checked += 1;
        }
    }

    #[test]
    fn identical_groups_and_symmetry() {
        let a = outcomes(30, 50);
        let r = welch_t_test_outcomes(&a, &a).unwrap();
        assert_eq!((r.t, r.p_two_sided), (0.0, 1.0));
        let ab = welch_t_test_outcomes(&outcomes(48, 50), &outcomes(30, 50)).unwrap();
        let ba = welch_t_test_outcomes(&outcomes(30, 50), &outcomes(48, 50)).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.p_two_sided, ba.p_two_sided);
        assert!(ab.t > 0.0 && ab.mean_a > ab.mean_b);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            welch_t_test_outcomes(&outcomes(5, 5), &outcomes(0, 5)),
            Err(StatsError::ZeroVariance)
        );
        assert!(welch_t_test_outcomes(&outcomes(5, 5), &outcomes(2, 5)).is_ok());
        assert_eq!(
            welch_t_test(&[1.0], &[0.0, 1.0]),
            Err(StatsError::TooFewObservations { group: 'a', n: 1 })
        );
    }

    #[test]
    fn incomplete_beta_and_gamma_against_statrs() {
        for &(x, a, b) in &[(0.3, 2.0, 3.0), (0.9, 0.5, 0.5), (0.01, 30.0, 0.5), (0.99, 1.5, 40.0)] {
            let want = statrs::function::beta::beta_reg(a, b, x);
            assert!((regularized_incomplete_beta(x, a, b) - want).abs() < 1e-12, "{x} {a} {b}");
        }
        for x in [0.1, 0.5, 1.0, 3.7, 25.0, 171.0] {
            assert!((ln_gamma(x) - statrs::function::gamma::ln_gamma(x)).abs() < 1e-10 * ln_gamma(x).abs().max(1.0));
        }
    }

    #[test]
    fn z_test() {
        let r = two_proportion_z_test(48, 50, 30, 50).unwrap();
        let pooled: f64 = 78.0 / 100.0;
        let z = (0.96 - 0.6) / (pooled * (1.0 - pooled) * 0.04).sqrt();
        assert!((r.z - z).abs() < 1e-12);
        assert!(r.p_two_sided < 1e-4);
        assert_eq!(two_proportion_z_test(5, 5, 5, 5), Err(StatsError::ZeroVariance));
    }
}
