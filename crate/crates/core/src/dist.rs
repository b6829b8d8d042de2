//! Normal and chi-square quantile functions used as ground truth.

use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Standard normal inverse CDF.
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

pub fn chi_square_cdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(0.5 * dof, 0.5 * x)
    }
}

pub fn chi_square_pdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * dof;
    ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

const CDF_TOL: f64 = 1e-12;

/// Inverts the chi-square CDF by safeguarded Newton iteration: Newton steps
/// from a Wilson-Hilferty start, falling back to bisection whenever a step
/// leaves the current bracket.
pub fn chi_square_quantile(p: f64, dof: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0 && dof > 0.0);
    let mut lo = 0.0_f64;
    let mut hi = dof.max(1.0);
    while chi_square_cdf(hi, dof) < p {
        lo = hi;
        hi *= 2.0;
    }
    let h = 2.0 / (9.0 * dof);
    let wh = dof * (1.0 - h + normal_quantile(p) * h.sqrt()).powi(3);
    let mut x = if wh > lo && wh < hi { wh } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let err = chi_square_cdf(x, dof) - p;
        if err.abs() < CDF_TOL {
            return x;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = chi_square_pdf(x, dof);
        let newton = x - err / pdf;
        x = if pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integral of `f` over `[a, b]`.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn std_normal_pdf(z: f64) -> f64 {
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn normal_quantile_against_quadrature() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.8) - 0.8416).abs() < 1e-4);
        for &p in &[0.05, 0.2, 0.5, 0.7, 0.8, 0.95, 0.999] {
            let z = normal_quantile(p);
            // CDF(z) = 0.5 + integral_0^z pdf
            let cdf = 0.5 + simpson(std_normal_pdf, 0.0, z, 20_000);
            assert!((cdf - p).abs() < 1e-11, "p={p}: cdf={cdf}");
            assert!((normal_quantile(1.0 - p) + z).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_square_cdf_against_quadrature() {
        // dof 8 has a smooth density vanishing at 0, so Simpson is accurate.
        for &x in &[0.5, 2.0, 7.3, 15.0] {
            let quad = simpson(|t| chi_square_pdf(t, 8.0), 0.0, x, 20_000);
            assert!((quad - chi_square_cdf(x, 8.0)).abs() < 1e-10, "x={x}");
        }
        // dof 2: CDF = 1 - exp(-x/2)
        for &x in &[0.1, 1.0, 4.0] {
            assert!((chi_square_cdf(x, 2.0) - (1.0 - (-0.5 * x).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn chi_square_quantile_inverts_cdf() {
        for &dof in &[4.0, 6.0, 8.0, 2.5, 7.9] {
            let mut prev = 0.0;
            for i in 1..20 {
                let p = 0.05 * i as f64;
                let v = chi_square_quantile(p, dof);
                assert!((chi_square_cdf(v, dof) - p).abs() < 1e-10, "dof={dof}, p={p}");
                assert!(v > prev);
                prev = v;
            }
        }
        // exact: median of chi2(2) is 2 ln 2
        assert!((chi_square_quantile(0.5, 2.0) - 2.0 * std::f64::consts::LN_2).abs() < 1e-10);
    }
}
