//! Bessel functions of the first kind, integer order.
//!
//! Small and moderate arguments use Miller's backward recurrence normalised with
//! `J0 + 2 Σ J2k = 1`; large arguments use the Hankel asymptotic expansion.

use std::f64::consts::{FRAC_PI_4, PI};

/// Above this magnitude `j0`/`j1` switch to the asymptotic expansion.
const ASYMPTOTIC_THRESHOLD: f64 = 25.0;

/// `J0(x)`.
pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= ASYMPTOTIC_THRESHOLD {
        hankel(0, ax)
    } else {
        jn_all(0, x)[0]
    }
}

/// `J1(x)`.
pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= ASYMPTOTIC_THRESHOLD {
        x.signum() * hankel(1, ax)
    } else {
        jn_all(1, x)[1]
    }
}

/// `Jn(x)` for a single order.
pub fn jn(n: usize, x: f64) -> f64 {
    match n {
        0 => j0(x),
        1 => j1(x),
        _ => jn_all(n, x)[n],
    }
}

/// `1 - J0(x)` without cancellation for small `x`.
pub fn one_minus_j0(x: f64) -> f64 {
    if x.abs() < 1.0 {
        // -sum_{k>=1} (-x^2/4)^k / (k!)^2
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 1..40 {
            term *= q / (k as f64 * k as f64);
            acc -= term;
            if term.abs() < 1e-18 * acc.abs() {
                break;
            }
        }
        acc
    } else {
        1.0 - j0(x)
    }
}

/// `[J0(x), J1(x), ..., J_nmax(x)]` by backward recurrence.
pub fn jn_all(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = (nmax as f64).max(ax);
    let mut start = (top + (160.0 * top).sqrt() + 16.0) as usize;
    start += start % 2;

    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let two_over_x = 2.0 / ax;
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        if k - 1 <= nmax {
            out[k - 1] = cur;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += cur;
    let scale = 1.0 / norm;
    for (n, v) in out.iter_mut().enumerate() {
        *v *= scale;
        if x < 0.0 && n % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// Hankel expansion of `J_nu(x)` for large positive `x`.
fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu as f64).powi(2);
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (nu as f64 * 0.5) * PI - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    // (x, J0, J1, J2, J7) from an external reference implementation.
    const TABLE: &[(f64, f64, f64, f64, f64)] = &[
        (0.0, 1.0, 0.0, 0.0, 0.0),
        (0.1, 0.9975015620660401, 0.049937526036242005, 0.0012489586587999192, 1.5496148676202277e-13),
        (1.0, 0.7651976865579666, 0.44005058574493355, 0.1149034849319005, 1.5023258174368098e-06),
        (5.0, -0.17759677131433835, -0.3275791375914652, 0.04656511627775229, 0.05337641015589071),
        (7.9, 0.19436184484127808, 0.2191793999217514, -0.1388733891648853, 0.31448237452220695),
        (8.1, 0.14751745404437772, 0.24760776698159281, -0.08637973380200914, 0.32587328856099895),
        (10.0, -0.24593576445134832, 0.0434727461688616, 0.2546303136851206, 0.21671091768505166),
        (20.0, 0.16702466434058322, 0.06683312417584993, -0.16034135192299823, -0.18422139772059445),
        (24.9, 0.08324596835301551, -0.13485569953140886, -0.09407775144790778, 0.005471314245286772),
        (25.1, 0.10827567149994946, -0.11463478413442257, -0.11740991724771221, -0.025651750125300826),
        (40.0, 0.0073668905842372906, 0.12603831803758497, -0.0010649746823580396, -0.10802343173577945),
        (100.0, 0.01998585030422312, -0.07714535201411214, -0.02152875734450536, 0.07017269098721271),
        (1000.0, 0.024786686152420172, 0.004728311907089523, -0.02477722952860599, -0.0053217830764436145),
    ];

    #[test]
    fn matches_reference_table() {
        for &(x, r0, r1, r2, r7) in TABLE {
            assert!((j0(x) - r0).abs() < 1e-13, "J0({x})");
            assert!((j1(x) - r1).abs() < 1e-13, "J1({x})");
            assert!((jn(2, x) - r2).abs() < 1e-13, "J2({x})");
            assert!((jn(7, x) - r7).abs() < 1e-13, "J7({x})");
        }
    }

    #[test]
    fn first_zero_of_j0() {
        assert!(j0(2.404825557695773).abs() < 1e-15);
    }

    #[test]
    fn parity_for_negative_arguments() {
        for &x in &[0.3, 4.0, 13.0, 30.0] {
            assert_eq!(j0(-x), j0(x));
            assert_eq!(j1(-x), -j1(x));
            let a = jn_all(5, x);
            let b = jn_all(5, -x);
            for n in 0..=5 {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((b[n] - sign * a[n]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn one_minus_j0_is_smooth_across_branch() {
        for &x in &[1e-8, 1e-4, 0.5, 0.999, 1.001, 3.0] {
            let direct = 1.0 - j0(x);
            let careful = one_minus_j0(x);
            if x > 0.1 {
                assert!((direct - careful).abs() < 1e-14);
            } else {
                assert!((careful / (x * x / 4.0) - 1.0).abs() < x * x);
            }
        }
    }
}
