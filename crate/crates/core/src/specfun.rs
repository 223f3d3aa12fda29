//! Bessel, Hankel and modified Bessel functions used by the waveguide kernels.
//!
//! Three regimes are used for the order-0/1 pair `(J, Y)`:
//! the ascending power series for `x <= 8`, Neumann sums over a Miller
//! (downward recurrence) sequence for `8 < x < 20`, and the Hankel
//! asymptotic expansion for `x >= 20`. Integer-order `J_q` sequences use the
//! ascending series below `x = 1` and Miller's algorithm otherwise,
//! normalised by `J_0 + 2 sum J_2k = 1`.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};

/// Largest supported integer order for [`bessel_j`] and [`bessel_j_sequence`].
pub const MAX_ORDER: u32 = 512;

pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SEQUENCE_SERIES_LIMIT: f64 = 1.0;
const PAIR_SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 20.0;
const K0_SERIES_LIMIT: f64 = 2.0;
const RESCALE_ABOVE: f64 = 1e200;

fn check_argument(x: f64, name: &str) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{name}: argument must be finite and non-negative, got {x}"
        )));
    }
    Ok(())
}

/// Bessel function of the first kind `J_q(x)` for integer order `q`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "bessel_j: order {order} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    check_argument(x, "bessel_j")?;
    if order <= 1 && x >= ASYMPTOTIC_LIMIT {
        return Ok(hankel_asymptotic(order, x).0);
    }
    Ok(bessel_j_sequence(order, x)?[order as usize])
}

/// `[J_0(x), J_1(x), ..., J_max_order(x)]`.
pub fn bessel_j_sequence(max_order: u32, x: f64) -> Result<Vec<f64>> {
    if max_order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "bessel_j_sequence: order {max_order} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    check_argument(x, "bessel_j_sequence")?;
    let n = max_order as usize;
    if x == 0.0 {
        let mut out = vec![0.0; n + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    if x < SEQUENCE_SERIES_LIMIT {
        Ok(ascending_series_sequence(n, x))
    } else {
        Ok(miller_sequence(n, x))
    }
}

fn ascending_series_sequence(n: usize, x: f64) -> Vec<f64> {
    let half = 0.5 * x;
    let neg_quarter_sq = -half * half;
    let mut out = Vec::with_capacity(n + 1);
    // (x/2)^q / q!
    let mut lead = 1.0;
    for q in 0..=n {
        if q > 0 {
            lead *= half / q as f64;
        }
        let mut term = lead;
        let mut sum = lead;
        let mut m = 1.0;
        while term != 0.0 {
            term *= neg_quarter_sq / (m * (q as f64 + m));
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            m += 1.0;
        }
        out.push(sum);
    }
    out
}

fn miller_start(n: usize, x: f64) -> usize {
    let top = (n as f64).max(x);
    let start = (top + 30.0 + (160.0 * top).sqrt()).ceil() as usize;
    start + start % 2
}

fn miller_sequence(n: usize, x: f64) -> Vec<f64> {
    let start = miller_start(n, x);
    let mut out = vec![0.0; n + 1];
    let two_over_x = 2.0 / x;
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut even_sum = if start.is_multiple_of(2) { cur } else { 0.0 };
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx <= n {
            out[idx] = cur;
        }
        if idx > 0 && idx % 2 == 0 {
            even_sum += cur;
        }
        if cur.abs() > RESCALE_ABOVE {
            let s = 1.0 / RESCALE_ABOVE;
            cur *= s;
            next *= s;
            even_sum *= s;
            for v in out.iter_mut().skip(idx) {
                *v *= s;
            }
        }
    }
    let norm = cur + 2.0 * even_sum;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Leading terms of the Hankel expansion for order `nu` in {0, 1}: returns `(J_nu, Y_nu)`.
fn hankel_asymptotic(nu: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..200u32 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * k as f64 * x);
        let mag = term.abs();
        if mag > last {
            break;
        }
        last = mag;
        // signs: a_1 - a_3 + ... for Q, a_0 - a_2 + a_4 ... for P
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if mag < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu as f64 + 0.25) * PI;
    let amp = (FRAC_2_PI / x).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// `(J_0(x), Y_0(x), J_1(x), Y_1(x))` for `x > 0`.
pub fn bessel_jy01(x: f64) -> Result<(f64, f64, f64, f64)> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "bessel_jy01: argument must be positive, got {x}"
        )));
    }
    if x >= ASYMPTOTIC_LIMIT {
        let (j0, y0) = hankel_asymptotic(0, x);
        let (j1, y1) = hankel_asymptotic(1, x);
        return Ok((j0, y0, j1, y1));
    }
    if x <= PAIR_SERIES_LIMIT {
        return Ok(jy01_series(x));
    }
    Ok(jy01_neumann(x))
}

fn jy01_series(x: f64) -> (f64, f64, f64, f64) {
    let t = 0.25 * x * x;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    // J0 and the harmonic-weighted Y0 remainder
    let mut j0 = 1.0;
    let mut y0_rem = 0.0;
    // J1 / (x/2) and the Y1 remainder (with H_m + H_{m+1} weights)
    let mut j1_core = 1.0;
    let mut y1_rem = 1.0; // m = 0 term: H_0 + H_1 = 1
    let mut term0 = 1.0; // (-t)^m / (m!)^2
    let mut term1 = 1.0; // (-t)^m / (m! (m+1)!)
    let mut harmonic = 0.0;
    let mut m = 1.0;
    loop {
        term0 *= -t / (m * m);
        term1 *= -t / (m * (m + 1.0));
        harmonic += 1.0 / m;
        let harmonic_next = harmonic + 1.0 / (m + 1.0);
        j0 += term0;
        y0_rem -= harmonic * term0;
        j1_core += term1;
        y1_rem += (harmonic + harmonic_next) * term1;
        if term0.abs() * (1.0 + harmonic) < 1e-18 && term1.abs() * (1.0 + harmonic_next) < 1e-18 {
            break;
        }
        m += 1.0;
    }
    let j1 = 0.5 * x * j1_core;
    let y0 = FRAC_2_PI * (log_term * j0 + y0_rem);
    let y1 = -FRAC_2_PI / x + FRAC_2_PI * (0.5 * x).ln() * j1
        - 0.5 * x / PI * (y1_rem - 2.0 * EULER_GAMMA * j1_core);
    (j0, y0, j1, y1)
}

fn jy01_neumann(x: f64) -> (f64, f64, f64, f64) {
    let n = miller_start(0, x);
    let seq = miller_sequence(n, x);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut y0_sum = 0.0;
    let mut y1_sum = 0.0;
    let mut k = 1;
    while 2 * k < n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        y0_sum += sign * seq[2 * k] / k as f64;
        y1_sum += sign * (seq[2 * k - 1] - seq[2 * k + 1]) / k as f64;
        k += 1;
    }
    let (j0, j1) = (seq[0], seq[1]);
    let y0 = FRAC_2_PI * log_term * j0 - 2.0 * FRAC_2_PI * y0_sum;
    let y1 = FRAC_2_PI * log_term * j1 - FRAC_2_PI * j0 / x + FRAC_2_PI * y1_sum;
    (j0, y0, j1, y1)
}

/// Bessel function of the second kind `Y_0(x)`, `x > 0`.
pub fn bessel_y0(x: f64) -> Result<f64> {
    bessel_jy01(x).map(|(_, y0, _, _)| y0)
}

/// Hankel function `H_0^(1)(x) = J_0(x) + i Y_0(x)` for real `x > 0`.
pub fn hankel1_0(x: f64) -> Result<Complex64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "hankel1_0: argument must be positive (branch point at 0), got {x}"
        )));
    }
    let (j0, y0) = if x >= ASYMPTOTIC_LIMIT {
        hankel_asymptotic(0, x)
    } else if x <= PAIR_SERIES_LIMIT {
        let (j0, y0, _, _) = jy01_series(x);
        (j0, y0)
    } else {
        let (j0, y0, _, _) = jy01_neumann(x);
        (j0, y0)
    };
    Ok(Complex64::new(j0, y0))
}

/// Modified Bessel function `K_0(t)`, `t > 0`.
pub fn bessel_k0(t: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "bessel_k0: argument must be positive, got {t}"
        )));
    }
    if t <= K0_SERIES_LIMIT {
        Ok(k0_series(t))
    } else {
        Ok(k0_continued_fraction(t))
    }
}

fn k0_series(t: f64) -> f64 {
    let q = 0.25 * t * t;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut rem = 0.0;
    let mut harmonic = 0.0;
    let mut m = 1.0;
    loop {
        term *= q / (m * m);
        harmonic += 1.0 / m;
        i0 += term;
        rem += harmonic * term;
        if term * (1.0 + harmonic) < 1e-18 * (i0 + rem) {
            break;
        }
        m += 1.0;
    }
    -((0.5 * t).ln() + EULER_GAMMA) * i0 + rem
}

// Steed's continued fraction (Temme's CF2) for order zero.
fn k0_continued_fraction(t: f64) -> f64 {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + t);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let _ = h;
    (PI / (2.0 * t)).sqrt() * (-t).exp() / s
}

/// `H_0^(1)(i t) = (2 / (i pi)) K_0(t)` for `t > 0`: the evanescent continuation.
pub fn hankel1_0_imag(t: f64) -> Result<Complex64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "hankel1_0_imag: argument must be positive, got {t}"
        )));
    }
    Ok(Complex64::new(0.0, -FRAC_2_PI * bessel_k0(t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent J0 power series evaluated with compensated summation.
    fn j0_reference(x: f64) -> f64 {
        let t = -0.25 * x * x;
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        let mut comp = 0.0_f64;
        for m in 1..200 {
            term *= t / ((m * m) as f64);
            let y = term - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
        sum
    }

    /// K0(t) = int_0^inf exp(-t cosh s) ds by the trapezoidal rule.
    fn k0_quadrature(t: f64) -> f64 {
        let h = 1.0 / 64.0;
        let mut total = 0.5;
        let mut k = 1;
        loop {
            let s = k as f64 * h;
            let v = (-t * s.cosh() + t).exp();
            total += v;
            if v < 1e-20 {
                break;
            }
            k += 1;
        }
        total * h * (-t).exp()
    }

    #[test]
    fn j_at_origin() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn first_zero_of_j0() {
        // bisection on the reference series locates the zero independently
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j0_reference(lo) * j0_reference(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let zero = 0.5 * (lo + hi);
        assert!((zero - 2.404825557695773).abs() < 1e-12);
        assert!(bessel_j(0, 2.404825557695773).unwrap().abs() <= 1e-12);
        assert!(bessel_j(0, zero).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn j_matches_reference_series() {
        for &x in &[0.1, 0.7, 1.0, 3.3, 7.9, 12.5] {
            let seq = bessel_j_sequence(5, x).unwrap();
            assert!((seq[0] - j0_reference(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_j(MAX_ORDER + 1, 1.0).is_err());
        assert!(hankel1_0(0.0).is_err());
        assert!(hankel1_0(-2.0).is_err());
        assert!(hankel1_0_imag(0.0).is_err());
        assert!(bessel_k0(-1.0).is_err());
    }

    #[test]
    fn hankel_at_one() {
        let h = hankel1_0(1.0).unwrap();
        assert!((h.re - 0.765_197_686_557_966_6).abs() < 1e-12);
        assert!((h.im - 0.088_256_964_215_676_96).abs() < 1e-12);
    }

    #[test]
    fn wronskian() {
        for &x in &[0.5, 5.0, 50.0, 9.3, 19.99, 20.01, 1e3, 1e5] {
            let (j0, y0, j1, y1) = bessel_jy01(x).unwrap();
            // J0 Y0' - J0' Y0 with J0' = -J1, Y0' = -Y1
            let w = -j0 * y1 + j1 * y0;
            assert!((w - 2.0 / (PI * x)).abs() < 1e-10, "x={x}: {w}");
        }
    }

    #[test]
    fn regimes_agree_at_boundaries() {
        for &x in &[PAIR_SERIES_LIMIT, ASYMPTOTIC_LIMIT] {
            let a = jy01_neumann(x);
            let b = if x == PAIR_SERIES_LIMIT {
                jy01_series(x)
            } else {
                let (j0, y0) = hankel_asymptotic(0, x);
                let (j1, y1) = hankel_asymptotic(1, x);
                (j0, y0, j1, y1)
            };
            assert!((a.0 - b.0).abs() < 1e-13);
            assert!((a.1 - b.1).abs() < 1e-13);
            assert!((a.2 - b.2).abs() < 1e-13);
            assert!((a.3 - b.3).abs() < 1e-13);
        }
    }

    #[test]
    fn hankel_large_argument() {
        let x = 100.0;
        let h = hankel1_0(x).unwrap();
        let lead = Complex64::from_polar((2.0 / (PI * x)).sqrt(), x - PI / 4.0);
        assert!((h - lead).norm() / lead.norm() < 0.01);
    }

    #[test]
    fn k0_against_quadrature() {
        for &t in &[0.05, 0.5, 1.0, 1.999, 2.001, 3.0, 7.5, 20.0, 60.0] {
            let k = bessel_k0(t).unwrap();
            let r = k0_quadrature(t);
            assert!((k - r).abs() <= 1e-12 * r.max(1e-300) + 1e-15, "t={t}: {k} vs {r}");
        }
        let k1 = k0_quadrature(1.0);
        assert!((k1 - 0.42102).abs() < 1e-5);
        let h = hankel1_0_imag(1.0).unwrap();
        assert!(h.re == 0.0);
        assert!((h.im + 2.0 / PI * k1).abs() < 1e-12);
        assert!((h.im + 0.2680).abs() < 1e-4);
    }

    #[test]
    fn evanescent_hankel_decays() {
        let a = hankel1_0_imag(1.0).unwrap().norm();
        let b = hankel1_0_imag(2.0).unwrap().norm();
        assert!(b < a);
        let mut prev = f64::INFINITY;
        for i in 1..400 {
            let t = 0.01 * (1.05f64).powi(i);
            let h = hankel1_0_imag(t).unwrap();
            assert!((h.arg() + PI / 2.0).abs() < 1e-15 || h.norm() == 0.0);
            assert!(h.norm() <= prev);
            prev = h.norm();
        }
    }

    #[test]
    fn three_term_recurrence() {
        for i in 0..60 {
            let x = 0.5 * (200.0f64).powf(i as f64 / 59.0);
            let seq = bessel_j_sequence(51, x).unwrap();
            for q in 1..=50 {
                let lhs = seq[q - 1] + seq[q + 1];
                let rhs = 2.0 * q as f64 / x * seq[q];
                let scale = lhs.abs().max(rhs.abs()).max(seq[q - 1].abs()).max(seq[q + 1].abs());
                assert!((lhs - rhs).abs() <= 1e-9 * scale, "x={x} q={q}");
            }
        }
    }

    #[test]
    fn single_order_matches_sequence() {
        for &x in &[0.3, 4.0, 25.0, 300.0, 999.0] {
            let seq = bessel_j_sequence(130, x).unwrap();
            for &q in &[0u32, 1, 2, 17, 120] {
                let v = bessel_j(q, x).unwrap();
                assert!((v - seq[q as usize]).abs() < 1e-12, "x={x} q={q}");
            }
        }
    }

    #[test]
    fn neumann_addition_sum() {
        for &x in &[0.01, 0.9, 1.0, 3.0, 11.0, 20.0] {
            let seq = bessel_j_sequence(150, x).unwrap();
            let s: f64 = seq
                .iter()
                .enumerate()
                .map(|(q, j)| if q == 0 { j * j } else { 2.0 * j * j })
                .sum();
            assert!((s - 1.0).abs() < 1e-10, "x={x}: {s}");
        }
    }

    proptest! {
        #[test]
        fn outputs_finite(exp in -6.0f64..5.0, order in 0u32..200) {
            let x = 10f64.powf(exp);
            prop_assert!(bessel_j(order, x.min(1e3)).unwrap().is_finite());
            prop_assert!(hankel1_0(x).unwrap().re.is_finite());
            prop_assert!(hankel1_0(x).unwrap().im.is_finite());
            prop_assert!(hankel1_0_imag(x).unwrap().im.is_finite());
        }
    }
}
