//! Special functions and one-dimensional quadrature shared by the analytic
//! formulas: generalized factorial coefficients in signed-log form, Bell and
//! Stirling numbers, rising factorials, and adaptive Gauss-Kronrod quadrature
//! on the half line.

use crate::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// A real number stored as `sign * exp(log_magnitude)`.
///
/// Needed for the generalized factorial coefficients C(n, k; a), which
/// alternate in sign and overflow doubles near n = 170.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogReal {
    pub log_magnitude: f64,
    pub sign: i8,
}

impl SignedLogReal {
    pub const ZERO: SignedLogReal = SignedLogReal {
        log_magnitude: f64::NEG_INFINITY,
        sign: 0,
    };

    pub fn new(log_magnitude: f64, sign: i8) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                log_magnitude,
                sign: sign.signum(),
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self {
                log_magnitude: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        self.sign as f64 * self.log_magnitude.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self::new(
            self.log_magnitude + other.log_magnitude,
            self.sign * other.sign,
        )
    }

    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.log_magnitude >= other.log_magnitude {
            (self, other)
        } else {
            (other, self)
        };
        let d = small.log_magnitude - big.log_magnitude;
        if big.sign == small.sign {
            Self::new(big.log_magnitude + d.exp().ln_1p(), big.sign)
        } else {
            // Cancellation path: |big| - |small|, sign of the larger.
            let diff = (-d.exp()).ln_1p();
            if diff == f64::NEG_INFINITY || d == 0.0 {
                Self::ZERO
            } else {
                Self::new(big.log_magnitude + diff, big.sign)
            }
        }
    }
}

/// Central generalized factorial coefficient C(n, k; alpha) computed by the
/// triangular recursion
/// `C(n,k;a) = a C(n-1,k-1;a) + (k a - n + 1) C(n-1,k;a)`
/// with `C(0,0;a) = 1`, `C(n,0;a) = 0` for n > 0 and `C(n,k;a) = 0` for
/// k > n, carried row by row in signed-log arithmetic.
pub fn gfc(n: usize, k: usize, alpha: f64) -> Result<SignedLogReal> {
    const N_MAX: usize = 10_000;
    if n > N_MAX {
        return Err(Error::InvalidParameter(format!(
            "gfc: n = {n} exceeds the supported maximum {N_MAX}"
        )));
    }
    if k > n {
        return Ok(SignedLogReal::ZERO);
    }
    if n == 0 {
        return Ok(SignedLogReal::from_f64(1.0));
    }
    if k == 0 {
        return Ok(SignedLogReal::ZERO);
    }
    let a = SignedLogReal::from_f64(alpha);
    let kmax = k;
    let mut prev = vec![SignedLogReal::ZERO; kmax + 1];
    prev[0] = SignedLogReal::from_f64(1.0); // row n = 0
    for row in 1..=n {
        let mut cur = vec![SignedLogReal::ZERO; kmax + 1];
        let hi = kmax.min(row);
        for j in 1..=hi {
            let carry = a.mul(prev[j - 1]);
            let stay =
                SignedLogReal::from_f64(j as f64 * alpha - row as f64 + 1.0).mul(prev[j]);
            cur[j] = carry.add(stay);
        }
        prev = cur;
    }
    Ok(prev[k])
}

/// Bell number B_k via the Bell triangle. `k <= 25` keeps the result inside
/// u128 with a wide margin.
pub fn bell(k: usize) -> Result<u128> {
    if k > 25 {
        return Err(Error::InvalidParameter(format!(
            "bell: k = {k} exceeds the supported maximum 25"
        )));
    }
    if k == 0 {
        return Ok(1);
    }
    let mut row: Vec<u128> = vec![1];
    for _ in 1..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    Ok(*row.last().unwrap())
}

/// Stirling numbers of the second kind S(k, j) for j = 0..=k.
pub fn stirling2_row(k: usize) -> Vec<f64> {
    let mut prev = vec![1.0f64]; // S(0, 0) = 1
    for n in 1..=k {
        let mut cur = vec![0.0f64; n + 1];
        for j in 1..=n {
            let carry = if j <= n - 1 { prev[j] * j as f64 } else { 0.0 };
            cur[j] = prev[j - 1] + carry;
        }
        prev = cur;
    }
    prev
}

/// Touchard (Bell) polynomial T_k(x) = sum_j S(k, j) x^j; T_k(1) = B_k.
pub fn touchard(k: usize, x: f64) -> f64 {
    let row = stirling2_row(k);
    let mut acc = 0.0;
    let mut pw = 1.0;
    for (j, s) in row.iter().enumerate() {
        if j > 0 {
            pw *= x;
        }
        acc += s * pw;
    }
    acc
}

/// Log of the rising factorial (alpha)_n = Gamma(alpha + n) / Gamma(alpha).
pub fn log_pochhammer(alpha: f64, n: usize) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "log_pochhammer: alpha must be positive, got {alpha}"
        )));
    }
    Ok(ln_gamma(alpha + n as f64) - ln_gamma(alpha))
}

/// log(sum exp(x_i)) guarded against empty input and -inf entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        if x == 0.0 {
            let fc = f(c);
            kron += wk * fc;
            gauss += WG[3] * fc;
        } else {
            let f1 = f(c - h * x);
            let f2 = f(c + h * x);
            kron += wk * (f1 + f2);
            if i % 2 == 1 {
                gauss += WG[i / 2] * (f1 + f2);
            }
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

/// Adaptive Gauss-Kronrod quadrature of `f` over the finite interval [a, b]
/// to relative tolerance `rel_tol`.
pub fn integrate_interval(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(b > a) {
        return Err(Error::InvalidParameter(format!(
            "integrate_interval: need b > a, got [{a}, {b}]"
        )));
    }
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::new(); // (a, b, val, err)
    let (v, e) = gk15(&mut f, a, b);
    segs.push((a, b, v, e));
    const MAX_SEGS: usize = 4000;
    loop {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        let target = rel_tol * total.abs().max(f64::MIN_POSITIVE);
        if err <= target {
            return Ok(total);
        }
        if segs.len() >= MAX_SEGS {
            return Err(Error::QuadratureDiverged(format!(
                "relative error {:.3e} after {} segments",
                err / total.abs().max(f64::MIN_POSITIVE),
                segs.len()
            )));
        }
        // Split the segment with the largest error estimate.
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.partial_cmp(&b.1 .3).unwrap())
            .unwrap();
        let (sa, sb, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (sa + sb);
        let (v1, e1) = gk15(&mut f, sa, mid);
        let (v2, e2) = gk15(&mut f, mid, sb);
        segs.push((sa, mid, v1, e1));
        segs.push((mid, sb, v2, e2));
    }
}

/// Adaptive quadrature of a nonnegative integrable `f` over (0, inf).
///
/// Uses the substitution u = t / (1 - t), mapping the half line onto (0, 1),
/// followed by adaptive Gauss-Kronrod refinement. Relative error is
/// estimated by interval halving; exceeding the refinement budget reports
/// a non-convergent integral.
pub fn integrate_halfline(mut f: impl FnMut(f64) -> f64, rel_tol: f64) -> Result<f64> {
    integrate_interval(
        move |t| {
            let om = 1.0 - t;
            let u = t / om;
            let v = f(u) / (om * om);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composition-enumeration oracle for the identity
    /// (1/k!) sum_{n_1+..+n_k=n} multinomial * prod (alpha)_{n_j}
    ///   = (-1)^n C(n, k; -alpha).
    fn gfc_oracle(n: usize, k: usize, alpha: f64) -> f64 {
        fn rec(n_left: usize, parts_left: usize, alpha: f64, log_n_fact: f64, acc: &mut f64, prod: f64) {
            if parts_left == 1 {
                let nj = n_left;
                if nj == 0 {
                    return;
                }
                let term = prod
                    * (log_pochhammer(alpha, nj).unwrap() - ln_gamma(nj as f64 + 1.0)).exp();
                *acc += term * log_n_fact.exp();
                return;
            }
            for nj in 1..=(n_left - (parts_left - 1)) {
                let p = prod
                    * (log_pochhammer(alpha, nj).unwrap() - ln_gamma(nj as f64 + 1.0)).exp();
                rec(n_left - nj, parts_left - 1, alpha, log_n_fact, acc, p);
            }
        }
        let mut acc = 0.0;
        rec(n, k, alpha, ln_gamma(n as f64 + 1.0), &mut acc, 1.0);
        let k_fact: f64 = (1..=k).map(|i| i as f64).product();
        acc / k_fact.max(1.0)
    }

    #[test]
    fn gfc_initial_conditions() {
        assert_eq!(gfc(0, 0, 0.7).unwrap().to_f64(), 1.0);
        assert!(gfc(3, 4, 0.5).unwrap().is_zero());
        assert!(gfc(5, 0, 1.3).unwrap().is_zero());
    }

    #[test]
    fn gfc_small_value() {
        // C(2,1;-1) = (alpha-1)*alpha at alpha=-1 -> 2
        let v = gfc(2, 1, -1.0).unwrap();
        assert!((v.to_f64() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gfc_matches_composition_oracle() {
        for &alpha in &[0.5f64, 1.0, 2.0] {
            for n in 1..=8usize {
                for k in 1..=n {
                    let lhs = {
                        let c = gfc(n, k, -alpha).unwrap();
                        (if n % 2 == 0 { 1.0 } else { -1.0 }) * c.to_f64()
                    };
                    let rhs = gfc_oracle(n, k, alpha);
                    assert!(
                        (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0),
                        "n={n} k={k} alpha={alpha}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn gfc_rejects_huge_n() {
        assert!(gfc(10_001, 1, 1.0).is_err());
    }

    #[test]
    fn bell_values() {
        assert_eq!(bell(0).unwrap(), 1);
        assert_eq!(bell(3).unwrap(), 5);
        // Enumeration oracle: all set partitions of {1..5}.
        fn count_partitions(n: usize) -> u128 {
            fn rec(i: usize, n: usize, blocks: &mut Vec<Vec<usize>>, acc: &mut u128) {
                if i == n {
                    *acc += 1;
                    return;
                }
                for b in 0..blocks.len() {
                    blocks[b].push(i);
                    rec(i + 1, n, blocks, acc);
                    blocks[b].pop();
                }
                blocks.push(vec![i]);
                rec(i + 1, n, blocks, acc);
                blocks.pop();
            }
            let mut acc = 0;
            rec(0, n, &mut Vec::new(), &mut acc);
            acc
        }
        assert_eq!(bell(5).unwrap(), count_partitions(5));
        assert_eq!(bell(5).unwrap(), 52);
        assert!(bell(26).is_err());
    }

    #[test]
    fn touchard_reduces_to_bell() {
        for k in 0..=8 {
            assert!((touchard(k, 1.0) - bell(k).unwrap() as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn pochhammer_values() {
        assert_eq!(log_pochhammer(4.2, 0).unwrap(), 0.0);
        assert!((log_pochhammer(1.0, 3).unwrap() - 6.0f64.ln()).abs() < 1e-12);
        assert!((log_pochhammer(2.5, 2).unwrap() - 8.75f64.ln()).abs() < 1e-12);
        assert!(log_pochhammer(0.0, 2).is_err());
    }

    #[test]
    fn halfline_gamma_integrals() {
        let v = integrate_halfline(|u| (-u).exp(), 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        let v = integrate_halfline(|u| u * (-u).exp(), 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        // Beta oracle: int u^4 (1+u)^-7 du = B(5, 2) = 1/30.
        let v = integrate_halfline(|u| u.powi(4) * (1.0 + u).powi(-7), 1e-10).unwrap();
        assert!((v - 1.0 / 30.0).abs() < 1e-9 / 30.0);
    }

    #[test]
    fn interval_quadrature_is_exact_on_polynomials() {
        let v = integrate_interval(|x| x * x, 0.0, 3.0, 1e-12).unwrap();
        assert!((v - 9.0).abs() < 1e-10);
    }

    #[test]
    fn signed_log_cancellation() {
        let a = SignedLogReal::from_f64(3.5);
        let b = SignedLogReal::from_f64(-3.5);
        assert!(a.add(b).is_zero());
        let c = a.add(SignedLogReal::from_f64(-1.25));
        assert!((c.to_f64() - 2.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn signed_log_arithmetic_matches_f64(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let sx = SignedLogReal::from_f64(x);
            let sy = SignedLogReal::from_f64(y);
            let sum = sx.add(sy).to_f64();
            let prod = sx.mul(sy).to_f64();
            prop_assert!((sum - (x + y)).abs() < 1e-9 * (1.0 + (x + y).abs()));
            prop_assert!((prod - x * y).abs() < 1e-9 * (1.0 + (x * y).abs()));
        }

        #[test]
        fn gfc_row_signs_alternate_consistently(n in 1usize..12, alpha in 0.1f64..3.0) {
            // (-1)^n C(n,k;-alpha) must be positive for all 1 <= k <= n.
            for k in 1..=n {
                let c = gfc(n, k, -alpha).unwrap();
                let signed = (if n % 2 == 0 { 1 } else { -1 }) * c.sign as i32;
                prop_assert!(signed > 0, "n={} k={} sign={}", n, k, c.sign);
            }
        }
    }
}
