//! Special functions: integer-order Bessel functions of the first kind, their
//! zeros, and the exponential integrals used by the Ewald lattice sums.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Returns `[J_0(x), J_1(x), ..., J_nmax(x)]`.
///
/// Uses Miller's backward recurrence normalized by `J_0 + 2 Σ J_{2k} = 1`,
/// which is accurate to a few ulps for the arguments met in this crate
/// (|x| up to a few hundred).
pub fn bessel_j_seq(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    if ax < 1e-6 {
        // Two-term power series is exact to double precision here.
        let h = 0.5 * ax;
        let mut lead = 1.0;
        for (n, slot) in out.iter_mut().enumerate() {
            if n > 0 {
                lead *= h / n as f64;
            }
            *slot = lead * (1.0 - h * h / (n as f64 + 1.0));
        }
    } else {
        let top = nmax.max(ax as usize) as f64;
        let mut m = (top + 30.0 + (60.0 * top).sqrt()) as usize;
        m += m % 2;
        let mut jp1 = 0.0_f64;
        let mut j = 1e-30_f64;
        let mut norm = 0.0_f64;
        for k in (1..=m).rev() {
            if k <= nmax {
                out[k] = j;
            }
            if k % 2 == 0 {
                norm += 2.0 * j;
            }
            let jm1 = 2.0 * k as f64 / ax * j - jp1;
            jp1 = j;
            j = jm1;
            if j.abs() > 1e200 {
                let s = 1e-200;
                j *= s;
                jp1 *= s;
                norm *= s;
                for v in out.iter_mut() {
                    *v *= s;
                }
            }
        }
        out[0] = j;
        norm += j;
        for v in out.iter_mut() {
            *v /= norm;
        }
    }
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Bessel function of the first kind `J_n(x)` for any integer order.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_j_seq(m, x)[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Derivative `J_n'(x) = (n/x) J_n(x) - J_{n+1}(x)`, with the `x = 0` limit.
pub fn bessel_j_prime(n: u32, x: f64) -> f64 {
    let seq = bessel_j_seq(n as usize + 1, x);
    if n == 0 {
        -seq[1]
    } else if x == 0.0 {
        if n == 1 {
            0.5
        } else {
            0.0
        }
    } else {
        n as f64 / x * seq[n as usize] - seq[n as usize + 1]
    }
}

/// The `k`-th positive zero `η_{n,k}` (k ≥ 1) of `J_n`.
pub fn bessel_zero(n: u32, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("Bessel zeros are numbered from 1".into()));
    }
    Ok(bessel_zeros(n, k)?[k - 1])
}

/// The first `count` positive zeros of `J_n`, ascending.
pub fn bessel_zeros(n: u32, count: usize) -> Result<Vec<f64>> {
    let mut zeros = Vec::with_capacity(count);
    let mut lo = n as f64 + 1e-9;
    let step = 0.25;
    let mut flo = bessel_j(n as i32, lo);
    let limit = n as f64 + 4.0 * (count as f64 + 2.0) * std::f64::consts::PI + 10.0;
    while zeros.len() < count {
        let hi = lo + step;
        if hi > limit {
            return Err(Error::Numerical(format!(
                "failed to bracket zero {count} of J_{n} below {limit}"
            )));
        }
        let fhi = bessel_j(n as i32, hi);
        if flo == 0.0 {
            zeros.push(lo);
        } else if flo * fhi < 0.0 {
            zeros.push(refine_zero(n, lo, hi, flo)?);
        }
        lo = hi;
        flo = fhi;
    }
    Ok(zeros)
}

/// All positive zeros of `J_n` strictly below `xmax`, ascending.
pub fn bessel_zeros_below(n: u32, xmax: f64) -> Result<Vec<f64>> {
    let mut zeros = Vec::new();
    let mut lo = n as f64 + 1e-9;
    let mut flo = bessel_j(n as i32, lo);
    let step = 0.25;
    while lo < xmax {
        let hi = (lo + step).min(xmax);
        let fhi = bessel_j(n as i32, hi);
        if flo * fhi < 0.0 {
            zeros.push(refine_zero(n, lo, hi, flo)?);
        }
        if hi >= xmax {
            break;
        }
        lo = hi;
        flo = fhi;
    }
    Ok(zeros)
}

fn refine_zero(n: u32, mut lo: f64, mut hi: f64, mut flo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fmid = bessel_j(n as i32, mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    // One Newton polish from the bisection midpoint.
    let d = bessel_j_prime(n, x);
    if d != 0.0 {
        let xn = x - bessel_j(n as i32, x) / d;
        if xn > lo && xn < hi {
            x = xn;
        }
    }
    if !x.is_finite() {
        return Err(Error::Numerical(format!("zero refinement of J_{n} diverged")));
    }
    Ok(x)
}

/// Exponential integral `E_1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn expint_e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        -EULER_GAMMA - x.ln() + ein(x)
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Entire exponential integral `Ein(x) = Σ_{k≥1} (-1)^{k+1} x^k / (k k!)`,
/// so that `E_1(x) = -γ - ln x + Ein(x)`.
pub fn ein(x: f64) -> f64 {
    if x.abs() <= 2.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        expint_e1(x) + EULER_GAMMA + x.ln()
    }
}

/// Generalized exponential integral `E_2(x) = e^{-x} - x E_1(x)`, with `E_2(0) = 1`.
pub fn expint_e2(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (-x).exp() - x * expint_e1(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_values_match_tables() {
        // Reference values from Abramowitz & Stegun Table 9.1.
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((bessel_j(2, 5.0) - 0.046_565_116_277_752_2).abs() < 1e-14);
        assert!((bessel_j(0, 10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        assert!((bessel_j(-1, 1.0) + 0.440_050_585_744_933_5).abs() < 1e-14);
    }

    #[test]
    fn bessel_zeros_match_tables() {
        assert!((bessel_zero(0, 1).unwrap() - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_zero(1, 1).unwrap() - 3.831_705_970_207_512).abs() < 1e-12);
        assert!((bessel_zero(0, 2).unwrap() - 5.520_078_110_286_311).abs() < 1e-12);
        assert!((bessel_zero(2, 3).unwrap() - 11.619_841_172_149_06).abs() < 1e-11);
        let z = bessel_zeros_below(0, 9.0).unwrap();
        assert_eq!(z.len(), 3);
    }

    #[test]
    fn exponential_integrals() {
        assert!((expint_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-14);
        assert!((expint_e1(2.0) - 0.048_900_510_708_061_02).abs() < 1e-15);
        assert!((expint_e2(1.0) - 0.148_495_506_775_922_05).abs() < 1e-14);
        for &x in &[0.3, 1.9, 2.1, 5.0] {
            let lhs = expint_e1(x);
            let rhs = -EULER_GAMMA - f64::ln(x) + ein(x);
            assert!((lhs - rhs).abs() < 1e-13, "x={x}");
        }
    }
}
