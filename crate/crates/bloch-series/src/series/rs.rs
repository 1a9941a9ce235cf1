//! Rayleigh–Schrödinger recursion on the Galerkin matrices.

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::C64;

/// Coefficients `β_0, …, β_N` of the eigenvalue of `Σ z^n Â_n` that emanates
/// from the simple diagonal entry `i0` of `Â_0`.
///
/// Uses intermediate normalization `⟨y_0, y_n⟩ = 0`:
/// `β_n = Σ_{k=1}^n ⟨y_0, Â_k y_{n−k}⟩` and
/// `y_n = S(−Σ_{k=1}^n Â_k y_{n−k} + Σ_{k=1}^{n−1} β_k y_{n−k})`, where `S` is
/// the reduced resolvent of `Â_0` at `β_0`.
pub fn layer_rs(a_hat: &[CMat], i0: usize, order: usize) -> Result<Vec<f64>> {
    let Some(a0) = a_hat.first() else {
        return Err(Error::Contract("no matrices supplied".into()));
    };
    if order >= a_hat.len() {
        return Err(Error::Contract(format!(
            "order {order} needs Â_0..Â_{order} but only {} matrices are available",
            a_hat.len()
        )));
    }
    let dim = a0.nrows();
    if i0 >= dim {
        return Err(Error::Contract(format!("index {i0} outside dimension {dim}")));
    }
    let b0 = a0[(i0, i0)].re;
    let scale = (0..dim).map(|i| a0[(i, i)].re.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut inv_den = vec![0.0; dim];
    for i in 0..dim {
        if i == i0 {
            continue;
        }
        let den = a0[(i, i)].re - b0;
        if den.abs() <= 1e-12 * scale {
            return Err(Error::Multiplicity { expected: 1, found: 2 });
        }
        inv_den[i] = 1.0 / den;
    }
    let apply = |k: usize, y: &[C64]| -> Vec<C64> {
        let a = &a_hat[k];
        (0..dim)
            .map(|r| (0..dim).map(|c| a[(r, c)] * y[c]).sum())
            .collect()
    };
    let mut y0 = vec![C64::new(0.0, 0.0); dim];
    y0[i0] = C64::new(1.0, 0.0);
    let mut ys = vec![y0];
    let mut betas = vec![b0];
    // Cached products Â_k y_j.
    let mut prods: Vec<Vec<Vec<C64>>> = vec![Vec::new(); order + 1];
    for n in 1..=order {
        for k in 1..=n {
            let j = n - k;
            while prods[k].len() <= j {
                let jj = prods[k].len();
                prods[k].push(apply(k, &ys[jj]));
            }
        }
        let bn: C64 = (1..=n).map(|k| prods[k][n - k][i0]).sum();
        betas.push(bn.re);
        let mut rhs = vec![C64::new(0.0, 0.0); dim];
        for k in 1..=n {
            for (r, v) in rhs.iter_mut().zip(&prods[k][n - k]) {
                *r -= v;
            }
        }
        for k in 1..n {
            for (r, v) in rhs.iter_mut().zip(&ys[n - k]) {
                *r += v * betas[k];
            }
        }
        let y: Vec<C64> = rhs.iter().zip(&inv_den).map(|(r, d)| r * d).collect();
        ys.push(y);
    }
    Ok(betas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_matches_closed_form() {
        // Â(z) = diag(1, 3) + z [[0, 1], [1, 0]]: eigenvalue 2 − √(1 + z²).
        let a0 = CMat::from_fn(2, 2, |r, c| C64::new(if r == c { 1.0 + 2.0 * r as f64 } else { 0.0 }, 0.0));
        let a1 = CMat::from_fn(2, 2, |r, c| C64::new(if r != c { 1.0 } else { 0.0 }, 0.0));
        let z2 = CMat::zeros(2, 2);
        let b = layer_rs(&[a0, a1, z2.clone(), z2.clone(), z2], 0, 4).unwrap();
        let expect = [1.0, 0.0, -0.5, 0.0, 0.125];
        for (x, e) in b.iter().zip(expect) {
            assert!((x - e).abs() < 1e-14, "{b:?}");
        }
    }
}
