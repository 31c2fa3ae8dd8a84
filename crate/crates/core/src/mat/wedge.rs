use super::{determinant, ComplexMatrix};
use crate::error::{Error, Result};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Strictly increasing `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `k`-th compound matrix: entry `(α, β)` is the minor `det A[α|β]`, with
/// `k`-subsets ordered lexicographically.
pub fn wedge_power(a: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
    let d = a.require_square()?;
    if k == 0 || k > d {
        return Err(Error::WedgeOrder { k, d });
    }
    if k == 1 {
        return Ok(a.clone());
    }
    let subsets = k_subsets(d, k);
    let n = subsets.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (r, alpha) in subsets.iter().enumerate() {
        for (c, beta) in subsets.iter().enumerate() {
            let sub = ComplexMatrix::from_fn(k, k, |i, j| a[(alpha[i], beta[j])]);
            out[(r, c)] = determinant(&sub)?;
        }
    }
    Ok(out)
}
