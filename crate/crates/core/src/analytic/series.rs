//! Closed forms: sums over depth `d` that are cheap for any `n`.

use super::kernels::{hit_prob, lg_binomial_unchecked, miss_prob, tail_done};
use crate::{Error, Result};

/// `D_n = sum_{d>=0} 1 - (1 - 2^-d)^(n-1)`, the expected leaf depth.
pub fn avg_depth_sum(n: u64, tol: f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for d in 0.. {
        let term = hit_prob(d, n - 1);
        sum += term;
        if tail_done(d, n, term, sum, tol) {
            break;
        }
    }
    sum
}

/// Probability that a fixed member's leaf sits at depth `d`.
pub fn leaf_depth_pmf(n: u64, d: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "leaf depth pmf needs n >= 2 (got {n}); a single leaf sits at depth 0"
        )));
    }
    if d == 0 {
        return Ok(0.0);
    }
    Ok(hit_prob(d - 1, n - 1) - hit_prob(d, n - 1))
}

/// Expected number of depth-`d` leaves, `L^d_n = n l^d_n`.
pub fn expected_leaves(n: u64, d: u64) -> f64 {
    match n {
        0 => 0.0,
        1 => (d == 0) as u8 as f64,
        _ => n as f64 * leaf_depth_pmf(n, d).unwrap(),
    }
}

/// `F^l_n = (n/2) sum_{d>=l} 2^-d (1 - 2^-d)^(n-1)`; `l = 0` gives `F_n`.
pub fn false_positive(n: u64, d_min: u64, tol: f64) -> f64 {
    match n {
        0 => return 0.0,
        1 => return libm::exp2(-(d_min as f64)),
        _ => {}
    }
    let mut sum = 0.0;
    for d in d_min.. {
        let term = libm::exp2(-(d as f64)) * miss_prob(d, n - 1);
        sum += term;
        if d > d_min && tail_done(d, n, term, sum, tol) {
            break;
        }
    }
    0.5 * n as f64 * sum
}

/// `P(Binomial(n, x) >= 2)` for cell probability `x = 2^-d`.
fn at_least_two(n: u64, d: u64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    let x = libm::exp2(-(d as f64));
    let nf = n as f64;
    if nf * x < 1e-2 {
        let ln_x = libm::log(x);
        let ln_miss = libm::log1p(-x);
        let mut sum = 0.0;
        for j in 2..=n.min(24) {
            let ln_term = lg_binomial_unchecked(n, j) * std::f64::consts::LN_2
                + j as f64 * ln_x
                + (n - j) as f64 * ln_miss;
            sum += libm::exp(ln_term);
        }
        sum
    } else {
        let q = (nf - 1.0) * libm::log1p(-x) + libm::log1p((nf - 1.0) * x);
        -libm::expm1(q)
    }
}

/// Expected number of internal nodes at depth `d` (prefixes shared by at
/// least two of the `n` streams).
pub fn internal_nodes_at_depth(n: u64, d: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("internal node count needs n >= 2".into()));
    }
    Ok(libm::exp2(d as f64) * at_least_two(n, d))
}

/// `N_n^m`: expected number of nodes traversed by exactly `m` streams.
pub fn m_node_count(n: u64, m: u64, tol: f64) -> Result<f64> {
    if n < 2 || m < 2 || m > n {
        return Err(Error::Domain(format!(
            "m-node count needs 2 <= m <= n (got n={n}, m={m})"
        )));
    }
    let lgc = lg_binomial_unchecked(n, m);
    let mut sum = (n == m) as u8 as f64;
    for d in 1.. {
        let df = d as f64;
        let term = libm::exp2(df + lgc - df * m as f64) * miss_prob(d, n - m);
        sum += term;
        if tail_done(d, n, term, sum, tol) {
            break;
        }
    }
    Ok(sum)
}

/// `n - 2^d (1 - (1 - 2^-d)^n)`: streams minus occupied prefixes at depth `d`.
fn unoccupied_excess(n: u64, d: u64) -> f64 {
    let nf = n as f64;
    if d == 0 {
        return nf - 1.0;
    }
    let x = libm::exp2(-(d as f64));
    if nf * x < 1e-2 {
        // sum_{j>=2} (-1)^j C(n, j) x^(j-1)
        let mut c = 0.5 * nf * (nf - 1.0) * x;
        let mut sum = 0.0;
        for j in 2..=n.min(40) {
            if j % 2 == 0 {
                sum += c;
            } else {
                sum -= c;
            }
            c *= (nf - j as f64) / (j as f64 + 1.0) * x;
            if c.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        nf - libm::exp2(d as f64) * hit_prob(d, n)
    }
}

/// Expected number of degree-1 internal nodes in the minimal tree.
pub fn degree1_count(n: u64, tol: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("degree-1 count needs n >= 2".into()));
    }
    let mut excess = 0.0;
    for d in 0.. {
        let term = unoccupied_excess(n, d);
        excess += term;
        if tail_done(d, n, term, excess, tol) {
            break;
        }
    }
    let nf = n as f64;
    Ok(nf * avg_depth_sum(n, tol) - excess - (nf - 1.0))
}
