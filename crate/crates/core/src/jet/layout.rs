//! Multi-index bookkeeping shared by every jet of a given (dimension, order).
//!
//! Multi-indices are enumerated by total degree first, so the coefficient
//! list of an order-k jet is a prefix of the list of any order-k' jet with
//! k' > k. Truncation is therefore a slice.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::{MAX_DIM, MAX_ORDER};

pub(crate) struct Layout {
    pub indices: Vec<Vec<u8>>,
    pub lookup: HashMap<Vec<u8>, usize>,
    /// `(i, j, k)`: coefficient `i` times coefficient `j` lands in `k`.
    pub products: Vec<(u16, u16, u16)>,
    /// `derivs[i][k] = (src, factor)`: coefficient `k` of `∂_i f` (one order
    /// lower) is `factor * coeff[src]`.
    pub derivs: Vec<Vec<(u16, f64)>>,
    /// α! for each multi-index.
    pub factorials: Vec<f64>,
}

static LAYOUTS: [[OnceLock<Layout>; MAX_ORDER + 1]; MAX_DIM + 1] =
    [const { [const { OnceLock::new() }; MAX_ORDER + 1] }; MAX_DIM + 1];

pub(crate) fn layout(dim: usize, order: usize) -> &'static Layout {
    assert!(dim >= 1 && dim <= MAX_DIM, "jet dimension {dim} unsupported");
    assert!(order <= MAX_ORDER, "jet order {order} unsupported");
    LAYOUTS[dim][order].get_or_init(|| Layout::build(dim, order))
}

/// Number of coefficients of an order-`order` jet in `dim` variables: C(dim+order, order).
pub fn coefficient_count(dim: usize, order: usize) -> usize {
    let mut c = 1usize;
    for i in 1..=order {
        c = c * (dim + i) / i;
    }
    c
}

fn monomials_of_degree(dim: usize, degree: usize) -> Vec<Vec<u8>> {
    fn rec(dim: usize, pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos == dim - 1 {
            cur[pos] = left as u8;
            out.push(cur.clone());
            return;
        }
        for k in (0..=left).rev() {
            cur[pos] = k as u8;
            rec(dim, pos + 1, left - k, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0u8; dim];
    rec(dim, 0, degree, &mut cur, &mut out);
    out
}

impl Layout {
    fn build(dim: usize, order: usize) -> Layout {
        let mut indices = Vec::with_capacity(coefficient_count(dim, order));
        for d in 0..=order {
            indices.extend(monomials_of_degree(dim, d));
        }
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();

        let degree = |a: &[u8]| a.iter().map(|&x| x as usize).sum::<usize>();
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degree(a) + degree(b) > order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u16, j as u16, lookup[&sum] as u16));
            }
        }

        let mut derivs = Vec::with_capacity(dim);
        if order > 0 {
            let lower = coefficient_count(dim, order - 1);
            for i in 0..dim {
                let mut row = Vec::with_capacity(lower);
                for beta in &indices[..lower] {
                    let mut up = beta.clone();
                    up[i] += 1;
                    row.push((lookup[&up] as u16, up[i] as f64));
                }
                derivs.push(row);
            }
        }

        let factorials = indices
            .iter()
            .map(|a| a.iter().map(|&k| (1..=k as u32).product::<u32>() as f64).product())
            .collect();

        Layout {
            indices,
            lookup,
            products,
            derivs,
            factorials,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomial() {
        for dim in 1..=MAX_DIM {
            for order in 0..=MAX_ORDER {
                assert_eq!(layout(dim, order).indices.len(), coefficient_count(dim, order));
            }
        }
        assert_eq!(coefficient_count(4, 3), 35);
        assert_eq!(coefficient_count(5, 3), 56);
    }

    #[test]
    fn lower_orders_are_prefixes() {
        let hi = layout(3, 4);
        for order in 0..4 {
            let lo = layout(3, order);
            assert_eq!(&hi.indices[..lo.indices.len()], &lo.indices[..]);
        }
    }
}
