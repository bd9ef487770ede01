//! Graded-lex monomial tables shared by every truncated series.
//!
//! Monomials over `nvars` variables with total degree at most `sigma` are
//! numbered degree by degree; inside a degree the exponent vectors are in
//! descending lexicographic order (`x1^d` first). Because the degree blocks
//! are laid out one after another, the index of a monomial does not depend on
//! `sigma`, so series of different orders over the same variables can be
//! truncated or padded without re-indexing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug)]
pub struct Monomials {
    nvars: usize,
    sigma: usize,
    exps: Vec<u8>,
    degree_start: Vec<usize>,
    mul: Vec<u32>,
    parent: Vec<(u32, u8)>,
    lookup: HashMap<Vec<u8>, usize>,
}

fn push_degree(nvars: usize, d: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == nvars {
        prefix.push(d as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=d).rev() {
        prefix.push(e as u8);
        push_degree(nvars, d - e, prefix, out);
        prefix.pop();
    }
}

impl Monomials {
    fn build(nvars: usize, sigma: usize) -> Self {
        let mut all: Vec<Vec<u8>> = Vec::new();
        let mut degree_start = Vec::with_capacity(sigma + 2);
        for d in 0..=sigma {
            degree_start.push(all.len());
            if nvars == 0 {
                if d == 0 {
                    all.push(Vec::new());
                }
                continue;
            }
            push_degree(nvars, d, &mut Vec::new(), &mut all);
        }
        degree_start.push(all.len());

        let lookup: HashMap<Vec<u8>, usize> =
            all.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let len = all.len();

        let degree_of = |e: &[u8]| e.iter().map(|&v| v as usize).sum::<usize>();
        let mut mul = vec![NONE; len * len];
        let mut sum = vec![0u8; nvars];
        for a in 0..len {
            let da = degree_of(&all[a]);
            for b in 0..len {
                if da + degree_of(&all[b]) > sigma {
                    continue;
                }
                for v in 0..nvars {
                    sum[v] = all[a][v] + all[b][v];
                }
                mul[a * len + b] = lookup[&sum] as u32;
            }
        }

        let mut parent = vec![(NONE, 0u8); len];
        for (i, e) in all.iter().enumerate().skip(1) {
            // peel one power off the last non-zero variable
            let v = (0..nvars).rev().find(|&v| e[v] > 0).unwrap();
            let mut p = e.clone();
            p[v] -= 1;
            parent[i] = (lookup[&p] as u32, v as u8);
        }

        Monomials {
            nvars,
            sigma,
            exps: all.concat(),
            degree_start,
            mul,
            parent,
            lookup,
        }
    }

    /// Shared table for the given shape; tables are built once per process.
    pub fn get(nvars: usize, sigma: usize) -> Arc<Monomials> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Monomials>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((nvars, sigma))
            .or_insert_with(|| Arc::new(Monomials::build(nvars, sigma)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.degree_start[self.sigma + 1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exponents(&self, m: usize) -> &[u8] {
        &self.exps[m * self.nvars..(m + 1) * self.nvars]
    }

    pub fn degree(&self, m: usize) -> usize {
        self.exponents(m).iter().map(|&e| e as usize).sum()
    }

    /// Index range of the monomials of exactly degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        if d > self.sigma {
            return self.len()..self.len();
        }
        self.degree_start[d]..self.degree_start[d + 1]
    }

    /// Number of monomials with degree at most `d`.
    pub fn count_up_to(&self, d: usize) -> usize {
        self.degree_start[d.min(self.sigma) + 1]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.lookup.get(exps).copied()
    }

    /// Index of the degree-one monomial `x_v`.
    pub fn variable(&self, v: usize) -> usize {
        1 + v
    }

    #[cfg(test)]
    pub(crate) fn product(&self, a: usize, b: usize) -> u32 {
        self.mul[a * self.len() + b]
    }

    #[inline]
    pub(crate) fn product_row(&self, a: usize) -> &[u32] {
        let len = self.len();
        &self.mul[a * len..(a + 1) * len]
    }

    /// `(p, v)` with monomial `m = p * x_v`; `None` for the constant monomial.
    pub fn parent(&self, m: usize) -> Option<(usize, usize)> {
        let (p, v) = self.parent[m];
        if p == NONE {
            None
        } else {
            Some((p as usize, v as usize))
        }
    }

    /// Values of every monomial at `x`, computed along the parent chain.
    pub fn powers<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Mul<Output = T> + super::scalar::Scalar,
    {
        let mut vals = Vec::with_capacity(self.len());
        vals.push(T::one());
        for m in 1..self.len() {
            let (p, v) = self.parent[m];
            vals.push(vals[p as usize] * x[v as usize]);
        }
        vals
    }

    /// Multinomial coefficient `|m|! / (m_1! ... m_n!)`, the number of ordered
    /// index tuples that collapse onto the monomial.
    pub fn multinomial(&self, m: usize) -> f64 {
        let e = self.exponents(m);
        let mut num = 1.0;
        let mut k = 0usize;
        for &ei in e {
            for j in 1..=ei as usize {
                k += 1;
                num *= k as f64 / j as f64;
            }
        }
        num
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomials() {
        let t = Monomials::get(4, 7);
        assert_eq!(t.len(), 330);
        assert_eq!(t.degree_range(7).len(), 120);
        let t2 = Monomials::get(2, 7);
        assert_eq!(t2.len(), 36);
    }

    #[test]
    fn graded_lex_order() {
        let t = Monomials::get(2, 2);
        let got: Vec<Vec<u8>> = (0..t.len()).map(|m| t.exponents(m).to_vec()).collect();
        assert_eq!(
            got,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn product_table_and_overflow() {
        let t = Monomials::get(3, 3);
        let a = t.index_of(&[1, 0, 1]).unwrap();
        let b = t.index_of(&[0, 1, 0]).unwrap();
        assert_eq!(t.product(a, b) as usize, t.index_of(&[1, 1, 1]).unwrap());
        let c = t.index_of(&[0, 2, 0]).unwrap();
        assert_eq!(t.product(a, c), NONE);
    }

    #[test]
    fn prefix_property_across_orders() {
        let lo = Monomials::get(3, 2);
        let hi = Monomials::get(3, 5);
        for m in 0..lo.len() {
            assert_eq!(lo.exponents(m), hi.exponents(m));
        }
    }

    #[test]
    fn multinomials() {
        let t = Monomials::get(3, 4);
        assert_eq!(t.multinomial(t.index_of(&[2, 1, 1]).unwrap()), 12.0);
        assert_eq!(t.multinomial(t.index_of(&[4, 0, 0]).unwrap()), 1.0);
    }
}
