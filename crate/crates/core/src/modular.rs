//! Certified exact rank and kernel for large integer matrices.
//!
//! Rows are streamed (possibly several times) through a closure so that very
//! tall matrices never need to be materialized. Elimination runs modulo the
//! Mersenne prime 2^61 - 1. Independence modulo p implies independence over
//! the rationals, so the modular rank is a lower bound on the exact rank.
//! The kernel is lifted by rational reconstruction and every candidate is
//! verified exactly against every row, which pins the exact rank from above.
//! When a candidate fails, the kernel is recomputed exactly from the rows
//! known to be independent plus the offending rows, and verification repeats.

use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::Result;
use crate::linalg::RatMatrix;
use crate::rat::Rat;

const P: u64 = (1u64 << 61) - 1;

fn reduce_i128(v: i128) -> u64 {
    v.rem_euclid(P as i128) as u64
}

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn submod(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + P - b
    }
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

fn invmod(a: u64) -> u64 {
    powmod(a, P - 2)
}

/// Reduced row echelon form maintained modulo p.
#[derive(Clone, Debug)]
pub struct ModEchelon {
    cols: usize,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl ModEchelon {
    pub fn new(cols: usize) -> Self {
        ModEchelon { cols, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.cols
    }

    /// Inserts an integer row; returns true when the rank grew.
    pub fn insert(&mut self, row: &[i128]) -> bool {
        debug_assert_eq!(row.len(), self.cols);
        if self.is_full() {
            return false;
        }
        let mut v: Vec<u64> = row.iter().map(|&x| reduce_i128(x)).collect();
        for (r, &p) in self.rows.iter().zip(&self.pivots) {
            let f = v[p];
            if f == 0 {
                continue;
            }
            for (x, &y) in v.iter_mut().zip(r) {
                if y != 0 {
                    *x = submod(*x, mulmod(f, y));
                }
            }
        }
        let Some(p) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = invmod(v[p]);
        for x in v.iter_mut() {
            *x = mulmod(*x, inv);
        }
        for r in self.rows.iter_mut() {
            let f = r[p];
            if f == 0 {
                continue;
            }
            for (x, &y) in r.iter_mut().zip(&v) {
                if y != 0 {
                    *x = submod(*x, mulmod(f, y));
                }
            }
        }
        self.rows.push(v);
        self.pivots.push(p);
        true
    }

    /// Kernel basis lifted by rational reconstruction (None if some entry fails).
    fn lifted_kernel(&self) -> Option<Vec<Vec<Rat>>> {
        let mut is_pivot = vec![false; self.cols];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        let mut out = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![Rat::zero(); self.cols];
            v[free] = Rat::one();
            for (r, &p) in self.rows.iter().zip(&self.pivots) {
                let e = r[free];
                if e != 0 {
                    v[p] = -reconstruct(e)?;
                }
            }
            out.push(v);
        }
        Some(out)
    }
}

/// Wang's rational reconstruction with symmetric bounds sqrt(p/2).
fn reconstruct(a: u64) -> Option<Rat> {
    let bound: i128 = 1_073_741_823; // floor(sqrt((2^61 - 1) / 2))
    let (mut r0, mut r1) = (P as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 > bound {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if t1 == 0 || t1.abs() > bound {
        return None;
    }
    let (n, d) = if t1 < 0 { (-r1, -t1) } else { (r1, t1) };
    if n.gcd(&d) != 1 {
        return None;
    }
    Some(Rat::new(BigInt::from(n), BigInt::from(d)))
}

/// Exact rank and kernel basis of a streamed integer matrix.
#[derive(Clone, Debug)]
pub struct RankKernel {
    pub rank: usize,
    pub kernel: Vec<Vec<Rat>>,
}

/// Computes the exact rank and (when `want_kernel`) a kernel basis of the
/// integer matrix whose rows are produced by `rows`. The closure receives a
/// sink and must feed every row, stopping early when the sink breaks.
pub fn certified_rank_kernel<F>(cols: usize, rows: F, want_kernel: bool) -> Result<RankKernel>
where
    F: Fn(&mut dyn FnMut(&[i128]) -> ControlFlow<()>),
{
    let mut ech = ModEchelon::new(cols);
    let mut basis_rows: Vec<Vec<i128>> = Vec::new();
    rows(&mut |row: &[i128]| {
        if ech.insert(row) {
            basis_rows.push(row.to_vec());
        }
        if ech.is_full() {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if ech.is_full() {
        return Ok(RankKernel { rank: cols, kernel: Vec::new() });
    }
    let mut candidates = match ech.lifted_kernel() {
        Some(k) => k,
        None => exact_kernel(&basis_rows, cols),
    };
    loop {
        let scaled: Vec<Vec<BigInt>> = candidates.iter().map(|v| integer_scaled(v)).collect();
        let mut failing: Vec<Vec<i128>> = Vec::new();
        rows(&mut |row: &[i128]| {
            if scaled.iter().any(|v| !dot_is_zero(row, v)) {
                failing.push(row.to_vec());
                if failing.len() >= cols {
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        });
        if failing.is_empty() {
            let rank = cols - candidates.len();
            let kernel = if want_kernel { candidates } else { Vec::new() };
            return Ok(RankKernel { rank, kernel });
        }
        basis_rows.extend(failing);
        candidates = exact_kernel(&basis_rows, cols);
        if candidates.is_empty() {
            return Ok(RankKernel { rank: cols, kernel: Vec::new() });
        }
    }
}

fn exact_kernel(rows: &[Vec<i128>], cols: usize) -> Vec<Vec<Rat>> {
    if rows.is_empty() {
        return (0..cols)
            .map(|i| (0..cols).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
            .collect();
    }
    let m = RatMatrix::from_fn(rows.len(), cols, |r, c| Rat::from_integer(BigInt::from(rows[r][c])));
    m.kernel()
}

fn integer_scaled(v: &[Rat]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    v.iter().map(|x| x.numer() * (&l / x.denom())).collect()
}

fn dot_is_zero(row: &[i128], v: &[BigInt]) -> bool {
    // Fast path in i128 when everything fits.
    let mut acc: i128 = 0;
    let mut ok = true;
    for (a, b) in row.iter().zip(v) {
        if *a == 0 || b.is_zero() {
            continue;
        }
        match b.to_i128().and_then(|b| a.checked_mul(b)).and_then(|p| acc.checked_add(p)) {
            Some(s) => acc = s,
            None => {
                ok = false;
                break;
            }
        }
    }
    if ok {
        return acc == 0;
    }
    let s: BigInt = row.iter().zip(v).map(|(a, b)| BigInt::from(*a) * b).sum();
    s.is_zero()
}

/// Convenience wrapper for a materialized integer matrix.
pub fn rank_kernel_of(rows: &[Vec<i128>], cols: usize, want_kernel: bool) -> Result<RankKernel> {
    certified_rank_kernel(
        cols,
        |sink| {
            for r in rows {
                if sink(r).is_break() {
                    return;
                }
            }
        },
        want_kernel,
    )
}

/// Scales a rational row to a primitive-free integer row with the same span.
pub fn integer_row(v: &[Rat]) -> Option<Vec<i128>> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    v.iter().map(|x| (x.numer() * (&l / x.denom())).to_i128()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::frac;
    use proptest::prelude::*;

    #[test]
    fn reconstruct_small_fractions() {
        for (n, d) in [(1i64, 3i64), (-7, 11), (22, 7), (0, 1)] {
            let a = reduce_i128(n as i128);
            let e = mulmod(a, invmod(reduce_i128(d as i128)));
            assert_eq!(reconstruct(e).unwrap(), frac(n, d));
        }
    }

    #[test]
    fn rank_deficient_matrix() {
        let rows = vec![vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]];
        let rk = rank_kernel_of(&rows, 3, true).unwrap();
        assert_eq!(rk.rank, 2);
        assert_eq!(rk.kernel.len(), 1);
        let m = RatMatrix::from_fn(3, 3, |r, c| Rat::from_integer(BigInt::from(rows[r][c])));
        assert!(m.mul_vec(&rk.kernel[0]).unwrap().iter().all(Zero::is_zero));
    }

    #[test]
    fn multiple_of_prime_does_not_fool_rank() {
        // A row that vanishes modulo p is still detected through verification.
        let p = P as i128;
        let rows = vec![vec![p, 0], vec![0, 1]];
        let rk = rank_kernel_of(&rows, 2, true).unwrap();
        assert_eq!(rk.rank, 2);
        assert!(rk.kernel.is_empty());
    }

    proptest! {
        #[test]
        fn agrees_with_exact_rank(entries in proptest::collection::vec(-3i128..=3, 20)) {
            let rows: Vec<Vec<i128>> = entries.chunks(5).map(|c| c.to_vec()).collect();
            let exact = RatMatrix::from_fn(4, 5, |r, c| Rat::from_integer(BigInt::from(rows[r][c]))).rank();
            prop_assert_eq!(rank_kernel_of(&rows, 5, false).unwrap().rank, exact);
        }
    }
}
