//! Exact two-phase simplex over the rationals with Bland's anti-cycling rule.
//!
//! Solves `maximize c.x subject to A x = b, x >= 0`.

use num_traits::{Signed, Zero};

use crate::linalg::RatMatrix;
use crate::rat::Rat;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rat>, value: Rat },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rat>>, // each row: coefficients for all columns, then rhs
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rat {
        &self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, e: usize, obj: &mut [Rat]) {
        let inv = self.rows[r][e].recip();
        for x in self.rows[r].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[e].is_zero() {
                continue;
            }
            let f = row[e].clone();
            for (x, y) in row.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        // obj holds reduced costs followed by the negated objective value.
        if !obj[e].is_zero() {
            let f = obj[e].clone();
            for (x, y) in obj.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = e;
    }

    /// Runs simplex iterations on `obj`; columns with `allowed[j] == false`
    /// never enter. Returns false if unbounded.
    fn optimize(&mut self, obj: &mut [Rat], allowed: &[bool]) -> bool {
        loop {
            let entering = (0..self.ncols).find(|&j| allowed[j] && obj[j].is_positive());
            let Some(e) = entering else { return true };
            let mut best: Option<(usize, Rat)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[e].is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / &row[e];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, e, obj);
        }
    }
}

pub fn maximize(c: &[Rat], a: &RatMatrix, b: &[Rat]) -> LpOutcome {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m);
    let ncols = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let neg = b[i].is_negative();
        let mut row = Vec::with_capacity(ncols + 1);
        for j in 0..n {
            let v = a[(i, j)].clone();
            row.push(if neg { -v } else { v });
        }
        for k in 0..m {
            row.push(if k == i { Rat::from_integer(1.into()) } else { Rat::zero() });
        }
        row.push(if neg { -b[i].clone() } else { b[i].clone() });
        rows.push(row);
    }
    let mut t = Tableau { rows, basis: (n..n + m).collect(), ncols };

    // Phase 1: maximize -sum(artificials).
    let mut obj = vec![Rat::zero(); ncols + 1];
    for row in &t.rows {
        for j in 0..n {
            obj[j] += &row[j];
        }
        obj[ncols] -= &row[ncols];
    }
    let all = vec![true; ncols];
    t.optimize(&mut obj, &all);
    let phase1_value = phase_value(&t, |j| if j >= n { -Rat::from_integer(1.into()) } else { Rat::zero() });
    if phase1_value.is_negative() {
        return LpOutcome::Infeasible;
    }

    // Drive artificials out of the basis; drop redundant rows.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n {
            if let Some(e) = (0..n).find(|&j| !t.rows[r][j].is_zero()) {
                let mut dummy = vec![Rat::zero(); ncols + 1];
                t.pivot(r, e, &mut dummy);
            } else {
                t.rows.remove(r);
                t.basis.remove(r);
                continue;
            }
        }
        r += 1;
    }

    // Phase 2.
    let mut obj = vec![Rat::zero(); ncols + 1];
    obj[..n].clone_from_slice(c);
    for (i, row) in t.rows.iter().enumerate() {
        let cb = if t.basis[i] < n { c[t.basis[i]].clone() } else { Rat::zero() };
        if cb.is_zero() {
            continue;
        }
        for (x, y) in obj.iter_mut().zip(row) {
            *x -= &cb * y;
        }
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < n).collect();
    if !t.optimize(&mut obj, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rat::zero(); n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rhs(i).clone();
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { x, value }
}

fn phase_value(t: &Tableau, cost: impl Fn(usize) -> Rat) -> Rat {
    t.basis.iter().enumerate().map(|(i, &bv)| cost(bv) * t.rhs(i)).sum()
}
