//! Invariant polynomials of degrees 2 and 4 under a finite group of isometries.
//!
//! A group whose only invariants in degrees 2 and 4 are Q and Q^2 makes every
//! invariant layer a 4-design. The fixed space of the group equals the common
//! fixed space of its generators, so no group elements are enumerated.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::QForm;
use crate::linalg::RatMatrix;
use crate::modular::{integer_row, rank_kernel_of};
use crate::rat::{self, Rat};
use crate::spaces::check_generators;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupGenSet {
    pub dim: usize,
    pub generators: Vec<RatMatrix>,
    #[serde(skip)]
    pub checked: bool,
}

impl GroupGenSet {
    pub fn new(dim: usize, generators: Vec<RatMatrix>) -> Self {
        GroupGenSet { dim, generators, checked: false }
    }

    /// Validates every generator against `q` and marks the set as checked.
    pub fn checked_for(q: &QForm, generators: Vec<RatMatrix>) -> Result<Self> {
        let mut g = GroupGenSet::new(q.dim(), generators);
        g.check(q)?;
        Ok(g)
    }

    pub fn check(&mut self, q: &QForm) -> Result<()> {
        if self.dim != q.dim() {
            return Err(Error::DimensionMismatch { expected: q.dim(), found: self.dim });
        }
        check_generators(q, &self.generators, true)?;
        self.checked = true;
        Ok(())
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Exponent vectors of the degree-d monomials in n variables, in lex order.
pub fn monomials(n: usize, d: usize) -> Vec<Vec<u8>> {
    fn rec(n: usize, d: usize, i: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if i + 1 == n {
            cur.push(d as u8);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=d).rev() {
            cur.push(k as u8);
            rec(n, d - k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, d, 0, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

type Poly = HashMap<Vec<u8>, Rat>;

fn mul_linear(p: &Poly, row: &[Rat]) -> Poly {
    let mut out = Poly::new();
    for (e, c) in p {
        for (j, h) in row.iter().enumerate() {
            if rat::is_zero(h) {
                continue;
            }
            let mut f = e.clone();
            f[j] += 1;
            *out.entry(f).or_insert_with(rat::zero) += c * h;
        }
    }
    out.retain(|_, c| !rat::is_zero(c));
    out
}

/// Matrix of p -> p o g^{-1} on degree-d monomials. Column j holds the image
/// of monomial j.
pub fn sym_power_action(g: &RatMatrix, d: usize) -> Result<RatMatrix> {
    if d != 2 && d != 4 {
        return Err(Error::InvalidArgument(format!("degree {d} is not supported (use 2 or 4)")));
    }
    if !g.is_square() {
        return Err(Error::DimensionMismatch { expected: g.rows(), found: g.cols() });
    }
    let n = g.rows();
    let h = g.inverse()?;
    let mons = monomials(n, d);
    let index: HashMap<&[u8], usize> = mons.iter().enumerate().map(|(i, m)| (m.as_slice(), i)).collect();
    let cols: Vec<Poly> = mons
        .par_iter()
        .map(|m| {
            // x_i -> (h x)_i
            let mut p: Poly = Poly::from([(vec![0u8; n], rat::one())]);
            for (i, &k) in m.iter().enumerate() {
                for _ in 0..k {
                    p = mul_linear(&p, h.row(i));
                }
            }
            p
        })
        .collect();
    let mut out = RatMatrix::zeros(mons.len(), mons.len());
    for (j, p) in cols.into_iter().enumerate() {
        for (e, c) in p {
            out[(index[e.as_slice()], j)] = c;
        }
    }
    Ok(out)
}

/// Basis of the degree-d polynomials fixed by every generator, as coefficient
/// vectors over [`monomials`].
pub fn fixed_space(f: &GroupGenSet, d: usize) -> Result<Vec<Vec<Rat>>> {
    if !f.checked {
        return Err(Error::Precondition("generators have not been checked against a form".into()));
    }
    let size = monomials(f.dim, d).len();
    let blocks: Vec<Vec<Vec<i128>>> = f
        .generators
        .par_iter()
        .map(|g| {
            let a = sym_power_action(g, d)?.sub(&RatMatrix::identity(size));
            (0..size)
                .map(|r| integer_row(a.row(r)).ok_or(Error::Overflow("invariant rows")))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<i128>> = blocks.into_iter().flatten().filter(|r| r.iter().any(|&x| x != 0)).collect();
    if rows.is_empty() {
        return Ok((0..size).map(|i| (0..size).map(|j| if i == j { rat::one() } else { rat::zero() }).collect()).collect());
    }
    Ok(rank_kernel_of(&rows, size, true)?.kernel)
}

pub fn fixed_dim(f: &GroupGenSet, d: usize) -> Result<usize> {
    fixed_space(f, d).map(|k| k.len())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceVerdict {
    pub fixed_dim_2: usize,
    pub fixed_dim_4: usize,
    pub passes_fc22: bool,
    pub passes_fc4: bool,
    #[serde(with = "rat::serde_rat_vec_vec")]
    pub invariants_2: Vec<Vec<Rat>>,
    #[serde(with = "rat::serde_rat_vec_vec")]
    pub invariants_4: Vec<Vec<Rat>>,
}

/// Decides whether only Q and Q^2 are invariant in degrees 2 and 4.
///
/// Products of two quadratics span every quartic, so the {2,2} test reduces to
/// the same fixed-space dimensions as the 4-design test.
pub fn invariance_criterion(f: &GroupGenSet) -> Result<InvarianceVerdict> {
    let invariants_2 = fixed_space(f, 2)?;
    let invariants_4 = fixed_space(f, 4)?;
    let pass = invariants_2.len() == 1 && invariants_4.len() == 1;
    Ok(InvarianceVerdict {
        fixed_dim_2: invariants_2.len(),
        fixed_dim_4: invariants_4.len(),
        passes_fc22: pass,
        passes_fc4: pass,
        invariants_2,
        invariants_4,
    })
}
