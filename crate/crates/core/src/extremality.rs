//! Eutaxy, perfection and the Voronoi classification of extremality.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::SymEndo;
use crate::linalg::{EchelonBasis, RatMatrix};
use crate::lp::{self, LpOutcome};
use crate::modular::certified_rank_kernel;
use crate::rat::{self, Rat};
use crate::spaces::{Point, SpaceDescriptor};

/// epsilon_x(B_j) for every point x and extended basis element B_j.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonMatrix {
    pub rows: Vec<Vec<Rat>>,
}

impl EpsilonMatrix {
    pub fn identity_column_is_ones(&self) -> bool {
        self.rows.iter().all(|r| r.last().is_some_and(One::is_one))
    }
}

pub fn epsilon_matrix(space: &SpaceDescriptor) -> Result<EpsilonMatrix> {
    if space.points.is_empty() {
        return Err(Error::Precondition("point set is empty".into()));
    }
    let rows = space.points.par_iter().map(|p| space.epsilon_row(p)).collect::<Result<Vec<_>>>()?;
    Ok(EpsilonMatrix { rows })
}

/// Sum over points of epsilon_x(B_j), for j over the extended basis.
pub fn epsilon_sums(space: &SpaceDescriptor) -> Result<Vec<Rat>> {
    let width = space.gp_dim() + 1;
    // Group integer rows by norm so that only one division per norm is needed.
    let groups: BTreeMap<Rat, Vec<i128>> = space
        .points
        .par_chunks(256)
        .map(|chunk| {
            let mut acc: BTreeMap<Rat, Vec<i128>> = BTreeMap::new();
            for p in chunk {
                let row = space.epsilon_row_int(&p.coords)?;
                let slot = acc.entry(p.value.clone()).or_insert_with(|| vec![0; width]);
                for (s, v) in slot.iter_mut().zip(row) {
                    *s = s.checked_add(v).ok_or(Error::Overflow("epsilon sums"))?;
                }
            }
            Ok(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                let slot = a.entry(k).or_insert_with(|| vec![0; width]);
                for (s, x) in slot.iter_mut().zip(v) {
                    *s = s.checked_add(x).ok_or(Error::Overflow("epsilon sums"))?;
                }
            }
            Ok(a)
        })?;
    let scales = space.scaled_basis();
    let mut out = vec![Rat::zero(); width];
    for (value, sums) in groups {
        for (j, s) in sums.into_iter().enumerate() {
            if s != 0 {
                out[j] += Rat::new(BigInt::from(s), scales[j].scale.clone()) / &value;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EutaxyVerdict {
    pub eutactic: bool,
    pub strongly_eutactic: bool,
    /// Positive weights per point summing to 1 with sum_x w_x eps_x = tau.
    #[serde(with = "rat::serde_rat_vec_opt")]
    pub weights: Option<Vec<Rat>>,
    /// Optimal minimum weight; positive exactly when eutactic.
    #[serde(with = "rat::serde_rat")]
    pub margin: Rat,
    /// Coefficients over the gp basis of a direction H with eps_x(H) >= 0
    /// for all x and sum_x eps_x(H) = 1, present when not eutactic.
    #[serde(with = "rat::serde_rat_vec_opt")]
    pub violating_direction: Option<Vec<Rat>>,
}

impl EutaxyVerdict {
    /// Weights for the full antipodal set (each representative's weight split evenly).
    pub fn full_set_weights(&self) -> Option<Vec<Rat>> {
        let half = rat::frac(1, 2);
        self.weights.as_ref().map(|w| w.iter().map(|x| x * &half).collect())
    }
}

pub fn test_eutaxy(space: &SpaceDescriptor) -> Result<EutaxyVerdict> {
    if space.points.is_empty() {
        return Err(Error::Precondition("point set is empty".into()));
    }
    let d = space.gp_dim();
    let k = space.points.len();
    let sums = epsilon_sums(space)?;
    let strongly = sums[..d].iter().all(Zero::is_zero);
    if strongly {
        // Equal weights satisfy the equalities, and sum w = 1 with w >= t forces t <= 1/k.
        let w = Rat::new(BigInt::one(), BigInt::from(k));
        return Ok(EutaxyVerdict {
            eutactic: true,
            strongly_eutactic: true,
            weights: Some(vec![w.clone(); k]),
            margin: w,
            violating_direction: None,
        });
    }
    let eps = epsilon_matrix(space)?;
    // Variables: t, u_1..u_k with w_x = t + u_x.
    let mut a = RatMatrix::zeros(d + 1, k + 1);
    for j in 0..d {
        a[(j, 0)] = sums[j].clone();
        for (x, row) in eps.rows.iter().enumerate() {
            a[(j, x + 1)] = row[j].clone();
        }
    }
    a[(d, 0)] = rat::int(k as i64);
    for x in 0..k {
        a[(d, x + 1)] = Rat::one();
    }
    let mut b = vec![Rat::zero(); d + 1];
    b[d] = Rat::one();
    let mut c = vec![Rat::zero(); k + 1];
    c[0] = Rat::one();
    let (eutactic, weights, margin) = match lp::maximize(&c, &a, &b) {
        LpOutcome::Optimal { x, value } if value.is_positive() => {
            let w = x[1..].iter().map(|u| u + &value).collect();
            (true, Some(w), value)
        }
        LpOutcome::Optimal { value, .. } => (false, None, value),
        LpOutcome::Infeasible => (false, None, Rat::zero()),
        LpOutcome::Unbounded => unreachable!("margin is bounded by 1/|X|"),
    };
    let violating_direction = if eutactic { None } else { violating_direction(&eps, d) };
    Ok(EutaxyVerdict { eutactic, strongly_eutactic: false, weights, margin, violating_direction })
}

/// Finds H in gp with eps_x(H) >= 0 for all x and sum eps_x(H) = 1.
fn violating_direction(eps: &EpsilonMatrix, d: usize) -> Option<Vec<Rat>> {
    let k = eps.rows.len();
    // Variables: c+ (d), c- (d), slack s (k).
    let mut a = RatMatrix::zeros(k + 1, 2 * d + k);
    for (x, row) in eps.rows.iter().enumerate() {
        for j in 0..d {
            a[(x, j)] = row[j].clone();
            a[(x, d + j)] = -row[j].clone();
            a[(k, j)] += &row[j];
            a[(k, d + j)] -= &row[j];
        }
        a[(x, 2 * d + x)] = -Rat::one();
    }
    let mut b = vec![Rat::zero(); k + 1];
    b[k] = Rat::one();
    match lp::maximize(&vec![Rat::zero(); 2 * d + k], &a, &b) {
        LpOutcome::Optimal { x, .. } => Some((0..d).map(|j| &x[j] - &x[d + j]).collect()),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfectionVerdict {
    pub perfect: bool,
    pub weakly_perfect: bool,
    pub rank: usize,
    pub gp_dim: usize,
    /// Basis of {H in span(gp, Id) : Hx = 0 for all x}.
    pub kernel_basis: Vec<SymEndo>,
    /// Basis of the common kernel U when weakly perfect but not perfect.
    #[serde(with = "rat::serde_rat_vec_vec", default, skip_serializing_if = "Vec::is_empty")]
    pub reducible_subspace: Vec<Vec<Rat>>,
}

/// Exact rank of the epsilon family.
pub fn epsilon_rank(space: &SpaceDescriptor) -> Result<usize> {
    let cols = space.gp_dim() + 1;
    let err = RefCell::new(None);
    let rk = certified_rank_kernel(
        cols,
        |sink| {
            for p in &space.points {
                match space.epsilon_row_int(&p.coords) {
                    Ok(row) => {
                        if sink(&row).is_break() {
                            return;
                        }
                    }
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        return;
                    }
                }
            }
        },
        false,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(rk?.rank)
}

/// Basis of {H in span(extended basis) : Hx = 0 for all points x}.
pub fn annihilator(space: &SpaceDescriptor) -> Result<Vec<SymEndo>> {
    let ext = space.extended_basis();
    let cols = ext.len();
    let n = space.ambient_dim();
    let scaled = space.scaled_basis();
    let err = RefCell::new(None);
    let rows = |sink: &mut dyn FnMut(&[i128]) -> ControlFlow<()>| {
        for p in &space.points {
            let images: Option<Vec<Vec<i128>>> = scaled.iter().map(|s| s.apply(&p.coords)).collect();
            let Some(images) = images else {
                err.borrow_mut().get_or_insert(Error::Overflow("annihilator rows"));
                return;
            };
            for i in 0..n {
                let row: Vec<i128> = images.iter().map(|im| im[i]).collect();
                if sink(&row).is_break() {
                    return;
                }
            }
        }
    };
    let rk = certified_rank_kernel(cols, rows, true)?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(rk
        .kernel
        .iter()
        .map(|c| {
            let coeffs: Vec<Rat> = c.iter().zip(scaled).map(|(x, s)| x * Rat::from_integer(s.scale.clone())).collect();
            SymEndo::combination(&primitive(&coeffs), &ext)
        })
        .collect())
}

fn primitive(v: &[Rat]) -> Vec<Rat> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| Rat::from_integer(x / &g)).collect()
}

/// Common kernel of a family of endomorphisms.
pub fn common_kernel(maps: &[SymEndo], n: usize) -> Vec<Vec<Rat>> {
    let rows: Vec<Vec<Rat>> = maps.iter().flat_map(|h| h.matrix().to_rows()).collect();
    if rows.is_empty() {
        return (0..n).map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect()).collect();
    }
    RatMatrix::from_rows(rows).expect("rectangular").kernel()
}

pub fn test_perfection(space: &SpaceDescriptor) -> Result<PerfectionVerdict> {
    if space.points.is_empty() {
        return Err(Error::Precondition("point set is empty".into()));
    }
    let d = space.gp_dim();
    let rank = epsilon_rank(space)?;
    let perfect = rank == d + 1;
    let kernel_basis = if perfect { Vec::new() } else { annihilator(space)? };
    let weakly_perfect = rank + kernel_basis.len() == d + 1;
    let reducible_subspace =
        if weakly_perfect && !perfect { common_kernel(&kernel_basis, space.ambient_dim()) } else { Vec::new() };
    Ok(PerfectionVerdict { perfect, weakly_perfect, rank, gp_dim: d, kernel_basis, reducible_subspace })
}

/// The proper subspace U containing every point when weakly perfect but not perfect.
pub fn reducibility_subspace(verdict: &PerfectionVerdict) -> Result<Vec<Vec<Rat>>> {
    if !verdict.weakly_perfect || verdict.perfect {
        return Err(Error::Precondition("reducible subspace requires weakly perfect and not perfect".into()));
    }
    Ok(verdict.reducible_subspace.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalityClass {
    StrictlyExtreme,
    Extreme,
    NotExtreme,
    Inconclusive,
}

impl ExtremalityClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExtremalityClass::StrictlyExtreme => "strictly_extreme",
            ExtremalityClass::Extreme => "extreme",
            ExtremalityClass::NotExtreme => "not_extreme",
            ExtremalityClass::Inconclusive => "inconclusive",
        }
    }
}

pub const DEFAULT_SUBSET_SEARCH_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    pub subset_search_limit: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { subset_search_limit: DEFAULT_SUBSET_SEARCH_LIMIT }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetSearch {
    /// Whether every nonempty subset of antipodal classes was examined.
    pub exhaustive: bool,
    pub subsets_examined: u64,
    /// Indices (into the point list) of a weakly perfect eutactic subset.
    pub witness: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalityReport {
    pub verdict: ExtremalityClass,
    pub eutaxy: EutaxyVerdict,
    pub perfection: PerfectionVerdict,
    pub subset_search: Option<SubsetSearch>,
}

fn weakly_perfect_and_eutactic(space: &SpaceDescriptor) -> Result<bool> {
    let p = test_perfection(space)?;
    if !p.weakly_perfect {
        return Ok(false);
    }
    Ok(test_eutaxy(space)?.eutactic)
}

/// Classification by the Voronoi characterization on the given point set
/// (normally the minimal vectors).
pub fn classify_extremality(space: &SpaceDescriptor, opts: ClassifyOptions) -> Result<ExtremalityReport> {
    let eutaxy = test_eutaxy(space)?;
    let perfection = test_perfection(space)?;
    if eutaxy.eutactic && perfection.perfect {
        return Ok(ExtremalityReport { verdict: ExtremalityClass::StrictlyExtreme, eutaxy, perfection, subset_search: None });
    }
    if eutaxy.eutactic && perfection.weakly_perfect {
        return Ok(ExtremalityReport { verdict: ExtremalityClass::Extreme, eutaxy, perfection, subset_search: None });
    }
    let k = space.points.len();
    if k > opts.subset_search_limit || k >= 63 {
        let search = SubsetSearch { exhaustive: false, subsets_examined: 1, witness: None };
        return Ok(ExtremalityReport { verdict: ExtremalityClass::Inconclusive, eutaxy, perfection, subset_search: Some(search) });
    }
    let full: u64 = (1u64 << k) - 1;
    let masks: Vec<u64> = (1..full).collect();
    let found = masks
        .par_iter()
        .map(|&mask| {
            let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            let pts: Vec<Point> = idx.iter().map(|&i| space.points[i].clone()).collect();
            Ok(if weakly_perfect_and_eutactic(&space.with_points(pts))? { Some(idx) } else { None })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .next();
    let verdict = if found.is_some() { ExtremalityClass::Extreme } else { ExtremalityClass::NotExtreme };
    let search = SubsetSearch { exhaustive: true, subsets_examined: full, witness: found };
    Ok(ExtremalityReport { verdict, eutaxy, perfection, subset_search: Some(search) })
}

/// Re-checks a eutaxy verdict through direct matrix evaluation of epsilon.
pub fn verify_eutaxy(space: &SpaceDescriptor, v: &EutaxyVerdict) -> Result<bool> {
    let ext = space.extended_basis();
    let tau = space.tau();
    if v.eutactic {
        let Some(w) = &v.weights else { return Ok(false) };
        if w.len() != space.points.len() || !v.margin.is_positive() {
            return Ok(false);
        }
        if w.iter().any(|x| x < &v.margin) || w.iter().sum::<Rat>() != Rat::one() {
            return Ok(false);
        }
        for (b, t) in ext.iter().zip(&tau) {
            let mut s = Rat::zero();
            for (p, wx) in space.points.iter().zip(w) {
                s += wx * space.epsilon(p, b)?;
            }
            if &s != t {
                return Ok(false);
            }
        }
    } else {
        if v.weights.is_some() || v.margin.is_positive() {
            return Ok(false);
        }
        if let Some(c) = &v.violating_direction {
            let h = SymEndo::combination(c, &space.gp_basis);
            let mut total = Rat::zero();
            for p in &space.points {
                let e = space.epsilon(p, &h)?;
                if e.is_negative() {
                    return Ok(false);
                }
                total += e;
            }
            if total != Rat::one() {
                return Ok(false);
            }
        }
    }
    if v.strongly_eutactic {
        for b in &space.gp_basis {
            let mut s = Rat::zero();
            for p in &space.points {
                s += space.epsilon(p, b)?;
            }
            if !s.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Re-checks a perfection verdict with exact rational elimination.
pub fn verify_perfection(space: &SpaceDescriptor, v: &PerfectionVerdict) -> Result<bool> {
    let ext = space.extended_basis();
    let d = space.gp_dim();
    let mut ech = EchelonBasis::new(d + 1);
    for p in &space.points {
        if ech.rank() == d + 1 {
            break;
        }
        let row: Vec<Rat> = ext.iter().map(|b| space.epsilon(p, b)).collect::<Result<_>>()?;
        ech.insert(&row);
    }
    if ech.rank() != v.rank || v.gp_dim != d || v.perfect != (v.rank == d + 1) {
        return Ok(false);
    }
    let mut kern = EchelonBasis::new(space.ambient_dim().pow(2));
    for h in &v.kernel_basis {
        for p in &space.points {
            if h.matrix().mul_vec(&p.rat_coords())?.iter().any(|x| !x.is_zero()) {
                return Ok(false);
            }
        }
        if !kern.insert(h.matrix().entries()) {
            return Ok(false);
        }
    }
    if v.weakly_perfect != (v.rank + v.kernel_basis.len() == d + 1) {
        return Ok(false);
    }
    // Every kernel element lies in the span of the extended basis.
    let mut span = EchelonBasis::new(space.ambient_dim().pow(2));
    for b in &ext {
        span.insert(b.matrix().entries());
    }
    if v.kernel_basis.iter().any(|h| !span.contains(h.matrix().entries())) {
        return Ok(false);
    }
    if v.weakly_perfect && !v.perfect {
        for u in &v.reducible_subspace {
            for h in &v.kernel_basis {
                if h.matrix().mul_vec(u)?.iter().any(|x| !x.is_zero()) {
                    return Ok(false);
                }
            }
        }
        if v.reducible_subspace.len() >= space.ambient_dim() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::enumerate::{self, EnumOptions, Layer};
    use crate::form::QForm;
    use crate::rat::int;
    use crate::spaces::{self, classic_space, classic_space_from_layer};

    fn min_space(q: &QForm) -> SpaceDescriptor {
        classic_space_from_layer(q, &enumerate::minimal_vectors(q).unwrap()).unwrap()
    }

    #[test]
    fn epsilon_matrix_identity_column() {
        let s = min_space(&catalog::an(2).form);
        let e = epsilon_matrix(&s).unwrap();
        assert!(e.identity_column_is_ones());
        assert_eq!(e.rows.len(), 3);
    }

    #[test]
    fn a2_eutaxy_and_perfection() {
        let s = min_space(&catalog::an(2).form);
        let e = test_eutaxy(&s).unwrap();
        assert!(e.eutactic && e.strongly_eutactic);
        assert_eq!(e.weights.as_ref().unwrap(), &vec![rat::frac(1, 3); 3]);
        assert_eq!(e.full_set_weights().unwrap(), vec![rat::frac(1, 6); 3]);
        assert!(verify_eutaxy(&s, &e).unwrap());
        let p = test_perfection(&s).unwrap();
        assert!(p.perfect && p.weakly_perfect);
        assert_eq!(p.rank, 3);
        assert!(verify_perfection(&s, &p).unwrap());
        assert_eq!(classify_extremality(&s, ClassifyOptions::default()).unwrap().verdict, ExtremalityClass::StrictlyExtreme);
    }

    #[test]
    fn z2_is_not_extreme() {
        let s = min_space(&QForm::identity(2));
        let r = classify_extremality(&s, ClassifyOptions::default()).unwrap();
        assert!(r.eutaxy.strongly_eutactic);
        assert_eq!(r.perfection.rank, 2);
        assert!(r.perfection.kernel_basis.is_empty());
        assert!(!r.perfection.weakly_perfect);
        assert_eq!(r.verdict, ExtremalityClass::NotExtreme);
        let search = r.subset_search.unwrap();
        assert!(search.exhaustive);
        assert_eq!(search.subsets_examined, 3);
        let r = classify_extremality(&s, ClassifyOptions { subset_search_limit: 1 }).unwrap();
        assert_eq!(r.verdict, ExtremalityClass::Inconclusive);
    }

    #[test]
    fn single_axis_is_not_eutactic() {
        let q = QForm::identity(2);
        let s = classic_space(&q, vec![Point::new(&q, vec![1, 0]).unwrap()]).unwrap();
        let e = test_eutaxy(&s).unwrap();
        assert!(!e.eutactic);
        assert!(e.weights.is_none());
        assert!(e.violating_direction.is_some());
        assert!(verify_eutaxy(&s, &e).unwrap());
    }

    #[test]
    fn generic_lp_path() {
        // A non-strongly eutactic but eutactic set: three lines in the plane with unequal angles.
        let q = QForm::identity(2);
        let pts: Vec<Point> = [[1, 0], [0, 1], [1, 1], [1, -2]].iter().map(|c| Point::new(&q, c.to_vec()).unwrap()).collect();
        let s = classic_space(&q, pts).unwrap();
        let e = test_eutaxy(&s).unwrap();
        assert!(!e.strongly_eutactic);
        assert!(e.eutactic);
        assert!(verify_eutaxy(&s, &e).unwrap());
    }

    #[test]
    fn weakly_perfect_duality_example() {
        let q = catalog::an(2).form;
        let min = enumerate::minimal_vectors(&q).unwrap();
        let empty = Layer { radius: int(1), vectors: vec![] };
        let s = spaces::duality_product_from_layers(&q, &min, &empty).unwrap();
        let p = test_perfection(&s).unwrap();
        assert!(p.weakly_perfect && !p.perfect);
        assert_eq!(p.kernel_basis.len(), 1);
        let k = p.kernel_basis[0].matrix();
        for i in 0..4 {
            for j in 0..4 {
                let expected = i == j && i >= 2;
                assert_eq!(!k[(i, j)].is_zero(), expected);
            }
        }
        let u = reducibility_subspace(&p).unwrap();
        assert_eq!(u.len(), 2);
        for v in &u {
            assert!(v[2].is_zero() && v[3].is_zero());
        }
        assert!(verify_perfection(&s, &p).unwrap());
        let perfect = test_perfection(&min_space(&q)).unwrap();
        assert!(reducibility_subspace(&perfect).is_err());
    }

    #[test]
    fn dual_product_of_a2_is_strictly_extreme() {
        let s = spaces::duality_product_space(&catalog::an(2).form, EnumOptions::default()).unwrap();
        let r = classify_extremality(&s, ClassifyOptions::default()).unwrap();
        assert_eq!(r.verdict, ExtremalityClass::StrictlyExtreme);
    }

    #[test]
    fn verdict_json_roundtrip() {
        let s = min_space(&QForm::identity(2));
        let r = classify_extremality(&s, ClassifyOptions::default()).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: ExtremalityReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
