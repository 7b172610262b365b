//! Lattice vectors of bounded norm, grouped into layers.
//!
//! The search is Fincke–Pohst on a floating Cholesky factor with an inflated
//! bound; every leaf is re-evaluated exactly in integer arithmetic before it
//! is kept. Only one vector per antipodal pair is reported.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::QForm;
use crate::rat::{self, JsonRat, Rat};

/// Default limit on search-tree nodes.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Default limit on the number of box points visited by the oracle.
pub const ORACLE_BOX_LIMIT: u64 = 50_000_000;

const BOUND_INFLATION: f64 = 1e-9;

/// Nonzero integer coordinate vector.
pub type IntVector = Vec<i64>;

/// All lattice vectors of one norm, one per antipodal pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub radius: Rat,
    pub vectors: Vec<IntVector>,
}

impl Layer {
    /// Number of lattice vectors in the layer (both signs).
    pub fn count(&self) -> usize {
        2 * self.vectors.len()
    }

    /// Representatives followed by their negatives.
    pub fn full_set(&self) -> Vec<IntVector> {
        let mut out = self.vectors.clone();
        out.extend(self.vectors.iter().map(|v| v.iter().map(|x| -x).collect::<Vec<_>>()));
        out
    }
}

/// Enumeration settings.
#[derive(Clone, Copy, Debug)]
pub struct EnumOptions {
    pub node_budget: u64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { node_budget: DEFAULT_NODE_BUDGET }
    }
}

/// Flips the sign so that the first nonzero coordinate is positive.
pub fn canonical(mut v: IntVector) -> IntVector {
    if let Some(&f) = v.iter().find(|&&x| x != 0) {
        if f < 0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
    v
}

struct Cholesky {
    n: usize,
    d: Vec<f64>,
    mu: Vec<f64>,
}

impl Cholesky {
    fn new(q: &QForm) -> Self {
        let n = q.dim();
        let g = q.gram_f64();
        let mut d = vec![0.0; n];
        let mut mu = vec![0.0; n * n];
        for i in 0..n {
            let mut di = g[(i, i)];
            for k in 0..i {
                di -= d[k] * mu[k * n + i] * mu[k * n + i];
            }
            d[i] = di;
            for j in i + 1..n {
                let mut s = g[(i, j)];
                for k in 0..i {
                    s -= d[k] * mu[k * n + i] * mu[k * n + j];
                }
                mu[i * n + j] = s / di;
            }
        }
        Cholesky { n, d, mu }
    }
}

/// Exact comparison `numer / denom <= bound` for an integer-scaled norm.
struct ExactBound {
    p: BigInt,
    q: BigInt,
    small: Option<(i128, i128)>,
    denom: i128,
}

impl ExactBound {
    fn new(bound: &Rat, denom: i128) -> Self {
        let p = bound.numer().clone();
        let q = bound.denom().clone();
        let small = match (p.to_i128(), q.to_i128()) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        ExactBound { p, q, small, denom }
    }

    fn admits(&self, numer: i128) -> bool {
        if let Some((p, q)) = self.small {
            if let (Some(l), Some(r)) = (numer.checked_mul(q), p.checked_mul(self.denom)) {
                return l <= r;
            }
        }
        BigInt::from(numer) * &self.q <= &self.p * BigInt::from(self.denom)
    }
}

struct Search<'a> {
    q: &'a QForm,
    chol: Cholesky,
    limit: f64,
    exact: ExactBound,
    nodes: &'a AtomicU64,
    budget: u64,
}

const FLUSH: u64 = 1 << 12;

impl Search<'_> {
    fn charge(&self, local: &mut u64) -> Result<()> {
        *local += 1;
        if *local >= FLUSH {
            let total = self.nodes.fetch_add(*local, Ordering::Relaxed) + *local;
            *local = 0;
            if total > self.budget {
                return Err(budget_error(self.budget));
            }
        }
        Ok(())
    }

    fn finish(&self, local: u64) -> Result<()> {
        let total = self.nodes.fetch_add(local, Ordering::Relaxed) + local;
        if total > self.budget {
            return Err(budget_error(self.budget));
        }
        Ok(())
    }

    /// Range of admissible values at `level` given fixed higher coordinates.
    fn range(&self, level: usize, x: &[i64], used: f64, higher_zero: bool) -> Option<(i64, i64, f64)> {
        let n = self.chol.n;
        let rem = self.limit - used;
        if rem < 0.0 {
            return None;
        }
        let mut c = 0.0;
        for j in level + 1..n {
            c -= self.chol.mu[level * n + j] * x[j] as f64;
        }
        let w = (rem / self.chol.d[level]).sqrt();
        let mut lo = (c - w).ceil() as i64;
        let hi = (c + w).floor() as i64;
        if higher_zero {
            lo = lo.max(if level == 0 { 1 } else { 0 });
        }
        if lo > hi {
            return None;
        }
        Some((lo, hi, c))
    }

    fn descend<A>(
        &self,
        level: usize,
        x: &mut [i64],
        used: f64,
        higher_zero: bool,
        acc: &mut A,
        visit: &(impl Fn(&mut A, &[i64], i128) + Sync),
        local: &mut u64,
    ) -> Result<()> {
        let Some((lo, hi, c)) = self.range(level, x, used, higher_zero) else {
            return Ok(());
        };
        let d = self.chol.d[level];
        for v in lo..=hi {
            self.charge(local)?;
            x[level] = v;
            let t = v as f64 - c;
            let u = used + d * t * t;
            if u > self.limit {
                continue;
            }
            if level == 0 {
                self.leaf(x, acc, visit)?;
            } else {
                self.descend(level - 1, x, u, higher_zero && v == 0, acc, visit, local)?;
            }
        }
        x[level] = 0;
        Ok(())
    }

    fn leaf<A>(&self, x: &[i64], acc: &mut A, visit: &(impl Fn(&mut A, &[i64], i128) + Sync)) -> Result<()> {
        let numer = self.q.int_gram().eval_numer(x).ok_or(Error::Overflow("lattice vector norm"))?;
        if self.exact.admits(numer) {
            visit(acc, x, numer);
        }
        Ok(())
    }

    /// Prefixes of the top `depth` coordinates, with their partial sums.
    fn prefixes(&self, depth: usize, local: &mut u64) -> Result<Vec<(Vec<i64>, f64, bool)>> {
        let n = self.chol.n;
        let mut frontier = vec![(vec![0i64; n], 0.0f64, true)];
        for level in (n - depth..n).rev() {
            let mut next = Vec::new();
            for (x, used, hz) in &frontier {
                if let Some((lo, hi, c)) = self.range(level, x, *used, *hz) {
                    for v in lo..=hi {
                        self.charge(local)?;
                        let t = v as f64 - c;
                        let u = used + self.chol.d[level] * t * t;
                        if u > self.limit {
                            continue;
                        }
                        let mut y = x.clone();
                        y[level] = v;
                        next.push((y, u, *hz && v == 0));
                    }
                }
            }
            frontier = next;
        }
        Ok(frontier)
    }
}

fn budget_error(budget: u64) -> Error {
    Error::Resource(format!("enumeration exceeded the node budget of {budget} search nodes"))
}

/// Runs the search, feeding every admissible representative (last nonzero
/// coordinate positive) to `visit` along with its integer-scaled norm.
fn run<A, I, V>(q: &QForm, bound: &Rat, opts: EnumOptions, init: I, visit: V) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[i64], i128) + Sync,
{
    if !bound.is_positive() {
        return Err(Error::InvalidArgument("enumeration bound must be positive".into()));
    }
    let n = q.dim();
    let b = rat::to_f64(bound);
    let search = Search {
        q,
        chol: Cholesky::new(q),
        limit: b * (1.0 + BOUND_INFLATION) + f64::EPSILON,
        exact: ExactBound::new(bound, q.int_gram().denom),
        nodes: &AtomicU64::new(0),
        budget: opts.node_budget,
    };
    let depth = n.min(2).min(n - 1);
    let mut local = 0u64;
    if depth == 0 {
        let mut acc = init();
        let mut x = vec![0i64; n];
        search.descend(n - 1, &mut x, 0.0, true, &mut acc, &visit, &mut local)?;
        search.finish(local)?;
        return Ok(vec![acc]);
    }
    let prefixes = search.prefixes(depth, &mut local)?;
    search.finish(local)?;
    let level = n - depth;
    prefixes
        .into_par_iter()
        .map(|(mut x, used, hz)| {
            let mut acc = init();
            let mut local = 0u64;
            if level == 0 {
                if !hz || x[0] != 0 {
                    search.leaf(&x, &mut acc, &visit)?;
                }
            } else {
                search.descend(level - 1, &mut x, used, hz, &mut acc, &visit, &mut local)?;
            }
            search.finish(local)?;
            Ok(acc)
        })
        .collect()
}

fn to_layers(q: &QForm, groups: BTreeMap<i128, Vec<IntVector>>) -> Vec<Layer> {
    let denom = q.int_gram().denom;
    groups
        .into_iter()
        .map(|(numer, mut vectors)| {
            vectors.sort();
            Layer { radius: rat::frac_i128(numer, denom), vectors }
        })
        .collect()
}

/// All layers of radius at most `bound`, sorted by radius.
pub fn vectors_up_to(q: &QForm, bound: &Rat) -> Result<Vec<Layer>> {
    vectors_up_to_with(q, bound, EnumOptions::default())
}

pub fn vectors_up_to_with(q: &QForm, bound: &Rat, opts: EnumOptions) -> Result<Vec<Layer>> {
    let parts = run(q, bound, opts, BTreeMap::<i128, Vec<IntVector>>::new, |acc, x, numer| {
        acc.entry(numer).or_default().push(canonical(x.to_vec()));
    })?;
    let mut groups: BTreeMap<i128, Vec<IntVector>> = BTreeMap::new();
    for part in parts {
        for (k, mut v) in part {
            groups.entry(k).or_default().append(&mut v);
        }
    }
    Ok(to_layers(q, groups))
}

/// Number of lattice vectors (both signs) on each layer up to `bound`,
/// without storing the vectors.
pub fn shell_counts(q: &QForm, bound: &Rat, opts: EnumOptions) -> Result<Vec<(Rat, u64)>> {
    let parts = run(q, bound, opts, BTreeMap::<i128, u64>::new, |acc, _x, numer| {
        *acc.entry(numer).or_default() += 2;
    })?;
    let mut total: BTreeMap<i128, u64> = BTreeMap::new();
    for part in parts {
        for (k, c) in part {
            *total.entry(k).or_default() += c;
        }
    }
    let denom = q.int_gram().denom;
    Ok(total.into_iter().map(|(k, c)| (rat::frac_i128(k, denom), c)).collect())
}

/// A bound guaranteed to reach the minimum: the smallest diagonal Gram entry.
fn diagonal_bound(q: &QForm) -> Rat {
    (0..q.dim()).map(|i| q.gram()[(i, i)].clone()).min().expect("positive dimension")
}

/// The nonempty layer of smallest radius.
pub fn minimal_vectors(q: &QForm) -> Result<Layer> {
    minimal_vectors_with(q, EnumOptions::default())
}

pub fn minimal_vectors_with(q: &QForm, opts: EnumOptions) -> Result<Layer> {
    let layers = vectors_up_to_with(q, &diagonal_bound(q), opts)?;
    Ok(layers.into_iter().next().expect("basis vectors lie within the diagonal bound"))
}

/// Minimum of the form on nonzero lattice vectors.
pub fn minimum(q: &QForm) -> Result<Rat> {
    Ok(minimal_vectors(q)?.radius)
}

/// Exhaustive search over the box |x_i| <= sqrt(bound * (G^-1)_ii), which
/// contains every vector of norm at most `bound`. Intended as a test oracle.
pub fn brute_force_oracle(q: &QForm, bound: &Rat) -> Result<Vec<Layer>> {
    brute_force_oracle_with_limit(q, bound, ORACLE_BOX_LIMIT)
}

pub fn brute_force_oracle_with_limit(q: &QForm, bound: &Rat, box_limit: u64) -> Result<Vec<Layer>> {
    let n = q.dim();
    if n > 16 {
        return Err(Error::Resource(format!("oracle dimension {n} too large")));
    }
    if !bound.is_positive() {
        return Err(Error::InvalidArgument("enumeration bound must be positive".into()));
    }
    let inv = q.gram().inverse()?;
    let mut radii = Vec::with_capacity(n);
    let mut size: u64 = 1;
    for i in 0..n {
        let r = rat::isqrt_floor(&(bound * &inv[(i, i)]));
        let r = r.to_i64().ok_or(Error::Overflow("oracle box"))?;
        size = size.saturating_mul(2 * r as u64 + 1);
        radii.push(r);
    }
    if size > box_limit {
        return Err(Error::Resource(format!("oracle box has {size} points, limit {box_limit}")));
    }
    let exact = ExactBound::new(bound, q.int_gram().denom);
    let mut groups: BTreeMap<i128, Vec<IntVector>> = BTreeMap::new();
    let mut x: Vec<i64> = radii.iter().map(|r| -r).collect();
    loop {
        if let Some(&f) = x.iter().find(|&&v| v != 0) {
            if f > 0 {
                let numer = q.int_gram().eval_numer(&x).ok_or(Error::Overflow("lattice vector norm"))?;
                if exact.admits(numer) {
                    groups.entry(numer).or_default().push(x.clone());
                }
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(to_layers(q, groups));
            }
            i -= 1;
            if x[i] < radii[i] {
                x[i] += 1;
                break;
            }
            x[i] = -radii[i];
        }
    }
}

/// Layer list in the interchange format
/// `{"radii": [...], "counts": [...], "vectors": {"<r>": [[...], ...]}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayersJson {
    pub radii: Vec<JsonRat>,
    pub counts: Vec<u64>,
    pub vectors: BTreeMap<String, Vec<IntVector>>,
}

impl LayersJson {
    pub fn from_layers(layers: &[Layer]) -> Self {
        LayersJson {
            radii: layers.iter().map(|l| JsonRat(l.radius.clone())).collect(),
            counts: layers.iter().map(|l| l.count() as u64).collect(),
            vectors: layers.iter().map(|l| (rat::format(&l.radius), l.vectors.clone())).collect(),
        }
    }

    /// Rebuilds layers and checks that every stored vector has the stated norm.
    pub fn to_layers(&self, q: &QForm) -> Result<Vec<Layer>> {
        if self.radii.len() != self.counts.len() {
            return Err(Error::Parse("radii and counts differ in length".into()));
        }
        let mut out = Vec::new();
        for (r, &c) in self.radii.iter().zip(&self.counts) {
            let key = rat::format(&r.0);
            let vectors = self.vectors.get(&key).cloned().ok_or_else(|| Error::Parse(format!("no vectors for radius {key}")))?;
            if vectors.len() as u64 * 2 != c {
                return Err(Error::Parse(format!("count mismatch at radius {key}")));
            }
            for v in &vectors {
                if q.eval_int(v)? != r.0 {
                    return Err(Error::Parse(format!("vector {v:?} does not have norm {key}")));
                }
            }
            out.push(Layer { radius: r.0.clone(), vectors });
        }
        Ok(out)
    }
}

/// Checks that every vector of a layer has the layer's norm.
pub fn layer_values_exact(q: &QForm, layer: &Layer) -> Result<bool> {
    for v in &layer.vectors {
        if q.eval_int(v)? != layer.radius {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Integer vector as a rational vector.
pub fn to_rat_vec(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| rat::int(x)).collect()
}

/// Theta-series prefix: (radius, count) pairs from a layer list.
pub fn theta_prefix(layers: &[Layer]) -> Vec<(Rat, usize)> {
    layers.iter().map(|l| (l.radius.clone(), l.count())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::int;

    fn a2() -> QForm {
        QForm::from_i64(&[vec![2, 1], vec![1, 2]]).unwrap()
    }

    #[test]
    fn identity_minimal_layer() {
        let layers = vectors_up_to(&QForm::identity(2), &int(1)).unwrap();
        assert_eq!(layers.len(), 1);
        assert_eq!(layers[0].radius, int(1));
        assert_eq!(layers[0].count(), 4);
        assert_eq!(layers[0].vectors, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn a2_layers() {
        let layers = vectors_up_to(&a2(), &int(14)).unwrap();
        let radii: Vec<Rat> = layers.iter().map(|l| l.radius.clone()).collect();
        assert_eq!(radii, vec![int(2), int(6), int(8), int(14)]);
        let counts: Vec<usize> = layers.iter().map(Layer::count).collect();
        assert_eq!(counts, vec![6, 6, 6, 12]);
        assert_eq!(layers, brute_force_oracle(&a2(), &int(14)).unwrap());
    }

    #[test]
    fn canonical_signs_and_order() {
        let layers = vectors_up_to(&a2(), &int(8)).unwrap();
        for l in &layers {
            for v in &l.vectors {
                assert!(*v.iter().find(|&&x| x != 0).unwrap() > 0);
            }
            let mut sorted = l.vectors.clone();
            sorted.sort();
            assert_eq!(sorted, l.vectors);
        }
    }

    #[test]
    fn rational_gram() {
        let q = QForm::new(
            crate::linalg::RatMatrix::from_rows(vec![vec![int(1), rat::frac(1, 2)], vec![rat::frac(1, 2), int(1)]]).unwrap(),
        )
        .unwrap();
        let m = minimal_vectors(&q).unwrap();
        assert_eq!(m.radius, int(1));
        assert_eq!(m.count(), 6);
    }

    #[test]
    fn budget_exceeded_is_an_error() {
        let err = vectors_up_to_with(&QForm::identity(4), &int(50), EnumOptions { node_budget: 100 }).unwrap_err();
        assert!(err.is_resource());
    }

    #[test]
    fn shell_counts_match_layers() {
        let q = QForm::identity(3);
        let layers = vectors_up_to(&q, &int(9)).unwrap();
        let counts = shell_counts(&q, &int(9), EnumOptions::default()).unwrap();
        assert_eq!(counts.len(), layers.len());
        for ((r, c), l) in counts.iter().zip(&layers) {
            assert_eq!(*r, l.radius);
            assert_eq!(*c as usize, l.count());
        }
    }

    #[test]
    fn one_dimensional() {
        let q = QForm::from_i64(&[vec![3]]).unwrap();
        let layers = vectors_up_to(&q, &int(12)).unwrap();
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[1].radius, int(12));
        assert_eq!(layers[1].vectors, vec![vec![2]]);
    }

    #[test]
    fn json_roundtrip() {
        let layers = vectors_up_to(&a2(), &int(8)).unwrap();
        let j = LayersJson::from_layers(&layers);
        let text = serde_json::to_string(&j).unwrap();
        let back: LayersJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_layers(&a2()).unwrap(), layers);
    }

    #[test]
    fn nonpositive_bound_rejected() {
        assert!(vectors_up_to(&a2(), &int(0)).is_err());
    }
}
