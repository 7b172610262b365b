//! Design (cubature) tests on finite point sets.
//!
//! Exact tests run in the classic space through second and fourth moment
//! tensors. Other spaces are handled statistically by Haar sampling.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::{self, EnumOptions};
use crate::error::{Error, Result};
use crate::form::{QForm, SymEndo};
use crate::linalg::{EchelonBasis, RatMatrix};
use crate::rat::{self, Rat};
use crate::spaces::{self, Point, SpaceDescriptor, SpaceKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strength {
    S2,
    S22,
    S4,
    Four,
}

impl Strength {
    /// Accepts "2", "2,2", "{4}" and "4" (the last meaning a 4-design).
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "2" | "{2}" | "S2" => Ok(Strength::S2),
            "2,2" | "{2,2}" | "22" | "S22" => Ok(Strength::S22),
            "{4}" | "S4" => Ok(Strength::S4),
            "4" | "Four" | "four" => Ok(Strength::Four),
            _ => Err(Error::InvalidArgument(format!("unknown design strength '{s}'"))),
        }
    }

    fn needs_quartic(self) -> bool {
        matches!(self, Strength::S22 | Strength::Four)
    }

    fn needs_pp2(self) -> bool {
        matches!(self, Strength::S4 | Strength::Four)
    }
}

/// Average of x -> Q(x, Hx)/Q(x) over the projective space.
pub fn average_quadratic(h: &SymEndo, n: usize) -> Rat {
    h.trace() / rat::int(n as i64)
}

/// Average of the product of two such functions over the projective space.
pub fn average_quartic(h: &SymEndo, j: &SymEndo, n: usize) -> Rat {
    let hj = h.matrix().mul(j.matrix()).expect("square matrices").trace();
    let n = n as i64;
    (rat::int(2) * hj + h.trace() * j.trace()) / rat::int(n * (n + 2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignVerdict {
    pub strength: Strength,
    pub holds: bool,
    /// Defect sum_x w_x f(x) - <f> for every test function.
    #[serde(with = "residual_map")]
    pub residuals: BTreeMap<String, Rat>,
    #[serde(with = "rat::serde_rat_vec_opt", default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Rat>>,
}

mod residual_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::rat::{JsonRat, Rat};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, Rat>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().map(|(k, v)| (k.clone(), JsonRat(v.clone()))).collect::<BTreeMap<_, _>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Rat>, D::Error> {
        Ok(BTreeMap::<String, JsonRat>::deserialize(d)?.into_iter().map(|(k, v)| (k, v.0)).collect())
    }
}

impl DesignVerdict {
    pub fn nonzero_residuals(&self) -> impl Iterator<Item = (&String, &Rat)> {
        self.residuals.iter().filter(|(_, v)| !v.is_zero())
    }
}

/// Symmetric-pair basis of the quadratic span pp_2 = span{B_i B_j + B_j B_i}
/// over the extended basis. Stops early once all self-adjoint maps are reached.
pub fn pp2_basis(space: &SpaceDescriptor) -> Result<Vec<SymEndo>> {
    let ext = space.extended_basis();
    let n = space.ambient_dim();
    let full = n * (n + 1) / 2;
    let mut ech = EchelonBasis::new(n * n);
    let mut out = Vec::new();
    'outer: for i in 0..ext.len() {
        for j in i..ext.len() {
            let a = ext[i].matrix().mul(ext[j].matrix())?;
            let b = ext[j].matrix().mul(ext[i].matrix())?;
            let m = a.add(&b);
            if ech.insert(m.entries()) {
                out.push(SymEndo::for_form(&space.form, m)?);
                if out.len() == full {
                    break 'outer;
                }
            }
        }
    }
    Ok(out)
}

/// Symmetric moment tensors sum_x w_x x^{(2)}/Q(x) and sum_x w_x x^{(4)}/Q(x)^2,
/// stored densely with all index permutations filled.
struct Moments {
    n: usize,
    m2: Vec<Rat>,
    m4: Option<Vec<Rat>>,
}

fn sorted4(a: usize, b: usize, c: usize, d: usize) -> [usize; 4] {
    let mut t = [a, b, c, d];
    t.sort_unstable();
    t
}

impl Moments {
    fn compute(points: &[Point], weights: &[Rat], n: usize, quartic: bool) -> Result<Self> {
        // Group points sharing norm and weight; accumulate integer sums per group.
        let mut groups: BTreeMap<(Rat, Rat), Vec<usize>> = BTreeMap::new();
        for (i, (p, w)) in points.iter().zip(weights).enumerate() {
            groups.entry((p.value.clone(), w.clone())).or_default().push(i);
        }
        let quads: Vec<[usize; 4]> = if quartic {
            let mut v = Vec::new();
            for a in 0..n {
                for b in a..n {
                    for c in b..n {
                        for d in c..n {
                            v.push([a, b, c, d]);
                        }
                    }
                }
            }
            v
        } else {
            Vec::new()
        };
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
        let mut m2 = vec![Rat::zero(); n * n];
        let mut m4 = if quartic { vec![Rat::zero(); n * n * n * n] } else { Vec::new() };
        let mut m4_packed = vec![Rat::zero(); quads.len()];
        for ((value, weight), idx) in groups {
            let (s2, s4) = idx
                .par_chunks(512)
                .map(|chunk| {
                    let mut s2 = vec![0i128; pairs.len()];
                    let mut s4 = vec![0i128; quads.len()];
                    for &i in chunk {
                        let x: Vec<i128> = points[i].coords.iter().map(|&v| v as i128).collect();
                        for (k, &(a, b)) in pairs.iter().enumerate() {
                            s2[k] = s2[k].checked_add(x[a] * x[b]).ok_or(Error::Overflow("moments"))?;
                        }
                        for (k, q) in quads.iter().enumerate() {
                            let t = x[q[0]] * x[q[1]];
                            if t == 0 {
                                continue;
                            }
                            let u = x[q[2]] * x[q[3]];
                            s4[k] = s4[k].checked_add(t.checked_mul(u).ok_or(Error::Overflow("moments"))?).ok_or(Error::Overflow("moments"))?;
                        }
                    }
                    Ok((s2, s4))
                })
                .try_reduce(
                    || (vec![0i128; pairs.len()], vec![0i128; quads.len()]),
                    |(mut a2, mut a4), (b2, b4)| {
                        for (x, y) in a2.iter_mut().zip(b2) {
                            *x = x.checked_add(y).ok_or(Error::Overflow("moments"))?;
                        }
                        for (x, y) in a4.iter_mut().zip(b4) {
                            *x = x.checked_add(y).ok_or(Error::Overflow("moments"))?;
                        }
                        Ok((a2, a4))
                    },
                )?;
            let f2 = &weight / &value;
            for (k, &(a, b)) in pairs.iter().enumerate() {
                if s2[k] != 0 {
                    let v = &f2 * rat::from_i128(s2[k]);
                    m2[a * n + b] += &v;
                    if a != b {
                        m2[b * n + a] += v;
                    }
                }
            }
            let f4 = &f2 / &value;
            for (k, s) in s4.iter().enumerate() {
                if *s != 0 {
                    m4_packed[k] += &f4 * rat::from_i128(*s);
                }
            }
        }
        if quartic {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let key = sorted4(a, b, c, d);
                            let k = quads.binary_search(&key).expect("sorted index");
                            m4[((a * n + b) * n + c) * n + d] = m4_packed[k].clone();
                        }
                    }
                }
            }
        }
        Ok(Moments { n, m2, m4: quartic.then_some(m4) })
    }

    /// sum_x w_x x^T S x / Q(x).
    fn quadratic(&self, s: &Sparse) -> Rat {
        s.entries.iter().map(|(a, b, v)| v * &self.m2[a * self.n + b]).sum()
    }

    /// sum_x w_x (x^T S x)(x^T T x) / Q(x)^2.
    fn quartic(&self, s: &Sparse, t: &Sparse) -> Rat {
        let m4 = self.m4.as_ref().expect("quartic moments");
        let n = self.n;
        let mut acc = Rat::zero();
        for (a, b, v) in &s.entries {
            for (c, d, w) in &t.entries {
                let m = &m4[((a * n + b) * n + c) * n + d];
                if !m.is_zero() {
                    acc += v * w * m;
                }
            }
        }
        acc
    }
}

/// Nonzero entries of a symmetric matrix.
struct Sparse {
    entries: Vec<(usize, usize, Rat)>,
}

impl Sparse {
    fn new(m: &RatMatrix) -> Self {
        let mut entries = Vec::new();
        for a in 0..m.rows() {
            for b in 0..m.cols() {
                if !m[(a, b)].is_zero() {
                    entries.push((a, b, m[(a, b)].clone()));
                }
            }
        }
        Sparse { entries }
    }
}

fn require_classic(space: &SpaceDescriptor) -> Result<()> {
    if space.kind != SpaceKind::Classic {
        return Err(Error::Unsupported(format!(
            "exact design tests need the classic space (got {}); use monte_carlo_design or the invariance criterion",
            space.kind.as_str()
        )));
    }
    Ok(())
}

fn normalized_weights(space: &SpaceDescriptor, weights: Option<&[Rat]>) -> Result<Vec<Rat>> {
    let k = space.points.len();
    if k == 0 {
        return Err(Error::Precondition("point set is empty".into()));
    }
    match weights {
        None => Ok(vec![Rat::new(BigInt::one(), BigInt::from(k)); k]),
        Some(w) => {
            if w.len() != k {
                return Err(Error::DimensionMismatch { expected: k, found: w.len() });
            }
            if w.iter().any(|x| x <= &Rat::zero()) || w.iter().sum::<Rat>() != Rat::one() {
                return Err(Error::InvalidArgument("weights must be positive and sum to 1".into()));
            }
            Ok(w.to_vec())
        }
    }
}

/// Exact design test in the classic space, optionally weighted.
pub fn test_design(space: &SpaceDescriptor, strength: Strength, weights: Option<&[Rat]>) -> Result<DesignVerdict> {
    require_classic(space)?;
    let w = normalized_weights(space, weights)?;
    let n = space.ambient_dim();
    let g = space.form.gram();
    let ext = space.extended_basis();
    let d = space.gp_dim();
    let sym: Vec<Sparse> = ext.iter().map(|b| g.mul(b.matrix()).map(|m| Sparse::new(&m))).collect::<Result<_>>()?;
    let mom = Moments::compute(&space.points, &w, n, strength.needs_quartic())?;
    let mut residuals = BTreeMap::new();
    if strength == Strength::S2 {
        for (j, s) in sym.iter().enumerate().take(d) {
            residuals.insert(format!("S2[{j}]"), mom.quadratic(s) - average_quadratic(&ext[j], n));
        }
    }
    if strength.needs_quartic() {
        let pairs: Vec<(usize, usize)> = (0..=d).flat_map(|i| (i..=d).map(move |j| (i, j))).collect();
        let vals: Vec<Rat> = pairs
            .par_iter()
            .map(|&(i, j)| mom.quartic(&sym[i], &sym[j]) - average_quartic(&ext[i], &ext[j], n))
            .collect();
        for ((i, j), v) in pairs.into_iter().zip(vals) {
            residuals.insert(format!("S22[{i},{j}]"), v);
        }
    }
    if strength.needs_pp2() {
        for (k, h) in pp2_basis(space)?.iter().enumerate() {
            let s = Sparse::new(&g.mul(h.matrix())?);
            residuals.insert(format!("S4[{k}]"), mom.quadratic(&s) - average_quadratic(h, n));
        }
    }
    let holds = residuals.values().all(Zero::is_zero);
    Ok(DesignVerdict { strength, holds, residuals, weights: weights.map(|w| w.to_vec()) })
}

/// Recomputes the residuals by summing over points directly and compares.
pub fn verify_design(space: &SpaceDescriptor, v: &DesignVerdict) -> Result<bool> {
    require_classic(space)?;
    let w = normalized_weights(space, v.weights.as_deref())?;
    let n = space.ambient_dim();
    let ext = space.extended_basis();
    let d = space.gp_dim();
    let pp2 = if v.strength.needs_pp2() { pp2_basis(space)? } else { Vec::new() };
    // Direct evaluation of x^T (G H) x / Q(x) per point, one integer matrix per H.
    let g = space.form.gram();
    let mats = ext
        .iter()
        .chain(&pp2)
        .map(|h| {
            let m = g.mul(h.matrix())?;
            let l = m.entries().iter().fold(BigInt::one(), |acc, x| num_integer::Integer::lcm(&acc, x.denom()));
            let ints = crate::modular::integer_row(&m.entries().iter().map(|x| x * Rat::from_integer(l.clone())).collect::<Vec<_>>())
                .ok_or(Error::Overflow("design replay"))?;
            Ok((ints, Rat::from_integer(l)))
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<Vec<Rat>> = space
        .points
        .par_iter()
        .map(|p| {
            mats.iter()
                .map(|(m, l)| {
                    let mut acc = 0i128;
                    for a in 0..n {
                        for b in 0..n {
                            let t = m[a * n + b].checked_mul(p.coords[a] as i128 * p.coords[b] as i128);
                            acc = t.and_then(|t| acc.checked_add(t)).ok_or(Error::Overflow("design replay"))?;
                        }
                    }
                    Ok(rat::from_i128(acc) / l / &p.value)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let eps: Vec<Vec<Rat>> = all.iter().map(|r| r[..=d].to_vec()).collect();
    let mut expected = BTreeMap::new();
    if v.strength == Strength::S2 {
        for j in 0..d {
            let s: Rat = eps.iter().zip(&w).map(|(e, wx)| wx * &e[j]).sum();
            expected.insert(format!("S2[{j}]"), s - average_quadratic(&ext[j], n));
        }
    }
    if v.strength.needs_quartic() {
        let sums = pair_sums(&eps, &w)?;
        let mut k = 0;
        for i in 0..=d {
            for j in i..=d {
                expected.insert(format!("S22[{i},{j}]"), sums[k].clone() - average_quartic(&ext[i], &ext[j], n));
                k += 1;
            }
        }
    }
    for (k, h) in pp2.iter().enumerate() {
        let s: Rat = all.iter().zip(&w).map(|(r, wx)| wx * &r[d + 1 + k]).sum();
        expected.insert(format!("S4[{k}]"), s - average_quadratic(h, n));
    }
    Ok(expected == v.residuals && v.holds == v.residuals.values().all(Zero::is_zero))
}

/// sum_x w_x e_i(x) e_j(x) for i <= j. Each row is cleared of denominators
/// and rows sharing a denominator and weight are accumulated in i128.
fn pair_sums(eps: &[Vec<Rat>], w: &[Rat]) -> Result<Vec<Rat>> {
    let width = eps.first().map_or(0, Vec::len);
    let npairs = width * (width + 1) / 2;
    let mut groups: BTreeMap<(BigInt, Rat), Vec<Vec<i128>>> = BTreeMap::new();
    for (row, wx) in eps.iter().zip(w) {
        let l = row.iter().fold(BigInt::one(), |acc, x| num_integer::Integer::lcm(&acc, x.denom()));
        let ints = crate::modular::integer_row(&row.iter().map(|x| x * Rat::from_integer(l.clone())).collect::<Vec<_>>())
            .ok_or(Error::Overflow("design replay"))?;
        groups.entry((l, wx.clone())).or_default().push(ints);
    }
    let mut out = vec![Rat::zero(); npairs];
    for ((l, wx), rows) in groups {
        let acc = rows
            .par_chunks(256)
            .map(|chunk| {
                let mut acc = vec![0i128; npairs];
                for r in chunk {
                    let mut k = 0;
                    for i in 0..width {
                        for j in i..width {
                            let p = r[i].checked_mul(r[j]).ok_or(Error::Overflow("design replay"))?;
                            acc[k] = acc[k].checked_add(p).ok_or(Error::Overflow("design replay"))?;
                            k += 1;
                        }
                    }
                }
                Ok(acc)
            })
            .try_reduce(
                || vec![0i128; npairs],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x = x.checked_add(y).ok_or(Error::Overflow("design replay"))?;
                    }
                    Ok(a)
                },
            )?;
        let f = wx / Rat::from_integer(&l * &l);
        for (o, a) in out.iter_mut().zip(acc) {
            if a != 0 {
                *o += &f * rat::from_i128(a);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDesign {
    #[serde(with = "rat::serde_rat")]
    pub radius: Rat,
    pub count: usize,
    pub verdict: DesignVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayersDesignReport {
    pub layers: Vec<LayerDesign>,
    pub all_hold: bool,
}

/// Design test on every layer up to `bound`.
pub fn test_layers_design(q: &QForm, bound: &Rat, strength: Strength, opts: EnumOptions) -> Result<LayersDesignReport> {
    let layers = enumerate::vectors_up_to_with(q, bound, opts)?;
    let gp = spaces::classic_gp_basis(q.gram())?;
    let mut out = Vec::new();
    for l in &layers {
        let space = SpaceDescriptor::new(
            format!("{} layer {}", q.name().unwrap_or("form"), rat::format(&l.radius)),
            SpaceKind::Classic,
            q.clone(),
            gp.clone(),
            SpaceDescriptor::points_from_layer(l),
        )?;
        out.push(LayerDesign { radius: l.radius.clone(), count: l.count(), verdict: test_design(&space, strength, None)? });
    }
    let all_hold = out.iter().all(|l| l.verdict.holds);
    Ok(LayersDesignReport { layers: out, all_hold })
}

/// Maximum number of Monte Carlo samples.
pub const SAMPLE_BUDGET: u64 = 10_000_000;

const CHUNK: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResidual {
    pub key: String,
    pub design_value: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McVerdict {
    pub strength: Strength,
    pub samples: u64,
    pub seed: u64,
    /// True when every residual is within three standard errors.
    pub consistent: bool,
    pub residuals: Vec<McResidual>,
}

/// Test functions as products of at most two linear functionals eps(B).
struct McFunctions {
    keys: Vec<String>,
    factors: Vec<(usize, Option<usize>)>,
    mats: Vec<DMatrix<f64>>,
}

fn mc_functions(space: &SpaceDescriptor, strength: Strength) -> Result<McFunctions> {
    let g = space.form.gram();
    let ext = space.extended_basis();
    let d = space.gp_dim();
    let mut mats: Vec<DMatrix<f64>> = Vec::new();
    let to_f = |m: &RatMatrix| DMatrix::from_fn(m.rows(), m.cols(), |i, j| rat::to_f64(&m[(i, j)]));
    for b in &ext {
        mats.push(to_f(&g.mul(b.matrix())?));
    }
    let mut keys = Vec::new();
    let mut factors = Vec::new();
    if strength == Strength::S2 {
        for j in 0..d {
            keys.push(format!("S2[{j}]"));
            factors.push((j, None));
        }
    }
    if strength.needs_quartic() {
        for i in 0..=d {
            for j in i..=d {
                keys.push(format!("S22[{i},{j}]"));
                factors.push((i, Some(j)));
            }
        }
    }
    if strength.needs_pp2() {
        for (k, h) in pp2_basis(space)?.iter().enumerate() {
            keys.push(format!("S4[{k}]"));
            factors.push((mats.len(), None));
            mats.push(to_f(&g.mul(h.matrix())?));
        }
    }
    Ok(McFunctions { keys, factors, mats })
}

fn quad_f(m: &DMatrix<f64>, p: &[f64]) -> f64 {
    let n = p.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut t = 0.0;
        for j in 0..n {
            t += m[(i, j)] * p[j];
        }
        acc += p[i] * t;
    }
    acc
}

/// Haar-random frame: the first m columns of Q from the QR factorization of
/// a Gaussian matrix, with the signs of R's diagonal made positive.
fn haar_frame(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q.columns(0, m).into_owned()
}

/// Statistical design test for any space whose points are Plücker
/// coordinates of m-planes (m = space.m) in the base form.
pub fn monte_carlo_design(base: &QForm, space: &SpaceDescriptor, strength: Strength, samples: u64, seed: u64) -> Result<McVerdict> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    if samples > SAMPLE_BUDGET {
        return Err(Error::Resource(format!("{samples} samples exceed the budget of {SAMPLE_BUDGET}")));
    }
    let n = base.dim();
    let m = space.m;
    let subsets = spaces::subsets(n, m);
    if subsets.len() != space.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: subsets.len(), found: space.ambient_dim() });
    }
    let funcs = mc_functions(space, strength)?;
    let nf = funcs.keys.len();
    let wedge_gram = DMatrix::from_fn(space.ambient_dim(), space.ambient_dim(), |i, j| rat::to_f64(&space.form.gram()[(i, j)]));
    // Map Q-orthonormal coordinates to lattice coordinates: x = L^{-T} y with G = L L^T.
    let chol = base.gram_f64().cholesky().ok_or_else(|| Error::Precondition("form is not positive definite".into()))?;
    let lt_inv = chol.l().transpose().try_inverse().expect("triangular factor is invertible");

    let eval = |p: &[f64]| -> Vec<f64> {
        let norm = quad_f(&wedge_gram, p);
        let lin: Vec<f64> = funcs.mats.iter().map(|mat| quad_f(mat, p) / norm).collect();
        funcs.factors.iter().map(|&(i, j)| lin[i] * j.map_or(1.0, |j| lin[j])).collect()
    };
    let plucker = |x: &DMatrix<f64>| -> Vec<f64> {
        subsets
            .iter()
            .map(|set| DMatrix::from_fn(m, m, |r, c| x[(set[c], r)]).determinant())
            .collect()
    };

    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut sum = vec![0.0; nf];
            let mut sq = vec![0.0; nf];
            for _ in 0..count {
                let y = haar_frame(&mut rng, n, m);
                let x = &lt_inv * y;
                let p = plucker(&x);
                for (k, v) in eval(&p).into_iter().enumerate() {
                    sum[k] += v;
                    sq[k] += v * v;
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; nf];
    let mut sq = vec![0.0; nf];
    for (s, q) in parts {
        for k in 0..nf {
            sum[k] += s[k];
            sq[k] += q[k];
        }
    }

    // Design side: exact weighted averages over the point set, as floats.
    let k = space.points.len() as f64;
    let mut design = vec![0.0; nf];
    for p in &space.points {
        let coords: Vec<f64> = p.coords.iter().map(|&v| v as f64).collect();
        for (i, v) in eval(&coords).into_iter().enumerate() {
            design[i] += v / k;
        }
    }

    let nsamp = samples as f64;
    let mut residuals = Vec::with_capacity(nf);
    for i in 0..nf {
        let mean = sum[i] / nsamp;
        let var = ((sq[i] / nsamp - mean * mean) * nsamp / (nsamp - 1.0).max(1.0)).max(0.0);
        let se = (var / nsamp).sqrt();
        let diff = (design[i] - mean).abs();
        let consistent = diff <= 3.0 * se + 1e-12;
        residuals.push(McResidual { key: funcs.keys[i].clone(), design_value: design[i], estimate: mean, std_error: se, consistent });
    }
    let consistent = residuals.iter().all(|r| r.consistent);
    Ok(McVerdict { strength, samples, seed, consistent, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rat::{frac, int};
    use crate::spaces::classic_space_from_layer;

    fn diag(v: &[i64]) -> SymEndo {
        let m = RatMatrix::diag(&v.iter().map(|&x| int(x)).collect::<Vec<_>>());
        SymEndo::new(&RatMatrix::identity(v.len()), m).unwrap()
    }

    #[test]
    fn averages() {
        assert_eq!(average_quadratic(&diag(&[1, -1]), 2), int(0));
        assert_eq!(average_quadratic(&SymEndo::identity(3), 3), int(1));
        assert_eq!(average_quadratic(&diag(&[3, 1]), 2), int(2));
        assert_eq!(average_quartic(&SymEndo::identity(5), &SymEndo::identity(5), 5), int(1));
        assert_eq!(average_quartic(&diag(&[1, -1]), &diag(&[1, -1]), 2), frac(1, 2));
        assert_eq!(average_quartic(&diag(&[1, -1, 0]), &diag(&[1, -1, 0]), 3), frac(4, 15));
    }

    #[test]
    fn quartic_average_matches_circle_integral() {
        // mean of cos^2(2 theta) over the circle
        let k = 100_000;
        let s: f64 = (0..k).map(|i| (2.0 * std::f64::consts::TAU * i as f64 / k as f64).cos().powi(2)).sum::<f64>() / k as f64;
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn z2_minimal_layer() {
        let q = QForm::identity(2);
        let s = classic_space_from_layer(&q, &enumerate::minimal_vectors(&q).unwrap()).unwrap();
        assert!(test_design(&s, Strength::S2, None).unwrap().holds);
        let v = test_design(&s, Strength::S22, None).unwrap();
        assert!(!v.holds);
        assert_eq!(v.residuals["S22[0,0]"], frac(1, 2));
        assert!(verify_design(&s, &v).unwrap());
    }

    #[test]
    fn root_lattices_are_four_designs() {
        for q in [catalog::an(2).form, catalog::dn(4).form] {
            let s = classic_space_from_layer(&q, &enumerate::minimal_vectors(&q).unwrap()).unwrap();
            let v = test_design(&s, Strength::Four, None).unwrap();
            assert!(v.holds, "{:?}", q.name());
            assert!(verify_design(&s, &v).unwrap());
        }
    }

    #[test]
    fn pp2_is_all_self_adjoint_maps() {
        for n in 2..=8 {
            let q = catalog::an(n).form;
            let s = classic_space_from_layer(&q, &enumerate::minimal_vectors(&q).unwrap()).unwrap();
            assert_eq!(pp2_basis(&s).unwrap().len(), n * (n + 1) / 2);
        }
    }

    #[test]
    fn antipodal_weights() {
        let q = catalog::an(2).form;
        let layer = enumerate::minimal_vectors(&q).unwrap();
        let s = classic_space_from_layer(&q, &layer).unwrap();
        let full: Vec<Point> = layer.full_set().into_iter().map(|c| Point::new(&q, c).unwrap()).collect();
        let sf = s.with_points(full);
        let w = vec![frac(1, 6); 6];
        let a = test_design(&s, Strength::Four, None).unwrap();
        let b = test_design(&sf, Strength::Four, Some(&w)).unwrap();
        assert_eq!(a.residuals, b.residuals);
    }

    #[test]
    fn weights_validated() {
        let q = catalog::an(2).form;
        let s = classic_space_from_layer(&q, &enumerate::minimal_vectors(&q).unwrap()).unwrap();
        assert!(test_design(&s, Strength::S2, Some(&[int(1), int(0), int(0)])).is_err());
        assert!(test_design(&s, Strength::S2, Some(&[frac(1, 2)])).is_err());
    }

    #[test]
    fn non_classic_space_rejected() {
        let s = spaces::exterior_power_space(&catalog::dn(4).form, 2, &int(2), EnumOptions::default()).unwrap();
        assert!(matches!(test_design(&s, Strength::S2, None), Err(Error::Unsupported(_))));
    }

    #[test]
    fn monte_carlo_deterministic_and_budgeted() {
        let q = catalog::an(2).form;
        let s = classic_space_from_layer(&q, &enumerate::minimal_vectors(&q).unwrap()).unwrap();
        let a = monte_carlo_design(&q, &s, Strength::S22, 5000, 7).unwrap();
        let b = monte_carlo_design(&q, &s, Strength::S22, 5000, 7).unwrap();
        assert_eq!(a, b);
        assert!(monte_carlo_design(&q, &s, Strength::S2, SAMPLE_BUDGET + 1, 7).unwrap_err().is_resource());
    }

    #[test]
    fn strength_parsing() {
        assert_eq!(Strength::parse("2").unwrap(), Strength::S2);
        assert_eq!(Strength::parse("2,2").unwrap(), Strength::S22);
        assert_eq!(Strength::parse("{4}").unwrap(), Strength::S4);
        assert_eq!(Strength::parse("4").unwrap(), Strength::Four);
        assert!(Strength::parse("6").is_err());
    }
}
