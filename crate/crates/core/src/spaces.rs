//! Voronoi spaces: the tangent space of self-adjoint directions together
//! with a finite point set, for the classic space and its variants.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::{self, canonical, EnumOptions, IntVector, Layer};
use crate::error::{Error, Result};
use crate::form::{QForm, SymEndo};
use crate::linalg::{EchelonBasis, RatMatrix};
use crate::rat::{self, Rat};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    Classic,
    Invariant,
    Isodual,
    DualProduct,
    Exterior,
}

impl SpaceKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(SpaceKind::Classic),
            "invariant" => Ok(SpaceKind::Invariant),
            "isodual" => Ok(SpaceKind::Isodual),
            "dual-product" => Ok(SpaceKind::DualProduct),
            "exterior" => Ok(SpaceKind::Exterior),
            _ => Err(Error::InvalidArgument(format!("unknown space '{s}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SpaceKind::Classic => "classic",
            SpaceKind::Invariant => "invariant",
            SpaceKind::Isodual => "isodual",
            SpaceKind::DualProduct => "dual-product",
            SpaceKind::Exterior => "exterior",
        }
    }
}

/// A point of the candidate set with its exact norm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub coords: IntVector,
    pub value: Rat,
}

impl Point {
    pub fn new(form: &QForm, coords: IntVector) -> Result<Self> {
        if coords.iter().all(|&x| x == 0) {
            return Err(Error::InvalidArgument("the zero vector is not a valid point".into()));
        }
        let value = form.eval_int(&coords)?;
        Ok(Point { coords, value })
    }

    pub fn rat_coords(&self) -> Vec<Rat> {
        enumerate::to_rat_vec(&self.coords)
    }
}

/// `G B` for a basis element `B`, scaled to integers: `S = int / scale`.
#[derive(Clone, Debug)]
pub struct ScaledSym {
    pub int: Vec<i128>,
    pub scale: BigInt,
    dim: usize,
}

impl ScaledSym {
    fn new(s: &RatMatrix) -> Result<Self> {
        let l = s.entries().iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let int = s
            .entries()
            .iter()
            .map(|x| (x.numer() * (&l / x.denom())).to_i128())
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::Overflow("basis scaling"))?;
        Ok(ScaledSym { int, scale: l, dim: s.rows() })
    }

    /// x^T int x.
    pub fn quad(&self, x: &[i64]) -> Option<i128> {
        let n = self.dim;
        let mut acc: i128 = 0;
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            let xi = x[i] as i128;
            let row = &self.int[i * n..(i + 1) * n];
            let mut t = row[i].checked_mul(xi)?;
            for j in i + 1..n {
                if x[j] != 0 && row[j] != 0 {
                    t = t.checked_add(row[j].checked_mul(2 * x[j] as i128)?)?;
                }
            }
            acc = acc.checked_add(t.checked_mul(xi)?)?;
        }
        Some(acc)
    }

    /// int * x.
    pub fn apply(&self, x: &[i64]) -> Option<Vec<i128>> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let mut t: i128 = 0;
                for j in 0..n {
                    if x[j] != 0 && self.int[i * n + j] != 0 {
                        t = t.checked_add(self.int[i * n + j].checked_mul(x[j] as i128)?)?;
                    }
                }
                Some(t)
            })
            .collect()
    }
}

/// Tangent data and point set of a Voronoi space.
#[derive(Clone, Debug)]
pub struct SpaceDescriptor {
    pub label: String,
    pub kind: SpaceKind,
    /// The form on the ambient space in which points live.
    pub form: QForm,
    pub gp_basis: Vec<SymEndo>,
    pub points: Vec<Point>,
    /// Exterior power degree (1 for non-exterior spaces).
    pub m: usize,
    /// gamma(Q) / gamma(Q^-1) for the duality product space.
    pub balance_ratio: Option<Rat>,
    /// Minimal Gram determinant and search bound for exterior spaces.
    pub exterior_minimum: Option<(Rat, Rat)>,
    scaled: Vec<ScaledSym>,
}

impl SpaceDescriptor {
    /// Validates self-adjointness and independence of the basis, checks that
    /// the identity is not in its span, and precomputes integer forms.
    pub fn new(label: impl Into<String>, kind: SpaceKind, form: QForm, gp_basis: Vec<SymEndo>, points: Vec<Point>) -> Result<Self> {
        let n = form.dim();
        let mut ech = EchelonBasis::new(n * n);
        for b in &gp_basis {
            if b.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
            }
            SymEndo::for_form(&form, b.matrix().clone())?;
            if !ech.insert(b.matrix().entries()) {
                return Err(Error::Precondition("tangent basis is linearly dependent".into()));
            }
        }
        if ech.contains(RatMatrix::identity(n).entries()) {
            return Err(Error::Precondition("identity lies in the span of the tangent basis".into()));
        }
        for p in &points {
            if p.coords.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.coords.len() });
            }
            if form.eval_int(&p.coords)? != p.value {
                return Err(Error::Precondition(format!("point {:?} has a wrong stored value", p.coords)));
            }
        }
        let mut scaled = Vec::with_capacity(gp_basis.len() + 1);
        for b in gp_basis.iter().map(SymEndo::matrix).chain(std::iter::once(&RatMatrix::identity(n))) {
            scaled.push(ScaledSym::new(&form.gram().mul(b)?)?);
        }
        Ok(SpaceDescriptor {
            label: label.into(),
            kind,
            form,
            gp_basis,
            points,
            m: 1,
            balance_ratio: None,
            exterior_minimum: None,
            scaled,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.form.dim()
    }

    pub fn gp_dim(&self) -> usize {
        self.gp_basis.len()
    }

    /// gp basis followed by the identity.
    pub fn extended_basis(&self) -> Vec<SymEndo> {
        let mut out = self.gp_basis.clone();
        out.push(SymEndo::identity(self.ambient_dim()));
        out
    }

    /// Coefficients of tau over the extended basis.
    pub fn tau(&self) -> Vec<Rat> {
        let mut t = vec![Rat::zero(); self.gp_dim() + 1];
        t[self.gp_dim()] = Rat::one();
        t
    }

    /// `G B_j` in integer-scaled form, for j over the extended basis.
    pub fn scaled_basis(&self) -> &[ScaledSym] {
        &self.scaled
    }

    /// Same tangent data with a different point set.
    pub fn with_points(&self, points: Vec<Point>) -> Self {
        SpaceDescriptor { points, ..self.clone() }
    }

    /// Integer row proportional to (epsilon_x(B_j))_j after column scaling:
    /// entry j is x^T (scale_j G B_j) x. Rank and kernels are unaffected.
    pub fn epsilon_row_int(&self, x: &[i64]) -> Result<Vec<i128>> {
        self.scaled.iter().map(|s| s.quad(x).ok_or(Error::Overflow("epsilon row"))).collect()
    }

    /// Exact epsilon_x(B_j) over the extended basis.
    pub fn epsilon_row(&self, p: &Point) -> Result<Vec<Rat>> {
        let row = self.epsilon_row_int(&p.coords)?;
        Ok(row
            .into_iter()
            .zip(&self.scaled)
            .map(|(v, s)| Rat::new(BigInt::from(v), s.scale.clone()) / &p.value)
            .collect())
    }

    /// epsilon_x(H) for an arbitrary self-adjoint H.
    pub fn epsilon(&self, p: &Point, h: &SymEndo) -> Result<Rat> {
        let x = p.rat_coords();
        let hx = h.matrix().mul_vec(&x)?;
        Ok(self.form.bilinear(&x, &hx)? / &p.value)
    }

    pub fn points_from_layer(layer: &Layer) -> Vec<Point> {
        layer.vectors.iter().map(|v| Point { coords: v.clone(), value: layer.radius.clone() }).collect()
    }
}

/// Basis of the self-adjoint trace-zero endomorphisms for a Gram matrix:
/// `H = G^-1 S` with S symmetric and tr(G^-1 S) = 0, the last diagonal
/// entry of S absorbing the trace. Diagonal elements come first.
pub fn classic_gp_basis(gram: &RatMatrix) -> Result<Vec<SymEndo>> {
    let n = gram.rows();
    let g = gram.inverse()?;
    let last = n - 1;
    let glast = g[(last, last)].clone();
    let mut out = Vec::new();
    for k in 0..last {
        let mut s = RatMatrix::zeros(n, n);
        s[(k, k)] = Rat::one();
        s[(last, last)] = -(&g[(k, k)] / &glast);
        out.push(SymEndo::new(gram, g.mul(&s)?)?);
    }
    for k in 0..n {
        for l in k + 1..n {
            let mut s = RatMatrix::zeros(n, n);
            s[(k, l)] = Rat::one();
            s[(l, k)] = Rat::one();
            s[(last, last)] = -(rat::int(2) * &g[(k, l)] / &glast);
            out.push(SymEndo::new(gram, g.mul(&s)?)?);
        }
    }
    Ok(out)
}

fn require_points(points: &[Point]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Precondition("point set is empty".into()));
    }
    Ok(())
}

pub fn classic_space(q: &QForm, points: Vec<Point>) -> Result<SpaceDescriptor> {
    require_points(&points)?;
    SpaceDescriptor::new(label(q, "classic"), SpaceKind::Classic, q.clone(), classic_gp_basis(q.gram())?, points)
}

pub fn classic_space_from_layer(q: &QForm, layer: &Layer) -> Result<SpaceDescriptor> {
    classic_space(q, SpaceDescriptor::points_from_layer(layer))
}

fn label(q: &QForm, kind: &str) -> String {
    format!("{} ({kind})", q.name().unwrap_or("form"))
}

/// Subspace of the classic tangent space cut out by linear constraints.
fn constrained_gp(q: &QForm, constraints: &[&dyn Fn(&RatMatrix) -> Result<RatMatrix>]) -> Result<Vec<SymEndo>> {
    let base = classic_gp_basis(q.gram())?;
    if base.is_empty() {
        return Ok(base);
    }
    let images: Vec<Vec<Vec<Rat>>> = base
        .iter()
        .map(|b| constraints.iter().map(|c| c(b.matrix()).map(|m| m.entries().to_vec())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let rows_per = images[0].iter().map(Vec::len).sum::<usize>();
    let m = RatMatrix::from_fn(rows_per, base.len(), |r, k| {
        let mut r = r;
        for block in &images[k] {
            if r < block.len() {
                return block[r].clone();
            }
            r -= block.len();
        }
        unreachable!()
    });
    Ok(m.kernel().iter().map(|c| SymEndo::combination(&primitive(c), &base)).collect())
}

/// Rescales a rational vector to a primitive integer vector.
fn primitive(v: &[Rat]) -> Vec<Rat> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| Rat::from_integer(x / &g)).collect()
}

/// Rejects generators that are not integral or do not preserve the form.
pub fn check_generators(q: &QForm, generators: &[RatMatrix], require_integral: bool) -> Result<()> {
    for (index, g) in generators.iter().enumerate() {
        if g.rows() != q.dim() || !g.is_square() {
            return Err(Error::GeneratorRejected { index, reason: format!("expected a {0}x{0} matrix", q.dim()) });
        }
        if require_integral && !g.is_integral() {
            return Err(Error::GeneratorRejected { index, reason: "not an integer matrix".into() });
        }
        if !q.is_orthogonal(g) {
            return Err(Error::GeneratorRejected { index, reason: "does not preserve the form".into() });
        }
        if require_integral && g.determinant().abs() != Rat::one() {
            return Err(Error::GeneratorRejected { index, reason: "not invertible over the integers".into() });
        }
    }
    Ok(())
}

/// Tangent space of forms invariant under a group: H commuting with every generator.
pub fn invariant_family_space(q: &QForm, points: Vec<Point>, generators: &[RatMatrix]) -> Result<SpaceDescriptor> {
    require_points(&points)?;
    check_generators(q, generators, true)?;
    let closures: Vec<Box<dyn Fn(&RatMatrix) -> Result<RatMatrix>>> = generators
        .iter()
        .map(|g| {
            let g = g.clone();
            Box::new(move |h: &RatMatrix| Ok(h.mul(&g)?.sub(&g.mul(h)?))) as Box<dyn Fn(&RatMatrix) -> Result<RatMatrix>>
        })
        .collect();
    let refs: Vec<&dyn Fn(&RatMatrix) -> Result<RatMatrix>> = closures.iter().map(|b| b.as_ref()).collect();
    let gp = if refs.is_empty() { classic_gp_basis(q.gram())? } else { constrained_gp(q, &refs)? };
    SpaceDescriptor::new(label(q, "invariant"), SpaceKind::Invariant, q.clone(), gp, points)
}

/// Tangent space of an isodual family: H anticommuting with sigma.
pub fn isodual_family_space(q: &QForm, points: Vec<Point>, sigma: &RatMatrix) -> Result<SpaceDescriptor> {
    require_points(&points)?;
    check_generators(q, std::slice::from_ref(sigma), false)?;
    let s = sigma.clone();
    let c = move |h: &RatMatrix| Ok(s.mul(h)?.add(&h.mul(&s)?));
    let gp = constrained_gp(q, &[&c])?;
    SpaceDescriptor::new(label(q, "isodual"), SpaceKind::Isodual, q.clone(), gp, points)
}

/// Product space for dual extremality: points (x, 0) over the minimal
/// vectors of Q and (0, y) over those of Q^-1, in the form diag(Q, Q^-1).
pub fn duality_product_space(q: &QForm, opts: EnumOptions) -> Result<SpaceDescriptor> {
    let dual = q.dual_form();
    let mq = enumerate::minimal_vectors_with(q, opts)?;
    let md = enumerate::minimal_vectors_with(&dual, opts)?;
    duality_product_from_layers(q, &mq, &md)
}

/// Product space with explicitly chosen point sets on each side (either may be empty).
pub fn duality_product_from_layers(q: &QForm, q_side: &Layer, dual_side: &Layer) -> Result<SpaceDescriptor> {
    let n = q.dim();
    let dual = q.dual_form();
    let g = q.gram();
    let ginv = dual.gram();
    let ambient = QForm::new(RatMatrix::block_diag(g, ginv))?.named(format!("{} x dual", q.name().unwrap_or("form")));
    let mut gp = Vec::new();
    for h in classic_gp_basis(g)? {
        let ht = g.mul(h.matrix())?.mul(ginv)?;
        gp.push(SymEndo::for_form(&ambient, RatMatrix::block_diag(h.matrix(), &ht.scale(&-rat::one())))?);
    }
    gp.push(SymEndo::for_form(
        &ambient,
        RatMatrix::block_diag(&RatMatrix::identity(n), &RatMatrix::identity(n).scale(&-rat::one())),
    )?);
    let mut points = Vec::new();
    for v in &q_side.vectors {
        let mut c = v.clone();
        c.extend(std::iter::repeat_n(0, n));
        points.push(Point { coords: c, value: q_side.radius.clone() });
    }
    for v in &dual_side.vectors {
        let mut c = vec![0; n];
        c.extend(v.iter().copied());
        points.push(Point { coords: c, value: dual_side.radius.clone() });
    }
    require_points(&points)?;
    let mut s = SpaceDescriptor::new(label(q, "dual-product"), SpaceKind::DualProduct, ambient, gp, points)?;
    if !q_side.vectors.is_empty() && !dual_side.vectors.is_empty() {
        s.balance_ratio = Some(&q_side.radius / &dual_side.radius);
    }
    Ok(s)
}

/// Lexicographically ordered m-subsets of 0..n.
pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < m - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    rec(0, n, m, &mut cur, &mut out);
    out
}

/// Gram matrix of the induced form on the m-th exterior power, in the
/// basis e_I of increasing index sets: entry (I, J) = det G[I, J].
pub fn exterior_gram(gram: &RatMatrix, m: usize) -> RatMatrix {
    let idx = subsets(gram.rows(), m);
    RatMatrix::from_fn(idx.len(), idx.len(), |a, b| {
        RatMatrix::from_fn(m, m, |i, j| gram[(idx[a][i], idx[b][j])].clone()).determinant()
    })
}

/// Matrix of the derivation action of H on the m-th exterior power.
pub fn exterior_derivation(h: &RatMatrix, m: usize) -> RatMatrix {
    let n = h.rows();
    let idx = subsets(n, m);
    let pos = |set: &[usize]| idx.binary_search_by(|s| s.as_slice().cmp(set)).expect("subset present");
    let mut out = RatMatrix::zeros(idx.len(), idx.len());
    for (col, set) in idx.iter().enumerate() {
        for k in 0..m {
            for l in 0..n {
                let c = &h[(l, set[k])];
                if c.is_zero() || (l != set[k] && set.contains(&l)) {
                    continue;
                }
                let mut t = set.clone();
                t[k] = l;
                // sort with sign
                let mut sign = 1i64;
                let mut arr = t;
                for i in 0..m {
                    for j in 0..m - 1 - i {
                        if arr[j] > arr[j + 1] {
                            arr.swap(j, j + 1);
                            sign = -sign;
                        }
                    }
                }
                let row = pos(&arr);
                out[(row, col)] += c * rat::int(sign);
            }
        }
    }
    out
}

/// Plücker coordinates (m x m minors) of the sublattice spanned by the vectors.
pub fn plucker(vectors: &[&[i64]], n: usize) -> Option<Vec<i64>> {
    let m = vectors.len();
    subsets(n, m)
        .iter()
        .map(|set| {
            let mat: Vec<Vec<i128>> = (0..m).map(|i| set.iter().map(|&j| vectors[i][j] as i128).collect()).collect();
            int_det(mat).and_then(|d| d.to_i64())
        })
        .collect()
}

/// Exact determinant of a small integer matrix (Bareiss).
fn int_det(mut a: Vec<Vec<i128>>) -> Option<i128> {
    let n = a.len();
    if n == 0 {
        return Some(1);
    }
    let mut sign = 1i128;
    let mut prev: i128 = 1;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| a[r][k] != 0) else { return Some(0) };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = a[i][j].checked_mul(a[k][k])?.checked_sub(a[i][k].checked_mul(a[k][j])?)?;
                a[i][j] = v / prev;
            }
        }
        prev = a[k][k];
    }
    Some(sign * a[n - 1][n - 1])
}

/// Limit on m-subsets examined by the exterior search.
pub const EXTERIOR_TUPLE_LIMIT: u64 = 20_000_000;

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Minimal Gram determinant among m-tuples of representatives of norm at
/// most `bound`, and the distinct sublattices (Plücker vectors) attaining it.
pub fn minimal_sublattices(q: &QForm, m: usize, bound: &Rat, opts: EnumOptions) -> Result<(Rat, Vec<IntVector>)> {
    let n = q.dim();
    if m == 0 || (m > 1 && 2 * m > n) {
        return Err(Error::InvalidArgument(format!("exterior degree {m} must satisfy 1 <= m <= n/2 for n = {n}")));
    }
    let vecs: Vec<IntVector> = enumerate::vectors_up_to_with(q, bound, opts)?.into_iter().flat_map(|l| l.vectors).collect();
    if vecs.len() < m {
        return Err(Error::Precondition(format!("fewer than {m} vectors of norm at most {}", rat::format(bound))));
    }
    let total = binomial(vecs.len() as u64, m as u64);
    if total > EXTERIOR_TUPLE_LIMIT {
        return Err(Error::Resource(format!("{total} tuples exceed the exterior search limit {EXTERIOR_TUPLE_LIMIT}")));
    }
    let ig = q.int_gram();
    // Pairwise bilinear numerators.
    let k = vecs.len();
    let mut b = vec![0i128; k * k];
    for i in 0..k {
        for j in i..k {
            let v = ig.bilinear_numer(&vecs[i], &vecs[j]).ok_or(Error::Overflow("bilinear form"))?;
            b[i * k + j] = v;
            b[j * k + i] = v;
        }
    }
    let tuples = subsets(k, m);
    let dets: Vec<Option<i128>> = tuples
        .par_iter()
        .map(|t| int_det((0..m).map(|a| (0..m).map(|c| b[t[a] * k + t[c]]).collect()).collect()))
        .collect();
    let mut best: Option<i128> = None;
    for d in &dets {
        let d = d.ok_or(Error::Overflow("gram determinant"))?;
        if d > 0 && best.is_none_or(|b| d < b) {
            best = Some(d);
        }
    }
    let best = best.ok_or_else(|| Error::Precondition("no independent tuple found".into()))?;
    let mut planes: Vec<IntVector> = Vec::new();
    for (t, d) in tuples.iter().zip(&dets) {
        if *d == Some(best) {
            let refs: Vec<&[i64]> = t.iter().map(|&i| vecs[i].as_slice()).collect();
            let p = plucker(&refs, n).ok_or(Error::Overflow("plucker coordinates"))?;
            planes.push(canonical(p));
        }
    }
    planes.sort();
    planes.dedup();
    let denom = BigInt::from(ig.denom).pow(m as u32);
    Ok((Rat::new(BigInt::from(best), denom), planes))
}

/// Exterior power space on the minimal m-dimensional sublattices found
/// among vectors of norm at most `bound`.
pub fn exterior_power_space(q: &QForm, m: usize, bound: &Rat, opts: EnumOptions) -> Result<SpaceDescriptor> {
    let (min, planes) = minimal_sublattices(q, m, bound, opts)?;
    let wg = exterior_gram(q.gram(), m);
    let form = QForm::new(wg)?.named(format!("{} wedge {m}", q.name().unwrap_or("form")));
    let gp = classic_gp_basis(q.gram())?
        .iter()
        .map(|h| SymEndo::for_form(&form, exterior_derivation(h.matrix(), m)))
        .collect::<Result<Vec<_>>>()?;
    let points = planes.into_iter().map(|p| Point { coords: p, value: min.clone() }).collect();
    let kind = if m == 1 { SpaceKind::Classic } else { SpaceKind::Exterior };
    let mut s = SpaceDescriptor::new(label(q, &format!("exterior m={m}")), kind, form, gp, points)?;
    s.m = m;
    s.exterior_minimum = Some((min, bound.clone()));
    Ok(s)
}

/// Rankin-type invariant: minimal Gram determinant over m-tuples found
/// below `bound`, divided by det(Q)^(m/n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankinResult {
    pub m: usize,
    #[serde(with = "rat::serde_rat")]
    pub minimum: Rat,
    #[serde(with = "rat::serde_rat")]
    pub bound: Rat,
    pub value: f64,
    /// The same value when det(Q)^(m/n) is rational.
    #[serde(with = "rat::serde_rat_opt", default, skip_serializing_if = "Option::is_none")]
    pub exact_value: Option<Rat>,
    pub sublattices: usize,
}

/// Exact rational power r^(p/k) when it exists.
fn rational_power(r: &Rat, p: usize, k: usize) -> Option<Rat> {
    let root = |x: &BigInt| {
        let y = x.nth_root(k as u32);
        (y.pow(k as u32) == *x).then_some(y)
    };
    let base = Rat::new(root(r.numer())?, root(r.denom())?);
    Some(num_traits::pow(base, p))
}

pub fn rankin_invariant(q: &QForm, m: usize, bound: &Rat, opts: EnumOptions) -> Result<RankinResult> {
    let (min, planes) = minimal_sublattices(q, m, bound, opts)?;
    let det = rat::to_f64(&q.determinant());
    let value = rat::to_f64(&min) / det.powf(m as f64 / q.dim() as f64);
    let g = num_integer::gcd(m, q.dim());
    let exact_value = rational_power(&q.determinant(), m / g, q.dim() / g).map(|d| &min / d);
    Ok(RankinResult { m, minimum: min, bound: bound.clone(), value, exact_value, sublattices: planes.len() })
}
