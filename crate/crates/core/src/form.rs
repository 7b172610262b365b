//! Positive definite quadratic forms, self-adjoint endomorphisms and the
//! exponential deformation of a form along a self-adjoint direction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::linalg::RatMatrix;
use crate::rat::{self, JsonRat, Rat};

/// A positive definite quadratic form given by its Gram matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QForm {
    name: Option<String>,
    gram: RatMatrix,
    int_gram: IntGram,
}

/// The Gram matrix scaled to integers: `gram = entries / denom`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntGram {
    pub dim: usize,
    pub entries: Vec<i128>,
    pub denom: i128,
}

impl IntGram {
    fn from_matrix(m: &RatMatrix) -> Result<Self> {
        let denom = m.entries().iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let entries = m
            .entries()
            .iter()
            .map(|x| (x.numer() * (&denom / x.denom())).to_i128())
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::Overflow("gram scaling"))?;
        let denom = denom.to_i128().ok_or(Error::Overflow("gram scaling"))?;
        Ok(IntGram { dim: m.rows(), entries, denom })
    }

    /// Numerator of x^T G x for an integer vector (value = result / denom).
    pub fn eval_numer(&self, x: &[i64]) -> Option<i128> {
        let n = self.dim;
        let mut acc: i128 = 0;
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            let xi = x[i] as i128;
            let mut row: i128 = self.entries[i * n + i].checked_mul(xi)?;
            for j in i + 1..n {
                if x[j] != 0 {
                    row = row.checked_add(self.entries[i * n + j].checked_mul(2 * x[j] as i128)?)?;
                }
            }
            acc = acc.checked_add(row.checked_mul(xi)?)?;
        }
        Some(acc)
    }

    pub fn bilinear_numer(&self, x: &[i64], y: &[i64]) -> Option<i128> {
        let n = self.dim;
        let mut acc: i128 = 0;
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            let mut row: i128 = 0;
            for j in 0..n {
                if y[j] != 0 {
                    row = row.checked_add(self.entries[i * n + j].checked_mul(y[j] as i128)?)?;
                }
            }
            acc = acc.checked_add(row.checked_mul(x[i] as i128)?)?;
        }
        Some(acc)
    }
}

impl QForm {
    /// Validates symmetry and positive definiteness (all leading principal minors > 0).
    pub fn new(gram: RatMatrix) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::DimensionMismatch { expected: gram.rows(), found: gram.cols() });
        }
        if gram.rows() == 0 {
            return Err(Error::InvalidArgument("form must have positive dimension".into()));
        }
        if let Some((row, col)) = gram.first_asymmetry() {
            return Err(Error::NotSymmetric { row, col });
        }
        for (k, minor) in gram.leading_principal_minors().iter().enumerate() {
            if !minor.is_positive() {
                return Err(Error::NotPositiveDefinite { order: k + 1, value: rat::format(minor) });
            }
        }
        let int_gram = IntGram::from_matrix(&gram)?;
        Ok(QForm { name: None, gram, int_gram })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(RatMatrix::from_i64_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self::new(RatMatrix::identity(n)).expect("identity is positive definite").named(format!("Z{n}"))
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &RatMatrix {
        &self.gram
    }

    pub fn int_gram(&self) -> &IntGram {
        &self.int_gram
    }

    fn check_len(&self, x: &[Rat]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    /// Q(x) = x^T G x.
    pub fn eval(&self, x: &[Rat]) -> Result<Rat> {
        self.bilinear(x, x)
    }

    /// Q(x, y) = x^T G y, the polarization of Q.
    pub fn bilinear(&self, x: &[Rat], y: &[Rat]) -> Result<Rat> {
        self.check_len(x)?;
        self.check_len(y)?;
        let gy = self.gram.mul_vec(y)?;
        Ok(crate::linalg::dot(x, &gy))
    }

    /// Exact value on an integer vector.
    pub fn eval_int(&self, x: &[i64]) -> Result<Rat> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let num = self.int_gram.eval_numer(x).ok_or(Error::Overflow("form evaluation"))?;
        Ok(rat::frac_i128(num, self.int_gram.denom))
    }

    pub fn bilinear_int(&self, x: &[i64], y: &[i64]) -> Result<Rat> {
        let num = self.int_gram.bilinear_numer(x, y).ok_or(Error::Overflow("form evaluation"))?;
        Ok(rat::frac_i128(num, self.int_gram.denom))
    }

    pub fn determinant(&self) -> Rat {
        self.gram.determinant()
    }

    /// The dual form with Gram matrix G^{-1}.
    pub fn dual_form(&self) -> QForm {
        let inv = self.gram.inverse().expect("positive definite forms are invertible");
        let mut d = QForm::new(inv).expect("inverse of a positive definite form is positive definite");
        d.name = self.name.as_ref().map(|n| format!("{n}*"));
        d
    }

    /// The form c*Q for a positive rational c.
    pub fn scaled(&self, c: &Rat) -> Result<QForm> {
        if !c.is_positive() {
            return Err(Error::InvalidArgument("scale factor must be positive".into()));
        }
        let mut q = QForm::new(self.gram.scale(c))?;
        q.name = self.name.clone();
        Ok(q)
    }

    /// gamma / det(Q)^(1/n), the scale invariant Hermite invariant.
    pub fn hermite_invariant(&self, gamma: &Rat) -> Result<f64> {
        if !gamma.is_positive() {
            return Err(Error::InvalidArgument("minimum must be positive".into()));
        }
        let det = rat::to_f64(&self.determinant());
        Ok(rat::to_f64(gamma) / det.powf(1.0 / self.dim() as f64))
    }

    pub fn gram_f64(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| rat::to_f64(&self.gram[(i, j)]))
    }

    /// Whether `g` preserves the form: g^T G g = G.
    pub fn is_orthogonal(&self, g: &RatMatrix) -> bool {
        g.is_square()
            && g.rows() == self.dim()
            && g.transpose().mul(&self.gram).and_then(|m| m.mul(g)).map(|m| m == self.gram).unwrap_or(false)
    }
}

/// JSON shape of a form: `{"name": ..., "dim": n, "gram": [[...]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QFormJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    pub gram: Vec<Vec<JsonRat>>,
}

impl QForm {
    pub fn to_json(&self) -> QFormJson {
        QFormJson {
            name: self.name.clone(),
            dim: self.dim(),
            gram: (0..self.dim()).map(|r| rat::json_vec(self.gram.row(r))).collect(),
        }
    }

    pub fn from_json(j: &QFormJson) -> Result<QForm> {
        if j.gram.len() != j.dim {
            return Err(Error::DimensionMismatch { expected: j.dim, found: j.gram.len() });
        }
        for row in &j.gram {
            if row.len() != j.dim {
                return Err(Error::DimensionMismatch { expected: j.dim, found: row.len() });
            }
        }
        let m = RatMatrix::from_rows(j.gram.iter().map(|r| r.iter().map(|x| x.0.clone()).collect()).collect())?;
        let mut q = QForm::new(m)?;
        q.name = j.name.clone();
        Ok(q)
    }

    pub fn parse_json(text: &str) -> Result<QForm> {
        let j: QFormJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&j)
    }
}

/// Matrix of an endomorphism that is self-adjoint for a given form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymEndo {
    matrix: RatMatrix,
}

impl SymEndo {
    /// Checks that `gram * matrix` is symmetric.
    pub fn new(form_gram: &RatMatrix, matrix: RatMatrix) -> Result<Self> {
        if matrix.rows() != form_gram.rows() || !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: form_gram.rows(), found: matrix.rows() });
        }
        if !form_gram.mul(&matrix)?.is_symmetric() {
            return Err(Error::NotSelfAdjoint);
        }
        Ok(SymEndo { matrix })
    }

    pub fn for_form(q: &QForm, matrix: RatMatrix) -> Result<Self> {
        Self::new(q.gram(), matrix)
    }

    pub fn identity(n: usize) -> Self {
        SymEndo { matrix: RatMatrix::identity(n) }
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> Rat {
        self.matrix.trace()
    }

    /// Linear combination sum c_i H_i of endomorphisms (no re-validation needed:
    /// self-adjointness is preserved by linear combinations).
    pub fn combination(coeffs: &[Rat], basis: &[SymEndo]) -> SymEndo {
        let n = basis[0].dim();
        let mut m = RatMatrix::zeros(n, n);
        for (c, b) in coeffs.iter().zip(basis) {
            if !c.is_zero() {
                m = m.add(&b.matrix.scale(c));
            }
        }
        SymEndo { matrix: m }
    }
}

/// The form x -> Q(x, exp(tH) x).
#[derive(Clone, Debug)]
pub struct Deformation {
    pub base: QForm,
    pub direction: SymEndo,
    pub t: f64,
}

impl Deformation {
    pub fn new(base: QForm, direction: SymEndo, t: f64) -> Result<Self> {
        let _ = SymEndo::for_form(&base, direction.matrix().clone())?;
        if !t.is_finite() {
            return Err(Error::InvalidArgument("deformation parameter must be finite".into()));
        }
        Ok(Deformation { base, direction, t })
    }

    /// Gram matrix of the deformed form, G exp(tH), in floating point.
    pub fn gram_f64(&self) -> nalgebra::DMatrix<f64> {
        let n = self.base.dim();
        let h = nalgebra::DMatrix::from_fn(n, n, |i, j| self.t * rat::to_f64(&self.direction.matrix()[(i, j)]));
        let e = expm(&h);
        let g = self.base.gram_f64();
        let m = &g * &e;
        // symmetrize away rounding asymmetry
        (&m + m.transpose()) * 0.5
    }

    pub fn eval(&self, x: &[Rat]) -> Result<f64> {
        if x.len() != self.base.dim() {
            return Err(Error::DimensionMismatch { expected: self.base.dim(), found: x.len() });
        }
        let g = self.gram_f64();
        let v = nalgebra::DVector::from_iterator(x.len(), x.iter().map(rat::to_f64));
        Ok(v.dot(&(&g * &v)))
    }
}

/// Q(x, exp(tH) x) in floating point.
pub fn deform_eval(d: &Deformation, x: &[Rat]) -> Result<f64> {
    d.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn a2() -> QForm {
        QForm::from_i64(&[vec![2, 1], vec![1, 2]]).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let id = QForm::identity(2);
        assert_eq!(id.eval(&[int(1), int(0)]).unwrap(), int(1));
        assert_eq!(a2().eval(&[int(1), int(0)]).unwrap(), int(2));
        assert_eq!(a2().eval(&[int(1), int(-1)]).unwrap(), int(2));
        assert_eq!(a2().eval_int(&[1, -1]).unwrap(), int(2));
        assert!(a2().eval(&[int(1)]).is_err());
    }

    #[test]
    fn bilinear_examples() {
        assert_eq!(QForm::identity(2).bilinear(&[int(1), int(0)], &[int(0), int(1)]).unwrap(), int(0));
        assert_eq!(a2().bilinear(&[int(1), int(0)], &[int(0), int(1)]).unwrap(), int(1));
        let x = [frac(1, 2), int(3)];
        let y = [int(-1), frac(2, 5)];
        assert_eq!(a2().bilinear(&x, &y).unwrap(), a2().bilinear(&y, &x).unwrap());
        assert_eq!(a2().bilinear(&x, &x).unwrap(), a2().eval(&x).unwrap());
    }

    #[test]
    fn dual_and_determinant() {
        assert_eq!(QForm::identity(2).dual_form().gram(), QForm::identity(2).gram());
        let d = a2().dual_form();
        assert_eq!(d.gram()[(0, 0)], frac(2, 3));
        assert_eq!(d.gram()[(0, 1)], frac(-1, 3));
        assert_eq!(d.dual_form().gram(), a2().gram());
        assert_eq!(a2().determinant(), int(3));
        assert_eq!(QForm::identity(3).determinant(), int(1));
        assert_eq!(d.determinant(), frac(1, 3));
    }

    #[test]
    fn rejects_bad_grams() {
        let e = QForm::from_i64(&[vec![1, 2], vec![0, 1]]).unwrap_err();
        assert!(matches!(e, Error::NotSymmetric { row: 0, col: 1 }));
        let e = QForm::from_i64(&[vec![1, 2], vec![2, 1]]).unwrap_err();
        assert!(matches!(e, Error::NotPositiveDefinite { order: 2, .. }));
        let e = QForm::from_i64(&[vec![0, 0], vec![0, 1]]).unwrap_err();
        assert!(matches!(e, Error::NotPositiveDefinite { order: 1, .. }));
    }

    #[test]
    fn hermite_examples() {
        assert!((QForm::identity(2).hermite_invariant(&int(1)).unwrap() - 1.0).abs() < 1e-12);
        assert!((a2().hermite_invariant(&int(2)).unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-9);
        assert!(a2().hermite_invariant(&int(0)).is_err());
        let c = a2().scaled(&frac(1, 3)).unwrap();
        let h = c.hermite_invariant(&frac(2, 3)).unwrap();
        assert!((h - a2().hermite_invariant(&int(2)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn deformation_examples() {
        let id = QForm::identity(2);
        let h = SymEndo::for_form(&id, RatMatrix::diag(&[int(1), int(-1)])).unwrap();
        let d = Deformation::new(id.clone(), h.clone(), 2f64.ln()).unwrap();
        assert!((deform_eval(&d, &[int(1), int(0)]).unwrap() - 2.0).abs() < 1e-9);
        assert!((deform_eval(&d, &[int(0), int(1)]).unwrap() - 0.5).abs() < 1e-9);
        let d0 = Deformation::new(a2(), SymEndo::identity(2), 0.0).unwrap();
        let x = [int(3), int(-2)];
        let exact = rat::to_f64(&a2().eval(&x).unwrap());
        assert!((deform_eval(&d0, &x).unwrap() - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn selfadjoint_check() {
        // For A2, H must satisfy G H symmetric; the identity-symmetric diag(1,-1) is not.
        assert!(SymEndo::for_form(&a2(), RatMatrix::diag(&[int(1), int(-1)])).is_err());
        let inv = a2().gram().inverse().unwrap();
        let s = RatMatrix::diag(&[int(1), int(-1)]);
        assert!(SymEndo::for_form(&a2(), inv.mul(&s).unwrap()).is_ok());
    }

    #[test]
    fn json_roundtrip() {
        let q = a2().dual_form().named("A2*");
        let text = serde_json::to_string(&q.to_json()).unwrap();
        assert!(text.contains("\"2/3\""));
        let back = QForm::parse_json(&text).unwrap();
        assert_eq!(back, q);
        let bad = r#"{"dim":2,"gram":[[1,2],[0,1]]}"#;
        assert!(matches!(QForm::parse_json(bad), Err(Error::NotSymmetric { .. })));
    }
}
