//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use nalgebra::DMatrix;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Scaled argument is brought below this 1-norm before the Padé step.
const SCALED_NORM: f64 = 0.5;

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = norm1(a);
    let mut squarings = 0u32;
    if norm > SCALED_NORM {
        squarings = (norm / SCALED_NORM).log2().ceil() as u32;
    }
    let a = a / 2f64.powi(squarings as i32);
    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_exponential() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0, 5.0]));
        let e = expm(&a);
        for (i, v) in [1.0f64, -2.0, 5.0].iter().enumerate() {
            assert!((e[(i, i)] - v.exp()).abs() <= 1e-13 * v.exp());
        }
    }

    #[test]
    fn rotation_generator() {
        let t = 0.7f64;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let e = expm(&DMatrix::zeros(3, 3));
        assert_eq!(e, DMatrix::identity(3, 3));
    }
}
