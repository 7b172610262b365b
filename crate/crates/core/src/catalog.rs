//! Named lattices with automorphism generators.

use crate::error::{Error, Result};
use crate::form::QForm;
use crate::linalg::RatMatrix;
use crate::rat::{self, Rat};

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub form: QForm,
    /// Generators of an automorphism group, as matrices acting on coordinate columns.
    pub generators: Option<Vec<RatMatrix>>,
    pub notes: String,
    pub expected_kissing: usize,
    pub expected_determinant: Rat,
}

fn entry(name: String, gram: Vec<Vec<i64>>, gens: Option<Vec<Vec<Vec<i64>>>>, notes: &str, kissing: usize, det: Rat) -> CatalogEntry {
    let form = QForm::from_i64(&gram).expect("catalog Gram matrices are positive definite").named(name.clone());
    let generators = gens.map(|gs| gs.iter().map(|g| RatMatrix::from_i64_rows(g).expect("square generator")).collect());
    CatalogEntry { name, form, generators, notes: notes.to_string(), expected_kissing: kissing, expected_determinant: det }
}

fn identity(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect()
}

/// Reflection x -> x - (2 B(a, x) / Q(a)) a, for a root `a` of norm 2.
fn root_reflection(gram: &[Vec<i64>], a: &[i64]) -> Vec<Vec<i64>> {
    let n = gram.len();
    let ga: Vec<i64> = (0..n).map(|j| (0..n).map(|k| a[k] * gram[k][j]).sum()).collect();
    let qa: i64 = (0..n).map(|i| a[i] * ga[i]).sum();
    assert_eq!(qa, 2, "reflection root must have norm 2");
    (0..n).map(|i| (0..n).map(|j| (i == j) as i64 - a[i] * ga[j]).collect()).collect()
}

fn simple_reflections(gram: &[Vec<i64>]) -> Vec<Vec<Vec<i64>>> {
    let n = gram.len();
    (0..n)
        .map(|i| {
            let e: Vec<i64> = (0..n).map(|j| (i == j) as i64).collect();
            root_reflection(gram, &e)
        })
        .collect()
}

fn cartan(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<i64>> {
    let mut c = identity(n);
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x *= 2;
        }
    }
    for &(a, b) in edges {
        c[a][b] = -1;
        c[b][a] = -1;
    }
    c
}

const E_EDGES: [(usize, usize); 7] = [(0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3)];

fn e_cartan(n: usize) -> Vec<Vec<i64>> {
    let edges: Vec<(usize, usize)> = E_EDGES.iter().copied().filter(|&(a, b)| a < n && b < n).collect();
    cartan(n, &edges)
}

pub fn zn(n: usize) -> CatalogEntry {
    let mut gens = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let mut p = identity(n);
        p.swap(i, i + 1);
        gens.push(p);
    }
    let mut s = identity(n);
    s[0][0] = -1;
    gens.push(s);
    entry(format!("Z{n}"), identity(n), Some(gens), "integer lattice; signed permutations", 2 * n, rat::one())
}

pub fn an(n: usize) -> CatalogEntry {
    let gram: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 2 } else if i.abs_diff(j) == 1 { 1 } else { 0 }).collect())
        .collect();
    let gens = if n == 2 {
        // rotation of order 6 and the basis swap: dihedral group of order 12
        vec![vec![vec![0, -1], vec![1, 1]], vec![vec![0, 1], vec![1, 0]]]
    } else {
        let mut g = simple_reflections(&gram);
        g.push(identity(n).into_iter().map(|r| r.into_iter().map(|x| -x).collect()).collect());
        g
    };
    let notes = if n == 2 { "hexagonal lattice; dihedral group of order 12" } else { "root lattice; Weyl reflections and -1" };
    entry(format!("A{n}"), gram, Some(gens), notes, n * (n + 1), rat::int(n as i64 + 1))
}

pub fn dn(n: usize) -> CatalogEntry {
    assert!(n >= 3);
    let mut edges: Vec<(usize, usize)> = (0..n - 2).map(|i| (i, i + 1)).collect();
    edges.push((n - 3, n - 1));
    let gram = cartan(n, &edges);
    let mut gens = simple_reflections(&gram);
    if n == 4 {
        // triality: cyclic permutation of the outer nodes 0 -> 2 -> 3 -> 0
        let mut p = vec![vec![0i64; 4]; 4];
        p[2][0] = 1;
        p[3][2] = 1;
        p[0][3] = 1;
        p[1][1] = 1;
        gens.push(p);
        let notes = "root lattice; Weyl reflections and triality";
        return entry("D4".into(), gram, Some(gens), notes, 24, rat::int(4));
    }
    entry(format!("D{n}"), gram, Some(gens), "root lattice; Weyl reflections", 2 * n * (n - 1), rat::int(4))
}

pub fn e6() -> CatalogEntry {
    let gram = e_cartan(6);
    let mut gens = simple_reflections(&gram);
    gens.push(identity(6).into_iter().map(|r| r.into_iter().map(|x| -x).collect()).collect());
    entry("E6".into(), gram, Some(gens), "root lattice; Weyl reflections and -1", 72, rat::int(3))
}

pub fn e7() -> CatalogEntry {
    let gram = e_cartan(7);
    let gens = simple_reflections(&gram);
    entry("E7".into(), gram, Some(gens), "root lattice; Weyl reflections", 126, rat::int(2))
}

/// E8 in the basis of fundamental weights: the Gram matrix is the inverse
/// Cartan matrix, and simple roots are the columns of the Cartan matrix.
pub fn e8() -> CatalogEntry {
    let c = e_cartan(8);
    let inv = RatMatrix::from_i64_rows(&c).unwrap().inverse().expect("Cartan matrix is invertible");
    let gram: Vec<Vec<i64>> = (0..8)
        .map(|i| (0..8).map(|j| rat::to_i128(&inv[(i, j)]).expect("E8 is unimodular") as i64).collect())
        .collect();
    let gens = (0..8)
        .map(|j| {
            let root: Vec<i64> = (0..8).map(|i| c[i][j]).collect();
            root_reflection(&gram, &root)
        })
        .collect();
    entry("E8".into(), gram, Some(gens), "root lattice in the fundamental weight basis; Weyl reflections", 240, rat::one())
}

/// Barnes–Wall lattice: {x in Z^16 : x mod 2 in RM(1,4), sum(x) = 0 mod 4}
/// with half the standard inner product.
pub fn bw16() -> CatalogEntry {
    let mut gens: Vec<Vec<i64>> = Vec::new();
    // 2 * D16
    for i in 0..15 {
        let mut v = vec![0i64; 16];
        v[i] = 2;
        v[i + 1] = -2;
        gens.push(v);
    }
    let mut v = vec![0i64; 16];
    v[0] = 2;
    v[1] = 2;
    gens.push(v);
    // lifts of a basis of RM(1,4): all-ones and the four coordinate functions
    gens.push(vec![1; 16]);
    for bit in 0..4 {
        gens.push((0..16).map(|p| ((p >> bit) & 1) as i64).collect());
    }
    let basis = hermite_basis(gens, 16);
    let gram: Vec<Vec<i64>> = (0..16)
        .map(|i| {
            (0..16)
                .map(|j| {
                    let s: i64 = (0..16).map(|k| basis[i][k] * basis[j][k]).sum();
                    assert!(s % 2 == 0);
                    s / 2
                })
                .collect()
        })
        .collect();
    entry("BW16".into(), gram, None, "Barnes-Wall lattice from the first order Reed-Muller code", 4320, rat::int(256))
}

/// Row basis of the integer span of `rows` (Hermite normal form rows).
fn hermite_basis(mut rows: Vec<Vec<i64>>, n: usize) -> Vec<Vec<i64>> {
    let mut basis = Vec::new();
    for col in 0..n {
        loop {
            let nz: Vec<usize> = (0..rows.len()).filter(|&r| rows[r][col] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            let p = *nz.iter().min_by_key(|&&r| rows[r][col].abs()).unwrap();
            for &r in &nz {
                if r != p {
                    let f = rows[r][col] / rows[p][col];
                    let pr = rows[p].clone();
                    for (x, y) in rows[r].iter_mut().zip(&pr) {
                        *x -= f * y;
                    }
                }
            }
        }
        if let Some(p) = (0..rows.len()).find(|&r| rows[r][col] != 0) {
            let mut r = rows.swap_remove(p);
            if r[col] < 0 {
                r.iter_mut().for_each(|x| *x = -*x);
            }
            basis.push(r);
        }
    }
    assert_eq!(basis.len(), n, "generating set has full rank");
    basis
}

/// Names of all catalog entries.
pub fn names() -> Vec<String> {
    let mut out = Vec::new();
    out.extend((2..=8).map(|n| format!("Z{n}")));
    out.extend((2..=8).map(|n| format!("A{n}")));
    out.extend((4..=8).map(|n| format!("D{n}")));
    out.extend(["E6", "E7", "E8", "BW16"].map(String::from));
    out
}

pub fn all() -> Vec<CatalogEntry> {
    names().iter().map(|n| lookup(n).expect("catalog name")).collect()
}

/// Looks up an entry by name; Z, A and D accept any dimension up to 16.
pub fn lookup(name: &str) -> Result<CatalogEntry> {
    let unknown = || Error::InvalidArgument(format!("unknown catalog lattice '{name}'"));
    match name {
        "E6" => return Ok(e6()),
        "E7" => return Ok(e7()),
        "E8" => return Ok(e8()),
        "BW16" => return Ok(bw16()),
        _ => {}
    }
    let (family, rest) = name.split_at(1.min(name.len()));
    let n: usize = rest.parse().map_err(|_| unknown())?;
    match family {
        "Z" if (1..=16).contains(&n) => Ok(zn(n)),
        "A" if (1..=16).contains(&n) => Ok(an(n)),
        "D" if (3..=16).contains(&n) => Ok(dn(n)),
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_preserve_forms() {
        for e in all() {
            if let Some(gens) = &e.generators {
                for g in gens {
                    assert!(e.form.is_orthogonal(g), "{}", e.name);
                    assert!(g.is_integral());
                }
            }
        }
    }

    #[test]
    fn determinants() {
        for e in all() {
            assert_eq!(e.form.determinant(), e.expected_determinant, "{}", e.name);
        }
    }

    #[test]
    fn a2_rotation_has_order_six() {
        let g = &an(2).generators.unwrap()[0];
        let mut p = RatMatrix::identity(2);
        for k in 1..=6 {
            p = p.mul(g).unwrap();
            assert_eq!(p == RatMatrix::identity(2), k == 6);
        }
    }

    #[test]
    fn lookup_rejects_unknown() {
        assert!(lookup("F4").is_err());
        assert!(lookup("").is_err());
        assert!(lookup("Z0").is_err());
        assert_eq!(lookup("Z3").unwrap().form.dim(), 3);
    }
}
