use num_traits::Zero;
use proptest::prelude::*;
use vlab_core::catalog;
use vlab_core::designs::{self, Strength};
use vlab_core::enumerate::{self, EnumOptions};
use vlab_core::extremality::{self, ClassifyOptions};
use vlab_core::invariants::{self, GroupGenSet};
use vlab_core::rat::{frac, int};
use vlab_core::spaces::{self, Point, SpaceDescriptor};
use vlab_core::{deform_eval, Deformation, QForm, Rat, RatMatrix, SymEndo};

fn small_forms() -> Vec<QForm> {
    vec![catalog::an(2).form, catalog::an(3).form, catalog::dn(4).form, QForm::identity(3), catalog::zn(2).form]
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// Verdict fingerprint on one point set: (eutactic, strongly, perfect, rank, S22 holds).
fn fingerprint(s: &SpaceDescriptor) -> (bool, bool, bool, usize, bool) {
    let e = extremality::test_eutaxy(s).unwrap();
    let p = extremality::test_perfection(s).unwrap();
    let d = designs::test_design(s, Strength::S22, None).unwrap();
    (e.eutactic, e.strongly_eutactic, p.perfect, p.rank, d.holds)
}

/// A Q-orthogonal rational matrix by the Cayley transform of a Q-skew map.
fn cayley(q: &QForm, skew: &[i64]) -> RatMatrix {
    let n = q.dim();
    let mut s = RatMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            s[(i, j)] = int(skew[k]);
            s[(j, i)] = int(-skew[k]);
            k += 1;
        }
    }
    let a = q.gram().inverse().unwrap().mul(&s).unwrap();
    let id = RatMatrix::identity(n);
    id.sub(&a).mul(&id.add(&a).inverse().unwrap()).unwrap()
}

/// g x scaled to a primitive integer vector (the functionals are projective).
fn transform_point(q: &QForm, g: &RatMatrix, x: &[i64]) -> Point {
    let v = g.mul_vec(&enumerate::to_rat_vec(x)).unwrap();
    let l = v.iter().fold(num_bigint::BigInt::from(1), |acc, r| num_integer::Integer::lcm(&acc, r.denom()));
    let ints: Vec<num_bigint::BigInt> = v.iter().map(|r| r.numer() * (&l / r.denom())).collect();
    let gcd = ints.iter().fold(num_bigint::BigInt::zero(), |acc, x| num_integer::Integer::gcd(&acc, x));
    let coords = ints.iter().map(|x| i64::try_from(x / &gcd).expect("small coordinates")).collect();
    Point::new(q, coords).unwrap()
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn scale_invariance(idx in 0usize..5, num in 1i64..6, den in 1i64..6) {
        let q = &small_forms()[idx];
        let c = frac(num, den);
        let qc = q.scaled(&c).unwrap();
        let l = enumerate::minimal_vectors(q).unwrap();
        let lc = enumerate::minimal_vectors(&qc).unwrap();
        prop_assert_eq!(&l.vectors, &lc.vectors);
        prop_assert_eq!(&lc.radius, &(&l.radius * &c));
        let s = spaces::classic_space_from_layer(q, &l).unwrap();
        let sc = spaces::classic_space_from_layer(&qc, &lc).unwrap();
        prop_assert_eq!(fingerprint(&s), fingerprint(&sc));
        let a = extremality::classify_extremality(&s, ClassifyOptions::default()).unwrap();
        let b = extremality::classify_extremality(&sc, ClassifyOptions::default()).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        let h = q.hermite_invariant(&l.radius).unwrap();
        let hc = qc.hermite_invariant(&lc.radius).unwrap();
        prop_assert!((h - hc).abs() <= 1e-12 * h);
    }

    #[test]
    fn orthogonal_invariance(idx in 0usize..5, skew in proptest::collection::vec(-2i64..=2, 6)) {
        let q = &small_forms()[idx];
        let n = q.dim();
        let g = cayley(q, &skew[..n * (n - 1) / 2]);
        prop_assert!(q.is_orthogonal(&g));
        let l = enumerate::minimal_vectors(q).unwrap();
        let s = spaces::classic_space_from_layer(q, &l).unwrap();
        let moved: Vec<Point> = l.vectors.iter().map(|x| transform_point(q, &g, x)).collect();
        let sg = spaces::classic_space(q, moved).unwrap();
        prop_assert_eq!(fingerprint(&s), fingerprint(&sg));
    }

    #[test]
    fn gp_basis_change_keeps_design_verdicts(idx in 0usize..5, coeffs in proptest::collection::vec(-3i64..=3, 100)) {
        let q = &small_forms()[idx];
        let l = enumerate::minimal_vectors(q).unwrap();
        let s = spaces::classic_space_from_layer(q, &l).unwrap();
        let d = s.gp_dim();
        // unit upper triangular mixing keeps the basis a basis
        let basis: Vec<SymEndo> = (0..d)
            .map(|i| {
                let c: Vec<Rat> = (0..d).map(|j| if j == i { int(1) } else if j > i { frac(coeffs[(i * d + j) % 100], 2) } else { int(0) }).collect();
                SymEndo::combination(&c, &s.gp_basis)
            })
            .collect();
        let s2 = SpaceDescriptor::new("mixed", s.kind.clone(), q.clone(), basis, s.points.clone()).unwrap();
        for st in [Strength::S2, Strength::S22, Strength::Four] {
            prop_assert_eq!(designs::test_design(&s, st, None).unwrap().holds, designs::test_design(&s2, st, None).unwrap().holds);
        }
        prop_assert_eq!(fingerprint(&s), fingerprint(&s2));
    }

    #[test]
    fn antipodal_weights(idx in 0usize..5, raw in proptest::collection::vec(1i64..10, 12)) {
        let q = &small_forms()[idx];
        let l = enumerate::minimal_vectors(q).unwrap();
        let s = spaces::classic_space_from_layer(q, &l).unwrap();
        let k = s.points.len();
        let total: i64 = raw[..k].iter().sum();
        let w: Vec<Rat> = raw[..k].iter().map(|&x| frac(x, total)).collect();
        let mut full = s.points.clone();
        full.extend(s.points.iter().map(|p| Point::new(q, p.coords.iter().map(|x| -x).collect()).unwrap()));
        let sf = s.with_points(full);
        let mut wf: Vec<Rat> = w.iter().map(|x| x / int(2)).collect();
        wf.extend(wf.clone());
        for st in [Strength::S2, Strength::S22, Strength::Four] {
            let a = designs::test_design(&s, st, Some(&w)).unwrap();
            let b = designs::test_design(&sf, st, Some(&wf)).unwrap();
            prop_assert_eq!(&a.residuals, &b.residuals);
            prop_assert!(designs::verify_design(&s, &a).unwrap());
        }
    }

    #[test]
    fn action_composition(skew_a in proptest::collection::vec(-2i64..=2, 3), skew_b in proptest::collection::vec(-2i64..=2, 3)) {
        let q = catalog::an(3).form;
        let g = cayley(&q, &skew_a);
        let h = cayley(&q, &skew_b);
        for d in [2, 4] {
            let lhs = invariants::sym_power_action(&g.mul(&h).unwrap(), d).unwrap();
            let rhs = invariants::sym_power_action(&g, d).unwrap().mul(&invariants::sym_power_action(&h, d).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn redundant_generators(name_idx in 0usize..4, picks in proptest::collection::vec((0usize..8, 0usize..8), 1..4)) {
        let e = catalog::lookup(["A2", "A3", "D4", "Z3"][name_idx]).unwrap();
        let q = e.form.clone();
        let gens = e.generators.unwrap();
        let base = GroupGenSet::checked_for(&q, gens.clone()).unwrap();
        let mut extra = gens.clone();
        for (a, b) in picks {
            extra.push(gens[a % gens.len()].mul(&gens[b % gens.len()]).unwrap());
        }
        let more = GroupGenSet::checked_for(&q, extra).unwrap();
        for d in [2, 4] {
            let k = invariants::fixed_dim(&base, d).unwrap();
            prop_assert!(k >= 1);
            prop_assert_eq!(k, invariants::fixed_dim(&more, d).unwrap());
        }
    }

    #[test]
    fn deformation_taylor(idx in 0usize..5, coeffs in proptest::collection::vec(-3i64..=3, 9), x in proptest::collection::vec(-3i64..=3, 4)) {
        let q = &small_forms()[idx];
        let n = q.dim();
        let gp = spaces::classic_gp_basis(q.gram()).unwrap();
        let h = SymEndo::combination(&coeffs[..gp.len()].iter().map(|&c| int(c)).collect::<Vec<_>>(), &gp);
        let xr = enumerate::to_rat_vec(&x[..n]);
        let hx = h.matrix().mul_vec(&xr).unwrap();
        let q0 = vlab_core::rat::to_f64(&q.eval(&xr).unwrap());
        let q1 = vlab_core::rat::to_f64(&q.bilinear(&xr, &hx).unwrap());
        let q2 = vlab_core::rat::to_f64(&q.eval(&hx).unwrap());
        let hhx = h.matrix().mul_vec(&hx).unwrap();
        let q3 = vlab_core::rat::to_f64(&q.bilinear(&hx, &hhx).unwrap());
        let q4 = vlab_core::rat::to_f64(&q.eval(&hhx).unwrap());
        for t in [1e-3, -2e-3, 5e-3] {
            let d = Deformation::new(q.clone(), h.clone(), t).unwrap();
            let v = deform_eval(&d, &xr).unwrap();
            // Q(x, exp(tH) x) = sum_k t^k Q(x, H^k x) / k!
            let taylor = q0 + t * q1 + t * t / 2.0 * q2 + t.powi(3) / 6.0 * q3;
            let remainder = 2.0 * t.powi(4) / 24.0 * q4;
            let rounding = 1e-13 * (q0.abs() + q1.abs() + q2.abs() + 1.0);
            prop_assert!((v - taylor).abs() <= remainder + rounding, "{v} vs {taylor}");
        }
    }

    #[test]
    fn weighted_designs_accept_arbitrary_weights(raw in proptest::collection::vec(1i64..50, 3)) {
        let q = catalog::an(2).form;
        let l = enumerate::minimal_vectors(&q).unwrap();
        let s = spaces::classic_space_from_layer(&q, &l).unwrap();
        let total: i64 = raw.iter().sum();
        let w: Vec<Rat> = raw.iter().map(|&x| frac(x, total)).collect();
        let v = designs::test_design(&s, Strength::S2, Some(&w)).unwrap();
        // A2 roots carry a weighted {2}-design exactly when the weights are equal.
        prop_assert_eq!(v.holds, raw.iter().all(|&x| x == raw[0]));
        prop_assert!(designs::verify_design(&s, &v).unwrap());
    }
}

#[test]
fn venkov_chain_on_catalog_layers() {
    for e in catalog::all().into_iter().filter(|e| e.form.dim() <= 6) {
        let q = &e.form;
        let gamma = enumerate::minimum(q).unwrap();
        for l in enumerate::vectors_up_to(q, &(&gamma * int(2))).unwrap() {
            let s = spaces::classic_space_from_layer(q, &l).unwrap();
            if designs::test_design(&s, Strength::S2, None).unwrap().holds {
                assert!(extremality::test_eutaxy(&s).unwrap().strongly_eutactic, "{} {}", e.name, l.radius);
            }
            if designs::test_design(&s, Strength::S22, None).unwrap().holds {
                assert!(extremality::test_perfection(&s).unwrap().perfect, "{} {}", e.name, l.radius);
                assert!(extremality::test_eutaxy(&s).unwrap().eutactic);
            }
        }
    }
}

#[test]
fn invariance_criterion_implies_layer_designs() {
    for (name, bound) in [("A2", 14), ("D4", 6), ("E8", 4)] {
        let e = catalog::lookup(name).unwrap();
        let g = GroupGenSet::checked_for(&e.form, e.generators.clone().unwrap()).unwrap();
        assert!(invariants::invariance_criterion(&g).unwrap().passes_fc4);
        let r = designs::test_layers_design(&e.form, &int(bound), Strength::Four, EnumOptions::default()).unwrap();
        assert!(r.all_hold, "{name}");
    }
}

#[test]
fn coulangeon_monotone_in_bound() {
    let q = catalog::an(2).form;
    let hi = vlab_core::zeta::coulangeon_check(&q, &int(14)).unwrap();
    let lo = vlab_core::zeta::coulangeon_check(&q, &int(6)).unwrap();
    assert!(hi.holds_to_bound && lo.holds_to_bound);
}

#[test]
fn zeta_first_order_vanishes_on_strongly_eutactic_layers() {
    let q = catalog::dn(4).form;
    for h in spaces::classic_gp_basis(q.gram()).unwrap() {
        let d = vlab_core::zeta::zeta_directional(&q, &h, 4.0, &int(12)).unwrap();
        assert!(d.a_h.abs() <= 1e-12 * d.scale.max(1.0));
    }
}
