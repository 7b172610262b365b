use vlab_core::catalog;
use vlab_core::enumerate::{self, brute_force_oracle, minimal_vectors, vectors_up_to, EnumOptions};
use vlab_core::rat::{self, int};
use vlab_core::QForm;

#[test]
fn catalog_agrees_with_oracle_up_to_three_minima() {
    for name in catalog::names() {
        let e = catalog::lookup(&name).unwrap();
        if e.form.dim() > 8 {
            continue;
        }
        let min = minimal_vectors(&e.form).unwrap();
        assert_eq!(min.count(), e.expected_kissing, "{name}");
        let bound = &min.radius * int(3);
        let fast = vectors_up_to(&e.form, &bound).unwrap();
        let slow = brute_force_oracle(&e.form, &bound).unwrap();
        assert_eq!(fast, slow, "{name}");
        for l in &fast {
            assert!(enumerate::layer_values_exact(&e.form, l).unwrap());
        }
    }
}

#[test]
fn bw16_kissing_number() {
    let e = catalog::bw16();
    let min = minimal_vectors(&e.form).unwrap();
    assert_eq!(min.radius, int(4));
    assert_eq!(min.count(), 4320);
}

#[test]
fn e8_theta_prefix() {
    let layers = vectors_up_to(&catalog::e8().form, &int(6)).unwrap();
    let counts: Vec<usize> = layers.iter().map(|l| l.count()).collect();
    assert_eq!(counts, vec![240, 2160, 6720]);
}

#[test]
fn d4_oracle_counts() {
    let layers = brute_force_oracle(&catalog::dn(4).form, &int(4)).unwrap();
    let counts: Vec<usize> = layers.iter().map(|l| l.count()).collect();
    assert_eq!(counts, vec![24, 24]);
}

/// Hexagonal theta series by direct convolution over x^2 + xy + y^2 forms.
#[test]
fn a2_counts_match_hexagonal_representation_numbers() {
    let layers = vectors_up_to(&catalog::an(2).form, &int(60)).unwrap();
    for l in &layers {
        let r = rat::to_i128(&l.radius).unwrap() as i64;
        // 2(a^2 + ab + b^2) = r
        let mut count = 0;
        for a in -20i64..=20 {
            for b in -20i64..=20 {
                if 2 * (a * a + a * b + b * b) == r {
                    count += 1;
                }
            }
        }
        assert_eq!(l.count(), count, "radius {r}");
    }
}

#[test]
fn bounds_are_monotone_prefixes() {
    let q = QForm::from_i64(&[vec![3, 1, 0], vec![1, 4, 1], vec![0, 1, 5]]).unwrap();
    let small = vectors_up_to(&q, &int(20)).unwrap();
    let large = vectors_up_to(&q, &int(45)).unwrap();
    assert_eq!(&large[..small.len()], &small[..]);
}

#[test]
fn thread_count_does_not_change_output() {
    let q = catalog::e8().form;
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = one.install(|| vectors_up_to(&q, &int(4)).unwrap());
    let b = vectors_up_to(&q, &int(4)).unwrap();
    assert_eq!(a, b);
    let _ = EnumOptions::default();
}
