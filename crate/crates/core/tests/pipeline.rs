use origami_schottky::builder::*;
use origami_schottky::geometry::Interior;
use origami_schottky::limitset::*;
use origami_schottky::moebius::MapClass;
use origami_schottky::presentation::*;
use proptest::prelude::*;

fn word_strategy(gens: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0..gens as i32, any::<bool>()), 0..=max_len)
        .prop_map(|v| Word::new(v.into_iter().map(|(g, inv)| if inv { -(g + 1) } else { g + 1 })))
}

#[test]
fn standard_subgroups_are_schottky() {
    let cases = [
        (build_case_a(3).unwrap(), subgroup_words_odd(3).unwrap(), 6, 3),
        (build_case_a(5).unwrap(), subgroup_words_odd(5).unwrap(), 10, 5),
        (build_case_a(2).unwrap(), subgroup_words_even(2).unwrap(), 4, 2),
        (build_case_a(4).unwrap(), subgroup_words_even(4).unwrap(), 8, 4),
        (build_case_b().unwrap(), subgroup_words_a4(), 12, 4),
    ];
    for (k, words, index, genus) in cases {
        let r = realize_subgroup_with_depth(&k, &words, Some(3)).unwrap();
        assert_eq!(r.index, index);
        assert_eq!(r.genus, genus);
        // A Schottky group of rank g is free on g generators.
        assert_eq!(r.generator_words.len() as u64, genus);
        assert!(r.passed(), "{:?}", r.generator_text);
    }
}

#[test]
fn normal_subgroup_quotient_matches_vertex_group() {
    let k = build_case_b().unwrap();
    let r = realize_subgroup(&k, &subgroup_words_a4()).unwrap();
    assert_eq!(r.quotient_tag, Some(StructureTag::A4));
    assert_eq!(r.hurwitz_equality, Some(true));
    assert_eq!(r.core_index, 12);
}

#[test]
fn element_count_grows_like_free_product() {
    let k = build_case_a(3).unwrap();
    let elements = enumerate_elements(&k, 3).unwrap();
    let by_len = |l| elements.iter().filter(|e| e.length == l).count();
    assert_eq!(by_len(0), 1);
    // The dihedral part is finite, so growth comes from T.
    assert!(by_len(3) > by_len(2) && by_len(2) > by_len(1));
    for e in &elements {
        assert!(k.eval(&e.word).approx_eq(&e.map, 1e-8 * e.map.norm_max().max(1.0)));
    }
}

#[test]
fn limit_points_lie_in_bounded_or_unbounded_discs() {
    let k = build_case_b().unwrap();
    let cloud = limit_point_cloud(&k, 4, LimitSeeds::FixedPointsOfT).unwrap();
    assert!(!cloud.points.is_empty());
    assert_eq!(points_outside(&cloud.points, &k.certificate.circles, 1e-9), 0);
    assert!(k
        .certificate
        .circles
        .iter()
        .any(|c| c.interior == Interior::BoundedDisc));
}

#[test]
fn artifact_round_trip_preserves_group() {
    let k = build_case_a(4).unwrap();
    let text = serde_json::to_string(&k).unwrap();
    let back: OrigamiSchottkyGroup = serde_json::from_str(&text).unwrap();
    back.check().unwrap();
    assert_eq!(back.presentation, k.presentation);
    assert!(back.t.approx_eq(&k.t, 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_evaluation_is_a_homomorphism(u in word_strategy(2, 8), v in word_strategy(2, 8)) {
        let k = build_case_a(3).unwrap();
        let (mu, mv) = (k.eval(&u), k.eval(&v));
        let lhs = k.eval(&u.concat(&v));
        let rhs = mu.compose(&mv);
        // Rounding in a product is bounded by the product of the factor norms.
        let scale = (mu.norm_max() * mv.norm_max()).max(1.0);
        prop_assert!(lhs.approx_eq(&rhs, 1e-9 * scale));
    }

    #[test]
    fn coset_action_is_a_homomorphism(u in word_strategy(2, 10), v in word_strategy(2, 10)) {
        let p = presentation_case_a(5).unwrap();
        let t = todd_coxeter(&p, &subgroup_words_odd(5).unwrap(), DEFAULT_MAX_COSETS).unwrap();
        let lhs = word_permutation(&t, &u.concat(&v));
        let rhs = word_permutation(&t, &u).then(&word_permutation(&t, &v));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn subgroup_words_fix_the_base_coset(picks in prop::collection::vec((0usize..4, any::<bool>()), 1..6)) {
        let k = build_case_b().unwrap();
        let gens = subgroup_words_a4();
        let t = todd_coxeter(&k.presentation, &gens, DEFAULT_MAX_COSETS).unwrap();
        let w = picks.iter().fold(Word::empty(), |acc, &(i, inv)| {
            acc.concat(&if inv { gens[i].inverse() } else { gens[i].clone() })
        });
        prop_assert_eq!(t.trace(0, &w), 0);
        if !w.is_empty() {
            prop_assert_eq!(k.eval(&w).classify(1e-9), MapClass::Loxodromic);
        }
    }
}
