//! Property tests for the geometry, normalization, and masking invariants.

use proptest::prelude::*;

use solintent::corpus::{label_vector, labels_from_vector, IntentLabel};
use solintent::embed::{
    cosine_distance, cosine_similarity, hash_encode, Embedding, EmbeddingMatrix,
};
use solintent::extract::normalize_source;
use solintent::highlight::{highlight, HighlightConfig, KMeansConfig, KMeansModel};
use solintent::nn::{predict, IntentModel, ModelConfig, Variant};

fn nonzero_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1000.0f64..1000.0, dim).prop_filter("nonzero", |v| {
        v.iter().any(|&x| x.abs() > 1e-6)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cosine_similarity_is_symmetric(a in nonzero_vec(8), b in nonzero_vec(8)) {
        let ea = Embedding::new(a).unwrap();
        let eb = Embedding::new(b).unwrap();
        let ab = cosine_similarity(&ea, &eb).unwrap();
        let ba = cosine_similarity(&eb, &ea).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn cosine_similarity_ignores_positive_scale(a in nonzero_vec(8), b in nonzero_vec(8), alpha in 1e-3f64..1e3) {
        let ea = Embedding::new(a.clone()).unwrap();
        let eb = Embedding::new(b).unwrap();
        let scaled = Embedding::new(a.iter().map(|x| x * alpha).collect()).unwrap();
        let plain = cosine_similarity(&ea, &eb).unwrap();
        let stretched = cosine_similarity(&scaled, &eb).unwrap();
        prop_assert!((plain - stretched).abs() < 1e-9, "{plain} vs {stretched}");
    }

    #[test]
    fn cosine_distance_is_bounded_and_zero_on_self(a in nonzero_vec(8), b in nonzero_vec(8)) {
        let ea = Embedding::new(a).unwrap();
        let eb = Embedding::new(b).unwrap();
        let d = cosine_distance(&ea, &eb).unwrap();
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&d));
        let self_d = cosine_distance(&ea, &ea).unwrap();
        prop_assert!(self_d.abs() < 1e-12);
    }

    #[test]
    fn label_vector_is_a_bijection(bits in prop::collection::vec(any::<bool>(), 10)) {
        let labels: std::collections::BTreeSet<IntentLabel> = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| IntentLabel::from_index(i).unwrap())
            .collect();
        let v = label_vector(&labels);
        prop_assert_eq!(labels_from_vector(&v), labels);
        for (i, &b) in bits.iter().enumerate() {
            prop_assert_eq!(v[i] == 1.0, b);
        }
    }

    #[test]
    fn hash_encoder_is_deterministic_and_unit(text in "[a-zA-Z0-9_(){};. ]{1,80}", seed in any::<u64>()) {
        prop_assume!(!text.trim().is_empty());
        match (hash_encode(&text, 32, seed), hash_encode(&text, 32, seed)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.as_slice(), b.as_slice());
                prop_assert!((a.norm() - 1.0).abs() < 1e-9);
            }
            // A text whose contributions all cancel is rejected, never NaN.
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "non-deterministic failure"),
        }
    }

    #[test]
    fn normalize_is_idempotent_on_generated_source(
        parts in prop::collection::vec(
            prop_oneof![
                Just("contract C{".to_string()),
                Just("}".to_string()),
                Just("uint a; // note\n".to_string()),
                Just("/* block */".to_string()),
                Just("pragma solidity ^0.8.0;\n".to_string()),
                Just("import \"./x.sol\";\n".to_string()),
                Just("string s = \"// keep\";\n".to_string()),
                Just("string t = \"pragma inside\";\n".to_string()),
                "[a-zA-Z0-9_ ;(){}\n]{0,24}".prop_map(|s| s),
            ],
            0..12,
        )
    ) {
        let raw: String = parts.concat();
        if let Ok(once) = normalize_source(&raw) {
            let twice = normalize_source(&once.text).unwrap();
            prop_assert_eq!(once.text, twice.text);
        }
    }

    #[test]
    fn highlight_scales_exactly_or_not_at_all(
        rows in prop::collection::vec(nonzero_vec(4), 1..12),
        mu in prop_oneof![Just(2.0f64), Just(4.0), Just(10.0)],
        lambda in 0.0f64..2.0,
    ) {
        let centroids = vec![
            Embedding::unit(vec![1.0, 0.0, 0.0, 0.0]).unwrap(),
            Embedding::unit(vec![0.0, 1.0, 0.0, 0.0]).unwrap(),
        ];
        let model = KMeansModel {
            centroids,
            k: 2,
            m: 4,
            twcv_history: vec![],
            config: KMeansConfig::default(),
        };
        let embs: Vec<Embedding> = rows.iter().map(|r| Embedding::new(r.clone()).unwrap()).collect();
        let x = EmbeddingMatrix::new(embs, 4).unwrap();
        let out = highlight(&model, &x, &HighlightConfig { lambda, mu }).unwrap();
        for (i, s) in out.strengths.iter().enumerate() {
            prop_assert_eq!(s.scaled, s.distance >= lambda);
            for (o, n) in x.row(i).as_slice().iter().zip(out.matrix.row(i).as_slice()) {
                if s.scaled {
                    prop_assert_eq!(*n, o * mu, "scaled row must be exactly mu x original");
                } else {
                    prop_assert_eq!(*n, *o, "unscaled row must be bit-identical");
                }
            }
            let sim = cosine_similarity(x.row(i), out.matrix.row(i)).unwrap();
            prop_assert!((sim - 1.0).abs() < 1e-12, "direction preserved");
        }
    }

    #[test]
    fn predict_ignores_appended_zero_rows(
        seed in any::<u64>(),
        n_rows in 1usize..4,
        extra in 1usize..3,
        variant_pick in 0usize..3,
    ) {
        let variant = [Variant::Bilstm, Variant::Lstm, Variant::Cnn][variant_pick];
        let config = ModelConfig {
            max_functions: 6,
            feature_dim: 4,
            hidden: 3,
            labels: 10,
            variant,
        };
        let model = IntentModel::new(config, seed).unwrap();
        let mut rng = solintent::rng::SplitMix64::new(seed ^ 0x5eed);
        let rows: Vec<Embedding> = (0..n_rows)
            .map(|_| Embedding::new((0..4).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap())
            .collect();
        let x = EmbeddingMatrix::new(rows.clone(), 4).unwrap();
        let mut padded_rows = rows;
        for _ in 0..extra {
            padded_rows.push(Embedding::new(vec![0.0; 4]).unwrap());
        }
        let padded = EmbeddingMatrix::new(padded_rows, 4).unwrap();
        let y1 = predict(&model, &x).unwrap();
        let y2 = predict(&model, &padded).unwrap();
        for (a, b) in y1.iter().zip(&y2) {
            prop_assert!((a - b).abs() <= 1e-9);
            prop_assert!(*a > 0.0 && *a < 1.0, "probabilities stay in (0,1)");
        }
    }
}
