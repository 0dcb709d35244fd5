mod support;

use cuisine_core::classifier::CuisineDistribution;
use cuisine_core::corpus::Vocabulary;
use cuisine_core::embeddings::{EmbeddingConfig, EmbeddingSpace};
use cuisine_core::layout::eigen::symmetric_eigen;
use cuisine_core::layout::{
    barycentric_position, country_similarity, render_svg, spectral_circle_layout, write_svg, CircleLayout,
    CountrySimilarityMatrix, DiagramPoint, EigenSelection, LabeledPoint, LayoutError,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random country vectors in `dim` dimensions, clamped-cosine adjacency.
fn random_matrix(n: usize, dim: usize, seed: u64) -> CountrySimilarityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i * n + j] = support::cosine(&vectors[i], &vectors[j]).max(0.0);
            }
        }
    }
    CountrySimilarityMatrix::new((0..n).map(|i| format!("country_{i}")).collect(), w).unwrap()
}

fn layout_20(seed: u64) -> CircleLayout {
    spectral_circle_layout(&random_matrix(20, 8, seed), EigenSelection::Largest).unwrap()
}

#[test]
fn jacobi_agrees_with_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [2, 5, 20] {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let ours = symmetric_eigen(&a, n).unwrap();
        let reference = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &a));
        let mut values: Vec<f64> = reference.eigenvalues.iter().copied().collect();
        values.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in ours.values.iter().zip(&values) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
        let m = DMatrix::from_row_slice(n, n, &a);
        for (lambda, v) in ours.values.iter().zip(&ours.vectors) {
            let v = nalgebra::DVector::from_column_slice(v);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!((&m * &v - *lambda * &v).norm() < 1e-10);
        }
    }
}

#[test]
fn random_walk_is_row_stochastic_with_unit_leading_eigenvalue() {
    for seed in 0..5 {
        let m = random_matrix(20, 8, seed);
        let p = m.random_walk();
        for row in p.chunks(20) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let layout = spectral_circle_layout(&m, EigenSelection::Largest).unwrap();
        assert!((layout.eigenvalues[0] - 1.0).abs() < 1e-8);
        // Cross-check the spectrum of the non-symmetric D⁻¹W directly.
        let reference = DMatrix::from_row_slice(20, 20, &p).complex_eigenvalues();
        let mut re: Vec<f64> = reference.iter().map(|c| c.re).collect();
        re.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in layout.eigenvalues.iter().zip(&re) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
        assert!(reference.iter().all(|c| c.im.abs() < 1e-8));
    }
}

#[test]
fn positions_lie_on_unit_circle() {
    for seed in 0..5 {
        for selection in [EigenSelection::Largest, EigenSelection::Smallest] {
            let layout = spectral_circle_layout(&random_matrix(20, 8, seed), selection).unwrap();
            assert_eq!(layout.positions.len(), 20);
            for p in &layout.positions {
                assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn complete_triangle_gives_three_distinct_points() {
    let w = vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
    let m = CountrySimilarityMatrix::new(vec!["a".into(), "b".into(), "c".into()], w).unwrap();
    let layout = spectral_circle_layout(&m, EigenSelection::Largest).unwrap();
    let p = &layout.positions;
    for i in 0..3 {
        for j in i + 1..3 {
            let d = (p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1]);
            // The rows of an orthonormal basis of 1⊥ form an equilateral triangle.
            assert!((d - 3f64.sqrt()).abs() < 1e-9, "{d}");
        }
    }
}

#[test]
fn permutation_equivariance() {
    let m = random_matrix(20, 8, 7);
    let base = spectral_circle_layout(&m, EigenSelection::Largest).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut perm: Vec<usize> = (0..20).collect();
    rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
    // Country perm[k] of the original becomes country k.
    let n = 20;
    let w: Vec<f64> = (0..n * n).map(|k| m.weight(perm[k / n], perm[k % n])).collect();
    let names = perm.iter().map(|&i| m.countries()[i].clone()).collect();
    let permuted = spectral_circle_layout(
        &CountrySimilarityMatrix::new(names, w).unwrap(),
        EigenSelection::Largest,
    )
    .unwrap();
    let matches = |sx: f64, sy: f64| {
        (0..n).all(|k| {
            let a = base.positions[perm[k]];
            let b = permuted.positions[k];
            (a[0] * sx - b[0]).abs() < 1e-9 && (a[1] * sy - b[1]).abs() < 1e-9
        })
    };
    assert!([(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .any(|&(sx, sy)| matches(sx, sy)));
}

#[test]
fn single_country_maps_to_its_vertex() {
    let layout = layout_20(3);
    for c in 0..20 {
        let p = barycentric_position(&CuisineDistribution::point_mass(20, c), &layout).unwrap();
        assert_eq!([p.x, p.y], layout.positions[c]);
    }
}

#[test]
fn uniform_maps_to_centroid() {
    let layout = layout_20(3);
    let p = barycentric_position(&CuisineDistribution::uniform(20), &layout).unwrap();
    let cx = layout.positions.iter().map(|q| q[0]).sum::<f64>() / 20.0;
    let cy = layout.positions.iter().map(|q| q[1]).sum::<f64>() / 20.0;
    assert!((p.x - cx).abs() < 1e-12 && (p.y - cy).abs() < 1e-12);
}

#[test]
fn distribution_length_must_match() {
    let layout = layout_20(3);
    assert!(matches!(
        barycentric_position(&CuisineDistribution::uniform(5), &layout),
        Err(LayoutError::DimensionMismatch { .. })
    ));
}

fn distribution() -> impl Strategy<Value = CuisineDistribution> {
    prop::collection::vec(0.0f64..1.0, 20).prop_filter_map("nonzero", |w| {
        let s: f64 = w.iter().sum();
        (s > 0.0).then(|| CuisineDistribution::new(w.iter().map(|x| x / s).collect()))
    })
}

proptest! {
    #[test]
    fn barycentric_is_linear(p in distribution(), q in distribution(), alpha in 0.0f64..=1.0) {
        let layout = layout_20(11);
        let mix: Vec<f64> = p.probs().iter().zip(q.probs()).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let mixed = barycentric_position(&CuisineDistribution::new(mix), &layout).unwrap();
        let pp = barycentric_position(&p, &layout).unwrap();
        let pq = barycentric_position(&q, &layout).unwrap();
        prop_assert!((mixed.x - (alpha * pp.x + (1.0 - alpha) * pq.x)).abs() < 1e-12);
        prop_assert!((mixed.y - (alpha * pp.y + (1.0 - alpha) * pq.y)).abs() < 1e-12);
        prop_assert!(pp.x.hypot(pp.y) <= 1.0 + 1e-12);
    }
}

#[test]
fn country_similarity_from_hand_set_vectors() {
    let vocab = Vocabulary::from_parts(
        vec!["salt".into()],
        vec!["a".into(), "b".into(), "c".into(), "d".into()],
    )
    .unwrap();
    let config = EmbeddingConfig {
        dim: 2,
        ..EmbeddingConfig::default()
    };
    // salt, a, b, c, d
    let input = vec![1.0, 1.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, -1.0, 0.0];
    let space = EmbeddingSpace::from_vectors(vocab.clone(), config.clone(), input, vec![0.0; 10]).unwrap();
    let m = country_similarity(&space).unwrap();
    assert_eq!(m.weight(0, 1), 1.0);
    assert_eq!(m.weight(0, 2), 0.0);
    assert_eq!(m.weight(0, 3), 0.0);
    assert_eq!(m.weight(1, 1), 0.0);
    let zero = vec![1.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 1.0, -1.0, 0.0];
    let space = EmbeddingSpace::from_vectors(vocab, config, zero, vec![0.0; 10]).unwrap();
    assert!(matches!(country_similarity(&space), Err(LayoutError::ZeroVector(c)) if c == "a"));
}

#[test]
fn svg_is_deterministic_and_draws_each_point() {
    let layout = layout_20(5);
    let none = render_svg(&layout, &[]);
    assert_eq!(none.matches("class=\"country-label\"").count(), 20);
    assert_eq!(none.matches("class=\"point\"").count(), 0);
    let points: Vec<LabeledPoint> = (0..6)
        .map(|i| LabeledPoint {
            label: format!("step {i}"),
            point: DiagramPoint {
                x: 0.1 * i as f64,
                y: -0.05 * i as f64,
            },
        })
        .collect();
    let svg = render_svg(&layout, &points);
    assert_eq!(svg.matches("class=\"point\"").count(), 6);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    write_svg(&layout, &points, &a).unwrap();
    write_svg(&layout, &points, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(write_svg(&layout, &points, dir.path().join("missing/x.svg")).is_err());
}

#[test]
fn coordinates_export_round_trips() {
    let layout = layout_20(5);
    let parsed: std::collections::BTreeMap<String, [f64; 2]> =
        serde_json::from_str(&layout.coordinates_json()).unwrap();
    assert_eq!(parsed.len(), 20);
    for (name, pos) in &parsed {
        assert_eq!(layout.position(name).unwrap(), *pos);
    }
}
