//! Class-attribute graph construction.
//!
//! Nodes are the classes followed by the attributes. Class-attribute edges
//! carry prototype values; attribute-attribute edges carry the covariance of
//! the prototype columns, min-max rescaled into the prototype value range so
//! the adjacency stays nonnegative and degree normalization is well defined.
//!
//! Node ordering is fixed everywhere: classes `0..d_C` first (seen classes in
//! ascending index order, then unseen), attributes `d_C..d_C+d_T` after.

use crate::dataset::ZslDataset;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::scalar::{s, Scalar};

/// Degree floor for isolated nodes; keeps the normalized operator finite
/// without perturbing connected nodes.
pub const DEGREE_EPSILON: f64 = 1e-12;

/// Stacked class-attribute prototypes with the class order of the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeMatrix<T: Scalar> {
    /// `d_C x d_T`; row `r` is the prototype of class `class_order[r]`.
    pub matrix: DenseMatrix<T>,
    /// Class index of each row: seen classes ascending, then unseen ascending.
    pub class_order: Vec<usize>,
}

impl<T: Scalar> PrototypeMatrix<T> {
    pub fn num_classes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_attributes(&self) -> usize {
        self.matrix.ncols()
    }

    /// Row position of a class index, if the class exists.
    pub fn row_of_class(&self, class: usize) -> Option<usize> {
        self.class_order.iter().position(|&c| c == class)
    }
}

/// All graph-side artifacts derived from a prototype matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeGraph<T: Scalar> {
    /// Population covariance of the attribute columns, before rescaling.
    pub covariance_raw: DenseMatrix<T>,
    /// Covariance rescaled into the prototype value range.
    pub covariance: DenseMatrix<T>,
    /// `(d_C+d_T)^2` adjacency with zero diagonal.
    pub adjacency: DenseMatrix<T>,
    /// `(d_C+d_T)^2` node features (bipartite block structure).
    pub node_features: DenseMatrix<T>,
    /// Row sums of the adjacency.
    pub degrees: DenseVector<T>,
    /// Symmetrically normalized adjacency `D^{-1/2} A D^{-1/2}`.
    pub normalized: DenseMatrix<T>,
}

impl<T: Scalar> AttributeGraph<T> {
    /// Run the full construction chain on a prototype matrix.
    pub fn build(prototypes: &PrototypeMatrix<T>) -> Result<AttributeGraph<T>> {
        let covariance_raw = attribute_covariance(prototypes);
        let covariance = rescale_covariance(&covariance_raw, &prototypes.matrix);
        let adjacency = assemble_adjacency(&prototypes.matrix, &covariance)?;
        let node_features = assemble_node_features(&prototypes.matrix);
        let (degrees, normalized) = normalize_adjacency(&adjacency)?;
        Ok(AttributeGraph {
            covariance_raw,
            covariance,
            adjacency,
            node_features,
            degrees,
            normalized,
        })
    }
}

/// Stack per-class prototypes, seen classes first, then unseen, each in
/// ascending class-index order.
pub fn build_prototype_matrix<T: Scalar>(dataset: &ZslDataset<T>) -> PrototypeMatrix<T> {
    let mut class_order: Vec<usize> = Vec::with_capacity(dataset.num_classes());
    class_order.extend(sorted(&dataset.seen_classes));
    class_order.extend(sorted(&dataset.unseen_classes));

    let d_t = dataset.num_attributes();
    let mut matrix = DenseMatrix::<T>::zeros((class_order.len(), d_t));
    for (row, &class) in class_order.iter().enumerate() {
        for j in 0..d_t {
            matrix[(row, j)] = dataset.prototypes[(class, j)];
        }
    }
    PrototypeMatrix {
        matrix,
        class_order,
    }
}

fn sorted(xs: &[usize]) -> Vec<usize> {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v
}

/// Population covariance of the attribute columns:
/// `W_ij = (1/d_C) * sum_c (C_ci - mu_i)(C_cj - mu_j)`.
pub fn attribute_covariance<T: Scalar>(prototypes: &PrototypeMatrix<T>) -> DenseMatrix<T> {
    let c = &prototypes.matrix;
    let (n, d) = c.dim();
    let inv_n = T::one() / s::<T>(n as f64);

    let mut centered = c.clone();
    for j in 0..d {
        let mu = c.column(j).iter().fold(T::zero(), |a, &x| a + x) * inv_n;
        for i in 0..n {
            centered[(i, j)] = centered[(i, j)] - mu;
        }
    }
    centered.t().dot(&centered) * inv_n
}

/// Affine min-max rescale of every entry of `w_raw` into the value range of
/// the prototype matrix `c`. A constant `w_raw` maps to the all-zero matrix.
pub fn rescale_covariance<T: Scalar>(
    w_raw: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
) -> DenseMatrix<T> {
    let (w_lo, w_hi) = value_range(w_raw);
    if w_hi == w_lo {
        return DenseMatrix::zeros(w_raw.dim());
    }
    let (lo, hi) = value_range(c);
    let scale = (hi - lo) / (w_hi - w_lo);
    w_raw.mapv(|x| lo + (x - w_lo) * scale)
}

fn value_range<T: Scalar>(m: &DenseMatrix<T>) -> (T, T) {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for &x in m.iter() {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo, hi)
}

/// Block adjacency `[[0, C], [C^T, W - diag(W)]]`.
pub fn assemble_adjacency<T: Scalar>(
    c: &DenseMatrix<T>,
    w_rescaled: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let (d_c, d_t) = c.dim();
    if w_rescaled.dim() != (d_t, d_t) {
        return Err(Error::Shape(format!(
            "covariance block is {}x{}, expected {d_t}x{d_t} to match the prototype columns",
            w_rescaled.nrows(),
            w_rescaled.ncols()
        )));
    }
    let n = d_c + d_t;
    let mut a = DenseMatrix::<T>::zeros((n, n));
    for i in 0..d_c {
        for j in 0..d_t {
            a[(i, d_c + j)] = c[(i, j)];
            a[(d_c + j, i)] = c[(i, j)];
        }
    }
    for i in 0..d_t {
        for j in 0..d_t {
            if i != j {
                a[(d_c + i, d_c + j)] = w_rescaled[(i, j)];
            }
        }
    }
    Ok(a)
}

/// Block node features `[[0, C], [C^T, 0]]` — the bipartite structure only.
pub fn assemble_node_features<T: Scalar>(c: &DenseMatrix<T>) -> DenseMatrix<T> {
    let zero = DenseMatrix::zeros((c.ncols(), c.ncols()));
    assemble_adjacency(c, &zero).expect("zero block always matches")
}

/// Degrees `d_i = sum_j A_ij` and the symmetric normalization
/// `S_ij = A_ij / sqrt(max(d_i, eps) * max(d_j, eps))`.
pub fn normalize_adjacency<T: Scalar>(
    a: &DenseMatrix<T>,
) -> Result<(DenseVector<T>, DenseMatrix<T>)> {
    let n = a.nrows();
    let eps = s::<T>(DEGREE_EPSILON);
    let neg_tol = -eps;

    let mut degrees = DenseVector::<T>::zeros(n);
    for i in 0..n {
        let mut d = T::zero();
        for j in 0..n {
            d += a[(i, j)];
        }
        if d < neg_tol {
            return Err(Error::NegativeDegree {
                node: i,
                degree: d.to_f64_lossy(),
            });
        }
        degrees[i] = d;
    }

    let inv_sqrt: Vec<T> = degrees
        .iter()
        .map(|&d| T::one() / d.max(eps).sqrt())
        .collect();
    let mut snorm = a.clone();
    for i in 0..n {
        for j in 0..n {
            snorm[(i, j)] = snorm[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok((degrees, snorm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SynthConfig};
    use crate::linalg::{max_abs_diff, max_asymmetry, spectral_radius_sym};
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn proto(matrix: DenseMatrix<f64>) -> PrototypeMatrix<f64> {
        let class_order = (0..matrix.nrows()).collect();
        PrototypeMatrix {
            matrix,
            class_order,
        }
    }

    /// Independent double-loop covariance used as the oracle.
    fn covariance_oracle(c: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        let (n, d) = c.dim();
        let mu: Vec<f64> = (0..d).map(|j| c.column(j).sum() / n as f64).collect();
        DenseMatrix::from_shape_fn((d, d), |(i, j)| {
            (0..n)
                .map(|r| (c[(r, i)] - mu[i]) * (c[(r, j)] - mu[j]))
                .sum::<f64>()
                / n as f64
        })
    }

    #[test]
    fn awa2_shaped_prototype_matrix() {
        let cfg = SynthConfig {
            samples_per_class_train: 1,
            samples_per_class_test: 1,
            ..SynthConfig::default()
        };
        let ds = generate_synthetic::<f64>(&cfg).unwrap();
        let p = build_prototype_matrix(&ds);
        assert_eq!(p.matrix.dim(), (50, 85));
        assert_eq!(p.class_order[0], 0);
        assert_eq!(p.row_of_class(49), Some(49));
    }

    #[test]
    fn single_class_prototype_matrix() {
        let ds = ZslDataset::<f64> {
            class_names: vec!["only".into()],
            attribute_names: vec!["a".into(), "b".into()],
            prototypes: array![[0.5, 0.5]],
            train: crate::dataset::LabeledSplit {
                features: array![[1.0]],
                labels: vec![0],
            },
            test_unseen: crate::dataset::LabeledSplit {
                features: DenseMatrix::zeros((0, 1)),
                labels: vec![],
            },
            test_seen: None,
            seen_classes: vec![0],
            unseen_classes: vec![],
        };
        let p = build_prototype_matrix(&ds);
        assert_eq!(p.matrix, array![[0.5, 0.5]]);
    }

    #[test]
    fn swapping_unseen_classes_permutes_rows() {
        let cfg = SynthConfig {
            num_seen: 4,
            num_unseen: 3,
            num_attributes: 8,
            num_attribute_groups: 4,
            feature_dim: 4,
            samples_per_class_train: 2,
            samples_per_class_test: 2,
            noise_scale: 0.5,
            seed: 5,
        };
        let ds = generate_synthetic::<f64>(&cfg).unwrap();

        // Swap unseen classes 4 and 6: names, prototype rows, labels.
        let mut swapped = ds.clone();
        swapped.class_names.swap(4, 6);
        for j in 0..swapped.prototypes.ncols() {
            swapped.prototypes.swap((4, j), (6, j));
        }
        let remap = |l: usize| match l {
            4 => 6,
            6 => 4,
            other => other,
        };
        for l in &mut swapped.test_unseen.labels {
            *l = remap(*l);
        }
        swapped.validate().unwrap();

        let c = build_prototype_matrix(&ds);
        let c_swapped = build_prototype_matrix(&swapped);

        // Oracle: each row equals direct extraction from its dataset.
        for (row, &class) in c_swapped.class_order.iter().enumerate() {
            for j in 0..swapped.prototypes.ncols() {
                assert_eq!(c_swapped.matrix[(row, j)], swapped.prototypes[(class, j)]);
            }
        }
        // The swap moved exactly the two unseen rows.
        let r4 = c.row_of_class(4).unwrap();
        let r6 = c.row_of_class(6).unwrap();
        assert_eq!(c_swapped.matrix.row(r4), c.matrix.row(r6));
        assert_eq!(c_swapped.matrix.row(r6), c.matrix.row(r4));
    }

    #[test]
    fn covariance_of_antidiagonal_prototypes() {
        let w = attribute_covariance(&proto(array![[1.0, 0.0], [0.0, 1.0]]));
        assert_eq!(w, array![[0.25, -0.25], [-0.25, 0.25]]);
    }

    #[test]
    fn covariance_of_identical_columns() {
        let w = attribute_covariance(&proto(array![[1.0, 1.0], [0.0, 0.0]]));
        assert_eq!(w, array![[0.25, 0.25], [0.25, 0.25]]);
    }

    #[test]
    fn constant_column_gives_zero_row_and_column() {
        let w = attribute_covariance(&proto(array![
            [3.0, 1.0, 0.0],
            [3.0, 0.0, 1.0],
            [3.0, 1.0, 1.0]
        ]));
        for j in 0..3 {
            assert_eq!(w[(0, j)], 0.0);
            assert_eq!(w[(j, 0)], 0.0);
        }
    }

    #[test]
    fn rescale_maps_covariance_into_prototype_range() {
        let w_raw = array![[0.25, -0.25], [-0.25, 0.25]];
        let c = array![[1.0, 0.0], [0.0, 1.0]];
        let out = rescale_covariance(&w_raw, &c);
        assert!(max_abs_diff(&out, &array![[1.0, 0.0], [0.0, 1.0]]) < 1e-15);
    }

    #[test]
    fn rescale_of_constant_matrix_is_zero() {
        let w_raw = DenseMatrix::<f64>::zeros((3, 3));
        let c = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(rescale_covariance(&w_raw, &c), DenseMatrix::zeros((3, 3)));
    }

    #[test]
    fn adjacency_of_identity_prototypes() {
        let c = array![[1.0, 0.0], [0.0, 1.0]];
        let w = array![[1.0, 0.0], [0.0, 1.0]];
        let a = assemble_adjacency(&c, &w).unwrap();
        let expected = array![
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0]
        ];
        assert_eq!(a, expected);
        // Node features coincide because the covariance block vanished.
        assert_eq!(assemble_node_features(&c), expected);
    }

    #[test]
    fn node_features_ignore_covariance() {
        let c = array![[1.0, 0.0], [0.0, 1.0]];
        let f = assemble_node_features(&c);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(f[(2 + i, 2 + j)], 0.0);
            }
        }
        assert_eq!(max_asymmetry(&f), 0.0);
    }

    #[test]
    fn normalization_of_permutation_like_adjacency() {
        let c = array![[1.0, 0.0], [0.0, 1.0]];
        let a = assemble_node_features(&c);
        let (deg, snorm) = normalize_adjacency(&a).unwrap();
        assert!(deg.iter().all(|&d| d == 1.0));
        assert_eq!(snorm, a);
    }

    #[test]
    fn normalization_divides_by_degree() {
        let a = array![[0.0, 2.0], [2.0, 0.0]];
        let (deg, snorm) = normalize_adjacency(&a).unwrap();
        assert_eq!(deg, ndarray::arr1(&[2.0, 2.0]));
        assert_eq!(snorm, array![[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn isolated_node_stays_zero() {
        let a = array![
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0]
        ];
        let (deg, snorm) = normalize_adjacency(&a).unwrap();
        assert_eq!(deg[2], 0.0);
        for k in 0..3 {
            assert_eq!(snorm[(2, k)], 0.0);
            assert_eq!(snorm[(k, 2)], 0.0);
        }
    }

    #[test]
    fn negative_degrees_are_rejected() {
        let a = array![[0.0, -1.0], [-1.0, 0.0]];
        assert!(matches!(
            normalize_adjacency(&a),
            Err(Error::NegativeDegree { node: 0, .. })
        ));
    }

    #[test]
    fn covariance_block_is_the_delta_from_the_bipartite_graph() {
        let cfg = SynthConfig {
            num_seen: 5,
            num_unseen: 2,
            num_attributes: 9,
            num_attribute_groups: 3,
            feature_dim: 4,
            samples_per_class_train: 2,
            samples_per_class_test: 1,
            noise_scale: 0.5,
            seed: 2,
        };
        let ds = generate_synthetic::<f64>(&cfg).unwrap();
        let p = build_prototype_matrix(&ds);
        let g = AttributeGraph::build(&p).unwrap();
        let d_c = p.num_classes();
        let delta = &g.adjacency - &g.node_features;
        for ((i, j), &x) in delta.indexed_iter() {
            if i >= d_c && j >= d_c && i != j {
                assert_eq!(x, g.covariance[(i - d_c, j - d_c)]);
            } else {
                assert_eq!(x, 0.0);
            }
        }
    }

    #[test]
    fn graph_build_in_f32() {
        let c = array![[1.0f32, 0.0], [0.0, 1.0]];
        let p = PrototypeMatrix {
            matrix: c,
            class_order: vec![0, 1],
        };
        let g = AttributeGraph::build(&p).unwrap();
        assert_eq!(g.adjacency.dim(), (4, 4));
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DenseMatrix<f64> {
        DenseMatrix::from_shape_fn((n, d), |_| rng.random::<f64>() * 2.0 - 0.5)
    }

    #[test]
    fn covariance_matches_oracle_and_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.random_range(1..=30);
            let d = rng.random_range(1..=30);
            let c = random_matrix(&mut rng, n, d);
            let p = proto(c.clone());
            let w = attribute_covariance(&p);
            assert!(max_abs_diff(&w, &covariance_oracle(&c)) <= 1e-12);
            assert!(max_asymmetry(&w) <= 1e-12);
            for _ in 0..10 {
                let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let v = ndarray::arr1(&v);
                let q = v.dot(&w.dot(&v));
                assert!(q >= -1e-10, "v^T W v = {q}");
            }
        }
    }

    proptest! {
        #[test]
        fn rescaled_entries_stay_in_prototype_range(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..=12);
            let d = rng.random_range(2..=12);
            let c = random_matrix(&mut rng, n, d);
            let w = attribute_covariance(&proto(c.clone()));
            let out = rescale_covariance(&w, &c);
            let (lo, hi) = super::value_range(&c);
            for &x in out.iter() {
                prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12);
            }
        }

        #[test]
        fn adjacency_with_zero_covariance_equals_node_features(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=8);
            let d = rng.random_range(1..=8);
            let c = random_matrix(&mut rng, n, d);
            let zero = DenseMatrix::<f64>::zeros((d, d));
            prop_assert_eq!(
                assemble_adjacency(&c, &zero).unwrap(),
                assemble_node_features(&c)
            );
        }

        #[test]
        fn normalized_spectral_radius_is_at_most_one(seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..=20);
            // Random nonnegative symmetric adjacency with zero diagonal and
            // strictly positive degrees.
            let mut a = DenseMatrix::<f64>::zeros((n, n));
            for i in 0..n {
                for j in i + 1..n {
                    let v = rng.random::<f64>();
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            let (deg, snorm) = normalize_adjacency(&a).unwrap();
            prop_assume!(deg.iter().all(|&d| d > 0.0));
            let rho = spectral_radius_sym(&snorm, 300);
            prop_assert!(rho <= 1.0 + 1e-9, "spectral radius {rho}");
        }
    }
}
