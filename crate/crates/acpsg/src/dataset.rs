//! Dataset ingestion, validation, and the synthetic benchmark generator.
//!
//! A dataset on disk is a JSON manifest plus ZMAT matrices. The manifest
//! names the matrix files (paths resolved relative to the manifest), the
//! class and attribute vocabularies, and the seen/unseen class split.
//! Labels are stored as 1xN ZMAT matrices of integral-valued floats and are
//! 0-based indices into `class_names`.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{s, Scalar};
use crate::zmat;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

/// Feature matrix plus per-row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit<T: Scalar> {
    /// One sample per row.
    pub features: DenseMatrix<T>,
    /// Class index of each row.
    pub labels: Vec<usize>,
}

/// A zero-shot recognition dataset.
///
/// Immutable after construction; every accessor is read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct ZslDataset<T: Scalar> {
    pub class_names: Vec<String>,
    pub attribute_names: Vec<String>,
    /// Class-attribute prototypes, row `c` is the attribute vector of class `c`.
    pub prototypes: DenseMatrix<T>,
    pub train: LabeledSplit<T>,
    pub test_unseen: LabeledSplit<T>,
    /// Seen-class test split; absent for conventional-only datasets.
    pub test_seen: Option<LabeledSplit<T>>,
    /// Sorted ascending, disjoint from `unseen_classes`.
    pub seen_classes: Vec<usize>,
    /// Sorted ascending.
    pub unseen_classes: Vec<usize>,
}

impl<T: Scalar> ZslDataset<T> {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.train.features.ncols()
    }

    /// Check every structural invariant, returning a distinct error per
    /// violated rule.
    pub fn validate(&self) -> Result<()> {
        let d_c = self.num_classes();
        let d_t = self.num_attributes();
        if d_c == 0 || d_t == 0 {
            return Err(Error::Manifest(
                "class_names and attribute_names must be nonempty".into(),
            ));
        }
        {
            let unique: BTreeSet<&str> = self.class_names.iter().map(String::as_str).collect();
            if unique.len() != d_c {
                return Err(Error::Manifest("class_names contains duplicates".into()));
            }
        }
        if self.prototypes.nrows() != d_c || self.prototypes.ncols() != d_t {
            return Err(Error::Shape(format!(
                "prototypes is {}x{}, expected {}x{} from class_names and attribute_names",
                self.prototypes.nrows(),
                self.prototypes.ncols(),
                d_c,
                d_t
            )));
        }
        for ((i, j), &x) in self.prototypes.indexed_iter() {
            if !x.is_finite() {
                return Err(Error::InvalidValue {
                    row: i,
                    col: j,
                    value: x.to_f64_lossy(),
                });
            }
        }

        let seen: BTreeSet<usize> = self.seen_classes.iter().copied().collect();
        let unseen: BTreeSet<usize> = self.unseen_classes.iter().copied().collect();
        if let Some(&c) = seen.intersection(&unseen).next() {
            return Err(Error::Split(format!(
                "class {c} appears in both seen_classes and unseen_classes"
            )));
        }
        let all: BTreeSet<usize> = (0..d_c).collect();
        let union: BTreeSet<usize> = seen.union(&unseen).copied().collect();
        if union != all {
            return Err(Error::Split(format!(
                "seen and unseen classes must partition 0..{d_c}; union covers {} classes",
                union.len()
            )));
        }

        check_labels(&self.train.labels, &seen, "labels_train", "seen")?;
        check_labels(
            &self.test_unseen.labels,
            &unseen,
            "labels_test_unseen",
            "unseen",
        )?;
        if let Some(ts) = &self.test_seen {
            check_labels(&ts.labels, &seen, "labels_test_seen", "seen")?;
        }

        let d = self.feature_dim();
        let mut dims = vec![("features_train", &self.train), ("features_test_unseen", &self.test_unseen)];
        if let Some(ts) = &self.test_seen {
            dims.push(("features_test_seen", ts));
        }
        for (name, split) in dims {
            if split.features.ncols() != d {
                return Err(Error::Shape(format!(
                    "{name} has {} feature columns but features_train has {d}",
                    split.features.ncols()
                )));
            }
            if split.features.nrows() != split.labels.len() {
                return Err(Error::Shape(format!(
                    "{name} has {} rows but its labels file lists {}",
                    split.features.nrows(),
                    split.labels.len()
                )));
            }
        }
        Ok(())
    }
}

fn check_labels(
    labels: &[usize],
    allowed: &BTreeSet<usize>,
    what: &str,
    split: &str,
) -> Result<()> {
    for (i, &l) in labels.iter().enumerate() {
        if !allowed.contains(&l) {
            return Err(Error::Label(format!(
                "{what}[{i}] = {l} is not a {split} class"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Manifest loading and saving
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    class_names: Vec<String>,
    attribute_names: Vec<String>,
    prototypes: String,
    features_train: String,
    labels_train: String,
    features_test_unseen: String,
    labels_test_unseen: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features_test_seen: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels_test_seen: Option<String>,
    seen_classes: Vec<usize>,
    unseen_classes: Vec<usize>,
}

/// Load and validate a dataset from a JSON manifest.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<ZslDataset<f64>> {
    let manifest_path = manifest_path.as_ref();
    let text =
        std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: ManifestFile =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new(""));

    let prototypes = zmat::read_matrix_file(base.join(&manifest.prototypes))?;
    if prototypes.ncols() != manifest.attribute_names.len() {
        return Err(Error::Shape(format!(
            "{} has {} columns but the manifest lists {} attribute_names",
            manifest.prototypes,
            prototypes.ncols(),
            manifest.attribute_names.len()
        )));
    }
    if prototypes.nrows() != manifest.class_names.len() {
        return Err(Error::Shape(format!(
            "{} has {} rows but the manifest lists {} class_names",
            manifest.prototypes,
            prototypes.nrows(),
            manifest.class_names.len()
        )));
    }

    let train = load_split(base, &manifest.features_train, &manifest.labels_train)?;
    let test_unseen = load_split(
        base,
        &manifest.features_test_unseen,
        &manifest.labels_test_unseen,
    )?;
    let test_seen = match (&manifest.features_test_seen, &manifest.labels_test_seen) {
        (Some(f), Some(l)) => Some(load_split(base, f, l)?),
        (None, None) => None,
        _ => {
            return Err(Error::Manifest(
                "features_test_seen and labels_test_seen must be given together".into(),
            ))
        }
    };

    for (name, features) in [
        (
            manifest.features_test_unseen.as_str(),
            &test_unseen.features,
        ),
    ]
    .into_iter()
    .chain(
        test_seen
            .as_ref()
            .map(|ts| (manifest.features_test_seen.as_deref().unwrap(), &ts.features)),
    ) {
        if features.ncols() != train.features.ncols() {
            return Err(Error::Shape(format!(
                "{name} has {} feature columns but {} has {}",
                features.ncols(),
                manifest.features_train,
                train.features.ncols()
            )));
        }
    }

    let mut seen_classes = manifest.seen_classes;
    let mut unseen_classes = manifest.unseen_classes;
    seen_classes.sort_unstable();
    unseen_classes.sort_unstable();

    let ds = ZslDataset {
        class_names: manifest.class_names,
        attribute_names: manifest.attribute_names,
        prototypes,
        train,
        test_unseen,
        test_seen,
        seen_classes,
        unseen_classes,
    };
    ds.validate()?;
    Ok(ds)
}

fn load_split(base: &Path, features: &str, labels: &str) -> Result<LabeledSplit<f64>> {
    let fm = zmat::read_matrix_file(base.join(features))?;
    let lm = zmat::read_matrix_file(base.join(labels))?;
    let label_vec = labels_from_matrix(&lm, labels)?;
    if fm.nrows() != label_vec.len() {
        return Err(Error::Shape(format!(
            "{features} has {} rows but {labels} lists {} labels",
            fm.nrows(),
            label_vec.len()
        )));
    }
    Ok(LabeledSplit {
        features: fm,
        labels: label_vec,
    })
}

fn labels_from_matrix(m: &zmat::Mat, file: &str) -> Result<Vec<usize>> {
    if m.nrows() != 1 {
        return Err(Error::Shape(format!(
            "{file} must be a 1xN label matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    m.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x.fract() != 0.0 || x < 0.0 {
                Err(Error::Label(format!(
                    "{file}[{i}] = {x} is not a nonnegative integer"
                )))
            } else {
                Ok(x as usize)
            }
        })
        .collect()
}

/// Write a dataset as `manifest.json` plus ZMAT files under `dir`.
///
/// Output is byte-deterministic: file order, manifest key order, and matrix
/// payloads depend only on the dataset contents.
pub fn save_dataset(ds: &ZslDataset<f64>, dir: impl AsRef<Path>) -> Result<std::path::PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    zmat::write_matrix_file(&ds.prototypes, dir.join("prototypes.zmat"))?;
    zmat::write_matrix_file(&ds.train.features, dir.join("features_train.zmat"))?;
    zmat::write_matrix_file(&labels_to_matrix(&ds.train.labels), dir.join("labels_train.zmat"))?;
    zmat::write_matrix_file(
        &ds.test_unseen.features,
        dir.join("features_test_unseen.zmat"),
    )?;
    zmat::write_matrix_file(
        &labels_to_matrix(&ds.test_unseen.labels),
        dir.join("labels_test_unseen.zmat"),
    )?;
    let mut features_test_seen = None;
    let mut labels_test_seen = None;
    if let Some(ts) = &ds.test_seen {
        zmat::write_matrix_file(&ts.features, dir.join("features_test_seen.zmat"))?;
        zmat::write_matrix_file(
            &labels_to_matrix(&ts.labels),
            dir.join("labels_test_seen.zmat"),
        )?;
        features_test_seen = Some("features_test_seen.zmat".to_string());
        labels_test_seen = Some("labels_test_seen.zmat".to_string());
    }

    let manifest = ManifestFile {
        class_names: ds.class_names.clone(),
        attribute_names: ds.attribute_names.clone(),
        prototypes: "prototypes.zmat".into(),
        features_train: "features_train.zmat".into(),
        labels_train: "labels_train.zmat".into(),
        features_test_unseen: "features_test_unseen.zmat".into(),
        labels_test_unseen: "labels_test_unseen.zmat".into(),
        features_test_seen,
        labels_test_seen,
        seen_classes: ds.seen_classes.clone(),
        unseen_classes: ds.unseen_classes.clone(),
    };
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Manifest(e.to_string()))?;
    std::fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

fn labels_to_matrix(labels: &[usize]) -> zmat::Mat {
    Array2::from_shape_vec((1, labels.len()), labels.iter().map(|&l| l as f64).collect())
        .expect("1xN shape always valid")
}

// ---------------------------------------------------------------------------
// Synthetic benchmark
// ---------------------------------------------------------------------------

/// Configuration of the synthetic dataset generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_seen: usize,
    pub num_unseen: usize,
    pub num_attributes: usize,
    pub num_attribute_groups: usize,
    pub feature_dim: usize,
    pub samples_per_class_train: usize,
    pub samples_per_class_test: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// Mirrors the 40/10 split shape of the AwA2 benchmark at desk scale.
    fn default() -> Self {
        SynthConfig {
            num_seen: 40,
            num_unseen: 10,
            num_attributes: 85,
            num_attribute_groups: 10,
            feature_dim: 64,
            samples_per_class_train: 50,
            samples_per_class_test: 20,
            noise_scale: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_seen", self.num_seen),
            ("num_unseen", self.num_unseen),
            ("num_attributes", self.num_attributes),
            ("num_attribute_groups", self.num_attribute_groups),
            ("feature_dim", self.feature_dim),
            ("samples_per_class_train", self.samples_per_class_train),
            ("samples_per_class_test", self.samples_per_class_test),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.num_attribute_groups > self.num_attributes {
            return Err(Error::Config(format!(
                "num_attribute_groups ({}) exceeds num_attributes ({})",
                self.num_attribute_groups, self.num_attributes
            )));
        }
        if !(self.noise_scale > 0.0) {
            return Err(Error::Config("noise_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// Generate a synthetic dataset with correlated attribute groups.
///
/// Attributes are partitioned into `num_attribute_groups` contiguous groups.
/// Each class activates a uniformly random half of the groups (all attributes
/// of an active group are set to 1), so attributes within a group are
/// perfectly positively correlated while group indicators anticorrelate
/// across groups. A fixed random linear map sends prototypes to class means
/// in feature space; samples are class means plus isotropic Gaussian noise.
///
/// The result is a pure function of `cfg`, including its seed: the RNG draw
/// order is prototypes (class by class), then the linear map (row-major),
/// then train / test-unseen / test-seen samples, each class-major then
/// sample-major then coordinate-major.
pub fn generate_synthetic<T: Scalar>(cfg: &SynthConfig) -> Result<ZslDataset<T>> {
    cfg.validate()?;
    let d_c = cfg.num_seen + cfg.num_unseen;
    let d_t = cfg.num_attributes;
    let groups = attribute_groups(d_t, cfg.num_attribute_groups);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut prototypes = DenseMatrix::<T>::zeros((d_c, d_t));
    let mut seen_rows: Vec<Vec<bool>> = Vec::with_capacity(d_c);
    for class in 0..d_c {
        let mut accepted = None;
        for _attempt in 0..100 {
            let active = draw_half_of_groups(&mut rng, groups.len());
            if seen_rows.iter().all(|prev| prev != &active) {
                accepted = Some(active);
                break;
            }
        }
        let active = accepted.ok_or_else(|| {
            Error::DegenerateSynthesis(format!(
                "class {class}: no unused group pattern after 100 attempts \
                 ({} groups admit too few distinct prototypes)",
                groups.len()
            ))
        })?;
        for (g, span) in groups.iter().enumerate() {
            if active[g] {
                for a in span.clone() {
                    prototypes[(class, a)] = T::one();
                }
            }
        }
        seen_rows.push(active);
    }

    // Fixed linear map attribute-space -> feature-space, N(0,1)/sqrt(d_T).
    let inv_sqrt_dt = 1.0 / (d_t as f64).sqrt();
    let mut feature_map = DenseMatrix::<T>::zeros((cfg.feature_dim, d_t));
    for i in 0..cfg.feature_dim {
        for j in 0..d_t {
            let z: f64 = StandardNormal.sample(&mut rng);
            feature_map[(i, j)] = s::<T>(z * inv_sqrt_dt);
        }
    }
    let class_means: Vec<Array1<T>> = (0..d_c)
        .map(|c| feature_map.dot(&prototypes.row(c).to_owned()))
        .collect();

    let seen_classes: Vec<usize> = (0..cfg.num_seen).collect();
    let unseen_classes: Vec<usize> = (cfg.num_seen..d_c).collect();

    let mut draw_split = |classes: &[usize], per_class: usize, rng: &mut ChaCha8Rng| {
        let mut features = DenseMatrix::<T>::zeros((classes.len() * per_class, cfg.feature_dim));
        let mut labels = Vec::with_capacity(classes.len() * per_class);
        let mut row = 0;
        for &class in classes {
            for _ in 0..per_class {
                for k in 0..cfg.feature_dim {
                    let z: f64 = StandardNormal.sample(rng);
                    features[(row, k)] = class_means[class][k] + s::<T>(z * cfg.noise_scale);
                }
                labels.push(class);
                row += 1;
            }
        }
        LabeledSplit { features, labels }
    };

    let train = draw_split(&seen_classes, cfg.samples_per_class_train, &mut rng);
    let test_unseen = draw_split(&unseen_classes, cfg.samples_per_class_test, &mut rng);
    let test_seen = draw_split(&seen_classes, cfg.samples_per_class_test, &mut rng);

    let ds = ZslDataset {
        class_names: (0..d_c).map(|c| format!("class_{c:03}")).collect(),
        attribute_names: (0..d_t).map(|a| format!("attr_{a:03}")).collect(),
        prototypes,
        train,
        test_unseen,
        test_seen: Some(test_seen),
        seen_classes,
        unseen_classes,
    };
    ds.validate()?;
    Ok(ds)
}

/// Contiguous near-equal partition of `0..d_t` into `g` groups.
fn attribute_groups(d_t: usize, g: usize) -> Vec<std::ops::Range<usize>> {
    (0..g)
        .map(|i| (i * d_t / g)..((i + 1) * d_t / g))
        .collect()
}

/// Activate exactly half of the groups (odd counts round down or up with
/// equal probability), so every group is active with marginal probability
/// 1/2 and distinct groups are negatively correlated.
fn draw_half_of_groups(rng: &mut ChaCha8Rng, g: usize) -> Vec<bool> {
    let k = if g % 2 == 0 {
        g / 2
    } else {
        g / 2 + usize::from(rng.random::<bool>())
    };
    let mut active = vec![false; g];
    let mut remaining = k;
    // Sequential reservoir-free sampling: group i is taken with probability
    // remaining / (g - i), which is exchangeable over groups.
    for (i, slot) in active.iter_mut().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = remaining as f64 / (g - i) as f64;
        if rng.random::<f64>() < p {
            *slot = true;
            remaining -= 1;
        }
    }
    active
}
