//! Dataset generation, CSV ingestion, and stratified splitting.
//!
//! The synthetic generator builds a two-level label hierarchy: well-separated
//! coarse clusters, each containing several nearby fine sub-clusters. Fine
//! class `k` belongs to coarse group `k / fine_per_coarse`.
//!
//! All randomness flows from explicit seeds; no operation reads ambient
//! entropy. Datasets are immutable after construction.

use crate::error::{Error, Result};
use crate::textio::{fmt_sig9, parse_real, read_to_string, write_atomic, Lines};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::path::Path;

/// Feature vectors with integer class labels, optionally carrying a coarse
/// label per sample for the synthetic hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>, // n x feature_dim, row-major
    labels: Vec<usize>,
    coarse_labels: Option<Vec<usize>>,
    class_count: usize,
    coarse_count: Option<usize>,
    feature_dim: usize,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        coarse: Option<(Vec<usize>, usize)>,
        class_count: usize,
        feature_dim: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if n < 1 {
            return Err(Error::InvalidInput("dataset must have n >= 1 samples".into()));
        }
        if feature_dim < 1 {
            return Err(Error::InvalidInput("feature_dim must be >= 1".into()));
        }
        if class_count < 2 {
            return Err(Error::InvalidInput("class_count must be >= 2".into()));
        }
        if features.len() != n * feature_dim {
            return Err(Error::Dimension(format!(
                "feature matrix has {} entries, expected {} ({} samples x {} features)",
                features.len(),
                n * feature_dim,
                n,
                feature_dim
            )));
        }
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "features contain a non-finite value ({bad})"
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for class_count {class_count}"
            )));
        }
        let (coarse_labels, coarse_count) = match coarse {
            Some((cl, cc)) => {
                if cl.len() != n {
                    return Err(Error::Dimension(format!(
                        "{} coarse labels for {} samples",
                        cl.len(),
                        n
                    )));
                }
                if let Some(&bad) = cl.iter().find(|&&l| l >= cc) {
                    return Err(Error::InvalidInput(format!(
                        "coarse label {bad} out of range for coarse_count {cc}"
                    )));
                }
                (Some(cl), Some(cc))
            }
            None => (None, None),
        };
        Ok(LabeledDataset {
            features,
            labels,
            coarse_labels,
            class_count,
            coarse_count,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn coarse_count(&self) -> Option<usize> {
        self.coarse_count
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn coarse_labels(&self) -> Option<&[usize]> {
        self.coarse_labels.as_deref()
    }

    /// Feature row of sample `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// New dataset holding the given rows (indices must be in range).
    /// Class and coarse counts are inherited from the parent.
    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let mut features = Vec::with_capacity(indices.len() * self.feature_dim);
        let mut labels = Vec::with_capacity(indices.len());
        let mut coarse = self.coarse_labels.as_ref().map(|_| Vec::with_capacity(indices.len()));
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            if let (Some(out), Some(src)) = (coarse.as_mut(), self.coarse_labels.as_ref()) {
                out.push(src[i]);
            }
        }
        LabeledDataset::new(
            features,
            labels,
            coarse.map(|cl| (cl, self.coarse_count.unwrap())),
            self.class_count,
            self.feature_dim,
        )
    }
}

/// Parameters of the synthetic coarse/fine blob generator.
#[derive(Debug, Clone)]
pub struct HierarchyConfig {
    pub coarse_count: usize,
    pub fine_per_coarse: usize,
    pub samples_per_class: usize,
    /// Distance of each coarse cluster center from the origin.
    pub coarse_separation: f64,
    /// Distance of each fine sub-cluster center from its coarse center.
    pub fine_separation: f64,
    pub noise_sigma: f64,
    pub feature_dim: usize,
    pub seed: u64,
}

impl HierarchyConfig {
    fn validate(&self) -> Result<()> {
        if self.coarse_count < 1 || self.fine_per_coarse < 1 || self.samples_per_class < 1 {
            return Err(Error::InvalidInput(
                "coarse_count, fine_per_coarse, and samples_per_class must be >= 1".into(),
            ));
        }
        if self.feature_dim < 1 {
            return Err(Error::InvalidInput("feature_dim must be >= 1".into()));
        }
        if !(self.noise_sigma > 0.0) {
            return Err(Error::InvalidInput("noise_sigma must be > 0".into()));
        }
        if !(self.fine_separation >= 0.0) {
            return Err(Error::InvalidInput("fine_separation must be >= 0".into()));
        }
        if !(self.fine_separation < self.coarse_separation) {
            return Err(Error::InvalidInput(
                "fine_separation must be < coarse_separation".into(),
            ));
        }
        Ok(())
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Generates the coarse/fine blob dataset described by `config`.
///
/// Coarse centers are sampled as random unit directions scaled to
/// `coarse_separation` from the origin, re-sampling any pair closer than
/// 0.8 x coarse_separation. Fine centers sit at `fine_separation` from their
/// coarse center along a random direction. Samples are the fine centers plus
/// isotropic Gaussian noise. Deterministic for a fixed seed.
pub fn generate_hierarchical_blobs(config: &HierarchyConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = config.feature_dim;

    let mut coarse_centers: Vec<Vec<f64>> = Vec::with_capacity(config.coarse_count);
    for _ in 0..config.coarse_count {
        let mut attempts = 0usize;
        let center = loop {
            let cand: Vec<f64> = unit_vector(&mut rng, dim)
                .into_iter()
                .map(|u| u * config.coarse_separation)
                .collect();
            let min_allowed = 0.8 * config.coarse_separation;
            if coarse_centers.iter().all(|c| distance(c, &cand) >= min_allowed) {
                break cand;
            }
            attempts += 1;
            if attempts >= 10_000 {
                return Err(Error::InvalidInput(format!(
                    "could not place {} coarse centers at mutual distance >= {:.3} in {} dimensions",
                    config.coarse_count, min_allowed, dim
                )));
            }
        };
        coarse_centers.push(center);
    }

    let class_count = config.coarse_count * config.fine_per_coarse;
    let mut fine_centers: Vec<Vec<f64>> = Vec::with_capacity(class_count);
    for k in 0..class_count {
        let g = k / config.fine_per_coarse;
        let dir = unit_vector(&mut rng, dim);
        let center: Vec<f64> = coarse_centers[g]
            .iter()
            .zip(&dir)
            .map(|(c, u)| c + u * config.fine_separation)
            .collect();
        fine_centers.push(center);
    }

    let n = class_count * config.samples_per_class;
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    let mut coarse_labels = Vec::with_capacity(n);
    for k in 0..class_count {
        let g = k / config.fine_per_coarse;
        for _ in 0..config.samples_per_class {
            for d in 0..dim {
                let noise: f64 = rng.sample(StandardNormal);
                features.push(fine_centers[k][d] + config.noise_sigma * noise);
            }
            labels.push(k);
            coarse_labels.push(g);
        }
    }

    LabeledDataset::new(
        features,
        labels,
        Some((coarse_labels, config.coarse_count)),
        class_count,
        dim,
    )
}

/// Writes a dataset as CSV: header `f0,...,f{f-1},label[,coarse]`, one sample
/// per row, reals at 9 significant digits, LF newlines. An optional comment
/// is emitted as a leading `# ...` line.
pub fn save_dataset_csv(data: &LabeledDataset, path: &Path, comment: Option<&str>) -> Result<()> {
    let mut out = String::new();
    if let Some(c) = comment {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    for j in 0..data.feature_dim() {
        out.push_str(&format!("f{j},"));
    }
    out.push_str("label");
    if data.coarse_labels().is_some() {
        out.push_str(",coarse");
    }
    out.push('\n');
    for i in 0..data.len() {
        for v in data.row(i) {
            out.push_str(&fmt_sig9(*v));
            out.push(',');
        }
        out.push_str(&data.label(i).to_string());
        if let Some(cl) = data.coarse_labels() {
            out.push(',');
            out.push_str(&cl[i].to_string());
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

/// Loads a dataset CSV (schema as written by [`save_dataset_csv`]).
///
/// Leading `#` comment lines are skipped; parse errors name the 1-based
/// physical line. `class_count` is inferred as `max(label) + 1`, and likewise
/// for the coarse column when present.
pub fn load_dataset_csv(path: &Path) -> Result<LabeledDataset> {
    let text = read_to_string(path)?;
    let mut lines = Lines::new(path, &text);

    let (hline, header) = lines.expect("CSV header")?;
    let cols: Vec<&str> = header.split(',').collect();
    let has_coarse = cols.last() == Some(&"coarse");
    let label_idx = if has_coarse { cols.len() - 2 } else { cols.len() - 1 };
    if cols.get(label_idx) != Some(&"label") {
        return Err(lines.err(hline, "header must end in `label` or `label,coarse`"));
    }
    let feature_dim = label_idx;
    if feature_dim < 1 {
        return Err(lines.err(hline, "header declares no feature columns"));
    }
    for (j, name) in cols[..feature_dim].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(lines.err(hline, format!("expected feature column `f{j}`, got `{name}`")));
        }
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut coarse = Vec::new();
    while let Some((lno, row)) = lines.next() {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != cols.len() {
            return Err(lines.err(
                lno,
                format!("expected {} columns, got {}", cols.len(), fields.len()),
            ));
        }
        for field in &fields[..feature_dim] {
            let v = parse_real(field)
                .ok_or_else(|| lines.err(lno, format!("`{field}` is not a finite real")))?;
            if !v.is_finite() {
                return Err(lines.err(lno, format!("non-finite feature value `{field}`")));
            }
            features.push(v);
        }
        let label: usize = fields[label_idx]
            .trim()
            .parse()
            .map_err(|_| lines.err(lno, format!("`{}` is not a class index", fields[label_idx])))?;
        labels.push(label);
        if has_coarse {
            let c: usize = fields[label_idx + 1].trim().parse().map_err(|_| {
                lines.err(lno, format!("`{}` is not a coarse index", fields[label_idx + 1]))
            })?;
            coarse.push(c);
        }
    }
    if labels.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no data rows",
            path.display()
        )));
    }

    let class_count = (labels.iter().copied().max().unwrap() + 1).max(2);
    let coarse_info = if has_coarse {
        let cc = coarse.iter().copied().max().unwrap() + 1;
        Some((coarse, cc))
    } else {
        None
    };
    LabeledDataset::new(features, labels, coarse_info, class_count, feature_dim)
}

/// Stratified train/val/test split.
///
/// Per fine class, val and test sizes are the fractional counts rounded to
/// nearest and the remainder goes to train; when both land exactly on .5 the
/// val share rounds up and the test share down. Assignment within a class is
/// a seeded shuffle; each split keeps the original row order.
pub fn split_dataset(
    data: &LabeledDataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let (ftrain, fval, ftest) = fractions;
    if !(ftrain > 0.0 && fval > 0.0 && ftest > 0.0) {
        return Err(Error::InvalidInput(
            "split fractions must all be positive".into(),
        ));
    }
    let sum = ftrain + fval + ftest;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "split fractions must sum to 1 (got {sum})"
        )));
    }

    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); data.class_count()];
    for (i, &label) in data.labels().iter().enumerate() {
        per_class[label].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, indices) in per_class.iter().enumerate() {
        if indices.is_empty() {
            continue;
        }
        if indices.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} samples, fewer than the 3 split parts",
                indices.len()
            )));
        }
        let nk = indices.len() as f64;
        let rv = nk * fval;
        let rt = nk * ftest;
        let (mut val_count, test_count) = if rv.fract() == 0.5 && rt.fract() == 0.5 {
            (rv.ceil() as usize, rt.floor() as usize)
        } else {
            (rv.round() as usize, rt.round() as usize)
        };
        val_count = val_count.min(indices.len());
        let test_count = test_count.min(indices.len() - val_count);
        let train_count = indices.len() - val_count - test_count;

        let mut shuffled = indices.clone();
        shuffled.shuffle(&mut rng);
        train_idx.extend_from_slice(&shuffled[..train_count]);
        val_idx.extend_from_slice(&shuffled[train_count..train_count + val_count]);
        test_idx.extend_from_slice(&shuffled[train_count + val_count..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    test_idx.sort_unstable();

    Ok((
        data.subset(&train_idx)?,
        data.subset(&val_idx)?,
        data.subset(&test_idx)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hier_config() -> HierarchyConfig {
        HierarchyConfig {
            coarse_count: 4,
            fine_per_coarse: 3,
            samples_per_class: 100,
            coarse_separation: 10.0,
            fine_separation: 1.0,
            noise_sigma: 0.3,
            feature_dim: 8,
            seed: 7,
        }
    }

    #[test]
    fn generate_counts_match_construction() {
        let data = generate_hierarchical_blobs(&hier_config()).unwrap();
        assert_eq!(data.class_count(), 12);
        assert_eq!(data.len(), 1200);
        assert_eq!(data.feature_dim(), 8);
        let coarse = data.coarse_labels().unwrap();
        for g in 0..4 {
            assert_eq!(coarse.iter().filter(|&&c| c == g).count(), 300);
        }
        for (i, &k) in data.labels().iter().enumerate() {
            assert_eq!(coarse[i], k / 3);
        }
    }

    #[test]
    fn generate_is_deterministic_per_seed() {
        let a = generate_hierarchical_blobs(&hier_config()).unwrap();
        let b = generate_hierarchical_blobs(&hier_config()).unwrap();
        assert_eq!(a, b);
        let mut other = hier_config();
        other.seed = 8;
        assert_ne!(generate_hierarchical_blobs(&other).unwrap(), a);
    }

    #[test]
    fn generate_rejects_invalid_config() {
        let mut c = hier_config();
        c.fine_separation = 20.0;
        let err = generate_hierarchical_blobs(&c).unwrap_err().to_string();
        assert!(err.contains("fine_separation"), "{err}");

        let mut c = hier_config();
        c.noise_sigma = 0.0;
        let err = generate_hierarchical_blobs(&c).unwrap_err().to_string();
        assert!(err.contains("noise_sigma"), "{err}");

        let mut c = hier_config();
        c.samples_per_class = 0;
        assert!(generate_hierarchical_blobs(&c).is_err());
    }

    /// One-vs-all linear oracle: score_g(x) = mu_g . x - |mu_g|^2 / 2, the
    /// nearest-centroid rule written as a linear classifier.
    fn linear_centroid_accuracy(data: &LabeledDataset, labels: &[usize], classes: usize) -> f64 {
        let f = data.feature_dim();
        let mut means = vec![vec![0.0; f]; classes];
        let mut counts = vec![0usize; classes];
        for i in 0..data.len() {
            counts[labels[i]] += 1;
            for (m, x) in means[labels[i]].iter_mut().zip(data.row(i)) {
                *m += x;
            }
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            for v in m.iter_mut() {
                *v /= c as f64;
            }
        }
        let mut correct = 0usize;
        for i in 0..data.len() {
            let x = data.row(i);
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (g, m) in means.iter().enumerate() {
                let dot: f64 = m.iter().zip(x).map(|(a, b)| a * b).sum();
                let sq: f64 = m.iter().map(|a| a * a).sum();
                let score = dot - sq / 2.0;
                if score > best.0 {
                    best = (score, g);
                }
            }
            if best.1 == labels[i] {
                correct += 1;
            }
        }
        correct as f64 / data.len() as f64
    }

    #[test]
    fn coarse_groups_are_linearly_separable() {
        let data = generate_hierarchical_blobs(&hier_config()).unwrap();
        let acc = linear_centroid_accuracy(&data, data.coarse_labels().unwrap(), 4);
        assert!(acc >= 0.99, "coarse linear oracle accuracy {acc}");
    }

    #[test]
    fn csv_schema_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(&path, "f0,f1,label\n1.5,2.5,0\n-1,0.25,1\n3,4,1\n").unwrap();
        let data = load_dataset_csv(&path).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.feature_dim(), 2);
        assert_eq!(data.labels(), &[0, 1, 1]);

        let gen = generate_hierarchical_blobs(&hier_config()).unwrap();
        let out = dir.path().join("gen.csv");
        save_dataset_csv(&gen, &out, Some("provenance")).unwrap();
        let loaded = load_dataset_csv(&out).unwrap();
        assert_eq!(loaded.len(), gen.len());
        assert_eq!(loaded.labels(), gen.labels());
        assert_eq!(loaded.coarse_labels(), gen.coarse_labels());
        for (a, b) in loaded.features().iter().zip(gen.features()) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn csv_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "f0,f1,label\n1,2,abc\n").unwrap();
        let err = load_dataset_csv(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        assert!(err.contains("abc"), "{err}");

        std::fs::write(&path, "f0,f1,label\n1,2,0\n1,2\n").unwrap();
        let err = load_dataset_csv(&path).unwrap_err().to_string();
        assert!(err.contains(":3:") && err.contains("columns"), "{err}");

        std::fs::write(&path, "f0,f1,label\n1,inf,0\n").unwrap();
        let err = load_dataset_csv(&path).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("non-finite"), "{err}");
    }

    #[test]
    fn split_sizes_and_determinism() {
        let data = generate_hierarchical_blobs(&hier_config()).unwrap();
        let (train, val, test) = split_dataset(&data, (0.6, 0.2, 0.2), 11).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (720, 240, 240));
        for k in 0..12 {
            assert_eq!(train.labels().iter().filter(|&&l| l == k).count(), 60);
            assert_eq!(val.labels().iter().filter(|&&l| l == k).count(), 20);
            assert_eq!(test.labels().iter().filter(|&&l| l == k).count(), 20);
        }
        let again = split_dataset(&data, (0.6, 0.2, 0.2), 11).unwrap();
        assert_eq!(again.0, train);
        assert_eq!(again.1, val);
        assert_eq!(again.2, test);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let data = generate_hierarchical_blobs(&hier_config()).unwrap();
        let err = split_dataset(&data, (0.5, 0.5, 0.1), 0).unwrap_err().to_string();
        assert!(err.contains("sum to 1"), "{err}");
        assert!(split_dataset(&data, (0.6, 0.4, 0.0), 0).is_err());
    }

    #[test]
    fn split_rejects_classes_smaller_than_part_count() {
        let features = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let labels = vec![0, 0, 0, 1];
        let data = LabeledDataset::new(features, labels, None, 2, 2).unwrap();
        let err = split_dataset(&data, (0.4, 0.3, 0.3), 0).unwrap_err().to_string();
        assert!(err.contains("class 1"), "{err}");
    }

    #[test]
    fn split_union_is_the_input_multiset_and_stratified() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..20 {
            let config = HierarchyConfig {
                coarse_count: 1 + (trial % 3),
                fine_per_coarse: 2 + (trial % 2),
                samples_per_class: 7 + trial * 3,
                coarse_separation: 8.0,
                fine_separation: 1.0,
                noise_sigma: 0.5,
                feature_dim: 3,
                seed: trial as u64,
            };
            let data = generate_hierarchical_blobs(&config).unwrap();
            let a = 0.2 + 0.4 * rng.random::<f64>();
            let b = 0.1 + 0.5 * (1.0 - a) * rng.random::<f64>();
            let fractions = (a, b, 1.0 - a - b);
            let Ok((train, val, test)) = split_dataset(&data, fractions, trial as u64) else {
                continue; // a tiny split landed empty; nothing to check
            };

            let mut rows: Vec<(Vec<u64>, usize)> = Vec::new();
            for part in [&train, &val, &test] {
                for i in 0..part.len() {
                    rows.push((
                        part.row(i).iter().map(|v| v.to_bits()).collect(),
                        part.label(i),
                    ));
                }
            }
            rows.sort();
            let mut orig: Vec<(Vec<u64>, usize)> = (0..data.len())
                .map(|i| (data.row(i).iter().map(|v| v.to_bits()).collect(), data.label(i)))
                .collect();
            orig.sort();
            assert_eq!(rows, orig, "union of splits must equal the input");

            for k in 0..data.class_count() {
                let nk = data.labels().iter().filter(|&&l| l == k).count() as f64;
                for (part, frac) in [(&train, fractions.0), (&val, fractions.1), (&test, fractions.2)] {
                    let got = part.labels().iter().filter(|&&l| l == k).count() as f64;
                    assert!(
                        (got - nk * frac).abs() < 1.0,
                        "class {k}: got {got}, exact {}",
                        nk * frac
                    );
                }
            }
        }
    }
}
