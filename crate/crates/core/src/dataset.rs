//! Labeled multi-channel feature data, hold-out splitting and stratified
//! K-fold planning.
//!
//! A region carries one feature vector per channel; channel dimensionalities
//! are declared up front in a JSON schema sidecar and validated on load.
//! Label 0 is background and labels `1..=C` are object classes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// Channel declaration loaded from the schema sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    /// Dimensionality of each feature channel.
    pub channels: Vec<usize>,
    /// Number of object classes, background excluded.
    pub class_count: usize,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::config("schema declares no feature channels"));
        }
        if self.channels.iter().any(|&d| d == 0) {
            return Err(Error::config("channel dimensionalities must be positive"));
        }
        if self.class_count == 0 {
            return Err(Error::config("class_count must be at least 1"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot open schema {}: {e}", path.display())))?;
        let schema: DatasetSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Expected CSV header for this schema.
    pub fn csv_header(&self) -> Vec<String> {
        let mut header = vec!["region_id".to_string(), "label".to_string()];
        for (ch, &dim) in self.channels.iter().enumerate() {
            for f in 0..dim {
                header.push(format!("ch{ch}_f{f}"));
            }
        }
        header
    }
}

/// One labeled region with one feature vector per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRegion {
    pub id: String,
    pub label: usize,
    pub features: Vec<Vec<f64>>,
}

/// An immutable collection of labeled regions with fixed channel layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    regions: Vec<LabeledRegion>,
    channel_dims: Vec<usize>,
    class_count: usize,
    class_counts: Vec<u64>,
}

impl Dataset {
    /// Validate regions against the channel layout and count classes.
    pub fn new(
        regions: Vec<LabeledRegion>,
        channel_dims: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        if channel_dims.is_empty() || channel_dims.iter().any(|&d| d == 0) {
            return Err(Error::config("channel dimensionalities must be positive"));
        }
        if class_count == 0 {
            return Err(Error::config("class_count must be at least 1"));
        }
        let mut class_counts = vec![0u64; class_count + 1];
        let mut seen = std::collections::HashSet::with_capacity(regions.len());
        for (row, region) in regions.iter().enumerate() {
            if !seen.insert(region.id.clone()) {
                return Err(Error::data(format!(
                    "row {row}: duplicate region id {}",
                    region.id
                )));
            }
            if region.label > class_count {
                return Err(Error::data(format!(
                    "row {row}: label {} outside 0..{class_count}",
                    region.label
                )));
            }
            if region.features.len() != channel_dims.len() {
                return Err(Error::data(format!(
                    "row {row}: {} feature channels, schema declares {}",
                    region.features.len(),
                    channel_dims.len()
                )));
            }
            for (ch, vec) in region.features.iter().enumerate() {
                if vec.len() != channel_dims[ch] {
                    return Err(Error::data(format!(
                        "row {row}: channel {ch} has {} features, schema declares {}",
                        vec.len(),
                        channel_dims[ch]
                    )));
                }
                if let Some(pos) = vec.iter().position(|x| !x.is_finite()) {
                    return Err(Error::data(format!(
                        "row {row}: non-finite feature value in channel {ch} position {pos}"
                    )));
                }
            }
            class_counts[region.label] += 1;
        }
        Ok(Dataset {
            regions,
            channel_dims,
            class_count,
            class_counts,
        })
    }

    pub fn regions(&self) -> &[LabeledRegion] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn channel_dims(&self) -> &[usize] {
        &self.channel_dims
    }

    /// Number of feature channels `N_FE`.
    pub fn n_channels(&self) -> usize {
        self.channel_dims.len()
    }

    /// Number of object classes `C`, background excluded.
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Regions per label, indexed `0..=C`.
    pub fn class_counts(&self) -> &[u64] {
        &self.class_counts
    }

    pub fn labels(&self) -> Vec<usize> {
        self.regions.iter().map(|r| r.label).collect()
    }

    pub fn region_ids(&self) -> Vec<String> {
        self.regions.iter().map(|r| r.id.clone()).collect()
    }

    /// Feature rows of one channel, in region order.
    pub fn channel_rows(&self, channel: usize) -> Vec<&[f64]> {
        self.regions
            .iter()
            .map(|r| r.features[channel].as_slice())
            .collect()
    }

    /// Sub-dataset at the given region indices (ascending order expected).
    fn subset(&self, indices: &[usize]) -> Dataset {
        let regions = indices.iter().map(|&k| self.regions[k].clone()).collect();
        Dataset::new(regions, self.channel_dims.clone(), self.class_count)
            .expect("subset of a valid dataset stays valid")
    }

    fn indices_by_label(&self) -> Vec<Vec<usize>> {
        let mut by_label = vec![Vec::new(); self.class_count + 1];
        for (k, region) in self.regions.iter().enumerate() {
            by_label[region.label].push(k);
        }
        by_label
    }

    fn require_all_classes(&self, op: &str) -> Result<()> {
        for (label, &count) in self.class_counts.iter().enumerate() {
            if count == 0 {
                return Err(Error::data(format!(
                    "{op} requires at least one region per class, class {label} has none"
                )));
            }
        }
        Ok(())
    }

    /// Stratified hold-out split: per class, `round(N_c * train_fraction)`
    /// regions (half rounded up) go to train and the rest to test.
    /// Deterministic for a given seed.
    pub fn split_holdout(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !train_fraction.is_finite() || train_fraction <= 0.0 || train_fraction >= 1.0 {
            return Err(Error::config(format!(
                "train_fraction {train_fraction} outside (0, 1)"
            )));
        }
        self.require_all_classes("split_holdout")?;

        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for (label, mut members) in self.indices_by_label().into_iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let n = members.len();
            let mut n_train = (n as f64 * train_fraction).round() as usize;
            if n >= 2 {
                let clamped = n_train.clamp(1, n - 1);
                if clamped != n_train {
                    log::warn!(
                        "class {label}: train share {n_train} of {n} adjusted to {clamped} \
                         to keep both sides non-empty"
                    );
                    n_train = clamped;
                }
            }
            let mut rng = rng::rng_from(seed, &[domain::HOLDOUT, label as u64]);
            members.shuffle(&mut rng);
            train_idx.extend_from_slice(&members[..n_train]);
            test_idx.extend_from_slice(&members[n_train..]);
        }
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        Ok((self.subset(&train_idx), self.subset(&test_idx)))
    }

    /// Stratified K-fold plan over this dataset's regions.
    pub fn stratified_kfold(&self, k: usize, seed: u64) -> Result<FoldPlan> {
        self.require_all_classes("stratified_kfold")?;
        let ids = self.region_ids();
        let labels = self.labels();
        let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        FoldPlan::stratified(&id_refs, &labels, k, seed)
    }
}

/// Assignment of regions to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    seed: u64,
    assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    /// Stratified assignment of labeled region ids to `k` folds.
    ///
    /// Per class the fold shares differ by at most one; classes with fewer
    /// than `k` members land in as many distinct folds as they have members.
    pub fn stratified(ids: &[&str], labels: &[usize], k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::config("K must be ≥ 2"));
        }
        if ids.len() != labels.len() {
            return Err(Error::data("id / label length mismatch"));
        }
        if k > ids.len() {
            return Err(Error::config(format!(
                "K = {k} exceeds the number of regions ({})",
                ids.len()
            )));
        }

        let n_labels = labels.iter().max().copied().unwrap_or(0) + 1;
        let mut by_label = vec![Vec::new(); n_labels];
        for (idx, &label) in labels.iter().enumerate() {
            by_label[label].push(idx);
        }

        let mut assignments = BTreeMap::new();
        let mut offset = 0usize;
        for (label, mut members) in by_label.into_iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let mut rng = rng::rng_from(seed, &[domain::KFOLD, label as u64]);
            members.shuffle(&mut rng);
            for (m, idx) in members.iter().enumerate() {
                let fold = (offset + m) % k;
                if assignments.insert(ids[*idx].to_string(), fold).is_some() {
                    return Err(Error::data(format!("duplicate region id {}", ids[*idx])));
                }
            }
            // Rotate the starting fold so extra members do not pile up in
            // fold 0 across classes.
            offset = (offset + members.len()) % k;
        }
        Ok(FoldPlan {
            k,
            seed,
            assignments,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn fold_of(&self, region_id: &str) -> Option<usize> {
        self.assignments.get(region_id).copied()
    }

    pub fn assignments(&self) -> &BTreeMap<String, usize> {
        &self.assignments
    }
}

/// Read a dataset CSV plus its schema declaration.
///
/// The header must match the schema exactly; every malformed cell is
/// reported with its row number.
pub fn load_dataset(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open dataset {}: {e}", path.display())))?;
    read_dataset(file, schema)
}

pub fn read_dataset<R: Read>(reader: R, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let expected = schema.csv_header();
    {
        let headers = rdr.headers()?;
        let found: Vec<&str> = headers.iter().collect();
        if found != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::data(format!(
                "dataset header does not match schema: expected {} columns starting \
                 `region_id,label,...`, found {} columns",
                expected.len(),
                found.len()
            )));
        }
    }

    let mut regions = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row = idx + 2; // header is line 1
        if record.len() != expected.len() {
            return Err(Error::data(format!(
                "row {row}: {} fields, expected {}",
                record.len(),
                expected.len()
            )));
        }
        let id = record[0].to_string();
        let label: usize = record[1].trim().parse().map_err(|_| {
            Error::data(format!("row {row}: label `{}` is not an integer", &record[1]))
        })?;
        if label > schema.class_count {
            return Err(Error::data(format!(
                "row {row}: label {label} outside 0..{}",
                schema.class_count
            )));
        }
        let mut features = Vec::with_capacity(schema.channels.len());
        let mut col = 2;
        for (ch, &dim) in schema.channels.iter().enumerate() {
            let mut vec = Vec::with_capacity(dim);
            for f in 0..dim {
                let raw = record[col].trim();
                let value: f64 = raw.parse().map_err(|_| {
                    Error::data(format!(
                        "row {row}: channel {ch} feature {f}: `{raw}` is not a number"
                    ))
                })?;
                if !value.is_finite() {
                    return Err(Error::data(format!(
                        "row {row}: channel {ch} feature {f}: non-finite value"
                    )));
                }
                vec.push(value);
                col += 1;
            }
            features.push(vec);
        }
        regions.push(LabeledRegion { id, label, features });
    }
    if regions.is_empty() {
        return Err(Error::data("empty dataset"));
    }
    Dataset::new(regions, schema.channels.clone(), schema.class_count)
}

/// Write a dataset in the CSV form `load_dataset` reads.
pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let schema = DatasetSchema {
        channels: dataset.channel_dims().to_vec(),
        class_count: dataset.class_count(),
    };
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(schema.csv_header())?;
    for region in dataset.regions() {
        let mut record = vec![region.id.clone(), region.label.to_string()];
        for channel in &region.features {
            for value in channel {
                record.push(value.to_string());
            }
        }
        wtr.write_record(record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset(dataset, file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(id: &str, label: usize, a: f64, b: f64) -> LabeledRegion {
        LabeledRegion {
            id: id.to_string(),
            label,
            features: vec![vec![a], vec![b, b + 1.0]],
        }
    }

    fn toy(labels: &[usize]) -> Dataset {
        let regions = labels
            .iter()
            .enumerate()
            .map(|(k, &l)| region(&format!("r{k}"), l, k as f64, -(k as f64)))
            .collect();
        let class_count = labels.iter().max().copied().unwrap_or(0).max(1);
        Dataset::new(regions, vec![1, 2], class_count).unwrap()
    }

    #[test]
    fn counts_by_inspection() {
        let ds = toy(&[0, 1, 1]);
        assert_eq!(ds.class_counts(), &[1, 2, 0]);
        assert_eq!(ds.len(), 3);
    }

    #[test]
    fn csv_round_trip_and_row_order() {
        let ds = toy(&[0, 1, 2, 1]);
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let schema = DatasetSchema {
            channels: vec![1, 2],
            class_count: 2,
        };
        let back = read_dataset(&buf[..], &schema).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn empty_file_with_header_rejected() {
        let schema = DatasetSchema {
            channels: vec![1],
            class_count: 1,
        };
        let csv = "region_id,label,ch0_f0\n";
        let err = read_dataset(csv.as_bytes(), &schema).unwrap_err();
        assert!(err.to_string().contains("empty dataset"), "{err}");
    }

    #[test]
    fn malformed_rows_reported_with_row_number() {
        let schema = DatasetSchema {
            channels: vec![1],
            class_count: 2,
        };
        let bad_label = "region_id,label,ch0_f0\nr0,9,1.0\n";
        let err = read_dataset(bad_label.as_bytes(), &schema).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");

        let bad_value = "region_id,label,ch0_f0\nr0,1,1.0\nr1,1,abc\n";
        let err = read_dataset(bad_value.as_bytes(), &schema).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");

        let nan = "region_id,label,ch0_f0\nr0,0,NaN\n";
        let err = read_dataset(nan.as_bytes(), &schema).unwrap_err();
        assert!(err.to_string().contains("non-finite"), "{err}");
    }

    #[test]
    fn holdout_round_half_up() {
        // 8 regions of one class at fraction 0.75 -> 6 train / 2 test
        let ds = toy(&[0, 1, 1, 1, 1, 1, 1, 1, 1, 0]);
        let (train, test) = ds.split_holdout(0.75, 7).unwrap();
        assert_eq!(train.class_counts()[1], 6);
        assert_eq!(test.class_counts()[1], 2);
        // class 0 with 2 members: round(1.5) = 2 would empty the test side,
        // so it is adjusted back to 1/1.
        assert_eq!(train.class_counts()[0], 1);
        assert_eq!(test.class_counts()[0], 1);
    }

    #[test]
    fn holdout_is_deterministic_and_conserving() {
        let ds = toy(&[0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2]);
        let (tr1, te1) = ds.split_holdout(0.75, 99).unwrap();
        let (tr2, te2) = ds.split_holdout(0.75, 99).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
        assert_eq!(tr1.len() + te1.len(), ds.len());
        for c in 0..=2 {
            assert_eq!(
                tr1.class_counts()[c] + te1.class_counts()[c],
                ds.class_counts()[c]
            );
        }
        let (tr3, _) = ds.split_holdout(0.75, 100).unwrap();
        assert_ne!(tr1.region_ids(), tr3.region_ids());
    }

    #[test]
    fn holdout_fraction_bounds() {
        let ds = toy(&[0, 1, 2]);
        assert!(ds.split_holdout(0.0, 1).is_err());
        assert!(ds.split_holdout(1.0, 1).is_err());
        assert!(ds.split_holdout(f64::NAN, 1).is_err());
    }

    #[test]
    fn kfold_exact_divisibility() {
        // 100 regions, 50/50 two object classes, K=10 -> 5 of each per fold
        let labels: Vec<usize> = (0..100).map(|k| 1 + k % 2).collect();
        let regions: Vec<LabeledRegion> = labels
            .iter()
            .enumerate()
            .map(|(k, &l)| region(&format!("r{k}"), l, k as f64, 0.0))
            .collect();
        let ds = Dataset::new(regions, vec![1, 2], 2);
        // class 0 absent -> stratified_kfold refuses
        assert!(ds.unwrap().stratified_kfold(10, 3).is_err());

        let labels: Vec<usize> = (0..100).map(|k| k % 2).collect();
        let ds = toy(&labels);
        let plan = ds.stratified_kfold(10, 3).unwrap();
        let mut per_fold = vec![[0usize; 2]; 10];
        for region in ds.regions() {
            let fold = plan.fold_of(&region.id).unwrap();
            per_fold[fold][region.label] += 1;
        }
        for counts in &per_fold {
            assert_eq!(counts[0], 5);
            assert_eq!(counts[1], 5);
        }
    }

    #[test]
    fn kfold_small_class_spread() {
        // 59 members of one class over K=10 -> folds hold 5 or 6
        let mut labels = vec![0usize; 30];
        labels.extend(std::iter::repeat(1).take(59));
        labels.extend(std::iter::repeat(2).take(11));
        let ds = toy(&labels);
        let plan = ds.stratified_kfold(10, 5).unwrap();
        let mut shares = vec![0usize; 10];
        for region in ds.regions().iter().filter(|r| r.label == 1) {
            shares[plan.fold_of(&region.id).unwrap()] += 1;
        }
        assert!(shares.iter().all(|&s| s == 5 || s == 6), "{shares:?}");
    }

    #[test]
    fn kfold_preconditions() {
        let ds = toy(&[0, 1, 2, 0, 1, 2]);
        let err = ds.stratified_kfold(1, 0).unwrap_err();
        assert!(err.to_string().contains("K must be ≥ 2"), "{err}");
        assert!(ds.stratified_kfold(7, 0).is_err());
    }

    #[test]
    fn kfold_partitions_everything() {
        let labels: Vec<usize> = (0..37).map(|k| k % 3).collect();
        let ds = toy(&labels);
        let plan = ds.stratified_kfold(4, 11).unwrap();
        assert_eq!(plan.len(), ds.len());
        for region in ds.regions() {
            assert!(plan.fold_of(&region.id).unwrap() < 4);
        }
        // determinism
        assert_eq!(plan, ds.stratified_kfold(4, 11).unwrap());
    }
}
