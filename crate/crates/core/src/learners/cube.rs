//! The prediction cube: one hard vote per (channel, classifier, region).
//!
//! Votes are one-hot over labels by construction, so the cube stores the
//! predicted label per grid cell and exposes one-hot views. The CSV form
//! (`extractor,classifier,region_id,truth,predicted`) is the bridge for
//! votes produced by external models.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionCube {
    region_ids: Vec<String>,
    truth: Vec<usize>,
    /// Predicted label per cell, laid out `[k * n_fe * n_cl + i * n_cl + j]`.
    predicted: Vec<u16>,
    n_fe: usize,
    n_cl: usize,
    n_labels: usize,
}

impl PredictionCube {
    /// Assemble a cube from per-cell predicted labels.
    ///
    /// `predicted` holds one label per `(region, channel, classifier)` cell,
    /// region-major with `(i, j)` row-major inside a region.
    pub fn from_votes(
        region_ids: Vec<String>,
        truth: Vec<usize>,
        predicted: Vec<u16>,
        n_fe: usize,
        n_cl: usize,
        n_labels: usize,
    ) -> Result<Self> {
        if n_fe == 0 || n_cl == 0 {
            return Err(Error::config("cube needs at least one channel and classifier"));
        }
        if n_labels < 2 {
            return Err(Error::config("cube needs at least two labels"));
        }
        if region_ids.len() != truth.len() {
            return Err(Error::data("region id / truth length mismatch"));
        }
        if predicted.len() != region_ids.len() * n_fe * n_cl {
            return Err(Error::data(format!(
                "vote count {} does not match {} regions x {} cells",
                predicted.len(),
                region_ids.len(),
                n_fe * n_cl
            )));
        }
        for (k, &t) in truth.iter().enumerate() {
            if t >= n_labels {
                return Err(Error::data(format!(
                    "region {}: truth label {} outside 0..{}",
                    region_ids[k],
                    t,
                    n_labels - 1
                )));
            }
        }
        for &p in &predicted {
            if usize::from(p) >= n_labels {
                return Err(Error::data(format!(
                    "predicted label {} outside 0..{}",
                    p,
                    n_labels - 1
                )));
            }
        }
        let mut seen = HashMap::with_capacity(region_ids.len());
        for id in &region_ids {
            if seen.insert(id.clone(), ()).is_some() {
                return Err(Error::data(format!("duplicate region id {id}")));
            }
        }
        Ok(PredictionCube {
            region_ids,
            truth,
            predicted,
            n_fe,
            n_cl,
            n_labels,
        })
    }

    pub fn n_regions(&self) -> usize {
        self.region_ids.len()
    }

    pub fn n_fe(&self) -> usize {
        self.n_fe
    }

    pub fn n_cl(&self) -> usize {
        self.n_cl
    }

    /// Number of base learners `N_FE * N_CL`.
    pub fn n_base_learners(&self) -> usize {
        self.n_fe * self.n_cl
    }

    /// Labels including background (`C + 1`).
    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn region_ids(&self) -> &[String] {
        &self.region_ids
    }

    pub fn truth(&self) -> &[usize] {
        &self.truth
    }

    /// Predicted label of classifier `j` on channel `i` for region `k`.
    pub fn predicted(&self, i: usize, j: usize, k: usize) -> usize {
        usize::from(self.predicted[k * self.n_fe * self.n_cl + i * self.n_cl + j])
    }

    /// All cell votes of region `k`, `(i, j)` row-major.
    pub fn region_votes(&self, k: usize) -> &[u16] {
        let cells = self.n_fe * self.n_cl;
        &self.predicted[k * cells..(k + 1) * cells]
    }

    /// Binary `Out_ijc^k` entry.
    pub fn vote(&self, i: usize, j: usize, k: usize, c: usize) -> u8 {
        u8::from(self.predicted(i, j, k) == c)
    }

    /// One-hot vote vector of a single cell.
    pub fn one_hot(&self, i: usize, j: usize, k: usize) -> Vec<u8> {
        let mut v = vec![0u8; self.n_labels];
        v[self.predicted(i, j, k)] = 1;
        v
    }

    /// Read a cube from its CSV form. Grid shape and label count are inferred
    /// from the rows; every region must carry exactly one vote per cell.
    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            Error::Data(format!("cannot open cube file {}: {e}", path.display()))
        })?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        {
            let headers = rdr.headers()?;
            let expected = ["extractor", "classifier", "region_id", "truth", "predicted"];
            if headers.len() != expected.len()
                || headers.iter().zip(expected).any(|(h, e)| h != e)
            {
                return Err(Error::data(format!(
                    "cube header must be `{}`, found `{}`",
                    expected.join(","),
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }

        struct Row {
            i: usize,
            j: usize,
            region: String,
            truth: usize,
            predicted: usize,
        }
        let mut rows = Vec::new();
        for (idx, record) in rdr.records().enumerate() {
            let record = record?;
            let line = idx + 2; // header is line 1
            let field = |n: usize| -> Result<usize> {
                record[n].trim().parse::<usize>().map_err(|_| {
                    Error::data(format!("row {line}: `{}` is not a valid index", &record[n]))
                })
            };
            rows.push(Row {
                i: field(0)?,
                j: field(1)?,
                region: record[2].to_string(),
                truth: field(3)?,
                predicted: field(4)?,
            });
        }
        if rows.is_empty() {
            return Err(Error::data("empty cube file"));
        }

        let n_fe = rows.iter().map(|r| r.i).max().unwrap() + 1;
        let n_cl = rows.iter().map(|r| r.j).max().unwrap() + 1;
        let n_labels = rows
            .iter()
            .map(|r| r.truth.max(r.predicted))
            .max()
            .unwrap()
            + 1;
        let n_labels = n_labels.max(2);
        let cells = n_fe * n_cl;

        // Region order follows first appearance in the file.
        let mut region_ids: Vec<String> = Vec::new();
        let mut index_of: HashMap<String, usize> = HashMap::new();
        for row in &rows {
            if !index_of.contains_key(&row.region) {
                index_of.insert(row.region.clone(), region_ids.len());
                region_ids.push(row.region.clone());
            }
        }

        let mut truth = vec![usize::MAX; region_ids.len()];
        let mut predicted = vec![u16::MAX; region_ids.len() * cells];
        for row in &rows {
            let k = index_of[&row.region];
            if truth[k] == usize::MAX {
                truth[k] = row.truth;
            } else if truth[k] != row.truth {
                return Err(Error::data(format!(
                    "region {}: conflicting truth labels {} and {}",
                    row.region, truth[k], row.truth
                )));
            }
            let cell = k * cells + row.i * n_cl + row.j;
            if predicted[cell] != u16::MAX {
                return Err(Error::data(format!(
                    "duplicate vote for ({}, {}, {})",
                    row.i, row.j, row.region
                )));
            }
            predicted[cell] = row.predicted as u16;
        }
        for (k, id) in region_ids.iter().enumerate() {
            if predicted[k * cells..(k + 1) * cells]
                .iter()
                .any(|&p| p == u16::MAX)
            {
                return Err(Error::data(format!("incomplete grid for region {id}")));
            }
        }

        Self::from_votes(region_ids, truth, predicted, n_fe, n_cl, n_labels)
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["extractor", "classifier", "region_id", "truth", "predicted"])?;
        for k in 0..self.n_regions() {
            for i in 0..self.n_fe {
                for j in 0..self.n_cl {
                    wtr.write_record([
                        i.to_string(),
                        j.to_string(),
                        self.region_ids[k].clone(),
                        self.truth[k].to_string(),
                        self.predicted(i, j, k).to_string(),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cube() -> PredictionCube {
        // 2x2 grid, 2 regions, labels 0..2
        PredictionCube::from_votes(
            vec!["a".into(), "b".into()],
            vec![1, 0],
            vec![1, 1, 0, 2, 0, 0, 0, 1],
            2,
            2,
            3,
        )
        .unwrap()
    }

    #[test]
    fn one_hot_per_cell() {
        let cube = tiny_cube();
        for k in 0..cube.n_regions() {
            for i in 0..cube.n_fe() {
                for j in 0..cube.n_cl() {
                    let sum: u8 = (0..cube.n_labels()).map(|c| cube.vote(i, j, k, c)).sum();
                    assert_eq!(sum, 1);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let cube = tiny_cube();
        let mut buf = Vec::new();
        cube.write_csv(&mut buf).unwrap();
        let back = PredictionCube::read_csv(&buf[..]).unwrap();
        assert_eq!(cube, back);
    }

    #[test]
    fn duplicate_vote_rejected() {
        let csv = "extractor,classifier,region_id,truth,predicted\n\
                   0,0,r1,1,1\n0,0,r1,1,0\n";
        let err = PredictionCube::read_csv(csv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate vote"), "{err}");
    }

    #[test]
    fn incomplete_grid_rejected() {
        let csv = "extractor,classifier,region_id,truth,predicted\n\
                   0,0,r1,1,1\n0,1,r1,1,0\n1,0,r1,1,1\n1,1,r1,1,1\n\
                   0,0,r7,0,0\n0,1,r7,0,0\n1,0,r7,0,1\n";
        let err = PredictionCube::read_csv(csv.as_bytes()).unwrap_err();
        assert!(
            err.to_string().contains("incomplete grid for region r7"),
            "{err}"
        );
    }

    #[test]
    fn conflicting_truth_rejected() {
        let csv = "extractor,classifier,region_id,truth,predicted\n\
                   0,0,r1,1,1\n0,1,r1,2,0\n";
        let err = PredictionCube::read_csv(csv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("conflicting truth"), "{err}");
    }

    #[test]
    fn region_order_follows_file() {
        let csv = "extractor,classifier,region_id,truth,predicted\n\
                   0,0,z,1,1\n0,0,a,0,0\n";
        let cube = PredictionCube::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(cube.region_ids(), &["z".to_string(), "a".to_string()]);
    }
}
