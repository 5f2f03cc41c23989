//! Instance pool with labeled/unlabeled bookkeeping.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single pool member. `id` is its 0-based row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: usize,
    pub features: Vec<f64>,
}

/// One label obtained from an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub instance_id: usize,
    pub class_index: usize,
    pub z1: u8,
    /// `None` when the expert gave no confidence level.
    pub z2: Option<u8>,
    /// Unix milliseconds; only set for labels entered by a human.
    pub timestamp: Option<u64>,
    pub query_index: usize,
}

/// Options for [`Dataset::load_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub label_column: Option<String>,
    pub delimiter: char,
    pub standardize: bool,
    /// Declares the class set up front. Required for interactive runs on
    /// data without a label column.
    pub class_names: Option<Vec<String>>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            label_column: None,
            delimiter: ',',
            standardize: true,
            class_names: None,
        }
    }
}

/// Immutable feature pool plus the labeled/unlabeled partition.
///
/// `ground_truth` is hidden from the learner: only the simulated oracle and
/// accuracy reporting read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    instances: Vec<Instance>,
    class_names: Vec<String>,
    ground_truth: Option<Vec<usize>>,
    labeled: BTreeMap<usize, usize>,
    unlabeled: BTreeSet<usize>,
}

impl Dataset {
    /// Builds a fully unlabeled dataset from raw feature rows.
    pub fn new(
        features: Vec<Vec<f64>>,
        class_names: Vec<String>,
        ground_truth: Option<Vec<usize>>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = features[0].len();
        for (row, f) in features.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {dim} features, found {}", f.len()),
                });
            }
            if let Some(v) = f.iter().find(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite feature value {v}"),
                });
            }
        }
        if let Some(gt) = &ground_truth {
            if gt.len() != features.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} ground-truth labels for {} instances",
                    gt.len(),
                    features.len()
                )));
            }
            if let Some(&bad) = gt.iter().find(|&&c| c >= class_names.len()) {
                return Err(Error::UnknownClass {
                    index: bad,
                    classes: class_names.len(),
                });
            }
        }
        let unlabeled = (0..features.len()).collect();
        let instances = features
            .into_iter()
            .enumerate()
            .map(|(id, features)| Instance { id, features })
            .collect();
        Ok(Self {
            instances,
            class_names,
            ground_truth,
            labeled: BTreeMap::new(),
            unlabeled,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, options)
    }

    pub fn from_csv_reader<R: Read>(reader: R, options: &LoadOptions) -> Result<Self> {
        if !options.delimiter.is_ascii() {
            return Err(Error::InvalidConfig("delimiter must be ASCII".into()));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(options.delimiter as u8)
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse {
                row: 0,
                message: e.to_string(),
            })?
            .clone();
        let label_col = match &options.label_column {
            Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
                Error::Parse {
                    row: 0,
                    message: format!("label column {name:?} not in header"),
                }
            })?),
            None => None,
        };

        let mut features = Vec::new();
        let mut raw_labels = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Parse {
                row,
                message: e.to_string(),
            })?;
            if record.len() != headers.len() {
                return Err(Error::Parse {
                    row,
                    message: format!("ragged row: {} cells, header has {}", record.len(), headers.len()),
                });
            }
            let mut x = Vec::with_capacity(headers.len());
            for (col, cell) in record.iter().enumerate() {
                if Some(col) == label_col {
                    raw_labels.push(cell.to_string());
                    continue;
                }
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    row,
                    message: format!("non-numeric cell {cell:?} in column {:?}", &headers[col]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        message: format!("non-finite cell {cell:?}"),
                    });
                }
                x.push(v);
            }
            features.push(x);
        }
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }

        let (class_names, ground_truth) = if label_col.is_some() {
            let names: Vec<String> = match &options.class_names {
                Some(declared) => declared.clone(),
                None => raw_labels
                    .iter()
                    .cloned()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect(),
            };
            let gt = raw_labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    names.iter().position(|n| n == l).ok_or_else(|| Error::Parse {
                        row: i + 1,
                        message: format!("label {l:?} not among declared classes"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (names, Some(gt))
        } else {
            (options.class_names.clone().unwrap_or_default(), None)
        };

        if options.standardize {
            standardize_columns(&mut features);
        }
        Self::new(features, class_names, ground_truth)
    }

    /// Writes the current feature values (and ground truth, if any) as CSV.
    pub fn write_csv<W: Write>(&self, writer: W, label_column: Option<&str>) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("x{j}")).collect();
        let label_column = label_column.filter(|_| self.ground_truth.is_some());
        if let Some(name) = label_column {
            header.push(name.to_string());
        }
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&header).map_err(csv_err)?;
        for inst in &self.instances {
            let mut row: Vec<String> = inst.features.iter().map(|v| v.to_string()).collect();
            if label_column.is_some() {
                let c = self.ground_truth.as_ref().expect("checked above")[inst.id];
                row.push(self.class_names[c].clone());
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Moves `id` from the unlabeled pool to the labeled set.
    pub fn mark_labeled(&mut self, id: usize, class_index: usize) -> Result<()> {
        if id >= self.instances.len() {
            return Err(Error::UnknownId(id));
        }
        if self.labeled.contains_key(&id) {
            return Err(Error::AlreadyLabeled(id));
        }
        if class_index >= self.n_classes() {
            return Err(Error::UnknownClass {
                index: class_index,
                classes: self.n_classes(),
            });
        }
        self.unlabeled.remove(&id);
        self.labeled.insert(id, class_index);
        Ok(())
    }

    /// Z-scores every feature column in place (see [`standardize_columns`]).
    pub fn standardize(&mut self) {
        let mut rows: Vec<Vec<f64>> = self.instances.iter().map(|i| i.features.clone()).collect();
        standardize_columns(&mut rows);
        for (inst, row) in self.instances.iter_mut().zip(rows) {
            inst.features = row;
        }
    }

    /// Same pool with every label removed.
    pub fn cleared(&self) -> Self {
        Self {
            labeled: BTreeMap::new(),
            unlabeled: (0..self.instances.len()).collect(),
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.instances.first().map_or(0, |i| i.features.len())
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn features(&self, id: usize) -> &[f64] {
        &self.instances[id].features
    }

    pub fn ground_truth(&self) -> Option<&[usize]> {
        self.ground_truth.as_deref()
    }

    pub fn true_class(&self, id: usize) -> Option<usize> {
        self.ground_truth.as_ref().and_then(|gt| gt.get(id).copied())
    }

    pub fn labeled(&self) -> &BTreeMap<usize, usize> {
        &self.labeled
    }

    pub fn label_of(&self, id: usize) -> Option<usize> {
        self.labeled.get(&id).copied()
    }

    pub fn unlabeled(&self) -> &BTreeSet<usize> {
        &self.unlabeled
    }

    /// Unlabeled ids in ascending order.
    pub fn unlabeled_ids(&self) -> Vec<usize> {
        self.unlabeled.iter().copied().collect()
    }

    /// Re-checks the structural invariants; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        let n = self.instances.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.id != i || inst.features.len() != self.dim() {
                return Err(Error::InvalidConfig(format!("malformed instance {i}")));
            }
        }
        if self.labeled.len() + self.unlabeled.len() != n
            || self.labeled.keys().any(|id| self.unlabeled.contains(id) || *id >= n)
            || self.unlabeled.iter().any(|&id| id >= n)
        {
            return Err(Error::InvalidConfig("labeled/unlabeled partition broken".into()));
        }
        if let Some(&c) = self.labeled.values().find(|&&c| c >= self.n_classes()) {
            return Err(Error::UnknownClass {
                index: c,
                classes: self.n_classes(),
            });
        }
        Ok(())
    }
}

/// Per-column z-scores with population standard deviation. Constant columns
/// become all zeros.
pub fn standardize_columns(rows: &mut [Vec<f64>]) {
    let Some(dim) = rows.first().map(Vec::len) else {
        return;
    };
    let n = rows.len() as f64;
    for j in 0..dim {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        for r in rows.iter_mut() {
            r[j] = if std > 0.0 { (r[j] - mean) / std } else { 0.0 };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw() -> LoadOptions {
        LoadOptions {
            standardize: false,
            ..LoadOptions::default()
        }
    }

    #[test]
    fn loads_without_labels() {
        let ds = Dataset::from_csv_reader("a,b\n1,2\n3,4\n5,6\n".as_bytes(), &raw()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.unlabeled_ids(), vec![0, 1, 2]);
        assert!(ds.ground_truth().is_none());
    }

    #[test]
    fn loads_sorted_class_names() {
        let opts = LoadOptions {
            label_column: Some("y".into()),
            ..raw()
        };
        let ds = Dataset::from_csv_reader("a,b,y\n1,2,a\n3,4,b\n5,6,a\n".as_bytes(), &opts).unwrap();
        assert_eq!(ds.class_names(), ["a", "b"]);
        assert_eq!(ds.ground_truth().unwrap(), &[0, 1, 0]);
        assert_eq!(ds.features(1), &[3.0, 4.0]);
    }

    #[test]
    fn rejects_nan_and_text_and_ragged() {
        let nan = Dataset::from_csv_reader("a,b\n1,NaN\n".as_bytes(), &raw());
        assert!(matches!(nan, Err(Error::Parse { row: 1, .. })));
        let text = Dataset::from_csv_reader("a,b\n1,x\n".as_bytes(), &raw());
        assert!(matches!(text, Err(Error::Parse { .. })));
        let ragged = Dataset::from_csv_reader("a,b\n1,2\n3\n".as_bytes(), &raw());
        assert!(matches!(ragged, Err(Error::Parse { row: 2, .. })));
        let empty = Dataset::from_csv_reader("a,b\n".as_bytes(), &raw());
        assert!(matches!(empty, Err(Error::EmptyDataset)));
    }

    #[test]
    fn custom_delimiter() {
        let opts = LoadOptions {
            delimiter: ';',
            ..raw()
        };
        let ds = Dataset::from_csv_reader("a;b\n1;2\n".as_bytes(), &opts).unwrap();
        assert_eq!(ds.features(0), &[1.0, 2.0]);
    }

    #[test]
    fn standardizes_and_zeroes_constant_columns() {
        let ds = Dataset::from_csv_reader(
            "a,b\n1,7\n3,7\n".as_bytes(),
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(ds.features(0), &[-1.0, 0.0]);
        assert_eq!(ds.features(1), &[1.0, 0.0]);
    }

    #[test]
    fn mark_labeled_moves_between_sets() {
        let mut ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec!["a".into(), "b".into()], None).unwrap();
        ds.mark_labeled(0, 1).unwrap();
        assert_eq!(ds.labeled().iter().collect::<Vec<_>>(), vec![(&0, &1)]);
        assert_eq!(ds.unlabeled_ids(), vec![1]);
        assert!(matches!(ds.mark_labeled(0, 1), Err(Error::AlreadyLabeled(0))));
        assert!(matches!(ds.mark_labeled(99, 0), Err(Error::UnknownId(99))));
        assert!(matches!(ds.mark_labeled(1, 2), Err(Error::UnknownClass { .. })));
        ds.validate().unwrap();
    }
}
