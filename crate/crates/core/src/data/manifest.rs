//! Tab-separated `relative-path<TAB>label` dataset listings.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::dataset::{split_indices, LabeledImages};
use crate::data::pgm::read_pgm;
use crate::data::transform::fit_square;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Class name treated as positive when present.
pub const POSITIVE_LABEL: &str = "pneumonia";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
        })
    }
}

impl FromStr for SplitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitTag::Train),
            "val" => Ok(SplitTag::Val),
            "test" => Ok(SplitTag::Test),
            _ => Err(Error::Argument(format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
}

/// Image paths (relative to `root`) with their class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
    /// Sorted; a label's index is its position here.
    classes: Vec<String>,
    split: Option<SplitTag>,
}

/// Sorted, deduplicated class names.
pub fn class_index_order(labels: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut classes: Vec<String> = labels.into_iter().collect::<HashSet<_>>().into_iter().collect();
    classes.sort();
    classes
}

/// Index of the positive class: [`POSITIVE_LABEL`] if present, otherwise 1.
pub fn positive_class_of(classes: &[String]) -> usize {
    classes
        .iter()
        .position(|c| c == POSITIVE_LABEL)
        .unwrap_or(1.min(classes.len().saturating_sub(1)))
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.path.is_empty() || e.label.is_empty() {
                return Err(Error::Manifest {
                    line: i + 1,
                    message: "empty path or label".into(),
                });
            }
            if !seen.insert(e.path.as_str()) {
                return Err(Error::Manifest {
                    line: i + 1,
                    message: format!("duplicate path `{}`", e.path),
                });
            }
        }
        let classes = class_index_order(entries.iter().map(|e| e.label.clone()));
        Ok(Self {
            root: root.into(),
            entries,
            classes,
            split: None,
        })
    }

    /// Parses manifest text. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut entries = Vec::new();
        let mut lines = Vec::new();
        for (n, line) in text.split('\n').enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(path), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Manifest {
                    line: n + 1,
                    message: "expected exactly `path<TAB>label`".into(),
                });
            };
            entries.push(ManifestEntry {
                path: path.to_owned(),
                label: label.to_owned(),
            });
            lines.push(n + 1);
        }
        // report errors against source line numbers
        Self::new(root, entries).map_err(|e| match e {
            Error::Manifest { line, message } => Error::Manifest {
                line: lines[line - 1],
                message,
            },
            other => other,
        })
    }

    /// Reads a manifest file; paths resolve against its directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root)
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\n", e.path, e.label))
            .collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn split_tag(&self) -> Option<SplitTag> {
        self.split
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries
            .iter()
            .map(|e| {
                self.classes
                    .binary_search(&e.label)
                    .expect("label drawn from class set")
            })
            .collect()
    }

    pub fn positive_class(&self) -> usize {
        positive_class_of(&self.classes)
    }

    /// Stratified three-way split; every part keeps the full class list.
    pub fn split(&self, fractions: [f64; 3], rng: &mut Rng) -> Result<[DatasetManifest; 3]> {
        let parts = split_indices(&self.labels(), self.classes.len(), fractions, rng)?;
        let tags = [SplitTag::Train, SplitTag::Val, SplitTag::Test];
        Ok(std::array::from_fn(|k| DatasetManifest {
            root: self.root.clone(),
            entries: parts[k].iter().map(|&i| self.entries[i].clone()).collect(),
            classes: self.classes.clone(),
            split: Some(tags[k]),
        }))
    }

    /// Loads every image, fitted to `side×side`.
    pub fn load(&self, side: usize) -> Result<LabeledImages> {
        let mut images = Vec::with_capacity(self.len());
        for e in &self.entries {
            let img = read_pgm(self.root.join(&e.path))?;
            images.push(fit_square(&img, side)?);
        }
        LabeledImages::new(
            images,
            self.labels(),
            self.entries.iter().map(|e| e.path.clone()).collect(),
            self.classes.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_classes() {
        let m = DatasetManifest::parse("a.pgm\tpneumonia\n# note\n\nb.pgm\tnormal\nc.pgm\tnormal\n", "/x").unwrap();
        assert_eq!(m.classes(), ["normal", "pneumonia"]);
        assert_eq!(m.labels(), vec![1, 0, 0]);
        assert_eq!(m.positive_class(), 1);
        assert_eq!(DatasetManifest::parse(&m.to_text(), "/x").unwrap(), m);
    }

    #[test]
    fn errors_report_lines() {
        let dup = DatasetManifest::parse("a\tx\n\nb\ty\na\ty\n", "");
        assert!(matches!(dup, Err(Error::Manifest { line: 4, .. })));
        let bad = DatasetManifest::parse("a\tx\nb y\n", "");
        assert!(matches!(bad, Err(Error::Manifest { line: 2, .. })));
    }

    #[test]
    fn positive_fallback() {
        let c = vec!["cat".to_string(), "dog".to_string()];
        assert_eq!(positive_class_of(&c), 1);
    }
}
