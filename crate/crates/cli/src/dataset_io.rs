//! On-disk dataset directories: reading and writing the edges/features/
//! labels/meta/splits layout.
//!
//! A dataset directory holds `edges.tsv` (tab-separated node id pairs,
//! `#` comments), either `features.fbin` (magic `GFSF`, little-endian
//! u32 row and column counts, then row-major little-endian f32 values)
//! or `features.csv` (headerless comma-separated reals), `labels.csv`
//! (one integer per line), `meta.json` (`num_classes`, `task`, optional
//! `name`), and optionally `splits.json` (`train`/`val`/`test` index
//! arrays). A missing `splits.json` falls back to a seeded 50/25/25
//! split.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use gfs_core::{DataSplit, Dataset, FeatureMatrix, Graph, LabelVector, Task};

const FBIN_MAGIC: [u8; 4] = *b"GFSF";

/// Errors split by exit code: usage problems exit 1, everything that is
/// wrong with the data or the run itself exits 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data {
        file: String,
        location: Option<String>,
        reason: String,
    },
}

impl CliError {
    pub fn data(file: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Data {
            file: file.into(),
            location: None,
            reason: reason.into(),
        }
    }

    pub fn data_at(
        file: impl Into<String>,
        location: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        CliError::Data {
            file: file.into(),
            location: Some(location.into()),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "error: {msg}"),
            CliError::Data {
                file,
                location: Some(loc),
                reason,
            } => write!(f, "error: {file}:{loc}: {reason}"),
            CliError::Data {
                file,
                location: None,
                reason,
            } => write!(f, "error: {file}: {reason}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gfs_core::Error> for CliError {
    fn from(e: gfs_core::Error) -> Self {
        CliError::data("dataset", e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::data(display(path), e.to_string()))
}

// The optional `name` key (and any future metadata) is accepted and
// ignored on load; only save_dataset writes it.
#[derive(serde::Deserialize)]
struct MetaFile {
    num_classes: usize,
    task: String,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct SplitsFile {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

fn parse_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = read_to_string(path)?;
    let mut edges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let parse = |part: Option<&str>| -> Result<usize> {
            part.ok_or_else(|| {
                CliError::data_at(
                    display(path),
                    (idx + 1).to_string(),
                    "expected two tab-separated node ids",
                )
            })?
            .trim()
            .parse::<usize>()
            .map_err(|e| {
                CliError::data_at(display(path), (idx + 1).to_string(), format!("bad node id: {e}"))
            })
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(CliError::data_at(
                display(path),
                (idx + 1).to_string(),
                "expected exactly two fields",
            ));
        }
        edges.push((u, v));
    }
    Ok(edges)
}

fn parse_features_fbin(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| CliError::data(display(path), e.to_string()))?;
    if bytes.len() < 12 {
        return Err(CliError::data_at(
            display(path),
            "offset 0",
            format!("file too short for header: {} bytes", bytes.len()),
        ));
    }
    if bytes[..4] != FBIN_MAGIC {
        return Err(CliError::data_at(
            display(path),
            "offset 0",
            format!("bad magic {:?}, expected {:?}", &bytes[..4], FBIN_MAGIC),
        ));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let m = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 12 + 4 * n * m;
    if bytes.len() != expected {
        return Err(CliError::data_at(
            display(path),
            "offset 12",
            format!(
                "expected {expected} bytes for {n} x {m} floats, found {}",
                bytes.len()
            ),
        ));
    }
    let values: Vec<f64> = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    FeatureMatrix::new(n, m, values)
        .map_err(|e| CliError::data(display(path), e.to_string()))
}

fn parse_features_csv(path: &Path) -> Result<FeatureMatrix> {
    let text = read_to_string(path)?;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0usize;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| {
                CliError::data_at(
                    display(path),
                    (idx + 1).to_string(),
                    format!("bad real '{}': {e}", field.trim()),
                )
            })?;
            values.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(CliError::data_at(
                    display(path),
                    (idx + 1).to_string(),
                    format!("row has {count} columns, previous rows have {w}"),
                ));
            }
            Some(_) => {}
        }
        rows += 1;
    }
    let width = width.ok_or_else(|| CliError::data(display(path), "no feature rows"))?;
    FeatureMatrix::new(rows, width, values)
        .map_err(|e| CliError::data(display(path), e.to_string()))
}

fn parse_labels(path: &Path, num_classes: usize) -> Result<LabelVector> {
    let text = read_to_string(path)?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let label: usize = line.parse().map_err(|e| {
            CliError::data_at(display(path), (idx + 1).to_string(), format!("bad label: {e}"))
        })?;
        if label >= num_classes {
            return Err(CliError::data_at(
                display(path),
                (idx + 1).to_string(),
                format!("label {label} out of range for {num_classes} classes"),
            ));
        }
        labels.push(label);
    }
    LabelVector::new(labels, num_classes)
        .map_err(|e| CliError::data(display(path), e.to_string()))
}

/// Loads and validates a dataset directory; `split_seed` drives the
/// fallback split when `splits.json` is absent.
pub fn load_dataset(dir: &Path, split_seed: u64) -> Result<Dataset> {
    let meta_path = dir.join("meta.json");
    let meta: MetaFile = serde_json::from_str(&read_to_string(&meta_path)?)
        .map_err(|e| CliError::data_at(display(&meta_path), format!("line {}", e.line()), e.to_string()))?;
    let task = match meta.task.as_str() {
        "multiclass" => Task::Multiclass,
        "binary" => Task::Binary,
        other => {
            return Err(CliError::data(
                display(&meta_path),
                format!("task must be 'multiclass' or 'binary', got '{other}'"),
            ));
        }
    };
    if task == Task::Binary && meta.num_classes != 2 {
        return Err(CliError::data(
            display(&meta_path),
            format!("binary task requires num_classes 2, got {}", meta.num_classes),
        ));
    }

    let fbin = dir.join("features.fbin");
    let features = if fbin.exists() {
        parse_features_fbin(&fbin)?
    } else {
        parse_features_csv(&dir.join("features.csv"))?
    };
    let n = features.num_nodes();

    let edges_path = dir.join("edges.tsv");
    let edges = parse_edges(&edges_path)?;
    let graph = Graph::from_edges(n, &edges)
        .map_err(|e| CliError::data(display(&edges_path), e.to_string()))?;

    let labels_path = dir.join("labels.csv");
    let labels = parse_labels(&labels_path, meta.num_classes)?;
    if labels.num_nodes() != n {
        return Err(CliError::data(
            display(&labels_path),
            format!("{} labels for {} feature rows", labels.num_nodes(), n),
        ));
    }

    let splits_path = dir.join("splits.json");
    let split = if splits_path.exists() {
        let parsed: SplitsFile = serde_json::from_str(&read_to_string(&splits_path)?)
            .map_err(|e| {
                CliError::data_at(display(&splits_path), format!("line {}", e.line()), e.to_string())
            })?;
        DataSplit::new(n, parsed.train, parsed.val, parsed.test)
            .map_err(|e| CliError::data(display(&splits_path), e.to_string()))?
    } else {
        DataSplit::random(n, split_seed)
            .map_err(|e| CliError::data(display(dir), e.to_string()))?
    };

    Ok(Dataset {
        graph,
        features,
        labels,
        split,
        task,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::data(display(path), e.to_string()))
}

/// Writes a dataset directory in the on-disk layout, features in binary
/// form. Feature values must be exactly representable as f32 for the
/// round trip to be bit-exact; the synthetic generator guarantees that.
pub fn save_dataset(dir: &Path, data: &Dataset, name: Option<&str>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::data(display(dir), e.to_string()))?;

    let mut edges = String::from("# source\ttarget\n");
    for (u, v) in data.graph.edges() {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    write_file(&dir.join("edges.tsv"), edges.as_bytes())?;

    let n = data.features.num_nodes();
    let m = data.features.num_features();
    let mut fbin = Vec::with_capacity(12 + 4 * n * m);
    fbin.extend_from_slice(&FBIN_MAGIC);
    fbin.extend_from_slice(&(n as u32).to_le_bytes());
    fbin.extend_from_slice(&(m as u32).to_le_bytes());
    for &v in data.features.values() {
        fbin.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_file(&dir.join("features.fbin"), &fbin)?;

    let mut labels = String::new();
    for &label in data.labels.labels() {
        labels.push_str(&format!("{label}\n"));
    }
    write_file(&dir.join("labels.csv"), labels.as_bytes())?;

    let mut meta = serde_json::Map::new();
    if let Some(name) = name {
        meta.insert("name".into(), name.into());
    }
    meta.insert("num_classes".into(), data.labels.num_classes().into());
    meta.insert("task".into(), data.task.as_str().into());
    let meta_text = serde_json::to_string_pretty(&serde_json::Value::Object(meta)).unwrap();
    write_file(&dir.join("meta.json"), format!("{meta_text}\n").as_bytes())?;

    let splits = SplitsFile {
        train: data.split.train.clone(),
        val: data.split.val.clone(),
        test: data.split.test.clone(),
    };
    let splits_text = serde_json::to_string_pretty(&splits).unwrap();
    write_file(&dir.join("splits.json"), format!("{splits_text}\n").as_bytes())?;

    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("edges.tsv"),
            "# comment line\n0\t1\n1\t2\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("features.csv"),
            "1.0,2.0\n3.0,4.0\n5.0,6.0\n",
        )
        .unwrap();
        fs::write(dir.path().join("labels.csv"), "0\n1\n0\n").unwrap();
        fs::write(
            dir.path().join("meta.json"),
            "{\"num_classes\": 2, \"task\": \"multiclass\"}\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("splits.json"),
            "{\"train\": [0], \"val\": [1], \"test\": [2]}\n",
        )
        .unwrap();
        dir
    }

    #[test]
    fn loads_toy_directory() {
        let dir = toy_dir();
        let data = load_dataset(dir.path(), 0).unwrap();
        assert_eq!(data.graph.num_nodes(), 3);
        assert_eq!(data.graph.num_edges(), 2);
        assert_eq!(data.features.num_features(), 2);
        assert_eq!(data.labels.labels(), &[0, 1, 0]);
        assert_eq!(data.split.train, vec![0]);
        assert_eq!(data.task, Task::Multiclass);
    }

    #[test]
    fn out_of_range_label_names_the_line() {
        let dir = toy_dir();
        fs::write(dir.path().join("labels.csv"), "0\n2\n0\n").unwrap();
        let err = load_dataset(dir.path(), 0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("labels.csv:2"), "{msg}");
        assert!(msg.contains("out of range"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = toy_dir();
        fs::write(dir.path().join("features.fbin"), b"XXXX\x03\x00\x00\x00\x02\x00\x00\x00").unwrap();
        let err = load_dataset(dir.path(), 0).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn malformed_edge_line_is_located() {
        let dir = toy_dir();
        fs::write(dir.path().join("edges.tsv"), "0\t1\nnope\n").unwrap();
        let err = load_dataset(dir.path(), 0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("edges.tsv:2"), "{msg}");
    }

    #[test]
    fn missing_splits_fall_back_to_seeded_split() {
        let dir = toy_dir();
        fs::write(
            dir.path().join("features.csv"),
            "1,0\n2,0\n3,0\n4,0\n5,0\n6,0\n7,0\n8,0\n",
        )
        .unwrap();
        fs::write(dir.path().join("labels.csv"), "0\n1\n0\n1\n0\n1\n0\n1\n").unwrap();
        fs::write(dir.path().join("edges.tsv"), "0\t1\n2\t3\n4\t5\n6\t7\n").unwrap();
        fs::remove_file(dir.path().join("splits.json")).unwrap();
        let a = load_dataset(dir.path(), 9).unwrap();
        let b = load_dataset(dir.path(), 9).unwrap();
        assert_eq!(a.split, b.split);
        assert_eq!(a.split.train.len(), 4);
        assert_eq!(a.split.val.len(), 2);
        assert_eq!(a.split.test.len(), 2);
    }

    #[test]
    fn fbin_round_trip_is_bit_exact() {
        let dir = toy_dir();
        let data = load_dataset(dir.path(), 0).unwrap();
        let out = tempfile::tempdir().unwrap();
        save_dataset(out.path(), &data, Some("toy")).unwrap();
        let reloaded = load_dataset(out.path(), 0).unwrap();
        assert_eq!(data.graph, reloaded.graph);
        assert_eq!(data.features, reloaded.features);
        assert_eq!(data.labels, reloaded.labels);
        assert_eq!(data.split, reloaded.split);
        assert_eq!(data.task, reloaded.task);
    }

    #[test]
    fn binary_task_demands_two_classes() {
        let dir = toy_dir();
        fs::write(
            dir.path().join("meta.json"),
            "{\"num_classes\": 3, \"task\": \"binary\"}\n",
        )
        .unwrap();
        let err = load_dataset(dir.path(), 0).unwrap_err();
        assert!(err.to_string().contains("binary task"), "{err}");
    }
}
