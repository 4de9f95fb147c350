use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Config;
use crate::error::{Error, Result};

/// A row type with a fixed column order.
pub trait CsvRecord: Serialize {
    const HEADER: &'static [&'static str];
}

/// Writes `records` with the type's header. An empty slice gives a header-only file.
pub fn write_csv<T: CsvRecord>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(T::HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInfo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub sha256: String,
    pub len: usize,
}

/// Everything needed to reproduce an output directory. Contains no clock
/// time so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub config: Config,
    pub seeds: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetInfo>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            artifact: "qlight".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            seeds: BTreeMap::new(),
            dataset: None,
            outputs: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        k: usize,
        v: f64,
    }

    impl CsvRecord for Row {
        const HEADER: &'static [&'static str] = &["k", "v"];
    }

    #[test]
    fn header_only_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_csv::<Row>(&p, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "k,v\n");
        let rows = [Row { k: 0, v: 0.1 }, Row { k: 1, v: 1e-20 }];
        write_csv(&p, &rows).unwrap();
        let first = std::fs::read(&p).unwrap();
        write_csv(&p, &rows).unwrap();
        assert_eq!(first, std::fs::read(&p).unwrap());
        assert_eq!(String::from_utf8(first).unwrap(), "k,v\n0,0.1\n1,1e-20\n");
    }

    #[test]
    fn manifest_round_trips_through_config_parser() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.json");
        let mut cfg = Config::default();
        cfg.qrc.cavity_squeezing = vec![0.0, 1.5];
        cfg.qam.mean_photon = Some(8.0);
        let mut m = RunManifest::new("qrc-sweep", &cfg);
        m.seeds.insert("network".into(), 1);
        write_json(&p, &m).unwrap();
        assert_eq!(Config::from_path(&p).unwrap(), cfg);
        let back: RunManifest = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let r = write_csv::<Row>(Path::new("/nonexistent-dir/x.csv"), &[]);
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
