//! Datasets, configuration and result files.

mod config;
mod output;
mod series;
mod synthetic;

pub use config::{
    BasinSection, Config, ConfigKey, DataSection, QamSection, QrcSection, SuccessSection, TrajectorySection,
    WignerSection, BASIN_KEYS, DATA_KEYS, QAM_KEYS, QRC_KEYS, SUCCESS_KEYS, TRAJECTORY_KEYS, WIGNER_KEYS,
};
pub use output::{write_csv, write_json, CsvRecord, DatasetInfo, RunManifest};
pub use series::{load_series, normalize_minmax01, ColumnSelector, Normalization, SeriesFormat, Split, TimeSeries};
pub use synthetic::{lorenz_intensity, SAMPLE_INTERVAL};
