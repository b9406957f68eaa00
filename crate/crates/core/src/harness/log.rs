use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One logged sample of a closed-loop run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    /// Measured output.
    pub y: f64,
    /// True coil current.
    pub i: f64,
    pub u: f64,
    pub u_c: f64,
    pub s: f64,
    pub yv_hat: f64,
    pub x1_hat: f64,
    pub x2_hat: f64,
    pub x3_hat: f64,
    pub r_hat: f64,
    pub theta2_hat: f64,
    #[serde(rename = "Y")]
    pub y_reg: f64,
    pub q_star: f64,
    /// Trailing-window `∫ i² dτ`.
    pub pe: f64,
    pub z: f64,
    pub p_hat_kkl: f64,
    pub p_hat_luenberger: f64,
    /// Division-based flux estimate `y/ŷ_v`.
    pub x1_alg: f64,
}

impl Record {
    pub const FIELDS: [&'static str; 22] = [
        "t",
        "x1",
        "x2",
        "x3",
        "y",
        "i",
        "u",
        "u_c",
        "s",
        "yv_hat",
        "x1_hat",
        "x2_hat",
        "x3_hat",
        "r_hat",
        "theta2_hat",
        "Y",
        "q_star",
        "pe",
        "z",
        "p_hat_kkl",
        "p_hat_luenberger",
        "x1_alg",
    ];

    pub fn values(&self) -> [f64; 22] {
        [
            self.t,
            self.x1,
            self.x2,
            self.x3,
            self.y,
            self.i,
            self.u,
            self.u_c,
            self.s,
            self.yv_hat,
            self.x1_hat,
            self.x2_hat,
            self.x3_hat,
            self.r_hat,
            self.theta2_hat,
            self.y_reg,
            self.q_star,
            self.pe,
            self.z,
            self.p_hat_kkl,
            self.p_hat_luenberger,
            self.x1_alg,
        ]
    }

    pub fn from_values(v: [f64; 22]) -> Self {
        Record {
            t: v[0],
            x1: v[1],
            x2: v[2],
            x3: v[3],
            y: v[4],
            i: v[5],
            u: v[6],
            u_c: v[7],
            s: v[8],
            yv_hat: v[9],
            x1_hat: v[10],
            x2_hat: v[11],
            x3_hat: v[12],
            r_hat: v[13],
            theta2_hat: v[14],
            y_reg: v[15],
            q_star: v[16],
            pe: v[17],
            z: v[18],
            p_hat_kkl: v[19],
            p_hat_luenberger: v[20],
            x1_alg: v[21],
        }
    }

    pub fn field(&self, index: usize) -> Option<f64> {
        self.values().get(index).copied()
    }

    pub fn field_index(name: &str) -> Option<usize> {
        Self::FIELDS.iter().position(|f| *f == name)
    }
}

/// Uniformly sampled closed-loop record.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub records: Vec<Record>,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl TrajectoryLog {
    pub fn with_capacity(n: usize) -> Self {
        TrajectoryLog {
            records: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// Time between consecutive records, if there are at least two.
    pub fn sample_step(&self) -> Option<f64> {
        match self.records.as_slice() {
            [a, b, ..] => Some(b.t - a.t),
            _ => None,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = Record::field_index(name)?;
        Some(self.records.iter().map(|r| r.values()[idx]).collect())
    }

    /// Header row plus one row per record. Floats are written in shortest
    /// round-trip form, so [`TrajectoryLog::read_csv`] restores them bitwise.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(Record::FIELDS)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self, csv::Error> {
        let mut rd = csv::Reader::from_reader(input);
        let records = rd.deserialize().collect::<Result<Vec<Record>, _>>()?;
        Ok(TrajectoryLog { records })
    }

    pub fn export_csv(&self, path: &Path) -> Result<(), ExportError> {
        let file = std::fs::File::create(path).map_err(|source| ExportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|source| ExportError::Csv {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn import_csv(path: &Path) -> Result<Self, ExportError> {
        let file = std::fs::File::open(path).map_err(|source| ExportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(std::io::BufReader::new(file)).map_err(|source| ExportError::Csv {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_log_writes_header_only() {
        let mut buf = Vec::new();
        TrajectoryLog::default().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.trim_end(), Record::FIELDS.join(","));
        assert!(TrajectoryLog::read_csv(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn rows_have_one_column_per_field() {
        let log = TrajectoryLog {
            records: vec![Record::default(); 3],
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for line in text.lines() {
            assert_eq!(line.split(',').count(), Record::FIELDS.len());
        }
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn field_names_match_serde_header() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(Record::default()).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), Record::FIELDS.join(","));
        assert_eq!(Record::field_index("Y"), Some(15));
    }

    #[test]
    fn export_error_names_the_path() {
        let err = TrajectoryLog::default()
            .export_csv(Path::new("/nonexistent-dir/xyz/log.csv"))
            .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/xyz/log.csv"));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bitwise(vals in proptest::collection::vec(proptest::num::f64::ANY, 22)) {
            let r = Record::from_values(vals.clone().try_into().unwrap());
            let log = TrajectoryLog { records: vec![r, Record::default()] };
            let mut buf = Vec::new();
            log.write_csv(&mut buf).unwrap();
            let back = TrajectoryLog::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 2);
            for (x, v) in back.records[0].values().iter().zip(&vals) {
                prop_assert!(x.to_bits() == v.to_bits() || (x.is_nan() && v.is_nan()));
            }
        }
    }
}
