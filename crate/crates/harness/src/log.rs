//! Fixed-schema run log. One row per control step, written as CSV
//! with shortest-round-trip float formatting so logs are bit-stable
//! across writes and parse back to the exact values.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Rotation3;
use thiserror::Error;
use tilthex_core::Mat3;

/// Intrinsic z-y-x Euler angles (roll, pitch, yaw) of a rotation.
pub fn euler_zyx(m: &Mat3) -> [f64; 3] {
    let (roll, pitch, yaw) = Rotation3::from_matrix_unchecked(*m).euler_angles();
    [roll, pitch, yaw]
}

/// Rotation matrix from `[roll, pitch, yaw]` (inverse of [`euler_zyx`]).
pub fn rotation_from_euler(rpy: &[f64; 3]) -> Mat3 {
    *Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]).matrix()
}

pub const CSV_COLUMNS: [&str; 41] = [
    "t",
    "px",
    "py",
    "pz",
    "vx",
    "vy",
    "vz",
    "roll",
    "pitch",
    "yaw",
    "wx",
    "wy",
    "wz",
    "ref_px",
    "ref_py",
    "ref_pz",
    "ref_roll",
    "ref_pitch",
    "ref_yaw",
    "des_roll",
    "des_pitch",
    "des_yaw",
    "tilt_cmd",
    "tilt_actual",
    "tilt_spread",
    "f1",
    "f2",
    "f3",
    "f4",
    "f5",
    "f6",
    "w1",
    "w2",
    "w3",
    "w4",
    "w5",
    "w6",
    "clamped_count",
    "lateral_saturated",
    "lateral_bound",
    "tilt_back",
];

/// One control step. Angles are radians; `tilt_spread` is the largest
/// gap between any rotor's tilt magnitude and the servo angle.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub attitude_rpy: [f64; 3],
    pub angular_velocity: [f64; 3],
    pub reference_position: [f64; 3],
    pub reference_rpy: [f64; 3],
    pub desired_rpy: [f64; 3],
    pub tilt_command: f64,
    pub tilt_actual: f64,
    pub tilt_spread: f64,
    pub thrusts: [f64; 6],
    pub spins: [f64; 6],
    pub clamped_count: u32,
    pub lateral_saturated: bool,
    pub lateral_bound: f64,
    pub tilt_back_angle: f64,
}

impl LogRow {
    fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(CSV_COLUMNS.len());
        v.push(self.t);
        v.extend_from_slice(&self.position);
        v.extend_from_slice(&self.velocity);
        v.extend_from_slice(&self.attitude_rpy);
        v.extend_from_slice(&self.angular_velocity);
        v.extend_from_slice(&self.reference_position);
        v.extend_from_slice(&self.reference_rpy);
        v.extend_from_slice(&self.desired_rpy);
        v.push(self.tilt_command);
        v.push(self.tilt_actual);
        v.push(self.tilt_spread);
        v.extend_from_slice(&self.thrusts);
        v.extend_from_slice(&self.spins);
        v.push(self.clamped_count as f64);
        v.push(if self.lateral_saturated { 1.0 } else { 0.0 });
        v.push(self.lateral_bound);
        v.push(self.tilt_back_angle);
        v
    }

    fn from_values(v: &[f64]) -> Self {
        let take3 = |i: usize| [v[i], v[i + 1], v[i + 2]];
        let take6 = |i: usize| [v[i], v[i + 1], v[i + 2], v[i + 3], v[i + 4], v[i + 5]];
        Self {
            t: v[0],
            position: take3(1),
            velocity: take3(4),
            attitude_rpy: take3(7),
            angular_velocity: take3(10),
            reference_position: take3(13),
            reference_rpy: take3(16),
            desired_rpy: take3(19),
            tilt_command: v[22],
            tilt_actual: v[23],
            tilt_spread: v[24],
            thrusts: take6(25),
            spins: take6(31),
            clamped_count: v[37] as u32,
            lateral_saturated: v[38] != 0.0,
            lateral_bound: v[39],
            tilt_back_angle: v[40],
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected {expected} columns, got {got}")]
    ColumnCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: bad number {text:?}")]
    BadNumber { line: usize, text: String },
    #[error("header does not match the log schema")]
    BadHeader,
}

/// Complete run log with the fixed column schema.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
}

impl RunLog {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (i, v) in row.values().iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_csv(&mut out)?;
        out.flush()
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, LogError> {
        let mut rows = Vec::new();
        let mut lines = input.lines();
        let header = lines.next().ok_or(LogError::BadHeader)??;
        if header.trim() != CSV_COLUMNS.join(",") {
            return Err(LogError::BadHeader);
        }
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut values = Vec::with_capacity(CSV_COLUMNS.len());
            for field in line.split(',') {
                values.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| LogError::BadNumber {
                            line: idx + 2,
                            text: field.to_string(),
                        })?,
                );
            }
            if values.len() != CSV_COLUMNS.len() {
                return Err(LogError::ColumnCount {
                    line: idx + 2,
                    expected: CSV_COLUMNS.len(),
                    got: values.len(),
                });
            }
            rows.push(LogRow::from_values(&values));
        }
        Ok(Self { rows })
    }

    pub fn read_csv_file<P: AsRef<Path>>(path: P) -> Result<Self, LogError> {
        Self::read_csv(BufReader::new(File::open(path)?))
    }

    /// Same schema as the CSV, as `{"columns": [...], "rows": [[...]]}`.
    pub fn write_json<W: Write>(&self, out: W) -> io::Result<()> {
        #[derive(serde::Serialize)]
        struct JsonLog<'a> {
            columns: &'a [&'a str],
            rows: Vec<Vec<f64>>,
        }
        let doc = JsonLog {
            columns: &CSV_COLUMNS,
            rows: self.rows.iter().map(|r| r.values()).collect(),
        };
        serde_json::to_writer(out, &doc).map_err(io::Error::other)
    }

    pub fn duration(&self) -> f64 {
        self.rows.last().map(|r| r.t).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use tilthex_core::geometry::{rot_x, rot_z};

    fn sample_row(t: f64) -> LogRow {
        LogRow {
            t,
            position: [0.1, -0.2, 1.0 + t],
            velocity: [0.0, 0.3, -0.1],
            attitude_rpy: [0.01, -0.02, 0.5],
            angular_velocity: [0.001, 0.002, -0.003],
            reference_position: [0.0, 0.0, 1.0],
            reference_rpy: [0.0, 0.0, 0.5],
            desired_rpy: [0.009, -0.019, 0.5],
            tilt_command: 0.5235987755982988,
            tilt_actual: 0.51,
            tilt_spread: 0.01,
            thrusts: [5.0, 5.1, 5.2, 5.3, 5.4, 5.5],
            spins: [71.0, 71.7, 72.4, 73.1, 73.8, 74.5],
            clamped_count: 2,
            lateral_saturated: true,
            lateral_bound: 5.97,
            tilt_back_angle: 0.0123,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let log = RunLog {
            rows: (0..50).map(|k| sample_row(k as f64 * 0.002)).collect(),
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = RunLog::read_csv(buf.as_slice()).unwrap();
        assert_eq!(log, back);
    }

    #[test]
    fn csv_output_is_byte_stable() {
        let log = RunLog {
            rows: (0..10).map(|k| sample_row(k as f64 * 0.1)).collect(),
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        log.write_csv(&mut a).unwrap();
        log.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn header_and_width_are_validated() {
        let text = "t,px\n0.0,1.0\n";
        assert!(matches!(
            RunLog::read_csv(text.as_bytes()),
            Err(LogError::BadHeader)
        ));

        let mut good = Vec::new();
        RunLog {
            rows: vec![sample_row(0.0)],
        }
        .write_csv(&mut good)
        .unwrap();
        let mut text = String::from_utf8(good).unwrap();
        text.push_str("1.0,2.0\n");
        assert!(matches!(
            RunLog::read_csv(text.as_bytes()),
            Err(LogError::ColumnCount { .. })
        ));
    }

    #[test]
    fn euler_round_trip_matches_the_rotation() {
        let m = rot_z(0.7) * rot_x(0.2);
        let rpy = euler_zyx(&m);
        let back = rotation_from_euler(&rpy);
        assert_relative_eq!(m, back, epsilon = 1e-12);
        // Pure rotations decompose to the expected single angles.
        assert_relative_eq!(euler_zyx(&rot_x(0.25))[0], 0.25, epsilon = 1e-12);
        assert_relative_eq!(euler_zyx(&rot_z(-0.4))[2], -0.4, epsilon = 1e-12);
    }
}
