//! Steady-state tracking metrics over a run log.
//!
//! Rows are blanked (excluded) while the tilt servo is moving and for a
//! settling window after every move, plus an initial window so startup
//! transients never count as steady state. The remaining rows split into
//! an untilted and a tilted regime at the saturation dead-zone angle, so
//! a single run through a tilt transition reports both regimes.

use serde::{Deserialize, Serialize};

use crate::log::{rotation_from_euler, LogRow, RunLog};

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Settling window in seconds: rows this close after a servo move
    /// (or after t = 0) are excluded from steady-state statistics.
    pub blanking: f64,
    /// Tilt angle in degrees separating the untilted and tilted regimes.
    pub dead_zone_deg: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            blanking: 2.0,
            dead_zone_deg: 2.0,
        }
    }
}

/// Statistics over the steady-state rows of one tilt regime.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
pub struct RegimeMetrics {
    pub samples: usize,
    pub mean_position_error: f64,
    pub max_position_error: f64,
    pub mean_attitude_error_deg: f64,
    pub max_attitude_error_deg: f64,
    pub mean_roll_error_deg: f64,
    pub mean_pitch_error_deg: f64,
    pub mean_yaw_error_deg: f64,
    pub max_abs_desired_roll_deg: f64,
    pub max_abs_desired_pitch_deg: f64,
    pub lateral_saturated_fraction: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Metrics {
    pub duration: f64,
    /// Rows excluded by the blanking rule.
    pub blanked: usize,
    pub untilted: Option<RegimeMetrics>,
    pub tilted: Option<RegimeMetrics>,
    pub overall: Option<RegimeMetrics>,
    /// Rows (blanked or not) where at least one thrust clamped.
    pub clamp_steps: usize,
    /// Rows (blanked or not) where the lateral force demand saturated.
    pub lateral_saturated_steps: usize,
    pub max_tilt_divergence: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a < -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

fn position_error(row: &LogRow) -> f64 {
    let d = [
        row.position[0] - row.reference_position[0],
        row.position[1] - row.reference_position[1],
        row.position[2] - row.reference_position[2],
    ];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Geodesic angle between the actual and reference attitudes.
fn attitude_error(row: &LogRow) -> f64 {
    let actual = rotation_from_euler(&row.attitude_rpy);
    let reference = rotation_from_euler(&row.reference_rpy);
    let relative = reference.transpose() * actual;
    let c = ((relative.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos()
}

fn regime_metrics(rows: &[&LogRow]) -> Option<RegimeMetrics> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mut sum_pos = 0.0;
    let mut max_pos: f64 = 0.0;
    let mut sum_att = 0.0;
    let mut max_att: f64 = 0.0;
    let mut sum_axis = [0.0; 3];
    let mut max_des_roll: f64 = 0.0;
    let mut max_des_pitch: f64 = 0.0;
    let mut saturated = 0usize;
    for row in rows {
        let ep = position_error(row);
        sum_pos += ep;
        max_pos = max_pos.max(ep);
        let ea = attitude_error(row);
        sum_att += ea;
        max_att = max_att.max(ea);
        for (axis, sum) in sum_axis.iter_mut().enumerate() {
            *sum += wrap_angle(row.attitude_rpy[axis] - row.reference_rpy[axis]).abs();
        }
        max_des_roll = max_des_roll.max(row.desired_rpy[0].abs());
        max_des_pitch = max_des_pitch.max(row.desired_rpy[1].abs());
        if row.lateral_saturated {
            saturated += 1;
        }
    }
    Some(RegimeMetrics {
        samples: rows.len(),
        mean_position_error: sum_pos / n,
        max_position_error: max_pos,
        mean_attitude_error_deg: (sum_att / n).to_degrees(),
        max_attitude_error_deg: max_att.to_degrees(),
        mean_roll_error_deg: (sum_axis[0] / n).to_degrees(),
        mean_pitch_error_deg: (sum_axis[1] / n).to_degrees(),
        mean_yaw_error_deg: (sum_axis[2] / n).to_degrees(),
        max_abs_desired_roll_deg: max_des_roll.to_degrees(),
        max_abs_desired_pitch_deg: max_des_pitch.to_degrees(),
        lateral_saturated_fraction: saturated as f64 / n,
    })
}

/// Rows that count as steady state: past the initial window and at least
/// `blanking` seconds after the last servo motion.
pub fn steady_mask(log: &RunLog, cfg: &MetricsConfig) -> Vec<bool> {
    let mut mask = vec![false; log.rows.len()];
    let mut blank_until = cfg.blanking;
    let mut prev_tilt = log.rows.first().map(|r| r.tilt_actual).unwrap_or(0.0);
    for (k, row) in log.rows.iter().enumerate() {
        if k > 0 && (row.tilt_actual - prev_tilt).abs() > 1e-12 {
            blank_until = row.t + cfg.blanking;
        }
        prev_tilt = row.tilt_actual;
        mask[k] = row.t >= blank_until;
    }
    mask
}

pub fn compute_metrics(log: &RunLog, cfg: &MetricsConfig) -> Metrics {
    let mask = steady_mask(log, cfg);
    let dead_zone = cfg.dead_zone_deg.to_radians();
    let steady: Vec<&LogRow> = log
        .rows
        .iter()
        .zip(&mask)
        .filter_map(|(row, &keep)| keep.then_some(row))
        .collect();
    let untilted: Vec<&LogRow> = steady
        .iter()
        .copied()
        .filter(|r| r.tilt_actual < dead_zone)
        .collect();
    let tilted: Vec<&LogRow> = steady
        .iter()
        .copied()
        .filter(|r| r.tilt_actual >= dead_zone)
        .collect();
    Metrics {
        duration: log.duration(),
        blanked: log.rows.len() - steady.len(),
        untilted: regime_metrics(&untilted),
        tilted: regime_metrics(&tilted),
        overall: regime_metrics(&steady),
        clamp_steps: log.rows.iter().filter(|r| r.clamped_count > 0).count(),
        lateral_saturated_steps: log.rows.iter().filter(|r| r.lateral_saturated).count(),
        max_tilt_divergence: log.rows.iter().map(|r| r.tilt_spread).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(t: f64, tilt: f64) -> LogRow {
        LogRow {
            t,
            position: [0.001, 0.0, 1.0],
            velocity: [0.0; 3],
            attitude_rpy: [0.0; 3],
            angular_velocity: [0.0; 3],
            reference_position: [0.0, 0.0, 1.0],
            reference_rpy: [0.0; 3],
            desired_rpy: [0.0; 3],
            tilt_command: tilt,
            tilt_actual: tilt,
            tilt_spread: 0.0,
            thrusts: [5.0685; 6],
            spins: [71.5; 6],
            clamped_count: 0,
            lateral_saturated: false,
            lateral_bound: 0.0,
            tilt_back_angle: 0.0,
        }
    }

    /// 10 s log at 10 Hz: level until 4 s, servo ramps 4..5 s, tilted after.
    fn transition_log() -> RunLog {
        let rows = (0..100)
            .map(|k| {
                let t = k as f64 * 0.1;
                let tilt = ((t - 4.0).clamp(0.0, 1.0)) * 0.5;
                row(t, tilt)
            })
            .collect();
        RunLog { rows }
    }

    #[test]
    fn blanking_covers_startup_and_servo_motion() {
        let log = transition_log();
        let cfg = MetricsConfig {
            blanking: 2.0,
            dead_zone_deg: 2.0,
        };
        let mask = steady_mask(&log, &cfg);
        let steady_times: Vec<f64> = log
            .rows
            .iter()
            .zip(&mask)
            .filter_map(|(r, &m)| m.then_some(r.t))
            .collect();
        // Initial window ends at 2 s; the move spans (4, 5] and blanks until 7 s.
        assert!(steady_times.iter().any(|&t| (t - 2.0).abs() < 1e-9));
        assert!(steady_times.iter().all(|&t| t >= 2.0));
        assert!(!steady_times.iter().any(|&t| t > 4.05 && t < 7.0 - 1e-9));
        assert!(steady_times.iter().any(|&t| (t - 7.0).abs() < 1e-9));
    }

    #[test]
    fn regimes_split_at_the_dead_zone() {
        let log = transition_log();
        let metrics = compute_metrics(&log, &MetricsConfig::default());
        let untilted = metrics.untilted.unwrap();
        let tilted = metrics.tilted.unwrap();
        // Steady level rows are t in [2, 4]; steady tilted rows are t >= 7.
        assert_eq!(untilted.samples, 21);
        assert_eq!(tilted.samples, 30);
        assert_eq!(
            metrics.blanked,
            log.rows.len() - untilted.samples - tilted.samples
        );
        assert_relative_eq!(untilted.mean_position_error, 0.001, epsilon = 1e-12);
        assert_relative_eq!(tilted.max_position_error, 0.001, epsilon = 1e-12);
    }

    #[test]
    fn attitude_and_roll_errors_wrap_and_convert_to_degrees() {
        let mut r = row(10.0, 0.0);
        r.attitude_rpy = [179.0_f64.to_radians(), 0.0, 0.0];
        r.reference_rpy = [-179.0_f64.to_radians(), 0.0, 0.0];
        let log = RunLog { rows: vec![r] };
        let cfg = MetricsConfig {
            blanking: 0.0,
            dead_zone_deg: 2.0,
        };
        let m = compute_metrics(&log, &cfg).overall.unwrap();
        assert_relative_eq!(m.mean_roll_error_deg, 2.0, epsilon = 1e-9);
        assert_relative_eq!(m.mean_attitude_error_deg, 2.0, epsilon = 1e-9);
        assert_relative_eq!(m.mean_pitch_error_deg, 0.0, epsilon = 1e-9);
        assert_relative_eq!(m.mean_yaw_error_deg, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn desired_angle_amplitudes_and_saturation_fraction_are_reported() {
        let mut rows = Vec::new();
        for k in 0..10 {
            let mut r = row(5.0 + k as f64, 0.0);
            r.desired_rpy = [0.01 * k as f64, -0.02 * k as f64, 0.0];
            r.lateral_saturated = k % 2 == 0;
            rows.push(r);
        }
        let log = RunLog { rows };
        let cfg = MetricsConfig {
            blanking: 0.0,
            dead_zone_deg: 2.0,
        };
        let metrics = compute_metrics(&log, &cfg);
        let m = metrics.overall.unwrap();
        assert_relative_eq!(
            m.max_abs_desired_roll_deg,
            (0.09_f64).to_degrees(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            m.max_abs_desired_pitch_deg,
            (0.18_f64).to_degrees(),
            epsilon = 1e-12
        );
        assert_relative_eq!(m.lateral_saturated_fraction, 0.5, epsilon = 1e-12);
        assert_eq!(metrics.lateral_saturated_steps, 5);
    }

    #[test]
    fn empty_regimes_are_none() {
        let log = RunLog {
            rows: (0..30).map(|k| row(k as f64, 0.0)).collect(),
        };
        let metrics = compute_metrics(&log, &MetricsConfig::default());
        assert!(metrics.untilted.is_some());
        assert!(metrics.tilted.is_none());
    }
}
