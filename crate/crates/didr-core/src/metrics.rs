//! Trajectory summary metrics: global peak, local-maxima count, and
//! sustained-peak duration.
//!
//! Local maxima are detected by a hysteresis scan with a prominence floor
//! (a fraction of the global maximum), which suppresses integrator ripple;
//! maxima at the first or last sample are excluded by convention. The
//! sustain duration is the total time the series spends at or above a
//! fraction of its peak.

use crate::dde::{Compartment, Trajectory};

/// Detection thresholds. Defaults: 0.5% prominence floor, 95% sustain
/// threshold.
#[derive(Debug, Clone, Copy)]
pub struct PeakDetection {
    /// A local maximum counts only if the series drops by at least this
    /// fraction of the global maximum on both sides.
    pub prominence_fraction: f64,
    /// Sustain duration accumulates time with value >= this fraction of the
    /// global maximum.
    pub sustain_fraction: f64,
}

impl Default for PeakDetection {
    fn default() -> Self {
        Self {
            prominence_fraction: 0.005,
            sustain_fraction: 0.95,
        }
    }
}

/// Peak and oscillation summary of one component of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMetrics {
    pub peak_value: f64,
    pub peak_time: f64,
    pub local_maxima_count: usize,
    pub sustain_duration: f64,
}

/// Metrics for one compartment of an integrated trajectory.
pub fn detect_peaks(
    traj: &Trajectory,
    component: Compartment,
    cfg: &PeakDetection,
) -> TrajectoryMetrics {
    let values: Vec<f64> = traj
        .states()
        .iter()
        .map(|s| s.component(component))
        .collect();
    detect_peaks_series(traj.times(), &values, cfg)
}

/// Metrics for an explicit (times, values) series. Panics if the series is
/// empty or the lengths differ.
pub fn detect_peaks_series(
    times: &[f64],
    values: &[f64],
    cfg: &PeakDetection,
) -> TrajectoryMetrics {
    assert!(!values.is_empty(), "series must be nonempty");
    assert_eq!(times.len(), values.len());

    let mut peak_value = values[0];
    let mut peak_idx = 0usize;
    for (k, &v) in values.iter().enumerate() {
        if v > peak_value {
            peak_value = v;
            peak_idx = k;
        }
    }

    let delta = cfg.prominence_fraction * peak_value;
    let last = values.len() - 1;

    // Hysteresis scan: commit a candidate maximum once the series has
    // fallen `delta` below it, then wait for a `delta` rise before tracking
    // the next candidate. Endpoint extrema never commit.
    let mut count = 0usize;
    let mut rising = true;
    let mut cand_value = values[0];
    let mut cand_idx = 0usize;
    let mut valley = values[0];
    for (k, &v) in values.iter().enumerate().skip(1) {
        if rising {
            if v > cand_value {
                cand_value = v;
                cand_idx = k;
            } else if v < cand_value - delta {
                if cand_idx != 0 && cand_idx != last {
                    count += 1;
                }
                rising = false;
                valley = v;
            }
        } else if v < valley {
            valley = v;
        } else if v > valley + delta {
            rising = true;
            cand_value = v;
            cand_idx = k;
        }
    }

    let threshold = cfg.sustain_fraction * peak_value;
    let mut sustain = 0.0;
    for k in 0..last {
        if values[k] >= threshold && values[k + 1] >= threshold {
            sustain += times[k + 1] - times[k];
        }
    }

    TrajectoryMetrics {
        peak_value,
        peak_time: times[peak_idx],
        local_maxima_count: count,
        sustain_duration: sustain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_times(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn monotone_series_has_no_local_maxima() {
        let t = uniform_times(100, 0.1);
        let y: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let m = detect_peaks_series(&t, &y, &PeakDetection::default());
        assert_eq!(m.local_maxima_count, 0);
        assert_eq!(m.peak_value, 99.0);
        assert!((m.peak_time - 9.9).abs() < 1e-12);
    }

    #[test]
    fn constant_series_sustains_for_the_full_span() {
        let t = uniform_times(50, 0.2);
        let y = vec![3.0; 50];
        let m = detect_peaks_series(&t, &y, &PeakDetection::default());
        assert_eq!(m.local_maxima_count, 0);
        assert!((m.sustain_duration - 49.0 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn damped_oscillation_counts_prominent_humps() {
        // four prominent humps of a damped rectified sinusoid
        let n = 4000;
        let t = uniform_times(n, 0.01);
        let y: Vec<f64> = t
            .iter()
            .map(|&t| (-0.05 * t).exp() * (std::f64::consts::PI * t / 10.0).sin().abs())
            .collect();
        let m = detect_peaks_series(&t, &y, &PeakDetection::default());
        assert_eq!(m.local_maxima_count, 4);
    }

    #[test]
    fn ripple_below_prominence_floor_is_ignored() {
        // one big hump with sub-floor wiggles on the shoulder
        let n = 2000;
        let t = uniform_times(n, 0.01);
        let y: Vec<f64> = t
            .iter()
            .map(|&t| {
                let hump = (-(t - 10.0) * (t - 10.0) / 8.0).exp();
                hump + 1e-4 * (40.0 * t).sin()
            })
            .collect();
        let m = detect_peaks_series(&t, &y, &PeakDetection::default());
        assert_eq!(m.local_maxima_count, 1);
    }

    #[test]
    fn endpoint_maxima_are_excluded() {
        // series that starts at its largest value and decays, with one
        // interior hump
        let n = 1000;
        let t = uniform_times(n, 0.01);
        let y: Vec<f64> = t
            .iter()
            .map(|&t| (-t).exp() + 0.5 * (-(t - 5.0) * (t - 5.0)).exp())
            .collect();
        let m = detect_peaks_series(&t, &y, &PeakDetection::default());
        assert_eq!(m.local_maxima_count, 1);
        assert_eq!(m.peak_time, 0.0); // global peak may still sit at the edge
    }
}
