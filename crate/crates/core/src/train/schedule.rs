use super::{ScheduleConfig, TrainError};

/// Position learning rate at `iter`: log-linear from `init` to `fin`.
pub fn lr_schedule(iter: usize, total: usize, init: f64, fin: f64) -> Result<f64, TrainError> {
    if iter > total {
        return Err(TrainError::IterationOutOfRange { iter, total });
    }
    if total == 0 {
        return Ok(init);
    }
    let t = iter as f64 / total as f64;
    Ok((init.ln() * (1.0 - t) + fin.ln() * t).exp())
}

/// Periodic events due once `iter` optimizer steps have completed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScheduledEvents {
    pub densify: bool,
    pub opacity_reset: bool,
}

impl ScheduleConfig {
    /// Density control runs before an opacity reset that falls on the same
    /// iteration.
    pub fn events_at(&self, iter: usize) -> ScheduledEvents {
        if iter == 0 || iter >= self.density_control_end {
            return ScheduledEvents::default();
        }
        ScheduledEvents {
            densify: iter % self.densify_interval == 0,
            opacity_reset: iter >= self.opacity_reset_start && iter % self.opacity_reset_interval == 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_rate_endpoints_and_midpoint() {
        assert!((lr_schedule(0, 50_000, 8e-3, 1e-5).unwrap() - 8e-3).abs() < 1e-15);
        assert!((lr_schedule(50_000, 50_000, 8e-3, 1e-5).unwrap() - 1e-5).abs() < 1e-17);
        let mid = lr_schedule(25_000, 50_000, 8e-3, 1e-5).unwrap();
        assert!((mid - (8e-3f64 * 1e-5).sqrt()).abs() < 1e-12);
        assert!((mid - 2.83e-4).abs() < 1e-6);
        assert!(matches!(lr_schedule(50_001, 50_000, 8e-3, 1e-5), Err(TrainError::IterationOutOfRange { .. })));
    }

    #[test]
    fn position_rate_is_monotone() {
        let mut prev = f64::INFINITY;
        for i in (0..=50_000).step_by(250) {
            let lr = lr_schedule(i, 50_000, 8e-3, 1e-5).unwrap();
            assert!(lr < prev);
            prev = lr;
        }
    }

    #[test]
    fn default_event_iterations() {
        let s = ScheduleConfig::default();
        let densify: Vec<usize> = (0..=50_000).filter(|&i| s.events_at(i).densify).collect();
        assert_eq!(densify, (1..70).map(|k| k * 500).collect::<Vec<_>>());
        let resets: Vec<usize> = (0..=50_000).filter(|&i| s.events_at(i).opacity_reset).collect();
        assert_eq!(resets, vec![10_000, 15_000, 20_000, 25_000, 30_000]);
    }
}
