//! Batch-means accumulation for Monte Carlo metrics.

/// Default number of contiguous trial batches behind each standard error.
pub const BATCHES: usize = 10;

/// Batch index of `trial` when `trials` are split into `batches` contiguous runs.
pub fn batch_of(trial: usize, trials: usize, batches: usize) -> usize {
    trial * batches / trials
}

/// Running sums of one metric per batch.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    sums: Vec<f64>,
    counts: Vec<usize>,
    trials: usize,
}

impl BatchMeans {
    pub fn new(trials: usize) -> Self {
        let b = BATCHES.min(trials).max(1);
        Self {
            sums: vec![0.0; b],
            counts: vec![0; b],
            trials,
        }
    }

    pub fn push(&mut self, trial: usize, value: f64) {
        let b = batch_of(trial, self.trials, self.sums.len());
        self.sums[b] += value;
        self.counts[b] += 1;
    }

    pub fn count(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sums.iter().sum::<f64>() / self.count() as f64
    }

    /// Standard deviation of the batch means over `√batches`; `None` with fewer than two batches.
    pub fn std_err(&self) -> Option<f64> {
        let means: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s / c as f64)
            .collect();
        let b = means.len();
        if b < 2 {
            return None;
        }
        let mu = means.iter().sum::<f64>() / b as f64;
        let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (b - 1) as f64;
        Some((var / b as f64).sqrt())
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_cover_all_trials_evenly() {
        let mut counts = [0usize; BATCHES];
        for t in 0..1000 {
            counts[batch_of(t, 1000, BATCHES)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 100));
    }

    #[test]
    fn constant_metric_has_zero_error() {
        let mut b = BatchMeans::new(50);
        (0..50).for_each(|t| b.push(t, 2.5));
        assert_eq!(b.mean(), 2.5);
        assert_eq!(b.std_err(), Some(0.0));
    }

    #[test]
    fn batch_error_tracks_iid_error() {
        // alternating ±1 inside every batch: batch means are exactly zero
        let mut b = BatchMeans::new(100);
        (0..100).for_each(|t| b.push(t, if t % 2 == 0 { 1.0 } else { -1.0 }));
        assert!(b.mean().abs() < 1e-15);
        assert!(b.std_err().unwrap() < 1e-15);
        let mut few = BatchMeans::new(1);
        few.push(0, 3.0);
        assert_eq!(few.std_err(), None);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
