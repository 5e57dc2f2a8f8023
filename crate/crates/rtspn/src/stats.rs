//! Small statistics helpers: i.i.d. sample summaries and batch means.

/// Mean and standard error of i.i.d. samples accumulated as running sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct SampleStats {
    pub count: u64,
    sum: f64,
    sum_sq: f64,
}

impl SampleStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum / self.count as f64
    }

    /// Standard error of the mean, `sd / sqrt(n)`. Zero for n < 2.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Batch-means estimator for serially correlated per-frame series.
///
/// The run is divided into `batches` consecutive batches of equal size;
/// frames past the last full batch contribute to the overall mean but not
/// to the variance estimate. The standard error is the sample standard
/// deviation of the batch means divided by `sqrt(batches)`.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    batch_size: u64,
    in_batch: u64,
    batch_sum: f64,
    means: Vec<f64>,
    total: f64,
    count: u64,
}

impl BatchMeans {
    pub fn new(total_expected: u64, batches: u64) -> Self {
        let batch_size = (total_expected / batches).max(1);
        Self {
            batch_size,
            in_batch: 0,
            batch_sum: 0.0,
            means: Vec::new(),
            total: 0.0,
            count: 0,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.total += x;
        self.count += 1;
        self.batch_sum += x;
        self.in_batch += 1;
        if self.in_batch == self.batch_size {
            self.means.push(self.batch_sum / self.batch_size as f64);
            self.batch_sum = 0.0;
            self.in_batch = 0;
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.total / self.count as f64
    }

    /// Standard error from the batch means; zero when fewer than two full
    /// batches exist.
    pub fn std_error(&self) -> f64 {
        batch_std_error(&self.means)
    }

    pub fn batch_means(&self) -> &[f64] {
        &self.means
    }

    pub fn into_parts(self) -> (f64, f64, Vec<f64>) {
        let mean = self.mean();
        let se = self.std_error();
        (mean, se, self.means)
    }
}

/// Standard error of a mean estimated from a series of batch means.
pub fn batch_std_error(means: &[f64]) -> f64 {
    let b = means.len();
    if b < 2 {
        return 0.0;
    }
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b as f64 - 1.0);
    (var / b as f64).sqrt()
}

/// Mean and standard error across independent replications.
pub fn replication_summary(values: &[f64]) -> (f64, f64) {
    let mut s = SampleStats::default();
    for &v in values {
        s.push(v);
    }
    (s.mean(), s.std_error())
}
