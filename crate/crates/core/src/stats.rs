//! Descriptive statistics in the (mean, sample standard deviation, median)
//! convention used for the corpus tables.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub count: u64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
    pub std_dev: f64,
    /// Lower median for even counts.
    pub median: u64,
    /// How many observations equal the median.
    pub median_occurrences: u64,
    pub min: u64,
    pub max: u64,
    pub total: u64,
}

impl Summary {
    pub fn of(values: &[u64]) -> Self {
        if values.is_empty() {
            return Summary::default();
        }
        let n = values.len() as f64;
        let total: u64 = values.iter().sum();
        let mean = total as f64 / n;
        let std_dev = if values.len() < 2 {
            0.0
        } else {
            let ss: f64 = values
                .iter()
                .map(|&v| {
                    let d = v as f64 - mean;
                    d * d
                })
                .sum();
            libm::sqrt(ss / (n - 1.0))
        };
        let mut sorted: Vec<u64> = values.to_vec();
        sorted.sort_unstable();
        let median = sorted[(sorted.len() - 1) / 2];
        Summary {
            count: values.len() as u64,
            mean,
            std_dev,
            median,
            median_occurrences: sorted.iter().filter(|&&v| v == median).count() as u64,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            total,
        }
    }
}

/// Rounds half away from zero at `decimals` places. Presentation only.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = libm::pow(10.0, f64::from(decimals));
    let scaled = value * scale;
    let rounded = if scaled >= 0.0 {
        libm::floor(scaled + 0.5)
    } else {
        -libm::floor(-scaled + 0.5)
    };
    rounded / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let s = Summary::of(&[0]);
        assert_eq!((s.mean, s.std_dev, s.median), (0.0, 0.0, 0));
        assert_eq!(s.median_occurrences, 1);
    }

    #[test]
    fn lower_median_for_even_counts() {
        let s = Summary::of(&[4, 1, 3, 2]);
        assert_eq!(s.median, 2);
        assert_eq!((s.min, s.max, s.total), (1, 4, 10));
        assert!((s.mean - 2.5).abs() < 1e-12);
        assert!((s.std_dev - 1.290_994_448_735_805_6).abs() < 1e-12);
    }

    #[test]
    fn empty_is_default() {
        assert_eq!(Summary::of(&[]), Summary::default());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_up(8.166_183_574_879_227, 2), 8.17);
        assert_eq!(round_half_up(0.125, 2), 0.13);
        assert_eq!(round_half_up(-0.125, 2), -0.13);
        assert_eq!(round_half_up(38.897_584_541_062_8, 2), 38.9);
    }
}
