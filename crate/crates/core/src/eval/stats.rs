use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Outcome of a paired two-sided Student's t-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub n: usize,
    pub mean_diff: f64,
    /// `None` when the differences have zero variance.
    pub t: Option<f64>,
    pub p_value: f64,
}

impl TTest {
    pub fn is_degenerate(&self) -> bool {
        self.t.is_none()
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Paired two-sided t-test over aligned samples. Returns `None` for fewer
/// than two pairs.
///
/// Zero-variance differences give `t = None` with p = 1 when all differences
/// are zero and p = 0 otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Option<TTest> {
    assert_eq!(a.len(), b.len(), "paired samples must align");
    let n = a.len();
    if n < 2 {
        return None;
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean_diff = mean(&diffs)?;
    let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Some(TTest {
            n,
            mean_diff,
            t: None,
            p_value: if mean_diff == 0.0 { 1.0 } else { 0.0 },
        });
    }
    let t = mean_diff / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).ok()?;
    let p_value = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Some(TTest {
        n,
        mean_diff,
        t: Some(t),
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_degenerate() {
        let a = [0.1, 0.5, 0.9];
        let t = paired_t_test(&a, &a).unwrap();
        assert!(t.is_degenerate());
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn known_value() {
        // differences 1, 2, 3, 4: mean 2.5, sd 1.29099, t = 3.873, df = 3
        let a = [2.0, 4.0, 6.0, 8.0];
        let b = [1.0, 2.0, 3.0, 4.0];
        let t = paired_t_test(&a, &b).unwrap();
        assert!((t.t.unwrap() - 3.872983).abs() < 1e-5);
        assert!((t.p_value - 0.030466).abs() < 1e-4);
    }
}
