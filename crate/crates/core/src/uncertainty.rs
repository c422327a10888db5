//! Uncertainty metrics over repeated prediction samples, and expected
//! calibration error. Entropies and mutual information are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{PtmError, Result};
use crate::model::{argmax, PredictionSamples};

/// Elementwise mean of the sampled probability vectors.
pub fn predictive_mean(samples: &PredictionSamples) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(PtmError::input("prediction samples are empty"));
    }
    let k = samples.len() as f64;
    let mut mean = vec![0.0; samples.classes()];
    for p in &samples.probs {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k);
    Ok(mean)
}

/// `-Σ p log2 p`, with `0 log 0 = 0`.
pub fn predictive_entropy(p: &[f64]) -> f64 {
    let h: f64 = p
        .iter()
        .filter(|x| **x > 0.0)
        .map(|x| -x * x.log2())
        .sum();
    h.max(0.0)
}

/// Entropy of the mean minus the mean per-sample entropy, floored at 0.
pub fn mutual_information(samples: &PredictionSamples) -> Result<f64> {
    let mean = predictive_mean(samples)?;
    let expected: f64 =
        samples.probs.iter().map(|p| predictive_entropy(p)).sum::<f64>() / samples.len() as f64;
    Ok((predictive_entropy(&mean) - expected).max(0.0))
}

/// Population standard deviation of each class probability across samples.
pub fn std_dev(samples: &PredictionSamples) -> Result<Vec<f64>> {
    let mean = predictive_mean(samples)?;
    let k = samples.len() as f64;
    let mut var = vec![0.0; mean.len()];
    for p in &samples.probs {
        for ((v, x), m) in var.iter_mut().zip(p).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    // Constant columns get an exact zero rather than rounding residue.
    let first = &samples.probs[0];
    Ok(var
        .iter()
        .enumerate()
        .map(|(c, v)| {
            if samples.probs.iter().all(|p| p[c] == first[c]) {
                0.0
            } else {
                (v / k).sqrt()
            }
        })
        .collect())
}

/// All per-input metrics for one set of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub mean_probs: Vec<f64>,
    pub entropy_bits: f64,
    pub mutual_information_bits: f64,
    pub std_per_class: Vec<f64>,
    pub samples: usize,
}

impl UncertaintyReport {
    pub fn from_samples(samples: &PredictionSamples) -> Result<Self> {
        let mean_probs = predictive_mean(samples)?;
        Ok(Self {
            entropy_bits: predictive_entropy(&mean_probs),
            mutual_information_bits: mutual_information(samples)?,
            std_per_class: std_dev(samples)?,
            samples: samples.len(),
            mean_probs,
        })
    }

    /// Argmax of the predictive mean.
    pub fn predicted_class(&self) -> usize {
        argmax(&self.mean_probs)
    }

    /// Probability of the predicted class.
    pub fn confidence(&self) -> f64 {
        self.mean_probs[self.predicted_class()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    /// Upper edge of the bin (inclusive).
    pub upper: f64,
    pub count: usize,
    /// Fraction correct; 0 for an empty bin.
    pub accuracy: f64,
    /// Mean confidence; 0 for an empty bin.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
    pub ece: f64,
}

impl CalibrationReport {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Bin of a confidence value among `m` equal-width bins over `[0, 1]`:
/// bin `i` (0-based) covers `(i/m, (i+1)/m]`, and 0 falls in the first bin.
pub fn bin_index(confidence: f64, m: usize) -> usize {
    let mut b = ((confidence * m as f64).ceil() as usize).clamp(1, m);
    // products like 0.7 * 10 round up past the edge
    if b > 1 && confidence <= (b - 1) as f64 / m as f64 {
        b -= 1;
    }
    b - 1
}

/// Expected calibration error with `m` equal-width bins.
pub fn ece(confidences: &[f64], correct: &[bool], m: usize) -> Result<CalibrationReport> {
    if m == 0 {
        return Err(PtmError::param("bin count M must be >= 1"));
    }
    if confidences.is_empty() {
        return Err(PtmError::param("no examples to calibrate"));
    }
    if confidences.len() != correct.len() {
        return Err(PtmError::input(format!(
            "{} confidences but {} correctness flags",
            confidences.len(),
            correct.len()
        )));
    }
    if let Some(c) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(PtmError::input(format!("confidence {c} outside [0, 1]")));
    }
    let mut counts = vec![0usize; m];
    let mut hits = vec![0usize; m];
    let mut conf_sum = vec![0.0; m];
    for (c, ok) in confidences.iter().zip(correct) {
        let b = bin_index(*c, m);
        counts[b] += 1;
        hits[b] += usize::from(*ok);
        conf_sum[b] += c;
    }
    let d = confidences.len() as f64;
    let bins: Vec<CalibrationBin> = (0..m)
        .map(|b| {
            let (accuracy, confidence) = if counts[b] == 0 {
                (0.0, 0.0)
            } else {
                (hits[b] as f64 / counts[b] as f64, conf_sum[b] / counts[b] as f64)
            };
            CalibrationBin {
                upper: (b + 1) as f64 / m as f64,
                count: counts[b],
                accuracy,
                confidence,
            }
        })
        .collect();
    let ece = bins
        .iter()
        .map(|b| b.count as f64 / d * (b.accuracy - b.confidence).abs())
        .sum();
    Ok(CalibrationReport { bins, ece })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn samples(probs: Vec<Vec<f64>>) -> PredictionSamples {
        PredictionSamples::from_probs(probs).unwrap()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(predictive_mean(&samples(vec![vec![1.0, 0.0], vec![0.0, 1.0]])).unwrap(), vec![0.5, 0.5]);
        let same = samples(vec![vec![0.2, 0.8]; 5]);
        let m = predictive_mean(&same).unwrap();
        assert!((m[0] - 0.2).abs() < 1e-15 && (m[1] - 0.8).abs() < 1e-15);
        let mut v = vec![vec![0.9, 0.1]; 3];
        v.push(vec![0.1, 0.9]);
        let m = predictive_mean(&samples(v)).unwrap();
        assert!((m[0] - 0.7).abs() < 1e-12 && (m[1] - 0.3).abs() < 1e-12);
        assert!(PredictionSamples::from_probs(vec![]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(predictive_entropy(&[0.5, 0.5]), 1.0);
        assert_eq!(predictive_entropy(&[1.0, 0.0]), 0.0);
        // -(0.25 log2 0.25 + 0.75 log2 0.75) = 0.5 + 0.311278...
        assert!((predictive_entropy(&[0.25, 0.75]) - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!((predictive_entropy(&[1.0 / 3.0; 3]) - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_examples() {
        assert_eq!(mutual_information(&samples(vec![vec![0.3, 0.7]; 4])).unwrap(), 0.0);
        assert_eq!(mutual_information(&samples(vec![vec![1.0, 0.0], vec![0.0, 1.0]])).unwrap(), 1.0);
        assert_eq!(mutual_information(&samples(vec![vec![0.5, 0.5]; 2])).unwrap(), 0.0);
    }

    #[test]
    fn std_examples() {
        assert_eq!(std_dev(&samples(vec![vec![0.4, 0.6]; 3])).unwrap(), vec![0.0, 0.0]);
        assert_eq!(std_dev(&samples(vec![vec![1.0, 0.0], vec![0.0, 1.0]])).unwrap(), vec![0.5, 0.5]);
        assert_eq!(std_dev(&samples(vec![vec![0.9, 0.1]])).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn ece_examples() {
        let r = ece(&[1.0; 7], &[true; 7], 10).unwrap();
        assert_eq!(r.ece, 0.0);

        let correct: Vec<bool> = (0..10).map(|i| i < 8).collect();
        let r = ece(&[0.9; 10], &correct, 10).unwrap();
        assert!((r.ece - 0.1).abs() < 1e-12);
        assert_eq!(r.bins[8].count, 10);

        // bin A: conf 0.7, acc 0.5 (gap 0.2); bin B: conf 1.0, acc 1.0
        let r = ece(&[0.7, 0.7, 1.0, 1.0], &[true, false, true, true], 10).unwrap();
        assert!((r.ece - 0.1).abs() < 1e-12);
        assert_eq!(r.total(), 4);
    }

    #[test]
    fn ece_edges_and_errors() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(0.100001, 10), 1);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.5, 1), 0);
        assert_eq!(bin_index(0.7, 10), 6);
        assert_eq!(bin_index(0.3, 10), 2);
        assert!(ece(&[0.5], &[true], 0).is_err());
        assert!(ece(&[], &[], 10).is_err());
        assert!(ece(&[0.5, 0.2], &[true], 10).is_err());
        assert!(ece(&[1.5], &[true], 10).is_err());
    }

    fn distribution(classes: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, classes).prop_filter_map("mass", |raw| {
            let t: f64 = raw.iter().sum();
            (t > 1e-9).then(|| raw.iter().map(|x| x / t).collect())
        })
    }

    fn sample_set() -> impl Strategy<Value = PredictionSamples> {
        (2usize..5).prop_flat_map(|c| {
            prop::collection::vec(distribution(c), 1..12).prop_map(|v| PredictionSamples::from_probs(v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn jensen(s in sample_set()) {
            let r = UncertaintyReport::from_samples(&s).unwrap();
            prop_assert!(r.mutual_information_bits >= 0.0);
            prop_assert!(r.mutual_information_bits <= r.entropy_bits + 1e-9);
            prop_assert!(r.entropy_bits <= (s.classes() as f64).log2() + 1e-9);
        }

        #[test]
        fn entropy_is_permutation_invariant_and_bounded(p in distribution(4), rot in 0usize..4) {
            let mut q = p.clone();
            q.rotate_left(rot);
            prop_assert!((predictive_entropy(&p) - predictive_entropy(&q)).abs() < 1e-12);
            prop_assert!(predictive_entropy(&p) <= 2.0 + 1e-12);
        }

        #[test]
        fn ece_is_order_invariant(
            rows in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..60), m in 1usize..20
        ) {
            let (c, ok): (Vec<f64>, Vec<bool>) = rows.iter().cloned().unzip();
            let a = ece(&c, &ok, m).unwrap();
            let (rc, rok): (Vec<f64>, Vec<bool>) = rows.iter().rev().cloned().unzip();
            let b = ece(&rc, &rok, m).unwrap();
            prop_assert!((a.ece - b.ece).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.ece));
            prop_assert_eq!(a.total(), rows.len());
            let recomputed: f64 = a.bins.iter()
                .map(|b| b.count as f64 / rows.len() as f64 * (b.accuracy - b.confidence).abs())
                .sum();
            prop_assert!((recomputed - a.ece).abs() < 1e-15);
        }

        #[test]
        fn copies_have_zero_spread(p in distribution(3), k in 1usize..10) {
            let s = PredictionSamples::from_probs(vec![p; k]).unwrap();
            prop_assert!(std_dev(&s).unwrap().iter().all(|x| *x < 1e-12));
        }
    }
}
