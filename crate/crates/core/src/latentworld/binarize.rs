use crate::error::{Error, Result};

/// Histogram resolution for Otsu thresholding.
pub const OTSU_BINS: usize = 256;

struct Bins {
    min: f64,
    width: f64,
}

impl Bins {
    fn edge(&self, j: usize) -> f64 {
        self.min + j as f64 * self.width
    }

    /// Bin index consistent with `edge`: the number of interior edges <= v.
    fn index(&self, v: f64) -> usize {
        let mut i = (((v - self.min) / self.width).floor().max(0.0) as usize).min(OTSU_BINS - 1);
        while i + 1 < OTSU_BINS && v >= self.edge(i + 1) {
            i += 1;
        }
        while i > 0 && v < self.edge(i) {
            i -= 1;
        }
        i
    }
}

fn between_class_variance(n0: f64, s0: f64, n1: f64, s1: f64) -> f64 {
    if n0 == 0.0 || n1 == 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = n0 + n1;
    let diff = s0 / n0 - s1 / n1;
    (n0 / n) * (n1 / n) * diff * diff
}

/// Otsu threshold over a 256-bin histogram spanning `[min, max]`.
///
/// Candidates are the interior bin edges; the first edge with maximal
/// between-class variance wins. Values `>= threshold` form the upper class.
pub fn otsu_threshold(values: &[f64]) -> Result<f64> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("otsu threshold needs finite values"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.len() < 2 || !(max > min) {
        return Err(Error::data("otsu threshold needs at least two distinct values"));
    }
    let bins = Bins { min, width: (max - min) / OTSU_BINS as f64 };
    let mut count = [0.0f64; OTSU_BINS];
    let mut sum = [0.0f64; OTSU_BINS];
    for &v in values {
        let i = bins.index(v);
        count[i] += 1.0;
        sum[i] += v;
    }
    let total_n: f64 = count.iter().sum();
    let total_s: f64 = sum.iter().sum();
    let (mut n0, mut s0) = (0.0, 0.0);
    let mut best = (bins.edge(1), f64::NEG_INFINITY);
    for t in 1..OTSU_BINS {
        n0 += count[t - 1];
        s0 += sum[t - 1];
        let var = between_class_variance(n0, s0, total_n - n0, total_s - s0);
        if var > best.1 {
            best = (bins.edge(t), var);
        }
    }
    Ok(best.0)
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Labels the bottom third 0 and the top third 1, masking out the middle.
///
/// Items strictly below the 33.3rd percentile get label 0, strictly above
/// the 66.7th get label 1; everything else (ties included) is dropped.
pub fn binarize_middle_tercile(values: &[f64]) -> Result<(Vec<u8>, Vec<bool>)> {
    if values.len() < 3 {
        return Err(Error::data("tercile binarization needs at least three values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("tercile binarization needs finite values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile(&sorted, 100.0 / 3.0);
    let hi = percentile(&sorted, 200.0 / 3.0);
    let mut labels = Vec::with_capacity(values.len());
    let mut keep = Vec::with_capacity(values.len());
    for &v in values {
        let (label, kept) = if v < lo {
            (0, true)
        } else if v > hi {
            (1, true)
        } else {
            (0, false)
        };
        labels.push(label);
        keep.push(kept);
    }
    let kept_labels = || labels.iter().zip(&keep).filter(|(_, &k)| k).map(|(&l, _)| l);
    if !kept_labels().any(|l| l == 0) || !kept_labels().any(|l| l == 1) {
        return Err(Error::data("tercile binarization left a class empty"));
    }
    Ok((labels, keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separates_two_clusters() {
        let t = otsu_threshold(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(t > 0.0 && t < 1.0);
    }

    #[test]
    fn identical_values_have_no_split() {
        assert!(otsu_threshold(&[2.0, 2.0, 2.0]).is_err());
        assert!(otsu_threshold(&[1.0]).is_err());
    }

    #[test]
    fn bin_index_agrees_with_edges() {
        let b = Bins { min: -0.3, width: 0.7 / 256.0 };
        for j in 1..OTSU_BINS {
            let e = b.edge(j);
            assert_eq!(b.index(e), j);
            assert_eq!(b.index(e - 1e-12), j - 1);
        }
    }

    #[test]
    fn terciles_of_one_to_nine() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        let (labels, keep) = binarize_middle_tercile(&v).unwrap();
        assert_eq!(keep, [true, true, true, false, false, false, true, true, true]);
        assert_eq!(&labels[..3], &[0, 0, 0]);
        assert_eq!(&labels[6..], &[1, 1, 1]);
    }

    #[test]
    fn tercile_rejects_degenerate_input() {
        assert!(binarize_middle_tercile(&[4.0; 10]).is_err());
        assert!(binarize_middle_tercile(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&s, 0.0), 1.0);
        assert_eq!(percentile(&s, 100.0), 4.0);
        assert!((percentile(&s, 50.0) - 2.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn tercile_keeps_two_thirds(v in proptest::collection::vec(-1e3f64..1e3, 3..300)) {
            if let Ok((_, keep)) = binarize_middle_tercile(&v) {
                let kept = keep.iter().filter(|&&k| k).count() as f64;
                let target = (2.0 * v.len() as f64 / 3.0).ceil();
                prop_assert!((kept - target).abs() <= 1.0, "kept {} of {}", kept, v.len());
            }
        }

        #[test]
        fn shift_moves_threshold(v in proptest::collection::vec(0.0f64..10.0, 2..200), c in -50.0f64..50.0) {
            prop_assume!(v.iter().any(|&x| x != v[0]));
            let t = otsu_threshold(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let ts = otsu_threshold(&shifted).unwrap();
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let width = (max - min) / OTSU_BINS as f64;
            prop_assert!((ts - t - c).abs() <= width + 1e-9, "{} vs {} + {}", ts, t, c);
        }
    }
}
