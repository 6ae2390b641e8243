//! Fixed inputs shared by the benchmarks.

use thermosemiring::TropicalValue;

/// `n` evenly spaced finite points in `[lo, hi]`.
pub fn points(n: usize, lo: f64, hi: f64) -> Vec<TropicalValue> {
    let step = if n > 1 {
        (hi - lo) / (n - 1) as f64
    } else {
        0.0
    };
    (0..n)
        .map(|i| TropicalValue::new(lo + step * i as f64).expect("finite"))
        .collect()
}
