//! Uniform grids used by the region sweeps and the brute-force oracles.

/// `n` evenly spaced points on `[lo, hi]`; both endpoints are hit exactly.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}

/// `n` evenly spaced points on `[lo, hi)`; the last point sits one step inside `hi`.
pub fn half_open(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(|k| lo + step * k as f64).collect()
}

/// `n` evenly spaced points on `(lo, hi]`.
pub fn open_closed(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (1..=n)
        .map(|k| if k == n { hi } else { lo + step * k as f64 })
        .collect()
}
