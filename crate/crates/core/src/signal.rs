//! Smoothing and first differences of a similarity signal.

/// Kernel radius used for a given standard deviation.
pub fn kernel_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

/// Normalized discrete Gaussian taps for offsets `-radius..=radius`.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = kernel_radius(sigma) as i64;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|t| (-((t * t) as f64) / denom).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|w| *w /= total);
    taps
}

/// Maps an index on the infinite line onto `0..len` by half-sample symmetric
/// reflection (`d c b a | a b c d | d c b a`).
fn reflect(idx: i64, len: usize) -> usize {
    let len = len as i64;
    let period = 2 * len;
    let m = idx.rem_euclid(period);
    (if m < len { m } else { period - 1 - m }) as usize
}

/// Gaussian filter with standard deviation `sigma` (in frames).
///
/// The kernel is truncated at `ceil(3 * sigma)` and renormalized to sum to one.
/// Out-of-range taps read the signal mirrored about its ends, so constants and
/// the total mass of the signal are preserved. `sigma == 0` returns the input.
pub fn gaussian_smooth(values: &[f64], sigma: f64) -> Vec<f64> {
    assert!(sigma.is_finite() && sigma >= 0.0, "sigma must be finite and >= 0");
    if sigma == 0.0 || values.len() <= 1 {
        return values.to_vec();
    }
    let taps = gaussian_kernel(sigma);
    let radius = (taps.len() / 2) as i64;
    let n = values.len();
    (0..n as i64)
        .map(|center| {
            taps.iter()
                .enumerate()
                .map(|(t, w)| w * values[reflect(center + t as i64 - radius, n)])
                .sum()
        })
        .collect()
}

/// First differences. Output index `l - 1` holds `smoothed[l] - smoothed[l - 1]`,
/// i.e. the transition into frame `l`.
pub fn differences(smoothed: &[f64]) -> Vec<f64> {
    smoothed.windows(2).map(|w| w[1] - w[0]).collect()
}
