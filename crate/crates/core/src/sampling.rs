//! Deterministic quasi-random point sets for the validators.

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// The `index`-th point of the `dim`-dimensional Halton sequence (skipping
/// the origin at index 0). Dimensions beyond the prime table wrap with a
/// scrambling offset.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()];
            let shift = (d / PRIMES.len()) as f64 * 0.618_033_988_749_895;
            (radical_inverse(index + 1, base) + shift).fract()
        })
        .collect()
}
