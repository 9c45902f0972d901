//! Deterministic low-discrepancy sampling of boxes.

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut factor = inv_base;
    let mut result = 0.0;
    while index > 0 {
        result += (index % base) as f64 * factor;
        index /= base;
        factor *= inv_base;
    }
    result
}

/// Halton points in `[lo, hi]` (one interval per coordinate).
///
/// `seed` shifts the starting index, so distinct seeds give disjoint
/// stretches of the same sequence.
pub fn halton_box(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert_eq!(lo.len(), hi.len());
    assert!(
        lo.len() <= PRIMES.len(),
        "halton sampling supports at most 16 dimensions"
    );
    (0..count as u64)
        .map(|k| {
            let index = k + 1 + seed;
            lo.iter()
                .zip(hi)
                .zip(PRIMES.iter())
                .map(|((&a, &b), &base)| a + (b - a) * radical_inverse(index, base))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn points_stay_in_box_and_are_deterministic() {
        let a = halton_box(&[-1.0, 2.0], &[1.0, 3.0], 100, 7);
        let b = halton_box(&[-1.0, 2.0], &[1.0, 3.0], 100, 7);
        assert_eq!(a, b);
        for p in &a {
            assert!(p[0] >= -1.0 && p[0] <= 1.0);
            assert!(p[1] >= 2.0 && p[1] <= 3.0);
        }
    }
}
