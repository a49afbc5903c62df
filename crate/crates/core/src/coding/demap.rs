//! Max-log soft demapping.

use crate::frame::QamConstellation;
use crate::{Error, Result, C64};

/// Per-bit LLRs `(min_{x: b=1} |y - h x|² - min_{x: b=0} |y - h x|²) / σ²`
/// for every symbol, bits in mapping order. Positive values favour 0.
pub fn soft_demap(y: &[C64], gains: &[C64], noise_var: f64, qam: &QamConstellation) -> Result<Vec<f64>> {
    if y.len() != gains.len() {
        return Err(Error::mismatch("channel gains", y.len(), gains.len()));
    }
    if !(noise_var > 0.0) {
        return Err(Error::invalid(format!("noise variance {noise_var} must be positive")));
    }
    let q = qam.bits_per_symbol();
    let mut out = Vec::with_capacity(y.len() * q);
    let mut d = vec![0.0; qam.order()];
    for (yv, h) in y.iter().zip(gains) {
        for (i, p) in qam.points().iter().enumerate() {
            d[i] = (yv - h * p).norm_sqr();
        }
        for b in 0..q {
            let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
            for (i, &di) in d.iter().enumerate() {
                if qam.bit(i, b) == 0 {
                    d0 = d0.min(di);
                } else {
                    d1 = d1.min(di);
                }
            }
            out.push((d1 - d0) / noise_var);
        }
    }
    Ok(out)
}

/// Hard bits from LLRs; ties go to 0.
pub fn hard_bits(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&v| u8::from(v < 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn on_point_signs_match_bits() {
        for order in [4, 16, 64] {
            let qam = QamConstellation::new(order).unwrap();
            let ones = vec![C64::new(1.0, 0.0); order];
            let llr = soft_demap(qam.points(), &ones, 1e-3, &qam).unwrap();
            let bits = hard_bits(&llr);
            for i in 0..order {
                for b in 0..qam.bits_per_symbol() {
                    assert_eq!(bits[i * qam.bits_per_symbol() + b], qam.bit(i, b));
                }
            }
        }
    }

    #[test]
    fn origin_is_ambiguous_for_qpsk() {
        let qam = QamConstellation::new(4).unwrap();
        let llr = soft_demap(&[C64::default()], &[C64::new(1.0, 0.0)], 0.5, &qam).unwrap();
        assert!(llr.iter().all(|v| v.abs() < 1e-15));
        assert!(soft_demap(&[C64::default()], &[C64::new(1.0, 0.0)], 0.0, &qam).is_err());
    }

    #[test]
    fn gain_is_undone() {
        let qam = QamConstellation::new(16).unwrap();
        let h = C64::new(0.0, -2.0);
        let llr = soft_demap(&[h * qam.point(9)], &[h], 0.1, &qam).unwrap();
        assert_eq!(hard_bits(&llr), vec![1, 0, 0, 1]);
    }

    #[test]
    fn max_log_close_to_exact_log_sum() {
        let qam = QamConstellation::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sigma2 = 0.2;
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let y = C64::new(rng.random_range(-1.3..1.3), rng.random_range(-1.3..1.3));
            let approx = soft_demap(&[y], &[C64::new(1.0, 0.0)], sigma2, &qam).unwrap();
            for b in 0..4 {
                let (mut s0, mut s1) = (0.0, 0.0);
                for (i, p) in qam.points().iter().enumerate() {
                    let w = (-(y - p).norm_sqr() / sigma2).exp();
                    if qam.bit(i, b) == 0 {
                        s0 += w;
                    } else {
                        s1 += w;
                    }
                }
                let exact = (s0 / s1).ln();
                worst = worst.max((exact - approx[b]).abs());
            }
        }
        // the two estimates differ by at most ln(number of points per half)
        assert!(worst <= 8f64.ln() + 1e-9, "{worst}");
    }
}
