//! Seeded pseudo-random bit interleaver.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `out[i] = x[perm[i]]`.
    pub fn interleave<T: Copy>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.perm.len() {
            return Err(Error::mismatch("interleaver input", self.perm.len(), x.len()));
        }
        Ok(self.perm.iter().map(|&p| x[p]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.perm.len() {
            return Err(Error::mismatch("deinterleaver input", self.perm.len(), y.len()));
        }
        let mut out = vec![T::default(); y.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = y[i];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seeded_and_nontrivial() {
        let a = Interleaver::new(100, 5);
        assert_eq!(a, Interleaver::new(100, 5));
        assert_ne!(a, Interleaver::new(100, 6));
        let x: Vec<usize> = (0..100).collect();
        assert_ne!(a.interleave(&x).unwrap(), x);
        assert!(a.interleave(&x[..5]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(len in 0usize..300, seed in any::<u64>()) {
            let il = Interleaver::new(len, seed);
            let x: Vec<u32> = (0..len as u32).map(|v| v.wrapping_mul(2654435761)).collect();
            prop_assert_eq!(il.deinterleave(&il.interleave(&x).unwrap()).unwrap(), x.clone());
            prop_assert_eq!(il.interleave(&il.deinterleave(&x).unwrap()).unwrap(), x);
        }
    }
}
