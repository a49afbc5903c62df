//! Systematic LDPC encoding and normalized min-sum decoding.

use std::path::Path;

use super::alist::ParityCheckMatrix;
use crate::{Error, Result};

pub const MIN_SUM_SCALE: f64 = 0.75;
pub const DEFAULT_DECODER_ITERS: usize = 25;

/// Dense GF(2) matrix, rows packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn zeros(n: usize) -> Self {
        let words = n.div_ceil(64);
        Self {
            n,
            words,
            data: vec![0; n * words],
        }
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.row(r)[c / 64] >> (c % 64) & 1 == 1
    }

    fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1 << (c % 64);
    }

    fn xor_rows(&mut self, dst: usize, src: usize) {
        for w in 0..self.words {
            let v = self.data[src * self.words + w];
            self.data[dst * self.words + w] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for w in 0..self.words {
            self.data.swap(a * self.words + w, b * self.words + w);
        }
    }

    /// Gauss-Jordan inverse; `None` when singular.
    fn inverse(&self) -> Option<Self> {
        let mut a = self.clone();
        let mut inv = Self::zeros(self.n);
        for i in 0..self.n {
            inv.flip(i, i);
        }
        for col in 0..self.n {
            let pivot = (col..self.n).find(|&r| a.get(r, col))?;
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            for r in 0..self.n {
                if r != col && a.get(r, col) {
                    a.xor_rows(r, col);
                    inv.xor_rows(r, col);
                }
            }
        }
        Some(inv)
    }

    fn mul_bits(&self, v: &[u8]) -> Vec<u8> {
        let mut packed = vec![0u64; self.words];
        for (i, &b) in v.iter().enumerate() {
            if b & 1 == 1 {
                packed[i / 64] |= 1 << (i % 64);
            }
        }
        (0..self.n)
            .map(|r| {
                let ones: u32 = self.row(r).iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
                (ones & 1) as u8
            })
            .collect()
    }
}

/// Result of one codeword decode.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Hard codeword decisions.
    pub bits: Vec<u8>,
    /// A-posteriori LLRs (positive favours 0).
    pub llr: Vec<f64>,
    pub parity_ok: bool,
    pub iterations: usize,
}

/// Code with `H = [H_i | H_p]`, `H_p` the square block of the last `m`
/// columns. Codewords are `[u | p]` with `p = H_p^{-1} H_i u`.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    h: ParityCheckMatrix,
    parity_inv: BitMatrix,
    /// Per check, edge ids; edges are numbered check by check.
    edge_var: Vec<usize>,
    check_start: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
}

impl LdpcCode {
    pub fn new(h: ParityCheckMatrix) -> Result<Self> {
        let (m, n) = (h.rows(), h.cols());
        if m >= n {
            return Err(Error::invalid(format!("{m} checks leave no information bits in length {n}")));
        }
        let k = n - m;
        let mut hp = BitMatrix::zeros(m);
        for r in 0..m {
            for &c in h.row(r) {
                if c >= k {
                    hp.flip(r, c - k);
                }
            }
        }
        let parity_inv = hp.inverse().ok_or(Error::SingularParity)?;
        let mut edge_var = Vec::with_capacity(h.num_edges());
        let mut check_start = Vec::with_capacity(m + 1);
        let mut var_edges = vec![Vec::new(); n];
        for r in 0..m {
            check_start.push(edge_var.len());
            for &c in h.row(r) {
                var_edges[c].push(edge_var.len());
                edge_var.push(c);
            }
        }
        check_start.push(edge_var.len());
        Ok(Self {
            h,
            parity_inv,
            edge_var,
            check_start,
            var_edges,
        })
    }

    pub fn from_alist(text: &str) -> Result<Self> {
        Self::new(ParityCheckMatrix::parse_alist(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(ParityCheckMatrix::load(path)?)
    }

    pub fn parity_check(&self) -> &ParityCheckMatrix {
        &self.h
    }

    /// Codeword length `L`.
    pub fn n(&self) -> usize {
        self.h.cols()
    }

    pub fn k(&self) -> usize {
        self.h.cols() - self.h.rows()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        let k = self.k();
        if info.len() != k {
            return Err(Error::mismatch("information bits", k, info.len()));
        }
        let syndrome: Vec<u8> = (0..self.h.rows())
            .map(|r| self.h.row(r).iter().filter(|&&c| c < k).fold(0u8, |a, &c| a ^ (info[c] & 1)))
            .collect();
        let parity = self.parity_inv.mul_bits(&syndrome);
        let mut cw: Vec<u8> = info.iter().map(|b| b & 1).collect();
        cw.extend(parity);
        Ok(cw)
    }

    /// Normalized min-sum with flooding schedule; exits as soon as the hard
    /// decisions satisfy every check.
    pub fn decode(&self, llr: &[f64], max_iters: usize) -> Result<DecodeResult> {
        let n = self.n();
        if llr.len() != n {
            return Err(Error::mismatch("decoder input", n, llr.len()));
        }
        let hard = |post: &[f64]| -> Vec<u8> { post.iter().map(|&v| u8::from(v < 0.0)).collect() };
        let mut post = llr.to_vec();
        let mut bits = hard(&post);
        if self.h.is_codeword(&bits) {
            return Ok(DecodeResult {
                bits,
                llr: post,
                parity_ok: true,
                iterations: 0,
            });
        }
        let edges = self.edge_var.len();
        let mut c2v = vec![0.0f64; edges];
        let mut v2c = vec![0.0f64; edges];
        let mut iterations = 0;
        let mut parity_ok = false;
        while iterations < max_iters {
            iterations += 1;
            for (e, &v) in self.edge_var.iter().enumerate() {
                v2c[e] = post[v] - c2v[e];
            }
            for c in 0..self.h.rows() {
                let range = self.check_start[c]..self.check_start[c + 1];
                let mut sign = 1.0;
                let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, usize::MAX);
                for e in range.clone() {
                    let v = v2c[e];
                    if v < 0.0 {
                        sign = -sign;
                    }
                    let a = v.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in range {
                    let mag = if e == arg { min2 } else { min1 };
                    let s = if v2c[e] < 0.0 { -sign } else { sign };
                    c2v[e] = MIN_SUM_SCALE * s * mag;
                }
            }
            for (v, p) in post.iter_mut().enumerate() {
                *p = llr[v] + self.var_edges[v].iter().map(|&e| c2v[e]).sum::<f64>();
            }
            bits = hard(&post);
            if self.h.is_codeword(&bits) {
                parity_ok = true;
                break;
            }
        }
        Ok(DecodeResult {
            bits,
            llr: post,
            parity_ok,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> LdpcCode {
        LdpcCode::from_alist(include_str!("../../codes/toy_6_3.alist")).unwrap()
    }

    fn ira() -> LdpcCode {
        LdpcCode::from_alist(include_str!("../../codes/ira_672_r12.alist")).unwrap()
    }

    fn bpsk_llr(cw: &[u8], amp: f64) -> Vec<f64> {
        cw.iter().map(|&b| if b == 0 { amp } else { -amp }).collect()
    }

    #[test]
    fn bit_matrix_inverse() {
        let mut a = BitMatrix::zeros(3);
        for (r, c) in [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)] {
            a.flip(r, c);
        }
        let inv = a.inverse().unwrap();
        for r in 0..3 {
            let mut e = [0u8; 3];
            e[r] = 1;
            let x = inv.mul_bits(&e);
            assert_eq!(a.mul_bits(&x), e.to_vec());
        }
        let mut s = BitMatrix::zeros(2);
        s.flip(0, 0);
        s.flip(1, 0);
        assert!(s.inverse().is_none());
    }

    #[test]
    fn singular_parity_part_is_rejected() {
        // last two columns identical in both rows
        let h = ParityCheckMatrix::from_rows(4, vec![vec![0, 2, 3], vec![1, 2, 3]]).unwrap();
        assert!(matches!(LdpcCode::new(h), Err(Error::SingularParity)));
    }

    #[test]
    fn encoding_basics() {
        for code in [toy(), ira()] {
            assert_eq!(code.encode(&vec![0; code.k()]).unwrap(), vec![0; code.n()]);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..20 {
                let u: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
                let cw = code.encode(&u).unwrap();
                assert!(code.parity_check().is_codeword(&cw));
                assert_eq!(&cw[..code.k()], &u[..]);
            }
            assert!(code.encode(&[0]).is_err());
        }
        assert_eq!(ira().rate(), 0.5);
    }

    #[test]
    fn noiseless_llrs_decode_immediately() {
        let code = ira();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
        let cw = code.encode(&u).unwrap();
        let out = code.decode(&bpsk_llr(&cw, 1e6), 25).unwrap();
        assert!(out.parity_ok);
        assert_eq!(out.bits, cw);
        assert_eq!(out.iterations, 0);
    }

    fn ml_decode(code: &LdpcCode, llr: &[f64]) -> Vec<u8> {
        let k = code.k();
        (0..1u32 << k)
            .map(|m| {
                let u: Vec<u8> = (0..k).map(|i| (m >> i & 1) as u8).collect();
                code.encode(&u).unwrap()
            })
            .max_by(|a, b| {
                let score = |c: &Vec<u8>| c.iter().zip(llr).map(|(&b, l)| if b == 0 { *l } else { -l }).sum::<f64>();
                score(a).partial_cmp(&score(b)).unwrap()
            })
            .unwrap()
    }

    #[test]
    fn toy_single_flip_matches_ml() {
        let code = toy();
        for m in 0..8u32 {
            let u: Vec<u8> = (0..3).map(|i| (m >> i & 1) as u8).collect();
            let cw = code.encode(&u).unwrap();
            for flip in 0..6 {
                let mut llr = bpsk_llr(&cw, 4.0);
                llr[flip] = -llr[flip] * 0.25;
                let ml = ml_decode(&code, &llr);
                assert_eq!(ml, cw);
                let out = code.decode(&llr, 25).unwrap();
                assert!(out.parity_ok, "codeword {m} flip {flip}");
                assert_eq!(out.bits, ml);
            }
        }
    }

    #[test]
    fn ira_corrects_awgn_at_moderate_snr() {
        let code = ira();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sigma = 0.7;
        let mut failures = 0;
        for _ in 0..20 {
            let u: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
            let cw = code.encode(&u).unwrap();
            let llr: Vec<f64> = cw
                .iter()
                .map(|&b| {
                    let x = if b == 0 { 1.0 } else { -1.0 };
                    let y = x + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
                    2.0 * y / (sigma * sigma)
                })
                .collect();
            let raw_errors = llr.iter().zip(&cw).filter(|(l, &b)| (**l < 0.0) != (b == 1)).count();
            assert!(raw_errors > 0);
            let out = code.decode(&llr, 25).unwrap();
            if out.bits != cw {
                failures += 1;
            }
        }
        assert!(failures <= 1, "{failures} failures");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn encode_decode_identity(seed in any::<u64>()) {
            let code = toy();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<u8> = (0..3).map(|_| rng.random_range(0..2)).collect();
            let cw = code.encode(&u).unwrap();
            let out = code.decode(&bpsk_llr(&cw, 10.0), 5).unwrap();
            prop_assert!(out.parity_ok);
            prop_assert_eq!(out.bits, cw);
        }
    }
}
