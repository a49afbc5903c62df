//! Orthonormal transforms and the convolution primitives built on them.
//!
//! Both the Walsh-Hadamard and the Fourier matrices carry a `1/sqrt(N)`
//! factor, so every transform here is unitary. With that normalization the
//! convolution theorems pick up a constant factor:
//!
//! ```text
//! W (a ⊠ b) = sqrt(N) · (W a) ∘ (W b)      (dyadic)
//! F (a ⊛ b) = sqrt(N) · (F a) ∘ (F b)      (circular)
//! ```

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result, C64};

fn check_pow2(n: usize) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "transform length {n} is not a power of two"
        )));
    }
    Ok(n.trailing_zeros())
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Row of the natural-order (Sylvester) Hadamard matrix holding sequency `k`.
fn natural_index(k: usize, bits: u32) -> usize {
    bit_reverse(k ^ (k >> 1), bits)
}

/// Sequency-ordered, normalized Walsh matrix `W_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalshMatrix {
    order: usize,
    rows: Vec<f64>,
}

impl WalshMatrix {
    pub fn new(order: usize) -> Result<Self> {
        let bits = check_pow2(order)?;
        // Sylvester recursion in natural order.
        let mut nat = vec![1i8; 1];
        let mut size = 1;
        while size < order {
            let mut next = vec![0i8; 4 * size * size];
            for r in 0..size {
                for c in 0..size {
                    let v = nat[r * size + c];
                    next[r * 2 * size + c] = v;
                    next[r * 2 * size + c + size] = v;
                    next[(r + size) * 2 * size + c] = v;
                    next[(r + size) * 2 * size + c + size] = -v;
                }
            }
            nat = next;
            size *= 2;
        }
        let scale = 1.0 / (order as f64).sqrt();
        let mut rows = vec![0.0; order * order];
        for k in 0..order {
            let src = natural_index(k, bits);
            for c in 0..order {
                rows[k * order + c] = f64::from(nat[src * order + c]) * scale;
            }
        }
        Ok(Self { order, rows })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row * self.order + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.rows[row * self.order..(row + 1) * self.order]
    }

    /// Number of sign changes along `row`.
    pub fn sign_changes(&self, row: usize) -> usize {
        self.row(row)
            .windows(2)
            .filter(|w| w[0].signum() != w[1].signum())
            .count()
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.order {
            return Err(Error::mismatch("walsh product", self.order, x.len()));
        }
        Ok((0..self.order)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .map(|(&w, &v)| v * w)
                    .sum::<C64>()
            })
            .collect())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.order, self.order, &self.rows)
    }
}

/// Normalized DFT matrix `F_N`, entries `exp(-j2πkn/N)/sqrt(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMatrix {
    order: usize,
}

impl FourierMatrix {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("DFT order must be positive"));
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, k: usize, n: usize) -> C64 {
        let n_f = self.order as f64;
        let phase = -2.0 * std::f64::consts::PI * ((k * n) % self.order) as f64 / n_f;
        C64::from_polar(1.0 / n_f.sqrt(), phase)
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.order, self.order, |k, n| self.get(k, n))
    }
}

/// Fast sequency-ordered WHT: natural-order butterflies followed by the
/// bit-reversed Gray-code output permutation and a single `1/sqrt(N)` scale.
#[derive(Debug, Clone)]
pub struct Wht {
    len: usize,
    perm: Vec<usize>,
    scale: f64,
}

impl Wht {
    pub fn new(len: usize) -> Result<Self> {
        let bits = check_pow2(len)?;
        Ok(Self {
            len,
            perm: (0..len).map(|k| natural_index(k, bits)).collect(),
            scale: 1.0 / (len as f64).sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place transform of one length-`N` vector. `scratch` is resized as needed.
    pub fn apply(&self, x: &mut [C64], scratch: &mut Vec<C64>) {
        assert_eq!(x.len(), self.len, "WHT length mismatch");
        let mut half = 1;
        while half < self.len {
            for start in (0..self.len).step_by(2 * half) {
                for i in start..start + half {
                    let a = x[i];
                    let b = x[i + half];
                    x[i] = a + b;
                    x[i + half] = a - b;
                }
            }
            half *= 2;
        }
        scratch.clear();
        scratch.extend_from_slice(x);
        for (out, &src) in x.iter_mut().zip(&self.perm) {
            *out = scratch[src] * self.scale;
        }
    }

    /// Applies the transform to every consecutive length-`N` chunk of `data`.
    pub fn apply_rows(&self, data: &mut [C64]) {
        let mut scratch = Vec::with_capacity(self.len);
        for row in data.chunks_exact_mut(self.len) {
            self.apply(row, &mut scratch);
        }
    }
}

/// `W_N · x`.
pub fn wht(x: &[C64]) -> Result<Vec<C64>> {
    let plan = Wht::new(x.len())?;
    let mut out = x.to_vec();
    plan.apply(&mut out, &mut Vec::new());
    Ok(out)
}

/// Unitary DFT pair backed by `rustfft`.
#[derive(Clone)]
pub struct Dft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("len", &self.len).finish()
    }
}

impl Dft {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("DFT length must be positive"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            scale: 1.0 / (len as f64).sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `F_N · x` on every length-`N` chunk.
    pub fn forward(&self, data: &mut [C64]) {
        assert_eq!(data.len() % self.len, 0, "DFT length mismatch");
        self.forward.process(data);
        data.iter_mut().for_each(|v| *v *= self.scale);
    }

    /// `F_N^† · x` on every length-`N` chunk.
    pub fn inverse(&self, data: &mut [C64]) {
        assert_eq!(data.len() % self.len, 0, "DFT length mismatch");
        self.inverse.process(data);
        data.iter_mut().for_each(|v| *v *= self.scale);
    }
}

pub fn dft(x: &[C64]) -> Result<Vec<C64>> {
    let plan = Dft::new(x.len())?;
    let mut out = x.to_vec();
    plan.forward(&mut out);
    Ok(out)
}

pub fn idft(x: &[C64]) -> Result<Vec<C64>> {
    let plan = Dft::new(x.len())?;
    let mut out = x.to_vec();
    plan.inverse(&mut out);
    Ok(out)
}

/// `out(n) = Σ_k a(k) b(n ⊕ k)`.
pub fn dyadic_convolution(a: &[C64], b: &[C64]) -> Result<Vec<C64>> {
    if a.len() != b.len() {
        return Err(Error::mismatch("dyadic convolution", a.len(), b.len()));
    }
    check_pow2(a.len())?;
    Ok((0..a.len())
        .map(|n| a.iter().enumerate().map(|(k, &ak)| ak * b[n ^ k]).sum())
        .collect())
}

/// `out(n) = Σ_k a(k) b([n - k]_N)`.
pub fn circular_convolution(a: &[C64], b: &[C64]) -> Result<Vec<C64>> {
    if a.len() != b.len() {
        return Err(Error::mismatch("circular convolution", a.len(), b.len()));
    }
    let len = a.len();
    Ok((0..len)
        .map(|n| {
            a.iter()
                .enumerate()
                .map(|(k, &ak)| ak * b[(n + len - k) % len])
                .sum()
        })
        .collect())
}

/// Row-column interleaver `P` mapping index `n + m·N` to `m + n·M`.
///
/// With `A` of size `N x N` and `B` of size `M x M` it satisfies
/// `A ⊗ B = P (B ⊗ A) Pᵀ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShufflePermutation {
    rows_m: usize,
    cols_n: usize,
    mapping: Vec<usize>,
}

impl ShufflePermutation {
    pub fn new(rows_m: usize, cols_n: usize) -> Self {
        let mut mapping = vec![0; rows_m * cols_n];
        for m in 0..rows_m {
            for n in 0..cols_n {
                mapping[n + m * cols_n] = m + n * rows_m;
            }
        }
        Self {
            rows_m,
            cols_n,
            mapping,
        }
    }

    pub fn rows_m(&self) -> usize {
        self.rows_m
    }

    pub fn cols_n(&self) -> usize {
        self.cols_n
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    /// `P · x`.
    pub fn apply<T: Copy + Default>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.mapping.len() {
            return Err(Error::mismatch("shuffle", self.mapping.len(), x.len()));
        }
        let mut out = vec![T::default(); x.len()];
        for (i, &dst) in self.mapping.iter().enumerate() {
            out[dst] = x[i];
        }
        Ok(out)
    }

    /// `Pᵀ · x`.
    pub fn apply_transpose<T: Copy + Default>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.mapping.len() {
            return Err(Error::mismatch("shuffle", self.mapping.len(), x.len()));
        }
        Ok(self.mapping.iter().map(|&src| x[src]).collect())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let len = self.mapping.len();
        let mut p = DMatrix::zeros(len, len);
        for (i, &dst) in self.mapping.iter().enumerate() {
            p[(dst, i)] = 1.0;
        }
        p
    }
}

pub fn perfect_shuffle(rows_m: usize, cols_n: usize) -> ShufflePermutation {
    ShufflePermutation::new(rows_m, cols_n)
}
