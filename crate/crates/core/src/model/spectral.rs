//! Multi-dimensional periodic FFTs and Fourier-multiplier derivatives.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// FFT plans for a row-major periodic box with period 2π on every axis.
#[derive(Clone)]
pub struct Spectral {
    shape: Vec<usize>,
    strides: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    // derivative wavenumber of every flat index, one table per axis
    axis_k: Vec<Vec<f64>>,
    // flat indices with some |k_a| > (2/3)(N_a/2)
    high: Vec<bool>,
    len: usize,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral")
            .field("shape", &self.shape)
            .finish()
    }
}

/// Signed integer wavenumber of FFT bin `i` on `n` points.
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Wavenumber used by a first-derivative multiplier; the Nyquist bin of an
/// even-length axis is dropped so real fields stay real.
#[inline]
pub fn derivative_wavenumber(i: usize, n: usize) -> f64 {
    if n.is_multiple_of(2) && i == n / 2 {
        0.0
    } else {
        wavenumber(i, n) as f64
    }
}

impl Spectral {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let mut strides = vec![1; shape.len()];
        for a in (0..shape.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        let len: usize = shape.iter().product();
        let axis_k = (0..shape.len())
            .map(|a| {
                (0..len)
                    .map(|flat| derivative_wavenumber((flat / strides[a]) % shape[a], shape[a]))
                    .collect()
            })
            .collect();
        let mut idx = vec![0usize; shape.len()];
        let high = (0..len)
            .map(|flat| {
                let mut rest = flat;
                for a in (0..shape.len()).rev() {
                    idx[a] = rest % shape[a];
                    rest /= shape[a];
                }
                idx.iter().zip(shape).any(|(&i, &n)| {
                    n > 1
                        && (wavenumber(i, n).unsigned_abs() as f64) > (2.0 / 3.0) * (n as f64 / 2.0)
                })
            })
            .collect();
        Self {
            high,
            shape: shape.to_vec(),
            strides,
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
            axis_k,
            len,
        }
    }

    /// Derivative wavenumber along `axis` of every flat spectral index.
    pub fn axis_wavenumbers(&self, axis: usize) -> &[f64] {
        &self.axis_k[axis]
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool) {
        let n = self.shape[axis];
        if n == 1 {
            return;
        }
        let stride = self.strides[axis];
        let plan = if inverse {
            &self.inverse[axis]
        } else {
            &self.forward[axis]
        };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        if stride == 1 {
            plan.process_with_scratch(data, &mut scratch);
            return;
        }
        let block = n * stride;
        let lines = self.len / n;
        let mut buf = vec![Complex64::default(); self.len];
        let mut line = 0;
        for outer in (0..self.len).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for i in 0..n {
                    buf[line * n + i] = data[base + i * stride];
                }
                line += 1;
            }
        }
        debug_assert_eq!(line, lines);
        plan.process_with_scratch(&mut buf, &mut scratch);
        line = 0;
        for outer in (0..self.len).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for i in 0..n {
                    data[base + i * stride] = buf[line * n + i];
                }
                line += 1;
            }
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len);
        for axis in 0..self.shape.len() {
            self.transform_axis(data, axis, false);
        }
    }

    /// Inverse transform in place, normalized so `inverse(forward(x)) = x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len);
        for axis in 0..self.shape.len() {
            self.transform_axis(data, axis, true);
        }
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Multi-index of a flat row-major position.
    #[inline]
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.shape.len()).rev() {
            out[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
    }

    /// Spectrum of a real field.
    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    /// Applies the multiplier `Π_a (i k_a)^{orders[a]}` to a spectrum and
    /// transforms back.
    pub fn apply_derivative(&self, spectrum: &[Complex64], orders: &[usize]) -> Vec<Complex64> {
        let mut out = spectrum.to_vec();
        for (a, &ord) in orders.iter().enumerate() {
            if ord == 0 {
                continue;
            }
            for (v, &k) in out.iter_mut().zip(&self.axis_k[a]) {
                *v *= Complex64::new(0.0, k).powu(ord as u32);
            }
        }
        self.inverse(&mut out);
        out
    }

    /// Real part of the inverse transform of `spectrum · mult(k)` where `mult`
    /// receives the flat spectral index.
    pub fn real_multiplier(
        &self,
        spectrum: &[Complex64],
        mult: impl Fn(usize) -> Complex64,
    ) -> Vec<f64> {
        let mut out: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(flat, v)| v * mult(flat))
            .collect();
        self.inverse(&mut out);
        out.into_iter().map(|v| v.re).collect()
    }

    /// Two [`Self::real_multiplier`] results from one inverse transform.
    /// Both `spectrum · m1` and `spectrum · m2` must be spectra of real fields.
    pub fn real_multiplier_pair(
        &self,
        spectrum: &[Complex64],
        m1: impl Fn(usize) -> Complex64,
        m2: impl Fn(usize) -> Complex64,
    ) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut out: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(flat, v)| v * (m1(flat) + i * m2(flat)))
            .collect();
        self.inverse(&mut out);
        out.into_iter().map(|v| (v.re, v.im)).unzip()
    }

    /// Fraction of spectral energy (mean excluded) carried by modes with some
    /// `|k_a| > (2/3)(N_a/2)`.
    pub fn tail_fraction(&self, spectrum: &[Complex64]) -> f64 {
        let mut total = 0.0;
        let mut tail = 0.0;
        for (v, &high) in spectrum.iter().zip(&self.high).skip(1) {
            let e = v.norm_sqr();
            total += e;
            if high {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}
