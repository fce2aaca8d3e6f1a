//! Complex FFTs for arbitrary lengths.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other
//! length goes through Bluestein's chirp-z algorithm on top of it. The
//! forward transform is unnormalized and the inverse carries the `1/N`
//! factor, so `inverse(forward(x)) == x`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// A precomputed 1-D transform of fixed length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    algo: Algo,
}

#[derive(Debug, Clone)]
enum Algo {
    Trivial,
    Radix2 {
        twiddles: Vec<Complex64>,
        bitrev: Vec<usize>,
    },
    Bluestein {
        chirp: Vec<Complex64>,
        kernel: Vec<Complex64>,
        inner: Box<Fft>,
    },
}

impl Fft {
    pub fn new(len: usize) -> Self {
        let algo = if len <= 1 {
            Algo::Trivial
        } else if len.is_power_of_two() {
            radix2_plan(len)
        } else {
            bluestein_plan(len)
        };
        Fft { len, algo }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform, `X_k = sum_n x_n exp(-2 pi i k n / N)`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.algo {
            Algo::Trivial => {}
            Algo::Radix2 { twiddles, bitrev } => radix2(buf, twiddles, bitrev),
            Algo::Bluestein {
                chirp,
                kernel,
                inner,
            } => {
                let m = inner.len;
                let mut work = vec![Complex64::new(0.0, 0.0); m];
                for (w, (x, c)) in work.iter_mut().zip(buf.iter().zip(chirp)) {
                    *w = x * c;
                }
                inner.forward(&mut work);
                for (w, k) in work.iter_mut().zip(kernel) {
                    *w *= k;
                }
                inner.inverse(&mut work);
                for (x, (w, c)) in buf.iter_mut().zip(work.iter().zip(chirp)) {
                    *x = w * c;
                }
            }
        }
    }

    /// In-place inverse transform including the `1/N` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for x in buf.iter_mut() {
            *x = x.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.len as f64;
        for x in buf.iter_mut() {
            *x = x.conj() * scale;
        }
    }
}

fn radix2_plan(len: usize) -> Algo {
    let bits = len.trailing_zeros();
    let bitrev = (0..len)
        .map(|i| i.reverse_bits() >> (usize::BITS - bits))
        .collect();
    let twiddles = (0..len / 2)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
        .collect();
    Algo::Radix2 { twiddles, bitrev }
}

fn radix2(buf: &mut [Complex64], twiddles: &[Complex64], bitrev: &[usize]) {
    let n = buf.len();
    for (i, &j) in bitrev.iter().enumerate() {
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut half = 1;
    while half < n {
        let stride = n / (2 * half);
        for start in (0..n).step_by(2 * half) {
            for k in 0..half {
                let t = twiddles[k * stride] * buf[start + k + half];
                let u = buf[start + k];
                buf[start + k] = u + t;
                buf[start + k + half] = u - t;
            }
        }
        half *= 2;
    }
}

fn bluestein_plan(len: usize) -> Algo {
    let m = (2 * len - 1).next_power_of_two();
    // k^2 mod 2N keeps the chirp argument small and exact.
    let chirp: Vec<Complex64> = (0..len)
        .map(|k| {
            let k2 = (k as u128 * k as u128 % (2 * len as u128)) as f64;
            Complex64::from_polar(1.0, -PI * k2 / len as f64)
        })
        .collect();
    let mut kernel = vec![Complex64::new(0.0, 0.0); m];
    kernel[0] = chirp[0].conj();
    for k in 1..len {
        kernel[k] = chirp[k].conj();
        kernel[m - k] = chirp[k].conj();
    }
    let inner = Fft::new(m);
    inner.forward(&mut kernel);
    Algo::Bluestein {
        chirp,
        kernel,
        inner: Box::new(inner),
    }
}

/// Separable 2-D transform over a row-major `height x width` buffer.
#[derive(Debug, Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    rows: Fft,
    cols: Fft,
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        Fft2 {
            height,
            width,
            rows: Fft::new(width),
            cols: Fft::new(height),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.apply(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.apply(buf, true);
    }

    fn apply(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.height * self.width);
        for row in buf.chunks_exact_mut(self.width) {
            if inverse {
                self.rows.inverse(row);
            } else {
                self.rows.forward(row);
            }
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.height];
        for c in 0..self.width {
            for (r, v) in column.iter_mut().enumerate() {
                *v = buf[r * self.width + c];
            }
            if inverse {
                self.cols.inverse(&mut column);
            } else {
                self.cols.forward(&mut column);
            }
            for (r, v) in column.iter().enumerate() {
                buf[r * self.width + c] = *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let arg = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, arg)
                    })
                    .sum()
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new(libm::sin(i as f64 * 0.7) + 0.3, libm::cos(i as f64 * 1.3)))
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_mixed_lengths() {
        for n in [1, 2, 3, 4, 6, 7, 8, 12, 16, 30, 64, 100] {
            let x = signal(n);
            let expected = naive_dft(&x);
            let mut got = x.clone();
            Fft::new(n).forward(&mut got);
            for (a, b) in got.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-9 * n as f64, "n = {n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for n in [2, 10, 32, 48] {
            let x = signal(n);
            let mut y = x.clone();
            let plan = Fft::new(n);
            plan.forward(&mut y);
            plan.inverse(&mut y);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_dimensional_round_trip() {
        let (h, w) = (6, 8);
        let x = signal(h * w);
        let mut y = x.clone();
        let plan = Fft2::new(h, w);
        plan.forward(&mut y);
        plan.inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
