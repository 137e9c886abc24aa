//! Complex FFTs for spectral synthesis: iterative radix-2 for power-of-two
//! lengths, Bluestein's chirp-z for everything else, and a separable 3D
//! transform over x-fastest volumes.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    /// Inverse transform, scaled by `1/n`.
    Inverse,
}

/// A planned 1D transform of fixed length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    kind: Plan,
}

#[derive(Debug, Clone)]
enum Plan {
    Radix2 {
        twiddles: Vec<Complex64>,
    },
    Bluestein {
        inner: Box<Fft>,
        chirp: Vec<Complex64>,
        /// Forward transform of the conjugate chirp, zero padded.
        kernel: Vec<Complex64>,
    },
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        if len.is_power_of_two() {
            let twiddles = (0..len / 2)
                .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
                .collect();
            return Self {
                len,
                kind: Plan::Radix2 { twiddles },
            };
        }
        let m = (2 * len - 1).next_power_of_two();
        let inner = Fft::new(m);
        // chirp_k = exp(-iπk²/n); k² taken mod 2n to keep the argument small
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
        inner.radix2(&mut kernel, Direction::Forward);
        Self {
            len,
            kind: Plan::Bluestein {
                inner: Box::new(inner),
                chirp,
                kernel,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn process(&self, data: &mut [Complex64], dir: Direction) {
        assert_eq!(data.len(), self.len);
        match &self.kind {
            Plan::Radix2 { .. } => self.radix2(data, dir),
            Plan::Bluestein {
                inner,
                chirp,
                kernel,
            } => {
                let n = self.len;
                let m = inner.len;
                let conj = dir == Direction::Inverse;
                let mut a = vec![Complex64::new(0.0, 0.0); m];
                for k in 0..n {
                    let x = if conj { data[k].conj() } else { data[k] };
                    a[k] = x * chirp[k];
                }
                inner.radix2(&mut a, Direction::Forward);
                for (ak, bk) in a.iter_mut().zip(kernel) {
                    *ak *= bk;
                }
                inner.radix2(&mut a, Direction::Inverse);
                for k in 0..n {
                    let y = a[k] * chirp[k];
                    data[k] = if conj { y.conj() / n as f64 } else { y };
                }
            }
        }
    }

    fn radix2(&self, data: &mut [Complex64], dir: Direction) {
        let Plan::Radix2 { twiddles } = &self.kind else {
            unreachable!("radix2 called on a Bluestein plan")
        };
        let n = data.len();
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let mut w = twiddles[k * stride];
                    if dir == Direction::Inverse {
                        w = w.conj();
                    }
                    let t = data[start + k + half] * w;
                    data[start + k + half] = data[start + k] - t;
                    data[start + k] += t;
                }
            }
            size *= 2;
        }
        if dir == Direction::Inverse {
            let scale = 1.0 / n as f64;
            data.iter_mut().for_each(|x| *x *= scale);
        }
    }
}

/// In-place 3D transform of an x-fastest `[nx, ny, nz]` volume.
pub fn fft3(data: &mut [Complex64], dims: [usize; 3], dir: Direction) {
    let [nx, ny, nz] = dims;
    assert_eq!(data.len(), nx * ny * nz);
    let plans = [Fft::new(nx), Fft::new(ny), Fft::new(nz)];
    let mut line = Vec::new();
    for (axis, plan) in plans.iter().enumerate() {
        let (n, stride) = match axis {
            0 => (nx, 1),
            1 => (ny, nx),
            _ => (nz, nx * ny),
        };
        line.resize(n, Complex64::new(0.0, 0.0));
        for base in line_starts(dims, axis) {
            for (t, v) in line.iter_mut().enumerate() {
                *v = data[base + t * stride];
            }
            plan.process(&mut line, dir);
            for (t, v) in line.iter().enumerate() {
                data[base + t * stride] = *v;
            }
        }
    }
}

fn line_starts(dims: [usize; 3], axis: usize) -> impl Iterator<Item = usize> {
    let [nx, ny, nz] = dims;
    let (a, b) = match axis {
        0 => (ny, nz),
        1 => (nx, nz),
        _ => (nx, ny),
    };
    (0..a * b).map(move |n| {
        let (p, q) = (n % a, n / a);
        match axis {
            0 => nx * (p + ny * q),
            1 => p + nx * ny * q,
            _ => p + nx * q,
        }
    })
}

/// Signed frequency index of bin `k` for a length-`n` transform.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
