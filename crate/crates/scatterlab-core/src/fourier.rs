//! Unitary Fourier analysis on finite abelian groups.
//!
//! The forward transform is `F(xi) = sum_x f(x) conj(xi(x))`; with counting
//! measure on `G` and point mass `1/#G` on the dual this is an exact isometry
//! (Plancherel holds with equality). Transforms are computed axis by axis in
//! the mixed-radix layout, one dense DFT per cyclic factor, which is exact for
//! arbitrary factor sizes and fast enough at the group orders this crate
//! targets.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{Signal, SpectralSignal};

/// DFT along a single mixed-radix axis, in place.
fn transform_axis(values: &mut [Complex64], factors: &[usize], axis: usize, inverse: bool) {
    let n = factors[axis];
    if n == 1 {
        return;
    }
    let stride: usize = factors[axis + 1..].iter().product();
    let block = stride * n;

    let sign = if inverse { TAU } else { -TAU };
    let twiddle: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, sign * m as f64 / n as f64))
        .collect();

    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;

    for base in (0..values.len()).step_by(block) {
        for offset in 0..stride {
            let start = base + offset;
            for (x, slot) in line.iter_mut().enumerate() {
                *slot = values[start + x * stride];
            }
            for (k, slot) in out.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (x, &v) in line.iter().enumerate() {
                    acc += v * twiddle[(x * k) % n];
                }
                *slot = if inverse { acc * scale } else { acc };
            }
            for (k, &v) in out.iter().enumerate() {
                values[start + k * stride] = v;
            }
        }
    }
}

/// Forward transform `f -> f̂`.
pub fn fourier(f: &Signal) -> SpectralSignal {
    let group = f.group().clone();
    let mut coeffs = f.values().to_vec();
    for axis in 0..group.factors().len() {
        transform_axis(&mut coeffs, group.factors(), axis, false);
    }
    SpectralSignal::from_coeffs_unchecked(group, coeffs)
}

/// Inverse transform `f̂ -> f`; exact inverse of [`fourier`] up to rounding.
pub fn inverse_fourier(spectrum: &SpectralSignal) -> Signal {
    let group = spectrum.group().clone();
    let mut values = spectrum.coeffs().to_vec();
    for axis in 0..group.factors().len() {
        transform_axis(&mut values, group.factors(), axis, true);
    }
    Signal::from_values_unchecked(group, values)
}

/// Circular convolution `(f * g)(x) = sum_y f(y) g(x - y)`, computed
/// spectrally via the convolution theorem `(f * g)^ = f̂ · ĝ`.
pub fn convolve(f: &Signal, g: &Signal) -> Result<Signal> {
    if f.group() != g.group() {
        return Err(Error::GroupMismatch {
            expected: f.group().to_string(),
            found: g.group().to_string(),
        });
    }
    let product = fourier(f).pointwise_mul(&fourier(g))?;
    Ok(inverse_fourier(&product))
}

/// Convolution of a signal with a filter given in spectral form; saves the
/// forward transform of the filter.
pub fn convolve_spectral(f: &Signal, filter_hat: &SpectralSignal) -> Result<Signal> {
    let product = fourier(f).pointwise_mul(filter_hat)?;
    Ok(inverse_fourier(&product))
}

/// `|f * filter|^2` without materializing the time-domain result, via
/// Plancherel on the pointwise product.
pub fn filtered_energy(f_hat: &SpectralSignal, filter_hat: &SpectralSignal) -> Result<f64> {
    Ok(f_hat.pointwise_mul(filter_hat)?.norm_sq())
}
