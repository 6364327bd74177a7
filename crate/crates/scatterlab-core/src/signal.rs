//! Complex-valued signals on a finite abelian group and their spectra.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::group::{DualElement, GroupElement, GroupSpec};
use crate::sums;

/// A function `G -> C`, stored per group element in row-major index order.
///
/// Norms are taken with respect to counting measure on `G`:
/// `|f|^2 = sum_x |f(x)|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    group: GroupSpec,
    values: Vec<Complex64>,
}

/// A function `Ĝ -> C`, stored per dual element in row-major index order.
///
/// Norms use the dual measure with point mass `1/#G`:
/// `|F|^2 = (1/#G) sum_xi |F(xi)|^2`, so the Fourier transform is unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignal {
    group: GroupSpec,
    coeffs: Vec<Complex64>,
}

fn check_values(group: &GroupSpec, values: &[Complex64]) -> Result<()> {
    if values.len() != group.order() {
        return Err(Error::DimensionMismatch {
            expected: group.order(),
            found: values.len(),
        });
    }
    for (i, z) in values.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

impl Signal {
    pub fn from_values(group: GroupSpec, values: Vec<Complex64>) -> Result<Self> {
        check_values(&group, &values)?;
        Ok(Signal { group, values })
    }

    /// All-zero signal.
    pub fn zero(group: GroupSpec) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); group.order()];
        Signal { group, values }
    }

    /// Point mass at a group element.
    pub fn delta(group: GroupSpec, at: &GroupElement) -> Result<Self> {
        let idx = group.index_of(at)?;
        let mut values = vec![Complex64::new(0.0, 0.0); group.order()];
        values[idx] = Complex64::new(1.0, 0.0);
        Ok(Signal { group, values })
    }

    /// Constant signal with the given value.
    pub fn constant(group: GroupSpec, value: Complex64) -> Self {
        let values = vec![value; group.order()];
        Signal { group, values }
    }

    /// The character indexed by `freq`, as a signal.
    pub fn character(group: GroupSpec, freq: &DualElement) -> Result<Self> {
        group.index_of(freq)?;
        let values = group
            .elements()
            .map(|x| group.character(freq, &x))
            .collect();
        Ok(Signal { group, values })
    }

    /// Random signal with independent standard-normal real and imaginary
    /// parts.
    pub fn random<R: Rng + ?Sized>(group: GroupSpec, rng: &mut R) -> Self {
        let values = (0..group.order())
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Signal { group, values }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value_at(&self, e: &GroupElement) -> Result<Complex64> {
        Ok(self.values[self.group.index_of(e)?])
    }

    /// Squared norm under counting measure.
    pub fn norm_sq(&self) -> f64 {
        sums::norm_sq(&self.values)
    }

    /// L1 norm under counting measure.
    pub fn norm_l1(&self) -> f64 {
        let abs: Vec<f64> = self.values.iter().map(|z| z.norm()).collect();
        sums::pairwise_sum(&abs)
    }

    /// Pointwise modulus, `x -> |f(x)|`.
    pub fn modulus(&self) -> Signal {
        let values = self
            .values
            .iter()
            .map(|z| Complex64::new(z.norm(), 0.0))
            .collect();
        Signal {
            group: self.group.clone(),
            values,
        }
    }

    pub(crate) fn from_values_unchecked(group: GroupSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), group.order());
        Signal { group, values }
    }
}

impl SpectralSignal {
    pub fn from_coeffs(group: GroupSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        check_values(&group, &coeffs)?;
        Ok(SpectralSignal { group, coeffs })
    }

    pub fn zero(group: GroupSpec) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); group.order()];
        SpectralSignal { group, coeffs }
    }

    /// Indicator of a dual subset.
    pub fn indicator(set: &crate::group::FrequencySet) -> Self {
        let group = set.group().clone();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); group.order()];
        for idx in set.indices() {
            coeffs[idx] = Complex64::new(1.0, 0.0);
        }
        SpectralSignal { group, coeffs }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff_at(&self, xi: &DualElement) -> Result<Complex64> {
        Ok(self.coeffs[self.group.index_of(xi)?])
    }

    /// Squared norm under the dual measure (point mass `1/#G`).
    pub fn norm_sq(&self) -> f64 {
        sums::norm_sq(&self.coeffs) / self.group.order() as f64
    }

    /// Pointwise product, the spectral side of convolution.
    pub fn pointwise_mul(&self, other: &SpectralSignal) -> Result<SpectralSignal> {
        if self.group != other.group {
            return Err(Error::GroupMismatch {
                expected: self.group.to_string(),
                found: other.group.to_string(),
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .collect();
        Ok(SpectralSignal {
            group: self.group.clone(),
            coeffs,
        })
    }

    pub(crate) fn from_coeffs_unchecked(group: GroupSpec, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), group.order());
        SpectralSignal { group, coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn from_values_validates_length_and_finiteness() {
        let g = GroupSpec::cyclic(4).unwrap();
        assert!(matches!(
            Signal::from_values(g.clone(), vec![Complex64::new(1.0, 0.0); 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut vals = vec![Complex64::new(0.0, 0.0); 4];
        vals[2] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            Signal::from_values(g, vals),
            Err(Error::NonFinite(2))
        ));
    }

    #[test]
    fn norms_follow_the_measure_conventions() {
        let g = GroupSpec::cyclic(4).unwrap();
        let f = Signal::constant(g.clone(), Complex64::new(1.0, 0.0));
        assert_eq!(f.norm_sq(), 4.0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 4];
        coeffs[0] = Complex64::new(4.0, 0.0);
        let spec = SpectralSignal::from_coeffs(g, coeffs).unwrap();
        assert_eq!(spec.norm_sq(), 4.0);
    }

    #[test]
    fn random_signal_is_seed_deterministic() {
        let g = GroupSpec::cyclic(16).unwrap();
        let a = Signal::random(g.clone(), &mut ChaCha8Rng::seed_from_u64(9));
        let b = Signal::random(g, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn modulus_is_pointwise_abs() {
        let g = GroupSpec::cyclic(2).unwrap();
        let f = Signal::from_values(
            g,
            vec![Complex64::new(3.0, 4.0), Complex64::new(0.0, -2.0)],
        )
        .unwrap();
        let m = f.modulus();
        assert_eq!(m.values()[0], Complex64::new(5.0, 0.0));
        assert_eq!(m.values()[1], Complex64::new(2.0, 0.0));
    }
}
