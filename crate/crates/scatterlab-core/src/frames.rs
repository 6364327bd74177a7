//! Semi-discrete convolution frames: one output (low-pass) filter `chi` plus
//! a family of high-pass filters `psi_1, ..., psi_m`, stored spectrally.
//!
//! The family is a Parseval frame exactly when the Littlewood-Paley sum
//! `|chi_hat(xi)|^2 + sum_j |psi_hat_j(xi)|^2` equals 1 at every frequency;
//! the audit measures the worst deviation from that identity, the thresholded
//! spectral supports, and the frequency gap (the dual region where every
//! high-pass filter vanishes).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fourier::inverse_fourier;
use crate::group::{FrequencySet, GroupSpec};
use crate::signal::{Signal, SpectralSignal};

/// Worst-case deviation of the Littlewood-Paley sum from 1 accepted in
/// Parseval mode.
pub const PARSEVAL_TOL: f64 = 1e-9;
/// Largest Littlewood-Paley excess over 1 accepted in sub-Parseval mode.
pub const SUB_PARSEVAL_EXCESS_TOL: f64 = 1e-12;
/// Default magnitude below which a spectral coefficient counts as zero when
/// computing supports.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-12;

/// How strictly a bank is required to respect the frame condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameMode {
    /// Littlewood-Paley sum identically 1 (tight frame).
    Parseval,
    /// Littlewood-Paley sum at most 1 (energy non-increasing).
    SubParseval,
}

/// A filter bank in spectral representation.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    group: GroupSpec,
    chi_hat: SpectralSignal,
    psi_hats: Vec<SpectralSignal>,
    support_threshold: f64,
}

/// Facts established by auditing a bank.
#[derive(Debug, Clone)]
pub struct FrameAudit {
    /// `max_xi | LP(xi) - 1 |`.
    pub lp_deficiency: f64,
    /// `max_xi max(LP(xi) - 1, 0)`.
    pub lp_excess: f64,
    /// Frequency gap: dual minus the union of high-pass supports.
    pub gap: FrequencySet,
    /// Largest high-pass support size `S`.
    pub max_support: usize,
    /// Thresholded support of each high-pass filter, in bank order.
    pub per_filter_supports: Vec<FrequencySet>,
    /// Whether every high-pass filter vanishes at the trivial character.
    pub high_pass_ok: bool,
    /// `max_{xi in gap} | |chi_hat(xi)| - 1 |` (0 when the gap is empty).
    pub chi_gap_deviation: f64,
}

impl FrameAudit {
    /// Whether the bank passes as a Parseval frame with a low-pass output
    /// filter.
    pub fn is_parseval(&self) -> bool {
        self.lp_deficiency <= PARSEVAL_TOL
            && self.high_pass_ok
            && self.chi_gap_deviation <= PARSEVAL_TOL
    }

    /// Mode the bank qualifies for, if any.
    pub fn mode(&self) -> Option<FrameMode> {
        if self.is_parseval() {
            Some(FrameMode::Parseval)
        } else if self.lp_excess <= SUB_PARSEVAL_EXCESS_TOL && self.high_pass_ok {
            Some(FrameMode::SubParseval)
        } else {
            None
        }
    }

    /// Errors unless the audit satisfies the requested mode.
    pub fn require(&self, mode: FrameMode) -> Result<()> {
        if !self.high_pass_ok {
            return Err(Error::FrameViolation(
                "a high-pass filter does not vanish at the trivial character".into(),
            ));
        }
        match mode {
            FrameMode::Parseval => {
                if self.lp_deficiency > PARSEVAL_TOL {
                    return Err(Error::FrameViolation(format!(
                        "Littlewood-Paley deficiency {:.3e} exceeds {PARSEVAL_TOL:.0e}",
                        self.lp_deficiency
                    )));
                }
                if self.chi_gap_deviation > PARSEVAL_TOL {
                    return Err(Error::FrameViolation(format!(
                        "|chi_hat| deviates from 1 on the frequency gap by {:.3e}",
                        self.chi_gap_deviation
                    )));
                }
            }
            FrameMode::SubParseval => {
                if self.lp_excess > SUB_PARSEVAL_EXCESS_TOL {
                    return Err(Error::FrameViolation(format!(
                        "Littlewood-Paley excess {:.3e} exceeds {SUB_PARSEVAL_EXCESS_TOL:.0e}",
                        self.lp_excess
                    )));
                }
            }
        }
        Ok(())
    }
}

impl FilterBank {
    /// Assembles a bank from spectral filters; validates group consistency
    /// and finiteness, nothing else (use [`FilterBank::audit`] for the frame
    /// conditions).
    pub fn new(
        chi_hat: SpectralSignal,
        psi_hats: Vec<SpectralSignal>,
        support_threshold: f64,
    ) -> Result<Self> {
        let group = chi_hat.group().clone();
        for psi in &psi_hats {
            if psi.group() != &group {
                return Err(Error::GroupMismatch {
                    expected: group.to_string(),
                    found: psi.group().to_string(),
                });
            }
        }
        if !(support_threshold >= 0.0 && support_threshold.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "support threshold must be a nonnegative finite number, got {support_threshold}"
            )));
        }
        Ok(FilterBank {
            group,
            chi_hat,
            psi_hats,
            support_threshold,
        })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn chi_hat(&self) -> &SpectralSignal {
        &self.chi_hat
    }

    pub fn psi_hats(&self) -> &[SpectralSignal] {
        &self.psi_hats
    }

    /// Number of high-pass filters.
    pub fn num_high_pass(&self) -> usize {
        self.psi_hats.len()
    }

    pub fn support_threshold(&self) -> f64 {
        self.support_threshold
    }

    /// Time-domain output filter, derived on demand.
    pub fn chi_time(&self) -> Signal {
        inverse_fourier(&self.chi_hat)
    }

    /// Time-domain high-pass filter `j`, derived on demand.
    pub fn psi_time(&self, j: usize) -> Signal {
        inverse_fourier(&self.psi_hats[j])
    }

    /// Littlewood-Paley sum per frequency.
    pub fn littlewood_paley_sum(&self) -> Vec<f64> {
        let mut lp: Vec<f64> = self.chi_hat.coeffs().iter().map(|c| c.norm_sqr()).collect();
        for psi in &self.psi_hats {
            for (slot, c) in lp.iter_mut().zip(psi.coeffs()) {
                *slot += c.norm_sqr();
            }
        }
        lp
    }

    fn support_of(&self, filter: &SpectralSignal) -> FrequencySet {
        let indices = filter
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > self.support_threshold)
            .map(|(i, _)| i);
        FrequencySet::from_indices(self.group.clone(), indices)
            .expect("enumerated indices are in range")
    }

    /// Audits the frame conditions; never fails, violations are reported in
    /// the returned facts.
    pub fn audit(&self) -> FrameAudit {
        let lp = self.littlewood_paley_sum();
        let lp_deficiency = lp.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let lp_excess = lp.iter().map(|v| (v - 1.0).max(0.0)).fold(0.0, f64::max);

        let per_filter_supports: Vec<FrequencySet> =
            self.psi_hats.iter().map(|p| self.support_of(p)).collect();
        let mut support_union = FrequencySet::empty(self.group.clone());
        for s in &per_filter_supports {
            support_union = support_union.union(s).expect("same group");
        }
        let gap = support_union.complement();
        let max_support = per_filter_supports.iter().map(|s| s.len()).max().unwrap_or(0);
        let high_pass_ok = gap.contains_index(0);

        let chi_gap_deviation = gap
            .indices()
            .map(|i| (self.chi_hat.coeffs()[i].norm() - 1.0).abs())
            .fold(0.0, f64::max);

        FrameAudit {
            lp_deficiency,
            lp_excess,
            gap,
            max_support,
            per_filter_supports,
            high_pass_ok,
            chi_gap_deviation,
        }
    }

    /// Audit that errors unless the bank satisfies `mode`.
    pub fn audit_strict(&self, mode: FrameMode) -> Result<FrameAudit> {
        let audit = self.audit();
        audit.require(mode)?;
        Ok(audit)
    }
}

/// Builds the exact Parseval bank whose filters are indicators of a partition
/// of the dual: `chi_hat = 1_low`, `psi_hat_j = 1_{band_j}`.
///
/// `low_set` and the bands must partition the dual group, the trivial
/// character must lie in `low_set`, and every band must be nonempty.
pub fn build_ideal_partition_bank(
    group: &GroupSpec,
    low_set: &FrequencySet,
    bands: &[FrequencySet],
) -> Result<FilterBank> {
    for set in std::iter::once(low_set).chain(bands.iter()) {
        if set.group() != group {
            return Err(Error::GroupMismatch {
                expected: group.to_string(),
                found: set.group().to_string(),
            });
        }
    }
    if !low_set.contains_index(0) {
        return Err(Error::InvalidArgument(
            "the trivial character must belong to the low-pass set".into(),
        ));
    }
    if let Some(j) = bands.iter().position(|b| b.is_empty()) {
        return Err(Error::InvalidArgument(format!("band {j} is empty")));
    }

    // Count how often each frequency is claimed; a partition claims each
    // exactly once.
    let mut claimed = vec![0usize; group.order()];
    for set in std::iter::once(low_set).chain(bands.iter()) {
        for idx in set.indices() {
            claimed[idx] += 1;
        }
    }
    let overlapping: Vec<usize> = (0..group.order()).filter(|&i| claimed[i] > 1).collect();
    let missing: Vec<usize> = (0..group.order()).filter(|&i| claimed[i] == 0).collect();
    if !overlapping.is_empty() || !missing.is_empty() {
        return Err(Error::InvalidPartition {
            overlapping,
            missing,
        });
    }

    let chi_hat = SpectralSignal::indicator(low_set);
    let psi_hats = bands.iter().map(SpectralSignal::indicator).collect();
    FilterBank::new(chi_hat, psi_hats, DEFAULT_SUPPORT_THRESHOLD)
}

/// Builds a random Parseval bank whose high-pass filters vanish on `gap`.
///
/// Draws `m` nonnegative spectral profiles off the gap, then normalizes them
/// pointwise so the Littlewood-Paley sum is exactly 1; `chi_hat` is the
/// indicator of the gap. Deterministic for a fixed seed.
pub fn build_random_bank(
    group: &GroupSpec,
    m: usize,
    gap: &FrequencySet,
    seed: u64,
) -> Result<FilterBank> {
    if gap.group() != group {
        return Err(Error::GroupMismatch {
            expected: group.to_string(),
            found: gap.group().to_string(),
        });
    }
    if !gap.contains_index(0) {
        return Err(Error::InvalidArgument(
            "the gap must contain the trivial character".into(),
        ));
    }
    if gap.len() == group.order() {
        return Err(Error::DegenerateBank(
            "gap covers the whole dual, leaving every high-pass filter zero".into(),
        ));
    }
    if m == 0 {
        return Err(Error::DegenerateBank(
            "cannot satisfy the Littlewood-Paley condition off the gap with zero high-pass filters"
                .into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = group.order();
    let mut profiles = vec![vec![0.0f64; order]; m];
    for xi in 0..order {
        if gap.contains_index(xi) {
            continue;
        }
        // Bounded away from zero so the pointwise normalization is well
        // conditioned.
        for profile in profiles.iter_mut() {
            profile[xi] = 0.1 + rng.gen::<f64>();
        }
        let scale = profiles.iter().map(|p| p[xi] * p[xi]).sum::<f64>().sqrt();
        for profile in profiles.iter_mut() {
            profile[xi] /= scale;
        }
    }

    let chi_hat = SpectralSignal::indicator(gap);
    let psi_hats = profiles
        .into_iter()
        .map(|p| {
            let coeffs = p.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
            SpectralSignal::from_coeffs_unchecked(group.clone(), coeffs)
        })
        .collect();
    FilterBank::new(chi_hat, psi_hats, DEFAULT_SUPPORT_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::convolve_spectral;
    use rand::SeedableRng;

    fn singleton_partition_bank(n: usize) -> FilterBank {
        let g = GroupSpec::cyclic(n).unwrap();
        let low = FrequencySet::trivial(g.clone());
        let bands: Vec<FrequencySet> = (1..n)
            .map(|k| FrequencySet::from_indices(g.clone(), [k]).unwrap())
            .collect();
        build_ideal_partition_bank(&g, &low, &bands).unwrap()
    }

    #[test]
    fn singleton_partition_on_z8_has_unit_supports() {
        let bank = singleton_partition_bank(8);
        assert_eq!(bank.num_high_pass(), 7);
        let audit = bank.audit();
        assert_eq!(audit.max_support, 1);
        assert_eq!(audit.gap.len(), 1);
        assert!(audit.is_parseval());
        assert_eq!(audit.lp_deficiency, 0.0);
    }

    #[test]
    fn overlapping_bands_are_rejected_with_the_overlap_listed() {
        // low = {0, 1, 7}, bands {2, 3, 10, 11} and {4, 9, 10, ...}: 10 is
        // claimed twice, 5..=8 never.
        let g = GroupSpec::cyclic(12).unwrap();
        let low = FrequencySet::from_indices(g.clone(), [0, 1, 11]).unwrap();
        let b1 = FrequencySet::from_indices(g.clone(), [2, 3, 9, 10]).unwrap();
        let b2 = FrequencySet::from_indices(g.clone(), [4, 9, 10]).unwrap();
        let err = build_ideal_partition_bank(&g, &low, &[b1, b2]).unwrap_err();
        match err {
            Error::InvalidPartition {
                overlapping,
                missing,
            } => {
                assert_eq!(overlapping, vec![9, 10]);
                assert_eq!(missing, vec![5, 6, 7, 8]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ideal_partition_on_z12_is_exactly_tight() {
        let g = GroupSpec::cyclic(12).unwrap();
        let low = FrequencySet::from_indices(g.clone(), [0, 1, 11]).unwrap();
        let band1 = FrequencySet::from_indices(g.clone(), [2, 3, 4, 8, 9, 10]).unwrap();
        let band2 = FrequencySet::from_indices(g.clone(), [5, 6, 7]).unwrap();
        let bank = build_ideal_partition_bank(&g, &low, &[band1, band2]).unwrap();
        for v in bank.littlewood_paley_sum() {
            assert_eq!(v, 1.0);
        }
        let audit = bank.audit();
        assert_eq!(audit.max_support, 6);
        assert_eq!(audit.gap, low);
        assert!(audit.max_support <= g.order() - audit.gap.len());
    }

    #[test]
    fn trivial_character_must_be_low_pass() {
        let g = GroupSpec::cyclic(4).unwrap();
        let low = FrequencySet::from_indices(g.clone(), [1]).unwrap();
        let band = FrequencySet::from_indices(g.clone(), [0, 2, 3]).unwrap();
        assert!(build_ideal_partition_bank(&g, &low, &[band]).is_err());
    }

    #[test]
    fn random_bank_is_tight_and_deterministic() {
        let g = GroupSpec::cyclic(16).unwrap();
        let gap = FrequencySet::trivial(g.clone());
        let bank = build_random_bank(&g, 3, &gap, 7).unwrap();
        let audit = bank.audit();
        assert!(audit.lp_deficiency <= 1e-12, "{}", audit.lp_deficiency);
        assert!(audit.is_parseval());
        assert!(gap.is_subset(&audit.gap));

        let again = build_random_bank(&g, 3, &gap, 7).unwrap();
        assert_eq!(bank, again);
        let other_seed = build_random_bank(&g, 3, &gap, 8).unwrap();
        assert_ne!(bank, other_seed);
    }

    #[test]
    fn degenerate_random_banks_are_rejected() {
        let g = GroupSpec::cyclic(8).unwrap();
        let full = FrequencySet::full(g.clone());
        assert!(matches!(
            build_random_bank(&g, 2, &full, 1),
            Err(Error::DegenerateBank(_))
        ));
        let gap = FrequencySet::trivial(g.clone());
        assert!(matches!(
            build_random_bank(&g, 0, &gap, 1),
            Err(Error::DegenerateBank(_))
        ));
        let off_center = FrequencySet::from_indices(g.clone(), [1]).unwrap();
        assert!(build_random_bank(&g, 2, &off_center, 1).is_err());
    }

    #[test]
    fn high_pass_violation_is_flagged() {
        let g = GroupSpec::cyclic(4).unwrap();
        // psi_hat does not vanish at the trivial character.
        let chi = SpectralSignal::from_coeffs(
            g.clone(),
            vec![
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let psi = SpectralSignal::from_coeffs(
            g.clone(),
            vec![
                Complex64::new(0.8, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        )
        .unwrap();
        let bank = FilterBank::new(chi, vec![psi], DEFAULT_SUPPORT_THRESHOLD).unwrap();
        let audit = bank.audit();
        assert!(!audit.high_pass_ok);
        assert!(audit.require(FrameMode::SubParseval).is_err());
        assert!(audit.require(FrameMode::Parseval).is_err());
    }

    #[test]
    fn analysis_preserves_energy_for_parseval_banks() {
        let g = GroupSpec::new(vec![4, 3]).unwrap();
        let gap = FrequencySet::trivial(g.clone());
        let bank = build_random_bank(&g, 4, &gap, 21).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let f = Signal::random(g.clone(), &mut rng);
            let mut total = convolve_spectral(&f, bank.chi_hat()).unwrap().norm_sq();
            for psi in bank.psi_hats() {
                total += convolve_spectral(&f, psi).unwrap().norm_sq();
            }
            let rel = (total - f.norm_sq()).abs() / f.norm_sq();
            assert!(rel < 1e-9, "analysis energy defect {rel}");
        }
    }

    #[test]
    fn chi_is_unimodular_on_the_gap_in_parseval_mode() {
        let g = GroupSpec::cyclic(12).unwrap();
        let gap = FrequencySet::from_indices(g.clone(), [0, 1, 11]).unwrap();
        let bank = build_random_bank(&g, 2, &gap, 3).unwrap();
        let audit = bank.audit();
        assert!(audit.chi_gap_deviation <= 1e-9);
        assert!(audit.require(FrameMode::Parseval).is_ok());
    }
}
