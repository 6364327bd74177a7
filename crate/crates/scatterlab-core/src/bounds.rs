//! Theoretical energy-decay bounds and certification of measured ledgers.
//!
//! Three routes produce a per-depth decay curve `N -> base^(N-1) * prefactor`
//! that dominates the propagated energy `W_N`:
//!
//! - the eigenvector-witness route ([`corollary1_bound`]): for layers with a
//!   pointwise-nonnegative nonlinearity and an eigenpair `A*A eta = lambda
//!   eta` with `sqrt(lambda) * eta` bounded below by `sqrt(C_A) > 0`, the
//!   base is `1 - C_M * C_A`, where `C_M` is the smallest positive point
//!   mass of the underlying measure (1 for counting measure);
//! - the spectral-support route ([`thm3_bound`]): for a Parseval convolution
//!   bank on a finite group with high-pass supports of size at most `S`, the
//!   base is `1 - 1/S`;
//! - the covering route ([`thm4_bound`]): for a symmetric set `Gamma`
//!   containing the trivial character with `Gamma^8` inside the frequency
//!   gap, the base is `alpha = 1 - mu(Gamma^2)^2 / (n * mu(Gamma^4)^2)`
//!   with `n` a covering number of the supports by translates of `Gamma^2`.
//!
//! Covering numbers come in three flavors: an exact branch-and-bound count
//! (small supports only), a greedy count, and the sumset-ratio estimate
//! `floor(#(Gamma + supp) / #Gamma)`. Any count at least the true minimum
//! yields a valid (possibly weaker) curve, so the reported curve uses the
//! smallest available valid count.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extractor::{EnergyLedger, LayerSpec, Nonlinearity, OperatorKind};
use crate::fourier::{filtered_energy, fourier};
use crate::frames::FilterBank;
use crate::group::FrequencySet;
use crate::signal::Signal;
use crate::sums;

/// Relative certification slack: a measured `W_N` may exceed its curve by at
/// most this fraction of the input energy.
pub const CERT_SLACK_REL: f64 = 1e-9;

/// Residual accepted when validating an eigenpair.
pub const WITNESS_RESIDUAL_TOL: f64 = 1e-9;

/// Which bound produced an entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremKind {
    /// Eigenvector-witness route (generic measure-space mode).
    Cor1,
    /// Spectral-support route for finite-group convolution banks.
    Thm3,
    /// Covering-number route.
    Thm4,
}

impl std::fmt::Display for TheoremKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TheoremKind::Cor1 => write!(f, "cor1"),
            TheoremKind::Thm3 => write!(f, "thm3"),
            TheoremKind::Thm4 => write!(f, "thm4"),
        }
    }
}

/// An eigenpair of `A* A` used as a decay witness.
#[derive(Debug, Clone)]
pub struct EigenWitness {
    lambda: f64,
    eta: Vec<Complex64>,
    source: WitnessSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessSource {
    ConstantFunction,
    Explicit,
}

impl EigenWitness {
    /// Builds a witness from an eigenvalue in `[0,1]` and a unit-norm vector.
    pub fn new(lambda: f64, eta: Vec<Complex64>, source: WitnessSource) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "witness eigenvalue {lambda} outside [0, 1]"
            )));
        }
        let norm = sums::norm_sq(&eta).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "witness vector norm {norm} is not 1"
            )));
        }
        Ok(EigenWitness { lambda, eta, source })
    }

    /// The constant unit vector `eta = (1/sqrt(d), ..., 1/sqrt(d))` with the
    /// eigenvalue read off from `A* A eta`.
    pub fn constant_for(a: &OperatorKind) -> Result<Self> {
        let dim = a.input_dim();
        let eta = vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim];
        let image = a.apply_adjoint(&a.apply(&eta)?)?;
        // Rayleigh quotient; `verify` confirms eta is an actual eigenvector.
        let lambda: f64 = image
            .iter()
            .zip(&eta)
            .map(|(v, e)| (v * e.conj()).re)
            .sum();
        let witness = EigenWitness::new(lambda.clamp(0.0, 1.0), eta, WitnessSource::ConstantFunction)?;
        witness.verify(a)?;
        Ok(witness)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> &[Complex64] {
        &self.eta
    }

    pub fn source(&self) -> WitnessSource {
        self.source
    }

    /// Checks `|A* A eta - lambda eta| <= tol` against a concrete operator.
    pub fn verify(&self, a: &OperatorKind) -> Result<()> {
        let image = a.apply_adjoint(&a.apply(&self.eta)?)?;
        let residual: Vec<Complex64> = image
            .iter()
            .zip(&self.eta)
            .map(|(v, e)| v - e * self.lambda)
            .collect();
        let res = sums::norm_sq(&residual).sqrt();
        if res > WITNESS_RESIDUAL_TOL {
            return Err(Error::HypothesisViolation(format!(
                "witness eigenpair residual {res:.3e} exceeds {WITNESS_RESIDUAL_TOL:.0e}"
            )));
        }
        Ok(())
    }
}

/// Covering counts of the high-pass supports by translates of a fixed dual
/// set, maximized over the filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoveringNumbers {
    /// Minimal cover size from exhaustive branch-and-bound; absent when a
    /// support exceeds the exact-search limit or the node budget was hit.
    pub n_exact: Option<usize>,
    /// Greedy cover size (valid upper bound on the minimum).
    pub n_greedy: usize,
    /// Sumset-ratio estimate `floor(#(Gamma + supp) / #Gamma)`.
    pub n_ruzsa: usize,
    /// True when an exact search was aborted by the node budget.
    pub exact_degraded: bool,
}

impl CoveringNumbers {
    /// Smallest available count that still upper-bounds usage in a valid
    /// curve.
    pub fn best(&self) -> usize {
        self.n_exact.unwrap_or_else(|| self.n_greedy.min(self.n_ruzsa))
    }
}

/// Limits for the exact covering search. The search is budgeted in explored
/// nodes rather than wall time so that results stay deterministic.
#[derive(Debug, Clone, Copy)]
pub struct CoveringConfig {
    /// Largest support size for which the exact search is attempted.
    pub exact_support_limit: usize,
    /// Branch-and-bound node budget before degrading to greedy.
    pub exact_node_budget: u64,
}

impl Default for CoveringConfig {
    fn default() -> Self {
        CoveringConfig {
            exact_support_limit: 20,
            exact_node_budget: 1_000_000,
        }
    }
}

/// Constants backing a bound entry, for reporting.
#[derive(Debug, Clone, Default)]
pub struct BoundConstants {
    pub group_order: Option<usize>,
    /// Largest high-pass support size `S`.
    pub max_support: Option<usize>,
    /// The always-valid fallback `#G - #gap`.
    pub support_alternate: Option<usize>,
    pub gap_size: Option<usize>,
    pub gamma: Option<FrequencySet>,
    pub gamma2_size: Option<usize>,
    pub gamma4_size: Option<usize>,
    pub covering: Option<CoveringNumbers>,
    pub alpha_exact: Option<f64>,
    pub alpha_greedy: Option<f64>,
    pub alpha_ruzsa: Option<f64>,
    /// Smallest positive point mass `C_M`.
    pub c_measure: Option<f64>,
    /// Pointwise witness constant `C_A`.
    pub c_witness: Option<f64>,
    pub lambda: Option<f64>,
}

/// One theoretical decay curve `N -> base^(N-1) * prefactor` valid for
/// `W_N`, `N >= 1`.
#[derive(Debug, Clone)]
pub struct BoundEntry {
    pub theorem: TheoremKind,
    pub base: f64,
    pub prefactor: f64,
    /// `|f|^2` of the certified input, recorded for metadata checks.
    pub input_energy: f64,
    /// Depth the entry was computed for.
    pub depth: usize,
    pub constants: BoundConstants,
}

impl BoundEntry {
    /// Curve value at depth `n >= 1`.
    pub fn curve(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        self.base.powi((n - 1) as i32) * self.prefactor
    }
}

/// Collection of bound entries for one propagation run.
#[derive(Debug, Clone, Default)]
pub struct BoundReport {
    pub entries: Vec<BoundEntry>,
    /// Bounds that could not be emitted, with the reason.
    pub skipped: Vec<String>,
}

impl BoundReport {
    pub fn new() -> Self {
        BoundReport::default()
    }
}

/// One certified (theorem, depth) pair.
#[derive(Debug, Clone)]
pub struct CertRow {
    pub theorem: TheoremKind,
    pub layer: usize,
    pub bound_value: f64,
    pub measured: f64,
    /// `bound_value - measured`; certification requires this to be at least
    /// `-CERT_SLACK_REL * |f|^2`.
    pub margin: f64,
    pub pass: bool,
}

/// Outcome of certifying a ledger against a report.
#[derive(Debug, Clone)]
pub struct CertificationResult {
    pub rows: Vec<CertRow>,
    pub passed: bool,
    /// Absolute slack used, `CERT_SLACK_REL * |f|^2`.
    pub slack: f64,
}

impl CertificationResult {
    pub fn failures(&self) -> impl Iterator<Item = &CertRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

fn bank_prefactor(bank: &FilterBank, f: &Signal) -> Result<(f64, f64)> {
    let f_hat = fourier(f);
    let low_energy = filtered_energy(&f_hat, bank.chi_hat())?;
    Ok((f.norm_sq(), f.norm_sq() - low_energy))
}

/// Decay curve from an eigenvector witness.
///
/// Requires every nonlinearity in the first `depth` layers to be the
/// pointwise modulus (states reaching the output operators must be
/// nonnegative) and the witness to be a verified eigenpair of every output
/// operator at depths `1..=depth` whose scaled vector `sqrt(lambda) * eta`
/// is pointwise positive.
pub fn corollary1_bound(
    layers: &[LayerSpec],
    input: &[Complex64],
    depth: usize,
    witness: &EigenWitness,
    c_measure: f64,
) -> Result<BoundEntry> {
    if layers.len() < depth + 1 {
        return Err(Error::InvalidArgument(format!(
            "stack has {} layers but depth {depth} needs {}",
            layers.len(),
            depth + 1
        )));
    }
    if !(c_measure > 0.0 && c_measure.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "smallest point mass must be positive, got {c_measure}"
        )));
    }
    for (l, layer) in layers.iter().enumerate().take(depth + 1) {
        if l < depth && layer.sigma != Nonlinearity::Modulus {
            return Err(Error::HypothesisViolation(format!(
                "layer {l} uses {:?}; the witness route needs the pointwise modulus",
                layer.sigma
            )));
        }
        if l >= 1 {
            witness.verify(&layer.output_op)?;
        }
    }

    let sqrt_lambda = witness.lambda().sqrt();
    let mut min_scaled = f64::INFINITY;
    for (i, e) in witness.eta().iter().enumerate() {
        if e.im.abs() > 1e-12 {
            return Err(Error::HypothesisViolation(format!(
                "witness vector has a non-real component at position {i}"
            )));
        }
        min_scaled = min_scaled.min(sqrt_lambda * e.re);
    }
    if !(min_scaled > 0.0) {
        return Err(Error::HypothesisViolation(format!(
            "pointwise minimum of sqrt(lambda) * eta is {min_scaled}; no positive witness constant exists"
        )));
    }
    let c_witness = min_scaled * min_scaled;
    let base = 1.0 - c_measure * c_witness;
    if !(0.0..=1.0).contains(&base) {
        return Err(Error::InvalidArgument(format!(
            "decay base {base} outside [0, 1]; check the point-mass constant"
        )));
    }

    let input_energy = sums::norm_sq(input);
    let out0 = layers[0].output_op.apply(input)?;
    let prefactor = input_energy - sums::norm_sq(&out0);

    Ok(BoundEntry {
        theorem: TheoremKind::Cor1,
        base,
        prefactor,
        input_energy,
        depth,
        constants: BoundConstants {
            c_measure: Some(c_measure),
            c_witness: Some(c_witness),
            lambda: Some(witness.lambda()),
            ..BoundConstants::default()
        },
    })
}

/// Decay curve from the largest high-pass spectral support.
pub fn thm3_bound(bank: &FilterBank, f: &Signal, depth: usize) -> Result<BoundEntry> {
    if f.group() != bank.group() {
        return Err(Error::GroupMismatch {
            expected: bank.group().to_string(),
            found: f.group().to_string(),
        });
    }
    let audit = bank.audit();
    let s = audit.max_support;
    // S = 0 means the high-pass family is spectrally trivial: no energy
    // propagates at all and the zero curve is valid from depth 2 on.
    let base = if s == 0 { 0.0 } else { 1.0 - 1.0 / s as f64 };
    let (input_energy, prefactor) = bank_prefactor(bank, f)?;
    Ok(BoundEntry {
        theorem: TheoremKind::Thm3,
        base,
        prefactor,
        input_energy,
        depth,
        constants: BoundConstants {
            group_order: Some(bank.group().order()),
            max_support: Some(s),
            support_alternate: Some(bank.group().order() - audit.gap.len()),
            gap_size: Some(audit.gap.len()),
            ..BoundConstants::default()
        },
    })
}

/// Per-filter check of the single-step contraction behind the support route:
/// `| |f * psi| * chi |^2 >= |f * psi|^2 / #supp(psi_hat)`.
#[derive(Debug, Clone, Copy)]
pub struct FirstLayerCheck {
    pub filter_index: usize,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn first_layer_certificates(bank: &FilterBank, f: &Signal) -> Result<Vec<FirstLayerCheck>> {
    if f.group() != bank.group() {
        return Err(Error::GroupMismatch {
            expected: bank.group().to_string(),
            found: f.group().to_string(),
        });
    }
    let audit = bank.audit();
    let f_hat = fourier(f);
    let mut checks = Vec::with_capacity(bank.num_high_pass());
    for (j, psi_hat) in bank.psi_hats().iter().enumerate() {
        let conv = crate::fourier::inverse_fourier(&f_hat.pointwise_mul(psi_hat)?);
        let u = conv.modulus();
        let lhs = filtered_energy(&fourier(&u), bank.chi_hat())?;
        let support = audit.per_filter_supports[j].len();
        let rhs = if support == 0 {
            0.0
        } else {
            conv.norm_sq() / support as f64
        };
        checks.push(FirstLayerCheck {
            filter_index: j,
            lhs,
            rhs,
        });
    }
    Ok(checks)
}

fn validate_gamma(gamma: &FrequencySet, gap: &FrequencySet) -> Result<()> {
    if gamma.group() != gap.group() {
        return Err(Error::GroupMismatch {
            expected: gap.group().to_string(),
            found: gamma.group().to_string(),
        });
    }
    if !gamma.contains_index(0) {
        return Err(Error::InvalidArgument(
            "gamma must contain the trivial character".into(),
        ));
    }
    if !gamma.is_symmetric() {
        return Err(Error::InvalidArgument("gamma must be symmetric".into()));
    }
    // 0 in gamma makes gamma^k increasing in k, so checking intermediate
    // powers allows an early exit.
    let mut acc = gamma.clone();
    for _ in 0..7 {
        if !acc.is_subset(gap) {
            return Err(Error::InvalidArgument(format!(
                "gamma^8 is not contained in the frequency gap (gamma = {gamma})"
            )));
        }
        acc = acc.sumset(gamma).expect("same group");
    }
    if !acc.is_subset(gap) {
        return Err(Error::InvalidArgument(format!(
            "gamma^8 is not contained in the frequency gap (gamma = {gamma})"
        )));
    }
    Ok(())
}

fn gamma_is_valid(gamma: &FrequencySet, gap: &FrequencySet) -> bool {
    validate_gamma(gamma, gap).is_ok()
}

/// Symmetric orbits `{xi, -xi}` inside the gap, keyed and ordered by their
/// smallest index; the canonical insertion order for the greedy search.
fn symmetric_orbits(gap: &FrequencySet) -> Vec<Vec<usize>> {
    let group = gap.group();
    let mut orbits = Vec::new();
    for xi in gap.indices() {
        if xi == 0 {
            continue;
        }
        let neg = group.neg_index(xi);
        if neg < xi {
            continue; // orbit already seen under its smaller key
        }
        if !gap.contains_index(neg) {
            continue; // gamma must stay inside the gap
        }
        orbits.push(if neg == xi { vec![xi] } else { vec![xi, neg] });
    }
    orbits
}

/// All admissible symmetric neighborhoods of the trivial character whose
/// eighth sumset power stays inside the gap.
///
/// Small gaps (at most 16 frequencies) are searched exhaustively over all
/// symmetric subsets; larger gaps yield the chain of sets visited by the
/// greedy search, each prefix being admissible.
pub fn gamma_candidates(gap: &FrequencySet) -> Result<Vec<FrequencySet>> {
    if !gap.contains_index(0) {
        return Err(Error::InvalidArgument(
            "the frequency gap does not contain the trivial character, no gamma exists".into(),
        ));
    }
    let group = gap.group().clone();
    let orbits = symmetric_orbits(gap);
    let base = FrequencySet::trivial(group.clone());

    if gap.len() <= 16 {
        let mut candidates = Vec::new();
        for mask in 0..(1u32 << orbits.len()) {
            let mut indices = vec![0usize];
            for (k, orbit) in orbits.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    indices.extend_from_slice(orbit);
                }
            }
            let candidate = FrequencySet::from_indices(group.clone(), indices)?;
            if gamma_is_valid(&candidate, gap) {
                candidates.push(candidate);
            }
        }
        Ok(candidates)
    } else {
        let mut chain = vec![base.clone()];
        let mut current = base;
        for orbit in &orbits {
            let extended = current
                .union(&FrequencySet::from_indices(group.clone(), orbit.iter().copied())?)?;
            if gamma_is_valid(&extended, gap) {
                chain.push(extended.clone());
                current = extended;
            }
        }
        Ok(chain)
    }
}

/// Finds a symmetric neighborhood of the trivial character whose eighth
/// sumset power stays inside the gap, preferring larger sets. `{0}` is always
/// admissible, so this only fails when the gap misses the trivial character.
pub fn find_gamma(gap: &FrequencySet) -> Result<FrequencySet> {
    let candidates = gamma_candidates(gap)?;
    Ok(candidates
        .into_iter()
        .max_by(|a, b| {
            a.len().cmp(&b.len()).then_with(|| {
                // Deterministic tie-break: lexicographically smallest index set.
                let av: Vec<usize> = a.indices().collect();
                let bv: Vec<usize> = b.indices().collect();
                bv.cmp(&av)
            })
        })
        .expect("the trivial candidate always exists"))
}

/// Greedy cover of `support` by translates of `tile`; returns the translate
/// count. Ties prefer the smallest translate index.
fn greedy_cover(support: &FrequencySet, tile: &FrequencySet) -> usize {
    let group = support.group();
    let mut uncovered: std::collections::BTreeSet<usize> = support.indices().collect();
    let mut count = 0;
    while !uncovered.is_empty() {
        let mut best_c = 0;
        let mut best_cover = 0usize;
        for c in 0..group.order() {
            let cover = tile
                .indices()
                .filter(|&t| uncovered.contains(&group.add_indices(c, t)))
                .count();
            if cover > best_cover {
                best_cover = cover;
                best_c = c;
            }
        }
        debug_assert!(best_cover > 0, "a tile containing 0 always covers something");
        for t in tile.indices() {
            uncovered.remove(&group.add_indices(best_c, t));
        }
        count += 1;
        let _ = best_c;
    }
    count
}

/// Exact minimal cover of `support` by translates of `tile` via
/// branch-and-bound over the distinct intersection patterns. Returns `None`
/// when the node budget runs out.
fn exact_cover(support: &FrequencySet, tile: &FrequencySet, node_budget: u64) -> Option<usize> {
    let positions: Vec<usize> = support.indices().collect();
    let s = positions.len();
    if s == 0 {
        return Some(0);
    }
    if tile.len() == 1 {
        // Singleton tiles cover exactly one element per translate.
        return Some(s);
    }
    let group = support.group();
    let pos_of = |idx: usize| positions.binary_search(&idx).ok();

    // Distinct, non-dominated coverage patterns over all translates.
    let mut patterns: Vec<u32> = Vec::new();
    for c in 0..group.order() {
        let mut mask: u32 = 0;
        for t in tile.indices() {
            if let Some(p) = pos_of(group.add_indices(c, t)) {
                mask |= 1 << p;
            }
        }
        if mask != 0 {
            patterns.push(mask);
        }
    }
    patterns.sort_unstable();
    patterns.dedup();
    let all = patterns.clone();
    patterns.retain(|&m| !all.iter().any(|&o| o != m && o & m == m));

    // Candidates covering each element, for branching on the most
    // constrained element.
    let covering: Vec<Vec<u32>> = (0..s)
        .map(|p| {
            patterns
                .iter()
                .copied()
                .filter(|m| m & (1 << p) != 0)
                .collect()
        })
        .collect();
    let max_pattern = patterns.iter().map(|m| m.count_ones()).max().unwrap_or(1);

    let full: u32 = if s == 32 { u32::MAX } else { (1 << s) - 1 };
    let mut best = greedy_cover(support, tile);
    let mut nodes: u64 = 0;

    fn dfs(
        uncovered: u32,
        used: usize,
        best: &mut usize,
        covering: &[Vec<u32>],
        max_pattern: u32,
        nodes: &mut u64,
        budget: u64,
    ) -> bool {
        *nodes += 1;
        if *nodes > budget {
            return false;
        }
        if uncovered == 0 {
            *best = (*best).min(used);
            return true;
        }
        let lower = (uncovered.count_ones() as usize).div_ceil(max_pattern as usize);
        if used + lower >= *best {
            return true;
        }
        // Branch on the uncovered element with the fewest covering patterns.
        let element = (0..covering.len())
            .filter(|&p| uncovered & (1 << p) != 0)
            .min_by_key(|&p| covering[p].len())
            .expect("uncovered is nonzero");
        for &mask in &covering[element] {
            if !dfs(
                uncovered & !mask,
                used + 1,
                best,
                covering,
                max_pattern,
                nodes,
                budget,
            ) {
                return false;
            }
        }
        true
    }

    let completed = dfs(
        full,
        0,
        &mut best,
        &covering,
        max_pattern,
        &mut nodes,
        node_budget,
    );
    completed.then_some(best)
}

/// Covering counts of the given supports by translates of `gamma^2`,
/// maximized over the supports. The sumset-ratio estimate uses `gamma`
/// itself.
pub fn covering_numbers(
    supports: &[FrequencySet],
    gamma: &FrequencySet,
    cfg: &CoveringConfig,
) -> Result<CoveringNumbers> {
    if gamma.is_empty() || !gamma.contains_index(0) {
        return Err(Error::InvalidArgument(
            "gamma must contain the trivial character".into(),
        ));
    }
    for s in supports {
        if s.group() != gamma.group() {
            return Err(Error::GroupMismatch {
                expected: gamma.group().to_string(),
                found: s.group().to_string(),
            });
        }
    }
    let tile = gamma.power(2);

    let mut n_greedy = 0usize;
    let mut n_ruzsa = 0usize;
    let mut n_exact: Option<usize> = Some(0);
    let mut exact_degraded = false;

    for support in supports {
        n_greedy = n_greedy.max(greedy_cover(support, &tile));
        let grown = gamma.sumset(support)?;
        n_ruzsa = n_ruzsa.max(grown.len() / gamma.len());

        if support.len() > cfg.exact_support_limit && tile.len() > 1 {
            n_exact = None;
        } else if let Some(running) = n_exact {
            match exact_cover(support, &tile, cfg.exact_node_budget) {
                Some(n) => n_exact = Some(running.max(n)),
                None => {
                    n_exact = None;
                    exact_degraded = true;
                }
            }
        }
    }

    Ok(CoveringNumbers {
        n_exact,
        n_greedy,
        n_ruzsa,
        exact_degraded,
    })
}

fn alpha_from(ratio_sq: f64, n: usize) -> f64 {
    1.0 - ratio_sq / n as f64
}

/// Decay curve from the covering route. When `gamma` is not supplied, the
/// admissible candidate minimizing the resulting base is selected (ties go to
/// the smaller set).
pub fn thm4_bound(
    bank: &FilterBank,
    f: &Signal,
    depth: usize,
    gamma: Option<&FrequencySet>,
    cfg: &CoveringConfig,
) -> Result<BoundEntry> {
    if f.group() != bank.group() {
        return Err(Error::GroupMismatch {
            expected: bank.group().to_string(),
            found: f.group().to_string(),
        });
    }
    let audit = bank.audit();
    let supports = &audit.per_filter_supports;

    let gamma = match gamma {
        Some(g) => {
            validate_gamma(g, &audit.gap)?;
            g.clone()
        }
        None => {
            let mut best: Option<(f64, FrequencySet)> = None;
            for candidate in gamma_candidates(&audit.gap)? {
                let covering = covering_numbers(supports, &candidate, cfg)?;
                let g2 = candidate.power(2).len() as f64;
                let g4 = candidate.power(4).len() as f64;
                let ratio_sq = (g2 / g4) * (g2 / g4);
                let n = covering.best();
                let alpha = if n == 0 { 0.0 } else { alpha_from(ratio_sq, n) };
                let better = match &best {
                    None => true,
                    Some((best_alpha, best_set)) => {
                        alpha < *best_alpha
                            || (alpha == *best_alpha && candidate.len() < best_set.len())
                    }
                };
                if better {
                    best = Some((alpha, candidate));
                }
            }
            best.expect("the trivial candidate always exists").1
        }
    };

    let covering = covering_numbers(supports, &gamma, cfg)?;
    let gamma2 = gamma.power(2);
    let gamma4 = gamma.power(4);
    let ratio = gamma2.len() as f64 / gamma4.len() as f64;
    let ratio_sq = ratio * ratio;

    let n_best = covering.best();
    // n = 0 only for spectrally trivial high-pass families; same degeneracy
    // as S = 0 in the support route.
    let base = if n_best == 0 {
        0.0
    } else {
        alpha_from(ratio_sq, n_best)
    };
    let (input_energy, prefactor) = bank_prefactor(bank, f)?;

    Ok(BoundEntry {
        theorem: TheoremKind::Thm4,
        base,
        prefactor,
        input_energy,
        depth,
        constants: BoundConstants {
            group_order: Some(bank.group().order()),
            max_support: Some(audit.max_support),
            gap_size: Some(audit.gap.len()),
            gamma2_size: Some(gamma2.len()),
            gamma4_size: Some(gamma4.len()),
            gamma: Some(gamma),
            covering: Some(covering),
            alpha_exact: covering.n_exact.map(|n| alpha_from(ratio_sq, n)),
            alpha_greedy: (covering.n_greedy > 0).then(|| alpha_from(ratio_sq, covering.n_greedy)),
            alpha_ruzsa: (covering.n_ruzsa > 0).then(|| alpha_from(ratio_sq, covering.n_ruzsa)),
            ..BoundConstants::default()
        },
    })
}

/// Certifies a measured ledger against every curve in the report.
pub fn certify(ledger: &EnergyLedger, report: &BoundReport) -> Result<CertificationResult> {
    let slack = CERT_SLACK_REL * ledger.input_energy;
    let mut rows = Vec::new();
    for entry in &report.entries {
        let scale = ledger.input_energy.max(1.0);
        if (entry.input_energy - ledger.input_energy).abs() > 1e-12 * scale {
            return Err(Error::MetadataMismatch(format!(
                "entry {} was computed for input energy {}, ledger has {}",
                entry.theorem, entry.input_energy, ledger.input_energy
            )));
        }
        if entry.depth != ledger.depth() {
            return Err(Error::MetadataMismatch(format!(
                "entry {} was computed for depth {}, ledger has depth {}",
                entry.theorem,
                entry.depth,
                ledger.depth()
            )));
        }
        for n in 1..=entry.depth {
            let bound_value = entry.curve(n);
            let measured = ledger.propagated(n);
            let margin = bound_value - measured;
            rows.push(CertRow {
                theorem: entry.theorem,
                layer: n,
                bound_value,
                measured,
                margin,
                pass: margin >= -slack,
            });
        }
    }
    let passed = rows.iter().all(|r| r.pass);
    Ok(CertificationResult {
        rows,
        passed,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::{
        complete_to_parseval, propagate, propagate_signal, uniform_stack, PropagateOptions,
    };
    use crate::frames::{build_ideal_partition_bank, build_random_bank};
    use crate::group::GroupSpec;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mean_projector(d: usize) -> OperatorKind {
        OperatorKind::matrix(DMatrix::from_element(
            d,
            d,
            Complex64::new(1.0 / d as f64, 0.0),
        ))
    }

    fn z8_one_band_bank() -> FilterBank {
        let g = GroupSpec::cyclic(8).unwrap();
        let low = FrequencySet::trivial(g.clone());
        let band = FrequencySet::from_indices(g.clone(), 1..8).unwrap();
        build_ideal_partition_bank(&g, &low, &[band]).unwrap()
    }

    #[test]
    fn constant_witness_of_mean_projector_has_unit_eigenvalue() {
        let a = mean_projector(6);
        let w = EigenWitness::constant_for(&a).unwrap();
        assert!((w.lambda() - 1.0).abs() < 1e-12);
        assert_eq!(w.source(), WitnessSource::ConstantFunction);
    }

    #[test]
    fn witness_validation_rejects_fake_eigenpairs() {
        let g = GroupSpec::cyclic(4).unwrap();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 4];
        coeffs[1] = Complex64::new(1.0, 0.0);
        let a = OperatorKind::convolution(
            crate::signal::SpectralSignal::from_coeffs(g, coeffs).unwrap(),
        );
        // Constant vector is *not* an eigenvector of this band-pass operator
        // with eigenvalue 1.
        let eta = vec![Complex64::new(0.5, 0.0); 4];
        let w = EigenWitness::new(1.0, eta, WitnessSource::Explicit).unwrap();
        assert!(matches!(w.verify(&a), Err(Error::HypothesisViolation(_))));

        // Norm and range validation.
        assert!(EigenWitness::new(0.5, vec![Complex64::new(1.0, 0.0); 4], WitnessSource::Explicit)
            .is_err());
        assert!(EigenWitness::new(1.5, vec![Complex64::new(1.0, 0.0)], WitnessSource::Explicit)
            .is_err());
    }

    #[test]
    fn mean_projector_bound_has_base_one_minus_inverse_dim() {
        let d = 6;
        let layer = complete_to_parseval(&mean_projector(d)).unwrap();
        let layers = uniform_stack(&layer, 3);
        let witness = EigenWitness::constant_for(&mean_projector(d)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let input: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let entry = corollary1_bound(&layers, &input, 3, &witness, 1.0).unwrap();
        assert!((entry.base - (1.0 - 1.0 / d as f64)).abs() < 1e-15);
        assert!((entry.constants.c_witness.unwrap() - 1.0 / d as f64).abs() < 1e-12);

        let out = propagate(&layers, &input, 3, &PropagateOptions::default()).unwrap();
        let mut report = BoundReport::new();
        report.entries.push(entry);
        let cert = certify(&out.ledger, &report).unwrap();
        assert!(cert.passed, "failures: {:?}", cert.failures().collect::<Vec<_>>());
    }

    #[test]
    fn convolution_bank_witness_matches_group_order_base() {
        let bank = z8_one_band_bank();
        let layer = crate::extractor::LayerSpec::scattering(&bank);
        let layers = uniform_stack(&layer, 2);
        let a = OperatorKind::convolution(bank.chi_hat().clone());
        let witness = EigenWitness::constant_for(&a).unwrap();
        assert!((witness.lambda() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let f = Signal::random(GroupSpec::cyclic(8).unwrap(), &mut rng);
        let entry = corollary1_bound(&layers, f.values(), 2, &witness, 1.0).unwrap();
        // Base 1 - 1/#G; weaker than the support route's 1 - 1/S for S <= 7.
        assert!((entry.base - (1.0 - 1.0 / 8.0)).abs() < 1e-15);
        let thm3 = thm3_bound(&bank, &f, 2).unwrap();
        assert!((thm3.base - (1.0 - 1.0 / 7.0)).abs() < 1e-15);
        assert!(entry.base >= thm3.base);
    }

    #[test]
    fn zero_input_gives_zero_curve_and_passes() {
        let d = 4;
        let layer = complete_to_parseval(&mean_projector(d)).unwrap();
        let layers = uniform_stack(&layer, 2);
        let witness = EigenWitness::constant_for(&mean_projector(d)).unwrap();
        let input = vec![Complex64::new(0.0, 0.0); d];
        let entry = corollary1_bound(&layers, &input, 2, &witness, 1.0).unwrap();
        assert_eq!(entry.prefactor, 0.0);
        let out = propagate(&layers, &input, 2, &PropagateOptions::default()).unwrap();
        let mut report = BoundReport::new();
        report.entries.push(entry);
        let cert = certify(&out.ledger, &report).unwrap();
        assert!(cert.passed);
        assert!(cert.rows.iter().all(|r| r.margin == 0.0));
    }

    #[test]
    fn witness_without_positive_minimum_is_rejected() {
        // diag(1, 0) has eigenpair (1, e_0), but e_0 vanishes somewhere.
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        let a = OperatorKind::matrix(m);
        let layer = complete_to_parseval(&a).unwrap();
        let layers = uniform_stack(&layer, 2);
        let eta = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let w = EigenWitness::new(1.0, eta, WitnessSource::Explicit).unwrap();
        let input = vec![Complex64::new(1.0, 0.0); 2];
        assert!(matches!(
            corollary1_bound(&layers, &input, 2, &w, 1.0),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn support_route_base_on_z8_single_band() {
        let bank = z8_one_band_bank();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let f = Signal::random(GroupSpec::cyclic(8).unwrap(), &mut rng);
        let entry = thm3_bound(&bank, &f, 4).unwrap();
        assert!((entry.base - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(entry.constants.max_support, Some(7));
        assert_eq!(entry.constants.support_alternate, Some(7));
    }

    #[test]
    fn singleton_band_bank_predicts_total_annihilation() {
        let g = GroupSpec::cyclic(8).unwrap();
        let low = FrequencySet::trivial(g.clone());
        let bands: Vec<FrequencySet> = (1..8)
            .map(|k| FrequencySet::from_indices(g.clone(), [k]).unwrap())
            .collect();
        let bank = build_ideal_partition_bank(&g, &low, &bands).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let f = Signal::random(g.clone(), &mut rng);
        let depth = 2;
        let entry = thm3_bound(&bank, &f, depth).unwrap();
        assert_eq!(entry.base, 0.0);
        assert_eq!(entry.curve(2), 0.0);

        let layers = uniform_stack(&crate::extractor::LayerSpec::scattering(&bank), depth);
        let out = propagate_signal(&layers, &f, depth, &PropagateOptions::default()).unwrap();
        assert!(out.ledger.propagated(2) <= 1e-12 * f.norm_sq());
        let mut report = BoundReport::new();
        report.entries.push(entry);
        assert!(certify(&out.ledger, &report).unwrap().passed);
    }

    #[test]
    fn first_layer_certificates_hold_pointwise() {
        let bank = z8_one_band_bank();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..10 {
            let f = Signal::random(GroupSpec::cyclic(8).unwrap(), &mut rng);
            for check in first_layer_certificates(&bank, &f).unwrap() {
                assert!(
                    check.lhs >= check.rhs - 1e-9 * f.norm_sq(),
                    "single-step contraction violated: {} < {}",
                    check.lhs,
                    check.rhs
                );
            }
        }
    }

    #[test]
    fn gamma_of_trivial_gap_is_trivial() {
        let g = GroupSpec::cyclic(8).unwrap();
        let gap = FrequencySet::trivial(g.clone());
        assert_eq!(find_gamma(&gap).unwrap(), FrequencySet::trivial(g));
    }

    #[test]
    fn narrow_gap_in_z64_forces_trivial_gamma() {
        // gap = {0, +-1, ..., +-4}: adding any symmetric pair makes the
        // eighth power overflow the gap.
        let g = GroupSpec::cyclic(64).unwrap();
        let gap = FrequencySet::from_indices(
            g.clone(),
            (0..=4).chain((60..64).map(|i| i)),
        )
        .unwrap();
        assert_eq!(find_gamma(&gap).unwrap(), FrequencySet::trivial(g));
    }

    #[test]
    fn subgroup_gap_yields_the_subgroup() {
        let g = GroupSpec::cyclic(12).unwrap();
        let h = FrequencySet::from_indices(g.clone(), [0, 3, 6, 9]).unwrap();
        assert_eq!(find_gamma(&h).unwrap(), h);
    }

    #[test]
    fn gamma_requires_the_trivial_character() {
        let g = GroupSpec::cyclic(8).unwrap();
        let gap = FrequencySet::from_indices(g, [1, 7]).unwrap();
        assert!(find_gamma(&gap).is_err());
    }

    #[test]
    fn covering_degenerates_correctly() {
        let g = GroupSpec::cyclic(12).unwrap();
        let cfg = CoveringConfig::default();
        // Support equal to the tile: one translate.
        let gamma = FrequencySet::from_indices(g.clone(), [0, 1, 11]).unwrap();
        let tile = gamma.power(2);
        let numbers = covering_numbers(&[tile.clone()], &gamma, &cfg).unwrap();
        assert_eq!(numbers.n_exact, Some(1));
        assert!(numbers.n_greedy >= 1);

        // Trivial gamma: every translate covers one point, so the exact count
        // is the support size.
        let trivial = FrequencySet::trivial(g.clone());
        let supp = FrequencySet::from_indices(g, [2, 3, 4, 7, 8]).unwrap();
        let numbers = covering_numbers(&[supp], &trivial, &cfg).unwrap();
        assert_eq!(numbers.n_exact, Some(5));
        assert_eq!(numbers.n_greedy, 5);
    }

    #[test]
    fn covering_sandwich_on_a_z12_instance() {
        let g = GroupSpec::cyclic(12).unwrap();
        let gamma = FrequencySet::from_indices(g.clone(), [0, 1, 11]).unwrap();
        let supp = FrequencySet::from_indices(g, [2, 3, 4, 7, 8]).unwrap();
        let numbers =
            covering_numbers(&[supp], &gamma, &CoveringConfig::default()).unwrap();
        // tile = gamma^2 = {0,+-1,+-2} spans five consecutive frequencies; two
        // translates cover {2,3,4} and {7,8}.
        assert_eq!(numbers.n_exact, Some(2));
        assert!(numbers.n_greedy >= numbers.n_exact.unwrap());
        assert!(numbers.n_ruzsa >= numbers.n_exact.unwrap());
    }

    #[test]
    fn thm4_with_trivial_gamma_collapses_to_thm3() {
        let bank = z8_one_band_bank();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let f = Signal::random(GroupSpec::cyclic(8).unwrap(), &mut rng);
        let gamma = FrequencySet::trivial(GroupSpec::cyclic(8).unwrap());
        let t4 = thm4_bound(&bank, &f, 3, Some(&gamma), &CoveringConfig::default()).unwrap();
        let t3 = thm3_bound(&bank, &f, 3).unwrap();
        assert_eq!(t4.base.to_bits(), t3.base.to_bits());
    }

    #[test]
    fn alpha_is_monotone_in_the_covering_count() {
        let ratio_sq = 0.25;
        assert!(alpha_from(ratio_sq, 2) <= alpha_from(ratio_sq, 3));
        assert!(alpha_from(ratio_sq, 3) <= alpha_from(ratio_sq, 7));
    }

    #[test]
    fn thm4_pipeline_on_z64() {
        let g = GroupSpec::cyclic(64).unwrap();
        // Gap {0, +-1, ..., +-8} admits gamma = {0, +-1}.
        let gap =
            FrequencySet::from_indices(g.clone(), (0..=8).chain(56..64)).unwrap();
        let bands = [
            FrequencySet::from_indices(g.clone(), 9..32).unwrap(),
            FrequencySet::from_indices(g.clone(), 32..56).unwrap(),
        ];
        let bank = build_ideal_partition_bank(&g, &gap, &bands).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let f = Signal::random(g.clone(), &mut rng);
        let depth = 3;

        let gamma = FrequencySet::from_indices(g.clone(), [0, 1, 63]).unwrap();
        let entry = thm4_bound(&bank, &f, depth, Some(&gamma), &CoveringConfig::default()).unwrap();
        assert_eq!(entry.constants.gamma2_size, Some(5));
        assert_eq!(entry.constants.gamma4_size, Some(9));
        assert!(entry.base >= 0.0 && entry.base < 1.0);

        let layers = uniform_stack(&crate::extractor::LayerSpec::scattering(&bank), depth);
        let out = propagate_signal(&layers, &f, depth, &PropagateOptions::default()).unwrap();
        let mut report = BoundReport::new();
        report.entries.push(entry);
        report.entries.push(thm3_bound(&bank, &f, depth).unwrap());
        let cert = certify(&out.ledger, &report).unwrap();
        assert!(cert.passed);

        // The auto-selected gamma does at least as well as the explicit one.
        let auto = thm4_bound(&bank, &f, depth, None, &CoveringConfig::default()).unwrap();
        let explicit =
            thm4_bound(&bank, &f, depth, Some(&gamma), &CoveringConfig::default()).unwrap();
        assert!(auto.base <= explicit.base + 1e-15);
    }

    #[test]
    fn corrupted_ledger_fails_at_the_inflated_layer() {
        // A delta input makes the second-layer states spiky, so the support
        // bound is nearly tight and doubling W_2 pushes it across the curve.
        let bank = z8_one_band_bank();
        let g = GroupSpec::cyclic(8).unwrap();
        let f = Signal::delta(g.clone(), &g.zero()).unwrap();
        let depth = 3;
        let layers = uniform_stack(&crate::extractor::LayerSpec::scattering(&bank), depth);
        let out = propagate_signal(&layers, &f, depth, &PropagateOptions::default()).unwrap();
        let mut report = BoundReport::new();
        report.entries.push(thm3_bound(&bank, &f, depth).unwrap());

        let mut corrupted = out.ledger.clone();
        corrupted.layers[2].propagated *= 2.0;
        let cert = certify(&corrupted, &report).unwrap();
        assert!(!cert.passed);
        let failures: Vec<_> = cert.failures().collect();
        assert!(failures.iter().any(|r| r.layer == 2));
        assert!(failures.iter().all(|r| r.layer == 2));
    }

    #[test]
    fn certify_rejects_mismatched_metadata() {
        let bank = z8_one_band_bank();
        let g = GroupSpec::cyclic(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let f = Signal::random(g.clone(), &mut rng);
        let other = Signal::random(g, &mut rng);
        let depth = 2;
        let layers = uniform_stack(&crate::extractor::LayerSpec::scattering(&bank), depth);
        let out = propagate_signal(&layers, &f, depth, &PropagateOptions::default()).unwrap();
        let mut report = BoundReport::new();
        report.entries.push(thm3_bound(&bank, &other, depth).unwrap());
        assert!(matches!(
            certify(&out.ledger, &report),
            Err(Error::MetadataMismatch(_))
        ));
    }

    #[test]
    fn bound_validity_across_random_banks() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let depth = 3;
        let cfg = CoveringConfig::default();
        for (factors, m, seed) in [(vec![16], 3, 50u64), (vec![4, 6], 2, 51), (vec![12], 4, 52)] {
            let g = GroupSpec::new(factors).unwrap();
            let gap = FrequencySet::trivial(g.clone());
            let bank = build_random_bank(&g, m, &gap, seed).unwrap();
            let layers = uniform_stack(&crate::extractor::LayerSpec::scattering(&bank), depth);
            for _ in 0..5 {
                let f = Signal::random(g.clone(), &mut rng);
                let out =
                    propagate_signal(&layers, &f, depth, &PropagateOptions::default()).unwrap();
                let mut report = BoundReport::new();
                report.entries.push(thm3_bound(&bank, &f, depth).unwrap());
                report
                    .entries
                    .push(thm4_bound(&bank, &f, depth, None, &cfg).unwrap());
                let a = OperatorKind::convolution(bank.chi_hat().clone());
                let witness = EigenWitness::constant_for(&a).unwrap();
                report
                    .entries
                    .push(corollary1_bound(&layers, f.values(), depth, &witness, 1.0).unwrap());
                let cert = certify(&out.ledger, &report).unwrap();
                assert!(
                    cert.passed,
                    "bound violated on {g}: {:?}",
                    cert.failures().collect::<Vec<_>>()
                );
            }
        }
    }
}
