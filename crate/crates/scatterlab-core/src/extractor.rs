//! Layered feature extractors and path-wise energy propagation.
//!
//! A stack is a list of [`LayerSpec`]s indexed by depth: `layers[l]` holds the
//! output operator `A` that turns a depth-`l` state into an output, the filter
//! family `L_1, ..., L_m` that forwards depth-`l` states to depth `l+1`, and
//! the nonlinearity applied after each filter. A path is the sequence of
//! filter indices chosen on the way down; for a path `p = (j_1, ..., j_l)`,
//!
//! ```text
//! U[p]f = sigma(L_{j_l} ... sigma(L_{j_1} f)),     S[p]f = A U[p]f,
//! ```
//!
//! and the empty path at depth 0 has `U f = f`, `S f = A f`. The energy
//! ledger tracks, per depth, the propagated energy `W_N = sum_p |U[p]f|^2`
//! and the output energy `O_N = sum_p |S[p]f|^2`.
//!
//! The core contraction condition requires, per depth, that the stacked map
//! `h -> (A h, L_1 h, ..., L_m h)` has operator norm at most 1; it makes the
//! extractor nonexpansive and forces `O_N + W_{N+1} <= W_N`.
//!
//! Path evaluation is parallelized over the frontier; energies are reduced in
//! fixed lexicographic path order with pairwise summation, so results do not
//! depend on the number of threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{fourier, inverse_fourier};
use crate::frames::FilterBank;
use crate::group::GroupSpec;
use crate::signal::{Signal, SpectralSignal};
use crate::sums;

/// Slack accepted on the stacked operator norm.
pub const ASSUMPTION_TOL: f64 = 1e-9;

/// Pointwise nonexpansive nonlinearity fixing zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    /// `z -> |z|`.
    Modulus,
    /// ReLU applied to real and imaginary parts independently.
    RealRelu,
    /// `z -> z`.
    Identity,
}

impl Nonlinearity {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        match self {
            Nonlinearity::Modulus => Complex64::new(z.norm(), 0.0),
            Nonlinearity::RealRelu => Complex64::new(z.re.max(0.0), z.im.max(0.0)),
            Nonlinearity::Identity => z,
        }
    }

    pub fn apply_in_place(&self, values: &mut [Complex64]) {
        if matches!(self, Nonlinearity::Identity) {
            return;
        }
        for v in values.iter_mut() {
            *v = self.apply(*v);
        }
    }
}

/// A linear map between finite-dimensional signal spaces: convolution by a
/// spectrally given filter, or an explicit dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Convolution(SpectralSignal),
    Matrix(DMatrix<Complex64>),
}

impl OperatorKind {
    pub fn convolution(kernel_hat: SpectralSignal) -> Self {
        OperatorKind::Convolution(kernel_hat)
    }

    pub fn matrix(m: DMatrix<Complex64>) -> Self {
        OperatorKind::Matrix(m)
    }

    pub fn input_dim(&self) -> usize {
        match self {
            OperatorKind::Convolution(k) => k.group().order(),
            OperatorKind::Matrix(m) => m.ncols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            OperatorKind::Convolution(k) => k.group().order(),
            OperatorKind::Matrix(m) => m.nrows(),
        }
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: len,
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_input(x.len())?;
        match self {
            OperatorKind::Convolution(kernel_hat) => {
                let group = kernel_hat.group().clone();
                let f = Signal::from_values_unchecked(group, x.to_vec());
                let product = fourier(&f).pointwise_mul(kernel_hat)?;
                Ok(inverse_fourier(&product).values().to_vec())
            }
            OperatorKind::Matrix(m) => {
                let v = DVector::from_column_slice(x);
                Ok((m * v).as_slice().to_vec())
            }
        }
    }

    /// Applies the adjoint operator.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                found: y.len(),
            });
        }
        match self {
            OperatorKind::Convolution(kernel_hat) => {
                let group = kernel_hat.group().clone();
                let conj = SpectralSignal::from_coeffs_unchecked(
                    group.clone(),
                    kernel_hat.coeffs().iter().map(|c| c.conj()).collect(),
                );
                let f = Signal::from_values_unchecked(group, y.to_vec());
                let product = fourier(&f).pointwise_mul(&conj)?;
                Ok(inverse_fourier(&product).values().to_vec())
            }
            OperatorKind::Matrix(m) => {
                let v = DVector::from_column_slice(y);
                Ok((m.adjoint() * v).as_slice().to_vec())
            }
        }
    }

    /// Dense matrix representation, built column by column for convolutions.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match self {
            OperatorKind::Matrix(m) => m.clone(),
            OperatorKind::Convolution(_) => {
                let dim = self.input_dim();
                let mut dense = DMatrix::zeros(dim, dim);
                let mut basis = vec![Complex64::new(0.0, 0.0); dim];
                for j in 0..dim {
                    basis[j] = Complex64::new(1.0, 0.0);
                    let col = self.apply(&basis).expect("basis vector has the right length");
                    for (i, v) in col.iter().enumerate() {
                        dense[(i, j)] = *v;
                    }
                    basis[j] = Complex64::new(0.0, 0.0);
                }
                dense
            }
        }
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        match self {
            OperatorKind::Convolution(k) => {
                k.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max)
            }
            OperatorKind::Matrix(m) => m
                .singular_values()
                .iter()
                .copied()
                .fold(0.0, f64::max),
        }
    }

    fn conv_group(&self) -> Option<&GroupSpec> {
        match self {
            OperatorKind::Convolution(k) => Some(k.group()),
            OperatorKind::Matrix(_) => None,
        }
    }
}

/// One depth of a layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    /// Output operator `A` acting on states at this depth.
    pub output_op: OperatorKind,
    /// Filters forwarding states to the next depth.
    pub filters: Vec<OperatorKind>,
    /// Nonlinearity applied after each filter.
    pub sigma: Nonlinearity,
}

impl LayerSpec {
    /// Scattering layer induced by a filter bank: output is convolution by
    /// `chi`, the filters convolve by each `psi`, the nonlinearity is the
    /// pointwise modulus.
    pub fn scattering(bank: &FilterBank) -> LayerSpec {
        LayerSpec {
            output_op: OperatorKind::convolution(bank.chi_hat().clone()),
            filters: bank
                .psi_hats()
                .iter()
                .cloned()
                .map(OperatorKind::convolution)
                .collect(),
            sigma: Nonlinearity::Modulus,
        }
    }
}

/// A homogeneous stack deep enough for `depth` propagation steps.
pub fn uniform_stack(layer: &LayerSpec, depth: usize) -> Vec<LayerSpec> {
    vec![layer.clone(); depth + 1]
}

/// Verdict of the stacked-operator contraction check.
#[derive(Debug, Clone, Copy)]
pub struct ContractionReport {
    pub max_singular_value: f64,
    pub pass: bool,
}

/// Checks the per-layer contraction condition: the stacked map
/// `h -> (A h, L_1 h, ..., L_m h)` must have operator norm at most 1.
///
/// For pure convolution layers this is evaluated spectrally as
/// `max_xi sqrt(|A_hat|^2 + sum_j |L_hat_j|^2)`; otherwise the stacked dense
/// matrix is formed and its largest singular value computed.
pub fn check_assumption1(layer: &LayerSpec) -> Result<ContractionReport> {
    let all_ops = || std::iter::once(&layer.output_op).chain(layer.filters.iter());

    let spectral_group = layer.output_op.conv_group().filter(|g| {
        layer
            .filters
            .iter()
            .all(|op| op.conv_group() == Some(*g))
    });

    let max_singular_value = if let Some(group) = spectral_group {
        let mut worst = 0.0f64;
        for xi in 0..group.order() {
            let mut lp = 0.0;
            for op in all_ops() {
                if let OperatorKind::Convolution(k) = op {
                    lp += k.coeffs()[xi].norm_sqr();
                }
            }
            worst = worst.max(lp);
        }
        worst.sqrt()
    } else {
        let in_dim = layer.output_op.input_dim();
        for op in all_ops() {
            if op.input_dim() != in_dim {
                return Err(Error::DimensionMismatch {
                    expected: in_dim,
                    found: op.input_dim(),
                });
            }
        }
        let total_rows: usize = all_ops().map(|op| op.output_dim()).sum();
        let mut stacked = DMatrix::zeros(total_rows, in_dim);
        let mut row = 0;
        for op in all_ops() {
            let dense = op.to_dense();
            stacked.view_mut((row, 0), (dense.nrows(), in_dim)).copy_from(&dense);
            row += dense.nrows();
        }
        stacked.singular_values().iter().copied().fold(0.0, f64::max)
    };

    Ok(ContractionReport {
        max_singular_value,
        pass: max_singular_value <= 1.0 + ASSUMPTION_TOL,
    })
}

/// Completes a norm-bounded output operator `A` to a layer satisfying the
/// contraction condition with equality, by adjoining the defect operator
/// `L = (I - A* A)^{1/2}` so that `|A h|^2 + |L h|^2 = |h|^2`.
pub fn complete_to_parseval(a: &OperatorKind) -> Result<LayerSpec> {
    let norm = a.operator_norm();
    if norm > 1.0 + 1e-12 {
        return Err(Error::NotContractive { norm });
    }
    let dense = a.to_dense();
    let dim = dense.ncols();
    let gram = DMatrix::identity(dim, dim) - dense.adjoint() * &dense;
    let eigen = gram.symmetric_eigen();
    let sqrt_diag = DVector::from_iterator(
        dim,
        eigen
            .eigenvalues
            .iter()
            .map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let defect =
        &eigen.eigenvectors * DMatrix::from_diagonal(&sqrt_diag) * eigen.eigenvectors.adjoint();
    Ok(LayerSpec {
        output_op: a.clone(),
        filters: vec![OperatorKind::matrix(defect)],
        sigma: Nonlinearity::Modulus,
    })
}

/// Options controlling a propagation run.
#[derive(Debug, Clone)]
pub struct PropagateOptions {
    /// Maximum number of path-signal evaluations across all depths.
    pub budget: u64,
    /// Whether to retain the output signals `S[p]f` alongside their energies.
    pub keep_signals: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions {
            budget: 1_000_000,
            keep_signals: false,
        }
    }
}

/// Energies recorded for one path.
#[derive(Debug, Clone)]
pub struct PathRecord {
    /// Filter indices chosen at each depth; empty for the depth-0 path.
    pub path: Vec<usize>,
    /// `|U[p]f|^2`.
    pub u_energy: f64,
    /// `|S[p]f|^2`.
    pub s_energy: f64,
    /// `S[p]f` itself when requested.
    pub s_signal: Option<Vec<Complex64>>,
}

/// Per-depth energy totals.
#[derive(Debug, Clone)]
pub struct LayerEnergy {
    pub num_paths: usize,
    /// `W_N`, the propagated energy at this depth.
    pub propagated: f64,
    /// `O_N`, the output energy at this depth.
    pub output: f64,
    /// Realized minimum of `|A U[p]f|^2 / |U[p]f|^2` over paths with nonzero
    /// propagated energy; `None` when every path is zero.
    pub min_contraction: Option<f64>,
}

/// Per-layer energy accounting for one propagation run.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    /// `|f|^2`.
    pub input_energy: f64,
    /// Depths `0..=depth`, in order.
    pub layers: Vec<LayerEnergy>,
}

impl EnergyLedger {
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn propagated(&self, n: usize) -> f64 {
        self.layers[n].propagated
    }

    pub fn output(&self, n: usize) -> f64 {
        self.layers[n].output
    }

    /// `sum_{n < depth_limit} O_n`, the output energy accumulated strictly
    /// before a depth.
    pub fn cumulative_output_before(&self, depth_limit: usize) -> f64 {
        let outputs: Vec<f64> = self.layers[..depth_limit].iter().map(|l| l.output).collect();
        sums::pairwise_sum(&outputs)
    }
}

/// Full result of a propagation run: the ledger plus per-path records in
/// lexicographic path order at each depth.
#[derive(Debug, Clone)]
pub struct ScatteringOutput {
    pub ledger: EnergyLedger,
    pub per_depth: Vec<Vec<PathRecord>>,
}

/// Total path-signal evaluations for the given per-step branching factors:
/// `sum_{l=0}^{depth} prod_{j<l} branching[j]`, saturating.
pub fn path_evaluation_count(branching: &[usize]) -> u128 {
    let mut total: u128 = 0;
    let mut paths: u128 = 1;
    for (step, &b) in std::iter::once(&1usize).chain(branching.iter()).enumerate() {
        if step > 0 {
            paths = paths.saturating_mul(b as u128);
        }
        total = total.saturating_add(paths);
    }
    total
}

fn validate_stack(layers: &[LayerSpec], input_len: usize, depth: usize) -> Result<()> {
    if layers.len() < depth + 1 {
        return Err(Error::InvalidArgument(format!(
            "stack has {} layers but depth {depth} needs {}",
            layers.len(),
            depth + 1
        )));
    }
    let mut dim = input_len;
    for (l, layer) in layers.iter().enumerate().take(depth + 1) {
        if layer.output_op.input_dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: layer.output_op.input_dim(),
            });
        }
        if l < depth {
            if layer.filters.is_empty() {
                // No paths continue past this depth; deeper layers see an
                // empty frontier, which is fine.
                continue;
            }
            let next = layer.filters[0].output_dim();
            for f in &layer.filters {
                if f.input_dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: f.input_dim(),
                    });
                }
                if f.output_dim() != next {
                    return Err(Error::DimensionMismatch {
                        expected: next,
                        found: f.output_dim(),
                    });
                }
            }
            dim = next;
        }
    }
    Ok(())
}

fn check_budget(layers: &[LayerSpec], depth: usize, budget: u64) -> Result<()> {
    let mut total: u128 = 0;
    let mut paths: u128 = 1;
    for (l, layer) in layers.iter().enumerate().take(depth + 1) {
        total = total.saturating_add(paths);
        if total > budget as u128 {
            return Err(Error::BudgetExceeded {
                depth: l,
                required: total,
                budget,
            });
        }
        paths = paths.saturating_mul(layer.filters.len() as u128);
    }
    Ok(())
}

/// Evaluates `U[p]f` and `S[p]f` for every path of length at most `depth` and
/// fills the energy ledger. Deterministic: path order is lexicographic and
/// all reductions are pairwise sums in that order.
pub fn propagate(
    layers: &[LayerSpec],
    input: &[Complex64],
    depth: usize,
    opts: &PropagateOptions,
) -> Result<ScatteringOutput> {
    validate_stack(layers, input.len(), depth)?;
    check_budget(layers, depth, opts.budget)?;

    let input_energy = sums::norm_sq(input);
    let mut frontier: Vec<(Vec<usize>, Vec<Complex64>)> = vec![(Vec::new(), input.to_vec())];
    let mut per_depth: Vec<Vec<PathRecord>> = Vec::with_capacity(depth + 1);
    let mut ledger_layers: Vec<LayerEnergy> = Vec::with_capacity(depth + 1);

    for l in 0..=depth {
        let layer = &layers[l];
        let records: Vec<PathRecord> = frontier
            .par_iter()
            .map(|(path, state)| {
                let out = layer
                    .output_op
                    .apply(state)
                    .expect("dimensions validated before propagation");
                PathRecord {
                    path: path.clone(),
                    u_energy: sums::norm_sq(state),
                    s_energy: sums::norm_sq(&out),
                    s_signal: opts.keep_signals.then_some(out),
                }
            })
            .collect();

        let u_energies: Vec<f64> = records.iter().map(|r| r.u_energy).collect();
        let s_energies: Vec<f64> = records.iter().map(|r| r.s_energy).collect();
        let min_contraction = records
            .iter()
            .filter(|r| r.u_energy > 0.0)
            .map(|r| r.s_energy / r.u_energy)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.min(v)))
            });
        ledger_layers.push(LayerEnergy {
            num_paths: records.len(),
            propagated: sums::pairwise_sum(&u_energies),
            output: sums::pairwise_sum(&s_energies),
            min_contraction,
        });
        per_depth.push(records);

        if l < depth {
            let children: Vec<Vec<(Vec<usize>, Vec<Complex64>)>> = frontier
                .par_iter()
                .map(|(path, state)| {
                    layer
                        .filters
                        .iter()
                        .enumerate()
                        .map(|(j, filt)| {
                            let mut next = filt
                                .apply(state)
                                .expect("dimensions validated before propagation");
                            layer.sigma.apply_in_place(&mut next);
                            let mut next_path = path.clone();
                            next_path.push(j);
                            (next_path, next)
                        })
                        .collect()
                })
                .collect();
            frontier = children.into_iter().flatten().collect();
        }
    }

    Ok(ScatteringOutput {
        ledger: EnergyLedger {
            input_energy,
            layers: ledger_layers,
        },
        per_depth,
    })
}

/// Propagates a group signal through a scattering stack.
pub fn propagate_signal(
    layers: &[LayerSpec],
    f: &Signal,
    depth: usize,
    opts: &PropagateOptions,
) -> Result<ScatteringOutput> {
    propagate(layers, f.values(), depth, opts)
}

/// Result of the nonexpansiveness probe.
#[derive(Debug, Clone, Copy)]
pub struct NonexpansivenessProbe {
    /// `sum_{l <= depth} sum_p |S[p]f - S[p]g|^2`.
    pub lhs: f64,
    /// `|f - g|^2`.
    pub rhs: f64,
}

/// Propagates two inputs in lockstep and accumulates the output-side squared
/// distance; the extractor is nonexpansive, so `lhs <= rhs` for every depth.
pub fn nonexpansiveness_probe(
    layers: &[LayerSpec],
    f: &[Complex64],
    g: &[Complex64],
    depth: usize,
    opts: &PropagateOptions,
) -> Result<NonexpansivenessProbe> {
    if f.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            found: g.len(),
        });
    }
    validate_stack(layers, f.len(), depth)?;
    check_budget(layers, depth, opts.budget)?;

    let diff: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
    let rhs = sums::norm_sq(&diff);

    let mut frontier: Vec<(Vec<Complex64>, Vec<Complex64>)> = vec![(f.to_vec(), g.to_vec())];
    let mut depth_sums: Vec<f64> = Vec::with_capacity(depth + 1);

    for l in 0..=depth {
        let layer = &layers[l];
        let node_diffs: Vec<f64> = frontier
            .par_iter()
            .map(|(xf, xg)| {
                let sf = layer.output_op.apply(xf).expect("validated");
                let sg = layer.output_op.apply(xg).expect("validated");
                let d: Vec<Complex64> = sf.iter().zip(&sg).map(|(a, b)| a - b).collect();
                sums::norm_sq(&d)
            })
            .collect();
        depth_sums.push(sums::pairwise_sum(&node_diffs));

        if l < depth {
            let children: Vec<Vec<(Vec<Complex64>, Vec<Complex64>)>> = frontier
                .par_iter()
                .map(|(xf, xg)| {
                    layer
                        .filters
                        .iter()
                        .map(|filt| {
                            let mut nf = filt.apply(xf).expect("validated");
                            let mut ng = filt.apply(xg).expect("validated");
                            layer.sigma.apply_in_place(&mut nf);
                            layer.sigma.apply_in_place(&mut ng);
                            (nf, ng)
                        })
                        .collect()
                })
                .collect();
            frontier = children.into_iter().flatten().collect();
        }
    }

    Ok(NonexpansivenessProbe {
        lhs: sums::pairwise_sum(&depth_sums),
        rhs,
    })
}
