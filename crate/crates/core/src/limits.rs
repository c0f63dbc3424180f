//! Clique kernels on shrinking geometric scales, convergence sweeps, and the
//! finite-n trend checks behind the free/classical limit comparison.

use crate::diagrams::{
    classical_cumulant_poisson, free_cumulant_poisson, fourth_moment_identity,
    free_moment_poisson, DiagramError, FourthMomentDecomposition,
};
use crate::kernels::{CellFamily, ElementaryKernel, KernelError, TamedMeta, TamednessReport};
use crate::partitions::PartitionError;
use crate::summation::CompensatedSum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error("clique kernels need order q >= 2 (got {0})")]
    OrderTooSmall(usize),
    #[error("grid step {h} exceeds the interaction radius {r}; refine the resolution")]
    ResolutionTooCoarse { h: f64, r: f64 },
    #[error("operation requires order-1 kernels (got q = {0})")]
    NotSingleOrder(usize),
    #[error("operation requires real coefficients")]
    NotReal,
    #[error("empty specification list")]
    EmptyInput,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Geometry of one clique kernel: value `1/q!` on q-tuples of distinct grid
/// cells of `Q_n = [-n^{1/d}/2, n^{1/d}/2]^d` whose centers are pairwise
/// within the radius `r_n = n^{-1/((q-1)d)}`, and 0 elsewhere.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CliqueKernelSpec {
    pub q: usize,
    pub d: usize,
    pub n: f64,
    /// Grid step; defaults to `r_n / 2`.
    pub h: Option<f64>,
}

impl CliqueKernelSpec {
    pub fn new(q: usize, d: usize, n: f64) -> Self {
        CliqueKernelSpec { q, d, n, h: None }
    }

    /// Interaction radius `r_n`, the exact representative of
    /// `r_n^d ~ n^{-1/(q-1)}`.
    pub fn radius(&self) -> f64 {
        self.n.powf(-1.0 / ((self.q - 1) as f64 * self.d as f64))
    }

    /// Side length of the observation window `Q_n` (volume n).
    pub fn side(&self) -> f64 {
        self.n.powf(1.0 / self.d as f64)
    }

    pub fn step(&self) -> f64 {
        self.h.unwrap_or(self.radius() / 2.0)
    }
}

/// Slack factor for the distance predicate so that exact boundary ties
/// (center distance equal to the radius) are kept under rounding.
const DIST_SLACK: f64 = 1.0 + 1e-9;

fn factorial(q: usize) -> f64 {
    (1..=q).map(|i| i as f64).product()
}

fn all_permutations(items: &[u32]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut work = items.to_vec();
    fn heap(work: &mut Vec<u32>, k: usize, out: &mut Vec<Vec<u32>>) {
        if k <= 1 {
            out.push(work.clone());
            return;
        }
        for i in 0..k {
            heap(work, k - 1, out);
            if k % 2 == 0 {
                work.swap(i, k - 1);
            } else {
                work.swap(0, k - 1);
            }
        }
    }
    heap(&mut work, items.len(), &mut out);
    out
}

/// Discretize the clique kernel of the given specification onto a uniform
/// grid over `Q_n`.
pub fn build_clique_kernel(spec: &CliqueKernelSpec) -> Result<ElementaryKernel, LimitsError> {
    if spec.q < 2 {
        return Err(LimitsError::OrderTooSmall(spec.q));
    }
    let r = spec.radius();
    let h = spec.step();
    if h > r * DIST_SLACK {
        return Err(LimitsError::ResolutionTooCoarse { h, r });
    }
    let side = spec.side();
    let steps = (side / h).ceil() as usize;
    let low = vec![-side / 2.0; spec.d];
    let high = vec![side / 2.0; spec.d];
    let family = Arc::new(CellFamily::grid(&low, &high, &vec![steps; spec.d]));

    // spatial hashing on cell centers with buckets of size r
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for i in 0..family.len() {
        let key: Vec<i64> = family
            .center(i)
            .iter()
            .map(|&c| (c / r).floor() as i64)
            .collect();
        buckets.entry(key).or_default().push(i);
    }
    let max_dist = r * DIST_SLACK;
    let neighbors = |i: usize| -> Vec<usize> {
        let c = family.center(i);
        let key: Vec<i64> = c.iter().map(|&x| (x / r).floor() as i64).collect();
        let mut out = Vec::new();
        let mut offsets = vec![-1i64; spec.d];
        loop {
            let probe: Vec<i64> = key.iter().zip(&offsets).map(|(k, o)| k + o).collect();
            if let Some(cands) = buckets.get(&probe) {
                for &j in cands {
                    if j != i && family.center_distance(i, j) <= max_dist {
                        out.push(j);
                    }
                }
            }
            // advance the {-1,0,1}^d counter
            let mut a = 0;
            loop {
                if a == spec.d {
                    out.sort_unstable();
                    return out;
                }
                offsets[a] += 1;
                if offsets[a] <= 1 {
                    break;
                }
                offsets[a] = -1;
                a += 1;
            }
        }
    };

    // enumerate increasing cliques c_1 < ... < c_q of the proximity graph
    let coeff = Complex64::new(1.0 / factorial(spec.q), 0.0);
    let mut entries: Vec<(Vec<u32>, Complex64)> = Vec::new();
    let mut stack: Vec<u32> = Vec::new();
    fn extend(
        stack: &mut Vec<u32>,
        q: usize,
        family: &CellFamily,
        max_dist: f64,
        neighbors: &dyn Fn(usize) -> Vec<usize>,
        coeff: Complex64,
        entries: &mut Vec<(Vec<u32>, Complex64)>,
    ) {
        if stack.len() == q {
            for p in all_permutations(stack) {
                entries.push((p, coeff));
            }
            return;
        }
        let last = *stack.last().unwrap() as usize;
        for j in neighbors(last) {
            if (j as u32) <= *stack.last().unwrap() {
                continue;
            }
            if stack
                .iter()
                .all(|&c| family.center_distance(c as usize, j) <= max_dist)
            {
                stack.push(j as u32);
                extend(stack, q, family, max_dist, neighbors, coeff, entries);
                stack.pop();
            }
        }
    }
    for i in 0..family.len() {
        stack.push(i as u32);
        extend(&mut stack, spec.q, &family, max_dist, &neighbors, coeff, &mut entries);
        stack.pop();
    }
    Ok(ElementaryKernel::new(spec.q, family, entries)?)
}

/// Analytic limit of `q!‖f_n‖²` for the discretized construction: on the
/// infinite grid with step `ratio · r`, count ordered (q-1)-tuples of
/// distinct lattice offsets pairwise within the radius (and within it of the
/// origin); boundary effects vanish as n → ∞, leaving
/// `α = C(q, d, ratio) · ratio^{d(q-1)} / q!`.
pub fn derive_alpha(q: usize, d: usize, ratio: f64) -> f64 {
    assert!(q >= 2 && d >= 1 && ratio > 0.0 && ratio <= 1.0 + 1e-12);
    let reach = (1.0 * DIST_SLACK / ratio).floor() as i64;
    // all lattice offsets with 0 < ratio·‖k‖ ≤ 1
    let mut offsets: Vec<Vec<i64>> = Vec::new();
    let mut k = vec![-reach; d];
    'outer: loop {
        let norm2: f64 = k.iter().map(|&a| (a * a) as f64).sum();
        if norm2 > 0.0 && ratio * norm2.sqrt() <= DIST_SLACK {
            offsets.push(k.clone());
        }
        let mut a = 0;
        loop {
            if a == d {
                break 'outer;
            }
            k[a] += 1;
            if k[a] <= reach {
                break;
            }
            k[a] = -reach;
            a += 1;
        }
    }
    let close = |u: &[i64], v: &[i64]| -> bool {
        let norm2: f64 = u.iter().zip(v).map(|(&a, &b)| ((a - b) * (a - b)) as f64).sum();
        ratio * norm2.sqrt() <= DIST_SLACK
    };
    // ordered tuples of q-1 distinct offsets, pairwise close
    fn count(
        offsets: &[Vec<i64>],
        close: &dyn Fn(&[i64], &[i64]) -> bool,
        chosen: &mut Vec<usize>,
        left: usize,
    ) -> u64 {
        if left == 0 {
            return 1;
        }
        let mut total = 0;
        for (idx, cand) in offsets.iter().enumerate() {
            if chosen.contains(&idx) {
                continue;
            }
            if chosen.iter().all(|&c| close(&offsets[c], cand)) {
                chosen.push(idx);
                total += count(offsets, close, chosen, left - 1);
                chosen.pop();
            }
        }
        total
    }
    let c = count(&offsets, &close, &mut Vec::new(), q - 1);
    c as f64 * ratio.powi((d * (q - 1)) as i32) / factorial(q)
}

/// One contraction norm `‖f ⋆_r^l f‖` from the (r, l) grid with r = 1..q and
/// l = 1..min(r, q-1); `l` counts integrated variables, so the result has
/// order `2q - r - l`.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct ContractionNorm {
    pub r: usize,
    pub l: usize,
    pub value: f64,
}

/// All per-n quantities of a sweep. Runtimes are measured wall-clock seconds
/// and are excluded from the reproducible payloads (they belong in metadata
/// sidecars).
#[derive(Clone, Debug)]
pub struct ExperimentRow {
    pub n: f64,
    pub radius: f64,
    pub step: f64,
    pub cells: usize,
    pub entry_count: usize,
    /// `q!‖f_n‖²`, the quantity whose limit is α.
    pub scaled_norm_sq: f64,
    pub l4_norm: f64,
    pub contractions: Vec<ContractionNorm>,
    /// Free cumulants κ_m for m = 2..=m_max (empty when not requested).
    pub free_kappa: Vec<(usize, f64)>,
    /// Classical cumulants χ_m for m = 2..=m_max (empty when not requested).
    pub classical_chi: Vec<(usize, f64)>,
    pub build_secs: f64,
    pub cumulant_secs: f64,
}

impl ExperimentRow {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "radius": self.radius,
            "step": self.step,
            "cells": self.cells,
            "entry_count": self.entry_count,
            "scaled_norm_sq": self.scaled_norm_sq,
            "l4_norm": self.l4_norm,
            "contractions": self.contractions.iter()
                .map(|c| json!({"r": c.r, "l": c.l, "value": c.value}))
                .collect::<Vec<_>>(),
            "free_kappa": self.free_kappa.iter()
                .map(|(m, v)| json!({"m": m, "value": v})).collect::<Vec<_>>(),
            "classical_chi": self.classical_chi.iter()
                .map(|(m, v)| json!({"m": m, "value": v})).collect::<Vec<_>>(),
        })
    }
}

/// CSV table of rows; the contraction/cumulant column set is taken from the
/// first row, so all rows must share one (q, m_max) configuration.
pub fn rows_to_csv<W: std::io::Write>(rows: &[ExperimentRow], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec![
        "n".to_string(),
        "radius".to_string(),
        "step".to_string(),
        "cells".to_string(),
        "entry_count".to_string(),
        "scaled_norm_sq".to_string(),
        "l4_norm".to_string(),
    ];
    if let Some(first) = rows.first() {
        for c in &first.contractions {
            header.push(format!("star_{}_{}", c.r, c.l));
        }
        for (m, _) in &first.free_kappa {
            header.push(format!("free_kappa_{m}"));
        }
        for (m, _) in &first.classical_chi {
            header.push(format!("classical_chi_{m}"));
        }
    }
    wtr.write_record(&header)?;
    for row in rows {
        let mut rec = vec![
            format!("{}", row.n),
            format!("{:.17e}", row.radius),
            format!("{:.17e}", row.step),
            format!("{}", row.cells),
            format!("{}", row.entry_count),
            format!("{:.17e}", row.scaled_norm_sq),
            format!("{:.17e}", row.l4_norm),
        ];
        for c in &row.contractions {
            rec.push(format!("{:.17e}", c.value));
        }
        for (_, v) in &row.free_kappa {
            rec.push(format!("{:.17e}", v));
        }
        for (_, v) in &row.classical_chi {
            rec.push(format!("{:.17e}", v));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

fn experiment_row(
    spec: &CliqueKernelSpec,
    m_max: Option<usize>,
) -> Result<ExperimentRow, LimitsError> {
    let t0 = std::time::Instant::now();
    let f = build_clique_kernel(spec)?;
    let build_secs = t0.elapsed().as_secs_f64();
    let q = spec.q;
    let norm_sq = f.l2_norm().powi(2);
    let mut contractions = Vec::new();
    for r in 1..=q {
        for l in 1..=r.min(q - 1) {
            // l variables are integrated out of the r identified pairs
            let g = f.star_contraction(&f, r, r - l)?;
            contractions.push(ContractionNorm { r, l, value: g.l2_norm() });
        }
    }
    let t1 = std::time::Instant::now();
    let mut free_kappa = Vec::new();
    let mut classical_chi = Vec::new();
    if let Some(m_max) = m_max {
        for m in 2..=m_max {
            free_kappa.push((m, free_cumulant_poisson(&f, m)?.re));
        }
        for m in 2..=m_max {
            classical_chi.push((m, classical_cumulant_poisson(&f, m)?.re));
        }
    }
    Ok(ExperimentRow {
        n: spec.n,
        radius: spec.radius(),
        step: spec.step(),
        cells: f.family().len(),
        entry_count: f.entry_count(),
        scaled_norm_sq: factorial(q) * norm_sq,
        l4_norm: f.l4_norm(),
        contractions,
        free_kappa,
        classical_chi,
        build_secs,
        cumulant_secs: t1.elapsed().as_secs_f64(),
    })
}

/// Per-spec norms and contraction norms (no cumulants); rows are computed in
/// parallel and returned in input order.
pub fn contraction_norm_sweep(
    specs: &[CliqueKernelSpec],
) -> Result<Vec<ExperimentRow>, LimitsError> {
    if specs.is_empty() {
        return Err(LimitsError::EmptyInput);
    }
    specs
        .par_iter()
        .map(|s| experiment_row(s, None))
        .collect()
}

/// The finite-n certification of the limit dichotomy: free cumulants of the
/// clique integrals fall toward the semicircular values while the classical
/// third cumulant tracks α, the Poisson signature.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub q: usize,
    pub d: usize,
    pub alpha: f64,
    pub rows: Vec<ExperimentRow>,
    /// final/initial ratio per tracked free cumulant order (3..=m_max).
    pub free_ratios: Vec<(usize, f64)>,
    pub free_monotone: bool,
    /// `|χ₃(largest n)/α − 1|`.
    pub chi3_relative_deviation: f64,
    pub contractions_monotone: bool,
    /// free κ₃, κ₄ shrinking (ratio < 0.5, monotone): semicircular trend.
    pub semicircular_trend_ok: bool,
    /// classical χ₃ within 15% of α at the largest n: Poisson trend.
    pub poisson_trend_ok: bool,
    /// all contraction norms decreasing: the Gaussian-side criterion.
    pub gaussian_side_ok: bool,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> Value {
        json!({
            "format_version": 1,
            "q": self.q,
            "d": self.d,
            "alpha": self.alpha,
            "rows": self.rows.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "free_ratios": self.free_ratios.iter()
                .map(|(m, v)| json!({"m": m, "ratio": v})).collect::<Vec<_>>(),
            "free_monotone": self.free_monotone,
            "chi3_relative_deviation": self.chi3_relative_deviation,
            "contractions_monotone": self.contractions_monotone,
            "semicircular_trend_ok": self.semicircular_trend_ok,
            "poisson_trend_ok": self.poisson_trend_ok,
            "gaussian_side_ok": self.gaussian_side_ok,
        })
    }
}

/// Default sweep grid: q = 2, d = 1, n ∈ {8, 16, 32, 64}.
pub fn default_sweep_specs() -> Vec<CliqueKernelSpec> {
    [8.0, 16.0, 32.0, 64.0]
        .iter()
        .map(|&n| CliqueKernelSpec::new(2, 1, n))
        .collect()
}

pub fn convergence_report(
    specs: &[CliqueKernelSpec],
    m_max: usize,
) -> Result<ConvergenceReport, LimitsError> {
    if specs.is_empty() {
        return Err(LimitsError::EmptyInput);
    }
    let q = specs[0].q;
    let d = specs[0].d;
    let ratio0 = specs[0].step() / specs[0].radius();
    let alpha = derive_alpha(q, d, ratio0);
    let rows: Vec<ExperimentRow> = specs
        .par_iter()
        .map(|s| experiment_row(s, Some(m_max)))
        .collect::<Result<_, _>>()?;

    let kappa = |row: &ExperimentRow, m: usize| -> f64 {
        row.free_kappa.iter().find(|(mm, _)| *mm == m).map(|(_, v)| *v).unwrap_or(0.0)
    };
    let mut free_ratios = Vec::new();
    let mut free_monotone = true;
    for m in 3..=m_max {
        let first = kappa(&rows[0], m);
        let last = kappa(rows.last().unwrap(), m);
        free_ratios.push((m, if first != 0.0 { last / first } else { f64::NAN }));
        for w in rows.windows(2) {
            if kappa(&w[1], m) >= kappa(&w[0], m) {
                free_monotone = false;
            }
        }
    }
    let chi3 = rows
        .last()
        .unwrap()
        .classical_chi
        .iter()
        .find(|(m, _)| *m == 3)
        .map(|(_, v)| *v)
        .unwrap_or(f64::NAN);
    let chi3_relative_deviation = (chi3 / alpha - 1.0).abs();
    let mut contractions_monotone = true;
    for w in rows.windows(2) {
        for (a, b) in w[0].contractions.iter().zip(&w[1].contractions) {
            if b.value >= a.value {
                contractions_monotone = false;
            }
        }
    }
    let semicircular_trend_ok =
        free_monotone && free_ratios.iter().all(|(_, r)| r.is_nan() || *r < 0.5);
    let poisson_trend_ok = chi3_relative_deviation <= 0.15;
    Ok(ConvergenceReport {
        q,
        d,
        alpha,
        rows,
        free_ratios,
        free_monotone,
        chi3_relative_deviation,
        contractions_monotone,
        semicircular_trend_ok,
        poisson_trend_ok,
        gaussian_side_ok: contractions_monotone,
    })
}

/// Tamedness of the clique kernel family, with the metadata
/// `(M_n = 1/q!, z_n = n^{1/d}/2, α_n = r_n)` that certifies the sufficient
/// conditions.
pub fn clique_tamedness(
    specs: &[CliqueKernelSpec],
    m_max: usize,
    cap: Option<usize>,
) -> Result<TamednessReport, LimitsError> {
    if specs.is_empty() {
        return Err(LimitsError::EmptyInput);
    }
    let kernels: Vec<ElementaryKernel> = specs
        .iter()
        .map(build_clique_kernel)
        .collect::<Result<_, _>>()?;
    let metas: Vec<TamedMeta> = specs
        .iter()
        .map(|s| TamedMeta {
            sup_bound: 1.0 / factorial(s.q),
            half_support: s.side() / 2.0,
            diagonal_radius: s.radius(),
        })
        .collect();
    Ok(crate::kernels::tamedness_bound(
        &kernels,
        m_max,
        Some(&metas),
        cap,
    )?)
}

/// The fourth-moment gap of a single mirror-symmetric kernel, with the
/// contraction decomposition and its discrepancy against the diagram moment.
#[derive(Clone, Debug)]
pub struct FourthMomentReport {
    pub decomposition: FourthMomentDecomposition,
    pub moment4: f64,
    pub gap: f64,
    pub discrepancy: f64,
}

pub fn fourth_moment_equivalence_check(
    f: &ElementaryKernel,
) -> Result<FourthMomentReport, LimitsError> {
    let decomposition = fourth_moment_identity(f)?;
    let moment4 = free_moment_poisson(f, 4)?.re;
    Ok(FourthMomentReport {
        gap: decomposition.gap(),
        discrepancy: (decomposition.total() - moment4).abs(),
        decomposition,
        moment4,
    })
}

/// Per-kernel diagnostics for order-1 real kernels: both the free and the
/// classical engines reduce to plain power integrals at q = 1.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SingleIntegralRow {
    pub norm_sq: f64,
    /// `∫ f⁴`.
    pub fourth_power_integral: f64,
    /// `∫ f³ = κ₃ = χ₃`.
    pub third_power_integral: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SingleIntegralReport {
    pub rows: Vec<SingleIntegralRow>,
    /// `∫ f_n⁴` strictly decreasing with final/initial ratio < 0.5: the
    /// finite-n stand-in for the fourth-power criterion.
    pub fourth_power_vanishing_trend: bool,
}

pub fn single_integral_criteria(
    seq: &[ElementaryKernel],
) -> Result<SingleIntegralReport, LimitsError> {
    if seq.is_empty() {
        return Err(LimitsError::EmptyInput);
    }
    let mut rows = Vec::new();
    for f in seq {
        if f.order() != 1 {
            return Err(LimitsError::NotSingleOrder(f.order()));
        }
        let mut third = CompensatedSum::new();
        let mut fourth = CompensatedSum::new();
        for (t, c) in f.entries() {
            if c.im.abs() > 1e-14 * (1.0 + c.norm()) {
                return Err(LimitsError::NotReal);
            }
            let mu = f.family().measure(t[0] as usize);
            third.add(c.re.powi(3) * mu);
            fourth.add(c.re.powi(4) * mu);
        }
        rows.push(SingleIntegralRow {
            norm_sq: f.l2_norm().powi(2),
            fourth_power_integral: fourth.value(),
            third_power_integral: third.value(),
        });
    }
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].fourth_power_integral < w[0].fourth_power_integral);
    let ratio_ok = rows.len() >= 2
        && rows.last().unwrap().fourth_power_integral
            < 0.5 * rows[0].fourth_power_integral;
    Ok(SingleIntegralReport {
        rows,
        fourth_power_vanishing_trend: decreasing && ratio_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::free_cumulant_semicircular;

    #[test]
    fn clique_kernel_small_construction() {
        // q=2, d=1, n=4: r=1/4, h=1/8, 32 cells; pairs |i-j| in {1,2}
        let spec = CliqueKernelSpec::new(2, 1, 4.0);
        let f = build_clique_kernel(&spec).unwrap();
        assert_eq!(f.family().len(), 32);
        assert!(f.is_purely_nondiagonal());
        assert!(f.is_fully_symmetric());
        let c = f.coeff(&[3, 4]);
        assert!((c.re - 0.5).abs() < 1e-14 && c.im == 0.0);
        assert!((f.coeff(&[3, 5]).re - 0.5).abs() < 1e-14);
        assert!(f.coeff(&[3, 6]).norm() == 0.0, "distance 3h > r");
        assert!(f.coeff(&[3, 3]).norm() == 0.0, "repeated cell excluded");
        // interior cell has 4 neighbors; 3 boundary cells each end lose some
        let interior = 4 * 32 - 2 * (2 + 1);
        assert_eq!(f.entry_count(), interior);
    }

    #[test]
    fn resolution_too_coarse_rejected() {
        let mut spec = CliqueKernelSpec::new(2, 1, 4.0);
        spec.h = Some(0.3);
        assert!(matches!(
            build_clique_kernel(&spec),
            Err(LimitsError::ResolutionTooCoarse { .. })
        ));
        assert!(matches!(
            build_clique_kernel(&CliqueKernelSpec::new(1, 1, 4.0)),
            Err(LimitsError::OrderTooSmall(1))
        ));
    }

    #[test]
    fn derived_alpha_values() {
        assert!((derive_alpha(2, 1, 0.5) - 1.0).abs() < 1e-12);
        assert!((derive_alpha(3, 1, 0.5) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn scaled_norm_approaches_alpha() {
        let rows = contraction_norm_sweep(&[
            CliqueKernelSpec::new(2, 1, 8.0),
            CliqueKernelSpec::new(2, 1, 16.0),
            CliqueKernelSpec::new(2, 1, 32.0),
        ])
        .unwrap();
        let alpha = derive_alpha(2, 1, 0.5);
        for row in &rows {
            assert!(row.scaled_norm_sq < alpha);
            assert!((row.scaled_norm_sq / alpha - 1.0).abs() < 0.05, "n={}", row.n);
        }
        // boundary deficit shrinks with n
        assert!(rows[2].scaled_norm_sq > rows[1].scaled_norm_sq);
        assert!(rows[1].scaled_norm_sq > rows[0].scaled_norm_sq);
        // contraction norms strictly decreasing
        for w in rows.windows(2) {
            for (a, b) in w[0].contractions.iter().zip(&w[1].contractions) {
                assert!(b.value < a.value, "star_{}_{}", a.r, a.l);
            }
        }
    }

    #[test]
    fn discretization_stability() {
        // halving h at fixed n changes the tracked norms by < 5%
        let coarse = CliqueKernelSpec::new(2, 1, 8.0);
        let mut fine = coarse;
        fine.h = Some(coarse.radius() / 4.0);
        let rows = contraction_norm_sweep(&[coarse, fine]).unwrap();
        let rel = |a: f64, b: f64| (a / b - 1.0).abs();
        assert!(rel(rows[0].scaled_norm_sq, rows[1].scaled_norm_sq) < 0.05);
        for (a, b) in rows[0].contractions.iter().zip(&rows[1].contractions) {
            assert!(rel(a.value, b.value) < 0.05, "star_{}_{}", a.r, a.l);
        }
    }

    #[test]
    fn convergence_report_small_grid() {
        let specs: Vec<CliqueKernelSpec> = [4.0, 8.0, 16.0]
            .iter()
            .map(|&n| CliqueKernelSpec::new(2, 1, n))
            .collect();
        let report = convergence_report(&specs, 3).unwrap();
        assert!((report.alpha - 1.0).abs() < 1e-12);
        for row in &report.rows {
            // isometry: free κ₂ = ‖f‖², engine χ₂ = q!‖f‖²
            let k2 = row.free_kappa.iter().find(|(m, _)| *m == 2).unwrap().1;
            let chi2 = row.classical_chi.iter().find(|(m, _)| *m == 2).unwrap().1;
            assert!((2.0 * k2 - row.scaled_norm_sq).abs() < 1e-10);
            assert!((chi2 - row.scaled_norm_sq).abs() < 1e-10);
        }
        assert!(report.free_monotone);
        assert!(report.contractions_monotone);
        let j = report.to_json();
        assert_eq!(j["format_version"], 1);
        assert_eq!(j["rows"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn clique_kernels_are_tamed() {
        let specs: Vec<CliqueKernelSpec> = [4.0, 8.0]
            .iter()
            .map(|&n| CliqueKernelSpec::new(2, 1, n))
            .collect();
        let report = clique_tamedness(&specs, 3, None).unwrap();
        assert_eq!(report.hypothesis_ok, Some(true), "{:?}", report.hypothesis_notes);
        assert!(report.max_bound().is_finite());
    }

    #[test]
    fn fourth_moment_check_on_clique_kernel() {
        let f = build_clique_kernel(&CliqueKernelSpec::new(2, 1, 4.0)).unwrap();
        let rep = fourth_moment_equivalence_check(&f).unwrap();
        assert!(rep.gap > 0.0);
        assert!(rep.discrepancy < 1e-10 * (1.0 + rep.moment4.abs()));
        // zero kernel → zero gap
        let z = f.scale(Complex64::new(0.0, 0.0));
        let rep = fourth_moment_equivalence_check(&z).unwrap();
        assert_eq!(rep.moment4, 0.0);
        assert_eq!(rep.gap, 0.0);
    }

    #[test]
    fn semicircular_cumulants_of_clique_kernels_shrink() {
        // the free κ₃ decreases while κ₂ stays near α/q! — semicircular trend
        let mut prev = f64::INFINITY;
        for &n in &[4.0, 8.0, 16.0] {
            let f = build_clique_kernel(&CliqueKernelSpec::new(2, 1, n)).unwrap();
            let k3 = free_cumulant_poisson(&f, 3).unwrap().re;
            assert!(k3 > 0.0 && k3 < prev, "n={n}");
            prev = k3;
            // pure pairing cumulant κ₂ agrees between both free engines
            let a = free_cumulant_semicircular(&f, 2).unwrap();
            let b = free_cumulant_poisson(&f, 2).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_integral_report() {
        // f_n = n^{-1/2} 1_{[0,n]}: ∫f⁴ = 1/n → 0
        let seq: Vec<ElementaryKernel> = [4.0, 16.0, 64.0]
            .iter()
            .map(|&n| {
                let fam = Arc::new(CellFamily::segments(&[n]));
                ElementaryKernel::new(
                    1,
                    fam,
                    [(vec![0], Complex64::new(n.powf(-0.5), 0.0))],
                )
                .unwrap()
            })
            .collect();
        let rep = single_integral_criteria(&seq).unwrap();
        assert!(rep.fourth_power_vanishing_trend);
        for (row, &n) in rep.rows.iter().zip(&[4.0, 16.0, 64.0]) {
            assert!((row.norm_sq - 1.0).abs() < 1e-12);
            assert!((row.fourth_power_integral - 1.0 / n).abs() < 1e-12);
        }
        // constant sequence fails the criterion
        let fam = Arc::new(CellFamily::segments(&[1.0]));
        let f = ElementaryKernel::indicator(fam, 0).unwrap();
        let rep = single_integral_criteria(&[f.clone(), f.clone()]).unwrap();
        assert!(!rep.fourth_power_vanishing_trend);
        // degenerate zero kernel
        let z = f.scale(Complex64::new(0.0, 0.0));
        let rep = single_integral_criteria(&[z]).unwrap();
        assert_eq!(rep.rows[0].norm_sq, 0.0);
        assert_eq!(rep.rows[0].third_power_integral, 0.0);
        // order mismatch rejected
        let fam2 = Arc::new(CellFamily::segments(&[1.0, 1.0]));
        let g = ElementaryKernel::indicator_tensor(fam2, &[0, 1]).unwrap();
        assert!(matches!(
            single_integral_criteria(&[g]),
            Err(LimitsError::NotSingleOrder(2))
        ));
    }

    #[test]
    fn csv_serialization() {
        let rows = contraction_norm_sweep(&[
            CliqueKernelSpec::new(2, 1, 4.0),
            CliqueKernelSpec::new(2, 1, 8.0),
        ])
        .unwrap();
        let mut buf = Vec::new();
        rows_to_csv(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,radius,step,cells,entry_count,scaled_norm_sq,l4_norm,star_1_1,star_2_1"
        );
        assert_eq!(lines.count(), 2);
        // byte-identical reproducibility
        let rows2 = contraction_norm_sweep(&[
            CliqueKernelSpec::new(2, 1, 4.0),
            CliqueKernelSpec::new(2, 1, 8.0),
        ])
        .unwrap();
        let mut buf2 = Vec::new();
        rows_to_csv(&rows2, &mut buf2).unwrap();
        assert_eq!(s, String::from_utf8(buf2).unwrap());
    }
}
