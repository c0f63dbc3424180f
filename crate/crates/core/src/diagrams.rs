//! Diagram formulas: moments and cumulants of multiple integrals as sums of
//! partition tensor integrals over constrained partition classes, plus
//! moment/cumulant conversions, the fourth-moment identity and spectral
//! bounds.

use crate::kernels::{ElementaryKernel, KernelError};
use crate::partitions::{
    class_partitions, enumerate_all_partitions, enumerate_class, PartitionClass, PartitionError,
    SetPartition,
};
use crate::summation::{CompensatedSum, ComplexSum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("diagram formulas require a purely non-diagonal kernel; refine the cell family until no index repeats")]
    DiagonalKernel,
    #[error("operation requires a mirror-symmetric kernel")]
    NotMirrorSymmetric,
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Which law a report refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    FreePoisson,
    Semicircular,
    ClassicalPoisson,
}

/// How the numbers were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportMethod {
    Diagram,
    Oracle,
    ClosedForm,
}

/// Table of moments or cumulants indexed by order.
#[derive(Clone, Debug)]
pub struct CumulantReport {
    pub kind: ReportKind,
    pub method: ReportMethod,
    pub values: BTreeMap<usize, Complex64>,
}

impl CumulantReport {
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .values
            .iter()
            .map(|(m, v)| json!({"m": m, "re": v.re, "im": v.im}))
            .collect();
        json!({
            "format_version": 1,
            "kind": serde_json::to_value(self.kind).unwrap(),
            "method": serde_json::to_value(self.method).unwrap(),
            "values": rows,
        })
    }

    pub fn to_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["kind", "method", "m", "re", "im"])?;
        let kind = serde_json::to_value(self.kind).unwrap();
        let method = serde_json::to_value(self.method).unwrap();
        for (m, v) in &self.values {
            wtr.write_record([
                kind.as_str().unwrap(),
                method.as_str().unwrap(),
                &m.to_string(),
                &format!("{:.17e}", v.re),
                &format!("{:.17e}", v.im),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn require_nondiagonal(f: &ElementaryKernel) -> Result<(), DiagramError> {
    if f.is_purely_nondiagonal() {
        Ok(())
    } else {
        Err(DiagramError::DiagonalKernel)
    }
}

/// Deterministic sum of `∫ f_σ dμ^{|σ|}` over a memoized partition class;
/// per-σ terms are computed in parallel but reduced in enumeration order.
fn diagram_sum(
    f: &ElementaryKernel,
    m: usize,
    class: PartitionClass,
) -> Result<Complex64, DiagramError> {
    let sigmas = class_partitions(m, f.order(), class)?;
    let terms: Vec<Result<Complex64, KernelError>> = sigmas
        .par_iter()
        .map(|s| f.partition_tensor_integral(s, m))
        .collect();
    let mut total = ComplexSum::new();
    for t in terms {
        total.add(t?);
    }
    Ok(total.value())
}

/// `κ_m` of a free Poisson multiple integral: sum over the non-crossing
/// connecting respecting partitions with no singleton block.
pub fn free_cumulant_poisson(f: &ElementaryKernel, m: usize) -> Result<Complex64, DiagramError> {
    require_nondiagonal(f)?;
    diagram_sum(f, m, PartitionClass::NcGe2)
}

/// `φ(I_q(f)^m)` for free Poisson: connectivity dropped.
pub fn free_moment_poisson(f: &ElementaryKernel, m: usize) -> Result<Complex64, DiagramError> {
    require_nondiagonal(f)?;
    diagram_sum(f, m, PartitionClass::Nc0Ge2)
}

/// `κ_m` of a semicircular multiple integral: non-crossing pairings only;
/// zero when `mq` is odd.
pub fn free_cumulant_semicircular(
    f: &ElementaryKernel,
    m: usize,
) -> Result<Complex64, DiagramError> {
    require_nondiagonal(f)?;
    diagram_sum(f, m, PartitionClass::Nc2)
}

pub fn free_moment_semicircular(
    f: &ElementaryKernel,
    m: usize,
) -> Result<Complex64, DiagramError> {
    require_nondiagonal(f)?;
    diagram_sum(f, m, PartitionClass::Nc02)
}

/// `χ_m` of a classical compensated Poisson multiple integral: sum over all
/// (crossing allowed) connecting respecting partitions. Singleton blocks are
/// excluded because the first cumulant of the compensated measure vanishes.
pub fn classical_cumulant_poisson(
    f: &ElementaryKernel,
    m: usize,
) -> Result<Complex64, DiagramError> {
    require_nondiagonal(f)?;
    diagram_sum(f, m, PartitionClass::ClassicalConnecting)
}

/// Which partition lattice links moments and cumulants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lattice {
    /// Non-crossing partitions: free cumulants.
    NonCrossing,
    /// All partitions: classical cumulants.
    All,
}

fn lattice_partitions(n: usize, lattice: Lattice) -> Result<Vec<SetPartition>, PartitionError> {
    match lattice {
        Lattice::NonCrossing => enumerate_class(n, 1, PartitionClass::Nc0, None),
        Lattice::All => Ok(enumerate_all_partitions(n)),
    }
}

/// `φ(X^m) = Σ_{π} Π_B κ_{|B|}` over the chosen lattice, for m up to
/// `m_max`. Missing cumulant orders count as zero.
pub fn moments_from_cumulants(
    kappa: &BTreeMap<usize, Complex64>,
    m_max: usize,
    lattice: Lattice,
) -> Result<BTreeMap<usize, Complex64>, PartitionError> {
    let mut out = BTreeMap::new();
    for m in 1..=m_max {
        let mut total = ComplexSum::new();
        for p in lattice_partitions(m, lattice)? {
            let mut prod = Complex64::new(1.0, 0.0);
            for b in p.blocks() {
                prod *= kappa.get(&b.len()).copied().unwrap_or_default();
            }
            total.add(prod);
        }
        out.insert(m, total.value());
    }
    Ok(out)
}

/// Inverse of [`moments_from_cumulants`]: recursive extraction, using that
/// only the one-block partition involves the top-order cumulant.
pub fn cumulants_from_moments(
    moments: &BTreeMap<usize, Complex64>,
    m_max: usize,
    lattice: Lattice,
) -> Result<BTreeMap<usize, Complex64>, PartitionError> {
    let mut kappa: BTreeMap<usize, Complex64> = BTreeMap::new();
    for m in 1..=m_max {
        let mut lower = ComplexSum::new();
        for p in lattice_partitions(m, lattice)? {
            if p.block_count() == 1 {
                continue;
            }
            let mut prod = Complex64::new(1.0, 0.0);
            for b in p.blocks() {
                prod *= kappa.get(&b.len()).copied().unwrap_or_default();
            }
            lower.add(prod);
        }
        let phi = moments.get(&m).copied().unwrap_or_default();
        kappa.insert(m, phi - lower.value());
    }
    Ok(kappa)
}

/// The exact decomposition of the fourth moment of a free Poisson integral:
/// `φ(I⁴) = 2‖f‖⁴ + Σ_{k<q} ‖f ⌢_k f‖² + Σ_{k≤q} ‖f ⋆(k, keep 1) f‖²`.
#[derive(Clone, Debug)]
pub struct FourthMomentDecomposition {
    pub base: f64,
    /// `‖f ⌢_k f‖²` for k = 1..q-1.
    pub arc_terms: Vec<f64>,
    /// `‖f ⋆_k^{k-1} f‖²` for k = 1..q.
    pub star_terms: Vec<f64>,
}

impl FourthMomentDecomposition {
    pub fn total(&self) -> f64 {
        let mut s = CompensatedSum::new();
        s.add(self.base);
        for &t in self.arc_terms.iter().chain(self.star_terms.iter()) {
            s.add(t);
        }
        s.value()
    }

    /// The positive gap `φ(I⁴) − 2φ(I²)²`.
    pub fn gap(&self) -> f64 {
        self.total() - self.base
    }
}

pub fn fourth_moment_identity(
    f: &ElementaryKernel,
) -> Result<FourthMomentDecomposition, DiagramError> {
    if !f.is_mirror_symmetric() {
        return Err(DiagramError::NotMirrorSymmetric);
    }
    let q = f.order();
    let norm2 = f.l2_norm().powi(2);
    let mut arc_terms = Vec::new();
    for k in 1..q {
        arc_terms.push(f.arc_contraction(f, k)?.l2_norm().powi(2));
    }
    let mut star_terms = Vec::new();
    for k in 1..=q {
        star_terms.push(f.star_contraction(f, k, 1)?.l2_norm().powi(2));
    }
    Ok(FourthMomentDecomposition {
        base: 2.0 * norm2 * norm2,
        arc_terms,
        star_terms,
    })
}

/// Spectral radius bound for a self-adjoint free Poisson integral with
/// `|f| ≤ D` and support inside `B^q`, `μ(B) = K`: `4^q max{1, DK}^{q/2}`.
/// `D` and `K` default to the kernel's own sup norm and support measure.
pub fn spectral_bound_poisson(f: &ElementaryKernel, d: Option<f64>, k: Option<f64>) -> f64 {
    let q = f.order() as i32;
    let d = d.unwrap_or_else(|| f.sup_norm());
    let k = k.unwrap_or_else(|| support_box_measure(f));
    4f64.powi(q) * (d * k).max(1.0).powf(q as f64 / 2.0)
}

/// Measure of the smallest union of cells B with supp f ⊆ B^q.
fn support_box_measure(f: &ElementaryKernel) -> f64 {
    let mut used: std::collections::BTreeSet<u32> = std::collections::BTreeSet::new();
    for (t, _) in f.entries() {
        used.extend(t.iter().copied());
    }
    used.iter()
        .map(|&i| f.family().measure(i as usize))
        .sum()
}

/// `(q + 1) ‖f‖` for a mirror-symmetric semicircular integral.
pub fn spectral_bound_semicircular(f: &ElementaryKernel) -> f64 {
    (f.order() as f64 + 1.0) * f.l2_norm()
}

/// Finite-m spectral radius estimate `max_{m ≤ m_max} φ(F^{2m})^{1/(2m)}`
/// through the diagram moments; requires mirror symmetry so the even moments
/// are non-negative reals.
pub fn spectral_radius_estimate(
    f: &ElementaryKernel,
    kind: ReportKind,
    m_max: usize,
) -> Result<f64, DiagramError> {
    if !f.is_mirror_symmetric() {
        return Err(DiagramError::NotMirrorSymmetric);
    }
    let mut best = 0.0f64;
    for m in 1..=m_max {
        let phi = match kind {
            ReportKind::FreePoisson => free_moment_poisson(f, 2 * m)?,
            ReportKind::Semicircular => free_moment_semicircular(f, 2 * m)?,
            ReportKind::ClassicalPoisson => {
                panic!("spectral estimate applies to free integrals only")
            }
        };
        best = best.max(phi.re.max(0.0).powf(1.0 / (2.0 * m as f64)));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{moment_oracle, MeasureKind};
    use crate::kernels::CellFamily;
    use crate::partitions::{riordan_by_blocks, catalan};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn indicator(lambda: f64) -> ElementaryKernel {
        let fam = Arc::new(CellFamily::segments(&[lambda]));
        ElementaryKernel::indicator(fam, 0).unwrap()
    }

    fn random_nondiagonal(
        rng: &mut ChaCha8Rng,
        fam: &Arc<CellFamily>,
        q: usize,
        tries: usize,
    ) -> ElementaryKernel {
        let n = fam.len() as u32;
        let entries: Vec<(Vec<u32>, Complex64)> = (0..tries)
            .filter_map(|_| {
                let mut t: Vec<u32> = (0..q).map(|_| rng.gen_range(0..n)).collect();
                let mut s = t.clone();
                s.sort_unstable();
                if s.windows(2).any(|w| w[0] == w[1]) {
                    t = (0..n).take(q).map(|i| i).collect();
                    if t.len() < q {
                        return None;
                    }
                }
                Some((t, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            })
            .collect();
        ElementaryKernel::new(q, fam.clone(), entries).unwrap()
    }

    #[test]
    fn indicator_kernel_cumulants_are_lambda() {
        let lambda = 1.5;
        let f = indicator(lambda);
        for m in 2..=6 {
            let k = free_cumulant_poisson(&f, m).unwrap();
            assert!((k - c(lambda, 0.0)).norm() < 1e-12, "m={m}");
        }
        // semicircular: only κ₂ = t
        assert!((free_cumulant_semicircular(&f, 2).unwrap() - c(lambda, 0.0)).norm() < 1e-12);
        for m in 3..=6 {
            assert!(free_cumulant_semicircular(&f, m).unwrap().norm() < 1e-14, "m={m}");
        }
    }

    #[test]
    fn q1_cumulants_are_power_integrals() {
        let fam = Arc::new(CellFamily::segments(&[0.5, 2.0, 1.0]));
        let f = ElementaryKernel::new(
            1,
            fam.clone(),
            [(vec![0], c(1.5, 0.0)), (vec![1], c(-0.5, 0.0)), (vec![2], c(2.0, 0.0))],
        )
        .unwrap();
        for m in 2..=5usize {
            let direct: f64 = (0..3)
                .map(|i| f.coeff(&[i]).re.powi(m as i32) * fam.measure(i as usize))
                .sum();
            let free = free_cumulant_poisson(&f, m).unwrap();
            assert!((free - c(direct, 0.0)).norm() < 1e-12, "free m={m}");
            let classical = classical_cumulant_poisson(&f, m).unwrap();
            assert!((classical - c(direct, 0.0)).norm() < 1e-12, "classical m={m}");
        }
    }

    #[test]
    fn indicator_moments_match_riordan_and_catalan() {
        let lambda = 1.3;
        let f = indicator(lambda);
        for m in 1..=8usize {
            let got = free_moment_poisson(&f, m).unwrap();
            let expect: f64 = (0..=m)
                .map(|j| {
                    let r: f64 = riordan_by_blocks(m, j).to_string().parse().unwrap();
                    lambda.powi(j as i32) * r
                })
                .sum();
            assert!((got - c(expect, 0.0)).norm() < 1e-12, "m={m}");
        }
        for m in 1..=12usize {
            let got = free_moment_semicircular(&f, m).unwrap();
            let expect = if m % 2 == 0 {
                let cm: f64 = catalan(m / 2).to_string().parse().unwrap();
                cm * lambda.powi((m / 2) as i32)
            } else {
                0.0
            };
            assert!((got - c(expect, 0.0)).norm() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn second_moment_is_squared_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fam = Arc::new(CellFamily::segments(&[1.0, 0.5, 2.0]));
        for q in 1..=3usize {
            let raw = random_nondiagonal(&mut rng, &fam, q, 5);
            // mirror symmetry makes φ(I(f)²) the squared norm
            let f = raw.add(&raw.adjoint()).unwrap().scale(c(0.5, 0.0));
            let n2 = f.l2_norm().powi(2);
            let got = free_moment_poisson(&f, 2).unwrap();
            assert!((got.re - n2).abs() < 1e-12 && got.im.abs() < 1e-12, "q={q}");
            let got = free_moment_semicircular(&f, 2).unwrap();
            assert!((got.re - n2).abs() < 1e-12, "q={q}");
            assert!(free_moment_poisson(&f, 1).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn triangle_kernel_third_cumulant() {
        // q=2, m=3: the single partition {{1,6},{2,3},{4,5}} gives the cyclic
        // integral ∫ f(x,y) f(y,z) f(z,x)
        let fam = Arc::new(CellFamily::segments(&[1.0, 1.0, 1.0]));
        let f = ElementaryKernel::new(
            2,
            fam,
            [
                (vec![0, 1], c(1.0, 0.0)),
                (vec![1, 2], c(1.0, 0.0)),
                (vec![2, 0], c(1.0, 0.0)),
                (vec![1, 0], c(1.0, 0.0)),
                (vec![2, 1], c(1.0, 0.0)),
                (vec![0, 2], c(1.0, 0.0)),
            ],
        )
        .unwrap();
        let got = free_cumulant_poisson(&f, 3).unwrap();
        // cyclic sum over distinct triples: 3! orderings of {0,1,2}
        assert!((got - c(6.0, 0.0)).norm() < 1e-12, "{got}");
    }

    #[test]
    fn diagonal_kernels_are_rejected() {
        let fam = Arc::new(CellFamily::segments(&[1.0, 1.0]));
        let f = ElementaryKernel::new(2, fam, [(vec![0, 0], c(1.0, 0.0))]).unwrap();
        assert!(matches!(
            free_cumulant_poisson(&f, 2),
            Err(DiagramError::DiagonalKernel)
        ));
    }

    #[test]
    fn classical_second_cumulant_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let fam = Arc::new(CellFamily::segments(&[1.0, 0.5, 2.0]));
        for q in 1..=2usize {
            let f = random_nondiagonal(&mut rng, &fam, q, 5)
                .symmetrize()
                .add(&random_nondiagonal(&mut rng, &fam, q, 0))
                .unwrap();
            // realify so that full symmetry gives q!‖f̃‖²
            let real = ElementaryKernel::new(
                q,
                fam.clone(),
                f.entries().map(|(t, v)| (t.clone(), c(v.re, 0.0))),
            )
            .unwrap();
            let fact: f64 = (1..=q).map(|i| i as f64).product();
            let got = classical_cumulant_poisson(&real, 2).unwrap();
            let expect = fact * real.l2_norm().powi(2);
            assert!((got - c(expect, 0.0)).norm() < 1e-10, "q={q}: {got} vs {expect}");
        }
    }

    #[test]
    fn moment_cumulant_conversions() {
        // semicircular: κ₂ = t only → even moments C_m t^m on the NC lattice
        let t = 1.7;
        let mut kappa = BTreeMap::new();
        kappa.insert(2, c(t, 0.0));
        let moments = moments_from_cumulants(&kappa, 8, Lattice::NonCrossing).unwrap();
        for m in 1..=8usize {
            let expect = if m % 2 == 0 {
                let cm: f64 = catalan(m / 2).to_string().parse().unwrap();
                cm * t.powi((m / 2) as i32)
            } else {
                0.0
            };
            assert!((moments[&m] - c(expect, 0.0)).norm() < 1e-12, "m={m}");
        }

        // free Poisson: κ_m = λ matches the diagram moments of 𝟙_A
        let lambda = 1.3;
        let mut kappa = BTreeMap::new();
        for m in 1..=8 {
            kappa.insert(m, c(lambda, 0.0));
        }
        kappa.insert(1, c(0.0, 0.0));
        let moments = moments_from_cumulants(&kappa, 8, Lattice::NonCrossing).unwrap();
        let f = indicator(lambda);
        for m in 1..=8usize {
            let diag = free_moment_poisson(&f, m).unwrap();
            assert!((moments[&m] - diag).norm() < 1e-10, "m={m}");
        }

        // zero in, zero out
        let zero = moments_from_cumulants(&BTreeMap::new(), 5, Lattice::All).unwrap();
        assert!(zero.values().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn conversion_roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for lattice in [Lattice::NonCrossing, Lattice::All] {
            for _ in 0..20 {
                let mut kappa = BTreeMap::new();
                for m in 1..=8 {
                    kappa.insert(m, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                }
                let moments = moments_from_cumulants(&kappa, 8, lattice).unwrap();
                let back = cumulants_from_moments(&moments, 8, lattice).unwrap();
                let scale = 1.0 + moments.values().map(|v| v.norm()).fold(0.0, f64::max);
                for m in 1..=8usize {
                    assert!(
                        (back[&m] - kappa[&m]).norm() < 1e-12 * scale,
                        "{lattice:?} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn diagram_cumulants_consistent_with_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let fam = Arc::new(CellFamily::segments(&[1.0, 0.5, 2.0]));
        for q in 1..=2usize {
            let f = random_nondiagonal(&mut rng, &fam, q, 4);
            let m_max = if q == 1 { 6 } else { 4 };
            let mut kappa = BTreeMap::new();
            for m in 1..=m_max {
                kappa.insert(m, free_cumulant_poisson(&f, m).unwrap());
            }
            let moments = moments_from_cumulants(&kappa, m_max, Lattice::NonCrossing).unwrap();
            for m in 1..=m_max {
                let diag = free_moment_poisson(&f, m).unwrap();
                assert!((moments[&m] - diag).norm() < 1e-10, "q={q} m={m}");
            }
        }
    }

    #[test]
    fn fourth_moment_identity_matches_diagram_and_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let fam = Arc::new(CellFamily::segments(&[1.0, 0.5, 2.0]));
        for q in 1..=3usize {
            for _ in 0..4 {
                let raw = random_nondiagonal(&mut rng, &fam, q, 4);
                let f = raw.add(&raw.adjoint()).unwrap().scale(c(0.5, 0.0));
                if f.is_zero() {
                    continue;
                }
                let dec = fourth_moment_identity(&f).unwrap();
                let diag = free_moment_poisson(&f, 4).unwrap();
                assert!(
                    (dec.total() - diag.re).abs() < 1e-10 * (1.0 + diag.re.abs()),
                    "q={q}: {} vs {diag}",
                    dec.total()
                );
                assert!(dec.gap() > 0.0, "q={q}");
                let oracle = moment_oracle(&f, MeasureKind::FreePoisson, 4).unwrap();
                assert!((oracle.re - dec.total()).abs() < 1e-10 * (1.0 + dec.total()));
            }
        }
    }

    #[test]
    fn fourth_moment_identity_indicator() {
        // φ(N̂(A)⁴) = 2λ² + λ
        let lambda = 0.8;
        let f = indicator(lambda);
        let dec = fourth_moment_identity(&f).unwrap();
        assert!((dec.total() - (2.0 * lambda * lambda + lambda)).abs() < 1e-12);
        assert_eq!(dec.arc_terms.len(), 0);
        assert_eq!(dec.star_terms.len(), 1);
        assert!((dec.star_terms[0] - lambda).abs() < 1e-12);
        assert!(fourth_moment_identity(
            &ElementaryKernel::indicator_tensor(
                Arc::new(CellFamily::segments(&[1.0, 1.0])),
                &[0, 1]
            )
            .unwrap()
        )
        .is_err());
    }

    #[test]
    fn oracle_equivalence_smoke() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let fam = Arc::new(CellFamily::segments(&[1.0, 0.5, 2.0, 0.25]));
        for q in 1..=3usize {
            for _ in 0..3 {
                let f = random_nondiagonal(&mut rng, &fam, q, 4);
                for m in 1..=4usize {
                    let a = free_moment_poisson(&f, m).unwrap();
                    let b = moment_oracle(&f, MeasureKind::FreePoisson, m).unwrap();
                    assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()), "P q={q} m={m}");
                    let a = free_moment_semicircular(&f, m).unwrap();
                    let b = moment_oracle(&f, MeasureKind::Semicircular, m).unwrap();
                    assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()), "S q={q} m={m}");
                }
            }
        }
    }

    #[test]
    fn spectral_bounds_and_estimates() {
        // f = 𝟙_A, μ(A)=1: Poisson bound 4^1 · 1 = 4
        let f = indicator(1.0);
        assert!((spectral_bound_poisson(&f, Some(1.0), Some(1.0)) - 4.0).abs() < 1e-12);
        let est = spectral_radius_estimate(&f, ReportKind::FreePoisson, 5).unwrap();
        assert!(est <= 4.0 + 1e-12);

        // semicircular bound (q+1)‖f‖ = 2; true radius of S(0,1) is 2
        assert!((spectral_bound_semicircular(&f) - 2.0).abs() < 1e-12);
        let est = spectral_radius_estimate(&f, ReportKind::Semicircular, 6).unwrap();
        assert!(est <= 2.0 + 1e-12);

        // estimate is monotone nondecreasing in m
        let mut prev = 0.0;
        for m in 1..=6 {
            let e = spectral_radius_estimate(&f, ReportKind::Semicircular, m).unwrap();
            assert!(e >= prev - 1e-12);
            prev = e;
        }
    }

    #[test]
    fn report_serialization() {
        let mut values = BTreeMap::new();
        values.insert(2, c(1.0, 0.0));
        values.insert(3, c(0.5, -0.25));
        let report = CumulantReport {
            kind: ReportKind::FreePoisson,
            method: ReportMethod::Diagram,
            values,
        };
        let v = report.to_json();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["kind"], "free_poisson");
        let mut buf = Vec::new();
        report.to_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("kind,method,m,re,im\n"));
        assert_eq!(s.lines().count(), 3);
    }
}
