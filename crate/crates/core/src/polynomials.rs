//! Generalized Tchebycheff and centered free Charlier polynomials: three-term
//! recurrences and product identities.

/// Polynomial family selector with its single positive parameter (`t` for
/// Tchebycheff, `λ` for Charlier).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolyKind {
    Tchebycheff,
    Charlier,
}

/// Dense coefficient array in x (index = power) of the degree-m polynomial.
///
/// Recurrences: `x H_m = H_{m+1} + t H_{m-1}` with `H_0 = 1`, `H_1 = x`;
/// `x C_m = C_{m+1} + C_m + λ C_{m-1}` with `C_0 = 1`, `C_1 = x`.
pub fn poly_coeffs(kind: PolyKind, param: f64, m: usize) -> Vec<f64> {
    let mut prev = vec![1.0]; // degree 0
    if m == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0]; // degree 1: x
    for _ in 1..m {
        // next = x*cur - (cur if Charlier) - param*prev
        let mut next = vec![0.0; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        if kind == PolyKind::Charlier {
            for (i, &c) in cur.iter().enumerate() {
                next[i] -= c;
            }
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= param * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add_scaled(acc: &mut Vec<f64>, other: &[f64], s: f64) {
    if acc.len() < other.len() {
        acc.resize(other.len(), 0.0);
    }
    for (i, &c) in other.iter().enumerate() {
        acc[i] += s * c;
    }
}

pub fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Maximum coefficient discrepancy between `P_m · P_n` and its linearization:
/// `H_m H_n = Σ_k t^k H_{m+n-2k}` (Tchebycheff) or
/// `C_m C_n = Σ_k λ^k C_{m+n-2k} + Σ_{k≥1} λ^{k-1} C_{m+n-2k+1}` (Charlier).
pub fn verify_product_identity(kind: PolyKind, param: f64, m: usize, n: usize) -> f64 {
    let lhs = poly_mul(
        &poly_coeffs(kind, param, m),
        &poly_coeffs(kind, param, n),
    );
    let mut rhs = vec![0.0];
    for k in 0..=m.min(n) {
        poly_add_scaled(
            &mut rhs,
            &poly_coeffs(kind, param, m + n - 2 * k),
            param.powi(k as i32),
        );
        if kind == PolyKind::Charlier && k >= 1 {
            poly_add_scaled(
                &mut rhs,
                &poly_coeffs(kind, param, m + n - 2 * k + 1),
                param.powi(k as i32 - 1),
            );
        }
    }
    let len = lhs.len().max(rhs.len());
    (0..len)
        .map(|i| {
            let a = lhs.get(i).copied().unwrap_or(0.0);
            let b = rhs.get(i).copied().unwrap_or(0.0);
            (a - b).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{
        apply_measure_operator, apply_multiple_integral, vacuum_expectation, FockState,
        MeasureKind,
    };
    use crate::kernels::{CellFamily, ElementaryKernel};
    use num_complex::Complex64;
    use std::sync::Arc;

    #[test]
    fn low_degree_closed_forms() {
        assert_eq!(poly_coeffs(PolyKind::Tchebycheff, 2.0, 0), vec![1.0]);
        assert_eq!(poly_coeffs(PolyKind::Charlier, 2.0, 0), vec![1.0]);
        assert_eq!(poly_coeffs(PolyKind::Tchebycheff, 2.0, 1), vec![0.0, 1.0]);
        // H_2 = x^2 - t
        assert_eq!(poly_coeffs(PolyKind::Tchebycheff, 2.0, 2), vec![-2.0, 0.0, 1.0]);
        // C_2 = x^2 - x - λ
        assert_eq!(poly_coeffs(PolyKind::Charlier, 2.0, 2), vec![-2.0, -1.0, 1.0]);
    }

    #[test]
    fn product_identities_exact() {
        for kind in [PolyKind::Tchebycheff, PolyKind::Charlier] {
            for &param in &[0.5, 1.0, 2.5] {
                for m in 0..=6 {
                    for n in 0..=6 {
                        let d = verify_product_identity(kind, param, m, n);
                        assert!(d <= 1e-12 * (1.0 + param.powi((m + n) as i32)),
                            "{kind:?} param={param} m={m} n={n}: {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn degree_one_products_by_hand() {
        // x·x = H_2 + t
        let d = verify_product_identity(PolyKind::Tchebycheff, 1.7, 1, 1);
        assert!(d < 1e-14);
        // x·x = C_2 + C_1 + λ
        let lhs = poly_mul(
            &poly_coeffs(PolyKind::Charlier, 1.7, 1),
            &poly_coeffs(PolyKind::Charlier, 1.7, 1),
        );
        let mut rhs = poly_coeffs(PolyKind::Charlier, 1.7, 2);
        poly_add_scaled(&mut rhs, &poly_coeffs(PolyKind::Charlier, 1.7, 1), 1.0);
        poly_add_scaled(&mut rhs, &[1.7], 1.0);
        for i in 0..3 {
            assert!((lhs[i] - rhs[i]).abs() < 1e-14);
        }
    }

    fn operator_poly_state(
        kind: MeasureKind,
        coeffs: &[f64],
        cell: u32,
        fam: &CellFamily,
        depth: usize,
    ) -> FockState {
        // p(M(A)) Ω expanded by Horner iteration on states
        let vac = FockState::vacuum(depth);
        let mut state = FockState::zero(depth);
        for &c in coeffs.iter().rev() {
            state = apply_measure_operator(kind, cell, &state, fam).unwrap();
            state.add_scaled(&vac, Complex64::new(c, 0.0));
        }
        state
    }

    #[test]
    fn integral_of_repeated_indicator_is_the_polynomial() {
        // I_q(𝟙_A^{⊗q}) Ω = P_q(M(A)) Ω for both families
        let fam = Arc::new(CellFamily::segments(&[1.5]));
        for (kind, pk) in [
            (MeasureKind::FreePoisson, PolyKind::Charlier),
            (MeasureKind::Semicircular, PolyKind::Tchebycheff),
        ] {
            for q in 1..=5usize {
                let f = ElementaryKernel::indicator_tensor(fam.clone(), &vec![0; q]).unwrap();
                let lhs =
                    apply_multiple_integral(&f, kind, &FockState::vacuum(q + 2)).unwrap();
                let coeffs = poly_coeffs(pk, 1.5, q);
                let rhs = operator_poly_state(kind, &coeffs, 0, &fam, q + 2);
                assert!(lhs.max_amp_distance(&rhs) < 1e-12, "{kind:?} q={q}");
            }
        }
    }

    #[test]
    fn mixed_run_kernel_matches_polynomial_product() {
        // I(𝟙_A^{⊗2} ⊗ 𝟙_B) Ω = C_2(N̂(A), μA) C_1(N̂(B), μB) Ω
        let fam = Arc::new(CellFamily::segments(&[1.5, 0.5]));
        let f = ElementaryKernel::indicator_tensor(fam.clone(), &[0, 0, 1]).unwrap();
        let kind = MeasureKind::FreePoisson;
        let lhs = apply_multiple_integral(&f, kind, &FockState::vacuum(5)).unwrap();
        let inner = operator_poly_state(kind, &poly_coeffs(PolyKind::Charlier, 0.5, 1), 1, &fam, 5);
        // apply C_2(N̂(A)) to the inner state
        let vac_part = inner.clone();
        let c2 = poly_coeffs(PolyKind::Charlier, 1.5, 2);
        let mut rhs = FockState::zero(5);
        let mut power = vac_part.clone();
        rhs.add_scaled(&power, Complex64::new(c2[0], 0.0));
        for &c in &c2[1..] {
            power = apply_measure_operator(kind, 0, &power, &fam).unwrap();
            rhs.add_scaled(&power, Complex64::new(c, 0.0));
        }
        assert!(lhs.max_amp_distance(&rhs) < 1e-12);
    }

    #[test]
    fn orthogonality_against_oracle() {
        // φ(P_m(M) P_n(M)) = 𝟙{m = n} ‖𝟙_A^{⊗m}‖² = 𝟙{m = n} μ^m
        let mu = 1.3;
        let fam = Arc::new(CellFamily::segments(&[mu]));
        for (kind, _) in [
            (MeasureKind::FreePoisson, PolyKind::Charlier),
            (MeasureKind::Semicircular, PolyKind::Tchebycheff),
        ] {
            for m in 0..=4usize {
                for n in 0..=4usize {
                    let f = ElementaryKernel::indicator_tensor(fam.clone(), &vec![0; m]).unwrap();
                    let g = ElementaryKernel::indicator_tensor(fam.clone(), &vec![0; n]).unwrap();
                    let got = vacuum_expectation(&[(&f, kind), (&g, kind)], m + n + 2).unwrap();
                    let expected = if m == n { mu.powi(m as i32) } else { 0.0 };
                    assert!(
                        (got - Complex64::new(expected, 0.0)).norm() < 1e-12,
                        "{kind:?} m={m} n={n}: {got}"
                    );
                }
            }
        }
    }
}
