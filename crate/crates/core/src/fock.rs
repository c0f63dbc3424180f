//! Truncated algebraic full Fock space over the cell alphabet, with
//! creation, annihilation and gauge operators. Serves as an independent
//! oracle for moments of multiple integrals: every diagram-formula value is
//! cross-checked against a vacuum expectation computed here.

use crate::kernels::{CellFamily, ElementaryKernel, KernelError};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("state depth {depth} exceeded by creation (needed {needed})")]
    DepthOverflow { depth: usize, needed: usize },
    #[error("cell index {0} not in family of size {1}")]
    UnknownCell(u32, usize),
    #[error("probe operands must live on disjoint cell sets")]
    OverlappingSupports,
    #[error("recursion hypothesis violated: tuple mixes overlapping cells")]
    HypothesisViolated,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Which centered free measure an operator realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    FreePoisson,
    Semicircular,
}

impl MeasureKind {
    /// The gauge-term indicator of the Wick recursion.
    pub fn delta(self) -> f64 {
        match self {
            MeasureKind::FreePoisson => 1.0,
            MeasureKind::Semicircular => 0.0,
        }
    }
}

/// Sparse element of the truncated full Fock space: index strings over the
/// cell alphabet, the empty string being the vacuum component.
#[derive(Clone, Debug)]
pub struct FockState {
    depth: usize,
    amps: HashMap<Vec<u32>, Complex64>,
}

impl FockState {
    pub fn vacuum(depth: usize) -> Self {
        let mut amps = HashMap::new();
        amps.insert(Vec::new(), Complex64::new(1.0, 0.0));
        FockState { depth, amps }
    }

    pub fn zero(depth: usize) -> Self {
        FockState {
            depth,
            amps: HashMap::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn amp(&self, s: &[u32]) -> Complex64 {
        self.amps.get(s).copied().unwrap_or_default()
    }

    pub fn vacuum_amplitude(&self) -> Complex64 {
        self.amp(&[])
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    fn insert(&mut self, s: Vec<u32>, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.amps.entry(s) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == Complex64::new(0.0, 0.0) {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &FockState, a: Complex64) {
        for (s, &c) in &other.amps {
            self.insert(s.clone(), c * a);
        }
        self.amps.retain(|_, c| *c != Complex64::new(0.0, 0.0));
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        let mut out = FockState::zero(self.depth);
        out.add_scaled(self, a);
        out
    }

    /// Weighted inner product: each letter contributes its cell measure.
    pub fn inner(&self, other: &FockState, family: &CellFamily) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (s, &c) in &self.amps {
            let oc = other.amp(s);
            if oc == Complex64::new(0.0, 0.0) {
                continue;
            }
            let w: f64 = s.iter().map(|&i| family.measure(i as usize)).product();
            total += c * oc.conj() * w;
        }
        total
    }

    pub fn max_amp_distance(&self, other: &FockState) -> f64 {
        let mut d: f64 = 0.0;
        for (s, &c) in &self.amps {
            d = d.max((c - other.amp(s)).norm());
        }
        for (s, &c) in &other.amps {
            d = d.max((c - self.amp(s)).norm());
        }
        d
    }

    /// Debug dump: string of cell letters -> [re, im].
    pub fn to_json(&self) -> Value {
        let mut keys: Vec<&Vec<u32>> = self.amps.keys().collect();
        keys.sort();
        let mut map = serde_json::Map::new();
        for s in keys {
            let c = self.amps[s];
            let key = s
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",");
            map.insert(key, json!([c.re, c.im]));
        }
        Value::Object(map)
    }
}

/// `a⁺(A)`: prepend the letter A.
pub fn apply_creation(a: u32, v: &FockState, family: &CellFamily) -> Result<FockState, FockError> {
    if a as usize >= family.len() {
        return Err(FockError::UnknownCell(a, family.len()));
    }
    let mut out = FockState::zero(v.depth);
    for (s, &c) in &v.amps {
        if s.len() + 1 > v.depth {
            return Err(FockError::DepthOverflow {
                depth: v.depth,
                needed: s.len() + 1,
            });
        }
        let mut t = Vec::with_capacity(s.len() + 1);
        t.push(a);
        t.extend_from_slice(s);
        out.insert(t, c);
    }
    Ok(out)
}

/// `a⁻(A)`: strip a leading A with weight μ(A); kills the vacuum and strings
/// with a different leading letter (disjoint indicators).
pub fn apply_annihilation(
    a: u32,
    v: &FockState,
    family: &CellFamily,
) -> Result<FockState, FockError> {
    if a as usize >= family.len() {
        return Err(FockError::UnknownCell(a, family.len()));
    }
    let w = family.measure(a as usize);
    let mut out = FockState::zero(v.depth);
    for (s, &c) in &v.amps {
        if s.first() == Some(&a) {
            out.insert(s[1..].to_vec(), c * w);
        }
    }
    Ok(out)
}

/// `a°(A)`: keep strings whose leading letter is A, kill everything else
/// (including the vacuum).
pub fn apply_gauge(a: u32, v: &FockState, family: &CellFamily) -> Result<FockState, FockError> {
    if a as usize >= family.len() {
        return Err(FockError::UnknownCell(a, family.len()));
    }
    let mut out = FockState::zero(v.depth);
    for (s, &c) in &v.amps {
        if s.first() == Some(&a) {
            out.insert(s.clone(), c);
        }
    }
    Ok(out)
}

/// `N̂₀(A) = a⁺ + a⁻ + a°` or `S₀(A) = a⁺ + a⁻`.
pub fn apply_measure_operator(
    kind: MeasureKind,
    a: u32,
    v: &FockState,
    family: &CellFamily,
) -> Result<FockState, FockError> {
    let mut out = apply_creation(a, v, family)?;
    out.add_scaled(&apply_annihilation(a, v, family)?, Complex64::new(1.0, 0.0));
    if kind == MeasureKind::FreePoisson {
        out.add_scaled(&apply_gauge(a, v, family)?, Complex64::new(1.0, 0.0));
    }
    Ok(out)
}

/// Apply `I_q(𝟙_{A_{t_1}} ⊗ ... ⊗ 𝟙_{A_{t_q}})` to a state through the Wick
/// recursion: with M the measure operator,
/// `I_{q+1}(f_0 ⊗ F) = M(f_0) I_q(F) − ⟨f_0, f_1⟩ I_{q-1}(F') − δ I_q((f_0 f_1) ⊗ F')`,
/// where consecutive equal letters produce the inner-product and gauge
/// correction terms.
fn apply_tuple_integral(
    kind: MeasureKind,
    t: &[u32],
    v: &FockState,
    family: &CellFamily,
) -> Result<FockState, FockError> {
    let q = t.len();
    // states[j] = I(suffix starting at j) v, built right to left
    let mut s_next = v.clone(); // suffix j+1
    let mut s_after = v.clone(); // suffix j+2 (only read when letters repeat)
    for j in (0..q).rev() {
        let mut s = apply_measure_operator(kind, t[j], &s_next, family)?;
        if j + 1 < q && t[j] == t[j + 1] {
            let mu = family.measure(t[j] as usize);
            s.add_scaled(&s_after, Complex64::new(-mu, 0.0));
            s.add_scaled(&s_next, Complex64::new(-kind.delta(), 0.0));
        }
        s_after = s_next;
        s_next = s;
    }
    Ok(s_next)
}

/// Apply the multiple integral of an elementary kernel to a state, by
/// linearity over its coefficient table.
pub fn apply_multiple_integral(
    f: &ElementaryKernel,
    kind: MeasureKind,
    v: &FockState,
) -> Result<FockState, FockError> {
    let family = f.family();
    let mut out = FockState::zero(v.depth);
    for (t, c) in f.entries() {
        let term = apply_tuple_integral(kind, t, v, family)?;
        out.add_scaled(&term, c);
    }
    Ok(out)
}

/// `φ(I(f_1) I(f_2) ⋯ I(f_r))`: apply the operators right to left to the
/// vacuum and read off the vacuum amplitude.
pub fn vacuum_expectation(
    ops: &[(&ElementaryKernel, MeasureKind)],
    depth: usize,
) -> Result<Complex64, FockError> {
    let mut state = FockState::vacuum(depth);
    for (f, kind) in ops.iter().rev() {
        state = apply_multiple_integral(f, *kind, &state)?;
    }
    Ok(state.vacuum_amplitude())
}

/// Oracle moment `φ(I_q(f)^m)`.
pub fn moment_oracle(
    f: &ElementaryKernel,
    kind: MeasureKind,
    m: usize,
) -> Result<Complex64, FockError> {
    let depth = m * f.order() + 2;
    let ops: Vec<(&ElementaryKernel, MeasureKind)> = (0..m).map(|_| (f, kind)).collect();
    vacuum_expectation(&ops, depth)
}

/// Compare `I(f) I(g) Ω` against the contraction expansion of the product
/// formula; returns the maximal amplitude discrepancy.
pub fn verify_product_formula(
    f: &ElementaryKernel,
    g: &ElementaryKernel,
    kind: MeasureKind,
) -> Result<f64, FockError> {
    let (m, n) = (f.order(), g.order());
    let depth = m + n + 2;
    let vac = FockState::vacuum(depth);
    let lhs = apply_multiple_integral(f, kind, &apply_multiple_integral(g, kind, &vac)?)?;

    let mut rhs = FockState::zero(depth);
    for k in 0..=m.min(n) {
        let arc = f.arc_contraction(g, k)?;
        if arc.order() == 0 {
            rhs.add_scaled(&vac, arc.coeff(&[]));
        } else {
            rhs.add_scaled(
                &apply_multiple_integral(&arc, kind, &vac)?,
                Complex64::new(1.0, 0.0),
            );
        }
    }
    if kind == MeasureKind::FreePoisson {
        for k in 1..=m.min(n) {
            let star = f.star_contraction(g, k, 1)?;
            rhs.add_scaled(
                &apply_multiple_integral(&star, kind, &vac)?,
                Complex64::new(1.0, 0.0),
            );
        }
    }
    Ok(lhs.max_amp_distance(&rhs))
}

/// Isometry check: returns (oracle value, kernel-side value) of
/// `φ(I(g)* I(f)) = ⟨f, g⟩ 𝟙{orders equal}`.
pub fn verify_isometry(
    f: &ElementaryKernel,
    g: &ElementaryKernel,
    kind: MeasureKind,
) -> Result<(Complex64, Complex64), FockError> {
    let depth = f.order() + g.order() + 2;
    let gstar = g.adjoint();
    let got = vacuum_expectation(&[(&gstar, kind), (f, kind)], depth)?;
    let expected = if f.order() == g.order() {
        f.l2_inner(g)?
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok((got, expected))
}

/// Check the Wick recursion on a concrete tuple: the prepended letter must
/// equal the first tuple letter or be any other (automatically disjoint)
/// cell. Returns the maximal amplitude discrepancy between the two sides.
pub fn verify_wick_recursion(
    b: u32,
    tuple: &[u32],
    family: &std::sync::Arc<CellFamily>,
    kind: MeasureKind,
) -> Result<f64, FockError> {
    let q = tuple.len();
    let depth = q + 3;
    let vac = FockState::vacuum(depth);

    let mut full = vec![b];
    full.extend_from_slice(tuple);
    let lhs_kernel = ElementaryKernel::indicator_tensor(family.clone(), &full)?;
    let lhs = apply_multiple_integral(&lhs_kernel, kind, &vac)?;

    let f0 = ElementaryKernel::indicator(family.clone(), b)?;
    let mut rhs = if q == 0 {
        apply_multiple_integral(&f0, kind, &vac)?
    } else {
        let tail = ElementaryKernel::indicator_tensor(family.clone(), tuple)?;
        apply_multiple_integral(&f0, kind, &apply_multiple_integral(&tail, kind, &vac)?)?
    };
    if q > 0 && tuple[0] == b {
        let mu = family.measure(b as usize);
        if q >= 2 {
            let rest = ElementaryKernel::indicator_tensor(family.clone(), &tuple[1..])?;
            rhs.add_scaled(
                &apply_multiple_integral(&rest, kind, &vac)?,
                Complex64::new(-mu, 0.0),
            );
        } else {
            rhs.add_scaled(&vac, Complex64::new(-mu, 0.0));
        }
        // (f_0 f_1) = 𝟙_B again, so the gauge term reuses the original tuple
        let same = ElementaryKernel::indicator_tensor(family.clone(), tuple)?;
        rhs.add_scaled(
            &apply_multiple_integral(&same, kind, &vac)?,
            Complex64::new(-kind.delta(), 0.0),
        );
    }
    Ok(lhs.max_amp_distance(&rhs))
}

/// One factor of a word in the free-independence probe.
#[derive(Clone, Copy, Debug)]
pub enum ProbeOp {
    /// Centered free Poisson operator on a cell.
    CenteredPoisson(u32),
    /// Uncentered free Poisson operator: centered plus μ(A) times identity.
    UncenteredPoisson(u32),
    /// Semicircular operator on a cell.
    Semicircular(u32),
}

impl ProbeOp {
    fn cell(&self) -> u32 {
        match *self {
            ProbeOp::CenteredPoisson(a)
            | ProbeOp::UncenteredPoisson(a)
            | ProbeOp::Semicircular(a) => a,
        }
    }
}

/// Polynomial in measure operators: a sum of scaled words.
#[derive(Clone, Debug)]
pub struct OperatorPoly {
    pub terms: Vec<(Complex64, Vec<ProbeOp>)>,
}

impl OperatorPoly {
    pub fn single(op: ProbeOp) -> Self {
        OperatorPoly {
            terms: vec![(Complex64::new(1.0, 0.0), vec![op])],
        }
    }

    fn cells(&self) -> HashSet<u32> {
        self.terms
            .iter()
            .flat_map(|(_, w)| w.iter().map(|op| op.cell()))
            .collect()
    }

    fn apply(&self, v: &FockState, family: &CellFamily) -> Result<FockState, FockError> {
        let mut out = FockState::zero(v.depth);
        for (c, word) in &self.terms {
            let mut s = v.clone();
            for op in word.iter().rev() {
                s = match *op {
                    ProbeOp::CenteredPoisson(a) => {
                        apply_measure_operator(MeasureKind::FreePoisson, a, &s, family)?
                    }
                    ProbeOp::Semicircular(a) => {
                        apply_measure_operator(MeasureKind::Semicircular, a, &s, family)?
                    }
                    ProbeOp::UncenteredPoisson(a) => {
                        let mut t =
                            apply_measure_operator(MeasureKind::FreePoisson, a, &s, family)?;
                        t.add_scaled(&s, Complex64::new(family.measure(a as usize), 0.0));
                        t
                    }
                };
            }
            out.add_scaled(&s, *c);
        }
        Ok(out)
    }
}

/// Result of the alternating-moment probe of free independence.
#[derive(Clone, Debug)]
pub struct IndependenceProbe {
    pub phi_xyxy: Complex64,
    pub formula_rhs: Complex64,
    pub discrepancy: f64,
}

/// Check `φ(XYXY) = φ(Y)²φ(X²) + φ(X)²φ(Y²) − φ(X)²φ(Y)²` for operator
/// polynomials over disjoint cell sets.
pub fn free_independence_probe(
    x: &OperatorPoly,
    y: &OperatorPoly,
    family: &CellFamily,
    depth: usize,
) -> Result<IndependenceProbe, FockError> {
    if !x.cells().is_disjoint(&y.cells()) {
        return Err(FockError::OverlappingSupports);
    }
    let vac = FockState::vacuum(depth);
    let phi = |states: &[&OperatorPoly]| -> Result<Complex64, FockError> {
        let mut s = vac.clone();
        for p in states.iter().rev() {
            s = p.apply(&s, family)?;
        }
        Ok(s.vacuum_amplitude())
    };
    let phi_x = phi(&[x])?;
    let phi_y = phi(&[y])?;
    let phi_xx = phi(&[x, x])?;
    let phi_yy = phi(&[y, y])?;
    let phi_xyxy = phi(&[x, y, x, y])?;
    let rhs = phi_y * phi_y * phi_xx + phi_x * phi_x * phi_yy - phi_x * phi_x * phi_y * phi_y;
    Ok(IndependenceProbe {
        phi_xyxy,
        formula_rhs: rhs,
        discrepancy: (phi_xyxy - rhs).norm(),
    })
}
