//! Elementary kernels: sparse complex coefficient tables over a family of
//! disjoint axis-aligned cells in R^d, with exact contraction and integral
//! algebra.

use crate::partitions::{enumerate_respecting, PartitionError, SetPartition};
use crate::summation::{CompensatedSum, ComplexSum};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("cell family is invalid: {0}")]
    BadFamily(String),
    #[error("kernel index tuple out of range or wrong arity")]
    BadIndex,
    #[error("operation requires equal kernel orders ({0} vs {1})")]
    OrderMismatch(usize, usize),
    #[error("kernels live on different cell families")]
    FamilyMismatch,
    #[error("contraction indices out of range: k={k}, j={j}, orders {m} and {n}")]
    BadContraction { k: usize, j: usize, m: usize, n: usize },
    #[error("partition ground set {0} does not match m*q = {1}")]
    ArityMismatch(usize, usize),
    #[error("kernel is not mirror symmetric")]
    NotMirrorSymmetric,
    #[error("kernel has diagonal support")]
    DiagonalKernel,
    #[error("metadata length {0} does not match kernel count {1}")]
    MetadataMismatch(usize, usize),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("malformed kernel JSON: {0}")]
    Parse(String),
}

/// A family of pairwise-disjoint bounded axis-aligned boxes in R^d, each with
/// its Lebesgue measure.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFamily {
    dim: usize,
    lows: Vec<Vec<f64>>,
    highs: Vec<Vec<f64>>,
    measures: Vec<f64>,
}

impl CellFamily {
    /// Validating constructor: boxes must be bounded, have positive volume
    /// and be pairwise disjoint (touching faces are fine).
    pub fn new(dim: usize, boxes: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self, KernelError> {
        let mut lows = Vec::with_capacity(boxes.len());
        let mut highs = Vec::with_capacity(boxes.len());
        let mut measures = Vec::with_capacity(boxes.len());
        for (low, high) in boxes {
            if low.len() != dim || high.len() != dim {
                return Err(KernelError::BadFamily(format!(
                    "box dimension does not match family dimension {dim}"
                )));
            }
            let mut vol = 1.0;
            for a in 0..dim {
                if !low[a].is_finite() || !high[a].is_finite() || high[a] <= low[a] {
                    return Err(KernelError::BadFamily(
                        "boxes must be bounded with positive side lengths".into(),
                    ));
                }
                vol *= high[a] - low[a];
            }
            lows.push(low);
            highs.push(high);
            measures.push(vol);
        }
        for i in 0..lows.len() {
            for k in (i + 1)..lows.len() {
                let overlaps = (0..dim)
                    .all(|a| lows[i][a] < highs[k][a] && lows[k][a] < highs[i][a]);
                if overlaps {
                    return Err(KernelError::BadFamily(format!(
                        "cells {i} and {k} overlap"
                    )));
                }
            }
        }
        Ok(CellFamily {
            dim,
            lows,
            highs,
            measures,
        })
    }

    /// Regular grid tiling the box `[low, high]` with `steps[a]` cells per
    /// axis; disjoint by construction. Cell order is lexicographic in the
    /// per-axis indices.
    pub fn grid(low: &[f64], high: &[f64], steps: &[usize]) -> Self {
        let dim = low.len();
        assert_eq!(high.len(), dim);
        assert_eq!(steps.len(), dim);
        assert!(steps.iter().all(|&s| s > 0));
        let widths: Vec<f64> = (0..dim)
            .map(|a| (high[a] - low[a]) / steps[a] as f64)
            .collect();
        assert!(widths.iter().all(|&w| w > 0.0 && w.is_finite()));
        let total: usize = steps.iter().product();
        let mut lows = Vec::with_capacity(total);
        let mut highs = Vec::with_capacity(total);
        let mut measures = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let l: Vec<f64> = (0..dim).map(|a| low[a] + idx[a] as f64 * widths[a]).collect();
            let h: Vec<f64> = (0..dim)
                .map(|a| low[a] + (idx[a] + 1) as f64 * widths[a])
                .collect();
            measures.push(widths.iter().product());
            lows.push(l);
            highs.push(h);
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < steps[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        CellFamily {
            dim,
            lows,
            highs,
            measures,
        }
    }

    /// Consecutive one-dimensional cells starting at 0 with the given
    /// lengths; handy for tests that prescribe measures directly.
    pub fn segments(lengths: &[f64]) -> Self {
        let mut x = 0.0;
        let mut boxes = Vec::with_capacity(lengths.len());
        for &l in lengths {
            assert!(l > 0.0 && l.is_finite());
            boxes.push((vec![x], vec![x + l]));
            x += l;
        }
        CellFamily::new(1, boxes).expect("consecutive segments are disjoint")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn measure(&self, i: usize) -> f64 {
        self.measures[i]
    }

    pub fn low(&self, i: usize) -> &[f64] {
        &self.lows[i]
    }

    pub fn high(&self, i: usize) -> &[f64] {
        &self.highs[i]
    }

    pub fn center(&self, i: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|a| 0.5 * (self.lows[i][a] + self.highs[i][a]))
            .collect()
    }

    pub fn center_distance(&self, i: usize, k: usize) -> f64 {
        let (ci, ck) = (self.center(i), self.center(k));
        (0..self.dim)
            .map(|a| (ci[a] - ck[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Order-q elementary kernel: a finite linear combination of products of cell
/// indicators, stored as a sparse map from index tuples to coefficients.
#[derive(Clone, Debug)]
pub struct ElementaryKernel {
    order: usize,
    family: Arc<CellFamily>,
    coeffs: HashMap<Vec<u32>, Complex64>,
    purely_nondiagonal: bool,
}

impl ElementaryKernel {
    pub fn new(
        order: usize,
        family: Arc<CellFamily>,
        entries: impl IntoIterator<Item = (Vec<u32>, Complex64)>,
    ) -> Result<Self, KernelError> {
        let mut coeffs: HashMap<Vec<u32>, Complex64> = HashMap::new();
        for (idx, c) in entries {
            if idx.len() != order || idx.iter().any(|&i| i as usize >= family.len()) {
                return Err(KernelError::BadIndex);
            }
            if c != Complex64::new(0.0, 0.0) {
                *coeffs.entry(idx).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        let purely_nondiagonal = coeffs.keys().all(|t| {
            let mut s = t.clone();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        });
        Ok(ElementaryKernel {
            order,
            family,
            coeffs,
            purely_nondiagonal,
        })
    }

    /// Order-0 kernel (a plain scalar).
    pub fn scalar(family: Arc<CellFamily>, c: Complex64) -> Self {
        ElementaryKernel::new(0, family, [(vec![], c)]).expect("scalar is valid")
    }

    /// Indicator of a single cell (order 1, coefficient 1).
    pub fn indicator(family: Arc<CellFamily>, cell: u32) -> Result<Self, KernelError> {
        ElementaryKernel::new(1, family, [(vec![cell], Complex64::new(1.0, 0.0))])
    }

    /// Tensor product of cell indicators.
    pub fn indicator_tensor(family: Arc<CellFamily>, cells: &[u32]) -> Result<Self, KernelError> {
        ElementaryKernel::new(
            cells.len(),
            family,
            [(cells.to_vec(), Complex64::new(1.0, 0.0))],
        )
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn family(&self) -> &Arc<CellFamily> {
        &self.family
    }

    pub fn coeff(&self, idx: &[u32]) -> Complex64 {
        self.coeffs.get(idx).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<u32>, Complex64)> {
        self.coeffs.iter().map(|(k, &v)| (k, v))
    }

    pub fn entry_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_purely_nondiagonal(&self) -> bool {
        self.purely_nondiagonal
    }

    pub fn sup_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Measure of the support in Z^q (sum of cell-product volumes over
    /// nonzero entries).
    pub fn support_measure(&self) -> f64 {
        let mut s = CompensatedSum::new();
        for t in self.coeffs.keys() {
            s.add(t.iter().map(|&i| self.family.measure(i as usize)).product());
        }
        s.value()
    }

    /// `f*(t_1,...,t_q) = conj(f(t_q,...,t_1))`.
    pub fn adjoint(&self) -> Self {
        let entries = self.coeffs.iter().map(|(t, c)| {
            let mut r = t.clone();
            r.reverse();
            (r, c.conj())
        });
        ElementaryKernel::new(self.order, self.family.clone(), entries).expect("adjoint is valid")
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        let adj = self.adjoint();
        self.max_coeff_distance(&adj) <= 1e-14 * (1.0 + self.sup_norm())
    }

    pub fn is_fully_symmetric(&self) -> bool {
        for (t, c) in &self.coeffs {
            let mut perm = t.clone();
            if !permutations_all(&mut perm, 0, &mut |p| {
                (self.coeff(p) - c).norm() <= 1e-14 * (1.0 + c.norm())
            }) {
                return false;
            }
        }
        true
    }

    /// Symmetrization: average over all argument permutations.
    pub fn symmetrize(&self) -> Self {
        let mut acc: HashMap<Vec<u32>, ComplexSum> = HashMap::new();
        let fact: f64 = (1..=self.order).map(|i| i as f64).product();
        for (t, c) in &self.coeffs {
            let mut perm = t.clone();
            let share = c / fact;
            permutations_all(&mut perm, 0, &mut |p| {
                acc.entry(p.to_vec()).or_default().add(share);
                true
            });
        }
        ElementaryKernel::new(
            self.order,
            self.family.clone(),
            acc.into_iter().map(|(k, v)| (k, v.value())),
        )
        .expect("symmetrization preserves validity")
    }

    pub fn scale(&self, a: Complex64) -> Self {
        ElementaryKernel::new(
            self.order,
            self.family.clone(),
            self.coeffs.iter().map(|(t, c)| (t.clone(), c * a)),
        )
        .expect("scaling preserves validity")
    }

    pub fn add(&self, other: &Self) -> Result<Self, KernelError> {
        if self.order != other.order {
            return Err(KernelError::OrderMismatch(self.order, other.order));
        }
        if *self.family != *other.family {
            return Err(KernelError::FamilyMismatch);
        }
        ElementaryKernel::new(
            self.order,
            self.family.clone(),
            self.coeffs
                .iter()
                .chain(other.coeffs.iter())
                .map(|(t, c)| (t.clone(), *c)),
        )
    }

    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for (t, c) in &self.coeffs {
            d = d.max((c - other.coeff(t)).norm());
        }
        for (t, c) in &other.coeffs {
            d = d.max((c - self.coeff(t)).norm());
        }
        d
    }

    /// Star contraction: identify `k` argument pairs between the tail of
    /// `self` and the head of `g`; `j` of the identified variables stay as
    /// shared arguments of the result and `k - j` are integrated out. The
    /// result has order `m + n - 2k + j`.
    ///
    /// The arc contraction is `j = 0` (everything identified is integrated);
    /// the `(k, k-1)`-contraction of the product formula keeps one shared
    /// variable, `j = 1`.
    pub fn star_contraction(&self, g: &Self, k: usize, j: usize) -> Result<Self, KernelError> {
        let (m, n) = (self.order, g.order);
        if *self.family != *g.family {
            return Err(KernelError::FamilyMismatch);
        }
        if k > m.min(n) || j > k {
            return Err(KernelError::BadContraction { k, j, m, n });
        }
        let mut gidx: HashMap<&[u32], Vec<(&Vec<u32>, Complex64)>> = HashMap::new();
        for (t, &c) in &g.coeffs {
            gidx.entry(&t[..k]).or_default().push((t, c));
        }
        let mut acc: HashMap<Vec<u32>, ComplexSum> = HashMap::new();
        for (t, &c) in &self.coeffs {
            let u = &t[..m - k];
            let v = &t[m - k..m - k + j];
            // the identified-and-integrated variables appear reversed in the
            // tail of f and forward in the head of g
            let a: Vec<u32> = t[m - k + j..].iter().rev().copied().collect();
            let mut key = a.clone();
            key.extend_from_slice(v);
            let Some(list) = gidx.get(key.as_slice()) else {
                continue;
            };
            let weight: f64 = a
                .iter()
                .map(|&i| self.family.measure(i as usize))
                .product();
            for (gt, gc) in list {
                let mut rk = Vec::with_capacity(m + n - 2 * k + j);
                rk.extend_from_slice(u);
                rk.extend_from_slice(v);
                rk.extend_from_slice(&gt[k..]);
                acc.entry(rk).or_default().add(c * gc * weight);
            }
        }
        ElementaryKernel::new(
            m + n - 2 * k + j,
            self.family.clone(),
            acc.into_iter().map(|(t, s)| (t, s.value())),
        )
    }

    /// `f ⌢_k g`: all `k` identified variables integrated out.
    pub fn arc_contraction(&self, g: &Self, k: usize) -> Result<Self, KernelError> {
        self.star_contraction(g, k, 0)
    }

    pub fn tensor(&self, g: &Self) -> Result<Self, KernelError> {
        self.star_contraction(g, 0, 0)
    }

    /// `⟨f, g⟩ = ∫ f conj(g) dμ^q`, exact over cells.
    pub fn l2_inner(&self, g: &Self) -> Result<Complex64, KernelError> {
        if self.order != g.order {
            return Err(KernelError::OrderMismatch(self.order, g.order));
        }
        if *self.family != *g.family {
            return Err(KernelError::FamilyMismatch);
        }
        let mut s = ComplexSum::new();
        for (t, c) in &self.coeffs {
            let gc = g.coeff(t);
            if gc == Complex64::new(0.0, 0.0) {
                continue;
            }
            let w: f64 = t.iter().map(|&i| self.family.measure(i as usize)).product();
            s.add(c * gc.conj() * w);
        }
        Ok(s.value())
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).expect("same kernel").re.max(0.0).sqrt()
    }

    pub fn l4_norm(&self) -> f64 {
        let mut s = CompensatedSum::new();
        for (t, c) in &self.coeffs {
            let w: f64 = t.iter().map(|&i| self.family.measure(i as usize)).product();
            s.add(c.norm().powi(4) * w);
        }
        s.value().max(0.0).powf(0.25)
    }

    /// `∫ f_σ dμ^{|σ|}`: identify the `mq` arguments of `f^{⊗m}` along the
    /// blocks of `s` and integrate one variable per block.
    pub fn partition_tensor_integral(
        &self,
        s: &SetPartition,
        m: usize,
    ) -> Result<Complex64, KernelError> {
        self.sigma_integral(s, m, false)
    }

    /// Same with `|f|` in place of `f` (the tamedness quantity).
    pub fn abs_partition_tensor_integral(
        &self,
        s: &SetPartition,
        m: usize,
    ) -> Result<f64, KernelError> {
        Ok(self.sigma_integral(s, m, true)?.re)
    }

    fn sigma_integral(
        &self,
        s: &SetPartition,
        m: usize,
        absolute: bool,
    ) -> Result<Complex64, KernelError> {
        let q = self.order;
        let n = m * q;
        if s.n() != n {
            return Err(KernelError::ArityMismatch(s.n(), n));
        }
        if m == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        if self.coeffs.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let labels = s.block_labels();
        let nb = s.block_count();
        let entries: Vec<(&Vec<u32>, Complex64)> = self
            .coeffs
            .iter()
            .map(|(t, &c)| {
                (
                    t,
                    if absolute {
                        Complex64::new(c.norm(), 0.0)
                    } else {
                        c
                    },
                )
            })
            .collect();

        // blocks touched by each tensor factor
        let group_blocks: Vec<Vec<usize>> = (0..m)
            .map(|g| (0..q).map(|p| labels[g * q + p]).collect())
            .collect();

        // greedy ordering: process next the factor sharing the most blocks
        // with the ones already fixed, so lookups stay selective
        let mut order_g: Vec<usize> = vec![0];
        let mut used = vec![false; m];
        used[0] = true;
        let mut seen_blocks = vec![false; nb];
        for &b in &group_blocks[0] {
            seen_blocks[b] = true;
        }
        while order_g.len() < m {
            let mut best = (0usize, usize::MAX);
            for g in 0..m {
                if used[g] {
                    continue;
                }
                let overlap = group_blocks[g].iter().filter(|&&b| seen_blocks[b]).count();
                if best.1 == usize::MAX || overlap > best.0 {
                    best = (overlap, g);
                }
            }
            let g = best.1;
            used[g] = true;
            for &b in &group_blocks[g] {
                seen_blocks[b] = true;
            }
            order_g.push(g);
        }

        // for each later factor, index the entries by their cells at the
        // positions whose block is already assigned at that depth
        let mut bound_positions: Vec<Vec<usize>> = Vec::with_capacity(m);
        let mut assigned = vec![false; nb];
        for &g in order_g.iter() {
            let bound: Vec<usize> = (0..q)
                .filter(|&p| assigned[group_blocks[g][p]])
                .collect();
            for &b in &group_blocks[g] {
                assigned[b] = true;
            }
            bound_positions.push(bound);
        }
        let mut indexes: Vec<HashMap<Vec<u32>, Vec<usize>>> = Vec::with_capacity(m);
        for (depth, &_g) in order_g.iter().enumerate() {
            let mut map: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
            if depth > 0 {
                for (ei, (t, _)) in entries.iter().enumerate() {
                    let key: Vec<u32> = bound_positions[depth].iter().map(|&p| t[p]).collect();
                    map.entry(key).or_default().push(ei);
                }
            }
            indexes.push(map);
        }

        struct Dfs<'a> {
            q: usize,
            family: &'a CellFamily,
            entries: &'a [(&'a Vec<u32>, Complex64)],
            order_g: &'a [usize],
            group_blocks: &'a [Vec<usize>],
            bound_positions: &'a [Vec<usize>],
            indexes: &'a [HashMap<Vec<u32>, Vec<usize>>],
            assign: Vec<Option<u32>>,
            total: ComplexSum,
        }

        impl Dfs<'_> {
            fn descend(&mut self, depth: usize, partial: Complex64) {
                if depth == self.order_g.len() {
                    let mut w = 1.0;
                    for a in &self.assign {
                        w *= self.family.measure(a.expect("all blocks assigned") as usize);
                    }
                    self.total.add(partial * w);
                    return;
                }
                let g = self.order_g[depth];
                let blocks = &self.group_blocks[g];
                let candidates: &[usize] = if depth == 0 {
                    &[]
                } else {
                    let key: Vec<u32> = self.bound_positions[depth]
                        .iter()
                        .map(|&p| self.assign[blocks[p]].expect("bound position assigned"))
                        .collect();
                    match self.indexes[depth].get(&key) {
                        Some(v) => v,
                        None => return,
                    }
                };
                let iter: Box<dyn Iterator<Item = usize>> = if depth == 0 {
                    Box::new(0..self.entries.len())
                } else {
                    Box::new(candidates.iter().copied())
                };
                for ei in iter {
                    let (t, c) = self.entries[ei];
                    let mut newly: Vec<usize> = Vec::new();
                    let mut ok = true;
                    for p in 0..self.q {
                        let b = blocks[p];
                        match self.assign[b] {
                            Some(cell) if cell != t[p] => {
                                ok = false;
                                break;
                            }
                            Some(_) => {}
                            None => {
                                self.assign[b] = Some(t[p]);
                                newly.push(b);
                            }
                        }
                    }
                    if ok {
                        self.descend(depth + 1, partial * c);
                    }
                    for b in newly {
                        self.assign[b] = None;
                    }
                }
            }
        }

        let mut dfs = Dfs {
            q,
            family: &self.family,
            entries: &entries,
            order_g: &order_g,
            group_blocks: &group_blocks,
            bound_positions: &bound_positions,
            indexes: &indexes,
            assign: vec![None; nb],
            total: ComplexSum::new(),
        };
        dfs.descend(0, Complex64::new(1.0, 0.0));
        Ok(dfs.total.value())
    }

    /// Serialize as JSON (cells as `[low..., high...]`, coefficients as
    /// `[i_1, ..., i_q, re, im]`).
    pub fn to_json(&self) -> Value {
        let d = self.family.dim();
        let cells: Vec<Value> = (0..self.family.len())
            .map(|i| {
                let mut row: Vec<f64> = self.family.low(i).to_vec();
                row.extend_from_slice(self.family.high(i));
                json!(row)
            })
            .collect();
        let mut keys: Vec<&Vec<u32>> = self.coeffs.keys().collect();
        keys.sort();
        let coeffs: Vec<Value> = keys
            .iter()
            .map(|t| {
                let c = self.coeffs[*t];
                let mut row: Vec<Value> = t.iter().map(|&i| json!(i)).collect();
                row.push(json!(c.re));
                row.push(json!(c.im));
                json!(row)
            })
            .collect();
        json!({
            "format_version": 1,
            "dim": d,
            "order": self.order,
            "cells": cells,
            "coeffs": coeffs,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, KernelError> {
        let dim = v["dim"]
            .as_u64()
            .ok_or_else(|| KernelError::Parse("missing dim".into()))? as usize;
        let order = v["order"]
            .as_u64()
            .ok_or_else(|| KernelError::Parse("missing order".into()))? as usize;
        let cells = v["cells"]
            .as_array()
            .ok_or_else(|| KernelError::Parse("missing cells".into()))?;
        let mut boxes = Vec::with_capacity(cells.len());
        for c in cells {
            let row: Vec<f64> = c
                .as_array()
                .ok_or_else(|| KernelError::Parse("cell row must be an array".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| KernelError::Parse("bad cell number".into())))
                .collect::<Result<_, _>>()?;
            if row.len() != 2 * dim {
                return Err(KernelError::Parse("cell row must have 2*dim numbers".into()));
            }
            boxes.push((row[..dim].to_vec(), row[dim..].to_vec()));
        }
        let family = Arc::new(CellFamily::new(dim, boxes)?);
        let coeffs = v["coeffs"]
            .as_array()
            .ok_or_else(|| KernelError::Parse("missing coeffs".into()))?;
        let mut entries = Vec::with_capacity(coeffs.len());
        for row in coeffs {
            let row = row
                .as_array()
                .ok_or_else(|| KernelError::Parse("coeff row must be an array".into()))?;
            if row.len() != order + 2 {
                return Err(KernelError::Parse("coeff row must have order + 2 items".into()));
            }
            let idx: Vec<u32> = row[..order]
                .iter()
                .map(|x| {
                    x.as_u64()
                        .map(|i| i as u32)
                        .ok_or_else(|| KernelError::Parse("bad cell index".into()))
                })
                .collect::<Result<_, _>>()?;
            let re = row[order]
                .as_f64()
                .ok_or_else(|| KernelError::Parse("bad coefficient".into()))?;
            let im = row[order + 1]
                .as_f64()
                .ok_or_else(|| KernelError::Parse("bad coefficient".into()))?;
            entries.push((idx, Complex64::new(re, im)));
        }
        ElementaryKernel::new(order, family, entries)
    }
}

fn permutations_all(t: &mut Vec<u32>, i: usize, visit: &mut impl FnMut(&[u32]) -> bool) -> bool {
    if i + 1 >= t.len() {
        return visit(t);
    }
    for k in i..t.len() {
        t.swap(i, k);
        let ok = permutations_all(t, i + 1, visit);
        t.swap(i, k);
        if !ok {
            return false;
        }
    }
    true
}

/// Side data for the sufficient-condition check of a tamed sequence:
/// per-kernel sup bound `M_n`, support half-width `z_n` and concentration
/// radius `α_n`.
#[derive(Clone, Copy, Debug)]
pub struct TamedMeta {
    pub sup_bound: f64,
    pub half_support: f64,
    pub diagonal_radius: f64,
}

#[derive(Clone, Debug)]
pub struct TamednessEntry {
    pub m: usize,
    pub sigma: Vec<Vec<usize>>,
    pub sup_integral: f64,
}

#[derive(Clone, Debug)]
pub struct TamednessReport {
    pub q: usize,
    pub m_max: usize,
    pub entries: Vec<TamednessEntry>,
    /// None when no metadata was supplied.
    pub hypothesis_ok: Option<bool>,
    pub hypothesis_notes: Vec<String>,
}

impl TamednessReport {
    pub fn max_bound(&self) -> f64 {
        self.entries.iter().map(|e| e.sup_integral).fold(0.0, f64::max)
    }
}

/// For each `m ≤ m_max` and each `σ` with `σ ∧ π* = 0̂`, the supremum over
/// the supplied kernels of `∫ |f_n|_σ dμ^{|σ|}`. When `meta` is given, also
/// checks the sufficient conditions (support box, sup bound, concentration
/// radius on cell centers, boundedness of `M^m z^d α^{d(m-1)}` within 5%
/// slack, `α/z` decreasing) on the finite sequence.
pub fn tamedness_bound(
    kernels: &[ElementaryKernel],
    m_max: usize,
    meta: Option<&[TamedMeta]>,
    cap: Option<usize>,
) -> Result<TamednessReport, KernelError> {
    assert!(!kernels.is_empty());
    let q = kernels[0].order();
    for k in kernels {
        if k.order() != q {
            return Err(KernelError::OrderMismatch(q, k.order()));
        }
    }
    let mut entries = Vec::new();
    for m in 2..=m_max {
        for sigma in enumerate_respecting(m, q, cap)? {
            let mut sup = 0.0f64;
            for k in kernels {
                sup = sup.max(k.abs_partition_tensor_integral(&sigma, m)?);
            }
            entries.push(TamednessEntry {
                m,
                sigma: sigma.blocks().to_vec(),
                sup_integral: sup,
            });
        }
    }

    let (hypothesis_ok, hypothesis_notes) = match meta {
        None => (None, Vec::new()),
        Some(meta) => {
            if meta.len() != kernels.len() {
                return Err(KernelError::MetadataMismatch(meta.len(), kernels.len()));
            }
            let mut notes = Vec::new();
            let eps = 1e-9;
            for (i, (k, md)) in kernels.iter().zip(meta).enumerate() {
                let fam = k.family();
                if k.sup_norm() > md.sup_bound * (1.0 + eps) {
                    notes.push(format!(
                        "kernel {i}: sup |f| = {} exceeds M = {}",
                        k.sup_norm(),
                        md.sup_bound
                    ));
                }
                for (t, _) in k.entries() {
                    for &ci in t {
                        let ci = ci as usize;
                        let inside = (0..fam.dim()).all(|a| {
                            fam.low(ci)[a] >= -md.half_support - eps
                                && fam.high(ci)[a] <= md.half_support + eps
                        });
                        if !inside {
                            notes.push(format!(
                                "kernel {i}: support cell {ci} escapes (-z, z)^d with z = {}",
                                md.half_support
                            ));
                        }
                    }
                    for a in 0..t.len() {
                        for b in (a + 1)..t.len() {
                            let dist = fam.center_distance(t[a] as usize, t[b] as usize);
                            if dist > md.diagonal_radius + eps {
                                notes.push(format!(
                                    "kernel {i}: cell centers {} and {} are {dist} apart, beyond α = {}",
                                    t[a], t[b], md.diagonal_radius
                                ));
                            }
                        }
                    }
                }
            }
            for w in meta.windows(2) {
                let (r0, r1) = (
                    w[0].diagonal_radius / w[0].half_support,
                    w[1].diagonal_radius / w[1].half_support,
                );
                if r1 > r0 + eps {
                    notes.push(format!("α/z increases from {r0} to {r1}"));
                }
            }
            let d = kernels[0].family().dim() as i32;
            for m in q..=m_max.max(q) {
                for (i, w) in meta.windows(2).enumerate() {
                    let b = |md: &TamedMeta| {
                        md.sup_bound.powi(m as i32)
                            * md.half_support.powi(d)
                            * md.diagonal_radius.powi(d * (m as i32 - 1))
                    };
                    let (b0, b1) = (b(&w[0]), b(&w[1]));
                    if b1 > b0 * 1.05 {
                        notes.push(format!(
                            "M^m z^d α^(d(m-1)) grows at m = {m}, step {i}: {b0} -> {b1}"
                        ));
                    }
                }
            }
            notes.dedup();
            (Some(notes.is_empty()), notes)
        }
    };

    Ok(TamednessReport {
        q,
        m_max,
        entries,
        hypothesis_ok,
        hypothesis_notes,
    })
}
