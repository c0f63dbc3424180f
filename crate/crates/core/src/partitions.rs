//! Set partitions, non-crossing partitions and the constrained classes used
//! by the diagram formulas.
//!
//! Partitions of `[n] = {1, ..., n}` are stored with blocks sorted internally
//! and ordered by least element, which makes structural equality canonical.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("blocks do not form a partition of [{0}]")]
    InvalidBlocks(usize),
    #[error("ground-set size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("enumeration cap exceeded: ground set {requested} > cap {cap}")]
    CapExceeded { requested: usize, cap: usize },
}

/// A partition of `[n]`, blocks ordered by least element.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.blocks)
    }
}

impl SetPartition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        let mut blocks: Vec<Vec<usize>> = blocks.into_iter().filter(|b| !b.is_empty()).collect();
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut seen = vec![false; n + 1];
        let mut count = 0;
        for b in &blocks {
            for &e in b {
                if e == 0 || e > n || seen[e] {
                    return Err(PartitionError::InvalidBlocks(n));
                }
                seen[e] = true;
                count += 1;
            }
        }
        if count != n {
            return Err(PartitionError::InvalidBlocks(n));
        }
        Ok(SetPartition { n, blocks })
    }

    /// Build from block labels: `labels[i]` is the block id of element `i+1`.
    pub fn from_labels(labels: &[usize]) -> Self {
        let n = labels.len();
        let mut map: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, &l) in labels.iter().enumerate() {
            map.entry(l).or_default().push(i + 1);
        }
        SetPartition::new(n, map.into_values().collect()).expect("labels cover [n]")
    }

    /// The discrete partition `{{1}, ..., {n}}`.
    pub fn bottom(n: usize) -> Self {
        SetPartition {
            n,
            blocks: (1..=n).map(|e| vec![e]).collect(),
        }
    }

    /// The one-block partition `{[n]}`.
    pub fn top(n: usize) -> Self {
        SetPartition {
            n,
            blocks: if n == 0 { vec![] } else { vec![(1..=n).collect()] },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of each element, 0-based, indexed by `element - 1`.
    pub fn block_labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (bi, b) in self.blocks.iter().enumerate() {
            for &e in b {
                labels[e - 1] = bi;
            }
        }
        labels
    }

    pub fn has_singleton(&self) -> bool {
        self.blocks.iter().any(|b| b.len() == 1)
    }

    /// True iff no crossing quadruple `p1 < q1 < p2 < q2` with `p1 ~ p2`,
    /// `q1 ~ q2` in different blocks exists. Linear scan with a stack of
    /// open blocks: each element must continue the top block or open a new
    /// one.
    pub fn is_noncrossing(&self) -> bool {
        let labels = self.block_labels();
        let mut remaining: Vec<usize> = self.blocks.iter().map(|b| b.len()).collect();
        let mut on_stack = vec![false; self.blocks.len()];
        let mut stack: Vec<usize> = Vec::new();
        for e in 1..=self.n {
            let b = labels[e - 1];
            if let Some(&top) = stack.last() {
                if top == b {
                    // continuing the open top block
                } else if on_stack[b] {
                    return false;
                } else {
                    stack.push(b);
                    on_stack[b] = true;
                }
            } else {
                stack.push(b);
                on_stack[b] = true;
            }
            remaining[b] -= 1;
            if remaining[b] == 0 {
                // a block can only close while on top, otherwise it is crossed
                if stack.last() != Some(&b) {
                    return false;
                }
                stack.pop();
            }
        }
        true
    }

    /// Meet in the full partition lattice: blocks are the nonempty pairwise
    /// intersections.
    pub fn meet(&self, other: &SetPartition) -> Result<SetPartition, PartitionError> {
        if self.n != other.n {
            return Err(PartitionError::SizeMismatch(self.n, other.n));
        }
        let la = self.block_labels();
        let lb = other.block_labels();
        let labels: Vec<usize> = (0..self.n)
            .map(|i| la[i] * (other.block_count() + 1) + lb[i])
            .collect();
        Ok(SetPartition::from_labels(&labels))
    }

    /// Join in the full partition lattice `P(n)`: connected components of the
    /// block-overlap graph (union-find over both block structures).
    pub fn join_in_p(&self, other: &SetPartition) -> Result<SetPartition, PartitionError> {
        if self.n != other.n {
            return Err(PartitionError::SizeMismatch(self.n, other.n));
        }
        let mut uf = UnionFind::new(self.n);
        for b in self.blocks.iter().chain(other.blocks.iter()) {
            for w in b.windows(2) {
                uf.union(w[0] - 1, w[1] - 1);
            }
        }
        let labels: Vec<usize> = (0..self.n).map(|i| uf.find(i)).collect();
        Ok(SetPartition::from_labels(&labels))
    }

    /// True iff no block meets any interval block of `bp` more than once,
    /// i.e. `self ∧ bp = 0̂`.
    pub fn respects(&self, bp: &BlockPartition) -> Result<bool, PartitionError> {
        if self.n != bp.n() {
            return Err(PartitionError::SizeMismatch(self.n, bp.n()));
        }
        let group = bp.group_labels();
        for b in &self.blocks {
            for w in b.windows(2) {
                // sorted block: equal groups are adjacent
                if group[w[0] - 1] == group[w[1] - 1] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// True iff the linkage graph over the blocks of `bp` is connected,
    /// i.e. `self ∨ bp = 1̂`.
    pub fn connects(&self, bp: &BlockPartition) -> Result<bool, PartitionError> {
        if self.n != bp.n() {
            return Err(PartitionError::SizeMismatch(self.n, bp.n()));
        }
        if bp.sizes().is_empty() {
            return Ok(true);
        }
        let group = bp.group_labels();
        let r = bp.sizes().len();
        let mut uf = UnionFind::new(r);
        for b in &self.blocks {
            for w in b.windows(2) {
                uf.union(group[w[0] - 1], group[w[1] - 1]);
            }
        }
        let root = uf.find(0);
        Ok((1..r).all(|g| uf.find(g) == root))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// An interval partition `n₁ ⊗ n₂ ⊗ ... ⊗ n_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    sizes: Vec<usize>,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Self {
        assert!(sizes.iter().all(|&s| s > 0), "block sizes must be positive");
        BlockPartition { sizes }
    }

    /// The partition `q ⊗ ... ⊗ q` with `m` factors.
    pub fn uniform(q: usize, m: usize) -> Self {
        BlockPartition::new(vec![q; m])
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Group index of each element of `[n]`, indexed by `element - 1`.
    pub fn group_labels(&self) -> Vec<usize> {
        let mut labels = Vec::with_capacity(self.n());
        for (g, &s) in self.sizes.iter().enumerate() {
            labels.extend(std::iter::repeat(g).take(s));
        }
        labels
    }

    pub fn as_partition(&self) -> SetPartition {
        let labels = self.group_labels();
        SetPartition::from_labels(&labels)
    }
}

/// The constrained partition classes of the diagram formulas, indexed over
/// `[mq]` with the block partition `q ⊗ ... ⊗ q` (`m` factors).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartitionClass {
    /// `NC([mq], π*)`: non-crossing, respecting and connecting.
    Nc,
    /// `NC⁰([mq], π*)`: non-crossing and respecting.
    Nc0,
    /// `NC₂`: `Nc` with all blocks of size exactly 2.
    Nc2,
    /// `NC_{≥2}`: `Nc` with all blocks of size at least 2.
    NcGe2,
    /// `NC⁰₂`: `Nc0` with all blocks of size exactly 2.
    Nc02,
    /// `NC⁰_{≥2}`: `Nc0` with all blocks of size at least 2.
    Nc0Ge2,
    /// All partitions (crossing allowed) respecting and connecting, blocks of
    /// size at least 2: the class of the classical Poisson cumulant formula.
    ClassicalConnecting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSizeRule {
    Any,
    Exactly2,
    AtLeast2,
}

/// Low-level description of a partition class over `[mq]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassConstraints {
    pub noncrossing: bool,
    pub connecting: bool,
    pub block_size: BlockSizeRule,
}

impl PartitionClass {
    pub fn constraints(self) -> ClassConstraints {
        use PartitionClass::*;
        match self {
            Nc => ClassConstraints {
                noncrossing: true,
                connecting: true,
                block_size: BlockSizeRule::Any,
            },
            Nc0 => ClassConstraints {
                noncrossing: true,
                connecting: false,
                block_size: BlockSizeRule::Any,
            },
            Nc2 => ClassConstraints {
                noncrossing: true,
                connecting: true,
                block_size: BlockSizeRule::Exactly2,
            },
            NcGe2 => ClassConstraints {
                noncrossing: true,
                connecting: true,
                block_size: BlockSizeRule::AtLeast2,
            },
            Nc02 => ClassConstraints {
                noncrossing: true,
                connecting: false,
                block_size: BlockSizeRule::Exactly2,
            },
            Nc0Ge2 => ClassConstraints {
                noncrossing: true,
                connecting: false,
                block_size: BlockSizeRule::AtLeast2,
            },
            ClassicalConnecting => ClassConstraints {
                noncrossing: false,
                connecting: true,
                block_size: BlockSizeRule::AtLeast2,
            },
        }
    }
}

/// Default ground-set cap for classes over the full partition lattice.
pub const DEFAULT_CLASSICAL_CAP: usize = 14;
/// Default ground-set cap for non-crossing classes (pruned search is cheap).
pub const DEFAULT_NC_CAP: usize = 26;

/// Enumerate a constrained class over `[mq]` with `π* = q ⊗ ... ⊗ q`.
///
/// The search assigns elements `1..mq` depth-first to an existing block or a
/// fresh one, pruning crossings, respect violations and impossible block
/// sizes as it goes. Sequential yield order is lexicographic in the
/// restricted-growth encoding.
pub fn enumerate_class(
    m: usize,
    q: usize,
    class: PartitionClass,
    cap: Option<usize>,
) -> Result<Vec<SetPartition>, PartitionError> {
    let constraints = class.constraints();
    let cap = cap.unwrap_or(if constraints.noncrossing {
        DEFAULT_NC_CAP
    } else {
        DEFAULT_CLASSICAL_CAP
    });
    let n = m * q;
    if n > cap {
        return Err(PartitionError::CapExceeded { requested: n, cap });
    }
    enumerate_constrained(m, q, constraints)
}

/// Enumerate all `σ ∈ P(mq)` with `σ ∧ π* = 0̂` (no crossing / size / connect
/// constraints). Used by the tamedness sweep.
pub fn enumerate_respecting(
    m: usize,
    q: usize,
    cap: Option<usize>,
) -> Result<Vec<SetPartition>, PartitionError> {
    let cap = cap.unwrap_or(DEFAULT_CLASSICAL_CAP);
    let n = m * q;
    if n > cap {
        return Err(PartitionError::CapExceeded { requested: n, cap });
    }
    enumerate_constrained(
        m,
        q,
        ClassConstraints {
            noncrossing: false,
            connecting: false,
            block_size: BlockSizeRule::Any,
        },
    )
}

fn enumerate_constrained(
    m: usize,
    q: usize,
    c: ClassConstraints,
) -> Result<Vec<SetPartition>, PartitionError> {
    let n = m * q;
    let bp = BlockPartition::uniform(q, m);
    let group = bp.group_labels();

    struct Search<'a> {
        n: usize,
        m: usize,
        group: &'a [usize],
        c: ClassConstraints,
        labels: Vec<usize>,
        sizes: Vec<usize>,
        last_group: Vec<usize>, // per block, group of its most recent element
        stack: Vec<usize>,      // open blocks, for the non-crossing prune
        out: Vec<SetPartition>,
    }

    impl Search<'_> {
        fn size_ok_closed(&self, len: usize) -> bool {
            match self.c.block_size {
                BlockSizeRule::Any => true,
                BlockSizeRule::Exactly2 => len == 2,
                BlockSizeRule::AtLeast2 => len >= 2,
            }
        }

        fn emit(&mut self) {
            if self.c.block_size != BlockSizeRule::Any
                && !self
                    .sizes
                    .iter()
                    .all(|&s| self.size_ok_closed(s))
            {
                return;
            }
            let p = SetPartition::from_labels(&self.labels);
            if self.c.connecting {
                let bp = BlockPartition::uniform(self.n / self.m, self.m);
                if !p.connects(&bp).unwrap() {
                    return;
                }
            }
            self.out.push(p);
        }

        fn step(&mut self, e: usize) {
            if e > self.n {
                self.emit();
                return;
            }
            let g = self.group[e - 1];
            let remaining = self.n - e + 1;
            let nblocks = self.sizes.len();

            // joining an existing block, in increasing block id
            if self.c.noncrossing {
                // only blocks on the stack are reachable; joining a block at
                // depth d closes every block above it
                let depths: Vec<(usize, usize)> = self
                    .stack
                    .iter()
                    .enumerate()
                    .map(|(d, &b)| (b, d))
                    .collect();
                let mut ordered = depths;
                ordered.sort_by_key(|&(b, _)| b);
                for (b, d) in ordered {
                    if self.last_group[b] == g {
                        continue; // respect violation
                    }
                    // blocks popped above d close now; their sizes are final
                    let popped: Vec<usize> = self.stack[d + 1..].to_vec();
                    if !popped.iter().all(|&pb| self.size_ok_closed(self.sizes[pb])) {
                        continue;
                    }
                    if self.c.block_size == BlockSizeRule::Exactly2 && self.sizes[b] >= 2 {
                        continue;
                    }
                    let saved_stack = self.stack.clone();
                    let saved_group = self.last_group[b];
                    self.stack.truncate(d + 1);
                    self.labels[e - 1] = b;
                    self.sizes[b] += 1;
                    self.last_group[b] = g;
                    self.step(e + 1);
                    self.last_group[b] = saved_group;
                    self.sizes[b] -= 1;
                    self.stack = saved_stack;
                }
            } else {
                for b in 0..nblocks {
                    if self.last_group[b] == g {
                        continue;
                    }
                    if self.c.block_size == BlockSizeRule::Exactly2 && self.sizes[b] >= 2 {
                        continue;
                    }
                    let saved_group = self.last_group[b];
                    self.labels[e - 1] = b;
                    self.sizes[b] += 1;
                    self.last_group[b] = g;
                    self.step(e + 1);
                    self.last_group[b] = saved_group;
                    self.sizes[b] -= 1;
                }
            }

            // opening a new block; prune when the blocks that still need a
            // second element cannot all get one
            let open_new_ok = match self.c.block_size {
                BlockSizeRule::Any => true,
                _ => {
                    let deficient = self.sizes.iter().filter(|&&s| s == 1).count() + 1;
                    deficient <= remaining - 1 + 1 && remaining >= 2
                }
            };
            if open_new_ok {
                let b = nblocks;
                self.labels[e - 1] = b;
                self.sizes.push(1);
                self.last_group.push(g);
                if self.c.noncrossing {
                    self.stack.push(b);
                }
                self.step(e + 1);
                if self.c.noncrossing {
                    self.stack.pop();
                }
                self.last_group.pop();
                self.sizes.pop();
            }
        }
    }

    if n == 0 {
        return Ok(vec![]);
    }
    let mut search = Search {
        n,
        m,
        group: &group,
        c,
        labels: vec![0; n],
        sizes: Vec::new(),
        last_group: Vec::new(),
        stack: Vec::new(),
        out: Vec::new(),
    };
    search.step(1);
    Ok(search.out)
}

/// Enumerate every partition of `[n]` (restricted-growth order). Intended for
/// brute-force cross-checks and the classical moment lattice; Bell growth
/// makes this infeasible beyond `n ≈ 14`.
pub fn enumerate_all_partitions(n: usize) -> Vec<SetPartition> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut labels = vec![0usize; n];
    fn rec(labels: &mut Vec<usize>, e: usize, maxb: usize, out: &mut Vec<SetPartition>) {
        if e == labels.len() {
            out.push(SetPartition::from_labels(labels));
            return;
        }
        for b in 0..=maxb {
            labels[e] = b;
            rec(labels, e + 1, maxb.max(b + 1), out);
        }
    }
    rec(&mut labels, 0, 0, &mut out);
    out
}

/// Shared cache of enumerated classes, keyed by `(m, q, class)`.
static CLASS_CACHE: RwLock<Option<HashMap<(usize, usize, PartitionClass), std::sync::Arc<Vec<SetPartition>>>>> =
    RwLock::new(None);

/// Memoized variant of [`enumerate_class`] with default caps.
pub fn class_partitions(
    m: usize,
    q: usize,
    class: PartitionClass,
) -> Result<std::sync::Arc<Vec<SetPartition>>, PartitionError> {
    let key = (m, q, class);
    {
        let guard = CLASS_CACHE.read().unwrap();
        if let Some(cache) = guard.as_ref() {
            if let Some(v) = cache.get(&key) {
                return Ok(v.clone());
            }
        }
    }
    let v = std::sync::Arc::new(enumerate_class(m, q, class, None)?);
    let mut guard = CLASS_CACHE.write().unwrap();
    guard
        .get_or_insert_with(HashMap::new)
        .insert(key, v.clone());
    Ok(v)
}

/// Exact Catalan number `C_n = binom(2n, n) / (n + 1)`.
pub fn catalan(n: usize) -> BigUint {
    binomial(2 * n, n) / BigUint::from(n + 1)
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= BigUint::from(n - i);
        den *= BigUint::from(i + 1);
    }
    num / den
}

/// Riordan number `R_m`: non-crossing partitions of `[m]` without singletons.
/// Computed by the recurrence `(m + 1) R_m = (m - 1)(2 R_{m-1} + 3 R_{m-2})`.
pub fn riordan(m: usize) -> BigUint {
    let mut r_prev = BigUint::one(); // R_0
    let mut r = BigUint::zero(); // R_1
    if m == 0 {
        return r_prev;
    }
    for k in 2..=m {
        let next = (BigUint::from(k - 1) * (BigUint::from(2u32) * &r + BigUint::from(3u32) * &r_prev))
            / BigUint::from(k + 1);
        r_prev = r;
        r = next;
    }
    r
}

/// `R_{m,j}`: non-crossing partitions of `[m]` with no singleton and exactly
/// `j` blocks. Counted by direct enumeration.
pub fn riordan_by_blocks(m: usize, j: usize) -> BigUint {
    if m == 0 {
        return if j == 0 { BigUint::one() } else { BigUint::zero() };
    }
    let parts = enumerate_class(m, 1, PartitionClass::Nc0Ge2, Some(m.max(DEFAULT_NC_CAP)))
        .expect("cap covers m");
    BigUint::from(parts.iter().filter(|p| p.block_count() == j).count())
}
