//! Level-by-level complex K-best search over the reduced lattice.
//!
//! Each parent exposes its children through an on-demand strip: the first
//! `rlimit` real-axis Schnorr-Euchner candidates (all at the rounded
//! imaginary value), each carrying its own imaginary-axis SE chain. A pop
//! takes the globally best register entry, emits it, and refills by
//! evaluating the popped node's next imaginary sibling, so candidates leave
//! in nondecreasing PED order and the per-level work is bounded by
//! `K*Rlimit + (K-1)` node evaluations.
//!
//! The PED datapath runs either in floating point or in saturating Q-format
//! fixed point. In fixed mode the inputs (rotated vector and R) are
//! quantized and every product, difference, square and accumulation rounds
//! and saturates like the hardware word; enumeration centers stay exact
//! quotients of the quantized operands, which is what a divider-free
//! residual-comparison enumerator orders by.

use crate::fixedpoint::{CFix, QFormat};
use crate::linalg::CMatrix;
use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("singular channel: zero diagonal entry at level {level}")]
    SingularChannel { level: usize },
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Gaussian integer (complex number with integer parts).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GaussInt {
    pub re: i64,
    pub im: i64,
}

impl GaussInt {
    pub const ZERO: GaussInt = GaussInt { re: 0, im: 0 };

    pub fn new(re: i64, im: i64) -> Self {
        GaussInt { re, im }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0 {
            write!(f, "{}{}i", self.re, self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// Arithmetic mode of the per-symbol detection datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    Floating,
    Fixed(QFormat),
}

impl fmt::Display for Arithmetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arithmetic::Floating => write!(f, "floating"),
            Arithmetic::Fixed(q) => write!(f, "fixed:{q}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub n_t: usize,
    pub n_r: usize,
    /// Constellation order (4, 16 or 64).
    pub m: u32,
    /// List size.
    pub k: usize,
    /// Real-axis expansion budget per parent.
    pub rlimit: usize,
    pub arithmetic: Arithmetic,
    /// MMSE regularization of the extended channel on/off.
    pub regularize: bool,
}

impl DetectorConfig {
    pub fn new(n_t: usize, n_r: usize, m: u32, k: usize, rlimit: usize) -> Result<Self, DetectorError> {
        let cfg = DetectorConfig {
            n_t,
            n_r,
            m,
            k,
            rlimit,
            arithmetic: Arithmetic::Floating,
            regularize: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        if self.n_t == 0 || self.n_t > self.n_r {
            return Err(DetectorError::InvalidConfig(format!(
                "need 1 <= n_t <= n_r, got n_t={} n_r={}",
                self.n_t, self.n_r
            )));
        }
        if !matches!(self.m, 4 | 16 | 64) {
            return Err(DetectorError::InvalidConfig(format!(
                "constellation order must be 4, 16 or 64, got {}",
                self.m
            )));
        }
        if self.k == 0 {
            return Err(DetectorError::InvalidConfig("list size k must be >= 1".into()));
        }
        if self.rlimit == 0 {
            return Err(DetectorError::InvalidConfig("rlimit must be >= 1".into()));
        }
        Ok(())
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.m.trailing_zeros()
    }

    pub fn bits_per_vector(&self) -> u32 {
        self.n_t as u32 * self.bits_per_symbol()
    }

    /// Largest constellation level per axis: sqrt(m) - 1.
    pub fn max_level(&self) -> i64 {
        (self.m as f64).sqrt() as i64 - 1
    }

    /// Worst-case evaluated nodes per level: K*Rlimit + (K-1).
    pub fn per_level_node_budget(&self) -> usize {
        self.k * self.rlimit + self.k - 1
    }

    /// Worst-case evaluated nodes per detection: N_T*K*(Rlimit+1) - N_T.
    pub fn total_node_budget(&self) -> usize {
        self.n_t * self.k * (self.rlimit + 1) - self.n_t
    }
}

/// Partial candidate in the reduced domain.
///
/// `symbol` has full length `n_t`; entries for levels `level..=n_t` are
/// fixed (1-based levels, level `l` maps to index `l-1`). `center` is the
/// unconstrained estimate this node was enumerated around and
/// `real_index`/`imag_index` its position in the real/imaginary SE
/// sequences.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub level: usize,
    pub symbol: Vec<GaussInt>,
    pub ped: f64,
    pub center: Complex64,
    pub real_index: usize,
    pub imag_index: usize,
}

/// Up to K nodes at a common level, sorted by nondecreasing PED.
#[derive(Debug, Clone)]
pub struct CandidateList {
    nodes: Vec<SearchNode>,
}

impl CandidateList {
    pub fn from_nodes(nodes: Vec<SearchNode>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0].ped <= w[1].ped), "unsorted candidate list");
        debug_assert!(
            {
                let mut seen: Vec<&[GaussInt]> = Vec::new();
                nodes.iter().all(|n| {
                    let fresh = !seen.contains(&n.symbol.as_slice());
                    seen.push(&n.symbol);
                    fresh
                })
            },
            "duplicate symbol vectors in candidate list"
        );
        CandidateList { nodes }
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn best(&self) -> &SearchNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// One evaluated node, as emitted on the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEval {
    /// 1-based tree level (n_t is processed first).
    pub level: usize,
    /// Parent slot (index into the previous level's candidate list).
    pub parent: usize,
    pub real_index: usize,
    pub imag_index: usize,
    /// The level symbol this evaluation fixed.
    pub symbol: GaussInt,
    pub ped: f64,
}

/// The register-fill phase of one parent: its rlimit real-axis candidates
/// and the strip minimum that enters the register.
#[derive(Debug, Clone)]
pub struct FillBatch {
    pub parent: usize,
    pub evals: Vec<NodeEval>,
    pub register: NodeEval,
}

/// One sort/expand step: the popped register, the sibling evaluated to
/// refill it (absent on the final pop) and the register value after the
/// refill.
#[derive(Debug, Clone)]
pub struct PopEvent {
    pub slot: usize,
    pub popped: NodeEval,
    pub refill_eval: Option<NodeEval>,
    pub register_after: Option<NodeEval>,
}

#[derive(Debug, Clone)]
pub struct LevelTrace {
    pub level: usize,
    pub fills: Vec<FillBatch>,
    pub pops: Vec<PopEvent>,
}

impl LevelTrace {
    /// Nodes whose PED was evaluated at this level.
    pub fn nodes_computed(&self) -> usize {
        self.fills.iter().map(|f| f.evals.len()).sum::<usize>()
            + self.pops.iter().filter(|p| p.refill_eval.is_some()).count()
    }
}

/// Full per-detection trace, levels in processing order (n_t first).
#[derive(Debug, Clone, Default)]
pub struct DetectTrace {
    pub levels: Vec<LevelTrace>,
}

impl DetectTrace {
    /// One CSV line per evaluated node, in evaluation order.
    pub fn node_csv(&self) -> String {
        let mut out = String::from("level,parent,real_index,imag_index,symbol_re,symbol_im,ped\n");
        let mut push = |e: &NodeEval| {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.level, e.parent, e.real_index, e.imag_index, e.symbol.re, e.symbol.im, e.ped
            ));
        };
        for lt in &self.levels {
            for fb in &lt.fills {
                for e in &fb.evals {
                    push(e);
                }
            }
            for p in &lt.pops {
                if let Some(e) = &p.refill_eval {
                    push(e);
                }
            }
        }
        out
    }
}

/// Per-level and total evaluated-node counts recovered from a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeCounts {
    /// (level, count) in processing order.
    pub per_level: Vec<(usize, usize)>,
    pub total: usize,
}

pub fn count_expanded_nodes(trace: &DetectTrace) -> NodeCounts {
    let per_level: Vec<(usize, usize)> =
        trace.levels.iter().map(|lt| (lt.level, lt.nodes_computed())).collect();
    let total = per_level.iter().map(|(_, c)| c).sum();
    NodeCounts { per_level, total }
}

/// Detection result: final candidate list plus node accounting.
#[derive(Debug, Clone)]
pub struct Detection {
    pub candidates: CandidateList,
    pub total_nodes: usize,
    /// Counts in processing order (level n_t first).
    pub per_level_nodes: Vec<usize>,
}

/// Rounds to the nearest integer, ties away from zero.
#[inline]
pub fn round_ties_away(x: f64) -> i64 {
    x.round() as i64
}

/// Element `idx` of the SE sequence around `c`: the nearest integer first,
/// then alternating steps on the side `c` leans toward (`+1` on exact
/// integers).
#[inline]
pub fn se_element(c: f64, idx: usize) -> i64 {
    let z1 = c.round();
    if idx == 0 {
        return z1 as i64;
    }
    let d = if c == z1 { 1.0 } else { (c - z1).signum() };
    let step = ((idx + 1) / 2) as f64;
    let sign = if idx % 2 == 1 { 1.0 } else { -1.0 };
    (z1 + d * step * sign) as i64
}

/// First `n` integers of the SE sequence around `c`; visiting distances
/// from `c` are nondecreasing.
pub fn se_real_sequence(c: f64, n: usize) -> Vec<i64> {
    (0..n).map(|i| se_element(c, i)).collect()
}

/// PED accumulation: previous PED plus the squared residual magnitude.
#[inline]
pub fn ped_increment(prev_ped: f64, residual: Complex64) -> f64 {
    debug_assert!(prev_ped >= 0.0);
    prev_ped + residual.norm_sqr()
}

/// Unconstrained per-level estimate
/// `(y_rot[level] - sum_{j>level} R[level,j] z[j]) / R[level,level]`
/// with 1-based `level`; `z` entries for higher levels must be populated.
pub fn level_center(
    y_rot: &[Complex64],
    r: &CMatrix,
    z: &[GaussInt],
    level: usize,
) -> Result<Complex64, DetectorError> {
    let n_t = r.cols();
    if level == 0 || level > n_t || y_rot.len() < n_t || z.len() < n_t {
        return Err(DetectorError::DimensionMismatch(format!(
            "level {level} outside 1..={n_t} or inputs shorter than n_t"
        )));
    }
    let row = level - 1;
    let mut acc = y_rot[row];
    for j in level..n_t {
        acc -= r.get(row, j) * z[j].to_complex();
    }
    let diag = r.get(row, row);
    if diag.norm_sqr() == 0.0 {
        return Err(DetectorError::SingularChannel { level });
    }
    Ok(acc / diag)
}

/// The next imaginary-axis sibling of a node: same real part, imaginary
/// part advanced one position in the SE sequence around the node's center,
/// PED recomputed for the new symbol.
pub fn se_imag_next(node: &SearchNode, y_rot: &[Complex64], r: &CMatrix) -> SearchNode {
    let n_t = r.cols();
    let row = node.level - 1;
    let imag_index = node.imag_index + 1;
    let mut symbol = node.symbol.clone();
    symbol[row] = GaussInt::new(symbol[row].re, se_element(node.center.im, imag_index));
    // accumulated PED recomputed from the full residual sum over the fixed
    // levels
    let mut ped = 0.0;
    for lvl in (node.level..=n_t).rev() {
        let i = lvl - 1;
        let mut res = y_rot[i];
        for j in i..n_t {
            res -= r.get(i, j) * symbol[j].to_complex();
        }
        ped = ped_increment(ped, res);
    }
    SearchNode { level: node.level, symbol, ped, center: node.center, real_index: node.real_index, imag_index }
}

/// Symbol-wise quantizer Q(.): clamps each axis to the nearest odd integer
/// in [-(sqrt(m)-1), sqrt(m)-1].
pub fn quantize_to_constellation(x: Complex64, m: u32) -> Complex64 {
    let max_level = (m as f64).sqrt() as i64 - 1;
    let axis = |v: f64| -> f64 {
        let odd = 2 * (((v - 1.0) / 2.0).round() as i64) + 1;
        odd.clamp(-max_level, max_level) as f64
    };
    Complex64::new(axis(x.re), axis(x.im))
}

/// Maps a reduced-domain decision back to the constellation:
/// `Q(2 T z + (1+i) 1)`.
pub fn unmap(z_hat: &[GaussInt], t: &CMatrix, m: u32) -> Vec<Complex64> {
    assert_eq!(z_hat.len(), t.cols(), "unmap shape mismatch");
    let zc: Vec<Complex64> = z_hat.iter().map(|z| z.to_complex()).collect();
    t.mul_vec(&zc)
        .into_iter()
        .map(|u| quantize_to_constellation(2.0 * u + Complex64::new(1.0, 1.0), m))
        .collect()
}

// ---------------------------------------------------------------------------
// datapath abstraction

trait Datapath {
    type Val: Copy;
    type Ped: Copy + PartialOrd + fmt::Debug;

    fn load(&self, x: Complex64) -> Self::Val;
    fn value(&self, v: Self::Val) -> Complex64;
    /// `acc - coef * z` with the mode's rounding/saturation.
    fn sub_mul(&self, acc: Self::Val, coef: Self::Val, z: GaussInt) -> Self::Val;
    fn ped_zero(&self) -> Self::Ped;
    /// `p + |residual|^2` with the mode's rounding/saturation.
    fn ped_add_sq(&self, p: Self::Ped, residual: Self::Val) -> Self::Ped;
    fn ped_value(&self, p: Self::Ped) -> f64;
}

struct FloatPath;

impl Datapath for FloatPath {
    type Val = Complex64;
    type Ped = f64;

    fn load(&self, x: Complex64) -> Complex64 {
        x
    }

    fn value(&self, v: Complex64) -> Complex64 {
        v
    }

    fn sub_mul(&self, acc: Complex64, coef: Complex64, z: GaussInt) -> Complex64 {
        acc - coef * z.to_complex()
    }

    fn ped_zero(&self) -> f64 {
        0.0
    }

    fn ped_add_sq(&self, p: f64, residual: Complex64) -> f64 {
        p + residual.norm_sqr()
    }

    fn ped_value(&self, p: f64) -> f64 {
        p
    }
}

struct FixedPath {
    fmt: QFormat,
}

impl Datapath for FixedPath {
    type Val = CFix;
    type Ped = i64;

    fn load(&self, x: Complex64) -> CFix {
        CFix::quantize(x, self.fmt)
    }

    fn value(&self, v: CFix) -> Complex64 {
        v.to_complex()
    }

    fn sub_mul(&self, acc: CFix, coef: CFix, z: GaussInt) -> CFix {
        acc.sub(coef.mul(CFix::quantize(z.to_complex(), self.fmt)))
    }

    fn ped_zero(&self) -> i64 {
        0
    }

    fn ped_add_sq(&self, p: i64, residual: CFix) -> i64 {
        self.fmt.sat_add_raw(p, residual.norm_sqr_raw())
    }

    fn ped_value(&self, p: i64) -> f64 {
        self.fmt.value_of(p)
    }
}

// ---------------------------------------------------------------------------
// search machinery

#[derive(Clone)]
struct Cand<P> {
    symbol: Vec<GaussInt>,
    ped: P,
    center: Complex64,
    real_index: usize,
    imag_index: usize,
}

struct StripEntry<P> {
    parent: usize,
    real_index: usize,
    imag_index: usize,
    z: GaussInt,
    ped: P,
}

struct ParentCtx<V> {
    acc: V,
    center: Complex64,
}

fn entry_is_better<P: PartialOrd>(a: &StripEntry<P>, b: &StripEntry<P>) -> bool {
    // deterministic tie-break: ped, then parent slot, then SE indices
    if a.ped != b.ped {
        return a.ped < b.ped;
    }
    (a.parent, a.real_index, a.imag_index) < (b.parent, b.real_index, b.imag_index)
}

fn node_eval_of<D: Datapath>(dp: &D, level: usize, e: &StripEntry<D::Ped>) -> NodeEval {
    NodeEval {
        level,
        parent: e.parent,
        real_index: e.real_index,
        imag_index: e.imag_index,
        symbol: e.z,
        ped: dp.ped_value(e.ped),
    }
}

fn expand_level_impl<D: Datapath>(
    dp: &D,
    parents: &[Cand<D::Ped>],
    y: &[D::Val],
    rmat: &[Vec<D::Val>],
    level: usize, // 1-based
    cfg: &DetectorConfig,
    trace: bool,
) -> Result<(Vec<Cand<D::Ped>>, usize, Option<LevelTrace>), DetectorError> {
    assert!(!parents.is_empty() && parents.len() <= cfg.k);
    let n_t = cfg.n_t;
    let row = level - 1;
    let rdiag = rmat[row][row];
    if dp.value(rdiag).norm_sqr() == 0.0 {
        return Err(DetectorError::SingularChannel { level });
    }

    let mut nodes_computed = 0usize;
    let mut pools: Vec<Vec<StripEntry<D::Ped>>> = Vec::with_capacity(parents.len());
    let mut ctxs: Vec<ParentCtx<D::Val>> = Vec::with_capacity(parents.len());
    let mut fills: Vec<FillBatch> = Vec::new();

    for (p_idx, parent) in parents.iter().enumerate() {
        let mut acc = y[row];
        for j in level..n_t {
            acc = dp.sub_mul(acc, rmat[row][j], parent.symbol[j]);
        }
        let center = dp.value(acc) / dp.value(rdiag);
        if !center.re.is_finite() || !center.im.is_finite() {
            return Err(DetectorError::SingularChannel { level });
        }
        let im0 = se_element(center.im, 0);
        let mut pool = Vec::with_capacity(cfg.rlimit + 1);
        for real_index in 0..cfg.rlimit {
            let z = GaussInt::new(se_element(center.re, real_index), im0);
            let res = dp.sub_mul(acc, rdiag, z);
            let ped = dp.ped_add_sq(parent.ped, res);
            pool.push(StripEntry { parent: p_idx, real_index, imag_index: 0, z, ped });
            nodes_computed += 1;
        }
        if trace {
            let evals: Vec<NodeEval> = pool.iter().map(|e| node_eval_of(dp, level, e)).collect();
            let register = pool
                .iter()
                .fold(None::<&StripEntry<D::Ped>>, |best, e| match best {
                    Some(b) if entry_is_better(b, e) => Some(b),
                    _ => Some(e),
                })
                .map(|e| node_eval_of(dp, level, e))
                .unwrap();
            fills.push(FillBatch { parent: p_idx, evals, register });
        }
        pools.push(pool);
        ctxs.push(ParentCtx { acc, center });
    }

    let mut children: Vec<Cand<D::Ped>> = Vec::with_capacity(cfg.k);
    let mut pops: Vec<PopEvent> = Vec::new();
    let mut last_ped: Option<D::Ped> = None;

    for pop_i in 0..cfg.k {
        // global minimum over the per-parent strip minima
        let (best_pool, best_idx) = pools
            .iter()
            .enumerate()
            .flat_map(|(pi, pool)| pool.iter().enumerate().map(move |(ei, _)| (pi, ei)))
            .reduce(|a, b| if entry_is_better(&pools[b.0][b.1], &pools[a.0][a.1]) { b } else { a })
            .expect("pools cannot be empty");
        let entry = pools[best_pool].swap_remove(best_idx);

        // popped PEDs never decrease
        if let Some(prev) = last_ped {
            assert!(
                prev <= entry.ped,
                "pop-order PED monotonicity violated at level {level}: {prev:?} then {:?}",
                entry.ped
            );
        }
        last_ped = Some(entry.ped);

        let mut symbol = parents[entry.parent].symbol.clone();
        symbol[row] = entry.z;
        children.push(Cand {
            symbol,
            ped: entry.ped,
            center: ctxs[entry.parent].center,
            real_index: entry.real_index,
            imag_index: entry.imag_index,
        });

        let mut refill_eval = None;
        if pop_i + 1 < cfg.k {
            // evaluate the popped node's next imaginary sibling
            let ctx = &ctxs[entry.parent];
            let imag_index = entry.imag_index + 1;
            let z = GaussInt::new(entry.z.re, se_element(ctx.center.im, imag_index));
            let res = dp.sub_mul(ctx.acc, rdiag, z);
            let ped = dp.ped_add_sq(parents[entry.parent].ped, res);
            nodes_computed += 1;
            let refill = StripEntry { parent: entry.parent, real_index: entry.real_index, imag_index, z, ped };
            assert!(
                entry.ped <= refill.ped,
                "imaginary sibling PED decreased at level {level}"
            );
            if trace {
                refill_eval = Some(node_eval_of(dp, level, &refill));
            }
            pools[entry.parent].push(refill);
        }

        if trace {
            let register_after = if pop_i + 1 < cfg.k {
                pools[entry.parent]
                    .iter()
                    .fold(None::<&StripEntry<D::Ped>>, |best, e| match best {
                        Some(b) if entry_is_better(b, e) => Some(b),
                        _ => Some(e),
                    })
                    .map(|e| node_eval_of(dp, level, e))
            } else {
                None
            };
            pops.push(PopEvent {
                slot: entry.parent,
                popped: node_eval_of(dp, level, &entry),
                refill_eval,
                register_after,
            });
        }
    }

    debug_assert!(nodes_computed <= cfg.per_level_node_budget());
    let lt = trace.then(|| LevelTrace { level, fills, pops });
    Ok((children, nodes_computed, lt))
}

fn detect_impl<D: Datapath>(
    dp: &D,
    y_rot: &[Complex64],
    r: &CMatrix,
    cfg: &DetectorConfig,
    trace: bool,
) -> Result<(Detection, Option<DetectTrace>), DetectorError> {
    cfg.validate()?;
    let n_t = cfg.n_t;
    if y_rot.len() < n_t || r.rows() < n_t || r.cols() < n_t {
        return Err(DetectorError::DimensionMismatch(format!(
            "detect needs y_rot and R covering n_t={n_t}, got y:{} R:{}x{}",
            y_rot.len(),
            r.rows(),
            r.cols()
        )));
    }

    let y: Vec<D::Val> = (0..n_t).map(|i| dp.load(y_rot[i])).collect();
    let rmat: Vec<Vec<D::Val>> =
        (0..n_t).map(|i| (0..n_t).map(|j| dp.load(r.get(i, j))).collect()).collect();
    for (i, rrow) in rmat.iter().enumerate() {
        if dp.value(rrow[i]).norm_sqr() == 0.0 {
            return Err(DetectorError::SingularChannel { level: i + 1 });
        }
    }

    let root = Cand {
        symbol: vec![GaussInt::ZERO; n_t],
        ped: dp.ped_zero(),
        center: Complex64::new(0.0, 0.0),
        real_index: 0,
        imag_index: 0,
    };
    let mut parents = vec![root];
    let mut per_level_nodes = Vec::with_capacity(n_t);
    let mut levels = Vec::with_capacity(n_t);
    for level in (1..=n_t).rev() {
        let (children, count, lt) =
            expand_level_impl(dp, &parents, &y, &rmat, level, cfg, trace)?;
        per_level_nodes.push(count);
        if let Some(lt) = lt {
            levels.push(lt);
        }
        parents = children;
    }

    let nodes: Vec<SearchNode> = parents
        .into_iter()
        .map(|c| SearchNode {
            level: 1,
            symbol: c.symbol,
            ped: dp.ped_value(c.ped),
            center: c.center,
            real_index: c.real_index,
            imag_index: c.imag_index,
        })
        .collect();
    let total_nodes = per_level_nodes.iter().sum();
    let detection = Detection {
        candidates: CandidateList::from_nodes(nodes),
        total_nodes,
        per_level_nodes,
    };
    let trace_out = trace.then_some(DetectTrace { levels });
    Ok((detection, trace_out))
}

/// Runs the K-best search from level `n_t` down to level 1 and returns the
/// final candidate list with node accounting.
///
/// `r` must be upper triangular over its leading `n_t`-by-`n_t` block with
/// nonzero diagonal; `y_rot` is the rotated received vector.
pub fn detect(y_rot: &[Complex64], r: &CMatrix, cfg: &DetectorConfig) -> Result<Detection, DetectorError> {
    match cfg.arithmetic {
        Arithmetic::Floating => detect_impl(&FloatPath, y_rot, r, cfg, false).map(|(d, _)| d),
        Arithmetic::Fixed(fmt) => {
            detect_impl(&FixedPath { fmt }, y_rot, r, cfg, false).map(|(d, _)| d)
        }
    }
}

/// Like [`detect`], additionally recording one trace event per evaluated
/// node for the node-count audit and the pipeline model.
pub fn detect_traced(
    y_rot: &[Complex64],
    r: &CMatrix,
    cfg: &DetectorConfig,
) -> Result<(Detection, DetectTrace), DetectorError> {
    let (d, t) = match cfg.arithmetic {
        Arithmetic::Floating => detect_impl(&FloatPath, y_rot, r, cfg, true)?,
        Arithmetic::Fixed(fmt) => detect_impl(&FixedPath { fmt }, y_rot, r, cfg, true)?,
    };
    Ok((d, t.expect("trace requested")))
}

/// Expands one level of the search in floating point: used directly by
/// tests and exposed for single-level experiments. Parents must share a
/// common level `level+1` (or be the root list for `level = n_t`).
pub fn expand_level(
    parents: &CandidateList,
    y_rot: &[Complex64],
    r: &CMatrix,
    cfg: &DetectorConfig,
    level: usize,
) -> Result<(CandidateList, usize), DetectorError> {
    if parents.is_empty() {
        return Err(DetectorError::InvalidConfig("expand_level needs parents".into()));
    }
    let dp = FloatPath;
    let n_t = cfg.n_t;
    if level == 0 || level > n_t {
        return Err(DetectorError::DimensionMismatch(format!("level {level} outside 1..={n_t}")));
    }
    let y: Vec<Complex64> = (0..n_t).map(|i| dp.load(y_rot[i])).collect();
    let rmat: Vec<Vec<Complex64>> =
        (0..n_t).map(|i| (0..n_t).map(|j| r.get(i, j)).collect()).collect();
    let cands: Vec<Cand<f64>> = parents
        .nodes()
        .iter()
        .map(|n| Cand {
            symbol: n.symbol.clone(),
            ped: n.ped,
            center: n.center,
            real_index: n.real_index,
            imag_index: n.imag_index,
        })
        .collect();
    let (children, count, _) = expand_level_impl(&dp, &cands, &y, &rmat, level, cfg, false)?;
    let nodes = children
        .into_iter()
        .map(|c| SearchNode {
            level,
            symbol: c.symbol,
            ped: c.ped,
            center: c.center,
            real_index: c.real_index,
            imag_index: c.imag_index,
        })
        .collect();
    Ok((CandidateList::from_nodes(nodes), count))
}
