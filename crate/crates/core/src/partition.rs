//! Partitions of finite sets of positive integers, colony-labeled partitions,
//! coagulation and the variable-merge maps used by the dual process.
//!
//! Blocks are kept as sorted integer lists and a partition always lists its
//! blocks by increasing least element, so structural equality is equality of
//! partitions.

use std::fmt;

use thiserror::Error;

/// Largest `b` for which partitions of `[b]` are enumerated (Bell(12) ≈ 4.2M).
pub const MAX_ENUMERATION: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("partition has an empty block")]
    EmptyBlock,
    #[error("element {0} appears in more than one block")]
    Overlap(usize),
    #[error("elements must be positive integers")]
    ZeroElement,
    #[error("expected a partition of [{expected}], got one of a different ground set")]
    NotPartitionOfRange { expected: usize },
    #[error("arity mismatch: coagulating {blocks} blocks with a partition of [{arity}]")]
    ArityMismatch { blocks: usize, arity: usize },
    #[error("position {position} out of range for {len} labels")]
    IndexOutOfRange { position: usize, len: usize },
    #[error("labels ({labels}) and blocks ({blocks}) disagree in length")]
    LabelCount { labels: usize, blocks: usize },
    #[error("enumeration of partitions of [{0}] exceeds the cap of {MAX_ENUMERATION}")]
    OverCap(usize),
}

/// A partition of a finite set of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Validates and canonicalizes: every block sorted, blocks ordered by least element.
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        let mut blocks = blocks;
        let mut seen = std::collections::BTreeSet::new();
        for block in &mut blocks {
            if block.is_empty() {
                return Err(PartitionError::EmptyBlock);
            }
            block.sort_unstable();
            for &e in block.iter() {
                if e == 0 {
                    return Err(PartitionError::ZeroElement);
                }
                if !seen.insert(e) {
                    return Err(PartitionError::Overlap(e));
                }
            }
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks })
    }

    /// `{{1},{2},…,{n}}`.
    pub fn singletons(n: usize) -> Self {
        Self {
            blocks: (1..=n).map(|i| vec![i]).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of elements in the ground set.
    pub fn ground_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// True when the ground set is exactly `{1,…,n}` for `n = ground_size()`.
    pub fn is_partition_of_range(&self) -> bool {
        let n = self.ground_size();
        self.blocks.iter().flatten().all(|&e| e <= n)
    }

    /// True for the partition into singletons (no collision).
    pub fn is_trivial(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    /// Block sizes in block order.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Index of the block holding `element`, if any.
    pub fn block_of(&self, element: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.binary_search(&element).is_ok())
    }

    fn require_range(&self) -> Result<usize, PartitionError> {
        let n = self.ground_size();
        if self.is_partition_of_range() {
            Ok(n)
        } else {
            Err(PartitionError::NotPartitionOfRange { expected: n })
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, e) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// `Coag(π, π′)`: block `j` of the result is the union of `π_i` over `i ∈ π′_j`.
///
/// Indices of `π′` beyond `|π|` contribute nothing; blocks left empty are
/// dropped and the result is re-sorted by least element.
pub fn coag(pi: &Partition, pi_prime: &Partition) -> Result<Partition, PartitionError> {
    let k = pi_prime.require_range()?;
    if pi.len() > k {
        return Err(PartitionError::ArityMismatch {
            blocks: pi.len(),
            arity: k,
        });
    }
    let mut blocks: Vec<Vec<usize>> = pi_prime
        .blocks
        .iter()
        .map(|group| {
            let mut merged: Vec<usize> = group
                .iter()
                .filter(|&&i| i <= pi.len())
                .flat_map(|&i| pi.blocks[i - 1].iter().copied())
                .collect();
            merged.sort_unstable();
            merged
        })
        .filter(|b| !b.is_empty())
        .collect();
    blocks.sort_unstable_by_key(|b| b[0]);
    Ok(Partition { blocks })
}

/// One of the two colonies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Colony {
    One,
    Two,
}

impl Colony {
    pub const BOTH: [Colony; 2] = [Colony::One, Colony::Two];

    pub fn other(self) -> Self {
        match self {
            Colony::One => Colony::Two,
            Colony::Two => Colony::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Colony::One => 0,
            Colony::Two => 1,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Colony::One),
            2 => Some(Colony::Two),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl fmt::Display for Colony {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Label vector `η` with `n` ones followed by `m` twos.
pub fn labels_for(n: usize, m: usize) -> Vec<Colony> {
    let mut labels = vec![Colony::One; n];
    labels.extend(std::iter::repeat_n(Colony::Two, m));
    labels
}

pub fn count_label(labels: &[Colony], colony: Colony) -> usize {
    labels.iter().filter(|&&c| c == colony).count()
}

/// A partition whose blocks each carry a colony label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledPartition {
    partition: Partition,
    labels: Vec<Colony>,
}

impl LabeledPartition {
    pub fn new(partition: Partition, labels: Vec<Colony>) -> Result<Self, PartitionError> {
        if partition.len() != labels.len() {
            return Err(PartitionError::LabelCount {
                labels: labels.len(),
                blocks: partition.len(),
            });
        }
        Ok(Self { partition, labels })
    }

    /// `{{1}^{η₁},…,{n}^{ηₙ}}`.
    pub fn singletons(labels: Vec<Colony>) -> Self {
        Self {
            partition: Partition::singletons(labels.len()),
            labels,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn labels(&self) -> &[Colony] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, colony: Colony) -> usize {
        count_label(&self.labels, colony)
    }

    /// Block positions (0-based) that carry `colony`, in block order.
    pub fn positions(&self, colony: Colony) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == colony)
            .collect()
    }

    /// Same partition with block `k` (1-based) relabeled to `colony`.
    pub fn relabeled(&self, k: usize, colony: Colony) -> Result<Self, PartitionError> {
        Ok(Self {
            partition: self.partition.clone(),
            labels: relabel(&self.labels, k, colony)?,
        })
    }
}

/// `γ_{k,i}(η)`: copy of `eta` with position `k` (1-based) set to `colony`.
pub fn relabel(eta: &[Colony], k: usize, colony: Colony) -> Result<Vec<Colony>, PartitionError> {
    if k == 0 || k > eta.len() {
        return Err(PartitionError::IndexOutOfRange {
            position: k,
            len: eta.len(),
        });
    }
    let mut out = eta.to_vec();
    out[k - 1] = colony;
    Ok(out)
}

/// `Coag^i(π^η, π′)`: coagulate the blocks labeled `colony` by `pi_prime`,
/// pass the other colony through, and restore least-element order.
pub fn coag_labeled(
    lp: &LabeledPartition,
    colony: Colony,
    pi_prime: &Partition,
) -> Result<LabeledPartition, PartitionError> {
    let (result, _) = coag_labeled_with_map(lp, colony, pi_prime)?;
    Ok(result)
}

/// The map `Φ^i_π′` identifying tensor variables: pre-collision block `j`
/// goes to the post-collision block holding it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeMap {
    source_arity: usize,
    target_arity: usize,
    /// 1-based target block for each source position.
    index_map: Vec<usize>,
}

impl MergeMap {
    pub fn identity(n: usize) -> Self {
        Self {
            source_arity: n,
            target_arity: n,
            index_map: (1..=n).collect(),
        }
    }

    pub fn source_arity(&self) -> usize {
        self.source_arity
    }

    pub fn target_arity(&self) -> usize {
        self.target_arity
    }

    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    /// Target (1-based) of source position `j` (1-based).
    pub fn target_of(&self, j: usize) -> usize {
        self.index_map[j - 1]
    }

    /// Source positions (1-based) grouped by target, in target order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.target_arity];
        for (j, &t) in self.index_map.iter().enumerate() {
            groups[t - 1].push(j + 1);
        }
        groups
    }
}

pub fn merge_map_of(
    lp_before: &LabeledPartition,
    colony: Colony,
    pi_prime: &Partition,
) -> Result<MergeMap, PartitionError> {
    let (_, map) = coag_labeled_with_map(lp_before, colony, pi_prime)?;
    Ok(map)
}

/// Both the coagulated labeled partition and the induced merge map.
pub fn coag_labeled_with_map(
    lp: &LabeledPartition,
    colony: Colony,
    pi_prime: &Partition,
) -> Result<(LabeledPartition, MergeMap), PartitionError> {
    let positions = lp.positions(colony);
    let b = positions.len();
    if pi_prime.ground_size() != b || !pi_prime.is_partition_of_range() {
        return Err(PartitionError::ArityMismatch {
            blocks: b,
            arity: pi_prime.ground_size(),
        });
    }

    // Each new block is a set of old block positions; its least element is the
    // least element of its first old block because old blocks are ordered.
    let mut groups: Vec<(Vec<usize>, Colony)> = pi_prime
        .blocks()
        .iter()
        .map(|g| (g.iter().map(|&i| positions[i - 1]).collect(), colony))
        .collect();
    groups.extend(
        lp.positions(colony.other())
            .into_iter()
            .map(|p| (vec![p], colony.other())),
    );
    groups.sort_unstable_by_key(|(g, _)| g[0]);

    let mut index_map = vec![0; lp.len()];
    let mut blocks = Vec::with_capacity(groups.len());
    let mut labels = Vec::with_capacity(groups.len());
    for (target, (members, label)) in groups.iter().enumerate() {
        let mut block = Vec::new();
        for &p in members {
            index_map[p] = target + 1;
            block.extend_from_slice(&lp.partition.blocks[p]);
        }
        block.sort_unstable();
        blocks.push(block);
        labels.push(*label);
    }
    let map = MergeMap {
        source_arity: lp.len(),
        target_arity: groups.len(),
        index_map,
    };
    Ok((
        LabeledPartition {
            partition: Partition { blocks },
            labels,
        },
        map,
    ))
}

pub fn bell_number(n: usize) -> u64 {
    // Bell triangle.
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// All partitions of `[b]` in restricted-growth-string order.
pub fn enumerate_partitions(b: usize) -> Result<Vec<Partition>, PartitionError> {
    if b > MAX_ENUMERATION {
        return Err(PartitionError::OverCap(b));
    }
    let mut out = Vec::with_capacity(bell_number(b) as usize);
    if b == 0 {
        out.push(Partition { blocks: Vec::new() });
        return Ok(out);
    }
    let mut rgs = vec![0usize; b];
    let mut max_prefix = vec![0usize; b];
    loop {
        out.push(partition_from_rgs(&rgs));
        // Advance to the next restricted growth string.
        let mut i = b - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            if rgs[i] <= max_prefix[i - 1] {
                rgs[i] += 1;
                max_prefix[i] = max_prefix[i - 1].max(rgs[i]);
                for j in i + 1..b {
                    rgs[j] = 0;
                    max_prefix[j] = max_prefix[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Partitions of `[b]` other than the singleton partition.
pub fn enumerate_nontrivial_partitions(b: usize) -> Result<Vec<Partition>, PartitionError> {
    Ok(enumerate_partitions(b)?
        .into_iter()
        .filter(|p| !p.is_trivial())
        .collect())
}

fn partition_from_rgs(rgs: &[usize]) -> Partition {
    let count = rgs.iter().max().map_or(0, |m| m + 1);
    let mut blocks = vec![Vec::new(); count];
    for (i, &g) in rgs.iter().enumerate() {
        blocks[g].push(i + 1);
    }
    Partition { blocks }
}
