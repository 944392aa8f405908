//! Problem representation and seeded instance generation.
//!
//! A [`ProblemInstance`] is a square system `A x = b` whose columns are
//! grouped into `n` blocks by a [`BlockPartition`]; the solvers update one
//! block at a time in an order given by a [`Permutation`]. Random instances
//! come from the four distributions of [`Dist`] with `b = 0` and unit blocks;
//! downstream code accepts any block sizes.

mod io;

pub use io::{
    format_matrix, parse_matrix, read_instance, read_matrix, write_instance, write_matrix, IoError,
};

use crate::densenum::Matrix;
use crate::rng::Rng;
use std::fmt;

/// Errors from model construction and enumeration.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    /// Permutation enumeration requested beyond the n <= 9 guard.
    SizeLimit { n: usize, max: usize },
    /// An index sequence is not a valid permutation of its index set.
    BadPermutation,
    /// Partition and matrix dimensions disagree.
    ShapeMismatch,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::SizeLimit { n, max } => {
                write!(
                    f,
                    "enumeration over {n} blocks exceeds the n <= {max} guard"
                )
            }
            ModelError::BadPermutation => write!(f, "not a valid permutation"),
            ModelError::ShapeMismatch => write!(f, "partition does not match matrix dimensions"),
        }
    }
}

impl std::error::Error for ModelError {}

/// Block sizes `(d_1, ..., d_n)` with precomputed offsets; `total()` is the
/// matrix dimension `N = sum d_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockPartition {
    /// All sizes must be >= 1.
    pub fn new(sizes: Vec<usize>) -> Self {
        assert!(!sizes.is_empty(), "partition needs at least one block");
        assert!(sizes.iter().all(|&d| d >= 1), "block sizes must be >= 1");
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        for &d in &sizes {
            offsets.push(acc);
            acc += d;
        }
        offsets.push(acc);
        BlockPartition { sizes, offsets }
    }

    /// `n` blocks of one coordinate each.
    pub fn unit(n: usize) -> Self {
        BlockPartition::new(vec![1; n])
    }

    /// Number of blocks.
    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    /// Total dimension `N`.
    pub fn total(&self) -> usize {
        self.offsets[self.n()]
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Partition with block `k` removed.
    pub fn without(&self, k: usize) -> BlockPartition {
        assert!(self.n() > 1);
        let mut s = self.sizes.clone();
        s.remove(k);
        BlockPartition::new(s)
    }
}

/// An ordering of blocks `0..n`; `order()[t]` is the block updated at
/// position `t`, and `position(i)` is where block `i` appears.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self, ModelError> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (t, &i) in order.iter().enumerate() {
            if i >= n || position[i] != usize::MAX {
                return Err(ModelError::BadPermutation);
            }
            position[i] = t;
        }
        Ok(Permutation { order, position })
    }

    pub fn identity(n: usize) -> Self {
        Permutation::new((0..n).collect()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position of block `i` in the sweep (the inverse permutation).
    pub fn position(&self, i: usize) -> usize {
        self.position[i]
    }

    /// Inverse as a permutation: maps position to block.
    pub fn inverse(&self) -> Permutation {
        Permutation::new(self.position.clone()).unwrap()
    }

    /// The reversed sweep order.
    pub fn reversed(&self) -> Permutation {
        let mut o = self.order.clone();
        o.reverse();
        Permutation::new(o).unwrap()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (t, i) in self.order.iter().enumerate() {
            if t > 0 {
                write!(f, ",")?;
            }
            // 1-based for human-facing output
            write!(f, "{}", i + 1)?;
        }
        write!(f, ")")
    }
}

/// `min 0 s.t. A x = b`, i.e. the square linear system `A x = b` with `A`
/// partitioned column-wise into blocks.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub a: Matrix,
    pub b: Matrix,
    pub partition: BlockPartition,
}

impl ProblemInstance {
    /// `a` must be square, `b` a matching column vector, and the partition
    /// must sum to the dimension. Nonsingularity of `a` is not checked here;
    /// operations that need it report `SingularMatrix` on use.
    pub fn new(a: Matrix, b: Matrix, partition: BlockPartition) -> Result<Self, ModelError> {
        if !a.is_square() || partition.total() != a.rows() || b.rows() != a.rows() || b.cols() != 1
        {
            return Err(ModelError::ShapeMismatch);
        }
        Ok(ProblemInstance { a, b, partition })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn n_blocks(&self) -> usize {
        self.partition.n()
    }

    /// The columns of block `i` as an `N x d_i` matrix.
    pub fn block_cols(&self, i: usize) -> Matrix {
        self.a.block(
            0,
            self.partition.offset(i),
            self.dim(),
            self.partition.size(i),
        )
    }
}

/// The four random matrix distributions of the benchmark protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dist {
    /// Independent standard normal entries.
    Gaussian,
    /// Independent `exp(N(0,1))` entries.
    LogNormal,
    /// Independent `U[0,1)` entries.
    Uniform,
    /// Circulant Hankel: `A[i, j] = delta[(i + j) mod N]` from `N` standard
    /// normal draws; constant anti-diagonals with cyclic wraparound.
    CirculantHankel,
}

impl Dist {
    pub const ALL: [Dist; 4] = [
        Dist::Gaussian,
        Dist::LogNormal,
        Dist::Uniform,
        Dist::CirculantHankel,
    ];

    /// Stable small integer tag for seed derivation.
    pub fn tag(&self) -> u64 {
        match self {
            Dist::Gaussian => 0,
            Dist::LogNormal => 1,
            Dist::Uniform => 2,
            Dist::CirculantHankel => 3,
        }
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dist::Gaussian => "gaussian",
            Dist::LogNormal => "lognormal",
            Dist::Uniform => "uniform",
            Dist::CirculantHankel => "circulant_hankel",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Dist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(Dist::Gaussian),
            "lognormal" | "log-normal" => Ok(Dist::LogNormal),
            "uniform" => Ok(Dist::Uniform),
            "circulant_hankel" | "hankel" => Ok(Dist::CirculantHankel),
            other => Err(format!(
                "unknown distribution '{other}' (expected gaussian, lognormal, uniform, circulant_hankel)"
            )),
        }
    }
}

/// Recipe for one random instance.
#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub dist: Dist,
    pub n_coords: usize,
    pub seed: u64,
}

/// Hard cap on permutation enumeration (9! = 362880).
pub const ENUMERATION_LIMIT: usize = 9;

/// All permutations of `0..n` in lexicographic order; `SizeLimit` above
/// n = 9.
pub fn enumerate_permutations(n: usize) -> Result<Vec<Permutation>, ModelError> {
    assert!(n >= 1);
    if n > ENUMERATION_LIMIT {
        return Err(ModelError::SizeLimit {
            n,
            max: ENUMERATION_LIMIT,
        });
    }
    let items: Vec<usize> = (0..n).collect();
    Ok(sequences(&items)
        .into_iter()
        .map(|o| Permutation::new(o).unwrap())
        .collect())
}

/// All orderings of `{0..n} \ {excluded}` in lexicographic order, each of
/// length `n - 1`; entries are original block indices.
pub fn enumerate_permutations_excluding(
    n: usize,
    excluded: usize,
) -> Result<Vec<Vec<usize>>, ModelError> {
    assert!(n >= 1 && excluded < n);
    if n > ENUMERATION_LIMIT {
        return Err(ModelError::SizeLimit {
            n,
            max: ENUMERATION_LIMIT,
        });
    }
    let items: Vec<usize> = (0..n).filter(|&i| i != excluded).collect();
    Ok(sequences(&items))
}

fn sequences(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (idx, &head) in items.iter().enumerate() {
        let mut rest: Vec<usize> = items.to_vec();
        rest.remove(idx);
        for mut tail in sequences(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Uniform permutation of `0..n` by Fisher–Yates.
pub fn sample_permutation(n: usize, rng: &mut Rng) -> Permutation {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    Permutation::new(order).unwrap()
}

/// Generate one instance: `A` per the spec's distribution, `b = 0`, unit
/// partition (one coordinate per block). Entries are filled row-major, so a
/// spec is a pure recipe: the same seed reproduces the same matrix.
pub fn generate_instance(spec: &RandomSpec) -> ProblemInstance {
    let n = spec.n_coords;
    assert!(n >= 1);
    let mut rng = Rng::seed_from(spec.seed);
    let a = match spec.dist {
        Dist::Gaussian => Matrix::from_fn(n, n, |_, _| rng.next_normal()),
        Dist::LogNormal => Matrix::from_fn(n, n, |_, _| rng.next_normal().exp()),
        Dist::Uniform => Matrix::from_fn(n, n, |_, _| rng.next_f64()),
        Dist::CirculantHankel => {
            let delta: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
            Matrix::from_fn(n, n, |i, j| delta[(i + j) % n])
        }
    };
    ProblemInstance::new(a, Matrix::zeros(n, 1), BlockPartition::unit(n)).unwrap()
}

/// Generate an instance with an explicit block partition: the matrix is
/// drawn exactly as in [`generate_instance`] with `n_coords =
/// partition.total()`, then grouped by `partition`.
pub fn generate_with_partition(
    dist: Dist,
    partition: BlockPartition,
    seed: u64,
) -> ProblemInstance {
    let base = generate_instance(&RandomSpec {
        dist,
        n_coords: partition.total(),
        seed,
    });
    ProblemInstance::new(base.a, base.b, partition).unwrap()
}

/// The divergence counterexample for cyclic 3-block ADMM:
/// `A = [1 1 1; 1 1 2; 1 2 2]`, `b = 0`, unit blocks.
pub fn counterexample_instance() -> ProblemInstance {
    let a = Matrix::from_rows(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]]);
    ProblemInstance::new(a, Matrix::zeros(3, 1), BlockPartition::unit(3)).unwrap()
}

/// Gram matrix `A^T A`, exactly symmetric by construction (the strict upper
/// triangle is computed and mirrored).
pub fn gram(inst: &ProblemInstance) -> Matrix {
    let a = &inst.a;
    let n = a.rows();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += a[(k, i)] * a[(k, j)];
            }
            g[(i, j)] = acc;
            g[(j, i)] = acc;
        }
    }
    g
}
