//! Exponent summaries, the compatibility condition on `(p, q, alpha, n)`, and
//! the discrete Hölder seminorm of coefficient fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::field::ScalarField;
use crate::geometry::grid::GridKind;
use crate::geometry::layers::LayerStack;

/// Essential bounds of the exponent fields plus the Hölder data of `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSummary {
    pub p_minus: f64,
    pub p_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub alpha: f64,
    pub holder_seminorm: f64,
    pub n: usize,
}

impl ExponentSummary {
    /// Summary of a layer stack: the mollified fields stay inside the convex
    /// hull of adjacent layer constants, so layer-wise min/max are exact
    /// essential bounds.
    pub fn from_stack(stack: &LayerStack, alpha: f64, n: usize, holder_seminorm: f64) -> Self {
        let (p_minus, p_plus) = stack.p_range();
        let (q_minus, q_plus) = stack.q_range();
        ExponentSummary {
            p_minus,
            p_plus,
            q_minus,
            q_plus,
            alpha,
            holder_seminorm,
            n,
        }
    }
}

/// Per-clause outcome of the exponent compatibility chain
/// `1 < p_- <= p_+ <= q_- <= q_+ <= min(p_- + alpha, n(p_- - 1)/(n - p_-))`,
/// `q_+ < n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub p_minus_above_one: bool,
    pub p_ordered: bool,
    pub p_plus_le_q_minus: bool,
    pub q_ordered: bool,
    pub q_plus_le_threshold: bool,
    pub q_plus_below_n: bool,
    /// `min(p_- + alpha, n(p_- - 1)/(n - p_-))`; the Sobolev quotient is
    /// treated as +inf when `p_- >= n`.
    pub threshold: f64,
    pub valid: bool,
}

/// Evaluates the compatibility chain clause by clause. Invalid inputs yield an
/// invalid report rather than an error.
pub fn validate_exponents(summary: &ExponentSummary) -> ValidationReport {
    let s = summary;
    let n = s.n as f64;
    let sobolev = if s.p_minus >= n {
        f64::INFINITY
    } else {
        n * (s.p_minus - 1.0) / (n - s.p_minus)
    };
    let threshold = (s.p_minus + s.alpha).min(sobolev);
    let report = ValidationReport {
        p_minus_above_one: s.p_minus > 1.0,
        p_ordered: s.p_minus <= s.p_plus,
        p_plus_le_q_minus: s.p_plus <= s.q_minus,
        q_ordered: s.q_minus <= s.q_plus,
        q_plus_le_threshold: s.q_plus <= threshold,
        q_plus_below_n: s.q_plus < n,
        threshold,
        valid: false,
    };
    ValidationReport {
        valid: report.p_minus_above_one
            && report.p_ordered
            && report.p_plus_le_q_minus
            && report.q_ordered
            && report.q_plus_le_threshold
            && report.q_plus_below_n,
        ..report
    }
}

/// Discrete Hölder seminorm estimate. `sampled` is set when the pair set was
/// subsampled, in which case the value is a lower estimate of the discrete sup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub value: f64,
    pub sampled: bool,
    pub pairs: usize,
}

/// Pair-count limit for the exhaustive seminorm scan.
const EXHAUSTIVE_PAIR_LIMIT: usize = 200_000;
const RANDOM_PAIRS: usize = 100_000;
const SAMPLING_SEED: u64 = 0x9e3779b97f4a7c15;

/// Discrete supremum of `|a(x) - a(y)| / |x - y|^alpha` over node pairs.
///
/// Grids whose active-pair count exceeds the exhaustive limit are sampled
/// deterministically: all lattice-adjacent pairs, all pairs along the lattice
/// sections (rows, columns, diagonals) through the grid center, and a fixed
/// budget of seeded random pairs. Sections through the center are radially
/// aligned, so the linear interface ramps of layered fields are hit exactly.
pub fn holder_seminorm(field: &ScalarField, alpha: f64) -> Result<HolderEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} not in (0, 1]")));
    }
    let grid = field.grid();
    let vals = field.values();
    let active: Vec<usize> = grid.active_nodes().collect();
    let m = active.len();
    if m < 2 {
        return Ok(HolderEstimate {
            value: 0.0,
            sampled: false,
            pairs: 0,
        });
    }

    let coords: Vec<[f64; 2]> = active.iter().map(|&i| grid.coords(i)).collect();
    let quotient = |ai: usize, bi: usize| -> f64 {
        let [xa, ya] = coords[ai];
        let [xb, yb] = coords[bi];
        let dist = match grid.kind() {
            GridKind::Cartesian2d => (xa - xb).hypot(ya - yb),
            GridKind::Radial => (xa - xb).abs(),
        };
        if dist <= 0.0 {
            return 0.0;
        }
        (vals[active[ai]] - vals[active[bi]]).abs() / dist.powf(alpha)
    };

    if m * (m - 1) / 2 <= EXHAUSTIVE_PAIR_LIMIT {
        let mut best = 0.0f64;
        let mut pairs = 0;
        for i in 0..m {
            for j in (i + 1)..m {
                best = best.max(quotient(i, j));
                pairs += 1;
            }
        }
        return Ok(HolderEstimate {
            value: best,
            sampled: false,
            pairs,
        });
    }

    // Sampled mode. Map lattice index -> position in `active`.
    let mut slot = vec![usize::MAX; grid.node_count()];
    for (k, &idx) in active.iter().enumerate() {
        slot[idx] = k;
    }
    let (nx, ny) = grid.lattice_shape();
    let at = |i: usize, j: usize| slot[j * nx + i];

    let mut best = 0.0f64;
    let mut pairs = 0usize;
    let consider = |a: usize, b: usize, best: &mut f64, pairs: &mut usize| {
        if a != usize::MAX && b != usize::MAX {
            *best = (*best).max(quotient(a, b));
            *pairs += 1;
        }
    };

    // Lattice-adjacent pairs (axis and diagonal neighbors).
    for j in 0..ny {
        for i in 0..nx {
            let here = at(i, j);
            if i + 1 < nx {
                consider(here, at(i + 1, j), &mut best, &mut pairs);
            }
            if j + 1 < ny {
                consider(here, at(i, j + 1), &mut best, &mut pairs);
                if i + 1 < nx {
                    consider(here, at(i + 1, j + 1), &mut best, &mut pairs);
                }
                if i > 0 {
                    consider(here, at(i - 1, j + 1), &mut best, &mut pairs);
                }
            }
        }
    }

    // All pairs along the sections through the lattice center.
    let ic = (nx - 1) / 2;
    let jc = (ny - 1) / 2;
    let mut sections: Vec<Vec<usize>> = Vec::new();
    sections.push((0..nx).filter_map(|i| opt(at(i, jc))).collect());
    if ny > 1 {
        sections.push((0..ny).filter_map(|j| opt(at(ic, j))).collect());
        let diag_len = nx.min(ny);
        sections.push((0..diag_len).filter_map(|k| opt(at(k, k))).collect());
        sections.push(
            (0..diag_len)
                .filter_map(|k| opt(at(k, ny - 1 - k)))
                .collect(),
        );
    }
    for sec in &sections {
        for i in 0..sec.len() {
            for j in (i + 1)..sec.len() {
                best = best.max(quotient(sec[i], sec[j]));
                pairs += 1;
            }
        }
    }

    // Seeded random pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
    for _ in 0..RANDOM_PAIRS {
        let a = rng.gen_range(0..m);
        let b = rng.gen_range(0..m);
        if a != b {
            best = best.max(quotient(a, b));
            pairs += 1;
        }
    }

    Ok(HolderEstimate {
        value: best,
        sampled: true,
        pairs,
    })
}

fn opt(slot: usize) -> Option<usize> {
    (slot != usize::MAX).then_some(slot)
}
