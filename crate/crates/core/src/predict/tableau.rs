//! Neighborhood tableaux: the current point's history flanked by the trajectory
//! segments of its nearest neighbors.

use serde::{Deserialize, Serialize};

use crate::embedding::{DelayEmbedding, Neighbor, NeighborIndex};
use crate::error::{Error, Result};

/// Which cells of the tableau are populated.
///
/// Columns run from `+k` (future) through `0` (current) to `-k` (past); the
/// center row holds the query point, the other `2r` rows its neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Only the query point and its `k` past states.
    Global,
    /// Only the neighbors' next states.
    LocalNext,
    /// Neighbors' current and next states, plus the query point.
    LocalWithCurrent,
    /// Any other pattern.
    Synthetic(Mask),
}

/// Column masks for the center row and for neighbor rows, indexed by column
/// `0..=2k` (column `k` is the current time).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    pub center: Vec<bool>,
    pub neighbor: Vec<bool>,
}

impl Layout {
    pub fn mask(&self, k: usize) -> Mask {
        let cols = 2 * k + 1;
        let mut center = vec![false; cols];
        let mut neighbor = vec![false; cols];
        match self {
            Layout::Global => center[k..].iter_mut().for_each(|c| *c = true),
            Layout::LocalNext => {
                if k > 0 {
                    neighbor[k - 1] = true;
                }
            }
            Layout::LocalWithCurrent => {
                center[k] = true;
                neighbor[k] = true;
                if k > 0 {
                    neighbor[k - 1] = true;
                }
            }
            Layout::Synthetic(m) => return m.clone(),
        }
        Mask { center, neighbor }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if matches!(self, Layout::LocalNext | Layout::LocalWithCurrent) && k == 0 {
            return Err(Error::invalid("local layouts need k >= 1 for the next-step column"));
        }
        if let Layout::Synthetic(m) = self {
            let cols = 2 * k + 1;
            if m.center.len() != cols || m.neighbor.len() != cols {
                return Err(Error::invalid(format!("synthetic mask must have {cols} columns")));
            }
            if m.center[..k].iter().any(|&c| c) {
                return Err(Error::invalid("the center row has no future values"));
            }
            if !m.center.iter().chain(&m.neighbor).any(|&c| c) {
                return Err(Error::invalid("synthetic mask is empty"));
            }
            for named in [Layout::Global, Layout::LocalNext, Layout::LocalWithCurrent] {
                if named.mask(k) == *m {
                    return Err(Error::invalid("synthetic mask coincides with a named layout"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodTableau {
    pub layout: Layout,
    pub k: usize,
    pub r: usize,
    /// Width of each cell (embedding width).
    pub width: usize,
    pub center: usize,
    /// Neighbors ascending by distance.
    pub neighbors: Vec<Neighbor>,
    /// `(2r + 1) x (2k + 1)` cells of `width` values, row-major. Rows are arranged
    /// as printed: odd-ranked neighbors above the center in descending rank,
    /// even-ranked below in ascending rank.
    pub cells: Vec<f64>,
}

impl NeighborhoodTableau {
    pub fn rows(&self) -> usize {
        2 * self.r + 1
    }

    pub fn cols(&self) -> usize {
        2 * self.k + 1
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.cols() + col) * self.width;
        &self.cells[start..start + self.width]
    }

    /// Tableau row holding the neighbor of 1-based rank `rank`.
    pub fn row_of_rank(&self, rank: usize) -> usize {
        if rank % 2 == 1 {
            self.r - rank.div_ceil(2)
        } else {
            self.r + rank / 2
        }
    }

    /// Number of cells with at least one nonzero value.
    pub fn nonzero_cells(&self) -> usize {
        self.cells.chunks(self.width).filter(|c| c.iter().any(|&v| v != 0.0)).count()
    }
}

/// Largest future and past offsets a mask touches on neighbor rows and the center row.
fn reach(mask: &Mask, k: usize) -> (usize, usize, usize) {
    let fut = |m: &[bool]| m[..k].iter().position(|&c| c).map_or(0, |i| k - i);
    let past = |m: &[bool]| m[k + 1..].iter().rposition(|&c| c).map_or(0, |i| i + 1);
    (fut(&mask.neighbor), past(&mask.neighbor), past(&mask.center))
}

/// Builds the tableau around row `t` with `2r` neighbors and `k` history columns.
///
/// Neighbors whose required past or future falls outside the embedding are
/// skipped in favor of the next-nearest admissible rows.
pub fn build_tableau(idx: &NeighborIndex<'_>, t: usize, r: usize, k: usize, layout: Layout) -> Result<NeighborhoodTableau> {
    layout.validate(k)?;
    let emb: &DelayEmbedding = idx.embedding();
    let len = emb.len();
    if t >= len {
        return Err(Error::invalid(format!("row {t} outside embedding of {len} rows")));
    }
    let mask = layout.mask(k);
    let (nfut, npast, cpast) = reach(&mask, k);
    if cpast > t {
        return Err(Error::InsufficientData(format!("row {t} lacks {cpast} past states")));
    }
    let want = 2 * r;
    let neighbors = if want == 0 {
        Vec::new()
    } else {
        let usable = |u: usize| u >= npast && u + nfut < len;
        let admissible = (0..len).filter(|&u| idx.admissible(t, u) && usable(u)).count();
        if admissible < want {
            return Err(Error::InsufficientData(format!(
                "only {admissible} usable neighbors for 2r = {want}; largest achievable r is {}",
                admissible / 2
            )));
        }
        idx.knn_where(t, want, usable)?
    };
    let (rows, cols, w) = (2 * r + 1, 2 * k + 1, emb.width());
    let mut tab = NeighborhoodTableau { layout, k, r, width: w, center: t, neighbors, cells: vec![0.0; rows * cols * w] };
    let put = |row: usize, col: usize, src: usize, cells: &mut Vec<f64>| {
        let start = (row * cols + col) * w;
        cells[start..start + w].copy_from_slice(emb.row(src));
    };
    // Column c holds time offset k - c.
    for c in 0..cols {
        if mask.center[c] {
            put(r, c, t + k - c, &mut tab.cells);
        }
    }
    for (i, nb) in tab.neighbors.clone().iter().enumerate() {
        let row = tab.row_of_rank(i + 1);
        for c in 0..cols {
            if mask.neighbor[c] {
                put(row, c, nb.row + k - c, &mut tab.cells);
            }
        }
    }
    Ok(tab)
}
