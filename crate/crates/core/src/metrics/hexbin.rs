//! Hexagonal 2-D histogram.
//!
//! Flat-top hexagons addressed by axial coordinates `(q, r)`. The cell size
//! is the circumradius (center to vertex). A point on a cell boundary is
//! assigned to the tied cell with the lexicographically smallest `(q, r)`.

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// One occupied cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexCell {
    pub q: i64,
    pub r: i64,
    pub center_x: f64,
    pub center_y: f64,
    pub count: usize,
}

/// Occupied cells of a hexagonal tiling, sorted by `(q, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HexBinGrid {
    pub cell_size: f64,
    pub cells: Vec<HexCell>,
}

impl HexBinGrid {
    pub fn total_count(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }
}

fn center(q: i64, r: i64, size: f64) -> (f64, f64) {
    let x = size * 1.5 * q as f64;
    let y = size * SQRT3 * (r as f64 + q as f64 / 2.0);
    (x, y)
}

/// Nearest axial cell via cube rounding, then a 7-cell neighborhood scan so
/// boundary ties resolve by the documented `(q, r)` order rather than by
/// rounding noise.
fn assign(x: f64, y: f64, size: f64) -> (i64, i64) {
    let qf = (2.0 / 3.0) * x / size;
    let rf = (-x / 3.0 + SQRT3 / 3.0 * y) / size;
    let (q0, r0) = cube_round(qf, rf);
    let mut best: Option<((i64, i64), f64)> = None;
    for (dq, dr) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)] {
        let (q, r) = (q0 + dq, r0 + dr);
        let (cx, cy) = center(q, r, size);
        let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        best = match best {
            None => Some(((q, r), d2)),
            Some((bk, bd)) => {
                if d2 < bd || (d2 == bd && (q, r) < bk) {
                    Some(((q, r), d2))
                } else {
                    Some((bk, bd))
                }
            }
        };
    }
    best.expect("non-empty candidate set").0
}

fn cube_round(qf: f64, rf: f64) -> (i64, i64) {
    let yf = -qf - rf;
    let mut rq = qf.round();
    let ry = yf.round();
    let mut rr = rf.round();
    let dq = (rq - qf).abs();
    let dy = (ry - yf).abs();
    let dr = (rr - rf).abs();
    if dq > dy && dq > dr {
        rq = -ry - rr;
    } else if dr > dy {
        rr = -rq - ry;
    }
    (rq as i64, rr as i64)
}

/// Bins points into flat-top hexagons of the given circumradius.
pub fn hexbin(points: &[(f64, f64)], cell_size: f64) -> Result<HexBinGrid> {
    if !(cell_size > 0.0) {
        return Err(Error::Domain(format!(
            "hexbin cell size must be positive, got {cell_size}"
        )));
    }
    let mut counts: std::collections::BTreeMap<(i64, i64), usize> = Default::default();
    for &(x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!("non-finite hexbin point ({x}, {y})")));
        }
        *counts.entry(assign(x, y, cell_size)).or_insert(0) += 1;
    }
    let cells = counts
        .into_iter()
        .map(|((q, r), count)| {
            let (center_x, center_y) = center(q, r, cell_size);
            HexCell { q, r, center_x, center_y, count }
        })
        .collect();
    Ok(HexBinGrid { cell_size, cells })
}

/// Writes `q,r,center_x,center_y,count` rows.
pub fn write_hexbin_csv<W: std::io::Write>(grid: &HexBinGrid, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["q", "r", "center_x", "center_y", "count"])?;
    for c in &grid.cells {
        wtr.write_record([
            format!("{}", c.q),
            format!("{}", c.r),
            format!("{}", c.center_x),
            format!("{}", c.center_y),
            format!("{}", c.count),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
