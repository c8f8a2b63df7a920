use std::collections::HashMap;

use crate::Vec3;

/// Uniform grid over a point set with cell edge equal to the cutoff, so every
/// neighbor within the cutoff lives in the 27 cells around the query.
pub(crate) struct CellList {
    cell: f64,
    cutoff_sq: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl CellList {
    pub(crate) fn new(points: &[Vec3], cutoff: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p, cutoff)).or_default().push(i);
        }
        CellList {
            cell: cutoff,
            cutoff_sq: cutoff * cutoff,
            cells,
        }
    }
}

fn key(p: &Vec3, cell: f64) -> [i64; 3] {
    [
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    ]
}

/// Which points of a set interact with a query point.
pub(crate) enum Neighbors {
    All(usize),
    Cells { list: CellList, points: Vec<Vec3> },
}

impl Neighbors {
    pub(crate) fn new(points: &[Vec3], cutoff: Option<f64>) -> Self {
        match cutoff {
            None => Neighbors::All(points.len()),
            Some(c) => Neighbors::Cells {
                list: CellList::new(points, c),
                points: points.to_vec(),
            },
        }
    }

    /// Visits candidate indices in a fixed order (row-major cells, then index).
    #[inline]
    pub(crate) fn for_each(&self, x: &Vec3, mut f: impl FnMut(usize)) {
        match self {
            Neighbors::All(n) => (0..*n).for_each(f),
            Neighbors::Cells { list, points } => {
                let k = key(x, list.cell);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            if let Some(idx) = list.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                                for &j in idx {
                                    if (points[j] - x).norm_squared() <= list.cutoff_sq {
                                        f(j);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
