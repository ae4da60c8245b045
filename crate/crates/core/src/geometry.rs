//! Cubes in `Z^d`, their bonds, and partitions into subcubes.
//!
//! Sites are numbered lexicographically with the *first* coordinate varying
//! slowest, so site `x = (x_0, .., x_{d-1})` has index
//! `x_0 L^{d-1} + x_1 L^{d-2} + .. + x_{d-1}`. Cubes are anchored at the
//! origin, i.e. coordinates range over `[0, L-1]^d`.

use crate::error::{Error, Result};

/// Default ceiling on the number of sites of a cube.
pub const DEFAULT_MAX_SITES: usize = 1_000_000;

/// A cube `[0, L-1]^d` in the lattice together with its index map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeGeometry {
    dim: usize,
    side: usize,
    len: usize,
}

impl CubeGeometry {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of sites, `L^d`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coordinates of site `index`.
    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        let mut rest = index;
        for axis in (0..self.dim).rev() {
            c[axis] = rest % self.side;
            rest /= self.side;
        }
        c
    }

    /// Index of the site with coordinates `coords`, or `None` if outside the cube.
    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let mut idx = 0usize;
        for &c in coords {
            if c >= self.side {
                return None;
            }
            idx = idx * self.side + c;
        }
        Some(idx)
    }

    /// Stride of `axis` in the linear index.
    fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dim - 1 - axis) as u32)
    }

    /// Interior neighbors of site `x`, in increasing index order.
    pub fn neighbors(&self, x: usize) -> Vec<usize> {
        let c = self.coords(x);
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            let s = self.stride(axis);
            if c[axis] > 0 {
                out.push(x - s);
            }
            if c[axis] + 1 < self.side {
                out.push(x + s);
            }
        }
        out.sort_unstable();
        out
    }

    /// Iterates over all interior bonds `(x, y)` with `x < y`, in
    /// lexicographic order of `(x, y)`.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len).flat_map(move |x| {
            let c = self.coords(x);
            (0..self.dim)
                .rev()
                .filter(move |&axis| c[axis] + 1 < self.side)
                .map(move |axis| (x, x + self.stride(axis)))
        })
    }

    /// Number of interior bonds, `d (L-1) L^{d-1}`.
    pub fn bond_count(&self) -> usize {
        self.dim * (self.side - 1) * self.side.pow(self.dim as u32 - 1)
    }
}

/// Builds the cube of side `side` in dimension `dim`, refusing cubes with
/// more than [`DEFAULT_MAX_SITES`] sites.
pub fn build_cube(dim: usize, side: usize) -> Result<CubeGeometry> {
    build_cube_with_budget(dim, side, DEFAULT_MAX_SITES)
}

pub fn build_cube_with_budget(dim: usize, side: usize, max_sites: usize) -> Result<CubeGeometry> {
    if dim == 0 {
        return Err(Error::param("d", "dimension must be at least 1"));
    }
    if side == 0 {
        return Err(Error::param("L", "side must be at least 1"));
    }
    let len = (0..dim)
        .try_fold(1usize, |acc, _| acc.checked_mul(side))
        .filter(|&n| n <= max_sites)
        .ok_or_else(|| {
            Error::Resource(format!(
                "cube with side {side} in dimension {dim} exceeds the budget of {max_sites} sites"
            ))
        })?;
    Ok(CubeGeometry { dim, side, len })
}

/// Number of lattice neighbors of `x` that lie outside the cube; equals `2d`
/// minus the number of interior neighbors.
pub fn exterior_neighbor_count(g: &CubeGeometry, x: usize) -> usize {
    g.coords(x)
        .iter()
        .map(|&c| usize::from(c == 0) + usize::from(c + 1 == g.side))
        .sum()
}

/// A set of unordered bonds, stored as `(x, y)` with `x < y`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BondSet {
    pairs: Vec<(usize, usize)>,
}

impl BondSet {
    /// Normalizes each pair to `x < y`, sorts, and drops duplicates.
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pairs: Vec<_> = pairs
            .into_iter()
            .map(|(x, y)| if x < y { (x, y) } else { (y, x) })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        BondSet { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        let key = if x < y { (x, y) } else { (y, x) };
        self.pairs.binary_search(&key).is_ok()
    }
}

/// A decomposition of a cube into `(L/ell)^d` disjoint subcubes of side `ell`.
#[derive(Debug, Clone)]
pub struct Partition {
    parent: CubeGeometry,
    cell_side: usize,
    cells: Vec<Vec<usize>>,
    cell_of: Vec<usize>,
}

impl Partition {
    pub fn parent(&self) -> &CubeGeometry {
        &self.parent
    }

    pub fn cell_side(&self) -> usize {
        self.cell_side
    }

    /// Site indices of each cell, each list sorted ascending.
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Cell index containing site `x`.
    pub fn cell_of(&self, x: usize) -> usize {
        self.cell_of[x]
    }

    /// The geometry of a single cell, shared by all cells up to translation.
    pub fn cell_geometry(&self) -> CubeGeometry {
        CubeGeometry {
            dim: self.parent.dim,
            side: self.cell_side,
            len: self.cell_side.pow(self.parent.dim as u32),
        }
    }

    /// Sites listed cell by cell; a permutation of `0..n` under which any
    /// cell-decoupled operator is block diagonal.
    pub fn cell_sorted_order(&self) -> Vec<usize> {
        self.cells.iter().flatten().copied().collect()
    }
}

/// Splits `g` into subcubes of side `ell`. Requires `ell | L`.
pub fn partition_cube(g: &CubeGeometry, ell: usize) -> Result<Partition> {
    if ell == 0 || !g.side.is_multiple_of(ell) {
        return Err(Error::InvalidPartition {
            side: g.side,
            cell: ell,
        });
    }
    let per_axis = g.side / ell;
    let n_cells = per_axis.pow(g.dim as u32);
    let mut cells = vec![Vec::with_capacity(ell.pow(g.dim as u32)); n_cells];
    let mut cell_of = vec![0; g.len];
    for x in 0..g.len {
        let cell = g.coords(x).iter().fold(0, |acc, &c| acc * per_axis + c / ell);
        cells[cell].push(x);
        cell_of[x] = cell;
    }
    Ok(Partition {
        parent: g.clone(),
        cell_side: ell,
        cells,
        cell_of,
    })
}

/// Bonds of the parent cube whose endpoints lie in different cells.
pub fn cross_bonds(p: &Partition) -> BondSet {
    BondSet::new(
        p.parent
            .bonds()
            .filter(|&(x, y)| p.cell_of[x] != p.cell_of[y]),
    )
}

/// Bonds joining `cell` (a set of sites) to its complement in the cube.
pub fn boundary_bonds(g: &CubeGeometry, cell: &[usize]) -> BondSet {
    let mut inside = vec![false; g.len];
    for &x in cell {
        inside[x] = true;
    }
    BondSet::new(g.bonds().filter(|&(x, y)| inside[x] != inside[y]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_bonds(g: &CubeGeometry) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..g.len() {
            for y in x + 1..g.len() {
                let cx = g.coords(x);
                let cy = g.coords(y);
                let l1: usize = cx.iter().zip(&cy).map(|(a, b)| a.abs_diff(*b)).sum();
                if l1 == 1 {
                    out.push((x, y));
                }
            }
        }
        out
    }

    #[test]
    fn small_cubes() {
        let g = build_cube(1, 1).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.bonds().count(), 0);

        let g = build_cube(1, 3).unwrap();
        assert_eq!(g.bonds().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);

        let g = build_cube(2, 2).unwrap();
        assert_eq!(g.len(), 4);
        let mut b: Vec<_> = g.bonds().collect();
        b.sort_unstable();
        assert_eq!(b, brute_bonds(&g));
        assert_eq!(b.len(), 4);
    }

    #[test]
    fn bonds_match_brute_force() {
        for d in 1..=3 {
            for l in 1..=5 {
                let g = build_cube(d, l).unwrap();
                let mut b: Vec<_> = g.bonds().collect();
                b.sort_unstable();
                assert_eq!(b, brute_bonds(&g), "d={d} L={l}");
                assert_eq!(b.len(), g.bond_count());
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(build_cube(3, 101), Err(Error::Resource(_))));
        assert!(matches!(build_cube_with_budget(2, 4, 15), Err(Error::Resource(_))));
        assert!(build_cube(0, 3).is_err());
        assert!(build_cube(2, 0).is_err());
    }

    #[test]
    fn exterior_counts() {
        let g = build_cube(1, 1).unwrap();
        assert_eq!(exterior_neighbor_count(&g, 0), 2);
        let g = build_cube(1, 3).unwrap();
        assert_eq!(exterior_neighbor_count(&g, 1), 0);
        let g = build_cube(2, 2).unwrap();
        for x in 0..4 {
            assert_eq!(exterior_neighbor_count(&g, x), 2);
        }
        for d in 1..=3 {
            let g = build_cube(d, 4).unwrap();
            for x in 0..g.len() {
                assert_eq!(g.neighbors(x).len() + exterior_neighbor_count(&g, x), 2 * d);
            }
        }
    }

    #[test]
    fn neighbor_relation_is_symmetric() {
        let g = build_cube(3, 3).unwrap();
        for x in 0..g.len() {
            for y in g.neighbors(x) {
                assert!(g.neighbors(y).contains(&x));
            }
        }
    }

    #[test]
    fn partitions() {
        let g = build_cube(1, 4).unwrap();
        let p = partition_cube(&g, 2).unwrap();
        assert_eq!(p.cells(), &[vec![0, 1], vec![2, 3]]);
        assert!(matches!(
            partition_cube(&g, 3),
            Err(Error::InvalidPartition { side: 4, cell: 3 })
        ));

        let g = build_cube(2, 4).unwrap();
        let p = partition_cube(&g, 2).unwrap();
        assert_eq!(p.cells().len(), 4);
        assert_eq!(p.cells()[0], vec![0, 1, 4, 5]);
        assert_eq!(p.cells()[3], vec![10, 11, 14, 15]);
        for cell in p.cells() {
            assert_eq!(cell.len(), 4);
        }
    }

    #[test]
    fn cells_are_translated_subcubes() {
        let g = build_cube(3, 6).unwrap();
        for ell in [1, 2, 3, 6] {
            let p = partition_cube(&g, ell).unwrap();
            let mut seen = vec![false; g.len()];
            for cell in p.cells() {
                let origin = g.coords(cell[0]);
                for &x in cell {
                    assert!(!seen[x]);
                    seen[x] = true;
                    let c = g.coords(x);
                    assert!(c.iter().zip(&origin).all(|(a, o)| a >= o && a - o < ell));
                }
                assert_eq!(cell.len(), ell.pow(3));
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn cross_bond_examples() {
        let g = build_cube(1, 2).unwrap();
        assert_eq!(cross_bonds(&partition_cube(&g, 1).unwrap()).pairs(), &[(0, 1)]);
        let g = build_cube(1, 4).unwrap();
        assert_eq!(cross_bonds(&partition_cube(&g, 2).unwrap()).pairs(), &[(1, 2)]);
        let g = build_cube(2, 4).unwrap();
        assert_eq!(cross_bonds(&partition_cube(&g, 2).unwrap()).len(), 8);
    }

    #[test]
    fn bond_bookkeeping_adds_up() {
        for d in 1..=3 {
            for l in [2, 4, 6] {
                let g = build_cube(d, l).unwrap();
                for ell in (1..=l).filter(|e| l % e == 0) {
                    let p = partition_cube(&g, ell).unwrap();
                    let within = p.cell_geometry().bond_count() * p.cells().len();
                    assert_eq!(within + cross_bonds(&p).len(), g.bond_count());
                }
            }
        }
    }

    #[test]
    fn bond_set_normalizes() {
        let b = BondSet::new([(3, 1), (1, 3), (0, 2)]);
        assert_eq!(b.pairs(), &[(0, 2), (1, 3)]);
        assert!(b.contains(3, 1));
        assert!(!b.contains(0, 1));
    }

    #[test]
    fn single_cell_boundary() {
        let g = build_cube(2, 6).unwrap();
        let p = partition_cube(&g, 2).unwrap();
        // middle cell of the 3x3 arrangement
        let b = boundary_bonds(&g, &p.cells()[4]);
        assert_eq!(b.len(), 2 * 2 * 2);
    }
}
