//! Finite-volume operators on `l^2(Lambda)`: the Dirichlet Laplacian with
//! exterior-neighbor compensation, the Anderson Hamiltonian, cell-decoupled
//! direct sums and the decoupling defect.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::disorder::DisorderField;
use crate::error::{Error, Result};
use crate::geometry::{exterior_neighbor_count, CubeGeometry, Partition};
use crate::spectral::full_spectrum;

/// Largest dimension for which a dense copy is ever materialized.
pub const DENSE_LIMIT: usize = 4096;

/// Singular values at or below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FreeLaplacian,
    Anderson,
    Decoupled,
    Defect,
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Full row-major `n x n` matrix.
    Dense(Vec<f64>),
    /// Diagonal plus strictly upper entries `(i, j, v)` with `i < j`, sorted.
    Sparse {
        diag: Vec<f64>,
        upper: Vec<(usize, usize, f64)>,
    },
}

/// A real symmetric matrix. Only one triangle is ever assembled, so the
/// operator is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricOperator {
    n: usize,
    storage: Storage,
    provenance: Provenance,
}

impl SymmetricOperator {
    /// Sparse operator from a diagonal and upper-triangle entries. Entries
    /// given as `(j, i)` are folded onto `(i, j)`; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_entries(
        diag: Vec<f64>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = diag.len();
        let mut map = BTreeMap::new();
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::Shape {
                    expected: n,
                    got: i.max(j) + 1,
                });
            }
            if i == j {
                return Err(Error::param("entries", "diagonal entries belong in `diag`"));
            }
            *map.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
        let upper = map
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((i, j), v)| (i, j, v))
            .collect();
        Ok(SymmetricOperator {
            n,
            storage: Storage::Sparse { diag, upper },
            provenance,
        })
    }

    /// Dense operator from the lower triangle of a row-major `n x n` array;
    /// the upper triangle of `a` is ignored.
    pub fn from_dense_lower(n: usize, a: &[f64]) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Shape {
                expected: n * n,
                got: a.len(),
            });
        }
        let mut full = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                full[i * n + j] = a[i * n + j];
                full[j * n + i] = a[i * n + j];
            }
        }
        Ok(SymmetricOperator {
            n,
            storage: Storage::Dense(full),
            provenance: Provenance::Generic,
        })
    }

    pub fn diagonal(values: Vec<f64>) -> Self {
        SymmetricOperator {
            n: values.len(),
            storage: Storage::Sparse {
                diag: values,
                upper: Vec::new(),
            },
            provenance: Provenance::Generic,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(a) => a[i * self.n + j],
            Storage::Sparse { diag, upper } => {
                if i == j {
                    diag[i]
                } else {
                    let key = (i.min(j), i.max(j));
                    upper
                        .binary_search_by(|&(a, b, _)| (a, b).cmp(&key))
                        .map(|k| upper[k].2)
                        .unwrap_or(0.0)
                }
            }
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(a) => (0..self.n).map(|i| a[i * self.n + i]).collect(),
            Storage::Sparse { diag, .. } => diag.clone(),
        }
    }

    /// Nonzero strictly-upper entries `(i, j, v)`, `i < j`, in row order.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        match &self.storage {
            Storage::Dense(a) => {
                let n = self.n;
                (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .filter_map(|(i, j)| {
                        let v = a[i * n + j];
                        (v != 0.0).then_some((i, j, v))
                    })
                    .collect()
            }
            Storage::Sparse { upper, .. } => upper.clone(),
        }
    }

    /// Full row-major dense copy. Refuses dimensions above [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let n = self.n;
        match &self.storage {
            Storage::Dense(a) => Ok(a.clone()),
            Storage::Sparse { diag, upper } => {
                if n > DENSE_LIMIT {
                    return Err(Error::Resource(format!(
                        "dense copy of a {n}x{n} operator exceeds the limit of {DENSE_LIMIT}"
                    )));
                }
                let mut a = vec![0.0; n * n];
                for (i, &v) in diag.iter().enumerate() {
                    a[i * n + i] = v;
                }
                for &(i, j, v) in upper {
                    a[i * n + j] = v;
                    a[j * n + i] = v;
                }
                Ok(a)
            }
        }
    }

    /// Bond-list copy of the same matrix.
    pub fn to_sparse(&self) -> SymmetricOperator {
        SymmetricOperator {
            n: self.n,
            storage: Storage::Sparse {
                diag: self.diag(),
                upper: self.upper_entries(),
            },
            provenance: self.provenance,
        }
    }

    /// Largest `|i - j|` over nonzero off-diagonal entries.
    pub fn bandwidth(&self) -> usize {
        match &self.storage {
            Storage::Sparse { upper, .. } => upper.iter().map(|&(i, j, _)| j - i).max().unwrap_or(0),
            Storage::Dense(a) => {
                let n = self.n;
                let mut bw = 0;
                for i in 0..n {
                    for j in i + 1 + bw..n {
                        if a[i * n + j] != 0.0 {
                            bw = j - i;
                        }
                    }
                }
                bw
            }
        }
    }

    /// Diagonal and first off-diagonal, if the matrix is tridiagonal.
    pub fn as_tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.bandwidth() > 1 {
            return None;
        }
        let mut off = vec![0.0; self.n.saturating_sub(1)];
        for (i, j, v) in self.upper_entries() {
            debug_assert_eq!(j, i + 1);
            off[i] = v;
        }
        Some((self.diag(), off))
    }

    pub fn max_abs_entry(&self) -> f64 {
        let d = self.diag().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.upper_entries().iter().fold(d, |m, e| m.max(e.2.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        let d: f64 = self.diag().iter().map(|v| v * v).sum();
        let o: f64 = self.upper_entries().iter().map(|e| e.2 * e.2).sum();
        d + 2.0 * o
    }

    /// Returns `self + diag(shift)`.
    pub fn add_diagonal(&self, shift: &[f64]) -> Result<SymmetricOperator> {
        if shift.len() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                got: shift.len(),
            });
        }
        let mut out = self.clone();
        match &mut out.storage {
            Storage::Dense(a) => {
                for (i, s) in shift.iter().enumerate() {
                    a[i * self.n + i] += s;
                }
            }
            Storage::Sparse { diag, .. } => {
                for (d, s) in diag.iter_mut().zip(shift) {
                    *d += s;
                }
            }
        }
        Ok(out)
    }

    /// Returns `self + value * e_x e_x^T`.
    pub fn add_to_site(&self, x: usize, value: f64) -> SymmetricOperator {
        let mut shift = vec![0.0; self.n];
        shift[x] = value;
        self.add_diagonal(&shift).expect("shift has matching length")
    }

    /// Entrywise difference `self - other`, in bond-list form.
    pub fn difference(&self, other: &SymmetricOperator, provenance: Provenance) -> Result<SymmetricOperator> {
        if self.n != other.n {
            return Err(Error::Shape {
                expected: self.n,
                got: other.n,
            });
        }
        let diag = self.diag().iter().zip(other.diag()).map(|(a, b)| a - b).collect();
        let entries = self
            .upper_entries()
            .into_iter()
            .chain(other.upper_entries().into_iter().map(|(i, j, v)| (i, j, -v)));
        SymmetricOperator::from_entries(diag, entries, provenance)
    }

    /// `P A P^T` for the permutation listing old indices in new order.
    pub fn permuted(&self, order: &[usize]) -> Result<SymmetricOperator> {
        if order.len() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                got: order.len(),
            });
        }
        let mut inverse = vec![usize::MAX; self.n];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        if inverse.contains(&usize::MAX) {
            return Err(Error::param("order", "not a permutation"));
        }
        let old_diag = self.diag();
        let diag = order.iter().map(|&old| old_diag[old]).collect();
        let entries = self
            .upper_entries()
            .into_iter()
            .map(|(i, j, v)| (inverse[i], inverse[j], v));
        SymmetricOperator::from_entries(diag, entries, self.provenance)
    }

    /// Sites carrying a nonzero entry in their row.
    pub fn support(&self) -> Vec<usize> {
        let mut touched = vec![false; self.n];
        for (i, v) in self.diag().iter().enumerate() {
            if *v != 0.0 {
                touched[i] = true;
            }
        }
        for (i, j, _) in self.upper_entries() {
            touched[i] = true;
            touched[j] = true;
        }
        (0..self.n).filter(|&i| touched[i]).collect()
    }

    /// Principal submatrix on `sites` (sorted ascending).
    pub fn restrict(&self, sites: &[usize]) -> Result<SymmetricOperator> {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &s) in sites.iter().enumerate() {
            pos[s] = k;
        }
        let full_diag = self.diag();
        let diag = sites.iter().map(|&s| full_diag[s]).collect();
        let entries: Vec<_> = self
            .upper_entries()
            .into_iter()
            .filter(|&(i, j, _)| pos[i] != usize::MAX && pos[j] != usize::MAX)
            .map(|(i, j, v)| (pos[i], pos[j], v))
            .collect();
        SymmetricOperator::from_entries(diag, entries, self.provenance)
    }
}

/// Dirichlet Laplacian `L_Lambda`: unit hopping on interior bonds, and the
/// number of exterior neighbors on the diagonal.
pub fn build_dirichlet_laplacian(g: &CubeGeometry) -> SymmetricOperator {
    let diag = (0..g.len()).map(|x| exterior_neighbor_count(g, x) as f64).collect();
    let upper = g.bonds().map(|(x, y)| (x, y, 1.0)).collect();
    SymmetricOperator {
        n: g.len(),
        storage: Storage::Sparse { diag, upper },
        provenance: Provenance::FreeLaplacian,
    }
}

fn check_field(g: &CubeGeometry, field: &DisorderField) -> Result<()> {
    if field.len() != g.len() {
        return Err(Error::Shape {
            expected: g.len(),
            got: field.len(),
        });
    }
    Ok(())
}

/// `H_Lambda = L_Lambda + diag(omega)`.
pub fn build_anderson(g: &CubeGeometry, field: &DisorderField) -> Result<SymmetricOperator> {
    check_field(g, field)?;
    let mut h = build_dirichlet_laplacian(g).add_diagonal(field.values())?;
    h.provenance = Provenance::Anderson;
    Ok(h)
}

/// Direct sum of Dirichlet operators over the blocks of `labels` (one block
/// label per site), in the parent's site ordering. Bonds between different
/// blocks are cut and each endpoint gains one exterior neighbor.
pub fn build_block_decoupled(
    g: &CubeGeometry,
    labels: &[usize],
    field: Option<&DisorderField>,
) -> Result<SymmetricOperator> {
    if labels.len() != g.len() {
        return Err(Error::Shape {
            expected: g.len(),
            got: labels.len(),
        });
    }
    let two_d = 2 * g.dim();
    let mut diag = vec![two_d as f64; g.len()];
    let mut upper = Vec::new();
    for (x, y) in g.bonds() {
        if labels[x] == labels[y] {
            diag[x] -= 1.0;
            diag[y] -= 1.0;
            upper.push((x, y, 1.0));
        }
    }
    if let Some(f) = field {
        check_field(g, f)?;
        for (d, w) in diag.iter_mut().zip(f.values()) {
            *d += w;
        }
    }
    upper.sort_unstable_by_key(|&(i, j, _)| (i, j));
    Ok(SymmetricOperator {
        n: g.len(),
        storage: Storage::Sparse { diag, upper },
        provenance: Provenance::Decoupled,
    })
}

/// `(+)_j H_{Gamma_j}` over the cells of `p`, optionally with the potential.
pub fn build_decoupled(
    g: &CubeGeometry,
    p: &Partition,
    field: Option<&DisorderField>,
) -> Result<SymmetricOperator> {
    if p.parent() != g {
        return Err(Error::param("partition", "partition does not belong to this cube"));
    }
    let labels: Vec<usize> = (0..g.len()).map(|x| p.cell_of(x)).collect();
    build_block_decoupled(g, &labels, field)
}

/// Numerical rank: number of eigenvalues with modulus above
/// [`RANK_THRESHOLD`] times the largest modulus. Only the support of the
/// operator is diagonalized.
pub fn numerical_rank(a: &SymmetricOperator) -> Result<usize> {
    let sub = a.restrict(&a.support())?;
    if sub.dim() == 0 {
        return Ok(0);
    }
    let spec = full_spectrum(&sub)?;
    let top = spec.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Ok(0);
    }
    Ok(spec.values().iter().filter(|v| v.abs() > RANK_THRESHOLD * top).count())
}

fn defect_from_labels(
    g: &CubeGeometry,
    labels: &[usize],
    field: Option<&DisorderField>,
) -> Result<(SymmetricOperator, usize)> {
    let kinetic = build_block_decoupled(g, labels, None)?.difference(&build_dirichlet_laplacian(g), Provenance::Defect)?;
    // the potential enters both operators identically and cancels exactly
    if let Some(f) = field {
        check_field(g, f)?;
    }
    let rank = numerical_rank(&kinetic)?;
    Ok((kinetic, rank))
}

/// `D = decoupled - full` for the partition `p` (the same potential enters
/// both terms) together with its numerical rank.
pub fn decoupling_defect(
    g: &CubeGeometry,
    p: &Partition,
    field: Option<&DisorderField>,
) -> Result<(SymmetricOperator, usize)> {
    if p.parent() != g {
        return Err(Error::param("partition", "partition does not belong to this cube"));
    }
    let labels: Vec<usize> = (0..g.len()).map(|x| p.cell_of(x)).collect();
    defect_from_labels(g, &labels, field)
}

/// Defect of decoupling the single cell `cell` from the rest of the cube.
pub fn single_cell_defect(
    g: &CubeGeometry,
    cell: &[usize],
    field: Option<&DisorderField>,
) -> Result<(SymmetricOperator, usize)> {
    let mut labels = vec![1usize; g.len()];
    for &x in cell {
        if x >= g.len() {
            return Err(Error::Shape {
                expected: g.len(),
                got: x + 1,
            });
        }
        labels[x] = 0;
    }
    defect_from_labels(g, &labels, field)
}

/// Rank bound `4d * ell^(d-1)` per decoupled cell.
pub fn rank_bound_per_cell(dim: usize, ell: usize) -> usize {
    4 * dim * ell.pow(dim as u32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, SingleSiteDensity};
    use crate::geometry::{boundary_bonds, build_cube, cross_bonds, partition_cube};

    fn eig(a: &SymmetricOperator) -> Vec<f64> {
        full_spectrum(a).unwrap().values().to_vec()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn laplacian_examples() {
        let l1 = build_dirichlet_laplacian(&build_cube(1, 1).unwrap());
        assert_eq!(l1.to_dense().unwrap(), vec![2.0]);

        let l2 = build_dirichlet_laplacian(&build_cube(1, 2).unwrap());
        assert_eq!(l2.to_dense().unwrap(), vec![1.0, 1.0, 1.0, 1.0]);
        assert!(close(&eig(&l2), &[0.0, 2.0], 1e-14));

        let l3 = build_dirichlet_laplacian(&build_cube(1, 3).unwrap());
        assert!(close(&eig(&l3), &[-1.0, 1.0, 2.0], 1e-14));
    }

    #[test]
    fn laplacian_structure() {
        for d in 1..=3 {
            let g = build_cube(d, 4).unwrap();
            let l = build_dirichlet_laplacian(&g);
            for x in 0..g.len() {
                assert_eq!(l.get(x, x), exterior_neighbor_count(&g, x) as f64);
            }
            assert!(l.upper_entries().iter().all(|e| e.2 == 1.0));
            let ev = eig(&l);
            let bound = 2.0 * d as f64 + 1e-12;
            assert!(ev.iter().all(|v| v.abs() <= bound));
        }
    }

    #[test]
    fn anderson_examples() {
        let g = build_cube(2, 3).unwrap();
        let zero = DisorderField::from_values(vec![0.0; 9]);
        assert_eq!(build_anderson(&g, &zero).unwrap().to_dense().unwrap(), build_dirichlet_laplacian(&g).to_dense().unwrap());

        let c = 0.75;
        let shifted = build_anderson(&g, &DisorderField::from_values(vec![c; 9])).unwrap();
        let free: Vec<f64> = eig(&build_dirichlet_laplacian(&g)).iter().map(|v| v + c).collect();
        assert!(close(&eig(&shifted), &free, 1e-13));

        let g = build_cube(1, 2).unwrap();
        let h = build_anderson(&g, &DisorderField::from_values(vec![0.0, 1.0])).unwrap();
        let s5 = 5f64.sqrt();
        assert!(close(&eig(&h), &[(3.0 - s5) / 2.0, (3.0 + s5) / 2.0], 1e-14));

        assert!(matches!(
            build_anderson(&g, &DisorderField::from_values(vec![0.0; 3])),
            Err(Error::Shape { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn decoupled_examples() {
        let g = build_cube(1, 2).unwrap();
        let p = partition_cube(&g, 1).unwrap();
        assert_eq!(build_decoupled(&g, &p, None).unwrap().to_dense().unwrap(), vec![2.0, 0.0, 0.0, 2.0]);

        let g = build_cube(1, 4).unwrap();
        let p = partition_cube(&g, 2).unwrap();
        let d = build_decoupled(&g, &p, None).unwrap().to_dense().unwrap();
        #[rustfmt::skip]
        let expect = vec![
            1.0, 1.0, 0.0, 0.0,
            1.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 1.0,
            0.0, 0.0, 1.0, 1.0,
        ];
        assert_eq!(d, expect);
    }

    #[test]
    fn decoupled_is_block_diagonal_in_cell_order() {
        let g = build_cube(2, 6).unwrap();
        let rho = SingleSiteDensity::uniform(-1.0, 1.0).unwrap();
        let f = sample_field(&rho, &g, 3, 0);
        for ell in [1, 2, 3, 6] {
            let p = partition_cube(&g, ell).unwrap();
            let dec = build_decoupled(&g, &p, Some(&f)).unwrap();
            let block = ell * ell;
            let perm = dec.permuted(&p.cell_sorted_order()).unwrap();
            for (i, j, _) in perm.upper_entries() {
                assert_eq!(i / block, j / block);
            }
            // every block is a translate of the cell Laplacian plus its potential
            let cell_l = build_dirichlet_laplacian(&p.cell_geometry());
            for (c, cell) in p.cells().iter().enumerate() {
                for a in 0..block {
                    for b in 0..block {
                        let expect = cell_l.get(a, b) + if a == b { f.values()[cell[a]] } else { 0.0 };
                        assert_eq!(perm.get(c * block + a, c * block + b), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn defect_examples() {
        let g = build_cube(1, 2).unwrap();
        let p = partition_cube(&g, 1).unwrap();
        let (d, rank) = decoupling_defect(&g, &p, None).unwrap();
        assert_eq!(d.to_dense().unwrap(), vec![1.0, -1.0, -1.0, 1.0]);
        assert!(close(&eig(&d), &[0.0, 2.0], 1e-14));
        assert_eq!(rank, 1);

        let g = build_cube(2, 4).unwrap();
        let p = partition_cube(&g, 2).unwrap();
        let (_, rank) = decoupling_defect(&g, &p, None).unwrap();
        assert!(rank <= 16);
        // cut-bond graph: 12 touched sites in 5 components
        assert_eq!(rank, 7);
    }

    /// rank of the graph Laplacian of a bond set = touched vertices - components
    fn cut_graph_rank(n: usize, bonds: &[(usize, usize)]) -> usize {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        let mut touched = vec![false; n];
        for &(x, y) in bonds {
            touched[x] = true;
            touched[y] = true;
            let (a, b) = (find(&mut parent, x), find(&mut parent, y));
            parent[a] = b;
        }
        let vertices = touched.iter().filter(|&&t| t).count();
        let roots = (0..n).filter(|&x| touched[x] && find(&mut parent, x) == x).count();
        vertices - roots
    }

    #[test]
    fn defect_rank_matches_cut_graph() {
        for d in 1..=2 {
            for l in [2, 4, 6, 8] {
                let g = build_cube(d, l).unwrap();
                for ell in (1..l).filter(|e| l % e == 0) {
                    let p = partition_cube(&g, ell).unwrap();
                    let (_, rank) = decoupling_defect(&g, &p, None).unwrap();
                    assert_eq!(rank, cut_graph_rank(g.len(), cross_bonds(&p).pairs()), "d={d} L={l} ell={ell}");
                }
            }
        }
    }

    #[test]
    fn defect_is_independent_of_disorder() {
        let g = build_cube(2, 6).unwrap();
        let rho = SingleSiteDensity::uniform(0.0, 4.0).unwrap();
        let p = partition_cube(&g, 3).unwrap();
        let (d0, r0) = decoupling_defect(&g, &p, None).unwrap();
        for r in 0..5 {
            let f = sample_field(&rho, &g, 17, r);
            let (d1, r1) = decoupling_defect(&g, &p, Some(&f)).unwrap();
            assert_eq!(d0, d1);
            assert_eq!(r0, r1);
        }
    }

    #[test]
    fn defect_is_local_and_psd() {
        let g = build_cube(2, 6).unwrap();
        let p = partition_cube(&g, 2).unwrap();
        let (d, _) = decoupling_defect(&g, &p, None).unwrap();
        let cut = cross_bonds(&p);
        let mut adjacent = vec![false; g.len()];
        for &(x, y) in cut.pairs() {
            adjacent[x] = true;
            adjacent[y] = true;
        }
        for x in d.support() {
            assert!(adjacent[x]);
        }
        assert!(eig(&d)[0] >= -1e-10);
    }

    #[test]
    fn single_cell_rank_bound() {
        for d in 1..=2 {
            for ell in 1..=4 {
                let g = build_cube(d, 3 * ell).unwrap();
                let p = partition_cube(&g, ell).unwrap();
                let middle = &p.cells()[p.cells().len() / 2];
                let (_, rank) = single_cell_defect(&g, middle, None).unwrap();
                assert!(rank <= rank_bound_per_cell(d, ell));
                assert_eq!(rank, boundary_bonds(&g, middle).len());
            }
        }
    }

    #[test]
    fn operator_plumbing() {
        let a = SymmetricOperator::from_entries(vec![1.0, 2.0, 3.0], [(2, 0, 0.5), (0, 2, 0.25), (1, 2, 0.0)], Provenance::Generic)
            .unwrap();
        assert_eq!(a.get(0, 2), 0.75);
        assert_eq!(a.get(2, 0), 0.75);
        assert_eq!(a.upper_entries(), vec![(0, 2, 0.75)]);
        assert_eq!(a.bandwidth(), 2);
        assert!(a.as_tridiagonal().is_none());
        let dense = SymmetricOperator::from_dense_lower(3, &a.to_dense().unwrap()).unwrap();
        assert_eq!(dense.to_sparse(), a);
        assert_eq!(dense.bandwidth(), 2);
        assert!((a.frobenius_sq() - (1.0 + 4.0 + 9.0 + 2.0 * 0.75 * 0.75)).abs() < 1e-15);
        assert!(SymmetricOperator::from_entries(vec![0.0], [(0, 1, 1.0)], Provenance::Generic).is_err());
    }
}
