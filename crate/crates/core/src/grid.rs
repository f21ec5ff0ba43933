//! Nested hyperbolic-cross point sequences, sparse grids, Smolyak index sets
//! and subgrid scatter maps.
//!
//! All point bookkeeping is exact: coordinates are dyadic rationals i/2ᵗ kept
//! as integer pairs, and membership tests never compare floats.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};

/// A dyadic rational i/2ᵗ on (0, 1), stored in reduced form (odd numerator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicCoord {
    num: u32,
    level: u32,
}

impl DyadicCoord {
    /// Build from a (numerator, level) pair with 1 ≤ num ≤ 2ᵗ − 1, reducing
    /// to the canonical odd-numerator form.
    pub fn new(mut num: u32, mut level: u32) -> Self {
        assert!(level >= 1 && num >= 1 && num < (1u32 << level));
        while num % 2 == 0 {
            num /= 2;
            level -= 1;
        }
        Self { num, level }
    }

    pub fn numerator(&self) -> u32 {
        self.num
    }

    /// The smallest t with self ∈ U_{j,t}.
    pub fn canonical_level(&self) -> u32 {
        self.level
    }

    /// Value on the unit interval; exact in double precision.
    pub fn value_unit(&self) -> f64 {
        self.num as f64 / (1u64 << self.level) as f64
    }

    fn cmp_exact(&self, other: &Self) -> Ordering {
        let l = self.level.max(other.level);
        let a = (self.num as u64) << (l - self.level);
        let b = (other.num as u64) << (l - other.level);
        a.cmp(&b)
    }
}

impl Ord for DyadicCoord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_exact(other)
    }
}

impl PartialOrd for DyadicCoord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A d-vector of per-dimension levels (t₁,…,t_d), each ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(levels: Vec<u32>) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(|&t| t == 0) {
            return Err(Error::InvalidParameter(format!(
                "multi-index levels must all be >= 1, got {levels:?}"
            )));
        }
        Ok(Self(levels))
    }

    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// |t| = Σ t_j.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Number of points of the full grid ×_j U_{j,t_j}, i.e. Π_j (2^{t_j} − 1).
    pub fn full_grid_size(&self) -> usize {
        self.0.iter().map(|&t| (1usize << t) - 1).product()
    }
}

/// The one-dimensional hyperbolic cross set {i/2ᵗ : i = 1,…,2ᵗ−1}, ascending.
/// Empty for t = 0.
pub fn level_points(t: u32) -> Vec<DyadicCoord> {
    if t == 0 {
        return Vec::new();
    }
    (1..(1u32 << t)).map(|i| DyadicCoord::new(i, t)).collect()
}

/// The same set in nested (hierarchical) order: points of canonical level 1
/// first, then the new points of level 2, and so on, ascending within a
/// level. Under this order U_{j,t} is a prefix of U_{j,t+1}, which makes the
/// per-level Cholesky factors of the sampler extend each other.
pub fn level_points_nested(t: u32) -> Vec<DyadicCoord> {
    let mut pts = level_points(t);
    pts.sort_by(|a, b| {
        a.canonical_level()
            .cmp(&b.canonical_level())
            .then_with(|| a.cmp(b))
    });
    pts
}

fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    // all vectors of `parts` entries >= 1 summing to `total`
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(parts);
    fn rec(total: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            if total >= 1 {
                cur.push(total);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for v in 1..=(total - parts as u32 + 1) {
            cur.push(v);
            rec(total - v, parts - 1, cur, out);
            cur.pop();
        }
    }
    if total >= parts as u32 {
        rec(total, parts, &mut cur, &mut out);
    }
    out
}

fn check_config(eta: u32, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if (eta as usize) < d {
        return Err(Error::LevelBelowDimension {
            level: eta,
            dimension: d,
        });
    }
    Ok(())
}

/// 𝔾(η) = {t ∈ ℕᵈ : |t| = η}.
pub fn boundary_index_set(eta: u32, d: usize) -> Result<Vec<MultiIndex>> {
    check_config(eta, d)?;
    Ok(compositions(eta, d).into_iter().map(MultiIndex).collect())
}

/// ℙ(η,d) = {t ∈ ℕᵈ : max(d, η−d+1) ≤ |t| ≤ η}.
pub fn smolyak_index_set(eta: u32, d: usize) -> Result<Vec<MultiIndex>> {
    check_config(eta, d)?;
    let lo = (d as u32).max(eta - d as u32 + 1);
    let mut out = Vec::new();
    for s in lo..=eta {
        out.extend(compositions(s, d).into_iter().map(MultiIndex));
    }
    Ok(out)
}

/// Combination-technique coefficient (−1)^{η−|t|}·C(d−1, η−|t|).
pub fn smolyak_coefficient(t: &MultiIndex, eta: u32, d: usize) -> i64 {
    let b = (eta - t.total()) as u64;
    let mut binom: i64 = 1;
    for k in 0..b {
        binom = binom * (d as i64 - 1 - k as i64) / (k as i64 + 1);
    }
    if b % 2 == 0 {
        binom
    } else {
        -binom
    }
}

/// A sparse grid U(η,d) with its Smolyak index sets and subgrid scatter maps.
///
/// Points are kept in exact dyadic coordinates on the unit cube and mapped
/// affinely onto the domain box when a caller asks for real coordinates.
#[derive(Debug, Clone)]
pub struct SparseGrid {
    level: u32,
    dimension: usize,
    domain: Vec<(f64, f64)>,
    points: Vec<Vec<DyadicCoord>>,
    boundary: Vec<MultiIndex>,
    smolyak: Vec<MultiIndex>,
    scatter: HashMap<Vec<u32>, Vec<usize>>,
}

impl SparseGrid {
    /// Build U(η,d) over the given domain box.
    ///
    /// Points are the deduplicated union over 𝔾(η) of the full grids
    /// ×_j U_{j,t_j}, in lexicographic order of exact dyadic coordinates.
    /// Scatter maps are built for every multi-index in ℙ(η,d) ∪ 𝔾(η); the
    /// subgrid enumeration is the Kronecker-product order over nested-ordered
    /// one-dimensional sets, last dimension fastest.
    pub fn build(eta: u32, d: usize, domain: &[(f64, f64)]) -> Result<Self> {
        check_config(eta, d)?;
        if domain.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: domain.len(),
            });
        }
        for &(a, b) in domain {
            if !(b > a) {
                return Err(Error::InvalidParameter(format!(
                    "degenerate domain interval [{a}, {b}]"
                )));
            }
        }

        let boundary = boundary_index_set(eta, d)?;
        let smolyak = smolyak_index_set(eta, d)?;

        let mut points: Vec<Vec<DyadicCoord>> = Vec::new();
        let mut position: HashMap<Vec<DyadicCoord>, usize> = HashMap::new();
        for t in &boundary {
            for pt in kron_enumeration(t.levels(), level_points) {
                if !position.contains_key(&pt) {
                    position.insert(pt.clone(), 0);
                    points.push(pt);
                }
            }
        }
        points.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
        for (i, p) in points.iter().enumerate() {
            *position.get_mut(p).unwrap() = i;
        }

        // 𝔾(η) ⊆ ℙ(η,d), so the Smolyak set alone covers all stored maps.
        let mut scatter = HashMap::new();
        for t in &smolyak {
            let map: Vec<usize> = kron_enumeration(t.levels(), level_points_nested)
                .into_iter()
                .map(|pt| position[&pt])
                .collect();
            scatter.insert(t.levels().to_vec(), map);
        }

        Ok(Self {
            level: eta,
            dimension: d,
            domain: domain.to_vec(),
            points,
            boundary,
            smolyak,
            scatter,
        })
    }

    /// Build over the unit cube [0,1]^d.
    pub fn build_unit(eta: u32, d: usize) -> Result<Self> {
        Self::build(eta, d, &vec![(0.0, 1.0); d])
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// Number of grid points n_sg.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<DyadicCoord>] {
        &self.points
    }

    pub fn boundary_indices(&self) -> &[MultiIndex] {
        &self.boundary
    }

    pub fn smolyak_indices(&self) -> &[MultiIndex] {
        &self.smolyak
    }

    /// Affine map of a dyadic point onto the domain box.
    pub fn map_to_domain(&self, p: &[DyadicCoord]) -> Vec<f64> {
        p.iter()
            .zip(&self.domain)
            .map(|(c, &(a, b))| a + (b - a) * c.value_unit())
            .collect()
    }

    /// All grid points in domain coordinates, canonical order.
    pub fn points_domain(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| self.map_to_domain(p)).collect()
    }

    /// Positions of the subgrid ×_j U_{j,t_j} inside the grid, in the
    /// Kronecker enumeration order used by the sampler factors (nested
    /// one-dimensional order, last dimension fastest).
    pub fn scatter_indices(&self, t: &MultiIndex) -> Result<&[usize]> {
        self.scatter
            .get(t.levels())
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownMultiIndex(t.levels().to_vec()))
    }

    /// One-dimensional points U_{j,t} of dimension `dim`, nested order, mapped
    /// to domain coordinates.
    pub fn axis_points_nested(&self, dim: usize, t: u32) -> Vec<f64> {
        let (a, b) = self.domain[dim];
        level_points_nested(t)
            .into_iter()
            .map(|c| a + (b - a) * c.value_unit())
            .collect()
    }

    /// Positions of the points that lie on the lower-level grid U(η_c, d).
    /// By nestedness this is a subset of the grid: a point belongs to
    /// U(η_c, d) exactly when its canonical levels sum to at most η_c.
    pub fn coarse_positions(&self, eta_c: u32) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.iter().map(|c| c.canonical_level()).sum::<u32>() <= eta_c)
            .map(|(i, _)| i)
            .collect()
    }
}

fn kron_enumeration(
    levels: &[u32],
    axis: impl Fn(u32) -> Vec<DyadicCoord>,
) -> Vec<Vec<DyadicCoord>> {
    let axes: Vec<Vec<DyadicCoord>> = levels.iter().map(|&t| axis(t)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        out.push(idx.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect());
        for j in (0..axes.len()).rev() {
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(levels: &[u32]) -> MultiIndex {
        MultiIndex::new(levels.to_vec()).unwrap()
    }

    fn values(pts: &[DyadicCoord]) -> Vec<f64> {
        pts.iter().map(|p| p.value_unit()).collect()
    }

    #[test]
    fn level_point_examples() {
        assert!(level_points(0).is_empty());
        assert_eq!(values(&level_points(1)), vec![0.5]);
        assert_eq!(values(&level_points(2)), vec![0.25, 0.5, 0.75]);
        assert_eq!(
            values(&level_points_nested(3)),
            vec![0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875]
        );
    }

    #[test]
    fn dyadic_reduction_and_exact_compare() {
        // 2/4 reduces to 1/2
        assert_eq!(DyadicCoord::new(2, 2), DyadicCoord::new(1, 1));
        assert!(DyadicCoord::new(1, 3) < DyadicCoord::new(1, 2));
        assert!(DyadicCoord::new(3, 2) > DyadicCoord::new(5, 3));
        assert_eq!(DyadicCoord::new(4, 3).canonical_level(), 1);
    }

    #[test]
    fn smolyak_index_set_examples() {
        let s: std::collections::HashSet<_> = smolyak_index_set(3, 2)
            .unwrap()
            .into_iter()
            .map(|t| t.levels().to_vec())
            .collect();
        let expected: std::collections::HashSet<_> =
            [vec![1, 1], vec![1, 2], vec![2, 1]].into_iter().collect();
        assert_eq!(s, expected);

        let degenerate = smolyak_index_set(2, 2).unwrap();
        assert_eq!(degenerate.len(), 1);
        assert_eq!(degenerate[0].levels(), &[1, 1]);

        let s4: std::collections::HashSet<_> = smolyak_index_set(4, 2)
            .unwrap()
            .into_iter()
            .map(|t| t.levels().to_vec())
            .collect();
        let expected4: std::collections::HashSet<_> = [
            vec![1, 2],
            vec![2, 1],
            vec![1, 3],
            vec![3, 1],
            vec![2, 2],
        ]
        .into_iter()
        .collect();
        assert_eq!(s4, expected4);

        assert!(smolyak_index_set(1, 2).is_err());
    }

    #[test]
    fn boundary_index_set_examples() {
        let b: std::collections::HashSet<_> = boundary_index_set(3, 2)
            .unwrap()
            .into_iter()
            .map(|t| t.levels().to_vec())
            .collect();
        assert_eq!(
            b,
            [vec![1, 2], vec![2, 1]].into_iter().collect::<std::collections::HashSet<_>>()
        );
        assert_eq!(boundary_index_set(2, 2).unwrap().len(), 1);
        let b43: std::collections::HashSet<_> = boundary_index_set(4, 3)
            .unwrap()
            .into_iter()
            .map(|t| t.levels().to_vec())
            .collect();
        let expected: std::collections::HashSet<_> =
            [vec![1, 1, 2], vec![1, 2, 1], vec![2, 1, 1]].into_iter().collect();
        assert_eq!(b43, expected);
    }

    #[test]
    fn smolyak_coefficient_examples() {
        assert_eq!(smolyak_coefficient(&mi(&[1, 2]), 3, 2), 1);
        assert_eq!(smolyak_coefficient(&mi(&[1, 1]), 3, 2), -1);
        assert_eq!(smolyak_coefficient(&mi(&[1, 1, 2]), 5, 3), -2);
        assert_eq!(smolyak_coefficient(&mi(&[2, 2, 1]), 5, 3), 1);
    }

    #[test]
    fn build_examples() {
        let g = SparseGrid::build_unit(3, 2).unwrap();
        assert_eq!(g.len(), 5);
        let pts: std::collections::HashSet<Vec<(u32, u32)>> = g
            .points()
            .iter()
            .map(|p| p.iter().map(|c| (c.numerator(), c.canonical_level())).collect())
            .collect();
        let expected: std::collections::HashSet<Vec<(u32, u32)>> = [
            vec![(1, 1), (1, 2)],
            vec![(1, 1), (1, 1)],
            vec![(1, 1), (3, 2)],
            vec![(1, 2), (1, 1)],
            vec![(3, 2), (1, 1)],
        ]
        .into_iter()
        .collect();
        assert_eq!(pts, expected);
        assert!(g.len() <= 2usize.pow(1) * 9 / 2); // 2^{η−d} η^d / d!

        let single = SparseGrid::build_unit(2, 2).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.points_domain()[0], vec![0.5, 0.5]);

        assert!(SparseGrid::build_unit(1, 2).is_err());
    }

    #[test]
    fn scatter_examples() {
        let g = SparseGrid::build_unit(2, 2).unwrap();
        // single index (1,1); the whole grid is the subgrid
        assert_eq!(g.scatter_indices(&mi(&[1, 1])).unwrap(), &[0]);

        let g = SparseGrid::build_unit(3, 2).unwrap();
        let s = g.scatter_indices(&mi(&[1, 2])).unwrap();
        assert_eq!(s.len(), 3);
        let mut sorted = s.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 3, "positions must be distinct");

        assert_eq!(g.scatter_indices(&mi(&[2, 1])).unwrap().len(), 3);
        assert!(g.scatter_indices(&mi(&[3, 3])).is_err());
    }

    #[test]
    fn scatter_matches_nested_axis_enumeration() {
        let g = SparseGrid::build_unit(4, 2).unwrap();
        let t = mi(&[1, 3]);
        let s = g.scatter_indices(&t).unwrap();
        let ax0 = level_points_nested(1);
        let ax1 = level_points_nested(3);
        for (k, &pos) in s.iter().enumerate() {
            let (i, j) = (k / ax1.len(), k % ax1.len());
            let p = &g.points()[pos];
            assert_eq!(p[0], ax0[i]);
            assert_eq!(p[1], ax1[j]);
        }
    }

    #[test]
    fn partition_of_unity_telescopes() {
        for d in 2..=4usize {
            for eta in d as u32..=6 {
                let g = SparseGrid::build_unit(eta, d).unwrap();
                let mut acc = vec![0i64; g.len()];
                for t in g.smolyak_indices() {
                    let c = smolyak_coefficient(t, eta, d);
                    for &pos in g.scatter_indices(t).unwrap() {
                        acc[pos] += c;
                    }
                }
                assert!(acc.iter().all(|&v| v == 1), "eta={eta} d={d}: {acc:?}");
            }
        }
    }

    #[test]
    fn cardinality_bound_holds() {
        for d in 1..=4usize {
            for eta in d as u32..=9 {
                let g = SparseGrid::build_unit(eta, d).unwrap();
                let fact: f64 = (1..=d).map(|k| k as f64).product();
                let bound = 2f64.powi(eta as i32 - d as i32) * (eta as f64).powi(d as i32) / fact;
                assert!(
                    (g.len() as f64) <= bound,
                    "eta={eta} d={d}: {} > {bound}",
                    g.len()
                );
            }
        }
    }

    #[test]
    fn grids_are_nested_in_level() {
        for d in 1..=3usize {
            for eta in d as u32..=6 {
                let a = SparseGrid::build_unit(eta, d).unwrap();
                let b = SparseGrid::build_unit(eta + 1, d).unwrap();
                let set: std::collections::HashSet<_> = b.points().iter().cloned().collect();
                assert!(a.points().iter().all(|p| set.contains(p)));
            }
        }
    }

    #[test]
    fn coarse_positions_are_the_lower_level_grid() {
        let g = SparseGrid::build_unit(5, 2).unwrap();
        let coarse = g.coarse_positions(3);
        let small = SparseGrid::build_unit(3, 2).unwrap();
        assert_eq!(coarse.len(), small.len());
        let set: std::collections::HashSet<_> = small.points().iter().cloned().collect();
        for &i in &coarse {
            assert!(set.contains(&g.points()[i]));
        }
    }

    #[test]
    fn domain_mapping_is_affine() {
        let g = SparseGrid::build(3, 2, &[(-5.0, 5.0), (0.0, 2.0)]).unwrap();
        let p = g
            .points()
            .iter()
            .position(|p| p.iter().all(|c| (c.numerator(), c.canonical_level()) == (1, 1)))
            .unwrap();
        assert_eq!(g.points_domain()[p], vec![0.0, 1.0]);
    }
}
