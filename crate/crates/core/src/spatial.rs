//! Exact radius / nearest queries over static point sets, and voxel-grid downsampling.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use nalgebra::Point3;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

/// Static k-d tree over `D`-dimensional points.
///
/// The tree is implicit: `order` is a permutation of point indices arranged so
/// that every subrange `[lo, hi)` is split at its midpoint on axis `depth % D`.
#[derive(Debug, Clone, Default)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    order: Vec<usize>,
}

/// 3D index used for neighborhood gathering.
pub type SpatialIndex = KdTree<3>;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const D: usize> KdTree<D> {
    pub fn build(points: Vec<[f64; D]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        Self::split(&points, &mut order, 0);
        Self { points, order }
    }

    fn split(points: &[[f64; D]], order: &mut [usize], depth: usize) {
        if order.len() <= LEAF_SIZE {
            return;
        }
        let axis = depth % D;
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let (left, right) = order.split_at_mut(mid);
        Self::split(points, left, depth + 1);
        Self::split(points, &mut right[1..], depth + 1);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64; D] {
        &self.points[index]
    }

    fn dist2(a: &[f64; D], b: &[f64; D]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    /// Indices of all points within `r` (inclusive) of `center`, nearest first.
    /// Equal distances are ordered by index.
    pub fn radius_query(&self, center: &[f64; D], r: f64) -> Result<Vec<usize>> {
        Ok(self
            .radius_query_with_distances(center, r)?
            .into_iter()
            .map(|(i, _)| i)
            .collect())
    }

    /// Like [`radius_query`](Self::radius_query) but also returns each distance.
    pub fn radius_query_with_distances(
        &self,
        center: &[f64; D],
        r: f64,
    ) -> Result<Vec<(usize, f64)>> {
        if !(r > 0.0) {
            return Err(Error::NonPositiveRadius(r));
        }
        let mut found = Vec::new();
        self.collect_within(center, r * r, 0, self.order.len(), 0, &mut found);
        found.sort_unstable();
        Ok(found
            .into_iter()
            .map(|c| (c.index, c.dist2.sqrt()))
            .collect())
    }

    fn collect_within(
        &self,
        center: &[f64; D],
        r2: f64,
        lo: usize,
        hi: usize,
        depth: usize,
        out: &mut Vec<Candidate>,
    ) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                let d2 = Self::dist2(center, &self.points[i]);
                if d2 <= r2 {
                    out.push(Candidate {
                        dist2: d2,
                        index: i,
                    });
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let pivot = self.order[mid];
        let axis = depth % D;
        let delta = center[axis] - self.points[pivot][axis];
        let d2 = Self::dist2(center, &self.points[pivot]);
        if d2 <= r2 {
            out.push(Candidate {
                dist2: d2,
                index: pivot,
            });
        }
        let (near, far) = if delta <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.collect_within(center, r2, near.0, near.1, depth + 1, out);
        if delta * delta <= r2 {
            self.collect_within(center, r2, far.0, far.1, depth + 1, out);
        }
    }

    /// Nearest point and its distance; `None` for an empty tree.
    pub fn nearest(&self, query: &[f64; D]) -> Option<(usize, f64)> {
        self.k_nearest(query, 1).into_iter().next()
    }

    /// Up to `k` nearest points, nearest first.
    pub fn k_nearest(&self, query: &[f64; D], k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn(query, k, 0, self.order.len(), 0, &mut heap);
        let mut out = heap.into_vec();
        out.sort_unstable();
        out.into_iter().map(|c| (c.index, c.dist2.sqrt())).collect()
    }

    fn offer(heap: &mut BinaryHeap<Candidate>, k: usize, c: Candidate) {
        if heap.len() < k {
            heap.push(c);
        } else if let Some(top) = heap.peek() {
            if c < *top {
                heap.pop();
                heap.push(c);
            }
        }
    }

    fn knn(
        &self,
        query: &[f64; D],
        k: usize,
        lo: usize,
        hi: usize,
        depth: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                let c = Candidate {
                    dist2: Self::dist2(query, &self.points[i]),
                    index: i,
                };
                Self::offer(heap, k, c);
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let pivot = self.order[mid];
        let axis = depth % D;
        let delta = query[axis] - self.points[pivot][axis];
        Self::offer(
            heap,
            k,
            Candidate {
                dist2: Self::dist2(query, &self.points[pivot]),
                index: pivot,
            },
        );
        let (near, far) = if delta <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn(query, k, near.0, near.1, depth + 1, heap);
        let worst = heap.peek().map_or(f64::INFINITY, |c| c.dist2);
        if heap.len() < k || delta * delta <= worst {
            self.knn(query, k, far.0, far.1, depth + 1, heap);
        }
    }
}

impl KdTree<3> {
    pub fn from_points(points: &[Point3<f64>]) -> Self {
        Self::build(points.iter().map(|p| [p.x, p.y, p.z]).collect())
    }
}

/// Index over a cloud's points.
pub fn build_index(points: &[Point3<f64>]) -> SpatialIndex {
    KdTree::from_points(points)
}

/// Replaces the points of each occupied voxel with their centroid.
///
/// The grid has pitch `voxel_size` and is anchored at the cloud's minimum
/// corner. Output order follows voxel coordinates (x, then y, then z). Colors
/// are dropped.
pub fn voxel_downsample(cloud: &PointCloud, voxel_size: f64) -> Result<PointCloud> {
    if !(voxel_size > 0.0) || !voxel_size.is_finite() {
        return Err(Error::NonPositiveVoxelSize(voxel_size));
    }
    let Some((lo, _)) = cloud.bounds() else {
        return Ok(PointCloud::default());
    };
    let mut cells: BTreeMap<[i64; 3], ([f64; 3], usize)> = BTreeMap::new();
    for p in &cloud.points {
        let key = voxel_key(p, &lo, voxel_size);
        let cell = cells.entry(key).or_insert(([0.0; 3], 0));
        for k in 0..3 {
            cell.0[k] += p[k];
        }
        cell.1 += 1;
    }
    let points = cells
        .into_values()
        .map(|(sum, n)| {
            let n = n as f64;
            Point3::new(sum[0] / n, sum[1] / n, sum[2] / n)
        })
        .collect();
    Ok(PointCloud::new(points))
}

pub(crate) fn voxel_key(p: &Point3<f64>, anchor: &Point3<f64>, pitch: f64) -> [i64; 3] {
    [
        ((p.x - anchor.x) / pitch).floor() as i64,
        ((p.y - anchor.y) / pitch).floor() as i64,
        ((p.z - anchor.z) / pitch).floor() as i64,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_radius(points: &[[f64; 3]], c: &[f64; 3], r: f64) -> Vec<usize> {
        let mut v: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (KdTree::<3>::dist2(p, c).sqrt(), i))
            .filter(|(d, _)| *d <= r)
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v.into_iter().map(|(_, i)| i).collect()
    }

    fn random_points(n: usize, seed: u64, extent: f64) -> Vec<[f64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                [
                    rng.gen_range(0.0..extent),
                    rng.gen_range(0.0..extent),
                    rng.gen_range(0.0..extent / 4.0),
                ]
            })
            .collect()
    }

    #[test]
    fn empty_index() {
        let tree = KdTree::<3>::build(vec![]);
        assert!(tree.is_empty());
        assert!(tree.radius_query(&[0.0; 3], 10.0).unwrap().is_empty());
        assert!(tree.nearest(&[0.0; 3]).is_none());
    }

    #[test]
    fn singleton_is_nearest_to_everything() {
        let tree = KdTree::<3>::build(vec![[1.0, 2.0, 3.0]]);
        for q in [[0.0; 3], [100.0, -5.0, 2.0], [1.0, 2.0, 3.0]] {
            assert_eq!(tree.nearest(&q).unwrap().0, 0);
        }
    }

    #[test]
    fn radius_must_be_positive() {
        let tree = KdTree::<3>::build(vec![[0.0; 3]]);
        assert!(matches!(
            tree.radius_query(&[0.0; 3], 0.0),
            Err(Error::NonPositiveRadius(_))
        ));
        assert!(tree.radius_query(&[0.0; 3], -1.0).is_err());
    }

    #[test]
    fn boundary_inclusive_threshold() {
        let tree = KdTree::<3>::build(vec![[0.6, 0.0, 0.0], [0.4, 0.0, 0.0]]);
        assert_eq!(tree.radius_query(&[0.0; 3], 0.5).unwrap(), vec![1]);
        let tree = KdTree::<3>::build(vec![[0.5, 0.0, 0.0]]);
        assert_eq!(tree.radius_query(&[0.0; 3], 0.5).unwrap(), vec![0]);
    }

    #[test]
    fn self_inclusion_first() {
        let pts = random_points(200, 3, 5.0);
        let tree = KdTree::build(pts.clone());
        for (i, p) in pts.iter().enumerate().take(20) {
            let found = tree.radius_query(p, 0.7).unwrap();
            assert_eq!(found[0], i);
        }
    }

    #[test]
    fn matches_linear_scan_10k() {
        let pts = random_points(10_000, 11, 50.0);
        let tree = KdTree::build(pts.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let c = [
                rng.gen_range(-5.0..55.0),
                rng.gen_range(-5.0..55.0),
                rng.gen_range(-2.0..15.0),
            ];
            let r = rng.gen_range(0.1..4.0);
            assert_eq!(tree.radius_query(&c, r).unwrap(), brute_radius(&pts, &c, r));
        }
    }

    #[test]
    fn k_nearest_matches_linear_scan() {
        let pts = random_points(1000, 5, 20.0);
        let tree = KdTree::build(pts.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = [rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0), 1.0];
            let got: Vec<usize> = tree.k_nearest(&c, 7).into_iter().map(|x| x.0).collect();
            let all = brute_radius(&pts, &c, 1e9);
            assert_eq!(got, all[..7]);
        }
    }

    #[test]
    fn downsample_singleton() {
        let cloud = PointCloud::new(vec![Point3::new(0.3, -0.2, 7.0)]);
        let out = voxel_downsample(&cloud, 1.0).unwrap();
        assert_eq!(out.points, cloud.points);
    }

    #[test]
    fn downsample_cube_to_center() {
        let mut pts = Vec::new();
        for dx in [0.0, 0.5] {
            for dy in [0.0, 0.5] {
                for dz in [0.0, 0.5] {
                    pts.push(Point3::new(0.1 + dx, 0.1 + dy, 0.1 + dz));
                }
            }
        }
        let mut out = voxel_downsample(&PointCloud::new(pts), 1.0).unwrap();
        assert_eq!(out.len(), 1);
        let c = out.points.pop().unwrap();
        assert!((c - Point3::new(0.35, 0.35, 0.35)).norm() < 1e-12);
    }

    #[test]
    fn downsample_disjoint_voxels() {
        let cloud = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.0), Point3::new(5.0, 0.0, 0.0)]);
        assert_eq!(voxel_downsample(&cloud, 1.0).unwrap().len(), 2);
        assert!(matches!(
            voxel_downsample(&cloud, 0.0),
            Err(Error::NonPositiveVoxelSize(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn radius_query_equals_scan(
            seed in any::<u64>(),
            n in 0usize..5000,
            cx in -2.0f64..12.0, cy in -2.0f64..12.0, cz in -1.0f64..4.0,
            r in 0.01f64..5.0,
        ) {
            let pts = random_points(n, seed, 10.0);
            let tree = KdTree::build(pts.clone());
            let c = [cx, cy, cz];
            let mut got = tree.radius_query(&c, r).unwrap();
            let mut want = brute_radius(&pts, &c, r);
            got.sort_unstable();
            want.sort_unstable();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn downsample_has_one_point_per_voxel(seed in any::<u64>(), n in 1usize..800, pitch in 0.2f64..3.0) {
            let pts: Vec<Point3<f64>> = random_points(n, seed, 10.0).into_iter().map(Point3::from).collect();
            let cloud = PointCloud::new(pts);
            let once = voxel_downsample(&cloud, pitch).unwrap();
            prop_assert!(once.len() <= cloud.len());
            let (lo, _) = cloud.bounds().unwrap();
            let mut keys: Vec<[i64; 3]> = cloud.points.iter().map(|p| voxel_key(p, &lo, pitch)).collect();
            keys.sort_unstable();
            keys.dedup();
            prop_assert_eq!(once.len(), keys.len());
            // re-binning centroids on the original anchor never adds points
            let mut again: Vec<[i64; 3]> = once.points.iter().map(|p| voxel_key(p, &lo, pitch)).collect();
            again.sort_unstable();
            again.dedup();
            prop_assert!(again.len() <= once.len());
        }
    }
}
