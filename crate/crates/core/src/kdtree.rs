//! Static 3-d tree over a point set. Built once, then queried read-only.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geom::Vec3;
use crate::scalar::Real;

const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
enum Node<T> {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: T, left: usize, right: usize },
}

#[derive(Clone, Debug)]
pub struct KdTree<T> {
    points: Vec<Vec3<T>>,
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

// Max-heap entry ordered by (distance, index) so ties resolve to the lower index.
struct Entry<T> {
    d2: T,
    idx: usize,
}

impl<T: Real> PartialEq for Entry<T> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<T: Real> Eq for Entry<T> {}
impl<T: Real> PartialOrd for Entry<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for Entry<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.d2.partial_cmp(&o.d2).unwrap_or(Ordering::Equal).then(self.idx.cmp(&o.idx))
    }
}

impl<T: Real> KdTree<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Self {
        let n = points.len();
        let mut tree = Self { points, order: (0..n).collect(), nodes: Vec::new() };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis of widest spread
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for &i in &self.order[start..end] {
            let p = self.points[i];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).partial_cmp(&(hi[b] - lo[b])).unwrap_or(Ordering::Equal))
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            pts[i][axis].partial_cmp(&pts[j][axis]).unwrap_or(Ordering::Equal).then(i.cmp(&j))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// The `k` nearest points as `(index, distance)`, nearest first; ties break by index.
    pub fn knn(&self, q: Vec3<T>, k: usize) -> Vec<(usize, T)> {
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Entry<T>> = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, q, k, &mut heap);
        let mut out: Vec<_> = heap.into_vec();
        out.sort();
        out.into_iter().map(|e| (e.idx, e.d2.sqrt())).collect()
    }

    fn knn_rec(&self, node: usize, q: Vec3<T>, k: usize, heap: &mut BinaryHeap<Entry<T>>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let e = Entry { d2: (self.points[i] - q).norm_sq(), idx: i };
                    if heap.len() < k {
                        heap.push(e);
                    } else if let Some(top) = heap.peek() {
                        if e < *top {
                            heap.pop();
                            heap.push(e);
                        }
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < T::zero() { (left, right) } else { (right, left) };
                self.knn_rec(near, q, k, heap);
                let d2 = diff * diff;
                // `<=` keeps equal-distance points on the far side eligible for the index tie-break
                if heap.len() < k || heap.peek().is_some_and(|top| d2 <= top.d2) {
                    self.knn_rec(far, q, k, heap);
                }
            }
        }
    }

    pub fn nearest(&self, q: Vec3<T>) -> Option<(usize, T)> {
        self.knn(q, 1).into_iter().next()
    }

    /// Indices of all points with distance `<= r`, ascending by index.
    pub fn within_radius(&self, q: Vec3<T>, r: T) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.is_empty() {
            self.radius_rec(0, q, r * r, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, node: usize, q: Vec3<T>, r2: T, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if (self.points[i] - q).norm_sq() <= r2 {
                        out.push(i);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < T::zero() { (left, right) } else { (right, left) };
                self.radius_rec(near, q, r2, out);
                if diff * diff <= r2 {
                    self.radius_rec(far, q, r2, out);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Vec3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vec3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()))
            .collect()
    }

    #[test]
    fn knn_matches_brute_force() {
        let pts = random_points(2000, 3);
        let tree = KdTree::new(pts.clone());
        for q in random_points(50, 9) {
            let got = tree.knn(q, 17);
            let mut all: Vec<(f64, usize)> = pts.iter().enumerate().map(|(i, p)| ((*p - q).norm(), i)).collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let want: Vec<usize> = all[..17].iter().map(|x| x.1).collect();
            let got_idx: Vec<usize> = got.iter().map(|x| x.0).collect();
            assert_eq!(got_idx, want);
        }
    }

    #[test]
    fn ties_resolve_by_index() {
        // a regular grid has many equidistant neighbors
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                pts.push(Vec3::new(i as f64, j as f64, 0.0));
            }
        }
        let tree = KdTree::new(pts.clone());
        let q = Vec3::new(5.0, 5.0, 0.0);
        let got: Vec<usize> = tree.knn(q, 3).iter().map(|x| x.0).collect();
        // self, then the two lowest-index points at distance 1: (4,5) and (5,4)
        assert_eq!(got, vec![55, 45, 54]);
    }

    #[test]
    fn radius_matches_brute_force() {
        let pts = random_points(1500, 5);
        let tree = KdTree::new(pts.clone());
        for q in random_points(20, 11) {
            let got = tree.within_radius(q, 0.15);
            let want: Vec<usize> =
                pts.iter().enumerate().filter(|(_, p)| (**p - q).norm() <= 0.15).map(|(i, _)| i).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn knn_larger_than_set() {
        let tree = KdTree::new(random_points(5, 1));
        assert_eq!(tree.knn(Vec3::zero(), 10).len(), 5);
        assert!(KdTree::<f64>::new(Vec::new()).nearest(Vec3::zero()).is_none());
    }
}
