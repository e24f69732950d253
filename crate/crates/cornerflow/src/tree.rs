//! Barnes-Hut treecode for the disk-plane kernel sums.
//!
//! The free-space part of the disk kernel is, up to conjugation and a
//! rotation, the holomorphic sum `sum_j Gamma_j / (eta - zeta_j)`, which a
//! complex multipole expansion approximates cluster by cluster. The image
//! part has the same form with sources at the circle inversions
//! `zeta* = zeta / |zeta|^2`; those lie outside the disk, so a second tree
//! built on the inverted sources handles them with the same machinery.
//!
//! Far-field expansions ignore the blob regularization `delta` (the
//! regularized and point kernels differ by `O(delta^2 / d^2)`); a node is
//! only accepted as far if that error is negligible, otherwise the exact
//! regularized kernel is used directly.

use num_complex::Complex64;

use crate::greens::kernel_disk_blob;

const LEAF_CAP: usize = 96;
const MAX_DEPTH: usize = 60;
/// Far-field acceptance additionally requires
/// `max_delta^2 < DELTA_FAR_FACTOR * (d - r)^2`.
const DELTA_FAR_FACTOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug)]
pub struct TreecodeParams {
    pub opening_angle: f64,
    pub order: usize,
}

impl Default for TreecodeParams {
    fn default() -> Self {
        TreecodeParams {
            opening_angle: 0.5,
            order: 8,
        }
    }
}

struct Node {
    /// Multipole center: circulation-magnitude centroid of the cluster.
    center: Complex64,
    /// Max distance from `center` to a contained source.
    radius: f64,
    max_delta: f64,
    /// Precomputed far-field threshold: the node is accepted when
    /// `|eta - center|^2` exceeds this (opening-angle and delta criteria
    /// folded together at build time).
    accept_d2: f64,
    /// `m_k = sum Gamma_j (p_j - center)^k`, `k = 0..=order`.
    moments: Vec<Complex64>,
    children: Vec<Node>,
    /// Source indices, only for leaves.
    points: Vec<usize>,
}

/// Flattened node: children and leaf points are contiguous ranges, so the
/// traversal touches memory in order.
struct FlatNode {
    center: Complex64,
    /// Far-field threshold: accepted when `|eta - center|^2` exceeds this
    /// (opening-angle and delta criteria folded together at build time).
    accept_d2: f64,
    child_start: u32,
    child_count: u32,
    pt_start: u32,
    pt_len: u32,
}

struct SubTree {
    order: usize,
    /// Sources permuted so that every leaf owns a contiguous slice.
    pos: Vec<Complex64>,
    gamma: Vec<f64>,
    delta: Vec<f64>,
    /// Breadth-first node order; the root is index 0.
    nodes: Vec<FlatNode>,
    /// `order + 1` moments per node, in node order.
    moments: Vec<Complex64>,
}

/// Shared read-only accelerator for batch velocity sums.
pub struct Treecode {
    free: SubTree,
    image: SubTree,
}

impl Treecode {
    /// Builds the pair of trees over the given disk-plane sources.
    pub fn build(pos: &[Complex64], gamma: &[f64], delta: &[f64], params: TreecodeParams) -> Self {
        assert!(params.opening_angle > 0.0 && params.order >= 1);
        let free = SubTree::build(pos.to_vec(), gamma.to_vec(), delta.to_vec(), &params);
        // circle inversions; sources at the disk center have their image at
        // infinity and contribute nothing
        let mut ipos = Vec::new();
        let mut igamma = Vec::new();
        for (j, &p) in pos.iter().enumerate() {
            let r2 = p.norm_sqr();
            if r2 >= 1e-280 {
                ipos.push(p / r2);
                igamma.push(gamma[j]);
            }
        }
        let idelta = vec![0.0; ipos.len()];
        let image = SubTree::build(ipos, igamma, idelta, &params);
        Treecode { free, image }
    }

    /// Same quantity as the direct sum
    /// `sum_j Gamma_j kernel_disk_blob(eta, zeta_j, delta_j)`.
    pub fn disk_velocity(&self, eta: Complex64) -> Complex64 {
        let v_free = self.free.eval(eta, true);
        let v_image = self.image.eval(eta, false);
        Complex64::new(0.0, 1.0) * (v_free - v_image) / (2.0 * std::f64::consts::PI)
    }
}

impl SubTree {
    fn build(pos: Vec<Complex64>, gamma: Vec<f64>, delta: Vec<f64>, params: &TreecodeParams) -> Self {
        let order = params.order;
        if pos.is_empty() {
            return SubTree {
                order,
                pos,
                gamma,
                delta,
                nodes: Vec::new(),
                moments: Vec::new(),
            };
        }
        let idx: Vec<usize> = (0..pos.len()).collect();
        let binom = binomial_table(order);
        let mut root = build_node(&pos, &gamma, &delta, idx, order, 0, &binom).0;
        // the 0.85 margin keeps the order-8 truncation term
        // (r/d)^9 / (1 - r/d) of accepted nodes below the 1e-6 budget
        // at the default angle 0.5
        let open_coeff = 1.0 + 1.0 / (0.85 * params.opening_angle);
        set_accept_threshold(&mut root, open_coeff, DELTA_FAR_FACTOR.sqrt().recip());

        // flatten breadth-first; children of the k-th emitted node start at
        // the running assignment counter, which matches the queue order
        let mut nodes = Vec::new();
        let mut moments = Vec::new();
        let mut perm: Vec<usize> = Vec::with_capacity(pos.len());
        let mut queue = std::collections::VecDeque::new();
        let mut assigned = 1u32;
        queue.push_back(root);
        while let Some(node) = queue.pop_front() {
            let child_count = node.children.len() as u32;
            let child_start = assigned;
            assigned += child_count;
            let pt_start = perm.len() as u32;
            perm.extend_from_slice(&node.points);
            nodes.push(FlatNode {
                center: node.center,
                accept_d2: node.accept_d2,
                child_start,
                child_count,
                pt_start,
                pt_len: node.points.len() as u32,
            });
            moments.extend_from_slice(&node.moments);
            for child in node.children {
                queue.push_back(child);
            }
        }
        SubTree {
            order,
            pos: perm.iter().map(|&j| pos[j]).collect(),
            gamma: perm.iter().map(|&j| gamma[j]).collect(),
            delta: perm.iter().map(|&j| delta[j]).collect(),
            nodes,
            moments,
        }
    }

    fn eval(&self, eta: Complex64, free_kernel: bool) -> Complex64 {
        if self.nodes.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        self.eval_node(0, eta, free_kernel)
    }

    /// Vector sum `sum Gamma_j (eta - p_j) / (|eta - p_j|^2 + delta_j^2)`
    /// over the node's sources.
    fn eval_node(&self, i: usize, eta: Complex64, free_kernel: bool) -> Complex64 {
        let node = &self.nodes[i];
        let dc = eta - node.center;
        if dc.norm_sqr() > node.accept_d2 {
            // multipole by Horner: conj( sum_k m_k / (eta - c)^{k+1} )
            let m = self.order + 1;
            let moms = &self.moments[i * m..(i + 1) * m];
            let invd = dc.inv();
            let mut acc = Complex64::new(0.0, 0.0);
            for m in moms.iter().rev() {
                acc = (acc + m) * invd;
            }
            return acc.conj();
        }
        if node.child_count == 0 {
            let lo = node.pt_start as usize;
            let hi = lo + node.pt_len as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..hi {
                // one scalar division per pair; the guards mirror
                // `kernel_free_blob`
                let diff = eta - self.pos[j];
                let dj = self.delta[j];
                let n2 = if free_kernel {
                    diff.norm_sqr() + dj * dj
                } else {
                    // image positions are stored pre-inverted
                    diff.norm_sqr()
                };
                if n2 >= 1e-280 {
                    acc += diff * (self.gamma[j] / n2);
                }
            }
            return acc;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for c in node.child_start..node.child_start + node.child_count {
            acc += self.eval_node(c as usize, eta, free_kernel);
        }
        acc
    }
}

fn set_accept_threshold(node: &mut Node, open_coeff: f64, delta_coeff: f64) {
    let d_min = (node.radius * open_coeff).max(node.radius + node.max_delta * delta_coeff);
    node.accept_d2 = d_min * d_min;
    for child in &mut node.children {
        set_accept_threshold(child, open_coeff, delta_coeff);
    }
}

fn binomial_table(order: usize) -> Vec<Vec<f64>> {
    let mut b = vec![vec![0.0; order + 1]; order + 1];
    for k in 0..=order {
        b[k][0] = 1.0;
        for j in 1..=k {
            b[k][j] = b[k - 1][j - 1] + if j <= k - 1 { b[k - 1][j] } else { 0.0 };
        }
    }
    b
}

/// Builds a node over `idx`; returns it with the cluster's total
/// circulation magnitude (needed for the parent's centroid).
fn build_node(
    pos: &[Complex64],
    gamma: &[f64],
    delta: &[f64],
    idx: Vec<usize>,
    order: usize,
    depth: usize,
    binom: &[Vec<f64>],
) -> (Node, f64) {
    // tight bounding box of the subset: subdividing at its center keeps the
    // tree shallow even when the point set is very non-uniform (the circle
    // inversions spread sources near the disk center arbitrarily far out)
    let (mut lo, mut hi) = (pos[idx[0]], pos[idx[0]]);
    for &j in &idx {
        let p = pos[j];
        lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let box_center = 0.5 * (lo + hi);

    if idx.len() <= LEAF_CAP || depth >= MAX_DEPTH {
        // leaf: centroid, radius and moments directly from the points; the
        // circulation-magnitude centroid falls back to the box center for
        // clusters of zero net magnitude
        let mut wsum = 0.0;
        let mut centroid = Complex64::new(0.0, 0.0);
        let mut max_delta = 0.0f64;
        for &j in &idx {
            let w = gamma[j].abs();
            wsum += w;
            centroid += w * pos[j];
            max_delta = max_delta.max(delta[j]);
        }
        let center = if wsum > 0.0 {
            centroid / wsum
        } else {
            box_center
        };
        let mut radius = 0.0f64;
        let mut moments = vec![Complex64::new(0.0, 0.0); order + 1];
        for &j in &idx {
            let rel = pos[j] - center;
            radius = radius.max(rel.norm());
            let mut pw = Complex64::new(gamma[j], 0.0);
            for m in moments.iter_mut() {
                *m += pw;
                pw *= rel;
            }
        }
        return (
            Node {
                center,
                radius,
                max_delta,
                accept_d2: 0.0,
                moments,
                children: Vec::new(),
                points: idx,
            },
            wsum,
        );
    }

    let mut buckets: [Vec<usize>; 4] = Default::default();
    for &j in &idx {
        let right = pos[j].re > box_center.re;
        let top = pos[j].im > box_center.im;
        buckets[(right as usize) | ((top as usize) << 1)].push(j);
    }
    let mut children = Vec::new();
    let mut weights = Vec::new();
    for bucket in buckets {
        if bucket.is_empty() {
            continue;
        }
        let (child, w) = build_node(pos, gamma, delta, bucket, order, depth + 1, binom);
        children.push(child);
        weights.push(w);
    }

    // aggregate the children instead of revisiting the points: weighted
    // centroid, a triangle-inequality radius bound, and moments shifted to
    // the new center by the binomial (M2M) translation
    let wsum: f64 = weights.iter().sum();
    let center = if wsum > 0.0 {
        children
            .iter()
            .zip(&weights)
            .map(|(c, &w)| w * c.center)
            .sum::<Complex64>()
            / wsum
    } else {
        box_center
    };
    let mut radius = 0.0f64;
    let mut max_delta = 0.0f64;
    let mut moments = vec![Complex64::new(0.0, 0.0); order + 1];
    let mut dzp = vec![Complex64::new(1.0, 0.0); order + 1];
    for child in &children {
        radius = radius.max((child.center - center).norm() + child.radius);
        max_delta = max_delta.max(child.max_delta);
        let dz = child.center - center;
        for k in 1..=order {
            dzp[k] = dzp[k - 1] * dz;
        }
        for k in 0..=order {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..=k {
                s += binom[k][j] * child.moments[j] * dzp[k - j];
            }
            moments[k] += s;
        }
    }
    (
        Node {
            center,
            radius,
            max_delta,
            accept_d2: 0.0,
            moments,
            children,
            points: Vec::new(),
        },
        wsum,
    )
}

/// Direct reference sum, used by tests and benchmarks.
pub fn direct_disk_velocity(
    pos: &[Complex64],
    gamma: &[f64],
    delta: &[f64],
    eta: Complex64,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..pos.len() {
        acc += gamma[j] * kernel_disk_blob(eta, pos[j], delta[j]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_sources(n: usize, seed: u64) -> (Vec<Complex64>, Vec<f64>, Vec<f64>) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut pos = Vec::new();
        let mut gamma = Vec::new();
        while pos.len() < n {
            let p = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if p.norm() < 0.98 {
                pos.push(p);
                gamma.push(rng.gen_range(-1.0..1.0f64));
            }
        }
        let delta = vec![0.0; n];
        (pos, gamma, delta)
    }

    #[test]
    fn two_blobs_degenerate_to_direct() {
        let pos = vec![Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5)];
        let gamma = vec![0.7, -1.3];
        let delta = vec![0.0, 0.0];
        let tree = Treecode::build(&pos, &gamma, &delta, TreecodeParams::default());
        for &eta in &[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, -0.5),
            Complex64::new(-0.8, 0.1),
        ] {
            let a = tree.disk_velocity(eta);
            let b = direct_disk_velocity(&pos, &gamma, &delta, eta);
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn large_set_within_tolerance() {
        let n = 10_000;
        let (pos, gamma, delta) = random_sources(n, 42);
        let tree = Treecode::build(&pos, &gamma, &delta, TreecodeParams::default());
        let mut rng = StdRng::seed_from_u64(1);
        let mut max_rel = 0.0f64;
        let mut mags = Vec::new();
        let mut pairs = Vec::new();
        for _ in 0..200 {
            let eta = loop {
                let p = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if p.norm() < 0.95 {
                    break p;
                }
            };
            let approx = tree.disk_velocity(eta);
            let exact = direct_disk_velocity(&pos, &gamma, &delta, eta);
            mags.push(exact.norm());
            pairs.push((approx, exact));
        }
        let scale = mags.iter().cloned().fold(0.0, f64::max);
        for (approx, exact) in pairs {
            max_rel = max_rel.max((approx - exact).norm() / scale);
        }
        assert!(max_rel < 1e-6, "max relative error {max_rel:e}");
    }

    #[test]
    fn regularized_sources_still_match() {
        let n = 2_000;
        let (pos, gamma, _) = random_sources(n, 9);
        let delta = vec![0.02; n];
        let tree = Treecode::build(&pos, &gamma, &delta, TreecodeParams::default());
        let mut pairs = Vec::new();
        let mut scale = 0.0f64;
        for k in 0..40 {
            let eta = Complex64::from_polar(0.7, 0.157 * k as f64);
            let a = tree.disk_velocity(eta);
            let b = direct_disk_velocity(&pos, &gamma, &delta, eta);
            scale = scale.max(b.norm());
            pairs.push((a, b));
        }
        let worst = pairs
            .iter()
            .map(|(a, b)| (a - b).norm() / scale)
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "worst {worst:e}");
    }

    #[test]
    fn empty_source_set() {
        let tree = Treecode::build(&[], &[], &[], TreecodeParams::default());
        assert_eq!(tree.disk_velocity(Complex64::new(0.1, 0.1)).norm(), 0.0);
    }
}
