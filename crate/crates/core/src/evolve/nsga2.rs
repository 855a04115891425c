//! Fast non-dominated sorting and crowding distance.
//!
//! Points are weighted objective vectors where larger is better in every
//! component (see [`super::Fitness::weighted`]).

/// `a` is at least as good as `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Partitions point indices into successive non-dominated fronts.
pub fn fast_non_dominated_sort(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    let mut fronts = vec![Vec::new()];
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            if dominates(&points[p], &points[q]) {
                dominated_by[p].push(q);
            } else if dominates(&points[q], &points[p]) {
                counts[p] += 1;
            }
        }
        if counts[p] == 0 {
            fronts[0].push(p);
        }
    }
    let mut i = 0;
    while !fronts[i].is_empty() {
        let mut next = Vec::new();
        for &p in &fronts[i] {
            for &q in &dominated_by[p] {
                counts[q] -= 1;
                if counts[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(next);
        i += 1;
    }
    fronts.pop();
    fronts
}

/// Crowding distance of each member of `front`, in the same order.
/// Boundary points of every objective get infinite distance.
pub fn crowding_distance(points: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let len = front.len();
    let mut distance = vec![0.0; len];
    if len == 0 {
        return distance;
    }
    let objectives = points[front[0]].len();
    for m in 0..objectives {
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_by(|&a, &b| points[front[a]][m].total_cmp(&points[front[b]][m]));
        distance[order[0]] = f64::INFINITY;
        distance[order[len - 1]] = f64::INFINITY;
        let lo = points[front[order[0]]][m];
        let hi = points[front[order[len - 1]]][m];
        let range = hi - lo;
        if !(range.is_finite() && range > 0.0) {
            continue;
        }
        for w in 1..len.saturating_sub(1) {
            let gap = points[front[order[w + 1]]][m] - points[front[order[w - 1]]][m];
            if gap.is_finite() {
                distance[order[w]] += gap / range;
            }
        }
    }
    distance
}

/// Front rank (0 = first front) and crowding distance for every point.
pub fn rank_and_crowding(points: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; points.len()];
    let mut crowd = vec![0.0; points.len()];
    for (r, front) in fast_non_dominated_sort(points).iter().enumerate() {
        for (&i, d) in front.iter().zip(crowding_distance(points, front)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

/// NSGA-II environmental selection of `n` indices: whole fronts in order,
/// the last partial front truncated by descending crowding distance.
pub fn select(points: &[Vec<f64>], n: usize) -> Vec<usize> {
    let n = n.min(points.len());
    let mut out = Vec::with_capacity(n);
    for front in fast_non_dominated_sort(points) {
        let missing = n - out.len();
        if missing == 0 {
            break;
        }
        if front.len() <= missing {
            out.extend_from_slice(&front);
        } else {
            let dist = crowding_distance(points, &front);
            let mut order: Vec<usize> = (0..front.len()).collect();
            // stable: equal distances keep front order
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]));
            out.extend(order.into_iter().take(missing).map(|i| front[i]));
        }
    }
    out
}
