use super::ProjectedPoint;

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Indices of the extreme points of the convex hull of `points` in the
/// `(p1, p0)` plane, counter-clockwise from the lowest `p1`. Collinear and
/// repeated points are excluded; for repeats the lowest index is kept.
pub fn hull_extremes(points: &[ProjectedPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let key = |i: usize| (points[i].p1, points[i].p0);
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.cmp(&b))
    });
    order.dedup_by(|b, a| key(*a) == key(*b));
    if order.len() <= 2 {
        return order;
    }

    let mut lower: Vec<usize> = Vec::new();
    for &i in &order {
        while lower.len() >= 2 && cross(key(lower[lower.len() - 2]), key(lower[lower.len() - 1]), key(i)) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in order.iter().rev() {
        while upper.len() >= 2 && cross(key(upper[upper.len() - 2]), key(upper[upper.len() - 1]), key(i)) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<ProjectedPoint> {
        v.iter().map(|&(p0, p1)| ProjectedPoint { p0, p1 }).collect()
    }

    #[test]
    fn single_point() {
        assert_eq!(hull_extremes(&pts(&[(0.3, -0.1)])), vec![0]);
    }

    #[test]
    fn square_with_center() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (0.5, -0.5), (0.0, -1.0), (1.0, -1.0)]);
        let mut h = hull_extremes(&p);
        h.sort();
        assert_eq!(h, vec![0, 1, 3, 4]);
    }

    #[test]
    fn collinear_and_repeated_points_dropped() {
        let p = pts(&[(0.0, 0.0), (0.0, -1.0), (0.0, -2.0), (0.0, -1.0), (1.0, -1.0)]);
        let mut h = hull_extremes(&p);
        h.sort();
        assert_eq!(h, vec![0, 2, 4]);
        let line = pts(&[(0.0, 0.0), (1.0, -1.0), (2.0, -2.0)]);
        let mut h = hull_extremes(&line);
        h.sort();
        assert_eq!(h, vec![0, 2]);
    }

    #[test]
    fn empty() {
        assert!(hull_extremes(&[]).is_empty());
    }
}
