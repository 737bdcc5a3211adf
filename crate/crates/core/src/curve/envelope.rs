use super::ProjectedPoint;

/// Slopes closer than this are treated as parallel.
const PARALLEL: f64 = 1e-10;
/// Values closer than this at a common abscissa are treated as tied.
const TIE: f64 = 1e-12;

/// A line of the upper envelope and the interval on which it is maximal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePiece {
    pub line: ProjectedPoint,
    pub from: f64,
    pub to: f64,
}

/// Upper envelope of `p0 + p1 * P` over `[lo, hi]`, left to right.
///
/// Near-parallel lines are collapsed to the highest one. Each piece has
/// positive length; lines that only touch the envelope at a single `P` are
/// skipped.
pub fn upper_envelope(lines: &[ProjectedPoint], lo: f64, hi: f64) -> Vec<EnvelopePiece> {
    let mut sorted: Vec<ProjectedPoint> = lines
        .iter()
        .copied()
        .filter(|l| l.p0.is_finite() && l.p1.is_finite())
        .collect();
    if sorted.is_empty() {
        return Vec::new();
    }
    sorted.sort_by(|a, b| a.p1.total_cmp(&b.p1).then(b.p0.total_cmp(&a.p0)));
    let mut reps: Vec<ProjectedPoint> = Vec::with_capacity(sorted.len());
    for l in sorted {
        match reps.last_mut() {
            Some(last) if l.p1 - last.p1 <= PARALLEL => {
                if l.p0 + l.p1 * lo > last.p0 + last.p1 * lo {
                    *last = l;
                }
            }
            _ => reps.push(l),
        }
    }

    let at = |l: &ProjectedPoint, x: f64| l.p0 + l.p1 * x;
    // Highest at `lo`; among ties the steepest ascent (largest slope) wins.
    let mut cur = 0;
    for (i, l) in reps.iter().enumerate() {
        let (v, best) = (at(l, lo), at(&reps[cur], lo));
        if v > best + TIE || (v >= best - TIE && l.p1 > reps[cur].p1) {
            cur = i;
        }
    }

    let mut pieces = vec![EnvelopePiece { line: reps[cur], from: lo, to: hi }];
    let mut x = lo;
    loop {
        let c = reps[cur];
        let mut next: Option<(usize, f64)> = None;
        // reps is sorted by slope, so everything after `cur` is steeper.
        for (j, l) in reps.iter().enumerate().skip(cur + 1) {
            let xc = ((c.p0 - l.p0) / (l.p1 - c.p1)).max(x);
            // Ties go to the steeper line, which stays on top to the right.
            let better = match next {
                None => true,
                Some((k, best)) => xc < best - TIE || (xc <= best + TIE && l.p1 > reps[k].p1),
            };
            if better {
                next = Some((j, xc));
            }
        }
        let Some((j, xc)) = next else { break };
        if xc >= hi {
            break;
        }
        if xc - x <= TIE {
            let last = pieces.last_mut().expect("nonempty");
            last.line = reps[j];
        } else {
            pieces.last_mut().expect("nonempty").to = xc;
            pieces.push(EnvelopePiece { line: reps[j], from: xc, to: hi });
            x = xc;
        }
        cur = j;
    }
    pieces
}

/// Pairwise crossings of the lines inside `[0, 1]`, sorted, with crossings
/// closer than `1e-12` merged.
pub fn breakpoint_candidates(points: &[ProjectedPoint]) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let ds = b.p1 - a.p1;
            if ds.abs() <= PARALLEL {
                continue;
            }
            let x = (a.p0 - b.p0) / ds;
            if (0.0..=1.0).contains(&x) {
                out.push(x);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|b, a| *b - *a <= TIE);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(p0: f64, p1: f64) -> ProjectedPoint {
        ProjectedPoint { p0, p1 }
    }

    #[test]
    fn two_lines() {
        let env = upper_envelope(&[line(0.4, 0.0), line(0.48, -0.2)], 0.0, 2.0);
        assert_eq!(env.len(), 2);
        assert_eq!(env[0].line, line(0.48, -0.2));
        assert!((env[0].to - 0.4).abs() < 1e-15);
        assert_eq!(env[1].line, line(0.4, 0.0));
    }

    #[test]
    fn dominated_and_tangent_lines_skipped() {
        // (0.3, -0.1) is below everywhere; (0.44, -0.1) touches only at 0.4
        let lines = [line(0.4, 0.0), line(0.48, -0.2), line(0.3, -0.1), line(0.44, -0.1)];
        let env = upper_envelope(&lines, 0.0, 2.0);
        assert_eq!(env.len(), 2);
    }

    #[test]
    fn tie_at_left_end_goes_to_larger_slope() {
        let env = upper_envelope(&[line(1.0, -5.0), line(1.0, -1.0), line(0.5, 0.0)], 0.0, 2.0);
        assert_eq!(env[0].line, line(1.0, -1.0));
        assert!((env[0].to - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_concurrent_lines() {
        let lines = [line(1.0, -1.0), line(0.75, -0.5), line(0.5, 0.0)];
        assert_eq!(breakpoint_candidates(&lines), vec![0.5]);
        let env = upper_envelope(&lines, 0.0, 2.0);
        assert_eq!(env.len(), 2);
        assert_eq!(env[1].line, line(0.5, 0.0));
    }

    #[test]
    fn candidates() {
        assert_eq!(breakpoint_candidates(&[line(0.4, 0.0), line(0.48, -0.2)]).len(), 1);
        assert!((breakpoint_candidates(&[line(0.4, 0.0), line(0.48, -0.2)])[0] - 0.4).abs() < 1e-15);
        assert!(breakpoint_candidates(&[line(0.4, -0.1), line(0.48, -0.1)]).is_empty());
        assert!(breakpoint_candidates(&[line(0.4, 0.0), line(2.0, -0.2)]).is_empty());
    }
}
