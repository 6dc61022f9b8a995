//! Integer apportionment.

/// Quotas within this distance of an integer are treated as that integer, so
/// float noise in `total * weight` cannot flip a remainder ordering.
const SNAP: f64 = 1e-9;

/// Largest-remainder (Hamilton) apportionment of `total` units over `weights`.
///
/// Each entry first receives the floor of its exact quota; the leftover units
/// go to the largest fractional remainders, ties broken by position. Entries
/// with zero weight never receive a unit. Returns all zeros when every weight
/// is zero.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let mut counts = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            counts.push(0);
            continue;
        }
        let quota = total as f64 * w / sum;
        let nearest = quota.round();
        let quota = if (quota - nearest).abs() < SNAP {
            nearest
        } else {
            quota
        };
        let floor = quota.floor();
        counts.push(floor as usize);
        let rem = quota - floor;
        if rem > 0.0 {
            remainders.push((rem, i));
        }
    }
    let assigned: usize = counts.iter().sum();
    let mut leftover = total.saturating_sub(assigned);
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in &remainders {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    // Only reachable through pathological rounding; keep the sum exact.
    let mut i = 0;
    while leftover > 0 {
        if weights[i % weights.len()] > 0.0 {
            counts[i % weights.len()] += 1;
            leftover -= 1;
        }
        i += 1;
    }
    counts
}

/// Lays out `sum(counts)` slots so that every prefix holds each category as
/// close to its share as possible.
///
/// Slot `j` goes to the category with the largest deficit
/// `(j + 1) * counts[c] / n - used[c]` among categories with quota left, ties
/// to the lowest index. Totals are exact by construction.
pub fn spread(counts: &[usize]) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let mut used = vec![0usize; counts.len()];
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut best: Option<(i128, usize)> = None;
        for (c, &count) in counts.iter().enumerate() {
            if used[c] >= count {
                continue;
            }
            // deficit scaled by n
            let deficit = (j as i128 + 1) * count as i128 - used[c] as i128 * n as i128;
            if best.is_none_or(|(d, _)| deficit > d) {
                best = Some((deficit, c));
            }
        }
        let (_, c) = best.expect("a category with remaining quota exists");
        used[c] += 1;
        out.push(c);
    }
    out
}
