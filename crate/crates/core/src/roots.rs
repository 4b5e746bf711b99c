//! Real roots of low-degree polynomials, with multiplicities.
//!
//! The finder recurses through the derivative chain: critical points of `p`
//! are the roots of `p'` (found recursively, with their own multiplicities),
//! `p` is strictly monotone between consecutive critical points, and a
//! critical point is a root of `p` of multiplicity `m` exactly when it is a
//! root of `p'` of multiplicity `m - 1` and `p` vanishes there. The vanishing
//! decision clusters against a positional tolerance `tol`: a critical value
//! counts as zero when it is smaller than what a root cluster of diameter
//! `tol` could produce. This keeps exact multiple roots exact in floating
//! point, where a fixed-radius cluster pass on solver output would split
//! them (a triple root computed in f64 scatters its spurious simple roots a
//! few orders of magnitude wider than any sensible fixed radius).
//!
//! Degrees are tiny here (products of tangency factors, degree <= 12), so
//! the quadratic cost of the recursion is irrelevant.

/// A real root with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootCluster {
    pub position: f64,
    pub multiplicity: usize,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RootError {
    #[error("roots within the cluster-decision band near u = {near}")]
    IllConditioned { near: f64 },
}

/// Evaluate `Σ coeffs[i] u^i` by Horner's rule.
pub fn eval_poly(coeffs: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

pub fn differentiate(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

fn degree(coeffs: &[f64]) -> usize {
    let max_mag = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if max_mag == 0.0 {
        return 0;
    }
    let mut d = coeffs.len().saturating_sub(1);
    while d > 0 && coeffs[d].abs() <= 1e-14 * max_mag {
        d -= 1;
    }
    d
}

/// Rounding-noise floor for evaluating `p` at `u`.
fn noise_floor(coeffs: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    let mut upow = 1.0;
    for &c in coeffs {
        acc += c.abs() * upow;
        upow *= u.abs();
    }
    8.0 * f64::EPSILON * acc + f64::MIN_POSITIVE
}

/// k-th derivative of `p` evaluated at `u`.
fn derivative_at(coeffs: &[f64], k: usize, u: f64) -> f64 {
    let mut d = coeffs.to_vec();
    for _ in 0..k {
        d = differentiate(&d);
    }
    eval_poly(&d, u)
}

/// All real roots of `p` with multiplicities, ascending. `tol` is the
/// positional cluster tolerance: root groups of diameter below `tol`
/// register as one multiple root.
pub fn real_roots(coeffs: &[f64], tol: f64) -> Result<Vec<RootCluster>, RootError> {
    let deg = degree(coeffs);
    let coeffs = &coeffs[..=deg];
    match deg {
        0 => return Ok(Vec::new()),
        1 => {
            return Ok(vec![RootCluster {
                position: -coeffs[0] / coeffs[1],
                multiplicity: 1,
            }])
        }
        _ => {}
    }

    let crit = real_roots(&differentiate(coeffs), tol)?;

    // Cauchy bound on root magnitude.
    let lead = coeffs[deg];
    let bound = 1.0 + coeffs[..deg]
        .iter()
        .fold(0.0f64, |m, c| m.max((c / lead).abs()));

    let mut roots: Vec<RootCluster> = Vec::new();
    // Multiplicity decision at each critical point.
    let mut crit_is_root = vec![false; crit.len()];
    for (idx, c) in crit.iter().enumerate() {
        let value = eval_poly(coeffs, c.position).abs();
        let m = c.multiplicity + 1;
        let lead_term = derivative_at(coeffs, m, c.position).abs() / factorial(m);
        // Critical value a root cluster of diameter `tol` would produce; an
        // ambiguity band around it separates "multiple root" from "split".
        let cluster_value = lead_term * tol.powi(m as i32);
        let noise = noise_floor(coeffs, c.position);
        const BAND: f64 = 16.0;
        if value <= noise.max(cluster_value / BAND) {
            crit_is_root[idx] = true;
            roots.push(RootCluster {
                position: c.position,
                multiplicity: m,
            });
        } else if value <= cluster_value * BAND {
            return Err(RootError::IllConditioned { near: c.position });
        }
    }

    // Simple roots strictly between consecutive critical points. The sign
    // just past a critical point that is itself a root comes from the lowest
    // nonvanishing derivative, not from a noise-dominated evaluation.
    let mut stations: Vec<(f64, f64)> = Vec::new(); // (position, sign leaving it rightward)
    let sign_at = |u: f64| -> f64 {
        let v = eval_poly(coeffs, u);
        if v.abs() <= noise_floor(coeffs, u) {
            0.0
        } else {
            v.signum()
        }
    };
    let left_end = crit
        .first()
        .map_or(-bound, |c| (-bound).min(c.position - 1.0))
        * 1.000001
        - 1e-12;
    stations.push((left_end, sign_at(left_end)));
    for (idx, c) in crit.iter().enumerate() {
        let sign_right = if crit_is_root[idx] {
            let m = c.multiplicity + 1;
            derivative_at(coeffs, m, c.position).signum()
        } else {
            sign_at(c.position)
        };
        stations.push((c.position, sign_right));
    }
    let right_end = crit
        .last()
        .map_or(bound, |c| bound.max(c.position + 1.0))
        * 1.000001
        + 1e-12;
    stations.push((right_end, sign_at(right_end)));

    for w in 0..stations.len() - 1 {
        let (lo, sign_lo) = stations[w];
        let hi = stations[w + 1].0;
        if hi - lo <= tol {
            continue;
        }
        // Sign approaching `hi` from the left.
        let hi_idx = w; // index into crit for stations[w+1] is w, if in range
        let sign_hi = if hi_idx < crit.len() && crit_is_root[hi_idx] {
            let m = crit[hi_idx].multiplicity + 1;
            let lead = derivative_at(coeffs, m, hi);
            (lead * if m % 2 == 0 { 1.0 } else { -1.0 }).signum()
        } else {
            sign_at(hi)
        };
        if sign_lo == 0.0 || sign_hi == 0.0 || sign_lo == sign_hi {
            continue;
        }
        let root = bisect_refine(coeffs, lo, hi, sign_lo);
        roots.push(RootCluster {
            position: root,
            multiplicity: 1,
        });
    }

    roots.sort_by(|a, b| a.position.total_cmp(&b.position));
    for pair in roots.windows(2) {
        if pair[1].position - pair[0].position < 2.0 * tol {
            return Err(RootError::IllConditioned {
                near: pair[0].position,
            });
        }
    }
    Ok(roots)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn bisect_refine(coeffs: &[f64], mut lo: f64, mut hi: f64, sign_lo: f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = eval_poly(coeffs, mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    let deriv = differentiate(coeffs);
    for _ in 0..3 {
        let dv = eval_poly(&deriv, u);
        if dv != 0.0 {
            let step = eval_poly(coeffs, u) / dv;
            let next = u - step;
            if next > lo && next < hi {
                u = next;
            }
        }
    }
    u
}
