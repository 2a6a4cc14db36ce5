use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::{MatchingMatrix, State};
use crate::error::{Error, Result};

/// Maps a nonnegative length m·n vector to an integer matching: reshape
/// row-major, normalize each row, scale row i by x_i, round half-up, then
/// take units back from the cells rounded up the most until Σ_j q_ij ≤ x_i.
/// An all-zero row matches nothing.
pub fn transform_action(probs: &[f64], x: &State, n: usize) -> Result<MatchingMatrix> {
    let m = x.len();
    if n == 0 || probs.len() != m * n {
        return Err(Error::Shape(format!("action vector of length {} for a {m}x{n} matching", probs.len())));
    }
    if let Some(&bad) = probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidAction(bad));
    }
    let mut cells = Vec::with_capacity(m * n);
    for (row, &xi) in probs.chunks_exact(n).zip(x.as_slice()) {
        let total: f64 = row.iter().sum();
        if total == 0.0 || xi == 0 {
            cells.extend(std::iter::repeat_n(0, n));
            continue;
        }
        let scaled: Vec<f64> = row.iter().map(|p| p * f64::from(xi) / total).collect();
        let mut q: Vec<u32> = scaled.iter().map(|s| (s + 0.5).floor() as u32).collect();
        let mut excess = q.iter().sum::<u32>().saturating_sub(xi);
        while excess > 0 {
            // largest q - scaled among positive cells, first index on ties
            let (j, _) = q
                .iter()
                .zip(&scaled)
                .enumerate()
                .filter(|(_, (qj, _))| **qj > 0)
                .map(|(j, (qj, sj))| (j, f64::from(*qj) - sj))
                .fold((usize::MAX, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
            q[j] -= 1;
            excess -= 1;
        }
        cells.extend(q);
    }
    MatchingMatrix::from_row_major(m, n, cells)
}

/// x_i / N_d componentwise; all zeros when N_d = 0.
pub fn state_features(x: &State, n_d: u32) -> Vec<f64> {
    let scale = if n_d == 0 { 0.0 } else { 1.0 / f64::from(n_d) };
    x.as_slice().iter().map(|&v| f64::from(v) * scale).collect()
}

/// ε-greedy perturbation of an actor output. One uniform draw is always
/// consumed; the explore branch adds N(0, σ²) noise per component, clips at
/// zero and renormalizes. Falls back to the raw output if every component
/// clips.
pub fn perturb_action<R: Rng + ?Sized>(raw: &[f64], epsilon: f64, sigma: f64, rng: &mut R) -> Vec<f64> {
    let explore = rng.gen::<f64>() < epsilon;
    if !explore || sigma == 0.0 {
        return raw.to_vec();
    }
    let noisy: Vec<f64> = raw
        .iter()
        .map(|p| {
            let z: f64 = rng.sample(StandardNormal);
            (p + sigma * z).max(0.0)
        })
        .collect();
    let total: f64 = noisy.iter().sum();
    if total > 0.0 {
        noisy.into_iter().map(|p| p / total).collect()
    } else {
        raw.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn x(v: &[u32]) -> State {
        State::new(v.to_vec())
    }

    #[test]
    fn worked_transformations() {
        let q = transform_action(&[0.10, 0.30, 0.25, 0.35], &x(&[12, 8]), 2).unwrap();
        assert_eq!(q, MatchingMatrix::from_rows(&[vec![3, 9], vec![3, 5]]).unwrap());
        let q = transform_action(&[0.25; 4], &x(&[12, 8]), 2).unwrap();
        assert_eq!(q, MatchingMatrix::from_rows(&[vec![6, 6], vec![4, 4]]).unwrap());
        let q = transform_action(&[0.5, 0.5, 0.0, 0.0], &x(&[12, 8]), 2).unwrap();
        assert_eq!(q, MatchingMatrix::from_rows(&[vec![6, 6], vec![0, 0]]).unwrap());
    }

    #[test]
    fn rounding_repair_takes_from_largest_round_up() {
        // 3 x 1/3 each: scaled 1.667 each rounds to 2, 2, 2 = 6 > 5
        let q = transform_action(&[1.0, 1.0, 1.0], &x(&[5]), 3).unwrap();
        assert_eq!(q.as_slice(), &[1, 2, 2]);
        assert_eq!(q.row_totals(), vec![5]);
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(matches!(transform_action(&[0.5, -0.1], &x(&[3]), 2), Err(Error::InvalidAction(_))));
        assert!(transform_action(&[f64::NAN, 1.0], &x(&[3]), 2).is_err());
        assert!(matches!(transform_action(&[0.5; 3], &x(&[3]), 2), Err(Error::Shape(_))));
    }

    #[test]
    fn features_are_normalized() {
        assert_eq!(state_features(&x(&[0, 5, 10]), 10), vec![0.0, 0.5, 1.0]);
        assert_eq!(state_features(&x(&[0]), 0), vec![0.0]);
    }

    #[test]
    fn perturbation_edge_cases() {
        let raw = [0.2, 0.3, 0.5];
        let mut r = rng::stream(4);
        assert_eq!(perturb_action(&raw, 0.0, 0.5, &mut r), raw.to_vec());
        assert_eq!(perturb_action(&raw, 1.0, 0.0, &mut r), raw.to_vec());
        for _ in 0..100 {
            let p = perturb_action(&raw, 1.0, 0.3, &mut r);
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn demand_side_always_holds(
            probs in prop::collection::vec(0.0f64..1.0, 1..13),
            xs in prop::collection::vec(0u32..60, 1..4),
        ) {
            let m = xs.len();
            let n = (probs.len() / m).max(1);
            let mut p = probs.clone();
            p.resize(m * n, 0.25);
            let q = transform_action(&p, &State::new(xs.clone()), n).unwrap();
            for (total, xi) in q.row_totals().into_iter().zip(&xs) {
                prop_assert!(total <= *xi);
            }
        }
    }
}
