use crate::error::{Error, Result};

/// Outcome of matching one record's detections against its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub record_id: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// (reference index, detection index) pairs, in time order.
    pub matched_pairs: Vec<(usize, usize)>,
    pub tolerance_ms: f64,
}

/// Tolerance window in samples, rounded to nearest.
pub fn tolerance_samples(tolerance_ms: f64, fs: f64) -> usize {
    (tolerance_ms * fs / 1000.0).round().max(0.0) as usize
}

fn check_sorted(name: &str, xs: &[usize]) -> Result<()> {
    match xs.windows(2).position(|w| w[1] <= w[0]) {
        Some(p) => Err(Error::Validation(format!(
            "{name} indices not strictly increasing at position {}",
            p + 1
        ))),
        None => Ok(()),
    }
}

/// One-to-one matching in time order. Each reference beat, earliest
/// first, takes the earliest unmatched detection within ±tolerance
/// (inclusive). With equal-width windows this yields a maximum matching,
/// so the pair count does not depend on which list is the reference.
pub fn match_beats(
    record_id: &str,
    detected: &[usize],
    reference: &[usize],
    fs: f64,
    tolerance_ms: f64,
) -> Result<MatchReport> {
    check_sorted("detected", detected)?;
    check_sorted("reference", reference)?;
    let tol = tolerance_samples(tolerance_ms, fs);
    let mut pairs = Vec::new();
    let mut j = 0;
    for &r in reference {
        while j < detected.len() && detected[j] + tol < r {
            j += 1;
        }
        if j < detected.len() && detected[j] <= r + tol {
            pairs.push((r, detected[j]));
            j += 1;
        }
    }
    let tp = pairs.len();
    Ok(MatchReport {
        record_id: record_id.to_string(),
        tp,
        fp: detected.len() - tp,
        fn_: reference.len() - tp,
        matched_pairs: pairs,
        tolerance_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tolerance_boundary() {
        let r = match_beats("a", &[395], &[360], 360.0, 100.0).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 0, 0));
        let r = match_beats("a", &[396], &[360], 360.0, 100.0).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 0, 0));
        let r = match_beats("a", &[397], &[360], 360.0, 100.0).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (0, 1, 1));
        let r = match_beats("a", &[323], &[360], 360.0, 100.0).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (0, 1, 1));
    }

    #[test]
    fn one_to_one() {
        let r = match_beats("a", &[150], &[100, 200], 360.0, 200.0).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 0, 1));
        assert_eq!(r.matched_pairs.len(), 1);
    }

    #[test]
    fn unsorted_rejected() {
        assert!(matches!(
            match_beats("a", &[5, 3], &[1], 360.0, 100.0),
            Err(Error::Validation(_))
        ));
        assert!(match_beats("a", &[1], &[4, 4], 360.0, 100.0).is_err());
    }

    #[test]
    fn empty_lists() {
        let r = match_beats("a", &[], &[1, 2], 360.0, 100.0).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (0, 0, 2));
        let r = match_beats("a", &[1, 2], &[], 360.0, 100.0).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (0, 2, 0));
    }

    fn sorted_set() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::btree_set(0usize..5000, 0..60).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn swapping_roles_swaps_fp_fn(det in sorted_set(), refs in sorted_set(), tol in 0.0f64..400.0) {
            let a = match_beats("a", &det, &refs, 360.0, tol).unwrap();
            let b = match_beats("a", &refs, &det, 360.0, tol).unwrap();
            prop_assert_eq!(a.tp, b.tp);
            prop_assert_eq!(a.fp, b.fn_);
            prop_assert_eq!(a.fn_, b.fp);
        }

        #[test]
        fn pairs_within_tolerance_and_unique(det in sorted_set(), refs in sorted_set(), tol in 0.0f64..400.0) {
            let r = match_beats("a", &det, &refs, 360.0, tol).unwrap();
            let t = tolerance_samples(tol, 360.0);
            prop_assert_eq!(r.tp, r.matched_pairs.len());
            prop_assert!(r.matched_pairs.iter().all(|&(a, b)| a.abs_diff(b) <= t));
            prop_assert!(r.matched_pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        }

        #[test]
        fn tp_monotone_in_tolerance(det in sorted_set(), refs in sorted_set(), t1 in 0.0f64..300.0, dt in 0.0f64..300.0) {
            let a = match_beats("a", &det, &refs, 360.0, t1).unwrap();
            let b = match_beats("a", &det, &refs, 360.0, t1 + dt).unwrap();
            prop_assert!(b.tp >= a.tp);
        }
    }
}
