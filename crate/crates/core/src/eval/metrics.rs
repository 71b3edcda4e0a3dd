use crate::ids::ItemId;

/// NDCG@k of `ranked` against the exact ranking. The item at zero-based
/// exact rank r has gain `k - r`; positions are discounted by log2.
/// With no exact items there is nothing to find and the score is 1.
pub fn ndcg_at(ranked: &[ItemId], exact: &[ItemId], k: usize) -> f64 {
    let gain = |item: &ItemId| {
        exact
            .iter()
            .take(k)
            .position(|e| e == item)
            .map_or(0.0, |r| (k - r) as f64)
    };
    let discount = |pos: usize| (pos as f64 + 2.0).log2();
    let ideal: f64 = exact
        .iter()
        .take(k)
        .enumerate()
        .map(|(p, e)| gain(e) / discount(p))
        .sum();
    if ideal == 0.0 {
        return 1.0;
    }
    let got: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .map(|(p, e)| gain(e) / discount(p))
        .sum();
    got / ideal
}

/// Fraction of trials whose zero-based rank is below `k`.
pub fn precision_at(ranks: &[Option<usize>], k: usize) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().filter(|r| r.is_some_and(|r| r < k)).count() as f64 / ranks.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<ItemId> {
        v.iter().map(|&i| ItemId(i)).collect()
    }

    #[test]
    fn ndcg_extremes() {
        let exact = ids(&[3, 1, 4, 5]);
        assert_eq!(ndcg_at(&exact, &exact, 20), 1.0);
        assert_eq!(ndcg_at(&[], &exact, 20), 0.0);
        assert_eq!(ndcg_at(&ids(&[9]), &exact, 20), 0.0);
        assert_eq!(ndcg_at(&[], &[], 20), 1.0);
    }

    #[test]
    fn ndcg_swap_by_hand() {
        // gains 2 and 1 at k = 2, swapped
        let got = ndcg_at(&ids(&[1, 0]), &ids(&[0, 1]), 2);
        let want = (1.0 + 2.0 / 3f64.log2()) / (2.0 + 1.0 / 3f64.log2());
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn precision_counts_zero_based_ranks() {
        let r = [Some(0), Some(4), Some(5), None];
        assert_eq!(precision_at(&r, 1), 0.25);
        assert_eq!(precision_at(&r, 5), 0.5);
        assert_eq!(precision_at(&r, 20), 0.75);
    }
}
