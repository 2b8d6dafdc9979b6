/// Maps an index into `0..n` by mirroring about the edge samples without
/// repeating them (`dcb|abcd|cba`).
#[inline]
pub(crate) fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

#[cfg(test)]
mod tests {
    use super::reflect101;

    #[test]
    fn mirrors_without_repeating_edges() {
        let got: Vec<usize> = (-4..9).map(|i| reflect101(i, 5)).collect();
        assert_eq!(got, vec![4, 3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1, 0]);
        assert_eq!(reflect101(-3, 1), 0);
        assert_eq!(reflect101(2, 2), 0);
        assert_eq!(reflect101(-1, 2), 1);
    }
}
