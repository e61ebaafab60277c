use crate::error::{Error, Result};

/// Fewest aligned terms accepted as evidence of prefix equivalence.
pub const MIN_OVERLAP: usize = 3;

/// Smallest `(k0, l0)` (1-based, `k0` first) with `a[k0 + i] = b[l0 + i]`
/// for every `i` where both sequences are defined, and at least
/// [`MIN_OVERLAP`] such `i`.
pub fn prefix_equivalent<T: PartialEq>(a: &[T], b: &[T]) -> Result<(usize, usize)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("sequences must be nonempty".into()));
    }
    let mut short: Option<usize> = None;
    for k in 0..a.len() {
        for l in 0..b.len() {
            if a[k] != b[l] {
                continue;
            }
            let overlap = (a.len() - k).min(b.len() - l);
            if a[k..k + overlap] != b[l..l + overlap] {
                continue;
            }
            if overlap >= MIN_OVERLAP {
                return Ok((k + 1, l + 1));
            }
            short = Some(short.map_or(overlap, |s| s.max(overlap)));
        }
    }
    match short {
        Some(overlap) => Err(Error::InsufficientHorizon {
            overlap,
            needed: MIN_OVERLAP,
        }),
        None => Err(Error::NotEquivalent),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        assert_eq!(prefix_equivalent(&[1, 2, 3, 5], &[1, 2, 3, 5]).unwrap(), (1, 1));
    }

    #[test]
    fn constructed_alignment() {
        assert_eq!(prefix_equivalent(&[7, 9, 11, 13], &[2, 3, 9, 11, 13]).unwrap(), (2, 3));
    }

    #[test]
    fn too_short_and_unrelated() {
        assert_eq!(
            prefix_equivalent(&[1, 2, 4], &[3, 2, 4]),
            Err(Error::InsufficientHorizon { overlap: 2, needed: 3 })
        );
        assert_eq!(prefix_equivalent(&[1, 2, 4], &[5, 6, 7]), Err(Error::NotEquivalent));
    }

    #[test]
    fn different_horizons() {
        assert_eq!(prefix_equivalent(&[4, 5, 6, 7, 8, 9], &[1, 5, 6, 7]).unwrap(), (2, 2));
    }
}
