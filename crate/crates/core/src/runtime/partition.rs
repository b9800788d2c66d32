use std::ops::Range;

use crate::error::{Error, Result};

/// Smallest halo accepted anywhere: one column per morphology pass.
pub const MIN_HALO: usize = 3;

/// A frequency slab: the columns it owns and the columns it reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slab {
    pub core: Range<usize>,
    pub extended: Range<usize>,
}

impl Slab {
    /// Core columns in the slab's own (extended) coordinates.
    pub fn core_in_extended(&self) -> Range<usize> {
        self.core.start - self.extended.start..self.core.end - self.extended.start
    }
}

/// Splits `0..width` into `n_slabs` contiguous cores, sizes differing by at
/// most one, each widened by `halo` columns on both sides and clamped to the plot.
pub fn partition(width: usize, n_slabs: usize, halo: usize) -> Result<Vec<Slab>> {
    if n_slabs == 0 {
        return Err(Error::invalid("n_slabs", "must be at least 1"));
    }
    if n_slabs > width {
        return Err(Error::invalid(
            "n_slabs",
            format!("{n_slabs} slabs do not fit {width} columns"),
        ));
    }
    if halo < MIN_HALO {
        return Err(Error::invalid(
            "halo_width",
            format!("must be at least {MIN_HALO}"),
        ));
    }
    let (base, extra) = (width / n_slabs, width % n_slabs);
    let mut start = 0;
    Ok((0..n_slabs)
        .map(|i| {
            let end = start + base + usize::from(i < extra);
            let slab = Slab {
                core: start..end,
                extended: start.saturating_sub(halo)..(end + halo).min(width),
            };
            start = end;
            slab
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_slab_is_the_whole_plot() {
        assert_eq!(
            partition(1024, 1, 6).unwrap(),
            vec![Slab {
                core: 0..1024,
                extended: 0..1024
            }]
        );
    }

    #[test]
    fn four_slabs_with_halo_four() {
        let s = partition(1024, 4, 4).unwrap();
        let cores: Vec<_> = s.iter().map(|s| s.core.len()).collect();
        let ext: Vec<_> = s.iter().map(|s| s.extended.len()).collect();
        assert_eq!(cores, vec![256; 4]);
        assert_eq!(ext, vec![260, 264, 264, 260]);
        assert_eq!(s[1].extended, 252..516);
        assert_eq!(s[1].core_in_extended(), 4..260);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(partition(8, 9, 3).is_err());
        assert!(partition(8, 0, 3).is_err());
        assert!(partition(8, 2, 2).is_err());
    }

    proptest! {
        #[test]
        fn cores_tile_the_plot(width in 1usize..3000, n in 1usize..64, halo in 3usize..20) {
            prop_assume!(n <= width);
            let slabs = partition(width, n, halo).unwrap();
            let mut next = 0;
            for s in &slabs {
                prop_assert_eq!(s.core.start, next);
                prop_assert!(!s.core.is_empty());
                prop_assert_eq!(s.extended.start, s.core.start.saturating_sub(halo));
                prop_assert_eq!(s.extended.end, (s.core.end + halo).min(width));
                next = s.core.end;
            }
            prop_assert_eq!(next, width);
            let (lo, hi) = slabs.iter().fold((usize::MAX, 0), |(lo, hi), s| (lo.min(s.core.len()), hi.max(s.core.len())));
            prop_assert!(hi - lo <= 1);
        }
    }
}
