//! Typical path-loss exponents and shadowing deviations by environment.

/// Inclusive `[lo, hi]` range; a single value has `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    const fn single(v: f64) -> Self {
        Range { lo: v, hi: v }
    }

    const fn span(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }
}

/// Path-loss exponent β by environment.
pub const BETA_PRESETS: [(&str, Range); 4] = [
    ("free_space", Range::single(2.0)),
    ("shadowed_urban", Range::span(2.7, 5.0)),
    ("inbuilding_los", Range::span(1.6, 1.8)),
    ("obstructed", Range::span(4.0, 6.0)),
];

/// Shadowing deviation σ_dB (dB) by environment.
pub const SIGMA_DB_PRESETS: [(&str, Range); 5] = [
    ("outdoor", Range::span(4.0, 12.0)),
    ("office_hard", Range::single(7.0)),
    ("office_soft", Range::single(9.6)),
    ("factory_los", Range::span(3.0, 6.0)),
    ("factory_obstructed", Range::single(6.8)),
];

pub fn beta_preset(name: &str) -> Option<Range> {
    BETA_PRESETS.iter().find(|(n, _)| *n == name).map(|(_, r)| *r)
}

pub fn sigma_preset(name: &str) -> Option<Range> {
    SIGMA_DB_PRESETS.iter().find(|(n, _)| *n == name).map(|(_, r)| *r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_within_documented_bounds() {
        for (_, r) in BETA_PRESETS {
            assert!(r.lo >= 1.6 && r.hi <= 6.0);
        }
        for (_, r) in SIGMA_DB_PRESETS {
            assert!(r.lo >= 3.0 && r.hi <= 12.0);
        }
        assert_eq!(beta_preset("free_space"), Some(Range { lo: 2.0, hi: 2.0 }));
        assert!(sigma_preset("office_soft").unwrap().contains(9.6));
        assert!(beta_preset("moon").is_none());
    }
}
