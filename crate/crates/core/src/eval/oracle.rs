//! Brute-force reference for the match metrics. Deliberately naive: plain
//! slices, nested loops, no sets. Tests compare the real metrics against it.

/// Returns `(recall, precision)` as `(hits, total)` fractions, or `None`
/// for a side whose denominator is zero.
pub type Fraction = Option<(usize, usize)>;

fn dedup(pairs: &[(u8, u8)]) -> Vec<(u8, u8)> {
    let mut out: Vec<(u8, u8)> = Vec::new();
    for &p in pairs {
        let mut seen = false;
        for &q in &out {
            if q == p {
                seen = true;
            }
        }
        if !seen {
            out.push(p);
        }
    }
    out
}

fn count_covered(from: &[(u8, u8)], against: &[(u8, u8)], same: impl Fn((u8, u8), (u8, u8)) -> bool) -> usize {
    let mut hits = 0;
    for &a in from {
        let mut found = false;
        for &b in against {
            if same(a, b) {
                found = true;
            }
        }
        if found {
            hits += 1;
        }
    }
    hits
}

fn fraction(hits: usize, total: usize) -> Fraction {
    if total == 0 {
        None
    } else {
        Some((hits, total))
    }
}

pub fn ordered(g: &[(u8, u8)], o: &[(u8, u8)]) -> (Fraction, Fraction) {
    let (g, o) = (dedup(g), dedup(o));
    let same = |a: (u8, u8), b: (u8, u8)| a.0 == b.0 && a.1 == b.1;
    (fraction(count_covered(&o, &g, same), o.len()), fraction(count_covered(&g, &o, same), g.len()))
}

pub fn unordered(g: &[(u8, u8)], o: &[(u8, u8)]) -> (Fraction, Fraction) {
    let (g, o) = (dedup(g), dedup(o));
    let same = |a: (u8, u8), b: (u8, u8)| (a.0 == b.0 && a.1 == b.1) || (a.0 == b.1 && a.1 == b.0);
    (fraction(count_covered(&o, &g, same), o.len()), fraction(count_covered(&g, &o, same), g.len()))
}

pub fn parameter_level(g: &[(u8, u8)], o: &[(u8, u8)]) -> (Fraction, Fraction) {
    let mentions = |set: &[(u8, u8)], n: u8| {
        let mut hit = false;
        for &(a, b) in set {
            if a == n || b == n {
                hit = true;
            }
        }
        hit
    };
    let (mut in_g, mut in_o, mut both) = (0, 0, 0);
    for n in 0..=u8::MAX {
        let (a, b) = (mentions(g, n), mentions(o, n));
        if a {
            in_g += 1;
        }
        if b {
            in_o += 1;
        }
        if a && b {
            both += 1;
        }
    }
    (fraction(both, in_o), fraction(both, in_g))
}
