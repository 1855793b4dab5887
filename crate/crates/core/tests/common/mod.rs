//! Layout enumeration shared by the oracle tests.

use doublon_core::*;

fn pairs(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            out.push(vec![a, b]);
        }
    }
    out
}

/// Every single-atom two-point layout, and every separate or braided
/// two-atom layout, for `n` cavities.
pub fn layouts(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = pairs(n).into_iter().map(|p| vec![p]).collect();
    for p in pairs(n) {
        for q in pairs(n) {
            let separate = p[1] < q[0];
            let braided = p[0] < q[0] && q[0] < p[1] && p[1] < q[1];
            if separate || braided {
                out.push(vec![p.clone(), q]);
            }
        }
    }
    out
}

pub fn config(n: usize, layout: &[Vec<usize>], variant: CouplingVariant, seed: usize) -> SystemConfig {
    let atoms = layout
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = (seed + 3 * i) as f64;
            AtomSpec::new(5.0 + 0.37 * s.sin(), 4.5 + 0.21 * s.cos(), 0.1 + 0.05 * i as f64, p.clone())
        })
        .collect();
    SystemConfig::new(WaveguideParams::new(n, 1.0, 10.0 - 0.5 * (seed % 3) as f64).unwrap(), atoms, variant).unwrap()
}
