//! Wick pairings of ordered time points and the bath influence functionals.
//!
//! Indices are 0-based throughout: a pairing of `m` points is a perfect
//! matching of `0..m` written as pairs `(j, k)` with `j < k`.
//!
//! Three families are supported:
//!
//! * `All`: every perfect matching, `(m−1)!!` of them;
//! * `Connected`: matchings whose arcs form a single component when two arcs
//!   are joined iff they interleave (`j₁ < j₂ < k₁ < k₂`);
//! * `Btb`: matchings that contain no sub-matching on a block of consecutive
//!   indices lying strictly inside one of the two bold sections. With `ℓ`
//!   the 1-based index of the first nonnegative point, a block
//!   `[n₁, n₂]` (1-based) is forbidden iff `n₁ < n₂ < ℓ − 1` or
//!   `ℓ < n₁ < n₂ < m`.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::bath::{pair_slot, Correlation, PhasorScratch};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pairing {
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    /// Builds a pairing from 0-based index pairs; each pair is normalized to
    /// `(min, max)` and the list sorted.
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> =
            pairs.into_iter().map(|(a, b)| if a < b { (a, b) } else { (b, a) }).collect();
        pairs.sort_unstable();
        let m = 2 * pairs.len();
        let mut seen = alloc::vec![false; m];
        for &(a, b) in &pairs {
            if a == b || b >= m || seen[a] || seen[b] {
                return Err(Error::invalid("pairing", "pairs must partition 0..m"));
            }
            seen[a] = true;
            seen[b] = true;
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn points(&self) -> usize {
        2 * self.pairs.len()
    }

    /// Partner of every index.
    fn partners(&self) -> Vec<usize> {
        let mut p = alloc::vec![0; self.points()];
        for &(a, b) in &self.pairs {
            p[a] = b;
            p[b] = a;
        }
        p
    }

    /// True if the interleaving graph of the arcs is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.pairs.len();
        if n == 0 {
            return true;
        }
        let linked = |x: (usize, usize), y: (usize, usize)| {
            (x.0 < y.0 && y.0 < x.1 && x.1 < y.1) || (y.0 < x.0 && x.0 < y.1 && y.1 < x.1)
        };
        let mut seen = alloc::vec![false; n];
        let mut stack = alloc::vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && linked(self.pairs[i], self.pairs[j]) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// True if the pairing survives the bold-thin-bold filter for split `ell`
    /// (1-based index of the first nonnegative point).
    pub fn is_btb_admissible(&self, ell: usize) -> bool {
        let m = self.points();
        let partner = self.partners();
        // scan 1-based blocks [n1, n2] closed under the pairing
        for n1 in 1..=m {
            let mut reach = n1;
            for n2 in n1..=m {
                let p = partner[n2 - 1] + 1;
                if p < n1 {
                    break;
                }
                reach = reach.max(p);
                if reach == n2 && n2 > n1 {
                    let left = n2 + 1 < ell;
                    let right = ell < n1 && n2 < m;
                    if left || right {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    All,
    Connected,
    Btb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairingFamily {
    pub kind: FamilyKind,
    /// Number of points, even.
    pub m: usize,
    /// 1-based index of the first nonnegative point; used by `Btb` only.
    pub ell: usize,
}

impl PairingFamily {
    pub fn all(m: usize) -> Self {
        Self { kind: FamilyKind::All, m, ell: 1 }
    }

    pub fn connected(m: usize) -> Self {
        Self { kind: FamilyKind::Connected, m, ell: 1 }
    }

    pub fn btb(m: usize, ell: usize) -> Self {
        Self { kind: FamilyKind::Btb, m, ell }
    }

    pub fn enumerate(&self) -> Result<Vec<Pairing>> {
        match self.kind {
            FamilyKind::All => enumerate_all(self.m),
            FamilyKind::Connected => enumerate_connected(self.m),
            FamilyKind::Btb => enumerate_btb(self.m, self.ell),
        }
    }
}

fn check_even(m: usize) -> Result<()> {
    if m % 2 == 1 {
        Err(Error::OddPointCount(m))
    } else {
        Ok(())
    }
}

/// All perfect matchings of `0..m` in lexicographic order of their sorted
/// pair lists.
pub fn enumerate_all(m: usize) -> Result<Vec<Pairing>> {
    check_even(m)?;
    let mut out = Vec::new();
    let mut used = alloc::vec![false; m];
    let mut current = Vec::with_capacity(m / 2);
    recurse(&mut used, &mut current, &mut out);
    Ok(out)
}

fn recurse(used: &mut [bool], current: &mut Vec<(usize, usize)>, out: &mut Vec<Pairing>) {
    let Some(first) = used.iter().position(|u| !u) else {
        out.push(Pairing { pairs: current.clone() });
        return;
    };
    used[first] = true;
    for k in first + 1..used.len() {
        if used[k] {
            continue;
        }
        used[k] = true;
        current.push((first, k));
        recurse(used, current, out);
        current.pop();
        used[k] = false;
    }
    used[first] = false;
}

pub fn enumerate_connected(m: usize) -> Result<Vec<Pairing>> {
    Ok(enumerate_all(m)?.into_iter().filter(Pairing::is_connected).collect())
}

pub fn enumerate_btb(m: usize, ell: usize) -> Result<Vec<Pairing>> {
    check_even(m)?;
    if ell < 1 || ell > m.max(1) {
        return Err(Error::SplitOutOfRange { ell, m });
    }
    Ok(enumerate_all(m)?.into_iter().filter(|q| q.is_btb_admissible(ell)).collect())
}

/// `Σ_{q ∈ family} Π_{(j,k) ∈ q} B(s_j, s_k)`; zero for an odd number of
/// points. The caller appends the final time to `points` when evaluating
/// memory-kernel integrands.
pub fn influence_functional(points: &[f64], family: &PairingFamily, corr: &Correlation) -> Result<C64> {
    if points.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Unsorted);
    }
    if points.len() % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    if family.m != points.len() {
        return Err(Error::invalid("family.m", "must equal the number of points"));
    }
    let pairings = family.enumerate()?;
    Ok(pairings
        .iter()
        .map(|q| q.pairs().iter().map(|&(a, b)| corr.at(points[a], points[b])).product::<C64>())
        .sum())
}

/// Flattened pairing family for the sampling hot loop: each pairing is a
/// run of `m/2` slot indices into the pair table of
/// [`Correlation::fill_pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairingTable {
    m: usize,
    len: usize,
    slots: Vec<u16>,
}

impl PairingTable {
    pub fn from_pairings(m: usize, pairings: &[Pairing]) -> Self {
        let mut slots = Vec::with_capacity(pairings.len() * m / 2);
        for q in pairings {
            for &(a, b) in q.pairs() {
                slots.push(pair_slot(a, b, m) as u16);
            }
        }
        Self { m, len: pairings.len(), slots }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sum over pairings given pair values laid out by `fill_pairs`.
    #[inline]
    pub fn evaluate(&self, pair_values: &[C64]) -> C64 {
        let half = self.m / 2;
        if half == 0 {
            return C64::new(1.0, 0.0);
        }
        let mut sum = C64::new(0.0, 0.0);
        for q in self.slots.chunks_exact(half) {
            let mut prod = pair_values[q[0] as usize];
            for &s in &q[1..] {
                prod *= pair_values[s as usize];
            }
            sum += prod;
        }
        sum
    }
}

/// Precomputed pairing tables for every point count `2..=max_points` used by
/// a solver run. Built once and shared read-only by all samples and steps.
#[derive(Debug, Clone)]
pub struct PairingCache {
    all: Vec<PairingTable>,
    connected: Vec<PairingTable>,
    /// `btb[m/2 − 1][ell − 1]`
    btb: Vec<Vec<PairingTable>>,
}

impl PairingCache {
    pub fn new(max_points: usize, kinds: &[FamilyKind]) -> Result<Self> {
        let mut cache = Self { all: Vec::new(), connected: Vec::new(), btb: Vec::new() };
        for m in (2..=max_points).step_by(2) {
            let all = enumerate_all(m)?;
            if kinds.contains(&FamilyKind::All) {
                cache.all.push(PairingTable::from_pairings(m, &all));
            }
            if kinds.contains(&FamilyKind::Connected) {
                let conn: Vec<_> = all.iter().filter(|q| q.is_connected()).cloned().collect();
                cache.connected.push(PairingTable::from_pairings(m, &conn));
            }
            if kinds.contains(&FamilyKind::Btb) {
                let per_ell = (1..=m)
                    .map(|ell| {
                        let fam: Vec<_> =
                            all.iter().filter(|q| q.is_btb_admissible(ell)).cloned().collect();
                        PairingTable::from_pairings(m, &fam)
                    })
                    .collect();
                cache.btb.push(per_ell);
            }
        }
        Ok(cache)
    }

    /// Table for `m` points (even, ≥ 2). Panics if the family was not built.
    pub fn table(&self, kind: FamilyKind, m: usize, ell: usize) -> &PairingTable {
        let idx = m / 2 - 1;
        match kind {
            FamilyKind::All => &self.all[idx],
            FamilyKind::Connected => &self.connected[idx],
            FamilyKind::Btb => &self.btb[idx][ell - 1],
        }
    }
}

/// Scratch buffers for evaluating influence functionals on one sample.
#[derive(Debug, Default, Clone)]
pub(crate) struct InfluenceScratch {
    pub(crate) phasors: PhasorScratch,
    pub(crate) pairs: Vec<C64>,
}
