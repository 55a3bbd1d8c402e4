//! Symbolic models of Cantor × interval continua built as suspensions of a
//! Cantor-set homeomorphism.
//!
//! Points of the Cantor set are addresses: infinite words over a two-letter
//! alphabet, `{0,2}` for the middle-thirds set or `{0,1}` for the full shift.
//! The leaf of the suspension through a point is its orbit line, so a leaf is
//! dense exactly when the orbit visits every cylinder. That is checked at a
//! finite depth `k` and horizon `N`.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A finite word: the cylinder of all addresses extending it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CylinderAddress {
    word: Vec<u8>,
}

impl CylinderAddress {
    /// Fails when a symbol lies outside `alphabet`.
    pub fn new(word: Vec<u8>, alphabet: &[u8]) -> Result<Self> {
        if let Some(s) = word.iter().find(|s| !alphabet.contains(s)) {
            return Err(Error::Input(format!(
                "symbol {s} not in alphabet {alphabet:?}"
            )));
        }
        Ok(CylinderAddress { word })
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    /// All words of length `depth`, in lexicographic order.
    pub fn all(alphabet: &[u8], depth: usize) -> Vec<CylinderAddress> {
        let mut words = vec![Vec::new()];
        for _ in 0..depth {
            words = words
                .into_iter()
                .flat_map(|w| {
                    alphabet.iter().map(move |&s| {
                        let mut v = w.clone();
                        v.push(s);
                        v
                    })
                })
                .collect();
        }
        words
            .into_iter()
            .map(|word| CylinderAddress { word })
            .collect()
    }
}

impl fmt::Display for CylinderAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.word {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for CylinderAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let word = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::Input(format!("bad symbol {c:?} in address {s:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(CylinderAddress { word })
    }
}

/// What follows the explicit head of an infinite address.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tail {
    /// Nothing is known past the head; the window shrinks under shifting.
    Finite,
    /// `s s s …`
    Constant(u8),
    /// The periodic word `cycle[phase..] cycle cycle …`.
    Cycle { cycle: Vec<u8>, phase: usize },
}

/// An address given by an explicit head and a generated tail.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicPoint {
    head: VecDeque<u8>,
    tail: Tail,
}

impl SymbolicPoint {
    pub fn new(head: &[u8], tail: Tail) -> Self {
        if let Tail::Cycle { cycle, .. } = &tail {
            assert!(!cycle.is_empty(), "periodic tail needs a nonempty cycle");
        }
        SymbolicPoint {
            head: head.iter().copied().collect(),
            tail,
        }
    }

    /// The periodic point `cycle cycle …`.
    pub fn periodic(cycle: &[u8]) -> Self {
        SymbolicPoint::new(
            &[],
            Tail::Cycle {
                cycle: cycle.to_vec(),
                phase: 0,
            },
        )
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// Symbol at position `i`, if the address is known that far.
    pub fn symbol(&self, i: usize) -> Option<u8> {
        if i < self.head.len() {
            return Some(self.head[i]);
        }
        let j = i - self.head.len();
        match &self.tail {
            Tail::Finite => None,
            Tail::Constant(s) => Some(*s),
            Tail::Cycle { cycle, phase } => Some(cycle[(phase + j) % cycle.len()]),
        }
    }

    /// The first `depth` symbols.
    pub fn prefix(&self, depth: usize) -> Result<CylinderAddress> {
        let word = (0..depth)
            .map(|i| self.symbol(i))
            .collect::<Option<Vec<u8>>>()
            .ok_or_else(|| {
                Error::InsufficientDepth(format!(
                    "address known to depth {} but depth {depth} requested",
                    self.head.len()
                ))
            })?;
        Ok(CylinderAddress { word })
    }

    fn pop_front(&mut self) {
        if self.head.pop_front().is_none() {
            if let Tail::Cycle { cycle, phase } = &mut self.tail {
                *phase = (*phase + 1) % cycle.len();
            }
        }
    }

    /// Removes the first `n` symbols and prepends `word`.
    fn rewrite(&mut self, n: usize, word: &[u8]) {
        for _ in 0..n {
            self.pop_front();
        }
        for &s in word.iter().rev() {
            self.head.push_front(s);
        }
    }
}

impl fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.head {
            write!(f, "{s}")?;
        }
        write!(f, "|")?;
        match &self.tail {
            Tail::Finite => Ok(()),
            Tail::Constant(s) => write!(f, "({s})"),
            Tail::Cycle { cycle, phase } => {
                write!(f, "(")?;
                for i in 0..cycle.len() {
                    write!(f, "{}", cycle[(phase + i) % cycle.len()])?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Prefix rewriting `pattern w ↦ replacement w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub pattern: Vec<u8>,
    pub replacement: Vec<u8>,
}

impl Rule {
    pub fn new(pattern: &[u8], replacement: &[u8]) -> Self {
        Rule {
            pattern: pattern.to_vec(),
            replacement: replacement.to_vec(),
        }
    }
}

/// A Cantor-set homeomorphism given by a table of prefix rewriting rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CantorSystem {
    pub name: String,
    pub alphabet: Vec<u8>,
    pub rules: Vec<Rule>,
}

impl CantorSystem {
    /// Validates that exactly one rule matches every sufficiently long word.
    pub fn new(name: &str, alphabet: Vec<u8>, rules: Vec<Rule>) -> Result<Self> {
        if alphabet.is_empty() || rules.is_empty() {
            return Err(Error::Input(format!(
                "system {name:?} needs an alphabet and rules"
            )));
        }
        for r in &rules {
            if r.pattern.is_empty()
                || r.pattern
                    .iter()
                    .chain(&r.replacement)
                    .any(|s| !alphabet.contains(s))
            {
                return Err(Error::Input(format!(
                    "rule {r:?} of {name:?} leaves the alphabet"
                )));
            }
        }
        let system = CantorSystem {
            name: name.to_string(),
            alphabet,
            rules,
        };
        let depth = system
            .rules
            .iter()
            .map(|r| r.pattern.len())
            .max()
            .unwrap_or(1);
        for w in CylinderAddress::all(&system.alphabet, depth) {
            let matches = system
                .rules
                .iter()
                .filter(|r| w.word.starts_with(&r.pattern))
                .count();
            if matches != 1 {
                return Err(Error::Input(format!(
                    "{} rules of {name:?} match {w}; the table must be deterministic and total",
                    matches
                )));
            }
        }
        Ok(system)
    }

    /// The left shift on `{0,1}^N`.
    pub fn shift() -> Self {
        CantorSystem::new(
            "shift",
            vec![0, 1],
            vec![Rule::new(&[0], &[]), Rule::new(&[1], &[])],
        )
        .expect("shift rules are valid")
    }

    /// The order-preserving homeomorphism of the middle-thirds Cantor set
    /// carrying `C ∩ [0,1/9]` onto `C ∩ [0,1/3]`, `C ∩ [2/9,1/3]` onto
    /// `C ∩ [2/3,7/9]` and `C ∩ [2/3,1]` onto `C ∩ [8/9,1]`.
    pub fn h() -> Self {
        CantorSystem::new(
            "h",
            vec![0, 2],
            vec![
                Rule::new(&[0, 0], &[0]),
                Rule::new(&[0, 2], &[2, 0]),
                Rule::new(&[2], &[2, 2]),
            ],
        )
        .expect("h rules are valid")
    }

    /// The identity on a one-point base.
    pub fn trivial() -> Self {
        CantorSystem::new("trivial", vec![0], vec![Rule::new(&[0], &[0])])
            .expect("trivial rule is valid")
    }

    fn rule_for(&self, symbol: impl Fn(usize) -> Option<u8>) -> Result<usize> {
        'rules: for (i, r) in self.rules.iter().enumerate() {
            for (j, &s) in r.pattern.iter().enumerate() {
                match symbol(j) {
                    Some(t) if t == s => {}
                    Some(_) => continue 'rules,
                    None => {
                        return Err(Error::InsufficientDepth(format!(
                            "rule lookup in {} needs {} symbols",
                            self.name,
                            r.pattern.len()
                        )))
                    }
                }
            }
            return Ok(i);
        }
        Err(Error::InsufficientDepth(format!(
            "no rule of {} matches",
            self.name
        )))
    }

    /// Applies the rule to a finite address; the result describes the image cylinder.
    pub fn apply(&self, addr: &CylinderAddress) -> Result<CylinderAddress> {
        let i = self.rule_for(|j| addr.word.get(j).copied())?;
        let r = &self.rules[i];
        let mut word = r.replacement.clone();
        word.extend_from_slice(&addr.word[r.pattern.len()..]);
        Ok(CylinderAddress { word })
    }

    /// Applies the rule in place and returns the index of the rule used.
    pub fn step(&self, x: &mut SymbolicPoint) -> Result<usize> {
        let i = self.rule_for(|j| x.symbol(j))?;
        let r = &self.rules[i];
        x.rewrite(r.pattern.len(), &r.replacement);
        Ok(i)
    }
}

/// `00w → 0w`, `02w → 20w`, `2w → 22w`.
pub fn h_apply(addr: &CylinderAddress) -> Result<CylinderAddress> {
    CantorSystem::h().apply(addr)
}

/// Drops the first symbol; an empty window stays empty.
pub fn shift_apply(addr: &CylinderAddress) -> CylinderAddress {
    CylinderAddress {
        word: addr.word.iter().skip(1).copied().collect(),
    }
}

/// The de Bruijn sequence of order `k` over `{0, …, n-1}`: a cyclic word of
/// length `n^k` containing every length-`k` word exactly once.
pub fn de_bruijn(n: u8, k: usize) -> Vec<u8> {
    // Concatenation of Lyndon words whose length divides k.
    fn db(t: usize, p: usize, n: u8, k: usize, a: &mut Vec<u8>, out: &mut Vec<u8>) {
        if t > k {
            if k.is_multiple_of(p) {
                out.extend_from_slice(&a[1..=p]);
            }
        } else {
            a[t] = a[t - p];
            db(t + 1, p, n, k, a, out);
            for j in a[t - p] + 1..n {
                a[t] = j;
                db(t + 1, t, n, k, a, out);
            }
        }
    }
    if n == 0 {
        return Vec::new();
    }
    let mut a = vec![0u8; k + 1];
    let mut out = Vec::new();
    db(1, 1, n, k, &mut a, &mut out);
    out
}

/// The periodic address whose window of length `k` runs through every word
/// over `alphabet` once per period.
pub fn de_bruijn_seed(alphabet: &[u8], k: usize) -> SymbolicPoint {
    let cycle: Vec<u8> = de_bruijn(alphabet.len() as u8, k)
        .into_iter()
        .map(|i| alphabet[i as usize])
        .collect();
    SymbolicPoint::periodic(&cycle)
}

/// Every word of length `depth`, extended once by a constant tail of each
/// symbol: the endpoints of all depth-`depth` cylinders.
pub fn endpoint_seeds(alphabet: &[u8], depth: usize) -> Vec<SymbolicPoint> {
    CylinderAddress::all(alphabet, depth)
        .into_iter()
        .flat_map(|w| {
            alphabet
                .iter()
                .map(move |&s| SymbolicPoint::new(&w.word, Tail::Constant(s)))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// An orbit of the base point together with the depth-`k` cylinder visited at
/// each time and the rule applied in between.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafItinerary {
    pub seed: SymbolicPoint,
    pub depth: usize,
    pub cylinders: Vec<CylinderAddress>,
    pub rules: Vec<usize>,
}

impl LeafItinerary {
    /// Runs `steps` iterations from `seed`.
    pub fn record(
        system: &CantorSystem,
        seed: &SymbolicPoint,
        depth: usize,
        steps: usize,
    ) -> Result<Self> {
        let mut x = seed.clone();
        let mut cylinders = Vec::with_capacity(steps + 1);
        let mut rules = Vec::with_capacity(steps);
        cylinders.push(x.prefix(depth)?);
        for _ in 0..steps {
            rules.push(system.step(&mut x)?);
            cylinders.push(x.prefix(depth)?);
        }
        Ok(LeafItinerary {
            seed: seed.clone(),
            depth,
            cylinders,
            rules,
        })
    }

    /// Replays the log from the seed and checks every entry.
    pub fn validate(&self, system: &CantorSystem) -> bool {
        if self.cylinders.len() != self.rules.len() + 1 {
            return false;
        }
        let mut x = self.seed.clone();
        for (t, cyl) in self.cylinders.iter().enumerate() {
            if x.prefix(self.depth).ok().as_ref() != Some(cyl) {
                return false;
            }
            if let Some(&rule) = self.rules.get(t) {
                if system.step(&mut x).ok() != Some(rule) {
                    return false;
                }
            }
        }
        true
    }

    /// How often each depth-`k` cylinder was visited, including unvisited ones.
    pub fn visit_counts(&self, alphabet: &[u8]) -> BTreeMap<CylinderAddress, usize> {
        let mut counts: BTreeMap<CylinderAddress, usize> =
            CylinderAddress::all(alphabet, self.depth)
                .into_iter()
                .map(|c| (c, 0))
                .collect();
        for c in &self.cylinders {
            *counts.entry(c.clone()).or_default() += 1;
        }
        counts
    }

    pub fn distinct_cylinders(&self) -> usize {
        self.cylinders.iter().collect::<HashSet<_>>().len()
    }
}

/// Outcome of a dense-leaf search at depth `k`, horizon `N`.
#[derive(Clone, Debug, PartialEq)]
pub enum DenseLeafVerdict {
    /// `seed_index` into the seed list; `steps` is the first time by which all
    /// cylinders had been visited.
    Found {
        seed_index: usize,
        seed: SymbolicPoint,
        steps: usize,
    },
    /// No seed visited every cylinder; `best` is the largest number of
    /// distinct cylinders any single orbit reached, first by `best_seed`.
    NotFound {
        seeds: usize,
        best: usize,
        best_seed: usize,
        cylinders: usize,
    },
}

impl DenseLeafVerdict {
    pub fn is_found(&self) -> bool {
        matches!(self, DenseLeafVerdict::Found { .. })
    }
}

fn check_search_params(system: &CantorSystem, depth: usize, horizon: usize) -> Result<usize> {
    if depth == 0 {
        return Err(Error::Input("depth must be at least 1".into()));
    }
    let cylinders = (system.alphabet.len() as u64)
        .checked_pow(depth as u32)
        .filter(|&c| c <= 1 << 24)
        .ok_or_else(|| Error::Input(format!("depth {depth} gives too many cylinders")))?
        as usize;
    if horizon < cylinders {
        return Err(Error::Input(format!(
            "horizon {horizon} is shorter than the {cylinders} cylinders of depth {depth}"
        )));
    }
    Ok(cylinders)
}

/// Orbit of `seed` until every depth-`k` cylinder is seen or `horizon` steps
/// elapse; returns the step count on success, else the number of distinct
/// cylinders seen.
fn scan_orbit(
    system: &CantorSystem,
    seed: &SymbolicPoint,
    depth: usize,
    horizon: usize,
    cylinders: usize,
) -> Result<std::result::Result<usize, usize>> {
    let base = system.alphabet.len();
    let mut digit = [usize::MAX; 256];
    for (i, &s) in system.alphabet.iter().enumerate() {
        digit[s as usize] = i;
    }
    let index = |x: &SymbolicPoint| -> Result<usize> {
        (0..depth).try_fold(0usize, |acc, i| match x.symbol(i) {
            Some(s) => Ok(acc * base + digit[s as usize]),
            None => x.prefix(depth).map(|_| 0),
        })
    };
    let mut seen = vec![false; cylinders];
    let mut count = 0;
    let mut x = seed.clone();
    for t in 0..=horizon {
        let i = index(&x)?;
        if !seen[i] {
            seen[i] = true;
            count += 1;
            if count == cylinders {
                return Ok(Ok(t));
            }
        }
        if t < horizon {
            system.step(&mut x)?;
        }
    }
    Ok(Err(count))
}

/// Looks for a seed whose orbit visits every depth-`k` cylinder within
/// `horizon` steps. Seeds are scanned in parallel; the reported witness is the
/// first one in seed order.
pub fn dense_leaf_search(
    system: &CantorSystem,
    depth: usize,
    horizon: usize,
    seeds: &[SymbolicPoint],
) -> Result<DenseLeafVerdict> {
    let cylinders = check_search_params(system, depth, horizon)?;
    let outcomes = seeds
        .par_iter()
        .map(|s| scan_orbit(system, s, depth, horizon, cylinders))
        .collect::<Result<Vec<_>>>()?;
    if let Some((i, steps)) = outcomes
        .iter()
        .enumerate()
        .find_map(|(i, o)| o.ok().map(|steps| (i, steps)))
    {
        return Ok(DenseLeafVerdict::Found {
            seed_index: i,
            seed: seeds[i].clone(),
            steps,
        });
    }
    let reached: Vec<usize> = outcomes.iter().map(|o| o.err().unwrap_or(0)).collect();
    let best = reached.iter().copied().max().unwrap_or(0);
    Ok(DenseLeafVerdict::NotFound {
        seeds: seeds.len(),
        best,
        best_seed: reached.iter().position(|&r| r == best).unwrap_or(0),
        cylinders,
    })
}

/// Finite-resolution verdict on indecomposability of the suspension.
#[derive(Clone, Debug, PartialEq)]
pub enum IndecomposabilityVerdict {
    /// A leaf visits every depth-`k` cylinder within the horizon.
    ConsistentWithIndecomposable {
        depth: usize,
        horizon: usize,
        witness: DenseLeafVerdict,
    },
    /// No leaf among the seeds did. `exhaustive` records whether the seeds
    /// were all cylinder endpoints at the search depth or deeper; for a
    /// one-symbol base the suspension is a circle and the verdict is
    /// exhaustive outright.
    NoDenseLeafDetected {
        depth: usize,
        horizon: usize,
        exhaustive: bool,
        certificate: String,
    },
}

impl IndecomposabilityVerdict {
    pub fn label(&self) -> String {
        match self {
            IndecomposabilityVerdict::ConsistentWithIndecomposable { depth, .. } => {
                format!("consistent_with_indecomposable({depth})")
            }
            IndecomposabilityVerdict::NoDenseLeafDetected { depth, .. } => {
                format!("no_dense_leaf_detected({depth})")
            }
        }
    }
}

impl fmt::Display for IndecomposabilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndecomposabilityVerdict::ConsistentWithIndecomposable {
                depth,
                horizon,
                witness,
            } => {
                write!(f, "{} at depth {depth}, horizon {horizon}", self.label())?;
                if let DenseLeafVerdict::Found { seed, steps, .. } = witness {
                    write!(f, "; seed {seed} covers all cylinders after {steps} steps")?;
                }
                write!(f, " (finite-resolution evidence, not a proof)")
            }
            IndecomposabilityVerdict::NoDenseLeafDetected {
                depth,
                horizon,
                exhaustive,
                certificate,
            } => write!(
                f,
                "{} at depth {depth}, horizon {horizon}; {}: {certificate}",
                self.label(),
                if *exhaustive {
                    "exhaustive"
                } else {
                    "not exhaustive"
                }
            ),
        }
    }
}

/// Runs [`dense_leaf_search`] and labels the outcome. `seed_depth` is the
/// depth of the endpoint seeds when `seeds` came from [`endpoint_seeds`].
pub fn indecomposability_verdict(
    system: &CantorSystem,
    depth: usize,
    horizon: usize,
    seeds: &[SymbolicPoint],
    seed_depth: Option<usize>,
) -> Result<IndecomposabilityVerdict> {
    if system.alphabet.len() < 2 {
        check_search_params(system, depth, horizon)?;
        return Ok(IndecomposabilityVerdict::NoDenseLeafDetected {
            depth,
            horizon,
            exhaustive: true,
            certificate: "one-point base, the suspension is a single circle".into(),
        });
    }
    match dense_leaf_search(system, depth, horizon, seeds)? {
        found @ DenseLeafVerdict::Found { .. } => {
            Ok(IndecomposabilityVerdict::ConsistentWithIndecomposable {
                depth,
                horizon,
                witness: found,
            })
        }
        DenseLeafVerdict::NotFound {
            seeds,
            best,
            cylinders,
            ..
        } => Ok(IndecomposabilityVerdict::NoDenseLeafDetected {
            depth,
            horizon,
            exhaustive: seed_depth.is_some_and(|d| d >= depth),
            certificate: format!(
                "{seeds} seeds, at most {best} of {cylinders} cylinders visited by any orbit"
            ),
        }),
    }
}

/// Value in `[0,1]` of an address ending in a constant tail of 0s or 2s,
/// read in base 3 and scaled by `3^scale`. `scale` must cover the head.
fn ternary_value(x: &SymbolicPoint, scale: u32) -> Option<u128> {
    let digits = scale as usize;
    if x.head.len() > digits {
        return None;
    }
    let v = (0..digits).try_fold(0u128, |v, i| Some(v * 3 + x.symbol(i)? as u128))?;
    // 0.222… in base 3 is 1: a tail of 2s adds one unit in the last place.
    match x.tail {
        Tail::Constant(0) => Some(v),
        Tail::Constant(2) => Some(v + 1),
        _ => None,
    }
}

/// Checks that the system is strictly increasing on the endpoints of all
/// depth-`depth` cylinders, read as ternary numbers. Only meaningful for the
/// `{0,2}` alphabet.
pub fn order_isomorphism_check(system: &CantorSystem, depth: usize) -> Result<bool> {
    if depth > 20 {
        return Err(Error::Input(format!(
            "depth {depth} too large for exact ternary values"
        )));
    }
    let grow = system
        .rules
        .iter()
        .map(|r| r.replacement.len().saturating_sub(r.pattern.len()))
        .max()
        .unwrap_or(0);
    let scale = (depth + grow + 2) as u32;
    let mut pairs: Vec<(u128, u128)> = Vec::new();
    for seed in endpoint_seeds(&system.alphabet, depth) {
        let mut image = seed.clone();
        system.step(&mut image)?;
        match (ternary_value(&seed, scale), ternary_value(&image, scale)) {
            (Some(a), Some(b)) => pairs.push((a, b)),
            _ => {
                return Err(Error::Input(format!(
                    "{} is not a map of the ternary Cantor set",
                    system.name
                )))
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    Ok(pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1))
}

/// Checks that distinct addresses of length `depth` have distinct images.
pub fn injectivity_check(system: &CantorSystem, depth: usize) -> Result<bool> {
    let mut images = HashSet::new();
    for w in CylinderAddress::all(&system.alphabet, depth) {
        if !images.insert(system.apply(&w)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub const VISITS_CSV_HEADER: &str = "cylinder,visits";

pub fn visits_csv_rows(counts: &BTreeMap<CylinderAddress, usize>) -> Vec<String> {
    counts.iter().map(|(c, n)| format!("{c},{n}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(s: &str) -> CylinderAddress {
        s.parse().unwrap()
    }

    #[test]
    fn h_rules() {
        assert_eq!(h_apply(&addr("0000")).unwrap(), addr("000"));
        assert_eq!(h_apply(&addr("0220")).unwrap(), addr("2020"));
        assert_eq!(h_apply(&addr("2")).unwrap(), addr("22"));
        assert!(matches!(
            h_apply(&addr("0")),
            Err(Error::InsufficientDepth(_))
        ));
        assert!(matches!(
            h_apply(&addr("")),
            Err(Error::InsufficientDepth(_))
        ));
    }

    #[test]
    fn shift_drops_first_symbol() {
        assert_eq!(shift_apply(&addr("01101")), addr("1101"));
        assert_eq!(shift_apply(&addr("")), addr(""));
        let mut x = SymbolicPoint::periodic(&[0, 1]);
        let s = CantorSystem::shift();
        let start = x.prefix(4).unwrap();
        s.step(&mut x).unwrap();
        assert_ne!(x.prefix(4).unwrap(), start);
        s.step(&mut x).unwrap();
        assert_eq!(x.prefix(4).unwrap(), start);
    }

    #[test]
    fn finite_window_shrinks() {
        let mut x = SymbolicPoint::new(&[0, 1, 1, 0, 1], Tail::Finite);
        CantorSystem::shift().step(&mut x).unwrap();
        assert_eq!(x.prefix(4).unwrap(), addr("1101"));
        assert!(x.prefix(5).is_err());
    }

    #[test]
    fn de_bruijn_contains_every_word_once() {
        for k in 1..=8 {
            let seq = de_bruijn(2, k);
            assert_eq!(seq.len(), 1 << k);
            let windows: HashSet<Vec<u8>> = (0..seq.len())
                .map(|i| (0..k).map(|j| seq[(i + j) % seq.len()]).collect())
                .collect();
            assert_eq!(windows.len(), 1 << k);
        }
        assert_eq!(de_bruijn(3, 2).len(), 9);
    }

    #[test]
    fn rule_tables_are_validated() {
        let overlapping = CantorSystem::new(
            "bad",
            vec![0, 1],
            vec![
                Rule::new(&[0], &[]),
                Rule::new(&[0, 1], &[1]),
                Rule::new(&[1], &[]),
            ],
        );
        assert!(overlapping.is_err());
        let partial = CantorSystem::new("bad", vec![0, 1], vec![Rule::new(&[0], &[])]);
        assert!(partial.is_err());
    }

    #[test]
    fn itinerary_replays() {
        let h = CantorSystem::h();
        let seed = SymbolicPoint::new(&[0, 0, 2, 0], Tail::Constant(2));
        let it = LeafItinerary::record(&h, &seed, 3, 20).unwrap();
        assert!(it.validate(&h));
        let mut broken = it.clone();
        broken.cylinders[5] = addr("000");
        assert!(!broken.validate(&h));
    }

    #[test]
    fn ternary_values_of_endpoints() {
        // 02̄ = 1/3, read at scale 3^3.
        let x = SymbolicPoint::new(&[0], Tail::Constant(2));
        assert_eq!(ternary_value(&x, 3), Some(9));
        let y = SymbolicPoint::new(&[2], Tail::Constant(0));
        assert_eq!(ternary_value(&y, 3), Some(18));
    }
}
