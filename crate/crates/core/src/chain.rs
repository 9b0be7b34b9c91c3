//! Markov chains with a distinguished origin.
//!
//! Three families are supported: the nearest-neighbour walk on the integers
//! with drift (`p` to the right, `1 - p` to the left), the simple symmetric
//! walk on the d-dimensional lattice, and arbitrary finite irreducible chains
//! given by a row-stochastic matrix.
//!
//! Chains serialize to the JSON schema used by the command line:
//!
//! ```json
//! {"kind": "biased_walk_z", "p": 0.5}
//! {"kind": "simple_walk_zd", "d": 3}
//! {"kind": "finite", "rows": [[0.0, 1.0], [1.0, 0.0]], "origin": 0}
//! ```

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums of a finite transition matrix must be within this of 1.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Largest lattice dimension accepted for the simple symmetric walk.
pub const MAX_LATTICE_DIM: usize = 4;

/// A state of a chain: a lattice site or an index into a finite state space.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    Site { coords: [i64; MAX_LATTICE_DIM], dim: u8 },
    Index(usize),
}

impl State {
    /// Lattice site with the given coordinates.
    ///
    /// Panics if more than [`MAX_LATTICE_DIM`] coordinates are given.
    pub fn site(coords: &[i64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_LATTICE_DIM,
            "lattice sites have between 1 and {MAX_LATTICE_DIM} coordinates"
        );
        let mut c = [0; MAX_LATTICE_DIM];
        c[..coords.len()].copy_from_slice(coords);
        State::Site { coords: c, dim: coords.len() as u8 }
    }

    pub fn index(i: usize) -> Self {
        State::Index(i)
    }

    /// Coordinates of a lattice site, `None` for finite-chain states.
    pub fn coords(&self) -> Option<&[i64]> {
        match self {
            State::Site { coords, dim } => Some(&coords[..*dim as usize]),
            State::Index(_) => None,
        }
    }

    pub fn as_index(&self) -> Option<usize> {
        match self {
            State::Index(i) => Some(*i),
            State::Site { .. } => None,
        }
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::Site { .. } => {
                let c = self.coords().unwrap();
                if c.len() == 1 {
                    write!(f, "{}", c[0])
                } else {
                    write!(f, "{c:?}")
                }
            }
            State::Index(i) => write!(f, "#{i}"),
        }
    }
}

/// A validated finite irreducible chain.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteChain {
    rows: Vec<Vec<f64>>,
    origin: usize,
    // cumulative[i][j] = P(next <= j | current = i); from the last positive entry on, +inf
    cumulative: Vec<Vec<f64>>,
}

impl FiniteChain {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn origin(&self) -> usize {
        self.origin
    }
}

/// A Markov chain on a countable state space with origin `O`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainJson", into = "ChainJson")]
pub enum ChainSpec {
    /// Walk on the integers: `x -> x + 1` with probability `p`, `x -> x - 1` otherwise.
    BiasedWalkZ { p: f64 },
    /// Simple symmetric walk on the `d`-dimensional lattice.
    SimpleWalkZd { d: usize },
    Finite(FiniteChain),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ChainJson {
    BiasedWalkZ { p: f64 },
    SimpleWalkZd { d: usize },
    Finite { rows: Vec<Vec<f64>>, origin: usize },
}

impl TryFrom<ChainJson> for ChainSpec {
    type Error = Error;

    fn try_from(value: ChainJson) -> Result<Self> {
        match value {
            ChainJson::BiasedWalkZ { p } => make_biased_walk(p),
            ChainJson::SimpleWalkZd { d } => make_simple_walk(d),
            ChainJson::Finite { rows, origin } => make_finite(rows, origin),
        }
    }
}

impl From<ChainSpec> for ChainJson {
    fn from(value: ChainSpec) -> Self {
        match value {
            ChainSpec::BiasedWalkZ { p } => ChainJson::BiasedWalkZ { p },
            ChainSpec::SimpleWalkZd { d } => ChainJson::SimpleWalkZd { d },
            ChainSpec::Finite(fc) => ChainJson::Finite { rows: fc.rows, origin: fc.origin },
        }
    }
}

pub fn make_biased_walk(p: f64) -> Result<ChainSpec> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is not in [0, 1]")));
    }
    Ok(ChainSpec::BiasedWalkZ { p })
}

pub fn make_simple_walk(d: usize) -> Result<ChainSpec> {
    if d == 0 || d > MAX_LATTICE_DIM {
        return Err(Error::InvalidParameter(format!(
            "dimension d = {d} is not in 1..={MAX_LATTICE_DIM}"
        )));
    }
    Ok(ChainSpec::SimpleWalkZd { d })
}

/// Validates a row-stochastic matrix and wraps it as an irreducible chain.
pub fn make_finite(rows: Vec<Vec<f64>>, origin: usize) -> Result<ChainSpec> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidParameter("transition matrix has no states".into()));
    }
    if origin >= n {
        return Err(Error::OriginOutOfRange { origin, n_states: n });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare { row: i, len: row.len(), expected: n });
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::NegativeEntry { row: i, col: j, value: v });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::RowSum { row: i, sum });
        }
    }
    if let Some(bad) = first_unconnected_state(&rows) {
        return Err(Error::NotIrreducible(bad));
    }
    let cumulative = rows
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            let mut cum: Vec<f64> = row
                .iter()
                .map(|&v| {
                    acc += v;
                    acc
                })
                .collect();
            // pin the last positive entry so a uniform draw in [0, 1) always lands
            if let Some(last) = row.iter().rposition(|&v| v > 0.0) {
                for c in &mut cum[last..] {
                    *c = f64::INFINITY;
                }
            }
            cum
        })
        .collect();
    Ok(ChainSpec::Finite(FiniteChain { rows, origin, cumulative }))
}

/// Returns a state that is not mutually reachable with state 0, if any.
fn first_unconnected_state(rows: &[Vec<f64>]) -> Option<usize> {
    let n = rows.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { rows[i][j] } else { rows[j][i] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    let bwd = reach(false);
    (0..n).find(|&i| !(fwd[i] && bwd[i]))
}

impl ChainSpec {
    pub fn origin(&self) -> State {
        match self {
            ChainSpec::BiasedWalkZ { .. } => State::site(&[0]),
            ChainSpec::SimpleWalkZd { d } => State::site(&[0; MAX_LATTICE_DIM][..*d]),
            ChainSpec::Finite(fc) => State::index(fc.origin),
        }
    }

    /// Monotone walks (`p` in {0, 1}) never revisit the origin.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, ChainSpec::BiasedWalkZ { p } if *p == 0.0 || *p == 1.0)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ChainSpec::Finite(_))
    }

    /// Lattice dimension, `None` for finite chains.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            ChainSpec::BiasedWalkZ { .. } => Some(1),
            ChainSpec::SimpleWalkZd { d } => Some(*d),
            ChainSpec::Finite(_) => None,
        }
    }

    fn check_state(&self, s: &State) -> Result<()> {
        let ok = match (self, s) {
            (ChainSpec::Finite(fc), State::Index(i)) => *i < fc.n_states(),
            (ChainSpec::Finite(_), _) | (_, State::Index(_)) => false,
            (_, State::Site { dim, .. }) => Some(*dim as usize) == self.dimension(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidState(s.to_string()))
        }
    }

    /// One-step law from `s`, restricted to positive masses and sorted by state.
    pub fn step_distribution(&self, s: &State) -> Result<Vec<(State, f64)>> {
        self.check_state(s)?;
        let mut out = match self {
            ChainSpec::BiasedWalkZ { p } => {
                let x = s.coords().unwrap()[0];
                vec![(State::site(&[x - 1]), 1.0 - p), (State::site(&[x + 1]), *p)]
            }
            ChainSpec::SimpleWalkZd { d } => {
                let c = s.coords().unwrap();
                let w = 1.0 / (2 * d) as f64;
                let mut v = Vec::with_capacity(2 * d);
                for axis in 0..*d {
                    for delta in [-1, 1] {
                        let mut n = c.to_vec();
                        n[axis] += delta;
                        v.push((State::site(&n), w));
                    }
                }
                v
            }
            ChainSpec::Finite(fc) => {
                let i = s.as_index().unwrap();
                fc.rows[i]
                    .iter()
                    .enumerate()
                    .map(|(j, &w)| (State::index(j), w))
                    .collect()
            }
        };
        out.retain(|(_, w)| *w > 0.0);
        out.sort_by_key(|a| a.0);
        Ok(out)
    }

    /// Draws the next state from `s`.
    pub fn step_sample<R: Rng + ?Sized>(&self, s: &State, rng: &mut R) -> Result<State> {
        self.check_state(s)?;
        Ok(self.step_from_uniform(s, rng.random::<f64>()))
    }

    /// Maps one uniform draw in `[0, 1)` to the next state. `s` must be valid.
    pub(crate) fn step_from_uniform(&self, s: &State, u: f64) -> State {
        match (self, s) {
            (ChainSpec::BiasedWalkZ { p }, State::Site { coords, dim }) => {
                let mut c = *coords;
                c[0] += if u < *p { 1 } else { -1 };
                State::Site { coords: c, dim: *dim }
            }
            (ChainSpec::SimpleWalkZd { d }, State::Site { coords, dim }) => {
                let k = ((u * (2 * d) as f64) as usize).min(2 * d - 1);
                let mut c = *coords;
                c[k / 2] += if k.is_multiple_of(2) { -1 } else { 1 };
                State::Site { coords: c, dim: *dim }
            }
            (ChainSpec::Finite(fc), State::Index(i)) => {
                let cum = &fc.cumulative[*i];
                State::Index(cum.partition_point(|&c| c <= u))
            }
            _ => unreachable!("state kind does not match chain"),
        }
    }

    /// Closed-form return probability where one is known.
    ///
    /// `1 - |1 - 2p|` for the walk on the integers, 1 for recurrent lattices
    /// (`d <= 2`) and finite irreducible chains, `None` for `d >= 3`.
    pub fn exact_return_beta(&self) -> Option<f64> {
        match self {
            ChainSpec::BiasedWalkZ { p } => Some(1.0 - (1.0 - 2.0 * p).abs()),
            ChainSpec::SimpleWalkZd { d } if *d <= 2 => Some(1.0),
            ChainSpec::SimpleWalkZd { .. } => None,
            ChainSpec::Finite(_) => Some(1.0),
        }
    }
}

/// Parses a chain from its JSON document.
pub fn chain_from_json(text: &str) -> Result<ChainSpec> {
    Ok(serde_json::from_str(text)?)
}
