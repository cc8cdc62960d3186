//! Polymatrix games on graphs.
//!
//! A game is an undirected interaction graph over `n` players plus, for every
//! edge `{i, j}`, the two payoff matrices `A_ij` (`|S_i| × |S_j|`) and `A_ji`
//! (`|S_j| × |S_i|`), both stored dense and row-major. Pairs without an edge
//! contribute nothing. Player `i`'s payoff vector against a profile `π` is
//! `A_i π = Σ_{j ∈ N(i)} A_ij π_j`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::numerics::{dot, entropy};
use crate::rng::{substream, Purpose};
use crate::GameError;

/// Tolerance on `Σ_k π_i(k) = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile(Vec<Vec<f64>>);

impl StrategyProfile {
    /// Validates that every component is a probability vector.
    pub fn new(strategies: Vec<Vec<f64>>) -> Result<Self, GameError> {
        for (i, p) in strategies.iter().enumerate() {
            check_simplex(i, p)?;
        }
        Ok(StrategyProfile(strategies))
    }

    /// Wraps vectors that are simplex vectors by construction (softmax output).
    pub(crate) fn from_normalized(strategies: Vec<Vec<f64>>) -> Self {
        debug_assert!(strategies
            .iter()
            .enumerate()
            .all(|(i, p)| check_simplex(i, p).is_ok()));
        StrategyProfile(strategies)
    }

    pub fn uniform(action_sizes: &[usize]) -> Self {
        StrategyProfile(
            action_sizes
                .iter()
                .map(|&m| vec![1.0 / m as f64; m])
                .collect(),
        )
    }

    /// Draws every component from the flat Dirichlet distribution.
    pub fn random<R: Rng + ?Sized>(action_sizes: &[usize], rng: &mut R) -> Self {
        let strategies = action_sizes
            .iter()
            .map(|&m| {
                let mut p: Vec<f64> = (0..m)
                    .map(|_| -(1.0 - rng.random::<f64>()).ln())
                    .collect();
                let s: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= s);
                p
            })
            .collect();
        StrategyProfile(strategies)
    }

    /// Pure profile: player `i` plays action `actions[i]`.
    pub fn pure(action_sizes: &[usize], actions: &[usize]) -> Result<Self, GameError> {
        if action_sizes.len() != actions.len() {
            return Err(GameError::ProfileShape {
                expected: action_sizes.len(),
                found: actions.len(),
            });
        }
        let mut out = Vec::with_capacity(actions.len());
        for (i, (&m, &a)) in action_sizes.iter().zip(actions).enumerate() {
            if a >= m {
                return Err(GameError::ActionOutOfRange { player: i, action: a, size: m });
            }
            let mut p = vec![0.0; m];
            p[a] = 1.0;
            out.push(p);
        }
        Ok(StrategyProfile(out))
    }

    pub fn players(&self) -> usize {
        self.0.len()
    }

    pub fn player(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn strategies(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.0
    }

    /// Componentwise `α·self + (1−α)·other`.
    pub fn mix(&self, other: &StrategyProfile, alpha: f64) -> StrategyProfile {
        StrategyProfile(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(p, q)| p.iter().zip(q).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect())
                .collect(),
        )
    }

    /// Largest absolute coordinate difference over all players.
    pub fn max_abs_diff(&self, other: &StrategyProfile) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .flat_map(|(p, q)| p.iter().zip(q).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

fn check_simplex(player: usize, p: &[f64]) -> Result<(), GameError> {
    if p.is_empty() || p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(GameError::NotSimplex { player });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(GameError::NotSimplex { player });
    }
    Ok(())
}

/// One undirected edge with both payoff matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// `A_ij`, `|S_i| × |S_j|`, row-major.
    pub a_ij: Vec<f64>,
    /// `A_ji`, `|S_j| × |S_i|`, row-major.
    pub a_ji: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Incidence {
    neighbor: usize,
    edge: usize,
    /// `true` when the owning player is `edge.i`.
    forward: bool,
}

/// Summary constants the learning-rate bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameStats {
    /// Maximum vertex degree.
    pub d_max: usize,
    /// Maximum absolute payoff entry.
    pub a_inf: f64,
    /// Largest action set.
    pub s_max: usize,
}

/// Interaction graph for generated games.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    Complete,
    Edges(Vec<(usize, usize)>),
}

impl GraphSpec {
    pub fn edges(&self, n: usize) -> Vec<(usize, usize)> {
        match self {
            GraphSpec::Complete => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect(),
            GraphSpec::Edges(e) => e.clone(),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Complete => f.write_str("complete"),
            GraphSpec::Edges(e) => {
                let parts: Vec<String> = e.iter().map(|(i, j)| format!("{i}-{j}")).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for GraphSpec {
    type Err = GameError;

    /// `complete`, or a comma-separated edge list such as `0-1,1-2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("complete") {
            return Ok(GraphSpec::Complete);
        }
        let bad = || GameError::InvalidGraph(s.to_string());
        let mut edges = Vec::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (a, b) = part.trim().split_once('-').ok_or_else(bad)?;
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            edges.push((a, b));
        }
        if edges.is_empty() {
            return Err(bad());
        }
        Ok(GraphSpec::Edges(edges))
    }
}

/// Verification strategy for the zero-sum property.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroSumCheck {
    /// `A_ij + A_jiᵀ = 0` entrywise on every edge (sufficient, exact).
    ExactPairwise { tol: f64 },
    /// `|Σ_i u_i(s)| ≤ tol` on uniformly drawn pure profiles.
    Sampled { samples: usize, tol: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroSumVerdict {
    pub passed: bool,
    pub max_residual: f64,
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    n: usize,
    action_sizes: Vec<usize>,
    edges: Vec<Edge>,
}

/// An `n`-player polymatrix game. Immutable once built.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GameFile", into = "GameFile")]
pub struct PolymatrixGame {
    action_sizes: Vec<usize>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Incidence>>,
}

impl PartialEq for PolymatrixGame {
    fn eq(&self, other: &Self) -> bool {
        self.action_sizes == other.action_sizes && self.edges == other.edges
    }
}

impl TryFrom<GameFile> for PolymatrixGame {
    type Error = GameError;

    fn try_from(file: GameFile) -> Result<Self, Self::Error> {
        if file.n != file.action_sizes.len() {
            return Err(GameError::ProfileShape {
                expected: file.n,
                found: file.action_sizes.len(),
            });
        }
        PolymatrixGame::new(file.action_sizes, file.edges)
    }
}

impl From<PolymatrixGame> for GameFile {
    fn from(game: PolymatrixGame) -> Self {
        GameFile {
            n: game.action_sizes.len(),
            action_sizes: game.action_sizes,
            edges: game.edges,
        }
    }
}

impl PolymatrixGame {
    pub fn new(action_sizes: Vec<usize>, edges: Vec<Edge>) -> Result<Self, GameError> {
        let n = action_sizes.len();
        if let Some(i) = action_sizes.iter().position(|&m| m == 0) {
            return Err(GameError::EmptyActionSet(i));
        }
        let mut adjacency: Vec<Vec<Incidence>> = vec![Vec::new(); n];
        for (e, edge) in edges.iter().enumerate() {
            let (i, j) = (edge.i, edge.j);
            for p in [i, j] {
                if p >= n {
                    return Err(GameError::PlayerOutOfRange { player: p, n });
                }
            }
            if i == j {
                return Err(GameError::SelfEdge(i));
            }
            if adjacency[i].iter().any(|inc| inc.neighbor == j) {
                return Err(GameError::DuplicateEdge(i, j));
            }
            let cells = action_sizes[i] * action_sizes[j];
            if edge.a_ij.len() != cells {
                return Err(GameError::MatrixShape { i, j, expected: cells, found: edge.a_ij.len() });
            }
            if edge.a_ji.len() != cells {
                return Err(GameError::MatrixShape { i: j, j: i, expected: cells, found: edge.a_ji.len() });
            }
            if edge.a_ij.iter().chain(&edge.a_ji).any(|v| !v.is_finite()) {
                return Err(GameError::NonFinitePayoff(i, j));
            }
            adjacency[i].push(Incidence { neighbor: j, edge: e, forward: true });
            adjacency[j].push(Incidence { neighbor: i, edge: e, forward: false });
        }
        Ok(PolymatrixGame { action_sizes, edges, adjacency })
    }

    /// The game with all-zero payoff matrices on `graph`.
    pub fn zero(action_sizes: Vec<usize>, graph: &GraphSpec) -> Result<Self, GameError> {
        let edges = graph
            .edges(action_sizes.len())
            .into_iter()
            .map(|(i, j)| {
                let cells = action_sizes.get(i).copied().unwrap_or(0) * action_sizes.get(j).copied().unwrap_or(0);
                Edge { i, j, a_ij: vec![0.0; cells], a_ji: vec![0.0; cells] }
            })
            .collect();
        PolymatrixGame::new(action_sizes, edges)
    }

    /// A random zero-sum game: every `A_ij` entry i.i.d. uniform on `[-1, 1]`
    /// and `A_ji = -A_ijᵀ`. Edge `e` draws from its own substream of `seed`.
    pub fn random_zero_sum(
        n: usize,
        action_size: usize,
        graph: &GraphSpec,
        seed: u64,
    ) -> Result<Self, GameError> {
        if n < 2 {
            return Err(GameError::InvalidParameter(format!("need at least 2 players, got {n}")));
        }
        if action_size == 0 {
            return Err(GameError::EmptyActionSet(0));
        }
        let m = action_size;
        let edges = graph
            .edges(n)
            .into_iter()
            .enumerate()
            .map(|(e, (i, j))| {
                let mut rng = substream(seed, Purpose::GameEdge, e as u64);
                let a_ij: Vec<f64> = (0..m * m).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let mut a_ji = vec![0.0; m * m];
                for r in 0..m {
                    for c in 0..m {
                        a_ji[c * m + r] = -a_ij[r * m + c];
                    }
                }
                Edge { i, j, a_ij, a_ji }
            })
            .collect();
        PolymatrixGame::new(vec![m; n], edges)
    }

    pub fn n(&self) -> usize {
        self.action_sizes.len()
    }

    pub fn action_sizes(&self) -> &[usize] {
        &self.action_sizes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i].iter().map(|inc| inc.neighbor)
    }

    /// `A_ij` as a row-major slice of shape `|S_i| × |S_j|`, if `{i, j}` is an edge.
    pub fn block(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.adjacency
            .get(i)?
            .iter()
            .find(|inc| inc.neighbor == j)
            .map(|inc| self.block_of(inc))
    }

    fn block_of(&self, inc: &Incidence) -> &[f64] {
        let edge = &self.edges[inc.edge];
        if inc.forward {
            &edge.a_ij
        } else {
            &edge.a_ji
        }
    }

    pub fn stats(&self) -> GameStats {
        GameStats {
            d_max: (0..self.n()).map(|i| self.degree(i)).max().unwrap_or(0),
            a_inf: self
                .edges
                .iter()
                .flat_map(|e| e.a_ij.iter().chain(&e.a_ji))
                .fold(0.0, |m: f64, v| m.max(v.abs())),
            s_max: self.action_sizes.iter().copied().max().unwrap_or(1),
        }
    }

    pub fn check_profile(&self, profile: &StrategyProfile) -> Result<(), GameError> {
        if profile.players() != self.n() {
            return Err(GameError::ProfileShape { expected: self.n(), found: profile.players() });
        }
        for (i, (p, &m)) in profile.strategies().iter().zip(&self.action_sizes).enumerate() {
            if p.len() != m {
                return Err(GameError::StrategyLength { player: i, expected: m, found: p.len() });
            }
        }
        Ok(())
    }

    fn check_player(&self, i: usize) -> Result<(), GameError> {
        if i >= self.n() {
            return Err(GameError::PlayerOutOfRange { player: i, n: self.n() });
        }
        Ok(())
    }

    /// Adds `A_i π` into `out`, where `strategy(j)` yields `π_j`.
    ///
    /// `out` must have length `|S_i|`; it is accumulated into, not cleared.
    pub fn accumulate_payoff<'a, F>(&self, i: usize, strategy: F, out: &mut [f64])
    where
        F: Fn(usize) -> &'a [f64],
    {
        let rows = self.action_sizes[i];
        debug_assert_eq!(out.len(), rows);
        for inc in &self.adjacency[i] {
            let cols = self.action_sizes[inc.neighbor];
            let block = self.block_of(inc);
            let pj = strategy(inc.neighbor);
            for (r, o) in out.iter_mut().enumerate() {
                *o += dot(&block[r * cols..(r + 1) * cols], pj);
            }
        }
    }

    /// `A_i π`: the expected payoff of each of player `i`'s actions.
    pub fn payoff_vector(&self, profile: &StrategyProfile, i: usize) -> Result<Vec<f64>, GameError> {
        self.check_player(i)?;
        self.check_profile(profile)?;
        let mut out = vec![0.0; self.action_sizes[i]];
        self.accumulate_payoff(i, |j| profile.player(j), &mut out);
        Ok(out)
    }

    /// `π_iᵀ A_i π + τ H(π_i)`.
    pub fn utility(&self, profile: &StrategyProfile, i: usize, tau: f64) -> Result<f64, GameError> {
        if !(tau >= 0.0) {
            return Err(GameError::InvalidParameter(format!("tau must be nonnegative, got {tau}")));
        }
        let q = self.payoff_vector(profile, i)?;
        let pi = profile.player(i);
        let mut u = dot(pi, &q);
        if tau > 0.0 {
            u += tau * entropy(pi);
        }
        Ok(u)
    }

    /// `Σ_i [p_iᵀ A_i q + q_iᵀ A_i p]`, zero for every zero-sum game.
    pub fn cross_sum(&self, p: &StrategyProfile, q: &StrategyProfile) -> Result<f64, GameError> {
        self.check_profile(p)?;
        self.check_profile(q)?;
        let mut total = 0.0;
        for i in 0..self.n() {
            let aq = self.payoff_vector(q, i)?;
            let ap = self.payoff_vector(p, i)?;
            total += dot(p.player(i), &aq) + dot(q.player(i), &ap);
        }
        Ok(total)
    }

    /// `Σ_i u_i(s)` for a pure profile `s`.
    pub fn pure_utility_sum(&self, actions: &[usize]) -> f64 {
        self.edges
            .iter()
            .map(|e| {
                let (si, sj) = (actions[e.i], actions[e.j]);
                let (mi, mj) = (self.action_sizes[e.i], self.action_sizes[e.j]);
                e.a_ij[si * mj + sj] + e.a_ji[sj * mi + si]
            })
            .sum()
    }

    pub fn check_zero_sum(&self, mode: ZeroSumCheck) -> ZeroSumVerdict {
        match mode {
            ZeroSumCheck::ExactPairwise { tol } => {
                let mut max_residual: f64 = 0.0;
                for e in &self.edges {
                    let (mi, mj) = (self.action_sizes[e.i], self.action_sizes[e.j]);
                    for r in 0..mi {
                        for c in 0..mj {
                            max_residual = max_residual.max((e.a_ij[r * mj + c] + e.a_ji[c * mi + r]).abs());
                        }
                    }
                }
                ZeroSumVerdict { passed: max_residual <= tol, max_residual }
            }
            ZeroSumCheck::Sampled { samples, tol, seed } => {
                let mut rng = substream(seed, Purpose::ZeroSumCheck, 0);
                let mut actions = vec![0usize; self.n()];
                let mut max_residual: f64 = 0.0;
                for _ in 0..samples.max(1) {
                    for (a, &m) in actions.iter_mut().zip(&self.action_sizes) {
                        *a = rng.random_range(0..m);
                    }
                    max_residual = max_residual.max(self.pure_utility_sum(&actions).abs());
                }
                ZeroSumVerdict { passed: max_residual <= tol, max_residual }
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("game serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, GameError> {
        Ok(serde_json::from_str(s)?)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pennies() -> PolymatrixGame {
        PolymatrixGame::new(
            vec![2, 2],
            vec![Edge {
                i: 0,
                j: 1,
                a_ij: vec![1.0, -1.0, -1.0, 1.0],
                a_ji: vec![-1.0, 1.0, 1.0, -1.0],
            }],
        )
        .unwrap()
    }

    #[test]
    fn payoff_vector_examples() {
        let zero = PolymatrixGame::zero(vec![3, 2, 4], &GraphSpec::Complete).unwrap();
        let mut rng = substream(1, Purpose::Fixture, 0);
        let p = StrategyProfile::random(zero.action_sizes(), &mut rng);
        assert_eq!(zero.payoff_vector(&p, 2).unwrap(), vec![0.0; 4]);

        let g = pennies();
        let half = StrategyProfile::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(g.payoff_vector(&half, 0).unwrap(), vec![0.0, 0.0]);
        let first = StrategyProfile::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        assert_eq!(g.payoff_vector(&first, 0).unwrap(), vec![1.0, -1.0]);
        assert!(matches!(
            g.payoff_vector(&first, 2),
            Err(GameError::PlayerOutOfRange { player: 2, n: 2 })
        ));
    }

    #[test]
    fn utility_examples() {
        let zero = PolymatrixGame::zero(vec![10, 10], &GraphSpec::Complete).unwrap();
        let u = StrategyProfile::uniform(zero.action_sizes());
        assert_eq!(zero.utility(&u, 0, 0.0).unwrap(), 0.0);
        assert!((zero.utility(&u, 0, 0.1).unwrap() - 0.230_258_509_299_404_6).abs() < 1e-12);

        let g = pennies();
        let pure = StrategyProfile::pure(&[2, 2], &[0, 0]).unwrap();
        assert_eq!(g.utility(&pure, 0, 0.0).unwrap(), 1.0);
        assert!(g.utility(&pure, 0, -1.0).is_err());
    }

    #[test]
    fn cross_sum_examples() {
        let zero = PolymatrixGame::zero(vec![2, 3], &GraphSpec::Complete).unwrap();
        let u = StrategyProfile::uniform(zero.action_sizes());
        assert_eq!(zero.cross_sum(&u, &u).unwrap(), 0.0);

        let g = PolymatrixGame::random_zero_sum(4, 3, &GraphSpec::Complete, 9).unwrap();
        let mut rng = substream(2, Purpose::Fixture, 0);
        let p = StrategyProfile::random(g.action_sizes(), &mut rng);
        let q = StrategyProfile::random(g.action_sizes(), &mut rng);
        assert!(g.cross_sum(&p, &q).unwrap().abs() < 1e-12);
        // p = q gives twice the utility sum
        let twice: f64 = (0..4).map(|i| g.utility(&p, i, 0.0).unwrap()).sum::<f64>() * 2.0;
        assert!((g.cross_sum(&p, &p).unwrap() - twice).abs() < 1e-12);

        let bad = StrategyProfile::uniform(&[2, 2, 2, 2]);
        assert!(g.cross_sum(&bad, &q).is_err());
    }

    #[test]
    fn zero_sum_checks() {
        let g = PolymatrixGame::random_zero_sum(3, 4, &GraphSpec::Complete, 0).unwrap();
        let v = g.check_zero_sum(ZeroSumCheck::ExactPairwise { tol: 0.0 });
        assert!(v.passed);
        assert_eq!(v.max_residual, 0.0);

        let eye = vec![1.0, 0.0, 0.0, 1.0];
        let bad = PolymatrixGame::new(
            vec![2, 2],
            vec![Edge { i: 0, j: 1, a_ij: eye.clone(), a_ji: eye }],
        )
        .unwrap();
        let v = bad.check_zero_sum(ZeroSumCheck::ExactPairwise { tol: 1e-12 });
        assert!(!v.passed);
        assert_eq!(v.max_residual, 2.0);
        assert_eq!(bad.pure_utility_sum(&[1, 1]), 2.0);
        let v = bad.check_zero_sum(ZeroSumCheck::Sampled { samples: 200, tol: 1e-12, seed: 3 });
        assert!(!v.passed);
        assert_eq!(v.max_residual, 2.0);

        let zero = PolymatrixGame::zero(vec![3, 3, 3], &GraphSpec::Complete).unwrap();
        let v = zero.check_zero_sum(ZeroSumCheck::Sampled { samples: 1000, tol: 0.0, seed: 0 });
        assert!(v.passed);
        assert_eq!(v.max_residual, 0.0);
    }

    #[test]
    fn random_game_shapes_and_determinism() {
        let g = PolymatrixGame::random_zero_sum(2, 1, &GraphSpec::Complete, 5).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].a_ji[0], -g.edges()[0].a_ij[0]);

        let a = PolymatrixGame::random_zero_sum(10, 10, &GraphSpec::Complete, 0).unwrap();
        let b = PolymatrixGame::random_zero_sum(10, 10, &GraphSpec::Complete, 0).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let s = a.stats();
        assert_eq!(s.d_max, 9);
        assert!(s.a_inf <= 1.0 && s.a_inf > 0.9);
        assert_eq!(s.s_max, 10);

        assert!(PolymatrixGame::random_zero_sum(1, 3, &GraphSpec::Complete, 0).is_err());
        assert!(PolymatrixGame::random_zero_sum(3, 2, &GraphSpec::Edges(vec![(0, 5)]), 0).is_err());
    }

    #[test]
    fn zero_game_stats() {
        let zero = PolymatrixGame::zero(vec![2, 5], &GraphSpec::Complete).unwrap();
        let s = zero.stats();
        assert_eq!(s.a_inf, 0.0);
        assert_eq!(s.s_max, 5);
        assert_eq!(s.d_max, 1);
    }

    #[test]
    fn construction_rejects_malformed_games() {
        let e = |i, j, a: usize, b: usize| Edge { i, j, a_ij: vec![0.0; a], a_ji: vec![0.0; b] };
        assert!(matches!(PolymatrixGame::new(vec![2, 2], vec![e(0, 0, 4, 4)]), Err(GameError::SelfEdge(0))));
        assert!(matches!(
            PolymatrixGame::new(vec![2, 2], vec![e(0, 1, 4, 4), e(1, 0, 4, 4)]),
            Err(GameError::DuplicateEdge(1, 0))
        ));
        assert!(matches!(
            PolymatrixGame::new(vec![2, 3], vec![e(0, 1, 4, 6)]),
            Err(GameError::MatrixShape { .. })
        ));
        let mut nan = e(0, 1, 4, 4);
        nan.a_ij[1] = f64::NAN;
        assert!(matches!(PolymatrixGame::new(vec![2, 2], vec![nan]), Err(GameError::NonFinitePayoff(0, 1))));
        assert!(PolymatrixGame::new(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn graph_spec_parsing() {
        assert_eq!("complete".parse::<GraphSpec>().unwrap(), GraphSpec::Complete);
        let g: GraphSpec = "0-1, 1-2".parse().unwrap();
        assert_eq!(g, GraphSpec::Edges(vec![(0, 1), (1, 2)]));
        assert_eq!(g.to_string(), "0-1,1-2");
        assert!("0_1".parse::<GraphSpec>().is_err());
        assert!("".parse::<GraphSpec>().is_err());
    }

    #[test]
    fn json_rejects_inconsistent_n() {
        let s = r#"{"n":3,"action_sizes":[1,1],"edges":[]}"#;
        assert!(PolymatrixGame::from_json(s).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(StrategyProfile::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(StrategyProfile::new(vec![vec![-0.5, 1.5]]).is_err());
        assert!(StrategyProfile::new(vec![vec![]]).is_err());
        assert!(StrategyProfile::new(vec![vec![0.25, 0.75], vec![1.0]]).is_ok());
    }
}
