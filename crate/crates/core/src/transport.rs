//! ∞-Wasserstein distance between discrete measures of equal mass.
//!
//! The optimal bottleneck is always one of the pairwise atom distances, so
//! the distance is found by binary search over the sorted distinct pairwise
//! distances. Feasibility of a threshold `t` is a max-flow problem on the
//! bipartite graph joining atoms at distance `≤ t`, with source and sink
//! capacities equal to the atom masses.

use serde::Serialize;

use crate::classifiers::{ball_max, TabulatedClassifier};
use crate::error::{domain, Error, Result};
use crate::ext::fsum;
use crate::measures::DiscreteMeasure;

/// Relative tolerance for mass balance and flow saturation.
pub const MASS_BALANCE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
    pub distance: f64,
}

/// A transport plan between the atoms of two measures, indexed by atom
/// position in the source and target measures.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Coupling {
    pub entries: Vec<CouplingEntry>,
}

impl Coupling {
    /// Largest displacement carried by positive mass.
    pub fn bottleneck(&self) -> f64 {
        self.entries.iter().filter(|e| e.mass > 0.0).map(|e| e.distance).fold(0.0, f64::max)
    }

    pub fn source_marginal(&self, atoms: usize) -> Vec<f64> {
        let mut m = vec![0.0; atoms];
        for e in &self.entries {
            m[e.source] += e.mass;
        }
        m
    }

    pub fn target_marginal(&self, atoms: usize) -> Vec<f64> {
        let mut m = vec![0.0; atoms];
        for e in &self.entries {
            m[e.target] += e.mass;
        }
        m
    }

    /// Checks that the plan couples `source` with `target`, that every entry
    /// records its true displacement, and that no mass moves farther than `eps`.
    pub fn certifies(&self, source: &DiscreteMeasure, target: &DiscreteMeasure, eps: f64) -> Result<()> {
        let (ns, nt) = (source.atoms().len(), target.atoms().len());
        for e in &self.entries {
            if e.source >= ns || e.target >= nt || !(e.mass >= 0.0) {
                return Err(Error::Precondition(format!("malformed coupling entry {e:?}")));
            }
            let d = source.norm().distance(&source.atoms()[e.source].location, &target.atoms()[e.target].location);
            if d != e.distance {
                return Err(Error::Precondition(format!("entry {e:?} records distance {}, actual {d}", e.distance)));
            }
        }
        let scale = source.mass().max(1.0);
        let close = |m: &[f64], q: &DiscreteMeasure| m.iter().zip(q.atoms()).all(|(a, b)| (a - b.mass).abs() <= MASS_BALANCE_TOL * scale);
        if !close(&self.source_marginal(ns), source) || !close(&self.target_marginal(nt), target) {
            return Err(Error::Precondition("coupling marginals do not reproduce the measures".into()));
        }
        if self.bottleneck() > eps {
            return Err(Error::Precondition(format!("coupling moves mass {} > eps = {eps}", self.bottleneck())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WinfResult {
    pub distance: f64,
    pub coupling: Coupling,
}

/// `W∞(Q, Q')` together with an optimal coupling.
pub fn winf_distance(q: &DiscreteMeasure, qp: &DiscreteMeasure) -> Result<WinfResult> {
    q.compatible(qp)?;
    let (mq, mqp) = (q.mass(), qp.mass());
    if (mq - mqp).abs() > MASS_BALANCE_TOL * mq.max(1.0) {
        return domain(format!("W-infinity needs equal masses, got {mq} and {mqp}"));
    }
    if q.is_empty() || qp.is_empty() {
        return Ok(WinfResult { distance: 0.0, coupling: Coupling::default() });
    }

    let dist: Vec<Vec<f64>> =
        q.atoms().iter().map(|a| qp.atoms().iter().map(|b| q.norm().distance(&a.location, &b.location)).collect()).collect();
    let mut thresholds: Vec<f64> = dist.iter().flatten().copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    // the largest threshold is feasible: every pair is connected
    let (mut lo, mut hi) = (0, thresholds.len() - 1);
    let mut witness = transport_at(q, qp, &dist, thresholds[hi]).expect("complete bipartite graph carries all mass");
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match transport_at(q, qp, &dist, thresholds[mid]) {
            Some(c) => {
                hi = mid;
                witness = c;
            }
            None => lo = mid + 1,
        }
    }
    Ok(WinfResult { distance: thresholds[lo], coupling: witness })
}

/// A plan moving no mass farther than `t`, if one exists.
fn transport_at(q: &DiscreteMeasure, qp: &DiscreteMeasure, dist: &[Vec<f64>], t: f64) -> Option<Coupling> {
    let (n, m) = (q.atoms().len(), qp.atoms().len());
    let (source, sink) = (n + m, n + m + 1);
    let mut net = FlowNetwork::new(n + m + 2);
    for (i, a) in q.atoms().iter().enumerate() {
        net.add_edge(source, i, a.mass);
    }
    let mut middle = Vec::new();
    for (i, row) in dist.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if d <= t {
                middle.push((i, j, net.add_edge(i, n + j, f64::INFINITY)));
            }
        }
    }
    for (j, b) in qp.atoms().iter().enumerate() {
        net.add_edge(n + j, sink, b.mass);
    }
    let total = q.mass();
    let flow = net.max_flow(source, sink);
    if flow < total - MASS_BALANCE_TOL * total.max(1.0) {
        return None;
    }
    let entries = middle
        .into_iter()
        .filter_map(|(i, j, e)| {
            let mass = net.flow_on(e);
            (mass > 0.0).then_some(CouplingEntry { source: i, target: j, mass, distance: dist[i][j] })
        })
        .collect();
    Some(Coupling { entries })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallMembership {
    pub member: bool,
    pub distance: f64,
    pub witness: Option<Coupling>,
}

/// Whether `Q'` lies in the closed ∞-Wasserstein ball of radius `eps` around `Q`.
pub fn in_ball(q: &DiscreteMeasure, qp: &DiscreteMeasure, eps: f64) -> Result<BallMembership> {
    if !(eps >= 0.0) {
        return domain(format!("eps must be non-negative, got {eps}"));
    }
    let WinfResult { distance, coupling } = winf_distance(q, qp)?;
    let member = distance <= eps;
    Ok(BallMembership { member, distance, witness: member.then_some(coupling) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupIntegralCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `∫ S_ε(g) dQ` with `∫ g dQ'` for `Q'` in the ε-ball around `Q`.
pub fn sup_integral_check(g: &TabulatedClassifier, q: &DiscreteMeasure, qp: &DiscreteMeasure, eps: f64) -> Result<SupIntegralCheck> {
    let membership = in_ball(q, qp, eps)?;
    if !membership.member {
        return Err(Error::Precondition(format!("W-infinity distance {} exceeds eps = {eps}", membership.distance)));
    }
    let values: Vec<f64> = g
        .values()
        .iter()
        .map(|v| v.finite().ok_or_else(|| Error::Domain("g must be finite on the scene".into())))
        .collect::<Result<_>>()?;
    let scene = g.scene();
    let balls = scene.balls(eps);
    let lhs = fsum(scene.locate(q)?.iter().zip(q.atoms()).map(|(&i, a)| a.mass * ball_max(&values, &balls[i])));
    let rhs = fsum(scene.locate(qp)?.iter().zip(qp.atoms()).map(|(&i, a)| a.mass * values[i]));
    Ok(SupIntegralCheck { lhs, rhs, holds: lhs >= rhs - 1e-12 })
}

/// Dinic's algorithm on real capacities. Adjacency lists keep insertion
/// order, so augmentation order (and hence the returned plan) is
/// deterministic.
struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork { adj: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: f64) -> usize {
        let e = self.to.len();
        self.adj[u].push(e);
        self.to.push(v);
        self.cap.push(cap);
        self.adj[v].push(e + 1);
        self.to.push(u);
        self.cap.push(0.0);
        e
    }

    fn flow_on(&self, e: usize) -> f64 {
        self.cap[e ^ 1]
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0; self.adj.len()];
            loop {
                let pushed = self.augment(s, t, f64::INFINITY, &level, &mut next);
                if pushed <= 0.0 {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        let mut queue = std::collections::VecDeque::from([s]);
        level[s] = 0;
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 0.0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, t: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while next[u] < self.adj[u].len() {
            let e = self.adj[u][next[u]];
            let v = self.to[e];
            if self.cap[e] > 0.0 && level[v] == level[u] + 1 {
                let pushed = self.augment(v, t, limit.min(self.cap[e]), level, next);
                if pushed > 0.0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Atom, Norm};

    fn line(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(1, Norm::L2, atoms.iter().map(|&(x, m)| Atom::new(vec![x], m))).unwrap()
    }

    #[test]
    fn diracs() {
        let r = winf_distance(&line(&[(0.0, 1.0)]), &line(&[(0.7, 1.0)])).unwrap();
        assert_eq!(r.distance, 0.7);
        assert_eq!(r.coupling.entries.len(), 1);
    }

    #[test]
    fn two_atom_matching() {
        let q = line(&[(0.0, 1.0), (1.0, 1.0)]);
        let qp = line(&[(0.2, 1.0), (0.9, 1.0)]);
        let r = winf_distance(&q, &qp).unwrap();
        assert!((r.distance - 0.2).abs() < 1e-15);
        r.coupling.certifies(&q, &qp, r.distance).unwrap();
        assert!(!in_ball(&q, &qp, 0.15).unwrap().member);
        assert!(in_ball(&q, &qp, r.distance).unwrap().member);
    }

    #[test]
    fn identical_measures() {
        let q = line(&[(0.0, 0.3), (2.0, 0.7)]);
        let r = winf_distance(&q, &q).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.coupling.entries.iter().map(|e| (e.source, e.target)).collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
        let m = in_ball(&q, &q, 0.0).unwrap();
        assert!(m.member);
        assert!(!in_ball(&q, &line(&[(0.0, 0.7), (2.0, 0.3)]), 0.0).unwrap().member);
    }

    #[test]
    fn split_masses() {
        // half of the mass at 0 must travel to 3
        let q = line(&[(0.0, 1.0)]);
        let qp = line(&[(-1.0, 0.5), (3.0, 0.5)]);
        let r = winf_distance(&q, &qp).unwrap();
        assert_eq!(r.distance, 3.0);
        r.coupling.certifies(&q, &qp, 3.0).unwrap();
    }

    #[test]
    fn mass_mismatch_is_a_domain_error() {
        let err = winf_distance(&line(&[(0.0, 1.0)]), &line(&[(0.0, 0.5)])).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
