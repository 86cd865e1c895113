use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::seqpair::decode;
use super::{Floorplan, LossBreakdown, LossModel, PlacerError, SequencePair};
use crate::geom::Point;

const PROBE_MOVES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    pub t0_factor: f64,
    pub cooling: f64,
    pub moves_per_temp: usize,
    /// Stop temperature as a fraction of the starting temperature.
    pub t_min_ratio: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            t0_factor: 1.0,
            cooling: 0.97,
            moves_per_temp: 200,
            t_min_ratio: 1e-4,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<(), PlacerError> {
        if !(self.t0_factor > 0.0) {
            return Err(PlacerError::BadSchedule(format!("t0_factor {} must be positive", self.t0_factor)));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(PlacerError::BadSchedule(format!("cooling {} must lie in (0, 1)", self.cooling)));
        }
        if !(self.t_min_ratio > 0.0 && self.t_min_ratio < 1.0) {
            return Err(PlacerError::BadSchedule(format!(
                "t_min_ratio {} must lie in (0, 1)",
                self.t_min_ratio
            )));
        }
        Ok(())
    }

    /// Number of temperature steps before the stop temperature is reached.
    pub fn steps(&self) -> usize {
        (self.t_min_ratio.ln() / self.cooling.ln()).ceil() as usize
    }
}

/// A floorplan whose cell clusters and IO anchors are fixed, and the loss the
/// macros are placed against.
#[derive(Debug, Clone)]
pub struct MacroPlacementProblem {
    pub floorplan: Floorplan,
    pub model: LossModel,
}

impl MacroPlacementProblem {
    pub fn new(floorplan: Floorplan, model: LossModel) -> Self {
        Self { floorplan, model }
    }

    pub fn macro_count(&self) -> usize {
        self.floorplan.macros.len()
    }

    /// Floorplan and loss produced by one sequence pair.
    pub fn evaluate(&self, sp: &SequencePair) -> Result<(Floorplan, LossBreakdown), PlacerError> {
        let mut eval = Evaluator::new(self);
        let lb = eval.loss(sp)?;
        let mut fp = self.floorplan.clone();
        fp.macros = eval.macros.clone();
        Ok((fp, lb))
    }
}

struct Evaluator<'a> {
    problem: &'a MacroPlacementProblem,
    sizes: Vec<(f64, f64)>,
    points: Vec<Option<Point>>,
    macros: Vec<super::PlacedMacro>,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a MacroPlacementProblem) -> Self {
        let fp = &problem.floorplan;
        Self {
            problem,
            sizes: fp.macros.iter().map(|m| (m.width, m.height)).collect(),
            points: fp.reference_points(),
            macros: fp.macros.clone(),
        }
    }

    fn loss(&mut self, sp: &SequencePair) -> Result<LossBreakdown, PlacerError> {
        let packed = decode(sp, &self.sizes);
        let outline = self.problem.floorplan.outline;
        let (mut w, mut h) = (0.0f64, 0.0f64);
        for (p, (mw, mh)) in packed.iter().zip(&self.sizes) {
            w = w.max(p.x + mw);
            h = h.max(p.y + mh);
        }
        let dx = 0.5 * (outline.width - w);
        let dy = 0.5 * (outline.height - h);
        for (m, p) in self.macros.iter_mut().zip(&packed) {
            m.x = p.x + dx;
            m.y = p.y + dy;
            self.points[m.cluster.0] = Some(m.pin_center());
        }
        self.problem.model.evaluate_points(&self.points, &self.macros)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaOutcome {
    pub sequence_pair: SequencePair,
    pub floorplan: Floorplan,
    pub loss: LossBreakdown,
    pub initial_loss: f64,
    pub t0: f64,
    pub proposed: usize,
    pub accepted: usize,
}

fn perturb<R: Rng + ?Sized>(sp: &mut SequencePair, rng: &mut R) {
    let n = sp.len();
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    match rng.gen_range(0..3) {
        0 => sp.pos.swap(a, b),
        1 => sp.neg.swap(a, b),
        _ => {
            let (va, vb) = (sp.pos[a], sp.pos[b]);
            sp.pos.swap(a, b);
            let ia = sp.neg.iter().position(|&v| v == va).unwrap();
            let ib = sp.neg.iter().position(|&v| v == vb).unwrap();
            sp.neg.swap(ia, ib);
        }
    }
}

/// Metropolis annealing over sequence-pair swap moves with geometric
/// cooling. Returns the best state seen, so the final loss never exceeds the
/// initial one.
pub fn run_sa(
    problem: &MacroPlacementProblem,
    initial: &SequencePair,
    schedule: &Schedule,
    seed: u64,
) -> Result<SaOutcome, PlacerError> {
    schedule.validate()?;
    initial.validate()?;
    if initial.len() != problem.macro_count() {
        return Err(PlacerError::BadPermutation(format!(
            "sequence pair covers {} macros, floorplan has {}",
            initial.len(),
            problem.macro_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eval = Evaluator::new(problem);

    let mut current = initial.clone();
    let mut current_loss = eval.loss(&current)?.total;
    let initial_loss = current_loss;
    let mut best = current.clone();
    let mut best_loss = current_loss;
    let (mut proposed, mut accepted) = (0, 0);
    let mut t0 = 0.0;

    if current.len() >= 2 && schedule.moves_per_temp > 0 {
        let mut sum = 0.0;
        for _ in 0..PROBE_MOVES {
            let mut probe = current.clone();
            perturb(&mut probe, &mut rng);
            sum += (eval.loss(&probe)?.total - current_loss).abs();
        }
        t0 = schedule.t0_factor * sum / PROBE_MOVES as f64;
        if t0 <= 0.0 {
            t0 = 1e-9;
        }
        let mut t = t0;
        for _ in 0..schedule.steps() {
            for _ in 0..schedule.moves_per_temp {
                let mut cand = current.clone();
                perturb(&mut cand, &mut rng);
                let loss = eval.loss(&cand)?.total;
                proposed += 1;
                let delta = loss - current_loss;
                if delta <= 0.0 || rng.gen::<f64>() < (-delta / t).exp() {
                    accepted += 1;
                    current = cand;
                    current_loss = loss;
                    if loss < best_loss {
                        best_loss = loss;
                        best = current.clone();
                    }
                }
            }
            t *= schedule.cooling;
        }
    }

    let (floorplan, loss) = problem.evaluate(&best)?;
    Ok(SaOutcome {
        sequence_pair: best,
        floorplan,
        loss,
        initial_loss,
        t0,
        proposed,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusterId;
    use crate::dataflow::{DataflowEdge, DataflowGraph, EdgeKind};
    use crate::geom::{Orientation, Outline};
    use crate::placer::{LossConfig, PlacedMacro};
    use std::collections::BTreeMap;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn problem() -> MacroPlacementProblem {
        let macros: Vec<PlacedMacro> = [(4.0, 3.0), (2.0, 5.0), (3.0, 3.0)]
            .iter()
            .enumerate()
            .map(|(i, &(w, h))| PlacedMacro {
                cluster: ClusterId(i),
                name: format!("m{i}"),
                x: 0.0,
                y: 0.0,
                width: w,
                height: h,
                pin_offset: Point::new(w * 0.25, h * 0.75),
                orientation: Orientation::N,
            })
            .collect();
        let fp = Floorplan {
            outline: Outline::new(20.0, 20.0),
            macros,
            cluster_positions: BTreeMap::from([(ClusterId(3), Point::new(18.0, 2.0))]),
            io_anchors: BTreeMap::new(),
        };
        let e = |kind, s: usize, d: usize, w: f64| DataflowEdge {
            kind,
            src: ClusterId(s),
            via: None,
            dst: ClusterId(d),
            bit_width: w as u64,
            weight: w,
            w1: 0.0,
        };
        let g = DataflowGraph::from_edges(vec![
            e(EdgeKind::Mc, 2, 3, 40.0),
            e(EdgeKind::MmDirect, 0, 1, 3.0),
            e(EdgeKind::MmDirect, 1, 2, 1.0),
        ]);
        let model = LossModel::new(&g, &fp, &[1.0; 3], &LossConfig::default());
        MacroPlacementProblem::new(fp, model)
    }

    #[test]
    fn zero_moves_returns_initial() {
        let p = problem();
        let sp = SequencePair { pos: vec![2, 0, 1], neg: vec![1, 2, 0] };
        let s = Schedule { moves_per_temp: 0, ..Default::default() };
        let out = run_sa(&p, &sp, &s, 9).unwrap();
        assert_eq!(out.sequence_pair, sp);
        assert_eq!(out.loss.total, out.initial_loss);
        assert_eq!(out.proposed, 0);
    }

    #[test]
    fn finds_exhaustive_minimum() {
        let p = problem();
        let mut min = f64::INFINITY;
        for pos in permutations(3) {
            for neg in permutations(3) {
                let (_, lb) = p.evaluate(&SequencePair { pos: pos.clone(), neg }).unwrap();
                min = min.min(lb.total);
            }
        }
        let out = run_sa(&p, &SequencePair::identity(3), &Schedule::default(), 5).unwrap();
        assert!(out.loss.total <= out.initial_loss);
        assert!((out.loss.total - min).abs() <= 1e-9 * min.max(1.0), "{} vs {min}", out.loss.total);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = problem();
        let s = Schedule { moves_per_temp: 20, ..Default::default() };
        let a = run_sa(&p, &SequencePair::identity(3), &s, 77).unwrap();
        let b = run_sa(&p, &SequencePair::identity(3), &s, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_schedule() {
        let p = problem();
        let s = Schedule { cooling: 1.0, ..Default::default() };
        assert!(matches!(
            run_sa(&p, &SequencePair::identity(3), &s, 0),
            Err(PlacerError::BadSchedule(_))
        ));
    }
}
