use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{k_nearest, Key, PlanResult, PlannerConfig, PlanningProblem, Run};
use crate::error::Result;
use crate::state_space::{ElevationState, ElevationStateSpace, StateSampler};

const START: usize = 0;
const GOAL: usize = 1;

struct Roadmap {
    states: Vec<ElevationState>,
    /// Directed edges `(to, cost)`; each direction is validated separately.
    out: Vec<Vec<(usize, f64)>>,
}

impl Roadmap {
    fn add(&mut self, s: ElevationState) -> usize {
        self.states.push(s);
        self.out.push(Vec::new());
        self.states.len() - 1
    }

    fn link(&mut self, run: &Run, a: usize, b: usize) {
        if let Some((_, c)) = run.connect(&self.states[a], &self.states[b]) {
            self.out[a].push((b, c));
        }
        if let Some((_, c)) = run.connect(&self.states[b], &self.states[a]) {
            self.out[b].push((a, c));
        }
    }

    /// Costs and predecessors of shortest paths from the start.
    fn dijkstra(&self) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.states.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[START] = 0.0;
        heap.push(Reverse((Key(0.0), START)));
        while let Some(Reverse((Key(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, c) in &self.out[u] {
                let nd = d + c;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = Some(u);
                    heap.push(Reverse((Key(nd), v)));
                }
            }
        }
        (dist, prev)
    }

    fn walk(&self, prev: &[Option<usize>], mut node: usize) -> Vec<ElevationState> {
        let mut out = vec![self.states[node]];
        while let Some(p) = prev[node] {
            out.push(self.states[p]);
            node = p;
        }
        out.reverse();
        out
    }
}

/// Anytime PRM*: batches of sampled vertices, each tried against its
/// `ceil(gamma ln n)` nearest vertices, with a shortest-path search from
/// start to goal after every batch.
pub fn prm_star(
    space: &ElevationStateSpace,
    problem: &PlanningProblem,
    config: &PlannerConfig,
) -> Result<PlanResult> {
    let mut run = Run::new(space, problem, config)?;
    if run.trivial() {
        run.record(0, 0.0);
        return Ok(run.finish(&[problem.start], 0.0, 0));
    }
    let mut sampler = StateSampler::new(space.volume(), &config.sampler_config(space))?;

    let mut map = Roadmap {
        states: Vec::new(),
        out: Vec::new(),
    };
    map.add(problem.start);
    map.add(problem.goal);
    map.link(&run, START, GOAL);

    let mut iterations = 0;
    let mut search = map.dijkstra();
    if search.0[GOAL].is_finite() {
        run.record(0, search.0[GOAL]);
    }
    while !(config.stop_on_exact && search.0[GOAL].is_finite()) && !run.out_of_budget(iterations) {
        iterations += 1;
        let s = sampler.sample();
        // only the bounds sampler produces invalid states
        if space.is_state_valid(&s) {
            let v = map.add(s);
            let k = config.neighbors(map.states.len());
            for u in k_nearest(space, &map.states, &s, k, Some(v)) {
                map.link(&run, u, v);
            }
        }
        if iterations % config.batch_size == 0 || run.out_of_budget(iterations) {
            search = map.dijkstra();
            if search.0[GOAL].is_finite() {
                run.record(iterations, search.0[GOAL]);
            }
        }
    }

    let (dist, prev) = &search;
    let end = if dist[GOAL].is_finite() {
        Some(GOAL)
    } else {
        (0..map.states.len())
            .filter(|&i| dist[i].is_finite())
            .map(|i| (map.states[i].gap(&problem.goal), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .filter(|&(gap, _)| gap < problem.goal_tolerance_approx)
            .map(|(_, i)| i)
    };
    Ok(match end {
        Some(e) => {
            let cost = dist[e];
            let vertices = map.walk(prev, e);
            run.finish(&vertices, cost, iterations)
        }
        None => run.failed(iterations),
    })
}
