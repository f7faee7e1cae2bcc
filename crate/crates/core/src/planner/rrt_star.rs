use rand::Rng;

use super::{k_nearest, PlanResult, PlannerConfig, PlanningProblem, Run};
use crate::error::Result;
use crate::state_space::{ElevationState, ElevationStateSpace, StateSampler};

const REWIRE_EPS: f64 = 1e-12;

struct Tree {
    states: Vec<ElevationState>,
    parent: Vec<Option<usize>>,
    cost: Vec<f64>,
    children: Vec<Vec<usize>>,
}

impl Tree {
    fn new(root: ElevationState) -> Self {
        Self {
            states: vec![root],
            parent: vec![None],
            cost: vec![0.0],
            children: vec![Vec::new()],
        }
    }

    fn add(&mut self, state: ElevationState, parent: usize, cost: f64) -> usize {
        let id = self.states.len();
        self.states.push(state);
        self.parent.push(Some(parent));
        self.cost.push(cost);
        self.children.push(Vec::new());
        self.children[parent].push(id);
        id
    }

    fn reparent(&mut self, node: usize, parent: usize, cost: f64) {
        if let Some(old) = self.parent[node] {
            self.children[old].retain(|&c| c != node);
        }
        self.parent[node] = Some(parent);
        self.children[parent].push(node);
        let delta = self.cost[node] - cost;
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            self.cost[n] -= delta;
            stack.extend_from_slice(&self.children[n]);
        }
    }

    fn branch(&self, mut node: usize) -> Vec<ElevationState> {
        let mut out = vec![self.states[node]];
        while let Some(p) = self.parent[node] {
            out.push(self.states[p]);
            node = p;
        }
        out.reverse();
        out
    }
}

fn auto_range(space: &ElevationStateSpace) -> f64 {
    let v = space.volume();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for i in 0..v.len() {
        let p = v.elevated(i);
        lo = [lo[0].min(p.x), lo[1].min(p.y)];
        hi = [hi[0].max(p.x), hi[1].max(p.y)];
    }
    let diag = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    (0.2 * diag).max(v.voxel_size())
}

/// Anytime RRT* with goal biasing and k-nearest rewiring.
///
/// The tree grows from the start by steering from the nearest node toward
/// each sample. New nodes pick the cheapest parent among their
/// `ceil(gamma ln n)` nearest neighbors, which are then rewired through the
/// new node when that lowers their cost.
pub fn rrt_star(
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
    let range = config.range.unwrap_or_else(|| auto_range(space));

    let mut tree = Tree::new(problem.start);
    let mut goal_nodes: Vec<usize> = Vec::new();
    let mut iterations = 0;

    while !run.out_of_budget(iterations) {
        iterations += 1;
        let target = if sampler.rng().gen::<f64>() < config.goal_bias {
            problem.goal
        } else {
            sampler.sample()
        };
        let nearest = k_nearest(space, &tree.states, &target, 1, None)[0];
        let from = tree.states[nearest];
        let (pose, truncated) = space.steer(&from, &target, range);
        let Some(trace) = space.trace_motion(&from, pose, (!truncated).then_some(target.z)) else {
            continue;
        };
        let new = *trace.states.last().expect("traces start with their origin");
        if new == from {
            continue;
        }

        let k = config.neighbors(tree.states.len() + 1);
        let near = k_nearest(space, &tree.states, &new, k, None);
        let mut parent = nearest;
        let mut best = tree.cost[nearest] + run.edge.of(&trace);
        for &j in &near {
            if j == nearest {
                continue;
            }
            if let Some((_, c)) = run.connect(&tree.states[j], &new) {
                if tree.cost[j] + c < best {
                    best = tree.cost[j] + c;
                    parent = j;
                }
            }
        }
        let id = tree.add(new, parent, best);

        for &j in &near {
            if j == parent {
                continue;
            }
            if let Some((_, c)) = run.connect(&new, &tree.states[j]) {
                if best + c < tree.cost[j] - REWIRE_EPS {
                    tree.reparent(j, id, best + c);
                }
            }
        }

        if run.is_goal(&new) {
            goal_nodes.push(id);
        }
        if let Some(g) = cheapest(&tree, &goal_nodes) {
            run.record(iterations, tree.cost[g]);
            if config.stop_on_exact {
                break;
            }
        }
    }

    let end = cheapest(&tree, &goal_nodes).or_else(|| {
        let closest = (0..tree.states.len())
            .min_by(|&a, &b| {
                let ga = tree.states[a].gap(&problem.goal);
                let gb = tree.states[b].gap(&problem.goal);
                ga.total_cmp(&gb).then(a.cmp(&b))
            })
            .expect("tree holds the start");
        (tree.states[closest].gap(&problem.goal) < problem.goal_tolerance_approx).then_some(closest)
    });
    Ok(match end {
        Some(g) => {
            let cost = tree.cost[g];
            run.finish(&tree.branch(g), cost, iterations)
        }
        None => run.failed(iterations),
    })
}

fn cheapest(tree: &Tree, nodes: &[usize]) -> Option<usize> {
    nodes
        .iter()
        .copied()
        .min_by(|&a, &b| tree.cost[a].total_cmp(&tree.cost[b]).then(a.cmp(&b)))
}
