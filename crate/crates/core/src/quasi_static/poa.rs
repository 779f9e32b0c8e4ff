//! Polyblock outer approximation over the power ratios, with the thresholds
//! solved per receiver in closed form.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use log::warn;

use super::{single_receiver_gamma, single_receiver_rate, QsMethod, QsSolveResult, SolveFlags, TracePoint};
use crate::covertness::{eta, solve_chi_star};
use crate::error::{domain, Result};
use crate::numerics::bisect;
use crate::scenario::QuasiStaticParams;

const VERTEX_CAP: usize = 100_000;
const PROJECTION_TOL: f64 = 1e-10;
/// Coordinates below this fraction of the box edge are set to zero.
const NEGLIGIBLE: f64 = 1e-9;

/// Orders vertices by descending bound, then ascending creation index.
#[derive(Debug, Clone, Copy)]
struct Rank {
    value: f64,
    id: u64,
}

impl PartialEq for Rank {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Rank {}
impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Rank {
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then(self.id.cmp(&other.id))
    }
}

#[derive(Debug, Clone)]
struct Vertex {
    point: Vec<f64>,
    gains: Vec<f64>,
}

/// Outer approximation of the feasible power ratios: the union of boxes `[0, v]`.
#[derive(Debug, Clone)]
pub struct Polyblock {
    vertices: BTreeMap<Rank, Vertex>,
    next_id: u64,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub iteration: usize,
}

impl Polyblock {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Vertices in bound order.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        self.vertices.values().map(|v| v.point.clone()).collect()
    }

    fn push(&mut self, point: Vec<f64>, gains: Vec<f64>) {
        let value = gains.iter().sum();
        let id = self.next_id;
        self.next_id += 1;
        self.vertices.insert(Rank { value, id }, Vertex { point, gains });
    }

    fn pop_best(&mut self) -> Option<(f64, Vertex)> {
        self.vertices.pop_first().map(|(rank, v)| (rank.value, v))
    }

    /// Whether some vertex covers `point`. Only vertices with a bound at least as
    /// large can, since the objective is increasing.
    fn dominated(&self, point: &[f64], value: f64) -> bool {
        self.vertices
            .iter()
            .take_while(|(rank, _)| rank.value >= value - 1e-12)
            .take(256)
            .any(|(_, v)| v.point.iter().zip(point).all(|(w, x)| w >= x))
    }

    fn prune_below(&mut self, threshold: f64) {
        while let Some(entry) = self.vertices.last_entry() {
            if entry.key().value > threshold {
                break;
            }
            entry.remove();
        }
    }
}

fn budget_used(point: &[f64], scale: f64) -> f64 {
    point.iter().map(|&c| eta((scale * c).min(1.0 - 1e-16)).unwrap_or(f64::INFINITY)).sum()
}

/// Largest `s ∈ [0, 1]` with `Σ η(s·v_k) ≤ ε`, from the feasible side.
fn projection_scale(point: &[f64], epsilon: f64) -> Result<f64> {
    if budget_used(point, 1.0) <= epsilon {
        return Ok(1.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let _ = bisect(
        |s| {
            let g = budget_used(point, s) - epsilon;
            if g <= 0.0 {
                lo = f64::max(lo, s);
            } else {
                hi = f64::min(hi, s);
            }
            g
        },
        0.0,
        1.0,
        PROJECTION_TOL,
        200,
    )?;
    debug_assert!(lo <= hi);
    Ok(lo)
}

/// Global maximizer of the effective sum rate to within `delta`.
pub fn poa_solve(params: &QuasiStaticParams, delta: f64, max_iter: usize) -> Result<QsSolveResult> {
    if !(delta > 0.0) {
        return Err(domain("poa_solve", delta, "delta > 0"));
    }
    let k_count = params.len();
    let gain = |k: usize, x: f64| single_receiver_rate(params.a[k], params.b[k], x).map(|r| r.0);
    let top = solve_chi_star(params.epsilon)?;
    let mut block = Polyblock {
        vertices: BTreeMap::new(),
        next_id: 0,
        best_point: vec![0.0; k_count],
        best_value: 0.0,
        iteration: 0,
    };
    let root_gains = (0..k_count).map(|k| gain(k, top)).collect::<Result<Vec<_>>>()?;
    block.push(vec![top; k_count], root_gains);

    let mut trace = Vec::new();
    let mut flags = SolveFlags::default();
    loop {
        let Some((bound, vertex)) = block.pop_best() else {
            // Every remaining vertex was pruned: the incumbent is within delta.
            trace.push(TracePoint {
                iteration: block.iteration,
                bound: block.best_value,
                best_feasible: block.best_value,
            });
            break;
        };
        trace.push(TracePoint { iteration: block.iteration, bound, best_feasible: block.best_value });
        if bound - block.best_value <= delta {
            break;
        }
        if block.iteration >= max_iter {
            flags.max_iter_reached = true;
            warn!("polyblock search stopped at {max_iter} iterations with gap {}", bound - block.best_value);
            break;
        }
        block.iteration += 1;

        let scale = projection_scale(&vertex.point, params.epsilon)?;
        let feasible: Vec<f64> = vertex.point.iter().map(|&c| scale * c).collect();
        let feasible_gains = (0..k_count).map(|k| gain(k, feasible[k])).collect::<Result<Vec<_>>>()?;
        let feasible_value: f64 = feasible_gains.iter().sum();
        if feasible_value > block.best_value {
            block.best_value = feasible_value;
            block.best_point = feasible.clone();
        }

        for i in 0..k_count {
            if feasible[i] >= vertex.point[i] {
                continue;
            }
            let mut point = vertex.point.clone();
            let mut gains = vertex.gains.clone();
            if feasible[i] < NEGLIGIBLE * top {
                // Shrinking a negligible coordinate further would spawn an endless chain
                // of copies with the same bound; drop the coordinate instead.
                point[i] = 0.0;
                gains[i] = 0.0;
            } else {
                point[i] = feasible[i];
                gains[i] = feasible_gains[i];
            }
            let value: f64 = gains.iter().sum();
            if value - block.best_value <= delta || block.dominated(&point, value) {
                continue;
            }
            block.push(point, gains);
        }

        block.prune_below(block.best_value + delta);
        while block.vertices.len() > VERTEX_CAP {
            flags.vertices_evicted = true;
            block.vertices.pop_last();
        }
    }

    let gamma = (0..k_count)
        .map(|k| single_receiver_gamma(params.a[k], params.b[k], block.best_point[k]))
        .collect::<Result<Vec<_>>>()?;
    QsSolveResult::assemble(params, block.best_point, gamma, QsMethod::Poa, trace, flags)
}
