use serde::Serialize;

use super::scalarize::ScalarizedPdGraph;
use crate::pd::NodeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization problem over named bounded variables.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinearProgram {
    pub vars: Vec<Variable>,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> usize {
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.vars.len() - 1
    }

    pub fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Constraint {
            name,
            terms,
            sense,
            rhs,
        });
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn num_binaries(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Names of violated rows, bounds and integrality conditions at `x`.
    pub fn violations(&self, x: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (v, var) in self.vars.iter().enumerate() {
            if x[v] < var.lower - tol || x[v] > var.upper + tol {
                out.push(format!("bound {}", var.name));
            }
            if var.kind == VarKind::Binary && (x[v] - x[v].round()).abs() > tol {
                out.push(format!("integrality {}", var.name));
            }
        }
        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|&(v, c)| c * x[v]).sum();
            if !row.sense.holds(lhs, row.rhs, tol) {
                out.push(row.name.clone());
            }
        }
        out
    }
}

/// Variable `x_{e,w}` for one leg variant of a PD arc and one worker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcVar {
    pub pd_arc: usize,
    pub variant: usize,
    pub worker: usize,
    pub var: usize,
}

/// The relaxed formulation together with the variable layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilpModel {
    pub lp: LinearProgram,
    pub t_max: f64,
    pub q_max: f64,
    pub sigma: f64,
    pub arc_vars: Vec<ArcVar>,
    /// `x_{r,w}` indexed `[r][w]`.
    pub assign_vars: Vec<Vec<usize>>,
    pub a_vars: Vec<usize>,
    pub q_vars: Vec<usize>,
}

impl MilpModel {
    pub fn arc_var(&self, pd_arc: usize, variant: usize, worker: usize) -> Option<usize> {
        self.arc_vars
            .iter()
            .find(|a| a.pd_arc == pd_arc && a.variant == variant && a.worker == worker)
            .map(|a| a.var)
    }
}

/// Model arc id used in variable names: the PD arc index, times the number
/// of leg variants, plus the variant.
pub fn model_arc_id(pd_arc: usize, variant: usize, variants: usize) -> usize {
    pd_arc * variants + variant
}

/// Builds the relaxed formulation. Times are service completion times, so
/// node windows are shifted by the service durations; `sigma` is ten times
/// an upper bound on any single route's cost.
type NodeTest<'a> = &'a dyn Fn(usize, usize) -> bool;

#[allow(clippy::needless_range_loop)]
pub fn build_milp(sg: &ScalarizedPdGraph) -> MilpModel {
    let pd = &sg.pd;
    let nv = pd.nodes.len();
    let (nw, nr) = (pd.num_workers, pd.num_requests);
    let variants = sg.variants();
    let mut lp = LinearProgram::default();

    let windows: Vec<(f64, f64)> = (0..nv).map(|v| sg.window(v)).collect();
    let shift = sg
        .workers
        .iter()
        .map(|w| w.end_time - w.start_time)
        .fold(0.0, f64::max);
    let lo = windows
        .iter()
        .map(|w| w.0)
        .filter(|x| x.is_finite())
        .fold(f64::INFINITY, f64::min);
    let hi = windows
        .iter()
        .map(|w| w.1)
        .filter(|x| x.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if lo.is_finite() && hi.is_finite() {
        hi - lo
    } else {
        0.0
    };
    let t_max = shift.max(span);
    let q_max = sg.workers.iter().map(|w| w.capacity).fold(0.0, f64::max);

    let mut arc_vars = Vec::new();
    let mut max_cost: f64 = 0.0;
    for (k, &(u, v)) in pd.arcs.iter().enumerate() {
        for w in 0..nw {
            let Some(arc) = sg.arc_for(u, v, w) else {
                continue;
            };
            for (variant, leg) in arc.legs.iter().enumerate() {
                max_cost = max_cost.max(sg.cost(arc, leg));
                let name = format!(
                    "x_e{}_w{}",
                    model_arc_id(k, variant, variants),
                    sg.workers[w].id
                );
                let var = lp.var(name, VarKind::Binary, 0.0, 1.0);
                arc_vars.push(ArcVar {
                    pd_arc: k,
                    variant,
                    worker: w,
                    var,
                });
            }
        }
    }
    let sigma = 10.0 * (2 * nr + 1) as f64 * max_cost.max(1.0);
    let assign_vars: Vec<Vec<usize>> = (0..nr)
        .map(|r| {
            (0..nw)
                .map(|w| {
                    let name = format!("x_r{}_w{}", sg.requests[r].id, sg.workers[w].id);
                    lp.var(name, VarKind::Binary, 0.0, 1.0)
                })
                .collect()
        })
        .collect();
    let a_vars: Vec<usize> = (0..nv)
        .map(|v| {
            lp.var(
                format!("a_{v}"),
                VarKind::Continuous,
                windows[v].0,
                windows[v].1,
            )
        })
        .collect();
    let q_vars: Vec<usize> = (0..nv)
        .map(|v| {
            let upper = match sg.nodes[v].kind {
                NodeKind::ShiftStart | NodeKind::ShiftEnd => 0.0,
                _ => q_max,
            };
            lp.var(format!("q_{v}"), VarKind::Continuous, 0.0, upper)
        })
        .collect();

    for av in &arc_vars {
        let arc = sg
            .arc_for(pd.arcs[av.pd_arc].0, pd.arcs[av.pd_arc].1, av.worker)
            .expect("variable exists");
        lp.objective
            .push((av.var, sg.cost(arc, &arc.legs[av.variant])));
    }
    for row in &assign_vars {
        for &x in row {
            lp.objective.push((x, -sigma));
        }
    }

    let arcs_where = |pred: &dyn Fn(usize, usize) -> bool, w: Option<usize>| -> Vec<usize> {
        arc_vars
            .iter()
            .filter(|a| w.is_none_or(|w| a.worker == w))
            .filter(|a| pred(pd.arcs[a.pd_arc].0, pd.arcs[a.pd_arc].1))
            .map(|a| a.var)
            .collect()
    };

    // at most one first pickup per worker
    for w in 0..nw {
        let s = pd.start(w);
        let terms: Vec<(usize, f64)> = arcs_where(&|u, _| u == s, Some(w))
            .into_iter()
            .map(|x| (x, 1.0))
            .collect();
        if !terms.is_empty() {
            lp.row(format!("c1_s{s}"), terms, Sense::Le, 1.0);
        }
    }
    // arcs at a request's nodes only for its assigned worker
    for r in 0..nr {
        let (p, d) = (pd.pickup(r), pd.delivery(r));
        let rid = sg.requests[r].id;
        for w in 0..nw {
            let wid = sg.workers[w].id;
            let cases: [(&str, NodeTest); 4] = [
                ("c2", &|u, _| u == p),
                ("c3", &|_, v| v == p),
                ("c4", &|u, _| u == d),
                ("c5", &|_, v| v == d),
            ];
            for (tag, pred) in cases {
                let mut terms: Vec<(usize, f64)> = arcs_where(pred, Some(w))
                    .into_iter()
                    .map(|x| (x, 1.0))
                    .collect();
                terms.push((assign_vars[r][w], -1.0));
                lp.row(format!("{tag}_r{rid}_w{wid}"), terms, Sense::Eq, 0.0);
            }
        }
    }
    // at most one worker per request
    for r in 0..nr {
        let terms = assign_vars[r].iter().map(|&x| (x, 1.0)).collect();
        lp.row(format!("c6_r{}", sg.requests[r].id), terms, Sense::Le, 1.0);
    }
    // pickup before delivery
    for r in 0..nr {
        let terms = vec![(a_vars[pd.pickup(r)], 1.0), (a_vars[pd.delivery(r)], -1.0)];
        lp.row(format!("c8_r{}", sg.requests[r].id), terms, Sense::Le, 0.0);
    }
    // big-M time and load propagation, as two inequalities each
    for (k, &(u, v)) in pd.arcs.iter().enumerate() {
        let q_e = sg.nodes[v].load_delta();
        let vars: Vec<&ArcVar> = arc_vars.iter().filter(|a| a.pd_arc == k).collect();
        let mut time = vec![(a_vars[v], 1.0), (a_vars[u], -1.0)];
        let mut load = vec![(q_vars[v], 1.0), (q_vars[u], -1.0)];
        for a in &vars {
            let arc = sg.arc_for(u, v, a.worker).expect("variable exists");
            time.push((a.var, -(t_max + arc.legs[a.variant].tau)));
            load.push((a.var, -(q_max + q_e)));
        }
        lp.row(format!("c9a_e{k}"), time.clone(), Sense::Le, t_max);
        lp.row(format!("c9b_e{k}"), time, Sense::Ge, -t_max);
        lp.row(format!("c10a_e{k}"), load.clone(), Sense::Le, q_max);
        lp.row(format!("c10b_e{k}"), load, Sense::Ge, -q_max);
    }
    // load at a pickup within the assigned worker's capacity
    for r in 0..nr {
        let p = pd.pickup(r);
        let mut terms = vec![(q_vars[p], 1.0)];
        for w in 0..nw {
            terms.push((assign_vars[r][w], -sg.workers[w].capacity));
        }
        lp.row(format!("c11_n{p}"), terms, Sense::Le, 0.0);
    }
    // joint selection of the two leg variants of a PD arc
    if variants > 1 {
        for k in 0..pd.arcs.len() {
            for w in 0..nw {
                let terms: Vec<(usize, f64)> = arc_vars
                    .iter()
                    .filter(|a| a.pd_arc == k && a.worker == w)
                    .map(|a| (a.var, 1.0))
                    .collect();
                if terms.len() > 1 {
                    lp.row(
                        format!("pair_e{k}_w{}", sg.workers[w].id),
                        terms,
                        Sense::Le,
                        1.0,
                    );
                }
            }
        }
    }
    MilpModel {
        lp,
        t_max,
        q_max,
        sigma,
        arc_vars,
        assign_vars,
        a_vars,
        q_vars,
    }
}
