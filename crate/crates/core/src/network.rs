//! Radial feeder model and the lossless LinDistFlow relations.
//!
//! Voltages are carried as squared per-unit magnitudes `w = |V|^2`, which
//! makes the branch recursion linear:
//!
//! ```text
//! w_child = w_parent - 2 (r P + x Q) / s_base
//! ```
//!
//! with `r`, `x` in per unit on `(v_base, s_base)` and `P`, `Q` in MW / Mvar.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpError, Problem, RowId, Sense, VarHandle};

/// The built-in Baran & Wu 33-bus feeder.
pub const IEEE33_CSV: &str = include_str!("../data/ieee33.csv");

pub const DEFAULT_V_MIN: f64 = 0.95;
pub const DEFAULT_V_MAX: f64 = 1.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("bus {0} is defined more than once")]
    DuplicateBus(usize),
    #[error("topology is not radial: {0}")]
    NonRadial(String),
    #[error("no slack bus: {0}")]
    MissingSlack(String),
    #[error("negative impedance on line {from}-{to}")]
    NegativeImpedance { from: usize, to: usize },
    #[error("negative load at bus {0}")]
    NegativeLoad(usize),
    #[error("injection data incomplete: {0}")]
    IncompleteInjections(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadClass {
    Critical,
    ModeratelyCritical,
    NonCritical,
}

impl LoadClass {
    /// Placeholder voltage exponent used only by [`voltage_dependent_demand`].
    pub fn default_exponent(self) -> f64 {
        match self {
            LoadClass::Critical => 0.0,
            LoadClass::ModeratelyCritical => 0.5,
            LoadClass::NonCritical => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LoadClass::Critical => "critical",
            LoadClass::ModeratelyCritical => "moderately-critical",
            LoadClass::NonCritical => "non-critical",
        }
    }
}

impl FromStr for LoadClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "critical" => Ok(LoadClass::Critical),
            "moderately-critical" | "moderate" => Ok(LoadClass::ModeratelyCritical),
            "non-critical" | "noncritical" => Ok(LoadClass::NonCritical),
            other => Err(format!("unknown load class `{other}`")),
        }
    }
}

impl fmt::Display for LoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub p_load_kw: f64,
    pub q_load_kvar: f64,
    pub load_class: LoadClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from_bus: usize,
    pub to_bus: usize,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub flow_limit_kva: Option<f64>,
}

/// An immutable, validated radial feeder.
///
/// Buses are addressed either by their external id or by their dense index
/// (position in [`Network::buses`]). Lines are stored oriented away from the
/// slack bus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    slack: usize,
    pub v_base_kv: f64,
    pub s_base_mva: f64,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(skip)]
    topo: Topology,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Topology {
    index_of: BTreeMap<usize, usize>,
    /// line index feeding each bus index (None for the slack)
    parent_line: Vec<Option<usize>>,
    /// (parent index, child index) per line
    ends: Vec<(usize, usize)>,
    /// bus indices in breadth-first order from the slack
    order: Vec<usize>,
}

impl Network {
    /// Builds and validates a network. `slack` is the slack bus id.
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        slack: usize,
        v_base_kv: f64,
        s_base_mva: f64,
    ) -> Result<Network, NetworkError> {
        let mut index_of = BTreeMap::new();
        for (i, b) in buses.iter().enumerate() {
            if index_of.insert(b.id, i).is_some() {
                return Err(NetworkError::DuplicateBus(b.id));
            }
            if b.p_load_kw < 0.0 || !b.p_load_kw.is_finite() {
                return Err(NetworkError::NegativeLoad(b.id));
            }
        }
        if !index_of.contains_key(&slack) {
            return Err(NetworkError::MissingSlack(format!("bus {slack} does not exist")));
        }
        for l in &lines {
            if l.r_ohm < 0.0 || l.x_ohm < 0.0 {
                return Err(NetworkError::NegativeImpedance { from: l.from_bus, to: l.to_bus });
            }
            for end in [l.from_bus, l.to_bus] {
                if !index_of.contains_key(&end) {
                    return Err(NetworkError::NonRadial(format!("line references unknown bus {end}")));
                }
            }
        }
        if !(v_base_kv > 0.0 && s_base_mva > 0.0) {
            return Err(NetworkError::Parse { line: 0, msg: "v_base and s_base must be positive".into() });
        }
        let topo = build_topology(&buses, &lines, &index_of, slack).map_err(NetworkError::NonRadial)?;
        let lines = lines
            .into_iter()
            .zip(&topo.ends)
            .map(|(mut l, &(p, c))| {
                l.from_bus = buses[p].id;
                l.to_bus = buses[c].id;
                l
            })
            .collect();
        Ok(Network {
            buses,
            lines,
            slack,
            v_base_kv,
            s_base_mva,
            v_min: DEFAULT_V_MIN,
            v_max: DEFAULT_V_MAX,
            topo,
        })
    }

    /// The built-in 33-bus feeder.
    pub fn ieee33() -> Network {
        parse_network(IEEE33_CSV).expect("embedded feeder is valid")
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn slack_id(&self) -> usize {
        self.slack
    }

    pub fn slack_index(&self) -> usize {
        self.topo.index_of[&self.slack]
    }

    pub fn index_of(&self, bus_id: usize) -> Option<usize> {
        self.topo.index_of.get(&bus_id).copied()
    }

    /// Line feeding the bus at `index`, or `None` for the slack.
    pub fn parent_line(&self, index: usize) -> Option<usize> {
        self.topo.parent_line[index]
    }

    /// (parent index, child index) of line `l`.
    pub fn line_ends(&self, l: usize) -> (usize, usize) {
        self.topo.ends[l]
    }

    /// Bus indices ordered from the slack outward.
    pub fn bfs_order(&self) -> &[usize] {
        &self.topo.order
    }

    pub fn z_base_ohm(&self) -> f64 {
        self.v_base_kv * self.v_base_kv / self.s_base_mva
    }

    /// Per-unit (r, x) of line `l`.
    pub fn line_pu(&self, l: usize) -> (f64, f64) {
        let z = self.z_base_ohm();
        (self.lines[l].r_ohm / z, self.lines[l].x_ohm / z)
    }

    pub fn total_load_kw(&self) -> f64 {
        self.buses.iter().map(|b| b.p_load_kw).sum()
    }

    /// Bus indices on the path from the slack to `index`, inclusive.
    pub fn path_from_slack(&self, index: usize) -> Vec<usize> {
        let mut path = vec![index];
        let mut cur = index;
        while let Some(l) = self.topo.parent_line[cur] {
            cur = self.topo.ends[l].0;
            path.push(cur);
        }
        path.reverse();
        path
    }

    pub fn with_voltage_band(mut self, v_min: f64, v_max: f64) -> Network {
        self.v_min = v_min;
        self.v_max = v_max;
        self
    }
}

fn build_topology(
    buses: &[Bus],
    lines: &[Line],
    index_of: &BTreeMap<usize, usize>,
    slack: usize,
) -> Result<Topology, String> {
    let n = buses.len();
    if lines.len() + 1 != n {
        return Err(format!("{} buses need {} lines, found {}", n, n.saturating_sub(1), lines.len()));
    }
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (l, line) in lines.iter().enumerate() {
        let a = index_of[&line.from_bus];
        let b = index_of[&line.to_bus];
        if a == b {
            return Err(format!("line {l} connects bus {} to itself", line.from_bus));
        }
        adj[a].push((b, l));
        adj[b].push((a, l));
    }
    let root = index_of[&slack];
    let mut parent_line = vec![None; n];
    let mut ends = vec![(usize::MAX, usize::MAX); lines.len()];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, l) in &adj[u] {
            if parent_line[u] == Some(l) {
                continue;
            }
            if seen[v] {
                return Err(format!("cycle through bus {}", buses[v].id));
            }
            seen[v] = true;
            parent_line[v] = Some(l);
            ends[l] = (u, v);
            queue.push_back(v);
        }
    }
    if order.len() != n {
        return Err(format!("{} buses unreachable from the slack", n - order.len()));
    }
    Ok(Topology { index_of: index_of.clone(), parent_line, ends, order })
}

/// True iff the lines form a spanning tree over the buses rooted at the slack.
pub fn validate_radial(net: &Network) -> bool {
    is_radial(&net.buses, &net.lines, net.slack)
}

/// Radiality check over raw parts, without constructing a [`Network`].
pub fn is_radial(buses: &[Bus], lines: &[Line], slack: usize) -> bool {
    let mut index_of = BTreeMap::new();
    for (i, b) in buses.iter().enumerate() {
        if index_of.insert(b.id, i).is_some() {
            return false;
        }
    }
    if !index_of.contains_key(&slack)
        || lines.iter().any(|l| !index_of.contains_key(&l.from_bus) || !index_of.contains_key(&l.to_bus))
    {
        return false;
    }
    build_topology(buses, lines, &index_of, slack).is_ok()
}

/// Parses the comma-separated feeder format.
///
/// The first data row is `v_base_kv,s_base_mva[,slack_bus]`; every further row is
/// `from,to,r_ohm,x_ohm,p_kw,q_kvar,load_class[,flow_limit_kva]` and defines the
/// load of `to`. Blank lines and `#` comments are ignored. Without an explicit
/// slack, the one bus that never appears as `to` is the slack.
pub fn parse_network(source: &str) -> Result<Network, NetworkError> {
    let mut header: Option<(f64, f64, Option<usize>)> = None;
    let mut rows: Vec<(usize, Line, f64, f64, LoadClass)> = Vec::new();
    for (no, raw) in source.lines().enumerate() {
        let line_no = no + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<f64, NetworkError> {
            fields
                .get(i)
                .ok_or_else(|| NetworkError::Parse { line: line_no, msg: format!("missing field {}", i + 1) })?
                .parse::<f64>()
                .map_err(|e| NetworkError::Parse { line: line_no, msg: format!("field {}: {e}", i + 1) })
        };
        let id = |i: usize| -> Result<usize, NetworkError> {
            fields
                .get(i)
                .ok_or_else(|| NetworkError::Parse { line: line_no, msg: format!("missing field {}", i + 1) })?
                .parse::<usize>()
                .map_err(|e| NetworkError::Parse { line: line_no, msg: format!("bus id: {e}") })
        };
        if header.is_none() {
            if !(2..=3).contains(&fields.len()) {
                return Err(NetworkError::Parse { line: line_no, msg: "expected header v_base_kv,s_base_mva".into() });
            }
            let slack = if fields.len() == 3 { Some(id(2)?) } else { None };
            header = Some((num(0)?, num(1)?, slack));
            continue;
        }
        if !(7..=8).contains(&fields.len()) {
            return Err(NetworkError::Parse {
                line: line_no,
                msg: format!("expected 7 or 8 fields, found {}", fields.len()),
            });
        }
        let class = fields[6].parse::<LoadClass>().map_err(|msg| NetworkError::Parse { line: line_no, msg })?;
        let flow_limit_kva = if fields.len() == 8 && !fields[7].is_empty() { Some(num(7)?) } else { None };
        let line = Line { from_bus: id(0)?, to_bus: id(1)?, r_ohm: num(2)?, x_ohm: num(3)?, flow_limit_kva };
        if line.r_ohm < 0.0 || line.x_ohm < 0.0 {
            return Err(NetworkError::NegativeImpedance { from: line.from_bus, to: line.to_bus });
        }
        rows.push((line_no, line, num(4)?, num(5)?, class));
    }
    let (v_base, s_base, explicit_slack) =
        header.ok_or_else(|| NetworkError::MissingSlack("empty network file".into()))?;

    // cycles are reported before duplicate definitions: a loop-closing row
    // necessarily redefines an existing bus
    let mut ids: Vec<usize> = Vec::new();
    for (_, l, ..) in &rows {
        ids.push(l.from_bus);
        ids.push(l.to_bus);
    }
    ids.sort_unstable();
    ids.dedup();
    if let Some(cycle) = find_cycle(&ids, &rows.iter().map(|r| (r.1.from_bus, r.1.to_bus)).collect::<Vec<_>>()) {
        return Err(NetworkError::NonRadial(format!("line {}-{} closes a loop", cycle.0, cycle.1)));
    }

    let mut defined: BTreeMap<usize, Bus> = BTreeMap::new();
    for (_, l, p, q, class) in &rows {
        let bus = Bus { id: l.to_bus, p_load_kw: *p, q_load_kvar: *q, load_class: *class };
        if defined.insert(l.to_bus, bus).is_some() {
            return Err(NetworkError::DuplicateBus(l.to_bus));
        }
    }
    let roots: Vec<usize> = ids.iter().copied().filter(|id| !defined.contains_key(id)).collect();
    let slack = match explicit_slack {
        Some(s) if roots == [s] => s,
        Some(s) => return Err(NetworkError::MissingSlack(format!("declared slack {s} is not the feeder root"))),
        None => match roots.as_slice() {
            [s] => *s,
            [] => return Err(NetworkError::MissingSlack("every bus is fed by a line".into())),
            many => return Err(NetworkError::NonRadial(format!("{} disconnected roots {:?}", many.len(), many))),
        },
    };
    let mut buses = vec![Bus { id: slack, p_load_kw: 0.0, q_load_kvar: 0.0, load_class: LoadClass::Critical }];
    buses.extend(defined.into_values());
    let lines = rows.into_iter().map(|r| r.1).collect();
    Network::new(buses, lines, slack, v_base, s_base)
}

fn find_cycle(ids: &[usize], edges: &[(usize, usize)]) -> Option<(usize, usize)> {
    let index = |id: usize| ids.binary_search(&id).expect("collected id");
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for &(a, b) in edges {
        let (ra, rb) = (root(&mut parent, index(a)), root(&mut parent, index(b)));
        if ra == rb {
            return Some((a, b));
        }
        parent[ra] = rb;
    }
    None
}

/// Serializes a network back into the feeder text format.
pub fn write_network(net: &Network) -> String {
    let mut out = format!("{},{},{}\n", net.v_base_kv, net.s_base_mva, net.slack);
    for l in &net.lines {
        let b = &net.buses[net.topo.index_of[&l.to_bus]];
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            l.from_bus, l.to_bus, l.r_ohm, l.x_ohm, b.p_load_kw, b.q_load_kvar, b.load_class
        ));
        if let Some(lim) = l.flow_limit_kva {
            out.push_str(&format!(",{lim}"));
        }
        out.push('\n');
    }
    out
}

/// Net injections per hour and bus index, as LP terms plus fixed demand.
///
/// Real power in MW, reactive in Mvar. Terms add supply at the bus; `p_load`
/// and `q_load` are withdrawn.
#[derive(Debug, Clone, Default)]
pub struct NodalInjections {
    pub p_terms: Vec<Vec<Vec<(VarHandle, f64)>>>,
    pub q_terms: Vec<Vec<Vec<(VarHandle, f64)>>>,
    pub p_load: Vec<Vec<f64>>,
    pub q_load: Vec<Vec<f64>>,
}

impl NodalInjections {
    pub fn new(hours: usize, buses: usize) -> Self {
        NodalInjections {
            p_terms: vec![vec![Vec::new(); buses]; hours],
            q_terms: vec![vec![Vec::new(); buses]; hours],
            p_load: vec![vec![0.0; buses]; hours],
            q_load: vec![vec![0.0; buses]; hours],
        }
    }

    pub fn hours(&self) -> usize {
        self.p_load.len()
    }
}

/// Handles of the flow model added to a problem, indexed `[hour][line]` or `[hour][bus]`.
#[derive(Debug, Clone)]
pub struct FlowModel {
    pub p_flow: Vec<Vec<VarHandle>>,
    pub q_flow: Vec<Vec<VarHandle>>,
    pub v_sq: Vec<Vec<VarHandle>>,
    pub p_balance: Vec<Vec<RowId>>,
    pub q_balance: Vec<Vec<RowId>>,
}

pub fn p_balance_tag(bus_id: usize, hour: usize) -> String {
    format!("p_balance:{bus_id}:{hour}")
}

/// Adds LinDistFlow variables and rows for every hour of `inj` to `problem`.
///
/// Per hour: real and reactive balance at every bus (the real-power rows are
/// tagged with [`p_balance_tag`]), the squared-voltage recursion along every
/// line, the voltage band as bounds, and the slack voltage fixed at 1 p.u.
pub fn build_lindistflow(net: &Network, problem: &mut Problem, inj: &NodalInjections) -> Result<FlowModel, NetworkError> {
    let n = net.buses.len();
    let hours = inj.hours();
    let shape_ok = |v: usize, w: usize| v == hours && w == n;
    if !shape_ok(inj.p_terms.len(), inj.p_terms.first().map_or(n, Vec::len))
        || !shape_ok(inj.q_terms.len(), inj.q_terms.first().map_or(n, Vec::len))
        || inj.p_load.iter().chain(&inj.q_load).any(|r| r.len() != n)
        || inj.q_load.len() != hours
    {
        return Err(NetworkError::IncompleteInjections(format!("expected {hours} hours x {n} buses")));
    }
    for terms in inj.p_terms.iter().chain(&inj.q_terms).flatten().flatten() {
        if terms.0.index() >= problem.num_vars() {
            return Err(LpError::UnknownVariable(terms.0.index()).into());
        }
    }
    let slack = net.slack_index();
    let (w_min, w_max) = (net.v_min * net.v_min, net.v_max * net.v_max);
    let mut model = FlowModel { p_flow: vec![], q_flow: vec![], v_sq: vec![], p_balance: vec![], q_balance: vec![] };
    for t in 0..hours {
        let mut pf = Vec::with_capacity(net.lines.len());
        let mut qf = Vec::with_capacity(net.lines.len());
        for (l, line) in net.lines.iter().enumerate() {
            let lim = line.flow_limit_kva.map_or(f64::INFINITY, |s| s / 1000.0);
            pf.push(problem.add_var(format!("p_flow[{l},{t}]"), -lim, lim)?);
            qf.push(problem.add_var(format!("q_flow[{l},{t}]"), -lim, lim)?);
        }
        let mut w = Vec::with_capacity(n);
        for (i, bus) in net.buses.iter().enumerate() {
            let (lo, hi) = if i == slack { (1.0, 1.0) } else { (w_min, w_max) };
            w.push(problem.add_var(format!("v_sq[{},{t}]", bus.id), lo, hi)?);
        }
        let mut pb = Vec::with_capacity(n);
        let mut qb = Vec::with_capacity(n);
        for (i, bus) in net.buses.iter().enumerate() {
            for (flows, terms, load, rows, tag) in [
                (&pf, &inj.p_terms[t][i], inj.p_load[t][i], &mut pb, p_balance_tag(bus.id, t)),
                (&qf, &inj.q_terms[t][i], inj.q_load[t][i], &mut qb, format!("q_balance:{}:{t}", bus.id)),
            ] {
                let mut coeffs: Vec<(VarHandle, f64)> = Vec::new();
                if let Some(l) = net.topo.parent_line[i] {
                    coeffs.push((flows[l], 1.0));
                }
                for (l, &(p, _)) in net.topo.ends.iter().enumerate() {
                    if p == i {
                        coeffs.push((flows[l], -1.0));
                    }
                }
                merge_terms(&mut coeffs, terms);
                rows.push(problem.add_constraint(coeffs, Sense::Eq, load, tag)?);
            }
        }
        for l in 0..net.lines.len() {
            let (p, c) = net.topo.ends[l];
            let (r, x) = net.line_pu(l);
            let k = 2.0 / net.s_base_mva;
            let mut coeffs = vec![(w[c], 1.0), (w[p], -1.0)];
            if r != 0.0 {
                coeffs.push((pf[l], k * r));
            }
            if x != 0.0 {
                coeffs.push((qf[l], k * x));
            }
            problem.add_constraint(coeffs, Sense::Eq, 0.0, format!("voltage:{l}:{t}"))?;
        }
        model.p_flow.push(pf);
        model.q_flow.push(qf);
        model.v_sq.push(w);
        model.p_balance.push(pb);
        model.q_balance.push(qb);
    }
    Ok(model)
}

/// Appends `extra` to `coeffs`, summing coefficients of repeated variables.
pub(crate) fn merge_terms(coeffs: &mut Vec<(VarHandle, f64)>, extra: &[(VarHandle, f64)]) {
    for &(v, c) in extra {
        match coeffs.iter_mut().find(|e| e.0 == v) {
            Some(e) => e.1 += c,
            None => coeffs.push((v, c)),
        }
    }
}

/// Per-bus, per-hour voltage magnitudes with per-bus envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageProfile {
    /// `[hour][bus index]`, p.u.
    pub magnitude: Vec<Vec<f64>>,
    pub min_per_bus: Vec<f64>,
    pub max_per_bus: Vec<f64>,
}

impl VoltageProfile {
    pub fn min(&self) -> f64 {
        self.min_per_bus.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.max_per_bus.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn within(&self, v_min: f64, v_max: f64, tol: f64) -> bool {
        self.min() >= v_min - tol && self.max() <= v_max + tol
    }
}

/// Recomputes squared voltages `[hour][bus]` from net injections by a forward
/// sweep over the tree, independently of any solver.
pub fn forward_sweep(net: &Network, p_inj: &[Vec<f64>], q_inj: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, NetworkError> {
    let n = net.buses.len();
    if p_inj.len() != q_inj.len() || p_inj.iter().chain(q_inj).any(|r| r.len() != n) {
        return Err(NetworkError::IncompleteInjections(format!("expected {} x {n} injections", p_inj.len())));
    }
    let order = &net.topo.order;
    let mut out = Vec::with_capacity(p_inj.len());
    for (pi, qi) in p_inj.iter().zip(q_inj) {
        // downstream withdrawal of each subtree
        let mut p_sub: Vec<f64> = pi.iter().map(|v| -v).collect();
        let mut q_sub: Vec<f64> = qi.iter().map(|v| -v).collect();
        for &b in order.iter().rev() {
            if let Some(l) = net.topo.parent_line[b] {
                let parent = net.topo.ends[l].0;
                p_sub[parent] += p_sub[b];
                q_sub[parent] += q_sub[b];
            }
        }
        let mut w = vec![0.0; n];
        for &b in order {
            match net.topo.parent_line[b] {
                None => w[b] = 1.0,
                Some(l) => {
                    let (r, x) = net.line_pu(l);
                    let parent = net.topo.ends[l].0;
                    w[b] = w[parent] - 2.0 * (r * p_sub[b] + x * q_sub[b]) / net.s_base_mva;
                }
            }
        }
        out.push(w);
    }
    Ok(out)
}

/// Builds a [`VoltageProfile`] from squared voltages.
pub fn profile_from_squared(w: &[Vec<f64>]) -> VoltageProfile {
    let n = w.first().map_or(0, Vec::len);
    let magnitude: Vec<Vec<f64>> = w.iter().map(|row| row.iter().map(|v| v.max(0.0).sqrt()).collect()).collect();
    let mut min_per_bus = vec![f64::INFINITY; n];
    let mut max_per_bus = vec![f64::NEG_INFINITY; n];
    for row in &magnitude {
        for (b, &v) in row.iter().enumerate() {
            min_per_bus[b] = min_per_bus[b].min(v);
            max_per_bus[b] = max_per_bus[b].max(v);
        }
    }
    VoltageProfile { magnitude, min_per_bus, max_per_bus }
}

/// Voltage profile implied by a schedule's nodal injections.
pub fn verify_voltages(net: &Network, schedule: &crate::optimizer::ScheduleResult) -> Result<VoltageProfile, NetworkError> {
    if schedule.bus_injection_p.len() != schedule.hours || schedule.bus_injection_q.len() != schedule.hours {
        return Err(NetworkError::IncompleteInjections(format!(
            "schedule has {} hours but {} injection rows",
            schedule.hours,
            schedule.bus_injection_p.len()
        )));
    }
    let w = forward_sweep(net, &schedule.bus_injection_p, &schedule.bus_injection_q)?;
    Ok(profile_from_squared(&w))
}

/// Demand re-evaluated with voltage exponents `P = P0 * V^k` per load class.
/// Diagnostic only; the optimization treats loads as constant power.
pub fn voltage_dependent_demand(net: &Network, p_load: &[Vec<f64>], voltage: &VoltageProfile) -> Vec<Vec<f64>> {
    p_load
        .iter()
        .zip(&voltage.magnitude)
        .map(|(row, v)| {
            row.iter()
                .zip(v)
                .zip(&net.buses)
                .map(|((p, vm), bus)| p * vm.powf(bus.load_class.default_exponent()))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_lp;

    fn two_bus(s_base: f64) -> Network {
        parse_network(&format!("1,{s_base}\n1,2,0.01,0,1000,0,critical\n")).unwrap()
    }

    #[test]
    fn builtin_feeder_shape() {
        let net = Network::ieee33();
        assert_eq!(net.buses().len(), 33);
        assert_eq!(net.lines().len(), 32);
        assert_eq!(net.slack_id(), 1);
        assert!(validate_radial(&net));
        assert!((net.total_load_kw() - 3715.0).abs() < 1e-9);
        assert!((net.z_base_ohm() - 16.02756).abs() < 1e-5);
    }

    #[test]
    fn smallest_feeder() {
        let net = two_bus(1.0);
        assert_eq!(net.buses().len(), 2);
        assert!(validate_radial(&net));
        assert_eq!(net.path_from_slack(1), vec![0, 1]);
    }

    #[test]
    fn loop_closing_line_is_rejected() {
        let mut text = IEEE33_CSV.to_string();
        text.push_str("18,33,0.5,0.5,0,0,critical\n");
        assert!(matches!(parse_network(&text), Err(NetworkError::NonRadial(_))));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_network("12.66,10\n1,2,-0.1,0.1,10,0,critical\n"),
            Err(NetworkError::NegativeImpedance { .. })
        ));
        // bus 3 fed twice from disjoint parents
        assert!(matches!(
            parse_network("12.66,10\n1,2,0.1,0.1,10,0,critical\n4,2,0.1,0.1,10,0,critical\n"),
            Err(NetworkError::DuplicateBus(2))
        ));
        assert!(matches!(parse_network(""), Err(NetworkError::MissingSlack(_))));
        assert!(matches!(
            parse_network("12.66,10,5\n1,2,0.1,0.1,10,0,critical\n"),
            Err(NetworkError::MissingSlack(_))
        ));
        assert!(matches!(
            parse_network("12.66,10\n1,2,0.1,0.1,10,0,bogus\n"),
            Err(NetworkError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn radial_predicate() {
        let bus = |id| Bus { id, p_load_kw: 0.0, q_load_kvar: 0.0, load_class: LoadClass::Critical };
        let line = |a, b| Line { from_bus: a, to_bus: b, r_ohm: 0.1, x_ohm: 0.1, flow_limit_kva: None };
        assert!(is_radial(&[bus(1)], &[], 1));
        assert!(!is_radial(&[bus(1), bus(2), bus(3)], &[line(1, 2), line(2, 3), line(3, 1)], 1));
        assert!(is_radial(&[bus(1), bus(2), bus(3)], &[line(2, 1), line(3, 2)], 1));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let net = Network::ieee33();
        assert_eq!(parse_network(&write_network(&net)).unwrap(), net);
    }

    fn solve_two_bus(load_mw: f64) -> f64 {
        let net = two_bus(1.0);
        let mut p = Problem::new();
        let imp = p.add_var("import", 0.0, f64::INFINITY).unwrap();
        let qimp = p.add_var("import_q", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        p.add_cost(imp, 1.0);
        let mut inj = NodalInjections::new(1, 2);
        inj.p_terms[0][0].push((imp, 1.0));
        inj.q_terms[0][0].push((qimp, 1.0));
        inj.p_load[0][1] = load_mw;
        let model = build_lindistflow(&net.with_voltage_band(0.9, 1.1), &mut p, &inj).unwrap();
        let s = solve_lp(&p).unwrap();
        assert!(s.is_optimal());
        s.value(model.v_sq[0][1])
    }

    #[test]
    fn two_bus_voltage_drop() {
        assert!((solve_two_bus(0.0) - 1.0).abs() < 1e-12);
        let w = solve_two_bus(1.0);
        assert!((w - 0.98).abs() < 1e-12);
        assert!((w.sqrt() - 0.989_949_5).abs() < 1e-7);
    }

    #[test]
    fn unbound_handle_is_rejected() {
        let net = two_bus(1.0);
        let mut p = Problem::new();
        let mut inj = NodalInjections::new(1, 2);
        inj.p_terms[0][0].push((VarHandle(5), 1.0));
        assert!(matches!(build_lindistflow(&net, &mut p, &inj), Err(NetworkError::Lp(LpError::UnknownVariable(5)))));
    }

    #[test]
    fn zero_load_sweep_is_flat() {
        let net = Network::ieee33();
        let zeros = vec![vec![0.0; 33]; 3];
        let w = forward_sweep(&net, &zeros, &zeros).unwrap();
        assert!(w.iter().flatten().all(|&v| v == 1.0));
    }

    #[test]
    fn single_leaf_load_drops_monotonically() {
        let net = Network::ieee33();
        let leaf = net.index_of(18).unwrap();
        let mut p = vec![vec![0.0; 33]];
        p[0][leaf] = -0.5;
        let q = vec![vec![0.0; 33]];
        let w = forward_sweep(&net, &p, &q).unwrap();
        let path = net.path_from_slack(leaf);
        for pair in path.windows(2) {
            assert!(w[0][pair[1]] <= w[0][pair[0]]);
        }
    }

    #[test]
    fn exponent_report() {
        let net = two_bus(1.0);
        let prof = profile_from_squared(&[vec![1.0, 0.81]]);
        let d = voltage_dependent_demand(&net, &[vec![0.0, 1.0]], &prof);
        // bus 2 is critical: exponent 0
        assert!((d[0][1] - 1.0).abs() < 1e-12);
    }
}
