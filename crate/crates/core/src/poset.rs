//! The influence network as a partially ordered set.
//!
//! Events live on totally ordered chains (particles and observers). The
//! order `x ≤ y` ("y includes x") is the reachability relation generated by
//! chain successors and influence edges, which must be acyclic. Reachability
//! is computed per source event on first use and cached, so a built network
//! answers order and projection queries from many threads.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which observer an influence is exchanged with, in the 1+1 configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    P,
    Q,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::P => Side::Q,
            Side::Q => Side::P,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::P => "P",
            Side::Q => "Q",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Emission,
    Reception,
    ObserverReception,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainRole {
    Particle,
    Observer,
}

/// Index of an event inside one [`InfluenceNetwork`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(usize);

/// Index of a chain inside one [`InfluenceNetwork`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainId(usize);

#[derive(Debug, Clone)]
pub struct Event {
    pub name: String,
    pub chain: ChainId,
    pub valuation: i64,
    pub kind: EventKind,
    /// Emission: the side influenced. Reception: the side the influence came from.
    pub side: Option<Side>,
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub name: String,
    pub role: ChainRole,
    /// Observer chains: which side of the particle they sit on.
    pub side: Option<Side>,
    events: Vec<EventId>,
}

impl Chain {
    pub fn events(&self) -> &[EventId] {
        &self.events
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Chain,
    Influence,
}

/// Adjacent particle events that break collinearity: an emission toward a
/// side immediately followed by a reception from that same side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub emission: String,
    pub reception: String,
    pub side: Side,
}

#[derive(Debug, Clone)]
struct Coordination {
    chains: (ChainId, ChainId),
    pairs: Vec<(EventId, EventId)>,
}

/// Positions `i` where `(seq[i], seq[i + 1])` is an emission to `S` followed
/// by a reception from `S`.
pub fn collinearity_violations<I>(seq: I) -> Vec<usize>
where
    I: IntoIterator<Item = (EventKind, Side)>,
{
    let mut out = Vec::new();
    let mut prev: Option<(EventKind, Side)> = None;
    for (i, cur) in seq.into_iter().enumerate() {
        if let Some((EventKind::Emission, emitted)) = prev {
            if cur.0 == EventKind::Reception && cur.1 == emitted {
                out.push(i - 1);
            }
        }
        prev = Some(cur);
    }
    out
}

#[derive(Debug, Clone)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }
    fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let fresh = self.0[w] & b == 0;
        self.0[w] |= b;
        fresh
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1u64 << (i % 64)) != 0
    }
}

/// Incrementally assembles and validates an [`InfluenceNetwork`].
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    events: Vec<Event>,
    chains: Vec<Chain>,
    event_names: HashMap<String, EventId>,
    chain_names: HashMap<String, ChainId>,
    influences: Vec<(EventId, EventId)>,
    indistinguishable: Vec<(EventId, EventId)>,
    coordination: Vec<Coordination>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_chain(&mut self, name: &str, role: ChainRole, side: Option<Side>) -> Result<ChainId> {
        if self.chain_names.contains_key(name) {
            return Err(Error::Structure(format!("duplicate chain `{name}`")));
        }
        let id = ChainId(self.chains.len());
        self.chains.push(Chain {
            name: name.to_owned(),
            role,
            side,
            events: Vec::new(),
        });
        self.chain_names.insert(name.to_owned(), id);
        Ok(id)
    }

    /// Appends an event to the end of `chain`.
    pub fn add_event(
        &mut self,
        chain: ChainId,
        name: &str,
        valuation: i64,
        kind: EventKind,
        side: Option<Side>,
    ) -> Result<EventId> {
        if self.event_names.contains_key(name) {
            return Err(Error::Structure(format!("duplicate event `{name}`")));
        }
        let c = self
            .chains
            .get(chain.0)
            .ok_or_else(|| Error::UnknownChain(format!("#{}", chain.0)))?;
        match (c.role, kind) {
            (ChainRole::Particle, EventKind::ObserverReception) => {
                return Err(Error::Structure(format!(
                    "observer-reception `{name}` on particle chain `{}`",
                    c.name
                )))
            }
            (ChainRole::Observer, EventKind::Reception) => {
                return Err(Error::Structure(format!(
                    "particle reception `{name}` on observer chain `{}`",
                    c.name
                )))
            }
            _ => {}
        }
        let id = EventId(self.events.len());
        self.events.push(Event {
            name: name.to_owned(),
            chain,
            valuation,
            kind,
            side,
        });
        self.chains[chain.0].events.push(id);
        self.event_names.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn event(&self, name: &str) -> Result<EventId> {
        self.event_names
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownEvent(name.to_owned()))
    }

    pub fn chain(&self, name: &str) -> Result<ChainId> {
        self.chain_names
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownChain(name.to_owned()))
    }

    pub fn add_influence(&mut self, source: EventId, target: EventId) -> Result<()> {
        let (s, t) = (&self.events[source.0], &self.events[target.0]);
        if s.kind != EventKind::Emission {
            return Err(Error::Structure(format!(
                "influence source `{}` is not an emission",
                s.name
            )));
        }
        if t.kind == EventKind::Emission {
            return Err(Error::Structure(format!(
                "influence target `{}` is not a reception",
                t.name
            )));
        }
        if s.chain == t.chain {
            return Err(Error::Structure(format!(
                "influence `{}` -> `{}` stays on one chain",
                s.name, t.name
            )));
        }
        self.influences.push((source, target));
        Ok(())
    }

    /// Marks two adjacent events of one chain as indistinguishable to the
    /// observers; they may then share a valuation.
    pub fn mark_indistinguishable(&mut self, a: EventId, b: EventId) -> Result<()> {
        let (ea, eb) = (&self.events[a.0], &self.events[b.0]);
        if ea.chain != eb.chain {
            return Err(Error::Structure(format!(
                "indistinguishable events `{}` and `{}` are on different chains",
                ea.name, eb.name
            )));
        }
        self.indistinguishable.push((a, b));
        Ok(())
    }

    /// Pairs corresponding events of two observer chains.
    pub fn coordinate(&mut self, a: ChainId, b: ChainId, pairs: Vec<(EventId, EventId)>) -> Result<()> {
        for id in [a, b] {
            let c = &self.chains[id.0];
            if c.role != ChainRole::Observer {
                return Err(Error::Structure(format!(
                    "coordinated chain `{}` is not an observer",
                    c.name
                )));
            }
        }
        for &(x, y) in &pairs {
            if self.events[x.0].chain != a || self.events[y.0].chain != b {
                return Err(Error::Structure(format!(
                    "coordination pair (`{}`, `{}`) does not match chains `{}`/`{}`",
                    self.events[x.0].name, self.events[y.0].name, self.chains[a.0].name, self.chains[b.0].name
                )));
            }
        }
        self.coordination.push(Coordination { chains: (a, b), pairs });
        Ok(())
    }

    pub fn build(self) -> Result<InfluenceNetwork> {
        let n = self.events.len();
        let marked: HashSet<(EventId, EventId)> = self
            .indistinguishable
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .collect();

        for chain in &self.chains {
            for w in chain.events.windows(2) {
                let (x, y) = (&self.events[w[0].0], &self.events[w[1].0]);
                if y.valuation < x.valuation
                    || (y.valuation == x.valuation && !marked.contains(&(w[0], w[1])))
                {
                    return Err(Error::Structure(format!(
                        "valuations on chain `{}` must ascend: `{}`={} then `{}`={}",
                        chain.name, x.name, x.valuation, y.name, y.valuation
                    )));
                }
            }
        }
        for &(a, b) in &self.indistinguishable {
            let (ea, eb) = (&self.events[a.0], &self.events[b.0]);
            let events = &self.chains[ea.chain.0].events;
            let pa = events.iter().position(|&e| e == a);
            let pb = events.iter().position(|&e| e == b);
            match (pa, pb) {
                (Some(i), Some(j)) if i.abs_diff(j) == 1 && ea.valuation == eb.valuation => {}
                _ => {
                    return Err(Error::Structure(format!(
                        "indistinguishable events `{}` and `{}` must be adjacent with equal valuation",
                        ea.name, eb.name
                    )))
                }
            }
        }

        let mut succ: Vec<Vec<(EventId, EdgeKind)>> = vec![Vec::new(); n];
        for chain in &self.chains {
            for w in chain.events.windows(2) {
                succ[w[0].0].push((w[1], EdgeKind::Chain));
            }
        }
        for &(s, t) in &self.influences {
            if !succ[s.0].iter().any(|&(e, _)| e == t) {
                succ[s.0].push((t, EdgeKind::Influence));
            }
        }

        // Kahn's algorithm; leftovers sit on a cycle.
        let mut indeg = vec![0usize; n];
        for out in &succ {
            for &(t, _) in out {
                indeg[t.0] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop_front() {
            seen += 1;
            for &(t, _) in &succ[u] {
                indeg[t.0] -= 1;
                if indeg[t.0] == 0 {
                    queue.push_back(t.0);
                }
            }
        }
        if seen != n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap_or(0);
            return Err(Error::Cycle(self.events[stuck].name.clone()));
        }

        for coord in &self.coordination {
            let mut left = HashSet::new();
            let mut right = HashSet::new();
            for &(x, y) in &coord.pairs {
                if !left.insert(x) || !right.insert(y) {
                    return Err(Error::Structure("coordination is not a bijection".into()));
                }
            }
            for w in coord.pairs.windows(2) {
                let (x0, y0) = w[0];
                let (x1, y1) = w[1];
                let dl = self.events[x1.0].valuation - self.events[x0.0].valuation;
                let dr = self.events[y1.0].valuation - self.events[y0.0].valuation;
                if dl <= 0 || dr <= 0 {
                    return Err(Error::Structure(
                        "coordination pairs must ascend on both chains".into(),
                    ));
                }
                if dl != dr {
                    return Err(Error::Structure(format!(
                        "coordinated intervals differ: `{}`..`{}` has length {dl}, `{}`..`{}` has {dr}",
                        self.events[x0.0].name, self.events[x1.0].name, self.events[y0.0].name, self.events[y1.0].name
                    )));
                }
            }
        }

        let reach = (0..n).map(|_| OnceLock::new()).collect();
        Ok(InfluenceNetwork {
            events: self.events,
            chains: self.chains,
            event_names: self.event_names,
            chain_names: self.chain_names,
            influences: self.influences,
            indistinguishable: self.indistinguishable,
            coordination: self.coordination,
            succ,
            reach,
        })
    }
}

/// An immutable, validated influence network.
#[derive(Debug)]
pub struct InfluenceNetwork {
    events: Vec<Event>,
    chains: Vec<Chain>,
    event_names: HashMap<String, EventId>,
    chain_names: HashMap<String, ChainId>,
    influences: Vec<(EventId, EventId)>,
    indistinguishable: Vec<(EventId, EventId)>,
    coordination: Vec<Coordination>,
    succ: Vec<Vec<(EventId, EdgeKind)>>,
    reach: Vec<OnceLock<BitSet>>,
}

impl InfluenceNetwork {
    pub fn empty() -> Self {
        NetworkBuilder::new().build().expect("empty network is valid")
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event(&self, name: &str) -> Result<EventId> {
        self.event_names
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownEvent(name.to_owned()))
    }

    pub fn chain(&self, name: &str) -> Result<ChainId> {
        self.chain_names
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownChain(name.to_owned()))
    }

    pub fn event_data(&self, id: EventId) -> &Event {
        &self.events[id.0]
    }

    pub fn chain_data(&self, id: ChainId) -> &Chain {
        &self.chains[id.0]
    }

    pub fn name(&self, id: EventId) -> &str {
        &self.events[id.0].name
    }

    pub fn chains(&self) -> impl Iterator<Item = (ChainId, &Chain)> {
        self.chains.iter().enumerate().map(|(i, c)| (ChainId(i), c))
    }

    pub fn event_ids(&self) -> impl Iterator<Item = EventId> {
        (0..self.events.len()).map(EventId)
    }

    pub fn influences(&self) -> &[(EventId, EventId)] {
        &self.influences
    }

    fn descendants(&self, x: EventId) -> &BitSet {
        self.reach[x.0].get_or_init(|| {
            let mut set = BitSet::new(self.events.len());
            let mut stack = vec![x.0];
            set.insert(x.0);
            while let Some(u) = stack.pop() {
                for &(t, _) in &self.succ[u] {
                    if set.insert(t.0) {
                        stack.push(t.0);
                    }
                }
            }
            set
        })
    }

    /// `x ≤ y`: `y` is reachable from `x` (reflexive).
    pub fn leq(&self, x: EventId, y: EventId) -> bool {
        self.descendants(x).contains(y.0)
    }

    pub fn leq_by_name(&self, x: &str, y: &str) -> Result<bool> {
        Ok(self.leq(self.event(x)?, self.event(y)?))
    }

    /// Least event on `target` that includes `e`.
    pub fn forward_project(&self, e: EventId, target: ChainId) -> Option<EventId> {
        let events = &self.chains[target.0].events;
        // Events including `e` form an up-set of the chain.
        let i = events.partition_point(|&f| !self.leq(e, f));
        events.get(i).copied()
    }

    /// Greatest event on `target` that `e` includes.
    pub fn back_project(&self, e: EventId, target: ChainId) -> Option<EventId> {
        let events = &self.chains[target.0].events;
        let i = events.partition_point(|&b| self.leq(b, e));
        i.checked_sub(1).map(|i| events[i])
    }

    /// Collinearity check along one particle chain.
    pub fn collinearity_scan(&self, particle: ChainId) -> Result<Vec<Violation>> {
        let chain = &self.chains[particle.0];
        if chain.role != ChainRole::Particle {
            return Err(Error::Structure(format!("chain `{}` is not a particle", chain.name)));
        }
        let mut tagged = Vec::with_capacity(chain.events.len());
        for &id in &chain.events {
            let ev = &self.events[id.0];
            let side = ev
                .side
                .ok_or_else(|| Error::Structure(format!("event `{}` has no side tag", ev.name)))?;
            tagged.push((ev.kind, side));
        }
        Ok(collinearity_violations(tagged.iter().copied())
            .into_iter()
            .map(|i| Violation {
                emission: self.events[chain.events[i].0].name.clone(),
                reception: self.events[chain.events[i + 1].0].name.clone(),
                side: tagged[i].1,
            })
            .collect())
    }

    /// Violations over every particle chain, in chain order.
    pub fn collinearity_scan_all(&self) -> Result<Vec<Violation>> {
        let mut out = Vec::new();
        for (id, chain) in self.chains() {
            if chain.role == ChainRole::Particle {
                out.extend(self.collinearity_scan(id)?);
            }
        }
        Ok(out)
    }

    /// Covering edges of the order, tagged with the kind of generating edge.
    pub fn transitive_reduction(&self) -> Vec<(EventId, EventId, EdgeKind)> {
        let mut out = Vec::new();
        for (u, outs) in self.succ.iter().enumerate() {
            for &(v, kind) in outs {
                let redundant = outs.iter().any(|&(w, _)| w != v && self.leq(w, v));
                if !redundant {
                    out.push((EventId(u), v, kind));
                }
            }
        }
        out
    }

    /// Graphviz rendering of the Hasse diagram.
    ///
    /// Chains become clusters; chain edges are bold and influence edges dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph influence {\n");
        if self.events.is_empty() {
            out.push_str("}\n");
            return out;
        }
        out.push_str("  rankdir=BT;\n");
        for (i, chain) in self.chains.iter().enumerate() {
            let _ = writeln!(out, "  subgraph \"cluster_{i}\" {{");
            let _ = writeln!(out, "    label={};", quote(&chain.name));
            for &id in &chain.events {
                let ev = &self.events[id.0];
                let shape = match ev.kind {
                    EventKind::Emission => "circle",
                    EventKind::Reception => "doublecircle",
                    EventKind::ObserverReception => "box",
                };
                let _ = writeln!(out, "    {} [shape={shape}];", quote(&ev.name));
            }
            out.push_str("  }\n");
        }
        for (u, v, kind) in self.transitive_reduction() {
            let style = match kind {
                EdgeKind::Chain => "style=bold",
                EdgeKind::Influence => "style=dashed, arrowhead=open",
            };
            let _ = writeln!(
                out,
                "  {} -> {} [{style}];",
                quote(&self.events[u.0].name),
                quote(&self.events[v.0].name)
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(text)?;
        doc.build()
    }

    pub fn to_doc(&self) -> NetworkDoc {
        let name = |id: EventId| self.events[id.0].name.clone();
        NetworkDoc {
            chains: self
                .chains
                .iter()
                .map(|c| ChainDoc {
                    id: c.name.clone(),
                    role: c.role,
                    side: c.side,
                    events: c
                        .events
                        .iter()
                        .map(|&e| {
                            let ev = &self.events[e.0];
                            EventDoc {
                                id: ev.name.clone(),
                                valuation: ev.valuation,
                                kind: ev.kind,
                                side: ev.side,
                            }
                        })
                        .collect(),
                })
                .collect(),
            influences: self
                .influences
                .iter()
                .map(|&(s, t)| InfluenceDoc {
                    source: name(s),
                    target: name(t),
                })
                .collect(),
            indistinguishable: self.indistinguishable.iter().map(|&(a, b)| [name(a), name(b)]).collect(),
            coordination: self
                .coordination
                .iter()
                .map(|c| CoordinationDoc {
                    chains: [
                        self.chains[c.chains.0 .0].name.clone(),
                        self.chains[c.chains.1 .0].name.clone(),
                    ],
                    pairs: c.pairs.iter().map(|&(x, y)| [name(x), name(y)]).collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("network doc serializes")
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// JSON form of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub chains: Vec<ChainDoc>,
    #[serde(default)]
    pub influences: Vec<InfluenceDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub indistinguishable: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coordination: Vec<CoordinationDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDoc {
    pub id: String,
    pub role: ChainRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    pub events: Vec<EventDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDoc {
    pub id: String,
    pub valuation: i64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfluenceDoc {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinationDoc {
    pub chains: [String; 2],
    pub pairs: Vec<[String; 2]>,
}

impl NetworkDoc {
    pub fn build(&self) -> Result<InfluenceNetwork> {
        let mut b = NetworkBuilder::new();
        for c in &self.chains {
            let chain = b.add_chain(&c.id, c.role, c.side)?;
            for e in &c.events {
                b.add_event(chain, &e.id, e.valuation, e.kind, e.side)?;
            }
        }
        for inf in &self.influences {
            let (s, t) = (b.event(&inf.source)?, b.event(&inf.target)?);
            b.add_influence(s, t)?;
        }
        for [x, y] in &self.indistinguishable {
            let (x, y) = (b.event(x)?, b.event(y)?);
            b.mark_indistinguishable(x, y)?;
        }
        for c in &self.coordination {
            let (ca, cb) = (b.chain(&c.chains[0])?, b.chain(&c.chains[1])?);
            let pairs = c
                .pairs
                .iter()
                .map(|[x, y]| Ok((b.event(x)?, b.event(y)?)))
                .collect::<Result<Vec<_>>>()?;
            b.coordinate(ca, cb, pairs)?;
        }
        b.build()
    }
}
