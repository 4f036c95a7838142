//! Scenario replay: parse change sequences, drive an engine, optionally check
//! every answer against an oracle and time the dynamic path against
//! recomputation from scratch.

mod gen;
mod scenario;

pub use gen::gen_scenario;
pub use scenario::{
    parse_scenario, Batch, Edit, Header, Query, Scenario, GRAPH_SIZE_CAP, MATRIX_SIZE_CAP, SCENARIO_BATCH_CAP,
};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::dynmatch::{GenTutteState, MatchConfig, TutteRankState};
use crate::dynrank::{rank_mod, AGoodState, EntryBatch};
use crate::dynreach::{ReachConfig, ReachDistState};
use crate::error::{Error, Result};
use crate::field::FieldPrime;
use crate::graph::{EdgeBatch, Graph};
use crate::oracles::{oracle_dist, oracle_mcm, oracle_rank, oracle_reach, RankModulus, RANK_ORACLE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Rank,
    Reach,
    Dist,
    MatchDet,
    MatchRank,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Rank, Mode::Reach, Mode::Dist, Mode::MatchDet, Mode::MatchRank];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Rank => "rank",
            Mode::Reach => "reach",
            Mode::Dist => "dist",
            Mode::MatchDet => "match-det",
            Mode::MatchRank => "match-rank",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[derive(Default)]
pub struct RunOptions {
    pub seed: u64,
    pub epoch_len: Option<usize>,
    pub max_candidates: Option<usize>,
    pub verify: bool,
    /// Also recompute from scratch after every batch and time both.
    pub timing: bool,
}


/// One answered query, or a failed batch or query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub query_id: usize,
    pub mode: Mode,
    pub batch: Option<usize>,
    pub query: String,
    pub answer: Value,
    pub oracle: Option<Value>,
    #[serde(rename = "match")]
    pub matched: Option<bool>,
    pub micros: u64,
    pub candidate: Option<usize>,
    pub prime: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub queries: usize,
    pub verified: usize,
    /// Verification requested but no oracle at this scale.
    pub unverified: usize,
    pub mismatches: usize,
    pub errors: usize,
    pub batches: usize,
    /// Update time over batches after the initial load.
    pub dynamic_micros: u64,
    pub scratch_micros: Option<u64>,
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.summary.mismatches == 0 && self.summary.errors == 0
    }

    /// One JSON object per record, then `{"summary": ...}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out.push_str(&json!({ "summary": self.summary }).to_string());
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!("#{} [{}] {} -> {}", r.query_id, r.mode, r.query, r.answer));
            if let Some(o) = &r.oracle {
                let tag = if r.matched == Some(true) { "ok" } else { "MISMATCH" };
                out.push_str(&format!("  oracle {o} {tag}"));
            }
            if let Some(e) = &r.error {
                out.push_str(&format!("  error: {e}"));
            }
            out.push_str(&format!("  {}us\n", r.micros));
        }
        let s = &self.summary;
        out.push_str(&format!(
            "{} queries, {} verified, {} unverified, {} mismatches, {} errors over {} batches\n",
            s.queries, s.verified, s.unverified, s.mismatches, s.errors, s.batches
        ));
        out.push_str(&format!("dynamic updates: {}us", s.dynamic_micros));
        if let (Some(t), Some(x)) = (s.scratch_micros, s.speedup) {
            out.push_str(&format!(", from scratch: {t}us, speedup {x:.2}x"));
        }
        out.push('\n');
        out
    }
}

enum Engine {
    Rank(AGoodState),
    Reach(ReachDistState),
    Det(GenTutteState),
    TutteRank(TutteRankState),
}

/// What the engine is built from; kept in step with every applied batch.
#[derive(Clone)]
enum Instance {
    Matrix(Vec<Vec<u64>>, FieldPrime),
    Graph(Graph),
}

struct Answer {
    value: Value,
    candidate: Option<usize>,
    prime: Option<u64>,
    /// Witness edges to check, 0-based.
    witness: Option<Vec<(usize, usize)>>,
}

impl Answer {
    fn plain(value: Value) -> Self {
        Answer { value, candidate: None, prime: None, witness: None }
    }
}

struct Runner {
    mode: Mode,
    opts: RunOptions,
    inst: Instance,
    engine: Option<Engine>,
    report: Report,
    scratch: u64,
}

fn pairs_json(edges: &[(usize, usize)]) -> Value {
    json!(edges.iter().map(|&(a, b)| [a + 1, b + 1]).collect::<Vec<_>>())
}

fn dist_json(d: Option<u64>) -> Value {
    d.map_or_else(|| json!("inf"), |d| json!(d))
}

impl Runner {
    fn reach_cfg(&self) -> ReachConfig {
        let mut cfg = ReachConfig { seed: self.opts.seed, ..ReachConfig::default() };
        if let Some(e) = self.opts.epoch_len {
            cfg.epoch_len = e;
        }
        if let Some(k) = self.opts.max_candidates {
            cfg.max_candidates = k;
        }
        cfg
    }

    fn match_cfg(&self) -> MatchConfig {
        let mut cfg = MatchConfig { seed: self.opts.seed, ..MatchConfig::default() };
        if let Some(e) = self.opts.epoch_len {
            cfg.epoch_len = e;
        }
        if let Some(k) = self.opts.max_candidates {
            cfg.max_candidates = k;
        }
        cfg
    }

    fn build(&self, inst: &Instance) -> Result<Engine> {
        Ok(match (self.mode, inst) {
            (Mode::Rank, Instance::Matrix(a, p)) => Engine::Rank(AGoodState::init(a, *p)?),
            (Mode::Reach | Mode::Dist, Instance::Graph(g)) => Engine::Reach(ReachDistState::init(g, self.reach_cfg())?),
            (Mode::MatchDet, Instance::Graph(g)) => Engine::Det(GenTutteState::build(g, self.match_cfg())?),
            (Mode::MatchRank, Instance::Graph(g)) => Engine::TutteRank(TutteRankState::build(g, self.match_cfg())?),
            _ => return Err(Error::Parameter(format!("mode {} does not fit this scenario", self.mode))),
        })
    }

    /// The instance after `edits`, or an error naming the first bad edit.
    fn next_instance(&self, edits: &[Edit]) -> Result<(Instance, Option<EdgeBatch>, Option<EntryBatch>)> {
        match &self.inst {
            Instance::Matrix(a, p) => {
                let mut a = a.clone();
                let mut eb = EntryBatch::default();
                for e in edits {
                    let Edit::Set(i, j, v) = *e else { return Err(Error::Parameter("graph edit on a matrix".into())) };
                    a[i][j] = p.reduce_signed(v);
                    eb.updates.push((i, j, a[i][j]));
                }
                Ok((Instance::Matrix(a, *p), None, Some(eb)))
            }
            Instance::Graph(g) => {
                let mut batch = EdgeBatch::default();
                for e in edits {
                    match *e {
                        Edit::Ins(u, v, len) => batch.ins.push((u, v, len)),
                        Edit::Del(u, v) => batch.del.push((u, v)),
                        Edit::Set(..) => return Err(Error::Parameter("matrix edit on a graph".into())),
                    }
                }
                let mut next = g.clone();
                next.apply(&batch)?;
                Ok((Instance::Graph(next), Some(batch), None))
            }
        }
    }

    fn push(&mut self, mut r: Record) {
        r.query_id = self.report.records.len();
        if r.error.is_some() {
            self.report.summary.errors += 1;
        }
        match r.matched {
            Some(true) => self.report.summary.verified += 1,
            Some(false) => self.report.summary.mismatches += 1,
            None => {}
        }
        self.report.records.push(r);
    }

    fn failure(&mut self, batch: Option<usize>, query: String, e: &Error) {
        self.push(Record {
            query_id: 0,
            mode: self.mode,
            batch,
            query,
            answer: Value::Null,
            oracle: None,
            matched: None,
            micros: 0,
            candidate: None,
            prime: None,
            error: Some(e.to_string()),
        });
    }

    fn apply_batch(&mut self, k: usize, b: &Batch) {
        let (next, eb, rb) = match self.next_instance(&b.edits) {
            Ok(x) => x,
            Err(e) => return self.failure(Some(k), format!("batch at line {}", b.line), &e),
        };
        let load = k == 0 || self.engine.is_none();
        let t = Instant::now();
        let res = match (load, self.engine.as_mut()) {
            (true, _) | (_, None) => self.build(&next).map(|e| self.engine = Some(e)),
            (false, Some(Engine::Rank(st))) => st.apply_entry_batch(&rb.unwrap_or_default()),
            (false, Some(Engine::Reach(st))) => st.apply_edge_batch(&eb.unwrap_or_default()),
            (false, Some(Engine::Det(st))) => st.apply_edge_batch_det(&eb.unwrap_or_default()),
            (false, Some(Engine::TutteRank(st))) => st.apply_edge_batch_rank(&eb.unwrap_or_default()),
        };
        let micros = t.elapsed().as_micros() as u64;
        if let Err(e) = res {
            self.failure(Some(k), format!("batch at line {}", b.line), &e);
            // the engine may be part-way through an epoch; rebuild it on the unchanged instance
            self.engine = self.build(&self.inst).ok();
            return;
        }
        self.inst = next;
        if !load {
            self.report.summary.dynamic_micros += micros;
            if self.opts.timing {
                let t = Instant::now();
                let scratch = match &self.inst {
                    Instance::Matrix(a, p) => {
                        std::hint::black_box(rank_mod(a, *p));
                        Ok(())
                    }
                    inst => self.build(inst).map(|e| drop(std::hint::black_box(e))),
                };
                self.scratch += t.elapsed().as_micros() as u64;
                if let Err(e) = scratch {
                    self.failure(Some(k), "recompute from scratch".into(), &e);
                }
            }
        }
    }

    fn answer(&self, q: Query) -> Result<Answer> {
        let engine = self.engine.as_ref().ok_or_else(|| Error::Invariant("no engine".into()))?;
        match (q, engine) {
            (Query::Rank, Engine::Rank(st)) => {
                Ok(Answer { prime: Some(st.prime().get()), ..Answer::plain(json!(st.rank())) })
            }
            (Query::Reach(s, t), Engine::Reach(st)) => Ok(Answer::plain(json!(st.query_reach(s, t)?))),
            (Query::Dist(s, t), Engine::Reach(st)) => {
                let a = st.query_dist_detail(s, t)?;
                Ok(Answer { candidate: a.candidate, ..Answer::plain(dist_json(a.dist)) })
            }
            (Query::Path(s, t), Engine::Reach(st)) => match st.extract_path(s, t) {
                Ok(p) => Ok(Answer { witness: Some(p.clone()), ..Answer::plain(pairs_json(&p)) }),
                Err(Error::NoPath(..)) => Ok(Answer::plain(json!("none"))),
                Err(e) => Err(e),
            },
            (Query::Match, Engine::Det(st)) => {
                let a = st.query_mcm()?;
                Ok(Answer { candidate: Some(a.candidate), ..Answer::plain(json!(a.size)) })
            }
            (Query::Witness, Engine::Det(st)) => {
                let cand = st.query_mcm()?.candidate;
                let m = st.extract_matching()?;
                Ok(Answer { candidate: Some(cand), witness: Some(m.clone()), ..Answer::plain(pairs_json(&m)) })
            }
            (Query::Match, Engine::TutteRank(st)) => {
                let a = st.query_mcm_rank()?;
                Ok(Answer { candidate: Some(a.candidate), prime: Some(a.prime), ..Answer::plain(json!(a.size)) })
            }
            _ => Err(Error::Parameter(format!("query `{q}` is not answered in mode {}", self.mode))),
        }
    }

    /// Oracle value and whether the answer agrees; `None` when out of oracle range.
    fn check(&self, q: Query, a: &Answer) -> Result<Option<(Value, bool)>> {
        match (&self.inst, q) {
            (Instance::Matrix(m, p), Query::Rank) => {
                if m.len() > RANK_ORACLE_CAP {
                    return Ok(None);
                }
                let signed: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
                let r = oracle_rank(&signed, RankModulus::Prime(*p))?;
                Ok(Some((json!(r), a.value == json!(r))))
            }
            (Instance::Graph(g), Query::Reach(s, t)) => {
                let r = oracle_reach(g, s, t);
                Ok(Some((json!(r), a.value == json!(r))))
            }
            (Instance::Graph(g), Query::Dist(s, t)) => {
                let d = dist_json(oracle_dist(g, s, t));
                Ok(Some((d.clone(), a.value == d)))
            }
            (Instance::Graph(g), Query::Path(s, t)) => {
                let d = oracle_dist(g, s, t);
                let ok = match (&a.witness, d) {
                    (None, None) => true,
                    (Some(p), Some(d)) => path_length(g, s, t, p) == Some(d),
                    _ => false,
                };
                Ok(Some((dist_json(d), ok)))
            }
            (Instance::Graph(g), Query::Match) => {
                let r = oracle_mcm(g)?;
                Ok(Some((json!(r), a.value == json!(r))))
            }
            (Instance::Graph(g), Query::Witness) => {
                let r = oracle_mcm(g)?;
                let ok = a.witness.as_ref().is_some_and(|m| is_matching(g, m) && m.len() == r);
                Ok(Some((json!(r), ok)))
            }
            _ => Err(Error::Parameter(format!("no oracle for `{q}`"))),
        }
    }

    fn run_query(&mut self, batch: Option<usize>, q: Query) {
        let t = Instant::now();
        let ans = self.answer(q);
        let micros = t.elapsed().as_micros() as u64;
        let a = match ans {
            Ok(a) => a,
            Err(e) => return self.failure(batch, q.to_string(), &e),
        };
        let mut rec = Record {
            query_id: 0,
            mode: self.mode,
            batch,
            query: q.to_string(),
            answer: a.value.clone(),
            oracle: None,
            matched: None,
            micros,
            candidate: a.candidate,
            prime: a.prime,
            error: None,
        };
        if self.opts.verify {
            match self.check(q, &a) {
                Ok(Some((o, ok))) => {
                    rec.oracle = Some(o);
                    rec.matched = Some(ok);
                }
                Ok(None) => self.report.summary.unverified += 1,
                Err(e) => rec.error = Some(format!("oracle: {e}")),
            }
        }
        self.push(rec);
    }
}

/// Sum of lengths along `path` if it is an `s`-`t` walk in `g`.
fn path_length(g: &Graph, s: usize, t: usize, path: &[(usize, usize)]) -> Option<u64> {
    let mut at = s;
    let mut total = 0;
    for &(a, b) in path {
        if a != at {
            return None;
        }
        total += g.len(a, b)?;
        at = b;
    }
    (at == t).then_some(total)
}

fn is_matching(g: &Graph, m: &[(usize, usize)]) -> bool {
    let mut used = vec![false; g.n()];
    m.iter().all(|&(a, b)| {
        g.has_edge(a, b) && !std::mem::replace(&mut used[a], true) && !std::mem::replace(&mut used[b], true)
    })
}

/// Replays `sc` in `mode`. The first batch is loaded by building the engine;
/// every later batch goes through the dynamic update.
pub fn run_scenario(sc: &Scenario, mode: Mode, opts: &RunOptions) -> Result<Report> {
    let inst = match (sc.header, mode) {
        (Header::Matrix { n, p }, Mode::Rank) => Instance::Matrix(vec![vec![0; n]; n], FieldPrime::new(p)?),
        (Header::Graph { n, directed, .. }, Mode::Reach | Mode::Dist) => Instance::Graph(Graph::new(n, directed)),
        (Header::Graph { n, directed: false, .. }, Mode::MatchDet | Mode::MatchRank) => {
            Instance::Graph(Graph::new(n, false))
        }
        _ => return Err(Error::Parameter(format!("mode {mode} does not fit a {:?} scenario", sc.header))),
    };
    let mut r = Runner {
        mode,
        opts: opts.clone(),
        inst,
        engine: None,
        report: Report { records: Vec::new(), summary: Summary::default() },
        scratch: 0,
    };
    if !sc.prelude.is_empty() {
        r.engine = Some(r.build(&r.inst)?);
        for &q in &sc.prelude {
            r.run_query(None, q);
        }
    }
    for (k, b) in sc.batches.iter().enumerate() {
        r.apply_batch(k, b);
        for &q in &b.queries {
            r.run_query(Some(k), q);
        }
    }
    let s = &mut r.report.summary;
    s.batches = sc.batches.len();
    s.queries = sc.query_count();
    if opts.timing {
        s.scratch_micros = Some(r.scratch);
        s.speedup = Some(r.scratch as f64 / s.dynamic_micros.max(1) as f64);
    }
    Ok(r.report)
}
