//! Acceptance run: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use dyncover::cli::{gen_instance, GenParams, Header, Kind, Mode, Record};
use dyncover::dyn_vc::{DynVc, VcParams};
use dyncover::general_matching::{build_color_family, DynGeneralMcm, GeneralMatcher};
use dyncover::geometry::{GeomObject, ObjectId, Shape, ShapeFamily, Side, Update};
use dyncover::lp_kernel::{build_kernel, lift_cover, solve_fractional_vc};
use dyncover::matching::{rounds, BipartiteMatcher, DynMcm, Matching};
use dyncover::minpair::WeightedStore;
use dyncover::oracles::{
    exact_bipartite_mcm, exact_fractional_vc, exact_mcm_general, exact_mcm_small, exact_mis,
    exact_mvc, has_short_augmenting_path, hopcroft_karp, is_independent, is_matching,
    is_vertex_cover, min_pair_naive, ExplicitGraph, SMALL_MCM_LIMIT,
};
use dyncover::static_vc::{mis_fat, remove_triangles, separator, static_vc_fat, static_vc_rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BUDGET: u64 = 50_000_000;

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("MWU fractional cover quality", c1_mwu),
        ("LP kernel bounds", c2_kernel),
        ("min-pair store vs naive scan", c3_minpair),
        ("dynamic vertex cover", c4_dyn_vc),
        ("bipartite dynamic vertex cover", c5_bipartite_vc),
        ("layered augmentation invariant", c6_hopcroft_karp),
        ("dynamic bipartite matching", c7_dyn_mcm),
        ("color family separation", c8_colors),
        ("general matching", c9_general),
        ("static algorithms", c10_static),
        ("Konig and LP sandwich", c11_sandwich),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = run();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// Instances

fn disk(id: ObjectId, side: Side, x: f64, y: f64, r: f64) -> GeomObject {
    GeomObject::with_side(id, side, Shape::disk(x, y, r).unwrap())
}

fn random_side(rng: &mut ChaCha8Rng, bipartite: bool) -> Side {
    match (bipartite, rng.gen_bool(0.5)) {
        (false, _) => Side::None,
        (true, true) => Side::Left,
        (true, false) => Side::Right,
    }
}

fn random_disks(rng: &mut ChaCha8Rng, n: usize, bipartite: bool) -> Vec<GeomObject> {
    let span = 3.0 * (n as f64).sqrt();
    (0..n)
        .map(|i| {
            let side = random_side(rng, bipartite);
            disk(
                i,
                side,
                rng.gen_range(0.0..span),
                rng.gen_range(0.0..span),
                rng.gen_range(0.5..2.0),
            )
        })
        .collect()
}

fn random_rects(rng: &mut ChaCha8Rng, n: usize, bipartite: bool) -> Vec<GeomObject> {
    let span = 3.0 * (n as f64).sqrt();
    (0..n)
        .map(|i| {
            let side = random_side(rng, bipartite);
            let (x, y) = (rng.gen_range(0.0..span), rng.gen_range(0.0..span));
            let shape = Shape::rect(
                x,
                y,
                x + rng.gen_range(0.5..4.0),
                y + rng.gen_range(0.5..4.0),
            )
            .unwrap();
            GeomObject::with_side(i, side, shape)
        })
        .collect()
}

fn random_fat_boxes(rng: &mut ChaCha8Rng, n: usize, dim: usize, span: f64) -> Vec<GeomObject> {
    (0..n)
        .map(|i| {
            let s = rng.gen_range(0.5..2.0);
            let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..span)).collect();
            let hi: Vec<f64> = lo.iter().map(|x| x + s * rng.gen_range(0.7..1.0)).collect();
            GeomObject::new(i, Shape::boxed(&lo, &hi).unwrap())
        })
        .collect()
}

/// 50 disk and 50 rectangle instances with `n` cycling through 50, 100, 200.
fn lp_instances() -> Vec<Vec<GeomObject>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sizes = [50, 100, 200];
    let mut out: Vec<Vec<GeomObject>> = (0..50)
        .map(|i| random_disks(&mut rng, sizes[i % 3], false))
        .collect();
    out.extend((0..50).map(|i| random_rects(&mut rng, sizes[i % 3], false)));
    out
}

fn store_of(objs: &[GeomObject]) -> WeightedStore {
    let mut s = WeightedStore::for_family(objs[0].shape.family());
    for o in objs {
        s.insert_object(o, 1.0).unwrap();
    }
    s
}

fn indices(g: &ExplicitGraph, ids: &[ObjectId]) -> Vec<usize> {
    ids.iter().map(|&id| g.index_of(id).unwrap()).collect()
}

fn mvc_size(g: &ExplicitGraph) -> Result<usize, String> {
    exact_mvc(g, BUDGET)
        .map(|c| c.len())
        .map_err(|e| format!("exact cover oracle: {e}"))
}

fn matching_pairs(g: &ExplicitGraph, m: &Matching) -> Option<Vec<(usize, usize)>> {
    m.pairs()
        .iter()
        .map(|&(a, b)| Some((g.index_of(a)?, g.index_of(b)?)))
        .collect()
}

fn mate_vec(g: &ExplicitGraph, m: &Matching) -> Vec<Option<usize>> {
    (0..g.n())
        .map(|i| m.partner(g.id(i)).map(|p| g.index_of(p).unwrap()))
        .collect()
}

/// The first `steps` update records of a generated trace.
fn updates(header: Header, gp: &GenParams, seed: u64, steps: usize) -> Vec<Update> {
    gen_instance(header, steps, seed, gp)
        .unwrap()
        .records
        .into_iter()
        .filter_map(|r| match r {
            Record::Insert(o) => Some(Update::Insert(o)),
            Record::Delete(id) => Some(Update::Delete(id)),
            Record::Query => None,
        })
        .take(steps)
        .collect()
}

fn churn(range: f64, max_live: usize) -> GenParams {
    GenParams {
        range,
        churn: 0.5,
        max_live: Some(max_live),
        ..GenParams::default()
    }
}

fn apply_live(live: &mut BTreeMap<ObjectId, GeomObject>, u: &Update) {
    match *u {
        Update::Insert(o) => {
            live.insert(o.id, o);
        }
        Update::Delete(id) => {
            live.remove(&id);
        }
    }
}

fn edge(a: &GeomObject, b: &GeomObject, bipartite: bool) -> bool {
    (!bipartite || a.side != b.side) && a.intersects(b)
}

// ---------------------------------------------------------------------------
// 1

fn c1_mwu() -> Outcome {
    let delta = 0.1;
    let (mut worst, mut iters, mut attempts) = (0.0f64, 0u64, 0usize);
    for objs in lp_instances() {
        let n = objs.len();
        let g = ExplicitGraph::from_objects(&objs);
        let mut s = store_of(&objs);
        let (c, att) = solve_fractional_vc(&mut s, delta).map_err(|e| e.to_string())?;
        for (i, j) in g.edges() {
            let (a, b) = (g.id(i), g.id(j));
            check!(c.x(a) + c.x(b) >= 1.0 - 1e-9, "edge ({a}, {b}) uncovered");
        }
        let lp = exact_fractional_vc(&g).0;
        check!(
            c.size() <= (1.0 + 5.0 * delta) * lp + 1e-9,
            "n={n}: size {} vs LP {lp}",
            c.size()
        );
        if lp > 0.0 {
            worst = worst.max(c.size() / lp);
        }
        let denom = (1.0 + delta).ln() - delta / (1.0 + delta);
        for a in &att {
            let cap = (a.z * (n as f64).ln() / denom).ceil() as u64;
            check!(
                a.iterations <= cap,
                "n={n}: {} iterations over cap {cap} at z={}",
                a.iterations,
                a.z
            );
            iters = iters.max(a.iterations);
            attempts += 1;
        }
    }
    Ok(format!(
        "100 instances, worst size/LP {worst:.4} <= {:.2}, {attempts} attempts, max iterations {iters}",
        1.0 + 5.0 * delta
    ))
}

// ---------------------------------------------------------------------------
// 2

fn c2_kernel() -> Outcome {
    let (gamma, delta) = (0.2, 0.02);
    let (mut k_ratio, mut lift_ratio) = (0.0f64, 0.0f64);
    for objs in lp_instances() {
        let g = ExplicitGraph::from_objects(&objs);
        let mut s = store_of(&objs);
        let (c, _) = solve_fractional_vc(&mut s, delta).map_err(|e| e.to_string())?;
        let k = build_kernel(&c, &s, gamma, delta).map_err(|e| e.to_string())?;
        let sum_x: f64 = objs.iter().map(|o| c.x(o.id)).sum();
        check!(
            k.k.len() as f64 <= sum_x / k.alpha + 1e-6,
            "|K| = {} > sum x / alpha = {}",
            k.k.len(),
            sum_x / k.alpha
        );
        let opt = mvc_size(&g)?;
        check!(
            k.k.len() as f64 <= 2.6 * opt as f64,
            "|K| = {} > 2.6 * {opt}",
            k.k.len()
        );
        let gk = g.induced(&indices(&g, &k.k));
        let sk: Vec<ObjectId> = exact_mvc(&gk, BUDGET)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|i| gk.id(i))
            .collect();
        let lifted = lift_cover(&k, &sk);
        check!(
            is_vertex_cover(&g, &indices(&g, &lifted)),
            "lifted kernel cover is not a cover"
        );
        check!(
            lifted.len() as f64 <= 1.25 * opt as f64,
            "lifted {} > 1.25 * {opt}",
            lifted.len()
        );
        if opt > 0 {
            k_ratio = k_ratio.max(k.k.len() as f64 / opt as f64);
            lift_ratio = lift_ratio.max(lifted.len() as f64 / opt as f64);
        }
    }
    Ok(format!(
        "100 instances, worst |K|/MVC {k_ratio:.3} <= 2.6, worst lift/MVC {lift_ratio:.3} <= 1.25"
    ))
}

// ---------------------------------------------------------------------------
// 3

/// Weighted objects with explicit adjacency lists.
struct NaiveStore {
    objs: BTreeMap<ObjectId, (Shape, f64)>,
    adj: HashMap<ObjectId, Vec<ObjectId>>,
}

impl NaiveStore {
    fn insert(&mut self, id: ObjectId, shape: Shape, w: f64) {
        let nbrs: Vec<ObjectId> = self
            .objs
            .iter()
            .filter(|(_, (s, _))| s.intersects(&shape))
            .map(|(&j, _)| j)
            .collect();
        for &j in &nbrs {
            self.adj.get_mut(&j).unwrap().push(id);
        }
        self.adj.insert(id, nbrs);
        self.objs.insert(id, (shape, w));
    }

    fn delete(&mut self, id: ObjectId) {
        self.objs.remove(&id);
        for j in self.adj.remove(&id).unwrap() {
            self.adj.get_mut(&j).unwrap().retain(|&k| k != id);
        }
    }

    fn min_sum(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (&a, nbrs) in &self.adj {
            let wa = self.objs[&a].1;
            for &b in nbrs {
                if a < b {
                    let s = wa + self.objs[&b].1;
                    best = Some(best.map_or(s, |x| x.min(s)));
                }
            }
        }
        best
    }
}

fn c3_minpair() -> Outcome {
    const OPS: usize = 100_000;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let family = ShapeFamily::Box(2);
    let mut store = WeightedStore::for_family(family);
    let mut naive = NaiveStore {
        objs: BTreeMap::new(),
        adj: HashMap::new(),
    };
    let mut live: Vec<ObjectId> = Vec::new();
    let mut next = 0;
    let weight = |rng: &mut ChaCha8Rng| -> f64 {
        if rng.gen_bool(0.5) {
            rng.gen_range(1..8) as f64 * 0.5
        } else {
            rng.gen_range(0.1..5.0)
        }
    };
    let (mut counts, mut full_scans) = ([0usize; 3], 0);
    for op in 0..OPS {
        let roll: f64 = rng.gen();
        let kind = if live.len() < 250 || (live.len() < 350 && roll < 0.3) {
            0
        } else if roll < 0.6 {
            1
        } else {
            2
        };
        counts[kind] += 1;
        match kind {
            0 => {
                let (x, y) = (rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0));
                let shape = Shape::rect(
                    x,
                    y,
                    x + rng.gen_range(0.5..4.0),
                    y + rng.gen_range(0.5..4.0),
                )
                .unwrap();
                let w = weight(&mut rng);
                store.insert(next, shape, w).map_err(|e| e.to_string())?;
                naive.insert(next, shape, w);
                live.push(next);
                next += 1;
            }
            1 => {
                let id = live.swap_remove(rng.gen_range(0..live.len()));
                store.delete(id).map_err(|e| e.to_string())?;
                naive.delete(id);
            }
            _ => {
                let id = live[rng.gen_range(0..live.len())];
                let w = weight(&mut rng);
                store.set_weight(id, w).map_err(|e| e.to_string())?;
                naive.objs.get_mut(&id).unwrap().1 = w;
            }
        }
        let got = store.min_pair();
        let want = naive.min_sum();
        match (got, want) {
            (None, None) => {}
            (Some(p), Some(sum)) => {
                let (wa, wb) = (naive.objs[&p.a].1, naive.objs[&p.b].1);
                let (sa, sb) = (naive.objs[&p.a].0, naive.objs[&p.b].0);
                check!(
                    p.a != p.b && sa.intersects(&sb) && wa + wb == p.sum && p.sum == sum,
                    "op {op}: store {p:?}, naive minimum {sum}"
                );
            }
            other => return Err(format!("op {op}: store/naive disagree {other:?}")),
        }
        if op % 1000 == 0 {
            let snapshot: Vec<(ObjectId, Shape, f64)> =
                naive.objs.iter().map(|(&id, &(s, w))| (id, s, w)).collect();
            let scan = min_pair_naive(&snapshot).map(|t| t.2);
            check!(scan == want, "op {op}: quadratic scan {scan:?} vs {want:?}");
            full_scans += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check!(secs < 60.0, "took {secs:.1}s");
    Ok(format!(
        "{OPS} ops ({} inserts, {} deletes, {} reweights), {full_scans} quadratic scans, {secs:.1}s < 60s",
        counts[0], counts[1], counts[2]
    ))
}

// ---------------------------------------------------------------------------
// 4, 5

struct VcRun {
    max_ratio: f64,
    samples: usize,
    rebuilds: u64,
    ledger: f64,
    store_avg: f64,
    store_bound: f64,
}

fn run_vc(
    header: Header,
    gp: &GenParams,
    params: VcParams,
    seed: u64,
    steps: usize,
    bound: f64,
    oracle: bool,
) -> Result<VcRun, String> {
    let ups = updates(header, gp, seed, steps);
    let bipartite = header.bipartite;
    let mut vc = DynVc::new(header.family(), params).map_err(|e| e.to_string())?;
    let mut live = BTreeMap::new();
    let (mut max_ratio, mut samples, mut max_live) = (1.0f64, 0, 1usize);
    let (mut calm_steps, mut calm_updates) = (0u64, 0u64);
    for (step, u) in ups.iter().enumerate() {
        apply_live(&mut live, u);
        max_live = max_live.max(live.len());
        let before = vc.store_updates();
        let rebuilt = vc.apply(*u).map_err(|e| e.to_string())?;
        if !rebuilt {
            calm_steps += 1;
            calm_updates += vc.store_updates() - before;
        }
        if !oracle && step % 25 != 0 {
            continue;
        }
        let cover: std::collections::HashSet<ObjectId> = vc.cover().into_iter().collect();
        let open: Vec<&GeomObject> = live.values().filter(|o| !cover.contains(&o.id)).collect();
        for (i, a) in open.iter().enumerate() {
            for b in &open[i + 1..] {
                check!(
                    !edge(a, b, bipartite),
                    "step {step}: edge ({}, {}) uncovered",
                    a.id,
                    b.id
                );
            }
        }
        if oracle && (step + 1) % 100 == 0 {
            let objs: Vec<GeomObject> = live.values().copied().collect();
            let opt = if bipartite {
                exact_bipartite_mcm(&ExplicitGraph::bipartite_from_objects(&objs))
                    .map_err(|e| e.to_string())?
                    .len()
            } else {
                mvc_size(&ExplicitGraph::from_objects(&objs))?
            };
            let ratio = if opt == 0 {
                if cover.is_empty() {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                cover.len() as f64 / opt as f64
            };
            check!(
                ratio <= bound + 1e-9,
                "step {step}: cover {} vs opt {opt}",
                cover.len()
            );
            max_ratio = max_ratio.max(ratio);
            samples += 1;
        }
    }
    let st = vc.stats();
    let eps = vc.params().eps;
    let ledger = ups.len() as f64 / (eps * st.b_min as f64).ceil() + st.guess_switches as f64;
    check!(
        st.rebuilds as f64 <= ledger,
        "{} rebuilds over ledger {ledger}",
        st.rebuilds
    );
    let store_avg = calm_updates as f64 / calm_steps.max(1) as f64;
    let store_bound = 4.0 * (max_live as f64 + 1.0).log2() + 4.0;
    check!(
        store_avg <= store_bound,
        "{store_avg:.1} store updates per update over {store_bound:.1}"
    );
    Ok(VcRun {
        max_ratio,
        samples,
        rebuilds: st.rebuilds,
        ledger,
        store_avg,
        store_bound,
    })
}

fn describe_vc(name: &str, bound: f64, r: &VcRun) -> String {
    format!(
        "{name} ratio {:.3} <= {bound:.2} over {} samples, rebuilds {} <= {:.0}, store updates/step {:.1} <= {:.1}",
        r.max_ratio, r.samples, r.rebuilds, r.ledger, r.store_avg, r.store_bound
    )
}

fn c4_dyn_vc() -> Outcome {
    let cases = [
        ("disks", Kind::Disk, 2, 0.3, "disks", 20.0, 1.0 + 3.0 * 0.3),
        ("rects", Kind::Rect, 2, 0.3, "rect", 20.0, 1.5 + 3.0 * 0.3),
        ("boxes3", Kind::Box, 3, 0.5, "fat", 8.0, 1.0 + 3.0 * 0.5),
    ];
    let mut out = Vec::new();
    for (i, &(name, kind, dim, eps, preset, range, bound)) in cases.iter().enumerate() {
        let header = Header::new(Mode::Vc, kind, dim, false).unwrap();
        let params = VcParams::preset(preset, eps).map_err(|e| e.to_string())?;
        let r = run_vc(
            header,
            &churn(range, 150),
            params,
            40 + i as u64,
            5000,
            bound,
            true,
        )
        .map_err(|e| format!("{name}: {e}"))?;
        out.push(describe_vc(name, bound, &r));
    }
    let header = Header::new(Mode::Vc, Kind::Disk, 2, false).unwrap();
    let params = VcParams::disks(0.3).map_err(|e| e.to_string())?;
    let grow = GenParams {
        churn: 0.2,
        ..churn(65.0, 1500)
    };
    let r = run_vc(header, &grow, params, 49, 6000, f64::INFINITY, false)
        .map_err(|e| format!("1500 live disks: {e}"))?;
    out.push(format!(
        "1500 live disks: rebuilds {} <= {:.0}, store updates/step {:.1} <= {:.1}",
        r.rebuilds, r.ledger, r.store_avg, r.store_bound
    ));
    Ok(out.join("; "))
}

fn c5_bipartite_vc() -> Outcome {
    let eps = 0.2;
    let bound = 1.0 + 3.0 * eps;
    let cases = [
        ("disks", Kind::Disk, 2, 20.0),
        ("boxes3", Kind::Box, 3, 8.0),
    ];
    let mut out = Vec::new();
    for (i, &(name, kind, dim, range)) in cases.iter().enumerate() {
        let header = Header::new(Mode::Vc, kind, dim, true).unwrap();
        let params = VcParams::bipartite(eps).map_err(|e| e.to_string())?;
        let r = run_vc(
            header,
            &churn(range, 150),
            params,
            50 + i as u64,
            5000,
            bound,
            true,
        )
        .map_err(|e| format!("{name}: {e}"))?;
        out.push(describe_vc(name, bound, &r));
    }
    Ok(out.join("; "))
}

// ---------------------------------------------------------------------------
// 6, 7

fn c6_hopcroft_karp() -> Outcome {
    let eps = 0.25;
    let l = rounds(eps);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 1.0f64;
    for inst in 0..30 {
        let n = rng.gen_range(40..=200);
        let objs = if inst % 2 == 0 {
            random_disks(&mut rng, n, true)
        } else {
            random_rects(&mut rng, n, true)
        };
        let g = ExplicitGraph::bipartite_from_objects(&objs);
        let mut matcher = BipartiteMatcher::new(objs[0].shape.family()).unwrap();
        for o in &objs {
            matcher.insert(*o).map_err(|e| e.to_string())?;
        }
        let mut fault: Option<String> = None;
        let m = matcher
            .approx_mcm_traced(eps, |ell, m, _| {
                let ok = matching_pairs(&g, m).is_some_and(|p| is_matching(&g, &p));
                let mate = mate_vec(&g, m);
                let short = has_short_augmenting_path(&g, &mate, 2 * ell + 1, &vec![false; g.n()]);
                if fault.is_none() && (!ok || short) {
                    fault = Some(format!(
                        "instance {inst} round {ell}: valid={ok}, short path={short}"
                    ));
                }
            })
            .map_err(|e| e.to_string())?;
        if let Some(f) = fault {
            return Err(f);
        }
        let opt = exact_bipartite_mcm(&g).map_err(|e| e.to_string())?.len();
        check!(
            m.len() * (l + 2) >= opt * (l + 1),
            "instance {inst}: |M| = {} vs exact {opt}",
            m.len()
        );
        if opt > 0 {
            worst = worst.min(m.len() as f64 / opt as f64);
        }
    }
    Ok(format!(
        "30 instances, {l} rounds, no short augmenting paths, worst |M|/exact {worst:.3} >= {:.3}",
        (l + 1) as f64 / (l + 2) as f64
    ))
}

fn matching_valid(m: &Matching, live: &BTreeMap<ObjectId, GeomObject>, bipartite: bool) -> bool {
    let mut seen = std::collections::HashSet::new();
    m.pairs()
        .iter()
        .all(|&(a, b)| match (live.get(&a), live.get(&b)) {
            (Some(x), Some(y)) => {
                a != b && seen.insert(a) && seen.insert(b) && edge(x, y, bipartite)
            }
            _ => false,
        })
}

fn exact_matching_size(objs: &[GeomObject], bipartite: bool) -> Result<usize, String> {
    let r = if bipartite {
        exact_bipartite_mcm(&ExplicitGraph::bipartite_from_objects(objs))
    } else {
        exact_mcm_general(&ExplicitGraph::from_objects(objs))
    };
    r.map(|p| p.len()).map_err(|e| e.to_string())
}

/// Replays a matching trace, checking validity every step and `opt <= size / (1 - 3 eps)` at samples.
fn run_matching(
    ups: &[Update],
    bipartite: bool,
    eps: f64,
    mut apply: impl FnMut(Update) -> Result<Matching, String>,
) -> Result<(f64, usize), String> {
    let mut live = BTreeMap::new();
    let (mut worst, mut samples) = (1.0f64, 0);
    for (step, u) in ups.iter().enumerate() {
        apply_live(&mut live, u);
        let m = apply(*u)?;
        check!(
            matching_valid(&m, &live, bipartite),
            "step {step}: invalid matching"
        );
        if (step + 1) % 100 == 0 {
            let objs: Vec<GeomObject> = live.values().copied().collect();
            let opt = exact_matching_size(&objs, bipartite)?;
            check!(
                m.len() as f64 >= (1.0 - 3.0 * eps) * opt as f64,
                "step {step}: |M| = {} vs exact {opt}",
                m.len()
            );
            if opt > 0 {
                worst = worst.min(m.len() as f64 / opt as f64);
            }
            samples += 1;
        }
    }
    Ok((worst, samples))
}

fn c7_dyn_mcm() -> Outcome {
    let eps = 0.25;
    let mut out = Vec::new();
    for (i, (name, kind)) in [("disks", Kind::Disk), ("rects", Kind::Rect)]
        .into_iter()
        .enumerate()
    {
        let header = Header::new(Mode::Mcm, kind, 2, true).unwrap();
        let ups = updates(header, &churn(20.0, 150), 70 + i as u64, 5000);
        let mut dm = DynMcm::new(header.family(), eps).map_err(|e| e.to_string())?;
        let (worst, samples) = run_matching(&ups, true, eps, |u| {
            dm.update(u).map_err(|e| e.to_string())?;
            Ok(dm.matching().clone())
        })
        .map_err(|e| format!("{name}: {e}"))?;
        out.push(format!(
            "{name} worst |M|/exact {worst:.3} >= {:.2} over {samples} samples, {} rebuilds",
            1.0 - 3.0 * eps,
            dm.rebuilds()
        ));
    }
    Ok(out.join("; "))
}

// ---------------------------------------------------------------------------
// 8

fn c8_colors() -> Outcome {
    let mut largest = 0;
    for n in 4..=16usize {
        for ell in 1..=4usize {
            let f = build_color_family(n, ell, (n * 10 + ell) as u64).map_err(|e| e.to_string())?;
            let cap = (1u64 << ell) as f64 * (ell + 2) as f64 * (n as f64).ln() + 1.0;
            check!(
                f.len() as f64 <= cap,
                "n={n} ell={ell}: {} subsets > {cap:.1}",
                f.len()
            );
            for t in 1u32..(1 << n) {
                let k = t.count_ones() as usize;
                if k > ell {
                    continue;
                }
                let labels: Vec<usize> = (0..n).filter(|&i| t >> i & 1 == 1).collect();
                let mut seen = vec![false; 1 << k];
                for z in 0..f.len() {
                    let trace = labels
                        .iter()
                        .enumerate()
                        .filter(|&(_, &x)| f.contains(z, x))
                        .fold(0usize, |acc, (j, _)| acc | 1 << j);
                    seen[trace] = true;
                }
                check!(
                    seen.iter().all(|&s| s),
                    "n={n} ell={ell}: labels {labels:?} not shattered"
                );
            }
            largest = largest.max(f.len());
        }
    }
    Ok(format!(
        "52 (n, ell) pairs shatter every label set of size <= ell, largest family {largest}"
    ))
}

// ---------------------------------------------------------------------------
// 9

fn general_static(objs: &[GeomObject], eps: f64, seed: u64) -> Result<Matching, String> {
    let mut m =
        GeneralMatcher::new(objs[0].shape.family(), eps, seed).map_err(|e| e.to_string())?;
    for o in objs {
        m.insert(*o).map_err(|e| e.to_string())?;
    }
    m.approx_mcm_general().map_err(|e| e.to_string())
}

fn c9_general() -> Outcome {
    let eps = 0.25;
    let tri = vec![
        disk(0, Side::None, 0.0, 0.0, 1.0),
        disk(1, Side::None, 1.0, 0.0, 1.0),
        disk(2, Side::None, 0.5, 0.8, 1.0),
    ];
    let pentagon: Vec<GeomObject> = (0..5)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / 5.0;
            disk(i, Side::None, a.cos(), a.sin(), 0.75)
        })
        .collect();
    check!(
        ExplicitGraph::from_objects(&pentagon).edge_count() == 5,
        "pentagon is not a 5-cycle"
    );
    let t = general_static(&tri, eps, 1)?.len();
    let p = general_static(&pentagon, eps, 1)?.len();
    check!(t == 1 && p == 2, "triangle -> {t}, 5-cycle -> {p}");

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 1.0f64;
    for inst in 0..30 {
        let n = rng.gen_range(10..=100);
        let objs = if inst % 2 == 0 {
            random_disks(&mut rng, n, false)
        } else {
            random_rects(&mut rng, n, false)
        };
        let g = ExplicitGraph::from_objects(&objs);
        let opt = exact_mcm_general(&g).map_err(|e| e.to_string())?.len();
        if n <= SMALL_MCM_LIMIT {
            let small = exact_mcm_small(&g).map_err(|e| e.to_string())?.len();
            check!(
                small == opt,
                "instance {inst}: oracles disagree {small} vs {opt}"
            );
        }
        let m = general_static(&objs, eps, inst)?;
        check!(
            matching_pairs(&g, &m).is_some_and(|p| is_matching(&g, &p)),
            "instance {inst}: invalid matching"
        );
        check!(
            m.len() as f64 >= (1.0 - eps) * opt as f64,
            "instance {inst}: |M| = {} vs exact {opt}",
            m.len()
        );
        if opt > 0 {
            worst = worst.min(m.len() as f64 / opt as f64);
        }
    }

    let header = Header::new(Mode::Mcmg, Kind::Disk, 2, false).unwrap();
    let ups = updates(header, &churn(12.0, 60), 90, 3000);
    let mut dm = DynGeneralMcm::new(header.family(), eps, 9).map_err(|e| e.to_string())?;
    let (dyn_worst, samples) = run_matching(&ups, false, eps, |u| {
        dm.update(u).map_err(|e| e.to_string())?;
        Ok(dm.matching().clone())
    })?;
    Ok(format!(
        "triangle 1, 5-cycle 2; 30 instances worst |M|/exact {worst:.3} >= {:.2}; 3000-step trace worst {dyn_worst:.3} >= {:.2} over {samples} samples",
        1.0 - eps,
        1.0 - 3.0 * eps
    ))
}

// ---------------------------------------------------------------------------
// 10

fn depth_by_probing(rects: &[&GeomObject]) -> usize {
    let boxes: Vec<_> = rects.iter().map(|o| *o.shape.as_box().unwrap()).collect();
    let xs: Vec<f64> = boxes.iter().flat_map(|b| [b.lo()[0], b.hi()[0]]).collect();
    let ys: Vec<f64> = boxes.iter().flat_map(|b| [b.lo()[1], b.hi()[1]]).collect();
    let mut best = 0;
    for &x in &xs {
        for &y in &ys {
            best = best.max(boxes.iter().filter(|b| b.contains_point(&[x, y])).count());
        }
    }
    best
}

fn c10_static() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    let eps = 0.5;
    let mut max_gap = 0usize;
    for inst in 0..30 {
        let n = rng.gen_range(20..=80);
        let objs = if inst % 2 == 0 {
            random_disks(&mut rng, n, false)
        } else {
            random_fat_boxes(&mut rng, n, 2, 2.0 * (n as f64).sqrt())
        };
        let g = ExplicitGraph::from_objects(&objs);
        let mis = mis_fat(&objs, eps).map_err(|e| e.to_string())?;
        check!(
            is_independent(&g, &indices(&g, &mis)),
            "instance {inst}: mis_fat output not independent"
        );
        let opt = exact_mis(&g, BUDGET).map_err(|e| e.to_string())?.len();
        let allowed = (eps * n as f64).ceil() as usize;
        check!(
            mis.len() + allowed >= opt,
            "instance {inst}: MIS {} vs exact {opt}, allowed gap {allowed}",
            mis.len()
        );
        let cover = static_vc_fat(&objs, eps).map_err(|e| e.to_string())?;
        check!(
            is_vertex_cover(&g, &indices(&g, &cover)),
            "instance {inst}: complement is not a cover"
        );
        max_gap = max_gap.max(opt.saturating_sub(mis.len()));
    }

    let mut worst_cross = 0.0f64;
    for inst in 0..100 {
        let n = rng.gen_range(20..=300);
        let (objs, d) = match inst % 3 {
            0 => (random_disks(&mut rng, n, false), 2),
            1 => (random_fat_boxes(&mut rng, n, 2, 2.0 * (n as f64).sqrt()), 2),
            _ => (random_fat_boxes(&mut rng, n, 3, 2.0 * (n as f64).cbrt()), 3),
        };
        let sep = separator(&objs).map_err(|e| e.to_string())?;
        let parts = sep.inside.len() + sep.outside.len() + sep.crossing.len();
        check!(parts == n, "instance {inst}: {parts} classified of {n}");
        let cap = (1.0 - sep.beta) * n as f64 + 1e-9;
        check!(
            sep.beta > 0.0 && sep.inside.len() as f64 <= cap && sep.outside.len() as f64 <= cap,
            "instance {inst}: inside {} outside {} beta {}",
            sep.inside.len(),
            sep.outside.len(),
            sep.beta
        );
        let crossing: std::collections::HashSet<ObjectId> = sep.crossing.iter().copied().collect();
        for o in &objs {
            let on_boundary = o.shape.meets_box(&sep.cube) && !o.shape.inside_open_box(&sep.cube);
            check!(
                on_boundary == crossing.contains(&o.id),
                "instance {inst}: object {} misclassified",
                o.id
            );
        }
        let scale = (n as f64).powf(1.0 - 1.0 / d as f64);
        worst_cross = worst_cross.max(sep.crossing.len() as f64 / scale);
    }
    check!(
        worst_cross <= 4.0,
        "crossing count {worst_cross:.2} n^(1-1/d) above 4 n^(1-1/d)"
    );

    let rect_eps = 0.2;
    let rect_bound = 1.5 + 3.0 * rect_eps;
    let (mut promised, mut worst_rect) = (0, 0.0f64);
    let mut attempts = 0;
    while promised < 30 && attempts < 500 {
        attempts += 1;
        let n = rng.gen_range(20..=60);
        let objs = random_rects(&mut rng, n, false);
        let g = ExplicitGraph::from_objects(&objs);
        let opt = mvc_size(&g)?;
        let cover = static_vc_rect(&objs, rect_eps).map_err(|e| e.to_string())?;
        check!(
            is_vertex_cover(&g, &indices(&g, &cover)),
            "rect cover invalid"
        );
        if opt == 0 || n as f64 > (2.0 + 3.0 * rect_eps) * opt as f64 {
            continue;
        }
        promised += 1;
        let ratio = cover.len() as f64 / opt as f64;
        check!(
            ratio <= rect_bound + 1e-9,
            "rect cover {} vs exact {opt} on {n}",
            cover.len()
        );
        worst_rect = worst_rect.max(ratio);
    }
    check!(
        promised == 30,
        "only {promised} promise-conforming instances"
    );

    for inst in 0..30 {
        let objs = random_rects(&mut rng, 100, false);
        let out = remove_triangles(&objs).map_err(|e| e.to_string())?;
        let by_id: HashMap<ObjectId, &GeomObject> = objs.iter().map(|o| (o.id, o)).collect();
        let rest: Vec<&GeomObject> = out.rest.iter().map(|id| by_id[id]).collect();
        let depth = depth_by_probing(&rest);
        check!(depth <= 2, "instance {inst}: remaining depth {depth}");
        for t in &out.triangles {
            let [a, b, c] = t.map(|id| by_id[&id]);
            check!(
                a.intersects(b) && b.intersects(c) && a.intersects(c),
                "instance {inst}: removed triple {t:?} is not a triangle"
            );
        }
        check!(
            out.rest.len() + 3 * out.triangles.len() == objs.len(),
            "instance {inst}: objects lost"
        );
    }

    Ok(format!(
        "MIS gap <= {max_gap} (allowed ceil(eps n)); 100 separators balanced, crossing <= {worst_cross:.2} n^(1-1/d); \
         rect ratio {worst_rect:.3} <= {rect_bound:.2} on 30 promise instances; 30 triangle removals depth <= 2"
    ))
}

// ---------------------------------------------------------------------------
// 11

fn random_graph(rng: &mut ChaCha8Rng, bipartite: bool) -> ExplicitGraph {
    let n = rng.gen_range(4..=30);
    let p = rng.gen_range(0.05..0.4);
    let sides: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if (!bipartite || sides[i] != sides[j]) && rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let g = ExplicitGraph::from_edges(n, &edges);
    if bipartite {
        let tags = sides
            .iter()
            .map(|&l| if l { Side::Left } else { Side::Right })
            .collect();
        g.with_sides(tags)
    } else {
        g
    }
}

/// Half the maximum matching of the bipartite double cover.
fn lp_by_double_cover(g: &ExplicitGraph) -> f64 {
    let adj: Vec<Vec<usize>> = (0..g.n()).map(|i| g.neighbors(i).to_vec()).collect();
    let (ml, _) = hopcroft_karp(g.n(), g.n(), &adj);
    ml.iter().flatten().count() as f64 / 2.0
}

fn c11_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut edges = 0;
    for inst in 0..100 {
        let bipartite = inst % 2 == 0;
        let g = random_graph(&mut rng, bipartite);
        edges += g.edge_count();
        let mvc = mvc_size(&g)?;
        let mcm = exact_mcm_general(&g).map_err(|e| e.to_string())?.len();
        let lp = exact_fractional_vc(&g).0;
        let lp2 = lp_by_double_cover(&g);
        check!(
            (lp - lp2).abs() < 1e-6,
            "graph {inst}: LP {lp} vs double cover {lp2}"
        );
        if bipartite {
            let hk = exact_bipartite_mcm(&g).map_err(|e| e.to_string())?.len();
            check!(
                mvc == hk && hk == mcm,
                "graph {inst}: MVC {mvc}, MCM {hk}/{mcm}"
            );
        }
        check!(
            mcm as f64 <= lp + 1e-9 && lp <= mvc as f64 + 1e-9 && mvc as f64 <= 2.0 * lp + 1e-9,
            "graph {inst}: MCM {mcm}, LP {lp}, MVC {mvc}"
        );
    }
    Ok(format!(
        "100 graphs ({edges} edges): König on 50 bipartite, MCM <= LP <= MVC <= 2 LP on all"
    ))
}
