#![allow(dead_code)]

use std::collections::BTreeSet;

use boycott_testkit::oracle;
use boycottctl::{default_kinds, OwnershipGraph};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const KINDS: [&str; 3] = ["subsidiary", "brand", "minority_stake"];

pub struct RandomGraph {
    pub text: String,
    pub n: usize,
    pub edges: Vec<(usize, usize, &'static str)>,
    pub names: Vec<Vec<String>>,
    pub domains: Vec<Vec<String>>,
}

/// Up to `max_nodes` entities with random edges; self loops and cycles are
/// as likely as anything else. Domains are written in mixed case with a
/// `www.` prefix so parsing has to normalize them.
pub fn random_graph(rng: &mut StdRng, max_nodes: usize) -> RandomGraph {
    let n = rng.gen_range(1..=max_nodes);
    let mut text = String::from("# random ownership graph\n");
    let mut names = Vec::new();
    let mut domains = Vec::new();
    for i in 0..n {
        let doms: Vec<String> = (0..rng.gen_range(0..3)).map(|k| format!("e{i}x{k}.com")).collect();
        let aliases: Vec<String> = (0..rng.gen_range(0..3)).map(|k| format!("Alias {i}-{k}")).collect();
        let written: Vec<String> = doms.iter().map(|d| format!("www.{}", d.to_uppercase())).collect();
        text.push_str(&format!("node\te{i}\tEntity {i}\t{}\t{}\n", written.join("|"), aliases.join("|")));
        let mut kw = vec![format!("Entity {i}")];
        kw.extend(aliases);
        names.push(kw);
        domains.push(doms);
    }
    let mut edges = Vec::new();
    for _ in 0..rng.gen_range(0..=2 * n) {
        let e = (rng.gen_range(0..n), rng.gen_range(0..n), KINDS[rng.gen_range(0..KINDS.len())]);
        text.push_str(&format!("edge\te{}\te{}\t{}\n", e.0, e.1, e.2));
        edges.push(e);
    }
    RandomGraph { text, n, edges, names, domains }
}

/// Expansion of a random graph from random roots against the fixpoint
/// reachability oracle.
pub fn check_expansion(seed: u64, max_nodes: usize) -> Result<(usize, usize), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let g = random_graph(&mut rng, max_nodes);
    let parsed = OwnershipGraph::parse(&g.text).map_err(|e| format!("seed {seed}: {e}"))?;
    let roots: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..g.n)).collect();
    let root_ids: Vec<String> = roots.iter().map(|r| format!("e{r}")).collect();
    let kinds = default_kinds();
    let followed: Vec<(usize, usize)> =
        g.edges.iter().filter(|e| kinds.contains(e.2)).map(|e| (e.0, e.1)).collect();
    let want = oracle::reachable(&followed, &roots);
    let got = parsed.expand_targets(&root_ids, &kinds).map_err(|e| format!("seed {seed}: {e}"))?;
    let want_ids: BTreeSet<String> = want.iter().map(|i| format!("e{i}")).collect();
    let want_kw: BTreeSet<String> = want.iter().flat_map(|i| g.names[*i].clone()).collect();
    let want_dom: BTreeSet<String> = want.iter().flat_map(|i| g.domains[*i].clone()).collect();
    if got.entities != want_ids || got.keywords != want_kw || got.domains != want_dom {
        return Err(format!("seed {seed}: got {:?}, want {want_ids:?}", got.entities));
    }
    let cyclic = g.edges.iter().any(|e| e.0 == e.1) || has_cycle(g.n, &g.edges);
    Ok((g.n, usize::from(cyclic)))
}

fn has_cycle(n: usize, edges: &[(usize, usize, &str)]) -> bool {
    (0..n).any(|v| {
        let out: Vec<(usize, usize)> = edges.iter().filter(|e| e.0 == v).map(|e| (e.0, e.1)).collect();
        let from_children: Vec<usize> = out.iter().map(|e| e.1).collect();
        let all: Vec<(usize, usize)> = edges.iter().map(|e| (e.0, e.1)).collect();
        oracle::reachable(&all, &from_children).contains(&v)
    })
}
