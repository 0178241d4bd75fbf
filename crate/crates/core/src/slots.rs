//! Paradigm size discovery: grouping edit trees into numbered slots.
//!
//! Two constraints hold for every [`SlotSystem`] produced here: an edit tree
//! belongs to at most one slot, and within a slot each lemma has at most one
//! form. Slots are merged greedily by complementary lemma coverage and then
//! filtered by coverage; what remains fixes the paradigm size.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::edittree::EditTree;
use crate::error::{Error, Result};
use crate::retrieval::CandidateTable;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub id: usize,
    /// Member trees, most-covering first.
    pub trees: Vec<EditTree>,
    /// lemma -> (form, tree that produced it)
    pub coverage: BTreeMap<String, (String, EditTree)>,
}

impl Slot {
    pub fn coverage_len(&self) -> usize {
        self.coverage.len()
    }

    /// Number of covered lemmas produced by `tree`.
    pub fn tree_coverage(&self, tree: &EditTree) -> usize {
        self.coverage.values().filter(|(_, t)| t == tree).count()
    }

    fn sort_trees(&mut self) {
        let mut counts: BTreeMap<&EditTree, usize> = BTreeMap::new();
        for (_, t) in self.coverage.values() {
            *counts.entry(t).or_insert(0) += 1;
        }
        let mut trees: Vec<(usize, EditTree)> = self
            .trees
            .iter()
            .map(|t| (counts.get(t).copied().unwrap_or(0), t.clone()))
            .collect();
        trees.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        self.trees = trees.into_iter().map(|(_, t)| t).collect();
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlotSystem {
    pub slots: Vec<Slot>,
}

impl SlotSystem {
    pub fn paradigm_size(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, id: usize) -> Option<&Slot> {
        self.slots.iter().find(|s| s.id == id)
    }

    /// Attested (lemma, slot, form) cells in slot order, then lemma order.
    pub fn attested(&self) -> impl Iterator<Item = (&str, usize, &str)> {
        self.slots.iter().flat_map(|s| {
            s.coverage
                .iter()
                .map(move |(l, (f, _))| (l.as_str(), s.id, f.as_str()))
        })
    }

    /// Check both slot assumptions and id contiguity.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut seen = BTreeSet::new();
        for (n, slot) in self.slots.iter().enumerate() {
            if slot.id != n + 1 {
                return Err(format!("slot at position {n} has id {}", slot.id));
            }
            if slot.trees.is_empty() {
                return Err(format!("slot {} has no trees", slot.id));
            }
            for t in &slot.trees {
                if !seen.insert(t) {
                    return Err(format!("tree {t} appears in two slots"));
                }
            }
            for (_, t) in slot.coverage.values() {
                if !slot.trees.contains(t) {
                    return Err(format!("slot {} covers via foreign tree {t}", slot.id));
                }
            }
        }
        Ok(())
    }

    /// Diagnostic dump: `slot_id \t tree_key \t coverage_count`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for slot in &self.slots {
            for tree in &slot.trees {
                out.push_str(&format!("{}\t{}\t{}\n", slot.id, tree.key(), slot.tree_coverage(tree)));
            }
        }
        out
    }

    /// Per-cell dump: `slot_id \t lemma \t form \t tree_key`.
    pub fn coverage_tsv(&self) -> String {
        let mut out = String::new();
        for slot in &self.slots {
            for (lemma, (form, tree)) in &slot.coverage {
                out.push_str(&format!("{}\t{}\t{}\t{}\n", slot.id, lemma, form, tree.key()));
            }
        }
        out
    }

    /// Rebuild from the two dumps.
    pub fn from_tsv(slots: &str, coverage: &str) -> Result<Self> {
        let mut by_id: BTreeMap<usize, Slot> = BTreeMap::new();
        for (n, line) in slots.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse("slot table", format!("line {}: expected 3 fields", n + 1)));
            }
            let id = parse_id(f[0], "slot table", n)?;
            by_id
                .entry(id)
                .or_insert_with(|| Slot {
                    id,
                    trees: Vec::new(),
                    coverage: BTreeMap::new(),
                })
                .trees
                .push(EditTree::parse_key(f[1])?);
        }
        for (n, line) in coverage.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::parse("coverage table", format!("line {}: expected 4 fields", n + 1)));
            }
            let id = parse_id(f[0], "coverage table", n)?;
            let slot = by_id
                .get_mut(&id)
                .ok_or_else(|| Error::parse("coverage table", format!("line {}: unknown slot {id}", n + 1)))?;
            slot.coverage
                .insert(f[1].to_owned(), (f[2].to_owned(), EditTree::parse_key(f[3])?));
        }
        let sys = SlotSystem {
            slots: by_id.into_values().collect(),
        };
        sys.check_invariants()
            .map_err(|e| Error::parse("slot table", e))?;
        Ok(sys)
    }
}

fn parse_id(field: &str, what: &'static str, line: usize) -> Result<usize> {
    field
        .parse()
        .map_err(|_| Error::parse(what, format!("line {}: bad slot id {field:?}", line + 1)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscoveryConfig {
    pub min_slot_coverage: f64,
    pub similarity_floor: f64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            min_slot_coverage: 0.1,
            similarity_floor: 0.0,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("min_slot_coverage", self.min_slot_coverage),
            ("similarity_floor", self.similarity_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One slot per distinct tree, ordered by descending lemma support, then by
/// tree. If a tree yields several forms for one lemma, the most frequent one
/// (per `frequency`) wins, ties to the lexicographically smaller form.
pub fn initial_slots(table: &CandidateTable, frequency: impl Fn(&str) -> u64) -> SlotSystem {
    let mut per_tree: BTreeMap<&EditTree, BTreeMap<String, (String, EditTree)>> = BTreeMap::new();
    for c in table.triples() {
        let cov = per_tree.entry(&c.tree).or_default();
        match cov.get(&c.lemma) {
            Some((old, _)) => {
                let better = frequency(&c.form)
                    .cmp(&frequency(old))
                    .then_with(|| old.cmp(&c.form));
                if better == Ordering::Greater {
                    cov.insert(c.lemma.clone(), (c.form.clone(), c.tree.clone()));
                }
            }
            None => {
                cov.insert(c.lemma.clone(), (c.form.clone(), c.tree.clone()));
            }
        }
    }
    let mut slots: Vec<Slot> = per_tree
        .into_iter()
        .map(|(tree, coverage)| Slot {
            id: 0,
            trees: vec![tree.clone()],
            coverage,
        })
        .collect();
    // stable sort keeps tree order among equal coverage
    slots.sort_by_key(|s| std::cmp::Reverse(s.coverage_len()));
    for (n, slot) in slots.iter_mut().enumerate() {
        slot.id = n + 1;
    }
    SlotSystem { slots }
}

/// Similarity of two distinct slots: `None` when they share a lemma,
/// otherwise their joint coverage as a fraction of `all_lemmas`.
pub fn slot_similarity(a: &Slot, b: &Slot, all_lemmas: usize) -> Option<f64> {
    if !disjoint(a, b) {
        return None;
    }
    Some((a.coverage_len() + b.coverage_len()) as f64 / all_lemmas.max(1) as f64)
}

fn disjoint(a: &Slot, b: &Slot) -> bool {
    let (small, large) = if a.coverage.len() <= b.coverage.len() {
        (a, b)
    } else {
        (b, a)
    };
    small.coverage.keys().all(|l| !large.coverage.contains_key(l))
}

#[derive(PartialEq, Eq)]
struct MergeCandidate {
    joint: usize,
    lo: usize,
    hi: usize,
    versions: (usize, usize),
}

impl Ord for MergeCandidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap: larger joint coverage first, then smaller id pair
        self.joint
            .cmp(&other.joint)
            .then_with(|| (other.lo, other.hi).cmp(&(self.lo, self.hi)))
    }
}

impl PartialOrd for MergeCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy agglomeration followed by the coverage filter and renumbering.
///
/// The compatible pair with the highest similarity above the floor is merged
/// (ties to the smaller id pair) until no such pair remains. Merged slots
/// keep the smaller id. Slots covering less than `min_slot_coverage` of
/// `all_lemmas` are dropped; survivors are renumbered 1..N by descending
/// coverage, ties by original id.
pub fn merge_slots(sys: &SlotSystem, cfg: &DiscoveryConfig, all_lemmas: usize) -> SlotSystem {
    let all = all_lemmas.max(1) as f64;
    let mut slots: Vec<Option<Slot>> = sys.slots.iter().cloned().map(Some).collect();
    let mut versions = vec![0usize; slots.len()];
    let mut heap = BinaryHeap::new();
    let above_floor = |joint: usize| joint as f64 / all > cfg.similarity_floor;

    let push_pair = |heap: &mut BinaryHeap<MergeCandidate>, slots: &[Option<Slot>], versions: &[usize], i: usize, j: usize| {
        let (Some(a), Some(b)) = (&slots[i], &slots[j]) else {
            return;
        };
        let joint = a.coverage_len() + b.coverage_len();
        if !above_floor(joint) || !disjoint(a, b) {
            return;
        }
        let (lo, hi) = if a.id < b.id { (i, j) } else { (j, i) };
        heap.push(MergeCandidate {
            joint,
            lo: slots[lo].as_ref().map_or(0, |s| s.id),
            hi: slots[hi].as_ref().map_or(0, |s| s.id),
            versions: (versions[lo], versions[hi]),
        });
    };

    let index_of: BTreeMap<usize, usize> = slots
        .iter()
        .enumerate()
        .filter_map(|(n, s)| s.as_ref().map(|s| (s.id, n)))
        .collect();

    for i in 0..slots.len() {
        for j in i + 1..slots.len() {
            push_pair(&mut heap, &slots, &versions, i, j);
        }
    }

    while let Some(cand) = heap.pop() {
        let (li, hi) = (index_of[&cand.lo], index_of[&cand.hi]);
        if slots[li].is_none() || slots[hi].is_none() || (versions[li], versions[hi]) != cand.versions {
            continue;
        }
        let absorbed = slots[hi].take().expect("checked above");
        {
            let keep = slots[li].as_mut().expect("checked above");
            keep.trees.extend(absorbed.trees);
            keep.coverage.extend(absorbed.coverage);
            keep.sort_trees();
        }
        versions[li] += 1;
        for j in 0..slots.len() {
            if j != li {
                push_pair(&mut heap, &slots, &versions, li, j);
            }
        }
    }

    let min_cov = cfg.min_slot_coverage * all;
    let mut kept: Vec<Slot> = slots
        .into_iter()
        .flatten()
        .filter(|s| s.coverage_len() as f64 >= min_cov)
        .collect();
    kept.sort_by(|a, b| b.coverage_len().cmp(&a.coverage_len()).then(a.id.cmp(&b.id)));
    for (n, slot) in kept.iter_mut().enumerate() {
        slot.id = n + 1;
    }
    SlotSystem { slots: kept }
}

/// Run both discovery steps on a candidate table.
pub fn discover(table: &CandidateTable, frequency: impl Fn(&str) -> u64, cfg: &DiscoveryConfig) -> SlotSystem {
    let all_lemmas = table.lemmas().len();
    merge_slots(&initial_slots(table, frequency), cfg, all_lemmas)
}

/// Map every retained tree to its slot id.
pub fn assign_slot_ids(sys: &SlotSystem) -> BTreeMap<String, usize> {
    sys.slots
        .iter()
        .flat_map(|s| s.trees.iter().map(move |t| (t.key(), s.id)))
        .collect()
}
