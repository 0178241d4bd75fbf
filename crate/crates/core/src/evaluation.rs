//! Exact-match accuracy, optimal assignment, and best-match accuracy
//! (BMAcc) between numbered predicted slots and named gold slots.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{Display, Write};
use std::str::FromStr;

use crate::dataset::InflectionExample;
use crate::error::{Error, Result};

/// Fraction of gold examples whose predicted form matches exactly.
pub fn accuracy(predictions: &[InflectionExample], gold: &[InflectionExample]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::EmptyGold);
    }
    let by_key: HashMap<(&str, usize), &str> = predictions
        .iter()
        .map(|p| ((p.lemma.as_str(), p.slot), p.form.as_str()))
        .collect();
    let mut correct = 0;
    for g in gold {
        let pred = by_key
            .get(&(g.lemma.as_str(), g.slot))
            .ok_or_else(|| Error::MissingPrediction {
                lemma: g.lemma.clone(),
                slot: g.slot,
            })?;
        if *pred == g.form {
            correct += 1;
        }
    }
    Ok(correct as f64 / gold.len() as f64)
}

/// Maximum-weight injective row-to-column matching (Hungarian algorithm).
///
/// Returns `matching[row] = Some(col)` for the `min(rows, cols)` matched
/// rows and the total score.
pub fn assignment_max(scores: &[Vec<f64>]) -> (Vec<Option<usize>>, f64) {
    let rows = scores.len();
    let cols = scores.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (vec![None; rows], 0.0);
    }
    let matching = if rows <= cols {
        let cost: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        hungarian_min(&cost).into_iter().map(Some).collect::<Vec<_>>()
    } else {
        let cost: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..rows).map(|r| -scores[r][c]).collect())
            .collect();
        let col_to_row = hungarian_min(&cost);
        let mut m = vec![None; rows];
        for (c, r) in col_to_row.into_iter().enumerate() {
            m[r] = Some(c);
        }
        m
    };
    let total = matching
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| scores[r][c]))
        .sum();
    (matching, total)
}

/// Minimum-cost assignment for `n <= m`; returns the column of each row.
fn hungarian_min(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j] = row (1-based) assigned to column j; column 0 is a sentinel
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// lemma -> slot -> acceptable forms.
///
/// Predicted tables use numeric slot ids; gold tables use feature-bundle
/// strings and may list several variants per cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParadigmTable<K: Ord> {
    lemmas: Vec<String>,
    cells: BTreeMap<String, BTreeMap<K, Vec<String>>>,
}

impl<K: Ord> Default for ParadigmTable<K> {
    fn default() -> Self {
        ParadigmTable {
            lemmas: Vec::new(),
            cells: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone> ParadigmTable<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a form (or a variant of an existing cell).
    pub fn insert(&mut self, lemma: &str, slot: K, form: impl Into<String>) {
        if !self.cells.contains_key(lemma) {
            self.lemmas.push(lemma.to_owned());
        }
        let forms = self.cells.entry(lemma.to_owned()).or_default().entry(slot).or_default();
        let form = form.into();
        if !forms.contains(&form) {
            forms.push(form);
        }
    }

    /// Lemmas in insertion order.
    pub fn lemmas(&self) -> &[String] {
        &self.lemmas
    }

    pub fn slots(&self) -> BTreeSet<K> {
        self.cells.values().flat_map(|row| row.keys().cloned()).collect()
    }

    pub fn get(&self, lemma: &str, slot: &K) -> Option<&[String]> {
        self.cells.get(lemma)?.get(slot).map(Vec::as_slice)
    }

    pub fn row(&self, lemma: &str) -> Option<&BTreeMap<K, Vec<String>>> {
        self.cells.get(lemma)
    }

    pub fn cell_count(&self) -> usize {
        self.cells.values().map(BTreeMap::len).sum()
    }

    /// Rename slots through `f`.
    pub fn map_slots<K2: Ord + Clone>(&self, mut f: impl FnMut(&K) -> K2) -> ParadigmTable<K2> {
        let mut out = ParadigmTable::new();
        for lemma in &self.lemmas {
            for (k, forms) in &self.cells[lemma] {
                for form in forms {
                    out.insert(lemma, f(k), form.clone());
                }
            }
        }
        out
    }
}

impl<K: Ord + Clone + Display> ParadigmTable<K> {
    /// `lemma \t form \t slot` lines, lemmas in insertion order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for lemma in &self.lemmas {
            for (k, forms) in &self.cells[lemma] {
                for form in forms {
                    let _ = writeln!(out, "{lemma}\t{form}\t{k}");
                }
            }
        }
        out
    }
}

impl<K: Ord + Clone + FromStr> ParadigmTable<K> {
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut table = ParadigmTable::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse("paradigm table", format!("line {}: expected 3 fields", n + 1)));
            }
            let slot = f[2]
                .parse::<K>()
                .map_err(|_| Error::parse("paradigm table", format!("line {}: bad slot {:?}", n + 1, f[2])))?;
            table.insert(f[0], slot, f[1]);
        }
        Ok(table)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BMAccReport<P, G> {
    pub macro_accuracy: f64,
    pub micro_accuracy: f64,
    /// Matched (predicted, gold) slot pairs.
    pub matching: Vec<(P, G)>,
    /// Per gold slot: accuracy under the matching (0 when unmatched).
    pub per_gold: Vec<(G, f64)>,
    pub scored_lemmas: usize,
    pub gold_cells: usize,
}

impl<P: Display, G: Display> BMAccReport<P, G> {
    /// Report TSV; accuracies are percentages with two decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "macro_bmacc\t{:.2}", 100.0 * self.macro_accuracy);
        let _ = writeln!(out, "micro_bmacc\t{:.2}", 100.0 * self.micro_accuracy);
        let _ = writeln!(out, "scored_lemmas\t{}", self.scored_lemmas);
        let _ = writeln!(out, "gold_cells\t{}", self.gold_cells);
        let acc: HashMap<String, f64> = self.per_gold.iter().map(|(g, a)| (g.to_string(), *a)).collect();
        for (p, g) in &self.matching {
            let _ = writeln!(out, "match\t{p}\t{g}\t{:.2}", 100.0 * acc[&g.to_string()]);
        }
        let matched: BTreeSet<String> = self.matching.iter().map(|(_, g)| g.to_string()).collect();
        for (g, _) in &self.per_gold {
            if !matched.contains(&g.to_string()) {
                let _ = writeln!(out, "unmatched\t{g}");
            }
        }
        out
    }
}

/// Upper bound on the summed secondary score used to break macro ties.
const TIE_BREAK: f64 = 1e-9;

/// Best-match accuracy of `predicted` against `gold`.
///
/// Only lemmas present in both tables are scored. `A[p][g]` is the fraction
/// of gold cells in slot `g` whose form equals the prediction in slot `p`;
/// the optimal injective matching on `A` gives the macro score (averaged
/// over gold slots, unmatched ones counting 0) and, with the same matching,
/// the micro score over all gold cells. Among matchings with the same macro
/// score the one with the most correct cells is used, so neither score
/// depends on how predicted slots are numbered.
pub fn bmacc<P, G>(predicted: &ParadigmTable<P>, gold: &ParadigmTable<G>) -> Result<BMAccReport<P, G>>
where
    P: Ord + Clone,
    G: Ord + Clone,
{
    let lemmas: Vec<&String> = gold
        .lemmas()
        .iter()
        .filter(|l| predicted.row(l).is_some())
        .collect();
    let gold_slots: Vec<G> = lemmas
        .iter()
        .flat_map(|l| gold.row(l).into_iter().flat_map(|r| r.keys().cloned()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if gold_slots.is_empty() {
        return Err(Error::EmptyGold);
    }
    let pred_slots: Vec<P> = predicted.slots().into_iter().collect();

    let mut totals = vec![0usize; gold_slots.len()];
    let mut correct = vec![vec![0usize; gold_slots.len()]; pred_slots.len()];
    for lemma in &lemmas {
        let grow = gold.row(lemma).expect("filtered above");
        let prow = predicted.row(lemma).expect("filtered above");
        for (gi, gs) in gold_slots.iter().enumerate() {
            let Some(variants) = grow.get(gs) else { continue };
            totals[gi] += 1;
            for (pi, ps) in pred_slots.iter().enumerate() {
                if let Some(form) = prow.get(ps).and_then(|f| f.first()) {
                    if variants.contains(form) {
                        correct[pi][gi] += 1;
                    }
                }
            }
        }
    }
    let scores: Vec<Vec<f64>> = correct
        .iter()
        .map(|row| row.iter().zip(&totals).map(|(&c, &t)| c as f64 / t as f64).collect())
        .collect();
    let (mut matching, best) = assignment_max(&scores);
    let gold_cells: usize = totals.iter().sum();
    let bonus = TIE_BREAK / (gold_cells as f64 + 1.0);
    let tied: Vec<Vec<f64>> = scores
        .iter()
        .zip(&correct)
        .map(|(row, hits)| row.iter().zip(hits).map(|(&a, &c)| a + bonus * c as f64).collect())
        .collect();
    let (alt, _) = assignment_max(&tied);
    let matched_total = |m: &[Option<usize>]| -> f64 {
        m.iter().enumerate().filter_map(|(p, g)| g.map(|g| scores[p][g])).sum()
    };
    if matched_total(&alt) >= best - 1e-12 {
        matching = alt;
    }

    let mut per_gold: Vec<(G, f64)> = gold_slots.iter().map(|g| (g.clone(), 0.0)).collect();
    let mut pairs = Vec::new();
    let mut micro_hits = 0;
    for (pi, gi) in matching.iter().enumerate() {
        if let Some(gi) = *gi {
            per_gold[gi].1 = scores[pi][gi];
            micro_hits += correct[pi][gi];
            pairs.push((pred_slots[pi].clone(), gold_slots[gi].clone()));
        }
    }
    let total: f64 = per_gold.iter().map(|(_, a)| a).sum();
    Ok(BMAccReport {
        macro_accuracy: total / gold_slots.len() as f64,
        micro_accuracy: micro_hits as f64 / gold_cells as f64,
        matching: pairs,
        per_gold,
        scored_lemmas: lemmas.len(),
        gold_cells,
    })
}
