use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ClaimRecord, CorpusError};
use crate::seed::rng_for;

/// A claim shown next to either its own fact-check article or another
/// record's article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task1Pair {
    pub claim_index: usize,
    pub article_index: usize,
    pub related: bool,
}

impl Task1Pair {
    pub fn claim<'a>(&self, dataset: &'a [ClaimRecord]) -> &'a ClaimRecord {
        &dataset[self.claim_index]
    }

    pub fn article<'a>(&self, dataset: &'a [ClaimRecord]) -> &'a str {
        dataset[self.article_index].article().unwrap_or_default()
    }
}

/// Pairs every record with an article. `ceil(n/2)` records, chosen at random,
/// keep their own article; the rest get a uniformly drawn article from a
/// different record whose text differs from their own. Output follows
/// dataset order.
pub fn pair_for_task1(dataset: &[ClaimRecord], seed: u64) -> Result<Vec<Task1Pair>, CorpusError> {
    let n = dataset.len();
    if n < 2 {
        return Err(CorpusError::TooFewForPairing(n));
    }
    if let Some(r) = dataset.iter().find(|r| r.article().is_none()) {
        return Err(CorpusError::MissingArticle(r.id.clone()));
    }

    let mut rng = rng_for(seed, &["task1-pairing"]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut related = vec![false; n];
    for &i in &order[..n.div_ceil(2)] {
        related[i] = true;
    }

    let mut pairs = Vec::with_capacity(n);
    for (i, record) in dataset.iter().enumerate() {
        if related[i] {
            pairs.push(Task1Pair {
                claim_index: i,
                article_index: i,
                related: true,
            });
            continue;
        }
        let own = record.article();
        let candidates: Vec<usize> = (0..n)
            .filter(|&j| j != i && dataset[j].article() != own)
            .collect();
        if candidates.is_empty() {
            return Err(CorpusError::NoDistinctArticle(record.id.clone()));
        }
        let pick = candidates[rng.gen_range(0..candidates.len())];
        pairs.push(Task1Pair {
            claim_index: i,
            article_index: pick,
            related: false,
        });
    }
    Ok(pairs)
}
