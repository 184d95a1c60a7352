//! Seeded synthetic datasets with the schemas of the standard academic
//! benchmarks. Classes plant homophily through authorship, subjects/venues
//! and topic words; the knobs set how informative each signal is.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng as _;

use crate::data::dataset::{Dataset, FeatureDim, Manifest, MetaPathDecl, RelationDecl, TypeDecl};
use crate::diff::random::{substream, Rng};
use crate::diff::Tensor;
use crate::error::Result;
use crate::hin::{Hin, NodeType, Relation};

/// Paper / Author / Subject network with papers as targets.
#[derive(Debug, Clone, PartialEq)]
pub struct AcmSpec {
    pub papers: usize,
    pub authors: usize,
    pub subjects: usize,
    pub classes: usize,
    pub vocab: usize,
    pub words_per_paper: usize,
    /// Probability that a word is drawn from the paper's class topic.
    pub topic_signal: f64,
    /// Probability that a paper's subject has the paper's class.
    pub subject_purity: f64,
    /// Probability that an author slot is filled from the paper's class.
    pub author_purity: f64,
    pub max_authors: usize,
    /// Exponent of the Zipf-like author productivity.
    pub productivity_skew: f64,
}

impl Default for AcmSpec {
    fn default() -> Self {
        AcmSpec {
            papers: 720,
            authors: 1200,
            subjects: 30,
            classes: 3,
            vocab: 300,
            words_per_paper: 12,
            topic_signal: 0.3,
            subject_purity: 0.7,
            author_purity: 0.75,
            max_authors: 4,
            productivity_skew: 1.0,
        }
    }
}

/// Author / Paper / Term / Venue network with authors as targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DblpSpec {
    pub authors: usize,
    pub papers: usize,
    pub terms: usize,
    pub venues: usize,
    pub classes: usize,
    pub vocab: usize,
    pub words_per_author: usize,
    pub topic_signal: f64,
    pub venue_purity: f64,
    pub term_purity: f64,
    pub author_purity: f64,
    pub terms_per_paper: usize,
    pub max_authors: usize,
}

impl Default for DblpSpec {
    fn default() -> Self {
        DblpSpec {
            authors: 240,
            papers: 400,
            terms: 80,
            venues: 12,
            classes: 4,
            vocab: 120,
            words_per_author: 8,
            topic_signal: 0.35,
            venue_purity: 0.9,
            term_purity: 0.6,
            author_purity: 0.85,
            terms_per_paper: 3,
            max_authors: 3,
        }
    }
}

fn balanced_classes(n: usize, c: usize, rng: &mut Rng) -> Vec<usize> {
    let mut y: Vec<usize> = (0..n).map(|i| i % c).collect();
    rand::seq::SliceRandom::shuffle(&mut y[..], rng);
    y
}

/// Binary bag of words: each word from the class block with probability
/// `signal`, otherwise uniform over the whole vocabulary.
fn bag_of_words(class: usize, classes: usize, vocab: usize, words: usize, signal: f64, rng: &mut Rng) -> Vec<f64> {
    let block = vocab / classes;
    let mut row = vec![0.0; vocab];
    for _ in 0..words {
        let w = if rng.random::<f64>() < signal {
            class * block + rng.random_range(0..block)
        } else {
            rng.random_range(0..vocab)
        };
        row[w] = 1.0;
    }
    row
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Members of `pool` with class `want` with probability `purity`, else any member.
fn pick_by_class(by_class: &[Vec<usize>], all: &[usize], want: usize, purity: f64, rng: &mut Rng) -> usize {
    if rng.random::<f64>() < purity && !by_class[want].is_empty() {
        *by_class[want].choose(rng).expect("non-empty")
    } else {
        *all.choose(rng).expect("non-empty")
    }
}

pub fn acm(spec: &AcmSpec, seed: u64) -> Result<Dataset> {
    let mut rng = substream(seed, "synth.acm");
    let c = spec.classes;
    let paper_y = balanced_classes(spec.papers, c, &mut rng);
    let author_y = balanced_classes(spec.authors, c, &mut rng);
    let subject_y: Vec<usize> = (0..spec.subjects).map(|s| s % c).collect();

    let mut authors_by_class = vec![Vec::new(); c];
    let mut weights_by_class = vec![Vec::new(); c];
    let mut all_weights = Vec::with_capacity(spec.authors);
    for (a, &y) in author_y.iter().enumerate() {
        authors_by_class[y].push(a);
        let w = 1.0 / (authors_by_class[y].len() as f64).powf(spec.productivity_skew);
        weights_by_class[y].push(w);
        all_weights.push(w);
    }
    let samplers: Vec<WeightedIndex<f64>> =
        weights_by_class.iter().map(|w| WeightedIndex::new(w).expect("positive weights")).collect();
    let any_author = WeightedIndex::new(&all_weights).expect("positive weights");
    let subjects_by_class: Vec<Vec<usize>> =
        (0..c).map(|k| (0..spec.subjects).filter(|&s| subject_y[s] == k).collect()).collect();
    let all_subjects: Vec<usize> = (0..spec.subjects).collect();

    let (mut pa, mut ps) = (Vec::new(), Vec::new());
    let mut features = Vec::with_capacity(spec.papers);
    for (p, &y) in paper_y.iter().enumerate() {
        let k = rng.random_range(1..=spec.max_authors);
        let mut chosen = Vec::with_capacity(k);
        while chosen.len() < k {
            let a = if rng.random::<f64>() < spec.author_purity {
                authors_by_class[y][samplers[y].sample(&mut rng)]
            } else {
                any_author.sample(&mut rng)
            };
            if !chosen.contains(&a) {
                chosen.push(a);
            }
        }
        chosen.sort_unstable();
        pa.extend(chosen.into_iter().map(|a| (p, a)));
        ps.push((p, pick_by_class(&subjects_by_class, &all_subjects, y, spec.subject_purity, &mut rng)));
        features.push(bag_of_words(y, c, spec.vocab, spec.words_per_paper, spec.topic_signal, &mut rng));
    }

    let manifest = Manifest {
        target_type: "Paper".into(),
        classes: c,
        types: vec![
            TypeDecl { name: "Paper".into(), count: spec.papers, dim: FeatureDim::Dense(spec.vocab) },
            TypeDecl { name: "Author".into(), count: spec.authors, dim: FeatureDim::OneHot },
            TypeDecl { name: "Subject".into(), count: spec.subjects, dim: FeatureDim::OneHot },
        ],
        relations: vec![
            RelationDecl { name: "PA".into(), src: "Paper".into(), dst: "Author".into() },
            RelationDecl { name: "PS".into(), src: "Paper".into(), dst: "Subject".into() },
        ],
        metapaths: vec![
            MetaPathDecl { name: "PAP".into(), sequence: "PA PA^-1".into() },
            MetaPathDecl { name: "PSP".into(), sequence: "PS PS^-1".into() },
        ],
    };
    let hin = Hin::new(
        vec![
            NodeType { name: "Paper".into(), count: spec.papers },
            NodeType { name: "Author".into(), count: spec.authors },
            NodeType { name: "Subject".into(), count: spec.subjects },
        ],
        vec![
            Relation { name: "PA".into(), src_type: 0, dst_type: 1, edges: pa },
            Relation { name: "PS".into(), src_type: 0, dst_type: 2, edges: ps },
        ],
        "Paper",
    )?;
    Ok(Dataset {
        manifest,
        hin,
        features: vec![Some(Tensor::from_rows(&features)), None, None],
        labels: paper_y.into_iter().map(Some).collect(),
        node_ids: vec![ids("p", spec.papers), ids("a", spec.authors), ids("s", spec.subjects)],
    })
}

pub fn dblp(spec: &DblpSpec, seed: u64) -> Result<Dataset> {
    let mut rng = substream(seed, "synth.dblp");
    let c = spec.classes;
    let author_y = balanced_classes(spec.authors, c, &mut rng);
    let paper_y = balanced_classes(spec.papers, c, &mut rng);
    let venue_y: Vec<usize> = (0..spec.venues).map(|v| v % c).collect();
    let term_y: Vec<usize> = (0..spec.terms).map(|t| t % c).collect();
    let group = |ys: &[usize]| -> Vec<Vec<usize>> { (0..c).map(|k| (0..ys.len()).filter(|&i| ys[i] == k).collect()).collect() };
    let (authors_by, venues_by, terms_by) = (group(&author_y), group(&venue_y), group(&term_y));
    let (all_a, all_v, all_t): (Vec<usize>, Vec<usize>, Vec<usize>) =
        ((0..spec.authors).collect(), (0..spec.venues).collect(), (0..spec.terms).collect());

    let (mut pa, mut pt, mut pv) = (Vec::new(), Vec::new(), Vec::new());
    let mut has_paper = vec![false; spec.authors];
    for (p, &y) in paper_y.iter().enumerate() {
        let k = rng.random_range(1..=spec.max_authors);
        let mut chosen = Vec::new();
        while chosen.len() < k {
            let a = pick_by_class(&authors_by, &all_a, y, spec.author_purity, &mut rng);
            if !chosen.contains(&a) {
                chosen.push(a);
            }
        }
        chosen.sort_unstable();
        for a in chosen {
            has_paper[a] = true;
            pa.push((p, a));
        }
        let mut terms = Vec::new();
        while terms.len() < spec.terms_per_paper.min(spec.terms) {
            let t = pick_by_class(&terms_by, &all_t, y, spec.term_purity, &mut rng);
            if !terms.contains(&t) {
                terms.push(t);
            }
        }
        terms.sort_unstable();
        pt.extend(terms.into_iter().map(|t| (p, t)));
        pv.push((p, pick_by_class(&venues_by, &all_v, y, spec.venue_purity, &mut rng)));
    }
    // Every author writes at least one paper of its own class.
    let papers_by = group(&paper_y);
    for a in 0..spec.authors {
        if !has_paper[a] {
            let p = *papers_by[author_y[a]].choose(&mut rng).expect("non-empty class");
            pa.push((p, a));
        }
    }
    pa.sort_unstable();
    let features: Vec<Vec<f64>> = author_y
        .iter()
        .map(|&y| bag_of_words(y, c, spec.vocab, spec.words_per_author, spec.topic_signal, &mut rng))
        .collect();

    let manifest = Manifest {
        target_type: "A".into(),
        classes: c,
        types: vec![
            TypeDecl { name: "A".into(), count: spec.authors, dim: FeatureDim::Dense(spec.vocab) },
            TypeDecl { name: "P".into(), count: spec.papers, dim: FeatureDim::OneHot },
            TypeDecl { name: "T".into(), count: spec.terms, dim: FeatureDim::OneHot },
            TypeDecl { name: "V".into(), count: spec.venues, dim: FeatureDim::OneHot },
        ],
        relations: vec![
            RelationDecl { name: "PA".into(), src: "P".into(), dst: "A".into() },
            RelationDecl { name: "PT".into(), src: "P".into(), dst: "T".into() },
            RelationDecl { name: "PV".into(), src: "P".into(), dst: "V".into() },
        ],
        metapaths: vec![
            MetaPathDecl { name: "APA".into(), sequence: "PA^-1 PA".into() },
            MetaPathDecl { name: "APVPA".into(), sequence: "PA^-1 PV PV^-1 PA".into() },
            MetaPathDecl { name: "APTPA".into(), sequence: "PA^-1 PT PT^-1 PA".into() },
        ],
    };
    let hin = Hin::new(
        manifest.types.iter().map(|t| NodeType { name: t.name.clone(), count: t.count }).collect(),
        vec![
            Relation { name: "PA".into(), src_type: 1, dst_type: 0, edges: pa },
            Relation { name: "PT".into(), src_type: 1, dst_type: 2, edges: pt },
            Relation { name: "PV".into(), src_type: 1, dst_type: 3, edges: pv },
        ],
        "A",
    )?;
    Ok(Dataset {
        manifest,
        hin,
        features: vec![Some(Tensor::from_rows(&features)), None, None, None],
        labels: author_y.into_iter().map(Some).collect(),
        node_ids: vec![ids("a", spec.authors), ids("p", spec.papers), ids("t", spec.terms), ids("v", spec.venues)],
    })
}

/// Small ACM-schema dataset for tests and smoke runs.
pub fn tiny_acm(seed: u64) -> Result<Dataset> {
    acm(
        &AcmSpec { papers: 60, authors: 50, subjects: 6, vocab: 30, words_per_paper: 5, ..AcmSpec::default() },
        seed,
    )
}

/// Small DBLP-schema dataset for tests and smoke runs.
pub fn tiny_dblp(seed: u64) -> Result<Dataset> {
    dblp(&DblpSpec { authors: 48, papers: 60, terms: 16, venues: 8, vocab: 40, ..DblpSpec::default() }, seed)
}
