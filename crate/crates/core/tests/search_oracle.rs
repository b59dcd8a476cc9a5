mod common;

use std::collections::BTreeMap;

use bgsfuse::combine::{enumerate_thresholds_with, ThresholdCounting};
use bgsfuse::histogram::{build_histogram, extract_bits};
use bgsfuse::search::{
    count_combinations, enumerate_selections, write_results_csv, SearchContext, SearchOptions, Selection, Strategy,
};
use bgsfuse::{HistogramSet, PatternHistogram, TruthTable, VideoKey};
use common::{build, pixel_perf, random_spec, Synthetic};

const THRESHOLDED: [Strategy; 3] = [Strategy::PropFg, Strategy::AveragedBayes, Strategy::Bks];

fn context(s: &Synthetic) -> SearchContext {
    SearchContext::new(s.set.clone(), s.corpus.algorithms().to_vec()).unwrap()
}

/// Rebuilds the histogram set after editing the masks of `s`.
fn rebuild(mut s: Synthetic, edit: impl Fn(&mut Vec<Vec<bgsfuse::corpus::BinaryMask>>)) -> Synthetic {
    for (_, masks) in &mut s.frames {
        edit(masks);
    }
    let mut names = s.corpus.algorithms().to_vec();
    let n = s.frames[0].1.len();
    while names.len() < n {
        names.push(format!("extra{}", names.len()));
    }
    let hists: BTreeMap<VideoKey, PatternHistogram> = s
        .corpus
        .videos()
        .zip(&s.frames)
        .map(|(v, (gts, masks))| (v.key.clone(), build_histogram(gts, masks).unwrap()))
        .collect();
    let corpus = bgsfuse::Corpus::from_parts("", names, s.corpus.categories().to_vec(), Default::default());
    let set = HistogramSet::new(hists, &corpus).unwrap();
    Synthetic {
        corpus,
        frames: s.frames,
        set,
    }
}

fn negate(m: &bgsfuse::corpus::BinaryMask) -> bgsfuse::corpus::BinaryMask {
    let mut out = m.clone();
    for i in 0..m.len() {
        out.set(i, !m.get(i));
    }
    out
}

#[test]
fn threshold_sweep_matches_pixel_bruteforce() {
    let s = build(&random_spec(11, 3, 2, 2, 24));
    let ctx = context(&s);
    for strategy in THRESHOLDED {
        for sel in enumerate_selections(3, 3) {
            let scores = ctx.scores(strategy, &sel).unwrap();
            let mut best: Option<(f64, f64)> = None;
            for (tau, t) in enumerate_thresholds_with(&scores, ThresholdCounting::Nontrivial) {
                let f1 = pixel_perf(&s, |v| t.get(extract_bits(v, sel.indices())))
                    .f1_bar
                    .unwrap_or(0.0);
                if best.is_none_or(|(bf, bt)| f1 > bf || (f1 == bf && tau < bt)) {
                    best = Some((f1, tau));
                }
            }
            let (f1, tau) = best.unwrap();
            let r = ctx.best_for_selection(strategy, &sel).unwrap();
            assert_eq!(r.f1_bar, f1, "{strategy} {sel:?}");
            assert_eq!(r.tau, Some(tau), "{strategy} {sel:?}");
            // the reported combiner reproduces the reported score
            let perf = s.set.project(sel.indices()).unwrap().evaluate(&r.combiner).unwrap();
            assert_eq!(perf.f1_bar, Some(r.f1_bar));
            assert_eq!(perf.tpr_bar, Some(r.tpr_bar));
        }
    }
}

#[test]
fn lone_algorithm_scores_itself() {
    let s = build(&random_spec(13, 4, 2, 2, 24));
    let ctx = context(&s);
    for j in 0..4 {
        let alone = s
            .set
            .evaluate_truth(&TruthTable::single(4, j).unwrap())
            .unwrap()
            .f1_bar
            .unwrap();
        let sel = Selection::new(vec![j], 4).unwrap();
        for strategy in Strategy::ALL {
            assert_eq!(
                ctx.best_for_selection(strategy, &sel).unwrap().f1_bar,
                alone,
                "{strategy}"
            );
        }
    }
}

#[test]
fn majority_vote_is_prop_fg_at_one_half() {
    let s = build(&random_spec(14, 5, 2, 2, 20));
    let ctx = context(&s);
    for sel in enumerate_selections(5, 5) {
        let mv = ctx.best_for_selection(Strategy::MajorityVote, &sel).unwrap();
        let pf = ctx.evaluate_at(Strategy::PropFg, &sel, 0.5).unwrap();
        assert_eq!(mv.f1_bar, pf.f1_bar);
        assert_eq!(mv.combiner.truth_table(), pf.combiner.truth_table());
        assert_eq!(mv.tau, None);
    }
}

#[test]
fn negated_copy_adds_nothing_but_real_fusion_helps() {
    let s = rebuild(build(&random_spec(15, 3, 2, 2, 40)), |masks| {
        let neg: Vec<_> = masks[0].iter().map(negate).collect();
        masks.push(neg);
    });
    let ctx = context(&s);
    let outcome = ctx.search(Strategy::Bks, 2, &SearchOptions::default(), None).unwrap();
    let best_pair = &outcome.per_k[1];
    // exhaustive check of the pair ranking
    let mut pairs: Vec<_> = enumerate_selections(4, 2)
        .filter(|p| p.k() == 2)
        .map(|p| ctx.best_for_selection(Strategy::Bks, &p).unwrap())
        .collect();
    pairs.sort_by(|a, b| b.f1_bar.total_cmp(&a.f1_bar).then(a.selection.cmp(&b.selection)));
    assert_eq!(pairs[0].selection, best_pair.selection);
    assert_ne!(best_pair.selection.indices(), &[0, 3]);
    let single = |j| {
        ctx.best_for_selection(Strategy::Bks, &Selection::new(vec![j], 4).unwrap())
            .unwrap()
            .f1_bar
    };
    let [a, b] = [best_pair.selection.indices()[0], best_pair.selection.indices()[1]];
    assert!(best_pair.f1_bar > single(a).max(single(b)));
    // algorithm 0 and its negation carry the same information
    let twin = ctx
        .best_for_selection(Strategy::Bks, &Selection::new(vec![0, 3], 4).unwrap())
        .unwrap();
    assert_eq!(twin.f1_bar, single(0));
}

#[test]
fn duplicated_algorithm_never_helps_bks() {
    let s = rebuild(build(&random_spec(16, 3, 2, 2, 30)), |masks| {
        let copy = masks[1].clone();
        masks.push(copy);
    });
    let ctx = context(&s);
    for sel in enumerate_selections(4, 4) {
        if sel.indices().contains(&1) && sel.indices().contains(&3) {
            let without: Vec<usize> = sel.indices().iter().copied().filter(|&j| j != 3).collect();
            let reduced = Selection::new(without, 4).unwrap();
            let with_both = ctx.best_for_selection(Strategy::Bks, &sel).unwrap();
            let with_one = ctx.best_for_selection(Strategy::Bks, &reduced).unwrap();
            assert_eq!(with_both.f1_bar, with_one.f1_bar, "{sel:?}");
        }
    }
    let full = ctx.search(Strategy::Bks, 4, &SearchOptions::default(), None).unwrap();
    let w3 = ctx.search(Strategy::Bks, 3, &SearchOptions::default(), None).unwrap();
    assert_eq!(full.best.unwrap().f1_bar, w3.best.unwrap().f1_bar);
}

#[test]
fn best_score_grows_with_k_max() {
    let s = build(&random_spec(18, 5, 2, 2, 24));
    let ctx = context(&s);
    for strategy in THRESHOLDED {
        let mut previous = 0.0;
        for k in 1..=5 {
            let best = ctx
                .search(strategy, k, &SearchOptions::default(), None)
                .unwrap()
                .best
                .unwrap();
            assert!(best.f1_bar >= previous, "{strategy} k = {k}");
            previous = best.f1_bar;
        }
    }
}

#[test]
fn k_max_one_ranks_individuals() {
    let s = build(&random_spec(19, 4, 2, 2, 24));
    let ctx = context(&s);
    let outcome = ctx
        .search(Strategy::PropFg, 1, &SearchOptions::default(), None)
        .unwrap();
    let best_single = (0..4)
        .map(|j| {
            s.set
                .evaluate_truth(&TruthTable::single(4, j).unwrap())
                .unwrap()
                .f1_bar
                .unwrap()
        })
        .fold(f64::MIN, f64::max);
    assert_eq!(outcome.best.unwrap().f1_bar, best_single);
    assert_eq!(outcome.per_k.len(), 1);
}

#[test]
fn results_are_identical_across_workers_and_batches() {
    let s = build(&random_spec(20, 6, 2, 2, 20));
    let ctx = context(&s);
    for strategy in Strategy::ALL {
        let mut tables = Vec::new();
        for (workers, batch_size) in [(1, 4096), (4, 7), (3, 1)] {
            let opts = SearchOptions {
                workers,
                batch_size,
                ..SearchOptions::default()
            };
            let o = ctx.search(strategy, 4, &opts, None).unwrap();
            let mut buf = Vec::new();
            write_results_csv(&mut buf, &o.per_k, ctx.algorithms()).unwrap();
            tables.push(buf);
        }
        assert!(tables.windows(2).all(|w| w[0] == w[1]), "{strategy}");
    }
}

#[test]
fn evaluated_combiner_counts_match_formula() {
    for n in 1..=6 {
        let s = build(&random_spec(30 + n as u64, n, 2, 2, 24));
        let ctx = context(&s);
        for strategy in Strategy::ALL {
            let o = ctx.search(strategy, n, &SearchOptions::default(), None).unwrap();
            let bound = count_combinations(strategy, n, n) as u64;
            match strategy {
                Strategy::MajorityVote | Strategy::PropFg | Strategy::AveragedBayes => {
                    assert_eq!(o.combiners_evaluated, bound, "{strategy} n = {n}")
                }
                // unseen learning patterns share the fallback score
                Strategy::Bks => assert!(o.combiners_evaluated <= bound),
            }
        }
    }
}

#[test]
fn top_n_never_beats_the_search() {
    let s = build(&random_spec(21, 5, 2, 2, 24));
    let ctx = context(&s);
    let ranking = [3usize, 0, 4, 1, 2];
    for strategy in Strategy::ALL {
        let o = ctx.search(strategy, 5, &SearchOptions::default(), None).unwrap();
        for n in 1..=5 {
            let top = ctx.topn_baseline(strategy, n, &ranking).unwrap();
            assert!(top.f1_bar <= o.per_k[n - 1].f1_bar, "{strategy} n = {n}");
        }
        assert_eq!(
            ctx.topn_baseline(strategy, 1, &ranking).unwrap().selection.indices(),
            &[3]
        );
        assert_eq!(ctx.topn_baseline(strategy, 5, &ranking).unwrap().selection.k(), 5);
    }
    assert!(ctx.topn_baseline(Strategy::Bks, 2, &[1, 1]).is_err());
}

#[test]
fn interrupted_search_resumes_from_checkpoint() {
    let s = build(&random_spec(22, 5, 2, 2, 20));
    let ctx = context(&s);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("search.json");
    let opts = SearchOptions {
        batch_size: 4,
        checkpoint: Some(path.clone()),
        budget: Some(9),
        ..SearchOptions::default()
    };
    let first = ctx.search(Strategy::AveragedBayes, 4, &opts, None).unwrap();
    assert!(!first.complete);
    assert_eq!(first.selections_done, 9);
    let rest = SearchOptions { budget: None, ..opts };
    let resumed = ctx.search(Strategy::AveragedBayes, 4, &rest, None).unwrap();
    assert!(resumed.resumed && resumed.complete);
    let fresh = ctx
        .search(Strategy::AveragedBayes, 4, &SearchOptions::default(), None)
        .unwrap();
    assert_eq!(resumed.combiners_evaluated, fresh.combiners_evaluated);
    let csv = |o: &bgsfuse::search::SearchOutcome| {
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &o.per_k, ctx.algorithms()).unwrap();
        buf
    };
    assert_eq!(csv(&resumed), csv(&fresh));
    // a checkpoint for another strategy is refused
    assert!(ctx.search(Strategy::Bks, 4, &rest, None).is_err());
}

#[test]
fn progress_events_are_reported_per_batch() {
    let s = build(&random_spec(24, 4, 2, 2, 16));
    let ctx = context(&s);
    let events = std::sync::Mutex::new(Vec::new());
    let report = |p: &bgsfuse::search::Progress| events.lock().unwrap().push(p.clone());
    let opts = SearchOptions {
        batch_size: 5,
        ..SearchOptions::default()
    };
    ctx.search(Strategy::PropFg, 4, &opts, Some(&report)).unwrap();
    let events = events.into_inner().unwrap();
    assert_eq!(events.len(), 3);
    assert_eq!(events.last().unwrap().selections_done, 15);
    assert!(events.windows(2).all(|w| w[0].combiners_done < w[1].combiners_done));
}
