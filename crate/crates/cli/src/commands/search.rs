use std::fs;
use std::io::Write;

use bgsfuse::search::{write_results_csv, Progress, SearchOptions};
use bgsfuse::{SearchContext, SearchResult, Selection, Strategy};

use super::write_output;
use crate::config::RunConfig;
use crate::data;
use crate::error::{io_error, CliError};
use crate::svg::{color, Svg};

pub const RESULTS_FILE: &str = "search.csv";
pub const TOPN_FILE: &str = "topn.csv";
pub const SVG_FILE: &str = "search.svg";

#[derive(Debug, Clone, Default)]
pub struct SearchArgs {
    /// Algorithm names joined by '+'; evaluates only this selection.
    pub selection: Option<String>,
    pub tau: Option<f64>,
    pub budget: Option<u64>,
    pub progress: bool,
}

fn parse_selection(text: &str, ctx: &SearchContext) -> Result<Selection, CliError> {
    let indices = text
        .split('+')
        .map(|name| {
            ctx.algorithms()
                .iter()
                .position(|a| a == name.trim())
                .ok_or_else(|| CliError::Config(format!("unknown algorithm {name:?} in selection")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sel = Selection::from_unsorted(indices, ctx.n())?;
    if sel.k() != text.split('+').count() {
        return Err(CliError::Config(format!("selection {text:?} names an algorithm twice")));
    }
    Ok(sel)
}

/// Algorithm indices by decreasing individual F1, ties by index.
pub fn default_ranking(ctx: &SearchContext) -> Result<Vec<usize>, CliError> {
    let mut scored = Vec::with_capacity(ctx.n());
    for j in 0..ctx.n() {
        let sel = Selection::new(vec![j], ctx.n())?;
        scored.push((ctx.best_for_selection(Strategy::MajorityVote, &sel)?.f1_bar, j));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().map(|(_, j)| j).collect())
}

fn ranking(cfg: &RunConfig, ctx: &SearchContext) -> Result<Vec<usize>, CliError> {
    let Some(names) = &cfg.ranking else {
        return default_ranking(ctx);
    };
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let j = ctx
            .algorithms()
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| CliError::Config(format!("ranking names unknown algorithm {name:?}")))?;
        if out.contains(&j) {
            return Err(CliError::Config(format!("ranking repeats {name:?}")));
        }
        out.push(j);
    }
    Ok(out)
}

fn csv(results: &[SearchResult], algorithms: &[String]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_results_csv(&mut buf, results, algorithms).expect("writing to memory");
    buf
}

fn describe(r: &SearchResult, algorithms: &[String]) -> String {
    let tau = r.tau.map_or_else(|| "-".to_string(), |t| t.to_string());
    let flag = if r.degraded { " (degraded Bayes estimates)" } else { "" };
    format!(
        "{} {} n {} tau {} f1_bar {}{flag}\n",
        r.strategy,
        r.selection.label(algorithms),
        r.selection.k(),
        tau,
        r.f1_bar
    )
}

pub fn run(cfg: &RunConfig, args: &SearchArgs) -> Result<String, CliError> {
    let loaded = data::load(cfg)?;
    let algorithms = loaded.corpus.algorithms().to_vec();
    let ctx = SearchContext::new(loaded.set, algorithms.clone())?;
    if let Some(text) = &args.selection {
        return run_fixed(cfg, &ctx, text, args.tau);
    }
    if args.tau.is_some() {
        return Err(CliError::config("--tau needs --selection"));
    }
    let k_max = cfg.k_max_for(ctx.n())?;
    let checkpoints = cfg.out.join("checkpoints");
    fs::create_dir_all(&checkpoints).map_err(|e| io_error(&checkpoints, e))?;
    let mut summary = String::new();
    let mut optimized = Vec::new();
    let mut complete = true;
    for &strategy in &cfg.strategies {
        let checkpoint = checkpoints.join(format!("{strategy}.json"));
        let options = SearchOptions {
            workers: cfg.workers,
            batch_size: cfg.batch_size,
            checkpoint: Some(checkpoint.clone()),
            budget: args.budget,
        };
        let report = |p: &Progress| {
            let mut line = serde_json::to_value(p).expect("progress serializes");
            line["strategy"] = serde_json::Value::from(strategy.as_str());
            let mut err = std::io::stderr().lock();
            let _ = writeln!(err, "{line}");
        };
        let progress: Option<&(dyn Fn(&Progress) + Sync)> = if args.progress { Some(&report) } else { None };
        let outcome = ctx.search(strategy, k_max, &options, progress)?;
        if !outcome.complete {
            complete = false;
            summary.push_str(&format!(
                "{strategy}: paused after {} selections; rerun to resume\n",
                outcome.selections_done
            ));
            continue;
        }
        let _ = fs::remove_file(&checkpoint);
        summary.push_str(&format!(
            "{strategy}: {} combiners evaluated\n",
            outcome.combiners_evaluated
        ));
        if let Some(best) = &outcome.best {
            summary.push_str(&describe(best, &algorithms));
        }
        optimized.push(outcome.per_k);
    }
    if !complete {
        return Ok(summary);
    }
    let order = ranking(cfg, &ctx)?;
    let mut topn = Vec::new();
    for &strategy in &cfg.strategies {
        let row = (1..=k_max.min(order.len()))
            .map(|n| ctx.topn_baseline(strategy, n, &order))
            .collect::<Result<Vec<_>, _>>()?;
        topn.push(row);
    }
    let flat = |rows: &[Vec<SearchResult>]| rows.iter().flatten().cloned().collect::<Vec<_>>();
    write_output(&cfg.out.join(RESULTS_FILE), csv(&flat(&optimized), &algorithms))?;
    write_output(&cfg.out.join(TOPN_FILE), csv(&flat(&topn), &algorithms))?;
    write_output(&cfg.out.join(SVG_FILE), bars(&cfg.strategies, &optimized, &topn, k_max))?;
    Ok(summary)
}

fn run_fixed(cfg: &RunConfig, ctx: &SearchContext, text: &str, tau: Option<f64>) -> Result<String, CliError> {
    let sel = parse_selection(text, ctx)?;
    let mut results = Vec::new();
    for &strategy in &cfg.strategies {
        let r = match tau {
            Some(t) if strategy.is_thresholded() => ctx.evaluate_at(strategy, &sel, t)?,
            _ => ctx.best_for_selection(strategy, &sel)?,
        };
        results.push(r);
    }
    write_output(&cfg.out.join(RESULTS_FILE), csv(&results, ctx.algorithms()))?;
    Ok(results.iter().map(|r| describe(r, ctx.algorithms())).collect())
}

/// Grouped bars: for each k, one colored (optimized) and one gray (top-n) bar per strategy.
pub fn bars(
    strategies: &[Strategy],
    optimized: &[Vec<SearchResult>],
    topn: &[Vec<SearchResult>],
    k_max: usize,
) -> String {
    let margin = 60.0;
    let plot_h = 320.0;
    let bar_w = 10.0;
    let group_w = strategies.len() as f64 * 2.0 * bar_w + 16.0;
    let plot_w = group_w * k_max as f64;
    let width = margin * 2.0 + plot_w + 170.0;
    let height = margin * 2.0 + plot_h;
    let mut s = Svg::new(width, height);
    s.rect(0.0, 0.0, width, height, r#"fill="white""#);
    let y_of = |f1: f64| margin + (1.0 - f1.clamp(0.0, 1.0)) * plot_h;
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        s.line((margin, y_of(t)), (margin + plot_w, y_of(t)), r##"stroke="#dddddd""##);
        s.text((margin - 6.0, y_of(t) + 4.0), 11.0, "end", &format!("{t:.1}"));
    }
    for k in 1..=k_max {
        let x0 = margin + (k - 1) as f64 * group_w + 8.0;
        for (si, _) in strategies.iter().enumerate() {
            let x = x0 + si as f64 * 2.0 * bar_w;
            let mut draw = |rows: &[Vec<SearchResult>], dx: f64, fill: &str| {
                if let Some(r) = rows.get(si).and_then(|v| v.iter().find(|r| r.selection.k() == k)) {
                    let top = y_of(r.f1_bar);
                    s.rect(x + dx, top, bar_w, margin + plot_h - top, &format!(r#"fill="{fill}""#));
                }
            };
            draw(optimized, 0.0, color(si));
            draw(topn, bar_w, "#aaaaaa");
        }
        s.text(
            (x0 + group_w / 2.0 - 8.0, margin + plot_h + 16.0),
            11.0,
            "middle",
            &k.to_string(),
        );
    }
    s.rect(margin, margin, plot_w, plot_h, r#"fill="none" stroke="black""#);
    s.text(
        (margin + plot_w / 2.0, margin + plot_h + 38.0),
        13.0,
        "middle",
        "number of combined algorithms",
    );
    s.text((18.0, margin + plot_h / 2.0), 13.0, "middle", "F1");
    s.text(
        (margin + plot_w / 2.0, margin - 20.0),
        14.0,
        "middle",
        "Best weighted F1: optimized vs top-n",
    );
    let lx = margin + plot_w + 20.0;
    for (i, st) in strategies.iter().enumerate() {
        let y = margin + 10.0 + i as f64 * 18.0;
        s.rect(lx, y - 8.0, 12.0, 12.0, &format!(r#"fill="{}""#, color(i)));
        s.text((lx + 18.0, y + 2.0), 11.0, "start", st.as_str());
    }
    let y = margin + 10.0 + strategies.len() as f64 * 18.0;
    s.rect(lx, y - 8.0, 12.0, 12.0, r##"fill="#aaaaaa""##);
    s.text((lx + 18.0, y + 2.0), 11.0, "start", "top-n baseline");
    s.finish()
}
