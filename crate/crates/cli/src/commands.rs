//! Subcommand implementations.
//!
//! Output discipline: lines starting with `metric.` or `sweep.` are
//! machine-readable key=value pairs that are bit-deterministic for fixed
//! inputs and flags; floats use the shortest round-trip formatting so
//! parsing a line back yields the exact value. Wall-clock figures live in
//! `timing.` lines, which are the only nondeterministic machine output.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

use lbpspot_core::eval::{evaluate, EvalProtocol, EvalReport};
use lbpspot_core::retrieval::{build_index, query, CorpusItem, QueryParams};
use lbpspot_core::{extract_descriptor, extract_trace, ExtractConfig};

use crate::args::{DescribeArgs, EvaluateArgs, IndexArgs, QueryArgs};
use crate::imageio::{load_gray, save_label_png, save_zone_png};
use crate::manifest::Manifest;
use crate::store::{load_index, save_index};

pub fn cmd_index(args: &IndexArgs) -> Result<()> {
    let config = args.extract.to_config();
    config.validate()?;

    let manifest = Manifest::load(&args.manifest)?;
    let records = manifest.select(args.split.to_filter());
    if records.is_empty() {
        bail!(
            "manifest {} has no {} records",
            args.manifest.display(),
            args.split
        );
    }

    let mut corpus = Vec::with_capacity(records.len());
    let mut load_failures: Vec<(String, String)> = Vec::new();
    for record in &records {
        match load_gray(&manifest.resolve(record)) {
            Ok(image) => corpus.push(CorpusItem {
                id: record.path.clone(),
                page: record.page.clone(),
                label: record.label().map(str::to_string),
                image,
            }),
            Err(e) => load_failures.push((record.path.clone(), e.to_string())),
        }
    }
    if corpus.is_empty() {
        bail!(
            "none of the {} selected images could be loaded",
            records.len()
        );
    }

    let build = build_index::<f64>(&corpus, &config)?;
    for (id, error) in &load_failures {
        eprintln!("warning: {id}: {error}");
    }
    for failure in &build.failures {
        eprintln!("warning: {}: {}", failure.id, failure.error);
    }

    save_index(&args.output, &build.index, &config)
        .with_context(|| format!("writing index to {}", args.output.display()))?;

    let indexed = build.index.len();
    let failures = load_failures.len() + build.failures.len();
    let per_image = build.extract_seconds / indexed as f64;
    println!(
        "indexed {indexed} of {} words into {}",
        records.len(),
        args.output.display()
    );
    println!(
        "extraction: {:.3} s total, {:.2} ms per image, {:.0} images/s",
        build.extract_seconds,
        per_image * 1e3,
        indexed as f64 / build.extract_seconds
    );
    println!("metric.indexed={indexed}");
    println!("metric.failures={failures}");
    println!("metric.dim={}", build.index.dim());
    println!("metric.fingerprint={:#018x}", build.index.fingerprint());
    println!("timing.extract_seconds={}", build.extract_seconds);
    println!(
        "timing.images_per_second={}",
        indexed as f64 / build.extract_seconds
    );
    Ok(())
}

fn check_overrides(
    overrides: &crate::args::ExtractOverrides,
    config: &ExtractConfig,
) -> Result<()> {
    let mismatches = overrides.mismatches(config);
    if !mismatches.is_empty() {
        bail!(
            "extraction flags disagree with the index (drop them or rebuild): {}",
            mismatches.join("; ")
        );
    }
    Ok(())
}

pub fn cmd_query(args: &QueryArgs) -> Result<()> {
    let (index, config) = load_index(&args.index)?;
    check_overrides(&args.extract, &config)?;

    let image = load_gray(&args.image)?;
    let descriptor = extract_descriptor::<f64>(&image, &config)
        .with_context(|| format!("extracting descriptor from {}", args.image.display()))?;

    let params = QueryParams {
        k: args.k,
        lambda: args.lambda,
        width_filter: args.width_filter,
        exclude: None,
        query_id: Some(args.image.display().to_string()),
    };
    let ranked = query(&index, &descriptor, &params)?;
    let mut out = String::new();
    for (rank, hit) in ranked.hits.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            rank + 1,
            hit.id,
            hit.score,
            hit.label.as_deref().unwrap_or("")
        )?;
    }
    print!("{out}");
    Ok(())
}

fn percent(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

fn report_text(
    index_len: usize,
    lambda: f64,
    exclude_self: bool,
    report: &EvalReport,
    sweep: Option<(&[(f64, EvalReport)], f64)>,
) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "queries: {} of {index_len} entries", report.query_count);
    let _ = writeln!(
        w,
        "scoreable (>=1 relevant partner): {}",
        report.scoreable
    );
    match (report.map, report.p_at_1, report.r_precision) {
        (Some(map), Some(p1), Some(rp)) => {
            let _ = writeln!(w, "mAP: {}", percent(map));
            let _ = writeln!(w, "P@1 (scoreable): {}", percent(p1));
            let _ = writeln!(w, "rPrecision: {}", percent(rp));
        }
        _ => {
            let _ = writeln!(w, "no scoreable queries; aggregate metrics undefined");
        }
    }
    let _ = writeln!(w, "P@1 (all queries): {}", percent(report.p_at_1_all));
    let _ = writeln!(w, "query wall time: {:.3} s", report.query_seconds);

    if let Some((runs, chosen)) = sweep {
        for (i, (l, r)) in runs.iter().enumerate() {
            let _ = writeln!(w, "sweep.{i}.lambda={l}");
            if let Some(map) = r.map {
                let _ = writeln!(w, "sweep.{i}.map={map}");
            }
            if let Some(p1) = r.p_at_1 {
                let _ = writeln!(w, "sweep.{i}.p_at_1={p1}");
            }
            if let Some(rp) = r.r_precision {
                let _ = writeln!(w, "sweep.{i}.r_precision={rp}");
            }
        }
        let _ = writeln!(w, "metric.chosen_lambda={chosen}");
    }

    let _ = writeln!(w, "metric.lambda={lambda}");
    let _ = writeln!(w, "metric.exclude_self={}", if exclude_self { 1 } else { 0 });
    let _ = writeln!(w, "metric.query_count={}", report.query_count);
    let _ = writeln!(w, "metric.scoreable={}", report.scoreable);
    if let Some(map) = report.map {
        let _ = writeln!(w, "metric.map={map}");
    }
    if let Some(p1) = report.p_at_1 {
        let _ = writeln!(w, "metric.p_at_1={p1}");
    }
    let _ = writeln!(w, "metric.p_at_1_all={}", report.p_at_1_all);
    if let Some(rp) = report.r_precision {
        let _ = writeln!(w, "metric.r_precision={rp}");
    }
    let _ = writeln!(w, "timing.query_seconds={}", report.query_seconds);
    out
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (index, config) = load_index(&args.index)?;
    check_overrides(&args.extract, &config)?;

    let protocol_for = |lambda: f64| EvalProtocol::<f64> {
        lambda,
        exclude_self: args.exclude_self,
        width_filter: args.width_filter,
    };

    let output = match &args.lambda_sweep {
        Some(lambdas) if !lambdas.is_empty() => {
            let mut runs: Vec<(f64, EvalReport)> = Vec::with_capacity(lambdas.len());
            for &lambda in lambdas {
                runs.push((lambda, evaluate(&index, &protocol_for(lambda))?));
            }
            // Ties keep the earliest lambda in the sweep so repeated
            // runs agree on the choice.
            let mut chosen_idx = 0usize;
            for i in 1..runs.len() {
                let best = runs[chosen_idx].1.map.unwrap_or(f64::NEG_INFINITY);
                let cand = runs[i].1.map.unwrap_or(f64::NEG_INFINITY);
                if cand > best {
                    chosen_idx = i;
                }
            }
            let chosen_lambda = runs[chosen_idx].0;
            let chosen_report = runs[chosen_idx].1.clone();
            report_text(
                index.len(),
                chosen_lambda,
                args.exclude_self,
                &chosen_report,
                Some((&runs, chosen_lambda)),
            )
        }
        _ => {
            let report = evaluate(&index, &protocol_for(args.lambda))?;
            report_text(index.len(), args.lambda, args.exclude_self, &report, None)
        }
    };

    print!("{output}");
    if let Some(path) = &args.report {
        std::fs::write(path, &output)
            .with_context(|| format!("writing report to {}", path.display()))?;
    }
    Ok(())
}

pub fn cmd_describe(args: &DescribeArgs) -> Result<()> {
    let config = args.extract.to_config();
    config.validate()?;

    let image = load_gray(&args.image)?;
    let trace = extract_trace::<f64>(&image, &config)
        .with_context(|| format!("extracting descriptor from {}", args.image.display()))?;

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "image={}", args.image.display());
    let _ = writeln!(w, "size={}x{}", image.width(), image.height());
    let _ = writeln!(w, "otsu_threshold={}", trace.threshold.value);
    let _ = writeln!(
        w,
        "otsu_degenerate={}",
        if trace.threshold.degenerate { 1 } else { 0 }
    );
    let _ = writeln!(w, "foreground={}", trace.mask.foreground_count());
    let _ = writeln!(w, "edges={}", trace.edges.foreground_count());
    let _ = writeln!(w, "zone_count={}", trace.zones.zone_count());

    let mut zone_index = 0usize;
    for level in 1..=trace.zones.levels() {
        for zone in trace.zones.level(level) {
            let ink = (zone.top..zone.bottom)
                .flat_map(|y| (zone.left..zone.right).map(move |x| (x, y)))
                .filter(|&(x, y)| trace.mask.get(x, y))
                .count();
            let _ = writeln!(
                w,
                "zone.{zone_index}: level={level} rect=[{},{})x[{},{}) area={} ink={ink} edge_ratio={}",
                zone.left,
                zone.right,
                zone.top,
                zone.bottom,
                zone.area(),
                trace.edge_ratios[zone_index]
            );
            zone_index += 1;
        }
    }

    let _ = writeln!(w, "descriptor.width={}", trace.descriptor.width);
    let _ = writeln!(w, "descriptor.dim={}", trace.descriptor.dim());
    let values: Vec<String> = trace
        .descriptor
        .values
        .iter()
        .map(|v| v.to_string())
        .collect();
    let _ = writeln!(w, "descriptor.values={}", values.join(","));
    print!("{out}");

    if let Some(path) = &args.dump_lbp {
        save_label_png(path, &trace.labels)?;
        eprintln!("wrote LBP label map to {}", path.display());
    }
    if let Some(path) = &args.dump_zones {
        save_zone_png(path, &trace.mask, &trace.zones)?;
        eprintln!("wrote zone overlay to {}", path.display());
    }
    Ok(())
}
