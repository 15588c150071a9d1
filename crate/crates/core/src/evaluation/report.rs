use std::fs;
use std::io::Write;
use std::path::Path;

use super::metrics::{merge_seeds, MethodSummary, SampleRecord};
use super::properties::{
    gravy, manifold_distance, mutation_frequencies, slice_by_edit_distance, timing_profile, SliceRow,
};
use crate::error::Result;
use crate::latentworld::Codebook;

pub const SUMMARY_HEADER: [&str; 9] = [
    "method",
    "seeds",
    "runs",
    "success_rate",
    "success_rate_std",
    "adversarial_rate",
    "adversarial_rate_std",
    "edit_mean",
    "edit_std",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// One row per run. `manifold_distance` is the plausibility stand-in (mean
/// distance of the final embedding's rows to the codebook).
pub fn write_campaign_csv(path: &Path, records: &[SampleRecord], codebook: &Codebook) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method",
        "seed",
        "id",
        "success",
        "adversarial",
        "steps",
        "edit_distance",
        "final_confidence",
        "duration_s",
        "mutated_positions",
        "leakage",
        "manifold_distance",
        "gravy",
    ])?;
    for r in records {
        let res = &r.result;
        let positions: Vec<String> = res.mutated_positions().iter().map(|p| p.to_string()).collect();
        w.write_record([
            r.method.name().to_string(),
            r.seed.to_string(),
            r.id.to_string(),
            res.success.to_string(),
            res.adversarial.to_string(),
            res.steps_used.to_string(),
            res.edit_distance.to_string(),
            format!("{:.6}", res.final_confidence),
            format!("{:.6}", res.duration.as_secs_f64()),
            positions.join(";"),
            res.leakage.to_string(),
            format!("{:.6}", manifold_distance(&res.embedding, codebook)),
            format!("{:.6}", gravy(&res.sequence)?),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text sidecar: `method seed id original counterfactual`.
pub fn write_counterfactuals(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for r in records {
        writeln!(f, "{} {} {} {} {}", r.method, r.seed, r.id, r.result.original, r.result.sequence)?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, summaries: &[MethodSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        let mut row = vec![s.method.name().to_string()];
        row.extend(s.metric_fields());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slice_csv(path: &Path, rows: &[SliceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "edit_distance", "count", "gravy_mean", "manifold_distance_mean"])?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.edit_distance.to_string(),
            r.count.to_string(),
            opt(r.gravy_mean),
            opt(r.manifold_mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing_csv(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "mean_seconds", "gradient_share", "projection_share", "encoding_share", "other_share"])?;
    for t in timing_profile(records) {
        w.write_record([
            t.method.name().to_string(),
            format!("{:.6}", t.mean_seconds),
            format!("{:.6}", t.gradient_share),
            format!("{:.6}", t.projection_share),
            format!("{:.6}", t.encoding_share),
            format!("{:.6}", t.other_share),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mutfreq_csv(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "position", "residue", "count"])?;
    for m in mutation_frequencies(records) {
        w.write_record([
            m.method.name().to_string(),
            m.position.to_string(),
            m.residue.to_string(),
            m.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every report file into `dir`. Slices are emitted for edit
/// distances `1..=max_slice`.
pub fn write_report(dir: &Path, records: &[SampleRecord], codebook: &Codebook, max_slice: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_campaign_csv(&dir.join("campaign.csv"), records, codebook)?;
    write_counterfactuals(&dir.join("counterfactuals.txt"), records)?;
    write_summary_csv(&dir.join("summary.csv"), &merge_seeds(records)?)?;
    for d in 1..=max_slice {
        write_slice_csv(&dir.join(format!("slices_d{d}.csv")), &slice_by_edit_distance(records, d, codebook)?)?;
    }
    write_timing_csv(&dir.join("timing.csv"), records)?;
    write_mutfreq_csv(&dir.join("mutfreq.csv"), records)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;
    use crate::evaluation::Method;
    use crate::gradcore::Embedding;
    use crate::latentworld::{build_codebook, ResidueSequence};
    use crate::optimizer::{CounterfactualResult, PhaseTimes};

    #[test]
    fn report_files_are_written_and_summary_is_stable() {
        let cb = build_codebook(20, 4, 1, 1.0).unwrap();
        let orig: ResidueSequence = "AAAA".parse().unwrap();
        let mk = |method, success, seq: &str, ms| SampleRecord {
            method,
            seed: 0,
            id: 7,
            result: CounterfactualResult {
                embedding: Embedding::zeros(4, 4),
                sequence: seq.parse().unwrap(),
                original: orig.clone(),
                success,
                adversarial: false,
                steps_used: 0,
                trace: vec![0.0],
                final_confidence: 0.97,
                edit_distance: 1,
                duration: Duration::from_millis(ms),
                phases: PhaseTimes::default(),
                mask_union: vec![false; 4],
                leakage: 1,
            },
        };
        let dir = tempfile::tempdir().unwrap();
        let a = vec![mk(Method::Mccop, true, "AWAA", 3), mk(Method::Ga, false, "AAAC", 5)];
        write_report(dir.path(), &a, &cb, 2).unwrap();
        for f in [
            "campaign.csv",
            "summary.csv",
            "slices_d1.csv",
            "slices_d2.csv",
            "timing.csv",
            "mutfreq.csv",
            "counterfactuals.txt",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let first = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(first.starts_with(&SUMMARY_HEADER.join(",")));
        assert_eq!(first.lines().count(), 3);
        // Durations differ; the summary must not.
        let b = vec![mk(Method::Mccop, true, "AWAA", 90), mk(Method::Ga, false, "AAAC", 1)];
        write_report(dir.path(), &b, &cb, 2).unwrap();
        assert_eq!(first, fs::read_to_string(dir.path().join("summary.csv")).unwrap());
        let side = fs::read_to_string(dir.path().join("counterfactuals.txt")).unwrap();
        assert_eq!(side.lines().next().unwrap(), "mccop 0 7 AAAA AWAA");
    }
}
