//! File formats shared by the command-line tools.
//!
//! * Labelled pool: CSV `label,f0,...,f{d-1}`, features with at most 8
//!   significant digits.
//! * Sample: CSV `f0,...,f{d-1}`, one row per document.
//! * Ground truth and submissions: CSV `id,p0,...,p{n-1}` with 6 decimal
//!   places. A truth file is a valid (perfect) submission.
//! * Score report: CSV `id,rae,ae`, a final `mean` row, preceded by a
//!   `#` metadata comment naming the system.
//! * Ranking: CSV `rank,system,mean_rae,mean_ae`.
//! * Significance: CSV `system_a,system_b,w,pairs,p_value,method,significant`.
//! * Model: line-oriented text, versioned header, 17 significant digits.
//!
//! Writers are deterministic: the same values always produce the same bytes.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};

use ndarray::Array2;

use crate::classifier::{ClassifierModel, TrainingSummary};
use crate::data::{LabelledPool, Sample};
use crate::error::{Error, Result};
use crate::evaluation::{validate_entry, PairwiseResult, RankingTable, RawEntry, ScoreReport};
use crate::prevalence::{MetricContext, Prevalence};
use crate::quantifiers::{FittedQuantifier, MatrixMode, MisclassificationEstimate, MisclassificationMatrix};
use crate::wilcoxon::ALPHA;

pub const MODEL_MAGIC: &str = "quantbench-model";
pub const MODEL_VERSION: u32 = 1;

/// Shortest decimal that round-trips `x` rounded to 8 significant digits.
pub fn fmt_feature(x: f64) -> String {
    let rounded: f64 = format!("{x:.7e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn fmt_prevalence(x: f64) -> String {
    format!("{x:.6}")
}

/// 17 significant digits: reloads to the identical `f64`.
pub fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

/// Plain decimal down to 1e-4, scientific notation below.
pub fn fmt_p_value(p: f64) -> String {
    if p == 0.0 || p >= 1e-4 {
        format!("{p}")
    } else {
        format!("{p:e}")
    }
}

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: cannot parse {what} '{field}'")))
}

fn parse_u64(field: &str, what: &str, line: usize) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: cannot parse {what} '{field}'")))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(writer)
}

/// Checks that `header` is `prefix..., {stem}0, {stem}1, ...` and returns
/// how many numbered columns it has.
fn numbered_columns(header: &csv::StringRecord, prefix: &[&str], stem: &str) -> Result<usize> {
    let fields: Vec<&str> = header.iter().collect();
    let expected_prefix_ok =
        fields.len() > prefix.len() && fields[..prefix.len()] == *prefix;
    let numbered = &fields[prefix.len().min(fields.len())..];
    let numbered_ok = numbered
        .iter()
        .enumerate()
        .all(|(i, f)| *f == format!("{stem}{i}"));
    if !expected_prefix_ok || !numbered_ok {
        let mut want: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
        want.push(format!("{stem}0"));
        want.push("...".into());
        return Err(Error::Format(format!(
            "bad header '{}', expected '{}'",
            fields.join(","),
            want.join(",")
        )));
    }
    Ok(numbered.len())
}

fn header(prefix: &[&str], stem: &str, count: usize) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((0..count).map(|i| format!("{stem}{i}")))
        .collect()
}

pub fn write_pool<W: Write>(pool: &LabelledPool, writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(header(&["label"], "f", pool.dim()))?;
    for (i, &label) in pool.labels().iter().enumerate() {
        let mut record = vec![label.to_string()];
        record.extend(pool.row(i).iter().map(|&x| fmt_feature(x)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a pool. The class count is `num_classes` when given, otherwise one
/// more than the largest label.
pub fn read_pool<R: Read>(reader: R, num_classes: Option<usize>) -> Result<LabelledPool> {
    let mut r = csv_reader(reader);
    let dim = numbered_columns(r.headers()?, &["label"], "f")?;
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != dim + 1 {
            return Err(Error::Format(format!(
                "line {line}: expected {} fields, got {}",
                dim + 1,
                record.len()
            )));
        }
        labels.push(parse_u64(&record[0], "label", line)? as usize);
        for field in record.iter().skip(1) {
            flat.push(parse_f64(field, "feature", line)?);
        }
    }
    let n = match num_classes {
        Some(n) => n,
        None => labels.iter().max().map_or(0, |m| m + 1),
    };
    let features = Array2::from_shape_vec((labels.len(), dim), flat)
        .map_err(|e| Error::Format(e.to_string()))?;
    LabelledPool::new(features, labels, n)
}

pub fn write_sample<W: Write>(sample: &Sample, writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(header(&[], "f", sample.dim()))?;
    for row in sample.features.rows() {
        w.write_record(row.iter().map(|&x| fmt_feature(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sample<R: Read>(reader: R, id: u64) -> Result<Sample> {
    let mut r = csv_reader(reader);
    let dim = numbered_columns(r.headers()?, &[], "f")?;
    let mut flat = Vec::new();
    let mut rows = 0;
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != dim {
            return Err(Error::Format(format!(
                "line {line}: expected {dim} fields, got {}",
                record.len()
            )));
        }
        for field in record.iter() {
            flat.push(parse_f64(field, "feature", line)?);
        }
        rows += 1;
    }
    let features =
        Array2::from_shape_vec((rows, dim), flat).map_err(|e| Error::Format(e.to_string()))?;
    Sample::unlabelled(id, features)
}

/// Writes `id,p0,...` rows in the given order.
pub fn write_prevalence_table<'a, W, I>(rows: I, n: usize, writer: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (u64, &'a Prevalence)>,
{
    let mut w = csv_writer(writer);
    w.write_record(header(&["id"], "p", n))?;
    for (id, p) in rows {
        if p.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: p.len(),
            });
        }
        let mut record = vec![id.to_string()];
        record.extend(p.as_slice().iter().map(|&v| fmt_prevalence(v)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an `id,p0,...` table without validating the vectors. Returns the
/// class count from the header and the rows in file order.
pub fn read_prevalence_table<R: Read>(reader: R) -> Result<(usize, Vec<RawEntry>)> {
    let mut r = csv_reader(reader);
    let n = numbered_columns(r.headers()?, &["id"], "p")?;
    let mut entries = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let sample_id = parse_u64(&record[0], "sample id", line)?;
        let values = record
            .iter()
            .skip(1)
            .map(|f| parse_f64(f, "prevalence", line))
            .collect::<Result<Vec<_>>>()?;
        entries.push(RawEntry { sample_id, values });
    }
    Ok((n, entries))
}

/// Reads a ground-truth table: unique ids, each row a valid vector (same
/// tolerance and renormalization as submissions). Sorted by id.
pub fn read_truth<R: Read>(reader: R) -> Result<(usize, Vec<(u64, Prevalence)>)> {
    let (n, entries) = read_prevalence_table(reader)?;
    let mut seen = BTreeSet::new();
    let mut rows = Vec::with_capacity(entries.len());
    for entry in &entries {
        if !seen.insert(entry.sample_id) {
            return Err(Error::Validation {
                sample_id: entry.sample_id,
                reason: "duplicate sample id in ground truth".into(),
            });
        }
        rows.push((entry.sample_id, validate_entry(entry, n)?));
    }
    if rows.is_empty() {
        return Err(Error::Empty("ground truth"));
    }
    rows.sort_by_key(|(id, _)| *id);
    Ok((n, rows))
}

pub fn write_report<W: Write>(report: &ScoreReport, ctx: &MetricContext, mut writer: W) -> Result<()> {
    writeln!(
        writer,
        "# system={}; sample_size={}; epsilon={}; rae=smoothed; ae=unsmoothed",
        report.system,
        ctx.sample_size(),
        ctx.epsilon()
    )?;
    let mut w = csv_writer(writer);
    w.write_record(["id", "rae", "ae"])?;
    for ((id, rae), ae) in report.sample_ids.iter().zip(&report.rae).zip(&report.ae) {
        w.write_record([id.to_string(), rae.to_string(), ae.to_string()])?;
    }
    w.write_record([
        "mean".to_string(),
        report.mean_rae.to_string(),
        report.mean_ae.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Reads a report written by [`write_report`]. Means are recomputed from
/// the per-sample rows and checked against the summary row.
pub fn read_report<R: Read>(reader: R) -> Result<ScoreReport> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let system = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# system="))
        .and_then(|rest| rest.split(';').next())
        .ok_or_else(|| Error::Format("report is missing its '# system=' line".into()))?
        .to_string();

    let mut r = csv_reader(text.as_bytes());
    if r.headers()?.iter().collect::<Vec<_>>() != ["id", "rae", "ae"] {
        return Err(Error::Format("bad report header, expected 'id,rae,ae'".into()));
    }
    let (mut ids, mut rae, mut ae) = (Vec::new(), Vec::new(), Vec::new());
    let mut summary = None;
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 3;
        if record.len() != 3 {
            return Err(Error::Format(format!("line {line}: expected 3 fields")));
        }
        let r_val = parse_f64(&record[1], "rae", line)?;
        let a_val = parse_f64(&record[2], "ae", line)?;
        if &record[0] == "mean" {
            summary = Some((r_val, a_val));
            continue;
        }
        ids.push(parse_u64(&record[0], "sample id", line)?);
        rae.push(r_val);
        ae.push(a_val);
    }
    let report = ScoreReport::from_scores(system, ids, rae, ae)?;
    match summary {
        Some((m_rae, m_ae)) if m_rae == report.mean_rae && m_ae == report.mean_ae => Ok(report),
        Some(_) => Err(Error::Format(format!(
            "summary row of '{}' does not match its per-sample scores",
            report.system
        ))),
        None => Err(Error::Format("report is missing its 'mean' row".into())),
    }
}

pub fn write_ranking<W: Write>(table: &RankingTable, writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["rank", "system", "mean_rae", "mean_ae"])?;
    for row in &table.rows {
        w.write_record([
            row.rank.to_string(),
            row.system.clone(),
            row.mean_rae.to_string(),
            row.mean_ae.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_significance<W: Write>(pairs: &[PairwiseResult], mut writer: W) -> Result<()> {
    writeln!(
        writer,
        "# two-sided Wilcoxon signed-rank test on per-sample RAE; alpha={ALPHA}"
    )?;
    let mut w = csv_writer(writer);
    w.write_record(["system_a", "system_b", "w", "pairs", "p_value", "method", "significant"])?;
    for pair in pairs {
        let r = &pair.result;
        w.write_record([
            pair.system_a.clone(),
            pair.system_b.clone(),
            r.statistic.to_string(),
            r.pairs.to_string(),
            fmt_p_value(r.p_value),
            r.method.to_string(),
            r.significant().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_row<W: Write>(w: &mut W, key: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    write!(w, "{key}")?;
    for v in values {
        write!(w, " {}", fmt_exact(v))?;
    }
    writeln!(w)?;
    Ok(())
}

pub fn write_model<W: Write>(q: &FittedQuantifier, mut w: W) -> Result<()> {
    let model = &q.model;
    let (n, d) = model.weights().dim();
    writeln!(w, "{MODEL_MAGIC} {MODEL_VERSION}")?;
    writeln!(w, "classes {n}")?;
    writeln!(w, "dim {d}")?;
    write_row(&mut w, "training_prevalence", q.summary.training_prevalence.as_slice().iter().copied())?;
    write_row(&mut w, "loss_trace", q.summary.loss_trace.iter().copied())?;
    write_row(&mut w, "bias", model.biases().iter().copied())?;
    for row in model.weights().rows() {
        write_row(&mut w, "weight", row.iter().copied())?;
    }
    for row in q.misclassification.hard.entries().rows() {
        write_row(&mut w, "hard", row.iter().copied())?;
    }
    for row in q.misclassification.soft.entries().rows() {
        write_row(&mut w, "soft", row.iter().copied())?;
    }
    w.flush()?;
    Ok(())
}

struct ModelLines<R> {
    lines: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> ModelLines<R> {
    fn next_keyed(&mut self, key: &str) -> Result<Vec<String>> {
        self.line += 1;
        let text = self
            .lines
            .next()
            .ok_or_else(|| Error::Format(format!("model file ends before '{key}'")))??;
        let mut parts = text.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.map(str::to_string).collect()),
            other => Err(Error::Format(format!(
                "model line {}: expected '{key}', found '{}'",
                self.line,
                other.unwrap_or("")
            ))),
        }
    }

    fn floats(&mut self, key: &str, len: Option<usize>) -> Result<Vec<f64>> {
        let line = self.line + 1;
        let fields = self.next_keyed(key)?;
        if let Some(len) = len {
            if fields.len() != len {
                return Err(Error::Format(format!(
                    "model line {line}: '{key}' has {} values, expected {len}",
                    fields.len()
                )));
            }
        }
        fields.iter().map(|f| parse_f64(f, key, line)).collect()
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let line = self.line + 1;
        let fields = self.next_keyed(key)?;
        match fields.as_slice() {
            [v] => Ok(parse_u64(v, key, line)? as usize),
            _ => Err(Error::Format(format!("model line {line}: bad '{key}'"))),
        }
    }

    fn matrix(&mut self, key: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let mut flat = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            flat.extend(self.floats(key, Some(cols))?);
        }
        Array2::from_shape_vec((rows, cols), flat).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn read_model<R: Read>(reader: R) -> Result<FittedQuantifier> {
    let mut lines = ModelLines {
        lines: BufReader::new(reader).lines(),
        line: 0,
    };
    let version = lines.next_keyed(MODEL_MAGIC)?;
    if version != [MODEL_VERSION.to_string()] {
        return Err(Error::Format(format!(
            "unsupported model version {version:?}, expected {MODEL_VERSION}"
        )));
    }
    let n = lines.count("classes")?;
    let d = lines.count("dim")?;
    let training_prevalence = Prevalence::new(lines.floats("training_prevalence", Some(n))?)?;
    let loss_trace = lines.floats("loss_trace", None)?;
    let biases = lines.floats("bias", Some(n))?;
    let weights = lines.matrix("weight", n, d)?;
    let hard = lines.matrix("hard", n, n)?;
    let soft = lines.matrix("soft", n, n)?;
    Ok(FittedQuantifier {
        model: ClassifierModel::new(weights, biases.into())?,
        summary: TrainingSummary {
            training_prevalence,
            loss_trace,
        },
        misclassification: MisclassificationEstimate {
            hard: MisclassificationMatrix::new(hard, MatrixMode::Hard)?,
            soft: MisclassificationMatrix::new(soft, MatrixMode::Soft)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn feature_formatting() {
        assert_eq!(fmt_feature(6.123456789), "6.1234568");
        assert_eq!(fmt_feature(-0.000123456789), "-0.00012345679");
        assert_eq!(fmt_feature(0.0), "0");
        assert_eq!(fmt_feature(1234567890.0), "1234567900");
        assert_eq!(fmt_prevalence(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_p_value(0.25), "0.25");
        assert_eq!(fmt_p_value(1.5e-9), "1.5e-9");
    }

    #[test]
    fn pool_file_layout() {
        let pool = LabelledPool::new(array![[1.5, -2.0], [0.25, 3.0]], vec![1, 0], 2).unwrap();
        let mut buf = Vec::new();
        write_pool(&pool, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "label,f0,f1\n1,1.5,-2\n0,0.25,3\n");
        assert_eq!(read_pool(buf.as_slice(), Some(2)).unwrap(), pool);
        assert_eq!(read_pool(buf.as_slice(), None).unwrap(), pool);
    }

    #[test]
    fn rejects_bad_headers_and_rows() {
        assert!(read_pool("lbl,f0\n0,1\n".as_bytes(), None).is_err());
        assert!(read_pool("label,f1\n0,1\n".as_bytes(), None).is_err());
        assert!(read_pool("label,f0\n0,1,2\n".as_bytes(), None).is_err());
        assert!(read_sample("f0,f1\n1,x\n".as_bytes(), 0).is_err());
        assert!(read_sample("f0\n".as_bytes(), 0).is_err());
        assert!(read_truth("id,p0,p1\n0,0.5,0.5\n0,0.5,0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn truth_table_layout() {
        let p = Prevalence::new(vec![0.25, 0.75]).unwrap();
        let mut buf = Vec::new();
        write_prevalence_table([(3u64, &p)], 2, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "id,p0,p1\n3,0.250000,0.750000\n");
        let (n, rows) = read_truth(buf.as_slice()).unwrap();
        assert_eq!(n, 2);
        assert_eq!(rows, vec![(3, p)]);
    }

    #[test]
    fn report_round_trip() {
        let ctx = MetricContext::new(250).unwrap();
        let report =
            ScoreReport::from_scores("cc".into(), vec![0, 1], vec![0.1, 1.0 / 3.0], vec![0.05, 0.2]).unwrap();
        let mut buf = Vec::new();
        write_report(&report, &ctx, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# system=cc; sample_size=250; epsilon=0.002"));
        assert_eq!(read_report(buf.as_slice()).unwrap(), report);

        let tampered = text.replace("mean,", "mean,9");
        assert!(read_report(tampered.as_bytes()).is_err());
    }

    #[test]
    fn model_round_trip_is_exact() {
        let q = FittedQuantifier {
            model: ClassifierModel::new(array![[0.1, 1.0 / 3.0], [-2.5e-7, 7.0]], array![1e-300, -0.3])
                .unwrap(),
            summary: TrainingSummary {
                training_prevalence: Prevalence::new(vec![0.3, 0.7]).unwrap(),
                loss_trace: vec![0.69, 0.5, 0.1],
            },
            misclassification: MisclassificationEstimate {
                hard: MisclassificationMatrix::identity(2, MatrixMode::Hard),
                soft: MisclassificationMatrix::new(array![[0.9, 0.2], [0.1, 0.8]], MatrixMode::Soft).unwrap(),
            },
        };
        let mut buf = Vec::new();
        write_model(&q, &mut buf).unwrap();
        assert_eq!(read_model(buf.as_slice()).unwrap(), q);

        let text = String::from_utf8(buf).unwrap().replacen("model 1", "model 2", 1);
        assert!(read_model(text.as_bytes()).is_err());
    }
}
