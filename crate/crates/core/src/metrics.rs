//! Aggregation of judged records into correctness, reversion and
//! preference rates, plain-text and CSV tables, and LOC-binned series.

use crate::harness::{ChoiceRecord, Chosen, Judgment, PredictionRecord, Variant};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write;

/// A mean of per-unit fractions, stored as its sum and count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub sum: f64,
    pub count: usize,
}

impl Rate {
    pub fn add(&mut self, x: f64) {
        self.sum += x;
        self.count += 1;
    }

    /// Percentage, or `None` with an empty denominator.
    pub fn percent(&self) -> Option<f64> {
        (self.count > 0).then(|| 100.0 * self.sum / self.count as f64)
    }

    pub fn show(&self) -> String {
        self.percent().map_or("-".to_string(), |p| format!("{p:.1}"))
    }
}

/// Fraction of samples with the given judgment.
pub fn pass_at_1(records: &[&PredictionRecord], j: Judgment) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.judgment == j).count() as f64 / records.len() as f64
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionMetrics {
    pub oc: Rate,
    pub mc: Rate,
    pub or: Rate,
    pub mr: Rate,
    pub other_original: Rate,
    pub other_mutated: Rate,
    pub unparsed_original: Rate,
    pub unparsed_mutated: Rate,
    /// Samples lost to transport failures.
    pub unanswered: usize,
    /// Problems excluded from reversion for boolean outputs.
    pub boolean_excluded: usize,
}

type Groups<'a> = BTreeMap<(&'a str, Variant), Vec<&'a PredictionRecord>>;

fn group(records: &[PredictionRecord]) -> Groups<'_> {
    let mut g: Groups = BTreeMap::new();
    for r in records {
        g.entry((r.problem_id.as_str(), r.variant)).or_default().push(r);
    }
    g
}

fn prediction_from_groups<'a>(groups: impl Iterator<Item = (Variant, &'a Vec<&'a PredictionRecord>)>) -> PredictionMetrics {
    let mut m = PredictionMetrics::default();
    for (variant, rs) in groups {
        let boolean = rs.iter().any(|r| r.boolean_output);
        m.unanswered += rs.iter().filter(|r| r.error.is_some()).count();
        let (c, r, o, u) = match variant {
            Variant::Original => (&mut m.oc, &mut m.or, &mut m.other_original, &mut m.unparsed_original),
            Variant::Mutated => (&mut m.mc, &mut m.mr, &mut m.other_mutated, &mut m.unparsed_mutated),
        };
        c.add(pass_at_1(rs, Judgment::Correct));
        o.add(pass_at_1(rs, Judgment::Other));
        u.add(pass_at_1(rs, Judgment::Unparsed));
        if boolean {
            if variant == Variant::Original {
                m.boolean_excluded += 1;
            }
        } else {
            r.add(pass_at_1(rs, Judgment::Reverted));
        }
    }
    m
}

pub fn prediction_metrics(records: &[PredictionRecord]) -> PredictionMetrics {
    let g = group(records);
    prediction_from_groups(g.iter().map(|((_, v), rs)| (*v, rs)))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChoiceMetrics {
    pub pref: Rate,
    pub oc: Rate,
    pub or: Rate,
    pub mc: Rate,
    pub mr: Rate,
    /// Runs whose chosen program could not be read; outside every rate.
    pub unparsed_choice: usize,
    pub unanswered: usize,
}

pub fn choice_metrics(records: &[ChoiceRecord]) -> ChoiceMetrics {
    let mut sorted: Vec<&ChoiceRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (a.problem_id.as_str(), a.run).cmp(&(b.problem_id.as_str(), b.run)));
    let mut m = ChoiceMetrics::default();
    for r in sorted {
        if r.error.is_some() {
            m.unanswered += 1;
        }
        let indicator = |j: Judgment| if r.judgment == j { 1.0 } else { 0.0 };
        let (c, rev) = match r.chosen {
            Chosen::Unparsed => {
                m.unparsed_choice += 1;
                continue;
            }
            Chosen::Original => {
                m.pref.add(1.0);
                (&mut m.oc, &mut m.or)
            }
            Chosen::Mutated => {
                m.pref.add(0.0);
                (&mut m.mc, &mut m.mr)
            }
        };
        c.add(indicator(Judgment::Correct));
        if !r.boolean_output {
            rev.add(indicator(Judgment::Reverted));
        }
    }
    m
}

/// Per problem-variant sample counts: correct, reverted, other, unparsed.
pub fn partition_counts(records: &[PredictionRecord]) -> BTreeMap<(String, Variant), [usize; 4]> {
    let mut out: BTreeMap<(String, Variant), [usize; 4]> = BTreeMap::new();
    for r in records {
        let k = match r.judgment {
            Judgment::Correct => 0,
            Judgment::Reverted => 1,
            Judgment::Other => 2,
            Judgment::Unparsed => 3,
        };
        out.entry((r.problem_id.clone(), r.variant)).or_default()[k] += 1;
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub dataset: String,
    pub model: String,
    pub prediction: Option<PredictionMetrics>,
    pub choice: Option<ChoiceMetrics>,
}

/// Metrics per (dataset, model).
pub fn metrics_table(prediction: &[PredictionRecord], choice: &[ChoiceRecord]) -> Vec<Row> {
    let mut pred: BTreeMap<(String, String), Vec<PredictionRecord>> = BTreeMap::new();
    for r in prediction {
        pred.entry((r.dataset.clone(), r.model.clone())).or_default().push(r.clone());
    }
    let mut ch: BTreeMap<(String, String), Vec<ChoiceRecord>> = BTreeMap::new();
    for r in choice {
        ch.entry((r.dataset.clone(), r.model.clone())).or_default().push(r.clone());
    }
    let mut keys: Vec<(String, String)> = pred.keys().chain(ch.keys()).cloned().collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|k| Row {
            prediction: pred.get(&k).map(|rs| prediction_metrics(rs)),
            choice: ch.get(&k).map(|rs| choice_metrics(rs)),
            dataset: k.0,
            model: k.1,
        })
        .collect()
}

fn with_n(r: &Rate) -> String {
    format!("{} ({})", r.show(), r.count)
}

/// Aligned plain-text table; denominators in parentheses.
pub fn render_text(rows: &[Row]) -> String {
    let mut lines: Vec<Vec<String>> = Vec::new();
    let pred_rows: Vec<&Row> = rows.iter().filter(|r| r.prediction.is_some()).collect();
    if !pred_rows.is_empty() {
        lines.push(
            ["Prediction", "Model", "OC", "MC", "OR", "MR", "Other(O/M)", "Unparsed(O/M)", "Unanswered"]
                .map(String::from)
                .to_vec(),
        );
        for r in pred_rows {
            let p = r.prediction.as_ref().unwrap();
            lines.push(vec![
                r.dataset.clone(),
                r.model.clone(),
                with_n(&p.oc),
                with_n(&p.mc),
                with_n(&p.or),
                with_n(&p.mr),
                format!("{}/{}", p.other_original.show(), p.other_mutated.show()),
                format!("{}/{}", p.unparsed_original.show(), p.unparsed_mutated.show()),
                p.unanswered.to_string(),
            ]);
        }
    }
    let choice_rows: Vec<&Row> = rows.iter().filter(|r| r.choice.is_some()).collect();
    let split = lines.len();
    if !choice_rows.is_empty() {
        lines.push(["Choice", "Model", "Pref", "OC", "OR", "MC", "MR", "UnparsedChoice", "Unanswered"].map(String::from).to_vec());
        for r in choice_rows {
            let c = r.choice.as_ref().unwrap();
            lines.push(vec![
                r.dataset.clone(),
                r.model.clone(),
                with_n(&c.pref),
                with_n(&c.oc),
                with_n(&c.or),
                with_n(&c.mc),
                with_n(&c.mr),
                c.unparsed_choice.to_string(),
                c.unanswered.to_string(),
            ]);
        }
    }
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| lines.iter().filter_map(|l| l.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, l) in lines.iter().enumerate() {
        if i == split && split > 0 {
            out.push('\n');
        }
        let cells: Vec<String> = l.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn csv_value(r: &Rate) -> String {
    r.percent().map_or(String::new(), |p| format!("{p:.1}"))
}

/// Long-format CSV: one metric per line with its denominator.
pub fn render_csv(rows: &[Row]) -> String {
    let mut out = String::from("dataset,model,task,metric,value,denominator\n");
    for r in rows {
        let mut emit = |task: &str, name: &str, rate: &Rate| {
            let _ = writeln!(out, "{},{},{task},{name},{},{}", r.dataset, r.model, csv_value(rate), rate.count);
        };
        if let Some(p) = &r.prediction {
            for (n, rate) in [
                ("OC", &p.oc),
                ("MC", &p.mc),
                ("OR", &p.or),
                ("MR", &p.mr),
                ("other_original", &p.other_original),
                ("other_mutated", &p.other_mutated),
                ("unparsed_original", &p.unparsed_original),
                ("unparsed_mutated", &p.unparsed_mutated),
            ] {
                emit("prediction", n, rate);
            }
        }
        if let Some(c) = &r.choice {
            for (n, rate) in [("Pref", &c.pref), ("OC", &c.oc), ("OR", &c.or), ("MC", &c.mc), ("MR", &c.mr)] {
                emit("choice", n, rate);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub lo: usize,
    pub hi: usize,
    /// Distinct problems with records in the bin.
    pub problems: usize,
    pub metrics: PredictionMetrics,
}

/// Prediction metrics recomputed within half-open LOC bins.
pub fn loc_series(records: &[PredictionRecord], bins: &[(usize, usize)]) -> Vec<BinRow> {
    let g = group(records);
    bins.iter()
        .map(|&(lo, hi)| {
            let inside: Vec<(Variant, &Vec<&PredictionRecord>)> = g
                .iter()
                .filter(|(_, rs)| rs.first().is_some_and(|r| (lo..hi).contains(&r.loc)))
                .map(|((_, v), rs)| (*v, rs))
                .collect();
            let mut ids: Vec<&str> = g
                .iter()
                .filter(|(_, rs)| rs.first().is_some_and(|r| (lo..hi).contains(&r.loc)))
                .map(|((id, _), _)| *id)
                .collect();
            ids.dedup();
            BinRow { lo, hi, problems: ids.len(), metrics: prediction_from_groups(inside.into_iter()) }
        })
        .collect()
}

/// CSV with bin edges, counts and values; empty bins have blank values.
pub fn render_series_csv(rows: &[BinRow]) -> String {
    let mut out = String::from("lo,hi,problems,OC,OC_n,MC,MC_n,OR,OR_n,MR,MR_n\n");
    for b in rows {
        let m = &b.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            b.lo,
            b.hi,
            b.problems,
            csv_value(&m.oc),
            m.oc.count,
            csv_value(&m.mc),
            m.mc.count,
            csv_value(&m.or),
            m.or.count,
            csv_value(&m.mr),
            m.mr.count
        );
    }
    out
}

/// Whitespace-separated plot data keyed by bin midpoint; gaps are `NaN`.
pub fn render_series_dat(rows: &[BinRow]) -> String {
    let mut out = String::from("# mid lo hi OC MC OR MR\n");
    for b in rows {
        let v = |r: &Rate| r.percent().map_or("NaN".to_string(), |p| format!("{p:.1}"));
        let m = &b.metrics;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            (b.lo + b.hi) as f64 / 2.0,
            b.lo,
            b.hi,
            v(&m.oc),
            v(&m.mc),
            v(&m.or),
            v(&m.mr)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Order;

    fn pred(id: &str, v: Variant, j: Judgment, loc: usize, boolean: bool) -> PredictionRecord {
        PredictionRecord {
            problem_id: id.into(),
            dataset: "d".into(),
            model: "m".into(),
            variant: v,
            sample: 0,
            loc,
            boolean_output: boolean,
            response: None,
            extracted: None,
            judgment: j,
            error: None,
        }
    }

    #[test]
    fn pass_at_one_is_a_fraction_of_samples() {
        let rs: Vec<PredictionRecord> = [Judgment::Correct, Judgment::Correct, Judgment::Correct, Judgment::Other, Judgment::Reverted]
            .into_iter()
            .map(|j| pred("p", Variant::Original, j, 5, false))
            .collect();
        let refs: Vec<&PredictionRecord> = rs.iter().collect();
        assert_eq!(pass_at_1(&refs, Judgment::Correct), 0.6);
        assert_eq!(pass_at_1(&refs, Judgment::Unparsed), 0.0);
    }

    #[test]
    fn boolean_problems_leave_reversion_denominators() {
        let rs = vec![
            pred("a", Variant::Original, Judgment::Correct, 5, false),
            pred("a", Variant::Mutated, Judgment::Reverted, 5, false),
            pred("b", Variant::Original, Judgment::Correct, 9, true),
            pred("b", Variant::Mutated, Judgment::Reverted, 9, true),
        ];
        let m = prediction_metrics(&rs);
        assert_eq!(m.oc.percent(), Some(100.0));
        assert_eq!(m.mc.percent(), Some(0.0));
        assert_eq!((m.mr.percent(), m.mr.count), (Some(100.0), 1));
        assert_eq!(m.boolean_excluded, 1);
        let series = loc_series(&rs, &[(4, 8), (8, 12), (12, 16)]);
        assert_eq!(series[0].problems, 1);
        assert_eq!(series[2].problems, 0);
        assert_eq!(series[2].metrics.oc.percent(), None);
        assert!(render_series_csv(&series).lines().nth(3).unwrap().starts_with("12,16,0,,0,"));
    }

    #[test]
    fn preference_is_a_mean_of_run_indicators() {
        let rec = |id: &str, run: usize, chosen: Chosen| ChoiceRecord {
            problem_id: id.into(),
            dataset: "d".into(),
            model: "m".into(),
            run,
            order: if run == 1 { Order::OriginalFirst } else { Order::MutatedFirst },
            chosen,
            loc: 4,
            boolean_output: false,
            response: None,
            extracted: None,
            judgment: Judgment::Correct,
            error: None,
        };
        let m = choice_metrics(&[rec("a", 1, Chosen::Original), rec("a", 2, Chosen::Mutated), rec("b", 1, Chosen::Unparsed)]);
        assert_eq!(m.pref.percent(), Some(50.0));
        assert_eq!(m.unparsed_choice, 1);
        assert_eq!(m.oc.percent(), Some(100.0));
    }

    #[test]
    fn text_table_has_one_decimal() {
        let rows = metrics_table(&[pred("a", Variant::Original, Judgment::Correct, 5, false)], &[]);
        let t = render_text(&rows);
        assert!(t.contains("100.0 (1)"), "{t}");
        assert!(render_csv(&rows).contains("d,m,prediction,OC,100.0,1"));
    }
}
