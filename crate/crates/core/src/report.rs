//! Rendering of result tables and charts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::entropy::{HistogramBin, LyricistStats};
use crate::evaluation::{Correlation, GroupMetrics};
use crate::grouping::{Grouping, GroupingMethod};
use crate::sampling::SamplingMode;

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    write(&mut wtr).expect("writing to memory");
    String::from_utf8(wtr.into_inner().expect("flush to memory")).expect("utf-8 input")
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.6}")
    }
}

pub fn lyricist_entropy_csv(stats: &[LyricistStats]) -> String {
    csv_string(|w| {
        w.write_record(["lyricist_id", "song_count", "n_singers", "entropy"])?;
        for s in stats {
            w.write_record([
                s.lyricist_id.clone(),
                s.song_count.to_string(),
                s.n_singers().to_string(),
                format!("{:.12}", s.entropy),
            ])?;
        }
        Ok(())
    })
}

pub fn histogram_csv(bins: &[HistogramBin], bin_width: f64) -> String {
    csv_string(|w| {
        w.write_record(["bin_lower", "bin_upper", "count"])?;
        for b in bins {
            w.write_record([num(b.lower), num(b.lower + bin_width), b.count.to_string()])?;
        }
        Ok(())
    })
}

fn group_label(method: GroupingMethod, group: usize) -> String {
    format!("{}{group}", method.letter())
}

/// Per-group statistics: size, song counts and entropy range.
pub fn group_stats_csv(grouping: &Grouping) -> String {
    csv_string(|w| {
        w.write_record([
            "group",
            "n_lyricists",
            "avg_songs",
            "total_songs",
            "avg_entropy",
            "min_entropy",
            "max_entropy",
        ])?;
        for s in &grouping.stats {
            w.write_record([
                group_label(grouping.method, s.group),
                s.n_lyricists.to_string(),
                num(s.avg_songs),
                s.total_songs.to_string(),
                num(s.avg_entropy),
                num(s.min_entropy),
                num(s.max_entropy),
            ])?;
        }
        Ok(())
    })
}

pub fn group_stats_text(grouping: &Grouping) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<6} {:>10} {:>10} {:>8} {:>10}  {}",
        "Group", "Lyricists", "AvgSongs", "Total", "AvgH", "Range"
    )
    .unwrap();
    for s in &grouping.stats {
        writeln!(
            out,
            "{:<6} {:>10} {:>10.3} {:>8} {:>10.3}  {:.3} - {:.3}",
            group_label(grouping.method, s.group),
            s.n_lyricists,
            s.avg_songs,
            s.total_songs,
            s.avg_entropy,
            s.min_entropy,
            s.max_entropy
        )
        .unwrap();
    }
    out
}

pub fn assignment_csv(grouping: &Grouping) -> String {
    csv_string(|w| {
        w.write_record(["lyricist_id", "group"])?;
        for (id, g) in grouping.assignment() {
            w.write_record([id, g.to_string()])?;
        }
        Ok(())
    })
}

/// Identifies one of the four experiment tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExperimentKey {
    pub method: GroupingMethod,
    pub mode: SamplingMode,
}

impl ExperimentKey {
    pub fn name(self) -> String {
        format!("{}_{}", self.method.letter(), self.mode)
    }

    pub fn title(self) -> String {
        format!(
            "Lyric-lyricist classification performance on {} sampling {}*",
            self.mode,
            self.method.letter()
        )
    }
}

pub fn metric_table_csv(key: ExperimentKey, rows: &[GroupMetrics]) -> String {
    csv_string(|w| {
        w.write_record(["group", "n_pairs", "precision", "recall", "f1"])?;
        for r in rows {
            w.write_record([
                group_label(key.method, r.group),
                r.n_pairs.to_string(),
                num(r.precision),
                num(r.recall),
                num(r.f1),
            ])?;
        }
        Ok(())
    })
}

pub fn metric_table_text(key: ExperimentKey, rows: &[GroupMetrics]) -> String {
    let mut out = String::new();
    writeln!(out, "{}", key.title()).unwrap();
    writeln!(out, "{:<6} {:>10} {:>10} {:>10}", "", "Precision", "Recall", "F1").unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<6} {:>10.3} {:>10.3} {:>10.3}",
            group_label(key.method, r.group),
            r.precision,
            r.recall,
            r.f1
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub experiment: String,
    pub group_avg_entropy: Vec<f64>,
    pub group_f1: Vec<f64>,
    /// `None` when a correlation is undefined (e.g. constant F1).
    pub correlation: Option<Correlation>,
    pub error: Option<String>,
}

/// Grouped bars (precision, recall, F1) per group.
pub fn metric_chart_svg(key: ExperimentKey, rows: &[GroupMetrics]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 300.0;
    const LEFT: f64 = 50.0;
    const BOTTOM: f64 = 40.0;
    const TOP: f64 = 30.0;
    let colors = ["#4c72b0", "#dd8452", "#55a868"];
    let plot_h = H - BOTTOM - TOP;
    let slot = (W - LEFT - 10.0) / rows.len().max(1) as f64;
    let bar = slot / 4.0;

    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(svg, r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#, W / 2.0, key.title()).unwrap();
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let y = TOP + plot_h * (1.0 - v);
        writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/>"##, W - 10.0).unwrap();
        writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, LEFT - 4.0, y + 4.0).unwrap();
    }
    for (i, r) in rows.iter().enumerate() {
        let x0 = LEFT + slot * i as f64 + bar / 2.0;
        for (j, v) in [r.precision, r.recall, r.f1].into_iter().enumerate() {
            let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            let h = plot_h * v;
            writeln!(
                svg,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar:.1}" height="{h:.1}" fill="{}"/>"#,
                x0 + bar * j as f64,
                TOP + plot_h - h,
                colors[j]
            )
            .unwrap();
        }
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            x0 + bar * 1.5,
            H - BOTTOM + 16.0,
            group_label(key.method, r.group)
        )
        .unwrap();
    }
    for (j, name) in ["Precision", "Recall", "F1"].iter().enumerate() {
        let x = LEFT + 10.0 + 90.0 * j as f64;
        writeln!(svg, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/>"#, H - 14.0, colors[j]).unwrap();
        writeln!(svg, r#"<text x="{}" y="{}">{name}</text>"#, x + 14.0, H - 5.0).unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<GroupMetrics> {
        (0..5)
            .map(|g| GroupMetrics {
                group: g,
                n_pairs: 4,
                precision: 0.5,
                recall: 0.25,
                f1: 1.0 / 3.0,
            })
            .collect()
    }

    #[test]
    fn metric_table_shape() {
        let key = ExperimentKey {
            method: GroupingMethod::Quantile,
            mode: SamplingMode::Homogenous,
        };
        let csv = metric_table_csv(key, &rows());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "group,n_pairs,precision,recall,f1");
        assert_eq!(lines[1], "A0,4,0.500000,0.250000,0.333333");

        let text = metric_table_text(key, &rows());
        assert!(text.starts_with("Lyric-lyricist classification performance on homogenous sampling A*"));
        assert_eq!(text.lines().count(), 7);
        assert_eq!(key.name(), "A_homogenous");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let key = ExperimentKey {
            method: GroupingMethod::Kmeans,
            mode: SamplingMode::Heterogenous,
        };
        let svg = metric_chart_svg(key, &rows());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 15 + 3);
    }
}
