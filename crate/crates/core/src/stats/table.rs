use super::{significance_stars, TestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Text,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!("unknown table format {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableOptions {
    pub label_a: String,
    pub label_b: String,
    pub format: TableFormat,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            label_a: "A".into(),
            label_b: "B".into(),
            format: TableFormat::Text,
        }
    }
}

fn fmt_t(t: f64) -> String {
    if t.is_infinite() {
        if t > 0.0 { "+inf" } else { "-inf" }.to_owned()
    } else {
        format!("{t:.3}")
    }
}

fn fmt_p(p: f64) -> String {
    let stars = significance_stars(p);
    if p < 0.001 {
        format!("<0.001{stars}")
    } else {
        format!("{p:.3}{stars}")
    }
}

fn text_rows(reports: &[TestReport], opts: &TableOptions) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "Item".to_owned(),
        format!("{} (Mean ± SD)", opts.label_a),
        format!("{} (Mean ± SD)", opts.label_b),
        "t".to_owned(),
        "df".to_owned(),
        "p".to_owned(),
        "95% CI".to_owned(),
    ]];
    for r in reports {
        rows.push(vec![
            r.item_name.clone(),
            format!("{:.2} ± {:.2}", r.mean_a, r.sd_a),
            format!("{:.2} ± {:.2}", r.mean_b, r.sd_b),
            fmt_t(r.t),
            format!("{:.2}", r.df),
            fmt_p(r.p),
            format!("[{:.3}, {:.3}]", r.ci95.0, r.ci95.1),
        ]);
    }
    rows
}

/// Renders reports as an aligned text table or as CSV. Output depends only on
/// the input.
pub fn render_table(reports: &[TestReport], opts: &TableOptions) -> String {
    match opts.format {
        TableFormat::Text => {
            let rows = text_rows(reports, opts);
            let widths: Vec<usize> = (0..rows[0].len())
                .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
                .collect();
            let mut out = String::new();
            for (i, row) in rows.iter().enumerate() {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(c, (cell, w))| {
                        if c == 0 {
                            format!("{cell:<w$}")
                        } else {
                            format!("{cell:>w$}")
                        }
                    })
                    .collect();
                out.push_str(cells.join("  ").trim_end());
                out.push('\n');
                if i == 0 {
                    let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                    out.push_str(&"-".repeat(total));
                    out.push('\n');
                }
            }
            out
        }
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "item", "family", "mean_a", "sd_a", "mean_b", "sd_b", "t", "df", "p", "stars", "ci_low",
                "ci_high",
            ])
            .expect("in-memory write");
            for r in reports {
                let family = match r.family {
                    super::Family::Paired => "paired",
                    super::Family::Welch => "welch",
                };
                w.write_record([
                    r.item_name.clone(),
                    family.to_owned(),
                    r.mean_a.to_string(),
                    r.sd_a.to_string(),
                    r.mean_b.to_string(),
                    r.sd_b.to_string(),
                    r.t.to_string(),
                    r.df.to_string(),
                    r.p.to_string(),
                    significance_stars(r.p).to_owned(),
                    r.ci95.0.to_string(),
                    r.ci95.1.to_string(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush to vec")).expect("csv is utf-8")
        }
    }
}
