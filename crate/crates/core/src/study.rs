//! Within-subjects harness: condition order, corpus assignment,
//! questionnaires, dataset export/import and the per-item analysis.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::domain::{Condition, InstanceId, SessionId, Stage, Theme};
use crate::error::{Error, Result};
use crate::state::StudyState;
use crate::stats::{paired_t, welch_t, Family, TestReport};

pub const ITEMS_PER_THEME: usize = 4;
pub const ITEMS_PER_INSTRUMENT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionOrder {
    pub participant_index: u32,
    pub first: Condition,
    pub second: Condition,
}

impl ConditionOrder {
    /// 1 or 2.
    pub fn position(&self, c: Condition) -> u8 {
        if c == self.first {
            1
        } else {
            2
        }
    }
}

/// Even indices start with the baseline, odd ones with counterquill.
pub fn assign_condition_order(participant_index: u32) -> ConditionOrder {
    let (first, second) = if participant_index.is_multiple_of(2) {
        (Condition::Baseline, Condition::Counterquill)
    } else {
        (Condition::Counterquill, Condition::Baseline)
    };
    ConditionOrder {
        participant_index,
        first,
        second,
    }
}

fn rng_for(participant_index: u32, seed: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&participant_index.to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

/// Four instances per theme, sampled without replacement, reproducible for
/// a given (participant, seed).
pub fn assign_corpus(participant_index: u32, corpus: &Corpus, seed: u64) -> Result<Vec<InstanceId>> {
    let by_theme = corpus.by_theme();
    let mut rng = rng_for(participant_index, seed);
    let mut out = Vec::with_capacity(ITEMS_PER_THEME * Theme::ALL.len());
    for theme in Theme::ALL {
        let pool: Vec<&InstanceId> = by_theme
            .get(&theme)
            .map(|v| v.iter().map(|i| &i.id).collect())
            .unwrap_or_default();
        if pool.len() < ITEMS_PER_THEME {
            return Err(Error::Corpus(format!(
                "insufficient corpus: theme {theme:?} has {} instances, need {ITEMS_PER_THEME}",
                pool.len()
            )));
        }
        out.extend(pool.choose_multiple(&mut rng, ITEMS_PER_THEME).map(|id| (*id).clone()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instrument {
    NasaTlx,
    Custom,
}

impl Instrument {
    pub const ALL: [Instrument; 2] = [Instrument::NasaTlx, Instrument::Custom];

    pub fn item_names(self) -> [&'static str; ITEMS_PER_INSTRUMENT] {
        match self {
            Instrument::NasaTlx => [
                "Mental Demand",
                "Physical Demand",
                "Temporal Demand",
                "Performance",
                "Effort",
                "Frustration",
            ],
            Instrument::Custom => [
                "HS Identification Confidence",
                "Brainstorming Effectiveness",
                "Self-Efficacy in CS Writing",
                "Engagement with AI",
                "Satisfaction with CS",
                "Willingness to Post Online",
            ],
        }
    }

    fn column_prefix(self) -> &'static str {
        match self {
            Instrument::NasaTlx => "tlx",
            Instrument::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireResponse {
    pub session_id: SessionId,
    pub instrument: Instrument,
    pub items: Vec<u8>,
}

pub fn check_items(items: &[u8]) -> Result<()> {
    if items.len() != ITEMS_PER_INSTRUMENT {
        return Err(Error::InvalidArgument(format!(
            "questionnaire takes {ITEMS_PER_INSTRUMENT} items, got {}",
            items.len()
        )));
    }
    if let Some((i, v)) = items.iter().enumerate().find(|(_, v)| !(1..=7).contains(*v)) {
        return Err(Error::InvalidArgument(format!("item {} = {v} outside 1..7", i + 1)));
    }
    Ok(())
}

/// Stages that get a timing column; `complete` is never left.
pub const TIMED_STAGES: [Stage; 7] = [
    Stage::Created,
    Stage::Learning,
    Stage::QuizDone,
    Stage::BrainstormHighlight,
    Stage::BrainstormQa,
    Stage::Writing,
    Stage::Questionnaire,
];

/// One exported row: one participant under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub participant_id: String,
    pub participant_index: u32,
    pub condition: Condition,
    pub order_position: u8,
    pub first_condition: Condition,
    pub session_id: String,
    pub instance_id: String,
    pub quiz_correct: Option<u8>,
    pub tlx: [Option<u8>; ITEMS_PER_INSTRUMENT],
    pub custom: [Option<u8>; ITEMS_PER_INSTRUMENT],
    pub timings: [Option<f64>; TIMED_STAGES.len()],
}

pub fn dataset_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "participant_id",
        "participant_index",
        "condition",
        "order_position",
        "first_condition",
        "session_id",
        "instance_id",
        "quiz_correct",
    ]
    .map(String::from)
    .to_vec();
    for inst in Instrument::ALL {
        h.extend((1..=ITEMS_PER_INSTRUMENT).map(|i| format!("{}_{i}", inst.column_prefix())));
    }
    h.extend(TIMED_STAGES.iter().map(|s| format!("time_{s}_s")));
    h
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl DatasetRow {
    fn to_record(&self) -> Vec<String> {
        let mut r = vec![
            self.participant_id.clone(),
            self.participant_index.to_string(),
            self.condition.to_string(),
            self.order_position.to_string(),
            self.first_condition.to_string(),
            self.session_id.clone(),
            self.instance_id.clone(),
            opt(&self.quiz_correct),
        ];
        r.extend(self.tlx.iter().map(opt));
        r.extend(self.custom.iter().map(opt));
        r.extend(self.timings.iter().map(opt));
        r
    }

    fn from_record(line: usize, rec: &csv::StringRecord) -> Result<Self> {
        let bad = |col: &str, v: &str| Error::InvalidArgument(format!("row {line}: bad {col} {v:?}"));
        let header = dataset_header();
        if rec.len() != header.len() {
            return Err(Error::InvalidArgument(format!(
                "row {line}: {} fields, expected {}",
                rec.len(),
                header.len()
            )));
        }
        fn parse_opt<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, ()> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| ())
            }
        }
        let field = |i: usize| &rec[i];
        let condition = |i: usize| field(i).parse::<Condition>().map_err(|_| bad(&header[i], field(i)));
        let mut tlx = [None; ITEMS_PER_INSTRUMENT];
        let mut custom = [None; ITEMS_PER_INSTRUMENT];
        let mut timings = [None; TIMED_STAGES.len()];
        for k in 0..ITEMS_PER_INSTRUMENT {
            let (a, b) = (8 + k, 8 + ITEMS_PER_INSTRUMENT + k);
            tlx[k] = parse_opt(field(a)).map_err(|_| bad(&header[a], field(a)))?;
            custom[k] = parse_opt(field(b)).map_err(|_| bad(&header[b], field(b)))?;
        }
        for (k, slot) in timings.iter_mut().enumerate() {
            let c = 8 + 2 * ITEMS_PER_INSTRUMENT + k;
            *slot = parse_opt(field(c)).map_err(|_| bad(&header[c], field(c)))?;
        }
        Ok(Self {
            participant_id: field(0).to_owned(),
            participant_index: field(1).parse().map_err(|_| bad(&header[1], field(1)))?,
            condition: condition(2)?,
            order_position: field(3).parse().map_err(|_| bad(&header[3], field(3)))?,
            first_condition: condition(4)?,
            session_id: field(5).to_owned(),
            instance_id: field(6).to_owned(),
            quiz_correct: parse_opt(field(7)).map_err(|_| bad(&header[7], field(7)))?,
            tlx,
            custom,
            timings,
        })
    }

    pub fn items(&self, instrument: Instrument) -> &[Option<u8>; ITEMS_PER_INSTRUMENT] {
        match instrument {
            Instrument::NasaTlx => &self.tlx,
            Instrument::Custom => &self.custom,
        }
    }
}

/// Rows sorted by participant index, then order position.
pub fn dataset_rows(state: &StudyState) -> Vec<DatasetRow> {
    let mut rows: Vec<DatasetRow> = state
        .sessions
        .values()
        .filter_map(|s| {
            let p = state.participants.get(&s.session.participant_id)?;
            let order = assign_condition_order(p.index);
            let items = |inst| {
                let mut out = [None; ITEMS_PER_INSTRUMENT];
                if let Some(r) = s.questionnaires.get(&inst) {
                    for (o, v) in out.iter_mut().zip(&r.items) {
                        *o = Some(*v);
                    }
                }
                out
            };
            let mut timings = [None; TIMED_STAGES.len()];
            for (slot, stage) in timings.iter_mut().zip(TIMED_STAGES) {
                *slot = s.session.stage_timings.get(&stage).copied();
            }
            Some(DatasetRow {
                participant_id: p.id.to_string(),
                participant_index: p.index,
                condition: s.session.condition,
                order_position: order.position(s.session.condition),
                first_condition: order.first,
                session_id: s.session.id.to_string(),
                instance_id: s.session.instance_id.to_string(),
                quiz_correct: s.quiz.as_ref().map(|q| q.n_correct),
                tlx: items(Instrument::NasaTlx),
                custom: items(Instrument::Custom),
                timings,
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.participant_index, r.order_position));
    rows
}

/// UTF-8 CSV with a header row; missing values are empty strings.
pub fn export_rows(rows: &[DatasetRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(dataset_header()).expect("in-memory write");
    for r in rows {
        w.write_record(r.to_record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to vec")).expect("csv is utf-8")
}

pub fn export_dataset(state: &StudyState) -> String {
    export_rows(&dataset_rows(state))
}

pub fn import_dataset(csv_text: &str) -> Result<Vec<DatasetRow>> {
    let mut r = csv::ReaderBuilder::new().from_reader(csv_text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::InvalidArgument(format!("csv header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header != dataset_header() {
        return Err(Error::InvalidArgument("csv header does not match the export format".into()));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| Error::InvalidArgument(format!("row {}: {e}", i + 2)))?;
            DatasetRow::from_record(i + 2, &rec)
        })
        .collect()
}

/// A titled group of reports, e.g. one instrument under one family.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSection {
    pub title: String,
    pub label_a: String,
    pub label_b: String,
    pub reports: Vec<TestReport>,
}

fn item_value(row: &DatasetRow, inst: Instrument, k: usize) -> Option<f64> {
    row.items(inst)[k].map(f64::from)
}

/// Paired: baseline vs counterquill within participants having both values.
/// Welch: baseline-first vs counterquill-first, separately per condition.
/// Items with fewer than two usable observations per side are skipped.
pub fn analyze(rows: &[DatasetRow], family: Family) -> Vec<ReportSection> {
    let mut sections = Vec::new();
    match family {
        Family::Paired => {
            let mut by_participant: BTreeMap<(u32, &str), BTreeMap<Condition, &DatasetRow>> = BTreeMap::new();
            for r in rows {
                by_participant
                    .entry((r.participant_index, r.participant_id.as_str()))
                    .or_default()
                    .insert(r.condition, r);
            }
            for inst in Instrument::ALL {
                let mut reports = Vec::new();
                for (k, name) in inst.item_names().iter().enumerate() {
                    let (mut a, mut b) = (Vec::new(), Vec::new());
                    for conds in by_participant.values() {
                        let base = conds.get(&Condition::Baseline).and_then(|r| item_value(r, inst, k));
                        let cq = conds.get(&Condition::Counterquill).and_then(|r| item_value(r, inst, k));
                        if let (Some(x), Some(y)) = (base, cq) {
                            a.push(x);
                            b.push(y);
                        }
                    }
                    if let Ok(r) = paired_t(&a, &b) {
                        reports.push(r.named(*name));
                    }
                }
                sections.push(ReportSection {
                    title: format!("{inst:?} (paired)"),
                    label_a: "Baseline".into(),
                    label_b: "CounterQuill".into(),
                    reports,
                });
            }
        }
        Family::Welch => {
            for cond in Condition::ALL {
                for inst in Instrument::ALL {
                    let mut reports = Vec::new();
                    for (k, name) in inst.item_names().iter().enumerate() {
                        let pick = |first: Condition| -> Vec<f64> {
                            rows.iter()
                                .filter(|r| r.condition == cond && r.first_condition == first)
                                .filter_map(|r| item_value(r, inst, k))
                                .collect()
                        };
                        if let Ok(r) = welch_t(&pick(Condition::Baseline), &pick(Condition::Counterquill)) {
                            reports.push(r.named(*name));
                        }
                    }
                    sections.push(ReportSection {
                        title: format!("{inst:?} under {cond} (Welch, by order)"),
                        label_a: "Baseline first".into(),
                        label_b: "CounterQuill first".into(),
                        reports,
                    });
                }
            }
        }
    }
    sections
}
