//! Dataset ingestion and split tooling.
//!
//! Input format: UTF-8 TSV, one fact per line,
//! `subject⟨TAB⟩relation⟨TAB⟩object⟨TAB⟩timestamp`, no header. Timestamps are
//! either ISO dates (`YYYY-MM-DD`) or non-negative integers; a dataset must
//! use one kind throughout. Dates map to day indices counted from the
//! dataset's minimum date; integer timestamps are normalized by their
//! minimal positive gap so the time encoder always consumes dense indices.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tkg::{Quadruple, TimeIndex};
use crate::{Error, Result};

/// Counts reported for a dataset, computed on raw (pre-reciprocal)
/// quadruples. `n_timestamps` counts distinct observed timestamps, which on
/// the dense benchmark datasets equals max TimeIndex + 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_timestamps: usize,
}

/// How raw timestamp tokens map to dense indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeRepr {
    /// ISO dates; index = days since `min`.
    Date { min: NaiveDate },
    /// Integers; index = (value − min) / gap.
    Int { min: i64, gap: i64 },
}

/// String ↔ id maps built over the union of all splits, ids in first-seen
/// order (train, then valid, then test).
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entities: Vec<String>,
    entity_ids: HashMap<String, u32>,
    relations: Vec<String>,
    relation_ids: HashMap<String, u32>,
    time_repr: TimeRepr,
    /// Dense capacity: max TimeIndex + 1.
    num_time_indices: usize,
}

impl Vocabulary {
    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn num_time_indices(&self) -> usize {
        self.num_time_indices
    }

    pub fn time_repr(&self) -> TimeRepr {
        self.time_repr
    }

    pub fn entity_name(&self, id: u32) -> &str {
        &self.entities[id as usize]
    }

    pub fn relation_name(&self, id: u32) -> &str {
        &self.relations[id as usize]
    }

    pub fn entity_id(&self, name: &str) -> Option<u32> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<u32> {
        self.relation_ids.get(name).copied()
    }

    /// Render a dense TimeIndex back into the dataset's timestamp format.
    pub fn time_string(&self, t: TimeIndex) -> String {
        match self.time_repr {
            TimeRepr::Date { min } => (min + Duration::days(i64::from(t)))
                .format("%Y-%m-%d")
                .to_string(),
            TimeRepr::Int { min, gap } => (min + i64::from(t) * gap).to_string(),
        }
    }

    /// (month, day-of-month) for every TimeIndex; errors for integer
    /// timestamp datasets, which have no calendar.
    pub fn calendar(&self) -> Result<Vec<(u32, u32)>> {
        match self.time_repr {
            TimeRepr::Date { min } => Ok((0..self.num_time_indices)
                .map(|t| {
                    let d = min + Duration::days(t as i64);
                    (d.month(), d.day())
                })
                .collect()),
            TimeRepr::Int { .. } => Err(Error::Validation(
                "dataset has integer timestamps; no calendar available".into(),
            )),
        }
    }

    /// Write `string⟨TAB⟩id` files for entities and relations.
    pub fn write_maps(&self, entities_path: &Path, relations_path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(entities_path)?);
        for (i, name) in self.entities.iter().enumerate() {
            writeln!(w, "{name}\t{i}")?;
        }
        let mut w = BufWriter::new(File::create(relations_path)?);
        for (i, name) in self.relations.iter().enumerate() {
            writeln!(w, "{name}\t{i}")?;
        }
        Ok(())
    }
}

/// A parsed dataset: raw id-mapped splits plus vocabulary and statistics.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<Quadruple>,
    pub valid: Vec<Quadruple>,
    pub test: Vec<Quadruple>,
    pub vocab: Vocabulary,
    pub stats: DatasetStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimeToken {
    Date(NaiveDate),
    Int(i64),
}

fn parse_time_token(token: &str, file: &Path, lineno: usize) -> Result<TimeToken> {
    if let Ok(v) = token.parse::<i64>() {
        if v < 0 {
            return Err(Error::Parse {
                file: file.display().to_string(),
                line: lineno,
                message: format!("negative integer timestamp {token:?}"),
            });
        }
        return Ok(TimeToken::Int(v));
    }
    if let Ok(d) = NaiveDate::parse_from_str(token, "%Y-%m-%d") {
        return Ok(TimeToken::Date(d));
    }
    Err(Error::Parse {
        file: file.display().to_string(),
        line: lineno,
        message: format!("unknown date format in token {token:?}"),
    })
}

fn split_fields<'a>(line: &'a str, file: &Path, lineno: usize) -> Result<[&'a str; 4]> {
    let mut it = line.split('\t');
    let mut fields = [""; 4];
    for slot in fields.iter_mut() {
        *slot = it.next().unwrap_or("").trim_end_matches('\r');
        if slot.trim().is_empty() {
            return Err(Error::Parse {
                file: file.display().to_string(),
                line: lineno,
                message: "expected 4 non-empty tab-separated fields".into(),
            });
        }
    }
    if it.next().is_some() {
        return Err(Error::Parse {
            file: file.display().to_string(),
            line: lineno,
            message: "more than 4 tab-separated fields".into(),
        });
    }
    Ok(fields)
}

fn for_each_line<F>(path: &Path, mut f: F) -> Result<()>
where
    F: FnMut(usize, &str) -> Result<()>,
{
    let file = File::open(path)
        .map_err(|e| Error::Validation(format!("cannot open {}: {}", path.display(), e)))?;
    let reader = BufReader::new(file);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

/// Parse the three split files of a dataset.
///
/// Two passes: the first scans timestamps to fix the dense time mapping, the
/// second builds vocabularies (union of splits) and id-mapped quadruples.
pub fn parse_dataset(train: &Path, valid: &Path, test: &Path) -> Result<Dataset> {
    let paths = [train, valid, test];

    // Pass 1: the time representation.
    let mut dates: BTreeSet<NaiveDate> = BTreeSet::new();
    let mut ints: BTreeSet<i64> = BTreeSet::new();
    for path in paths {
        for_each_line(path, |lineno, line| {
            let fields = split_fields(line, path, lineno)?;
            match parse_time_token(fields[3], path, lineno)? {
                TimeToken::Date(d) => {
                    dates.insert(d);
                }
                TimeToken::Int(v) => {
                    ints.insert(v);
                }
            }
            if !dates.is_empty() && !ints.is_empty() {
                return Err(Error::Parse {
                    file: path.display().to_string(),
                    line: lineno,
                    message: "mixed date and integer timestamps in one dataset".into(),
                });
            }
            Ok(())
        })?;
    }
    let time_repr = if !dates.is_empty() {
        TimeRepr::Date {
            min: *dates.iter().next().unwrap(),
        }
    } else if !ints.is_empty() {
        let min = *ints.iter().next().unwrap();
        let mut gap = i64::MAX;
        let mut prev = None;
        for &v in &ints {
            if let Some(p) = prev {
                gap = gap.min(v - p);
            }
            prev = Some(v);
        }
        if gap == i64::MAX {
            gap = 1;
        }
        for &v in &ints {
            if (v - min) % gap != 0 {
                return Err(Error::Validation(format!(
                    "integer timestamp {v} is not on the grid (min {min}, gap {gap})"
                )));
            }
        }
        TimeRepr::Int { min, gap }
    } else {
        return Err(Error::Validation("dataset is empty".into()));
    };

    let to_index = |tok: TimeToken| -> TimeIndex {
        match (tok, time_repr) {
            (TimeToken::Date(d), TimeRepr::Date { min }) => (d - min).num_days() as TimeIndex,
            (TimeToken::Int(v), TimeRepr::Int { min, gap }) => ((v - min) / gap) as TimeIndex,
            _ => unreachable!("mixed timestamp kinds rejected in pass 1"),
        }
    };

    // Pass 2: vocabularies and quadruples.
    let mut vocab = Vocabulary {
        entities: Vec::new(),
        entity_ids: HashMap::new(),
        relations: Vec::new(),
        relation_ids: HashMap::new(),
        time_repr,
        num_time_indices: 0,
    };
    fn intern(names: &mut Vec<String>, ids: &mut HashMap<String, u32>, name: &str) -> u32 {
        if let Some(&id) = ids.get(name) {
            return id;
        }
        let id = names.len() as u32;
        names.push(name.to_string());
        ids.insert(name.to_string(), id);
        id
    }

    let mut splits: [Vec<Quadruple>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut max_time = 0;
    for (si, path) in paths.iter().enumerate() {
        for_each_line(path, |lineno, line| {
            let fields = split_fields(line, path, lineno)?;
            let s = intern(&mut vocab.entities, &mut vocab.entity_ids, fields[0]);
            let r = intern(&mut vocab.relations, &mut vocab.relation_ids, fields[1]);
            let o = intern(&mut vocab.entities, &mut vocab.entity_ids, fields[2]);
            let t = to_index(parse_time_token(fields[3], path, lineno)?);
            max_time = max_time.max(t);
            splits[si].push(Quadruple::new(s, r, o, t));
            Ok(())
        })?;
    }
    vocab.num_time_indices = max_time as usize + 1;

    let [train_q, valid_q, test_q] = splits;
    let stats = compute_stats(&train_q, &valid_q, &test_q);
    Ok(Dataset {
        train: train_q,
        valid: valid_q,
        test: test_q,
        vocab,
        stats,
    })
}

/// Convenience: parse `train.txt`, `valid.txt`, `test.txt` under a directory.
pub fn parse_dataset_dir(dir: &Path) -> Result<Dataset> {
    let p = |name: &str| -> Result<PathBuf> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::Validation(format!(
                "missing dataset file {}",
                path.display()
            )));
        }
        Ok(path)
    };
    parse_dataset(&p("train.txt")?, &p("valid.txt")?, &p("test.txt")?)
}

/// Counts over raw splits; distinct entities/relations/timestamps across
/// the union.
pub fn compute_stats(train: &[Quadruple], valid: &[Quadruple], test: &[Quadruple]) -> DatasetStats {
    let mut ents = HashSet::new();
    let mut rels = HashSet::new();
    let mut times = HashSet::new();
    for q in train.iter().chain(valid).chain(test) {
        ents.insert(q.subject);
        ents.insert(q.object);
        rels.insert(q.relation);
        times.insert(q.time);
    }
    DatasetStats {
        n_train: train.len(),
        n_valid: valid.len(),
        n_test: test.len(),
        n_entities: ents.len(),
        n_relations: rels.len(),
        n_timestamps: times.len(),
    }
}

/// Write quadruples back to the TSV format using the vocabulary's strings.
pub fn write_quadruples(path: &Path, quads: &[Quadruple], vocab: &Vocabulary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for q in quads {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            vocab.entity_name(q.subject),
            vocab.relation_name(q.relation),
            vocab.entity_name(q.object),
            vocab.time_string(q.time)
        )?;
    }
    Ok(())
}

/// Unseen-timestamp split: remove every quadruple on the 5th, 15th and 25th
/// day of each month from the training set; the removed set is shuffled with
/// `seed` and halved into validation and test, then any held-out quadruple
/// containing an entity absent from the new training set is dropped.
///
/// `calendar[t]` is (month, day-of-month) for TimeIndex t. The exclusion is
/// seed-independent; only the valid/test halving depends on the seed.
pub fn make_unseen_split(
    train: &[Quadruple],
    calendar: &[(u32, u32)],
    seed: u64,
) -> Result<(Vec<Quadruple>, Vec<Quadruple>, Vec<Quadruple>)> {
    let excluded_day = |t: TimeIndex| -> Result<bool> {
        let (_, day) = *calendar
            .get(t as usize)
            .ok_or_else(|| Error::Validation(format!("calendar has no entry for TimeIndex {t}")))?;
        Ok(day == 5 || day == 15 || day == 25)
    };

    let mut new_train = Vec::new();
    let mut excluded = Vec::new();
    for &q in train {
        if excluded_day(q.time)? {
            excluded.push(q);
        } else {
            new_train.push(q);
        }
    }
    if excluded.is_empty() {
        return Err(Error::Validation(
            "no quadruples fall on days 5/15/25; calendar is likely wrong".into(),
        ));
    }
    if new_train.is_empty() {
        return Err(Error::Validation(
            "exclusion removed the entire training set; calendar is likely wrong".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    excluded.shuffle(&mut rng);
    let half = excluded.len() / 2;
    let (valid_raw, test_raw) = excluded.split_at(half);

    let mut seen = HashSet::new();
    for q in &new_train {
        seen.insert(q.subject);
        seen.insert(q.object);
    }
    let keep = |q: &&Quadruple| seen.contains(&q.subject) && seen.contains(&q.object);
    let valid: Vec<_> = valid_raw.iter().filter(keep).copied().collect();
    let test: Vec<_> = test_raw.iter().filter(keep).copied().collect();
    Ok((new_train, valid, test))
}

/// Pick snapshot indices 0 = t_0 < t_1 < … ≤ max_index where each gap comes
/// from `next_gap` (uniform over {1,2,3,4} in [`make_irregular_split`]).
pub fn select_snapshots(max_index: TimeIndex, mut next_gap: impl FnMut() -> u32) -> Vec<TimeIndex> {
    let mut out = vec![0];
    let mut t = 0u64;
    loop {
        let gap = u64::from(next_gap().clamp(1, 4));
        t += gap;
        if t > u64::from(max_index) {
            break;
        }
        out.push(t as TimeIndex);
    }
    out
}

/// Irregular-timestamp split: keep only quadruples at the selected snapshot
/// subsequence (anchored at TimeIndex 0, gaps uniform from {1,2,3,4}).
/// Original split membership and original time indices are preserved.
pub fn make_irregular_split(
    train: &[Quadruple],
    valid: &[Quadruple],
    test: &[Quadruple],
    max_index: TimeIndex,
    seed: u64,
) -> (Vec<Quadruple>, Vec<Quadruple>, Vec<Quadruple>, DatasetStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let snapshots = select_snapshots(max_index, || rng.gen_range(1..=4));
    let selected: HashSet<TimeIndex> = snapshots.into_iter().collect();
    let filter = |quads: &[Quadruple]| -> Vec<Quadruple> {
        quads
            .iter()
            .filter(|q| selected.contains(&q.time))
            .copied()
            .collect()
    };
    let (tr, va, te) = (filter(train), filter(valid), filter(test));
    let stats = compute_stats(&tr, &va, &te);
    (tr, va, te, stats)
}
