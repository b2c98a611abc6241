//! Match records, ingestion, and contiguous player/champion indexing.
//!
//! Raw matches arrive as JSON Lines or CSV. After validation they are
//! turned into an [`IndexedDataset`] in which every player and champion
//! carries a dense 0-based index, assigned in order of first appearance.
//! Anonymous participations all collapse onto one shared player index.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Sentinel identifier accepted (and emitted) for the universal anonymous player.
pub const ANONYMOUS: &str = "__anon__";

pub const DEFAULT_TEAM_SIZE: usize = 5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: champion {champion:?} picked more than once")]
    DuplicateChampion { line: usize, champion: String },
    #[error("line {line}: player {player:?} appears more than once")]
    DuplicatePlayer { line: usize, player: String },
    #[error("line {line}: expected {expected} picks per team, found red={red} blue={blue}")]
    WrongTeamSize {
        line: usize,
        expected: usize,
        red: usize,
        blue: usize,
    },
    #[error("dataset contains no matches")]
    EmptyDataset,
    #[error("match {match_id:?} has team size {found}, dataset uses {expected}")]
    MixedTeamSize {
        match_id: String,
        expected: usize,
        found: usize,
    },
    #[error("match {match_id:?} has no timestamp")]
    MissingTimestamp { match_id: String },
    #[error("fraction {0} outside the allowed range")]
    InvalidFraction(f64),
    #[error("inconsistent indexed dataset: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DatasetError {
    /// Source line of a per-record failure, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            DatasetError::MalformedRecord { line, .. }
            | DatasetError::DuplicateChampion { line, .. }
            | DatasetError::DuplicatePlayer { line, .. }
            | DatasetError::WrongTeamSize { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "red")]
    RedWin,
    #[serde(rename = "blue")]
    BlueWin,
}

impl Outcome {
    pub fn red_won(self) -> bool {
        self == Outcome::RedWin
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::RedWin => Outcome::BlueWin,
            Outcome::BlueWin => Outcome::RedWin,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "red" => Some(Outcome::RedWin),
            "blue" => Some(Outcome::BlueWin),
            _ => None,
        }
    }
}

/// Who played a slot: a named account or the shared anonymous identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PlayerRef {
    Named(String),
    Anonymous,
}

impl PlayerRef {
    /// `None` and the sentinel `"__anon__"` map to [`PlayerRef::Anonymous`].
    pub fn from_field(field: Option<&str>) -> Self {
        match field {
            None => PlayerRef::Anonymous,
            Some(ANONYMOUS) => PlayerRef::Anonymous,
            Some(name) => PlayerRef::Named(name.to_string()),
        }
    }
}

impl fmt::Display for PlayerRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayerRef::Named(name) => f.write_str(name),
            PlayerRef::Anonymous => f.write_str(ANONYMOUS),
        }
    }
}

impl Serialize for PlayerRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PlayerRef::Named(name) => serializer.serialize_str(name),
            PlayerRef::Anonymous => serializer.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for PlayerRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let field = Option::<String>::deserialize(deserializer)?;
        Ok(PlayerRef::from_field(field.as_deref()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participation {
    pub player: PlayerRef,
    pub champion: String,
}

impl Participation {
    pub fn new(player: PlayerRef, champion: impl Into<String>) -> Self {
        Self {
            player,
            champion: champion.into(),
        }
    }
}

/// One raw match as read from disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    #[serde(default)]
    pub timestamp: Option<i64>,
    pub red: Vec<Participation>,
    pub blue: Vec<Participation>,
    pub outcome: Outcome,
}

impl MatchRecord {
    /// Checks the per-match invariants, reporting violations against `line`.
    pub fn validate(&self, team_size: usize, line: usize) -> Result<(), DatasetError> {
        if self.red.len() != team_size || self.blue.len() != team_size {
            return Err(DatasetError::WrongTeamSize {
                line,
                expected: team_size,
                red: self.red.len(),
                blue: self.blue.len(),
            });
        }
        let mut champions = HashSet::new();
        let mut players = HashSet::new();
        for p in self.red.iter().chain(&self.blue) {
            if p.champion.is_empty() {
                return Err(DatasetError::MalformedRecord {
                    line,
                    reason: "empty champion identifier".into(),
                });
            }
            if !champions.insert(p.champion.as_str()) {
                return Err(DatasetError::DuplicateChampion {
                    line,
                    champion: p.champion.clone(),
                });
            }
            if let PlayerRef::Named(name) = &p.player {
                if name.is_empty() {
                    return Err(DatasetError::MalformedRecord {
                        line,
                        reason: "empty player identifier".into(),
                    });
                }
                if !players.insert(name.as_str()) {
                    return Err(DatasetError::DuplicatePlayer {
                        line,
                        player: name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The same match seen from the other side: teams exchanged, outcome flipped.
    pub fn swapped(&self) -> Self {
        Self {
            match_id: self.match_id.clone(),
            timestamp: self.timestamp,
            red: self.blue.clone(),
            blue: self.red.clone(),
            outcome: self.outcome.flipped(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    JsonLines,
    Csv,
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    pub team_size: usize,
    /// Abort on the first invalid record instead of skipping it.
    pub strict: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            team_size: DEFAULT_TEAM_SIZE,
            strict: true,
        }
    }
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<MatchRecord>,
    /// Records rejected in lenient mode, in source order.
    pub skipped: Vec<DatasetError>,
}

/// Reads match records from `source`, preserving source order.
///
/// In strict mode the first invalid record aborts with its error; otherwise
/// invalid records are collected in [`Ingested::skipped`].
pub fn ingest<R: Read>(
    source: R,
    format: Format,
    options: IngestOptions,
) -> Result<Ingested, DatasetError> {
    let mut out = Ingested::default();
    let mut accept = |parsed: Result<MatchRecord, DatasetError>, line: usize| {
        match parsed.and_then(|r| r.validate(options.team_size, line).map(|_| r)) {
            Ok(r) => {
                out.records.push(r);
                Ok(())
            }
            Err(e) if options.strict => Err(e),
            Err(e) => {
                out.skipped.push(e);
                Ok(())
            }
        }
    };
    match format {
        Format::JsonLines => {
            for (i, line) in BufReader::new(source).lines().enumerate() {
                let lineno = i + 1;
                let line = line.map_err(|e| DatasetError::MalformedRecord {
                    line: lineno,
                    reason: e.to_string(),
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str::<MatchRecord>(&line).map_err(|e| {
                    DatasetError::MalformedRecord {
                        line: lineno,
                        reason: e.to_string(),
                    }
                });
                accept(parsed, lineno)?;
            }
        }
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(source);
            for (i, row) in reader.records().enumerate() {
                let row = match row {
                    Ok(row) => row,
                    Err(e) => {
                        let line = e.position().map_or(i + 1, |p| p.line() as usize);
                        accept(
                            Err(DatasetError::MalformedRecord {
                                line,
                                reason: e.to_string(),
                            }),
                            line,
                        )?;
                        continue;
                    }
                };
                let line = row.position().map_or(i + 1, |p| p.line() as usize);
                if i == 0 && row.get(0) == Some("match_id") {
                    continue;
                }
                accept(parse_csv_row(&row, options.team_size, line), line)?;
            }
        }
    }
    Ok(out)
}

fn parse_csv_row(
    row: &csv::StringRecord,
    team_size: usize,
    line: usize,
) -> Result<MatchRecord, DatasetError> {
    let malformed = |reason: String| DatasetError::MalformedRecord { line, reason };
    let expected = 3 + 4 * team_size;
    if row.len() != expected {
        return Err(malformed(format!(
            "expected {expected} columns, found {}",
            row.len()
        )));
    }
    let timestamp = match &row[1] {
        "" => None,
        ts => Some(
            ts.parse::<i64>()
                .map_err(|_| malformed(format!("bad timestamp {ts:?}")))?,
        ),
    };
    let outcome =
        Outcome::parse(&row[2]).ok_or_else(|| malformed(format!("bad outcome {:?}", &row[2])))?;
    let picks: Vec<Participation> = (0..2 * team_size)
        .map(|k| {
            let player = &row[3 + 2 * k];
            let player = if player.is_empty() { None } else { Some(player) };
            Participation::new(PlayerRef::from_field(player), &row[4 + 2 * k])
        })
        .collect();
    let (red, blue) = picks.split_at(team_size);
    Ok(MatchRecord {
        match_id: row[0].to_string(),
        timestamp,
        red: red.to_vec(),
        blue: blue.to_vec(),
        outcome,
    })
}

/// Writes records as JSON Lines in the format [`ingest`] reads.
pub fn write_jsonl<W: Write>(records: &[MatchRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// One pick after indexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pick {
    pub player: usize,
    pub champion: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedMatch {
    pub match_id: String,
    pub timestamp: Option<i64>,
    pub red: Vec<Pick>,
    pub blue: Vec<Pick>,
    pub outcome: Outcome,
}

impl IndexedMatch {
    pub fn swapped(&self) -> Self {
        Self {
            match_id: self.match_id.clone(),
            timestamp: self.timestamp,
            red: self.blue.clone(),
            blue: self.red.clone(),
            outcome: self.outcome.flipped(),
        }
    }

    pub fn red_won(&self) -> bool {
        self.outcome.red_won()
    }
}

/// Matches with dense player and champion indices.
///
/// Immutable once built. `player_names[anonymous]` holds [`ANONYMOUS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedDataset {
    matches: Vec<IndexedMatch>,
    player_names: Vec<String>,
    anonymous: Option<usize>,
    champion_names: Vec<String>,
    team_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    #[serde(rename = "Z")]
    pub matches: usize,
    #[serde(rename = "N")]
    pub players: usize,
    #[serde(rename = "M")]
    pub champions: usize,
    pub team_size: usize,
    pub red_win_rate: f64,
    pub anonymous_player: bool,
}

#[derive(Default)]
struct Indexer<'r> {
    players: HashMap<&'r str, usize>,
    champions: HashMap<&'r str, usize>,
    player_names: Vec<String>,
    champion_names: Vec<String>,
    anonymous: Option<usize>,
}

impl<'r> Indexer<'r> {
    fn pick(&mut self, p: &'r Participation) -> Pick {
        let player = match &p.player {
            PlayerRef::Anonymous => match self.anonymous {
                Some(a) => a,
                None => {
                    self.player_names.push(ANONYMOUS.to_string());
                    let a = self.player_names.len() - 1;
                    self.anonymous = Some(a);
                    a
                }
            },
            PlayerRef::Named(name) => {
                let next = self.player_names.len();
                let idx = *self.players.entry(name.as_str()).or_insert(next);
                if idx == next {
                    self.player_names.push(name.clone());
                }
                idx
            }
        };
        let next = self.champion_names.len();
        let champion = *self.champions.entry(p.champion.as_str()).or_insert(next);
        if champion == next {
            self.champion_names.push(p.champion.clone());
        }
        Pick { player, champion }
    }
}

/// Assigns dense indices in first-appearance order (red picks before blue).
pub fn build_index(records: &[MatchRecord]) -> Result<IndexedDataset, DatasetError> {
    let first = records.first().ok_or(DatasetError::EmptyDataset)?;
    let team_size = first.red.len();
    let mut indexer = Indexer::default();
    let mut matches = Vec::with_capacity(records.len());

    for r in records {
        if r.red.len() != team_size || r.blue.len() != team_size {
            return Err(DatasetError::MixedTeamSize {
                match_id: r.match_id.clone(),
                expected: team_size,
                found: r.red.len().max(r.blue.len()),
            });
        }
        let red = r.red.iter().map(|p| indexer.pick(p)).collect();
        let blue = r.blue.iter().map(|p| indexer.pick(p)).collect();
        matches.push(IndexedMatch {
            match_id: r.match_id.clone(),
            timestamp: r.timestamp,
            red,
            blue,
            outcome: r.outcome,
        });
    }

    Ok(IndexedDataset {
        matches,
        player_names: indexer.player_names,
        anonymous: indexer.anonymous,
        champion_names: indexer.champion_names,
        team_size,
    })
}

impl IndexedDataset {
    /// Parses a serialized dataset and checks its indexing invariants.
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let ds: IndexedDataset = serde_json::from_str(text).map_err(|e| {
            DatasetError::MalformedRecord {
                line: e.line(),
                reason: e.to_string(),
            }
        })?;
        ds.check()?;
        Ok(ds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dataset serialization is infallible")
    }

    /// Verifies density and range of all indices.
    pub fn check(&self) -> Result<(), DatasetError> {
        let bad = |msg: String| Err(DatasetError::Inconsistent(msg));
        if self.matches.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let n = self.player_names.len();
        let m = self.champion_names.len();
        if let Some(a) = self.anonymous {
            if a >= n || self.player_names[a] != ANONYMOUS {
                return bad(format!("anonymous index {a} is not the {ANONYMOUS} slot"));
            }
        }
        let mut seen_p = vec![false; n];
        let mut seen_c = vec![false; m];
        for mt in &self.matches {
            if mt.red.len() != self.team_size || mt.blue.len() != self.team_size {
                return bad(format!("match {} has the wrong team size", mt.match_id));
            }
            for p in mt.picks() {
                if p.player >= n || p.champion >= m {
                    return bad(format!("match {} has an index out of range", mt.match_id));
                }
                seen_p[p.player] = true;
                seen_c[p.champion] = true;
            }
        }
        if seen_p.iter().chain(&seen_c).any(|s| !s) {
            return bad("some indices never occur in any match".into());
        }
        let distinct: HashSet<&String> = self.player_names.iter().collect();
        if distinct.len() != n || self.champion_names.iter().collect::<HashSet<_>>().len() != m {
            return bad("index maps are not bijective".into());
        }
        Ok(())
    }

    pub fn matches(&self) -> &[IndexedMatch] {
        &self.matches
    }

    /// Z
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    /// N, including the anonymous slot when present.
    pub fn num_players(&self) -> usize {
        self.player_names.len()
    }

    /// M
    pub fn num_champions(&self) -> usize {
        self.champion_names.len()
    }

    pub fn team_size(&self) -> usize {
        self.team_size
    }

    pub fn player_names(&self) -> &[String] {
        &self.player_names
    }

    pub fn champion_names(&self) -> &[String] {
        &self.champion_names
    }

    pub fn anonymous_index(&self) -> Option<usize> {
        self.anonymous
    }

    pub fn player_index(&self, name: &str) -> Option<usize> {
        self.player_names.iter().position(|n| n == name)
    }

    pub fn champion_index(&self, name: &str) -> Option<usize> {
        self.champion_names.iter().position(|n| n == name)
    }

    pub fn red_win_rate(&self) -> f64 {
        let red = self.matches.iter().filter(|m| m.red_won()).count();
        red as f64 / self.matches.len() as f64
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            matches: self.len(),
            players: self.num_players(),
            champions: self.num_champions(),
            team_size: self.team_size,
            red_win_rate: self.red_win_rate(),
            anonymous_player: self.anonymous.is_some(),
        }
    }

    /// Maps indices back to identifiers.
    pub fn to_records(&self) -> Vec<MatchRecord> {
        let unindex = |team: &[Pick]| -> Vec<Participation> {
            team.iter()
                .map(|p| {
                    let player = if Some(p.player) == self.anonymous {
                        PlayerRef::Anonymous
                    } else {
                        PlayerRef::Named(self.player_names[p.player].clone())
                    };
                    Participation::new(player, self.champion_names[p.champion].clone())
                })
                .collect()
        };
        self.matches
            .iter()
            .map(|m| MatchRecord {
                match_id: m.match_id.clone(),
                timestamp: m.timestamp,
                red: unindex(&m.red),
                blue: unindex(&m.blue),
                outcome: m.outcome,
            })
            .collect()
    }

    /// Same index maps, matches rearranged so that position `k` holds `self.matches[order[k]]`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.matches.len(), "order must be a permutation");
        Self {
            matches: order.iter().map(|&i| self.matches[i].clone()).collect(),
            ..self.clone_maps()
        }
    }

    /// Every match with teams exchanged and outcomes flipped; index maps unchanged.
    pub fn swapped(&self) -> Self {
        Self {
            matches: self.matches.iter().map(IndexedMatch::swapped).collect(),
            ..self.clone_maps()
        }
    }

    fn clone_maps(&self) -> Self {
        Self {
            matches: Vec::new(),
            player_names: self.player_names.clone(),
            anonymous: self.anonymous,
            champion_names: self.champion_names.clone(),
            team_size: self.team_size,
        }
    }

    /// A view over the matches at `rows`, in that order.
    pub fn view(&self, rows: Vec<usize>) -> MatchView<'_> {
        MatchView { dataset: self, rows }
    }
}

impl IndexedMatch {
    /// All picks, red team first.
    pub fn picks(&self) -> impl Iterator<Item = &Pick> {
        self.red.iter().chain(&self.blue)
    }
}

/// Replaces a seeded random `floor(fraction * named)` subset of named players
/// with the universal anonymous player and re-indexes.
pub fn anonymize(
    dataset: &IndexedDataset,
    fraction: f64,
    seed: u64,
) -> Result<IndexedDataset, DatasetError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DatasetError::InvalidFraction(fraction));
    }
    let named: Vec<usize> = (0..dataset.num_players())
        .filter(|&j| Some(j) != dataset.anonymous)
        .collect();
    let count = (fraction * named.len() as f64).floor() as usize;
    if count == 0 {
        return Ok(dataset.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hidden = vec![false; dataset.num_players()];
    for k in index::sample(&mut rng, named.len(), count) {
        hidden[named[k]] = true;
    }
    if let Some(a) = dataset.anonymous {
        hidden[a] = true;
    }
    let mut records = dataset.to_records();
    for (rec, m) in records.iter_mut().zip(&dataset.matches) {
        for (p, pick) in rec.red.iter_mut().chain(rec.blue.iter_mut()).zip(m.picks()) {
            if hidden[pick.player] {
                p.player = PlayerRef::Anonymous;
            }
        }
    }
    build_index(&records)
}

/// A subset of a dataset's matches sharing its global index maps.
#[derive(Debug, Clone)]
pub struct MatchView<'a> {
    dataset: &'a IndexedDataset,
    rows: Vec<usize>,
}

impl<'a> MatchView<'a> {
    pub fn dataset(&self) -> &'a IndexedDataset {
        self.dataset
    }

    /// Positions into `dataset().matches()`.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a IndexedMatch> + '_ {
        let matches = self.dataset.matches();
        self.rows.iter().map(move |&i| &matches[i])
    }
}

/// Sorts by (timestamp, match_id) and cuts after `floor(train_fraction * Z)` matches.
pub fn chronological_split(
    dataset: &IndexedDataset,
    train_fraction: f64,
) -> Result<(MatchView<'_>, MatchView<'_>), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(train_fraction));
    }
    let matches = dataset.matches();
    if let Some(m) = matches.iter().find(|m| m.timestamp.is_none()) {
        return Err(DatasetError::MissingTimestamp {
            match_id: m.match_id.clone(),
        });
    }
    let mut order: Vec<usize> = (0..matches.len()).collect();
    order.sort_by(|&a, &b| {
        (matches[a].timestamp, &matches[a].match_id)
            .cmp(&(matches[b].timestamp, &matches[b].match_id))
    });
    let cut = (train_fraction * matches.len() as f64).floor() as usize;
    let test = order.split_off(cut);
    Ok((dataset.view(order), dataset.view(test)))
}
