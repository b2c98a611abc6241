//! Signed sparse match encodings.
//!
//! Each scheme lays out up to three blocks: player base skills (`N` slots),
//! champion base skills (`M` slots) and player-champion specific skills
//! (`N * M` slots, flattened as `player * M + champion`). Red picks contribute
//! `+1`, blue picks `-1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{IndexedDataset, IndexedMatch, Pick};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("feature index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("sparse entries must be strictly increasing and non-zero")]
    Unsorted,
    #[error("unknown encoding scheme {0:?}")]
    UnknownScheme(String),
}

/// Sorted `(index, value)` pairs over an explicit dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector from entries that are already strictly increasing and non-zero.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self, FeatureError> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(FeatureError::Unsorted);
            }
        }
        if entries.iter().any(|&(_, v)| v == 0.0) {
            return Err(FeatureError::Unsorted);
        }
        if let Some(&(index, _)) = entries.last() {
            if index >= dim {
                return Err(FeatureError::IndexOutOfRange { index, dim });
            }
        }
        Ok(Self { dim, entries })
    }

    /// Sorts, sums duplicate indices and drops entries that cancel to zero.
    pub fn from_unsorted(
        dim: usize,
        mut entries: Vec<(usize, f64)>,
    ) -> Result<Self, FeatureError> {
        if let Some(&(index, _)) = entries.iter().find(|&&(i, _)| i >= dim) {
            return Err(FeatureError::IndexOutOfRange { index, dim });
        }
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        Ok(Self {
            dim,
            entries: merged,
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Dot product with a dense vector of length `dim`.
    #[inline]
    pub fn dot(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }

    pub fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, v)| (i, -v)).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

/// Which skill blocks a model's feature vector carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// LR-P
    #[serde(rename = "LR-P")]
    Player,
    /// LR-C
    #[serde(rename = "LR-C")]
    Champion,
    /// LR-PC
    #[serde(rename = "LR-PC")]
    Specific,
    /// LR-P-C
    #[serde(rename = "LR-P-C")]
    PlayerChampion,
    /// LR-P-C-PC
    #[serde(rename = "LR-P-C-PC")]
    Full,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Player,
        Scheme::Champion,
        Scheme::PlayerChampion,
        Scheme::Specific,
        Scheme::Full,
    ];

    pub fn model_name(self) -> &'static str {
        match self {
            Scheme::Player => "LR-P",
            Scheme::Champion => "LR-C",
            Scheme::Specific => "LR-PC",
            Scheme::PlayerChampion => "LR-P-C",
            Scheme::Full => "LR-P-C-PC",
        }
    }

    pub fn has_player(self) -> bool {
        matches!(self, Scheme::Player | Scheme::PlayerChampion | Scheme::Full)
    }

    pub fn has_champion(self) -> bool {
        matches!(self, Scheme::Champion | Scheme::PlayerChampion | Scheme::Full)
    }

    pub fn has_specific(self) -> bool {
        matches!(self, Scheme::Specific | Scheme::Full)
    }

    pub fn blocks(self) -> usize {
        self.has_player() as usize + self.has_champion() as usize + self.has_specific() as usize
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.model_name())
    }
}

impl FromStr for Scheme {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        let norm = norm.strip_prefix("LR-").unwrap_or(&norm);
        match norm {
            "P" => Ok(Scheme::Player),
            "C" => Ok(Scheme::Champion),
            "PC" => Ok(Scheme::Specific),
            "P-C" => Ok(Scheme::PlayerChampion),
            "P-C-PC" => Ok(Scheme::Full),
            _ => Err(FeatureError::UnknownScheme(s.to_string())),
        }
    }
}

/// A scheme bound to concrete population sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodingScheme {
    pub kind: Scheme,
    #[serde(rename = "N")]
    pub players: usize,
    #[serde(rename = "M")]
    pub champions: usize,
}

impl EncodingScheme {
    pub fn new(kind: Scheme, players: usize, champions: usize) -> Self {
        Self {
            kind,
            players,
            champions,
        }
    }

    pub fn for_dataset(kind: Scheme, dataset: &IndexedDataset) -> Self {
        Self::new(kind, dataset.num_players(), dataset.num_champions())
    }

    /// K
    pub fn dim(&self) -> usize {
        let (n, m) = (self.players, self.champions);
        match self.kind {
            Scheme::Player => n,
            Scheme::Champion => m,
            Scheme::Specific => n * m,
            Scheme::PlayerChampion => n + m,
            Scheme::Full => n + m + n * m,
        }
    }

    fn champion_offset(&self) -> usize {
        if self.kind.has_player() {
            self.players
        } else {
            0
        }
    }

    fn specific_offset(&self) -> usize {
        match self.kind {
            Scheme::Full => self.players + self.champions,
            _ => 0,
        }
    }

    fn check_pick(&self, p: &Pick) -> Result<(), FeatureError> {
        if p.player >= self.players {
            return Err(FeatureError::IndexOutOfRange {
                index: p.player,
                dim: self.players,
            });
        }
        if p.champion >= self.champions {
            return Err(FeatureError::IndexOutOfRange {
                index: p.champion,
                dim: self.champions,
            });
        }
        Ok(())
    }
}

/// Builds D_z for one match.
pub fn encode(m: &IndexedMatch, scheme: &EncodingScheme) -> Result<SparseVector, FeatureError> {
    let kind = scheme.kind;
    let mut entries = Vec::with_capacity(2 * m.red.len() * kind.blocks());
    let teams = [(&m.red, 1.0), (&m.blue, -1.0)];
    for (team, sign) in teams {
        for p in team.iter() {
            scheme.check_pick(p)?;
            if kind.has_player() {
                entries.push((p.player, sign));
            }
            if kind.has_champion() {
                entries.push((scheme.champion_offset() + p.champion, sign));
            }
            if kind.has_specific() {
                entries.push((
                    scheme.specific_offset() + p.player * scheme.champions + p.champion,
                    sign,
                ));
            }
        }
    }
    SparseVector::from_unsorted(scheme.dim(), entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSkill {
    pub index: usize,
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificSkill {
    pub player_index: usize,
    pub champion_index: usize,
    pub player: String,
    pub champion: String,
    pub weight: f64,
}

/// Learned weights split back into their skill blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillTable {
    pub player_base: Option<Vec<NamedSkill>>,
    pub champion_base: Option<Vec<NamedSkill>>,
    pub specific: Option<Vec<SpecificSkill>>,
}

/// Inverts the encoding layout, labelling each weight with the dataset's names.
pub fn weight_lookup(
    theta: &[f64],
    scheme: &EncodingScheme,
    player_names: &[String],
    champion_names: &[String],
) -> Result<SkillTable, FeatureError> {
    if theta.len() != scheme.dim() {
        return Err(FeatureError::DimensionMismatch {
            expected: scheme.dim(),
            actual: theta.len(),
        });
    }
    if player_names.len() != scheme.players {
        return Err(FeatureError::DimensionMismatch {
            expected: scheme.players,
            actual: player_names.len(),
        });
    }
    if champion_names.len() != scheme.champions {
        return Err(FeatureError::DimensionMismatch {
            expected: scheme.champions,
            actual: champion_names.len(),
        });
    }
    let named = |offset: usize, names: &[String]| -> Vec<NamedSkill> {
        names
            .iter()
            .enumerate()
            .map(|(index, name)| NamedSkill {
                index,
                name: name.clone(),
                weight: theta[offset + index],
            })
            .collect()
    };
    let kind = scheme.kind;
    let m = scheme.champions;
    Ok(SkillTable {
        player_base: kind.has_player().then(|| named(0, player_names)),
        champion_base: kind
            .has_champion()
            .then(|| named(scheme.champion_offset(), champion_names)),
        specific: kind.has_specific().then(|| {
            let off = scheme.specific_offset();
            (0..scheme.players * m)
                .map(|flat| SpecificSkill {
                    player_index: flat / m,
                    champion_index: flat % m,
                    player: player_names[flat / m].clone(),
                    champion: champion_names[flat % m].clone(),
                    weight: theta[off + flat],
                })
                .collect()
        }),
    })
}

/// One line of the `featurize` debug dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatch {
    pub match_index: usize,
    pub scheme: Scheme,
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl EncodedMatch {
    pub fn new(match_index: usize, scheme: Scheme, v: SparseVector) -> Self {
        Self {
            match_index,
            scheme,
            dim: v.dim,
            entries: v.entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Outcome;
    use proptest::prelude::*;

    fn fixture() -> IndexedMatch {
        let pick = |player, champion| Pick { player, champion };
        IndexedMatch {
            match_id: "f".into(),
            timestamp: Some(0),
            red: vec![pick(0, 1), pick(1, 3)],
            blue: vec![pick(2, 0), pick(3, 2)],
            outcome: Outcome::RedWin,
        }
    }

    fn scheme(kind: Scheme) -> EncodingScheme {
        EncodingScheme::new(kind, 4, 4)
    }

    #[test]
    fn dims() {
        let dims: Vec<usize> = [
            Scheme::Player,
            Scheme::Champion,
            Scheme::Specific,
            Scheme::PlayerChampion,
            Scheme::Full,
        ]
        .iter()
        .map(|&k| EncodingScheme::new(k, 3, 7).dim())
        .collect();
        assert_eq!(dims, [3, 7, 21, 10, 31]);
    }

    #[test]
    fn player_block() {
        let v = encode(&fixture(), &scheme(Scheme::Player)).unwrap();
        assert_eq!(v.dim(), 4);
        assert_eq!(v.entries(), &[(0, 1.0), (1, 1.0), (2, -1.0), (3, -1.0)]);
    }

    #[test]
    fn champion_block() {
        let v = encode(&fixture(), &scheme(Scheme::Champion)).unwrap();
        assert_eq!(v.entries(), &[(0, -1.0), (1, 1.0), (2, -1.0), (3, 1.0)]);
    }

    #[test]
    fn specific_block_flattening() {
        // red (P0,C1) -> 1, (P1,C3) -> 7; blue (P2,C0) -> 8, (P3,C2) -> 14
        let v = encode(&fixture(), &scheme(Scheme::Specific)).unwrap();
        assert_eq!(v.dim(), 16);
        assert_eq!(v.entries(), &[(1, 1.0), (7, 1.0), (8, -1.0), (14, -1.0)]);
    }

    #[test]
    fn full_is_offset_concatenation() {
        let m = fixture();
        let full = encode(&m, &scheme(Scheme::Full)).unwrap();
        assert_eq!(full.dim(), 24);
        let mut expected: Vec<(usize, f64)> = Vec::new();
        expected.extend(encode(&m, &scheme(Scheme::Player)).unwrap().entries());
        expected.extend(
            encode(&m, &scheme(Scheme::Champion))
                .unwrap()
                .entries()
                .iter()
                .map(|&(i, v)| (i + 4, v)),
        );
        expected.extend(
            encode(&m, &scheme(Scheme::Specific))
                .unwrap()
                .entries()
                .iter()
                .map(|&(i, v)| (i + 8, v)),
        );
        assert_eq!(full.entries(), &expected[..]);

        let pc = encode(&m, &scheme(Scheme::PlayerChampion)).unwrap();
        assert_eq!(pc.entries(), &full.entries()[..8]);
    }

    #[test]
    fn out_of_range_pick() {
        let m = fixture();
        let small = EncodingScheme::new(Scheme::Player, 3, 4);
        assert_eq!(
            encode(&m, &small),
            Err(FeatureError::IndexOutOfRange { index: 3, dim: 3 })
        );
    }

    #[test]
    fn anonymous_collisions_sum() {
        let pick = |player, champion| Pick { player, champion };
        let m = IndexedMatch {
            match_id: "a".into(),
            timestamp: None,
            red: vec![pick(0, 0), pick(0, 1)],
            blue: vec![pick(0, 2), pick(1, 3)],
            outcome: Outcome::BlueWin,
        };
        let v = encode(&m, &EncodingScheme::new(Scheme::Player, 2, 4)).unwrap();
        // +1 +1 -1 on player 0, -1 on player 1
        assert_eq!(v.entries(), &[(0, 1.0), (1, -1.0)]);
        let red_only = IndexedMatch {
            blue: vec![pick(1, 2), pick(1, 3)],
            ..m
        };
        let v = encode(&red_only, &EncodingScheme::new(Scheme::Player, 2, 4)).unwrap();
        assert_eq!(v.entries(), &[(0, 2.0), (1, -2.0)]);
    }

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::new(3, vec![(0, 1.0), (2, -1.0)]).is_ok());
        assert_eq!(
            SparseVector::new(3, vec![(2, 1.0), (1, 1.0)]),
            Err(FeatureError::Unsorted)
        );
        assert_eq!(
            SparseVector::new(3, vec![(1, 0.0)]),
            Err(FeatureError::Unsorted)
        );
        assert_eq!(
            SparseVector::new(3, vec![(3, 1.0)]),
            Err(FeatureError::IndexOutOfRange { index: 3, dim: 3 })
        );
    }

    #[test]
    fn scheme_names_round_trip() {
        for k in Scheme::ALL {
            assert_eq!(k.model_name().parse::<Scheme>().unwrap(), k);
        }
        assert_eq!("p_c_pc".parse::<Scheme>().unwrap(), Scheme::Full);
        assert!("LR-X".parse::<Scheme>().is_err());
    }

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn lookup_champion_only() {
        let s = EncodingScheme::new(Scheme::Champion, 3, 5);
        let theta: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let t = weight_lookup(&theta, &s, &names("p", 3), &names("c", 5)).unwrap();
        assert!(t.player_base.is_none() && t.specific.is_none());
        let champs = t.champion_base.unwrap();
        assert_eq!(champs.len(), 5);
        assert_eq!(champs[4].name, "c4");
        assert_eq!(champs[4].weight, 4.0);
    }

    #[test]
    fn lookup_inverts_flattening() {
        let (n, m) = (3, 4);
        let s = EncodingScheme::new(Scheme::Full, n, m);
        let theta: Vec<f64> = (0..s.dim()).map(|i| i as f64).collect();
        let t = weight_lookup(&theta, &s, &names("p", n), &names("c", m)).unwrap();
        let spec = t.specific.unwrap();
        for (j, i) in [(0, 0), (1, 2), (2, 3)] {
            let e = spec
                .iter()
                .find(|e| e.player_index == j && e.champion_index == i)
                .unwrap();
            assert_eq!(e.weight, (n + m + j * m + i) as f64);
        }
        assert_eq!(t.champion_base.unwrap()[0].weight, n as f64);
    }

    #[test]
    fn lookup_dimension_mismatch() {
        let s = EncodingScheme::new(Scheme::Player, 3, 4);
        assert!(matches!(
            weight_lookup(&[0.0; 2], &s, &names("p", 3), &names("c", 4)),
            Err(FeatureError::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    fn arb_match(n: usize, m: usize, team: usize) -> impl Strategy<Value = IndexedMatch> {
        (
            proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 2 * team),
            proptest::sample::subsequence((0..m).collect::<Vec<_>>(), 2 * team),
            Just((0..2 * team).collect::<Vec<usize>>()).prop_shuffle(),
            any::<bool>(),
        )
            .prop_map(move |(players, champs, order, red_won)| {
                let picks: Vec<Pick> = order
                    .iter()
                    .map(|&k| Pick {
                        player: players[k],
                        champion: champs[(k + 1) % (2 * team)],
                    })
                    .collect();
                IndexedMatch {
                    match_id: "p".into(),
                    timestamp: None,
                    red: picks[..team].to_vec(),
                    blue: picks[team..].to_vec(),
                    outcome: if red_won { Outcome::RedWin } else { Outcome::BlueWin },
                }
            })
    }

    proptest! {
        #[test]
        fn dot_product_identities(
            m in arb_match(9, 7, 3),
            weights in proptest::collection::vec(-3.0f64..3.0, 9 + 7 + 63),
        ) {
            let (n, mm) = (9, 7);
            let player_w = &weights[..n];
            let champ_w = &weights[n..n + mm];
            let spec_w = &weights[n + mm..];
            let team_sum = |team: &[Pick], f: &dyn Fn(&Pick) -> f64| team.iter().map(f).sum::<f64>();
            let p = |x: &Pick| player_w[x.player];
            let c = |x: &Pick| champ_w[x.champion];
            let s = |x: &Pick| spec_w[x.player * mm + x.champion];
            let diff = |f: &dyn Fn(&Pick) -> f64| team_sum(&m.red, f) - team_sum(&m.blue, f);

            let enc = |k| encode(&m, &EncodingScheme::new(k, n, mm)).unwrap();
            let tol = 1e-9;
            prop_assert!((enc(Scheme::Player).dot(player_w) - diff(&p)).abs() < tol);
            prop_assert!((enc(Scheme::Champion).dot(champ_w) - diff(&c)).abs() < tol);
            prop_assert!((enc(Scheme::Specific).dot(spec_w) - diff(&s)).abs() < tol);
            prop_assert!(
                (enc(Scheme::PlayerChampion).dot(&weights[..n + mm]) - diff(&p) - diff(&c)).abs() < tol
            );
            prop_assert!(
                (enc(Scheme::Full).dot(&weights) - diff(&p) - diff(&c) - diff(&s)).abs() < tol
            );
        }

        #[test]
        fn swap_negates_and_sparsity_bound(m in arb_match(12, 10, 4)) {
            for k in Scheme::ALL {
                let s = EncodingScheme::new(k, 12, 10);
                let v = encode(&m, &s).unwrap();
                let w = encode(&m.swapped(), &s).unwrap();
                prop_assert_eq!(w, v.negated());
                prop_assert!(v.nnz() <= 2 * 4 * k.blocks());
                prop_assert_eq!(encode(&m, &s).unwrap(), v);
            }
        }
    }
}
