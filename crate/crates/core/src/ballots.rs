//! Tally rows and half-time / final aggregates.

use std::io::{Read, Write};

use serde::{Deserialize, Deserializer, Serialize};

use crate::{Error, Result};

/// One counting unit (municipality or ballot box).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyRow {
    pub region_id: String,
    pub unit_id: String,
    #[serde(rename = "votes_H")]
    pub votes_h: u64,
    #[serde(rename = "votes_N")]
    pub votes_n: u64,
    pub votes_other: u64,
    #[serde(deserialize_with = "flexible_bool")]
    pub counted_by_halftime: bool,
    #[serde(default, deserialize_with = "optional_token")]
    pub settlement_id: Option<String>,
}

impl TallyRow {
    pub fn two_candidate_votes(&self) -> u64 {
        self.votes_h + self.votes_n
    }
}

fn flexible_bool<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    let raw = String::deserialize(d)?;
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(serde::de::Error::custom(format!("expected a boolean, found `{other}`"))),
    }
}

fn optional_token<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    let raw = Option::<String>::deserialize(d)?;
    Ok(raw.filter(|s| !s.trim().is_empty()))
}

#[derive(Debug, Deserialize)]
struct TallyRecord {
    region_id: String,
    unit_id: String,
    #[serde(rename = "votes_H")]
    votes_h: i64,
    #[serde(rename = "votes_N")]
    votes_n: i64,
    votes_other: i64,
    #[serde(deserialize_with = "flexible_bool")]
    counted_by_halftime: bool,
    #[serde(default, deserialize_with = "optional_token")]
    settlement_id: Option<String>,
}

/// Reads the tallies CSV
/// (`region_id,unit_id,votes_H,votes_N,votes_other,counted_by_halftime,settlement_id`).
pub fn load_tallies<R: Read>(source: R) -> Result<Vec<TallyRow>> {
    let mut rows = Vec::new();
    for item in crate::csvio::records::<_, TallyRecord>(source)? {
        let (line, r) = item?;
        let count = |v: i64, what: &str| {
            u64::try_from(v).map_err(|_| Error::Parse { line, message: format!("{what} count {v} is negative") })
        };
        rows.push(TallyRow {
            votes_h: count(r.votes_h, "votes_H")?,
            votes_n: count(r.votes_n, "votes_N")?,
            votes_other: count(r.votes_other, "votes_other")?,
            region_id: r.region_id,
            unit_id: r.unit_id,
            counted_by_halftime: r.counted_by_halftime,
            settlement_id: r.settlement_id,
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty("tallies file"));
    }
    Ok(rows)
}

pub fn write_tallies<W: Write>(rows: &[TallyRow], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Which rows a summary aggregates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Country,
    Region(String),
}

impl Scope {
    pub fn contains(&self, row: &TallyRow) -> bool {
        match self {
            Scope::Country => true,
            Scope::Region(id) => &row.region_id == id,
        }
    }
}

/// Half-time and final aggregates of the two leading candidates.
///
/// `delta` and `r` use the two-candidate subtotal; the raw shares include
/// third-party votes in the denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallotSummary {
    pub v_h: u64,
    pub v_n: u64,
    pub v: u64,
    pub v_other: u64,
    pub final_h: u64,
    pub final_n: u64,
    pub final_total: u64,
    pub final_other: u64,
    /// `(v_H − v_N)/(v_H + v_N)`.
    pub delta: f64,
    /// `v_N / v_H`; `None` when no half-time votes went to H.
    pub r: Option<f64>,
    pub raw_share_h: f64,
    pub raw_share_n: f64,
}

/// Aggregates rows in scope: half-time sums use rows flagged
/// `counted_by_halftime`, final sums use every row.
pub fn summarize(rows: &[TallyRow], scope: &Scope) -> Result<BallotSummary> {
    let (mut v_h, mut v_n, mut v_other) = (0u64, 0u64, 0u64);
    let (mut final_h, mut final_n, mut final_other) = (0u64, 0u64, 0u64);
    let mut halftime_rows = 0usize;
    for row in rows.iter().filter(|r| scope.contains(r)) {
        final_h += row.votes_h;
        final_n += row.votes_n;
        final_other += row.votes_other;
        if row.counted_by_halftime {
            halftime_rows += 1;
            v_h += row.votes_h;
            v_n += row.votes_n;
            v_other += row.votes_other;
        }
    }
    if halftime_rows == 0 {
        return Err(Error::Empty("half-time rows in scope"));
    }
    let v = v_h + v_n;
    if v == 0 {
        return Err(Error::Degenerate("no half-time votes for either candidate"));
    }
    let counted = (v + v_other) as f64;
    Ok(BallotSummary {
        v_h,
        v_n,
        v,
        v_other,
        final_h,
        final_n,
        final_total: final_h + final_n,
        final_other,
        delta: (v_h as f64 - v_n as f64) / v as f64,
        r: (v_h > 0).then(|| v_n as f64 / v_h as f64),
        raw_share_h: v_h as f64 / counted,
        raw_share_n: v_n as f64 / counted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    const HEADER: &str = "region_id,unit_id,votes_H,votes_N,votes_other,counted_by_halftime,settlement_id\n";

    fn row(region: &str, h: u64, n: u64, o: u64, half: bool) -> TallyRow {
        TallyRow {
            region_id: region.into(),
            unit_id: format!("{region}-{h}-{n}"),
            votes_h: h,
            votes_n: n,
            votes_other: o,
            counted_by_halftime: half,
            settlement_id: None,
        }
    }

    #[test]
    fn loads_and_sums() {
        let csv = format!("{HEADER}R1,u1,10,5,0,true,s1\nR2,u2,20,25,3,false,\n");
        let rows = load_tallies(csv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].settlement_id.as_deref(), Some("s1"));
        assert_eq!(rows[1].settlement_id, None);
        assert_eq!(rows.iter().map(|r| r.votes_h).sum::<u64>(), 30);
        assert_eq!(rows.iter().map(|r| r.votes_n).sum::<u64>(), 30);
    }

    #[test]
    fn empty_and_negative_rejected() {
        assert!(load_tallies(HEADER.as_bytes()).is_err());
        assert!(load_tallies("".as_bytes()).is_err());
        let bad = format!("{HEADER}R1,u1,10,5,0,true,\nR1,u2,10,-5,0,true,\n");
        assert!(matches!(load_tallies(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let bad = format!("{HEADER}R1,u1,10,5,0,maybe,\n");
        assert!(matches!(load_tallies(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn round_trip() {
        let csv = format!("{HEADER}R1,u1,10,5,0,true,s1\nR2,u2,20,25,3,false,\n");
        let rows = load_tallies(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_tallies(&rows, &mut buf).unwrap();
        assert_eq!(load_tallies(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn halftime_shares_from_counted_ballots() {
        // 41% and 46% of counted ballots, the rest to third parties
        let rows = vec![row("R", 41, 46, 13, true)];
        let s = summarize(&rows, &Scope::Country).unwrap();
        assert!((s.delta - (-0.05 / 0.87)).abs() < 1e-15);
        assert!((s.delta + 0.0575).abs() < 5e-5);
        assert!((s.raw_share_h - 0.41).abs() < 1e-15);
    }

    #[test]
    fn equal_counts_are_symmetric() {
        let s = summarize(&[row("R", 7, 7, 1, true)], &Scope::Country).unwrap();
        assert_eq!(s.delta, 0.0);
        assert_eq!(s.r, Some(1.0));
    }

    #[test]
    fn final_shares_reverse() {
        // half-time N lead, final 42.95% vs 41.42%
        let rows = vec![row("R", 4100, 4600, 1300, true), row("R", 4495, 3542, 1963, false)];
        let s = summarize(&rows, &Scope::Country).unwrap();
        assert!(s.delta < 0.0);
        assert_eq!(s.final_h, 8595);
        assert_eq!(s.final_n, 8142);
        assert!(s.final_h > s.final_n);
        assert!(s.v <= s.final_total);
    }

    #[test]
    fn region_scope_and_undefined_r() {
        let rows = vec![row("A", 0, 10, 0, true), row("B", 5, 5, 0, true)];
        let a = summarize(&rows, &Scope::Region("A".into())).unwrap();
        assert_eq!(a.r, None);
        assert_eq!(a.delta, -1.0);
        assert!(summarize(&rows, &Scope::Region("C".into())).is_err());
        assert!(summarize(&[row("A", 1, 1, 0, false)], &Scope::Country).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn delta_matches_ratio_identity(v_h in 1i64..10_000_000, v_n in 0i64..10_000_000) {
            let s = summarize(&[row("R", v_h as u64, v_n as u64, 0, true)], &Scope::Country).unwrap();
            let r = Ratio::new(v_n, v_h);
            let one = Ratio::from_integer(1);
            let exact_delta = Ratio::new(v_h - v_n, v_h + v_n);
            prop_assert_eq!((one - r) / (one + r), exact_delta);
            let approx = *exact_delta.numer() as f64 / *exact_delta.denom() as f64;
            prop_assert!((s.delta - approx).abs() <= 2.0 * f64::EPSILON);
            let r_f = s.r.unwrap();
            prop_assert!(((1.0 - r_f) / (1.0 + r_f) - s.delta).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariant(
            counts in prop::collection::vec((0u64..1000, 0u64..1000, 0u64..100, any::<bool>()), 1..30),
            seed in any::<u64>(),
        ) {
            let mut rows: Vec<TallyRow> = counts.iter().map(|&(h, n, o, f)| row("R", h, n, o, f)).collect();
            rows[0].counted_by_halftime = true;
            rows[0].votes_h += 1;
            let a = summarize(&rows, &Scope::Country).unwrap();
            let k = (seed as usize) % rows.len();
            rows.rotate_left(k);
            rows.reverse();
            let b = summarize(&rows, &Scope::Country).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
