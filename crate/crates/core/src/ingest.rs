//! Parsing, sanitizing, filtering, and time-ordering of raw vote and
//! proposal records before graph construction.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One vote event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    /// Hex wallet address, lower-cased on ingest.
    pub voter_address: String,
    pub proposal_id: String,
    /// The DAO this vote belongs to.
    pub space_id: String,
    /// Dimensionless token weight; never negative.
    pub voting_power: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    /// Option index chosen by the voter.
    pub choice: i64,
}

/// One governance proposal with its voting window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub proposal_id: String,
    pub space_id: String,
    pub start: i64,
    pub end: i64,
    /// Always `end - start`.
    pub duration: i64,
}

/// Summary of a windowed dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetWindow {
    pub start_date: i64,
    pub end_date: i64,
    pub vote_count: usize,
    pub proposal_count: usize,
    pub voter_count: usize,
}

/// Input encoding accepted by [`parse_votes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteFormat {
    Csv,
    JsonLines,
}

/// Result of a parse: accepted records plus per-record diagnostics for the
/// rows that were skipped.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub records: Vec<VoteRecord>,
    /// One human-readable message per skipped record (line number included).
    pub diagnostics: Vec<String>,
}

#[derive(Deserialize)]
struct RawVote {
    voter: String,
    proposal: String,
    space: String,
    choice: i64,
    voting_power: f64,
    timestamp: i64,
}

fn sanitize(raw: RawVote, line: usize) -> std::result::Result<VoteRecord, String> {
    let voter_address = raw.voter.trim().to_lowercase();
    let proposal_id = raw.proposal.trim().to_string();
    if voter_address.is_empty() {
        return Err(format!("line {line}: empty voter address"));
    }
    if proposal_id.is_empty() {
        return Err(format!("line {line}: empty proposal id"));
    }
    if !raw.voting_power.is_finite() || raw.voting_power < 0.0 {
        return Err(format!(
            "line {line}: invalid voting power {}",
            raw.voting_power
        ));
    }
    if raw.timestamp <= 0 {
        return Err(format!("line {line}: non-positive timestamp {}", raw.timestamp));
    }
    Ok(VoteRecord {
        voter_address,
        proposal_id,
        space_id: raw.space.trim().to_string(),
        voting_power: raw.voting_power,
        timestamp: raw.timestamp,
        choice: raw.choice,
    })
}

/// Parses line-delimited vote records in the declared format.
///
/// Malformed rows are skipped and reported in the outcome's diagnostics; if
/// more than half of the rows are malformed the whole parse fails, since that
/// almost always means the wrong format was declared.
pub fn parse_votes(input: impl Read, format: VoteFormat) -> Result<ParseOutcome> {
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut total = 0usize;

    match format {
        VoteFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
            // Header line occupies line 1.
            for (i, row) in reader.deserialize::<RawVote>().enumerate() {
                total += 1;
                let line = i + 2;
                match row {
                    Ok(raw) => match sanitize(raw, line) {
                        Ok(rec) => records.push(rec),
                        Err(msg) => diagnostics.push(msg),
                    },
                    Err(e) => diagnostics.push(format!("line {line}: {e}")),
                }
            }
        }
        VoteFormat::JsonLines => {
            let mut text = String::new();
            let mut input = input;
            input.read_to_string(&mut text)?;
            for (i, raw_line) in text.lines().enumerate() {
                if raw_line.trim().is_empty() {
                    continue;
                }
                total += 1;
                let line = i + 1;
                match serde_json::from_str::<RawVote>(raw_line) {
                    Ok(raw) => match sanitize(raw, line) {
                        Ok(rec) => records.push(rec),
                        Err(msg) => diagnostics.push(msg),
                    },
                    Err(e) => diagnostics.push(format!("line {line}: {e}")),
                }
            }
        }
    }

    if total > 0 && diagnostics.len() * 2 > total {
        return Err(Error::Format {
            malformed: diagnostics.len(),
            total,
        });
    }
    Ok(ParseOutcome {
        records,
        diagnostics,
    })
}

#[derive(Deserialize)]
struct RawProposal {
    proposal: String,
    space: String,
    start: i64,
    end: i64,
}

/// Parses the proposal CSV (`proposal,space,start,end`); duration is derived.
pub fn parse_proposals(input: impl Read) -> Result<Vec<ProposalRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<RawProposal>() {
        let raw = row?;
        if raw.end < raw.start {
            return Err(Error::InvalidParameter(format!(
                "proposal {}: end {} precedes start {}",
                raw.proposal, raw.end, raw.start
            )));
        }
        out.push(ProposalRecord {
            duration: raw.end - raw.start,
            proposal_id: raw.proposal,
            space_id: raw.space,
            start: raw.start,
            end: raw.end,
        });
    }
    Ok(out)
}

/// Keeps proposals whose duration lies in `[min_duration, max_duration]`,
/// preserving order. Also returns the rejected count for the duration
/// histogram report.
pub fn filter_proposals(
    proposals: &[ProposalRecord],
    min_duration: i64,
    max_duration: i64,
) -> Result<(Vec<ProposalRecord>, usize)> {
    if min_duration > max_duration {
        return Err(Error::InvalidParameter(format!(
            "duration bounds inverted: {min_duration} > {max_duration}"
        )));
    }
    let kept: Vec<ProposalRecord> = proposals
        .iter()
        .filter(|p| p.duration >= min_duration && p.duration <= max_duration)
        .cloned()
        .collect();
    let rejected = proposals.len() - kept.len();
    Ok((kept, rejected))
}

/// Restricts votes to `[start, end]` and sorts ascending by timestamp, with
/// ties broken by `(voter_address, proposal_id)` so the order is total.
pub fn window_and_sort(
    votes: &[VoteRecord],
    start: i64,
    end: i64,
) -> Result<(Vec<VoteRecord>, DatasetWindow)> {
    if start > end {
        return Err(Error::InvalidParameter(format!(
            "window inverted: {start} > {end}"
        )));
    }
    let mut windowed: Vec<VoteRecord> = votes
        .iter()
        .filter(|v| v.timestamp >= start && v.timestamp <= end)
        .cloned()
        .collect();
    windowed.sort_by(|a, b| {
        (a.timestamp, &a.voter_address, &a.proposal_id)
            .cmp(&(b.timestamp, &b.voter_address, &b.proposal_id))
    });

    let mut voters: Vec<&str> = windowed.iter().map(|v| v.voter_address.as_str()).collect();
    voters.sort_unstable();
    voters.dedup();
    let mut proposals: Vec<&str> = windowed.iter().map(|v| v.proposal_id.as_str()).collect();
    proposals.sort_unstable();
    proposals.dedup();

    let window = DatasetWindow {
        start_date: start,
        end_date: end,
        vote_count: windowed.len(),
        proposal_count: proposals.len(),
        voter_count: voters.len(),
    };
    Ok((windowed, window))
}

/// Serializes votes back to the CSV layout [`parse_votes`] consumes.
pub fn write_votes_csv(votes: &[VoteRecord], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["voter", "proposal", "space", "choice", "voting_power", "timestamp"])?;
    for v in votes {
        w.write_record([
            v.voter_address.as_str(),
            v.proposal_id.as_str(),
            v.space_id.as_str(),
            &v.choice.to_string(),
            // f64 Display is the shortest form that round-trips exactly.
            &v.voting_power.to_string(),
            &v.timestamp.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes proposals to the CSV layout [`parse_proposals`] consumes.
pub fn write_proposals_csv(proposals: &[ProposalRecord], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["proposal", "space", "start", "end"])?;
    for p in proposals {
        w.write_record([
            p.proposal_id.as_str(),
            p.space_id.as_str(),
            &p.start.to_string(),
            &p.end.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
