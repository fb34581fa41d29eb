//! On-disk formats: JSON instance files and CSV assignment files.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::model::{Assignment, Instance, Placement, Thread, UtilityFunction};

/// An instance file as parsed, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInstance {
    pub servers: u64,
    pub capacity: u64,
    pub threads: Vec<RawThread>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawThread {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub breakpoints: Vec<(u64, f64)>,
}

/// Validates a parsed instance, reporting every violation found.
pub fn validate_instance(raw: RawInstance) -> Result<Instance> {
    let mut violations = Vec::new();
    if raw.servers == 0 {
        violations.push(Violation::Shape("servers must be at least 1".into()));
    }
    if raw.capacity == 0 {
        violations.push(Violation::Shape("capacity must be at least 1".into()));
    }
    if raw.threads.is_empty() {
        violations.push(Violation::Shape("at least one thread is required".into()));
    }
    for (index, t) in raw.threads.iter().enumerate() {
        violations.extend(
            UtilityFunction::check(&t.breakpoints, raw.capacity)
                .into_iter()
                .map(|error| Violation::Thread { index, error }),
        );
    }
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let threads = raw
        .threads
        .into_iter()
        .map(|t| {
            let utility = UtilityFunction::new(t.breakpoints, raw.capacity)?;
            Ok(Thread {
                name: t.name,
                utility,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance::new(raw.servers as usize, raw.capacity, threads)?.with_metadata(raw.metadata))
}

impl From<&Instance> for RawInstance {
    fn from(inst: &Instance) -> Self {
        RawInstance {
            servers: inst.servers() as u64,
            capacity: inst.capacity(),
            threads: inst
                .threads()
                .iter()
                .map(|t| RawThread {
                    name: t.name.clone(),
                    breakpoints: t.utility.breakpoints().to_vec(),
                })
                .collect(),
            metadata: inst.metadata().clone(),
        }
    }
}

pub fn read_instance<R: Read>(reader: R) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_reader(reader)?;
    validate_instance(raw)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    validate_instance(serde_json::from_str(text)?)
}

pub fn write_instance<W: Write>(inst: &Instance, writer: W) -> Result<()> {
    serde_json::to_writer(writer, &RawInstance::from(inst))?;
    Ok(())
}

pub fn instance_to_string(inst: &Instance) -> String {
    serde_json::to_string(&RawInstance::from(inst)).expect("instance serializes")
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentRow {
    thread: usize,
    server: usize,
    allocation: u64,
    utility: f64,
}

/// Writes `thread,server,allocation,utility` rows with 1-based thread and server ids.
pub fn write_assignment<W: Write>(inst: &Instance, a: &Assignment, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (i, p) in a.entries.iter().enumerate() {
        w.serialize(AssignmentRow {
            thread: i + 1,
            server: p.server + 1,
            allocation: p.allocation,
            utility: inst.utility(i).value_at(p.allocation),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an assignment CSV. Rows must appear in thread order.
pub fn read_assignment<R: Read>(reader: R) -> Result<Assignment> {
    let mut entries = Vec::new();
    for (i, row) in csv::Reader::from_reader(reader).deserialize().enumerate() {
        let row: AssignmentRow = row?;
        if row.thread != i + 1 || row.server == 0 {
            return Err(Error::Parameter(format!(
                "assignment row {} names thread {} on server {}",
                i + 1,
                row.thread,
                row.server
            )));
        }
        entries.push(Placement {
            server: row.server - 1,
            allocation: row.allocation,
        });
    }
    Ok(Assignment::new(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CurveError;
    use crate::model::tests::tight;

    #[test]
    fn parses_instance_file() {
        let inst = parse_instance(
            r#"{"servers": 2, "capacity": 4,
                "threads": [{"name": "a", "breakpoints": [[0, 0], [2, 1], [4, 2]]},
                            {"breakpoints": [[0, 0], [4, 1]]}]}"#,
        )
        .unwrap();
        assert_eq!(inst.servers(), 2);
        assert_eq!(inst.threads()[0].name.as_deref(), Some("a"));
        assert_eq!(inst.utility(0).value_at(1), 0.5);
    }

    #[test]
    fn collects_all_violations() {
        let err = parse_instance(
            r#"{"servers": 1, "capacity": 4,
                "threads": [{"breakpoints": [[0, 0], [3, 2]]},
                            {"breakpoints": [[0, 0], [1, 1], [4, 4]]}]}"#,
        )
        .unwrap_err();
        let Error::Invalid(v) = err else {
            panic!("expected violations")
        };
        assert_eq!(
            v[0],
            Violation::Thread {
                index: 0,
                error: CurveError::Domain {
                    last: 3,
                    capacity: 4
                }
            }
        );
        assert_eq!(v.len(), 1);

        let err = parse_instance(
            r#"{"servers": 0, "capacity": 2,
                "threads": [{"breakpoints": [[0, 0], [1, 1], [2, 3]]}]}"#,
        )
        .unwrap_err();
        let Error::Invalid(v) = err else {
            panic!("expected violations")
        };
        assert_eq!(v.len(), 2);
        assert!(matches!(
            v[1],
            Violation::Thread {
                error: CurveError::Concavity { .. },
                ..
            }
        ));
    }

    #[test]
    fn instance_round_trip() {
        let inst = tight();
        let text = instance_to_string(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
        assert_eq!(instance_to_string(&parse_instance(&text).unwrap()), text);
    }

    #[test]
    fn assignment_csv_round_trip() {
        let inst = tight();
        let a = Assignment::new(vec![
            Placement {
                server: 0,
                allocation: 1,
            },
            Placement {
                server: 1,
                allocation: 1,
            },
            Placement {
                server: 0,
                allocation: 1,
            },
        ]);
        let mut buf = Vec::new();
        write_assignment(&inst, &a, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "thread,server,allocation,utility\n1,1,1,1.0\n2,2,1,1.0\n3,1,1,0.5\n"
        );
        assert_eq!(read_assignment(&buf[..]).unwrap(), a);
    }
}
