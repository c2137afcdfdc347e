//! Readers and writers for the TNTP benchmark text formats: the link table
//! (`*_net.tntp`), the origin-block trip table (`*_trips.tntp`), and the
//! optional node coordinate file.

use std::fmt::Write as _;

use crate::error::NetError;
use crate::network::{Link, Network, Node, OdMatrix};
use crate::scalar::Scalar;

/// Strips a `~` comment and surrounding whitespace.
fn clean(line: &str) -> &str {
    let body = match line.find('~') {
        Some(i) => &line[..i],
        None => line,
    };
    body.trim()
}

/// Splits a `<NAME> value` metadata line into its name (uppercased) and
/// value; returns `None` when the line is not a metadata line.
fn parse_meta(line: &str) -> Option<(String, String)> {
    let rest = line.strip_prefix('<')?;
    let end = rest.find('>')?;
    let name = rest[..end].trim().to_uppercase();
    let value = rest[end + 1..].trim().to_string();
    Some((name, value))
}

fn parse_num<T: Scalar>(tok: &str, line: usize, what: &str) -> Result<T, NetError> {
    tok.parse::<f64>()
        .ok()
        .and_then(T::from_f64)
        .ok_or_else(|| NetError::Parse {
            line,
            msg: format!("expected a number for {what}, got '{tok}'"),
        })
}

fn parse_count(tok: &str, line: usize, what: &str) -> Result<usize, NetError> {
    tok.parse::<usize>().map_err(|_| NetError::Parse {
        line,
        msg: format!("expected a non-negative integer for {what}, got '{tok}'"),
    })
}

/// Parses a TNTP link table into a [`Network`].
///
/// Capacity, free-flow time, and the BPR coefficients come from columns 3,
/// 5, 6, and 7 of each row; rows shorter than seven columns fall back to
/// the customary `b = 0.15`, `power = 4`. Node coordinates default to zero
/// until a coordinate file or a synthetic layout supplies them.
pub fn parse_tntp_net<T: Scalar>(text: &str) -> Result<Network<T>, NetError> {
    let mut n_nodes: Option<usize> = None;
    let mut n_links: Option<usize> = None;
    let mut first_thru: usize = 1;
    let mut in_meta = true;
    let mut links: Vec<Link<T>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = clean(raw);
        if line.is_empty() {
            continue;
        }
        if in_meta {
            if let Some((name, value)) = parse_meta(line) {
                match name.as_str() {
                    "NUMBER OF NODES" => n_nodes = Some(parse_count(&value, line_no, "node count")?),
                    "NUMBER OF LINKS" => n_links = Some(parse_count(&value, line_no, "link count")?),
                    "FIRST THRU NODE" => {
                        first_thru = parse_count(&value, line_no, "first through node")?
                    }
                    "END OF METADATA" => in_meta = false,
                    _ => {}
                }
                continue;
            }
            return Err(NetError::Parse {
                line: line_no,
                msg: format!("expected metadata before <END OF METADATA>, got '{line}'"),
            });
        }

        let n = n_nodes.ok_or_else(|| NetError::Parse {
            line: line_no,
            msg: "link rows before <NUMBER OF NODES>".into(),
        })?;
        let toks: Vec<&str> = line
            .split_whitespace()
            .map(|t| t.trim_end_matches(';'))
            .filter(|t| !t.is_empty())
            .collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 5 {
            return Err(NetError::Parse {
                line: line_no,
                msg: format!("link row needs at least 5 columns, found {}", toks.len()),
            });
        }
        let init = parse_count(toks[0], line_no, "initial node")?;
        let term = parse_count(toks[1], line_no, "terminal node")?;
        if init == 0 || term == 0 || init > n || term > n {
            return Err(NetError::Structure(format!(
                "line {line_no}: link endpoints ({init}, {term}) outside 1..={n}"
            )));
        }
        let capacity = parse_num(toks[2], line_no, "capacity")?;
        let free_flow_time = parse_num(toks[4], line_no, "free-flow time")?;
        let bpr_b = if toks.len() > 5 {
            parse_num(toks[5], line_no, "BPR coefficient")?
        } else {
            T::from(0.15).unwrap()
        };
        let bpr_power = if toks.len() > 6 {
            parse_num(toks[6], line_no, "BPR power")?
        } else {
            T::from(4).unwrap()
        };
        links.push(Link {
            from: init - 1,
            to: term - 1,
            free_flow_time,
            capacity,
            bpr_b,
            bpr_power,
        });
    }

    let n = n_nodes.ok_or_else(|| NetError::Structure("missing <NUMBER OF NODES>".into()))?;
    let m = n_links.ok_or_else(|| NetError::Structure("missing <NUMBER OF LINKS>".into()))?;
    if links.len() != m {
        return Err(NetError::Integrity(format!(
            "metadata declares {m} links but the table has {}",
            links.len()
        )));
    }
    let nodes = (0..n)
        .map(|i| Node {
            id: i,
            x: T::zero(),
            y: T::zero(),
        })
        .collect();
    Network::with_first_thru(nodes, links, first_thru.saturating_sub(1))
}

/// Parses a TNTP trip table into an [`OdMatrix`].
///
/// When the file declares `<TOTAL OD FLOW>`, the parsed entries must sum to
/// it; the tolerance scales with the scalar's precision so `f32` works too.
pub fn parse_tntp_trips<T: Scalar>(text: &str) -> Result<OdMatrix<T>, NetError> {
    let mut declared_total: Option<T> = None;
    let mut in_meta = true;
    let mut origin: Option<usize> = None;
    let mut od = OdMatrix::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = clean(raw);
        if line.is_empty() {
            continue;
        }
        if in_meta {
            if let Some((name, value)) = parse_meta(line) {
                match name.as_str() {
                    "TOTAL OD FLOW" => {
                        declared_total = Some(parse_num(&value, line_no, "total OD flow")?)
                    }
                    "END OF METADATA" => in_meta = false,
                    _ => {}
                }
                continue;
            }
            return Err(NetError::Parse {
                line: line_no,
                msg: format!("expected metadata before <END OF METADATA>, got '{line}'"),
            });
        }

        if let Some(rest) = strip_keyword(line, "Origin") {
            let id = parse_count(rest.trim(), line_no, "origin id")?;
            if id == 0 {
                return Err(NetError::Parse {
                    line: line_no,
                    msg: "origin ids are 1-based".into(),
                });
            }
            origin = Some(id - 1);
            continue;
        }
        let o = origin.ok_or_else(|| NetError::Parse {
            line: line_no,
            msg: "destination entries before any Origin line".into(),
        })?;
        for piece in line.split(';') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            let (d_tok, q_tok) = piece.split_once(':').ok_or_else(|| NetError::Parse {
                line: line_no,
                msg: format!("expected 'destination : demand', got '{piece}'"),
            })?;
            let d = parse_count(d_tok.trim(), line_no, "destination id")?;
            if d == 0 {
                return Err(NetError::Parse {
                    line: line_no,
                    msg: "destination ids are 1-based".into(),
                });
            }
            let q: T = parse_num(q_tok.trim(), line_no, "demand")?;
            od.set(o, d - 1, q)?;
        }
    }

    if let Some(declared) = declared_total {
        let parsed = od.total();
        let tol = T::from(1e-6).unwrap().max(T::epsilon() * T::from(100).unwrap());
        if (parsed - declared).abs() > tol * declared.abs().max(T::one()) {
            return Err(NetError::Integrity(format!(
                "trips declare total {declared} but entries sum to {parsed}"
            )));
        }
    }
    Ok(od)
}

fn strip_keyword<'a>(line: &'a str, kw: &str) -> Option<&'a str> {
    let head = line.get(..kw.len())?;
    if head.eq_ignore_ascii_case(kw) {
        Some(&line[kw.len()..])
    } else {
        None
    }
}

/// Parses a node coordinate file with rows `node_id x y`. Header rows whose
/// first token is not an integer are skipped. Returned ids are 0-based.
pub fn parse_node_coords<T: Scalar>(text: &str) -> Result<Vec<(usize, T, T)>, NetError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = clean(raw);
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line
            .split_whitespace()
            .map(|t| t.trim_end_matches(';'))
            .filter(|t| !t.is_empty())
            .collect();
        if toks.is_empty() {
            continue;
        }
        let Ok(id) = toks[0].parse::<usize>() else {
            continue;
        };
        if toks.len() < 3 {
            return Err(NetError::Parse {
                line: line_no,
                msg: "coordinate row needs node_id, x, y".into(),
            });
        }
        if id == 0 {
            return Err(NetError::Parse {
                line: line_no,
                msg: "node ids are 1-based".into(),
            });
        }
        let x = parse_num(toks[1], line_no, "x coordinate")?;
        let y = parse_num(toks[2], line_no, "y coordinate")?;
        out.push((id - 1, x, y));
    }
    Ok(out)
}

/// Serializes a network back to the TNTP link-table format. Scalars use the
/// shortest representation that round-trips, so parse-write-parse is exact.
pub fn write_tntp_net<T: Scalar>(net: &Network<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<NUMBER OF NODES> {}", net.node_count());
    let _ = writeln!(out, "<NUMBER OF LINKS> {}", net.link_count());
    let _ = writeln!(out, "<FIRST THRU NODE> {}", net.first_thru_node() + 1);
    let _ = writeln!(out, "<END OF METADATA>");
    let _ = writeln!(
        out,
        "~ init term capacity length free_flow_time b power speed toll type ;"
    );
    for link in net.links() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t0\t0\t1\t;",
            link.from + 1,
            link.to + 1,
            link.capacity,
            link.free_flow_time,
            link.free_flow_time,
            link.bpr_b,
            link.bpr_power
        );
    }
    out
}

/// Serializes a demand matrix back to the TNTP trip-table format.
pub fn write_tntp_trips<T: Scalar>(od: &OdMatrix<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<TOTAL OD FLOW> {}", od.total());
    let _ = writeln!(out, "<END OF METADATA>");
    let mut current: Option<usize> = None;
    for (o, d, q) in od.iter() {
        if current != Some(o) {
            let _ = writeln!(out, "Origin {}", o + 1);
            current = Some(o);
        }
        let _ = writeln!(out, "{} : {};", d + 1, q);
    }
    out
}

/// Serializes node coordinates as `node_id x y ;` rows with a header.
pub fn write_node_coords<T: Scalar>(net: &Network<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Node\tX\tY\t;");
    for node in net.nodes() {
        let _ = writeln!(out, "{}\t{}\t{}\t;", node.id + 1, node.x, node.y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY_NET: &str = "\
<NUMBER OF NODES> 2
<NUMBER OF LINKS> 1
<END OF METADATA>
~ header comment
1 2 2000 1 1.0 0.15 4 0 0 1 ;
";

    #[test]
    fn parses_a_minimal_net_file() {
        let net: Network = parse_tntp_net(TINY_NET).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.link_count(), 1);
        let link = net.link(0);
        assert_eq!(link.from, 0);
        assert_eq!(link.to, 1);
        assert_eq!(link.capacity, 2000.0);
        assert_eq!(link.free_flow_time, 1.0);
        assert_eq!(link.bpr_b, 0.15);
        assert_eq!(link.bpr_power, 4.0);
        assert_eq!(net.first_thru_node(), 0);
    }

    #[test]
    fn short_rows_fall_back_to_default_bpr() {
        let text = "\
<NUMBER OF NODES> 2
<NUMBER OF LINKS> 1
<END OF METADATA>
1 2 2000 1 1.0
";
        let net: Network = parse_tntp_net(text).unwrap();
        assert_eq!(net.link(0).bpr_b, 0.15);
        assert_eq!(net.link(0).bpr_power, 4.0);
    }

    #[test]
    fn link_count_mismatch_is_named() {
        let text = "\
<NUMBER OF NODES> 2
<NUMBER OF LINKS> 2
<END OF METADATA>
1 2 2000 1 1.0 0.15 4 0 0 1 ;
";
        let err = parse_tntp_net::<f64>(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('2') && msg.contains('1'), "{msg}");
    }

    #[test]
    fn out_of_range_endpoint_is_structural() {
        let text = "\
<NUMBER OF NODES> 2
<NUMBER OF LINKS> 1
<END OF METADATA>
1 3 2000 1 1.0 0.15 4 0 0 1 ;
";
        assert!(matches!(
            parse_tntp_net::<f64>(text),
            Err(NetError::Structure(_))
        ));
    }

    #[test]
    fn non_numeric_field_reports_the_line() {
        let text = "\
<NUMBER OF NODES> 2
<NUMBER OF LINKS> 1
<END OF METADATA>
1 2 abc 1 1.0 0.15 4 0 0 1 ;
";
        match parse_tntp_net::<f64>(text) {
            Err(NetError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn parses_a_trip_block() {
        let text = "\
<TOTAL OD FLOW> 150.0
<END OF METADATA>
Origin 1
2 : 100.0; 3 : 50.0;
";
        let od: OdMatrix = parse_tntp_trips(text).unwrap();
        assert_eq!(od.get(0, 1), 100.0);
        assert_eq!(od.get(0, 2), 50.0);
        assert_eq!(od.total(), 150.0);
    }

    #[test]
    fn empty_trips_parse_to_an_empty_matrix() {
        let text = "\
<TOTAL OD FLOW> 0
<END OF METADATA>
";
        let od: OdMatrix = parse_tntp_trips(text).unwrap();
        assert!(od.is_empty());
    }

    #[test]
    fn destinations_before_origin_fail() {
        let text = "\
<END OF METADATA>
2 : 100.0;
";
        assert!(matches!(
            parse_tntp_trips::<f64>(text),
            Err(NetError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn declared_total_mismatch_is_an_integrity_error() {
        let text = "\
<TOTAL OD FLOW> 500.0
<END OF METADATA>
Origin 1
2 : 100.0;
";
        assert!(matches!(
            parse_tntp_trips::<f64>(text),
            Err(NetError::Integrity(_))
        ));
    }

    #[test]
    fn diagonal_and_zero_trip_entries_are_dropped() {
        let text = "\
<TOTAL OD FLOW> 100.0
<END OF METADATA>
Origin 1
1 : 0.0; 2 : 100.0; 3 : 0.0;
";
        let od: OdMatrix = parse_tntp_trips(text).unwrap();
        assert_eq!(od.len(), 1);
    }

    #[test]
    fn node_coords_skip_headers_and_shift_ids() {
        let text = "\
Node\tX\tY\t;
1\t50000\t510000\t;
2\t320000\t510000\t;
";
        let coords: Vec<(usize, f64, f64)> = parse_node_coords(text).unwrap();
        assert_eq!(coords, vec![(0, 50000.0, 510000.0), (1, 320000.0, 510000.0)]);
    }

    #[test]
    fn tiny_net_round_trips_exactly() {
        let net: Network = parse_tntp_net(TINY_NET).unwrap();
        let again: Network = parse_tntp_net(&write_tntp_net(&net)).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn trips_round_trip_exactly() {
        let od =
            OdMatrix::<f64>::from_entries([(0, 1, 100.5), (0, 2, 50.25), (3, 0, 7.125)]).unwrap();
        let again: OdMatrix = parse_tntp_trips(&write_tntp_trips(&od)).unwrap();
        assert_eq!(od, again);
    }
}
