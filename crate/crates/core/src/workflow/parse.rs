//! Parsers for model output. All of them are total: any input produces a
//! (possibly empty) result, never an error or a panic.
//!
//! Parameter references inside a line are resolved with this precedence:
//! explicit number (`Name (33)`, `33. Name`, `#33`) > exact name > fuzzy
//! name > unresolved.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use super::{ContradictionRelation, ProblemParameter, TrizMapping};
use crate::knowledge::{KnowledgeBase, PARAMETER_COUNT};
use crate::text::{normalize_name, strip_decoration};

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static regex"))
}

/// A parameter mention: the number it resolved to and the name as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamRef {
    pub number: Option<u8>,
    pub name: String,
}

fn valid_param(n: &str) -> Option<u8> {
    n.parse::<u8>().ok().filter(|n| (1..=PARAMETER_COUNT).contains(n))
}

fn resolve_name(kb: &KnowledgeBase, name: &str) -> Option<u8> {
    if normalize_name(name).is_empty() {
        return None;
    }
    match kb.parameter_by_name(name, false) {
        Ok(Some(p)) => Some(p.number),
        _ => kb.parameter_by_name(name, true).ok().flatten().map(|p| p.number),
    }
}

/// Resolves one parameter mention such as `Ease of Operation (33)`,
/// `33. Ease of operation`, `#33` or a bare name.
pub fn parse_param_ref(kb: &KnowledgeBase, text: &str) -> ParamRef {
    static PAREN: OnceLock<Regex> = OnceLock::new();
    static PREFIX: OnceLock<Regex> = OnceLock::new();
    static SUFFIX: OnceLock<Regex> = OnceLock::new();
    let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let line = strip_decoration(line);

    let paren = re(&PAREN, r"(?i)^(.*?)\s*[(\[](?:no\.?\s*|#|parameter\s+)?(\d{1,3})[)\]]");
    if let Some(c) = paren.captures(line) {
        let name = strip_decoration(&c[1]).to_owned();
        if let Some(n) = valid_param(&c[2]) {
            return ParamRef { number: Some(n), name };
        }
        return ParamRef { number: resolve_name(kb, &name), name };
    }
    let prefix = re(&PREFIX, r"(?i)^(?:#|no\.?\s*|parameter\s+)?(\d{1,3})\s*(?:[.:)\-–]\s*|\s+)(.+)$");
    if let Some(c) = prefix.captures(line) {
        let name = strip_decoration(&c[2]).to_owned();
        if let Some(n) = valid_param(&c[1]) {
            return ParamRef { number: Some(n), name };
        }
        return ParamRef { number: resolve_name(kb, &name), name };
    }
    let suffix = re(&SUFFIX, r"^(.+?)\s*(?:#|[-–:]\s*)(\d{1,3})$");
    if let Some(c) = suffix.captures(line) {
        let name = strip_decoration(&c[1]).to_owned();
        if let Some(n) = valid_param(&c[2]) {
            return ParamRef { number: Some(n), name };
        }
    }
    if let Some(n) = line.strip_prefix('#').and_then(valid_param).or_else(|| valid_param(line)) {
        let name = kb.parameter_by_number(n as i64).map(|p| p.name.clone()).unwrap_or_default();
        return ParamRef { number: Some(n), name };
    }
    let name = line.to_owned();
    ParamRef { number: resolve_name(kb, &name), name }
}

fn clean_line(line: &str) -> &str {
    let t = line.trim().trim_start_matches('#').trim_start();
    let t = t.strip_prefix("- ").or_else(|| t.strip_prefix("* ")).or_else(|| t.strip_prefix("• ")).unwrap_or(t);
    t.trim()
}

fn is_table_separator(line: &str) -> bool {
    let t = line.trim();
    t.starts_with('|') && t.chars().all(|c| matches!(c, '|' | '-' | ':' | ' '))
}

fn table_cells(line: &str) -> Option<Vec<String>> {
    let t = line.trim();
    if !t.starts_with('|') {
        return None;
    }
    let cells: Vec<String> = t.trim_matches('|').split('|').map(|c| strip_decoration(c).to_owned()).collect();
    Some(cells)
}

/// Splits `name: explanation`, `name - explanation` or `name, explanation`.
fn split_name_explanation(rest: &str) -> (String, String) {
    static LABELED: OnceLock<Regex> = OnceLock::new();
    let labeled = re(&LABELED, r"(?i)parameter\s+name\s*[:\-]\s*(.*?)\s*[,;]?\s*parameter\s+explanation\s*[:\-]\s*(.*)$");
    if let Some(c) = labeled.captures(rest) {
        return (strip_decoration(&c[1]).to_owned(), c[2].trim().to_owned());
    }
    for sep in [":", " - ", " \u{2013} ", " \u{2014} ", ", "] {
        if let Some((a, b)) = rest.split_once(sep) {
            let name = strip_decoration(a);
            if !name.is_empty() && name.split_whitespace().count() <= 12 {
                return (name.to_owned(), b.trim().to_owned());
            }
        }
    }
    (strip_decoration(rest).to_owned(), String::new())
}

/// Step 1: problem parameters. Recognises numbered lists, labelled blocks
/// (`Parameter number: / Parameter name: / Parameter explanation:`) and
/// markdown tables. Lines that fit none of these become raw entries.
pub fn parse_problem_parameters(text: &str) -> Vec<ProblemParameter> {
    static NUMBERED: OnceLock<Regex> = OnceLock::new();
    static LABEL: OnceLock<Regex> = OnceLock::new();
    let numbered = re(&NUMBERED, r"(?i)^(?:\*\*)?(?:parameter\s*(?:number|no\.?)?\s*)?(\d{1,3})\s*(?:\*\*)?\s*[.):,\-]\s*(.+)$");
    let label = re(&LABEL, r"(?i)^(?:\*\*)?parameter\s+(number|name|explanation)(?:\*\*)?\s*[:\-]\s*(?:\*\*)?\s*(.*)$");

    let mut items: Vec<ProblemParameter> = Vec::new();
    let mut raw_lines: Vec<String> = Vec::new();
    let mut structured = false;
    let next_ordinal = |items: &Vec<ProblemParameter>| items.last().map_or(1, |p| p.ordinal + 1);

    for line in text.lines() {
        if is_table_separator(line) {
            continue;
        }
        let cleaned = clean_line(line);
        if cleaned.is_empty() {
            continue;
        }
        if let Some(cells) = table_cells(line) {
            let cells: Vec<String> = cells.into_iter().filter(|c| !c.is_empty()).collect();
            if cells.len() >= 2 {
                if let Ok(n) = cells[0].parse::<u32>() {
                    structured = true;
                    let explanation = cells.get(2..).map(|r| r.join(" ")).unwrap_or_default();
                    items.push(ProblemParameter { ordinal: n, name: cells[1].clone(), explanation, raw: false });
                    continue;
                }
                if cells[0].to_ascii_lowercase().contains("parameter") || cells[0].to_ascii_lowercase().contains("number") {
                    continue;
                }
            }
        }
        if let Some(c) = label.captures(cleaned) {
            structured = true;
            let value = strip_decoration(&c[2]).to_owned();
            match c[1].to_ascii_lowercase().as_str() {
                "number" => {
                    let ordinal = value.parse().unwrap_or_else(|_| next_ordinal(&items));
                    items.push(ProblemParameter { ordinal, name: String::new(), explanation: String::new(), raw: false });
                }
                "name" => match items.last_mut() {
                    Some(p) if p.name.is_empty() => p.name = value,
                    _ => {
                        let ordinal = next_ordinal(&items);
                        items.push(ProblemParameter { ordinal, name: value, explanation: String::new(), raw: false });
                    }
                },
                _ => match items.last_mut() {
                    Some(p) if p.explanation.is_empty() => p.explanation = c[2].trim().to_owned(),
                    Some(p) => {
                        p.explanation.push(' ');
                        p.explanation.push_str(c[2].trim());
                    }
                    None => raw_lines.push(cleaned.to_owned()),
                },
            }
            continue;
        }
        if let Some(c) = numbered.captures(cleaned) {
            let (name, explanation) = split_name_explanation(&c[2]);
            if !name.is_empty() {
                structured = true;
                let ordinal = c[1].parse().unwrap_or_else(|_| next_ordinal(&items));
                items.push(ProblemParameter { ordinal, name, explanation, raw: false });
                continue;
            }
        }
        match items.last_mut() {
            Some(p) if structured => {
                if !p.explanation.is_empty() {
                    p.explanation.push(' ');
                }
                p.explanation.push_str(cleaned);
            }
            _ => raw_lines.push(cleaned.to_owned()),
        }
    }

    items.retain(|p| !p.name.trim().is_empty());
    if items.is_empty() {
        return raw_lines
            .into_iter()
            .enumerate()
            .map(|(i, l)| ProblemParameter { ordinal: i as u32 + 1, name: l, explanation: String::new(), raw: true })
            .collect();
    }
    // keep ordinals unique so selections are unambiguous
    let mut seen = BTreeSet::new();
    let mut next = items.iter().map(|p| p.ordinal).max().unwrap_or(0) + 1;
    for p in &mut items {
        if !seen.insert(p.ordinal) {
            p.ordinal = next;
            seen.insert(next);
            next += 1;
        }
    }
    items
}

/// Step 2: mappings from problem parameters to TRIZ parameters.
///
/// Each line is attributed to the selected problem parameter it mentions
/// (or the last one mentioned). TRIZ references are read from the rest of
/// the line; a line without an explicit number is tried as a bare name after
/// its last `:` or arrow.
pub fn parse_mappings(text: &str, kb: &KnowledgeBase, selected: &[ProblemParameter]) -> Vec<TrizMapping> {
    static PAREN: OnceLock<Regex> = OnceLock::new();
    static PREFIX: OnceLock<Regex> = OnceLock::new();
    static LEAD: OnceLock<Regex> = OnceLock::new();
    let paren = re(&PAREN, r"(?i)([A-Za-z][A-Za-z'’/&\- ]*?)\s*\((?:no\.?\s*|#|parameter\s+)?(\d{1,3})\)");
    let prefix = re(&PREFIX, r"(?i)(?:^|[\s:>→(\[,;])(?:#|no\.?\s*)?(\d{1,3})\s*[.:)\-–]\s*([A-Za-z][A-Za-z'’/& ]*(?:\([A-Za-z ]+\))?[A-Za-z'’/& ]*)");
    let lead = re(&LEAD, r"^(?:\d{1,3}\s*[.):\-]\s*)");

    let mut out: Vec<TrizMapping> = Vec::new();
    let mut current: Option<u32> = selected.first().filter(|_| selected.len() == 1).map(|p| p.ordinal);

    for line in text.lines() {
        if is_table_separator(line) {
            continue;
        }
        let mut body = clean_line(line).replace("**", "");
        if body.is_empty() {
            continue;
        }
        if let Some(cells) = table_cells(line) {
            body = cells.join(" : ");
        }
        let norm_body = normalize_name(&body);
        let mut segment = body.clone();
        // longest selected name mentioned on this line
        let mention = selected
            .iter()
            .filter(|p| {
                let n = normalize_name(&p.name);
                !n.is_empty() && format!(" {norm_body} ").contains(&format!(" {n} "))
            })
            .max_by_key(|p| p.name.len());
        if let Some(p) = mention {
            current = Some(p.ordinal);
            let lower = body.to_lowercase();
            if let Some(pos) = lower.find(&p.name.to_lowercase()) {
                segment = body[pos + p.name.len()..].to_owned();
            } else if let Some(m) = lead.find(&body) {
                segment = body[m.end()..].to_owned();
            }
        }

        let mut refs: Vec<(usize, ParamRef)> = Vec::new();
        let mut covered: Vec<(usize, usize)> = Vec::new();
        for c in paren.captures_iter(&segment) {
            let m = c.get(0).unwrap();
            covered.push((m.start(), m.end()));
            let name = strip_decoration(&c[1]).to_owned();
            let name = name.rsplit([':', '>', '→']).next().map(|s| strip_decoration(s).to_owned()).unwrap_or(name);
            let number = valid_param(&c[2]).or_else(|| resolve_name(kb, &name));
            refs.push((m.start(), ParamRef { number, name }));
        }
        for c in prefix.captures_iter(&segment) {
            let m = c.get(1).unwrap();
            if covered.iter().any(|&(s, e)| m.start() >= s && m.start() < e) {
                continue;
            }
            let Some(n) = valid_param(&c[1]) else { continue };
            let name = strip_decoration(c[2].split(['-', '\u{2013}', ',', ';']).next().unwrap_or("")).to_owned();
            // a leading list ordinal of a line that named no problem parameter
            // is only a TRIZ reference when the name agrees with the number
            if mention.is_none() && m.start() == 0 && resolve_name(kb, &name) != Some(n) {
                continue;
            }
            refs.push((m.start(), ParamRef { number: Some(n), name }));
        }
        if refs.is_empty() && current.is_some() {
            let tail = segment.rsplit([':', '→', '>']).next().unwrap_or("");
            let tail = strip_decoration(tail);
            if !tail.is_empty() && tail.split_whitespace().count() <= 8 {
                if let Some(n) = resolve_name(kb, tail) {
                    refs.push((0, ParamRef { number: Some(n), name: tail.to_owned() }));
                }
            }
        }
        refs.sort_by_key(|(pos, _)| *pos);
        for (_, r) in refs {
            out.push(TrizMapping { source: current, resolved: r.number.is_some(), triz_number: r.number, triz_name: r.name });
        }
    }
    dedupe_mappings(out)
}

/// Drops later mappings that repeat a TRIZ number (or, for unresolved ones,
/// a normalised name).
pub fn dedupe_mappings(mappings: Vec<TrizMapping>) -> Vec<TrizMapping> {
    let mut numbers = BTreeSet::new();
    let mut names = BTreeSet::new();
    mappings
        .into_iter()
        .filter(|m| match m.triz_number {
            Some(n) => numbers.insert(n),
            None => names.insert(normalize_name(&m.triz_name)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Improving,
    Worsening,
    Explanation,
}

#[derive(Debug, Default)]
struct Record {
    improving: Option<String>,
    worsening: Option<String>,
    explanation: Option<String>,
}

impl Record {
    fn slot(&mut self, f: Field) -> &mut Option<String> {
        match f {
            Field::Improving => &mut self.improving,
            Field::Worsening => &mut self.worsening,
            Field::Explanation => &mut self.explanation,
        }
    }
}

fn relation(kb: &KnowledgeBase, improving: &str, worsening: &str, explanation: &str) -> ContradictionRelation {
    let i = parse_param_ref(kb, improving);
    let w = parse_param_ref(kb, worsening);
    ContradictionRelation::new(i.number, i.name, w.number, w.name, explanation.trim().to_owned())
}

/// Step 3: contradiction relations from labelled fields, markdown tables or
/// `A vs B` lines. Field order inside a record does not matter; a record
/// ends at a numbered item or when a field repeats.
pub fn parse_contradictions(text: &str, kb: &KnowledgeBase) -> Vec<ContradictionRelation> {
    let mut out = parse_labelled(text, kb);
    if out.is_empty() {
        out = parse_table(text, kb);
    }
    if out.is_empty() {
        out = parse_versus(text, kb);
    }
    dedupe_relations(out)
}

fn parse_labelled(text: &str, kb: &KnowledgeBase) -> Vec<ContradictionRelation> {
    static LABEL: OnceLock<Regex> = OnceLock::new();
    static BOUNDARY: OnceLock<Regex> = OnceLock::new();
    let label = re(
        &LABEL,
        r"(?im)(?:^|[\s*_>#(\-])(improv(?:ed|ing|es|ement)?|worsen(?:ed|ing|s)?|explanation|reason)(?:\s+parameters?)?[*_\s]*:",
    );
    let boundary = re(&BOUNDARY, r"(?im)^[\s>#*_]*(?:\d{1,3}[.)]|(?:contradiction|pair|relation)\s*(?:#\s*)?\d{1,3}\b)");

    let labels: Vec<(usize, usize, Field)> = label
        .captures_iter(text)
        .map(|c| {
            let m = c.get(0).unwrap();
            let kind = c[1].to_ascii_lowercase();
            let field = if kind.starts_with("improv") {
                Field::Improving
            } else if kind.starts_with("worsen") {
                Field::Worsening
            } else {
                Field::Explanation
            };
            (c.get(1).unwrap().start(), m.end(), field)
        })
        .collect();
    if labels.is_empty() {
        return Vec::new();
    }
    let boundaries: Vec<usize> = boundary.find_iter(text).map(|m| m.start()).collect();

    let mut records: Vec<Record> = Vec::new();
    let mut current = Record::default();
    let mut prev_end = 0usize;
    for (i, &(start, end, field)) in labels.iter().enumerate() {
        let crosses = boundaries.iter().any(|&b| b >= prev_end && b < start);
        let occupied = current.slot(field).is_some();
        if (crosses || occupied) && (current.improving.is_some() || current.worsening.is_some() || current.explanation.is_some()) {
            records.push(std::mem::take(&mut current));
        }
        let next_label = labels.get(i + 1).map_or(text.len(), |l| l.0);
        let next_boundary = boundaries.iter().copied().find(|&b| b > end && b < next_label).unwrap_or(next_label);
        let value = text[end..next_boundary].trim();
        *current.slot(field) = Some(value.to_owned());
        prev_end = end;
    }
    records.push(current);

    records
        .into_iter()
        .filter_map(|r| {
            let improving = r.improving?;
            let worsening = r.worsening?;
            let explanation = r.explanation.unwrap_or_default();
            let explanation = explanation.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ");
            Some(relation(kb, &improving, &worsening, strip_decoration(&explanation)))
        })
        .filter(|r| !(r.improving_name.is_empty() && r.improving_number.is_none()) && !(r.worsening_name.is_empty() && r.worsening_number.is_none()))
        .collect()
}

fn parse_table(text: &str, kb: &KnowledgeBase) -> Vec<ContradictionRelation> {
    let mut cols: Option<(usize, usize, Option<usize>)> = None;
    let mut out = Vec::new();
    for line in text.lines() {
        if is_table_separator(line) {
            continue;
        }
        let Some(cells) = table_cells(line) else { continue };
        let lower: Vec<String> = cells.iter().map(|c| c.to_lowercase()).collect();
        let imp = lower.iter().position(|c| c.contains("improv"));
        let wor = lower.iter().position(|c| c.contains("worsen"));
        if let (Some(i), Some(w)) = (imp, wor) {
            cols = Some((i, w, lower.iter().position(|c| c.contains("explan") || c.contains("reason"))));
            continue;
        }
        let (i, w, e) = cols.unwrap_or(if cells.len() >= 4 { (1, 2, Some(3)) } else { (0, 1, Some(2)) });
        if let (Some(a), Some(b)) = (cells.get(i), cells.get(w)) {
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let explanation = e.and_then(|e| cells.get(e)).cloned().unwrap_or_default();
            out.push(relation(kb, a, b, &explanation));
        }
    }
    out
}

fn parse_versus(text: &str, kb: &KnowledgeBase) -> Vec<ContradictionRelation> {
    static VS: OnceLock<Regex> = OnceLock::new();
    static LEAD: OnceLock<Regex> = OnceLock::new();
    let vs = re(&VS, r"(?i)\s+(?:vs\.?|versus|↔|<->|<=>)\s+");
    let lead = re(&LEAD, r"^(?:\d{1,3}\s*[.)]\s*)");
    let mut out = Vec::new();
    for line in text.lines() {
        let body = clean_line(line).replace("**", "");
        let body = lead.replace(&body, "").into_owned();
        let Some(m) = vs.find(&body) else { continue };
        let left = &body[..m.start()];
        let right = &body[m.end()..];
        let (worsening, explanation) = match right.find([':', '\u{2014}', '\u{2013}']).or_else(|| right.find(" - ")) {
            Some(p) => {
                let rest = &right[p..];
                let rest = rest.trim_start_matches([':', '\u{2014}', '\u{2013}', ' ', '-']);
                (&right[..p], rest)
            }
            None => (right, ""),
        };
        out.push(relation(kb, left, worsening, explanation));
    }
    out
}

/// Keeps the first relation per (improving, worsening) pair; incomplete
/// relations are keyed by their normalised names.
pub fn dedupe_relations(relations: Vec<ContradictionRelation>) -> Vec<ContradictionRelation> {
    let mut pairs = BTreeSet::new();
    let mut names = BTreeSet::new();
    relations
        .into_iter()
        .filter(|r| match r.pair() {
            Some(p) => pairs.insert(p),
            None => names.insert((normalize_name(&r.improving_name), normalize_name(&r.worsening_name))),
        })
        .collect()
}

/// Step 4: one solution per call. The whole reply is the solution.
pub fn parse_solution(text: &str) -> Option<String> {
    let t = text.trim();
    (!t.is_empty()).then(|| t.to_owned())
}
