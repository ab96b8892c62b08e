use std::fmt::Write;

use super::{ReasonerInput, RobotContext};

pub const FORMAT_REMINDER: &str = "Your previous reply could not be parsed. Reply again with exactly one JSON object \
in the requested shape and no other text.";

const SYSTEM: &str = "You are the intent reasoner of a gesture interface that controls a fleet of robots. \
Read the structured description of the operator's hand gesture, decide what the operator wants, \
and match it to commands that the listed robots support. \
Reply with exactly one JSON object and no other text.";

fn robots_section(out: &mut String, robots: &[RobotContext]) {
    out.push_str("## Robots\n");
    for r in robots {
        let _ = writeln!(out, "### {}", r.robot_id);
        let _ = writeln!(out, "description: {}", r.description);
        let _ = writeln!(out, "status: {}, load: {:.2}", r.status.as_str(), r.load);
        out.push_str("commands:\n");
        for c in &r.commands {
            let _ = writeln!(out, "- {}: {}", c.command_id, c.description);
        }
    }
    out.push('\n');
}

/// Deterministic prompt for intent interpretation. The example section is
/// left out entirely when there are no exemplars.
pub fn build_prompt(input: &ReasonerInput) -> String {
    let mut out = String::new();
    let _ = write!(out, "## System\n{SYSTEM}\n\n");
    if !input.exemplars.is_empty() {
        out.push_str("## Examples\n");
        for (i, e) in input.exemplars.iter().enumerate() {
            let _ = write!(
                out,
                "### Example {}\n{}\n=> robot: {}, command: {}\n\n",
                i + 1,
                e.description,
                e.robot_id,
                e.command_id
            );
        }
    }
    robots_section(&mut out, &input.robots);
    let _ = write!(out, "## Gesture\n{}\n\n", input.description);
    out.push_str(
        "## Output\n\
         Emit exactly one JSON object of the form \
         {\"intent\": \"<short phrase>\", \"task\": \"<one sentence>\", \
         \"candidates\": [{\"robot\": \"<robot id>\", \"command\": \"<command id>\", \"confidence\": <number in [0, 1]>}]} \
         with candidates in order of preference. Use only robot and command ids listed above.\n",
    );
    out
}

/// Prompt asking for an ordered plan of supported commands for a task.
pub fn build_decompose_prompt(task: &str, robots: &[RobotContext]) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "## System\nYou plan robot actions. No single command matches the operator's task, \
         so break it into an ordered sequence of supported commands, or fall back to the closest supported command. \
         Reply with exactly one JSON object and no other text.\n\n"
    );
    robots_section(&mut out, robots);
    let _ = write!(out, "## Task\n{task}\n\n");
    out.push_str(
        "## Output\n\
         Emit exactly one JSON object of the form \
         {\"subcommands\": [{\"robot\": \"<robot id>\", \"command\": \"<command id>\"}], \"rationale\": \"<one sentence>\"} \
         listing the steps in execution order. Use only robot and command ids listed above.\n",
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet;
    use crate::memory::{MemoryRecord, Outcome};
    use crate::registry::LiveState;

    fn input(exemplars: &[MemoryRecord]) -> ReasonerInput {
        let snapshot: Vec<_> = fleet::reference_fleet("http://127.0.0.1:1")
            .into_iter()
            .map(|p| (p, LiveState::offline()))
            .collect();
        ReasonerInput::new("hand: right\npose[0]: fingers=none", &snapshot, exemplars)
    }

    #[test]
    fn no_exemplars_no_section() {
        let p = build_prompt(&input(&[]));
        assert!(!p.contains("## Examples"));
        assert_eq!(p, build_prompt(&input(&[])));
    }

    #[test]
    fn every_command_listed_once() {
        let p = build_prompt(&input(&[]));
        let ids: Vec<&str> = fleet::MANIPULATOR_COMMANDS
            .iter()
            .chain(fleet::ROBODOG_COMMANDS.iter())
            .map(|(id, _)| *id)
            .collect();
        assert_eq!(ids.len(), 11);
        for id in ids {
            let n = p
                .split(|c: char| !(c.is_alphanumeric() || c == '_'))
                .filter(|tok| *tok == id)
                .count();
            assert_eq!(n, 1, "{id}");
        }
    }

    #[test]
    fn exemplars_in_given_order() {
        let rec = |d: &str, c: &str| MemoryRecord {
            description_text: d.into(),
            robot_id: "ur3".into(),
            command_id: c.into(),
            timestamp: 0.0,
            outcome: Outcome::Success,
        };
        let p = build_prompt(&input(&[rec("first", "a"), rec("second", "b")]));
        assert!(p.contains("## Examples"));
        assert!(p.find("### Example 1\nfirst").unwrap() < p.find("### Example 2\nsecond").unwrap());
    }
}
