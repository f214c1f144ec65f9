#![allow(dead_code)]

use algoforge::llm::{fenced_response, MockSampler};

/// OBP priority bodies, some good, some bad, some unusable.
pub const OBP_BODIES: [&str; 12] = [
    "return -(bins - item)",
    "return bins",
    "r = bins - item\n    return -r * r",
    "return item / bins",
    "PROSE",
    "return 0.0 - abs(bins - item - 5)",
    "ARITY",
    "return max(bins - item, 0) * -1",
    "LOOP",
    "gap = bins - item\n    return if(gap < 10, 100 - gap, -gap)",
    "return -(bins - item) + 0.01 * item",
    "return -bins",
];

pub fn obp_response(i: usize) -> String {
    match OBP_BODIES[i % OBP_BODIES.len()] {
        "PROSE" => "I would pick the fullest bin, but I will not write code today.".to_string(),
        "ARITY" => fenced_response("one argument", "def priority(item):\n    return item"),
        "LOOP" => fenced_response(
            "loop",
            "def priority(item, bins):\n    s = 0\n    for k in range(3):\n        s += k\n    return s",
        ),
        body => fenced_response(
            &format!("variant {i}"),
            &format!("def priority(item, bins):\n    {body}"),
        ),
    }
}

pub fn obp_script() -> Vec<String> {
    (0..OBP_BODIES.len()).map(obp_response).collect()
}

pub fn obp_mock() -> MockSampler {
    MockSampler::new(obp_script()).unwrap()
}

/// Cheap SR candidates (two variables, 64 rows).
pub fn sr_script() -> Vec<String> {
    [
        "return b",
        "return 0.3 * b * s",
        "return 0.9 * b * s / (s + 1.5)",
        "return b * (1 - b / 12)",
        "return 0.9 * b * (1 - b / 12) * s / (s + 1.5)",
        "return s",
        "k = s / (s + 1)\n    return b * k * 0.5",
    ]
    .iter()
    .enumerate()
    .map(|(i, body)| fenced_response(&format!("law {i}"), &format!("def growth_rate(b, s):\n    {body}")))
    .collect()
}
