//! Mutation fixtures: each edits one golden document so that exactly one
//! schema rule breaks at a known path.

use serde::Deserialize;
use serde_json::Value;

#[derive(Deserialize)]
pub struct Mutation {
    pub schema: String,
    pub op: String,
    pub at: String,
    #[serde(default)]
    pub value: Value,
    pub path: String,
    pub rule: String,
}

pub fn apply(doc: &mut Value, m: &Mutation) {
    let mut segs: Vec<&str> = m.at.split('.').collect();
    let last = segs.pop().unwrap();
    let mut node = doc;
    for s in segs {
        node = match s.parse::<usize>() {
            Ok(i) => &mut node[i],
            Err(_) => &mut node[s],
        };
    }
    match (m.op.as_str(), last.parse::<usize>()) {
        ("remove", Err(_)) => {
            node.as_object_mut().unwrap().remove(last).unwrap();
        }
        ("set", Ok(i)) => node[i] = m.value.clone(),
        ("set", Err(_)) => node[last] = m.value.clone(),
        other => panic!("bad mutation {other:?}"),
    }
}
