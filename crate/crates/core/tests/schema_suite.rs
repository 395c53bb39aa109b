use mlat_core::schema::{
    check_pricing_consistency, draft_schema, research_schema, validate, ProposalDoc,
    ResearchFindings, SchemaDoc, DRAFT_SCHEMA_JSON, RESEARCH_SCHEMA_JSON,
};
use serde_json::Value;

const RESEARCH_GOLDEN: &str = include_str!("../fixtures/research_golden.json");
const DRAFT_GOLDEN: &str = include_str!("../fixtures/draft_golden.json");
const MUTATIONS: &str = include_str!("../fixtures/schema_mutations.json");

#[path = "support/mutations.rs"]
mod mutations;

use mutations::{apply, Mutation};

#[test]
fn goldens_are_valid_and_typed() {
    let research: Value = serde_json::from_str(RESEARCH_GOLDEN).unwrap();
    let draft: Value = serde_json::from_str(DRAFT_GOLDEN).unwrap();
    let r = validate(&research, research_schema());
    assert!(r.valid, "{r}");
    let r = validate(&draft, draft_schema());
    assert!(r.valid, "{r}");
    let _: ResearchFindings = serde_json::from_value(research).unwrap();
    let proposal: ProposalDoc = serde_json::from_value(draft).unwrap();
    check_pricing_consistency(&proposal.pricing_section).unwrap();
}

#[test]
fn every_mutation_is_caught_at_its_path() {
    let mutations: Vec<Mutation> = serde_json::from_str(MUTATIONS).unwrap();
    assert_eq!(mutations.len(), 12);
    for m in &mutations {
        let (golden, schema) = match m.schema.as_str() {
            "research" => (RESEARCH_GOLDEN, research_schema()),
            _ => (DRAFT_GOLDEN, draft_schema()),
        };
        let mut doc: Value = serde_json::from_str(golden).unwrap();
        apply(&mut doc, m);
        let report = validate(&doc, schema);
        assert!(!report.valid, "{} survived", m.path);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.violations[0].path, m.path);
        assert_eq!(report.violations[0].rule, m.rule);
    }
}

#[test]
fn embedded_text_round_trips() {
    for text in [RESEARCH_SCHEMA_JSON, DRAFT_SCHEMA_JSON] {
        let parsed = SchemaDoc::parse_str(text).unwrap();
        let v: Value = serde_json::from_str(text).unwrap();
        assert_eq!(SchemaDoc::parse(&v).unwrap(), parsed);
    }
}
