//! Fixture inputs shared by the benchmarks.

use kurosh_core::{parse_group, GraphOfGroupsSpec, Presentation};

pub fn medium_pair() -> (Presentation, Presentation) {
    (
        parse_group("Z^4 * Z^3 * Z^3 * Z^2 * (Z^2 x Z/4) * Z * Z/6").unwrap(),
        parse_group("(Z^4 x Z/2) * Z^3 * Z^2 * Z^2 * Z/5").unwrap(),
    )
}

pub fn small_pair() -> (Presentation, Presentation) {
    (
        parse_group("Z/2 * Z/2 * Z/2").unwrap(),
        parse_group("Z * Z").unwrap(),
    )
}

pub fn loop_graph() -> GraphOfGroupsSpec {
    GraphOfGroupsSpec::from_json(
        r#"{"vertices":[{"id":"a","group":"Z^2 x Z/2"},{"id":"b","group":"Z^3 x Z/4"}],
            "edges":[{"id":"e1","ends":["a","b"],"group":"Z/2"},
                     {"id":"e2","ends":["a","a"],"group":"Z/2"},
                     {"id":"e3","ends":["b","b"],"group":"Z/4"}]}"#,
    )
    .unwrap()
}
