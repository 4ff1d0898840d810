use std::collections::BTreeSet;
use std::sync::Arc;

use scimap_client::{ClientError, ScimapClient};
use scimap_core::corpus::BibRecord;
use scimap_core::map::read_json;
use scimap_core::thesaurus::parse_rules;
use scimap_core::{PipelineConfig, Thesaurus};

fn record(id: &str, keywords: &[&str], year: i32) -> BibRecord {
    BibRecord {
        id: id.into(),
        title: String::new(),
        authors: vec![],
        affiliations: vec![],
        countries: BTreeSet::new(),
        keywords: keywords.iter().map(|k| k.to_string()).collect(),
        pub_year: Some(year),
        pub_month: None,
        venue: String::new(),
        citations: 0,
    }
}

async fn service() -> String {
    let corpus = vec![
        record("1", &["a", "b", "c"], 2010),
        record("2", &["a", "b"], 2012),
        record("3", &["b", "c"], 2014),
        record("4", &["c", "d"], 2016),
    ];
    let config = PipelineConfig { min_occurrences: 1, restarts: 2, ..PipelineConfig::default() };
    let state = tokio::task::spawn_blocking(move || scimap_server::AppState::new(corpus, Thesaurus::new(), config))
        .await
        .unwrap()
        .unwrap();
    scimap_server::spawn(Arc::new(state)).await.unwrap()
}

#[tokio::test]
async fn unreachable_service_is_a_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let err = ScimapClient::new(format!("http://{addr}")).map().await.unwrap_err();
    assert!(matches!(err, ClientError::Transport(_)), "{err}");
    assert_eq!(err.status(), None);
}

#[tokio::test]
async fn trailing_slash_is_ignored() {
    let url = service().await;
    let client = ScimapClient::new(format!("{url}/"));
    assert_eq!(client.base_url(), url);
    assert_eq!(client.config().await.unwrap().min_occurrences, 1);
}

#[tokio::test]
async fn typed_and_raw_map_agree() {
    let client = ScimapClient::new(service().await);
    let raw = client.map_json().await.unwrap();
    let map = client.map().await.unwrap();
    assert_eq!(read_json(&raw).unwrap(), map);
    assert_eq!(map.nodes.len(), 4);

    let b = map.node_by_label("b").unwrap();
    let neighbors = client.neighbors(b.id).await.unwrap();
    let labels: BTreeSet<_> = neighbors.neighbors.iter().map(|n| n.label.as_str()).collect();
    assert_eq!(labels, ["a", "c"].into_iter().collect());
    assert!(neighbors.neighbors.windows(2).all(|w| w[0].strength >= w[1].strength));
}

#[tokio::test]
async fn rules_round_trip() {
    let client = ScimapClient::new(service().await);
    assert_eq!(client.thesaurus_tsv().await.unwrap().lines().count(), 1);
    let sent = "d\tmerge\tc\na\tremove_term\t\n";
    assert_eq!(client.add_rules(sent).await.unwrap(), scimap_client::RulesAdded { added: 2, total: 2 });
    let mut stored = parse_rules(&client.thesaurus_tsv().await.unwrap()).unwrap();
    let mut expected = parse_rules(sent).unwrap();
    stored.sort_by(|x, y| x.label.cmp(&y.label));
    expected.sort_by(|x, y| x.label.cmp(&y.label));
    assert_eq!(stored, expected);

    let rebuilt = client.rebuild().await.unwrap();
    let labels: Vec<_> = rebuilt.nodes.iter().map(|n| n.label.as_str()).collect();
    assert_eq!(labels.len(), 2);
    assert!(labels.contains(&"b") && labels.contains(&"c"));
}

#[tokio::test]
async fn api_errors_carry_code_and_status() {
    let client = ScimapClient::new(service().await);
    match client.add_rules("x\tmerge\tx\n").await.unwrap_err() {
        ClientError::Api { status, code, .. } => {
            assert_eq!(status.as_u16(), 400);
            assert_eq!(code, "invalid_rule");
        }
        other => panic!("{other}"),
    }
    let err = client.neighbors(99).await.unwrap_err();
    assert_eq!(err.status().unwrap().as_u16(), 404);

    let overlay = client.overlay(Some(2013.0)).await.unwrap();
    assert_eq!(overlay.cutoff, Some(2013.0));
    assert!(overlay.emerging.unwrap().contains(&"d".to_string()));
}
