use std::collections::BTreeSet;
use std::sync::Arc;

use scimap_client::{ClientError, ScimapClient};
use scimap_core::corpus::BibRecord;
use scimap_core::map::read_json;
use scimap_core::synthetic::corpus_csv;
use scimap_core::thesaurus::parse_rules;
use scimap_core::{parse_corpus, CorpusSchema, PipelineConfig, Thesaurus};
use scimap_server::{spawn, AppState};

fn record(id: &str, keywords: &[&str]) -> BibRecord {
    BibRecord {
        id: id.into(),
        title: String::new(),
        authors: vec![],
        affiliations: vec![],
        countries: BTreeSet::new(),
        keywords: keywords.iter().map(|k| k.to_string()).collect(),
        pub_year: Some(2015),
        pub_month: None,
        venue: String::new(),
        citations: 0,
    }
}

fn small_config() -> PipelineConfig {
    PipelineConfig { min_occurrences: 1, restarts: 2, ..PipelineConfig::default() }
}

async fn start(corpus: Vec<BibRecord>, config: PipelineConfig) -> ScimapClient {
    let state = tokio::task::spawn_blocking(move || AppState::new(corpus, Thesaurus::new(), config))
        .await
        .unwrap()
        .expect("initial map builds");
    ScimapClient::new(spawn(Arc::new(state)).await.unwrap())
}

async fn synthetic_service() -> ScimapClient {
    let csv = corpus_csv(3, 300);
    let corpus = parse_corpus(csv.as_bytes(), &CorpusSchema::default()).unwrap().records;
    start(corpus, PipelineConfig { min_occurrences: 5, restarts: 3, ..PipelineConfig::default() }).await
}

fn status(err: ClientError) -> u16 {
    err.status().expect("api error").as_u16()
}

#[tokio::test]
async fn invalid_rules_are_rejected() {
    let client = start(vec![record("1", &["a", "b"]), record("2", &["b", "c"])], small_config()).await;
    assert_eq!(status(client.add_rules("a\tmerge\tb\nb\tmerge\ta\n").await.unwrap_err()), 400);
    assert_eq!(status(client.add_rules("a\tmerge\ta\n").await.unwrap_err()), 400);
    assert_eq!(status(client.add_rules("a\tsplit\tb\n").await.unwrap_err()), 400);

    // A cycle through an already accepted rule is caught too.
    assert_eq!(client.add_rules("label\taction\ttarget\na\tmerge\tb\n").await.unwrap().total, 1);
    let err = client.add_rules("b\tmerge\ta\n").await.unwrap_err();
    assert!(matches!(&err, ClientError::Api { code, .. } if code == "invalid_rule"), "{err}");
    assert_eq!(status(client.add_rules("a\tremove_term\t\n").await.unwrap_err()), 400);

    let stored = parse_rules(&client.thesaurus_tsv().await.unwrap()).unwrap();
    assert_eq!(stored, parse_rules("a\tmerge\tb\n").unwrap());
}

#[tokio::test]
async fn merge_then_rebuild_drops_label() {
    let client = synthetic_service().await;
    let before = client.map().await.unwrap();
    assert!(before.node_by_label("mutation analysis").is_some());
    let occurrences = before.node_by_label("mutation testing").unwrap().occurrences;

    client.add_rules("mutation analysis\tmerge\tmutation testing\n").await.unwrap();
    // Rules take effect only on rebuild.
    assert_eq!(client.map().await.unwrap(), before);

    let rebuilt = client.rebuild().await.unwrap();
    let served = client.map().await.unwrap();
    assert_eq!(rebuilt, served);
    assert!(served.node_by_label("mutation analysis").is_none());
    assert_eq!(served.nodes.len() + 1, before.nodes.len());
    assert!(served.node_by_label("mutation testing").unwrap().occurrences > occurrences);
}

#[tokio::test]
async fn two_node_network_has_one_neighbor() {
    let client = start(vec![record("1", &["a", "b"]), record("2", &["a", "b"])], small_config()).await;
    let first = client.neighbors(1).await.unwrap();
    assert_eq!(first.label, "a");
    assert_eq!(first.neighbors.len(), 1);
    assert_eq!((first.neighbors[0].id, first.neighbors[0].label.as_str(), first.neighbors[0].strength), (2, "b", 2));
    assert_eq!(status(client.neighbors(3).await.unwrap_err()), 404);
    assert_eq!(status(client.neighbors(0).await.unwrap_err()), 404);
}

#[tokio::test]
async fn failed_rebuild_keeps_previous_map() {
    let client = start(vec![record("1", &["a", "b"]), record("2", &["a", "b"])], small_config()).await;
    let before = client.map_json().await.unwrap();
    client.add_rules("a\tremove_term_and_studies\t\n").await.unwrap();
    let err = client.rebuild().await.unwrap_err();
    assert!(matches!(&err, ClientError::Api { status, code, .. } if status.as_u16() == 422 && code == "empty_network"), "{err}");
    assert_eq!(client.map_json().await.unwrap(), before);
}

#[tokio::test]
async fn readers_never_see_a_partial_map() {
    let client = synthetic_service().await;
    let old = client.map_json().await.unwrap();
    client.add_rules("fuzzing\tmerge\trandom testing\n").await.unwrap();
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let c = client.clone();
            tokio::spawn(async move {
                let mut seen = Vec::new();
                for _ in 0..25 {
                    seen.push(c.map_json().await.unwrap());
                }
                seen
            })
        })
        .collect();
    let new = client.rebuild_json().await.unwrap();
    for reader in readers {
        for body in reader.await.unwrap() {
            assert!(body == old || body == new);
            read_json(&body).unwrap();
        }
    }
}

#[tokio::test]
async fn config_overlay_and_density() {
    let client = synthetic_service().await;
    let config = client.config().await.unwrap();
    assert_eq!(config.min_occurrences, 5);
    assert_eq!(config.seed, 42);

    let map = client.map().await.unwrap();
    let overlay = client.overlay(Some(2009.0)).await.unwrap();
    assert_eq!(overlay.nodes.len(), map.nodes.len());
    let emerging = overlay.emerging.unwrap();
    for node in &overlay.nodes {
        assert_eq!(node.score, map.node(node.id).unwrap().avg_pub_date);
        assert_eq!(emerging.contains(&node.label), node.score.is_some_and(|s| s > 2009.0));
    }
    assert!(client.overlay(None).await.unwrap().emerging.is_none());

    let field = client.density(Some(30), None).await.unwrap();
    assert_eq!(field.resolution(), 30);
    assert!(field.grid.iter().flatten().all(|&v| v >= 0.0));
    let (x0, x1, y0, y1) = field.bounds;
    assert!(map.nodes.iter().all(|n| n.x >= x0 && n.x <= x1 && n.y >= y0 && n.y <= y1));
    assert_eq!(status(client.density(Some(1), None).await.unwrap_err()), 400);
    assert_eq!(status(client.density(None, Some(-1.0)).await.unwrap_err()), 400);
}
