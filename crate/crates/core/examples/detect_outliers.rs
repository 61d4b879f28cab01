//! Scores one query with each detector and prints what gets flagged.

use omit_rank::outlier::{detect, DetectorConfig, DetectorMethod};
use omit_rank::{sort_by_utility, Group, Item, QueryInstance};

fn main() {
    // nine ordinary items and one whose feature is far above the rest
    let features = [3.1, 2.8, 3.4, 41.0, 2.9, 3.3, 3.0, 2.7, 3.2, 3.5];
    let items = features
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let group = if i % 2 == 0 { Group::Privileged } else { Group::Disadvantaged };
            Item::new(format!("d{i}"), 1.0 - i as f64 * 0.05, group, vec![x])
        })
        .collect();
    let query = QueryInstance::new("q", 1, items).expect("valid query");
    let initial = sort_by_utility(&query);

    for method in [DetectorMethod::Mad, DetectorMethod::MedKnn, DetectorMethod::Copod] {
        let o = detect(&query, &initial, &DetectorConfig::new(method)).expect("detector runs");
        let flagged: Vec<&str> = o.flagged().map(|i| query.items[i].id.as_str()).collect();
        let scores: Vec<String> = o.scores.iter().map(|s| format!("{s:.2}")).collect();
        println!("{method:>6}: flagged {flagged:?}  scores [{}]", scores.join(" "));
    }

    // restricting the context to the top five leaves the rest unscored
    let cfg = DetectorConfig::new(DetectorMethod::Mad).with_context(5);
    let o = detect(&query, &initial, &cfg).expect("detector runs");
    println!("mad, context 5: {} flagged", o.count());
}
