use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use statecrawl_core::{coverage, parse_timemap, MockArchive, ResourceRef, ResourceSet, UriR};

fn frontier() -> impl Strategy<Value = BTreeMap<u32, ResourceSet>> {
    prop::collection::btree_map(
        0u32..3,
        prop::collection::vec(0u16..40, 0..15).prop_map(|ids| {
            ids.into_iter()
                .map(|i| ResourceRef::new(UriR::new(&format!("http://r.test/{i}#x")).unwrap(), "image/png", 5))
                .collect::<ResourceSet>()
        }),
        1..4,
    )
}

fn archive(held: &BTreeSet<u16>) -> MockArchive {
    let mut a = MockArchive::new();
    for i in held {
        a.insert(&UriR::new(&format!("http://r.test/{i}")).unwrap(), 1);
    }
    a
}

proptest! {
    #[test]
    fn fractions_match_membership_count(f in frontier(), held in prop::collection::btree_set(0u16..40, 0..40)) {
        let mock = archive(&held);
        let report = coverage(&f, &mock);
        let distinct: BTreeSet<&str> = f.values().flat_map(|s| s.keys()).collect();
        prop_assert_eq!(mock.lookups(), distinct.len() as u64);
        for row in &report.levels {
            let set = &f[&row.level];
            let missing = set
                .keys()
                .filter(|k| {
                    let id: u16 = k.rsplit('/').next().unwrap().parse().unwrap();
                    !held.contains(&id)
                })
                .count();
            let expected = if set.is_empty() { 0.0 } else { missing as f64 / set.len() as f64 };
            prop_assert_eq!(row.fraction_unarchived, expected);
            prop_assert!((0.0..=1.0).contains(&row.fraction_unarchived));
        }
    }

    #[test]
    fn more_holdings_never_raise_fractions(f in frontier(), held in prop::collection::btree_set(0u16..40, 0..40), extra in prop::collection::btree_set(0u16..40, 0..10)) {
        let before = coverage(&f, &archive(&held));
        let more: BTreeSet<u16> = held.union(&extra).copied().collect();
        let after = coverage(&f, &archive(&more));
        for (a, b) in after.levels.iter().zip(&before.levels) {
            prop_assert!(a.fraction_unarchived <= b.fraction_unarchived);
        }
    }

    #[test]
    fn timemap_round_trip(stamps in prop::collection::vec(0i64..2_000_000_000, 0..20)) {
        let original = UriR::new("http://example.com/a").unwrap();
        let mut body = String::from("<http://example.com/a>; rel=\"original\"");
        for (i, t) in stamps.iter().enumerate() {
            let dt = statecrawl_core::DateTime::from_unix_seconds(*t);
            body.push_str(&format!(",\n<http://arch.test/{i}/http://example.com/a>; rel=\"memento\"; datetime=\"{}\"", dt.to_http_date()));
        }
        let tm = parse_timemap(&body, original.clone()).unwrap();
        prop_assert_eq!(tm.memento_count(), stamps.len() as u64);
        let again = parse_timemap(&tm.to_link_format(), original).unwrap();
        let mut a = tm.mementos.clone();
        let mut b = again.mementos.clone();
        a.sort_by(|x, y| x.uri_m.cmp(&y.uri_m));
        b.sort_by(|x, y| x.uri_m.cmp(&y.uri_m));
        prop_assert_eq!(a, b);
    }
}
