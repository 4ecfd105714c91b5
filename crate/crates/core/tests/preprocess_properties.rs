use chrono::{Days, NaiveDate};
use proptest::prelude::*;

use wavescope::preprocess::{align, log_returns, PriceSeries};

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 7, 10).unwrap()
}

fn price_path() -> impl Strategy<Value = PriceSeries> {
    prop::collection::vec(-0.2f64..0.2, 1..200).prop_map(|steps| {
        let mut prices = vec![1000.0];
        for s in steps {
            let last = *prices.last().unwrap();
            prices.push(last * s.exp());
        }
        let dates = (0..prices.len() as u64).map(|i| start() + Days::new(i)).collect();
        PriceSeries::new("X", dates, prices).unwrap()
    })
}

fn date_subset() -> impl Strategy<Value = Vec<NaiveDate>> {
    prop::collection::btree_set(0u64..60, 1..40)
        .prop_map(|set| set.into_iter().map(|i| start() + Days::new(i)).collect())
}

proptest! {
    #[test]
    fn cumulative_returns_rebuild_prices(p in price_path()) {
        let r = log_returns(&p).unwrap();
        prop_assert_eq!(r.len(), p.len() - 1);
        let mut acc = 0.0;
        for (i, ret) in r.returns.iter().enumerate() {
            acc += ret;
            let rebuilt = p.prices()[0] * acc.exp();
            let truth = p.prices()[i + 1];
            prop_assert!((rebuilt - truth).abs() <= 1e-10 * truth);
        }
        prop_assert_eq!(&r.timestamps[..], &p.timestamps()[1..]);
    }

    #[test]
    fn returns_are_scale_free(p in price_path(), c in 1e-3f64..1e3) {
        let scaled = PriceSeries::new(
            "X",
            p.timestamps().to_vec(),
            p.prices().iter().map(|v| v * c).collect(),
        ).unwrap();
        let a = log_returns(&p).unwrap();
        let b = log_returns(&scaled).unwrap();
        for (x, y) in a.returns.iter().zip(&b.returns) {
            prop_assert!((x - y).abs() <= 1e-14, "{} vs {}", x, y);
        }
    }

    #[test]
    fn align_is_idempotent_and_symmetric(da in date_subset(), db in date_subset()) {
        let mk = |sym: &str, d: &[NaiveDate]| {
            PriceSeries::new(sym, d.to_vec(), (1..=d.len()).map(|i| i as f64).collect()).unwrap()
        };
        let a = mk("A", &da);
        let b = mk("B", &db);
        match align(&a, &b) {
            Ok((x, y)) => {
                prop_assert_eq!(x.timestamps(), y.timestamps());
                let (y2, x2) = align(&b, &a).unwrap();
                prop_assert_eq!(x2.timestamps(), x.timestamps());
                prop_assert_eq!(&y2, &y);
                let (x3, y3) = align(&x, &y).unwrap();
                prop_assert_eq!(x3, x);
                prop_assert_eq!(y3, y);
            }
            Err(_) => {
                prop_assert!(da.iter().all(|d| !db.contains(d)));
            }
        }
    }
}
