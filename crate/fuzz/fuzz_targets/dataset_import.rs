#![no_main]

use fasa_core::harness::LongTailDataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(ds) = LongTailDataset::from_json(text) {
        let _ = ds.class_bins();
        let again = LongTailDataset::from_json(&ds.to_json()).expect("exported dataset imports");
        assert_eq!(again, ds);
    }
});
