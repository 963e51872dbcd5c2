#![no_main]

use fasa_core::stats::StatisticsBank;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(bank) = StatisticsBank::from_json(text) {
        let again = StatisticsBank::from_json(&bank.to_json()).expect("written snapshot restores");
        assert_eq!(again, bank);
    }
});
