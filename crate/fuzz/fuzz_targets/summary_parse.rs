#![no_main]

use fasa_core::experiment::{parse_summary, Manifest};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = parse_summary(text);
    let _ = Manifest::parse(text);
});
