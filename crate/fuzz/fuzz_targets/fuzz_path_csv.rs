#![no_main]

use heavytail::simulate::{read_path_csv, write_path_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(path) = read_path_csv(data) {
        let mut out = Vec::new();
        write_path_csv(&path, &mut out).expect("writes to memory");
        let again = read_path_csv(out.as_slice()).expect("written path reads back");
        assert_eq!(again.dim, path.dim);
        assert_eq!(again.len(), path.len());
    }
});
