#![no_main]

use libfuzzer_sys::fuzz_target;
use tanaka_core::pathkit::SamplePath;

fuzz_target!(|data: &[u8]| {
    if let Ok(path) = SamplePath::read_csv(data) {
        assert!(path.len() >= 2);
        assert!(path.times().windows(2).all(|w| w[0] < w[1]));
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let back = SamplePath::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, path);
    }
});
