mod common;

use std::fs;

use common::{random_track, rng};
use dyadflow::features::io::{load_corpus, read_track, write_corpus, write_track, Manifest};
use dyadflow::features::{generate_synthetic_corpus, SynthConfig};

#[test]
fn tracks_round_trip_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    for dim in [3, 30, 56] {
        let t = random_track(dim, 17, &mut rng(dim as u64));
        let p = dir.path().join(format!("t{dim}.csv"));
        write_track(&p, &t).unwrap();
        assert_eq!(read_track(&p, dim).unwrap(), t);
    }
}

#[test]
fn malformed_files_report_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "c00,c01\n1,2\n3,x\n").unwrap();
    let msg = read_track(&p, 2).unwrap_err().to_string();
    assert!(msg.contains("row 2") && msg.contains("column 1"), "{msg}");
    fs::write(&p, "c00,c01\n1,NaN\n").unwrap();
    assert!(read_track(&p, 2).unwrap_err().to_string().contains("non-finite"));
    fs::write(&p, "a,b\n1,2\n").unwrap();
    assert!(read_track(&p, 2).is_err());
    assert!(read_track(&p, 3).is_err());
}

#[test]
fn corpus_round_trips_with_synthetic_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { n_sessions: 3, session_len: 60, ..SynthConfig::default() };
    let sessions = generate_synthetic_corpus(&cfg, &mut rng(1)).unwrap();
    let manifest = write_corpus(dir.path(), &sessions, Some(&cfg)).unwrap();
    let (m, back) = load_corpus(&manifest).unwrap();
    assert_eq!(back, sessions);
    assert_eq!(m.fps, 25);
    assert_eq!(m.synthetic, Some(cfg));
    assert_eq!(m.sessions.len(), 3);
    let reloaded = Manifest::load(&manifest).unwrap();
    assert_eq!(reloaded, m);
}

#[test]
fn manifests_at_other_frame_rates_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let sessions = generate_synthetic_corpus(
        &SynthConfig { n_sessions: 1, session_len: 20, ..SynthConfig::default() },
        &mut rng(0),
    )
    .unwrap();
    let manifest = write_corpus(dir.path(), &sessions, None).unwrap();
    let text = fs::read_to_string(&manifest).unwrap().replace("fps = 25", "fps = 30");
    fs::write(&manifest, text).unwrap();
    assert!(load_corpus(&manifest).unwrap_err().to_string().contains("fps"));
}
