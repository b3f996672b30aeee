use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qspec"))
        .args(args)
        .env("QSPEC_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = qspec(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("a.csv");
    let b = d.path().join("b.csv");
    for f in [&a, &b] {
        ok(&["simulate", "--preset", "tvar2-gauss", "--T", "8192", "--seed", "7", "--file", s(f)]);
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 8193);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(qspec(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qspec(&["simulate", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(qspec(&[]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_nonzero_with_diagnostic() {
    let d = tempfile::tempdir().unwrap();
    let out = qspec(&["simulate", "--preset", "tvar9", "--output", s(d.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tvar9"));

    let bad = d.path().join("bad.csv");
    fs::write(&bad, "1\n2\nx\n").unwrap();
    let out = qspec(&["estimate", "--input", s(&bad), "--output", s(d.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "preset = iid-gauss\nT = 50\nseed = 3\n").unwrap();
    let a = d.path().join("a.csv");
    ok(&["simulate", "--config", s(&cfg), "--file", s(&a)]);
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 51);
    ok(&["simulate", "--config", s(&cfg), "--T", "20", "--file", s(&a)]);
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 21);
}

fn decode(path: &Path) -> (usize, usize, Vec<u8>) {
    let dec = png::Decoder::new(std::io::BufReader::new(fs::File::open(path).unwrap()));
    let mut r = dec.read_info().unwrap();
    let mut buf = vec![0; r.output_buffer_size().unwrap()];
    let info = r.next_frame(&mut buf).unwrap();
    buf.truncate(info.buffer_size());
    (info.width as usize, info.height as usize, buf)
}

#[test]
fn white_noise_renders_mostly_dark_blue() {
    let d = tempfile::tempdir().unwrap();
    let dir = s(d.path());
    let plan = ["--n", "128", "--B", "6", "--quantiles", "0.1,0.5,0.9"];
    let with = |extra: &[&str]| -> Vec<String> {
        extra.iter().chain(plan.iter()).map(|x| x.to_string()).collect()
    };
    let run = |v: Vec<String>| ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    run(with(&["simulate", "--preset", "iid-gauss", "--T", "2048", "--seed", "1", "--output", dir]));
    let series = d.path().join("series.csv");
    run(with(&["estimate", "--input", s(&series), "--output", dir]));
    let bands = d.path().join("bands.txt");
    run(with(&["calibrate", "--M", "400", "--seed", "2", "--bands", s(&bands)]));
    let field = d.path().join("field.csv");
    let png_a = d.path().join("a.png");
    let png_b = d.path().join("b.png");
    for p in [&png_a, &png_b] {
        run(with(&["render", "--field", s(&field), "--bands", s(&bands), "--file", s(p)]));
    }
    assert_eq!(fs::read(&png_a).unwrap(), fs::read(&png_b).unwrap());

    let (w, h, px) = decode(&png_a);
    let dark = [0u8, 0, 139];
    let white = [255u8, 255, 255];
    let (mut panel, mut blue) = (0usize, 0usize);
    // the legend strip is the last 16 columns
    for y in 0..h {
        for x in 0..w - 16 {
            let i = 3 * (y * w + x);
            let c = [px[i], px[i + 1], px[i + 2]];
            if c != white {
                panel += 1;
                blue += (c == dark) as usize;
            }
        }
    }
    let frac = blue as f64 / panel as f64;
    assert!(frac >= 0.99, "dark-blue fraction {frac}");
}

#[test]
fn returns_pipeline_writes_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    ok(&["simulate", "--preset", "tvarch1", "--T", "1500", "--seed", "4", "--output", s(dir)]);
    // turn returns into a price path
    let text = fs::read_to_string(dir.join("series.csv")).unwrap();
    let mut p = 100.0f64;
    let mut prices = String::from("price\n100\n");
    for line in text.lines().skip(1) {
        p *= (0.01 * line.parse::<f64>().unwrap()).exp();
        prices.push_str(&format!("{p}\n"));
    }
    let input = dir.join("prices.csv");
    fs::write(&input, prices).unwrap();
    let outs: Vec<_> = ["r1", "r2"].iter().map(|n| dir.join(n)).collect();
    for o in &outs {
        let out = ok(&[
            "returns-pipeline", "--input", s(&input), "--J", "2", "--n", "128", "--B", "8",
            "--M", "100", "--seed", "5", "--output", s(o),
        ]);
        assert!(String::from_utf8_lossy(&out.stdout).contains("best replicate"));
    }
    for name in [
        "returns.csv", "sigma.csv", "best_series.csv", "field.csv", "best_field.csv",
        "distances.csv", "best.txt", "bands.txt", "field.png", "best_field.png",
    ] {
        let a = fs::read(outs[0].join(name)).unwrap();
        assert_eq!(a, fs::read(outs[1].join(name)).unwrap(), "{name}");
    }
    let best: usize = fs::read_to_string(outs[0].join("best.txt")).unwrap().trim().parse().unwrap();
    assert!(best == 1 || best == 2);
}
