use std::path::{Path, PathBuf};

use ssimdecomp::cli::run;
use ssimdecomp::imageio::{read_pgm, write_pgm};
use ssimdecomp::{Dictionary, GrayImage, PgmFormat};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ssimdecomp(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("ssimdecomp").chain(args.iter().copied()), &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn textured(w: usize, h: usize) -> GrayImage {
    let px = (0..h)
        .flat_map(|y| (0..w).map(move |x| ((x * 29 + y * 13 + (x * y) % 7 * 17) % 256) as f64))
        .collect();
    GrayImage::new(w, h, px).unwrap()
}

fn save(dir: &Path, name: &str, img: &GrayImage) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, write_pgm(img, PgmFormat::P5)).unwrap();
    path
}

#[test]
fn dct_dictionary_header() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.txt");
    let o = ssimdecomp(&["dict-build", "--dct", "--block", "4", "--out", s(&d)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout, "atoms=15 p=16\n");
    let text = std::fs::read_to_string(&d).unwrap();
    assert_eq!(text.lines().nth(1), Some("15 16"));
}

#[test]
fn dict_build_flag_and_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ssimdecomp(&["dict-build", "--dct", "--block", "4"]).code, 2);
    let out = dir.path().join("d.txt");
    assert_eq!(ssimdecomp(&["dict-build", "--block", "4", "--out", s(&out)]).code, 2);
    let flat = save(dir.path(), "flat.pgm", &GrayImage::new(16, 16, vec![90.0; 256]).unwrap());
    let o = ssimdecomp(&["dict-build", "--from-image", s(&flat), "--block", "4", "--atoms", "8", "--seed", "1", "--out", s(&out)]);
    assert_eq!(o.code, 4, "{}", o.stderr);
    let missing = dir.path().join("nope.pgm");
    let o = ssimdecomp(&["dict-build", "--from-image", s(&missing), "--block", "4", "--atoms", "8", "--seed", "1", "--out", s(&out)]);
    assert_eq!(o.code, 3);
}

#[test]
fn patch_dictionary_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let img = save(dir.path(), "img.pgm", &textured(20, 20));
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    for d in [&a, &b] {
        let o = ssimdecomp(&["dict-build", "--from-image", s(&img), "--block", "3", "--atoms", "12", "--seed", "7", "--out", s(d)]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert_eq!(o.stdout, "atoms=12 p=9\n");
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn decompose_reconstruct_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let source = textured(10, 7);
    let img = save(dir.path(), "img.pgm", &source);
    let dict = dir.path().join("d.txt");
    assert_eq!(ssimdecomp(&["dict-build", "--dct", "--block", "4", "--out", s(&dict)]).code, 0);
    let codes = dir.path().join("c.txt");
    let o = ssimdecomp(&["decompose", "--image", s(&img), "--dict", s(&dict), "--sparsity", "15", "--cost", "mse", "--out", s(&codes)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let line = o.stdout.trim();
    let mean_mse: f64 = line.strip_prefix("mean_mse=").unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!(mean_mse <= 1e-12, "{line}");
    assert!(line.contains(" mean_ssim=") && line.contains(" mean_pcc="));

    for (fmt, magic) in [("p5", b"P5"), ("p2", b"P2")] {
        let back = dir.path().join(format!("back-{fmt}.pgm"));
        let o = ssimdecomp(&["reconstruct", "--codes", s(&codes), "--dict", s(&dict), "--out", s(&back), "--format", fmt]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        let bytes = std::fs::read(&back).unwrap();
        assert_eq!(&bytes[..2], magic);
        assert_eq!(read_pgm(&bytes).unwrap(), source);
    }
}

#[test]
fn exhaustive_mse_and_ssim_pick_the_same_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let img = save(dir.path(), "img.pgm", &textured(12, 12));
    let dict = dir.path().join("d.txt");
    assert_eq!(ssimdecomp(&["dict-build", "--dct", "--block", "3", "--out", s(&dict)]).code, 0);
    let atom_lists = |cost: &str| -> Vec<String> {
        let codes = dir.path().join(format!("{cost}.txt"));
        let o = ssimdecomp(&[
            "decompose", "--image", s(&img), "--dict", s(&dict), "--sparsity", "2", "--cost", cost, "--search", "exhaustive",
            "--out", s(&codes),
        ]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        let text = std::fs::read_to_string(&codes).unwrap();
        text.lines().skip(2).map(|l| l.split(';').next().unwrap().to_string()).collect()
    };
    assert_eq!(atom_lists("mse"), atom_lists("ssim"));
}

#[test]
fn decompose_flag_errors() {
    let dir = tempfile::tempdir().unwrap();
    let img = save(dir.path(), "img.pgm", &textured(8, 8));
    let dict = dir.path().join("d.txt");
    assert_eq!(ssimdecomp(&["dict-build", "--dct", "--block", "2", "--out", s(&dict)]).code, 0);
    let codes = dir.path().join("c.txt");
    for m in ["0", "4"] {
        let o = ssimdecomp(&["decompose", "--image", s(&img), "--dict", s(&dict), "--sparsity", m, "--cost", "pcc", "--out", s(&codes)]);
        assert_eq!(o.code, 2, "sparsity {m}");
    }
    let o = ssimdecomp(&["decompose", "--image", s(&img), "--dict", s(&dict), "--sparsity", "1", "--cost", "l1", "--out", s(&codes)]);
    assert_eq!(o.code, 2);
}

#[test]
fn reconstruct_guards() {
    let dir = tempfile::tempdir().unwrap();
    let img = save(dir.path(), "img.pgm", &textured(8, 8));
    let dict = dir.path().join("d.txt");
    assert_eq!(ssimdecomp(&["dict-build", "--dct", "--block", "4", "--out", s(&dict)]).code, 0);
    let codes = dir.path().join("c.txt");
    let o = ssimdecomp(&["decompose", "--image", s(&img), "--dict", s(&dict), "--sparsity", "3", "--cost", "ssim", "--out", s(&codes)]);
    assert_eq!(o.code, 0, "{}", o.stderr);

    let back = dir.path().join("back.pgm");
    let o = ssimdecomp(&["reconstruct", "--codes", s(&codes), "--dict", s(&dict), "--out", s(&back)]);
    assert_eq!(o.code, 0);
    let back_img = read_pgm(&std::fs::read(&back).unwrap()).unwrap();
    assert_eq!((back_img.width(), back_img.height()), (8, 8));

    let other = dir.path().join("other.txt");
    let mut rows = Dictionary::load(&std::fs::read(&dict).unwrap()).unwrap().atoms().iter().map(|a| a.as_slice().to_vec()).collect::<Vec<_>>();
    rows[0][0] += 1e-3;
    std::fs::write(&other, Dictionary::from_rows(rows, "perturbed").unwrap().save()).unwrap();
    let o = ssimdecomp(&["reconstruct", "--codes", s(&other), "--dict", s(&other), "--out", s(&back)]);
    assert_eq!(o.code, 3, "a dictionary is not a codes file");
    let o = ssimdecomp(&["reconstruct", "--codes", s(&codes), "--dict", s(&other), "--out", s(&back)]);
    assert_eq!(o.code, 4, "{}", o.stderr);

    let broken = dir.path().join("broken.txt");
    let text = std::fs::read_to_string(&codes).unwrap();
    std::fs::write(&broken, text.replacen("0: ", "0; ", 1)).unwrap();
    let o = ssimdecomp(&["reconstruct", "--codes", s(&broken), "--dict", s(&dict), "--out", s(&back)]);
    assert_eq!(o.code, 3);
}

#[test]
fn metrics_lines() {
    let dir = tempfile::tempdir().unwrap();
    let base = textured(16, 16);
    let a = save(dir.path(), "a.pgm", &base);
    let o = ssimdecomp(&["metrics", "--ref", s(&a), "--test", s(&a), "--block", "4"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout, "mse=0.0 psnr=inf mean_ssim=1.0 mean_pcc=1.0\n");

    let dim = GrayImage::new(16, 16, base.pixels().iter().map(|v| (v * 0.5).floor()).collect()).unwrap();
    let shifted = GrayImage::new(16, 16, dim.pixels().iter().map(|v| v + 10.0).collect()).unwrap();
    let (d, sh) = (save(dir.path(), "d.pgm", &dim), save(dir.path(), "s.pgm", &shifted));
    let o = ssimdecomp(&["metrics", "--ref", s(&d), "--test", s(&sh), "--block", "4"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.starts_with("mse=100.0 psnr="), "{}", o.stdout);
    assert!(o.stdout.trim_end().ends_with("mean_pcc=1.0"), "{}", o.stdout);

    let small = save(dir.path(), "small.pgm", &textured(8, 16));
    assert_eq!(ssimdecomp(&["metrics", "--ref", s(&a), "--test", s(&small), "--block", "4"]).code, 4);
}

#[test]
fn verify_exit_codes() {
    let o = ssimdecomp(&["verify", "--seed", "42", "--dim", "16", "--atoms", "12", "--sparsity", "3", "--trials", "500"]);
    assert_eq!(o.code, 0, "{}{}", o.stdout, o.stderr);
    assert!(o.stdout.contains("status=pass"));
    assert_eq!(ssimdecomp(&["verify", "--seed", "42", "--dim", "16", "--atoms", "12", "--sparsity", "13", "--trials", "5"]).code, 2);
    assert_eq!(ssimdecomp(&["verify", "--seed", "42", "--dim", "16", "--atoms", "12", "--sparsity", "3", "--trials", "0"]).code, 2);
    let o = ssimdecomp(&["verify", "--seed", "3", "--dim", "8", "--atoms", "5", "--sparsity", "2", "--trials", "20", "--dist", "uniform", "--check", "ratio"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert!(o.stdout.starts_with("coefficient-ratio: "));
}

#[test]
fn verify_output_is_deterministic() {
    let args = ["verify", "--seed", "9", "--dim", "6", "--atoms", "6", "--sparsity", "2", "--trials", "30"];
    let strip = |t: String| t.lines().filter(|l| !l.starts_with("elapsed_ms=")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(ssimdecomp(&args).stdout), strip(ssimdecomp(&args).stdout));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(ssimdecomp(&["--help"]).code, 0);
    assert_eq!(ssimdecomp(&["--version"]).code, 0);
    assert_eq!(ssimdecomp(&["frobnicate"]).code, 2);
}
