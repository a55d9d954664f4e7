//! Acceptance criteria, one line each. Run with
//! `cargo test -p uhreval-cli --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uhreval::curation::{self, ManifestRecord, ShortSideRule};
use uhreval::diffusion::{self, LossWeights, RfSample};
use uhreval::glcm::{self, GlcmOffset, GlcmSettings, Orientation};
use uhreval::jpeg::{self, JpegSettings};
use uhreval::report::{self, MetricReport, ReportSettings};
use uhreval::stats::{self, GaussianMoments, RatingSeries};
use uhreval::vae::{self, VaeLossParts, VaeLossWeights};
use uhreval::{pixel, synth, wavelet, GrayPatch, RgbImage, Tensor};

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

use Outcome::*;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor<T: uhreval::Real>(r: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor<T> {
    Tensor::from_fn(c, h, w, |_, _, _| T::from_f64(r.random_range(-1.0..1.0))).unwrap()
}

fn random_even_shape(r: &mut ChaCha8Rng) -> (usize, usize, usize) {
    (
        r.random_range(1..=8),
        2 * r.random_range(1..=32),
        2 * r.random_range(1..=32),
    )
}

fn dwt_corpus() -> Vec<Tensor<f32>> {
    let mut r = rng(1);
    (0..100)
        .map(|i| {
            let (c, h, w) = if i == 0 { (8, 64, 64) } else { random_even_shape(&mut r) };
            random_tensor(&mut r, c, h, w)
        })
        .collect()
}

fn dwt_reconstruction() -> Outcome {
    let corpus = dwt_corpus();
    let start = Instant::now();
    let mut max_err = 0.0f64;
    for x in &corpus {
        let y = wavelet::idwt(&wavelet::dwt(x).unwrap()).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            max_err = max_err.max(f64::from((a - b).abs()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        max_err <= 1e-6 && secs < 1.0,
        format!("100 f32 tensors up to 8x64x64: max abs error {max_err:.2e} (<= 1e-6), {secs:.3} s (< 1 s)"),
    )
}

fn parseval() -> Outcome {
    let mut worst = 0.0f64;
    for x in dwt_corpus() {
        let e = x.sum_squares();
        let bands = wavelet::dwt(&x).unwrap().sum_squares();
        worst = worst.max((e - bands).abs() / e);
    }
    check(
        worst <= 1e-6,
        format!("worst relative energy gap {worst:.2e} (<= 1e-6)"),
    )
}

fn random_sample(r: &mut ChaCha8Rng) -> (Tensor, RfSample) {
    let (c, h, w) = random_even_shape(r);
    let x0 = random_tensor(r, c, h, w);
    let eps = random_tensor(r, c, h, w);
    let sample = RfSample::new(x0, eps, r.random_range(0.0..=1.0)).unwrap();
    (random_tensor(r, c, h, w), sample)
}

fn wlf_equals_rf() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (v_hat, sample) = random_sample(&mut r);
        let w = LossWeights::uniform(r.random_range(0.01..10.0));
        let rf = diffusion::rf_loss(&v_hat, &sample, &w).unwrap();
        let wlf = diffusion::wlf_loss(&v_hat, &sample, &w).unwrap();
        worst = worst.max((rf - wlf).abs() / rf.abs());
    }
    check(
        worst <= 1e-5,
        format!("100 draws, worst relative difference {worst:.2e} (<= 1e-5)"),
    )
}

fn gradients() -> Outcome {
    let mut r = rng(3);
    let h = 1e-3;
    let mut worst = [0.0f64; 2];
    for trial in 0..4 {
        let (v_hat, sample) = random_sample(&mut r);
        let w = if trial % 2 == 0 {
            LossWeights::uniform(0.7)
        } else {
            LossWeights::new(1.3, diffusion::SubbandWeights::HF_EMPHASIS).unwrap()
        };
        type LossFn = fn(&Tensor, &RfSample, &LossWeights) -> uhreval::Result<f64>;
        type GradFn = fn(&Tensor, &RfSample, &LossWeights) -> uhreval::Result<Tensor>;
        let pairs: [(LossFn, GradFn); 2] = [
            (diffusion::rf_loss, diffusion::rf_loss_grad),
            (diffusion::wlf_loss, diffusion::wlf_loss_grad),
        ];
        for (k, (loss, grad)) in pairs.into_iter().enumerate() {
            let g = grad(&v_hat, &sample, &w).unwrap();
            for _ in 0..10 {
                let i = r.random_range(0..v_hat.len());
                let mut plus = v_hat.clone();
                plus.data_mut()[i] += h;
                let mut minus = v_hat.clone();
                minus.data_mut()[i] -= h;
                let fd = (loss(&plus, &sample, &w).unwrap() - loss(&minus, &sample, &w).unwrap()) / (2.0 * h);
                let an = g.data()[i];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-12);
                worst[k] = worst[k].max(rel);
            }
        }
    }
    check(
        worst[0] <= 1e-4 && worst[1] <= 1e-4,
        format!(
            "40 coordinates each, worst relative error rf {:.2e}, wlf {:.2e} (<= 1e-4)",
            worst[0], worst[1]
        ),
    )
}

/// Co-occurrence counts straight from the definition. The displacement is
/// `delta` steps along the unit direction of the angle, rounded to the
/// pixel grid.
fn naive_glcm(data: &[u8], side: usize, levels: usize, delta: usize, degrees: u32) -> Vec<u32> {
    let theta = f64::from(degrees).to_radians();
    let d = delta as isize;
    let dc = d * theta.cos().round() as isize;
    let dr = -d * theta.sin().round() as isize;
    let mut m = vec![0u32; levels * levels];
    for r in 0..side as isize {
        for c in 0..side as isize {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= side as isize || nc >= side as isize {
                continue;
            }
            let a = data[(r as usize) * side + c as usize] as usize;
            let b = data[(nr as usize) * side + nc as usize] as usize;
            m[a * levels + b] += 1;
            m[b * levels + a] += 1;
        }
    }
    m
}

fn glcm_oracle() -> Outcome {
    let mut r = rng(4);
    let mut mismatches = 0;
    let mut checked = 0;
    for i in 0..50 {
        let levels = [64, 64, 8, 2, 256][i % 5];
        let data: Vec<u8> = (0..64 * 64).map(|_| r.random_range(0..levels) as u8).collect();
        let patch = GrayPatch::new(64, levels, data.clone()).unwrap();
        for delta in 1..=4 {
            for theta in Orientation::ALL {
                let g = glcm::glcm(&patch, GlcmOffset::new(delta, theta).unwrap()).unwrap();
                let want = naive_glcm(&data, 64, levels, delta, theta.degrees());
                checked += 1;
                if g.counts() != want.as_slice() {
                    mismatches += 1;
                }
            }
        }
    }
    check(
        mismatches == 0 && checked == 800,
        format!("{checked} patch/offset pairs, {mismatches} mismatches"),
    )
}

fn glcm_bounds() -> Outcome {
    let settings = GlcmSettings::default();
    let constant = pixel::GrayImage::from_fn(256, 192, |_, _| 77).unwrap();
    let zero = glcm::glcm_score(&constant, &settings).unwrap();
    let mut r = rng(5);
    let mut in_range = true;
    for i in 0..20 {
        let img = match i % 3 {
            0 => pixel::to_gray(&synth::noise(128 + 16 * i, 128, i as u64)),
            1 => pixel::to_gray(&synth::photo(160, 128 + 8 * i, i as u64)),
            _ => pixel::GrayImage::from_fn(128, 128, |_, _| r.random_range(0..2) * 255).unwrap(),
        };
        let s = glcm::glcm_score(&img, &settings).unwrap();
        in_range &= (0.0..=1.0).contains(&s);
    }
    let board: Vec<u8> = (0..64 * 64)
        .map(|k| if (k / 64 + k % 64) % 2 == 0 { 0 } else { 63 })
        .collect();
    let patch = GrayPatch::new(64, 64, board).unwrap();
    let h = glcm::glcm_entropy(&glcm::glcm(&patch, GlcmOffset::new(1, Orientation::Deg0).unwrap()).unwrap()).unwrap();
    let board_err = (h - 1.0 / 12.0).abs();
    check(
        zero == 0.0 && in_range && board_err <= 1e-9,
        format!(
            "constant image {zero}, 20 scores within [0,1]: {in_range}, checkerboard entropy error {board_err:.1e}"
        ),
    )
}

fn psnr(a: &RgbImage, b: &[u8]) -> f64 {
    let mse = a
        .data()
        .iter()
        .zip(b)
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
        .sum::<f64>()
        / a.data().len() as f64;
    10.0 * (255.0f64 * 255.0 / mse).log10()
}

fn jpeg_validity() -> Outcome {
    let mut fixtures: Vec<(String, RgbImage)> = (0..5)
        .map(|i| {
            (
                format!("photo{i}"),
                synth::photo(200 + 37 * i, 160 + 23 * i, 40 + i as u64),
            )
        })
        .collect();
    let n_photos = fixtures.len();
    fixtures.push(("noise".into(), synth::noise(97, 61, 9)));
    fixtures.push(("flat".into(), RgbImage::filled(512, 512, [12, 200, 99]).unwrap()));
    fixtures.push((
        "checker".into(),
        synth::gray_to_rgb(&synth::checkerboard(64, 40, 3, 10, 240)),
    ));
    fixtures.push(("tiny".into(), RgbImage::filled(1, 1, [255, 0, 0]).unwrap()));

    let mut decode_errors = Vec::new();
    let mut min_psnr = f64::INFINITY;
    let mut monotone = true;
    for (i, (name, img)) in fixtures.iter().enumerate() {
        let mut sizes = Vec::new();
        for q in [95, 75, 50] {
            for sub in [jpeg::Subsampling::S444, jpeg::Subsampling::S420] {
                let bytes = jpeg::encode(
                    img,
                    &JpegSettings {
                        quality: q,
                        subsampling: sub,
                    },
                )
                .unwrap();
                let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Jpeg);
                match decoded {
                    Ok(d) => {
                        let d = d.into_rgb8();
                        if d.dimensions() != (img.width() as u32, img.height() as u32) {
                            decode_errors.push(format!("{name} q{q} {sub}: wrong size"));
                        } else if q == 95 && sub == jpeg::Subsampling::S444 && i < n_photos {
                            min_psnr = min_psnr.min(psnr(img, d.as_raw()));
                        }
                    }
                    Err(e) => decode_errors.push(format!("{name} q{q} {sub}: {e}")),
                }
                if sub == jpeg::Subsampling::S444 {
                    sizes.push(bytes.len());
                }
            }
        }
        monotone &= sizes.windows(2).all(|w| w[0] >= w[1]);
    }
    check(
        decode_errors.is_empty() && min_psnr >= 40.0 && monotone,
        format!(
            "{} streams decoded by the image crate, {} errors; min Q95 PSNR on {n_photos} photos {min_psnr:.2} dB (>= 40); size monotone over Q95/75/50: {monotone}",
            fixtures.len() * 6,
            decode_errors.len()
        ),
    )
}

fn directionality() -> Outcome {
    let settings = ReportSettings::default();
    let mut agree = 0;
    for seed in 0..10 {
        let sharp = synth::photo(256, 256, 1000 + seed);
        let blurred = synth::gaussian_blur(&sharp, 2.0);
        let a = report::score_image(&sharp, "sharp", &settings).unwrap();
        let b = report::score_image(&blurred, "blurred", &settings).unwrap();
        if a.glcm_score > b.glcm_score && a.compression_ratio < b.compression_ratio {
            agree += 1;
        }
    }
    check(
        agree >= 9,
        format!("{agree}/10 sharp/blurred pairs ordered as expected (>= 9)"),
    )
}

fn naive_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn correlation() -> Outcome {
    let up: Vec<f64> = (0..20).map(f64::from).collect();
    let sq: Vec<f64> = up.iter().map(|v| v * v * v).collect();
    let down: Vec<f64> = up.iter().map(|v| -v).collect();
    let perfect = stats::srcc(&RatingSeries::new(up.clone(), sq).unwrap()).unwrap();
    let reversed = stats::srcc(&RatingSeries::new(up.clone(), down.clone()).unwrap()).unwrap();
    let lin = stats::plcc(&RatingSeries::new(up.clone(), up.iter().map(|v| 3.0 * v + 1.0).collect()).unwrap()).unwrap();
    let lin_rev = stats::plcc(&RatingSeries::new(up.clone(), down).unwrap()).unwrap();
    let exact = perfect == 1.0 && reversed == -1.0 && (lin - 1.0).abs() <= 1e-15 && lin_rev == -1.0;

    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(3..60);
        let metric: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..8)) * 0.5).collect();
        let rating: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(1..=10))).collect();
        let s = match RatingSeries::new(metric.clone(), rating.clone()) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let (Ok(sr), Ok(pl)) = (stats::srcc(&s), stats::plcc(&s)) else {
            continue;
        };
        worst = worst.max((sr - naive_pearson(&naive_ranks(&metric), &naive_ranks(&rating))).abs());
        worst = worst.max((pl - naive_pearson(&metric, &rating)).abs());
    }
    check(
        exact && worst <= 1e-12,
        format!("perfect/reversed SRCC {perfect}/{reversed}, PLCC {lin}/{lin_rev}; worst deviation on 100 tied series {worst:.1e} (<= 1e-12)"),
    )
}

fn random_spd(r: &mut ChaCha8Rng, d: usize) -> GaussianMoments {
    let a: Vec<f64> = (0..d * d).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            cov[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
        }
    }
    let mean = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
    GaussianMoments::new(mean, cov).unwrap()
}

fn fid() -> Outcome {
    let mut r = rng(7);
    let m = random_spd(&mut r, 16);
    let same = stats::fid_from_moments(&m, &m).unwrap();
    let one_d = stats::fid_from_moments(
        &GaussianMoments::new(vec![0.0], vec![2.5]).unwrap(),
        &GaussianMoments::new(vec![1.0], vec![2.5]).unwrap(),
    )
    .unwrap();
    let mut asym = 0.0f64;
    for _ in 0..20 {
        let d = r.random_range(1..12);
        let (a, b) = (random_spd(&mut r, d), random_spd(&mut r, d));
        asym = asym.max((stats::fid_from_moments(&a, &b).unwrap() - stats::fid_from_moments(&b, &a).unwrap()).abs());
    }
    check(
        same.abs() <= 1e-8 && (one_d - 1.0).abs() <= 1e-8 && asym <= 1e-8,
        format!("identical {same:.1e}, 1-D case {one_d:.12}, worst asymmetry over 20 SPD pairs {asym:.1e}"),
    )
}

fn vae_combinator() -> Outcome {
    let mut r = rng(8);
    let defaults = VaeLossWeights::default();
    let paper_defaults = defaults.lambda_lpips == 0.1 && defaults.lambda_adv == 0.05 && defaults.lambda_sc == 1.0;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let w = if i % 2 == 0 {
            defaults
        } else {
            VaeLossWeights {
                lambda_sc: r.random_range(0.0..2.0),
                lambda_kl: r.random_range(0.0..1e-3),
                lambda_lpips: r.random_range(0.0..1.0),
                lambda_adv: r.random_range(0.0..1.0),
            }
        };
        let kl = if i % 3 == 0 {
            None
        } else {
            Some(r.random_range(0.0..100.0))
        };
        let parts = VaeLossParts {
            rec: r.random_range(0.0..5.0),
            sc: r.random_range(0.0..5.0),
            kl,
            lpips: r.random_range(0.0..2.0),
            adv_gen: r.random_range(-3.0..3.0),
        };
        let adaptive = vae::adaptive_weight(r.random_range(0.0..4.0), r.random_range(0.0..4.0));
        let coeffs = [1.0, w.lambda_sc, w.lambda_kl, w.lambda_lpips, w.lambda_adv * adaptive];
        let terms = [parts.rec, parts.sc, kl.unwrap_or(0.0), parts.lpips, parts.adv_gen];
        let oracle: f64 = coeffs.iter().zip(&terms).map(|(c, t)| c * t).sum();
        let got = vae::vae_total_loss(&parts, &w, adaptive).unwrap();
        worst = worst.max((got - oracle).abs());
    }
    check(
        paper_defaults && worst <= 1e-12,
        format!(
            "defaults (lpips, adv, sc) = ({}, {}, {}); worst deviation over 100 draws {worst:.1e}",
            defaults.lambda_lpips, defaults.lambda_adv, defaults.lambda_sc
        ),
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uhreval"))
}

fn curation_fixture() -> Outcome {
    let mut r = rng(9);
    let mut records = Vec::new();
    for i in 0..2781 {
        let (short, long) = if i < 195 {
            (r.random_range(4097..6000), r.random_range(6000..9000))
        } else if i < 260 {
            (4096, r.random_range(4096..9000))
        } else {
            (r.random_range(512..4096), r.random_range(4096..9000))
        };
        let (w, h) = if r.random_bool(0.5) {
            (short, long)
        } else {
            (long, short)
        };
        records.push(ManifestRecord::new(format!("eval/{i:05}.jpg"), w, h));
    }
    for i in (1..records.len()).rev() {
        records.swap(i, r.random_range(0..=i));
    }
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("eval.jsonl");
    let out = dir.path().join("eval_4096.jsonl");
    curation::write_manifest_file(&manifest, &records).unwrap();
    let status = bin()
        .args(["curate", "filter", "--manifest"])
        .arg(&manifest)
        .args(["--min-short-side", "4096", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    let kept = curation::read_manifest(&out).unwrap();
    let all_large = kept.iter().all(|r| r.short_side() > 4096);
    let proportion = curation::proportion_above(&records, 4096, ShortSideRule::Exceeds).unwrap();
    check(
        status.success() && records.len() == 2781 && kept.len() == 195 && all_large && proportion == 195.0 / 2781.0,
        format!(
            "curate filter kept {} of {} (65 records at exactly 4096 excluded); proportion_above {proportion} == 195/2781",
            kept.len(),
            records.len()
        ),
    )
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn performance() -> Vec<(String, Outcome)> {
    let img = pixel::to_gray(&synth::noise(4096, 4096, 10));
    let settings = GlcmSettings::default();
    let timed = |threads| {
        in_pool(threads, || {
            let start = Instant::now();
            let s = glcm::glcm_score_detailed(&img, &settings).unwrap();
            (s, start.elapsed().as_secs_f64())
        })
    };
    let (s1, t1) = timed(1);
    let (s8, t8) = timed(8);
    let hw = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let speedup = t1 / t8;

    let photo = synth::photo(1024, 768, 11);
    let rs = ReportSettings::default();
    let json = |threads| {
        in_pool(threads, || {
            let e = report::score_image(&photo, "photo.png", &rs).unwrap();
            MetricReport::new(rs.clone(), vec![e]).unwrap().to_json()
        })
    };
    let identical = s1.score.to_bits() == s8.score.to_bits() && json(1) == json(8) && json(3) == json(1);

    let speed = if hw >= 8 {
        check(
            speedup >= 3.0,
            format!("{speedup:.2}x speedup on {hw} hardware threads (>= 3x)"),
        )
    } else {
        Blocked(format!(
            "host exposes {hw} hardware thread(s); measured {speedup:.2}x with 8 workers, the >= 3x bound needs 8 cores"
        ))
    };
    vec![
        (
            "Performance: 4096x4096 GLCM score time".into(),
            check(
                t8 <= 10.0 && s8.patch_count == 4096,
                format!(
                    "{} patches x 16 GLCMs in {t8:.2} s with 8 workers, {t1:.2} s with 1 (<= 10 s)",
                    s8.patch_count
                ),
            ),
        ),
        ("Performance: parallel speedup".into(), speed),
        (
            "Performance: output identical across thread counts".into(),
            check(
                identical,
                format!("score bits and report bytes equal for 1, 3 and 8 workers: {identical}"),
            ),
        ),
    ]
}

fn cli_golden() -> Outcome {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let out = bin()
        .args(["score", "--input"])
        .arg(fixtures.join("images"))
        .output()
        .unwrap();
    let golden = std::fs::read(fixtures.join("golden_report.json")).unwrap();
    check(
        out.status.success() && out.stdout == golden,
        format!(
            "score on the fixture directory: {} bytes, byte-identical: {}",
            out.stdout.len(),
            out.stdout == golden
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    // Individual criteria may panic on internal errors; report them as FAIL.
    panic::set_hook(Box::new(|_| {}));
    let criteria: Vec<Criterion> = vec![
        ("DWT/IDWT perfect reconstruction", dwt_reconstruction),
        ("Parseval identity", parseval),
        ("WLF and RF equivalence", wlf_equals_rf),
        ("Loss gradient checks", gradients),
        ("GLCM oracle equivalence", glcm_oracle),
        ("GLCM score bounds and degenerate cases", glcm_bounds),
        ("JPEG validity", jpeg_validity),
        ("Metric directionality", directionality),
        ("SRCC/PLCC", correlation),
        ("FID from moments", fid),
        ("VAE loss combinators", vae_combinator),
        ("Curation fixture", curation_fixture),
    ];
    let mut results: Vec<(String, Outcome)> = Vec::new();
    for (name, f) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        results.push((name.into(), outcome));
    }
    match panic::catch_unwind(performance) {
        Ok(rows) => results.extend(rows),
        Err(_) => results.push(("Performance".into(), Fail("panicked".into()))),
    }
    results.push((
        "CLI golden test".into(),
        panic::catch_unwind(cli_golden).unwrap_or_else(|_| Fail("panicked".into())),
    ));

    let mut failed = 0;
    for (name, outcome) in &results {
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Blocked(d) => ("BLOCKED", d),
        };
        println!("[{tag}] {name}: {detail}");
    }
    println!("{} criteria, {failed} failed", results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
