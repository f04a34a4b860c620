//! Temporary calibration sweeps for the acceptance operating points.

use beamsel_core::experiments::{
    change_windows, estimate_errors_paired, CaseStudyConfig, EnvTemplate, RampChange,
};
use beamsel_core::policies::Policy;
use beamsel_core::rng::StreamFactory;
use beamsel_core::SlotLaw;

fn fig4(top: f64, step: f64, post: f64, noise: f64, trials: u64) {
    let n = 64usize;
    let t = 1024u64;
    let k = 13usize; // ceil(0.2 * 64)
    let template = EnvTemplate::RankedRamp {
        n_beams: n,
        top,
        step,
        noise_scale: noise,
        change: Some(RampChange {
            rank_lo: 2,
            rank_hi: k,
            post_mean: post,
            slot_law: SlotLaw::Uniform { lo: 0, hi: t },
        }),
    };
    let policies = [
        Policy::kshes(k),
        Policy::Sh,
        Policy::Exhaustive,
    ];
    let f = StreamFactory::new(20250810);
    let p = estimate_errors_paired(&policies, &template, t, trials, &f, 0).unwrap();
    let g01 = p.gap(0, 1);
    let g12 = p.gap(1, 2);
    println!(
        "fig4 top={top} step={step} post={post} noise={noise}: kshes={:.4} sh={:.4} ex={:.4} | gap ks-sh {:.4}±{:.4} ({:.1}se) gap sh-ex {:.4}±{:.4} ({:.1}se)",
        p.estimates[0].rate, p.estimates[1].rate, p.estimates[2].rate,
        g01.mean, g01.se, -g01.mean / g01.se.max(1e-12),
        g12.mean, g12.se, -g12.mean / g12.se.max(1e-12),
    );
}

fn fig5(top: f64, step: f64, post: f64, noise: f64, trials: u64) {
    let n = 64usize;
    let t = 4096u64;
    let k = 13usize;
    let (early, late) = change_windows(n, t, k);
    let f = StreamFactory::new(99);
    for (name, law) in [("early", early), ("late", late)] {
        let template = EnvTemplate::RankedRamp {
            n_beams: n,
            top,
            step,
            noise_scale: noise,
            change: Some(RampChange {
                rank_lo: 2,
                rank_hi: k,
                post_mean: post,
                slot_law: law,
            }),
        };
        let policies = [
            Policy::Sh,
            Policy::kshes(k),
        ];
        let p = estimate_errors_paired(&policies, &template, t, trials, &f, 1).unwrap();
        let g = p.gap(0, 1);
        println!(
            "fig5 {name} top={top} step={step} post={post} noise={noise}: sh={:.4} kshes={:.4} gap sh-ks {:.4}±{:.4} ({:.1}se)",
            p.estimates[0].rate, p.estimates[1].rate, g.mean, g.se, g.mean / g.se.max(1e-12)
        );
    }
}

fn casestudy(interim: f64, blocked: f64, trials: u64) {
    let cfg = CaseStudyConfig {
        interim_frac: interim,
        blocked_frac: blocked,
        ..CaseStudyConfig::default()
    };
    let f = StreamFactory::new(7);
    let table = beamsel_core::experiments::optimize_case_study(
        &cfg,
        &[16, 32, 64, 128, 256],
        &[0.01, 0.02, 0.05, 0.10],
        trials,
        &f,
    )
    .unwrap();
    println!("casestudy interim={interim} blocked={blocked}:");
    for p in &table.points {
        println!(
            "  N={:3} f={:.2} T={:5} err={:.4} rate={:.3e}",
            p.n_beams, p.fraction, p.t_budget, p.error, p.rate_bps
        );
    }
    println!("  best N per fraction: {:?}", table.best_n_per_fraction);
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("fig4");
    let trials: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    match which {
        "fig4" => {
            for &(top, step, post, noise) in &[
                (1.0, 0.01, 1.2, 0.05),
                (1.0, 0.01, 1.3, 0.05),
                (1.0, 0.01, 1.2, 0.1),
                (1.0, 0.005, 1.2, 0.05),
                (1.0, 0.01, 1.5, 0.1),
                (1.0, 0.015, 1.3, 0.08),
            ] {
                fig4(top, step, post, noise, trials);
            }
        }
        "fig5" => {
            for &post in &[1.25, 1.3, 1.35, 1.4] {
                for &noise in &[0.25, 0.3, 0.35, 0.4] {
                    fig5(1.0, 0.01, post, noise, trials);
                }
            }
        }
        "case" => {
            for &(a, b) in &[(0.3, 0.05), (0.35, 0.05), (0.25, 0.05)] {
                casestudy(a, b, trials);
            }
        }
        other => eprintln!("unknown mode {other}"),
    }
}
