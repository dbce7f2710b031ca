// Desk benchmark for the two training regimes with default
// hyperparameters: auto-decoder with a PSNR stop rule plus a 64^3
// super-resolution check, then a 10-molecule auto-encoder trajectory.

use std::time::Instant;

use molfield::elements::ElementTable;
use molfield::eval::{psnr, superresolve};
use molfield::field::{auto_grid, centered_grid, sample_grid, shared_extent, Channel, ChannelSpec};
use molfield::molecule::{Atom, Molecule};
use molfield::net::NetConfig;
use molfield::train::{reconstruct, StopRule, TrainConfig, Trainer};
use molfield::VolumeGrid;

fn bench_molecule() -> Molecule {
    let mut mol = Molecule::new("bench");
    let atoms = [
        ("C", [1.39, 0.0, 0.0]),
        ("C", [0.695, 1.2037, 0.0]),
        ("C", [-0.695, 1.2037, 0.0]),
        ("C", [-1.39, 0.0, 0.0]),
        ("C", [-0.695, -1.2037, 0.0]),
        ("C", [0.695, -1.2037, 0.0]),
        ("H", [2.47, 0.0, 0.0]),
        ("H", [1.235, 2.139, 0.0]),
        ("H", [-1.235, 2.139, 0.0]),
        ("H", [-2.47, 0.0, 0.0]),
        ("H", [-1.235, -2.139, 0.0]),
        ("O", [1.05, -2.35, 1.2]),
        ("C", [2.3, -2.9, 1.4]),
        ("H", [2.25, -3.6, 2.24]),
        ("H", [2.6, -3.45, 0.5]),
        ("H", [3.05, -2.13, 1.63]),
        ("N", [0.3, -2.0, 2.3]),
        ("H", [0.7, -1.3, 2.93]),
        ("H", [-0.65, -2.3, 2.5]),
    ];
    for (sym, pos) in atoms {
        mol.atoms.push(Atom::new(sym, pos));
    }
    mol
}

fn channels() -> ChannelSpec {
    ChannelSpec::new(
        vec![
            Channel::elements("heavy", ["C", "N", "O"]),
            Channel::elements("h", ["H"]),
        ],
        2.0,
    )
}

fn small_set(table: &ElementTable, spec: &ChannelSpec) -> Vec<(Molecule, VolumeGrid)> {
    // ten deterministic small molecules: chains and bent shapes
    let mut set = Vec::new();
    for m in 0..10u32 {
        let mut mol = Molecule::new(format!("m{m}"));
        let n = 3 + (m % 5) as usize;
        for a in 0..n {
            let t = a as f64;
            let angle = 0.6 * t + m as f64;
            let sym = match (a + m as usize) % 3 {
                0 => "C",
                1 => "O",
                _ => "H",
            };
            mol.atoms.push(Atom::new(
                sym,
                [
                    1.4 * t * angle.cos(),
                    1.4 * t * angle.sin(),
                    0.35 * t * ((m as f64) * 0.7).sin(),
                ],
            ));
        }
        set.push(mol);
    }
    let extent = shared_extent(
        &set.iter().cloned().collect::<Vec<_>>(),
        2.0,
    )
    .unwrap();
    set.into_iter()
        .map(|mol| {
            let grid = centered_grid(&mol, [32, 32, 32], extent).unwrap();
            let vol = sample_grid(&mol, spec, table, &grid, None).unwrap();
            (mol, vol)
        })
        .collect()
}

fn main() {
    let table = ElementTable::default();
    let spec = channels();

    // --- auto-decoder with stop rule + super-resolution check
    let mol = bench_molecule();
    let grid = auto_grid(&mol, [32, 32, 32], 2.0).unwrap();
    let volume = sample_grid(&mol, &spec, &table, &grid, None).unwrap();
    let config = TrainConfig {
        stop: Some(StopRule {
            target_psnr: 33.0,
            check_every: 250,
        }),
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let mut trainer = Trainer::<f64>::new_auto_decoder(
        std::slice::from_ref(&volume),
        config,
        NetConfig::with_out_dim(2),
    )
    .unwrap();
    trainer.run().unwrap();
    let train_secs = start.elapsed().as_secs_f64();
    let latent = trainer.latent_for(0).unwrap();
    let recon = reconstruct(&trainer.net, &latent, &volume.spec).unwrap();
    let train_psnr = psnr(&volume, &recon).unwrap().overall_psnr;
    println!(
        "auto-decoder: stopped at step {} in {:.0} s, train-res PSNR {:.2} dB",
        trainer.step, train_secs, train_psnr
    );

    let sr_start = Instant::now();
    let sr = superresolve(&trainer.net, &latent, &volume.spec, 2).unwrap();
    let gt64 = sample_grid(&mol, &spec, &table, &volume.spec.refine(2), None).unwrap();
    let sr_psnr = psnr(&gt64, &sr).unwrap().overall_psnr;
    println!(
        "super-resolution 64^3: PSNR {:.2} dB ({:.1} s)",
        sr_psnr,
        sr_start.elapsed().as_secs_f64()
    );

    // --- auto-encoder trajectory on ten small molecules
    let set = small_set(&table, &spec);
    let volumes: Vec<VolumeGrid> = set.iter().map(|(_, v)| v.clone()).collect();
    let config = TrainConfig {
        steps: 8000,
        stop: Some(StopRule {
            target_psnr: f64::INFINITY,
            check_every: u64::MAX,
        }),
        ..TrainConfig::default()
    };
    let enc_cfg = {
        let mut cfg = molfield::net::EncoderConfig::with_input(2, 128);
        cfg.input_dims = [32, 32, 32];
        cfg
    };
    let mut trainer =
        Trainer::<f64>::new_auto_encoder(&volumes, config, NetConfig::with_out_dim(2), enc_cfg)
            .unwrap();
    let start = Instant::now();
    let mut last = Instant::now();
    for block in 0u64..16 {
        trainer.config.steps = (block + 1) * 500;
        trainer.run().unwrap();
        let mean = trainer.mean_psnr().unwrap();
        println!(
            "auto-encoder step {:5}: mean PSNR {:6.2} dB  ({:5.1} ms/step, total {:.0} s)",
            trainer.step,
            mean,
            last.elapsed().as_secs_f64() * 1000.0 / 500.0,
            start.elapsed().as_secs_f64()
        );
        last = Instant::now();
    }
}
