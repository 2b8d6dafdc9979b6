//! Run all six rPPG transforms on the same synthetic trace.

use pulsebench::pipeline::{pulse_hr, Protocol};
use pulsebench::rppg::{extract_trace, IcaParams, IcaSelect, Method};
use pulsebench::synth::{generate, SynthSpec};

fn main() -> pulsebench::Result<()> {
    let bpm = 96.0;
    let video = generate(&SynthSpec { pulse_bpm: bpm, seed: 4, ..Default::default() })?;
    let trace = extract_trace(video.frames.frames(), video.frames.fps(), None)?;
    let protocol = Protocol::default();

    let mut methods = Method::all();
    methods.push(Method::Ica(IcaParams { seed: 0, select: IcaSelect::Periodic }));
    for m in methods {
        let pulse = m.apply(&trace)?;
        let est = pulse_hr(&pulse.samples, pulse.fps, &protocol)?;
        let label = match m {
            Method::Ica(p) => format!("ica/{}", p.select.name()),
            _ => m.name().to_string(),
        };
        println!("{label:>13}: {est:7.3} BPM (truth {bpm}){}", pulse.warning.map_or(String::new(), |w| format!("  [{w:?}]")));
    }
    Ok(())
}
