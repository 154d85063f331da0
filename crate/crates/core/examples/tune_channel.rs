//! Runs the channel experiments and prints fit details, for calibrating the
//! slip/jump initialisation constants and checking the coefficient ratios.

use dvkin::chapman::{couette_experiment, fourier_experiment, ChannelSpec};
use dvkin::transport::ModelKind;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");
    let kn = 0.005;

    let run_couette = |model| {
        let spec = ChannelSpec::desk(model, kn);
        match couette_experiment(&spec) {
            Ok(o) => println!(
                "couette {:?}: mu_eff={:.6e} pred={:.6e} ratio={:.4} dudx={:.5} steps={} t={:.2} wall={:.0}s",
                model, o.fit.coefficient, o.predicted, o.ratio, o.fit.gradient, o.steps, o.time, o.wall_seconds
            ),
            Err(e) => println!("couette {model:?}: FAILED: {e}"),
        }
    };
    let run_fourier = |model| {
        let spec = ChannelSpec::desk(model, kn);
        match fourier_experiment(&spec) {
            Ok(o) => println!(
                "fourier {:?}: k_eff={:.6e} pred={:.6e} ratio={:.4} dTdx={:.5} steps={} t={:.2} wall={:.0}s",
                model, o.fit.coefficient, o.predicted, o.ratio, o.fit.gradient, o.steps, o.time, o.wall_seconds
            ),
            Err(e) => println!("fourier {model:?}: FAILED: {e}"),
        }
    };

    match which {
        "cb" => run_couette(ModelKind::Bgk),
        "cf" => run_couette(ModelKind::Fp),
        "fb" => run_fourier(ModelKind::Bgk),
        "ff" => run_fourier(ModelKind::Fp),
        _ => {
            run_couette(ModelKind::Bgk);
            run_couette(ModelKind::Fp);
            run_fourier(ModelKind::Bgk);
            run_fourier(ModelKind::Fp);
        }
    }
}
