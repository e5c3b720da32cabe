"""Scratch: scan generator parameters for the end-to-end experiment."""
import itertools
import numpy as np
import sensorfdi.data as sd
import sensorfdi as sf
from sensorfdi.pipeline import PipelineConfig, run_pipeline


def experiment(noise, strength, leak, kappa, seed=11):
    sd._PERSONAL_STRENGTH = strength
    sd._PERSONAL_LEAKAGE = leak
    cfg = PipelineConfig(
        synthetic_train=sf.SyntheticConfig(n_x=8, n_u=4, m=9600, latent_dim=11, noise_std=noise,
            maneuver_segments=((1600, 2800, kappa), (5600, 6800, kappa)), seed=seed),
        synthetic_validation=sf.SyntheticConfig(n_x=8, n_u=4, m=9600, latent_dim=11, noise_std=noise,
            maneuver_segments=((2800, 4000, kappa), (6800, 7600, kappa)), seed=seed + 1),
        fault_start=1200, fault_stop=8400,
    )
    report = run_pipeline(cfg)
    tir = {"RB": [], "DS": []}
    tdr = []
    fa = {}
    for r in report.results:
        if r.fault is not None:
            tir[r.rule].append(r.tir)
            if r.rule == "RB":
                tdr.append(r.tdr)
        else:
            fa[r.rule] = r.false_alarm_rate
    rb, ds = np.array(tir["RB"]), np.array(tir["DS"])
    wins = int((rb >= ds).sum())
    return dict(tdr=np.mean(tdr), tir_rb=rb.mean(), tir_ds=ds.mean(), wins=wins,
                fa_rb=fa["RB"], fa_ds=fa["DS"], rb=np.round(rb,1), ds=np.round(ds,1))


for noise, strength, leak, kappa in itertools.product(
        (0.02, 0.04), (0.06, 0.12), (0.5, 0.8), (2.0, 3.0)):
    r = experiment(noise, strength, leak, kappa)
    print(f"noise={noise} sp={strength} leak={leak} k={kappa}: "
          f"TDR={r['tdr']:.0f} TIR RB={r['tir_rb']:.1f} DS={r['tir_ds']:.1f} "
          f"wins={r['wins']}/8 FA {r['fa_rb']:.2f}/{r['fa_ds']:.2f}")
    print("   rb:", r["rb"], " ds:", r["ds"])
