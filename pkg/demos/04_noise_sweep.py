"""Coarse tiers tolerate background noise better than fine ones.

Run: python demos/04_noise_sweep.py
"""
from mpgi.metrics import noise_sweep, sweep_summary
from mpgi.simulate import DSNR_PRESETS, synthetic_scene

scene = synthetic_scene("aircraft", 7)
dsnr = [DSNR_PRESETS["system_invalid"], 15, 20, DSNR_PRESETS["high_res_threshold"], 40]
summary = sweep_summary(noise_sweep(scene, 7, dsnr, range(10)))

tiers = sorted({r["tier"] for r in summary if r["tier"] >= 4})
print("DSNR dB  " + "  ".join(f"{2 ** t:>3d}px" for t in tiers))
for d in dsnr:
    cells = {r["tier"]: r["psnr_mean"] for r in summary if r["dsnr_db"] == d}
    print(f"{d:7.2f}  " + "  ".join(f"{cells[t]:5.1f}" for t in tiers))
