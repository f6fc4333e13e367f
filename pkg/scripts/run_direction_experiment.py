"""Run the direction-of-effect experiment and print a verdict table.

    python3 scripts/run_direction_experiment.py [--seeds 5] [--epochs N]
"""
import argparse

from fairbads.experiment import DIRECTION_CONFIG, DP_FACTORS, direction_of_effect, verdicts


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--epochs", type=int, default=DIRECTION_CONFIG.epochs)
    args = p.parse_args()

    base = DIRECTION_CONFIG.replace(epochs=args.epochs)
    results = direction_of_effect(seeds=range(args.seeds), base=base)
    print(f"{'variant':9s} {'acc':>7s} {'dp':>7s} {'eo':>7s} {'wd0':>7s} {'wdT':>7s} {'sec':>5s}")
    for name, r in results.items():
        wd0 = sum(r.wd_initial) / len(r.wd_initial)
        wdT = sum(r.wd_final) / len(r.wd_final)
        eo = sum(r.eo) / len(r.eo)
        print(f"{name:9s} {r.mean_acc:7.4f} {r.mean_dp:7.4f} {eo:7.4f} {wd0:7.3f} {wdT:7.3f} {r.seconds:5.0f}")
    print()
    for div, v in verdicts(results).items():
        print(f"{div:5s} dp ratio {v['dp_ratio']:.3f} (<= {DP_FACTORS[div]}: {v['dp_ok']})  "
              f"acc diff {v['acc_gap']:+.4f} (ok: {v['acc_ok']})  weights aligned: {v['wd_ok']}")


if __name__ == "__main__":
    main()
