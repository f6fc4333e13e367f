"""Write a synthetic two-group logistic dataset as CSV (columns f0..f{d-1}, y, s, y_clean).

    python3 scripts/make_synthetic_csv.py out.csv [--n 2000] [--d 5] [--minority 0.3] [--seed 0]
"""
import argparse

from fairbads.data import make_synthetic, write_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--minority", type=float, default=0.3)
    p.add_argument("--shift", type=float, default=0.0, help="offset of the first minority feature")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    ds = make_synthetic(args.n, args.d, args.minority, args.seed, args.shift)
    write_dataset(ds, args.out)
    print(f"wrote {args.out}: {len(ds)} rows, group sizes {ds.group_sizes}")


if __name__ == "__main__":
    main()
