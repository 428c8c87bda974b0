"""Command-line interface emitting plot-ready tables.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import entangle, harness, magic, models, propagate, qstate, theory

STATE_CHOICES = list(qstate.STATE_FAMILIES) + ["hamming"]


def _add_common_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--W", type=float, default=1.0)
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--xi", type=float, default=0.5)
    p.add_argument("--max-order", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mblmagic",
        description="Magic dynamics in disordered spin chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="disorder-ensemble simulation")
    run.add_argument("--config", help="JSON file mirroring RunConfig; flags override")
    run.add_argument("--model", choices=["tfim", "lbit"])
    run.add_argument("--L", type=int)
    run.add_argument("--W", type=float)
    run.add_argument("--g", type=float)
    run.add_argument("--xi", type=float)
    run.add_argument("--max-order", type=int, dest="max_order")
    run.add_argument("--state", choices=STATE_CHOICES, dest="state_family")
    run.add_argument("--alpha", type=float)
    run.add_argument("--mid-spectrum", dest="mid_spectrum", action="store_true", default=None)
    run.add_argument("--no-mid-spectrum", dest="mid_spectrum", action="store_false")
    run.add_argument("--candidates", type=int, dest="n_candidates")
    run.add_argument("--tmin", type=float, dest="t_min")
    run.add_argument("--tmax", type=float, dest="t_max")
    run.add_argument("--per-decade", type=int, dest="per_decade")
    run.add_argument("--observables", help="comma list from m2,s,wz")
    run.add_argument("--sre", choices=["exact", "product", "sampled"], dest="sre_method")
    run.add_argument("--samples", type=int, dest="sre_samples")
    run.add_argument("--realizations", type=int, dest="n_realizations")
    run.add_argument("--seed", type=int, dest="base_seed")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", required=True)

    oracle = sub.add_parser("anderson-oracle", help="Anderson SRE quadrature table")
    oracle.add_argument("--L", type=int, required=True)
    oracle.add_argument("--W", type=float, required=True)
    oracle.add_argument("--tmin", type=float, default=0.1)
    oracle.add_argument("--tmax", type=float, default=100.0)
    oracle.add_argument("--per-decade", type=int, default=10)
    oracle.add_argument("--theta", type=float, default=np.pi / 2)
    oracle.add_argument("--phi", type=float, default=0.0)
    oracle.add_argument("--out", required=True)

    fit = sub.add_parser("fit", help="power-law saturation fit of M2(t)")
    fit.add_argument("--in", dest="infile", required=True)
    fit.add_argument("--window", default="10:inf", help="t_lo:t_hi")
    fit.add_argument("--out", help="append the fit row to this CSV")

    fitd = sub.add_parser("fit-decay", help="power-law decay fit of W_Z(t)")
    fitd.add_argument("--in", dest="infile", required=True)
    fitd.add_argument("--window", default="10:inf")
    fitd.add_argument("--out")

    col = sub.add_parser("collapse", help="M2(S) collapse factor between records")
    col.add_argument("--ref", required=True)
    col.add_argument("--target", required=True)
    col.add_argument("--out")

    cro = sub.add_parser("crossover", help="Haar-deviation scan over (L, W) records")
    cro.add_argument("--in", dest="infiles", nargs="+", required=True)
    cro.add_argument("--t-eval", type=float, required=True)
    cro.add_argument("--out", required=True)

    haar = sub.add_parser("haar", help="Haar-random SRE-2 baseline")
    haar.add_argument("--L", type=int, required=True)

    sre = sub.add_parser("sre-exact", help="exact SRE-2 of a named product state")
    _add_common_model_flags(sre)
    sre.add_argument("--state", choices=STATE_CHOICES, required=True)
    sre.add_argument("--alpha", type=float, default=1.0)

    srs = sub.add_parser("sre-sample", help="Monte-Carlo SRE-2 of a named state")
    _add_common_model_flags(srs)
    srs.add_argument("--state", choices=STATE_CHOICES, required=True)
    srs.add_argument("--alpha", type=float, default=1.0)
    srs.add_argument("--samples", type=int, default=15000)

    sub.add_parser("validate", help="run the package invariant suite")
    return parser


def _parse_window(text: str) -> tuple[float, float]:
    lo, hi = text.split(":")
    return float(lo), float("inf") if hi in ("inf", "") else float(hi)


def _make_state(args) -> qstate.StateVector:
    rng = np.random.default_rng(args.seed)
    if args.state == "hamming":
        center = int(rng.integers(0, 1 << args.L))
        return qstate.make_hamming_state(args.L, args.alpha, center)
    return qstate.make_named_state(args.state, args.L, rng)


def _cmd_run(args) -> int:
    fields = {}
    if args.config:
        with open(args.config) as fh:
            fields.update(json.load(fh))
    for key in (
        "model L W g xi max_order state_family alpha mid_spectrum n_candidates "
        "t_min t_max per_decade sre_method sre_samples n_realizations base_seed"
    ).split():
        val = getattr(args, key, None)
        if val is not None:
            fields[key] = val
    if args.observables:
        fields["observables"] = tuple(args.observables.split(","))
    elif "observables" in fields:
        fields["observables"] = tuple(fields["observables"])
    config = harness.RunConfig(**fields)
    record = harness.run_ensemble(config, n_workers=args.workers)
    harness.save_record(record, args.out)
    print(f"wrote {args.out}: {record.n_ok}/{record.n_realizations} realizations, "
          f"{record.wall_time:.1f}s")
    if record.failures:
        print(f"{len(record.failures)} realizations failed", file=sys.stderr)
    return 0


def _cmd_anderson_oracle(args) -> int:
    grid = propagate.make_time_grid(args.tmin, args.tmax, args.per_decade)
    angles = qstate.BlochAngles(
        np.full(args.L, args.theta), np.full(args.L, args.phi)
    )
    with open(args.out, "w") as fh:
        fh.write("t,M2\n")
        for t in grid.times:
            fh.write(
                f"{float(t)!r},{theory.anderson_sre(angles, args.W, float(t))!r}\n"
            )
    print(f"wrote {args.out}")
    return 0


def _cmd_fit(args) -> int:
    record = harness.load_record(args.infile)
    if record.m2_mean is None:
        raise ValueError("record has no M2 data")
    fit = theory.fit_power_law_saturation(
        record.times, record.m2_mean, _parse_window(args.window)
    )
    row = (
        f"{args.infile},{fit.m_sat!r},{fit.c!r},{fit.beta!r},{fit.beta_stderr!r},"
        f"{fit.window[0]!r},{fit.window[1]!r},{fit.residual_rms!r}"
    )
    print("file,M_sat,c,beta,beta_stderr,t_lo,t_hi,residual_rms")
    print(row)
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(row + "\n")
    return 0


def _cmd_fit_decay(args) -> int:
    record = harness.load_record(args.infile)
    if record.wz_mean is None:
        raise ValueError("record has no W_Z data")
    lo, hi = _parse_window(args.window)
    sel = (record.times >= lo) & (record.times <= hi)
    fit = theory.fit_power_law_decay(record.times[sel], record.wz_mean[sel])
    row = f"{args.infile},{fit.amplitude!r},{fit.lam!r},{fit.lam_stderr!r}"
    print("file,amplitude,lambda,lambda_stderr")
    print(row)
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(row + "\n")
    return 0


def _curve(record) -> tuple[np.ndarray, np.ndarray]:
    if record.s_mean is None or record.m2_mean is None:
        raise ValueError("collapse needs records with both M2 and S")
    return record.s_mean, record.m2_mean


def _cmd_collapse(args) -> int:
    ref = harness.load_record(args.ref)
    tgt = harness.load_record(args.target)
    result = theory.collapse_factor(_curve(ref), _curve(tgt))
    row = f"{args.ref},{args.target},{result.f!r},{result.rms_deviation!r}"
    print("reference,target,f,rms_deviation")
    print(row)
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(row + "\n")
    return 0


def _cmd_crossover(args) -> int:
    records = {}
    for path in args.infiles:
        rec = harness.load_record(path)
        records[(rec.config.L, rec.config.W)] = rec
    table = theory.crossover_scan(records, args.t_eval)
    with open(args.out, "w") as fh:
        fh.write("L,W,delta_M2\n")
        for L, W, d in table.rows:
            fh.write(f"{L},{W!r},{d!r}\n")
        fh.write("# slopes per W: " + json.dumps({repr(k): v for k, v in table.slopes.items()}) + "\n")
    if table.missing:
        print(f"missing cells: {table.missing}", file=sys.stderr)
    print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    """Quick invariant suite (see tests/ for the full battery)."""
    rng = np.random.default_rng(11)
    checks = []

    state = qstate.make_named_state("t-product", 4, rng)
    checks.append(("t-product SRE additivity",
                   abs(magic.sre(state, 2) - 4 * np.log2(4 / 3)) < 1e-9))
    basis = qstate.make_named_state("z-random", 6, rng)
    checks.append(("stabilizer SRE zero", abs(magic.sre(basis, 2)) < 1e-9))
    checks.append(("stabilizer W_Z one", abs(magic.w_z(basis) - 1.0) < 1e-12))
    spec = magic.pauli_spectrum_exact(qstate.make_named_state("bloch-random", 5, rng))
    checks.append(("purity identity",
                   abs(np.sum(spec.values**2) / 2**5 - 1.0) < 1e-9))

    real = models.sample_tfim(models.TfimParams(6, 3.0), seed=5)
    dense = models.tfim_dense(real)
    v = rng.normal(size=64) + 1j * rng.normal(size=64)
    v /= np.linalg.norm(v)
    sv = qstate.StateVector(6, v)
    diff = np.max(np.abs(models.tfim_apply(real, sv).amplitudes - dense @ v))
    checks.append(("TFIM matvec vs dense", diff < 1e-12))

    bounds = models.energy_bounds(real)
    evals = np.linalg.eigvalsh(dense)
    checks.append(("energy bounds enclose spectrum",
                   bounds[0] <= evals[0] and bounds[1] >= evals[-1]))

    evolved = propagate.chebyshev_evolve(
        lambda x: dense @ x, bounds, sv, 7.0
    )
    exact = qstate.StateVector(6, _dense_evolve(dense, v, 7.0))
    overlap = abs(np.vdot(evolved.amplitudes, exact.amplitudes))
    checks.append(("Chebyshev vs dense evolution", overlap > 1 - 1e-9))

    bell = qstate.StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))
    checks.append(("Bell entropy ln 2",
                   abs(entangle.entanglement_entropy(bell, 1) - np.log(2)) < 1e-12))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return 0 if ok else 2


def _dense_evolve(H: np.ndarray, v: np.ndarray, t: float) -> np.ndarray:
    evals, vecs = np.linalg.eigh(H)
    return vecs @ (np.exp(-1j * evals * t) * (vecs.conj().T @ v))


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    handlers = {
        "run": _cmd_run,
        "anderson-oracle": _cmd_anderson_oracle,
        "fit": _cmd_fit,
        "fit-decay": _cmd_fit_decay,
        "collapse": _cmd_collapse,
        "crossover": _cmd_crossover,
        "haar": lambda a: (print(repr(magic.haar_sre2(a.L))), 0)[1],
        "sre-exact": lambda a: (print(repr(magic.sre(_make_state(a), 2))), 0)[1],
        "sre-sample": _cmd_sre_sample,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _cmd_sre_sample(args) -> int:
    state = _make_state(args)
    est = magic.sre2_sampled(state, args.samples, np.random.default_rng(args.seed + 1))
    print(f"estimate={est.estimate!r} stderr={est.stderr!r} n={est.n_samples}"
          + (" (degenerate)" if est.degenerate else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
