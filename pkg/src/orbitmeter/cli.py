"""Command-line entry point wiring every pipeline together.

Subcommands: ``wild-orbit`` (construct + certify an oscillating
prefix), ``trace`` (frequency/time-average traces to CSV), ``eta``
(cover values, packing bound, total mass, convergence verdict),
``bowen`` (sojourn itinerary vs closed forms), ``decompose``
(mixture reconstruction), ``physical`` (physicality verdicts),
``cesaro`` (higher-order mean oscillation), ``nonnormal`` (digit-block
statistics and codings of a wild prefix).

Every run writes ``manifest.json`` into the output directory: the
config echo, the seed, the PRNG identifier, and a SHA-256 hash per
artifact.  Re-running with ``--verify`` replays the run into a scratch
directory and compares hashes against the manifest and the files on
disk, so both nondeterminism and tampering surface as a nonzero exit.

Exit codes: 0 success, 1 input error, 2 assertion-style verdict
failure (including verification mismatches).  Flags may also come from
the environment as ``ORBITMETER_SEED``, ``ORBITMETER_OUT``,
``ORBITMETER_EMIT``.  CSV floats carry 17 significant digits; JSON
floats round-trip exactly; rationals serialize as ``"p/q"`` strings.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bowen import (
    DerivedModuli,
    SaddleParams,
    boundary_average_trace,
    closed_form_extremes,
    empirical_extremes,
    eta_atoms,
    generate_itinerary,
    moduli,
    two_atom_report,
)
from .cesaro import MeanSpec, mean_oscillation, mean_values
from .errors import InputError, OrbitmeterError
from .eta import (
    build_premeasure_table,
    eta_packing_lower_bound,
    eventually_periodic_orbit,
    nu_g,
    probability_verdict,
    total_mass_partition,
)
from .frequency import (
    FrequencyTrace,
    digit_block_frequency,
    frequency_trace,
    geometric_horizons,
    read_trace_csv,
    running_extremes,
    write_trace_csv,
)
from .markov import (
    PRNG_NAME,
    MarkovMeasure,
    MixtureSpec,
    decomposition_check,
    physicality_check,
    sample_orbit,
    two_class_mixture,
)
from .orbit import (
    LengthSchedule,
    build_wild_prefix,
    load_wild_prefix,
    save_wild_prefix,
    verify_checkpoint_bounds,
)
from .symbolic import TMC, CylinderSpec, PeriodicWord, encode_base_b, gauss_value


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise SystemExit(self._fail(message))

    @staticmethod
    def _fail(message) -> int:
        print(f"error: {message}", file=sys.stderr)
        return 1


def _jsonify(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    return obj


def _write_json(path: Path, data) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonify(data), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_tmc(spec) -> TMC:
    if isinstance(spec, dict) and "incidence" in spec:
        return TMC.from_json_dict(spec)
    if isinstance(spec, dict) and "full_shift" in spec:
        return TMC.full_shift(int(spec["full_shift"]))
    if spec == "golden_mean":
        return TMC.golden_mean()
    raise InputError(f"unrecognized tmc spec {spec!r}")


def _load_schedule(config: dict) -> LengthSchedule:
    growth = config.get("growth", {})
    return LengthSchedule(
        N=int(config["N"]),
        mode=growth.get("mode", "factor"),
        factor=int(growth.get("factor", 2)),
    )


def _load_orbit(spec, seed: int, out: Path) -> np.ndarray:
    """Materialize an orbit from one of the supported source kinds."""
    kind = spec.get("kind")
    if kind == "wild":
        return load_wild_prefix(Path(spec["path"])).word
    if kind == "build":
        tmc = _load_tmc(spec["tmc"])
        sched = _load_schedule(spec)
        return build_wild_prefix(tmc, sched, int(spec["horizon"])).word
    if kind == "periodic":
        word = PeriodicWord(tuple(spec["word"]))
        return eventually_periodic_orbit(
            tuple(spec.get("preperiod", ())), word, int(spec["length"])
        )
    if kind == "markov":
        measure = MarkovMeasure.from_json_dict(spec["chain"])
        return sample_orbit(measure, seed, int(spec["length"]))
    if kind == "bowen":
        mod = _load_moduli(spec)
        itin = generate_itinerary(
            mod, spec.get("a0", 10.0), int(spec.get("transit", 1)), int(spec["cycles"])
        )
        return itin.label_stream(max_steps=spec.get("max_steps")).astype(np.int64)
    raise InputError(f"unrecognized orbit source {spec!r}")


def _load_moduli(spec) -> DerivedModuli:
    if "lambda" in spec and "sigma" in spec:
        return DerivedModuli(float(spec["lambda"]), float(spec["sigma"]))
    if "saddle" in spec:
        s = spec["saddle"]
        return moduli(
            SaddleParams(
                s["alpha_plus"], s["alpha_minus"], s["beta_plus"], s["beta_minus"]
            )
        )
    raise InputError("bowen config needs lambda/sigma or saddle eigenvalues")


def cmd_wild_orbit(config: dict, seed: int, out: Path, emit: set[str]) -> int:
    tmc = _load_tmc(config["tmc"])
    sched = _load_schedule(config)
    prefix = build_wild_prefix(tmc, sched, int(config["horizon"]))
    save_wild_prefix(prefix, out / "wild")
    targets = config.get("verify_targets", [{"h": 1, "m": 1}])
    reports = []
    failed = False
    for t in targets:
        report = verify_checkpoint_bounds(prefix, int(t["h"]), int(t["m"]))
        reports.append(report.to_json_dict())
        if not report.certified:
            failed = True
    _write_json(
        out / "checkpoint_report.json",
        {
            "tmc": tmc.to_json_dict(),
            "schedule": sched.to_json_dict(),
            "length": len(prefix.word),
            "checkpoints": [
                {"n": c.n, "ell": c.ell, "kappa": c.kappa, "p_index": c.p_index}
                for c in prefix.checkpoints
            ],
            "certificates": reports,
        },
    )
    return 2 if failed else 0


def cmd_trace(config: dict, seed: int, out: Path, emit: set[str]) -> int:
    orbit = _load_orbit(config["orbit"], seed, out)
    horizon = int(config.get("horizon", len(orbit) - 8))
    burn_in = int(config.get("burn_in", max(1, horizon // 8)))
    horizons = geometric_horizons(burn_in, horizon, float(config.get("gamma", 1.1)))
    traces = []
    reports = {}
    for target in config["targets"]:
        cyl = CylinderSpec(tuple(target))
        trace = frequency_trace(orbit, cyl, horizons, orbit_id=config.get("orbit_id", "orbit"))
        traces.append(trace)
        reports[cyl.label()] = running_extremes(trace, burn_in).to_json_dict()
    if "csv" in emit:
        write_trace_csv(out / "traces.csv", traces, exact=bool(config.get("exact", True)))
    if "json" in emit:
        _write_json(out / "oscillation.json", reports)
    return 0


def cmd_eta(config: dict, seed: int, out: Path, emit: set[str]) -> int:
    tmc = _load_tmc(config["tmc"])
    source_spec = config["orbit"]
    wild = None
    if source_spec.get("kind") == "wild":
        wild = load_wild_prefix(Path(source_spec["path"]))
        orbit = wild.word
    elif source_spec.get("kind") == "build":
        wild = build_wild_prefix(tmc, _load_schedule(source_spec), int(source_spec["horizon"]))
        orbit = wild.word
    else:
        orbit = _load_orbit(source_spec, seed, out)
    horizon = int(config.get("horizon", len(orbit) // 2))
    generation = int(config.get("generation", 2))

    report: dict = {}
    table = build_premeasure_table(orbit, tmc, generation, horizon)
    report["cover_values"] = [
        nu_g(table, CylinderSpec(tuple(t))).to_json_dict()
        for t in config.get("targets", [])
    ]
    report["total_mass"] = total_mass_partition(
        orbit, tmc, horizon, generation=min(generation, 2)
    ).estimate.to_json_dict()
    verdict = probability_verdict(
        orbit, tmc, horizon, float(config.get("tol", 0.05)), generation=1
    )
    report["verdict"] = verdict.to_json_dict()

    failed = False
    if "periods" in config:
        host = CylinderSpec(tuple(config.get("host", [0])))
        packing = eta_packing_lower_bound(
            wild if wild is not None else orbit,
            host,
            [int(q) for q in config["periods"]],
            tmc,
            horizon=horizon,
        )
        threshold = float(config.get("threshold", 10.0))
        report["packing"] = packing.to_json_dict()
        report["packing"]["threshold"] = threshold
        report["packing"]["exceeds_threshold"] = packing.exceeds(threshold)
        if config.get("expect_wild") and not packing.exceeds(threshold):
            failed = True
    if "csv" in emit and "mass_curve" in config:
        curve = config["mass_curve"]
        target = CylinderSpec(tuple(curve.get("target", [0])))
        points = []
        for g in range(target.generation, int(curve["max_generation"]) + 1):
            table_g = build_premeasure_table(orbit, tmc, g, horizon)
            points.append((g, float(nu_g(table_g, target).value)))
        trace = FrequencyTrace(tuple(points), target.label(), "mass-vs-generation")
        write_trace_csv(out / "eta_mass.csv", [trace])
    _write_json(out / "eta_report.json", report)
    return 2 if failed else 0


def cmd_bowen(config: dict, seed: int, out: Path, emit: set[str]) -> int:
    mod = _load_moduli(config)
    itin = generate_itinerary(
        mod,
        float(config.get("a0", 10.0)),
        int(config.get("transit", 1)),
        int(config.get("cycles", 20)),
    )
    phi_a = float(config.get("phiA", 1.0))
    phi_b = float(config.get("phiB", 0.0))
    phi_t = float(config.get("phiT", 0.0))
    burn_in = int(config.get("burn_in", max(1, itin.total_steps // 100)))
    tol = float(config.get("tol", 1e-2))

    report: dict = {
        "lambda": mod.lam,
        "sigma": mod.sigma,
        "rho": mod.rho,
        "attracting": mod.attracting,
        "total_steps": itin.total_steps,
        "prng": PRNG_NAME,
    }
    if "saddle" in config:
        report.update({k: float(v) for k, v in config["saddle"].items()})
    failed = False
    empirical = empirical_extremes(itin, phi_a, phi_b, phi_t, burn_in)
    report["empirical"] = empirical.to_json_dict()
    if mod.attracting and phi_a >= phi_b:
        sup, inf = closed_form_extremes(mod, phi_a, phi_b)
        mass_a, mass_b, total = eta_atoms(mod)
        report["closed_form"] = {"limsup": sup, "liminf": inf}
        report["masses"] = [mass_a, mass_b]
        report["total"] = total
        atoms = two_atom_report(itin, burn_in, tol)
        report["two_atom"] = atoms.to_json_dict()
        failed = (
            abs(empirical.sup_tail - sup) > tol
            or abs(empirical.inf_tail - inf) > tol
            or not atoms.satisfied
        )
    if "csv" in emit:
        trace = boundary_average_trace(
            itin, {0: phi_a, 1: phi_b, 2: phi_t}, orbit_id="sojourn"
        )
        write_trace_csv(out / "bowen_trace.csv", [trace], exact=False)
    _write_json(out / "bowen.json", report)
    return 2 if failed else 0


def _load_mixture(config: dict) -> MixtureSpec:
    if "two_class" in config:
        tc = config["two_class"]
        return two_class_mixture(
            np.asarray(tc["first"]), np.asarray(tc["second"]), float(tc["weight_first"])
        )
    components = []
    for comp in config["components"]:
        measure = MarkovMeasure.from_json_dict(comp)
        components.append((measure, float(comp["weight"])))
    return MixtureSpec(tuple(components))


def cmd_decompose(config: dict, seed: int, out: Path, emit: set[str]) -> int:
    mixture = _load_mixture(config)
    from .symbolic import all_cylinders

    generation = int(config.get("generation", 2))
    tmc = TMC.full_shift(mixture.size)
    cylinders = [
        CylinderSpec(tuple(t)) for t in config.get("cylinders", [])
    ] or all_cylinders(tmc, generation)
    report = decomposition_check(
        mixture,
        sample_count=int(config.get("samples", 200)),
        horizon=int(config.get("horizon", 10**5)),
        cylinders=cylinders,
        tol_sigma=float(config.get("tol_sigma", 4.0)),
        seed=seed,
    )
    _write_json(out / "decomposition.json", report.to_json_dict())
    min_fraction = float(config.get("min_fraction", 0.95))
    ok = report.fraction_within_bands >= min_fraction and report.mixture_ok
    return 0 if ok else 2


def cmd_physical(config: dict, seed: int, out: Path, emit: set[str]) -> int:
    if "chain" in config:
        measure = MarkovMeasure.from_json_dict(config["chain"])
        subject = MixtureSpec(((measure, 1.0),))
    else:
        subject = _load_mixture(config)
    report = physicality_check(
        subject,
        sample_count=int(config.get("samples", 50)),
        horizon=int(config.get("horizon", 20000)),
        tol=float(config.get("tol", 0.05)),
        seed=seed,
        generation=int(config.get("generation", 2)),
    )
    _write_json(out / "physicality.json", report.to_json_dict())
    expect = config.get("expect", {})
    failed = False
    if "generalized" in expect and report.generalized_physical != bool(expect["generalized"]):
        failed = True
    if "mu_physical" in expect and report.mu_physical != bool(expect["mu_physical"]):
        failed = True
    return 2 if failed else 0


def cmd_cesaro(config: dict, seed: int, out: Path, emit: set[str]) -> int:
    if "input_csv" in config:
        traces = read_trace_csv(Path(config["input_csv"]))
        seq = np.array([float(v) for _, v in traces[0].points])
    else:
        orbit = _load_orbit(config["orbit"], seed, out)
        value = config.get("indicator_symbol", 0)
        seq = (orbit == int(value)).astype(np.int64)
    horizon = int(config.get("horizon", len(seq)))
    burn_in = int(config.get("burn_in", max(1, horizon // 10)))
    results = {}
    mean_traces = []
    failed = False
    sample_points = geometric_horizons(max(1, burn_in // 4), horizon, 1.2)
    for kind in config.get("kinds", ["cesaro"]):
        for order in config.get("orders", [1, 2]):
            spec = MeanSpec(kind, int(order))
            report = mean_oscillation(seq, spec, burn_in, horizon)
            results[f"{kind}:{order}"] = report.to_json_dict()
            values = mean_values(seq[:horizon], spec)
            mean_traces.append(
                FrequencyTrace(
                    tuple((n, float(values[n - 1])) for n in sample_points),
                    f"{kind}:{order}",
                    config.get("orbit_id", "orbit"),
                )
            )
            if "min_amplitude" in config and report.amplitude < float(config["min_amplitude"]):
                failed = True
            if "max_amplitude" in config and report.amplitude > float(config["max_amplitude"]):
                failed = True
    if "csv" in emit:
        write_trace_csv(out / "cesaro_means.csv", mean_traces)
    _write_json(out / "cesaro.json", results)
    return 2 if failed else 0


def cmd_nonnormal(config: dict, seed: int, out: Path, emit: set[str]) -> int:
    orbit = _load_orbit(config["orbit"], seed, out)
    report: dict = {}
    blocks = [tuple(b) for b in config.get("blocks", [[0]])]
    horizons = config.get(
        "horizons", geometric_horizons(64, max(65, len(orbit) - 8), 2.0)
    )
    freqs = {}
    for block in blocks:
        freqs[str(list(block))] = {
            str(ell): digit_block_frequency(orbit, block, int(ell))
            for ell in horizons
            if int(ell) >= len(block)
        }
    report["block_frequencies"] = freqs
    digits_cap = int(config.get("coding_prefix", 64))
    prefix = [int(s) for s in orbit[:digits_cap]]
    if "base" in config:
        b = int(config["base"])
        coded = encode_base_b(prefix, b)
        report["base_b"] = {
            "base": b,
            "value": float(coded.value),
            "value_exact": coded.value,
            "error_bound": float(coded.error_bound),
        }
    if config.get("gauss"):
        quotients = [s + 1 for s in prefix]
        coded = gauss_value(quotients)
        report["continued_fraction"] = {
            "value": float(coded.value),
            "error_bound": float(coded.error_bound),
        }
    _write_json(out / "nonnormal.json", report)
    return 0


COMMANDS = {
    "wild-orbit": cmd_wild_orbit,
    "trace": cmd_trace,
    "eta": cmd_eta,
    "bowen": cmd_bowen,
    "decompose": cmd_decompose,
    "physical": cmd_physical,
    "cesaro": cmd_cesaro,
    "nonnormal": cmd_nonnormal,
}


def _run_once(subcommand: str, config: dict, seed: int, out: Path, emit: set[str]) -> int:
    out.mkdir(parents=True, exist_ok=True)
    status = COMMANDS[subcommand](config, seed, out, emit)
    artifacts = {
        p.name: _sha256(p)
        for p in sorted(out.iterdir())
        if p.is_file() and p.name != "manifest.json"
    }
    _write_json(
        out / "manifest.json",
        {
            "subcommand": subcommand,
            "config": config,
            "seed": seed,
            "emit": sorted(emit),
            "prng": PRNG_NAME,
            "version": __version__,
            "status": status,
            "artifacts": artifacts,
        },
    )
    return status


def _verify(out: Path) -> int:
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        print(f"error: no manifest in {out}", file=sys.stderr)
        return 1
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    for name, digest in manifest["artifacts"].items():
        path = out / name
        if not path.exists() or _sha256(path) != digest:
            print(f"verify: artifact {name} missing or tampered", file=sys.stderr)
            return 2
    with tempfile.TemporaryDirectory() as scratch:
        replay_dir = Path(scratch) / "replay"
        _run_once(
            manifest["subcommand"],
            manifest["config"],
            int(manifest["seed"]),
            replay_dir,
            set(manifest["emit"]),
        )
        for name, digest in manifest["artifacts"].items():
            replay_file = replay_dir / name
            if not replay_file.exists() or _sha256(replay_file) != digest:
                print(f"verify: replay diverged on {name}", file=sys.stderr)
                return 2
    print("verify: ok")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="orbitmeter", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="path to the JSON run configuration")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--emit", default=None, help="comma list: csv,json")
    parser.add_argument("--verify", action="store_true", help="replay and compare hashes")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1

    out = Path(args.out or os.environ.get("ORBITMETER_OUT", "orbitmeter-out"))
    if args.verify:
        return _verify(out)

    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("ORBITMETER_SEED", "0"))
    emit_raw = args.emit or os.environ.get("ORBITMETER_EMIT", "csv,json")
    emit = {e.strip() for e in emit_raw.split(",") if e.strip()}
    if not emit <= {"csv", "json"}:
        print(f"error: unknown emit formats {emit - {'csv', 'json'}}", file=sys.stderr)
        return 1

    if not args.config:
        print("error: --config is required unless --verify is given", file=sys.stderr)
        return 1
    config_path = Path(args.config)
    if not config_path.exists():
        print(f"error: config file {config_path} not found", file=sys.stderr)
        return 1
    try:
        with open(config_path) as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON config: {exc}", file=sys.stderr)
        return 1

    try:
        return _run_once(args.subcommand, config, seed, out, emit)
    except OrbitmeterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
