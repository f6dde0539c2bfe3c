import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass

from trace_lab.algebra import (
    certificate_is_basis,
    commutant_and_center,
    corner_generation_check,
    generated_algebra,
    is_surjective,
    tensor_generation_check,
)
from trace_lab.args import add_common_arguments, add_input_arguments
from trace_lab.channels import (
    channel_distance,
    channel_from_rep,
    midpoint_channel,
    solve_adjoint_pairing,
    verify_channel,
)
from trace_lab.codec import dumps, load_any, roundtrip
from trace_lab.errors import ClosureError, PreconditionError, SchemaError
from trace_lab.freegroup import UnitaryTuple, approx_midpoint_fd
from trace_lab.linalg import Tolerance, derive_seed, normalized_trace, structured_generators
from trace_lab.matprod import (
    DISTANCE_FACTOR,
    approx_by_amplification,
    generator_distances,
    mn_rep_from_unitaries,
    perturbed_rep,
    random_mn_rep,
    verify_perturbation,
)
from trace_lab.obstructions import (
    amalgam_statement,
    decompose_trace,
    isolation_gap,
    load_table,
    random_trace,
    weight_bound_check,
)
from trace_lab.utils import Gate, resolve_output_path, save_gates_to_csv, set_env_vars, write_report
from trace_lab.words import load_words

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_GATE_FAILED = 1
EXIT_SCHEMA = 2
EXIT_PRECONDITION = 3
MOMENT_SLACK = 1e-8
DIAGONAL_TOL = 1e-12
ROUNDTRIP_TOL = 1e-10


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple = ()
    n: int = 4
    d: int = 2
    k: int = 3
    m: int = 2
    eps: float = 0.1
    radius: int = 3
    seed: int = 0
    tries: int = 32
    tol: Tolerance = Tolerance()
    closure_max_dim: int = 40
    table: str = "s3"
    samples: int = 100
    r_rank: int = None
    out: str = None
    save: str = None
    csv: bool = False
    diagnostics: bool = False
    words: str = None
    channel_threshold: float = None

    @classmethod
    def from_args(cls, args):
        return cls(
            command=args.command,
            inputs=tuple(args.input or ()),
            n=args.n,
            d=args.d,
            k=args.k,
            m=args.m,
            eps=args.eps,
            radius=args.radius,
            seed=args.seed,
            tries=args.tries,
            tol=Tolerance(structural=args.tol_structural, rank=args.tol_rank),
            closure_max_dim=args.closure_max_dim,
            table=args.table,
            samples=args.samples,
            r_rank=args.r_rank,
            out=args.out,
            save=args.save,
            csv=args.csv,
            diagnostics=args.diagnostics,
            words=args.words,
            channel_threshold=args.channel_threshold,
        )

    def to_dict(self):
        payload = asdict(self)
        payload["inputs"] = list(self.inputs)
        return payload


def _load_inputs(config, kinds, count):
    """Loads exactly count inputs of the accepted kinds, or None when no input was given."""
    if not config.inputs:
        return None
    if len(config.inputs) != count:
        raise PreconditionError(f"{config.command} takes {count} input file(s), got {len(config.inputs)}")
    values = []
    for path in config.inputs:
        kind, value = load_any(path)
        if kind not in kinds:
            raise SchemaError(f"{path}: expected {' or '.join(kinds)}, got {kind}")
        values.append(value)
    return values


def _generators(config):
    loaded = _load_inputs(config, ("unitaries", "mnmn", "cmatrix"), 1)
    if loaded is None:
        return UnitaryTuple.haar(config.d, config.k, config.seed).unitaries
    value = loaded[0]
    if hasattr(value, "all_units"):
        return value.all_units()
    if hasattr(value, "unitaries"):
        return value.unitaries
    return [value]


def _mn_pair(config):
    loaded = _load_inputs(config, ("mnmn",), 2)
    if loaded is None:
        return [random_mn_rep(config.n, config.d, derive_seed(config.seed, s)) for s in (1, 2)]
    return loaded


def _mn_single(config):
    loaded = _load_inputs(config, ("mnmn",), 1)
    if loaded is None:
        return random_mn_rep(config.n, config.d, config.seed)
    return loaded[0]


def _words(config, kind):
    if config.words is None:
        return None, config.radius
    words = load_words(config.words, kind)
    return words, max(len(word) for word in words)


def _save(config, value):
    if config.save:
        with open(config.save, "w", encoding="utf-8") as handle:
            handle.write(dumps(value))
        logger.info(f"Saved to {config.save}")


def gen_check(config):
    n, tol = config.n, config.tol
    dims = {}
    gates = []
    for split in range(n):
        dim = generated_algebra(structured_generators(n, split), tol).dim
        dims[str(split)] = dim
        gates.append(Gate(f"generated_dim[k={split}]", dim == n * n, dim, n * n))
    corner = corner_generation_check(tol=tol).dim
    tensor = tensor_generation_check(tol=tol).dim
    gates.append(Gate("corner_generation", corner == 25, corner, 25))
    gates.append(Gate("tensor_generation", tensor == 36, tensor, 36))
    print(f"generated dimensions for n={n}: {dims}")
    return {"n": n, "dims": dims, "corner_dim": corner, "tensor_dim": tensor}, gates


def surjective_check(config):
    gens = _generators(config)
    verdict = is_surjective(gens, config.tol, config.closure_max_dim)
    gates = [Gate.check("surjective", verdict.flag), Gate.check("certified", verdict.certified)]
    if verdict.certificate is not None:
        gates.append(Gate.check("certificate_basis", certificate_is_basis(gens, verdict.certificate, config.tol)))
    size = len(verdict.certificate) if verdict.certificate else 0
    print(f"surjective: {verdict.flag}, certificate size: {size}")
    return {"surjective": verdict.flag, "certificate_size": size, "certificate": verdict.certificate,
            "certificate_route": verdict.route}, gates


def factor_check(config):
    comm, center = commutant_and_center(_generators(config), config.tol)
    print(f"commutant dim: {comm.dim}, center dim: {center.dim}")
    return {"commutant_dim": comm.dim, "center_dim": center.dim}, [Gate("factor", center.dim == 1, center.dim, 1)]


def midpoint_f2(config):
    loaded = _load_inputs(config, ("unitaries",), 2)
    if loaded is None:
        loaded = [UnitaryTuple.haar(config.d, config.k, derive_seed(config.seed, s)) for s in (1, 2)]
    words, length = _words(config, "group")
    out, report = approx_midpoint_fd(loaded[0], loaded[1], config.eps, config.radius, config.seed, config.tries,
                                     config.tol, config.closure_max_dim, words)
    _save(config, out)
    sup_delta = report.moment_report.sup_delta
    gates = [
        Gate.check("surjective", report.surjective),
        Gate.check("certified", report.certified),
        Gate.at_most("moment_sup_delta", sup_delta, length * config.eps + MOMENT_SLACK),
    ]
    print(f"sup_delta: {sup_delta:.6g}, certificate size: {len(report.certificate or [])}")
    return report.to_dict(), gates


def amplify_command(config):
    rep = _mn_single(config)
    words, length = _words(config, "monomial")
    out, report = approx_by_amplification(rep, config.m, config.eps, config.radius, config.seed, config.tries,
                                          config.tol, config.closure_max_dim, words)
    _save(config, out)
    sup_delta = report.moment_report.sup_delta
    gates = [
        Gate.check("surjective", report.surjective),
        Gate.check("certified", report.certified),
        Gate.at_most("moment_sup_delta", sup_delta, length * config.eps + MOMENT_SLACK),
    ]
    print(f"dimension {out.k}, sup_delta: {sup_delta:.6g}")
    return report.to_dict(), gates


def mnmn_build(config):
    loaded = _load_inputs(config, ("unitaries",), 1)
    if loaded is None:
        rep = random_mn_rep(config.n, config.d, config.seed)
    else:
        rep = mn_rep_from_unitaries(config.n, list(loaded[0].unitaries))
    residuals = rep.residuals()
    diagonal = max(abs(normalized_trace(units[i, i]) - 1.0 / rep.n)
                   for units in (rep.e_units, rep.f_units) for i in range(rep.n))
    gates = [
        Gate.at_most("units_valid", max(residuals.values()), config.tol.structural * rep.k),
        Gate.at_most("diagonal_trace", diagonal, DIAGONAL_TOL),
    ]
    _save(config, rep)
    print(f"built M_{rep.n} * M_{rep.n} representation of dimension {rep.k}")
    return {"n": rep.n, "k": rep.k, "residuals": residuals}, gates


def mnmn_perturb(config):
    rep1, rep2 = _mn_pair(config)
    bundle = perturbed_rep(rep1, rep2, config.eps, config.r_rank, config.tol)
    distances = generator_distances(bundle)
    residual = max(bundle.perturbed.residuals().values())
    gates = [Gate.at_most("units_valid", residual, config.tol.structural * bundle.perturbed.k)]
    gates += [Gate.at_most(f"trace_distance[{name}]", value, DISTANCE_FACTOR * config.eps)
              for name, value in distances.items()]
    _save(config, bundle.perturbed)
    print(f"perturbed representation of dimension {bundle.perturbed.k}")
    return {**bundle.to_dict(), "trace_distances": distances}, gates


def mnmn_verify(config):
    rep1, rep2 = _mn_pair(config)
    bundle = perturbed_rep(rep1, rep2, config.eps, config.r_rank, config.tol)
    report = verify_perturbation(bundle, config.radius, config.diagnostics, config.tol, config.closure_max_dim)
    print(f"generated dim: {report.generated_dim}, sup_delta: {report.moment_report.sup_delta:.6g}")
    return {**bundle.to_dict(), **report.to_dict()}, report.gates


def channel_command(config):
    rep = _mn_single(config)
    channel = channel_from_rep(rep)
    oracle_gap = channel_distance(channel, solve_adjoint_pairing(rep))
    checks = verify_channel(channel, config.tol)
    gates = [Gate.at_most("adjoint_pairing", oracle_gap, config.tol.structural)] + checks.gates
    _save(config, channel)
    print(f"min choi eigenvalue: {checks.min_choi_eigenvalue:.6g}")
    return {"channel": channel.to_dict(), "adjoint_pairing_gap": oracle_gap, **checks.to_dict()}, gates


def channel_verify(config):
    loaded = _load_inputs(config, ("channel", "mnmn"), 1)
    if loaded is None:
        channel = channel_from_rep(random_mn_rep(config.n, config.d, config.seed))
    else:
        channel = loaded[0] if hasattr(loaded[0], "choi") else channel_from_rep(loaded[0])
    checks = verify_channel(channel, config.tol)
    print(f"min choi eigenvalue: {checks.min_choi_eigenvalue:.6g}; unital={checks.unital}, "
          f"trace_preserving={checks.trace_preserving}, choi_psd={checks.choi_psd}")
    return checks.to_dict(), checks.gates


def midpoint_channel_command(config):
    rep1, rep2 = _mn_pair(config)
    channel, report = midpoint_channel(rep1, rep2, config.eps, config.radius, config.r_rank, config.diagnostics,
                                       config.tol, config.closure_max_dim, config.channel_threshold)
    _save(config, channel)
    print(f"distance to midpoint: {report.distance_to_midpoint:.6g}, surjective: {report.surjective}")
    return {"channel": channel.to_dict(), **report.to_dict()}, report.gates


def et_gap(config):
    table = load_table(config.table)
    gap = isolation_gap(table)
    print(gap)
    return {"table": table.name, "gap": gap, "statement": amalgam_statement(gap)}, \
        [Gate("isolation_gap", gap > 0, gap, 0.0)]


def et_bound(config):
    table = load_table(config.table)
    holds, worst_slack, worst_roundtrip = 0, float("inf"), 0.0
    for sample in range(config.samples):
        phi, weights = random_trace(table, derive_seed(config.seed, sample))
        check = weight_bound_check(table, phi)
        holds += check.holds
        worst_slack = min(worst_slack, check.actual_trivial_weight - check.bound)
        recovered = decompose_trace(table, phi)
        worst_roundtrip = max(worst_roundtrip, max(abs(a - b) for a, b in zip(recovered, weights)))
    gates = [
        Gate("bound_holds", holds == config.samples, holds, config.samples),
        Gate.at_most("decomposition_roundtrip", worst_roundtrip, ROUNDTRIP_TOL),
    ]
    print(f"bound held on {holds}/{config.samples} traces")
    return {"table": table.name, "gap": isolation_gap(table), "samples": config.samples,
            "min_slack": worst_slack if config.samples else None}, gates


def roundtrip_command(config):
    if len(config.inputs) != 1:
        raise PreconditionError("roundtrip takes exactly one --input file")
    ok = roundtrip(config.inputs[0])
    print(f"roundtrip: {ok}")
    return {"path": config.inputs[0], "identical": ok}, [Gate.check("roundtrip", ok)]


COMMANDS = {
    "gen-check": (gen_check, "Check that the structured triples generate M_n"),
    "surjective-check": (surjective_check, "Decide whether matrices generate the full matrix algebra"),
    "factor-check": (factor_check, "Compute commutant and center dimensions"),
    "midpoint-f2": (midpoint_f2, "Approximate a free-group trace midpoint by a surjective representation"),
    "amplify": (amplify_command, "Approximate an M_n * M_n trace by amplified generating representations"),
    "mnmn-build": (mnmn_build, "Build an M_n * M_n representation from unitaries"),
    "mnmn-perturb": (mnmn_perturb, "Build the perturbed M_n * M_n representation of a midpoint"),
    "mnmn-verify": (mnmn_verify, "Run the verification battery on the perturbed representation"),
    "channel": (channel_command, "Extract the factorizable channel of an M_n * M_n representation"),
    "channel-verify": (channel_verify, "Check a channel is unital, trace preserving and completely positive"),
    "midpoint-channel": (midpoint_channel_command, "Surjectively factorizing channel near a channel midpoint"),
    "et-gap": (et_gap, "Isolation gap of the trivial character"),
    "et-bound": (et_bound, "Check the trivial-weight bound on sampled traces"),
    "roundtrip": (roundtrip_command, "Parse, serialize and reparse a file"),
}


def run(config, handler=None):
    """
    Runs one command and writes its report.

    Args:
        config (RunConfig): The run.
        handler (callable): Command function; looked up from config.command when omitted.

    Returns:
        int: 0 when every gate passes, 1 on a failed gate, 2 on unreadable
        input, 3 on a violated precondition.
    """
    if handler is None:
        handler, _ = COMMANDS[config.command]
    try:
        result, gates = handler(config)
    except SchemaError as e:
        logger.error(f"{config.command}: {e}")
        return EXIT_SCHEMA
    except OSError as e:
        logger.error(f"{config.command}: cannot read input: {e}")
        return EXIT_SCHEMA
    except (PreconditionError, ClosureError) as e:
        logger.error(f"{config.command}: {e}")
        return EXIT_PRECONDITION
    passed = all(gate.passed for gate in gates)
    report = {
        "command": config.command,
        "seed": config.seed,
        "config": config.to_dict(),
        "gates": [gate.to_dict() for gate in gates],
        "pass": passed,
        "result": result,
    }
    path = resolve_output_path(config.out or f"{config.command}.json")
    write_report(report, path)
    if config.csv:
        save_gates_to_csv(gates, os.path.splitext(path)[0] + ".csv")
    if not passed:
        failed = [gate.name for gate in gates if not gate.passed]
        logger.error(f"{len(failed)} gate(s) failed: {', '.join(failed)}")
        return EXIT_GATE_FAILED
    return EXIT_OK


def run_command(args):
    set_env_vars(args)
    try:
        config = RunConfig.from_args(args)
    except PreconditionError as e:
        logger.error(str(e))
        return EXIT_PRECONDITION
    return run(config, args.func)


def main():
    parser = argparse.ArgumentParser(
        description="Finite-dimensional experiments on traces of free groups and of M_n * M_n."
    )
    subparsers = parser.add_subparsers(dest="command")
    for name, (handler, help_text) in COMMANDS.items():
        command_parser = subparsers.add_parser(name, help=help_text)
        add_common_arguments(command_parser)
        add_input_arguments(command_parser)
        command_parser.set_defaults(func=handler)

    args = parser.parse_args()
    if args.command:
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
        sys.exit(run_command(args))
    else:
        parser.print_help()
        sys.exit(1)


if __name__ == "__main__":
    main()
