"""Command-line interface: instance ingestion, dispatch, report emission.

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid input,
3 degenerate verdict (not applicable or unknown).  Reports are emitted as
human-readable text or as a byte-stable machine format.  The environment
variable ``CORRKIT_THREADS`` bounds the parallelism of the stage sweeps.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .dilation import (
    DilationPipeline,
    _threads_from_env,
    compare_unit_limits,
    primary_check,
    primary_span_ranks,
    spatiality_report,
    verify_main,
    verify_supplement,
    weak_dilation_check,
)
from .endo import validate_endomorphism
from .errors import (
    ConstructionError,
    CorrkitError,
    InstanceFormatError,
    PreconditionError,
)
from .hilbmod import internal_tensor, tensor_pre_gram, validate_module
from .instance import Instance, PROFILES, RunConfig, emit_instance, generate_instance, parse_instance
from .prodsys import build_powers, check_unit
from .report import FAIL, NOT_APPLICABLE, PASS, UNKNOWN, VerificationReport

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_DEGENERATE = 3


def _exit_code(report: VerificationReport) -> int:
    if report.status in (NOT_APPLICABLE, UNKNOWN):
        return EXIT_DEGENERATE
    return EXIT_PASS if report.status == PASS else EXIT_FAIL


def run(command: str, inst: Instance, config: RunConfig, **kwargs) -> tuple[int, VerificationReport]:
    """Dispatch one verification command; returns (exit code, report)."""
    handlers = {
        "validate": _cmd_validate,
        "tensor": _cmd_tensor,
        "derive-ps": _cmd_derive_ps,
        "spatial": _cmd_spatial,
        "dilate": _cmd_dilate,
        "verify-main": _cmd_verify_main,
        "verify-supplement": _cmd_verify_supplement,
        "compare-units": _cmd_compare_units,
        "basis": _cmd_basis,
    }
    if command not in handlers:
        raise InstanceFormatError(f"unknown command {command!r}")
    report = handlers[command](inst, config, **kwargs)
    report.provenance.setdefault("seed", config.seed)
    report.provenance.setdefault("levels", config.levels)
    report.provenance.setdefault("budget", config.budget)
    return _exit_code(report), report


def _cmd_validate(inst: Instance, config: RunConfig) -> VerificationReport:
    rep = VerificationReport("instance validation")
    for name in sorted(inst.modules):
        rep.extend(validate_module(inst.modules[name], config.tol), prefix=f"{name}.")
    if inst.endomorphism is not None:
        eplus, endo = inst.make_endo()
        rep.extend(validate_endomorphism(endo, config.tol))
    return rep


def _cmd_tensor(inst: Instance, config: RunConfig, left: str = "", right: str = "") -> VerificationReport:
    if not left or not right:
        raise InstanceFormatError("tensor: --left and --right module names are required")
    e = inst.module(left)
    f = inst.correspondence(right, "tensor")
    tensor, fm = internal_tensor(e, f, config.tol)
    rep = VerificationReport(f"internal tensor {left} . {right}")
    rep.add_flag("factor-surjective", np.linalg.matrix_rank(fm.matrix) == tensor.dim)
    pre = tensor_pre_gram(e, f)
    pulled = np.einsum("ui,vj,uvab->ijab", fm.matrix.conj(), fm.matrix, tensor.gram)
    dev = float(np.abs(pulled - pre).max()) if pre.size else 0.0
    rep.add("inner-product-rule", dev, config.tol)
    rep.extend(validate_module(tensor, config.tol), prefix="tensor-")
    rep.detail = f"realized dimension {tensor.dim} from {e.dim} x {f.dim}"
    return rep


def _require_ps(inst: Instance, config: RunConfig):
    if inst.product_system is None:
        raise InstanceFormatError("this command needs a product_system section")
    gen = inst.correspondence(inst.product_system["generator"], "product_system")
    levels = inst.product_system["levels"]
    return build_powers(gen, levels, config.tol, config.budget)


def _cmd_derive_ps(inst: Instance, config: RunConfig) -> VerificationReport:
    ps = _require_ps(inst, config)
    rep = VerificationReport("product system derivation")
    rep.extend(ps.verification)
    for name, vec in sorted(inst.product_system["units"].items()):
        rep.extend(check_unit(ps, vec, config.tol), prefix=f"{name}.")
    rep.detail = f"stage dimensions {[ps.power(n).dim for n in range(ps.levels + 1)]}"
    return rep


def _cmd_spatial(inst: Instance, config: RunConfig) -> VerificationReport:
    if inst.endomorphism is not None:
        eplus, endo = inst.make_endo()
        status, rep = spatiality_report(
            eplus, endo, config.levels, config.tol,
            pipeline=DilationPipeline(eplus, endo, config.levels, config.tol,
                                      config.budget, _threads_from_env()),
        )
        return rep
    from .prodsys import find_central_unital_unit

    ps = _require_ps(inst, config)
    search = find_central_unital_unit(ps.generator, config.tol)
    rep = VerificationReport("spatiality")
    rep.add_flag("central-unit-search-decided", search.status != "unknown")
    if search.status == "found":
        rep.extend(check_unit(ps, search.vector, config.tol))
    rep.detail = f"central unit: {search.status} ({search.certificate})"
    if search.status == "unknown":
        rep.set_status(UNKNOWN, rep.detail)
    return rep


def _cmd_dilate(inst: Instance, config: RunConfig, vector: str = "xi") -> VerificationReport:
    eplus, endo = inst.make_endo()
    mod, vec = inst.vector(vector)
    if mod is not eplus:
        raise InstanceFormatError(
            f"dilate: vector {vector!r} does not live on the endomorphism module"
        )
    wd = weak_dilation_check(eplus, endo, vec, config.levels, config.tol)
    rep = wd.report
    ranks = primary_span_ranks(eplus, endo, vec, config.levels)
    rep.add_flag("primary-dilation", primary_check(eplus, endo, vec, config.levels))
    rep.detail = f"moved-projection span ranks {ranks} on a module of dimension {eplus.dim}"
    return rep


def _cmd_verify_main(inst: Instance, config: RunConfig) -> VerificationReport:
    eplus, endo = inst.make_endo()
    return verify_main(
        eplus, endo, config.levels, config.tol, config.budget, _threads_from_env()
    )


def _cmd_verify_supplement(inst: Instance, config: RunConfig, vector: str = "xi") -> VerificationReport:
    eplus, endo = inst.make_endo()
    mod, vec = inst.vector(vector)
    if mod is not eplus:
        raise InstanceFormatError(
            f"verify-supplement: vector {vector!r} does not live on the endomorphism module"
        )
    return verify_supplement(
        eplus, endo, vec, config.levels, config.tol, config.budget, _threads_from_env()
    )


def _cmd_basis(inst: Instance, config: RunConfig, module: str = "") -> VerificationReport:
    from .hilbmod import adjointable_basis

    if not module:
        raise InstanceFormatError("basis: --module name is required")
    mod = inst.module(module)
    ops = adjointable_basis(mod, config.tol)
    rep = VerificationReport(f"operator basis of {module}")
    worst = 0.0
    for op in ops:
        lhs = np.einsum("li,ljab->ijab", op.matrix.conj(), mod.gram)
        rhs = np.einsum("lj,ilab->ijab", op.adjoint, mod.gram)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    rep.add("operator-basis-adjoint-relation", worst, config.tol)
    rep.detail = (
        f"{len(ops)} operators, ordered by phase-normalized lexicographic "
        "coordinates; emit matrices with the basis subcommand"
    )
    return rep


def _cmd_compare_units(
    inst: Instance, config: RunConfig, first: str = "", second: str = ""
) -> VerificationReport:
    ps = _require_ps(inst, config)
    units = inst.product_system["units"]
    for name in (first, second):
        if name not in units:
            raise InstanceFormatError(
                f"compare-units: unit {name!r} not found in product_system.units"
            )
    result = compare_unit_limits(ps, units[first], units[second], config.tol)
    rep = result.report
    rep.provenance["verdict"] = result.verdict
    if result.verdict == "unknown":
        rep.set_status(UNKNOWN, rep.detail or "no automorphism found; verdict open")
    rep.detail = f"verdict: {result.verdict}" + (f"; {rep.detail}" if rep.detail else "")
    return rep


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrkit",
        description="verify Hilbert-module dilation identities on desk-scale instances",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_instance=True):
        if with_instance:
            p.add_argument("instance", help="path to an instance file")
        p.add_argument("--levels", type=int, default=None, help="truncation level")
        p.add_argument("--tol", type=float, default=None, help="absolute tolerance")
        p.add_argument("--budget", type=int, default=None, help="carrier dimension budget")
        p.add_argument("--seed", type=int, default=None, help="seed recorded in reports")
        p.add_argument("--report", choices=("text", "machine"), default=None)
        p.add_argument("--out", default=None, help="write the report to this path")

    for name in ("validate", "derive-ps", "spatial", "verify-main"):
        common(sub.add_parser(name))
    p = sub.add_parser("tensor")
    common(p)
    p.add_argument("--left", required=True, help="left factor module name")
    p.add_argument("--right", required=True, help="right factor correspondence name")
    p = sub.add_parser("dilate")
    common(p)
    p.add_argument("--vector", default="xi", help="name of the distinguished unit vector")
    p = sub.add_parser("verify-supplement")
    common(p)
    p.add_argument("--vector", default="xi", help="name of the distinguished unit vector")
    p = sub.add_parser("compare-units")
    common(p)
    p.add_argument("--first", required=True, help="first unit name")
    p.add_argument("--second", required=True, help="second unit name")
    p = sub.add_parser("basis", help="emit the deterministic operator basis of a module")
    common(p)
    p.add_argument("--module", required=True, help="module name")
    p = sub.add_parser("generate", help="emit a deterministic seeded instance")
    common(p, with_instance=False)
    p.add_argument("--profile", required=True, choices=PROFILES)
    return parser


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    return RunConfig(
        levels=args.levels if args.levels is not None else config.levels,
        tol=args.tol if args.tol is not None else config.tol,
        budget=args.budget if args.budget is not None else config.budget,
        seed=args.seed if args.seed is not None else config.seed,
        report=args.report if args.report is not None else config.report,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            config = _apply_overrides(RunConfig(), args)
            inst = generate_instance(config.seed, args.profile)
            _emit(emit_instance(inst), args.out)
            return EXIT_PASS

        inst = parse_instance(args.instance)
        config = _apply_overrides(inst.config, args)
        inst.config = config

        if args.command == "basis":
            from .hilbmod import adjointable_basis

            ops = adjointable_basis(inst.module(args.module), config.tol)
            doc = {
                "module": args.module,
                "operators": [
                    {
                        "matrix": [[[float(x.real), float(x.imag)] for x in row] for row in op.matrix],
                        "adjoint": [[[float(x.real), float(x.imag)] for x in row] for row in op.adjoint],
                    }
                    for op in ops
                ],
            }
            _emit(json.dumps(doc, sort_keys=True, indent=1), args.out)
            return EXIT_PASS

        extra = {}
        for key in ("left", "right", "vector", "first", "second"):
            if hasattr(args, key):
                extra[key] = getattr(args, key)
        code, report = run(args.command, inst, config, **extra)
        _emit(report.to_machine() if config.report == "machine" else report.to_text(), args.out)
        return code
    except (InstanceFormatError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConstructionError as exc:
        print(f"construction failed: {exc} (residual {exc.residual:.3e})", file=sys.stderr)
        return EXIT_FAIL
    except CorrkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
