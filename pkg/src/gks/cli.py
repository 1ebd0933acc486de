"""Configuration-driven command-line front end.

Each command reads a JSON config (strict: unknown keys are rejected), runs
the corresponding experiment, and writes CSV/JSON outputs plus a manifest
echoing the fully resolved configuration.  Outputs are deterministic given
the config, so reruns produce identical bytes.
"""

from __future__ import annotations

import json
import math
import os

import click
import numpy as np

from . import coupled as cp
from .dynamics import (StepperConfig, Trajectory, check_bounded, default_dt,
                       simulate)
from .equilibria import (Equilibrium, NewtonError, continue_branch,
                         find_pulse_wave, harmonic_seed, newton_solve,
                         best_phase_residual, translate)
from .feedback import (ActuatorSet, build_matrices, closed_loop_margin,
                       equispaced_actuators, feedback_law, linear_operator,
                       lyapunov_monitor, place_poles, push_targets,
                       target_spectrum, uncertainty_norm)
from .optimal import CostSpec, PlacementProblem, optimize_placement
from .spectral import GksParams, SpectralField, eval_physical

TWO_PI = 2.0 * math.pi


class ConfigError(click.ClickException):
    pass


# ---------------------------------------------------------------------------
# config plumbing

def _check_keys(d: dict, allowed: set, ctx: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {ctx}: {sorted(unknown)}")


def _require(d: dict, key: str, ctx: str):
    if key not in d:
        raise ConfigError(f"missing required key '{key}' in {ctx}")
    return d[key]


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")


def _equation(cfg: dict, ctx: str = "equation") -> GksParams:
    _check_keys(cfg, {"nu", "mu", "delta", "N"}, ctx)
    try:
        return GksParams(nu=float(_require(cfg, "nu", ctx)),
                         mu=float(cfg.get("mu", 0.0)),
                         delta=float(cfg.get("delta", 0.0)),
                         N=int(cfg.get("N", 32)))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _stepper(cfg: dict, nu: float) -> StepperConfig:
    _check_keys(cfg, {"dt", "T", "record_every"}, "stepper")
    try:
        return StepperConfig(dt=float(cfg.get("dt", default_dt(nu))),
                             T=float(_require(cfg, "T", "stepper")),
                             record_every=int(cfg.get("record_every", 1)))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _modes(d: dict) -> dict:
    return {int(k): float(v) for k, v in d.items()}


def _initial_condition(cfg, N: int) -> SpectralField:
    """Named ("five_mode"/"single_mode") or explicit {mean,sines,cosines}."""
    if isinstance(cfg, str):
        if cfg == "five_mode":
            ones = {n: 1.0 for n in range(1, 6)}
            return SpectralField.from_modes(N, sines=ones, cosines=dict(ones),
                                            mean=1.0)
        if cfg == "single_mode":
            return SpectralField.from_modes(N, sines={1: 1.0}, cosines={1: 1.0})
        raise ConfigError(f"unknown named initial condition {cfg!r}")
    _check_keys(cfg, {"mean", "sines", "cosines"}, "ic")
    return SpectralField.from_modes(N, sines=_modes(cfg.get("sines", {})),
                                    cosines=_modes(cfg.get("cosines", {})),
                                    mean=float(cfg.get("mean", 0.0)))


def _actuators(cfg: dict, ctx: str = "actuators") -> ActuatorSet:
    _check_keys(cfg, {"m", "offset", "positions", "shape", "width"}, ctx)
    shape = cfg.get("shape", "point")
    width = float(cfg.get("width", 0.0))
    try:
        if "positions" in cfg:
            return ActuatorSet(np.asarray(cfg["positions"], dtype=float),
                               shape, width)
        m = int(_require(cfg, "m", ctx))
        if m < 1:
            raise ConfigError(f"{ctx}: need at least one actuator")
        return equispaced_actuators(m, float(cfg.get("offset", 0.0)),
                                    shape, width)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _target(cfg: dict, p: GksParams) -> Equilibrium | None:
    """Resolve a control target: zero, Newton steady state, or pulse wave."""
    _check_keys(cfg, {"kind", "seed_sines", "seed_cosines", "n_pulses"},
                "target")
    kind = _require(cfg, "kind", "target")
    if kind == "zero":
        return None
    try:
        if kind == "steady":
            seed = SpectralField.from_modes(
                p.N, sines=_modes(cfg.get("seed_sines", {})),
                cosines=_modes(cfg.get("seed_cosines", {})))
            return newton_solve((seed, 0.0), p, "steady", classify=False)
        if kind == "travelling":
            return find_pulse_wave(p.nu, p.delta,
                                   int(cfg.get("n_pulses", 1)), N=p.N)
    except NewtonError as exc:
        raise ConfigError(f"target solve failed: {exc}")
    raise ConfigError(f"unknown target kind {kind!r}")


def _placement_targets(cfg: dict, mats, p: GksParams,
                       target: Equilibrium | None) -> np.ndarray:
    """Closed-loop eigenvalue targets: default rule, push, cap, or uniform."""
    _check_keys(cfg, {"uniform", "push", "cap"}, "targets")
    if "uniform" in cfg:
        return np.full(mats.A_u.shape[0], float(cfg["uniform"]))
    t = target_spectrum(mats, p)
    if cfg.get("push", False):
        if target is None:
            raise ConfigError("'push' needs a nonzero target")
        t = push_targets(t, target.coeffs)
    if "cap" in cfg:
        t = np.maximum(t, float(cfg["cap"]))
    return t


# ---------------------------------------------------------------------------
# output plumbing

def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: str, header: list[str], rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_coeffs(path: str, coeffs: np.ndarray):
    with open(path, "w") as fh:
        fh.write("\n".join(_fmt(c) for c in coeffs) + "\n")


def _grid(M: int) -> np.ndarray:
    return TWO_PI * np.arange(M) / M


def _trajectory_rows(traj: Trajectory, M: int):
    x = _grid(M)
    for t, state in zip(traj.times, traj.states):
        yield [t, *eval_physical(SpectralField(state), x)]


def _write_trajectory(path: str, traj: Trajectory, M: int):
    header = ["t"] + [f"x{j}" for j in range(M)]
    _write_csv(path, header, _trajectory_rows(traj, M))


def _write_controls(path: str, times, controls, prefix: str = "f"):
    m = controls.shape[1]
    header = ["t"] + [f"{prefix}{j + 1}" for j in range(m)]
    _write_csv(path, header, ([t, *f] for t, f in zip(times, controls)))


def _write_monitor(path: str, times, dV, flagged_idx):
    flags = np.zeros(len(times), dtype=int)
    flags[np.asarray(flagged_idx, dtype=int)] = 1
    _write_csv(path, ["t", "dV", "flag"],
               ([t, d, fl] for t, d, fl in zip(times, dV, flags)))


def _manifest(outdir: str, command: str, config: dict, outputs: list[str],
              extra: dict | None = None):
    payload = {"command": command, "config": config, "outputs": sorted(outputs)}
    if extra:
        payload["results"] = extra
    _write_json(os.path.join(outdir, "manifest.json"), payload)


def _outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# commands

@click.group()
def main():
    """Simulation and control toolkit for the generalised KS equation."""


def _common_opts(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(exists=True, dir_okay=False))(fn)
    fn = click.option("--out", "out_dir", required=True,
                      type=click.Path(file_okay=False))(fn)
    return fn


@main.command("simulate")
@_common_opts
def simulate_cmd(config_path, out_dir):
    """Uncontrolled gKS run."""
    cfg = load_config(config_path)
    _check_keys(cfg, {"equation", "stepper", "ic", "grid_points"}, "config")
    p = _equation(_require(cfg, "equation", "config"))
    stepper = _stepper(_require(cfg, "stepper", "config"), p.nu)
    u0 = _initial_condition(_require(cfg, "ic", "config"), p.N)
    M = int(cfg.get("grid_points", 256))

    traj = simulate(u0, p, None, stepper)
    peak = check_bounded(traj, p)

    out = _outdir(out_dir)
    _write_trajectory(os.path.join(out, "trajectory.csv"), traj, M)
    _manifest(out, "simulate", cfg, ["trajectory.csv", "manifest.json"],
              {"peak_l2": peak, "final_l2": float(traj.l2_norms()[-1])})
    click.echo(f"simulate: {stepper.n_steps} steps, peak L2 {peak:.4g}")



@main.command("feedback")
@_common_opts
def feedback_cmd(config_path, out_dir):
    """Closed-loop stabilisation run."""
    cfg = load_config(config_path)
    _check_keys(cfg, {"equation", "stepper", "ic", "actuators", "target",
                      "targets", "block_size", "grid_points"}, "config")
    p = _equation(_require(cfg, "equation", "config"))
    stepper = _stepper(_require(cfg, "stepper", "config"), p.nu)
    u0 = _initial_condition(_require(cfg, "ic", "config"), p.N)
    acts = _actuators(_require(cfg, "actuators", "config"))
    target = _target(cfg.get("target", {"kind": "zero"}), p)
    M = int(cfg.get("grid_points", 256))

    block = cfg.get("block_size")
    mats = build_matrices(acts, p, int(block) if block is not None else None)
    targets = _placement_targets(cfg.get("targets", {}), mats, p, target)
    try:
        gain = place_poles(mats, targets)
    except np.linalg.LinAlgError as exc:
        raise ConfigError(str(exc))
    traj = simulate(u0, p, feedback_law(gain, p, target), stepper)
    times, dV, flagged = lyapunov_monitor(traj, target)

    if target is None:
        resid = traj.l2_norms()
        target_coeffs = np.zeros(2 * p.N + 1)
        target_final = target_coeffs
    elif target.is_travelling:
        resid = np.array([best_phase_residual(s, translate(
            target.coeffs, target.speed * t))[0]
            for t, s in zip(traj.times, traj.states)])
        target_coeffs = target.coeffs.coeffs
        target_final = translate(target.coeffs,
                                 target.speed * traj.times[-1]).coeffs
    else:
        resid = np.linalg.norm(traj.states - target.coeffs.coeffs, axis=1)
        target_coeffs = target.coeffs.coeffs
        target_final = target_coeffs

    out = _outdir(out_dir)
    x = _grid(M)
    _write_trajectory(os.path.join(out, "trajectory.csv"), traj, M)
    _write_controls(os.path.join(out, "controls.csv"), traj.times,
                    traj.controls)
    _write_csv(os.path.join(out, "gain.csv"),
               [f"k{j + 1}" for j in range(gain.K.shape[1])], gain.K)
    _write_monitor(os.path.join(out, "monitor.csv"), times, dV, flagged)
    _write_csv(os.path.join(out, "residual.csv"), ["t", "residual"],
               zip(traj.times, resid))
    _write_csv(os.path.join(out, "snapshot.csv"),
               ["x", "controlled", "target"],
               zip(x, eval_physical(traj.final_field(), x),
                   eval_physical(SpectralField(target_final), x)))
    _write_coeffs(os.path.join(out, "target_coeffs.txt"), target_coeffs)
    _manifest(out, "feedback", cfg,
              ["trajectory.csv", "controls.csv", "gain.csv", "monitor.csv",
               "residual.csv", "snapshot.csv", "target_coeffs.txt",
               "manifest.json"],
              {"final_residual": float(resid[-1]),
               "lyapunov_violations": int(len(flagged)),
               "target_speed": 0.0 if target is None else target.speed})
    click.echo(f"feedback: final residual {resid[-1]:.4g}, "
               f"{len(flagged)} Lyapunov violations")



@main.command("equilibria")
@_common_opts
def equilibria_cmd(config_path, out_dir):
    """Continuation branch of steady states or travelling waves."""
    cfg = load_config(config_path)
    _check_keys(cfg, {"equation", "seed", "branch", "classify"}, "config")
    p = _equation(_require(cfg, "equation", "config"))
    seed_cfg = _require(cfg, "seed", "config")
    _check_keys(seed_cfg, {"kind", "mode_number", "n_pulses"}, "seed")
    classify = bool(cfg.get("classify", True))
    kind = _require(seed_cfg, "kind", "seed")
    try:
        if kind == "zero":
            seed = Equilibrium(SpectralField.zeros(p.N), 0.0, p, "unknown")
        elif kind == "harmonic":
            n = int(_require(seed_cfg, "mode_number", "seed"))
            seed = newton_solve((harmonic_seed(n, p), 0.0), p, "steady",
                                classify=classify, branch_label=f"mode{n}")
        elif kind == "pulse":
            seed = find_pulse_wave(p.nu, p.delta,
                                   int(seed_cfg.get("n_pulses", 1)), N=p.N,
                                   classify=classify)
        else:
            raise ConfigError(f"unknown seed kind {kind!r}")
    except NewtonError as exc:
        raise ConfigError(f"seed solve failed: {exc}")

    branch_cfg = cfg.get("branch")
    if branch_cfg is None:
        samples = [(getattr(p, "nu"), seed, seed.l2_norm())]
        termination = "single point"
        parameter = "nu"
    else:
        _check_keys(branch_cfg, {"parameter", "stop", "step"}, "branch")
        parameter = _require(branch_cfg, "parameter", "branch")
        if kind == "zero":
            # the zero branch persists trivially; sample it directly
            start = getattr(p, parameter)
            stop = float(_require(branch_cfg, "stop", "branch"))
            step = abs(float(branch_cfg.get("step", 0.01)))
            vals = np.arange(start, stop + math.copysign(step / 2, stop - start),
                             math.copysign(step, stop - start) or step)
            samples = [(float(v), seed, 0.0) for v in vals]
            termination = "completed"
        else:
            br = continue_branch(seed, parameter,
                                 float(_require(branch_cfg, "stop", "branch")),
                                 float(branch_cfg.get("step", 0.01)),
                                 classify=classify)
            samples, termination = br.samples, br.termination

    out = _outdir(out_dir)
    stable_code = {"stable": 1, "unstable": 0, "unknown": -1}
    rows = []
    sidecars = []
    for i, (value, eq, l2) in enumerate(samples):
        rows.append([value, l2, stable_code[eq.stability], eq.speed])
        name = f"coeffs_{i:04d}.txt"
        _write_coeffs(os.path.join(out, name), eq.coeffs.coeffs)
        sidecars.append(name)
    _write_csv(os.path.join(out, "branch.csv"),
               ["param", "L2norm", "stable", "c"], rows)
    _manifest(out, "equilibria", cfg,
              ["branch.csv", "manifest.json", *sidecars],
              {"parameter": parameter, "n_samples": len(rows),
               "termination": termination})
    click.echo(f"equilibria: {len(rows)} samples ({termination})")



@main.command("optimize")
@_common_opts
def optimize_cmd(config_path, out_dir):
    """Adjoint-based actuator-placement descent."""
    cfg = load_config(config_path)
    _check_keys(cfg, {"equation", "cost", "ic", "actuators", "target",
                      "targets", "dt", "max_iters"}, "config")
    p = _equation(_require(cfg, "equation", "config"))
    cost_cfg = _require(cfg, "cost", "config")
    _check_keys(cost_cfg, {"norm_kind", "gamma", "T"}, "cost")
    try:
        spec = CostSpec(cost_cfg.get("norm_kind", "C1"),
                        float(cost_cfg.get("gamma", 1.0)),
                        float(_require(cost_cfg, "T", "cost")))
    except ValueError as exc:
        raise ConfigError(str(exc))
    u0 = _initial_condition(_require(cfg, "ic", "config"), p.N)
    acts = _actuators(_require(cfg, "actuators", "config"))
    target = _target(cfg.get("target", {"kind": "zero"}), p)
    if target is not None and target.is_travelling:
        raise ConfigError("optimize supports zero or steady targets only")
    cl_targets = None
    if "targets" in cfg:
        mats = build_matrices(acts, p)
        cl_targets = _placement_targets(cfg["targets"], mats, p, target)

    problem = PlacementProblem(
        params=p, u0=u0, spec=spec, target=target,
        dt=float(cfg["dt"]) if "dt" in cfg else None,
        closed_loop_targets=cl_targets, shape=acts.shape, width=acts.width)
    history = optimize_placement(acts.positions, problem,
                                 max_iters=int(cfg.get("max_iters", 25)))

    out = _outdir(out_dir)
    m = len(history[0].positions)
    _write_csv(os.path.join(out, "placement.csv"),
               ["iter", "cost", "control_energy"] +
               [f"x{j + 1}" for j in range(m)],
               ([h.iteration, h.cost, h.control_energy, *h.positions]
                for h in history))
    final_gain = problem.gain(problem.actuators(history[-1].positions))
    _write_csv(os.path.join(out, "gain.csv"),
               [f"k{j + 1}" for j in range(final_gain.K.shape[1])],
               final_gain.K)
    _manifest(out, "optimize", cfg,
              ["placement.csv", "gain.csv", "manifest.json"],
              {"iterations": len(history) - 1,
               "initial_cost": history[0].cost,
               "final_cost": history[-1].cost})
    click.echo(f"optimize: cost {history[0].cost:.6g} -> "
               f"{history[-1].cost:.6g} in {len(history) - 1} steps")



@main.command("coupled")
@_common_opts
def coupled_cmd(config_path, out_dir):
    """Coupled two-field KS run (free or closed-loop)."""
    cfg = load_config(config_path)
    _check_keys(cfg, {"coupled", "stepper", "ic1", "ic2", "actuators1",
                      "actuators2", "target", "targets", "gamma",
                      "grid_points"}, "config")
    ccfg = _require(cfg, "coupled", "config")
    _check_keys(ccfg, {"nu", "alpha1", "alpha2", "N"}, "coupled")
    try:
        p = cp.CoupledParams(nu=float(_require(ccfg, "nu", "coupled")),
                             alpha1=float(ccfg.get("alpha1", 0.0)),
                             alpha2=float(ccfg.get("alpha2", 0.0)),
                             N=int(ccfg.get("N", 32)))
    except ValueError as exc:
        raise ConfigError(str(exc))
    stepper = _stepper(_require(cfg, "stepper", "config"), p.nu)
    U0 = cp.CoupledField(_initial_condition(_require(cfg, "ic1", "config"), p.N),
                         _initial_condition(_require(cfg, "ic2", "config"), p.N))
    M = int(cfg.get("grid_points", 256))

    target = None
    controlled = "actuators1" in cfg
    if "target" in cfg:
        tcfg = cfg["target"]
        _check_keys(tcfg, {"kind", "seed_sines1", "seed_cosines1",
                           "seed_sines2", "seed_cosines2"}, "target")
        kind = _require(tcfg, "kind", "target")
        if kind == "steady":
            seed = cp.CoupledField(
                SpectralField.from_modes(p.N,
                                         sines=_modes(tcfg.get("seed_sines1", {})),
                                         cosines=_modes(tcfg.get("seed_cosines1", {}))),
                SpectralField.from_modes(p.N,
                                         sines=_modes(tcfg.get("seed_sines2", {})),
                                         cosines=_modes(tcfg.get("seed_cosines2", {}))))
            try:
                target = cp.coupled_steady_state(seed, p)
            except NewtonError as exc:
                raise ConfigError(f"coupled steady solve failed: {exc}")
        elif kind != "zero":
            raise ConfigError(f"unknown coupled target kind {kind!r}")

    out = _outdir(out_dir)
    outputs = ["trajectory.csv", "manifest.json"]
    extra: dict = {"unstable_counts": cp.coupled_unstable_count(p)}
    if controlled:
        acts1 = _actuators(_require(cfg, "actuators1", "config"), "actuators1")
        acts2 = _actuators(_require(cfg, "actuators2", "config"), "actuators2")
        targets = None
        if "targets" in cfg:
            _check_keys(cfg["targets"], {"uniform"}, "targets")
            mats = cp.coupled_matrices(acts1, acts2, p)
            targets = np.full(mats.A_u.shape[0], float(cfg["targets"]["uniform"]))
        try:
            gain, traj = cp.coupled_feedback(p, acts1, acts2, U0, stepper,
                                             target=target, targets=targets)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ConfigError(str(exc))
        header = (["t"] + [f"u1_f{j + 1}" for j in range(acts1.m)]
                  + [f"u2_f{j + 1}" for j in range(acts2.m)])
        _write_csv(os.path.join(out, "controls.csv"), header,
                   ([t, *f] for t, f in zip(traj.times, traj.controls)))
        outputs.append("controls.csv")
        _, dV, flags = cp.coupled_lyapunov_monitor(traj, target)
        _write_monitor(os.path.join(out, "monitor.csv"), traj.times, dV,
                       np.nonzero(flags)[0])
        outputs.append("monitor.csv")
        ref = target.pack() if target is not None else 0.0
        resid = np.linalg.norm(traj.states - ref, axis=1)
        extra["final_residual"] = float(resid[-1])
        extra["lyapunov_violations"] = int(flags.sum())
    else:
        gamma = float(cfg.get("gamma", 1.0))
        traj = cp.coupled_simulate(U0, p, None, stepper)
        cost, energy = cp.coupled_cost(traj, target, gamma)
        extra["cost"] = cost
        extra["peak_norm_sum"] = cp.coupled_boundedness_monitor(
            traj, cp.coupled_default_ceiling(p))

    x = _grid(M)
    header = (["t"] + [f"u1_x{j}" for j in range(M)]
              + [f"u2_x{j}" for j in range(M)])
    rows = ([t, *eval_physical(f.u1, x), *eval_physical(f.u2, x)]
            for t, f in ((traj.times[i], traj.field(i))
                         for i in range(len(traj.times))))
    _write_csv(os.path.join(out, "trajectory.csv"), header, rows)
    _manifest(out, "coupled", cfg, outputs, extra)
    click.echo(f"coupled: done ({'controlled' if controlled else 'free'})")



@main.command("robustness")
@_common_opts
def robustness_cmd(config_path, out_dir):
    """Margin report and model-mismatch closed-loop runs.

    The controller is built from the 'model' equation; the plant and the
    target wave use the 'plant' equation.
    """
    cfg = load_config(config_path)
    _check_keys(cfg, {"model", "plant", "stepper", "ic", "actuators",
                      "block_size", "targets", "target", "eps",
                      "grid_points"}, "config")
    model = _equation(_require(cfg, "model", "config"), "model")
    plant = _equation(cfg.get("plant", cfg["model"]), "plant")
    if model.N != plant.N:
        raise ConfigError("model and plant must share the truncation N")
    stepper = _stepper(_require(cfg, "stepper", "config"), plant.nu)
    u0 = _initial_condition(_require(cfg, "ic", "config"), model.N)
    acts = _actuators(_require(cfg, "actuators", "config"))
    target = _target(cfg.get("target", {"kind": "zero"}),
                     plant) if "target" in cfg else None
    M = int(cfg.get("grid_points", 256))

    block = cfg.get("block_size")
    mats = build_matrices(acts, model, int(block) if block is not None else None)
    targets = _placement_targets(cfg.get("targets", {}), mats, model, target)
    try:
        gain = place_poles(mats, targets)
    except np.linalg.LinAlgError as exc:
        raise ConfigError(str(exc))

    A = linear_operator(model)
    B = acts.matrix(model.N)
    margin = closed_loop_margin(A, B, gain.K)
    report = {"zeta": margin.zeta, "lower_bound": margin.lower_bound,
              "omega_star": margin.omega_star,
              "boundary_warning": margin.boundary_warning}
    if "eps" in cfg:
        _check_keys(cfg["eps"], {"eps1", "eps2"}, "eps")
        e1 = float(cfg["eps"].get("eps1", 0.0))
        e2 = float(cfg["eps"].get("eps2", 0.0))
        norm, ok = uncertainty_norm(e1, e2, model.N, margin.zeta)
        report["uncertainty_norm"] = norm
        report["stability_guaranteed"] = bool(ok)

    traj = simulate(u0, plant, feedback_law(gain, model, target), stepper)
    if target is None:
        resid = traj.l2_norms()
    elif target.is_travelling:
        resid = np.array([best_phase_residual(s, translate(
            target.coeffs, target.speed * t))[0]
            for t, s in zip(traj.times, traj.states)])
    else:
        resid = np.linalg.norm(traj.states - target.coeffs.coeffs, axis=1)

    out = _outdir(out_dir)
    _write_json(os.path.join(out, "margin.json"), report)
    _write_trajectory(os.path.join(out, "trajectory.csv"), traj, M)
    _write_csv(os.path.join(out, "residual.csv"), ["t", "residual"],
               zip(traj.times, resid))
    _manifest(out, "robustness", cfg,
              ["margin.json", "trajectory.csv", "residual.csv",
               "manifest.json"],
              {"final_residual": float(resid[-1])})
    click.echo(f"robustness: zeta {margin.zeta:.4g}, "
               f"final residual {resid[-1]:.4g}")



if __name__ == "__main__":
    main()
