"""Acceptance suite: each test checks one shipping criterion at its stated
tolerance and prints a PASS/FAIL line (visible through pytest capture).

Run with `pytest tests/test_acceptance.py -v`.
"""

import math
import sys
import time

import numpy as np
import pytest

from rescrl import (AlgoConfig, Policy, QuadraticCost, build_grid_monitor,
                    build_monitor3, compute_regrets, dual_perturbed, evaluate_policy,
                    gen_random_cmdp, oscillation_stat, primal_value_map,
                    regret_opt_bound, regret_vio_bound, run_algorithm,
                    solve_occupancy_lp, solve_regularized, stationarity_residual,
                    visitation)
from rescrl.cli import sweep_command
from rescrl.model import env_to_dict

from conftest import random_policy, single_state_model, two_state_cycle
from test_algorithms import (START, as_state, scalar_respgpd, scalar_resopgpd)
from rescrl import MultiplierDomain, ResilientIterate, respgpd_step, resopgpd_step


def report(index: int, name: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {index} [{name}]: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    print(line, file=sys.__stdout__)


# shared instances -------------------------------------------------------------

CROSS_VALIDATION_SEEDS = range(20)
GRID_21 = np.linspace(-10.0, 10.0, 21)


@pytest.fixture(scope="module")
def cross_validation_maps():
    """V*(xi) grids for the 20 cross-validation instances (used by
    criteria 2 and 3)."""
    out = {}
    for seed in CROSS_VALIDATION_SEEDS:
        model = gen_random_cmdp(seed=seed, num_states=6, num_actions=3,
                                num_constraints=1, gamma=0.9)
        values, feasible = primal_value_map(model, GRID_21[:, None])
        out[seed] = (model, values, feasible)
    return out


@pytest.fixture(scope="module")
def paper_instance():
    """20x5 single-constraint instance with an infeasible nominal
    constraint, the regime of the convergence/oscillation figures."""
    return gen_random_cmdp(seed=1, num_states=20, num_actions=5,
                           num_constraints=1, gamma=0.9, threshold=9.0)


def test_criterion_1_closed_form_evaluation():
    t0 = time.time()
    ok = True
    details = []

    model = single_state_model(r=1.0, gamma=0.9)
    v = evaluate_policy(model, Policy.uniform(1, 1)).v_reward_rho
    ok &= abs(v - 10.0) <= 1e-10

    cycle = two_state_cycle(gamma=0.5)
    bundle = evaluate_policy(cycle, Policy.uniform(2, 1))
    ok &= abs(bundle.v_reward[0] - 4.0 / 3.0) <= 1e-10
    ok &= abs(bundle.v_reward[1] - 2.0 / 3.0) <= 1e-10

    worst_occ = worst_pd = 0.0
    rng = np.random.default_rng(2024)
    for k in range(100):
        m = gen_random_cmdp(seed=k, num_states=6, num_actions=3,
                            num_constraints=1, gamma=0.9)
        pi = random_policy(rng, 6, 3)
        pi2 = random_policy(rng, 6, 3)
        b1 = evaluate_policy(m, pi)
        d1 = visitation(m, pi).d
        occ_gap = abs((1 - m.gamma) * b1.v_reward_rho
                      - (d1[:, None] * pi.probs * m.reward).sum())
        g_gap = abs((1 - m.gamma) * b1.v_utils_rho[0]
                    - (d1[:, None] * pi.probs * m.translated[0]).sum())
        worst_occ = max(worst_occ, occ_gap, g_gap)
        b2 = evaluate_policy(m, pi2)
        d2 = visitation(m, pi2).d
        pd = (d2[:, None] * (pi2.probs - pi.probs) * b1.q_reward).sum() / (1 - m.gamma)
        worst_pd = max(worst_pd, abs((b2.v_reward_rho - b1.v_reward_rho) - pd))
    ok &= worst_occ <= 1e-7 and worst_pd <= 1e-7
    elapsed = time.time() - t0
    ok &= elapsed < 5.0
    details.append(f"occupancy {worst_occ:.1e}, perf-diff {worst_pd:.1e}, {elapsed:.1f}s")
    report(1, "closed-form evaluation", ok, "; ".join(details))
    assert ok


def test_criterion_2_oracle_cross_validation(cross_validation_maps):
    t0 = time.time()
    worst = 0.0
    flags_ok = True
    for seed, (model, values, feasible) in cross_validation_maps.items():
        for xi, value, feas in zip(GRID_21, values, feasible):
            rep = dual_perturbed(model, np.array([xi]), cap=1e4)
            flags_ok &= (rep.status == "optimal") == bool(feas)
            if feas:
                worst = max(worst, abs(rep.dual_value - value))
    elapsed = time.time() - t0
    ok = flags_ok and worst <= 1e-3 and elapsed < 120.0
    report(2, "oracle cross-validation", ok,
           f"worst gap {worst:.2e}, flags {'exact' if flags_ok else 'MISMATCH'}, "
           f"{elapsed:.0f}s")
    assert ok


def test_criterion_3_primal_function_shape(cross_validation_maps):
    monotone = concave = True
    for seed, (model, values, feasible) in cross_validation_maps.items():
        f = values[feasible]
        monotone &= bool(np.all(np.diff(f) <= 1e-6))
        if len(f) > 2:
            concave &= bool(np.all(f[1:-1] >= 0.5 * (f[:-2] + f[2:]) - 1e-6))
    ok = monotone and concave
    report(3, "V*(xi) monotone + concave", ok,
           f"monotone {monotone}, midpoint-concave {concave}")
    assert ok


def test_criterion_4_last_iterate_optimality(paper_instance):
    t0 = time.time()
    model = paper_instance
    cost = QuadraticCost(alpha=0.2)
    oracle = solve_regularized(model, cost, xi_grid_resolution=41, lambda_search=100.0)
    cfg = AlgoConfig("resopgpd", eta=0.2, horizon=20_000, cost=cost, lambda_cap=100.0,
                     trace_every=100)
    trace = run_algorithm(model, cfg)
    gap = oracle.primal_value - (trace.v_r[-1] - trace.h[-1])
    tol = 1e-2 * model.value_bound
    deficits = trace.viol[-1]
    interior = np.all(np.abs(trace.xi[-1]) < model.value_bound - 1e-9)
    residual = stationarity_residual(cost, trace.xi[-1], trace.lam[-1])
    elapsed = time.time() - t0
    ok = (abs(gap) <= tol and np.all(deficits <= 1e-3)
          and (not interior or residual <= 5e-2) and elapsed < 300.0)
    report(4, "strong duality / last-iterate optimality", ok,
           f"gap {gap:.2e} (tol {tol:.0e}), deficit {deficits.max():.1e}, "
           f"stationarity {residual:.1e}, {elapsed:.0f}s")
    assert ok


def test_criterion_5_regret_rate_and_bounds():
    t0 = time.time()
    model = gen_random_cmdp(seed=1, num_states=6, num_actions=3, num_constraints=1,
                            gamma=0.9, threshold=9.0)
    cost = QuadraticCost(alpha=0.2)
    cap = 2.0
    oracle = solve_regularized(model, cost, xi_grid_resolution=41, lambda_search=cap)
    v_h_star = oracle.dual_value  # certified upper path; conservative for bounds
    horizons = (100, 400, 1600, 6400)
    r_opts, bounds_ok = [], True
    for horizon in horizons:
        cfg = AlgoConfig("respgpd", eta=1.0 / math.sqrt(horizon), horizon=horizon,
                         cost=cost, lambda_cap=cap, trace_every=horizon)
        trace = run_algorithm(model, cfg)
        r_opt, r_vio = compute_regrets(trace, v_h_star)
        bounds_ok &= r_opt <= regret_opt_bound(1, cost.grad_lipschitz, horizon)
        bounds_ok &= r_vio <= regret_vio_bound(1, cost.grad_lipschitz, cap,
                                               model.gamma, horizon)
        r_opts.append(r_opt)
    slope = float(np.polyfit(np.log(horizons), np.log(r_opts), 1)[0])
    elapsed = time.time() - t0
    ok = bounds_ok and slope <= -0.3 and elapsed < 600.0
    report(5, "regret bounds and rate", ok,
           f"R_opt {['%.3f' % r for r in r_opts]}, slope {slope:.2f}, "
           f"bounds {'hold' if bounds_ok else 'VIOLATED'}, {elapsed:.0f}s")
    assert ok


def test_criterion_6_oscillation_dichotomy(paper_instance):
    model = paper_instance
    osc = {}
    for alpha in (0.03, 0.2, 1.0):
        cost = QuadraticCost(alpha=alpha)
        for algo in ("respgpd", "resopgpd"):
            cfg = AlgoConfig(algo, eta=0.2, horizon=2000, cost=cost, lambda_cap=100.0)
            osc[(alpha, algo)] = oscillation_stat(run_algorithm(model, cfg),
                                                  window=200)["xi_1"]
    ratio = osc[(0.03, "respgpd")] / max(osc[(0.03, "resopgpd")], 1e-300)
    small_ok = all(osc[(a, algo)] < 1e-3
                   for a in (0.2, 1.0) for algo in ("respgpd", "resopgpd"))
    ok = ratio > 10.0 and small_ok
    report(6, "oscillation dichotomy", ok,
           f"ratio@0.03 {ratio:.1f}x, large-alpha max "
           f"{max(osc[(a, g)] for a in (0.2, 1.0) for g in ('respgpd', 'resopgpd')):.1e}")
    assert ok


def test_criterion_7_monitor_resilience(tmp_path):
    t0 = time.time()
    model = build_monitor3()
    infeasible = solve_occupancy_lp(model, np.zeros(2)).status == "infeasible"

    cost = QuadraticCost(alpha=0.1)
    cfg = AlgoConfig("resopgpd", eta=0.005, horizon=100_000, cost=cost,
                     lambda_cap=100.0, trace_every=1000)
    trace = run_algorithm(model, cfg)
    deficits_ok = bool(np.all(trace.viol[-1] <= 1e-3))

    spec = {
        "parameter": "alpha",
        "values": "0.01:1:log:10",
        "base": {
            "algorithm": "resopgpd", "eta": 0.005, "T": 100_000,
            "lambda_cap": 100.0, "cost": {"kind": "quadratic", "alpha": 0.1},
            "trace_every": 1000, "env": env_to_dict(model),
        },
    }
    sweep_command(spec, str(tmp_path / "sweep"), jobs=2)
    lines = (tmp_path / "sweep" / "summary.csv").read_text().strip().split("\n")
    rows = [line.split(",") for line in lines[1:]]
    assert all(row[-1] == "" for row in rows), "sweep runs failed"
    final_xi = np.array([[float(row[1]), float(row[2])] for row in rows])
    mono = all(
        np.abs(final_xi[i + 1, j]) <= np.abs(final_xi[i, j]) * 1.05
        for i in range(len(rows) - 1) for j in range(2)
    )
    elapsed = time.time() - t0
    ok = infeasible and deficits_ok and mono and elapsed < 900.0
    report(7, "monitoring resilience", ok,
           f"infeasible-at-0 {infeasible}, final deficit {trace.viol[-1].max():.1e}, "
           f"|xi| monotone {mono}, {elapsed:.0f}s")
    assert ok


def test_criterion_8_baseline_contrast():
    model = build_grid_monitor()
    infeasible = solve_occupancy_lp(model, np.zeros(2)).status == "infeasible"
    cost = QuadraticCost(alpha=0.08)
    results = {}
    for algo in ("resopgpd", "baseline"):
        cfg = AlgoConfig(algo, eta=0.05, horizon=2000, cost=cost, lambda_cap=100.0,
                         trace_every=10)
        trace = run_algorithm(model, cfg)
        d = visitation(model, trace.final.policy).d
        area0 = model.reward.sum(axis=1) > 0
        results[algo] = {
            "v_r": float(trace.v_r[-1]),
            "mass0": float(d[area0].sum()),
            "ever_both": bool(np.any(np.all(trace.v_g >= 0.0, axis=1))),
        }
    reward_ok = results["resopgpd"]["v_r"] > results["baseline"]["v_r"]
    never_ok = not results["baseline"]["ever_both"]
    mass_ratio = results["resopgpd"]["mass0"] / max(results["baseline"]["mass0"], 1e-300)
    ok = infeasible and reward_ok and never_ok and mass_ratio >= 2.0
    report(8, "resilient vs non-resilient baseline", ok,
           f"V_r {results['resopgpd']['v_r']:.2f} vs {results['baseline']['v_r']:.2f}, "
           f"area-mass ratio {mass_ratio:.1f}x, baseline-never-feasible {never_ok}")
    assert ok


def test_criterion_9_step_oracles():
    from conftest import hand_instance
    model = hand_instance()
    eta, alpha, cap = 0.1, 0.5, 2.0
    cost = QuadraticCost(alpha)
    domain = MultiplierDomain(cap)

    # one simultaneous step from a non-trivial state
    state = as_state((START, -0.3, 0.4))
    out = respgpd_step(model, cost, state, eta, domain)
    probs, xi, lam = scalar_respgpd(START, -0.3, 0.4, eta, alpha, cap)
    err_pg = max(np.abs(out.policy.probs - np.array(probs)).max(),
                 abs(out.xi[0] - xi), abs(out.lam[0] - lam))

    # two optimistic steps from the standard initialization
    uniform = ((0.5, 0.5), (0.5, 0.5))
    inter, anchor = (uniform, 0.0, 0.0), (uniform, 0.0, 0.0)
    st = as_state(inter, anchor)
    for _ in range(2):
        st = resopgpd_step(model, cost, st, eta, domain)
        inter, anchor = scalar_resopgpd(inter, anchor, eta, alpha, cap)
    err_opg = max(np.abs(st.policy.probs - np.array(inter[0])).max(),
                  abs(st.xi[0] - inter[1]), abs(st.lam[0] - inter[2]),
                  np.abs(st.policy_hat.probs - np.array(anchor[0])).max(),
                  abs(st.xi_hat[0] - anchor[1]), abs(st.lam_hat[0] - anchor[2]))

    ok = err_pg <= 1e-12 and err_opg <= 1e-12
    report(9, "algorithm-step oracles", ok,
           f"one-step err {err_pg:.1e}, two-step err {err_opg:.1e}")
    assert ok
