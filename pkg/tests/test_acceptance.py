"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL`` line (visible even
without ``-s``) and then asserts, so failures stay failures.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from asymp.cfr import CfrConfig, CfrState, cfr_iteration, game_value_x, run_cfr
from asymp.cli import main
from asymp.efg import X, Y, nash_conv_efg
from asymp.experiments import registry_lookup
from asymp.games import MatrixGame, nash_conv, project_simplex
from asymp.gda import Algorithm, SolverConfig, run_solver
from asymp.perturbation import Mode, PerturbationConfig, mu_sweep, solve_perturbed

from conftest import simplex_grid

X_STAR_BRPS = np.array([0.2, 0.6, 0.2])


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, elapsed, limit=None):
        within = limit is None or elapsed < limit
        status = "PASS" if ok and within else "FAIL"
        budget = f" (limit {limit:g} s)" if limit is not None else ""
        with capsys.disabled():
            print(f"\n[criterion {n}] {status}: {detail}; {elapsed:.2f} s{budget}")
        assert ok, detail
        assert within, f"runtime {elapsed:.2f} s exceeds {limit} s"
    return emit


def test_criterion_01_critical_mu_exact(report, capsys):
    t0 = time.perf_counter()
    rc_r = main(["critical-mu", "bmp", "--rational"])
    rational = capsys.readouterr().out.splitlines()[0].split("\t")[1]
    rc_f = main(["critical-mu", "bmp"])
    value = float(capsys.readouterr().out.splitlines()[0].split("\t")[1])
    elapsed = time.perf_counter() - t0
    ok = rc_r == rc_f == 0 and Fraction(rational) == Fraction(4, 3) and abs(value - 4 / 3) <= 1e-12
    report(1, ok, f"rational {rational}, float {value!r}", elapsed, 1.0)


def test_criterion_02_symmetric_shift(report):
    bmp = registry_lookup("bmp")
    target = np.array([5 / 8, 3 / 8])
    t0 = time.perf_counter()
    dists = {mu: np.linalg.norm(solve_perturbed(bmp, PerturbationConfig.of("symmetric", mu),
                                                tol=1e-10).x_star - target)
             for mu in (0.5, 1.0, 2.0, 4 / 3)}
    elapsed = time.perf_counter() - t0
    ok = all(dists[mu] > 1e-4 for mu in (0.5, 1.0, 2.0)) and dists[4 / 3] <= 1e-6
    detail = ", ".join(f"mu={mu:.4g}: {d:.3e}" for mu, d in dists.items())
    report(2, ok, f"||x^mu - x*|| {detail}", elapsed, 30.0)


def test_criterion_03_antisymmetric_impossibility(report):
    brps = registry_lookup("brps")
    t0 = time.perf_counter()
    entries = mu_sweep(brps, Mode.SYMMETRIC, [0.5, 1.0, 2.0, 4.0])
    elapsed = time.perf_counter() - t0
    ok = all(e.converged and e.exploitability > 1e-3 for e in entries)
    detail = ", ".join(f"mu={e.mu:g}: {e.exploitability:.4f}" for e in entries)
    report(3, ok, f"symmetric exploitability {detail}", elapsed, 30.0)


def test_criterion_04_asymmetric_invariance(report):
    brps = registry_lookup("brps")
    t0 = time.perf_counter()
    entries = mu_sweep(brps, Mode.ASYMMETRIC_X, [0.5, 1.0, 2.0, 4.0])
    elapsed = time.perf_counter() - t0
    small, big = entries[:3], entries[3]
    ok = all(e.converged for e in entries) and all(e.exploitability <= 1e-6 for e in small) \
        and big.exploitability > 1e-3
    detail = ", ".join(f"mu={e.mu:g}: {e.exploitability:.3e}" for e in entries)
    report(4, ok, f"asymmetric exploitability {detail}", elapsed, 60.0)


def test_criterion_05_asymp_gda_last_iterate(report):
    brps = registry_lookup("brps")
    t0 = time.perf_counter()
    pert = PerturbationConfig.of(Mode.ASYMMETRIC_X, 1.0)
    eq = solve_perturbed(brps, pert)
    cfg = SolverConfig(Algorithm.ASYMP_GDA, eta=0.01, perturbation=pert, max_iters=1_000_000,
                       record_every=1, seed=0)
    traj = run_solver(brps, cfg, perturbed_eq=eq)
    elapsed = time.perf_counter() - t0
    final = np.linalg.norm(traj.x[-1] - X_STAR_BRPS)
    sq = traj.dist_perturbed ** 2
    worst = float(np.max(np.diff(sq)))
    ok = final <= 1e-3 and worst <= 1e-12
    report(5, ok, f"final ||x^T - x*|| = {final:.3e}, max increase of squared distance {worst:.3e}",
           elapsed, 120.0)


def test_criterion_06_baseline_separation(report):
    brps = registry_lookup("brps")
    t0 = time.perf_counter()
    gda = run_solver(brps, SolverConfig.make("gda", eta=0.01, max_iters=1_000_000, seed=0))
    symp = run_solver(brps, SolverConfig.make("symp-gda", mu=1.0, eta=0.01, max_iters=1_000_000,
                                              record_every=1000, seed=0))
    elapsed = time.perf_counter() - t0
    floor = float(np.min(gda.nash_conv[gda.t > 1000]))
    sym_dist = np.linalg.norm(symp.x[-1] - X_STAR_BRPS)
    ok = floor >= 0.05 and sym_dist >= 0.01
    report(6, ok, f"GDA min NashConv after 1e3 = {floor:.4f}, SymP-GDA final distance {sym_dist:.4f}",
           elapsed, 120.0)


def test_criterion_07_rate_shape(report):
    brps = registry_lookup("brps")
    t0 = time.perf_counter()
    pert = PerturbationConfig.of(Mode.ASYMMETRIC_X, 1.0)
    x_mu = solve_perturbed(brps, pert).x_star
    cfg = SolverConfig(Algorithm.ASYMP_GDA, eta=0.01, perturbation=pert, max_iters=100_000, seed=0)
    traj = run_solver(brps, cfg)
    d2 = np.sum((traj.x - x_mu) ** 2, axis=1)
    early = np.arange(1, 101)
    C = float(np.max(early * d2[early]))  # smallest C with d2 <= C/t on t = 1..100
    checks = {t: (d2[t], C / t) for t in (1_000, 10_000, 100_000)}
    elapsed = time.perf_counter() - t0
    ok = all(v <= bound for v, bound in checks.values())
    detail = ", ".join(f"t={t}: {v:.2e} <= {b:.2e}" for t, (v, b) in checks.items())
    report(7, ok, f"fitted C = {C:.3f}; {detail}", elapsed)


def test_criterion_08_ada_variant(report):
    brps = registry_lookup("brps")
    t0 = time.perf_counter()
    final = {}
    for algo in ("ada-asymp-gda", "ada-symp-gda"):
        cfg = SolverConfig.make(algo, mu=5.0, eta=0.01, t_sigma=10_000, max_iters=100_000,
                                record_every=100_000, seed=0)
        final[algo] = float(run_solver(brps, cfg).nash_conv[-1])
    elapsed = time.perf_counter() - t0
    ok = final["ada-asymp-gda"] <= 1e-2 and final["ada-asymp-gda"] < final["ada-symp-gda"]
    report(8, ok, f"final NashConv Ada-AsymP {final['ada-asymp-gda']:.3e}, "
                  f"Ada-SymP {final['ada-symp-gda']:.3e}", elapsed, 120.0)


def test_criterion_09_cfr_correctness(report):
    kuhn = registry_lookup("kuhn")
    t0 = time.perf_counter()
    state = CfrState.initial(kuhn)
    recs = run_cfr(kuhn, CfrConfig.make("cfr+", iterations=10_000, eval_every=10_000), state=state)
    value = game_value_x(kuhn, *state.average())
    elapsed = time.perf_counter() - t0
    nc = recs[-1].nashconv_avg
    ok = nc <= 1e-3 and abs(value + 1 / 18) <= 1e-3
    report(9, ok, f"average NashConv {nc:.3e}, value {value:.7f} vs {-1 / 18:.7f}", elapsed, 120.0)


def test_criterion_10_asymp_cfr_ordering(report):
    kuhn = registry_lookup("kuhn")
    t0 = time.perf_counter()
    runs = {v: run_cfr(kuhn, CfrConfig.make(v, mu=0.01, iterations=10_000, eval_every=100))
            for v in ("asymp-cfr+", "symp-cfr+")}
    elapsed = time.perf_counter() - t0
    asym = {r.t: r.nashconv_last for r in runs["asymp-cfr+"]}
    sym_final = runs["symp-cfr+"][-1].nashconv_last
    ok = asym[10_000] < sym_final and asym[10_000] < asym[100]
    report(10, ok, f"last-iterate NashConv at 1e4: AsymP {asym[10_000]:.4f}, SymP {sym_final:.4f}; "
                   f"AsymP at 1e2 {asym[100]:.4f}", elapsed, 180.0)


def test_criterion_11_reductions(report):
    t0 = time.perf_counter()
    ok = True
    for name in ("bmp", "brps", "mne"):
        g = registry_lookup(name)
        zero = SolverConfig(Algorithm.ASYMP_GDA, perturbation=PerturbationConfig(Mode.ASYMMETRIC_X, 0.0),
                            max_iters=100, seed=3)
        plain = SolverConfig.make("gda", max_iters=100, seed=3)
        a, b = run_solver(g, zero), run_solver(g, plain)
        ok &= a.x.tobytes() == b.x.tobytes() and a.y.tobytes() == b.y.tobytes()
    kuhn = registry_lookup("kuhn")
    s1, s2 = CfrState.initial(kuhn), CfrState.initial(kuhn)
    c1 = CfrConfig.make("asymp-cfr+", mu=0.0, allow_zero_mu=True)
    c2 = CfrConfig.make("cfr+")
    for _ in range(100):
        cfr_iteration(kuhn, s1, c1)
        cfr_iteration(kuhn, s2, c2)
        for p in (X, Y):
            for I in s1.players[p].regrets:
                ok &= s1.players[p].regrets[I].tobytes() == s2.players[p].regrets[I].tobytes()
                ok &= s1.players[p].strategy_sum[I].tobytes() == s2.players[p].strategy_sum[I].tobytes()
    elapsed = time.perf_counter() - t0
    report(11, bool(ok), "AsymP-GDA(mu=0) == GDA on bmp/brps/mne and AsymP-CFR+(mu=0) == CFR+ on kuhn, "
                         "100 iterations, bit-exact", elapsed, 10.0)


def test_criterion_12_property_suites(report, tmp_path):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    # projection vs grid oracle on the 3-simplex
    grid = simplex_grid(3, 1e-3)
    worst_gap = -np.inf
    for v in rng.normal(size=(100, 3)):
        grid_best = np.sqrt(np.min(np.sum((grid - v) ** 2, axis=1)))
        worst_gap = max(worst_gap, np.linalg.norm(project_simplex(v) - v) - grid_best)
    proj_ok = worst_gap <= 2e-3
    # regret nonnegativity after every CFR+ iteration
    kuhn = registry_lookup("kuhn")
    state = CfrState.initial(kuhn)
    cfg = CfrConfig.make("cfr+")
    min_r = np.inf
    for _ in range(1000):
        cfr_iteration(kuhn, state, cfg)
        min_r = min(min_r, min(rs.min_regret() for rs in state.players))
    regret_ok = min_r >= 0.0
    # NashConv >= 0 on random profiles of matrix games and kuhn
    nc_min = np.inf
    for _ in range(300):
        m, n = rng.integers(1, 6, size=2)
        g = MatrixGame(rng.normal(size=(m, n)))
        nc_min = min(nc_min, nash_conv(g, rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))))
    for _ in range(30):
        sx = {I: rng.dirichlet(np.ones(2)) for I in kuhn.player_infosets(X)}
        sy = {I: rng.dirichlet(np.ones(2)) for I in kuhn.player_infosets(Y)}
        nc_min = min(nc_min, nash_conv_efg(kuhn, sx, sy))
    nc_ok = nc_min >= 0.0
    # deterministic reruns produce byte-identical CSV
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for out in outs:
        main(["matrix-run", "brps", "--algo", "asymp-gda", "--iters", "2000", "--seeds", "0-4",
              "--out", str(out)])
    for out in outs:
        main(["efg-run", "kuhn", "--iters", "200", "--out", str(out.with_suffix(".efg.csv"))])
    det_ok = outs[0].read_bytes() == outs[1].read_bytes() and \
        outs[0].with_suffix(".efg.csv").read_bytes() == outs[1].with_suffix(".efg.csv").read_bytes()
    elapsed = time.perf_counter() - t0
    ok = proj_ok and regret_ok and nc_ok and det_ok
    report(12, ok, f"projection gap to grid {worst_gap:.2e}, min CFR+ regret {min_r:g}, "
                   f"min NashConv {nc_min:.3e}, byte-identical reruns {det_ok}", elapsed, 60.0)
