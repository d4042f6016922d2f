import math

import numpy as np
import pytest

from otslice import (
    BudgetExceeded,
    Scheme,
    UnsupportedDimension,
    direction_ascent,
    make_discrete,
    max_sliced,
    max_sliced_certified,
    moment_p,
    project,
    projected_cost_gradient,
    projected_distance,
    sliced_wasserstein,
    to_measure1d,
    wasserstein_1d,
    wasserstein_exact,
)
from otslice.maxsliced import _distance_batch
from conftest import random_measure, random_pair


def point_mass(x):
    return make_discrete([list(x)], [1.0])


def grid_max(mu, nu, p, count=100_000):
    theta = np.linspace(0.0, math.pi, count, endpoint=False)
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    return float(_distance_batch(mu, nu, p, dirs).max())


class TestAscent:
    def test_two_point_masses_converge(self):
        a, b = point_mass((0.0, 0.0)), point_mass((0.6, 0.8))
        v0 = np.array([1.0, 0.2])  # not orthogonal to the gap direction
        v, val = direction_ascent(a, b, 1.0, v0, max_iters=200)
        assert val == pytest.approx(1.0, abs=1e-8)
        assert abs(abs(v @ np.array([0.6, 0.8])) - 1.0) <= 1e-6

    def test_identical_measures(self, rng):
        mu = random_measure(rng, 2)
        _, val = direction_ascent(mu, mu, 2.0, np.array([1.0, 0.0]))
        assert val == 0.0

    def test_objective_nondecreasing_vs_start(self, rng):
        for _ in range(10):
            mu, nu = random_pair(rng, 3, max_atoms=10)
            v0 = rng.standard_normal(3)
            start = projected_distance(mu, nu, 2.0, v0)
            _, val = direction_ascent(mu, nu, 2.0, v0)
            assert val >= start - 1e-12


class TestGradient:
    def test_matches_central_differences(self, rng):
        # nondegenerate directions: ties in the projected order are avoided
        # by nudging v away from any that appear
        checked = 0
        h = 1e-5
        while checked < 20:
            mu, nu = random_pair(rng, 3, max_atoms=8)
            p = float(rng.choice([1.0, 2.0, 3.0]))
            v = rng.standard_normal(3)
            v /= np.linalg.norm(v)
            proj = np.concatenate([mu.points @ v, nu.points @ v])
            if np.min(np.abs(np.diff(np.sort(proj)))) < 50 * h:
                continue
            value, grad = projected_cost_gradient(mu, nu, p, v)
            num = np.empty(3)
            for k in range(3):
                e = np.zeros(3)
                e[k] = h
                fp, _ = projected_cost_gradient(mu, nu, p, v + e)
                fm, _ = projected_cost_gradient(mu, nu, p, v - e)
                num[k] = (fp - fm) / (2 * h)
            scale = max(1.0, float(np.linalg.norm(num)))
            assert np.linalg.norm(grad - num) / scale <= 1e-4
            checked += 1


class TestHeuristic:
    def test_two_point_masses(self):
        a, b = point_mass((1.0, -2.0)), point_mass((3.0, 1.0))
        res = max_sliced(a, b, 1.0, starts=4, seed=0)
        assert res.lower == pytest.approx(math.hypot(2.0, 3.0), abs=1e-8)
        assert res.mode == "heuristic"
        assert res.upper == res.lower

    def test_dominates_axis_projections(self, rng):
        for _ in range(10):
            mu, nu = random_pair(rng, 3, max_atoms=10)
            res = max_sliced(mu, nu, 1.0, starts=4, seed=1)
            for k in range(3):
                e = np.zeros(3)
                e[k] = 1.0
                axis = wasserstein_1d(project(mu, e), project(nu, e), 1.0)
                assert res.lower >= axis - 1e-9

    def test_below_full_distance(self, rng):
        for _ in range(10):
            mu, nu = random_pair(rng, 2, max_atoms=10)
            p = float(rng.choice([1.0, 2.0]))
            res = max_sliced(mu, nu, p, starts=4, seed=2)
            assert res.lower <= wasserstein_exact(mu, nu, p).primal_value + 1e-9

    def test_d1_trivial_sphere(self, rng):
        mu = random_measure(rng, 1)
        nu = random_measure(rng, 1)
        res = max_sliced(mu, nu, 2.0, starts=1, seed=0)
        assert res.lower == wasserstein_1d(to_measure1d(mu), to_measure1d(nu), 2.0)

    def test_v_star_achieves_lower(self, rng):
        mu, nu = random_pair(rng, 3, max_atoms=10)
        res = max_sliced(mu, nu, 2.0, starts=4, seed=3)
        assert projected_distance(mu, nu, 2.0, res.v_star) == pytest.approx(
            res.lower, abs=1e-10
        )


class TestCertified:
    def test_two_point_bracket(self):
        a, b = point_mass((0.2, -0.4)), point_mass((0.8, 0.5))
        res = max_sliced_certified(a, b, 1.0, tol=1e-6)
        gap = math.hypot(0.6, 0.9)
        assert res.lower - 1e-9 <= gap <= res.upper + 1e-9
        assert res.upper - res.lower <= 1e-6
        assert res.mode == "certified"

    def test_identical_measures_bracket(self, rng):
        mu = random_measure(rng, 2)
        res = max_sliced_certified(mu, mu, 2.0, tol=1e-6)
        assert res.lower == 0.0
        assert res.upper <= 1e-6

    def test_brackets_contain_grid_oracle(self, rng):
        for _ in range(10):
            mu, nu = random_pair(rng, 2, max_atoms=12)
            p = float(rng.choice([1.0, 2.0]))
            res = max_sliced_certified(mu, nu, p, tol=1e-6)
            bf = grid_max(mu, nu, p)
            L = moment_p(mu, p) + moment_p(nu, p)
            # the grid can miss the peak by up to L * (half grid step)
            assert res.lower - L * (math.pi / 100_000) <= bf <= res.upper + 1e-9

    def test_lower_below_full_distance(self, rng):
        for d in (2, 3):
            for _ in range(5):
                mu, nu = random_pair(rng, d, max_atoms=10)
                res = max_sliced_certified(mu, nu, 1.0, tol=1e-4)
                w = wasserstein_exact(mu, nu, 1.0).primal_value
                assert res.lower <= w + 1e-9
                assert res.upper >= res.lower

    def test_certified_dominates_heuristic(self, rng):
        for _ in range(5):
            mu, nu = random_pair(rng, 2, max_atoms=10)
            cert = max_sliced_certified(mu, nu, 2.0, tol=1e-5)
            heur = max_sliced(mu, nu, 2.0, starts=8, seed=4)
            assert cert.upper >= heur.lower - 1e-9

    def test_d1_exact(self, rng):
        mu = random_measure(rng, 1)
        nu = random_measure(rng, 1)
        res = max_sliced_certified(mu, nu, 1.0, tol=1e-9)
        assert res.lower == res.upper
        assert res.lower == wasserstein_1d(to_measure1d(mu), to_measure1d(nu), 1.0)

    def test_unsupported_dimension(self, rng):
        mu, nu = random_pair(rng, 4, max_atoms=6)
        with pytest.raises(UnsupportedDimension):
            max_sliced_certified(mu, nu, 1.0, tol=1e-3)

    def test_budget_exceeded_carries_partial(self, rng):
        mu, nu = random_pair(rng, 3, max_atoms=10)
        with pytest.raises(BudgetExceeded) as exc_info:
            max_sliced_certified(mu, nu, 1.0, tol=1e-10, eval_budget=200)
        partial = exc_info.value.result
        assert partial is not None
        assert partial.lower <= partial.upper
        assert partial.mode == "certified"

    def test_distinct_measures_positive(self, rng):
        for _ in range(5):
            mu, nu = random_pair(rng, 2, max_atoms=8)
            res = max_sliced_certified(mu, nu, 1.0, tol=1e-5)
            assert res.lower > 0.0  # distinct random clouds always separate

    def test_tiny_upper_implies_equal_axis_projections(self, rng):
        # same measure under two representations: an atom split in half
        mu = random_measure(rng, 2, max_atoms=6)
        pts = np.vstack([mu.points, mu.points[:1]])
        w = np.concatenate([mu.weights, [0.0]])
        w[0] /= 2.0
        w[-1] = w[0]
        nu = make_discrete(pts, w)
        res = max_sliced_certified(mu, nu, 1.0, tol=1e-8)
        assert res.upper < 1e-8
        for e in np.eye(2):
            gap = wasserstein_1d(project(mu, e), project(nu, e), 1.0)
            assert gap <= 1e-9


class TestSandwich:
    def test_chain_with_sliced_and_full(self, rng):
        for d in (2, 3):
            for _ in range(8):
                mu, nu = random_pair(rng, d, max_atoms=10)
                p = float(rng.choice([1.0, 2.0]))
                cert = max_sliced_certified(mu, nu, p, tol=1e-4)
                res = 2048 if d == 2 else 8192
                sw = sliced_wasserstein(mu, nu, p, Scheme.quadrature(res), normalized=True)
                w = wasserstein_exact(mu, nu, p).primal_value
                assert sw.value <= cert.upper + 1e-3  # quadrature slack
                assert cert.lower <= w + 1e-9

    def test_sqrt_d_ratio_can_exceed_for_max_sliced(self):
        # W_2 <= sqrt(d) * maxSW_2 holds for the subspace-robust (inf-sup)
        # quantity but NOT for the max-sliced (sup-inf) metric: this frozen
        # instance has a rigorous ratio W_2 / maxSW_2_upper > sqrt(3).
        # Verified independently: full W_2 and the projected 1D value both
        # reproduce under a dense-LP solver; a 2e6-direction grid and 500
        # ascent restarts agree with the certified bracket.
        mu = make_discrete(_CE_MU_POINTS, _CE_MU_WEIGHTS)
        nu = make_discrete(_CE_NU_POINTS, _CE_NU_WEIGHTS)
        cert = max_sliced_certified(mu, nu, 2.0, tol=1e-5)
        w = wasserstein_exact(mu, nu, 2.0).primal_value
        assert w == pytest.approx(1.2821600349377138, rel=1e-9)
        assert cert.upper == pytest.approx(0.72576, abs=5e-4)
        assert w / cert.upper > math.sqrt(3) * (1.0 + 1e-3)


_CE_MU_POINTS = [
    [-1.3258723666881693, 0.4267405017311268, 0.3581254480412572],
    [-0.6598440421299452, -0.5586169936597816, -1.093405474806862],
    [-0.9894196144989964, -0.3479788820664245, -0.06012042750126488],
    [0.8732174075665686, 0.5613303996435267, -0.5457805445492988],
    [0.8097528238742074, -1.9486359745985573, -0.3929869104035927],
    [0.4826859939822945, 1.4741208618445958, -1.6445230276621392],
    [-1.2079064814818765, -0.4991405569808023, -1.5713257032487187],
    [-0.04745187076638793, 0.25963026908314096, -0.2690300925532661],
    [-0.8837856311005597, 1.8751841695015485, 1.5750578559633508],
    [0.3046682601289299, 1.4664767952041904, -0.7931273699000598],
]
_CE_MU_WEIGHTS = [
    0.057356968880708355, 0.045640683570217104, 0.10596158301444386, 0.17564162524896654,
    0.09171591938073849, 0.04623722496240696, 0.0543954029870597, 0.2692222531652308,
    0.09388575851797899, 0.059942580272249225,
]
_CE_NU_POINTS = [
    [0.42109296809531144, 0.0675027264041967, -0.6297565751870867],
    [-2.8555211668904388, 0.3188637707333827, 0.0029582766718437635],
    [-0.1161525671821342, -0.39725480618262765, 1.8845818284840155],
    [-0.08672774762331203, -0.08163858117365687, -0.0034375463199796223],
    [-1.0720781510380688, -0.5364197001623904, -0.34425995847746044],
    [0.3167639100769005, 0.5982864231822282, -0.7553040280098665],
    [1.0568181132060246, -2.3900877811963137, 1.5139097918565758],
    [0.6582662605589961, 0.8262739773412575, 0.13927932541063118],
]
_CE_NU_WEIGHTS = [
    0.19263713684186484, 0.06439817905595324, 0.039205478018974754, 0.2736142611758478,
    0.10943583048646238, 0.009340297334624784, 0.05951275550975101, 0.2518560615765212,
]
