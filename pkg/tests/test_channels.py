import math

import numpy as np
import pytest
from scipy.integrate import quad

from delab import measure as M
from delab.channels import ChannelError, ChannelFamily


def test_bec_limits(grid_small):
    fam = ChannelFamily("bec", grid_small)
    assert fam.density_from_param(0.0).atom1 == 1.0
    assert fam.density_from_param(1.0).atom0 == 1.0
    assert abs(M.entropy(fam.density_from_param(0.43)) - 0.43) < 1e-15


def test_bsc_limits(grid_small):
    fam = ChannelFamily("bsc", grid_small)
    assert fam.density_from_param(0.5).atom0 == 1.0
    assert fam.density_from_param(0.0).atom1 == 1.0


def test_bawgn_limits(grid_mid):
    fam = ChannelFamily("bawgn", grid_mid)
    sharp = fam.density_from_param(0.05)
    assert M.entropy(sharp) < 1e-6
    noisy = fam.density_from_param(500.0)
    assert M.entropy(noisy) > 0.999


def test_param_validation(grid_small):
    with pytest.raises(ChannelError):
        ChannelFamily("bsc", grid_small).density_from_param(0.7)
    with pytest.raises(ChannelError):
        ChannelFamily("bawgn", grid_small).density_from_param(-1.0)
    with pytest.raises(ChannelError):
        ChannelFamily("bec", grid_small).density_from_param(1.2)
    with pytest.raises(ChannelError):
        ChannelFamily("quaternary", grid_small)


def test_bsc_entropy_inversion(grid_full):
    fam = ChannelFamily("bsc", grid_full)
    p, iters = fam.param_from_entropy(0.416)
    # h2(p) = 0.416 has the closed-form-free root p ~ 0.0840
    assert abs(p - 0.0840) < 2e-4
    assert iters > 0


@pytest.mark.parametrize("kind", ["bec", "bsc", "bawgn"])
def test_entropy_round_trip(kind, grid_mid):
    fam = ChannelFamily(kind, grid_mid)
    for h in np.linspace(0.02, 0.98, 50):
        c = fam.density_from_entropy(float(h), tol=1e-8)
        assert abs(M.entropy(c) - h) < 1e-6


@pytest.mark.parametrize("kind", ["bec", "bsc", "bawgn"])
def test_family_ordered_by_degradation(kind, grid_mid):
    fam = ChannelFamily(kind, grid_mid)
    hs = np.linspace(0.05, 0.95, 21)
    densities = [fam.density_from_entropy(float(h)) for h in hs]
    for worse, better in zip(densities[1:], densities[:-1]):
        assert M.is_degraded(worse, better, slack=1e-6)


@pytest.mark.parametrize("kind", ["bec", "bsc", "bawgn"])
def test_bhattacharyya_monotone_in_entropy(kind, grid_mid):
    fam = ChannelFamily(kind, grid_mid)
    hs = np.linspace(0.05, 0.95, 19)
    bs = [M.bhattacharyya(fam.density_from_entropy(float(h))) for h in hs]
    assert all(b2 >= b1 - 1e-9 for b1, b2 in zip(bs, bs[1:]))


def test_bawgn_cells_match_quadrature(grid_small):
    # independent oracle: integrate the Gaussian LLR density over a few cell
    # preimages directly
    sigma = 0.9
    fam = ChannelFamily("bawgn", grid_small)
    x = fam.density_from_param(sigma)
    mu, s = 2 / sigma ** 2, 2 / sigma

    def dens(a):
        return math.exp(-((a - mu) ** 2) / (2 * s * s)) / (s * math.sqrt(2 * math.pi))

    B = grid_small.bins
    for j in (0, 3, B // 2, B - 2):
        a_lo, a_hi = 2 * math.atanh(j / B), 2 * math.atanh(min((j + 1) / B, 1 - 2.0 ** -40))
        mass, _ = quad(dens, a_lo, a_hi)
        neg, _ = quad(dens, -a_hi, -a_lo)
        assert abs(x.weights[j + 1] - (mass + neg)) < 1e-9


def test_bawgn_tail_to_perfect_atom(grid_small):
    x = ChannelFamily("bawgn", grid_small).density_from_param(0.35)
    # strong channel: clamp tail is visible in the exact m=1 atom
    assert x.atom1 > 0.0
