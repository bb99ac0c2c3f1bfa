"""Tests for the masked architectures, their losses, and synthesis."""

import numpy as np
import pytest

from scmtest.datatable import NormStats, Table
from scmtest.errors import ContractViolationError, InvalidArgumentError
from scmtest.graph import Adjacency, ExoMask, StructuralPrior, default_exo
from scmtest.models import (
    BaselineVae,
    CshModel,
    CsvhModel,
    TrainingContext,
    attach_context,
    csh_forward,
    csh_loss,
    csvh_forward,
    csvh_loss,
    gaussian_kl,
    load_checkpoint,
    save_checkpoint,
    summarize_columns,
    synthesize,
)
from scmtest.nnet import Mlp, MlpSpec
from scmtest.synthgen import LinearSem, NoiseSpec, sample_linear


@pytest.fixture
def chain_prior():
    adj = Adjacency.from_edges(3, [(0, 1), (1, 2)])
    return StructuralPrior(adj, default_exo(adj))


@pytest.fixture
def csh(chain_prior):
    return CshModel.from_prior(chain_prior, np.random.default_rng(0),
                               eta_hidden=(4,))


@pytest.fixture
def csvh(chain_prior):
    return CsvhModel.from_prior(chain_prior, np.random.default_rng(0),
                                eta_hidden=(4,), enc_hidden=(3,))


class TestCshForward:
    def test_fully_masked_output_constant(self):
        # a variable with no mask entries sees only zeros
        adj = Adjacency.from_edges(2, [])
        prior = StructuralPrior(adj, ExoMask(np.array([1, 0])))
        model = CshModel.from_prior(prior, np.random.default_rng(1), eta_hidden=(4,))
        a = csh_forward(model, np.array([1.0, 2.0]))
        b = csh_forward(model, np.array([-3.0, 7.0]))
        assert a[1] == b[1]  # column 1 constant
        assert a[0] != b[0]  # column 0 leaks through the diagonal

    def test_non_parent_perturbation_bit_identical(self, csh):
        x = np.array([0.3, -0.2, 1.1])
        base = csh_forward(csh, x)
        x2 = x.copy()
        x2[2] = 99.0  # x2 is no input to columns 0 or 1
        out = csh_forward(csh, x2)
        assert out[0] == base[0] and out[1] == base[1]

    def test_masking_jacobian_exact_zeros(self, csh):
        rng = np.random.default_rng(3)
        mask = csh.mask
        for _ in range(5):
            g = csh.input_gradients(rng.standard_normal(3))
            assert np.all(g[mask == 0] == 0.0)

    def test_width_check(self, csh):
        with pytest.raises(InvalidArgumentError):
            csh_forward(csh, np.ones(4))


class TestCshLoss:
    def test_identity_zero(self):
        x = np.ones((3, 2))
        assert csh_loss(x, x) == 0.0

    def test_unit_offsets(self):
        assert csh_loss(np.zeros(2), np.ones(2)) == pytest.approx(1.0)

    def test_hand_computed_batch(self):
        x = np.array([[0.0, 1.0], [2.0, -1.0]])
        xhat = np.array([[1.0, 1.0], [0.0, 0.0]])
        # squared errors: 1,0,4,1 -> mean 6/4
        assert csh_loss(x, xhat) == pytest.approx(1.5)

    def test_gradients_match_finite_differences(self, csh):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((5, 3))
        loss, grads = csh.loss_and_grads(x)
        params = csh.parameters()
        h = 1e-6
        checked = 0
        for p, g in zip(params, grads):
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                old = p[idx]
                p[idx] = old + h
                up = csh.reconstruction_mse(x)
                p[idx] = old - h
                down = csh.reconstruction_mse(x)
                p[idx] = old
                fd = (up - down) / (2 * h)
                assert fd == pytest.approx(g[idx], rel=1e-4, abs=1e-8)
                checked += 1
        assert checked > 20


class TestBaselineNn:
    def test_mask_is_complete_minus_diagonal(self):
        model = CshModel.baseline_nn(4, np.random.default_rng(0), eta_hidden=(4,))
        assert np.array_equal(model.mask, np.ones((4, 4)) - np.eye(4))
        assert model.kind == "nn"

    def test_cannot_copy_target(self):
        model = CshModel.baseline_nn(3, np.random.default_rng(0), eta_hidden=(4,))
        assert np.all(model.mask.diagonal() == 0)
        g = model.input_gradients(np.array([0.5, -0.5, 1.0]))
        assert np.all(g.diagonal() == 0.0)

    def test_direct_construction_rejects_diagonal(self):
        with pytest.raises(InvalidArgumentError):
            CshModel(np.eye(2), np.zeros(2), [None, None])


class TestCsvh:
    def test_mean_mode_deterministic(self, csvh):
        x = np.random.default_rng(5).standard_normal((4, 3))
        a = csvh_forward(csvh, x, mode="mean")
        b = csvh_forward(csvh, x, mode="mean")
        assert np.array_equal(a.xhat, b.xhat)
        assert np.array_equal(a.z, a.mu)

    def test_sample_mode_reproducible_per_seed(self, csvh):
        x = np.random.default_rng(6).standard_normal((4, 3))
        a = csvh_forward(csvh, x, rng=np.random.default_rng(11), mode="sample")
        b = csvh_forward(csvh, x, rng=np.random.default_rng(11), mode="sample")
        assert np.array_equal(a.xhat, b.xhat)

    def test_latent_masking_matches_structure(self, csvh):
        # zhat_i must ignore non-parent latents exactly
        x = np.random.default_rng(7).standard_normal(3)
        g = csvh.input_gradients(x)
        assert np.all(g[csvh.mask == 0] == 0.0)

    def test_kl_trivial_values(self):
        assert gaussian_kl(np.zeros((1, 1)), np.zeros((1, 1))) == 0.0
        assert gaussian_kl(np.ones((1, 1)), np.zeros((1, 1))) == pytest.approx(0.5)

    def test_latent_term_zero_when_aligned(self, csvh):
        x = np.random.default_rng(8).standard_normal((4, 3))
        fw = csvh_forward(csvh, x, mode="mean")
        fw.zhat = fw.z.copy()
        losses = csvh_loss(csvh, x, fw)
        assert losses.latent == 0.0

    def test_loss_components_nonnegative_and_bounded(self, csvh):
        x = np.random.default_rng(9).standard_normal((6, 3))
        fw = csvh_forward(csvh, x, mode="mean")
        losses = csvh_loss(csvh, x, fw)
        assert losses.mse >= 0 and losses.kl >= 0 and losses.latent >= 0
        assert losses.total >= losses.mse
        assert losses.total >= csvh.lambda_kl * losses.kl
        assert losses.total >= csvh.lambda_latent * losses.latent


class TestVae:
    def test_latent_dimension_matches_data(self):
        vae = BaselineVae.create(4, np.random.default_rng(0), enc_hidden=(2,))
        x = np.random.default_rng(1).standard_normal((3, 4))
        xhat, z, mu, logvar, eps, _, _ = vae.forward(x, mode="mean")
        assert z.shape == (3, 4) and mu.shape == (3, 4)

    def test_mean_mode_deterministic(self):
        vae = BaselineVae.create(3, np.random.default_rng(0), enc_hidden=(2,))
        x = np.random.default_rng(1).standard_normal((5, 3))
        assert vae.reconstruction_mse(x) == vae.reconstruction_mse(x)


def planted_linear_csh(sem: LinearSem, exo: ExoMask) -> CshModel:
    """Single-linear-layer etas carrying the SEM weights exactly."""
    d = sem.adjacency.d
    prior = StructuralPrior(sem.adjacency, exo)
    mask = prior.mask().astype(float)
    etas = []
    for j in range(d):
        w = sem.weights[:, j].copy().reshape(d, 1)
        if exo.diag[j]:
            w = np.zeros((d, 1))
            w[j, 0] = 1.0  # identity through the diagonal leak
        etas.append(Mlp(MlpSpec((d, 1)), [w], [np.zeros(1)]))
    model = CshModel(mask, exo.diag, etas, sem.adjacency,
                     sem.adjacency.node_names)
    return model


class TestSynthesize:
    def make_trained(self):
        rng = np.random.default_rng(10)
        adj = Adjacency.from_edges(3, [(0, 1), (1, 2)])
        sem = LinearSem(adj, np.array([[0.0, 2.0, 0.0],
                                       [0.0, 0.0, -1.0],
                                       [0.0, 0.0, 0.0]]))
        exo = default_exo(adj)
        table = sample_linear(sem, 50, NoiseSpec.noiseless(), rng)
        model = planted_linear_csh(sem, exo)
        attach_context(model, table,
                       NormStats.identity(table.columns))
        return sem, table, model

    def test_planted_linear_reproduces_sample_exactly(self):
        sem, table, model = self.make_trained()
        exo_inputs = Table(("x0",), table.values[:, :1])
        out = synthesize(model, exogenous=exo_inputs)
        assert out.columns == table.columns
        assert np.array_equal(out.values, table.values)

    def test_exogenous_passthrough_exact(self):
        _, table, model = self.make_trained()
        exo_inputs = Table(("x0",), np.array([[1.23456789], [-9.87654321]]))
        out = synthesize(model, exogenous=exo_inputs)
        assert np.array_equal(out.column("x0"), exo_inputs.column("x0"))

    def test_zero_rows_header_only(self):
        _, _, model = self.make_trained()
        out = synthesize(model, n=0)
        assert out.n == 0 and out.columns == ("x0", "x1", "x2")

    def test_sampled_exogenous_within_training_range(self):
        _, table, model = self.make_trained()
        out = synthesize(model, n=200, rng=np.random.default_rng(3))
        lo, hi = model.context.exo_ranges["x0"]
        assert np.all(out.column("x0") >= lo) and np.all(out.column("x0") <= hi)

    def test_untrained_model_rejected(self, csh):
        with pytest.raises(ContractViolationError):
            synthesize(csh, n=5, rng=np.random.default_rng(0))

    def test_baseline_nn_rejected(self):
        model = CshModel.baseline_nn(3, np.random.default_rng(0), eta_hidden=(2,))
        model.context = TrainingContext(
            NormStats.identity(("a", "b", "c")), {}, {})
        model.column_names = ("a", "b", "c")
        with pytest.raises(ContractViolationError):
            synthesize(model, n=5, rng=np.random.default_rng(0))

    def test_missing_exogenous_column_rejected(self):
        _, _, model = self.make_trained()
        with pytest.raises(InvalidArgumentError):
            synthesize(model, exogenous=Table(("wrong",), np.ones((2, 1))))


class TestCheckpoint:
    def test_csh_round_trip(self, csh, tmp_path):
        rng = np.random.default_rng(12)
        table = Table(("x0", "x1", "x2"), rng.standard_normal((20, 3)))
        stats = NormStats(table.columns, table.values.mean(0), table.values.std(0))
        attach_context(csh, table, stats)
        path = tmp_path / "model.json"
        save_checkpoint(csh, path, config_hash="abc")
        back = load_checkpoint(path)
        x = rng.standard_normal((4, 3))
        assert np.array_equal(back.forward(x), csh.forward(x))
        assert back.context.exo_ranges == csh.context.exo_ranges
        assert np.array_equal(back.context.norm_stats.mean, stats.mean)

    def test_csvh_round_trip(self, csvh, tmp_path):
        path = tmp_path / "model.json"
        save_checkpoint(csvh, path)
        back = load_checkpoint(path)
        x = np.random.default_rng(1).standard_normal((4, 3))
        assert back.reconstruction_mse(x) == csvh.reconstruction_mse(x)

    def test_vae_round_trip(self, tmp_path):
        vae = BaselineVae.create(3, np.random.default_rng(0), enc_hidden=(2,))
        path = tmp_path / "model.json"
        save_checkpoint(vae, path)
        back = load_checkpoint(path)
        x = np.random.default_rng(2).standard_normal((5, 3))
        assert back.reconstruction_mse(x) == vae.reconstruction_mse(x)

    def test_rejects_non_checkpoint(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text("{}")
        with pytest.raises(InvalidArgumentError):
            load_checkpoint(path)


class TestSummaries:
    def test_summarize_columns(self):
        t = Table(("a",), np.arange(5.0)[:, None])
        s = summarize_columns(t)
        assert s["a"]["min"] == 0.0 and s["a"]["max"] == 4.0
        assert s["a"]["median"] == 2.0
