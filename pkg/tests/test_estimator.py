import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from moisture_fvm.estimator import MoistureFVM
from moisture_fvm.grid import UniformGrid, project_cell_averages


class TestMoistureFVM:
    def test_params_roundtrip(self):
        est = MoistureFVM(pressure="sine-product", delta=0.1)
        assert clone(est).get_params() == est.get_params()

    def test_heat_decay(self):
        grid = UniformGrid(32)
        v0 = project_cell_averages(lambda x: np.cos(np.pi * x), grid).values
        est = MoistureFVM(coefficients="identity", horizon=0.05).fit(v0)
        assert est.n_cells_ == 32
        pred = est.predict(np.array([[0.05, 0.01], [0.0, 0.01]]))
        np.testing.assert_allclose(pred[0] / pred[1], np.exp(-np.pi**2 * 0.05), rtol=1e-2)

    def test_predict_interpolates(self):
        est = MoistureFVM(pressure="constant", horizon=0.1).fit(np.linspace(0, 1, 8))
        traj = est.trajectory_
        t_mid = 0.5 * (traj.times[1] + traj.times[2])
        got = est.predict(np.array([[t_mid, 0.3]]))[0]
        np.testing.assert_allclose(got, 0.5 * (traj.values[1, 2] + traj.values[2, 2]))

    def test_errors(self):
        with pytest.raises(NotFittedError):
            MoistureFVM().predict(np.zeros((1, 2)))
        est = MoistureFVM(horizon=0.01).fit(np.ones(4))
        with pytest.raises(ValueError):
            est.predict(np.array([[0.5, 0.5]]))
        with pytest.raises(ValueError):
            est.predict(np.zeros((1, 3)))
